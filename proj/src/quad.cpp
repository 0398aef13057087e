#include "divbar/quad.hpp"

#include <algorithm>
#include <array>

namespace divbar {

namespace {

// QUADPACK 15-point Kronrod / 7-point Gauss pair on [-1, 1].
constexpr std::array<double, 8> kXgk = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144838258730, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
constexpr std::array<double, 8> kWgk = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
constexpr std::array<double, 4> kWg = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

} // namespace

double gauss_kronrod_15(const std::function<double(double)>& f, double a, double b,
                        double* err_est) {
    const double c = 0.5 * (a + b);
    const double h = 0.5 * (b - a);
    const double fc = f(c);
    double kron = kWgk[7] * fc;
    double gauss = kWg[3] * fc;
    for (int j = 0; j < 7; ++j) {
        const double fs = f(c - h * kXgk[j]) + f(c + h * kXgk[j]);
        kron += kWgk[j] * fs;
        if (j % 2 == 1) gauss += kWg[j / 2] * fs;
    }
    kron *= h;
    gauss *= h;
    if (err_est) *err_est = std::abs(kron - gauss);
    return kron;
}

namespace {

double adapt(const std::function<double(double)>& f, double a, double b, double tol,
             int depth, int max_depth) {
    double err = 0.0;
    const double whole = gauss_kronrod_15(f, a, b, &err);
    if (err <= tol || depth >= max_depth) return whole;
    const double c = 0.5 * (a + b);
    return adapt(f, a, c, 0.5 * tol, depth + 1, max_depth) +
           adapt(f, c, b, 0.5 * tol, depth + 1, max_depth);
}

} // namespace

double integrate_adaptive(const std::function<double(double)>& f, double a, double b,
                          double rtol, double atol, int max_depth) {
    if (a == b) return 0.0;
    double err = 0.0;
    const double coarse = gauss_kronrod_15(f, a, b, &err);
    const double tol = std::max(atol, rtol * std::abs(coarse));
    if (err <= tol) return coarse;
    return adapt(f, a, b, tol, 0, max_depth);
}

} // namespace divbar
