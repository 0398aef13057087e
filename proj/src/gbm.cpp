#include "divbar/gbm.hpp"

#include <algorithm>
#include <cmath>

namespace divbar {

namespace {

long double vbar_ray(const GbmSolution& s, long double x, long double y) {
    const long double g1 = s.gamma1, g2 = s.gamma2, C = s.C;
    const long double t1 = g2 * std::pow((long double)C, -g1) / (1.0L - g1) *
                           (1.0L - std::pow(x / y, 1.0L - g1));
    const long double t2 = g1 * std::pow((long double)C, -g2) / (1.0L - g2) *
                           (1.0L - std::pow(x / y, 1.0L - g2));
    return y / (g2 - g1) * (t1 - t2);
}

} // namespace

GbmSolution gbm_solve(double alpha, double beta, double r) {
    if (!(r > 0.0)) throw ParameterError("gbm_solve: discount rate must be positive");
    if (!(beta > 0.0)) throw ParameterError("gbm_solve: volatility must be positive");
    if (!(alpha > 0.0)) throw ParameterError("gbm_solve: drift must be positive");
    if (!(alpha < r)) throw ParameterError("gbm_solve: requires alpha < r");

    const long double a = alpha, b2 = (long double)beta * beta, rr = r;
    const long double p = 2.0L * a / b2 - 1.0L;
    const long double q = -2.0L * rr / b2;
    const long double disc = std::sqrt(p * p - 4.0L * q);
    const long double root_big = -0.5L * (p + (p >= 0 ? disc : -disc));
    const long double other = q / root_big;
    const long double g1 = std::min(root_big, other);
    const long double g2 = std::max(root_big, other);

    GbmSolution s;
    s.alpha = alpha;
    s.beta = beta;
    s.r = r;
    s.gamma1 = static_cast<double>(g1);
    s.gamma2 = static_cast<double>(g2);
    // gamma2 < r/alpha whenever alpha < r, so both denominators are positive
    const long double A = std::pow((2.0L * rr - a * g1) / (2.0L * rr - a * g2),
                                   1.0L / (g2 - g1));
    const long double C = std::pow((rr - a * g1) / (rr - a * g2), 1.0L / (g2 - g1));
    s.A = static_cast<double>(A);
    s.C = static_cast<double>(C);
    s.N = static_cast<double>(vbar_ray(s, 1.0L / C, 1.0L) + 1.0L / C);
    return s;
}

double ray_G(const GbmSolution& s, double z) {
    if (!(z > 1.0)) throw DomainError("ray_G: requires z > 1");
    const long double g1 = s.gamma1, g2 = s.gamma2, zz = z;
    const long double p2 = std::pow(zz, (long double)g2);
    const long double p1 = std::pow(zz, (long double)g1);
    return static_cast<double>(2.0L * zz - (s.alpha * zz / s.r) * (g2 * p2 - g1 * p1) /
                                               (p2 - p1));
}

double ray_H(const GbmSolution& s, double z) {
    if (!(z > 0.0)) throw DomainError("ray_H: requires z > 0");
    return (1.0 - s.alpha * s.gamma2 / s.r) * std::pow(z, s.gamma2) -
           (1.0 - s.alpha * s.gamma1 / s.r) * std::pow(z, s.gamma1);
}

std::pair<double, double> constants_AC_rootfind(const GbmSolution& s) {
    auto bisect = [](auto&& f, double lo, double hi) {
        // f(lo) < 0 < f(hi)
        while (hi - lo > 1e-13 * hi) {
            const double mid = 0.5 * (lo + hi);
            (f(mid) < 0.0 ? lo : hi) = mid;
        }
        return 0.5 * (lo + hi);
    };

    double lo = 1.0 + 1e-9;
    double hi = 2.0;
    while (ray_G(s, hi) <= 0.0) hi *= 2.0;
    const double A = bisect([&](double z) { return ray_G(s, z); }, lo, hi);

    lo = A * (1.0 + 1e-9);
    hi = std::max(2.0 * A, 2.0);
    while (ray_G(s, hi) - hi <= 0.0) hi *= 2.0;
    const double C = bisect([&](double z) { return ray_G(s, z) - z; }, lo, hi);
    return {A, C};
}

double vstar_closed(const GbmSolution& s, double x, double y) {
    if (!(x > 0.0) || !(y >= x)) throw DomainError("vstar_closed: requires 0 < x <= y");
    if (y <= s.C * x) return static_cast<double>(vbar_ray(s, x, y));
    const double w = y / s.C; // boundary point with b*(w) = y
    return static_cast<double>(vbar_ray(s, w, y)) + w - x;
}

double ustar_closed(const GbmSolution& s, double x, double y) {
    if (!(x > 0.0) || !(y >= x)) throw DomainError("ustar_closed: requires 0 < x <= y");
    if (y >= s.C * x) return 1.0;
    const double z = y / (s.C * x);
    return (s.gamma2 * std::pow(z, s.gamma1) - s.gamma1 * std::pow(z, s.gamma2)) /
           (s.gamma2 - s.gamma1);
}

Concavity concavity_classifier(const BarrierCurve& curve, double tol) {
    const auto& xs = curve.xs;
    const auto& bs = curve.bs;
    if (xs.size() < 3) return Concavity::Affine;
    std::vector<double> slope(xs.size() - 1);
    double scale = 0.0;
    for (std::size_t i = 0; i + 1 < xs.size(); ++i) {
        slope[i] = (bs[i + 1] - bs[i]) / (xs[i + 1] - xs[i]);
        scale = std::max(scale, std::abs(slope[i]));
    }
    const double band = tol * std::max(1.0, scale);
    bool pos = false, neg = false;
    for (std::size_t i = 0; i + 1 < slope.size(); ++i) {
        const double d = slope[i + 1] - slope[i];
        if (d > band) pos = true;
        if (d < -band) neg = true;
    }
    if (pos && neg) return Concavity::Mixed;
    if (pos) return Concavity::Convex;
    if (neg) return Concavity::Concave;
    return Concavity::Affine;
}

} // namespace divbar
