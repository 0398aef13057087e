#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <functional>

#include "divbar/errors.hpp"

namespace divbar {

/// One embedded Dormand-Prince 5(4) step. `f(t, y, dy)` evaluates the right
/// hand side. Returns the 5th-order solution in `out` and the scaled error
/// norm (<= 1 means the step is acceptable at the given tolerances).
template <std::size_t N, class F>
double rk45_step(F&& f, double t, const std::array<double, N>& y, double h,
                 std::array<double, N>& out, double rtol, double atol) {
    using V = std::array<double, N>;
    static constexpr double a21 = 1.0 / 5;
    static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
    static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
    static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                            a54 = -212.0 / 729;
    static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                            a64 = 49.0 / 176, a65 = -5103.0 / 18656;
    static constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                            b5 = -2187.0 / 6784, b6 = 11.0 / 84;
    static constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                            e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;

    V k1, k2, k3, k4, k5, k6, k7, tmp;
    f(t, y, k1);
    for (std::size_t i = 0; i < N; ++i) tmp[i] = y[i] + h * a21 * k1[i];
    f(t + h / 5, tmp, k2);
    for (std::size_t i = 0; i < N; ++i) tmp[i] = y[i] + h * (a31 * k1[i] + a32 * k2[i]);
    f(t + 3 * h / 10, tmp, k3);
    for (std::size_t i = 0; i < N; ++i)
        tmp[i] = y[i] + h * (a41 * k1[i] + a42 * k2[i] + a43 * k3[i]);
    f(t + 4 * h / 5, tmp, k4);
    for (std::size_t i = 0; i < N; ++i)
        tmp[i] = y[i] + h * (a51 * k1[i] + a52 * k2[i] + a53 * k3[i] + a54 * k4[i]);
    f(t + 8 * h / 9, tmp, k5);
    for (std::size_t i = 0; i < N; ++i)
        tmp[i] = y[i] + h * (a61 * k1[i] + a62 * k2[i] + a63 * k3[i] + a64 * k4[i] + a65 * k5[i]);
    f(t + h, tmp, k6);
    for (std::size_t i = 0; i < N; ++i)
        out[i] = y[i] + h * (b1 * k1[i] + b3 * k3[i] + b4 * k4[i] + b5 * k5[i] + b6 * k6[i]);
    f(t + h, out, k7);

    double err = 0.0;
    for (std::size_t i = 0; i < N; ++i) {
        const double e = h * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] + e6 * k6[i] +
                              e7 * k7[i]);
        const double sc = atol + rtol * std::max(std::abs(y[i]), std::abs(out[i]));
        err = std::max(err, std::abs(e) / sc);
    }
    return err;
}

struct OdeOptions {
    double rtol = 1e-10;
    double atol = 1e-12;
    double h_init = 0.0;   // 0 -> derived from the interval
    double h_min_rel = 1e-14; // minimum step, relative to |t1 - t0|
    std::size_t max_steps = 2'000'000;
};

/// Adaptive integration of y' = f(t, y) from t0 to t1 (either direction).
/// `observer(t, y)`, when given, is called after every accepted step and may
/// return false to stop early. Throws StepFailure on step underflow.
template <std::size_t N, class F, class Obs>
std::array<double, N> rk45_integrate(F&& f, double t0, double t1, std::array<double, N> y,
                                     const OdeOptions& opt, Obs&& observer) {
    const double dir = (t1 >= t0) ? 1.0 : -1.0;
    const double span = std::abs(t1 - t0);
    if (span == 0.0) return y;
    double h = opt.h_init > 0.0 ? opt.h_init : span / 100.0;
    h = std::min(h, span);
    const double h_min = span * opt.h_min_rel;
    double t = t0;
    std::array<double, N> ynew{};
    for (std::size_t n = 0; n < opt.max_steps; ++n) {
        if (dir * (t - t1) >= 0.0) return y;
        h = std::min(h, std::abs(t1 - t));
        const double err = rk45_step<N>(f, t, y, dir * h, ynew, opt.rtol, opt.atol);
        if (err <= 1.0) {
            t += dir * h;
            y = ynew;
            if (!observer(t, y)) return y;
            h *= std::clamp(0.9 * std::pow(err > 0 ? err : 1e-16, -0.2), 1.0, 5.0);
        } else {
            h *= std::max(0.9 * std::pow(err, -0.25), 0.1);
            if (h < h_min) throw StepFailure("rk45: step size underflow");
        }
    }
    throw IntegrationFailure("rk45: max step count exceeded");
}

template <std::size_t N, class F>
std::array<double, N> rk45_integrate(F&& f, double t0, double t1, std::array<double, N> y,
                                     const OdeOptions& opt = {}) {
    return rk45_integrate<N>(std::forward<F>(f), t0, t1, y, opt,
                             [](double, const std::array<double, N>&) { return true; });
}

/// One fixed implicit-midpoint step for a scalar ODE y' = f(t, y), solved by
/// damped fixed-point/secant iteration. Stiff fallback for integrations that
/// run into regions where the explicit stepper underflows.
template <class F>
double implicit_midpoint_step(F&& f, double t, double y, double h) {
    const double tm = t + 0.5 * h;
    double z = y + h * f(t, y); // explicit predictor
    for (int it = 0; it < 60; ++it) {
        const double g = z - y - h * f(tm, 0.5 * (y + z));
        if (std::abs(g) <= 1e-13 * (1.0 + std::abs(z))) break;
        const double dz = 1e-7 * (1.0 + std::abs(z));
        const double gp = (z + dz - y - h * f(tm, 0.5 * (y + z + dz)) - g) / dz;
        z -= (std::abs(gp) > 1e-14) ? g / gp : g;
    }
    return z;
}

} // namespace divbar
