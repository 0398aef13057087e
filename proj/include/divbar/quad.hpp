#pragma once

#include <cmath>
#include <cstddef>
#include <functional>

#include "divbar/errors.hpp"

namespace divbar {

/// 15-point Gauss-Kronrod rule on [a, b]. `err_est` receives |GK15 - G7|.
double gauss_kronrod_15(const std::function<double(double)>& f, double a, double b,
                        double* err_est = nullptr);

/// Adaptive Gauss-Kronrod quadrature by interval bisection.
double integrate_adaptive(const std::function<double(double)>& f, double a, double b,
                          double rtol = 1e-12, double atol = 1e-14, int max_depth = 30);

} // namespace divbar
