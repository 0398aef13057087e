#pragma once

#include "divbar/barrier.hpp"
#include "divbar/model.hpp"

namespace divbar {

/// Closed-form quantities for the geometric Brownian motion model
/// dY = alpha Y dt + beta Y dW with discount rate r > alpha.
struct GbmSolution {
    double alpha = 0.0, beta = 0.0, r = 0.0;
    double gamma1 = 0.0, gamma2 = 0.0; // exponents, gamma1 < 0 < gamma2 < r/alpha
    double A = 0.0;                    // d(x) = A x, the F-sign-change ray
    double C = 0.0;                    // b*(x) = C x, the optimal ray
    double N = 0.0;                    // v*(0, y) = N y
};

/// Computes all constants in extended precision. Throws ParameterError if
/// alpha >= r (or the other model preconditions fail).
GbmSolution gbm_solve(double alpha, double beta, double r);

/// G(z) = F(x, zx), independent of x: the barrier ODE field along rays.
/// Strictly increasing on (1, inf) with G(1+) = -inf, G(A) = 0, G(C) = C.
/// Throws DomainError for z <= 1.
double ray_G(const GbmSolution& sol, double z);

/// H(z) = (1 - alpha gamma2/r) z^gamma2 - (1 - alpha gamma1/r) z^gamma1;
/// strictly increasing with H(C) = 0.
double ray_H(const GbmSolution& sol, double z);

/// A and C by bisection on G(A) = 0 and G(C) = C, independent of the
/// closed-form power expressions. Used for mutual cross-validation.
std::pair<double, double> constants_AC_rootfind(const GbmSolution& sol);

/// Closed-form value function: below the ray y = Cx the explicit expression
/// for the continuation value, above it the paid-out decomposition
/// v(y/C, y) + y/C - x. Requires 0 < x <= y.
double vstar_closed(const GbmSolution& sol, double x, double y);

/// u*(x,y) = -v*_x(x,y): closed form, equal to 1 on and above the ray.
double ustar_closed(const GbmSolution& sol, double x, double y);

enum class Concavity { Concave, Convex, Affine, Mixed };

/// Sign pattern of the second differences of an integrated curve, with a
/// zero-tolerance band so the exact ray classifies as Affine.
Concavity concavity_classifier(const BarrierCurve& curve, double tol = 1e-7);

} // namespace divbar
