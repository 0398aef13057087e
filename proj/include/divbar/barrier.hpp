#pragma once

#include <functional>
#include <string>
#include <vector>

#include "divbar/interp.hpp"
#include "divbar/model.hpp"

namespace divbar {

/// Right hand side F(x, y) of the barrier ODE b'(x) = F(x, b(x)).
/// Requires 0 < x < y; throws DiagonalError on y <= x. Evaluated through the
/// log representation of the fundamental pair so that it stays finite when
/// psi/phi themselves would overflow.
double field_F(const DiffusionSpec& spec, const FundamentalPair& pair, double x, double y);

/// zeta(x) = 2r/sigma^2(x) + (mu/sigma^2)'(x) + mu^2(x)/sigma^4(x).
/// Positivity is a standing assumption for the barrier construction.
double zeta(const DiffusionSpec& spec, double x);

/// d(x) = inf{ y > x : F(x, y) > 0 }, located by geometric bracketing from
/// x(1 + 1e-3) up to cap_factor*x and bisection to relative tolerance 1e-10.
/// Throws NotFound if no sign change appears below the cap.
double find_d(const DiffusionSpec& spec, const FundamentalPair& pair, double x,
              double cap_factor = 1e3);

/// Outcome of integrating one solution of b' = F(x, b) across a window.
struct SolutionClassification {
    enum class Outcome {
        HitsDiagonal,      // reached b = x; `where` is the extrapolated hit x0
        StaysAboveUntil,   // reached the window end with F > 0 throughout
        FieldSignViolation // reached the window end but F <= 0 somewhere
    };
    Outcome outcome = Outcome::StaysAboveUntil;
    double where = 0.0; // hit point / window end / first x with F <= 0
};

struct BarrierCurve {
    std::vector<double> xs, bs;
    SolutionClassification cls;
};

struct IntegrateOptions {
    double rtol = 1e-10;
    double atol = 1e-12;
    double eps_diag = 1e-6; // diagonal guard: stop once b - x <= eps_diag*(1+x)
    std::size_t max_steps = 4'000'000;
};

/// Integrates b' = F(x, b) from (xi, eta) to x_end (either direction), with a
/// diagonal guard and an implicit-midpoint fallback where the explicit stepper
/// underflows near the diagonal. Records every accepted step.
BarrierCurve integrate_barrier(const DiffusionSpec& spec, const FundamentalPair& pair,
                               double xi, double eta, double x_end,
                               const IntegrateOptions& opt = {});

/// A barrier curve with monotone cubic interpolation and an inverse.
class Barrier {
public:
    Barrier() = default;
    Barrier(std::vector<double> xs, std::vector<double> bs);

    double operator()(double x) const;
    double slope(double x) const;
    /// b^{-1}(y): 0 for y < b(x_lo), linear extrapolation above b(x_hi).
    double inverse(double y) const;

    double x_lo() const { return xs_.front(); }
    double x_hi() const { return xs_.back(); }
    const std::vector<double>& grid_x() const { return xs_; }
    const std::vector<double>& grid_b() const { return bs_; }

private:
    std::vector<double> xs_, bs_;
    PchipInterpolant interp_;
    PchipInterpolant inv_; // monotone interpolation of the swapped grids
};

/// Samples an analytic barrier onto a log-spaced grid.
Barrier make_barrier(const std::function<double(double)>& b, Interval domain, int n = 257);

struct MinimalBarrierOptions {
    int grid_n = 400;
    double tol = 1e-5;          // sup-norm change between successive anchors
    int k_max = 60;             // anchors xi_k = x_hi * anchor_factor^k
    double anchor_factor = 4.0; // geometric growth of the anchor abscissa
    double d_cap = 1e3;         // cap factor passed to find_d
    IntegrateOptions integrate;
};

struct MinimalBarrierDiagnostics {
    bool zeta_positive = true;
    double zeta_min = 0.0;
    int anchors_used = 0;
    double final_change = 0.0;
    std::vector<std::string> warnings;
};

/// Minimal admissible barrier on `domain` as the upper envelope of the curves
/// integrated backward from far anchors (xi_k, d(xi_k)), xi_k = x_hi * 2^k,
/// stopping when the envelope moves by less than `tol`. Throws NoConvergence
/// if k_max anchors do not suffice and MembershipViolation if the result
/// fails b(x) > x or F(x, b(x)) > 0 at a grid node.
Barrier minimal_barrier(const DiffusionSpec& spec, const FundamentalPair& pair,
                        Interval domain, const MinimalBarrierOptions& opt = {},
                        MinimalBarrierDiagnostics* diag = nullptr);

/// Independent cross-check: bisection on the starting value eta at x_lo,
/// separating curves that hit the diagonal before `x_far` from those that
/// stay above, then one forward integration from the critical eta.
Barrier shooting_barrier(const DiffusionSpec& spec, const FundamentalPair& pair,
                         Interval domain, double x_far, int grid_n = 257,
                         double eta_rtol = 1e-10);

} // namespace divbar
