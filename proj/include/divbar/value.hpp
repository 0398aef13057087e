#pragma once

#include <vector>

#include "divbar/barrier.hpp"
#include "divbar/model.hpp"

namespace divbar {

/// Candidate value function v^b built from a barrier by quadrature:
///   vbar(x,y) = phi(y) I_psi(x,y) - psi(y) I_phi(x,y),
///   I_psi(x,y) = int_x^y psi'(b(z))/S'(b(z)) dz  (I_phi analogously),
/// extended above the barrier by v(x,y) = vbar(b^{-1}(y), y) + b^{-1}(y) - x.
/// Immutable after construction; evaluation is thread-safe.
class ValueSurface {
public:
    ValueSurface(DiffusionSpec spec, FundamentalPair pair, Barrier barrier);

    /// v(x,y); exactly 0 on the diagonal. Requires 0 < x <= y.
    double v(double x, double y) const;
    /// v_x: closed form below the barrier, -1 on and above it.
    double vx(double x, double y) const;
    /// u = -v_x, the dual optimal-stopping value (= 1 on and above b).
    double u(double x, double y) const { return -vx(x, y); }
    /// v_xy below the barrier; 0 above. v_xy(x, b(x)) = 0 is the smooth fit.
    double vxy(double x, double y) const;
    /// v_xx on the diagonal, via the barrier slope.
    double vxx_diag(double x) const;
    /// L v at any point of the continuation region with height y (the
    /// closed-form expression does not involve x). Zero up to how well the
    /// barrier satisfies b'(y) = F(y, b(y)).
    double lv_continuation(double y) const;
    /// L v in either region; above the barrier equals
    /// lv_continuation(y) - r (b^{-1}(y) - x).
    double lv(double x, double y) const;

    const Barrier& barrier() const { return b_; }
    const DiffusionSpec& model() const { return spec_; }
    const FundamentalPair& pair() const { return pair_; }

private:
    double cum_psi_at(double t) const;
    double cum_phi_at(double t) const;

    DiffusionSpec spec_;
    FundamentalPair pair_;
    Barrier b_;
    std::vector<double> nodes_, cum_psi_, cum_phi_;
};

struct ResidualRow {
    double x = 0.0, y = 0.0;
    char region = 'c'; // 'c' continuation, 's' stopped, 'd' diagonal
    double lv_resid = 0.0;
    double vx_excess = 0.0; // v_x + 1, expected <= 0
};

struct ResidualReport {
    double max_lv_continuation = 0.0;
    double max_stopped_identity = 0.0; // |Lv + r(b^{-1}(y)-x)| above the barrier
    double max_stopped_lv = 0.0;       // largest Lv above the barrier (expect <= 0)
    double max_vx_excess = 0.0;        // largest v_x + 1 (expect <= 0)
    double max_diag_abs_v = 0.0;
    double max_smooth_fit = 0.0;  // |v_xy(x, b(x))|
    double max_reflection = 0.0;  // |(sigma^2/2)(v_xx+2v_xy)(x,x) + mu v_x(x,x)|
    std::vector<ResidualRow> rows;
};

/// Evaluates the variational system on an nx-by-ny grid over the barrier
/// domain: Lv in both regions, the gradient constraint, absorption on the
/// diagonal, smooth fit and the diagonal reflection/creation condition.
ResidualReport check_variational(const ValueSurface& s, int nx, int ny);

/// True iff the first surface strictly dominates the second at every grid
/// point with x < y (barriers ordered the same way).
bool value_ordering_check(const ValueSurface& s1, const ValueSurface& s2, int nx, int ny);

} // namespace divbar
