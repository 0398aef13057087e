#include "divbar/barrier.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

#include "divbar/ode.hpp"

namespace divbar {

double field_F(const DiffusionSpec& spec, const FundamentalPair& pair, double x, double y) {
    if (!(x > 0.0)) throw DomainError("field_F: x must be positive");
    if (!(y > x)) throw DiagonalError("field_F: requires y > x");
    // Every term of F is a product of one phi-factor and one psi-factor, so F
    // is invariant under separate rescalings. Scale by phi(x) psi(y), the
    // dominant product (phi decreasing, psi increasing).
    const double ref = pair.log_phi(x) + pair.log_psi(y);
    const double e_yx = std::exp(pair.log_phi(y) + pair.log_psi(x) - ref);
    const double dfx = pair.dlog_phi(x), dfy = pair.dlog_phi(y);
    const double dpx = pair.dlog_psi(x), dpy = pair.dlog_psi(y);

    const double delta = 1.0 - e_yx;                    // phi(x)psi(y) - phi(y)psi(x)
    const double t1 = e_yx * dfy * dpx - dfx * dpy;     // phi'(y)psi'(x) - phi'(x)psi'(y)
    const double t2 = e_yx * dfy - dpy;                 // phi'(y)psi(x) - phi(x)psi'(y)

    const double sx = spec.sigma(x);
    const double sy = spec.sigma(y);
    return sy * sy / (spec.r * delta) * (t1 + spec.mu(x) / (sx * sx) * t2);
}

double zeta(const DiffusionSpec& spec, double x) {
    const double s2 = spec.sigma(x) * spec.sigma(x);
    const double m = spec.mu(x);
    return 2.0 * spec.r / s2 + spec.mu_over_sigma2_prime(x) + m * m / (s2 * s2);
}

double find_d(const DiffusionSpec& spec, const FundamentalPair& pair, double x,
              double cap_factor) {
    if (!(x > 0.0)) throw DomainError("find_d: x must be positive");
    auto F = [&](double y) { return field_F(spec, pair, x, y); };

    double lo = x * (1.0 + 1e-3);
    double hi;
    if (F(lo) > 0.0) {
        // the sign change sits closer to the diagonal than the default start
        hi = lo;
        double gap = 1e-3;
        while (gap > 1e-13) {
            gap *= 0.25;
            const double y = x * (1.0 + gap);
            if (F(y) <= 0.0) {
                lo = y;
                break;
            }
            hi = y;
        }
        if (F(lo) > 0.0) throw NotFound("find_d: F positive down to the diagonal");
    } else {
        const double cap = cap_factor * x;
        hi = lo;
        for (;;) {
            const double y = hi * 1.5;
            if (y > cap) throw NotFound("find_d: no sign change below cap");
            if (F(y) > 0.0) {
                lo = hi;
                hi = y;
                break;
            }
            hi = y;
        }
    }
    while (hi - lo > 1e-10 * hi) {
        const double mid = 0.5 * (lo + hi);
        (F(mid) > 0.0 ? hi : lo) = mid;
    }
    return 0.5 * (lo + hi);
}

namespace {

double diag_guard(double x, double eps) { return eps * (1.0 + x); }

// secant extrapolation of the diagonal hit point from the last two gaps
double extrapolate_hit(double x_prev, double g_prev, double x, double g) {
    if (!(g_prev > g)) return x;
    return x + g * (x - x_prev) / (g_prev - g);
}

} // namespace

BarrierCurve integrate_barrier(const DiffusionSpec& spec, const FundamentalPair& pair,
                               double xi, double eta, double x_end,
                               const IntegrateOptions& opt) {
    if (!(xi > 0.0)) throw DomainError("integrate_barrier: xi must be positive");
    if (!(eta > xi)) throw DiagonalError("integrate_barrier: start on or below the diagonal");

    const double dir = (x_end >= xi) ? 1.0 : -1.0;
    auto rhs = [&](double t, const std::array<double, 1>& y, std::array<double, 1>& dy) {
        dy[0] = field_F(spec, pair, t, y[0]);
    };
    // gap-clamped right hand side for the stiff fallback: keeps Newton
    // iterates finite if they dip across the diagonal
    auto rhs_soft = [&](double t, double y) {
        const double gmin = 1e-13 * (1.0 + t);
        return field_F(spec, pair, t, std::max(y, t + gmin));
    };

    BarrierCurve out;
    out.xs.push_back(xi);
    out.bs.push_back(eta);
    double first_bad = std::numeric_limits<double>::quiet_NaN();
    if (field_F(spec, pair, xi, eta) <= 0.0) first_bad = xi;

    double x = xi, b = eta;
    double h = std::min(std::abs(x_end - xi), 0.01 * (1.0 + xi));
    std::array<double, 1> ynew{};

    auto finish_window = [&]() {
        out.cls.outcome = std::isnan(first_bad)
                              ? SolutionClassification::Outcome::StaysAboveUntil
                              : SolutionClassification::Outcome::FieldSignViolation;
        out.cls.where = std::isnan(first_bad) ? x_end : first_bad;
        return out;
    };
    auto finish_hit = [&](double x0) {
        out.cls.outcome = SolutionClassification::Outcome::HitsDiagonal;
        out.cls.where = x0;
        return out;
    };

    for (std::size_t n = 0; n < opt.max_steps; ++n) {
        if (dir * (x - x_end) >= 0.0) return finish_window();
        h = std::min(h, std::abs(x_end - x));
        const double h_min = 1e-13 * (1.0 + std::abs(x));

        double err = std::numeric_limits<double>::infinity();
        try {
            const std::array<double, 1> y{b};
            err = rk45_step<1>(rhs, x, y, dir * h, ynew, opt.rtol, opt.atol);
            if (!std::isfinite(ynew[0])) err = std::numeric_limits<double>::infinity();
        } catch (const DiagonalError&) {
            // a trial stage crossed the diagonal; retry with a smaller step
        }

        if (err <= 1.0) {
            const double x_prev = x, g_prev = b - x;
            x += dir * h;
            b = ynew[0];
            out.xs.push_back(x);
            out.bs.push_back(b);
            const double g = b - x;
            if (g <= diag_guard(x, opt.eps_diag))
                return finish_hit(extrapolate_hit(x_prev, g_prev, x, g));
            if (std::isnan(first_bad) && field_F(spec, pair, x, b) <= 0.0) first_bad = x;
            h *= std::clamp(0.9 * std::pow(err > 0 ? err : 1e-16, -0.2), 1.0, 5.0);
            continue;
        }

        h *= std::isfinite(err) ? std::max(0.9 * std::pow(err, -0.25), 0.1) : 0.25;
        if (h >= h_min) continue;

        // explicit stepper underflowed; acceptable only in the stiff
        // near-diagonal regime, where implicit midpoint takes over
        if (!(b - x < 0.05 * (1.0 + x)))
            throw StepFailure("integrate_barrier: step underflow away from the diagonal");
        for (std::size_t m = 0; m < 200'000; ++m) {
            const double g = b - x;
            if (g <= diag_guard(x, opt.eps_diag)) {
                const std::size_t k = out.xs.size();
                const double xp = k >= 2 ? out.xs[k - 2] : xi;
                const double gp = k >= 2 ? out.bs[k - 2] - xp : eta - xi;
                return finish_hit(extrapolate_hit(xp, gp, x, g));
            }
            if (dir * (x - x_end) >= 0.0) return finish_window();
            const double slope = rhs_soft(x, b);
            double hh = 0.25 * g / std::max(1.0, std::abs(slope));
            hh = std::min(hh, std::abs(x_end - x));
            b = implicit_midpoint_step(rhs_soft, x, b, dir * hh);
            x += dir * hh;
            out.xs.push_back(x);
            out.bs.push_back(b);
            if (std::isnan(first_bad) && slope <= 0.0 && b > x) first_bad = x;
            if (b - x > 0.05 * (1.0 + x)) break; // back to the explicit stepper
        }
        h = 0.01 * (1.0 + std::abs(x));
    }
    throw IntegrationFailure("integrate_barrier: max step count exceeded");
}

Barrier::Barrier(std::vector<double> xs, std::vector<double> bs)
    : xs_(std::move(xs)), bs_(std::move(bs)) {
    if (xs_.size() != bs_.size() || xs_.size() < 2)
        throw ParameterError("Barrier: need two matching grids");
    for (std::size_t i = 0; i < xs_.size(); ++i) {
        if (i > 0 && !(xs_[i] > xs_[i - 1] && bs_[i] > bs_[i - 1]))
            throw DomainError("Barrier: grids must be strictly increasing");
        if (!(bs_[i] > xs_[i])) throw DomainError("Barrier: curve must stay above b = x");
    }
    interp_ = PchipInterpolant(xs_, bs_);
    inv_ = PchipInterpolant(bs_, xs_);
}

double Barrier::operator()(double x) const { return interp_(x); }

double Barrier::slope(double x) const { return interp_.derivative(x); }

double Barrier::inverse(double y) const {
    if (y < bs_.front()) return 0.0;
    if (y >= bs_.back()) {
        const double s = interp_.derivative(xs_.back());
        return xs_.back() + (y - bs_.back()) / s;
    }
    // between nodes the swapped-grid interpolant agrees with the true
    // inverse to the same order as the interpolation itself
    return inv_(y);
}

Barrier make_barrier(const std::function<double(double)>& b, Interval domain, int n) {
    if (!(domain.lo > 0.0 && domain.hi > domain.lo))
        throw ParameterError("make_barrier: need 0 < lo < hi");
    if (n < 2) throw ParameterError("make_barrier: need at least two nodes");
    std::vector<double> xs(n), bs(n);
    for (int i = 0; i < n; ++i) {
        xs[i] = domain.lo * std::pow(domain.hi / domain.lo, double(i) / (n - 1));
        bs[i] = b(xs[i]);
    }
    xs.front() = domain.lo;
    xs.back() = domain.hi;
    return Barrier(std::move(xs), std::move(bs));
}

namespace {

// samples an integrated curve onto grid nodes through a Hermite table built
// from the recorded steps and the exact slopes F along them
std::vector<double> sample_curve(const DiffusionSpec& spec, const FundamentalPair& pair,
                                 const BarrierCurve& curve, const std::vector<double>& grid) {
    std::vector<double> xs = curve.xs, bs = curve.bs;
    if (xs.size() >= 2 && xs.front() > xs.back()) {
        std::reverse(xs.begin(), xs.end());
        std::reverse(bs.begin(), bs.end());
    }
    std::vector<double> fs(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i) fs[i] = field_F(spec, pair, xs[i], bs[i]);
    HermiteTable tab(xs, bs, fs);
    std::vector<double> out(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) out[i] = tab(grid[i]);
    return out;
}

} // namespace

Barrier minimal_barrier(const DiffusionSpec& spec, const FundamentalPair& pair,
                        Interval domain, const MinimalBarrierOptions& opt,
                        MinimalBarrierDiagnostics* diag) {
    if (!(domain.lo > 0.0 && domain.hi > domain.lo))
        throw ParameterError("minimal_barrier: need 0 < lo < hi");

    MinimalBarrierDiagnostics local;
    MinimalBarrierDiagnostics& dg = diag ? *diag : local;

    dg.zeta_min = std::numeric_limits<double>::infinity();
    for (int i = 0; i <= 100; ++i) {
        const double x = domain.lo * std::pow(domain.hi / domain.lo, i / 100.0);
        dg.zeta_min = std::min(dg.zeta_min, zeta(spec, x));
    }
    dg.zeta_positive = dg.zeta_min > 0.0;
    if (!dg.zeta_positive)
        dg.warnings.push_back("zeta(x) is not positive on the domain; the envelope "
                              "construction may not yield the minimal barrier");

    const int n = opt.grid_n;
    std::vector<double> grid(n);
    for (int i = 0; i < n; ++i)
        grid[i] = domain.lo * std::pow(domain.hi / domain.lo, double(i) / (n - 1));
    grid.front() = domain.lo;
    grid.back() = domain.hi;

    std::vector<double> env(n, -std::numeric_limits<double>::infinity());
    bool converged = false;
    for (int k = 0; k <= opt.k_max; ++k) {
        const double xi = domain.hi * std::pow(opt.anchor_factor, k);
        if (pair.truncated && xi > 0.5 * pair.domain_hi)
            throw NoConvergence("minimal_barrier: fundamental pair domain too short for "
                                "the far anchors the envelope needs");
        const double cap = pair.truncated
                               ? std::min(opt.d_cap, 0.95 * pair.domain_hi / xi)
                               : opt.d_cap;
        const double eta = find_d(spec, pair, xi, cap);
        const BarrierCurve curve = integrate_barrier(spec, pair, xi, eta, domain.lo,
                                                     opt.integrate);
        if (curve.cls.outcome == SolutionClassification::Outcome::HitsDiagonal)
            throw MembershipViolation("minimal_barrier: anchor curve hit the diagonal");
        const std::vector<double> vals = sample_curve(spec, pair, curve, grid);

        double change = 0.0;
        for (int i = 0; i < n; ++i) {
            const double prev = env[i];
            env[i] = std::max(env[i], vals[i]);
            change = std::max(change, std::abs(env[i] - prev) / (1.0 + std::abs(env[i])));
        }
        dg.anchors_used = k + 1;
        dg.final_change = change;
        if (k >= 1 && change < opt.tol) {
            converged = true;
            break;
        }
    }
    if (!converged)
        throw NoConvergence("minimal_barrier: envelope not converged after k_max anchors");

    Barrier b(grid, env);
    for (int i = 0; i < n; ++i) {
        if (!(env[i] > grid[i]) || !(field_F(spec, pair, grid[i], env[i]) > 0.0))
            throw MembershipViolation("minimal_barrier: envelope fails admissibility at a "
                                      "grid node");
    }
    return b;
}

Barrier shooting_barrier(const DiffusionSpec& spec, const FundamentalPair& pair,
                         Interval domain, double x_far, int grid_n, double eta_rtol) {
    if (!(x_far >= domain.hi))
        throw ParameterError("shooting_barrier: x_far must reach past the domain");
    const double x0 = domain.lo;

    auto hits = [&](double eta) {
        const BarrierCurve c = integrate_barrier(spec, pair, x0, eta, x_far);
        return c.cls.outcome == SolutionClassification::Outcome::HitsDiagonal;
    };

    double lo = find_d(spec, pair, x0);
    if (!hits(lo)) throw NoConvergence("shooting_barrier: curve from d(x_lo) does not hit");
    double hi = 2.0 * lo;
    int guard = 0;
    while (hits(hi)) {
        lo = hi;
        hi *= 2.0;
        if (++guard > 60)
            throw NoConvergence("shooting_barrier: no staying curve found above d(x_lo)");
    }
    while (hi - lo > eta_rtol * hi) {
        const double mid = 0.5 * (lo + hi);
        (hits(mid) ? lo : hi) = mid;
    }

    const BarrierCurve curve = integrate_barrier(spec, pair, x0, hi, domain.hi);
    if (curve.cls.outcome == SolutionClassification::Outcome::HitsDiagonal)
        throw NoConvergence("shooting_barrier: critical curve collapsed inside the window");

    std::vector<double> grid(grid_n);
    for (int i = 0; i < grid_n; ++i)
        grid[i] = domain.lo * std::pow(domain.hi / domain.lo, double(i) / (grid_n - 1));
    grid.front() = domain.lo;
    grid.back() = domain.hi;
    return Barrier(grid, sample_curve(spec, pair, curve, grid));
}

} // namespace divbar
