#include "divbar/value.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "divbar/parallel.hpp"
#include "divbar/quad.hpp"

namespace divbar {

ValueSurface::ValueSurface(DiffusionSpec spec, FundamentalPair pair, Barrier barrier)
    : spec_(std::move(spec)), pair_(std::move(pair)), b_(std::move(barrier)) {
    nodes_ = b_.grid_x();
    cum_psi_.assign(nodes_.size(), 0.0);
    cum_phi_.assign(nodes_.size(), 0.0);
    auto ipsi = [this](double z) {
        const double t = b_(z);
        return pair_.dpsi(t) / pair_.sprime(t);
    };
    auto iphi = [this](double z) {
        const double t = b_(z);
        return pair_.dphi(t) / pair_.sprime(t);
    };
    for (std::size_t i = 1; i < nodes_.size(); ++i) {
        cum_psi_[i] = cum_psi_[i - 1] +
                      integrate_adaptive(ipsi, nodes_[i - 1], nodes_[i], 1e-13, 1e-15, 12);
        cum_phi_[i] = cum_phi_[i - 1] +
                      integrate_adaptive(iphi, nodes_[i - 1], nodes_[i], 1e-13, 1e-15, 12);
    }
}

double ValueSurface::cum_psi_at(double t) const {
    auto it = std::upper_bound(nodes_.begin(), nodes_.end(), t);
    const std::size_t i = it == nodes_.begin() ? 0 : (it - nodes_.begin()) - 1;
    auto ipsi = [this](double z) {
        const double u = b_(z);
        return pair_.dpsi(u) / pair_.sprime(u);
    };
    return cum_psi_[i] + integrate_adaptive(ipsi, nodes_[i], t, 1e-13, 1e-15, 12);
}

double ValueSurface::cum_phi_at(double t) const {
    auto it = std::upper_bound(nodes_.begin(), nodes_.end(), t);
    const std::size_t i = it == nodes_.begin() ? 0 : (it - nodes_.begin()) - 1;
    auto iphi = [this](double z) {
        const double u = b_(z);
        return pair_.dphi(u) / pair_.sprime(u);
    };
    return cum_phi_[i] + integrate_adaptive(iphi, nodes_[i], t, 1e-13, 1e-15, 12);
}

double ValueSurface::v(double x, double y) const {
    if (!(x > 0.0) || !(y >= x)) throw DomainError("value: requires 0 < x <= y");
    if (x == y) return 0.0;
    auto vbar = [this](double a, double yy) {
        const double i1 = cum_psi_at(yy) - cum_psi_at(a);
        const double i2 = cum_phi_at(yy) - cum_phi_at(a);
        return pair_.phi(yy) * i1 - pair_.psi(yy) * i2;
    };
    if (y <= b_(x)) return vbar(x, y);
    const double w = b_.inverse(y);
    return vbar(w, y) + w - x;
}

double ValueSurface::vx(double x, double y) const {
    if (!(x > 0.0) || !(y >= x)) throw DomainError("value: requires 0 < x <= y");
    if (y > b_(x)) return -1.0;
    const double t = b_(x);
    const double sp = pair_.sprime(t);
    return pair_.psi(y) * pair_.dphi(t) / sp - pair_.phi(y) * pair_.dpsi(t) / sp;
}

double ValueSurface::vxy(double x, double y) const {
    if (!(x > 0.0) || !(y >= x)) throw DomainError("value: requires 0 < x <= y");
    if (y > b_(x)) return 0.0;
    const double t = b_(x);
    const double sp = pair_.sprime(t);
    return pair_.dpsi(y) * pair_.dphi(t) / sp - pair_.dphi(y) * pair_.dpsi(t) / sp;
}

double ValueSurface::vxx_diag(double x) const {
    if (!(x > 0.0)) throw DomainError("value: requires x > 0");
    const double t = b_(x);
    return b_.slope(x) * 2.0 * spec_.r / (spec_.sigma(t) * spec_.sigma(t) * pair_.sprime(t)) *
           (pair_.psi(x) * pair_.phi(t) - pair_.phi(x) * pair_.psi(t));
}

double ValueSurface::lv_continuation(double y) const {
    if (!(y > 0.0)) throw DomainError("value: requires y > 0");
    const double t = b_(y);
    const double sp = pair_.sprime(t);
    const double ssp = -2.0 * spec_.mu(t) / (spec_.sigma(t) * spec_.sigma(t)); // S''/S'
    const double term1 =
        b_.slope(y) *
        (pair_.phi(y) * (pair_.d2psi(t) - ssp * pair_.dpsi(t)) -
         pair_.psi(y) * (pair_.d2phi(t) - ssp * pair_.dphi(t))) /
        sp;
    const double term2 =
        2.0 * (pair_.dphi(y) * pair_.dpsi(t) - pair_.dpsi(y) * pair_.dphi(t)) / sp;
    const double term3 =
        spec_.mu(y) * (pair_.phi(y) * pair_.dpsi(t) - pair_.psi(y) * pair_.dphi(t)) / sp;
    const double s2 = spec_.sigma(y) * spec_.sigma(y);
    return 0.5 * s2 * (term1 + term2) + term3;
}

double ValueSurface::lv(double x, double y) const {
    if (!(x > 0.0) || !(y >= x)) throw DomainError("value: requires 0 < x <= y");
    if (y <= b_(x)) return lv_continuation(y);
    return lv_continuation(y) - spec_.r * (b_.inverse(y) - x);
}

ResidualReport check_variational(const ValueSurface& s, int nx, int ny) {
    const Barrier& b = s.barrier();
    const DiffusionSpec& spec = s.model();
    const double lo = b.x_lo(), hi = b.x_hi();

    ResidualReport rep;
    rep.max_stopped_lv = -std::numeric_limits<double>::infinity();
    rep.max_vx_excess = -std::numeric_limits<double>::infinity();
    rep.rows.resize(static_cast<std::size_t>(nx) * ny);

    std::vector<double> xg(nx);
    for (int i = 0; i < nx; ++i) xg[i] = lo * std::pow(hi / lo, double(i) / (nx - 1));
    xg.front() = lo;
    xg.back() = hi;

#pragma omp parallel for schedule(dynamic) num_threads(worker_count())
    for (int i = 0; i < nx; ++i) {
        const double x = xg[i];
        for (int j = 0; j < ny; ++j) {
            const double y =
                (x >= hi || ny == 1) ? x : x * std::pow(hi / x, double(j) / (ny - 1));
            ResidualRow& row = rep.rows[static_cast<std::size_t>(i) * ny + j];
            row.x = x;
            row.y = y;
            row.vx_excess = s.vx(x, y) + 1.0;
            if (y == x) {
                row.region = 'd';
                row.lv_resid = std::abs(s.v(x, y));
            } else if (y <= b(x)) {
                row.region = 'c';
                row.lv_resid = std::abs(s.lv_continuation(y));
            } else {
                row.region = 's';
                row.lv_resid = std::abs(s.lv(x, y) + spec.r * (b.inverse(y) - x));
            }
        }
    }

    for (const ResidualRow& row : rep.rows) {
        rep.max_vx_excess = std::max(rep.max_vx_excess, row.vx_excess);
        switch (row.region) {
            case 'd': rep.max_diag_abs_v = std::max(rep.max_diag_abs_v, row.lv_resid); break;
            case 'c':
                rep.max_lv_continuation = std::max(rep.max_lv_continuation, row.lv_resid);
                break;
            default:
                rep.max_stopped_identity = std::max(rep.max_stopped_identity, row.lv_resid);
                rep.max_stopped_lv = std::max(rep.max_stopped_lv, s.lv(row.x, row.y));
        }
    }
    for (int i = 0; i < nx; ++i) {
        const double x = xg[i];
        rep.max_smooth_fit = std::max(rep.max_smooth_fit, std::abs(s.vxy(x, b(x))));
        const double s2 = spec.sigma(x) * spec.sigma(x);
        const double refl = 0.5 * s2 * (s.vxx_diag(x) + 2.0 * s.vxy(x, x)) +
                            spec.mu(x) * s.vx(x, x);
        rep.max_reflection = std::max(rep.max_reflection, std::abs(refl));
    }
    return rep;
}

bool value_ordering_check(const ValueSurface& s1, const ValueSurface& s2, int nx, int ny) {
    const double lo = std::max(s1.barrier().x_lo(), s2.barrier().x_lo());
    const double hi = std::min(s1.barrier().x_hi(), s2.barrier().x_hi());
    for (int i = 0; i < nx; ++i) {
        const double x = lo * std::pow(hi / lo, double(i) / (nx - 1));
        for (int j = 1; j < ny; ++j) {
            const double y = x * std::pow(hi / x, double(j) / (ny - 1));
            if (!(y > x)) continue;
            if (!(s1.v(x, y) > s2.v(x, y))) return false;
        }
    }
    return true;
}

} // namespace divbar
