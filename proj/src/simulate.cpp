#include "divbar/simulate.hpp"

#include <algorithm>
#include <cmath>

#include "divbar/parallel.hpp"
#include "divbar/rng.hpp"

namespace divbar {

namespace {

void validate(const DiffusionSpec& spec, const SimConfig& cfg) {
    if (!(cfg.dt > 0.0)) throw ParameterError("simulate: dt must be positive");
    if (cfg.n_paths < 1) throw ParameterError("simulate: need at least one path");
    if (cfg.scheme == Scheme::LogEulerForGbm && spec.kind != DiffusionSpec::Kind::Gbm)
        throw ParameterError("simulate: log scheme applies to the gbm model only");
}

double horizon(const DiffusionSpec& spec, const SimConfig& cfg) {
    const double t_max = cfg.t_max > 0.0 ? cfg.t_max : 50.0 / spec.r;
    if (!(t_max >= cfg.dt)) throw ParameterError("simulate: t_max must cover one step");
    return t_max;
}

MCEstimate aggregate(const std::vector<PathRecord>& recs) {
    MCEstimate e;
    e.n_paths = static_cast<std::int64_t>(recs.size());
    double sum = 0.0;
    for (const PathRecord& r : recs) sum += r.payoff;
    e.mean = sum / e.n_paths;
    double ss = 0.0, tsum = 0.0;
    std::int64_t absorbed = 0;
    for (const PathRecord& r : recs) {
        const double d = r.payoff - e.mean;
        ss += d * d;
        if (!r.censored) {
            ++absorbed;
            tsum += r.gamma;
        }
    }
    if (e.n_paths > 1) e.std_error = std::sqrt(ss / (e.n_paths - 1) / e.n_paths);
    e.absorbed_fraction = double(absorbed) / e.n_paths;
    e.censored_fraction = 1.0 - e.absorbed_fraction;
    if (absorbed > 0) e.mean_absorption_time = tsum / absorbed;
    return e;
}

} // namespace

PathRecord run_controlled(const DiffusionSpec& spec, double x, double y, const Barrier& b,
                          const SimConfig& cfg, std::uint64_t path, PathTrace* trace) {
    if (!(x > 0.0) || !(y >= x)) throw DomainError("run_controlled: requires 0 < x <= y");
    validate(spec, cfg);
    const double t_max = horizon(spec, cfg);
    const std::int64_t n_max = static_cast<std::int64_t>(std::llround(t_max / cfg.dt));

    NormalStream g(cfg.seed, path);
    const bool log_scheme = cfg.scheme == Scheme::LogEulerForGbm;
    const double c1 = log_scheme ? (spec.alpha - 0.5 * spec.beta * spec.beta) * cfg.dt : 0.0;
    const double c2 = log_scheme ? spec.beta * std::sqrt(cfg.dt) : 0.0;
    const double sq_dt = std::sqrt(cfg.dt);
    const double disc_step = std::exp(-spec.r * cfg.dt);

    double D = std::max(b.inverse(y) - x, 0.0);
    double payoff = D; // time-0 atom
    double X = x + D;
    double Y = y;

    PathRecord rec;
    if (trace) {
        trace->t.assign(1, 0.0);
        trace->y.assign(1, Y);
        trace->x.assign(1, X);
        trace->d.assign(1, D);
        trace->absorbed = false;
    }
    if (Y <= X) {
        rec.payoff = payoff;
        rec.final_x = X;
        rec.final_y = Y;
        if (trace) trace->absorbed = true;
        return rec;
    }

    UniformStream ug(cfg.seed, path);
    double disc = 1.0;
    bool absorbed = false;
    std::int64_t k = 0;
    while (k < n_max) {
        ++k;
        const double z = g.next();
        const double Y0 = Y;
        if (log_scheme)
            Y *= std::exp(c1 + c2 * z);
        else
            Y += spec.mu(Y) * cfg.dt + spec.sigma(Y) * sq_dt * z;
        disc *= disc_step;
        // within-step supremum of Y; with the bridge correction it is sampled
        // exactly (log scheme) or with frozen volatility (Euler), so the
        // running maximum driving D matches the continuous-time supremum
        double sup_y = std::max(Y0, Y);
        if (cfg.bridge) {
            const double thr = b(X); // Y level at which the next payment starts
            const double a = log_scheme ? std::log(Y0) : Y0;
            const double e = log_scheme ? std::log(std::max(Y, 1e-300)) : Y;
            const double t = log_scheme ? std::log(thr) : thr;
            const double var = log_scheme ? c2 * c2 : spec.sigma(Y0) * spec.sigma(Y0) * cfg.dt;
            if (sup_y >= thr || 2.0 * (t - a) * (t - e) < 60.0 * var) {
                const double m =
                    0.5 * (a + e + std::sqrt((e - a) * (e - a) - 2.0 * var * std::log(ug.next())));
                sup_y = log_scheme ? std::exp(m) : m;
            }
        }
        if (sup_y > b(X)) {
            const double m = b.inverse(sup_y) - x;
            if (m > D) {
                payoff += disc * (m - D);
                D = m;
                X = x + D;
            }
        }
        if (Y <= X) {
            absorbed = true;
        } else if (cfg.bridge) {
            // bridge minimum crossing of the absorption level X; disjoint in
            // practice from the payment regime within one step
            const double a = log_scheme ? std::log(Y0) : Y0;
            const double e = log_scheme ? std::log(Y) : Y;
            const double h = log_scheme ? std::log(X) : X;
            const double var = log_scheme ? c2 * c2 : spec.sigma(Y0) * spec.sigma(Y0) * cfg.dt;
            const double exponent = 2.0 * (a - h) * (e - h);
            if (a > h && exponent < 60.0 * var &&
                std::log(ug.next()) < -exponent / var)
                absorbed = true;
        }
        if (trace) {
            trace->t.push_back(k * cfg.dt);
            trace->y.push_back(Y);
            trace->x.push_back(X);
            trace->d.push_back(D);
        }
        if (absorbed) break;
    }
    rec.gamma = k * cfg.dt;
    rec.payoff = payoff;
    rec.final_x = X;
    rec.final_y = Y;
    rec.censored = !absorbed;
    if (trace) trace->absorbed = absorbed;
    return rec;
}

namespace {

template <class PathFn>
MCEstimate run_paths(std::int64_t n, bool parallel, PathFn&& one) {
    std::vector<PathRecord> recs(static_cast<std::size_t>(n));
    if (parallel) {
#pragma omp parallel for schedule(static) num_threads(worker_count())
        for (std::int64_t p = 0; p < n; ++p) recs[static_cast<std::size_t>(p)] = one(p);
    } else {
        for (std::int64_t p = 0; p < n; ++p) recs[static_cast<std::size_t>(p)] = one(p);
    }
    return aggregate(recs);
}

} // namespace

MCEstimate estimate_J(const DiffusionSpec& spec, double x, double y, const Barrier& b,
                      const SimConfig& cfg) {
    validate(spec, cfg);
    return run_paths(cfg.n_paths, true, [&](std::int64_t p) {
        return run_controlled(spec, x, y, b, cfg, static_cast<std::uint64_t>(p));
    });
}

MCEstimate estimate_J_serial(const DiffusionSpec& spec, double x, double y, const Barrier& b,
                             const SimConfig& cfg) {
    validate(spec, cfg);
    return run_paths(cfg.n_paths, false, [&](std::int64_t p) {
        return run_controlled(spec, x, y, b, cfg, static_cast<std::uint64_t>(p));
    });
}

ReflectedTrace simulate_reflected(const DiffusionSpec& spec, double x, double y,
                                  const SimConfig& cfg, std::uint64_t path) {
    if (!(x > 0.0) || !(y >= x)) throw DomainError("simulate_reflected: requires 0 < x <= y");
    validate(spec, cfg);
    const double t_max = horizon(spec, cfg);
    const std::int64_t n_max = static_cast<std::int64_t>(std::llround(t_max / cfg.dt));

    NormalStream g(cfg.seed, path);
    const bool log_scheme = cfg.scheme == Scheme::LogEulerForGbm;
    const double c1 = log_scheme ? (spec.alpha - 0.5 * spec.beta * spec.beta) * cfg.dt : 0.0;
    const double c2 = log_scheme ? spec.beta * std::sqrt(cfg.dt) : 0.0;
    const double sq_dt = std::sqrt(cfg.dt);

    // state: (X^, Z) with Z = Y^ - X^, so that off the diagonal the gap
    // carries the whole dynamics and the projection is Z = max(Z', 0)
    double Xh = x, Z = y - x, A = 0.0;
    ReflectedTrace tr;
    tr.t.reserve(n_max + 1);
    tr.t.push_back(0.0);
    tr.x.push_back(Xh);
    tr.y.push_back(y);
    tr.a.push_back(A);
    for (std::int64_t k = 1; k <= n_max; ++k) {
        const double z = g.next();
        double Znew;
        if (log_scheme) {
            const double Yh = Xh + Z;
            Znew = Yh * std::exp(c1 + c2 * z) - Xh;
        } else {
            const double Yh = Xh + Z;
            Znew = Z + spec.mu(Yh) * cfg.dt + spec.sigma(Yh) * sq_dt * z;
        }
        if (Znew < 0.0) {
            const double push = -Znew; // = (X^ - Y^)+ after the free step
            A += 2.0 * push;
            Xh += push;
            Z = 0.0;
        } else {
            Z = Znew;
        }
        tr.t.push_back(k * cfg.dt);
        tr.x.push_back(Xh);
        tr.y.push_back(Xh + Z);
        tr.a.push_back(A);
    }
    return tr;
}

namespace {

PathRecord stopping_path(const DiffusionSpec& spec, double x, double y, const Barrier& b,
                         const SimConfig& cfg, std::uint64_t path) {
    const double t_max = horizon(spec, cfg);
    const std::int64_t n_max = static_cast<std::int64_t>(std::llround(t_max / cfg.dt));

    PathRecord rec;
    if (y >= b(x)) { // immediate stop
        rec.payoff = 1.0;
        rec.final_x = x;
        rec.final_y = y;
        return rec;
    }

    NormalStream g(cfg.seed, path);
    const bool log_scheme = cfg.scheme == Scheme::LogEulerForGbm;
    const double c1 = log_scheme ? (spec.alpha - 0.5 * spec.beta * spec.beta) * cfg.dt : 0.0;
    const double c2 = log_scheme ? spec.beta * std::sqrt(cfg.dt) : 0.0;
    const double sq_dt = std::sqrt(cfg.dt);

    UniformStream ug(cfg.seed, path);
    double Xh = x, Z = y - x, Aint = 0.0;
    double bX = b(Xh); // X^ moves only at reflections; cache the level
    std::int64_t k = 0;
    bool stopped = false;
    while (k < n_max) {
        ++k;
        const double z = g.next();
        const double Yh = Xh + Z;
        double push = 0.0;
        if (cfg.bridge) {
            // Euler step on the gap with frozen coefficients; the reflection
            // local time is the negative part of the bridge minimum, which is
            // the exact within-step Skorokhod map for those coefficients
            const double Zold = Z;
            const double s2dt = spec.sigma(Yh) * spec.sigma(Yh) * cfg.dt;
            const double W = Z + spec.mu(Yh) * cfg.dt + spec.sigma(Yh) * sq_dt * z;
            if (W < 0.0 || 2.0 * Z * W < 60.0 * s2dt) {
                const double u = ug.next();
                const double m =
                    0.5 * (Z + W - std::sqrt((W - Z) * (W - Z) - 2.0 * s2dt * std::log(u)));
                push = std::max(0.0, -m);
            }
            Z = W + push;
            // within-step crossing of the stopping level by the bridge maximum;
            // the gap is far from zero there, so this never mixes with the
            // reflection correction above
            const double h = bX - Xh;
            if (push == 0.0 && Z < h) {
                const double a = 2.0 * (h - Zold) * (h - Z);
                if (a < 60.0 * s2dt && std::log(ug.next()) < -a / s2dt) {
                    stopped = true;
                    Z = h;
                    break;
                }
            }
        } else {
            const double Znew = log_scheme
                                    ? Yh * std::exp(c1 + c2 * z) - Xh
                                    : Z + spec.mu(Yh) * cfg.dt + spec.sigma(Yh) * sq_dt * z;
            if (Znew < 0.0) {
                push = -Znew;
                Z = 0.0;
            } else {
                Z = Znew;
            }
        }
        if (push > 0.0) {
            Xh += push;
            const double s = spec.sigma(Xh);
            Aint += spec.mu(Xh) / (s * s) * 2.0 * push;
            bX = b(Xh);
        }
        if (Xh + Z >= bX) {
            stopped = true;
            break;
        }
    }
    const double t = k * cfg.dt;
    rec.gamma = t;
    rec.payoff = std::exp(Aint - spec.r * t);
    rec.final_x = Xh;
    rec.final_y = Xh + Z;
    rec.censored = !stopped;
    return rec;
}

} // namespace

MCEstimate estimate_stopping_value(const DiffusionSpec& spec, double x, double y,
                                   const Barrier& b, const SimConfig& cfg) {
    if (!(x > 0.0) || !(y >= x)) throw DomainError("stopping: requires 0 < x <= y");
    validate(spec, cfg);
    return run_paths(cfg.n_paths, true, [&](std::int64_t p) {
        return stopping_path(spec, x, y, b, cfg, static_cast<std::uint64_t>(p));
    });
}

MCEstimate estimate_stopping_value_serial(const DiffusionSpec& spec, double x, double y,
                                          const Barrier& b, const SimConfig& cfg) {
    if (!(x > 0.0) || !(y >= x)) throw DomainError("stopping: requires 0 < x <= y");
    validate(spec, cfg);
    return run_paths(cfg.n_paths, false, [&](std::int64_t p) {
        return stopping_path(spec, x, y, b, cfg, static_cast<std::uint64_t>(p));
    });
}

bool check_gbm_ratio_at_payments(const PathTrace& trace, double C, double tol) {
    if (trace.d.empty()) return true;
    for (std::size_t k = 0; k < trace.d.size(); ++k) {
        const double prev = k == 0 ? 0.0 : trace.d[k - 1];
        if (trace.d[k] > prev && trace.x[k] > 0.0) {
            if (std::abs(trace.y[k] / trace.x[k] - C) > tol) return false;
        }
    }
    return true;
}

} // namespace divbar
