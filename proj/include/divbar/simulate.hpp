#pragma once

#include <cstdint>
#include <vector>

#include "divbar/barrier.hpp"
#include "divbar/model.hpp"

namespace divbar {

enum class Scheme {
    EulerMaruyama,  // generic first-order scheme
    LogEulerForGbm, // exact exponential scheme, geometric Brownian motion only
};

struct SimConfig {
    double dt = 1e-3;
    std::int64_t n_paths = 10'000;
    double t_max = 0.0; // 0: defaults to 50/r at simulation time
    std::uint64_t seed = 1;
    Scheme scheme = Scheme::EulerMaruyama;
    // Sample within-step path extremes from the Brownian bridge between grid
    // points: the reflection local time in the stopping estimator, and the
    // payment/absorption level crossings in the controlled estimator. Removes
    // the O(sqrt(dt)) bias of endpoint-only detection. Off by default: the
    // plain post-step projection keeps the gap process equal to the exact
    // discrete Skorokhod map of the increments, and payments then happen
    // exactly on the barrier, which the path-wise checks rely on.
    bool bridge = false;
};

struct PathRecord {
    double gamma = 0.0;  // absorption time (or the horizon if censored)
    double payoff = 0.0; // discounted dividends collected, including atoms
    double final_x = 0.0, final_y = 0.0;
    bool censored = false;
};

/// Step-by-step dump of one controlled path, for CSV output and path-wise
/// property checks. D is cumulative dividends; X = x0 + D.
struct PathTrace {
    std::vector<double> t, y, x, d;
    bool absorbed = false;
};

struct MCEstimate {
    double mean = 0.0;
    double std_error = 0.0;
    std::int64_t n_paths = 0;
    double absorbed_fraction = 0.0;
    double censored_fraction = 0.0;
    double mean_absorption_time = 0.0; // over non-censored paths
};

/// One controlled path: Y by the chosen scheme, the dividend process
/// D_t = sup_s (b^{-1}(Y_s) - x)^+ as a running maximum (with the time-0
/// lump when y > b(x)), absorption at the first step with Y <= x + D.
PathRecord run_controlled(const DiffusionSpec& spec, double x, double y, const Barrier& b,
                          const SimConfig& cfg, std::uint64_t path,
                          PathTrace* trace = nullptr);

/// Aggregates run_controlled over cfg.n_paths independent substreams.
/// Paths are simulated concurrently; the reduction runs in fixed path order,
/// so the result is bit-identical to estimate_J_serial.
MCEstimate estimate_J(const DiffusionSpec& spec, double x, double y, const Barrier& b,
                      const SimConfig& cfg);
MCEstimate estimate_J_serial(const DiffusionSpec& spec, double x, double y, const Barrier& b,
                             const SimConfig& cfg);

/// One path of the obliquely reflected pair (X^, Y^) of the dual problem:
/// Euler (or exact log) step on Y^, then projection in direction (1/2, 1)
/// whenever the step lands below the diagonal; A^ collects the pushes.
/// Internally the gap Z = Y^ - X^ is the evolved state, so the reflected gap
/// equals the discrete Skorokhod map of the free increments exactly.
struct ReflectedTrace {
    std::vector<double> t, x, y, a;
};

ReflectedTrace simulate_reflected(const DiffusionSpec& spec, double x, double y,
                                  const SimConfig& cfg, std::uint64_t path);

/// Dual stopping value: simulates (X^, Y^, A^), accrues
/// dA = mu(Y^)/sigma^2(Y^) dA^ at reflections, stops at the first time
/// Y^ >= b(X^) and returns the mean of exp(A - r tau).
MCEstimate estimate_stopping_value(const DiffusionSpec& spec, double x, double y,
                                   const Barrier& b, const SimConfig& cfg);
MCEstimate estimate_stopping_value_serial(const DiffusionSpec& spec, double x, double y,
                                          const Barrier& b, const SimConfig& cfg);

/// For a ray barrier b(x) = C x: true iff every payment step of the trace
/// has Y/X within tol of C (payments happen only on the barrier).
bool check_gbm_ratio_at_payments(const PathTrace& trace, double C, double tol = 1e-6);

} // namespace divbar
