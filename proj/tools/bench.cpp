// Timing comparison of the serial reference paths against the OpenMP kernels
// (Monte Carlo payoff estimation and the residual grid).
#include <chrono>
#include <cstdio>

#include "divbar/barrier.hpp"
#include "divbar/gbm.hpp"
#include "divbar/model.hpp"
#include "divbar/parallel.hpp"
#include "divbar/simulate.hpp"
#include "divbar/value.hpp"

using namespace divbar;
using clk = std::chrono::steady_clock;

static double seconds(clk::time_point a, clk::time_point b) {
    return std::chrono::duration<double>(b - a).count();
}

int main() {
    const DiffusionSpec spec = DiffusionSpec::gbm(0.04, 0.3, 0.05);
    const FundamentalPair pair = make_fundamental(spec, {0.01, 100.0});
    const GbmSolution sol = gbm_solve(0.04, 0.3, 0.05);
    const Barrier b = make_barrier([&](double x) { return sol.C * x; }, {0.001, 1000.0});

    SimConfig cfg;
    cfg.dt = 1e-3;
    cfg.n_paths = 20'000;
    cfg.t_max = 50.0;
    cfg.scheme = Scheme::LogEulerForGbm;

    std::printf("workers: %d\n", worker_count());

    auto t0 = clk::now();
    const MCEstimate es = estimate_J_serial(spec, 0.2, 0.2 * sol.C, b, cfg);
    auto t1 = clk::now();
    const MCEstimate ep = estimate_J(spec, 0.2, 0.2 * sol.C, b, cfg);
    auto t2 = clk::now();
    std::printf("estimate_J   serial %.3fs  parallel %.3fs  speedup %.2fx  (means %s)\n",
                seconds(t0, t1), seconds(t1, t2), seconds(t0, t1) / seconds(t1, t2),
                es.mean == ep.mean ? "identical" : "DIFFER");

    const ValueSurface s(spec, pair, b);
    t0 = clk::now();
    const ResidualReport rep = check_variational(s, 300, 300);
    t1 = clk::now();
    std::printf("residual grid 300x300: %.3fs  (max |Lv| %.2e)\n", seconds(t0, t1),
                rep.max_lv_continuation);
    return 0;
}
