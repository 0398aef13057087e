#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "divbar/barrier.hpp"
#include "divbar/gbm.hpp"
#include "divbar/model.hpp"
#include "divbar/rng.hpp"

using namespace divbar;

namespace {

const double kA = 1.549305627176100;
const double kC = 3.740487129920177;
const double kF12 = 1.204892498976840; // F(1, 2) for the benchmark parameters

struct Fixture {
    DiffusionSpec spec = DiffusionSpec::gbm(0.04, 0.3, 0.05);
    FundamentalPair pair = make_fundamental(spec, {0.01, 100.0});
};

} // namespace

TEST_CASE("field value and diagonal guard") {
    Fixture f;
    CHECK(field_F(f.spec, f.pair, 1.0, 2.0) == doctest::Approx(kF12).epsilon(1e-12));
    CHECK_THROWS_AS(field_F(f.spec, f.pair, 1.0, 1.0), DiagonalError);
    CHECK_THROWS_AS(field_F(f.spec, f.pair, 2.0, 1.0), DiagonalError);
}

TEST_CASE("field is constant along rays") {
    Fixture f;
    NormalStream g(11, 0);
    for (int i = 0; i < 20; ++i) {
        const double x = std::exp(0.8 * g.next());
        const double z = 1.2 + std::abs(g.next());
        CHECK(std::abs(field_F(f.spec, f.pair, x, z * x) - field_F(f.spec, f.pair, 1.0, z)) <
              1e-10 * (1.0 + std::abs(field_F(f.spec, f.pair, 1.0, z))));
    }
}

TEST_CASE("field is invariant under separate rescalings of the pair") {
    Fixture f;
    const double c1 = 17.5, c2 = 0.003;
    FundamentalPair scaled = f.pair;
    const FundamentalPair base = f.pair;
    scaled.psi = [=](double y) { return c1 * base.psi(y); };
    scaled.dpsi = [=](double y) { return c1 * base.dpsi(y); };
    scaled.phi = [=](double y) { return c2 * base.phi(y); };
    scaled.dphi = [=](double y) { return c2 * base.dphi(y); };
    scaled.log_psi = [=](double y) { return std::log(c1) + base.log_psi(y); };
    scaled.log_phi = [=](double y) { return std::log(c2) + base.log_phi(y); };
    for (double x : {0.3, 1.0, 4.0})
        for (double z : {1.3, 2.0, 3.0}) {
            const double a = field_F(f.spec, f.pair, x, z * x);
            const double b = field_F(f.spec, scaled, x, z * x);
            CHECK(b == doctest::Approx(a).epsilon(1e-12));
        }
}

TEST_CASE("field blows down at the diagonal") {
    Fixture f;
    double prev = 0.0;
    for (int k = 1; k <= 8; ++k) {
        const double v = field_F(f.spec, f.pair, 1.0, 1.0 + std::pow(10.0, -k));
        if (k > 1) CHECK(v < prev);
        prev = v;
    }
    CHECK(prev < -1e6);
}

TEST_CASE("zeta closed forms") {
    CHECK(zeta(DiffusionSpec::gbm(0.04, 0.3, 0.05), 1.0) ==
          doctest::Approx(0.8641975308641975).epsilon(1e-12));
    const DiffusionSpec cc = DiffusionSpec::constant(0.04, 0.3, 0.05);
    CHECK(zeta(cc, 1.0) == doctest::Approx(1.308641975308642).epsilon(1e-12));
    CHECK(zeta(cc, 3.7) == doctest::Approx(zeta(cc, 1.0)).epsilon(1e-12));
    // driftless constant volatility: zeta = 2 r / sigma^2
    const DiffusionSpec dl = DiffusionSpec::custom(
        [](double) { return 0.0; }, [](double) { return 0.3; }, 0.05);
    CHECK(zeta(dl, 2.0) == doctest::Approx(2.0 * 0.05 / 0.09).epsilon(1e-6));
}

TEST_CASE("first sign change of the field sits on the ray y = A x") {
    Fixture f;
    for (double x : {0.5, 1.0, 2.0}) {
        const double d = find_d(f.spec, f.pair, x);
        CHECK(d / x == doctest::Approx(kA).epsilon(1e-8));
        CHECK(field_F(f.spec, f.pair, x, d * (1.0 - 1e-7)) < 0.0);
        CHECK(field_F(f.spec, f.pair, x, d * (1.0 + 1e-7)) > 0.0);
    }
    CHECK(find_d(f.spec, f.pair, 1.0) < find_d(f.spec, f.pair, 2.0));
}

TEST_CASE("integration from the optimal ray stays on the ray") {
    Fixture f;
    const BarrierCurve c = integrate_barrier(f.spec, f.pair, 1.0, kC, 10.0);
    CHECK(c.cls.outcome == SolutionClassification::Outcome::StaysAboveUntil);
    for (std::size_t i = 0; i < c.xs.size(); ++i)
        CHECK(c.bs[i] == doctest::Approx(kC * c.xs[i]).epsilon(1e-6));
}

TEST_CASE("solutions started below the ray hit the diagonal") {
    Fixture f;
    const BarrierCurve c = integrate_barrier(f.spec, f.pair, 1.0, 2.0, 50.0);
    CHECK(c.cls.outcome == SolutionClassification::Outcome::HitsDiagonal);
    CHECK(c.cls.where > 1.0);
    CHECK(std::isfinite(c.cls.where));
}

TEST_CASE("solutions started above the ray stay above") {
    Fixture f;
    const BarrierCurve c = integrate_barrier(f.spec, f.pair, 1.0, 1.2 * kC, 10.0);
    CHECK(c.cls.outcome == SolutionClassification::Outcome::StaysAboveUntil);
    for (std::size_t i = 0; i < c.xs.size(); ++i) CHECK(c.bs[i] > kC * c.xs[i] * (1.0 - 1e-9));
}

TEST_CASE("solution family is ordered") {
    Fixture f;
    const BarrierCurve hi = integrate_barrier(f.spec, f.pair, 1.0, 1.5 * kC, 8.0);
    const BarrierCurve lo = integrate_barrier(f.spec, f.pair, 1.0, 1.2 * kC, 8.0);
    const Barrier bh(hi.xs, hi.bs);
    for (std::size_t i = 0; i < lo.xs.size(); ++i) CHECK(bh(lo.xs[i]) > lo.bs[i]);
}

TEST_CASE("barrier interpolation and inverse") {
    const Barrier b = make_barrier([](double x) { return kC * x; }, {0.1, 10.0});
    CHECK(b(1.0) == doctest::Approx(kC).epsilon(1e-10));
    CHECK(b.slope(2.0) == doctest::Approx(kC).epsilon(1e-8));
    CHECK(b.inverse(2.0 * kC) == doctest::Approx(2.0).epsilon(1e-10));
    CHECK(b.inverse(0.5 * b(0.1)) == 0.0); // extension below the lowest level
    for (double y : {0.9, 2.0, 11.0, 35.0})
        CHECK(b(b.inverse(y)) == doctest::Approx(y).epsilon(1e-9));
    // extrapolation above the grid stays on the linear continuation
    CHECK(b.inverse(20.0 * kC) == doctest::Approx(20.0).epsilon(1e-6));
}

TEST_CASE("inverse derivative equals the reciprocal field on the optimal ray") {
    Fixture f;
    const Barrier b = make_barrier([](double x) { return kC * x; }, {0.1, 10.0});
    for (double y : {1.0, 3.0, 9.0}) {
        const double h = 1e-6 * y;
        const double fd = (b.inverse(y + h) - b.inverse(y - h)) / (2.0 * h);
        CHECK(fd == doctest::Approx(1.0 / field_F(f.spec, f.pair, b.inverse(y), y))
                        .epsilon(1e-6));
    }
}

TEST_CASE("minimal barrier recovers the optimal ray") {
    Fixture f;
    MinimalBarrierDiagnostics dg;
    const Barrier b = minimal_barrier(f.spec, f.pair, {0.1, 10.0}, {}, &dg);
    CHECK(dg.zeta_positive);
    CHECK(dg.anchors_used > 1);
    double worst = 0.0;
    for (std::size_t i = 0; i < b.grid_x().size(); ++i)
        worst = std::max(worst, std::abs(b.grid_b()[i] / (kC * b.grid_x()[i]) - 1.0));
    CHECK(worst < 1e-3);
    // class membership at the nodes
    for (std::size_t i = 0; i < b.grid_x().size(); ++i) {
        CHECK(b.grid_b()[i] > b.grid_x()[i]);
        CHECK(field_F(f.spec, f.pair, b.grid_x()[i], b.grid_b()[i]) > 0.0);
    }
}

TEST_CASE("minimal barrier for constant coefficients is affine") {
    const DiffusionSpec spec = DiffusionSpec::constant(0.04, 0.3, 0.05);
    const FundamentalPair pair = make_fundamental(spec, {0.1, 5.0});
    const Barrier b = minimal_barrier(spec, pair, {0.1, 5.0});
    // least-squares affine fit
    const auto& xs = b.grid_x();
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sx += xs[i];
        sy += b.grid_b()[i];
        sxx += xs[i] * xs[i];
        sxy += xs[i] * b.grid_b()[i];
    }
    const double n = double(xs.size());
    const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    const double icpt = (sy - slope * sx) / n;
    double resid = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i)
        resid = std::max(resid, std::abs(b.grid_b()[i] - slope * xs[i] - icpt));
    CHECK(resid < 1e-3);
    CHECK(slope == doctest::Approx(1.0).epsilon(1e-6)); // gap depends on y - x only
    CHECK(icpt > 0.0);
}

TEST_CASE("backward solutions bracket the minimal barrier") {
    Fixture f;
    const Barrier bmin = minimal_barrier(f.spec, f.pair, {0.5, 4.0});
    const double xi = 4.0;
    // a start above the optimal ray stays above the minimal barrier...
    const BarrierCurve hi = integrate_barrier(f.spec, f.pair, xi, 1.3 * kC * xi, 0.5);
    for (std::size_t i = 0; i < hi.xs.size(); ++i)
        if (hi.xs[i] >= 0.5 && hi.xs[i] <= 4.0)
            CHECK(hi.bs[i] >= bmin(hi.xs[i]) * (1.0 - 1e-6));
    // ...while the envelope family, started between d and the ray, approaches
    // the minimal barrier from below
    const double eta = 1.3 * find_d(f.spec, f.pair, xi);
    const BarrierCurve lo = integrate_barrier(f.spec, f.pair, xi, eta, 0.5);
    for (std::size_t i = 0; i < lo.xs.size(); ++i)
        if (lo.xs[i] >= 0.5 && lo.xs[i] <= 4.0)
            CHECK(lo.bs[i] <= bmin(lo.xs[i]) * (1.0 + 1e-6));
}

TEST_CASE("shooting cross-check agrees with the envelope") {
    // constant coefficients converge exponentially in the anchor distance,
    // so the shooting solution can be compared tightly
    const DiffusionSpec spec = DiffusionSpec::constant(0.04, 0.3, 0.05);
    const FundamentalPair pair = make_fundamental(spec, {0.1, 5.0});
    const Barrier env = minimal_barrier(spec, pair, {0.1, 5.0});
    const Barrier sh = shooting_barrier(spec, pair, {0.1, 5.0}, 40.0);
    for (double x = 0.1; x <= 5.0; x += 0.35)
        CHECK(sh(x) == doctest::Approx(env(x)).epsilon(1e-6));
}

TEST_CASE("stationary points of integrated solutions are maxima") {
    Fixture f;
    const BarrierCurve c = integrate_barrier(f.spec, f.pair, 1.0, 2.0, 50.0);
    for (std::size_t i = 1; i + 1 < c.xs.size(); ++i) {
        const double h1 = c.xs[i] - c.xs[i - 1], h2 = c.xs[i + 1] - c.xs[i];
        const double d1 = (c.bs[i] - c.bs[i - 1]) / h1, d2 = (c.bs[i + 1] - c.bs[i]) / h2;
        if (std::abs(d1) < 1e-3 || d1 * d2 < 0.0) CHECK(d2 < d1 + 1e-9);
    }
}
