#include "divbar/model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <memory>
#include <sstream>
#include <vector>

#include <json.hpp>

#include "divbar/interp.hpp"
#include "divbar/ode.hpp"

namespace divbar {

DiffusionSpec DiffusionSpec::gbm(double alpha, double beta, double r) {
    if (!(r > 0.0)) throw ParameterError("gbm: discount rate must be positive");
    if (!(beta > 0.0)) throw ParameterError("gbm: volatility must be positive");
    if (!(alpha >= 0.0)) throw ParameterError("gbm: drift must be nonnegative");
    if (!(alpha < r)) throw ParameterError("gbm: requires alpha < r");
    DiffusionSpec s;
    s.kind = Kind::Gbm;
    s.r = r;
    s.alpha = alpha;
    s.beta = beta;
    return s;
}

DiffusionSpec DiffusionSpec::constant(double mu, double sigma, double r) {
    if (!(r > 0.0)) throw ParameterError("constant: discount rate must be positive");
    if (!(sigma > 0.0)) throw NonPositiveVolatility("constant: volatility must be positive");
    if (!(mu >= 0.0)) throw ParameterError("constant: drift must be nonnegative");
    DiffusionSpec s;
    s.kind = Kind::ConstantCoeff;
    s.r = r;
    s.mu0 = mu;
    s.sigma0 = sigma;
    return s;
}

DiffusionSpec DiffusionSpec::custom(ScalarFn mu, ScalarFn sigma, double r, ScalarFn dmu,
                                    ScalarFn dsigma) {
    if (!(r > 0.0)) throw ParameterError("custom: discount rate must be positive");
    if (!mu || !sigma) throw ParameterError("custom: mu and sigma required");
    DiffusionSpec s;
    s.kind = Kind::Custom;
    s.r = r;
    s.mu_fn = std::move(mu);
    s.sigma_fn = std::move(sigma);
    s.dmu_fn = std::move(dmu);
    s.dsigma_fn = std::move(dsigma);
    return s;
}

double DiffusionSpec::mu(double y) const {
    switch (kind) {
        case Kind::Gbm: return alpha * y;
        case Kind::ConstantCoeff: return mu0;
        case Kind::Custom: return mu_fn(y);
    }
    return 0.0;
}

double DiffusionSpec::sigma(double y) const {
    switch (kind) {
        case Kind::Gbm: return beta * y;
        case Kind::ConstantCoeff: return sigma0;
        case Kind::Custom: return sigma_fn(y);
    }
    return 0.0;
}

double DiffusionSpec::mu_over_sigma2_prime(double x) const {
    switch (kind) {
        case Kind::Gbm: return -alpha / (beta * beta * x * x);
        case Kind::ConstantCoeff: return 0.0;
        case Kind::Custom: break;
    }
    if (dmu_fn && dsigma_fn) {
        const double s = sigma_fn(x);
        return (dmu_fn(x) * s - 2.0 * mu_fn(x) * dsigma_fn(x)) / (s * s * s);
    }
    const double h = 1e-5 * (1.0 + std::abs(x));
    auto g = [this](double y) {
        const double s = sigma_fn(y);
        return mu_fn(y) / (s * s);
    };
    return (g(x + h) - g(x - h)) / (2.0 * h);
}

std::pair<double, double> gbm_gamma_roots(double alpha, double beta, double r) {
    if (!(beta > 0.0)) throw ParameterError("gamma roots: beta must be positive");
    if (!(alpha < r)) throw ParameterError("gamma roots: requires alpha < r");
    const long double b = 2.0L * alpha / ((long double)beta * beta) - 1.0L;
    const long double c = -2.0L * r / ((long double)beta * beta);
    const long double disc = std::sqrt(b * b - 4.0L * c);
    // c < 0, so the roots straddle zero; compute the large-magnitude root
    // first and use the product for the other.
    const long double q = -0.5L * (b + (b >= 0 ? disc : -disc));
    const long double r1 = q;
    const long double r2 = c / q;
    const double lo = static_cast<double>(std::min(r1, r2));
    const double hi = static_cast<double>(std::max(r1, r2));
    return {lo, hi};
}

std::pair<double, double> constant_lambda_roots(double mu, double sigma, double r) {
    if (!(sigma > 0.0)) throw NonPositiveVolatility("lambda roots: sigma must be positive");
    const long double a = 0.5L * (long double)sigma * sigma;
    const long double disc = std::sqrt((long double)mu * mu + 4.0L * a * r);
    const long double q = -0.5L * (mu + (mu >= 0 ? disc : -disc));
    const long double r1 = q / a;
    const long double r2 = -r / q; // product of roots = -r/a
    const double lo = static_cast<double>(std::min(r1, r2));
    const double hi = static_cast<double>(std::max(r1, r2));
    return {lo, hi};
}

double generator_apply(const DiffusionSpec& spec, double f, double df, double d2f, double y) {
    if (!(y > 0.0)) throw DomainError("generator: y must be positive");
    const double s = spec.sigma(y);
    return 0.5 * s * s * d2f + spec.mu(y) * df - spec.r * f;
}

double generator_apply(const DiffusionSpec& spec, const ScalarFn& f, double y) {
    if (!(y > 0.0)) throw DomainError("generator: y must be positive");
    const double h = 6e-5 * (1.0 + std::abs(y));
    const double fp = f(y + h), fm = f(y - h), f0 = f(y);
    const double df = (fp - fm) / (2.0 * h);
    const double d2f = (fp - 2.0 * f0 + fm) / (h * h);
    return generator_apply(spec, f0, df, d2f, y);
}

namespace {

FundamentalPair make_gbm_pair(const DiffusionSpec& spec, Interval domain) {
    const auto [g1, g2] = gbm_gamma_roots(spec.alpha, spec.beta, spec.r);
    FundamentalPair p;
    p.psi = [g2](double y) { return std::pow(y, g2); };
    p.dpsi = [g2](double y) { return g2 * std::pow(y, g2 - 1.0); };
    p.d2psi = [g2](double y) { return g2 * (g2 - 1.0) * std::pow(y, g2 - 2.0); };
    p.phi = [g1](double y) { return std::pow(y, g1); };
    p.dphi = [g1](double y) { return g1 * std::pow(y, g1 - 1.0); };
    p.d2phi = [g1](double y) { return g1 * (g1 - 1.0) * std::pow(y, g1 - 2.0); };
    p.log_psi = [g2](double y) { return g2 * std::log(y); };
    p.log_phi = [g1](double y) { return g1 * std::log(y); };
    p.dlog_psi = [g2](double y) { return g2 / y; };
    p.dlog_phi = [g1](double y) { return g1 / y; };
    p.anchor_c = 1.0;
    p.domain_lo = domain.lo;
    p.domain_hi = domain.hi;
    return p;
}

FundamentalPair make_constant_pair(const DiffusionSpec& spec, Interval domain) {
    const auto [lm, lp] = constant_lambda_roots(spec.mu0, spec.sigma0, spec.r);
    FundamentalPair p;
    p.psi = [lp](double y) { return std::exp(lp * y); };
    p.dpsi = [lp](double y) { return lp * std::exp(lp * y); };
    p.d2psi = [lp](double y) { return lp * lp * std::exp(lp * y); };
    p.phi = [lm](double y) { return std::exp(lm * y); };
    p.dphi = [lm](double y) { return lm * std::exp(lm * y); };
    p.d2phi = [lm](double y) { return lm * lm * std::exp(lm * y); };
    p.log_psi = [lp](double y) { return lp * y; };
    p.log_phi = [lm](double y) { return lm * y; };
    p.dlog_psi = [lp](double) { return lp; };
    p.dlog_phi = [lm](double) { return lm; };
    p.anchor_c = 0.0;
    p.domain_lo = domain.lo;
    p.domain_hi = domain.hi;
    return p;
}

// Local exponent gap between the growing and decaying solution of L f = 0,
// from the frozen-coefficient characteristic roots. Used to size the domain
// extension that suppresses contamination of the numeric pair.
double exponent_gap(const DiffusionSpec& spec, double y) {
    const double m = spec.mu(y), s2 = spec.sigma(y) * spec.sigma(y);
    return 2.0 * std::sqrt(m * m + 2.0 * spec.r * s2) / s2;
}

FundamentalPair make_custom_pair(const DiffusionSpec& spec, Interval domain) {
    if (!(domain.lo > 0.0 && domain.hi > domain.lo))
        throw ParameterError("make_fundamental: need 0 < lo < hi");

    const int n_probe = 257;
    for (int i = 0; i < n_probe; ++i) {
        const double y =
            domain.lo * std::pow(domain.hi / domain.lo, double(i) / (n_probe - 1));
        if (!(spec.sigma(y) > 0.0))
            throw NonPositiveVolatility("make_fundamental: sigma vanishes in domain");
    }

    // Contamination of the growing/decaying solution decays like the
    // accumulated exponent gap across the extension; target ~1e-9.
    const double target_log = std::log(1e9);
    auto extend = [&](double start, int dir) {
        double acc = 0.0, y = start;
        const double step = 5e-3;
        for (int i = 0; i < 40000 && acc < target_log; ++i) {
            const double ynext = dir > 0 ? y * (1.0 + step) : y / (1.0 + step);
            acc += 0.5 * (exponent_gap(spec, y) + exponent_gap(spec, ynext)) *
                   std::abs(ynext - y);
            y = ynext;
        }
        return y;
    };
    const double ext_lo = extend(domain.lo, -1);
    const double ext_hi = extend(domain.hi, +1);

    auto rhs = [&spec](double y, const std::array<double, 2>& u, std::array<double, 2>& du) {
        const double s2 = spec.sigma(y) * spec.sigma(y);
        du[0] = u[1];
        du[1] = 2.0 * (spec.r * u[0] - spec.mu(y) * u[1]) / s2;
    };

    OdeOptions opt;
    opt.rtol = 1e-11;
    opt.atol = 0.0;

    const int n_nodes = 2001;
    std::vector<double> nodes(n_nodes);
    for (int i = 0; i < n_nodes; ++i)
        nodes[i] = domain.lo * std::pow(domain.hi / domain.lo, double(i) / (n_nodes - 1));
    nodes.front() = domain.lo;
    nodes.back() = domain.hi;

    // Integrate across the off-domain extension in chunks, rescaling the
    // (linear) state to dodge overflow; only the overall scale is lost.
    auto run_extension = [&](std::array<double, 2> u, double from, double to) {
        const int chunks = 256;
        for (int i = 0; i < chunks; ++i) {
            const double t0 = from * std::pow(to / from, double(i) / chunks);
            const double t1 = from * std::pow(to / from, double(i + 1) / chunks);
            u = rk45_integrate<2>(rhs, t0, t1, u, opt);
            const double mag = std::max(std::abs(u[0]), std::abs(u[1]));
            if (mag > 1e200) {
                u[0] /= mag;
                u[1] /= mag;
            }
        }
        return u;
    };

    // psi: growing solution, fixed by forward integration from far left
    std::array<double, 2> u{1.0, 0.0};
    u = run_extension(u, ext_lo, domain.lo);
    std::vector<double> psi_v(n_nodes), psi_d(n_nodes);
    psi_v[0] = u[0];
    psi_d[0] = u[1];
    for (int i = 1; i < n_nodes; ++i) {
        u = rk45_integrate<2>(rhs, nodes[i - 1], nodes[i], u, opt);
        if (!std::isfinite(u[0]) || std::abs(u[0]) > 1e280)
            throw IntegrationFailure("make_fundamental: psi overflow on domain");
        psi_v[i] = u[0];
        psi_d[i] = u[1];
    }

    // phi: decaying solution, fixed by backward integration from far right
    u = {1.0, 0.0};
    u = run_extension(u, ext_hi, domain.hi);
    std::vector<double> phi_v(n_nodes), phi_d(n_nodes);
    phi_v[n_nodes - 1] = u[0];
    phi_d[n_nodes - 1] = u[1];
    for (int i = n_nodes - 2; i >= 0; --i) {
        u = rk45_integrate<2>(rhs, nodes[i + 1], nodes[i], u, opt);
        if (!std::isfinite(u[0]) || std::abs(u[0]) > 1e280)
            throw IntegrationFailure("make_fundamental: phi overflow on domain");
        phi_v[i] = u[0];
        phi_d[i] = u[1];
    }

    // normalise psi(c) = phi(c) = 1 at the geometric midpoint node
    const double c_target = std::sqrt(domain.lo * domain.hi);
    const auto c_it = std::lower_bound(nodes.begin(), nodes.end(), c_target);
    const std::size_t ci = static_cast<std::size_t>(
        std::min<std::ptrdiff_t>(c_it - nodes.begin(), n_nodes - 1));
    const double c = nodes[ci];
    const double sp = psi_v[ci], sf = phi_v[ci];
    if (!(sp > 0.0 && sf > 0.0))
        throw IntegrationFailure("make_fundamental: lost positivity at anchor");
    for (int i = 0; i < n_nodes; ++i) {
        psi_v[i] /= sp;
        psi_d[i] /= sp;
        phi_v[i] /= sf;
        phi_d[i] /= sf;
    }

    for (int i = 0; i < n_nodes; ++i) {
        if (!(psi_v[i] > 0.0 && psi_d[i] > 0.0 && phi_v[i] > 0.0 && phi_d[i] < 0.0))
            throw IntegrationFailure(
                "make_fundamental: numeric pair lost positivity/monotonicity");
    }

    auto psi_tab = std::make_shared<HermiteTable>(nodes, psi_v, psi_d);
    auto phi_tab = std::make_shared<HermiteTable>(nodes, phi_v, phi_d);

    FundamentalPair p;
    p.psi = [psi_tab](double y) { return (*psi_tab)(y); };
    p.dpsi = [psi_tab](double y) { return psi_tab->derivative(y); };
    p.phi = [phi_tab](double y) { return (*phi_tab)(y); };
    p.dphi = [phi_tab](double y) { return phi_tab->derivative(y); };
    // second derivatives through L f = 0
    DiffusionSpec sc = spec;
    p.d2psi = [sc, psi_tab](double y) {
        const double s2 = sc.sigma(y) * sc.sigma(y);
        return 2.0 * (sc.r * (*psi_tab)(y)-sc.mu(y) * psi_tab->derivative(y)) / s2;
    };
    p.d2phi = [sc, phi_tab](double y) {
        const double s2 = sc.sigma(y) * sc.sigma(y);
        return 2.0 * (sc.r * (*phi_tab)(y)-sc.mu(y) * phi_tab->derivative(y)) / s2;
    };
    p.log_psi = [psi_tab](double y) { return std::log((*psi_tab)(y)); };
    p.log_phi = [phi_tab](double y) { return std::log((*phi_tab)(y)); };
    p.dlog_psi = [psi_tab](double y) { return psi_tab->derivative(y) / (*psi_tab)(y); };
    p.dlog_phi = [phi_tab](double y) { return phi_tab->derivative(y) / (*phi_tab)(y); };
    p.anchor_c = c;
    p.psi_at_c = 1.0;
    p.phi_at_c = 1.0;
    p.domain_lo = domain.lo;
    p.domain_hi = domain.hi;
    p.truncated = true;
    return p;
}

} // namespace

FundamentalPair make_fundamental(const DiffusionSpec& spec, Interval domain) {
    if (!(domain.lo > 0.0 && domain.hi > domain.lo))
        throw ParameterError("make_fundamental: need 0 < lo < hi");
    switch (spec.kind) {
        case DiffusionSpec::Kind::Gbm: return make_gbm_pair(spec, domain);
        case DiffusionSpec::Kind::ConstantCoeff: return make_constant_pair(spec, domain);
        case DiffusionSpec::Kind::Custom: return make_custom_pair(spec, domain);
    }
    throw ParameterError("make_fundamental: unknown kind");
}

namespace {

PchipInterpolant table_to_interp(const nlohmann::json& tab, const char* what) {
    std::vector<double> xs, ys;
    for (const auto& row : tab) {
        if (!row.is_array() || row.size() != 2)
            throw ParameterError(std::string("model file: bad row in ") + what);
        xs.push_back(row[0].get<double>());
        ys.push_back(row[1].get<double>());
    }
    if (xs.size() < 2) throw ParameterError(std::string("model file: ") + what + " too short");
    return PchipInterpolant(std::move(xs), std::move(ys));
}

} // namespace

DiffusionSpec parse_model_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const std::exception& e) {
        throw ParameterError(std::string("model file: invalid JSON: ") + e.what());
    }
    const std::string kind = j.value("kind", "");
    const double r = j.value("r", 0.0);
    if (kind == "gbm") return DiffusionSpec::gbm(j.at("alpha"), j.at("beta"), r);
    if (kind == "constant") return DiffusionSpec::constant(j.at("mu"), j.at("sigma"), r);
    if (kind == "custom") {
        auto mu_i = std::make_shared<PchipInterpolant>(table_to_interp(j.at("mu_table"), "mu_table"));
        auto sg_i = std::make_shared<PchipInterpolant>(
            table_to_interp(j.at("sigma_table"), "sigma_table"));
        // clamp outside the table range
        auto clamp_eval = [](const std::shared_ptr<PchipInterpolant>& f, double y) {
            return (*f)(std::clamp(y, f->x_front(), f->x_back()));
        };
        auto clamp_deriv = [](const std::shared_ptr<PchipInterpolant>& f, double y) {
            if (y <= f->x_front() || y >= f->x_back()) return 0.0;
            return f->derivative(y);
        };
        return DiffusionSpec::custom(
            [mu_i, clamp_eval](double y) { return clamp_eval(mu_i, y); },
            [sg_i, clamp_eval](double y) { return clamp_eval(sg_i, y); }, r,
            [mu_i, clamp_deriv](double y) { return clamp_deriv(mu_i, y); },
            [sg_i, clamp_deriv](double y) { return clamp_deriv(sg_i, y); });
    }
    throw ParameterError("model file: unknown kind '" + kind + "'");
}

DiffusionSpec load_model_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParameterError("model file: cannot open " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_model_json(ss.str());
}

} // namespace divbar
