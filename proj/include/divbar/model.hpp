#pragma once

#include <functional>
#include <string>
#include <utility>

#include "divbar/errors.hpp"

namespace divbar {

using ScalarFn = std::function<double(double)>;

/// One-dimensional diffusion dY = mu(Y) dt + sigma(Y) dW with discount rate r.
/// Three flavours: geometric Brownian motion (mu = alpha*y, sigma = beta*y),
/// constant coefficients, and user-supplied smooth coefficients.
struct DiffusionSpec {
    enum class Kind { Gbm, ConstantCoeff, Custom };

    Kind kind = Kind::Gbm;
    double r = 0.0;

    // Gbm
    double alpha = 0.0, beta = 0.0;
    // ConstantCoeff
    double mu0 = 0.0, sigma0 = 0.0;
    // Custom (derivatives optional; finite differences otherwise)
    ScalarFn mu_fn, sigma_fn, dmu_fn, dsigma_fn;

    static DiffusionSpec gbm(double alpha, double beta, double r);
    static DiffusionSpec constant(double mu, double sigma, double r);
    static DiffusionSpec custom(ScalarFn mu, ScalarFn sigma, double r, ScalarFn dmu = {},
                                ScalarFn dsigma = {});

    double mu(double y) const;
    double sigma(double y) const;
    /// d/dx of mu/sigma^2, analytic for Gbm/ConstantCoeff, finite differences
    /// (h = 1e-5*(1+|x|)) for Custom without supplied derivatives.
    double mu_over_sigma2_prime(double x) const;
};

/// Positive increasing/decreasing solutions of L f = 0 with the Wronskian
/// normalisation S'(y) = phi(y) psi'(y) - psi(y) phi'(y).
struct FundamentalPair {
    ScalarFn psi, phi, dpsi, dphi;
    ScalarFn d2psi, d2phi; // second derivatives (analytic or via L f = 0)
    // log psi / log phi and their derivatives (psi'/psi, phi'/phi). The ODE
    // field F is invariant under separate positive rescalings of psi and phi,
    // so it is evaluated through these to stay finite far from the anchor.
    ScalarFn log_psi, log_phi, dlog_psi, dlog_phi;
    double anchor_c = 1.0; // normalisation point; psi, phi scaled there
    double psi_at_c = 1.0, phi_at_c = 1.0;
    double domain_lo = 0.0, domain_hi = 0.0;
    bool truncated = false; // numeric pair: valid only on [domain_lo, domain_hi]

    double sprime(double y) const { return phi(y) * dpsi(y) - psi(y) * dphi(y); }
};

struct Interval {
    double lo = 0.0, hi = 0.0;
};

/// Builds the fundamental pair on `domain`. Analytic for Gbm
/// (psi = y^gamma2, phi = y^gamma1) and ConstantCoeff (exponentials); a
/// numerically integrated pair for Custom coefficients.
FundamentalPair make_fundamental(const DiffusionSpec& spec, Interval domain);

/// (sigma^2/2) f'' + mu f' - r f at y, derivatives by central differences.
double generator_apply(const DiffusionSpec& spec, const ScalarFn& f, double y);

/// Same, with caller-supplied derivatives.
double generator_apply(const DiffusionSpec& spec, double f, double df, double d2f, double y);

/// Roots gamma1 < 0 < gamma2 of gamma^2 + (2 alpha/beta^2 - 1) gamma
/// - 2 r/beta^2 = 0. Requires alpha < r.
std::pair<double, double> gbm_gamma_roots(double alpha, double beta, double r);

/// Roots lambda- < 0 < lambda+ of (sigma^2/2) l^2 + mu l - r = 0.
std::pair<double, double> constant_lambda_roots(double mu, double sigma, double r);

/// Parses a model specification file, e.g.
///   {"kind":"gbm","alpha":0.04,"beta":0.3,"r":0.05}
///   {"kind":"constant","mu":0.04,"sigma":0.3,"r":0.05}
///   {"kind":"custom","mu_table":[[y,mu],...],"sigma_table":[[y,sigma],...],"r":0.05}
/// Custom tables are interpolated with a monotone cubic and clamped outside
/// their range.
DiffusionSpec load_model_file(const std::string& path);
DiffusionSpec parse_model_json(const std::string& text);

} // namespace divbar
