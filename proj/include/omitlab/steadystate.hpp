#pragma once

// Zeroth-order (probe-off) solution: intracavity amplitude, static mirror
// displacements and the effective detuning they produce.

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "omitlab/errors.hpp"
#include "omitlab/model.hpp"

namespace omitlab {

struct SteadyState {
    std::complex<double> a0;
    double phi10 = 0.0;
    double phi20 = 0.0;
    double lz1 = 0.0; // always zero
    double lz2 = 0.0;
    double delta_prime = 0.0;
    int n_branches = 1;
    int branch_index = 0;
    /// |a0 (kappa + i Delta') - eps_c| / max(eps_c, kappa)
    double residual = 0.0;
    /// Relative residual of the photon-number cubic (0 in fixed mode).
    double cubic_residual = 0.0;
    bool converged = true;
    std::uint64_t config_fingerprint = 0;

    double photon_number() const { return std::norm(a0); }
};

namespace detail {

inline SteadyState make_state(const PhysicalConfig& cfg, const DerivedConstants& dc,
                              double delta_prime) {
    SteadyState ss;
    ss.delta_prime = delta_prime;
    ss.a0 = dc.eps_c / std::complex<double>(cfg.kappa, delta_prime);
    const double n = std::norm(ss.a0);
    ss.phi10 = dc.g_alpha1 * n / cfg.omega_phi1;
    ss.phi20 = dc.g_alpha2 * n / cfg.omega_phi2;
    ss.residual = std::abs(ss.a0 * std::complex<double>(cfg.kappa, delta_prime) - dc.eps_c)
                / std::max(dc.eps_c, cfg.kappa);
    ss.config_fingerprint = fingerprint(cfg);
    return ss;
}

/// Real roots of x^3 + b x^2 + c x + d via companion-matrix eigenvalues; the
/// discriminant decides how many of them are real.
inline std::vector<double> real_cubic_roots(double b, double c, double d) {
    Eigen::Matrix3d companion;
    companion << -b, -c, -d, 1.0, 0.0, 0.0, 0.0, 1.0, 0.0;
    const Eigen::Vector3cd ev = companion.eigenvalues();
    const double disc = 18.0 * b * c * d - 4.0 * b * b * b * d + b * b * c * c
                      - 4.0 * c * c * c - 27.0 * d * d;
    std::array<std::complex<double>, 3> z{ev[0], ev[1], ev[2]};
    std::sort(z.begin(), z.end(), [](auto lhs, auto rhs) {
        return std::abs(lhs.imag()) < std::abs(rhs.imag());
    });
    std::vector<double> roots;
    if (disc > 0.0)
        roots = {z[0].real(), z[1].real(), z[2].real()};
    else
        roots = {z[0].real()};
    std::sort(roots.begin(), roots.end());
    return roots;
}

} // namespace detail

inline SteadyState steady_state_fixed(const PhysicalConfig& cfg, const DerivedConstants& dc,
                                      double delta_prime) {
    if (!std::isfinite(delta_prime))
        throw ValidationError("delta_prime must be finite");
    return detail::make_state(cfg, dc, delta_prime);
}

/// Every real root n = |a0|^2 of n [kappa^2 + (Delta0 - chi n)^2] = eps_c^2 with
/// chi = g1^2/omega_phi1 + g2^2/omega_phi2, sorted ascending in n.
///
/// Solved in the scaled variable x = chi n / kappa, where the cubic reads
/// x [1 + (d - x)^2] = s with d = Delta0/kappa and s = eps_c^2 chi / kappa^3.
inline std::vector<SteadyState> steady_state_self_consistent(const PhysicalConfig& cfg,
                                                             const DerivedConstants& dc,
                                                             double delta0) {
    if (!std::isfinite(delta0))
        throw ValidationError("delta0 must be finite");
    const double kappa = cfg.kappa;
    const double eps2 = dc.eps_c * dc.eps_c;
    const double chi = dc.g1 * dc.g1 / cfg.omega_phi1 + dc.g2 * dc.g2 / cfg.omega_phi2;

    std::vector<SteadyState> states;
    if (eps2 == 0.0 || chi == 0.0) {
        const double n = eps2 / (kappa * kappa + delta0 * delta0);
        SteadyState ss = detail::make_state(cfg, dc, delta0 - chi * n);
        states.push_back(ss);
        return states;
    }

    const double d = delta0 / kappa;
    const double s = eps2 * chi / (kappa * kappa * kappa);
    auto f = [&](double x) { return x * (1.0 + (d - x) * (d - x)) - s; };
    auto df = [&](double x) { return 1.0 + (d - x) * (d - x) - 2.0 * x * (d - x); };

    std::vector<double> xs;
    for (double x : detail::real_cubic_roots(-2.0 * d, 1.0 + d * d, -s)) {
        bool ok = false;
        for (int it = 0; it < 50; ++it) {
            if (std::abs(f(x)) <= 1e-12 * s) {
                ok = true;
                break;
            }
            const double slope = df(x);
            if (slope == 0.0)
                break;
            x -= f(x) / slope;
        }
        ok = ok || std::abs(f(x)) <= 1e-12 * s;
        if (x < -1e-18 * s)
            continue;
        x = std::max(x, 0.0);
        // Polishing can pull two nearly coincident roots together.
        if (!xs.empty() && std::abs(x - xs.back()) <= 1e-12 * std::max(1.0, std::abs(x)))
            continue;
        xs.push_back(x);
        const double n = kappa * x / chi;
        SteadyState ss = detail::make_state(cfg, dc, delta0 - chi * n);
        ss.cubic_residual = std::abs(f(x)) / s;
        ss.converged = ok;
        states.push_back(ss);
    }
    for (std::size_t k = 0; k < states.size(); ++k) {
        states[k].n_branches = static_cast<int>(states.size());
        states[k].branch_index = static_cast<int>(k);
    }
    return states;
}

/// Dispatches on the configured detuning mode; `branch` picks a root in
/// self-consistent mode (0 = lowest photon number).
inline SteadyState solve_steady_state(const PhysicalConfig& cfg, const DerivedConstants& dc,
                                      int branch = 0) {
    if (const auto* fixed = std::get_if<FixedEffective>(&cfg.detuning_mode))
        return steady_state_fixed(cfg, dc, fixed->delta_prime);
    const auto states =
        steady_state_self_consistent(cfg, dc, std::get<SelfConsistent>(cfg.detuning_mode).delta0);
    if (branch < 0 || branch >= static_cast<int>(states.size()))
        throw ValidationError("branch index " + std::to_string(branch) + " out of range (have "
                              + std::to_string(states.size()) + " branches)");
    return states[static_cast<std::size_t>(branch)];
}

inline EffectiveParams effective_params(const PhysicalConfig& cfg, const DerivedConstants& dc,
                                        const SteadyState& ss) {
    if (ss.config_fingerprint != fingerprint(cfg))
        throw ValidationError("steady state was computed from a different configuration");
    EffectiveParams ep;
    const double amp = std::abs(ss.a0);
    ep.kappa = cfg.kappa;
    ep.delta_prime = ss.delta_prime;
    ep.G1 = dc.g1 * amp;
    ep.G2 = dc.g2 * amp;
    ep.omega_phi1 = cfg.omega_phi1;
    ep.omega_phi2 = cfg.omega_phi2;
    ep.gamma1 = dc.gamma1;
    ep.gamma2 = dc.gamma2;
    ep.omega_m = cfg.omega_m;
    return ep;
}

inline EffectiveParams effective_params(const PhysicalConfig& cfg, const SteadyState& ss) {
    return effective_params(cfg, derive_constants(cfg), ss);
}

/// Everything downstream needs about one configuration.
struct OperatingPoint {
    DerivedConstants dc;
    SteadyState ss;
    EffectiveParams ep;
};

inline OperatingPoint operating_point(const PhysicalConfig& cfg, int branch = 0) {
    OperatingPoint op;
    op.dc = derive_constants(cfg);
    op.ss = solve_steady_state(cfg, op.dc, branch);
    op.ep = effective_params(cfg, op.dc, op.ss);
    return op;
}

} // namespace omitlab
