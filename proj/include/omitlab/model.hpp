#pragma once

// Physical parameters of the two-rotating-mirror Laguerre-Gaussian cavity and
// the constants derived from them. SI units throughout; every frequency is an
// angular frequency in rad/s.

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <numbers>
#include <optional>
#include <string>
#include <type_traits>
#include <variant>
#include <vector>

#include "omitlab/errors.hpp"

namespace omitlab {

namespace constants {
inline constexpr double hbar = 1.054571817e-34; // J s
inline constexpr double c = 2.99792458e8;       // m/s
inline constexpr double pi = std::numbers::pi;
} // namespace constants

/// Cavity detuning is pinned to a fixed effective value Delta' ...
struct FixedEffective {
    double delta_prime = 0.0;
};

/// ... or derived self-consistently from the bare detuning Delta_0.
struct SelfConsistent {
    double delta0 = 0.0;
};

using DetuningMode = std::variant<FixedEffective, SelfConsistent>;

namespace defaults {
inline constexpr double omega_m = 160.0 * constants::pi * 1e6;
// The ratio kappa/omega_m = 0.1875 fixes kappa = 2 pi x 15 MHz.
inline constexpr double kappa = 2.0 * constants::pi * 15e6;
inline constexpr double probe_power_ratio = 1e-6;
} // namespace defaults

struct PhysicalConfig {
    double lambda_c = 810e-9;       // coupling-field wavelength [m]
    double P = 2e-3;                // coupling power [W]
    std::optional<double> P_p;      // probe power [W]; unset means 1e-6 * P
    int L = 100;                    // orbital angular momentum quantum number
    double m = 50e-12;              // mirror mass [kg]
    double R = 0.1e-6;              // mirror radius [m]
    double cav_len = 1e-3;          // cavity length [m]
    double kappa = defaults::kappa; // cavity amplitude decay rate [rad/s]
    double omega_phi1 = 1.1 * defaults::omega_m;
    double omega_phi2 = 0.9 * defaults::omega_m;
    double Q1 = 1.2e5;
    double Q2 = 1.2e5;
    double omega_m = defaults::omega_m;
    DetuningMode detuning_mode = FixedEffective{defaults::omega_m};

    double probe_power() const { return P_p ? *P_p : defaults::probe_power_ratio * P; }

    bool operator==(const PhysicalConfig&) const = default;
};

inline bool operator==(const FixedEffective& a, const FixedEffective& b) {
    return a.delta_prime == b.delta_prime;
}
inline bool operator==(const SelfConsistent& a, const SelfConsistent& b) {
    return a.delta0 == b.delta0;
}

/// Reference parameter set: split mirrors at 1.1/0.9 omega_m,
/// P = 2 mW, L = 100, cavity length 1 mm, red-sideband drive Delta' = omega_m.
inline PhysicalConfig default_config() { return PhysicalConfig{}; }

/// Hard invariants throw ValidationError; soft ones come back as warnings.
inline std::vector<std::string> validate(const PhysicalConfig& cfg) {
    auto require = [](bool ok, const char* what) {
        if (!ok)
            throw ValidationError(std::string("invalid config: ") + what);
    };
    auto finite_positive = [&](double v, const char* what) {
        require(std::isfinite(v) && v > 0.0, what);
    };
    finite_positive(cfg.lambda_c, "lambda_c must be finite and > 0");
    require(std::isfinite(cfg.P) && cfg.P >= 0.0, "P must be finite and >= 0");
    if (cfg.P_p)
        require(std::isfinite(*cfg.P_p) && *cfg.P_p >= 0.0, "P_p must be finite and >= 0");
    require(cfg.L >= 0, "L must be >= 0");
    finite_positive(cfg.m, "m must be finite and > 0");
    finite_positive(cfg.R, "R must be finite and > 0");
    finite_positive(cfg.cav_len, "cav_len must be finite and > 0");
    finite_positive(cfg.kappa, "kappa must be finite and > 0");
    finite_positive(cfg.omega_phi1, "omega_phi1 must be finite and > 0");
    finite_positive(cfg.omega_phi2, "omega_phi2 must be finite and > 0");
    require(std::isfinite(cfg.Q1) && cfg.Q1 >= 1.0, "Q1 must be finite and >= 1");
    require(std::isfinite(cfg.Q2) && cfg.Q2 >= 1.0, "Q2 must be finite and >= 1");
    finite_positive(cfg.omega_m, "omega_m must be finite and > 0");
    std::visit(
        [&](const auto& mode) {
            using T = std::decay_t<decltype(mode)>;
            if constexpr (std::is_same_v<T, FixedEffective>)
                require(std::isfinite(mode.delta_prime), "delta_prime must be finite");
            else
                require(std::isfinite(mode.delta0), "delta0 must be finite");
        },
        cfg.detuning_mode);

    std::vector<std::string> warnings;
    const double mean = 0.5 * (cfg.omega_phi1 + cfg.omega_phi2);
    if (std::abs(cfg.omega_m - mean) > 1e-9 * mean)
        warnings.emplace_back("omega_m differs from (omega_phi1 + omega_phi2)/2");
    return warnings;
}

/// Canonical text form: fixed key order, round-trip precision. The
/// fingerprint hashes exactly this text.
inline std::string canonical_text(const PhysicalConfig& cfg) {
    std::string out;
    char buf[64];
    auto field = [&](const char* key, double v) {
        std::snprintf(buf, sizeof buf, "%.17g", v);
        out += key;
        out += '=';
        out += buf;
        out += ';';
    };
    field("lambda_c", cfg.lambda_c);
    field("P", cfg.P);
    field("P_p", cfg.probe_power());
    field("L", cfg.L);
    field("m", cfg.m);
    field("R", cfg.R);
    field("cav_len", cfg.cav_len);
    field("kappa", cfg.kappa);
    field("omega_phi1", cfg.omega_phi1);
    field("omega_phi2", cfg.omega_phi2);
    field("Q1", cfg.Q1);
    field("Q2", cfg.Q2);
    field("omega_m", cfg.omega_m);
    if (const auto* f = std::get_if<FixedEffective>(&cfg.detuning_mode))
        field("fixed_effective.delta_prime", f->delta_prime);
    else
        field("self_consistent.delta0", std::get<SelfConsistent>(cfg.detuning_mode).delta0);
    return out;
}

/// 64-bit FNV-1a of the canonical text.
inline std::uint64_t fingerprint(const PhysicalConfig& cfg) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : canonical_text(cfg)) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline std::string fingerprint_hex(const PhysicalConfig& cfg) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fingerprint(cfg)));
    return buf;
}

struct DerivedConstants {
    double inertia = 0.0; // I = m R^2 / 2 [kg m^2]
    double g1 = 0.0;      // optorotational couplings [rad/s]
    double g2 = 0.0;
    double g_alpha1 = 0.0; // signed couplings: -g1, +g2
    double g_alpha2 = 0.0;
    double gamma1 = 0.0; // mechanical damping [rad/s]
    double gamma2 = 0.0;
    double omega_c = 0.0; // coupling-field angular frequency
    double eps_c = 0.0;   // coupling drive amplitude [sqrt(photons) rad/s]
    double kappa = 0.0;
    double probe_power = 0.0;

    /// Probe drive amplitude at probe detuning `delta` (omega_p = omega_c + delta).
    double eps_p(double delta) const {
        const double omega_p = omega_c + delta;
        if (!(omega_p > 0.0))
            throw ValidationError("probe frequency omega_c + delta must be > 0");
        return std::sqrt(2.0 * kappa * probe_power / (constants::hbar * omega_p));
    }

    bool operator==(const DerivedConstants&) const = default;
};

inline DerivedConstants derive_constants(const PhysicalConfig& cfg) {
    validate(cfg);
    using constants::c;
    using constants::hbar;
    DerivedConstants dc;
    dc.inertia = cfg.m * cfg.R * cfg.R / 2.0;
    const double lever = c * static_cast<double>(cfg.L) / cfg.cav_len;
    dc.g1 = lever * std::sqrt(hbar / (dc.inertia * cfg.omega_phi1));
    dc.g2 = lever * std::sqrt(hbar / (dc.inertia * cfg.omega_phi2));
    dc.g_alpha1 = -dc.g1;
    dc.g_alpha2 = dc.g2;
    dc.gamma1 = cfg.omega_phi1 / cfg.Q1;
    dc.gamma2 = cfg.omega_phi2 / cfg.Q2;
    dc.omega_c = 2.0 * constants::pi * c / cfg.lambda_c;
    dc.kappa = cfg.kappa;
    dc.eps_c = std::sqrt(2.0 * cfg.kappa * cfg.P / (hbar * dc.omega_c));
    dc.probe_power = cfg.probe_power();
    return dc;
}

/// The closed set that fully determines the linear probe response.
struct EffectiveParams {
    double kappa = 0.0;
    double delta_prime = 0.0;
    double G1 = 0.0;
    double G2 = 0.0;
    double omega_phi1 = 0.0;
    double omega_phi2 = 0.0;
    double gamma1 = 0.0;
    double gamma2 = 0.0;
    double omega_m = 0.0;
};

} // namespace omitlab
