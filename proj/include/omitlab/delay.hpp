#pragma once

// Phase dispersion of the transmitted probe and the group delay
// tau_g = d arg(t_p) / d omega_p, which equals d arg(t_p) / d Delta at fixed
// omega_c.

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "omitlab/errors.hpp"
#include "omitlab/model.hpp"
#include "omitlab/parallel.hpp"
#include "omitlab/response.hpp"
#include "omitlab/steadystate.hpp"

namespace omitlab {

struct UnwrappedPhase {
    std::vector<double> values;
    /// Set when some step still exceeds pi/2 after unwrapping: the grid is
    /// too coarse to resolve the phase reliably.
    bool undersampled = false;
};

/// Removes 2 pi jumps so successive samples differ by at most pi. The first
/// sample is unchanged; every output differs from its input by a multiple of 2 pi.
inline UnwrappedPhase unwrap_phase(std::span<const double> phases) {
    constexpr double two_pi = 2.0 * std::numbers::pi;
    UnwrappedPhase out;
    out.values.reserve(phases.size());
    long turns = 0;
    for (std::size_t k = 0; k < phases.size(); ++k) {
        if (k > 0) {
            const double prev = out.values.back();
            double candidate = phases[k] + two_pi * static_cast<double>(turns);
            const long extra = std::lround((prev - candidate) / two_pi);
            turns += extra;
            candidate = phases[k] + two_pi * static_cast<double>(turns);
            if (std::abs(candidate - prev) > 0.5 * std::numbers::pi)
                out.undersampled = true;
            out.values.push_back(candidate);
        } else {
            out.values.push_back(phases[0]);
        }
    }
    return out;
}

struct Analytic {};

struct CentralDifference {
    double h = 0.0; // step in rad/s; 0 selects 1e-6 omega_m
    bool richardson = true;
};

using DelayMethod = std::variant<Analytic, CentralDifference>;

enum class LightClass { Slow, Fast, Neutral };

inline std::string_view to_string(LightClass c) {
    switch (c) {
    case LightClass::Slow: return "slow";
    case LightClass::Fast: return "fast";
    case LightClass::Neutral: return "neutral";
    }
    return "unknown";
}

inline constexpr double kNeutralDelay = 1e-12; // s

inline LightClass classify_delay(double tau_g) {
    if (std::abs(tau_g) < kNeutralDelay)
        return LightClass::Neutral;
    return tau_g > 0.0 ? LightClass::Slow : LightClass::Fast;
}

struct DelayResult {
    double tau_g = 0.0; // s
    DelayMethod method = Analytic{};
    LightClass classification = LightClass::Neutral;
    double t_p_magnitude = 0.0;
    /// |D(h) - D(h/2)| / max(|tau_g|, 1e-12 s); zero for the analytic method.
    double richardson_disagreement = 0.0;
};

namespace detail {

inline cplx transmitted(const EffectiveParams& ep, cplx a0, double delta) {
    const SidebandAmplitudes s = sideband_amplitudes(ep, a0, delta);
    if (s.flag != Flag::Ok)
        throw NumericalError(s.flag, "degenerate denominator at Delta = " + std::to_string(delta));
    return 1.0 - 2.0 * ep.kappa * s.a_plus;
}

/// Central difference of arg t_p with both outer samples referred to the
/// centre, so no branch cut falls inside the stencil. The divisor is the
/// spacing actually represented in floating point, not the nominal 2h.
inline double phase_slope(const EffectiveParams& ep, cplx a0, double delta, cplx t0, double h) {
    const double hi = delta + h;
    const double lo = delta - h;
    const cplx tp = transmitted(ep, a0, hi);
    const cplx tm = transmitted(ep, a0, lo);
    const double up = std::arg(tp * std::conj(t0));
    const double down = std::arg(tm * std::conj(t0));
    return (up - down) / (hi - lo);
}

} // namespace detail

inline DelayResult group_delay(const EffectiveParams& ep, cplx a0, double delta,
                               const DelayMethod& method = Analytic{}) {
    const cplx t0 = detail::transmitted(ep, a0, delta);
    DelayResult r;
    r.method = method;
    r.t_p_magnitude = std::abs(t0);
    if (!(r.t_p_magnitude >= 1e-14))
        throw NumericalError(Flag::NearZeroTransmission,
                             "transmission vanishes at Delta = " + std::to_string(delta)
                                 + ", phase undefined");

    if (std::holds_alternative<Analytic>(method)) {
        const cplx dt = -2.0 * ep.kappa * a_plus_derivative(ep, delta);
        r.tau_g = (dt / t0).imag();
    } else {
        const auto& fd = std::get<CentralDifference>(method);
        const double h = fd.h > 0.0 ? fd.h : 1e-6 * ep.omega_m;
        const double coarse = detail::phase_slope(ep, a0, delta, t0, h);
        if (fd.richardson) {
            const double fine = detail::phase_slope(ep, a0, delta, t0, 0.5 * h);
            r.tau_g = (4.0 * fine - coarse) / 3.0;
            r.richardson_disagreement =
                std::abs(coarse - fine) / std::max(std::abs(r.tau_g), kNeutralDelay);
            if (r.richardson_disagreement > 1e-4)
                throw NumericalError(Flag::StepTooLarge,
                                     "Richardson steps disagree by "
                                         + std::to_string(r.richardson_disagreement)
                                         + " at Delta = " + std::to_string(delta));
        } else {
            r.tau_g = coarse;
        }
    }
    r.classification = classify_delay(r.tau_g);
    return r;
}

struct DelayCell {
    double tau_g = std::numeric_limits<double>::quiet_NaN(); // s
    LightClass classification = LightClass::Neutral;
    double t_p_magnitude = std::numeric_limits<double>::quiet_NaN();
    Flag flag = Flag::Ok;
};

/// Group delay over a (coupling power x OAM number) grid, row-major with one
/// row per power.
struct DelayMap {
    std::vector<double> P_grid; // W
    std::vector<int> L_grid;
    double delta = 0.0;
    std::vector<DelayCell> cells;

    const DelayCell& at(std::size_t row, std::size_t col) const {
        return cells[row * L_grid.size() + col];
    }
    double max_abs_tau_g() const {
        double m = 0.0;
        for (const auto& c : cells)
            if (c.flag == Flag::Ok)
                m = std::max(m, std::abs(c.tau_g));
        return m;
    }
};

/// Steady state recomputed per cell; per-cell failures are recorded in the
/// cell's flag and the sweep continues.
inline DelayMap delay_map(const PhysicalConfig& cfg, std::span<const double> P_grid,
                          std::span<const int> L_grid, double delta, unsigned threads = 0,
                          const DelayMethod& method = Analytic{}) {
    if (P_grid.empty() || L_grid.empty())
        throw ValidationError("delay_map needs non-empty P and L grids");
    if (!std::isfinite(delta))
        throw ValidationError("delay_map: Delta must be finite");
    validate(cfg);

    DelayMap map;
    map.P_grid.assign(P_grid.begin(), P_grid.end());
    map.L_grid.assign(L_grid.begin(), L_grid.end());
    map.delta = delta;
    map.cells.resize(P_grid.size() * L_grid.size());

    parallel_for(map.cells.size(), threads, [&](std::size_t k) {
        PhysicalConfig c = cfg;
        c.P = map.P_grid[k / map.L_grid.size()];
        c.L = map.L_grid[k % map.L_grid.size()];
        DelayCell& cell = map.cells[k];
        try {
            const OperatingPoint op = operating_point(c);
            const DelayResult r = group_delay(op.ep, op.ss.a0, delta, method);
            cell.tau_g = r.tau_g;
            cell.classification = r.classification;
            cell.t_p_magnitude = r.t_p_magnitude;
        } catch (const NumericalError& e) {
            cell.flag = e.flag();
        } catch (const ValidationError&) {
            cell.flag = Flag::Invalid;
        }
    });
    return map;
}

} // namespace omitlab
