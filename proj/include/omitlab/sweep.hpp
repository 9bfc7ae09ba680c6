#pragma once

// Spectra and parameter maps of the probe response, plus location and sizing
// of the transparency windows in the absorption curve.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "omitlab/delay.hpp"
#include "omitlab/errors.hpp"
#include "omitlab/model.hpp"
#include "omitlab/parallel.hpp"
#include "omitlab/response.hpp"
#include "omitlab/steadystate.hpp"

namespace omitlab {

struct SpectrumSeries {
    std::vector<double> delta_grid; // rad/s, strictly increasing
    double omega_m = 0.0;
    std::vector<double> nu_p;
    std::vector<double> u_p;
    std::vector<double> phase_unwrapped;
    std::vector<double> tau_g; // s, analytic; NaN where undefined
    std::vector<Flag> flags;
    std::uint64_t config_fingerprint = 0;
    bool undersampled_phase = false;

    std::size_t size() const { return delta_grid.size(); }
};

/// n points uniformly spaced over [lo, hi].
inline std::vector<double> linspace(double lo, double hi, std::size_t n) {
    std::vector<double> g(n);
    if (n == 1) {
        g[0] = lo;
        return g;
    }
    for (std::size_t k = 0; k < n; ++k)
        g[k] = lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(n - 1);
    return g;
}

inline std::vector<double> logspace(double lo, double hi, std::size_t n) {
    std::vector<double> g = linspace(std::log(lo), std::log(hi), n);
    for (double& v : g)
        v = std::exp(v);
    if (n > 0) {
        g.front() = lo;
        g.back() = hi;
    }
    return g;
}

/// Adds points spaced gamma_j/4 within +-10 gamma_j of each mirror frequency
/// that lies inside the grid's span. Result is sorted and strictly increasing.
inline std::vector<double> refine_near_resonances(std::vector<double> grid,
                                                  const PhysicalConfig& cfg) {
    if (grid.size() < 2)
        return grid;
    const double lo = grid.front(), hi = grid.back();
    const DerivedConstants dc = derive_constants(cfg);
    const double centres[2] = {cfg.omega_phi1, cfg.omega_phi2};
    const double gammas[2] = {dc.gamma1, dc.gamma2};
    for (int j = 0; j < 2; ++j) {
        for (int k = -40; k <= 40; ++k) {
            const double x = centres[j] + 0.25 * gammas[j] * k;
            if (x > lo && x < hi)
                grid.push_back(x);
        }
    }
    std::sort(grid.begin(), grid.end());
    std::vector<double> out;
    out.reserve(grid.size());
    for (double x : grid)
        if (out.empty() || x - out.back() > 1e-12 * std::max(std::abs(x), 1.0))
            out.push_back(x);
    return out;
}

/// 4001 points over [0.5, 1.5] omega_m, refined around both mirror resonances.
inline std::vector<double> default_delta_grid(const PhysicalConfig& cfg) {
    return refine_near_resonances(linspace(0.5 * cfg.omega_m, 1.5 * cfg.omega_m, 4001), cfg);
}

struct SweepOptions {
    unsigned threads = 0;
    bool refine = true;
    int branch = 0;
};

inline SpectrumSeries spectrum_sweep(const PhysicalConfig& cfg, std::span<const double> delta_grid,
                                     const SweepOptions& opts = {}) {
    if (delta_grid.empty())
        throw ValidationError("spectrum_sweep: empty Delta grid");
    for (std::size_t k = 1; k < delta_grid.size(); ++k)
        if (!(delta_grid[k] > delta_grid[k - 1]))
            throw ValidationError("spectrum_sweep: Delta grid must be strictly increasing");

    const OperatingPoint op = operating_point(cfg, opts.branch);
    SpectrumSeries s;
    s.delta_grid.assign(delta_grid.begin(), delta_grid.end());
    if (opts.refine)
        s.delta_grid = refine_near_resonances(std::move(s.delta_grid), cfg);
    s.omega_m = cfg.omega_m;
    s.config_fingerprint = fingerprint(cfg);
    const std::size_t n = s.delta_grid.size();
    const double nan = std::numeric_limits<double>::quiet_NaN();
    s.nu_p.assign(n, nan);
    s.u_p.assign(n, nan);
    s.tau_g.assign(n, nan);
    s.flags.assign(n, Flag::Ok);
    std::vector<double> raw_phase(n, nan);

    parallel_for(n, opts.threads, [&](std::size_t k) {
        const double delta = s.delta_grid[k];
        const ProbeResponse r = probe_response(op.ep, op.ss.a0, delta);
        s.flags[k] = r.flag;
        if (r.flag != Flag::Ok)
            return;
        s.nu_p[k] = r.nu_p;
        s.u_p[k] = r.u_p;
        raw_phase[k] = r.phase;
        try {
            s.tau_g[k] = group_delay(op.ep, op.ss.a0, delta).tau_g;
        } catch (const NumericalError& e) {
            s.flags[k] = e.flag();
        }
    });
    UnwrappedPhase unwrapped = unwrap_phase(raw_phase);
    s.phase_unwrapped = std::move(unwrapped.values);
    s.undersampled_phase = unwrapped.undersampled;
    return s;
}

inline SpectrumSeries spectrum_sweep(const PhysicalConfig& cfg, const SweepOptions& opts = {}) {
    const std::vector<double> grid = default_delta_grid(cfg);
    SweepOptions o = opts;
    o.refine = false;
    return spectrum_sweep(cfg, grid, o);
}

struct DipReport {
    std::vector<double> positions;   // rad/s
    std::vector<double> depths;      // nu_p at the minimum
    std::vector<double> widths;      // rad/s, full width at half depth
    std::vector<double> prominences; // below the lower flanking maximum
    std::size_t count = 0;
};

inline constexpr double kDipProminence = 1e-3;

/// Local minima of nu_p with prominence >= `min_prominence`. Each minimum is
/// refined by the parabola through its three grid points; prominence and
/// width are measured against the nearest local maximum on each side.
inline DipReport find_dips(const SpectrumSeries& series, double min_prominence = kDipProminence) {
    DipReport rep;
    const auto& x = series.delta_grid;
    const auto& y = series.nu_p;
    const std::size_t n = y.size();
    if (n < 3)
        return rep;
    for (std::size_t i = 1; i + 1 < n; ++i) {
        if (!(y[i] < y[i - 1] && y[i] <= y[i + 1]))
            continue;
        std::size_t left = i;
        while (left > 0 && y[left - 1] >= y[left])
            --left;
        std::size_t right = i;
        while (right + 1 < n && y[right + 1] >= y[right])
            ++right;

        // Parabola through (x[i-1], y[i-1]), (x[i], y[i]), (x[i+1], y[i+1]).
        const double x0 = x[i - 1], x1 = x[i], x2 = x[i + 1];
        const double y0 = y[i - 1], y1 = y[i], y2 = y[i + 1];
        const double d01 = (y1 - y0) / (x1 - x0);
        const double d12 = (y2 - y1) / (x2 - x1);
        const double curv = (d12 - d01) / (x2 - x0);
        double xv = x1, yv = y1;
        if (curv > 0.0) {
            // y = y1 + d01 (x - x1) + curv (x - x0)(x - x1)
            xv = 0.5 * (x0 + x1) - d01 / (2.0 * curv);
            xv = std::clamp(xv, x0, x2);
            yv = y1 + d01 * (xv - x1) + curv * (xv - x0) * (xv - x1);
        }

        const double flank = std::min(y[left], y[right]);
        const double prominence = flank - yv;
        if (prominence < min_prominence)
            continue;

        const double half = yv + 0.5 * prominence;
        auto crossing = [&](std::size_t from, int step) {
            std::size_t k = from;
            while (y[k] < half)
                k = static_cast<std::size_t>(static_cast<long>(k) + step);
            const std::size_t inner = static_cast<std::size_t>(static_cast<long>(k) - step);
            const double f = (half - y[inner]) / (y[k] - y[inner]);
            return x[inner] + f * (x[k] - x[inner]);
        };
        const double lo = crossing(i, -1);
        const double hi = crossing(i, +1);

        rep.positions.push_back(xv);
        rep.depths.push_back(yv);
        rep.widths.push_back(hi - lo);
        rep.prominences.push_back(prominence);
    }
    rep.count = rep.positions.size();
    return rep;
}

enum class AxisName { P, L, Kappa, Q1, Q2, Delta };

inline std::string_view to_string(AxisName a) {
    switch (a) {
    case AxisName::P: return "P";
    case AxisName::L: return "L";
    case AxisName::Kappa: return "kappa";
    case AxisName::Q1: return "Q1";
    case AxisName::Q2: return "Q2";
    case AxisName::Delta: return "Delta";
    }
    return "unknown";
}

inline AxisName parse_axis_name(std::string_view s) {
    for (AxisName a : {AxisName::P, AxisName::L, AxisName::Kappa, AxisName::Q1, AxisName::Q2,
                       AxisName::Delta})
        if (s == to_string(a))
            return a;
    throw ValidationError("unknown axis '" + std::string(s) + "' (expected P, L, kappa, Q1, Q2, Delta)");
}

/// Grid values in SI units (W, rad/s; L as a real that must be integral).
struct Axis {
    AxisName name = AxisName::P;
    std::vector<double> grid;
};

struct NuPAt {
    double delta = 0.0;
};
struct TauGAt {
    double delta = 0.0;
};
/// nu_p across the Delta axis (one of the two axes must be Delta).
struct FullSpectrum {};

using Observable = std::variant<NuPAt, TauGAt, FullSpectrum>;

struct Map2D {
    Axis axis1;
    Axis axis2;
    std::vector<double> values; // row-major, one row per axis1 value
    std::vector<Flag> flags;

    double at(std::size_t r, std::size_t c) const { return values[r * axis2.grid.size() + c]; }
};

inline void apply_axis(PhysicalConfig& cfg, AxisName name, double v, double& delta) {
    switch (name) {
    case AxisName::P: cfg.P = v; break;
    case AxisName::L:
        if (v != std::round(v))
            throw ValidationError("L axis values must be integers");
        cfg.L = static_cast<int>(v);
        break;
    case AxisName::Kappa: cfg.kappa = v; break;
    case AxisName::Q1: cfg.Q1 = v; break;
    case AxisName::Q2: cfg.Q2 = v; break;
    case AxisName::Delta: delta = v; break;
    }
}

/// Observable over axis1 x axis2. Where an axis is Delta its value overrides
/// the observable's fixed detuning.
inline Map2D sweep_2d(const PhysicalConfig& cfg, const Axis& axis1, const Axis& axis2,
                      const Observable& observable, unsigned threads = 0) {
    if (axis1.grid.empty() || axis2.grid.empty())
        throw ValidationError("sweep_2d: empty axis grid");
    if (axis1.name == axis2.name)
        throw ValidationError("sweep_2d: axes must differ");
    const bool has_delta = axis1.name == AxisName::Delta || axis2.name == AxisName::Delta;
    if (std::holds_alternative<FullSpectrum>(observable) && !has_delta)
        throw ValidationError("full-spectrum observable needs a Delta axis");
    for (const Axis* ax : {&axis1, &axis2}) {
        if (ax->name == AxisName::L)
            for (double v : ax->grid)
                if (v != std::round(v) || v < 0)
                    throw ValidationError("L axis values must be non-negative integers");
    }
    validate(cfg);

    double fixed_delta = 0.0;
    if (const auto* o = std::get_if<NuPAt>(&observable))
        fixed_delta = o->delta;
    else if (const auto* o = std::get_if<TauGAt>(&observable))
        fixed_delta = o->delta;
    const bool want_delay = std::holds_alternative<TauGAt>(observable);

    Map2D map;
    map.axis1 = axis1;
    map.axis2 = axis2;
    const std::size_t n1 = axis1.grid.size(), n2 = axis2.grid.size();
    map.values.assign(n1 * n2, std::numeric_limits<double>::quiet_NaN());
    map.flags.assign(n1 * n2, Flag::Ok);

    parallel_for(n1 * n2, threads, [&](std::size_t k) {
        PhysicalConfig c = cfg;
        double delta = fixed_delta;
        try {
            apply_axis(c, axis1.name, axis1.grid[k / n2], delta);
            apply_axis(c, axis2.name, axis2.grid[k % n2], delta);
            const OperatingPoint op = operating_point(c);
            if (want_delay) {
                map.values[k] = group_delay(op.ep, op.ss.a0, delta).tau_g;
            } else {
                const ProbeResponse r = probe_response(op.ep, op.ss.a0, delta);
                map.flags[k] = r.flag;
                if (r.flag == Flag::Ok)
                    map.values[k] = r.nu_p;
            }
        } catch (const NumericalError& e) {
            map.flags[k] = e.flag();
        } catch (const ValidationError&) {
            map.flags[k] = Flag::Invalid;
        }
    });
    return map;
}

/// Row r of a map whose axis2 is Delta, viewed as a spectrum (nu_p only).
inline SpectrumSeries map_row_spectrum(const Map2D& map, std::size_t r, double omega_m) {
    if (map.axis2.name != AxisName::Delta)
        throw ValidationError("map_row_spectrum: axis2 must be Delta");
    SpectrumSeries s;
    s.omega_m = omega_m;
    s.delta_grid = map.axis2.grid;
    const std::size_t n2 = map.axis2.grid.size();
    s.nu_p.assign(map.values.begin() + static_cast<long>(r * n2),
                  map.values.begin() + static_cast<long>((r + 1) * n2));
    s.flags.assign(map.flags.begin() + static_cast<long>(r * n2),
                   map.flags.begin() + static_cast<long>((r + 1) * n2));
    return s;
}

} // namespace omitlab
