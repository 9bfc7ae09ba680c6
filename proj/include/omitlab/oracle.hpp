#pragma once

// Time-domain check of the closed-form response: integrate the nonlinear
// mean-value equations with both drives on, then demodulate the late-time
// cavity field into its carrier and first-order sideband components.

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <boost/numeric/odeint.hpp>

#include "omitlab/errors.hpp"
#include "omitlab/model.hpp"
#include "omitlab/response.hpp"
#include "omitlab/steadystate.hpp"

namespace omitlab {

struct OdeState {
    cplx a;
    double phi1 = 0.0;
    double phi2 = 0.0;
    double lz1 = 0.0;
    double lz2 = 0.0;

    double norm() const {
        return std::sqrt(std::norm(a) + phi1 * phi1 + phi2 * phi2 + lz1 * lz1 + lz2 * lz2);
    }
};

struct TimeSeries {
    std::vector<double> t;
    std::vector<OdeState> states;
    double delta = 0.0;
    double eps_p = 0.0;
};

struct IntegrationOptions {
    double duration = 0.0; // s; 0 selects 40 / min(gamma1, gamma2)
    double rel_tol = 1e-10;
    int samples_per_beat = 40;
    bool probe_on = true;
    double eps_p_scale = 1.0;
    /// Start state; defaults to the probe-off steady state.
    std::optional<OdeState> initial;
    /// Skip the lower-bound check on the duration (transient studies).
    bool allow_short = false;
};

namespace detail {

using OdeVector = std::array<double, 6>; // Re a, Im a, phi1, phi2, lz1, lz2

inline OdeVector pack(const OdeState& s) {
    return {s.a.real(), s.a.imag(), s.phi1, s.phi2, s.lz1, s.lz2};
}

inline OdeState unpack(const OdeVector& v) {
    return {cplx(v[0], v[1]), v[2], v[3], v[4], v[5]};
}

/// Bare detuning that reproduces the configured steady state.
inline double bare_detuning(const PhysicalConfig& cfg, const DerivedConstants& dc,
                            const SteadyState& ss) {
    if (const auto* sc = std::get_if<SelfConsistent>(&cfg.detuning_mode))
        return sc->delta0;
    return ss.delta_prime - dc.g1 * ss.phi10 + dc.g2 * ss.phi20;
}

} // namespace detail

/// Adaptive Dormand-Prince integration of
///   dphi_j/dt = w_j Lz_j
///   dLz_j/dt  = -w_j phi_j + g_alpha_j |a|^2 - gamma_j Lz_j
///   da/dt     = -i [Delta0 + g1 phi1 - g2 phi2] a - kappa a + eps_c + eps_p e^{-i Delta t}
/// in the frame rotating at omega_c. Output is sampled uniformly, at least
/// `samples_per_beat` points per probe beat period, ending at t = duration.
inline TimeSeries integrate(const PhysicalConfig& cfg, const DerivedConstants& dc, double delta,
                            const IntegrationOptions& opts) {
    const double gamma_min = std::min(dc.gamma1, dc.gamma2);
    const double duration = opts.duration > 0.0 ? opts.duration : 40.0 / gamma_min;
    if (!opts.allow_short && duration < 20.0 / gamma_min)
        throw ValidationError("integration shorter than 20 mechanical damping times");
    if (!(opts.rel_tol >= 1e-12 && opts.rel_tol <= 1e-6))
        throw ValidationError("integrator tolerance must lie in [1e-12, 1e-6]");
    if (!std::isfinite(delta))
        throw ValidationError("Delta must be finite");

    const SteadyState ss = solve_steady_state(cfg, dc);
    const double delta0 = detail::bare_detuning(cfg, dc, ss);
    const double eps_c = dc.eps_c;
    const double eps_p = opts.probe_on ? opts.eps_p_scale * dc.eps_p(delta) : 0.0;
    const double kappa = cfg.kappa;
    const double w1 = cfg.omega_phi1, w2 = cfg.omega_phi2;
    const double ga1 = dc.g_alpha1, ga2 = dc.g_alpha2;
    const double g1 = dc.g1, g2 = dc.g2;
    const double y1 = dc.gamma1, y2 = dc.gamma2;

    auto rhs = [&](const detail::OdeVector& x, detail::OdeVector& dxdt, double t) {
        const cplx a(x[0], x[1]);
        const double n = std::norm(a);
        const cplx da = cplx(0.0, -(delta0 + g1 * x[2] - g2 * x[3])) * a - kappa * a + eps_c
                      + eps_p * std::polar(1.0, -delta * t);
        dxdt[0] = da.real();
        dxdt[1] = da.imag();
        dxdt[2] = w1 * x[4];
        dxdt[3] = w2 * x[5];
        dxdt[4] = -w1 * x[2] + ga1 * n - y1 * x[4];
        dxdt[5] = -w2 * x[3] + ga2 * n - y2 * x[5];
    };

    OdeState start;
    if (opts.initial) {
        start = *opts.initial;
    } else {
        start = {ss.a0, ss.phi10, ss.phi20, 0.0, 0.0};
    }

    // Output spacing: the finer of the beat and the fastest mechanical period.
    const double fastest = std::max({std::abs(delta), w1, w2, kappa});
    const double dt_out = 2.0 * std::numbers::pi / fastest / opts.samples_per_beat;
    const auto n_out = static_cast<std::size_t>(std::ceil(duration / dt_out));
    std::vector<double> times(n_out + 1);
    for (std::size_t k = 0; k <= n_out; ++k)
        times[k] = duration - static_cast<double>(n_out - k) * dt_out;
    times[0] = 0.0;

    const double scale = std::max({1.0, std::abs(ss.a0), std::abs(ss.phi10), std::abs(ss.phi20),
                                   eps_c / kappa, start.norm()});
    const double abs_tol = opts.rel_tol * scale;

    TimeSeries series;
    series.delta = delta;
    series.eps_p = eps_p;
    series.t.reserve(times.size());
    series.states.reserve(times.size());
    auto observer = [&](const detail::OdeVector& x, double t) {
        for (double v : x)
            if (!std::isfinite(v))
                throw NumericalError(Flag::BlowUp,
                                     "non-finite state at t = " + std::to_string(t));
        series.t.push_back(t);
        series.states.push_back(detail::unpack(x));
    };

    namespace odeint = boost::numeric::odeint;
    detail::OdeVector x = detail::pack(start);
    try {
        auto stepper = odeint::make_dense_output(abs_tol, opts.rel_tol,
                                                 odeint::runge_kutta_dopri5<detail::OdeVector>());
        odeint::integrate_times(stepper, rhs, x, times.begin(), times.end(), 0.1 * dt_out,
                                observer, odeint::max_step_checker(1'000'000));
    } catch (const NumericalError&) {
        throw;
    } catch (const std::exception& e) {
        throw NumericalError(Flag::StepFailure, std::string("integrator failed: ") + e.what());
    }
    return series;
}

/// Explicit duration and tolerance, probe on.
inline TimeSeries integrate(const PhysicalConfig& cfg, const DerivedConstants& dc, double delta,
                            double duration, double tol) {
    IntegrationOptions opts;
    opts.duration = duration;
    opts.rel_tol = tol;
    return integrate(cfg, dc, delta, opts);
}

struct DemodulationReport {
    cplx a0_est;
    cplx a_plus_est;
    cplx a_minus_est;
    double fit_residual = 0.0; // RMS(misfit) / RMS(signal)
    double window_start = 0.0;
    double window_end = 0.0;
};

/// Least-squares fit of a(t) on {1, eps_p e^{-i Delta t}, eps_p e^{+i Delta t}}
/// over the final `fraction` of the series, trimmed back from the end to a
/// whole number of beat periods. With eps_p = 0 only the carrier is fitted.
inline DemodulationReport demodulate(const TimeSeries& series, double delta, double eps_p,
                                     double fraction = 0.5) {
    if (series.t.size() < 4)
        throw ValidationError("demodulate: series too short");
    const double t_end = series.t.back();
    double window = fraction * (t_end - series.t.front());
    const bool probe = eps_p != 0.0;
    if (probe) {
        if (!(std::abs(delta) * window >= 2.0 * std::numbers::pi))
            throw NumericalError(Flag::IllConditionedFit,
                                 "fit window shorter than one beat period: basis collinear");
        const double period = 2.0 * std::numbers::pi / std::abs(delta);
        window = std::floor(window / period) * period;
    }
    const double t_start = t_end - window;

    std::size_t first = 0;
    while (first < series.t.size() && series.t[first] < t_start - 1e-12 * window)
        ++first;
    const std::size_t rows = series.t.size() - first;
    const int cols = probe ? 3 : 1;
    Eigen::MatrixXcd basis(static_cast<Eigen::Index>(rows), cols);
    Eigen::VectorXcd signal(static_cast<Eigen::Index>(rows));
    for (std::size_t r = 0; r < rows; ++r) {
        const double t = series.t[first + r];
        const auto row = static_cast<Eigen::Index>(r);
        basis(row, 0) = 1.0;
        if (probe) {
            basis(row, 1) = eps_p * std::polar(1.0, -delta * t);
            basis(row, 2) = eps_p * std::polar(1.0, delta * t);
        }
        signal(row) = series.states[first + r].a;
    }
    const Eigen::VectorXcd coef = basis.colPivHouseholderQr().solve(signal);

    DemodulationReport rep;
    rep.a0_est = coef(0);
    rep.a_plus_est = probe ? coef(1) : cplx(0.0);
    rep.a_minus_est = probe ? coef(2) : cplx(0.0);
    const double misfit = (basis * coef - signal).norm();
    const double total = signal.norm();
    rep.fit_residual = total > 0.0 ? misfit / total : misfit;
    rep.window_start = series.t[first];
    rep.window_end = t_end;
    return rep;
}

struct Relaxation {
    std::optional<double> Q_override = 50.0;
    std::optional<double> P_p_override;
};

struct OracleThresholds {
    double a0 = 1e-6;
    double a_plus = 1e-3;
    double a_minus = 1e-2;
    double linearity = 1e-3;
};

struct OracleReport {
    double delta = 0.0;
    cplx a0_closed, a_plus_closed, a_minus_closed;
    cplx a0_est, a_plus_est, a_minus_est;
    double a0_rel_err = 0.0;
    double a_plus_rel_err = 0.0;
    /// Relative to |a-| or, where a- vanishes, to |a+|.
    double a_minus_rel_err = 0.0;
    double linearity_rel_change = 0.0;
    double fit_residual = 0.0;
    OracleThresholds thresholds;
    bool pass = false;
};

inline PhysicalConfig relaxed(PhysicalConfig cfg, const Relaxation& relax) {
    if (relax.Q_override) {
        cfg.Q1 = *relax.Q_override;
        cfg.Q2 = *relax.Q_override;
    }
    if (relax.P_p_override)
        cfg.P_p = *relax.P_p_override;
    return cfg;
}

/// Three integrations at one probe detuning: probe off from an empty cavity
/// with mirrors at rest (carrier check), probe on from the steady state
/// (sideband check), and probe on at half amplitude (linearity check).
inline OracleReport oracle_check(const PhysicalConfig& base, double delta,
                                 const Relaxation& relax = {}, double rel_tol = 1e-10,
                                 const OracleThresholds& thresholds = {}) {
    const PhysicalConfig cfg = relaxed(base, relax);
    const OperatingPoint op = operating_point(cfg);
    const SidebandAmplitudes closed = sideband_amplitudes(op.ep, op.ss.a0, delta);
    if (closed.flag != Flag::Ok)
        throw NumericalError(closed.flag, "closed form degenerate at the oracle point");

    OracleReport rep;
    rep.delta = delta;
    rep.thresholds = thresholds;
    rep.a0_closed = op.ss.a0;
    rep.a_plus_closed = closed.a_plus;
    rep.a_minus_closed = closed.a_minus;

    IntegrationOptions carrier;
    carrier.rel_tol = rel_tol;
    carrier.probe_on = false;
    carrier.initial = OdeState{};
    const TimeSeries off = integrate(cfg, op.dc, delta, carrier);
    rep.a0_est = demodulate(off, delta, 0.0).a0_est;

    IntegrationOptions probe;
    probe.rel_tol = rel_tol;
    const TimeSeries on = integrate(cfg, op.dc, delta, probe);
    const DemodulationReport full = demodulate(on, delta, on.eps_p);
    rep.a_plus_est = full.a_plus_est;
    rep.a_minus_est = full.a_minus_est;
    rep.fit_residual = full.fit_residual;

    probe.eps_p_scale = 0.5;
    const TimeSeries half = integrate(cfg, op.dc, delta, probe);
    const DemodulationReport weak = demodulate(half, delta, half.eps_p);

    auto rel = [](cplx est, cplx ref, double fallback) {
        const double denom = std::abs(ref) > 0.0 ? std::abs(ref) : fallback;
        return std::abs(est - ref) / denom;
    };
    rep.a0_rel_err = rel(rep.a0_est, rep.a0_closed, std::max(1.0, std::abs(rep.a0_closed)));
    rep.a_plus_rel_err = rel(rep.a_plus_est, rep.a_plus_closed, 1.0);
    rep.a_minus_rel_err = rel(rep.a_minus_est, rep.a_minus_closed, std::abs(rep.a_plus_closed));
    rep.linearity_rel_change = rel(weak.a_plus_est, full.a_plus_est, 1.0);
    rep.pass = rep.a0_rel_err < thresholds.a0 && rep.a_plus_rel_err < thresholds.a_plus
            && rep.a_minus_rel_err < thresholds.a_minus
            && rep.linearity_rel_change < thresholds.linearity;
    return rep;
}

} // namespace omitlab
