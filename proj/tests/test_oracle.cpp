#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "omitlab/oracle.hpp"

using namespace omitlab;

namespace {

TimeSeries synthetic(cplx a0, cplx ap, cplx am, double delta, double eps_p, double noise,
                     std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> n(0.0, noise);
    TimeSeries s;
    s.delta = delta;
    s.eps_p = eps_p;
    const double period = 2.0 * std::numbers::pi / delta;
    for (int k = 0; k <= 4000; ++k) {
        const double t = 50.0 * period * k / 4000.0;
        OdeState st;
        st.a = a0 + eps_p * (ap * std::polar(1.0, -delta * t) + am * std::polar(1.0, delta * t))
             + cplx(n(rng), n(rng));
        s.t.push_back(t);
        s.states.push_back(st);
    }
    return s;
}

} // namespace

TEST(Integrate, EmptyStaysEmpty) {
    auto cfg = default_config();
    cfg.P = 0.0;
    cfg.Q1 = cfg.Q2 = 50.0;
    const auto dc = derive_constants(cfg);
    IntegrationOptions opts;
    opts.probe_on = false;
    const auto series = integrate(cfg, dc, cfg.omega_m, opts);
    ASSERT_GT(series.states.size(), 100u);
    for (const auto& s : series.states)
        EXPECT_EQ(s.norm(), 0.0);
    EXPECT_NEAR(series.t.back(), 40.0 / std::min(dc.gamma1, dc.gamma2), 1e-15);
}

TEST(Integrate, RejectsBadOptions) {
    auto cfg = default_config();
    cfg.Q1 = cfg.Q2 = 50.0;
    const auto dc = derive_constants(cfg);
    EXPECT_THROW(integrate(cfg, dc, cfg.omega_m, 1e-9, 1e-10), ValidationError);
    EXPECT_THROW(integrate(cfg, dc, cfg.omega_m, 0.0, 1e-3), ValidationError);
}

TEST(Integrate, UndrivenDecay) {
    auto cfg = default_config();
    cfg.P = 0.0;
    cfg.Q1 = cfg.Q2 = 50.0;
    const auto dc = derive_constants(cfg);
    IntegrationOptions opts;
    opts.probe_on = false;
    opts.allow_short = true;
    const double gmin = std::min(dc.gamma1, dc.gamma2);
    opts.duration = 10.0 / gmin;
    opts.initial = OdeState{cplx(3.0, -1.0), 1e-3, -2e-3, 5e-4, 0.0};
    const auto series = integrate(cfg, dc, cfg.omega_m, opts);

    // Envelope: maximum norm over consecutive blocks of two mechanical periods.
    const double block = 4.0 * std::numbers::pi / std::min(cfg.omega_phi1, cfg.omega_phi2);
    std::vector<double> env;
    double current = 0.0, edge = block;
    for (std::size_t k = 0; k < series.t.size(); ++k) {
        if (series.t[k] > edge) {
            env.push_back(current);
            current = 0.0;
            edge += block;
        }
        current = std::max(current, series.states[k].norm());
    }
    ASSERT_GT(env.size(), 10u);
    for (std::size_t k = 1; k < env.size(); ++k)
        EXPECT_LE(env[k], env[k - 1] * (1.0 + 1e-9));
    const double rate = std::min(cfg.kappa, 0.5 * gmin);
    const double t_last = block * static_cast<double>(env.size() - 1);
    EXPECT_LE(env.back(), 1.05 * env.front() * std::exp(-rate * (t_last - block)));
}

TEST(Demodulate, ExactOnSyntheticSignal) {
    const cplx a0(2.0, -1.0), ap(0.3, 0.1), am(-0.02, 0.05);
    const double delta = 5.0;
    const auto rep = demodulate(synthetic(a0, ap, am, delta, 0.7, 0.0, 1), delta, 0.7);
    EXPECT_LT(std::abs(rep.a0_est - a0), 1e-13);
    EXPECT_LT(std::abs(rep.a_plus_est - ap), 1e-12);
    EXPECT_LT(std::abs(rep.a_minus_est - am), 1e-12);
    EXPECT_LT(rep.fit_residual, 1e-13);
}

TEST(Demodulate, NoisySyntheticSignal) {
    const cplx a0(1.0, 0.5), ap(0.4, -0.2), am(0.05, 0.0);
    const double delta = 3.0;
    const auto rep = demodulate(synthetic(a0, ap, am, delta, 1.0, 1e-6, 7), delta, 1.0);
    EXPECT_LT(std::abs(rep.a_plus_est - ap) / std::abs(ap), 1e-5);
    EXPECT_LT(std::abs(rep.a_minus_est - am) / std::abs(am), 1e-4);
}

TEST(Demodulate, ShortWindowIsIllConditioned) {
    const auto s = synthetic(1.0, 0.1, 0.0, 5.0, 1.0, 0.0, 1);
    EXPECT_THROW(demodulate(s, 0.01, 1.0), NumericalError);
}

TEST(Demodulate, WindowStartDoesNotMatter) {
    auto cfg = default_config();
    cfg.Q1 = cfg.Q2 = 50.0;
    const auto dc = derive_constants(cfg);
    const double delta = 0.95 * cfg.omega_m;
    const auto series = integrate(cfg, dc, delta, IntegrationOptions{});
    const auto a = demodulate(series, delta, series.eps_p, 0.5);
    const auto b = demodulate(series, delta, series.eps_p, 0.3);
    EXPECT_LT(std::abs(a.a_plus_est - b.a_plus_est) / std::abs(a.a_plus_est), 1e-4);
    EXPECT_LT(std::abs(a.a_minus_est - b.a_minus_est) / std::abs(a.a_minus_est), 1e-4);
}

TEST(Oracle, DecoupledCavityIsExact) {
    // L = 0 removes the coupling entirely. With P = 0 alone the probe's own
    // photons would still tilt the mirrors and shift the cavity by chi n_probe.
    auto cfg = default_config();
    cfg.L = 0;
    const double delta = 1.05 * cfg.omega_m;
    const auto rep = oracle_check(cfg, delta);
    const cplx lorentz = 1.0 / cplx(cfg.kappa, cfg.omega_m - delta);
    EXPECT_LT(std::abs(rep.a_plus_closed - lorentz) / std::abs(lorentz), 1e-15);
    EXPECT_LT(rep.a_plus_rel_err, 1e-6);
    EXPECT_LT(rep.a_minus_rel_err, 1e-6);
    EXPECT_LT(rep.a0_rel_err, 1e-6);
    EXPECT_TRUE(rep.pass);
}

TEST(Oracle, DefaultsAtThreeDetunings) {
    const auto cfg = default_config();
    for (double x : {0.9, 1.0, 1.1}) {
        const auto rep = oracle_check(cfg, x * cfg.omega_m);
        EXPECT_TRUE(rep.pass) << x;
        EXPECT_LT(rep.a0_rel_err, 1e-6);
        EXPECT_LT(rep.a_plus_rel_err, 1e-3);
        EXPECT_LT(rep.linearity_rel_change, 1e-3);
        EXPECT_LT(rep.fit_residual, 1e-4);
    }
}

TEST(Oracle, SeededRandomPoints) {
    std::mt19937_64 rng(42);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int k = 0; k < 5; ++k) {
        auto cfg = default_config();
        cfg.P = 0.5e-3 + 4.5e-3 * u(rng);
        cfg.L = 20 + static_cast<int>(130 * u(rng));
        const double delta = (0.8 + 0.4 * u(rng)) * cfg.omega_m;
        const auto rep = oracle_check(cfg, delta);
        EXPECT_TRUE(rep.pass) << "point " << k << " a+ err " << rep.a_plus_rel_err;
    }
}

TEST(Oracle, SelfConsistentMode) {
    auto cfg = default_config();
    cfg.detuning_mode = SelfConsistent{1.2 * cfg.omega_m};
    const auto rep = oracle_check(cfg, cfg.omega_m);
    EXPECT_TRUE(rep.pass) << rep.a0_rel_err << " " << rep.a_plus_rel_err;
}
