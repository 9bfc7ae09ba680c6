#include <gtest/gtest.h>

#include <cmath>

#include "omitlab/config_json.hpp"
#include "omitlab/model.hpp"
#include "omitlab/steadystate.hpp"

using namespace omitlab;
using cplx = std::complex<double>;

namespace {

double rel(double a, double b) { return std::abs(a - b) / std::abs(b); }

} // namespace

TEST(Model, InertiaAndDamping) {
    const auto dc = derive_constants(default_config());
    EXPECT_LT(rel(dc.inertia, 2.5e-25), 1e-15);
    // mpmath reference, 40 digits
    EXPECT_LT(rel(dc.gamma1, 4607.6692252650300831), 1e-14);
    EXPECT_EQ(dc.g_alpha1, -dc.g1);
    EXPECT_EQ(dc.g_alpha2, dc.g2);
}

TEST(Model, GoldenDriveAndCoupling) {
    const auto cfg = default_config();
    const auto op = operating_point(cfg);
    EXPECT_LT(rel(op.dc.eps_c, 1239851588449.2129566), 1e-13);
    EXPECT_LT(rel(op.ss.photon_number(), 5877515.5418814251708), 1e-13);
    EXPECT_LT(rel(op.ep.G1 / cfg.omega_m, 0.12629453158665736649), 1e-13);
}

TEST(Model, ZeroPowerMeansNoDrive) {
    auto cfg = default_config();
    cfg.P = 0.0;
    const auto op = operating_point(cfg);
    EXPECT_EQ(op.dc.eps_c, 0.0);
    EXPECT_EQ(op.ss.a0, cplx(0.0));
    EXPECT_EQ(op.ep.G1, 0.0);
    EXPECT_EQ(op.ep.G2, 0.0);
}

TEST(Model, LScalesCouplingLinearly) {
    auto cfg = default_config();
    const auto base = operating_point(cfg);
    cfg.L = 300;
    const auto tripled = operating_point(cfg);
    EXPECT_LT(rel(tripled.dc.g1, 3.0 * base.dc.g1), 1e-15);
    EXPECT_LT(rel(tripled.dc.g2, 3.0 * base.dc.g2), 1e-15);
    EXPECT_LT(rel(tripled.ep.G1, 3.0 * base.ep.G1), 1e-15);
}

TEST(Model, PowerScalesDriveAsSquareRoot) {
    auto cfg = default_config();
    const auto base = operating_point(cfg);
    cfg.P *= 4.0;
    const auto quad = operating_point(cfg);
    EXPECT_LT(rel(quad.dc.eps_c, 2.0 * base.dc.eps_c), 1e-15);
    EXPECT_LT(rel(std::abs(quad.ss.a0), 2.0 * std::abs(base.ss.a0)), 1e-15);
    EXPECT_LT(rel(quad.ep.G2, 2.0 * base.ep.G2), 1e-15);
}

TEST(Model, Deterministic) {
    const auto a = derive_constants(default_config());
    const auto b = derive_constants(default_config());
    EXPECT_EQ(a, b);
    EXPECT_EQ(fingerprint(default_config()), fingerprint(default_config()));
}

TEST(Model, ProbePowerDefaultsToFraction) {
    auto cfg = default_config();
    EXPECT_DOUBLE_EQ(cfg.probe_power(), 1e-6 * cfg.P);
    cfg.P_p = 3e-9;
    EXPECT_EQ(cfg.probe_power(), 3e-9);
}

TEST(Model, ValidationRejectsBadValues) {
    auto bad = [](auto mutate) {
        auto cfg = default_config();
        mutate(cfg);
        return cfg;
    };
    EXPECT_THROW(validate(bad([](auto& c) { c.P = -1e-3; })), ValidationError);
    EXPECT_THROW(validate(bad([](auto& c) { c.L = -1; })), ValidationError);
    EXPECT_THROW(validate(bad([](auto& c) { c.kappa = 0.0; })), ValidationError);
    EXPECT_THROW(validate(bad([](auto& c) { c.Q1 = 0.5; })), ValidationError);
    EXPECT_THROW(validate(bad([](auto& c) { c.cav_len = std::nan(""); })), ValidationError);
    EXPECT_THROW(validate(bad([](auto& c) { c.detuning_mode = FixedEffective{INFINITY}; })),
                 ValidationError);
    EXPECT_TRUE(validate(default_config()).empty());
}

TEST(Model, MeanFrequencyMismatchIsOnlyAWarning) {
    auto cfg = default_config();
    cfg.omega_phi1 = 1.2 * cfg.omega_m;
    const auto w = validate(cfg);
    ASSERT_EQ(w.size(), 1u);
}

TEST(Model, FingerprintSeesEveryField) {
    const auto base = fingerprint(default_config());
    auto cfg = default_config();
    cfg.Q2 = 1.2e4;
    EXPECT_NE(fingerprint(cfg), base);
    cfg = default_config();
    cfg.detuning_mode = SelfConsistent{cfg.omega_m};
    EXPECT_NE(fingerprint(cfg), base);
}

TEST(ConfigJson, DefaultsDocumentRoundTrips) {
    const auto cfg = config_from_json(defaults_document());
    EXPECT_EQ(fingerprint(cfg), fingerprint(default_config()));
    const auto again = config_from_json(config_to_json(cfg));
    EXPECT_EQ(fingerprint(again), fingerprint(cfg));
}

TEST(ConfigJson, UnitsAreConverted) {
    const json j = json::parse(R"({
        "kappa": {"value": 5e6, "unit": "Hz"},
        "omega_phi1": {"value": 1.05, "unit": "units_of_omega_m"},
        "omega_phi2": 2.0e8
    })");
    const auto cfg = config_from_json(j);
    EXPECT_DOUBLE_EQ(cfg.kappa, 2.0 * constants::pi * 5e6);
    EXPECT_DOUBLE_EQ(cfg.omega_phi1, 1.05 * cfg.omega_m);
    EXPECT_EQ(cfg.omega_phi2, 2.0e8);
    EXPECT_EQ(cfg.L, 100);
}

TEST(ConfigJson, RejectsMalformedInput) {
    EXPECT_THROW(config_from_json(json::parse(R"({"Pwr": 1})")), ValidationError);
    EXPECT_THROW(config_from_json(json::parse(R"({"L": 2.5})")), ValidationError);
    EXPECT_THROW(config_from_json(json::parse(R"({"kappa": {"value": 1, "unit": "GHz"}})")),
                 ValidationError);
    EXPECT_THROW(config_from_json(json::parse(R"({"detuning_mode": {"type": "other"}})")),
                 ValidationError);
    EXPECT_THROW(config_from_json(json::parse(R"({"P": -2})")), ValidationError);
    EXPECT_NO_THROW(config_from_json(json::parse(R"({"_comment": "ignored"})")));
}
