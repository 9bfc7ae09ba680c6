// Acceptance suite: one line per criterion, PASS or FAIL, with the measured
// quantity and the wall time. Exits non-zero if any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "omitlab/cli.hpp"
#include "omitlab/delay.hpp"
#include "omitlab/oracle.hpp"
#include "omitlab/response.hpp"
#include "omitlab/sweep.hpp"

using namespace omitlab;

namespace tol {
constexpr double lorentz_abs = 1e-12;
constexpr double algebra_rel = 1e-10;
constexpr double oracle_a_plus_rel = 1e-3;
constexpr double oracle_linearity_rel = 1e-3;
constexpr double dip_position = 1e-3; // units of omega_m
constexpr double q_other_dip_rel = 0.05;
constexpr double kappa_shift = 1e-3; // units of omega_m
constexpr double delay_exact_rel = 1e-10;
constexpr double delay_methods_rel = 1e-6;
constexpr double delay_min_tp = 1e-6;
} // namespace tol

namespace budget {
constexpr double c1 = 1.0, c2 = 1.0, c3 = 60.0, c4 = 5.0, c5 = 10.0, c6 = 10.0, c7 = 5.0,
                 c8 = 60.0, c9 = 60.0;
} // namespace budget

namespace {

struct Outcome {
    bool pass = true;
    std::string detail;
};

std::string fmt(const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

int failures = 0;

void criterion(int id, const char* name, double limit_s, const std::function<Outcome()>& body) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
        o = body();
    } catch (const std::exception& e) {
        o = {false, std::string("exception: ") + e.what()};
    }
    const double dt = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (dt > limit_s) {
        o.pass = false;
        o.detail += "; over time budget";
    }
    if (!o.pass)
        ++failures;
    std::printf("criterion %d: %s  %-28s %s  [%.3f s / %.0f s]\n", id, o.pass ? "PASS" : "FAIL", name,
                o.detail.c_str(), dt, limit_s);
    std::fflush(stdout);
}

std::size_t nearest(const DipReport& rep, double target) {
    std::size_t best = 0;
    for (std::size_t k = 1; k < rep.count; ++k)
        if (std::abs(rep.positions[k] - target) < std::abs(rep.positions[best] - target))
            best = k;
    return best;
}

DipReport dips_of(const PhysicalConfig& cfg) { return find_dips(spectrum_sweep(cfg)); }

// Default parameter set with the cavity length pinned explicitly.
PhysicalConfig pinned() {
    PhysicalConfig cfg = default_config();
    cfg.cav_len = 1e-3;
    cfg.P = 2e-3;
    return cfg;
}

Outcome decoupled_exactness() {
    auto cfg = pinned();
    cfg.P = 0.0;
    const auto op = operating_point(cfg);
    const double k = cfg.kappa, dp = op.ep.delta_prime;
    const auto grid = linspace(0.0, 2.0 * cfg.omega_m, 20001);
    double worst = 0.0, peak = -1.0, peak_at = 0.0;
    for (double delta : grid) {
        const double nu = probe_response(op.ep, op.ss.a0, delta).nu_p;
        worst = std::max(worst, std::abs(nu - 2.0 * k * k / (k * k + (dp - delta) * (dp - delta))));
        if (nu > peak) {
            peak = nu;
            peak_at = delta;
        }
    }
    const double at_resonance = probe_response(op.ep, op.ss.a0, dp).nu_p;
    Outcome o;
    o.pass = worst < tol::lorentz_abs && std::abs(at_resonance - 2.0) < tol::lorentz_abs
          && std::abs(peak_at - dp) <= 0.5 * (grid[1] - grid[0]);
    o.detail = "max dev " + fmt("%.2e", worst) + ", peak " + fmt("%.12f", at_resonance) + " at Delta/w_m "
             + fmt("%.6f", peak_at / cfg.omega_m);
    return o;
}

Outcome algebra_oracle() {
    std::mt19937_64 rng(42);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const double wm = default_config().omega_m;
    double worst = 0.0;
    for (int k = 0; k < 50; ++k) {
        PhysicalConfig cfg = pinned();
        cfg.P = 0.1e-3 + 5e-3 * u(rng);
        cfg.L = 10 + static_cast<int>(190 * u(rng));
        cfg.kappa = 2.0 * constants::pi * (3e6 + 40e6 * u(rng));
        cfg.omega_phi1 = (1.0 + 0.2 * u(rng)) * wm;
        cfg.omega_phi2 = (0.8 + 0.2 * u(rng)) * wm;
        cfg.Q1 = std::pow(10.0, 1.0 + 5.0 * u(rng));
        cfg.Q2 = std::pow(10.0, 1.0 + 5.0 * u(rng));
        cfg.detuning_mode = FixedEffective{(0.5 + u(rng)) * wm};
        const double delta = (0.5 + u(rng)) * wm;
        const auto op = operating_point(cfg);
        const auto c = sideband_amplitudes(op.ep, op.ss.a0, delta);
        const auto s = sideband_linear_solve(op.ep, op.ss.a0, delta);
        if (c.flag != Flag::Ok || s.flag != Flag::Ok)
            return {false, "degenerate point " + std::to_string(k)};
        worst = std::max({worst, std::abs(c.a_plus - s.a_plus) / std::abs(s.a_plus),
                          std::abs(c.a_minus - s.a_minus) / std::abs(s.a_minus)});
    }
    return {worst < tol::algebra_rel, "50 points, max rel err " + fmt("%.2e", worst)};
}

Outcome physics_oracle() {
    const auto cfg = pinned();
    const std::vector<double> deltas = {0.9, 1.0, 1.1};
    std::vector<OracleReport> reps(deltas.size());
    parallel_for(deltas.size(), 0, [&](std::size_t k) {
        reps[k] = oracle_check(cfg, deltas[k] * cfg.omega_m, Relaxation{50.0, std::nullopt});
    });
    double ap = 0.0, lin = 0.0;
    for (const auto& r : reps) {
        ap = std::max(ap, r.a_plus_rel_err);
        lin = std::max(lin, r.linearity_rel_change);
    }
    return {ap < tol::oracle_a_plus_rel && lin < tol::oracle_linearity_rel,
            "Q=50, a+ rel err " + fmt("%.2e", ap) + ", linearity " + fmt("%.2e", lin)};
}

Outcome window_structure() {
    auto degenerate = pinned();
    degenerate.omega_phi1 = degenerate.omega_phi2 = degenerate.omega_m;
    const auto one = dips_of(degenerate);
    const auto cfg = pinned();
    const auto two = dips_of(cfg);
    Outcome o;
    o.detail = "degenerate " + std::to_string(one.count) + " dip, split " + std::to_string(two.count)
             + " dips";
    o.pass = one.count == 1 && two.count == 2;
    if (two.count == 2) {
        const double off1 = std::abs(two.positions[nearest(two, cfg.omega_phi1)] - cfg.omega_phi1);
        const double off2 = std::abs(two.positions[nearest(two, cfg.omega_phi2)] - cfg.omega_phi2);
        o.detail += " at " + fmt("%.5f", two.positions[0] / cfg.omega_m) + ", "
                  + fmt("%.5f", two.positions[1] / cfg.omega_m) + " w_m (offsets "
                  + fmt("%.2e", off2 / cfg.omega_m) + ", " + fmt("%.2e", off1 / cfg.omega_m)
                  + " w_m, limit " + fmt("%.0e", tol::dip_position) + ")";
        o.pass = o.pass && off1 < tol::dip_position * cfg.omega_m
              && off2 < tol::dip_position * cfg.omega_m;
    }
    return o;
}

Outcome monotonicity() {
    const auto base = pinned();
    bool ok = true;
    std::string detail;
    auto check = [&](const char* label, const std::vector<PhysicalConfig>& cfgs) {
        for (double target : {base.omega_phi2, base.omega_phi1}) {
            double prev = 0.0;
            detail += std::string(label) + "@" + fmt("%.1f", target / base.omega_m) + ":";
            for (const auto& c : cfgs) {
                const auto rep = dips_of(c);
                if (rep.count == 0) {
                    ok = false;
                    detail += " none";
                    continue;
                }
                const double w = rep.widths[nearest(rep, target)];
                ok = ok && w >= prev;
                prev = w;
                detail += " " + fmt("%.4f", w / base.omega_m);
            }
            detail += "; ";
        }
    };
    std::vector<PhysicalConfig> by_P, by_L;
    for (double P : {1e-3, 2e-3, 5e-3}) {
        auto c = base;
        c.P = P;
        by_P.push_back(c);
    }
    for (int L : {50, 100, 150}) {
        auto c = base;
        c.L = L;
        by_L.push_back(c);
    }
    check("P", by_P);
    check("L", by_L);
    return {ok, "widths/w_m " + detail};
}

Outcome dissipation_asymmetry() {
    const auto base = pinned();
    const auto before = dips_of(base);
    auto lossy = base;
    lossy.Q1 = base.Q1 / 10.0;
    const auto after = dips_of(lossy);
    if (before.count != 2 || after.count != 2)
        return {false, "expected two dips"};
    const double d1b = before.depths[nearest(before, base.omega_phi1)];
    const double d1a = after.depths[nearest(after, base.omega_phi1)];
    const double d2b = before.depths[nearest(before, base.omega_phi2)];
    const double d2a = after.depths[nearest(after, base.omega_phi2)];
    const double other = std::abs(d2a - d2b) / std::abs(d2b);
    const bool q_ok = d1a > d1b && other < tol::q_other_dip_rel;

    double lo1 = INFINITY, hi1 = -INFINITY, lo2 = INFINITY, hi2 = -INFINITY;
    bool counts = true;
    for (double mhz : {5.0, 15.0, 25.0, 35.0}) {
        auto c = base;
        c.kappa = 2.0 * constants::pi * mhz * 1e6;
        const auto rep = dips_of(c);
        if (rep.count != 2) {
            counts = false;
            continue;
        }
        const double p1 = rep.positions[nearest(rep, base.omega_phi1)];
        const double p2 = rep.positions[nearest(rep, base.omega_phi2)];
        lo1 = std::min(lo1, p1);
        hi1 = std::max(hi1, p1);
        lo2 = std::min(lo2, p2);
        hi2 = std::max(hi2, p2);
    }
    const double shift = std::max(hi1 - lo1, hi2 - lo2) / base.omega_m;
    const bool k_ok = counts && shift < tol::kappa_shift;
    return {q_ok && k_ok, std::string("Q1/10: w_phi1 dip ") + fmt("%.5f", d1b) + " -> " + fmt("%.5f", d1a)
                              + ", w_phi2 dip change " + fmt("%.2e", other) + (q_ok ? " (ok)" : " (bad)")
                              + "; kappa sweep position shift " + fmt("%.2e", shift) + " w_m, limit "
                              + fmt("%.0e", tol::kappa_shift) + (k_ok ? " (ok)" : " (bad)")};
}

Outcome delay_exactness() {
    auto cfg = pinned();
    cfg.P = 0.0;
    const auto free = operating_point(cfg);
    const double expect = 2.0 / cfg.kappa;
    const double an = group_delay(free.ep, free.ss.a0, free.ep.delta_prime, Analytic{}).tau_g;
    const double fd = group_delay(free.ep, free.ss.a0, free.ep.delta_prime, CentralDifference{}).tau_g;
    const double e_an = std::abs(an / expect - 1.0), e_fd = std::abs(fd / expect - 1.0);

    const auto op = operating_point(pinned());
    const auto grid = linspace(0.5 * op.ep.omega_m, 1.5 * op.ep.omega_m, 2001);
    double worst = 0.0;
    std::size_t used = 0;
    for (double delta : grid) {
        const auto a = group_delay(op.ep, op.ss.a0, delta, Analytic{});
        if (a.t_p_magnitude <= tol::delay_min_tp)
            continue;
        const auto f = group_delay(op.ep, op.ss.a0, delta, CentralDifference{});
        worst = std::max(worst, std::abs(f.tau_g - a.tau_g) / std::max(std::abs(a.tau_g), kNeutralDelay));
        ++used;
    }
    return {e_an < tol::delay_exact_rel && e_fd < tol::delay_exact_rel && worst < tol::delay_methods_rel,
            "2/kappa rel err analytic " + fmt("%.1e", e_an) + ", fd " + fmt("%.1e", e_fd)
                + "; fd vs analytic max " + fmt("%.2e", worst) + " over " + std::to_string(used)
                + " points"};
}

Outcome fast_slow_switching() {
    const auto cfg = pinned();
    auto P = logspace(1e-3, 5.0, 40);
    for (double& p : P)
        p *= 1e-3;
    std::vector<int> L;
    for (double v : linspace(0.0, 200.0, 40))
        L.push_back(static_cast<int>(std::lround(v)));
    const auto map = delay_map(cfg, P, L, 1.1 * cfg.omega_m);
    std::size_t pos = 0, neg = 0, bad = 0;
    for (const auto& c : map.cells) {
        if (c.flag != Flag::Ok) {
            ++bad;
            continue;
        }
        pos += c.tau_g > 0.0;
        neg += c.tau_g < 0.0;
    }
    bool crosses = false;
    for (std::size_t r = 0; r < P.size(); ++r)
        for (std::size_t c = 1; c < L.size(); ++c)
            crosses = crosses || (map.at(r, c).tau_g > 0) != (map.at(r, c - 1).tau_g > 0);
    for (std::size_t c = 0; c < L.size(); ++c)
        for (std::size_t r = 1; r < P.size(); ++r)
            crosses = crosses || (map.at(r, c).tau_g > 0) != (map.at(r - 1, c).tau_g > 0);
    return {pos > 0 && neg > 0 && crosses && bad == 0,
            "40x40 log-P grid: " + std::to_string(pos) + " slow, " + std::to_string(neg) + " fast, "
                + std::to_string(bad) + " flagged; max |tau_g| "
                + fmt("%.1f", map.max_abs_tau_g() * 1e6) + " us"};
}

Outcome reproducibility() {
    namespace fs = std::filesystem;
    const fs::path dir = fs::temp_directory_path() / "omitlab_acceptance";
    fs::remove_all(dir);
    fs::create_directories(dir);
    const std::vector<std::vector<std::string>> runs = {
        {"spectrum"},
        {"dips"},
        {"delay-map"},
        {"map2d", "--axis1", "P:0.5:5:12", "--axis2", "Delta:0.8:1.2:101", "--observable", "tau_g"},
        {"oracle", "--random", "2"},
    };
    auto slurp = [](const fs::path& p) {
        std::ifstream in(p, std::ios::binary);
        return std::string(std::istreambuf_iterator<char>(in), {});
    };
    std::size_t same = 0;
    std::string detail;
    for (const auto& args : runs) {
        std::string content[2];
        for (int rep = 0; rep < 2; ++rep) {
            const fs::path out = dir / (args[0] + std::to_string(rep) + ".out");
            std::vector<std::string> full = {"omitlab"};
            full.insert(full.end(), args.begin(), args.end());
            full.insert(full.end(), {"--seed", "42", "--out", out.string()});
            std::vector<const char*> argv;
            for (const auto& a : full)
                argv.push_back(a.c_str());
            std::ostringstream sink_out, sink_err;
            const int code = cli::run(static_cast<int>(argv.size()), argv.data(), sink_out, sink_err);
            if (code != 0)
                return {false, args[0] + " exited " + std::to_string(code) + ": " + sink_err.str()};
            content[rep] = slurp(out);
        }
        const bool eq = !content[0].empty() && content[0] == content[1];
        same += eq;
        detail += args[0] + (eq ? " same" : " DIFFERENT") + "; ";
    }
    fs::remove_all(dir);
    return {same == runs.size(), detail};
}

} // namespace

int main() {
    std::printf("omitlab %s acceptance suite\n", OMITLAB_VERSION);
    criterion(1, "decoupled exactness", budget::c1, decoupled_exactness);
    criterion(2, "algebra oracle", budget::c2, algebra_oracle);
    criterion(3, "physics oracle", budget::c3, physics_oracle);
    criterion(4, "window structure", budget::c4, window_structure);
    criterion(5, "width monotonicity", budget::c5, monotonicity);
    criterion(6, "dissipation asymmetry", budget::c6, dissipation_asymmetry);
    criterion(7, "group-delay exactness", budget::c7, delay_exactness);
    criterion(8, "fast/slow switching", budget::c8, fast_slow_switching);
    criterion(9, "reproducibility", budget::c9, reproducibility);
    std::printf("%d of 9 criteria failed\n", failures);
    return failures == 0 ? 0 : 1;
}
