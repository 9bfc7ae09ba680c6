#pragma once

// Command-line front end. run() is the whole program; tools/omitlab.cpp only
// forwards argv and the standard streams.
//
// Exit codes: 0 success, 1 validation error (bad flag, unreadable or invalid
// config), 2 numerical failure (degenerate denominator, integrator failure,
// failed oracle comparison).

#include <chrono>
#include <cstdint>
#include <iomanip>
#include <iostream>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "omitlab/config_json.hpp"
#include "omitlab/delay.hpp"
#include "omitlab/errors.hpp"
#include "omitlab/io.hpp"
#include "omitlab/model.hpp"
#include "omitlab/oracle.hpp"
#include "omitlab/parallel.hpp"
#include "omitlab/steadystate.hpp"
#include "omitlab/sweep.hpp"

namespace omitlab::cli {

/// Flags shared by every computing subcommand. Numeric flags override the
/// config file, which overrides the built-in defaults.
struct CommonOptions {
    std::string config_path;
    std::optional<double> P, P_p, cav_len, kappa_hz, Q1, Q2, w1, w2, delta_prime, delta0;
    std::optional<int> L;
    int branch = 0;
    unsigned threads = 0;
    std::uint64_t seed = 42;
    std::string out;
    std::string svg;

    void attach(CLI::App& app, bool with_outputs = true) {
        app.add_option("--config", config_path, "JSON configuration file")->check(CLI::ExistingFile);
        app.add_option("--P", P, "coupling power [W]");
        app.add_option("--Pp", P_p, "probe power [W]");
        app.add_option("--L", L, "orbital angular momentum number");
        app.add_option("--cav-len", cav_len, "cavity length [m]");
        app.add_option("--kappa-hz", kappa_hz, "cavity decay rate as ordinary frequency [Hz]");
        app.add_option("--Q1", Q1, "mechanical quality factor of mirror 1");
        app.add_option("--Q2", Q2, "mechanical quality factor of mirror 2");
        app.add_option("--w1", w1, "omega_phi1 in units of omega_m");
        app.add_option("--w2", w2, "omega_phi2 in units of omega_m");
        app.add_option("--delta-prime", delta_prime, "fixed effective detuning [omega_m]");
        app.add_option("--delta0", delta0, "bare detuning [omega_m]; selects self-consistent mode");
        app.add_option("--branch", branch, "steady-state branch (0 = lowest photon number)");
        app.add_option("--threads", threads, "worker threads (default: OMITLAB_THREADS or all cores)");
        app.add_option("--seed", seed, "seed for randomised grids");
        if (with_outputs) {
            app.add_option("--out", out, "output file (stdout if omitted)");
            app.add_option("--svg", svg, "also write an SVG plot here");
        }
    }

    PhysicalConfig resolve() const {
        PhysicalConfig cfg = config_path.empty() ? default_config() : load_config(config_path);
        if (P)
            cfg.P = *P;
        if (P_p)
            cfg.P_p = *P_p;
        if (L)
            cfg.L = *L;
        if (cav_len)
            cfg.cav_len = *cav_len;
        if (kappa_hz)
            cfg.kappa = 2.0 * constants::pi * *kappa_hz;
        if (Q1)
            cfg.Q1 = *Q1;
        if (Q2)
            cfg.Q2 = *Q2;
        if (w1)
            cfg.omega_phi1 = *w1 * cfg.omega_m;
        if (w2)
            cfg.omega_phi2 = *w2 * cfg.omega_m;
        if (delta_prime && delta0)
            throw ValidationError("--delta-prime and --delta0 are mutually exclusive");
        if (delta_prime)
            cfg.detuning_mode = FixedEffective{*delta_prime * cfg.omega_m};
        if (delta0)
            cfg.detuning_mode = SelfConsistent{*delta0 * cfg.omega_m};
        validate(cfg);
        return cfg;
    }

    unsigned resolved_threads() const { return threads > 0 ? threads : default_threads(); }
};

namespace detail {

struct Context {
    std::ostream& out;
    std::ostream& err;
    std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
};

/// Writes `text` to --out (plus manifest) or to stdout.
inline void emit(Context& ctx, const CommonOptions& common, const std::string& subcommand,
                 const PhysicalConfig& cfg, const std::string& text, const std::string& svg_text,
                 const json& extra = json::object()) {
    if (!common.svg.empty() && !svg_text.empty())
        write_file_atomic(common.svg, svg_text);
    if (common.out.empty()) {
        ctx.out << text;
        return;
    }
    write_file_atomic(common.out, text);
    RunManifest m;
    m.subcommand = subcommand;
    m.config = cfg;
    m.outputs.push_back(common.out);
    if (!common.svg.empty())
        m.outputs.push_back(common.svg);
    m.seed = common.seed;
    m.threads = common.resolved_threads();
    m.wall_clock_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - ctx.start).count();
    m.extra = extra;
    write_file_atomic(manifest_path_for(common.out), m.to_json().dump(2) + "\n");
}

inline void warn(Context& ctx, const std::vector<std::string>& warnings) {
    for (const auto& w : warnings)
        ctx.err << "warning: " << w << "\n";
}

/// "name:min:max:n[:log]" with P in mW, Delta and kappa in units of omega_m.
inline Axis parse_axis(const std::string& spec, double omega_m) {
    std::vector<std::string> parts;
    std::stringstream ss(spec);
    for (std::string item; std::getline(ss, item, ':');)
        parts.push_back(item);
    if (parts.size() != 4 && parts.size() != 5)
        throw ValidationError("axis spec '" + spec + "' must be name:min:max:n[:log]");
    Axis axis;
    axis.name = parse_axis_name(parts[0]);
    double lo = 0, hi = 0;
    long n = 0;
    try {
        lo = std::stod(parts[1]);
        hi = std::stod(parts[2]);
        n = std::stol(parts[3]);
    } catch (const std::exception&) {
        throw ValidationError("axis spec '" + spec + "' has non-numeric bounds");
    }
    if (n < 1 || !(hi >= lo))
        throw ValidationError("axis spec '" + spec + "' needs n >= 1 and max >= min");
    const bool log = parts.size() == 5 && parts[4] == "log";
    if (parts.size() == 5 && !log)
        throw ValidationError("axis spec '" + spec + "': last field must be 'log'");
    if (log && !(lo > 0))
        throw ValidationError("log axis needs min > 0");
    axis.grid = log ? logspace(lo, hi, static_cast<std::size_t>(n))
                    : linspace(lo, hi, static_cast<std::size_t>(n));
    for (double& v : axis.grid) {
        switch (axis.name) {
        case AxisName::P: v *= 1e-3; break;
        case AxisName::Delta:
        case AxisName::Kappa: v *= omega_m; break;
        case AxisName::L: v = std::round(v); break;
        default: break;
        }
    }
    return axis;
}

inline std::string oracle_text(const std::vector<OracleReport>& reports, double omega_m) {
    std::ostringstream o;
    o << std::left << std::setw(12) << "Delta/w_m" << std::setw(22) << "a0_rel_err"
      << std::setw(22) << "a_plus_rel_err" << std::setw(22) << "a_minus_rel_err" << std::setw(22)
      << "linearity" << std::setw(22) << "fit_resid" << "pass\n";
    for (const auto& r : reports) {
        o << std::left << std::setw(12) << fmt_num(r.delta / omega_m)
          << std::setw(22) << fmt_num(r.a0_rel_err) << std::setw(22) << fmt_num(r.a_plus_rel_err)
          << std::setw(22) << fmt_num(r.a_minus_rel_err) << std::setw(22)
          << fmt_num(r.linearity_rel_change) << std::setw(22) << fmt_num(r.fit_residual)
          << (r.pass ? "yes" : "NO") << "\n";
    }
    return o.str();
}

inline json oracle_json(const std::vector<OracleReport>& reports, double omega_m) {
    json points = json::array();
    bool all = !reports.empty();
    double a0 = 0, ap = 0, am = 0, lin = 0;
    for (const auto& r : reports) {
        points.push_back({{"delta_over_omega_m", r.delta / omega_m},
                          {"a0_rel_err", r.a0_rel_err},
                          {"a_plus_rel_err", r.a_plus_rel_err},
                          {"a_minus_rel_err", r.a_minus_rel_err},
                          {"linearity_rel_change", r.linearity_rel_change},
                          {"fit_residual", r.fit_residual},
                          {"pass", r.pass}});
        all = all && r.pass;
        a0 = std::max(a0, r.a0_rel_err);
        ap = std::max(ap, r.a_plus_rel_err);
        am = std::max(am, r.a_minus_rel_err);
        lin = std::max(lin, r.linearity_rel_change);
    }
    const OracleThresholds t;
    return {{"a0_rel_err", a0},
            {"a_plus_rel_err", ap},
            {"a_minus_rel_err", am},
            {"linearity_rel_change", lin},
            {"pass", all},
            {"thresholds",
             {{"a0", t.a0}, {"a_plus", t.a_plus}, {"a_minus", t.a_minus}, {"linearity", t.linearity}}},
            {"points", points}};
}

} // namespace detail

inline int run(int argc, const char* const* argv, std::ostream& out = std::cout,
               std::ostream& err = std::cerr) {
    CLI::App app{"Optical response and group delay of a two-rotating-mirror L-G cavity", "omitlab"};
    app.require_subcommand(1);
    app.set_version_flag("--version", OMITLAB_VERSION);

    CommonOptions common;

    auto* spectrum = app.add_subcommand("spectrum", "absorption/dispersion/phase/delay spectrum (CSV)");
    double dmin = 0.5, dmax = 1.5;
    std::size_t points = 4001;
    bool no_refine = false;
    spectrum->add_option("--dmin", dmin, "lower Delta [omega_m]");
    spectrum->add_option("--dmax", dmax, "upper Delta [omega_m]");
    spectrum->add_option("--points", points, "uniform grid points");
    spectrum->add_flag("--no-refine", no_refine, "skip refinement around mirror resonances");
    common.attach(*spectrum);

    auto* dips = app.add_subcommand("dips", "transparency windows of the absorption spectrum (CSV)");
    dips->add_option("--dmin", dmin, "lower Delta [omega_m]");
    dips->add_option("--dmax", dmax, "upper Delta [omega_m]");
    dips->add_option("--points", points, "uniform grid points");
    common.attach(*dips);

    auto* steady = app.add_subcommand("steady", "steady-state branches (table)");
    common.attach(*steady, false);

    auto* delay = app.add_subcommand("delay", "group delay at one probe detuning");
    double delta = 1.1;
    std::string method = "analytic";
    double fd_step = 1e-6;
    delay->add_option("--delta", delta, "probe detuning [omega_m]");
    delay->add_option("--method", method, "analytic | fd")->check(CLI::IsMember({"analytic", "fd"}));
    delay->set_help_flag("--help", "print this help message and exit");
    delay->add_option("--h", fd_step, "finite-difference step [omega_m]");
    common.attach(*delay, false);

    auto* dmap = app.add_subcommand("delay-map", "group delay over coupling power x OAM number (CSV)");
    double p_min = 1e-3, p_max = 5.0;
    std::size_t p_points = 40, l_points = 40;
    std::string p_scale = "log";
    int l_min = 0, l_max = 200;
    dmap->add_option("--delta", delta, "probe detuning [omega_m]");
    dmap->add_option("--p-min-mw", p_min, "lowest coupling power [mW]");
    dmap->add_option("--p-max-mw", p_max, "highest coupling power [mW]");
    dmap->add_option("--p-points", p_points, "power grid points");
    dmap->add_option("--p-scale", p_scale, "log | linear")->check(CLI::IsMember({"log", "linear"}));
    dmap->add_option("--l-min", l_min, "lowest L");
    dmap->add_option("--l-max", l_max, "highest L");
    dmap->add_option("--l-points", l_points, "L grid points");
    common.attach(*dmap);

    auto* map2d = app.add_subcommand("map2d", "observable over two parameter axes (long CSV)");
    std::string axis1_spec, axis2_spec, observable = "nu_p";
    map2d->add_option("--axis1", axis1_spec, "name:min:max:n[:log]")->required();
    map2d->add_option("--axis2", axis2_spec, "name:min:max:n[:log]")->required();
    map2d->add_option("--observable", observable, "nu_p | tau_g | spectrum")
        ->check(CLI::IsMember({"nu_p", "tau_g", "spectrum"}));
    map2d->add_option("--delta", delta, "probe detuning when no axis is Delta [omega_m]");
    common.attach(*map2d);

    auto* oracle = app.add_subcommand("oracle", "time-domain check of the closed-form response");
    double relax_q = 50.0, tol = 1e-10;
    std::optional<double> pp_ratio;
    std::vector<double> deltas = {0.9, 1.0, 1.1};
    std::size_t random_points = 0;
    std::string format = "text";
    oracle->add_option("--relax-q", relax_q, "quality factor used for both mirrors");
    oracle->add_option("--pp-ratio", pp_ratio, "probe power as a fraction of P");
    oracle->add_option("--deltas", deltas, "probe detunings [omega_m]")->delimiter(',');
    oracle->add_option("--random", random_points, "additional random points (seeded)");
    oracle->add_option("--tol", tol, "integrator relative tolerance");
    oracle->add_option("--format", format, "text | json")->check(CLI::IsMember({"text", "json"}));
    common.attach(*oracle, false);
    oracle->add_option("--out", common.out, "write the JSON report here");

    auto* defaults = app.add_subcommand("defaults", "print the default parameter set as a config file");
    defaults->add_option("--out", common.out, "write here instead of stdout");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return 0;
    } catch (const CLI::CallForVersion&) {
        out << OMITLAB_VERSION << "\n";
        return 0;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }

    detail::Context ctx{out, err};
    try {
        if (defaults->parsed()) {
            const std::string text = defaults_document().dump(2) + "\n";
            if (common.out.empty())
                out << text;
            else
                write_file_atomic(common.out, text);
            return 0;
        }

        const PhysicalConfig cfg = common.resolve();
        detail::warn(ctx, validate(cfg));
        const unsigned threads = common.resolved_threads();

        if (spectrum->parsed() || dips->parsed()) {
            if (points < 3 || !(dmax > dmin))
                throw ValidationError("need --points >= 3 and --dmax > --dmin");
            SweepOptions opts;
            opts.threads = threads;
            opts.refine = !no_refine;
            opts.branch = common.branch;
            const auto grid = linspace(dmin * cfg.omega_m, dmax * cfg.omega_m, points);
            const SpectrumSeries s = spectrum_sweep(cfg, grid, opts);
            if (s.undersampled_phase)
                err << "warning: phase undersampled on this grid; unwrapped phase may be unreliable\n";
            if (spectrum->parsed()) {
                std::vector<double> x(s.size());
                for (std::size_t k = 0; k < s.size(); ++k)
                    x[k] = s.delta_grid[k] / s.omega_m;
                const std::string svg = common.svg.empty() ? "" : svg_line_plot(
                    {{"nu_p", x, s.nu_p, "#1f77b4"}, {"u_p", x, s.u_p, "#d62728"}},
                    "probe response", "Delta / omega_m", "quadrature");
                detail::emit(ctx, common, "spectrum", cfg, spectrum_csv(s), svg);
            } else {
                const DipReport rep = find_dips(s);
                std::string text = "dip,position_over_omega_m,depth,width_over_omega_m,prominence\n";
                for (std::size_t k = 0; k < rep.count; ++k)
                    text += std::to_string(k) + "," + fmt_num(rep.positions[k] / cfg.omega_m) + ","
                          + fmt_num(rep.depths[k]) + "," + fmt_num(rep.widths[k] / cfg.omega_m) + ","
                          + fmt_num(rep.prominences[k]) + "\n";
                detail::emit(ctx, common, "dips", cfg, text, "");
            }
            for (std::size_t k = 0; k < s.size(); ++k)
                if (is_failure(s.flags[k])) {
                    err << "error: " << to_string(s.flags[k]) << " at Delta/omega_m = "
                        << fmt_num(s.delta_grid[k] / s.omega_m) << "\n";
                    return 2;
                }
            return 0;
        }

        if (steady->parsed()) {
            const DerivedConstants dc = derive_constants(cfg);
            std::vector<SteadyState> states;
            if (const auto* f = std::get_if<FixedEffective>(&cfg.detuning_mode))
                states.push_back(steady_state_fixed(cfg, dc, f->delta_prime));
            else
                states = steady_state_self_consistent(cfg, dc,
                                                      std::get<SelfConsistent>(cfg.detuning_mode).delta0);
            if (states.size() == 3)
                err << "warning: three steady-state branches; stability is not classified\n";
            out << std::left << std::setw(8) << "branch" << std::setw(24) << "n" << std::setw(24)
                << "Re a0" << std::setw(24) << "Im a0" << std::setw(24) << "Delta'/omega_m"
                << "residual\n";
            for (const auto& ss : states) {
                out << std::left << std::setw(8) << ss.branch_index << std::setw(24)
                    << fmt_num(ss.photon_number()) << std::setw(24) << fmt_num(ss.a0.real())
                    << std::setw(24) << fmt_num(ss.a0.imag()) << std::setw(24)
                    << fmt_num(ss.delta_prime / cfg.omega_m)
                    << fmt_num(std::max(ss.residual, ss.cubic_residual)) << "\n";
                if (!ss.converged)
                    err << "warning: branch " << ss.branch_index
                        << " did not reach the root residual tolerance\n";
            }
            return 0;
        }

        if (delay->parsed()) {
            const OperatingPoint op = operating_point(cfg, common.branch);
            DelayMethod m = Analytic{};
            if (method == "fd")
                m = CentralDifference{fd_step * cfg.omega_m, true};
            const DelayResult r = group_delay(op.ep, op.ss.a0, delta * cfg.omega_m, m);
            out << "delta_over_omega_m,tau_g_us,classification,t_p_magnitude,method\n"
                << fmt_num(delta) << "," << fmt_num(r.tau_g * kSecondsToMicro) << ","
                << to_string(r.classification) << "," << fmt_num(r.t_p_magnitude) << "," << method
                << "\n";
            return 0;
        }

        if (dmap->parsed()) {
            if (p_points < 1 || l_points < 1 || !(p_max >= p_min) || l_max < l_min || l_min < 0)
                throw ValidationError("invalid delay-map grid");
            if (p_scale == "log" && !(p_min > 0))
                throw ValidationError("log power grid needs --p-min-mw > 0");
            std::vector<double> P = p_scale == "log" ? logspace(p_min, p_max, p_points)
                                                     : linspace(p_min, p_max, p_points);
            for (double& v : P)
                v *= 1e-3;
            std::vector<int> L;
            for (double v : linspace(l_min, l_max, l_points))
                L.push_back(static_cast<int>(std::lround(v)));
            const DelayMap map = delay_map(cfg, P, L, delta * cfg.omega_m, threads);
            std::string svg;
            if (!common.svg.empty()) {
                std::vector<double> us(map.cells.size());
                for (std::size_t k = 0; k < us.size(); ++k)
                    us[k] = map.cells[k].tau_g * kSecondsToMicro;
                svg = svg_heat_map(us, P.size(), L.size(), "group delay [us]", "L", "P");
            }
            json extra = {{"max_abs_tau_g_us", map.max_abs_tau_g() * kSecondsToMicro},
                          {"delta_over_omega_m", delta}};
            detail::emit(ctx, common, "delay-map", cfg, delay_map_csv(map), svg, extra);
            for (std::size_t k = 0; k < map.cells.size(); ++k)
                if (is_failure(map.cells[k].flag)) {
                    err << "error: " << to_string(map.cells[k].flag) << " at P_mW = "
                        << fmt_num(P[k / L.size()] * 1e3) << ", L = " << L[k % L.size()] << "\n";
                    return 2;
                }
            return 0;
        }

        if (map2d->parsed()) {
            const Axis a1 = detail::parse_axis(axis1_spec, cfg.omega_m);
            const Axis a2 = detail::parse_axis(axis2_spec, cfg.omega_m);
            Observable obs = NuPAt{delta * cfg.omega_m};
            if (observable == "tau_g")
                obs = TauGAt{delta * cfg.omega_m};
            else if (observable == "spectrum")
                obs = FullSpectrum{};
            const Map2D map = sweep_2d(cfg, a1, a2, obs, threads);
            const bool is_delay = observable == "tau_g";
            std::string svg;
            if (!common.svg.empty())
                svg = svg_heat_map(map.values, a1.grid.size(), a2.grid.size(), observable,
                                   std::string(to_string(a2.name)), std::string(to_string(a1.name)));
            detail::emit(ctx, common, "map2d", cfg, map2d_csv(map, cfg.omega_m, is_delay), svg,
                         {{"axis1", to_string(a1.name)}, {"axis2", to_string(a2.name)},
                          {"observable", observable}});
            for (std::size_t k = 0; k < map.flags.size(); ++k)
                if (is_failure(map.flags[k])) {
                    err << "error: " << to_string(map.flags[k]) << " at cell " << k << "\n";
                    return 2;
                }
            return 0;
        }

        if (oracle->parsed()) {
            Relaxation relax;
            relax.Q_override = relax_q;
            if (pp_ratio)
                relax.P_p_override = *pp_ratio * cfg.P;
            struct Point {
                PhysicalConfig cfg;
                double delta;
            };
            std::vector<Point> pts;
            for (double d : deltas)
                pts.push_back({cfg, d * cfg.omega_m});
            std::mt19937_64 rng(common.seed);
            auto uniform = [&](double lo, double hi) {
                return lo + (hi - lo) * static_cast<double>(rng() >> 11) * 0x1.0p-53;
            };
            for (std::size_t k = 0; k < random_points; ++k) {
                PhysicalConfig c = cfg;
                c.P = uniform(0.5e-3, 5e-3);
                c.L = static_cast<int>(uniform(20.0, 150.0));
                const double pick = deltas.empty() ? 1.0 : deltas[rng() % deltas.size()];
                pts.push_back({c, pick * cfg.omega_m});
            }
            std::vector<OracleReport> reports(pts.size());
            parallel_for(pts.size(), threads, [&](std::size_t k) {
                reports[k] = oracle_check(pts[k].cfg, pts[k].delta, relax, tol);
            });
            const json report = detail::oracle_json(reports, cfg.omega_m);
            if (format == "json")
                out << report.dump(2) << "\n";
            else
                out << detail::oracle_text(reports, cfg.omega_m) << "overall: " << (report["pass"] ? "pass" : "FAIL")
                    << "\n";
            if (!common.out.empty()) {
                write_file_atomic(common.out, report.dump(2) + "\n");
                RunManifest m;
                m.subcommand = "oracle";
                m.config = cfg;
                m.outputs = {common.out};
                m.seed = common.seed;
                m.threads = threads;
                m.wall_clock_s = std::chrono::duration<double>(std::chrono::steady_clock::now()
                                                               - ctx.start).count();
                m.extra = {{"relax_q", relax_q}, {"random_points", random_points}};
                write_file_atomic(manifest_path_for(common.out), m.to_json().dump(2) + "\n");
            }
            return report["pass"].get<bool>() ? 0 : 2;
        }
    } catch (const ValidationError& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    } catch (const NumericalError& e) {
        err << "error: " << to_string(e.flag()) << ": " << e.what() << "\n";
        return 2;
    }
    return 1;
}

} // namespace omitlab::cli
