#pragma once

// Output files: CSV tables, run manifests and static SVG plots. Every file is
// written to a temporary sibling first and renamed into place.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "omitlab/config_json.hpp"
#include "omitlab/delay.hpp"
#include "omitlab/errors.hpp"
#include "omitlab/model.hpp"
#include "omitlab/sweep.hpp"

namespace omitlab {

inline void write_file_atomic(const std::string& path, const std::string& contents) {
    namespace fs = std::filesystem;
    const fs::path target(path);
    fs::path tmp = target;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out)
            throw ValidationError("cannot open '" + tmp.string() + "' for writing");
        out << contents;
        if (!out.flush())
            throw ValidationError("failed writing '" + tmp.string() + "'");
    }
    std::error_code ec;
    fs::rename(tmp, target, ec);
    if (ec)
        throw ValidationError("cannot move output into place at '" + path + "': " + ec.message());
}

/// Fixed formatting so identical inputs give identical bytes.
inline std::string fmt_num(double v) {
    if (std::isnan(v))
        return "nan";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.15g", v);
    return buf;
}

inline constexpr double kSecondsToMicro = 1e6;

inline std::string spectrum_csv(const SpectrumSeries& s) {
    std::string out = "delta_over_omega_m,nu_p,u_p,phase_rad,tau_g_us,flag\n";
    for (std::size_t k = 0; k < s.size(); ++k) {
        out += fmt_num(s.delta_grid[k] / s.omega_m);
        out += ',';
        out += fmt_num(s.nu_p[k]);
        out += ',';
        out += fmt_num(s.u_p[k]);
        out += ',';
        out += fmt_num(s.phase_unwrapped[k]);
        out += ',';
        out += fmt_num(s.tau_g[k] * kSecondsToMicro);
        out += ',';
        out += to_string(s.flags[k]);
        out += '\n';
    }
    return out;
}

inline std::string delay_map_csv(const DelayMap& map) {
    std::string out = "P_mW,L,tau_g_us,classification,flag\n";
    for (std::size_t r = 0; r < map.P_grid.size(); ++r) {
        for (std::size_t c = 0; c < map.L_grid.size(); ++c) {
            const DelayCell& cell = map.at(r, c);
            out += fmt_num(map.P_grid[r] * 1e3);
            out += ',';
            out += std::to_string(map.L_grid[c]);
            out += ',';
            out += fmt_num(cell.tau_g * kSecondsToMicro);
            out += ',';
            out += cell.flag == Flag::Ok ? std::string(to_string(cell.classification)) : "";
            out += ',';
            out += to_string(cell.flag);
            out += '\n';
        }
    }
    return out;
}

/// Long format; Delta and kappa in units of omega_m, P in mW, tau_g in us.
inline std::string map2d_csv(const Map2D& map, double omega_m, bool value_is_delay) {
    auto axis_value = [&](AxisName name, double v) {
        switch (name) {
        case AxisName::Delta:
        case AxisName::Kappa: return v / omega_m;
        case AxisName::P: return v * 1e3;
        default: return v;
        }
    };
    std::string out = "axis1,axis2,value,flag\n";
    const std::size_t n2 = map.axis2.grid.size();
    for (std::size_t r = 0; r < map.axis1.grid.size(); ++r) {
        for (std::size_t c = 0; c < n2; ++c) {
            const std::size_t k = r * n2 + c;
            out += fmt_num(axis_value(map.axis1.name, map.axis1.grid[r]));
            out += ',';
            out += fmt_num(axis_value(map.axis2.name, map.axis2.grid[c]));
            out += ',';
            out += fmt_num(value_is_delay ? map.values[k] * kSecondsToMicro : map.values[k]);
            out += ',';
            out += to_string(map.flags[k]);
            out += '\n';
        }
    }
    return out;
}

struct RunManifest {
    std::string subcommand;
    PhysicalConfig config;
    std::vector<std::string> outputs;
    std::string tool_version = OMITLAB_VERSION;
    std::uint64_t seed = 42;
    unsigned threads = 1;
    double wall_clock_s = 0.0;
    json extra = json::object();

    json to_json() const {
        json j;
        j["tool"] = "omitlab";
        j["tool_version"] = tool_version;
        j["subcommand"] = subcommand;
        j["config"] = config_to_json(config);
        j["config_fingerprint"] = fingerprint_hex(config);
        j["outputs"] = outputs;
        j["seed"] = seed;
        j["threads"] = threads;
        j["wall_clock_s"] = wall_clock_s;
        j["extra"] = extra;
        return j;
    }
};

inline std::string manifest_path_for(const std::string& output) { return output + ".manifest.json"; }

// --- SVG --------------------------------------------------------------------

struct SvgSeries {
    std::string label;
    std::vector<double> x;
    std::vector<double> y;
    std::string colour = "#1f77b4";
};

inline std::string svg_line_plot(const std::vector<SvgSeries>& series, const std::string& title,
                                 const std::string& xlabel, const std::string& ylabel) {
    constexpr double W = 720, H = 440, left = 70, right = 20, top = 40, bottom = 50;
    double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin, ymin = xmin, ymax = -xmin;
    for (const auto& s : series)
        for (std::size_t k = 0; k < s.x.size(); ++k) {
            if (!std::isfinite(s.x[k]) || !std::isfinite(s.y[k]))
                continue;
            xmin = std::min(xmin, s.x[k]);
            xmax = std::max(xmax, s.x[k]);
            ymin = std::min(ymin, s.y[k]);
            ymax = std::max(ymax, s.y[k]);
        }
    if (!(xmax > xmin)) {
        xmin -= 1;
        xmax += 1;
    }
    if (!(ymax > ymin)) {
        ymin -= 1;
        ymax += 1;
    }
    auto px = [&](double x) { return left + (x - xmin) / (xmax - xmin) * (W - left - right); };
    auto py = [&](double y) { return H - bottom - (y - ymin) / (ymax - ymin) * (H - top - bottom); };

    std::ostringstream o;
    o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
      << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    o << "<text x=\"" << W / 2 << "\" y=\"20\" text-anchor=\"middle\">" << title << "</text>\n";
    o << "<rect x=\"" << left << "\" y=\"" << top << "\" width=\"" << W - left - right
      << "\" height=\"" << H - top - bottom << "\" fill=\"none\" stroke=\"black\"/>\n";
    for (int t = 0; t <= 4; ++t) {
        const double xv = xmin + (xmax - xmin) * t / 4.0, yv = ymin + (ymax - ymin) * t / 4.0;
        o << "<text x=\"" << px(xv) << "\" y=\"" << H - bottom + 16 << "\" text-anchor=\"middle\">"
          << fmt_num(std::round(xv * 1e4) / 1e4) << "</text>\n";
        o << "<text x=\"" << left - 6 << "\" y=\"" << py(yv) + 4 << "\" text-anchor=\"end\">"
          << fmt_num(std::round(yv * 1e4) / 1e4) << "</text>\n";
    }
    o << "<text x=\"" << W / 2 << "\" y=\"" << H - 10 << "\" text-anchor=\"middle\">" << xlabel
      << "</text>\n";
    o << "<text x=\"16\" y=\"" << H / 2 << "\" transform=\"rotate(-90 16 " << H / 2
      << ")\" text-anchor=\"middle\">" << ylabel << "</text>\n";
    int legend = 0;
    for (const auto& s : series) {
        o << "<polyline fill=\"none\" stroke=\"" << s.colour << "\" stroke-width=\"1.2\" points=\"";
        for (std::size_t k = 0; k < s.x.size(); ++k)
            if (std::isfinite(s.x[k]) && std::isfinite(s.y[k]))
                o << px(s.x[k]) << ',' << py(s.y[k]) << ' ';
        o << "\"/>\n";
        o << "<text x=\"" << W - right - 8 << "\" y=\"" << top + 16 + 14 * legend
          << "\" text-anchor=\"end\" fill=\"" << s.colour << "\">" << s.label << "</text>\n";
        ++legend;
    }
    o << "</svg>\n";
    return o.str();
}

/// Blue-white-red heat map of a row-major matrix (rows along y).
inline std::string svg_heat_map(const std::vector<double>& values, std::size_t rows,
                                std::size_t cols, const std::string& title,
                                const std::string& xlabel, const std::string& ylabel) {
    constexpr double W = 640, H = 560, left = 70, top = 40, cellsW = 520, cellsH = 460;
    double vmax = 0.0;
    for (double v : values)
        if (std::isfinite(v))
            vmax = std::max(vmax, std::abs(v));
    if (vmax == 0.0)
        vmax = 1.0;
    std::ostringstream o;
    o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
      << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    o << "<text x=\"" << W / 2 << "\" y=\"20\" text-anchor=\"middle\">" << title
      << " (|max| = " << fmt_num(vmax) << ")</text>\n";
    const double cw = cellsW / static_cast<double>(cols), ch = cellsH / static_cast<double>(rows);
    for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < cols; ++c) {
            const double v = values[r * cols + c];
            std::string fill = "#808080";
            if (std::isfinite(v)) {
                const double s = std::clamp(v / vmax, -1.0, 1.0);
                const int hi = 255, lo = static_cast<int>(255 * (1.0 - std::abs(s)));
                char buf[8];
                if (s >= 0)
                    std::snprintf(buf, sizeof buf, "#%02x%02x%02x", hi, lo, lo);
                else
                    std::snprintf(buf, sizeof buf, "#%02x%02x%02x", lo, lo, hi);
                fill = buf;
            }
            o << "<rect x=\"" << left + c * cw << "\" y=\"" << top + (rows - 1 - r) * ch
              << "\" width=\"" << cw + 0.5 << "\" height=\"" << ch + 0.5 << "\" fill=\"" << fill
              << "\"/>\n";
        }
    o << "<text x=\"" << left + cellsW / 2 << "\" y=\"" << top + cellsH + 30
      << "\" text-anchor=\"middle\">" << xlabel << "</text>\n";
    o << "<text x=\"20\" y=\"" << top + cellsH / 2 << "\" transform=\"rotate(-90 20 "
      << top + cellsH / 2 << ")\" text-anchor=\"middle\">" << ylabel << "</text>\n";
    o << "</svg>\n";
    return o.str();
}

} // namespace omitlab
