// SPDX-License-Identifier: Apache-2.0
//
// ghrsync - joint clock offset and RF phase calibration for distributed sensing networks
// Copyright (C) 2026 The ghrsync Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

#include "ghr/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

namespace ghr
{

namespace
{

constexpr const char *kSweepHeader =
    "sweep_value,method,trials_ok,trials_failed,rmse_clock_ns,rmse_phase_deg,crb_clock_ns,crb_phase_deg";
constexpr double kRadToDeg = 180.0 / kPi;

std::string fmt(const char *spec, double v)
{
    char buf[64];
    std::snprintf(buf, sizeof(buf), spec, v);
    return buf;
}

std::ofstream open_out(const std::filesystem::path &path)
{
    std::ofstream os(path, std::ios::binary);
    if (!os)
        throw std::runtime_error("cannot open " + path.string() + " for writing");
    return os;
}

void finish(std::ofstream &os, const std::filesystem::path &path)
{
    os.flush();
    if (!os)
        throw std::runtime_error("write failed: " + path.string());
}

std::string escape(const std::string &s)
{
    std::string out;
    for (char c : s)
    {
        switch (c)
        {
        case '<':
            out += "&lt;";
            break;
        case '>':
            out += "&gt;";
            break;
        case '&':
            out += "&amp;";
            break;
        default:
            out += c;
        }
    }
    return out;
}

struct Panel
{
    double x0, y0, w, h;
};

const char *series_colour(std::size_t i)
{
    static const char *palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};
    return palette[i % 6];
}

void draw_panel(std::ostringstream &svg, const Panel &pn, std::span<const SweepPoint> points, bool clock,
                const std::string &axis_label)
{
    auto value_of = [clock](const SweepPoint &p) -> std::optional<double> {
        if (clock)
            return p.rmse_clock_s ? std::optional<double>(*p.rmse_clock_s * 1e9) : std::nullopt;
        return p.rmse_phase_rad ? std::optional<double>(*p.rmse_phase_rad * kRadToDeg) : std::nullopt;
    };
    auto bound_of = [clock](const SweepPoint &p) { return clock ? p.crb_clock_s * 1e9 : p.crb_phase_rad * kRadToDeg; };
    auto usable = [](double v) { return std::isfinite(v) && v > 0.0; };

    double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin;
    double ymin = std::numeric_limits<double>::infinity(), ymax = -ymin;
    for (const auto &p : points)
    {
        xmin = std::min(xmin, p.value);
        xmax = std::max(xmax, p.value);
        for (double v : {value_of(p).value_or(0.0), bound_of(p)})
            if (usable(v))
            {
                ymin = std::min(ymin, v);
                ymax = std::max(ymax, v);
            }
    }
    if (!(xmax > xmin))
    {
        xmin = std::isfinite(xmin) ? xmin - 1.0 : 0.0;
        xmax = xmin + 2.0;
    }
    double lo = std::isfinite(ymin) ? std::floor(std::log10(ymin)) : -3.0;
    double hi = std::isfinite(ymax) ? std::ceil(std::log10(ymax)) : 0.0;
    if (hi <= lo)
        hi = lo + 1.0;

    auto px = [&](double x) { return pn.x0 + (x - xmin) / (xmax - xmin) * pn.w; };
    auto py = [&](double y) { return pn.y0 + pn.h - (std::log10(y) - lo) / (hi - lo) * pn.h; };

    svg << fmt("<rect x=\"%.1f\"", pn.x0) << fmt(" y=\"%.1f\"", pn.y0) << fmt(" width=\"%.1f\"", pn.w)
        << fmt(" height=\"%.1f\" fill=\"none\" stroke=\"#000\"/>\n", pn.h);
    for (int d = static_cast<int>(lo); d <= static_cast<int>(hi); ++d)
    {
        const double y = py(std::pow(10.0, d));
        svg << fmt("<line x1=\"%.1f\"", pn.x0) << fmt(" y1=\"%.1f\"", y) << fmt(" x2=\"%.1f\"", pn.x0 + pn.w)
            << fmt(" y2=\"%.1f\" stroke=\"#ddd\"/>\n", y);
        svg << fmt("<text x=\"%.1f\"", pn.x0 - 6) << fmt(" y=\"%.1f\" font-size=\"11\" text-anchor=\"end\">", y + 4)
            << "1e" << d << "</text>\n";
    }
    for (int i = 0; i <= 4; ++i)
    {
        const double x = xmin + (xmax - xmin) * i / 4.0;
        svg << fmt("<text x=\"%.1f\"", px(x)) << fmt(" y=\"%.1f\" font-size=\"11\" text-anchor=\"middle\">", pn.y0 + pn.h + 16)
            << fmt("%.4g", x) << "</text>\n";
    }
    svg << fmt("<text x=\"%.1f\"", pn.x0 + pn.w / 2) << fmt(" y=\"%.1f\" font-size=\"12\" text-anchor=\"middle\">", pn.y0 + pn.h + 34)
        << escape(axis_label) << "</text>\n";
    svg << fmt("<text x=\"%.1f\"", pn.x0) << fmt(" y=\"%.1f\" font-size=\"13\">", pn.y0 - 8)
        << (clock ? "clock RMSE [ns]" : "phase RMSE [deg]") << "</text>\n";

    // Bound overlay, taken from the first method at each sweep value.
    std::map<double, double> bound;
    for (const auto &p : points)
        if (!bound.count(p.value) && usable(bound_of(p)))
            bound[p.value] = bound_of(p);
    auto polyline = [&](const std::vector<std::pair<double, double>> &xy, const char *colour, bool dashed) {
        if (xy.empty())
            return;
        svg << "<polyline fill=\"none\" stroke=\"" << colour << "\" stroke-width=\"1.5\""
            << (dashed ? " stroke-dasharray=\"5,3\"" : "") << " points=\"";
        for (std::size_t i = 0; i < xy.size(); ++i)
            svg << (i ? " " : "") << fmt("%.2f", px(xy[i].first)) << "," << fmt("%.2f", py(xy[i].second));
        svg << "\"/>\n";
    };
    polyline(std::vector<std::pair<double, double>>(bound.begin(), bound.end()), "#000", true);

    std::vector<Method> methods;
    for (const auto &p : points)
        if (std::find(methods.begin(), methods.end(), p.method) == methods.end())
            methods.push_back(p.method);
    for (std::size_t mi = 0; mi < methods.size(); ++mi)
    {
        std::vector<std::pair<double, double>> xy;
        for (const auto &p : points)
            if (p.method == methods[mi])
                if (auto v = value_of(p); v && usable(*v))
                    xy.emplace_back(p.value, *v);
        polyline(xy, series_colour(mi), false);
        const double ly = pn.y0 + 14.0 + 14.0 * static_cast<double>(mi);
        svg << fmt("<text x=\"%.1f\"", pn.x0 + pn.w - 6) << fmt(" y=\"%.1f\" font-size=\"11\" text-anchor=\"end\"", ly)
            << " fill=\"" << series_colour(mi) << "\">" << to_string(methods[mi]) << "</text>\n";
    }
    if (!bound.empty())
    {
        const double ly = pn.y0 + 14.0 + 14.0 * static_cast<double>(methods.size());
        svg << fmt("<text x=\"%.1f\"", pn.x0 + pn.w - 6) << fmt(" y=\"%.1f\" font-size=\"11\" text-anchor=\"end\">", ly)
            << "sqrt(CRB)</text>\n";
    }
}

} // namespace

void write_sweep_csv(std::ostream &os, std::span<const SweepPoint> points)
{
    os << kSweepHeader << "\n";
    for (const auto &p : points)
    {
        os << fmt("%.10g", p.value) << ',' << to_string(p.method) << ',' << p.trials_ok << ',' << p.trials_failed
           << ',';
        if (p.rmse_clock_s)
            os << fmt("%.9e", *p.rmse_clock_s * 1e9);
        os << ',';
        if (p.rmse_phase_rad)
            os << fmt("%.9e", *p.rmse_phase_rad * kRadToDeg);
        os << ',' << fmt("%.9e", p.crb_clock_s * 1e9) << ',' << fmt("%.9e", p.crb_phase_rad * kRadToDeg) << "\n";
    }
}

std::vector<SweepPoint> read_sweep_csv(const std::filesystem::path &path)
{
    std::ifstream in(path);
    if (!in)
        throw std::runtime_error("cannot read " + path.string());
    std::string line;
    if (!std::getline(in, line) || line != kSweepHeader)
        throw std::runtime_error(path.string() + ": unexpected header");
    std::vector<SweepPoint> points;
    int lineno = 1;
    while (std::getline(in, line))
    {
        ++lineno;
        if (line.empty())
            continue;
        std::vector<std::string> f;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ','))
            f.push_back(cell);
        if (!line.empty() && line.back() == ',')
            f.emplace_back();
        if (f.size() != 8)
            throw std::runtime_error(path.string() + ":" + std::to_string(lineno) + ": expected 8 fields");
        try
        {
            SweepPoint p;
            p.value = std::stod(f[0]);
            p.method = parse_method(f[1]);
            p.trials_ok = std::stoi(f[2]);
            p.trials_failed = std::stoi(f[3]);
            if (!f[4].empty())
                p.rmse_clock_s = std::stod(f[4]) * 1e-9;
            if (!f[5].empty())
                p.rmse_phase_rad = std::stod(f[5]) / kRadToDeg;
            p.crb_clock_s = std::stod(f[6]) * 1e-9;
            p.crb_phase_rad = std::stod(f[7]) / kRadToDeg;
            points.push_back(p);
        }
        catch (const std::exception &e)
        {
            throw std::runtime_error(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
        }
    }
    return points;
}

std::string render_sweep_svg(std::span<const SweepPoint> points, const std::string &axis_label)
{
    std::ostringstream svg;
    svg << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
        << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"960\" height=\"420\" viewBox=\"0 0 960 420\" "
           "font-family=\"sans-serif\">\n"
        << "<rect width=\"960\" height=\"420\" fill=\"#fff\"/>\n";
    draw_panel(svg, Panel{70, 40, 370, 300}, points, true, axis_label);
    draw_panel(svg, Panel{560, 40, 370, 300}, points, false, axis_label);
    svg << "</svg>\n";
    return svg.str();
}

void write_trials_csv(std::ostream &os, std::span<const TrialRecord> records)
{
    os << "method,sweep_value,trial,node,dT_true_ns,dT_est_ns,gamma_true_rad,gamma_est_rad,cycle_slip,failed\n";
    for (const auto &r : records)
    {
        if (r.failed)
        {
            os << to_string(r.method) << ',' << fmt("%.10g", r.sweep_value) << ',' << r.trial << ",,,,,,,1\n";
            continue;
        }
        for (std::size_t m = 0; m < r.nodes.size(); ++m)
        {
            const auto &n = r.nodes[m];
            os << to_string(r.method) << ',' << fmt("%.10g", r.sweep_value) << ',' << r.trial << ',' << m + 2 << ','
               << fmt("%.9e", n.dT_true_s * 1e9) << ',' << fmt("%.9e", n.dT_est_s * 1e9) << ','
               << fmt("%.9f", n.gamma_true_rad) << ',' << fmt("%.9f", n.gamma_est_rad) << ','
               << (n.cycle_slip ? 1 : 0) << ",0\n";
        }
    }
}

void emit_report(const SweepResult &result, const std::filesystem::path &output_dir)
{
    std::filesystem::create_directories(output_dir);
    const auto csv_path = output_dir / "sweep.csv";
    auto csv = open_out(csv_path);
    write_sweep_csv(csv, result.points);
    finish(csv, csv_path);

    const std::string label(to_string(result.axis));
    const auto svg_path = output_dir / "sweep.svg";
    auto svg = open_out(svg_path);
    svg << render_sweep_svg(result.points, label);
    finish(svg, svg_path);

    const auto axis_path = output_dir / "sweep.axis";
    auto axis = open_out(axis_path);
    axis << label << "\n";
    finish(axis, axis_path);

    const auto trials_path = output_dir / "trials.csv";
    auto trials = open_out(trials_path);
    write_trials_csv(trials, result.records);
    finish(trials, trials_path);
}

void regenerate_report(const std::filesystem::path &dir)
{
    const auto points = read_sweep_csv(dir / "sweep.csv");
    std::string label = "sweep_value";
    if (std::ifstream axis(dir / "sweep.axis"); axis)
        std::getline(axis, label);
    const auto svg_path = dir / "sweep.svg";
    auto svg = open_out(svg_path);
    svg << render_sweep_svg(points, label);
    finish(svg, svg_path);
}

} // namespace ghr
