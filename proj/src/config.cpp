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

#include "ghr/config.hpp"
#include "ghr/regression.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/json_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace ghr
{

namespace pt = boost::property_tree;

namespace
{

std::string lower(std::string_view s)
{
    std::string out(s);
    for (auto &c : out)
        c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return out;
}

std::string trim(std::string_view s)
{
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos)
        return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(b, e - b + 1));
}

double to_double(const std::string &text, const std::string &where)
{
    const std::string t = lower(trim(text));
    if (t == "inf" || t == "+inf")
        return INFINITY;
    if (t == "-inf")
        return -INFINITY;
    try
    {
        std::size_t pos = 0;
        const double v = std::stod(t, &pos);
        if (pos != t.size())
            throw std::invalid_argument(t);
        return v;
    }
    catch (const std::exception &)
    {
        throw ConfigError(where + ": '" + text + "' is not a number");
    }
}

long long to_integer(const std::string &text, const std::string &where)
{
    const double v = to_double(text, where);
    if (!std::isfinite(v) || v != std::floor(v))
        throw ConfigError(where + ": '" + text + "' is not an integer");
    return static_cast<long long>(v);
}

bool to_bool(const std::string &text, const std::string &where)
{
    const std::string t = lower(trim(text));
    if (t == "true" || t == "1" || t == "yes" || t == "on")
        return true;
    if (t == "false" || t == "0" || t == "no" || t == "off")
        return false;
    throw ConfigError(where + ": '" + text + "' is not a boolean");
}

// One config section with a closed key vocabulary.
class Section
{
  public:
    Section(const pt::ptree *tree, std::string name, std::set<std::string> allowed)
        : tree_(tree), name_(std::move(name))
    {
        if (!tree_)
            return;
        for (const auto &[key, child] : *tree_)
            if (!allowed.count(key))
                throw ConfigError("[" + name_ + "] unknown key '" + key + "'");
    }

    std::optional<std::string> text(const std::string &key) const
    {
        if (!tree_)
            return std::nullopt;
        const auto child = tree_->get_child_optional(key);
        if (!child)
            return std::nullopt;
        return child->data();
    }

    template <class F>
    auto read(const std::string &key, F convert) const -> std::optional<decltype(convert(std::string{}, std::string{}))>
    {
        if (auto t = text(key))
            return convert(*t, where(key));
        return std::nullopt;
    }

    std::optional<double> number(const std::string &key) const { return read(key, to_double); }
    std::optional<long long> integer(const std::string &key) const { return read(key, to_integer); }
    std::optional<bool> boolean(const std::string &key) const { return read(key, to_bool); }

    // Comma list, start:step:stop range, or JSON array.
    std::optional<std::vector<std::string>> list(const std::string &key) const
    {
        if (!tree_)
            return std::nullopt;
        const auto child = tree_->get_child_optional(key);
        if (!child)
            return std::nullopt;
        std::vector<std::string> items;
        if (!child->empty())
        {
            for (const auto &[k, v] : *child)
                items.push_back(v.data());
            return items;
        }
        std::stringstream ss(child->data());
        std::string item;
        while (std::getline(ss, item, ','))
            if (!trim(item).empty())
                items.push_back(trim(item));
        return items;
    }

    std::string where(const std::string &key) const { return "[" + name_ + "] " + key; }

  private:
    const pt::ptree *tree_;
    std::string name_;
};

const pt::ptree *child(const pt::ptree &root, const std::string &name)
{
    auto c = root.get_child_optional(name);
    return c ? &*c : nullptr;
}

RealSeq parse_values(const std::vector<std::string> &items, const std::string &where)
{
    RealSeq out;
    if (items.size() == 1 && std::count(items[0].begin(), items[0].end(), ':') == 2)
    {
        const auto &s = items[0];
        const auto a = s.find(':');
        const auto b = s.find(':', a + 1);
        const double start = to_double(s.substr(0, a), where);
        const double step = to_double(s.substr(a + 1, b - a - 1), where);
        const double stop = to_double(s.substr(b + 1), where);
        if (!(step > 0.0) || stop < start)
            throw ConfigError(where + ": range needs step > 0 and stop >= start");
        const auto n = static_cast<long>(std::floor((stop - start) / step + 1e-9)) + 1;
        for (long i = 0; i < n; ++i)
            out.push_back(start + static_cast<double>(i) * step);
        return out;
    }
    for (const auto &it : items)
        out.push_back(to_double(it, where));
    return out;
}

ExperimentConfig from_tree(const pt::ptree &root)
{
    static const std::set<std::string> known_sections = {"experiment", "waveform", "scene", "processing", "sweep",
                                                         "twme"};
    for (const auto &[name, sub] : root)
    {
        const bool node_section = name.rfind("node", 0) == 0 && name.size() > 4 &&
                                  std::all_of(name.begin() + 4, name.end(), [](char c) { return std::isdigit(static_cast<unsigned char>(c)); });
        if (!known_sections.count(name) && !node_section)
            throw ConfigError("unknown section [" + name + "]");
    }

    ExperimentConfig cfg;

    const Section exp(child(root, "experiment"), "experiment",
                      {"name", "methods", "trials", "base_seed", "output_dir", "workers"});
    if (auto v = exp.text("name"))
        cfg.name = trim(*v);
    if (auto v = exp.list("methods"))
    {
        cfg.methods.clear();
        for (const auto &m : *v)
            cfg.methods.push_back(parse_method(m));
    }
    if (auto v = exp.integer("trials"))
        cfg.trials = static_cast<int>(*v);
    if (auto v = exp.integer("base_seed"))
        cfg.base_seed = static_cast<std::uint64_t>(*v);
    if (auto v = exp.text("output_dir"))
        cfg.output_dir = trim(*v);
    if (auto v = exp.integer("workers"))
        cfg.workers = static_cast<int>(*v);

    auto &wf = cfg.scene.waveform;
    const Section w(child(root, "waveform"), "waveform",
                    {"kind", "carrier_hz", "bandwidth_hz", "duration_s", "sample_rate_hz", "sfm_mod_rate_hz",
                     "fsk_symbol_rate_baud", "fsk_pattern_seed", "passband_faithful"});
    if (auto v = w.text("kind"))
        wf.kind = parse_waveform_kind(trim(*v));
    if (auto v = w.number("carrier_hz"))
        wf.carrier_hz = *v;
    if (auto v = w.number("bandwidth_hz"))
        wf.bandwidth_hz = *v;
    if (auto v = w.number("duration_s"))
        wf.duration_s = *v;
    if (auto v = w.number("sample_rate_hz"))
        wf.sample_rate_hz = *v;
    wf.sfm_mod_rate_hz = w.number("sfm_mod_rate_hz");
    wf.fsk_symbol_rate_baud = w.number("fsk_symbol_rate_baud");
    if (auto v = w.integer("fsk_pattern_seed"))
        wf.fsk_pattern_seed = static_cast<std::uint64_t>(*v);
    if (auto v = w.boolean("passband_faithful"))
        wf.passband_faithful = *v;

    const Section sc(child(root, "scene"), "scene", {"doa_deg", "snr_db", "seed", "extend_waveform"});
    if (auto v = sc.number("doa_deg"))
        cfg.scene.doa_rad = *v * kPi / 180.0;
    if (auto v = sc.number("snr_db"))
        cfg.scene.snr_db = *v;
    if (auto v = sc.integer("seed"))
        cfg.scene.seed = static_cast<std::uint64_t>(*v);
    if (auto v = sc.boolean("extend_waveform"))
        cfg.scene.extend_waveform = *v;

    // Empty INI sections are dropped by the parser, so a missing [nodeN] below the
    // highest one present means a node with default settings.
    int node_count = 0;
    for (const auto &[name, sub] : root)
        if (name.rfind("node", 0) == 0)
            node_count = std::max(node_count, std::stoi(name.substr(4)));
    if (node_count < 2)
        throw ConfigError("at least two nodes are required ([node1] may be omitted, [node2] must be present)");
    for (int m = 1; m <= node_count; ++m)
    {
        const std::string name = "node" + std::to_string(m);
        const Section n(child(root, name), name,
                        {"prop_delay_s", "clock_offset_s", "rf_phase_rad", "subarray_elems",
                         "elem_spacing_wavelengths"});
        NodeConfig node;
        if (auto v = n.number("prop_delay_s"))
            node.prop_delay_s = *v;
        if (auto v = n.number("clock_offset_s"))
            node.clock_offset_s = *v;
        if (auto v = n.number("rf_phase_rad"))
            node.rf_phase_rad = *v;
        if (auto v = n.integer("subarray_elems"))
            node.subarray_elems = static_cast<int>(*v);
        if (auto v = n.number("elem_spacing_wavelengths"))
            node.elem_spacing_wavelengths = *v;
        cfg.scene.nodes.push_back(node);
    }

    const Section pr(child(root, "processing"), "processing",
                     {"window", "trajectory", "order", "max_snapshots", "fsk_hop_guard_s"});
    if (auto v = pr.integer("window"))
        cfg.processing.window = static_cast<int>(*v);
    if (auto v = pr.text("trajectory"))
    {
        const auto t = lower(trim(*v));
        if (t == "observation")
            cfg.processing.source = TrajectorySource::Observation;
        else if (t == "tangent")
            cfg.processing.source = TrajectorySource::Tangent;
        else
            throw ConfigError(pr.where("trajectory") + ": expected 'observation' or 'tangent'");
    }
    if (auto v = pr.integer("order"))
        cfg.processing.order = static_cast<int>(*v);
    if (auto v = pr.integer("max_snapshots"))
    {
        if (*v < 3)
            throw ConfigError(pr.where("max_snapshots") + " must be >= 3");
        cfg.processing.max_snapshots = static_cast<std::size_t>(*v);
    }
    if (auto v = pr.number("fsk_hop_guard_s"))
        cfg.processing.fsk_hop_guard_s = *v;

    const Section sw(child(root, "sweep"), "sweep", {"axis", "values", "node"});
    if (auto v = sw.text("axis"))
        cfg.axis = parse_sweep_axis(trim(*v));
    if (auto v = sw.list("values"))
        cfg.values = parse_values(*v, sw.where("values"));
    if (auto v = sw.integer("node"))
        cfg.sweep_node = static_cast<int>(*v);

    const Section tw(child(root, "twme"), "twme",
                     {"exchanges", "queue_jitter_mean_s", "asymmetry", "propagation_s", "exchange_interval_s"});
    if (auto v = tw.integer("exchanges"))
        cfg.twme.exchanges = static_cast<int>(*v);
    if (auto v = tw.number("queue_jitter_mean_s"))
        cfg.twme.queue_jitter_mean_s = *v;
    if (auto v = tw.number("asymmetry"))
        cfg.twme.asymmetry = *v;
    if (auto v = tw.number("propagation_s"))
        cfg.twme.propagation_s = *v;
    if (auto v = tw.number("exchange_interval_s"))
        cfg.twme.exchange_interval_s = *v;

    validate(cfg);
    return cfg;
}

} // namespace

std::string_view to_string(Method method)
{
    switch (method)
    {
    case Method::Ghr:
        return "ghr";
    case Method::GhrFast:
        return "ghr_fast";
    case Method::Gcc:
        return "gcc";
    case Method::Twme:
        return "twme";
    }
    return "?";
}

Method parse_method(std::string_view name)
{
    const auto s = lower(trim(name));
    if (s == "ghr")
        return Method::Ghr;
    if (s == "ghr_fast")
        return Method::GhrFast;
    if (s == "gcc")
        return Method::Gcc;
    if (s == "twme")
        return Method::Twme;
    throw ConfigError("unknown method '" + std::string(name) + "' (expected ghr, ghr_fast, gcc or twme)");
}

std::string_view to_string(SweepAxis axis)
{
    switch (axis)
    {
    case SweepAxis::None:
        return "none";
    case SweepAxis::SnrDb:
        return "snr_db";
    case SweepAxis::ApertureM:
        return "aperture_m";
    case SweepAxis::SampleRate:
        return "sample_rate_hz";
    case SweepAxis::Duration:
        return "duration_s";
    case SweepAxis::Bandwidth:
        return "bandwidth_hz";
    }
    return "?";
}

SweepAxis parse_sweep_axis(std::string_view name)
{
    const auto s = lower(trim(name));
    for (auto a : {SweepAxis::None, SweepAxis::SnrDb, SweepAxis::ApertureM, SweepAxis::SampleRate, SweepAxis::Duration,
                   SweepAxis::Bandwidth})
        if (s == to_string(a))
            return a;
    throw ConfigError("unknown sweep axis '" + std::string(name) + "'");
}

void validate(const ExperimentConfig &cfg)
{
    if (cfg.trials < 1)
        throw ConfigError("trials must be >= 1");
    if (cfg.workers < 1)
        throw ConfigError("workers must be >= 1");
    if (cfg.methods.empty())
        throw ConfigError("at least one method is required");
    if (cfg.axis == SweepAxis::None && !cfg.values.empty())
        throw ConfigError("sweep values given without a sweep axis");
    if (cfg.axis != SweepAxis::None && cfg.values.empty())
        throw ConfigError("sweep axis '" + std::string(to_string(cfg.axis)) + "' has no values");
    if (cfg.sweep_node < 2 || cfg.sweep_node > static_cast<int>(cfg.scene.nodes.size()))
        throw ConfigError("sweep node must name a non-reference node");
    const auto &p = cfg.processing;
    if (p.window < 1 || p.window % 2 == 0)
        throw ConfigError("processing window must be odd and >= 1");
    if (p.order && (*p.order < 1 || *p.order > 4))
        throw ConfigError("processing order must be in 1..4");
    if (!(p.fsk_hop_guard_s >= 0.0))
        throw ConfigError("fsk_hop_guard_s must be >= 0");
    validate(cfg.twme);
    for (std::size_t i = 0; i < sweep_size(cfg); ++i)
    {
        const Scene s = scene_at(cfg, i);
        validate(s);
        common_window(s);
    }
}

std::size_t sweep_size(const ExperimentConfig &cfg)
{
    return cfg.axis == SweepAxis::None ? 1 : cfg.values.size();
}

Scene scene_at(const ExperimentConfig &cfg, std::size_t index)
{
    Scene s = cfg.scene;
    if (cfg.axis == SweepAxis::None)
        return s;
    if (index >= cfg.values.size())
        throw DomainError("sweep index out of range");
    const double v = cfg.values[index];
    switch (cfg.axis)
    {
    case SweepAxis::SnrDb:
        s.snr_db = v;
        break;
    case SweepAxis::ApertureM:
        s.nodes[static_cast<std::size_t>(cfg.sweep_node - 1)].prop_delay_s += v / kSpeedOfLight;
        break;
    case SweepAxis::SampleRate:
        s.waveform.sample_rate_hz = v;
        break;
    case SweepAxis::Duration:
        s.waveform.duration_s = v;
        break;
    case SweepAxis::Bandwidth:
        s.waveform.bandwidth_hz = v;
        break;
    case SweepAxis::None:
        break;
    }
    return s;
}

ExperimentConfig parse_config(std::string_view text, bool json)
{
    pt::ptree root;
    std::istringstream in{std::string(text)};
    try
    {
        if (json)
            pt::read_json(in, root);
        else
            pt::read_ini(in, root);
    }
    catch (const pt::file_parser_error &e)
    {
        throw ConfigError(std::string("config parse error: ") + e.message() + " (line " + std::to_string(e.line()) + ")");
    }
    return from_tree(root);
}

ExperimentConfig load_config(const std::filesystem::path &path)
{
    std::ifstream in(path);
    if (!in)
        throw ConfigError("cannot read config file " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    const std::string text = ss.str();
    const auto first = text.find_first_not_of(" \t\r\n");
    const bool json = lower(path.extension().string()) == ".json" || (first != std::string::npos && text[first] == '{');
    try
    {
        return parse_config(text, json);
    }
    catch (const ConfigError &e)
    {
        throw ConfigError(path.string() + ": " + e.what());
    }
}

} // namespace ghr
