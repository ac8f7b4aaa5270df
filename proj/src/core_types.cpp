// Copyright (c) 2026 pmbank contributors
// SPDX-License-Identifier: Apache-2.0

#include "pmb/core_types.hpp"

#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

namespace pmb {

bool FeatureGrid::valid() const {
    if (height == 0 || width == 0 || depth == 0)
        return false;
    if (data.size() != size())
        return false;
    for (float v : data) {
        if (!std::isfinite(v))
            return false;
    }
    return true;
}

std::size_t BankConfig::total_token_budget() const {
    std::size_t total = 0;
    for (const auto& layer : layers)
        total += static_cast<std::size_t>(layer.capacity) * layer.tokens_per_frame();
    return total;
}

BankConfig BankConfig::online_default(std::uint32_t depth, std::uint32_t base_fps) {
    BankConfig cfg;
    cfg.beta = 2;
    cfg.base_fps = base_fps;
    cfg.depth = depth;
    cfg.layers = {
        {1, 1, 2, 16, 16},
        {2, 2, 2, 8, 8},
        {3, 8, 12, 4, 4},
    };
    return cfg;
}

BankConfig BankConfig::offline_default(std::uint32_t depth, std::uint32_t base_fps) {
    BankConfig cfg = online_default(depth, base_fps);
    cfg.layers[0].capacity = 24;
    cfg.layers[1].capacity = 24;
    cfg.layers[2].capacity = 144;
    return cfg;
}

ValidationReport validate_config(const BankConfig& cfg) {
    ValidationReport report;
    auto fail = [&](const std::string& msg) { report.violations.push_back(msg); };

    if (cfg.layers.empty())
        fail("no layers configured");
    if (cfg.beta < 2)
        fail("beta must be >= 2");
    if (cfg.base_fps == 0)
        fail("base_fps must be positive");
    if (cfg.depth == 0)
        fail("depth must be positive");

    for (std::size_t i = 0; i < cfg.layers.size(); ++i) {
        const auto& layer = cfg.layers[i];
        std::string prefix = "layer " + std::to_string(i + 1) + ": ";
        if (layer.index != i + 1)
            fail(prefix + "index must be " + std::to_string(i + 1));
        if (layer.rate_fps == 0)
            fail(prefix + "rate_fps must be positive");
        if (layer.capacity == 0)
            fail(prefix + "capacity must be positive");
        if (layer.res_h == 0 || layer.res_w == 0)
            fail(prefix + "resolution must be positive");
        if (cfg.base_fps > 0 && layer.rate_fps < cfg.base_fps && cfg.base_fps % layer.rate_fps != 0)
            fail(prefix + "rate_fps must divide base_fps or exceed it");
        report.layer_tokens.push_back(static_cast<std::size_t>(layer.capacity) * layer.tokens_per_frame());
    }

    for (std::size_t i = 1; i < cfg.layers.size(); ++i) {
        if (cfg.layers[i].rate_fps <= cfg.layers[i - 1].rate_fps) {
            fail("rates not strictly increasing");
            break;
        }
    }
    for (std::size_t i = 1; i < cfg.layers.size(); ++i) {
        if (cfg.layers[i].tokens_per_frame() >= cfg.layers[i - 1].tokens_per_frame()) {
            fail("resolutions not strictly decreasing");
            break;
        }
    }

    // Res_i must equal Res_1 scaled by beta^(i-1) per axis, exactly.
    if (!cfg.layers.empty() && cfg.beta >= 2) {
        const auto& first = cfg.layers.front();
        std::uint64_t scale = 1;
        for (std::size_t i = 1; i < cfg.layers.size(); ++i) {
            scale *= cfg.beta;
            const auto& layer = cfg.layers[i];
            if (static_cast<std::uint64_t>(layer.res_h) * scale != first.res_h ||
                static_cast<std::uint64_t>(layer.res_w) * scale != first.res_w) {
                fail("layer " + std::to_string(i + 1) + ": resolution is not Res_1 / beta^(i-1)");
            }
        }
    }

    report.total_tokens = cfg.total_token_budget();
    report.ok = report.violations.empty();
    return report;
}

namespace {

std::uint64_t parse_u64(const std::string& key, const std::string& value) {
    try {
        std::size_t pos = 0;
        unsigned long long v = std::stoull(value, &pos);
        if (pos != value.size())
            throw std::invalid_argument(value);
        return v;
    } catch (const std::exception&) {
        throw ConfigParseError("bad value for '" + key + "': '" + value + "'");
    }
}

std::uint32_t parse_u32(const std::string& key, const std::string& value) {
    std::uint64_t v = parse_u64(key, value);
    if (v > 0xffffffffull)
        throw ConfigParseError("value out of range for '" + key + "'");
    return static_cast<std::uint32_t>(v);
}

std::string trim(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos)
        return "";
    std::size_t b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

}  // namespace

BankConfig parse_config(std::istream& in) {
    BankConfig cfg;
    std::map<std::uint32_t, LayerConfig> layers;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::size_t hash = line.find('#');
        if (hash != std::string::npos)
            line = line.substr(0, hash);
        line = trim(line);
        if (line.empty())
            continue;
        std::size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigParseError("line " + std::to_string(lineno) + ": expected key = value");
        std::string key = trim(line.substr(0, eq));
        std::string value = trim(line.substr(eq + 1));

        if (key == "base_fps") {
            cfg.base_fps = parse_u32(key, value);
        } else if (key == "beta") {
            cfg.beta = parse_u32(key, value);
        } else if (key == "depth") {
            cfg.depth = parse_u32(key, value);
        } else if (key.rfind("layer.", 0) == 0) {
            std::size_t dot = key.find('.', 6);
            if (dot == std::string::npos)
                throw ConfigParseError("line " + std::to_string(lineno) + ": malformed layer key '" + key + "'");
            std::uint32_t index = parse_u32(key, key.substr(6, dot - 6));
            std::string field = key.substr(dot + 1);
            LayerConfig& layer = layers[index];
            layer.index = index;
            if (field == "rate_fps")
                layer.rate_fps = parse_u32(key, value);
            else if (field == "capacity")
                layer.capacity = parse_u32(key, value);
            else if (field == "res_h")
                layer.res_h = parse_u32(key, value);
            else if (field == "res_w")
                layer.res_w = parse_u32(key, value);
            else
                throw ConfigParseError("line " + std::to_string(lineno) + ": unknown layer field '" + field + "'");
        } else {
            throw ConfigParseError("line " + std::to_string(lineno) + ": unknown key '" + key + "'");
        }
    }

    std::uint32_t expected = 1;
    for (const auto& [index, layer] : layers) {
        if (index != expected)
            throw ConfigParseError("layer indices must form 1..n (missing layer " + std::to_string(expected) + ")");
        cfg.layers.push_back(layer);
        ++expected;
    }
    return cfg;
}

BankConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw IoError("cannot open config file: " + path);
    return parse_config(in);
}

std::string render_config(const BankConfig& cfg) {
    std::ostringstream out;
    out << "base_fps = " << cfg.base_fps << "\n";
    out << "beta = " << cfg.beta << "\n";
    out << "depth = " << cfg.depth << "\n";
    for (const auto& layer : cfg.layers) {
        std::string p = "layer." + std::to_string(layer.index) + ".";
        out << p << "rate_fps = " << layer.rate_fps << "\n";
        out << p << "capacity = " << layer.capacity << "\n";
        out << p << "res_h = " << layer.res_h << "\n";
        out << p << "res_w = " << layer.res_w << "\n";
    }
    return out.str();
}

std::string config_digest(const BankConfig& cfg) {
    std::string text = render_config(cfg);
    std::uint64_t hash = 0xcbf29ce484222325ull;
    for (unsigned char c : text) {
        hash ^= c;
        hash *= 0x100000001b3ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(hash));
    return buf;
}

}  // namespace pmb
