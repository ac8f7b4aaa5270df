// Copyright (c) 2026 pmbank contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "pmb/errors.hpp"

namespace pmb {

/// A point on the base sampling grid. All equality and ordering is on integer
/// ticks; seconds() is for display only.
struct Timestamp {
    std::uint64_t tick = 0;
    std::uint32_t base_fps = 1;

    double seconds() const { return static_cast<double>(tick) / base_fps; }

    friend bool operator==(const Timestamp& a, const Timestamp& b) { return a.tick == b.tick; }
    friend bool operator<(const Timestamp& a, const Timestamp& b) { return a.tick < b.tick; }
};

/// One frame's H x W x D feature map, row-major (h, then w, then d).
struct FeatureGrid {
    std::uint32_t height = 0;
    std::uint32_t width = 0;
    std::uint32_t depth = 0;
    std::vector<float> data;

    std::size_t tokens() const { return static_cast<std::size_t>(height) * width; }
    std::size_t size() const { return tokens() * depth; }

    float at(std::uint32_t h, std::uint32_t w, std::uint32_t d) const {
        return data[(static_cast<std::size_t>(h) * width + w) * depth + d];
    }
    float& at(std::uint32_t h, std::uint32_t w, std::uint32_t d) {
        return data[(static_cast<std::size_t>(h) * width + w) * depth + d];
    }

    /// Dimensions positive, data length matches, every value finite.
    bool valid() const;
};

enum class FrameOrigin : std::uint8_t { StreamSampled, DownWritten };

struct Frame {
    Timestamp ts;
    FeatureGrid grid;
    std::uint32_t layer = 1;  // 1-based
    FrameOrigin origin = FrameOrigin::StreamSampled;
};

struct LayerConfig {
    std::uint32_t index = 1;  // 1..n
    std::uint32_t rate_fps = 1;
    std::uint32_t capacity = 1;  // frames
    std::uint32_t res_h = 1;
    std::uint32_t res_w = 1;

    std::size_t tokens_per_frame() const { return static_cast<std::size_t>(res_h) * res_w; }
};

struct BankConfig {
    std::vector<LayerConfig> layers;
    std::uint32_t beta = 2;
    std::uint32_t base_fps = 8;
    std::uint32_t depth = 1;

    std::size_t layer_count() const { return layers.size(); }
    std::size_t total_token_budget() const;

    /// The inference-time online configuration: capacities (2, 2, 12),
    /// resolutions 16x16 / 8x8 / 4x4, rates 1 / 2 / 8 fps, 832 tokens total.
    static BankConfig online_default(std::uint32_t depth = 8, std::uint32_t base_fps = 8);
    /// The offline configuration: capacities (24, 24, 144), 9984 tokens total.
    static BankConfig offline_default(std::uint32_t depth = 8, std::uint32_t base_fps = 8);
};

struct ValidationReport {
    bool ok = false;
    std::vector<std::string> violations;
    std::size_t total_tokens = 0;          // sum of C_i * tokens_i
    std::vector<std::size_t> layer_tokens;  // per-layer C_i * tokens_i
};

/// Pure structural validation. The report always carries the budget
/// arithmetic, even when invariants fail.
ValidationReport validate_config(const BankConfig& cfg);

/// Flat key=value config text. Keys: base_fps, beta, depth,
/// layer.<i>.rate_fps, layer.<i>.capacity, layer.<i>.res_h, layer.<i>.res_w.
/// '#' starts a comment. Layer indices must form 1..n.
BankConfig parse_config(std::istream& in);
BankConfig load_config(const std::string& path);

/// Canonical key=value rendering; parse(render(cfg)) == cfg.
std::string render_config(const BankConfig& cfg);

/// FNV-1a hex digest of the canonical rendering, embedded in reports.
std::string config_digest(const BankConfig& cfg);

}  // namespace pmb
