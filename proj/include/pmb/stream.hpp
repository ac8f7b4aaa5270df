// Copyright (c) 2026 pmbank contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pmb/core_types.hpp"

namespace pmb {

/// One annotated stream segment. [start_tick, end_tick) on the base grid;
/// segments tile the stream without overlap.
struct SceneAnnotation {
    std::uint32_t scene_id = 0;
    std::uint64_t start_tick = 0;
    std::uint64_t end_tick = 0;
    std::vector<float> archetype;  // D latent feature direction
};

struct StreamSpec {
    std::uint64_t seed = 0;
    std::uint32_t base_fps = 8;
    std::uint32_t duration_s = 32;
    std::uint32_t height = 16;
    std::uint32_t width = 16;
    std::uint32_t depth = 8;
    std::uint32_t scene_count = 4;
    float noise_sigma = 0.1f;
};

struct StreamFrame {
    std::uint64_t tick = 0;
    std::vector<float> data;  // H*W*D row-major
};

struct Stream {
    std::uint32_t base_fps = 0;
    std::uint32_t height = 0;
    std::uint32_t width = 0;
    std::uint32_t depth = 0;
    std::vector<SceneAnnotation> scenes;
    std::vector<StreamFrame> frames;

    std::uint64_t last_tick() const { return frames.empty() ? 0 : frames.back().tick; }
    FeatureGrid grid_at(std::size_t index) const;
};

/// Deterministic synthetic stream: per scene a random archetype vector,
/// each frame the archetype broadcast over H x W plus Gaussian noise.
/// Identical specs produce identical bytes (the Gaussian is an explicit
/// Box-Muller over mt19937_64, not the stdlib distribution).
Stream gen_synthetic_stream(const StreamSpec& spec);

/// Binary stream file, little-endian. Magic "PMBS", u32 version=1,
/// u32 base_fps, u32 H, u32 W, u32 D, u64 frame_count, u32 scene_count,
/// scene table (u32 id, u64 start, u64 end, D x f32), then frames as
/// (u64 tick, H*W*D x f32). Writes are atomic (temp file then rename).
void save_stream(const std::string& path, const Stream& stream);
Stream load_stream(const std::string& path);

}  // namespace pmb
