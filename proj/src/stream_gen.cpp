// Copyright (c) 2026 pmbank contributors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <random>

#include "pmb/stream.hpp"

namespace pmb {

FeatureGrid Stream::grid_at(std::size_t index) const {
    FeatureGrid grid;
    grid.height = height;
    grid.width = width;
    grid.depth = depth;
    grid.data = frames[index].data;
    return grid;
}

namespace {

/// Box-Muller over explicit mt19937_64 draws. std::normal_distribution's
/// algorithm is implementation-defined; this one is pinned.
class GaussianSource {
public:
    explicit GaussianSource(std::uint64_t seed) : rng_(seed) {}

    float next(float sigma) {
        if (have_spare_) {
            have_spare_ = false;
            return static_cast<float>(spare_ * sigma);
        }
        double u1, u2;
        do {
            u1 = uniform01();
        } while (u1 <= 0.0);
        u2 = uniform01();
        double radius = std::sqrt(-2.0 * std::log(u1));
        double angle = 2.0 * M_PI * u2;
        spare_ = radius * std::sin(angle);
        have_spare_ = true;
        return static_cast<float>(radius * std::cos(angle) * sigma);
    }

private:
    double uniform01() {
        return static_cast<double>(rng_() >> 11) * 0x1.0p-53;
    }

    std::mt19937_64 rng_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

}  // namespace

Stream gen_synthetic_stream(const StreamSpec& spec) {
    if (spec.base_fps == 0 || spec.duration_s == 0)
        throw InvalidSpec("stream spec: base_fps and duration_s must be positive");
    if (spec.height == 0 || spec.width == 0 || spec.depth == 0)
        throw InvalidSpec("stream spec: dimensions must be positive");
    if (spec.scene_count == 0)
        throw InvalidSpec("stream spec: scene_count must be positive");
    if (spec.noise_sigma < 0.0f || !std::isfinite(spec.noise_sigma))
        throw InvalidSpec("stream spec: noise_sigma must be a finite non-negative value");
    const std::uint64_t total_ticks = static_cast<std::uint64_t>(spec.duration_s) * spec.base_fps;
    if (spec.scene_count > total_ticks)
        throw InvalidSpec("stream spec: more scenes than frames");

    Stream stream;
    stream.base_fps = spec.base_fps;
    stream.height = spec.height;
    stream.width = spec.width;
    stream.depth = spec.depth;

    GaussianSource noise(spec.seed);

    // Scene archetypes first, then frame noise, in one fixed draw order.
    stream.scenes.reserve(spec.scene_count);
    for (std::uint32_t s = 0; s < spec.scene_count; ++s) {
        SceneAnnotation scene;
        scene.scene_id = s;
        scene.start_tick = total_ticks * s / spec.scene_count;
        scene.end_tick = total_ticks * (s + 1) / spec.scene_count;
        scene.archetype.resize(spec.depth);
        for (auto& v : scene.archetype)
            v = noise.next(1.0f);
        stream.scenes.push_back(std::move(scene));
    }

    const std::size_t grid_size = static_cast<std::size_t>(spec.height) * spec.width * spec.depth;
    stream.frames.reserve(total_ticks);
    std::size_t scene_index = 0;
    for (std::uint64_t tick = 0; tick < total_ticks; ++tick) {
        while (tick >= stream.scenes[scene_index].end_tick)
            ++scene_index;
        const auto& archetype = stream.scenes[scene_index].archetype;
        StreamFrame frame;
        frame.tick = tick;
        frame.data.resize(grid_size);
        for (std::size_t p = 0; p < grid_size; ++p)
            frame.data[p] = archetype[p % spec.depth] + noise.next(spec.noise_sigma);
        stream.frames.push_back(std::move(frame));
    }
    return stream;
}

}  // namespace pmb
