// Copyright (c) 2026 pmbank contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <optional>
#include <vector>

#include "pmb/core_types.hpp"

namespace pmb {

/// Per-channel spatial mean of a frame.
struct PooledVector {
    std::vector<float> values;

    std::size_t depth() const { return values.size(); }
};

/// Block average pooling. Requires out_h | H and out_w | W; throws
/// NonDivisibleShape otherwise. Accumulates in double, row-major order,
/// so results are bit-stable for a given platform.
FeatureGrid avg_pool2d(const FeatureGrid& grid, std::uint32_t out_h, std::uint32_t out_w);

/// Spatial mean per channel; equals avg_pool2d(grid, 1, 1) flattened.
PooledVector global_avg_pool(const FeatureGrid& grid);

/// dot(a,b) / (|a| * |b|), clamped into [-1, 1]. nullopt when either norm
/// is zero; the caller decides how a zero vector ranks.
std::optional<float> cosine_similarity(const PooledVector& a, const PooledVector& b);

/// Cosine similarity of the two frames' global spatial means.
std::optional<float> pooled_pair_similarity(const Frame& a, const Frame& b);

}  // namespace pmb
