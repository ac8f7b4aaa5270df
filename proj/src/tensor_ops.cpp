// Copyright (c) 2026 pmbank contributors
// SPDX-License-Identifier: Apache-2.0

#include "pmb/tensor_ops.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace pmb {

FeatureGrid avg_pool2d(const FeatureGrid& grid, std::uint32_t out_h, std::uint32_t out_w) {
    if (out_h == 0 || out_w == 0 || grid.height % out_h != 0 || grid.width % out_w != 0) {
        throw NonDivisibleShape("avg_pool2d: " + std::to_string(grid.height) + "x" + std::to_string(grid.width) +
                                " not divisible by " + std::to_string(out_h) + "x" + std::to_string(out_w));
    }
    const std::uint32_t block_h = grid.height / out_h;
    const std::uint32_t block_w = grid.width / out_w;
    const double inv_block = 1.0 / (static_cast<double>(block_h) * block_w);

    FeatureGrid out;
    out.height = out_h;
    out.width = out_w;
    out.depth = grid.depth;
    out.data.assign(out.size(), 0.0f);

    for (std::uint32_t a = 0; a < out_h; ++a) {
        for (std::uint32_t b = 0; b < out_w; ++b) {
            for (std::uint32_t d = 0; d < grid.depth; ++d) {
                double sum = 0.0;
                for (std::uint32_t h = a * block_h; h < (a + 1) * block_h; ++h)
                    for (std::uint32_t w = b * block_w; w < (b + 1) * block_w; ++w)
                        sum += grid.at(h, w, d);
                out.at(a, b, d) = static_cast<float>(sum * inv_block);
            }
        }
    }
    return out;
}

PooledVector global_avg_pool(const FeatureGrid& grid) {
    const double inv_count = 1.0 / static_cast<double>(grid.tokens());
    PooledVector pooled;
    pooled.values.assign(grid.depth, 0.0f);
    std::vector<double> sums(grid.depth, 0.0);
    const std::size_t positions = grid.tokens();
    for (std::size_t p = 0; p < positions; ++p)
        for (std::uint32_t d = 0; d < grid.depth; ++d)
            sums[d] += grid.data[p * grid.depth + d];
    for (std::uint32_t d = 0; d < grid.depth; ++d)
        pooled.values[d] = static_cast<float>(sums[d] * inv_count);
    return pooled;
}

std::optional<float> cosine_similarity(const PooledVector& a, const PooledVector& b) {
    if (a.depth() != b.depth())
        throw ShapeMismatch("cosine_similarity: depth " + std::to_string(a.depth()) + " vs " +
                            std::to_string(b.depth()));
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t d = 0; d < a.values.size(); ++d) {
        dot += static_cast<double>(a.values[d]) * b.values[d];
        na += static_cast<double>(a.values[d]) * a.values[d];
        nb += static_cast<double>(b.values[d]) * b.values[d];
    }
    if (na == 0.0 || nb == 0.0)
        return std::nullopt;
    double sim = dot / (std::sqrt(na) * std::sqrt(nb));
    return static_cast<float>(std::clamp(sim, -1.0, 1.0));
}

std::optional<float> pooled_pair_similarity(const Frame& a, const Frame& b) {
    return cosine_similarity(global_avg_pool(a.grid), global_avg_pool(b.grid));
}

}  // namespace pmb
