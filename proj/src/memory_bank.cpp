// Copyright (c) 2026 pmbank contributors
// SPDX-License-Identifier: Apache-2.0

#include "pmb/memory_bank.hpp"

#include <algorithm>
#include <string>

#include "pmb/tensor_ops.hpp"

namespace pmb {

PyramidMemoryBank::PyramidMemoryBank(BankConfig cfg) : config_(std::move(cfg)) {
    ValidationReport report = validate_config(config_);
    if (!report.ok) {
        std::string msg = "invalid bank config:";
        for (const auto& v : report.violations)
            msg += " [" + v + "]";
        throw InvalidConfig(msg);
    }
    layers_.reserve(config_.layers.size());
    for (const auto& layer_cfg : config_.layers)
        layers_.push_back(MemoryLayer{layer_cfg, {}});
}

std::optional<std::uint32_t> PyramidMemoryBank::route_frame(const BankConfig& cfg, Timestamp ts) {
    for (const auto& layer : cfg.layers) {
        std::uint64_t effective_rate = std::min<std::uint64_t>(layer.rate_fps, cfg.base_fps);
        if ((ts.tick * effective_rate) % cfg.base_fps == 0)
            return layer.index;
    }
    return std::nullopt;
}

std::vector<SyncEvent> PyramidMemoryBank::ingest(Timestamp ts, const FeatureGrid& grid) {
    if (ts.base_fps != config_.base_fps)
        throw NonMonotonicTimestamp("ingest: timestamp base_fps " + std::to_string(ts.base_fps) +
                                    " does not match bank base_fps " + std::to_string(config_.base_fps));
    if (last_tick_ && ts.tick <= *last_tick_)
        throw NonMonotonicTimestamp("ingest: tick " + std::to_string(ts.tick) + " not after " +
                                    std::to_string(*last_tick_));
    const LayerConfig& first = config_.layers.front();
    if (grid.height != first.res_h || grid.width != first.res_w || grid.depth != config_.depth)
        throw ShapeMismatch("ingest: grid must be at layer-1 resolution " + std::to_string(first.res_h) + "x" +
                            std::to_string(first.res_w) + "x" + std::to_string(config_.depth));

    last_tick_ = ts.tick;
    ++ingest_count_;

    auto dest = route_frame(config_, ts);
    if (!dest) {
        ++dropped_count_;
        return {};
    }

    MemoryLayer& layer = layers_[*dest - 1];
    Frame frame;
    frame.ts = ts;
    frame.layer = *dest;
    frame.origin = FrameOrigin::StreamSampled;
    frame.grid = (*dest == 1) ? grid : avg_pool2d(grid, layer.config.res_h, layer.config.res_w);
    layer.frames.push_back(std::move(frame));

    // Resolve overflow shallowest-first; a down-write may overflow the next
    // layer within the same call.
    std::vector<SyncEvent> events;
    std::uint32_t depth = 0;
    for (;;) {
        std::size_t over = layers_.size();
        for (std::size_t i = 0; i < layers_.size(); ++i) {
            if (layers_[i].frames.size() > layers_[i].config.capacity) {
                over = i;
                break;
            }
        }
        if (over == layers_.size())
            break;
        events.push_back(evict_and_downwrite(over, ++depth));
    }
    sync_log_.insert(sync_log_.end(), events.begin(), events.end());
    return events;
}

SyncEvent PyramidMemoryBank::evict_and_downwrite(std::size_t layer_index, std::uint32_t cascade_depth) {
    MemoryLayer& layer = layers_[layer_index];
    auto& frames = layer.frames;

    std::vector<PooledVector> pooled;
    pooled.reserve(frames.size());
    for (const auto& frame : frames)
        pooled.push_back(global_avg_pool(frame.grid));

    // Argmax over adjacent pairs; ZeroVector ranks below everything; ties go
    // to the earliest pair.
    std::size_t best = 0;
    std::optional<float> best_sim;
    for (std::size_t i = 0; i + 1 < frames.size(); ++i) {
        std::optional<float> sim = cosine_similarity(pooled[i], pooled[i + 1]);
        if (i == 0) {
            best_sim = sim;
        } else if (sim && (!best_sim || *sim > *best_sim)) {
            best = i;
            best_sim = sim;
        }
    }

    Frame evicted = std::move(frames[best]);
    frames.erase(frames.begin() + static_cast<std::ptrdiff_t>(best));

    SyncEvent event;
    event.t_min = evicted.ts;
    event.evicted_from_layer = layer.config.index;
    event.cascade_depth = cascade_depth;

    if (layer_index + 1 < layers_.size()) {
        MemoryLayer& next = layers_[layer_index + 1];
        evicted.grid = avg_pool2d(evicted.grid, next.config.res_h, next.config.res_w);
        evicted.layer = next.config.index;
        evicted.origin = FrameOrigin::DownWritten;
        auto pos = std::lower_bound(next.frames.begin(), next.frames.end(), evicted,
                                    [](const Frame& a, const Frame& b) { return a.ts.tick < b.ts.tick; });
        next.frames.insert(pos, std::move(evicted));
    }
    return event;
}

std::vector<Frame> PyramidMemoryBank::readout() const {
    std::vector<Frame> out;
    for (const auto& layer : layers_)
        out.insert(out.end(), layer.frames.begin(), layer.frames.end());
    std::sort(out.begin(), out.end(), [](const Frame& a, const Frame& b) { return a.ts.tick < b.ts.tick; });
    return out;
}

std::size_t PyramidMemoryBank::token_count() const {
    std::size_t total = 0;
    for (const auto& layer : layers_)
        total += layer.frames.size() * layer.config.tokens_per_frame();
    return total;
}

}  // namespace pmb
