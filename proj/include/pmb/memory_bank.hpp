// Copyright (c) 2026 pmbank contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <optional>
#include <vector>

#include "pmb/core_types.hpp"

namespace pmb {

/// Emitted by every eviction. t_min is the erasure boundary handed to the
/// KV cache: the timestamp of the evicted (older) frame of the chosen pair.
/// cascade_depth is the event's 1-based position within the cascade caused
/// by one ingest call.
struct SyncEvent {
    Timestamp t_min;
    std::uint32_t evicted_from_layer = 0;
    std::uint32_t cascade_depth = 1;
};

struct MemoryLayer {
    LayerConfig config;
    std::vector<Frame> frames;  // strictly increasing by timestamp
};

/// Layered streaming frame cache. Each incoming frame enters exactly one
/// layer (the finest whose sampling grid matches its timestamp). On
/// overflow, the older frame of the most-similar adjacent pair is evicted
/// and down-written to the next layer at reduced resolution; the last
/// layer discards. Single-writer: ingest calls must be serialized.
class PyramidMemoryBank {
public:
    explicit PyramidMemoryBank(BankConfig cfg);  // throws InvalidConfig

    /// Destination layer for a timestamp: the smallest index i whose grid
    /// contains ts, i.e. tick * min(r_i, base_fps) % base_fps == 0.
    /// nullopt when no grid matches.
    static std::optional<std::uint32_t> route_frame(const BankConfig& cfg, Timestamp ts);

    /// Accepts one frame at layer-1 resolution, strictly after all prior
    /// ingests. Pools to the destination layer's resolution, then resolves
    /// any overflow cascade. Returns the cascade's SyncEvents in order.
    std::vector<SyncEvent> ingest(Timestamp ts, const FeatureGrid& grid);

    /// All stored frames merged in strictly increasing timestamp order.
    /// Independent snapshot; later ingests do not touch it.
    std::vector<Frame> readout() const;

    std::size_t token_count() const;

    const BankConfig& config() const { return config_; }
    const std::vector<MemoryLayer>& layers() const { return layers_; }
    const std::vector<SyncEvent>& sync_log() const { return sync_log_; }
    std::uint64_t ingest_count() const { return ingest_count_; }
    std::uint64_t dropped_count() const { return dropped_count_; }

private:
    SyncEvent evict_and_downwrite(std::size_t layer_index, std::uint32_t cascade_depth);

    BankConfig config_;
    std::vector<MemoryLayer> layers_;
    std::vector<SyncEvent> sync_log_;
    std::uint64_t ingest_count_ = 0;
    std::uint64_t dropped_count_ = 0;
    std::optional<std::uint64_t> last_tick_;
};

}  // namespace pmb
