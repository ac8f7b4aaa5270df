// Copyright (c) 2026 pmbank contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "pmb/kvcache.hpp"
#include "pmb/policies.hpp"
#include "pmb/stream.hpp"

namespace pmb {

struct QueryRecord {
    std::uint64_t query_tick = 0;
    std::uint64_t frames_offered = 0;  // protocol samples delivered so far
    std::size_t frames_in_readout = 0;
    std::size_t token_count = 0;
    double scene_recall = 0.0;
    double temporal_coverage = 0.0;
};

struct RunAggregates {
    double mean_scene_recall = 0.0;
    std::size_t peak_tokens = 0;
    std::uint64_t tokens_appended = 0;
    std::uint64_t tokens_erased = 0;
    double recompute_savings = 0.0;
};

struct RunReport {
    std::string policy;
    std::string config_digest;
    bool simulator_only = false;
    std::optional<std::size_t> budget;
    std::vector<QueryRecord> queries;
    RunAggregates aggregates;
    double wall_time_s = 0.0;  // excluded from digests and determinism checks
};

using PolicyFactory = std::function<std::unique_ptr<Policy>()>;

enum class ProtocolKind { Streaming, SlidingWindow };

struct ProtocolParams {
    ProtocolKind kind = ProtocolKind::Streaming;
    std::uint32_t fps = 2;        // resample rate for both protocols
    std::uint32_t window_s = 32;  // sliding window span
};

/// Nearest base tick for protocol sample j at j/fps seconds; ties toward
/// the earlier tick.
std::uint64_t protocol_sample_tick(std::uint64_t sample_index, std::uint32_t protocol_fps, std::uint32_t base_fps);

/// Protocol samples delivered by query time t = tick/base_fps: floor(t*fps).
std::uint64_t samples_offered_by(std::uint64_t query_tick, std::uint32_t protocol_fps, std::uint32_t base_fps);

/// Fraction of scenes begun before up_to_tick with at least one readout
/// frame inside [start_tick, end_tick). 0 when no scene has begun.
double scene_recall(const std::vector<Frame>& readout, const std::vector<SceneAnnotation>& scenes,
                    std::uint64_t up_to_tick);

/// Readout timestamp span as a fraction of the elapsed stream, 0 for fewer
/// than two frames.
double temporal_coverage(const std::vector<Frame>& readout, std::uint64_t up_to_tick);

/// Full-history run: the stream is resampled at params.fps and ingested
/// once, pausing at each query tick to snapshot metrics. Bounded policies
/// are mirrored into a KV cache whose counters land in the aggregates.
RunReport run_streaming_protocol(const Stream& stream, Policy& policy, const std::vector<std::uint64_t>& query_ticks,
                                 const ProtocolParams& params, const std::string& config_digest = "");

/// Per-query run: a fresh policy ingests only [max(0, t - window), t)
/// resampled at params.fps, then metrics are taken.
RunReport run_sliding_window_protocol(const Stream& stream, const PolicyFactory& factory,
                                      const std::vector<std::uint64_t>& query_ticks, const ProtocolParams& params,
                                      const std::string& config_digest = "");

struct ComparisonTable {
    std::vector<RunReport> reports;           // input order
    std::vector<std::size_t> ranked_indices;  // by mean scene recall, descending
};

/// Runs each policy independently over the same stream and protocol.
/// Requires at least two policies; a failing run aborts the comparison.
ComparisonTable compare_policies(const Stream& stream, const std::vector<PolicyFactory>& factories,
                                 const std::vector<std::uint64_t>& query_ticks, const ProtocolParams& params,
                                 const std::string& config_digest = "", unsigned jobs = 1);

}  // namespace pmb
