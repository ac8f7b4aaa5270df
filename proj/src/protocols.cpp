// Copyright (c) 2026 pmbank contributors
// SPDX-License-Identifier: Apache-2.0

#include "pmb/protocols.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <thread>

namespace pmb {

std::uint64_t protocol_sample_tick(std::uint64_t sample_index, std::uint32_t protocol_fps, std::uint32_t base_fps) {
    // nearest tick to sample_index * base_fps / protocol_fps, ties earlier
    std::uint64_t num = sample_index * base_fps;
    std::uint64_t tick = num / protocol_fps;
    std::uint64_t rem = num % protocol_fps;
    if (2 * rem > protocol_fps)
        ++tick;
    return tick;
}

std::uint64_t samples_offered_by(std::uint64_t query_tick, std::uint32_t protocol_fps, std::uint32_t base_fps) {
    return query_tick * protocol_fps / base_fps;
}

double scene_recall(const std::vector<Frame>& readout, const std::vector<SceneAnnotation>& scenes,
                    std::uint64_t up_to_tick) {
    std::size_t elapsed = 0;
    std::size_t covered = 0;
    for (const auto& scene : scenes) {
        if (scene.start_tick >= up_to_tick)
            continue;
        ++elapsed;
        for (const auto& frame : readout) {
            if (frame.ts.tick >= scene.start_tick && frame.ts.tick < scene.end_tick) {
                ++covered;
                break;
            }
        }
    }
    if (elapsed == 0)
        return 0.0;
    return static_cast<double>(covered) / static_cast<double>(elapsed);
}

double temporal_coverage(const std::vector<Frame>& readout, std::uint64_t up_to_tick) {
    if (readout.size() < 2 || up_to_tick == 0)
        return 0.0;
    std::uint64_t span = readout.back().ts.tick - readout.front().ts.tick;
    return static_cast<double>(span) / static_cast<double>(up_to_tick);
}

namespace {

std::size_t frame_index_for_tick(const Stream& stream, std::uint64_t tick) {
    // Streams are dense in practice; fall back to nearest-at-or-below.
    auto it = std::lower_bound(stream.frames.begin(), stream.frames.end(), tick,
                               [](const StreamFrame& f, std::uint64_t t) { return f.tick < t; });
    if (it != stream.frames.end() && it->tick == tick)
        return static_cast<std::size_t>(it - stream.frames.begin());
    if (it == stream.frames.begin())
        return 0;
    return static_cast<std::size_t>(it - stream.frames.begin()) - 1;
}

void check_queries(const Stream& stream, const std::vector<std::uint64_t>& query_ticks) {
    std::uint64_t limit = stream.frames.empty() ? 0 : stream.frames.back().tick + 1;
    std::uint64_t prev = 0;
    bool first = true;
    for (std::uint64_t q : query_ticks) {
        if (!first && q <= prev)
            throw QueryOutOfRange("query ticks must be strictly ascending");
        if (q > limit)
            throw QueryOutOfRange("query tick " + std::to_string(q) + " beyond stream end " + std::to_string(limit));
        prev = q;
        first = false;
    }
}

QueryRecord snapshot_query(const Stream& stream, Policy& policy, std::uint64_t query_tick,
                           std::uint64_t frames_offered) {
    QueryRecord record;
    record.query_tick = query_tick;
    record.frames_offered = frames_offered;
    std::vector<Frame> readout = policy.readout();
    record.frames_in_readout = readout.size();
    record.token_count = policy.token_count();
    record.scene_recall = scene_recall(readout, stream.scenes, query_tick);
    record.temporal_coverage = temporal_coverage(readout, query_tick);
    return record;
}

void finalize_aggregates(RunReport& report, const CacheState* cache) {
    double recall_sum = 0.0;
    for (const auto& q : report.queries) {
        recall_sum += q.scene_recall;
        report.aggregates.peak_tokens = std::max(report.aggregates.peak_tokens, q.token_count);
    }
    if (!report.queries.empty())
        report.aggregates.mean_scene_recall = recall_sum / static_cast<double>(report.queries.size());
    if (cache) {
        report.aggregates.tokens_appended = cache->tokens_appended_total();
        report.aggregates.tokens_erased = cache->tokens_erased_total();
        if (cache->tokens_appended_total() > 0 && cache->baseline_tokens_total() > 0)
            report.aggregates.recompute_savings = cache->recompute_savings();
    }
}

/// One policy ingest with KV-cache mirroring and full-reprocess baseline
/// accounting.
void ingest_with_cache(Policy& policy, CacheState* cache, Timestamp ts, const FeatureGrid& grid) {
    std::vector<SyncEvent> events = policy.ingest(ts, grid);
    if (!cache)
        return;
    for (const auto& event : events)
        cache->sync_on_eviction(event);
    cache->resync_from_readout(policy.readout());
    cache->accumulate_baseline(cache->current_tokens());
}

}  // namespace

RunReport run_streaming_protocol(const Stream& stream, Policy& policy, const std::vector<std::uint64_t>& query_ticks,
                                 const ProtocolParams& params, const std::string& config_digest) {
    check_queries(stream, query_ticks);
    auto start = std::chrono::steady_clock::now();

    RunReport report;
    report.policy = std::string(policy.name());
    report.config_digest = config_digest;
    report.simulator_only = policy.simulator_only();
    report.budget = policy.budget();

    CacheState cache;
    CacheState* cache_ptr = policy.simulator_only() ? nullptr : &cache;

    std::uint64_t next_sample = 0;
    std::optional<std::uint64_t> last_ingested_tick;
    for (std::uint64_t query_tick : query_ticks) {
        std::uint64_t offered = samples_offered_by(query_tick, params.fps, stream.base_fps);
        for (; next_sample < offered; ++next_sample) {
            std::uint64_t tick = protocol_sample_tick(next_sample, params.fps, stream.base_fps);
            if (last_ingested_tick && tick <= *last_ingested_tick)
                continue;  // two samples snapped to one base tick
            std::size_t index = frame_index_for_tick(stream, tick);
            if (stream.frames[index].tick != tick)
                continue;  // sparse stream, no frame on this tick
            last_ingested_tick = tick;
            ingest_with_cache(policy, cache_ptr, Timestamp{tick, stream.base_fps}, stream.grid_at(index));
        }
        report.queries.push_back(snapshot_query(stream, policy, query_tick, offered));
    }

    finalize_aggregates(report, cache_ptr);
    report.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return report;
}

RunReport run_sliding_window_protocol(const Stream& stream, const PolicyFactory& factory,
                                      const std::vector<std::uint64_t>& query_ticks, const ProtocolParams& params,
                                      const std::string& config_digest) {
    check_queries(stream, query_ticks);
    auto start = std::chrono::steady_clock::now();

    RunReport report;
    report.config_digest = config_digest;

    CacheState totals;  // summed across per-query runs
    bool any_cache = false;

    for (std::uint64_t query_tick : query_ticks) {
        std::unique_ptr<Policy> policy = factory();
        if (report.policy.empty()) {
            report.policy = std::string(policy->name());
            report.simulator_only = policy->simulator_only();
            report.budget = policy->budget();
        }

        // Window [max(0, t - window_s), t), sampled at params.fps from the
        // window start.
        std::uint64_t window_ticks = static_cast<std::uint64_t>(params.window_s) * stream.base_fps;
        std::uint64_t start_tick = query_tick > window_ticks ? query_tick - window_ticks : 0;
        std::uint64_t span = query_tick - start_tick;
        std::uint64_t sample_count = samples_offered_by(span, params.fps, stream.base_fps);

        CacheState cache;
        CacheState* cache_ptr = policy->simulator_only() ? nullptr : &cache;
        std::optional<std::uint64_t> last_tick;
        for (std::uint64_t j = 0; j < sample_count; ++j) {
            std::uint64_t tick = start_tick + protocol_sample_tick(j, params.fps, stream.base_fps);
            if (last_tick && tick <= *last_tick)
                continue;
            std::size_t index = frame_index_for_tick(stream, tick);
            if (stream.frames[index].tick != tick)
                continue;
            last_tick = tick;
            ingest_with_cache(*policy, cache_ptr, Timestamp{tick, stream.base_fps}, stream.grid_at(index));
        }
        report.queries.push_back(snapshot_query(stream, *policy, query_tick, sample_count));
        if (cache_ptr) {
            any_cache = true;
            totals.accumulate_baseline(cache.baseline_tokens_total());
            report.aggregates.tokens_appended += cache.tokens_appended_total();
            report.aggregates.tokens_erased += cache.tokens_erased_total();
        }
    }

    finalize_aggregates(report, nullptr);
    if (any_cache && report.aggregates.tokens_appended > 0 && totals.baseline_tokens_total() > 0)
        report.aggregates.recompute_savings =
            1.0 - static_cast<double>(report.aggregates.tokens_appended) /
                      static_cast<double>(totals.baseline_tokens_total());
    report.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return report;
}

ComparisonTable compare_policies(const Stream& stream, const std::vector<PolicyFactory>& factories,
                                 const std::vector<std::uint64_t>& query_ticks, const ProtocolParams& params,
                                 const std::string& config_digest, unsigned jobs) {
    if (factories.size() < 2)
        throw InvalidArgument("compare_policies: need at least two policies");

    ComparisonTable table;
    table.reports.resize(factories.size());

    auto run_one = [&](std::size_t i) {
        if (params.kind == ProtocolKind::Streaming) {
            std::unique_ptr<Policy> policy = factories[i]();
            table.reports[i] = run_streaming_protocol(stream, *policy, query_ticks, params, config_digest);
        } else {
            table.reports[i] = run_sliding_window_protocol(stream, factories[i], query_ticks, params, config_digest);
        }
    };

    if (jobs <= 1) {
        for (std::size_t i = 0; i < factories.size(); ++i)
            run_one(i);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::thread> workers;
        unsigned worker_count = std::min<unsigned>(jobs, static_cast<unsigned>(factories.size()));
        for (unsigned w = 0; w < worker_count; ++w) {
            workers.emplace_back([&] {
                for (;;) {
                    std::size_t i = next.fetch_add(1);
                    if (i >= factories.size())
                        return;
                    run_one(i);
                }
            });
        }
        for (auto& t : workers)
            t.join();
    }

    table.ranked_indices.resize(table.reports.size());
    for (std::size_t i = 0; i < table.reports.size(); ++i)
        table.ranked_indices[i] = i;
    std::stable_sort(table.ranked_indices.begin(), table.ranked_indices.end(), [&](std::size_t a, std::size_t b) {
        return table.reports[a].aggregates.mean_scene_recall > table.reports[b].aggregates.mean_scene_recall;
    });
    return table;
}

}  // namespace pmb
