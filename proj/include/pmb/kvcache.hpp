// Copyright (c) 2026 pmbank contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <optional>
#include <unordered_map>
#include <vector>

#include "pmb/core_types.hpp"
#include "pmb/memory_bank.hpp"

namespace pmb {

/// Metadata stand-in for one frame's precomputed token span. revision counts
/// how many times this timestamp has been (re)appended, i.e. how often its
/// representation changed.
struct CacheEntry {
    Timestamp ts;
    std::uint32_t token_count = 0;
    std::uint32_t revision = 1;
};

struct ConsistencyResult {
    bool ok = true;
    std::optional<std::size_t> first_divergence;
};

/// Ordered (timestamp, token-count) model of an autoregressive KV cache.
/// Eviction sync erases every entry at or after the event boundary; the
/// harness re-appends the invalidated suffix from the bank's readout.
class CacheState {
public:
    /// Appends one entry per frame. Throws OutOfOrderAppend when a frame is
    /// not strictly after the current last entry.
    void append_frames(const std::vector<Frame>& frames);

    /// Erases entries with ts >= event.t_min (the evicted frame's own
    /// representation changes resolution, so the boundary is inclusive).
    /// Returns the erased token count. Erasing nothing is legal and counted.
    std::uint64_t sync_on_eviction(const SyncEvent& event);

    /// Appends every readout frame past the current last entry. Combined
    /// with sync_on_eviction this keeps the cache equal to the readout.
    void resync_from_readout(const std::vector<Frame>& readout);

    /// Baseline accounting for recompute_savings: the harness adds, per
    /// ingest, the tokens a full-reprocess run would have paid.
    void accumulate_baseline(std::uint64_t tokens) { baseline_tokens_ += tokens; }

    /// 1 - incremental tokens processed / full-reprocess tokens.
    /// Throws NoTraffic before the first append.
    double recompute_savings() const;

    const std::vector<CacheEntry>& entries() const { return entries_; }
    std::uint64_t current_tokens() const;
    std::uint64_t tokens_appended_total() const { return tokens_appended_; }
    std::uint64_t tokens_erased_total() const { return tokens_erased_; }
    std::uint64_t baseline_tokens_total() const { return baseline_tokens_; }
    std::uint64_t zero_erase_events() const { return zero_erase_events_; }

private:
    std::vector<CacheEntry> entries_;
    std::unordered_map<std::uint64_t, std::uint32_t> revisions_;
    std::uint64_t tokens_appended_ = 0;
    std::uint64_t tokens_erased_ = 0;
    std::uint64_t baseline_tokens_ = 0;
    std::uint64_t zero_erase_events_ = 0;
};

/// True iff the cache entries are exactly the readout's (timestamp,
/// token-count) sequence; otherwise reports the first divergent position.
ConsistencyResult consistency_check(const CacheState& cache, const std::vector<Frame>& readout);

}  // namespace pmb
