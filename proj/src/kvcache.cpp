// Copyright (c) 2026 pmbank contributors
// SPDX-License-Identifier: Apache-2.0

#include "pmb/kvcache.hpp"

#include <algorithm>
#include <string>

namespace pmb {

void CacheState::append_frames(const std::vector<Frame>& frames) {
    for (const auto& frame : frames) {
        if (!entries_.empty() && frame.ts.tick <= entries_.back().ts.tick)
            throw OutOfOrderAppend("append_frames: tick " + std::to_string(frame.ts.tick) + " not after " +
                                   std::to_string(entries_.back().ts.tick));
        CacheEntry entry;
        entry.ts = frame.ts;
        entry.token_count = static_cast<std::uint32_t>(frame.grid.tokens());
        entry.revision = ++revisions_[frame.ts.tick];
        tokens_appended_ += entry.token_count;
        entries_.push_back(entry);
    }
}

std::uint64_t CacheState::sync_on_eviction(const SyncEvent& event) {
    auto cut = std::lower_bound(entries_.begin(), entries_.end(), event.t_min.tick,
                                [](const CacheEntry& e, std::uint64_t tick) { return e.ts.tick < tick; });
    std::uint64_t erased = 0;
    for (auto it = cut; it != entries_.end(); ++it)
        erased += it->token_count;
    entries_.erase(cut, entries_.end());
    tokens_erased_ += erased;
    if (erased == 0)
        ++zero_erase_events_;
    return erased;
}

void CacheState::resync_from_readout(const std::vector<Frame>& readout) {
    std::vector<Frame> suffix;
    for (const auto& frame : readout) {
        if (entries_.empty() || frame.ts.tick > entries_.back().ts.tick)
            suffix.push_back(frame);
    }
    append_frames(suffix);
}

double CacheState::recompute_savings() const {
    if (tokens_appended_ == 0)
        throw NoTraffic("recompute_savings: no appends recorded");
    if (baseline_tokens_ == 0)
        throw NoTraffic("recompute_savings: no baseline traffic recorded");
    return 1.0 - static_cast<double>(tokens_appended_) / static_cast<double>(baseline_tokens_);
}

std::uint64_t CacheState::current_tokens() const {
    std::uint64_t total = 0;
    for (const auto& entry : entries_)
        total += entry.token_count;
    return total;
}

ConsistencyResult consistency_check(const CacheState& cache, const std::vector<Frame>& readout) {
    const auto& entries = cache.entries();
    std::size_t common = std::min(entries.size(), readout.size());
    for (std::size_t i = 0; i < common; ++i) {
        if (entries[i].ts.tick != readout[i].ts.tick ||
            entries[i].token_count != static_cast<std::uint32_t>(readout[i].grid.tokens()))
            return {false, i};
    }
    if (entries.size() != readout.size())
        return {false, common};
    return {true, std::nullopt};
}

}  // namespace pmb
