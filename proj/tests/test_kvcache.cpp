// Copyright (c) 2026 pmbank contributors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <random>

#include "pmb/kvcache.hpp"
#include "pmb/memory_bank.hpp"
#include "test_util.hpp"

using namespace pmb;
using namespace pmb::testutil;

namespace {

Frame make_frame(std::uint64_t tick, std::uint32_t res, float value = 1.0f) {
    return Frame{Timestamp{tick, 8}, constant_grid(res, res, 1, value), 1, FrameOrigin::StreamSampled};
}

/// From-scratch oracle: a cache rebuilt over the current readout.
CacheState rebuild_from(const std::vector<Frame>& readout) {
    CacheState cache;
    cache.append_frames(readout);
    return cache;
}

}  // namespace

TEST_CASE("append assigns token counts and bumps the appended counter") {
    CacheState cache;
    cache.append_frames({make_frame(0, 16), make_frame(8, 16)});
    REQUIRE(cache.entries().size() == 2);
    CHECK(cache.entries()[0].token_count == 256);
    CHECK(cache.entries()[1].token_count == 256);
    CHECK(cache.tokens_appended_total() == 512);
    CHECK(cache.current_tokens() == 512);
}

TEST_CASE("append must be strictly ordered; empty append is identity") {
    CacheState cache;
    cache.append_frames({make_frame(5, 4)});
    CHECK_THROWS_AS(cache.append_frames({make_frame(5, 4)}), OutOfOrderAppend);
    CHECK_THROWS_AS(cache.append_frames({make_frame(3, 4)}), OutOfOrderAppend);
    cache.append_frames({});
    CHECK(cache.entries().size() == 1);
}

TEST_CASE("sync erases the suffix at and after t_min") {
    CacheState cache;
    for (std::uint64_t tick : {1, 3, 5, 7, 9})
        cache.append_frames({make_frame(tick, 4)});
    std::uint64_t erased = cache.sync_on_eviction(SyncEvent{Timestamp{5, 8}, 1, 1});
    CHECK(erased == 3 * 16);
    REQUIRE(cache.entries().size() == 2);
    CHECK(cache.entries()[0].ts.tick == 1);
    CHECK(cache.entries()[1].ts.tick == 3);
    CHECK(cache.tokens_erased_total() == 48);

    // boundary exactly at the last entry
    CacheState cache2;
    for (std::uint64_t tick : {1, 2, 3})
        cache2.append_frames({make_frame(tick, 4)});
    CHECK(cache2.sync_on_eviction(SyncEvent{Timestamp{3, 8}, 1, 1}) == 16);
    CHECK(cache2.entries().size() == 2);
}

TEST_CASE("zero-entry erase is legal and counted") {
    CacheState cache;
    cache.append_frames({make_frame(1, 4)});
    CHECK(cache.sync_on_eviction(SyncEvent{Timestamp{100, 8}, 1, 1}) == 0);
    CHECK(cache.zero_erase_events() == 1);
}

TEST_CASE("re-appended entries carry bumped revisions") {
    CacheState cache;
    cache.append_frames({make_frame(0, 16)});
    cache.sync_on_eviction(SyncEvent{Timestamp{0, 8}, 1, 1});
    cache.append_frames({make_frame(0, 8)});  // same timestamp, pooled down
    REQUIRE(cache.entries().size() == 1);
    CHECK(cache.entries()[0].token_count == 64);
    CHECK(cache.entries()[0].revision == 2);
}

TEST_CASE("consistency check flags stale entries") {
    std::vector<Frame> readout = {make_frame(0, 8), make_frame(8, 16)};
    SUBCASE("empty vs empty") {
        CHECK(consistency_check(CacheState{}, {}).ok);
    }
    SUBCASE("rebuild always passes") {
        CHECK(consistency_check(rebuild_from(readout), readout).ok);
    }
    SUBCASE("stale full-resolution entry diverges") {
        CacheState cache;
        cache.append_frames({make_frame(0, 16), make_frame(8, 16)});  // 256 where readout has 64
        ConsistencyResult result = consistency_check(cache, readout);
        CHECK_FALSE(result.ok);
        CHECK(result.first_divergence == 0);
    }
    SUBCASE("length mismatch diverges at the shorter end") {
        CacheState cache = rebuild_from({readout[0]});
        ConsistencyResult result = consistency_check(cache, readout);
        CHECK_FALSE(result.ok);
        CHECK(result.first_divergence == 1);
    }
}

TEST_CASE("recompute savings") {
    CacheState cache;
    CHECK_THROWS_AS(cache.recompute_savings(), NoTraffic);
    cache.append_frames({make_frame(0, 16)});
    cache.accumulate_baseline(256);
    CHECK(cache.recompute_savings() == doctest::Approx(0.0));
    // second frame: incremental pays 256, full reprocess would pay 512
    cache.append_frames({make_frame(8, 16)});
    cache.accumulate_baseline(512);
    CHECK(cache.recompute_savings() == doctest::Approx(1.0 - 512.0 / 768.0));
}

TEST_CASE("incremental cache equals from-scratch rebuild for bank streams") {
    std::mt19937 seed_rng(31337);
    for (int run = 0; run < 50; ++run) {
        std::mt19937 rng(seed_rng());
        BankConfig cfg = BankConfig::online_default(1 + rng() % 4);
        PyramidMemoryBank bank(cfg);
        CacheState cache;

        std::uint64_t frames = 16 + rng() % 49;
        double last_savings = -1.0;
        for (std::uint64_t tick = 0; tick < frames; ++tick) {
            auto events = bank.ingest({tick, 8}, random_grid(rng, 16, 16, cfg.depth));
            for (const auto& event : events)
                cache.sync_on_eviction(event);
            auto readout = bank.readout();
            cache.resync_from_readout(readout);
            cache.accumulate_baseline(cache.current_tokens());

            ConsistencyResult result = consistency_check(cache, readout);
            CHECK(result.ok);

            CacheState oracle = rebuild_from(readout);
            REQUIRE(cache.entries().size() == oracle.entries().size());
            for (std::size_t i = 0; i < oracle.entries().size(); ++i) {
                CHECK(cache.entries()[i].ts.tick == oracle.entries()[i].ts.tick);
                CHECK(cache.entries()[i].token_count == oracle.entries()[i].token_count);
            }

            // conservation
            CHECK(cache.tokens_appended_total() - cache.tokens_erased_total() == cache.current_tokens());
            last_savings = cache.recompute_savings();
            CHECK(last_savings >= 0.0);
            CHECK(last_savings <= 1.0);
        }
        // long streams with a bounded bank approach full savings
        if (frames > 32)
            CHECK(last_savings > 0.1);
    }
}

TEST_CASE("applying only the cascade's minimum boundary is equivalent") {
    // a deeper layer's eviction can pick a pair older than the first
    // event's boundary, so the single equivalent erase uses the cascade's
    // minimum t_min, not the first event's
    std::mt19937 rng(4242);
    BankConfig cfg = BankConfig::online_default(2);
    PyramidMemoryBank bank(cfg);
    CacheState all_events, min_only;
    for (std::uint64_t tick = 0; tick < 80; ++tick) {
        auto events = bank.ingest({tick, 8}, random_grid(rng, 16, 16, 2));
        for (const auto& event : events)
            all_events.sync_on_eviction(event);
        if (!events.empty()) {
            SyncEvent min_event = events.front();
            for (const auto& event : events)
                if (event.t_min.tick < min_event.t_min.tick)
                    min_event = event;
            min_only.sync_on_eviction(min_event);
        }
        auto readout = bank.readout();
        all_events.resync_from_readout(readout);
        min_only.resync_from_readout(readout);
        REQUIRE(all_events.entries().size() == min_only.entries().size());
        for (std::size_t i = 0; i < all_events.entries().size(); ++i) {
            CHECK(all_events.entries()[i].ts.tick == min_only.entries()[i].ts.tick);
            CHECK(all_events.entries()[i].token_count == min_only.entries()[i].token_count);
        }
    }
}
