// Copyright (c) 2026 pmbank contributors
// SPDX-License-Identifier: Apache-2.0
//
// End-to-end acceptance suite. Each criterion prints one PASS/FAIL line;
// the process exits nonzero if any criterion fails. argv[1] must be the
// path to the CLI binary (used by the determinism and exit-code checks).

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "pmb/kvcache.hpp"
#include "pmb/memory_bank.hpp"
#include "pmb/policies.hpp"
#include "pmb/protocols.hpp"
#include "pmb/stream.hpp"
#include "pmb/tensor_ops.hpp"
#include "reference/naive_kernels.hpp"
#include "reference/reference_bank.hpp"
#include "test_util.hpp"

using namespace pmb;
using namespace pmb::testutil;

namespace {

int g_failures = 0;

void report(int criterion, bool ok, const std::string& detail) {
    std::cout << (ok ? "PASS" : "FAIL") << " criterion " << criterion << ": " << detail << "\n";
    if (!ok)
        ++g_failures;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

int run_cmd(const std::string& cmd) {
    int rc = std::system((cmd + " > /dev/null 2>&1").c_str());
    if (rc == -1)
        return -1;
    return WEXITSTATUS(rc);
}

// 1. Config fidelity: budgets 832 and 9984, exactly.
void criterion1() {
    ValidationReport online = validate_config(BankConfig::online_default());
    ValidationReport offline = validate_config(BankConfig::offline_default());
    bool ok = online.ok && online.total_tokens == 832 && offline.ok && offline.total_tokens == 9984;
    report(1, ok,
           "config budgets: online=" + std::to_string(online.total_tokens) +
               " (want 832), offline=" + std::to_string(offline.total_tokens) + " (want 9984)");
}

// 2. Bounded memory over 10,000 frames vs unbounded growth.
void criterion2() {
    StreamSpec spec;
    spec.seed = 20260823;
    spec.base_fps = 8;
    spec.duration_s = 1250;  // 10,000 frames
    spec.scene_count = 16;
    spec.height = 16;
    spec.width = 16;
    spec.depth = 4;
    Stream stream = gen_synthetic_stream(spec);

    PyramidMemoryBank bank(BankConfig::online_default(4));
    auto none = make_no_compression_policy(16, 16, 4);
    std::size_t peak = 0;
    for (std::size_t i = 0; i < stream.frames.size(); ++i) {
        Timestamp ts{stream.frames[i].tick, 8};
        FeatureGrid grid = stream.grid_at(i);
        bank.ingest(ts, grid);
        none->ingest(ts, grid);
        peak = std::max(peak, bank.token_count());
    }
    bool ok = stream.frames.size() == 10000 && peak <= 832 && none->token_count() == 2560000;
    report(2, ok,
           "10,000 frames: pyramid peak " + std::to_string(peak) + " tokens (cap 832), no-compression " +
               std::to_string(none->token_count()) + " tokens (want 2,560,000)");
}

// 3. Oracle equivalence against the straight-line reference simulator.
void criterion3() {
    std::mt19937 seed_rng(3000);
    std::size_t streams_checked = 0;
    std::string failure;
    for (int run = 0; run < 1000 && failure.empty(); ++run) {
        std::mt19937 rng(seed_rng());
        std::uint32_t depth = 1 + rng() % 8;
        std::uint32_t c1 = 1 + rng() % 3, c2 = 1 + rng() % 3, c3 = 1 + rng() % 4;

        BankConfig cfg;
        cfg.beta = 2;
        cfg.base_fps = 8;
        cfg.depth = depth;
        cfg.layers = {{1, 1, c1, 8, 8}, {2, 2, c2, 4, 4}, {3, 8, c3, 2, 2}};
        PyramidMemoryBank bank(cfg);
        testref::ReferenceBank ref({{1, c1, 8, 8}, {2, c2, 4, 4}, {8, c3, 2, 2}}, 8, depth);

        std::uint64_t frame_count = 8 + rng() % 57;
        for (std::uint64_t tick = 0; tick < frame_count && failure.empty(); ++tick) {
            FeatureGrid grid = random_grid(rng, 8, 8, depth);
            bank.ingest({tick, 8}, grid);
            ref.ingest(tick, grid.data);

            auto got = bank.readout();
            auto want = ref.frames_in_order();
            if (got.size() != want.size()) {
                failure = "frame count mismatch, run " + std::to_string(run);
                break;
            }
            for (std::size_t f = 0; f < got.size(); ++f) {
                if (got[f].ts.tick != want[f].tick || got[f].layer != want[f].layer) {
                    failure = "membership mismatch, run " + std::to_string(run);
                    break;
                }
                for (std::size_t i = 0; i < want[f].data.size(); ++i) {
                    if (std::fabs(got[f].grid.data[i] - want[f].data[i]) > 1e-6) {
                        failure = "grid mismatch, run " + std::to_string(run);
                        break;
                    }
                }
                if (!failure.empty())
                    break;
            }
        }
        ++streams_checked;
    }
    report(3, failure.empty(),
           failure.empty() ? std::to_string(streams_checked) + " seeded streams match the reference simulator"
                           : failure);
}

// 4. Kernel correctness against naive references and algebraic properties.
void criterion4() {
    std::mt19937 rng(4000);
    std::string failure;

    for (int rep = 0; rep < 500 && failure.empty(); ++rep) {
        std::uint32_t depth = 1 + rng() % 8;
        FeatureGrid grid = random_grid(rng, 16, 16, depth);

        // the 16x16 -> 8x8 -> 4x4 chain plus direct pooling vs naive
        FeatureGrid p8 = avg_pool2d(grid, 8, 8);
        FeatureGrid p4 = avg_pool2d(p8, 4, 4);
        FeatureGrid direct4 = avg_pool2d(grid, 4, 4);
        auto ref8 = testref::naive_block_mean(grid.data, 16, 16, depth, 8, 8);
        auto ref4 = testref::naive_block_mean(grid.data, 16, 16, depth, 4, 4);
        for (std::size_t i = 0; i < ref8.size(); ++i)
            if (std::fabs(p8.data[i] - ref8[i]) > 1e-6)
                failure = "16->8 mismatch";
        for (std::size_t i = 0; i < ref4.size(); ++i) {
            if (std::fabs(direct4.data[i] - ref4[i]) > 1e-6)
                failure = "16->4 mismatch";
            if (std::fabs(p4.data[i] - direct4.data[i]) > 1e-6)
                failure = "composition mismatch";
        }

        // cosine properties on pooled vectors
        PooledVector a = global_avg_pool(grid);
        PooledVector b = global_avg_pool(random_grid(rng, 16, 16, depth));
        auto sab = cosine_similarity(a, b);
        auto sba = cosine_similarity(b, a);
        if (!sab || !sba || *sab != *sba || *sab < -1.0f || *sab > 1.0f)
            failure = "cosine symmetry/bounds";
        PooledVector scaled = a;
        for (auto& v : scaled.values)
            v *= 7.5f;
        if (std::fabs(*cosine_similarity(scaled, b) - *sab) > 1e-6)
            failure = "cosine scale invariance";
    }
    report(4, failure.empty(), failure.empty() ? "500 random grids match naive pooling; cosine properties hold" : failure);
}

// 5. KVCache: incremental sync equals from-scratch rebuild, conservation.
void criterion5() {
    std::mt19937 seed_rng(3000);  // same stream family as criterion 3
    std::string failure;
    for (int run = 0; run < 1000 && failure.empty(); ++run) {
        std::mt19937 rng(seed_rng());
        std::uint32_t depth = 1 + rng() % 8;
        std::uint32_t c1 = 1 + rng() % 3, c2 = 1 + rng() % 3, c3 = 1 + rng() % 4;

        BankConfig cfg;
        cfg.beta = 2;
        cfg.base_fps = 8;
        cfg.depth = depth;
        cfg.layers = {{1, 1, c1, 8, 8}, {2, 2, c2, 4, 4}, {3, 8, c3, 2, 2}};
        PyramidMemoryBank bank(cfg);
        CacheState cache;

        std::uint64_t frame_count = 8 + rng() % 57;
        for (std::uint64_t tick = 0; tick < frame_count && failure.empty(); ++tick) {
            auto events = bank.ingest({tick, 8}, random_grid(rng, 8, 8, depth));
            for (const auto& event : events)
                cache.sync_on_eviction(event);
            auto readout = bank.readout();
            cache.resync_from_readout(readout);

            CacheState oracle;
            oracle.append_frames(readout);
            if (cache.entries().size() != oracle.entries().size()) {
                failure = "cache size mismatch, run " + std::to_string(run);
                break;
            }
            for (std::size_t i = 0; i < oracle.entries().size(); ++i) {
                if (cache.entries()[i].ts.tick != oracle.entries()[i].ts.tick ||
                    cache.entries()[i].token_count != oracle.entries()[i].token_count) {
                    failure = "cache entry mismatch, run " + std::to_string(run);
                    break;
                }
            }
            if (cache.tokens_appended_total() - cache.tokens_erased_total() != cache.current_tokens())
                failure = "conservation violated, run " + std::to_string(run);
        }
    }
    report(5, failure.empty(),
           failure.empty() ? "incremental cache equals rebuild over 1000 streams; counters conserve" : failure);
}

// 6. Protocol fidelity: window and streaming frame counts.
void criterion6() {
    StreamSpec spec;
    spec.seed = 6;
    spec.base_fps = 8;
    spec.duration_s = 100;
    spec.scene_count = 4;
    spec.height = 16;
    spec.width = 16;
    spec.depth = 2;
    Stream stream = gen_synthetic_stream(spec);

    std::string failure;

    // streaming: exactly floor(2t) frames by query time, including off-grid t
    std::vector<std::uint64_t> queries = {3, 80, 81, 400, 799, 800};
    auto policy = make_no_compression_policy(16, 16, 2);
    ProtocolParams params;
    RunReport streaming = run_streaming_protocol(stream, *policy, queries, params, "");
    for (const auto& q : streaming.queries) {
        std::uint64_t want = q.query_tick * 2 / 8;  // floor(t * 2 fps)
        if (q.frames_offered != want || q.frames_in_readout != want)
            failure = "streaming offered " + std::to_string(q.frames_offered) + " at tick " +
                      std::to_string(q.query_tick) + ", want " + std::to_string(want);
    }

    // sliding: <= 64 always, exactly 64 once t >= 32 s
    ProtocolParams sliding;
    sliding.kind = ProtocolKind::SlidingWindow;
    PolicyFactory factory = [] { return make_no_compression_policy(16, 16, 2); };
    RunReport windowed = run_sliding_window_protocol(stream, factory, {40, 255, 256, 257, 520, 800}, sliding, "");
    for (const auto& q : windowed.queries) {
        if (q.frames_offered > 64)
            failure = "window exceeded 64 frames";
        if (q.query_tick >= 256 && q.frames_offered != 64)
            failure = "window at t>=32s offered " + std::to_string(q.frames_offered) + ", want 64";
    }
    report(6, failure.empty(),
           failure.empty() ? "streaming offers floor(2t) frames; window holds <= 64, == 64 past 32 s" : failure);
}

// 7. Directional policy ordering at matched budgets.
void criterion7() {
    double recall_pyramid = 0.0, recall_fifo = 0.0, recall_merge = 0.0;
    BankConfig cfg = BankConfig::online_default(4);
    std::vector<std::uint64_t> queries;
    for (std::uint64_t t = 480; t <= 4800; t += 480)  // every 60 s over 10 min
        queries.push_back(t);

    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        StreamSpec spec;
        spec.seed = 7000 + seed;
        spec.base_fps = 8;
        spec.duration_s = 600;
        spec.scene_count = 8;
        spec.height = 16;
        spec.width = 16;
        spec.depth = 4;
        spec.noise_sigma = 0.1f;
        Stream stream = gen_synthetic_stream(spec);

        std::vector<PolicyFactory> factories = {
            [&cfg] { return make_policy("pyramid", cfg); },
            [&cfg] { return make_policy("fifo", cfg); },
            [&cfg] { return make_policy("token-merge", cfg); },
        };
        ComparisonTable table = compare_policies(stream, factories, queries, ProtocolParams{}, "", 3);
        recall_pyramid += table.reports[0].aggregates.mean_scene_recall;
        recall_fifo += table.reports[1].aggregates.mean_scene_recall;
        recall_merge += table.reports[2].aggregates.mean_scene_recall;
    }
    recall_pyramid /= 100.0;
    recall_fifo /= 100.0;
    recall_merge /= 100.0;
    bool ok = recall_pyramid >= recall_fifo && recall_pyramid >= recall_merge;
    std::ostringstream detail;
    detail << "mean scene recall over 100 streams: pyramid " << recall_pyramid << " vs fifo " << recall_fifo
           << " vs token-merge " << recall_merge;
    report(7, ok, detail.str());
}

// 8. CLI determinism: identical flags and seed give byte-identical reports.
void criterion8(const std::string& cli) {
    namespace fs = std::filesystem;
    fs::path dir = fs::temp_directory_path() / "pmb_acceptance_cli";
    fs::remove_all(dir);
    fs::create_directories(dir);
    std::string stream1 = (dir / "s1.pmbs").string();
    std::string stream2 = (dir / "s2.pmbs").string();

    std::string gen_flags = " gen-stream --seed 7 --scenes 4 --duration 40 --fps 8 --dims 16x16x8 -o ";
    bool ok = run_cmd(cli + gen_flags + stream1) == 0 && run_cmd(cli + gen_flags + stream2) == 0 &&
              read_file(stream1) == read_file(stream2) && !read_file(stream1).empty();

    std::string sim_flags = " simulate -s " + stream1 +
                            " --policy pyramid --protocol streaming --query-every 10 --seed 7 --set depth=8 -o ";
    ok = ok && run_cmd(cli + sim_flags + (dir / "r1").string()) == 0;
    ok = ok && run_cmd(cli + sim_flags + (dir / "r2").string()) == 0;
    std::string report1 = read_file((dir / "r1" / "report.jsonl").string());
    ok = ok && !report1.empty() && report1 == read_file((dir / "r2" / "report.jsonl").string());
    ok = ok && read_file((dir / "r1" / "summary.csv").string()) == read_file((dir / "r2" / "summary.csv").string());

    // compare subcommand, all five policies, also deterministic
    std::string cmp_flags = " compare -s " + stream1 +
                            " --policies pyramid,fifo,token-merge,uniform,none --seed 7 --set depth=8 -o ";
    ok = ok && run_cmd(cli + cmp_flags + (dir / "c1").string()) == 0;
    ok = ok && run_cmd(cli + cmp_flags + (dir / "c2").string()) == 0;
    std::string summary = read_file((dir / "c1" / "summary.csv").string());
    ok = ok && !summary.empty() && summary == read_file((dir / "c2" / "summary.csv").string());

    fs::remove_all(dir);
    report(8, ok, "repeated CLI runs produce byte-identical stream files and reports");
}

// 9. Round-trip fidelity and corrupt-file handling.
void criterion9(const std::string& cli) {
    namespace fs = std::filesystem;
    fs::path dir = fs::temp_directory_path() / "pmb_acceptance_rt";
    fs::remove_all(dir);
    fs::create_directories(dir);

    std::mt19937 rng(9000);
    std::string failure;
    for (int rep = 0; rep < 50 && failure.empty(); ++rep) {
        StreamSpec spec;
        spec.seed = rng();
        spec.base_fps = 1 + rng() % 10;
        spec.duration_s = 1 + rng() % 6;
        spec.height = 1 + rng() % 6;
        spec.width = 1 + rng() % 6;
        spec.depth = 1 + rng() % 8;
        spec.scene_count = 1;
        spec.noise_sigma = 0.5f;
        Stream original = gen_synthetic_stream(spec);
        std::string path = (dir / "rt.pmbs").string();
        save_stream(path, original);
        Stream loaded = load_stream(path);
        if (loaded.frames.size() != original.frames.size()) {
            failure = "frame count changed in round-trip";
            break;
        }
        for (std::size_t i = 0; i < original.frames.size(); ++i)
            if (loaded.frames[i].tick != original.frames[i].tick ||
                loaded.frames[i].data != original.frames[i].data)
                failure = "payload changed in round-trip";
        if (loaded.scenes.size() != original.scenes.size())
            failure = "scene table changed in round-trip";
    }

    // corrupt-file behavior, at library level and as CLI exit codes
    std::string good = (dir / "good.pmbs").string();
    save_stream(good, gen_synthetic_stream(StreamSpec{1, 2, 2, 2, 2, 1, 1, 0.0f}));

    std::string bad_magic = (dir / "bad.pmbs").string();
    save_stream(bad_magic, gen_synthetic_stream(StreamSpec{1, 2, 2, 2, 2, 1, 1, 0.0f}));
    {
        std::fstream f(bad_magic, std::ios::in | std::ios::out | std::ios::binary);
        f.write("NOPE", 4);
    }
    bool threw_magic = false;
    try {
        load_stream(bad_magic);
    } catch (const BadMagic&) {
        threw_magic = true;
    }

    std::string truncated = (dir / "trunc.pmbs").string();
    save_stream(truncated, gen_synthetic_stream(StreamSpec{1, 2, 2, 2, 2, 1, 1, 0.0f}));
    fs::resize_file(truncated, fs::file_size(truncated) - 5);
    bool threw_trunc = false;
    try {
        load_stream(truncated);
    } catch (const TruncatedFile& e) {
        threw_trunc = e.byte_offset > 0;
    }

    bool cli_codes = run_cmd(cli + " inspect " + good) == 0 && run_cmd(cli + " inspect " + bad_magic) == 3 &&
                     run_cmd(cli + " inspect " + (dir / "missing.pmbs").string()) == 3 &&
                     run_cmd(cli + " gen-stream --dims 0x16x8 -o " + (dir / "zero.pmbs").string()) == 2;

    bool ok = failure.empty() && threw_magic && threw_trunc && cli_codes;
    if (!failure.empty())
        report(9, false, failure);
    else
        report(9, ok,
               std::string("50 round-trips bit-exact; corrupt files raise BadMagic/TruncatedFile; CLI exit codes ") +
                   (cli_codes ? "correct" : "wrong"));
    fs::remove_all(dir);
}

}  // namespace

int main(int argc, char** argv) {
    if (argc < 2) {
        std::cerr << "usage: acceptance <path-to-cli-binary>\n";
        return 2;
    }
    std::string cli = argv[1];

    criterion1();
    criterion2();
    criterion3();
    criterion4();
    criterion5();
    criterion6();
    criterion7();
    criterion8(cli);
    criterion9(cli);

    if (g_failures == 0) {
        std::cout << "all acceptance criteria passed\n";
        return 0;
    }
    std::cout << g_failures << " criterion(s) failed\n";
    return 1;
}
