// Copyright (c) 2026 pmbank contributors
// SPDX-License-Identifier: Apache-2.0

#include <cstdlib>
#include <filesystem>
#include <map>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "pmb/core_types.hpp"
#include "pmb/policies.hpp"
#include "pmb/protocols.hpp"
#include "pmb/report_io.hpp"
#include "pmb/stream.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;
constexpr int kExitIo = 3;
constexpr int kExitProtocol = 4;

std::uint64_t default_seed() {
    if (const char* env = std::getenv("PMB_SEED"))
        return std::strtoull(env, nullptr, 10);
    return 0;
}

/// "16x16x8" -> (16, 16, 8)
void parse_dims(const std::string& dims, std::uint32_t& h, std::uint32_t& w, std::uint32_t& d) {
    unsigned a = 0, b = 0, c = 0;
    char x1 = 0, x2 = 0;
    std::istringstream in(dims);
    if (!(in >> a >> x1 >> b >> x2 >> c) || x1 != 'x' || x2 != 'x' || !in.eof())
        throw pmb::InvalidSpec("bad --dims value '" + dims + "', expected HxWxD");
    h = a;
    w = b;
    d = c;
}

/// Apply `--set key=value` overrides on top of the file config.
void apply_overrides(pmb::BankConfig& cfg, const std::vector<std::string>& overrides) {
    std::string text = pmb::render_config(cfg);
    for (const auto& kv : overrides) {
        std::size_t eq = kv.find('=');
        if (eq == std::string::npos)
            throw pmb::ConfigParseError("--set expects key=value, got '" + kv + "'");
        text += kv.substr(0, eq) + " = " + kv.substr(eq + 1) + "\n";
    }
    std::istringstream in(text);
    cfg = pmb::parse_config(in);
}

std::vector<std::uint64_t> build_query_ticks(const pmb::Stream& stream, double query_every_s,
                                             const std::vector<double>& query_at_s) {
    std::vector<std::uint64_t> ticks;
    if (!query_at_s.empty()) {
        for (double t : query_at_s)
            ticks.push_back(static_cast<std::uint64_t>(t * stream.base_fps + 0.5));
        return ticks;
    }
    std::uint64_t every = static_cast<std::uint64_t>(query_every_s * stream.base_fps + 0.5);
    if (every == 0)
        throw pmb::InvalidArgument("--query-every must be positive");
    std::uint64_t end = stream.frames.empty() ? 0 : stream.frames.back().tick + 1;
    for (std::uint64_t t = every; t <= end; t += every)
        ticks.push_back(t);
    if (ticks.empty() && end > 0)
        ticks.push_back(end);
    return ticks;
}

struct SimulateArgs {
    std::string stream_path;
    std::string config_path;
    std::vector<std::string> overrides;
    std::string protocol = "streaming";
    std::uint32_t fps = 2;
    std::uint32_t window_s = 32;
    double query_every_s = 10.0;
    std::vector<double> query_at_s;
    std::string out_dir = ".";
    std::uint64_t seed = default_seed();
    unsigned jobs = 1;
};

pmb::BankConfig resolve_config(const SimulateArgs& args) {
    pmb::BankConfig cfg =
        args.config_path.empty() ? pmb::BankConfig::online_default() : pmb::load_config(args.config_path);
    apply_overrides(cfg, args.overrides);
    pmb::ValidationReport report = pmb::validate_config(cfg);
    if (!report.ok) {
        std::string msg = "invalid config:";
        for (const auto& v : report.violations)
            msg += "\n  " + v;
        throw pmb::InvalidConfig(msg);
    }
    return cfg;
}

pmb::ProtocolParams protocol_params(const SimulateArgs& args) {
    pmb::ProtocolParams params;
    if (args.protocol == "streaming")
        params.kind = pmb::ProtocolKind::Streaming;
    else if (args.protocol == "sliding")
        params.kind = pmb::ProtocolKind::SlidingWindow;
    else
        throw pmb::InvalidArgument("unknown protocol '" + args.protocol + "' (use streaming or sliding)");
    params.fps = args.fps;
    params.window_s = args.window_s;
    return params;
}

void write_reports(const SimulateArgs& args, const pmb::BankConfig& cfg, const pmb::ComparisonTable& table) {
    std::filesystem::create_directories(args.out_dir);
    pmb::ReportMeta meta;
    meta.config_text = pmb::render_config(cfg);
    meta.config_digest = pmb::config_digest(cfg);
    meta.seed = args.seed;
    meta.stream_path = std::filesystem::path(args.stream_path).filename().string();
    meta.protocol = args.protocol;
    pmb::write_report_jsonl(args.out_dir + "/report.jsonl", meta, table.reports);
    pmb::write_summary_csv(args.out_dir + "/summary.csv", table.reports, table.ranked_indices);
    pmb::write_timings_csv(args.out_dir + "/timings.csv", table.reports);
}

pmb::ComparisonTable run_policies(const SimulateArgs& args, const pmb::BankConfig& cfg,
                                  const std::vector<std::string>& policy_names) {
    pmb::Stream stream = pmb::load_stream(args.stream_path);
    if (stream.depth != cfg.depth)
        throw pmb::InvalidConfig("stream depth " + std::to_string(stream.depth) + " != config depth " +
                                 std::to_string(cfg.depth));
    std::vector<std::uint64_t> queries = build_query_ticks(stream, args.query_every_s, args.query_at_s);
    pmb::ProtocolParams params = protocol_params(args);
    std::string digest = pmb::config_digest(cfg);

    std::vector<pmb::PolicyFactory> factories;
    for (const auto& name : policy_names)
        factories.push_back([name, &cfg] { return pmb::make_policy(name, cfg); });

    if (factories.size() == 1) {
        // single run; compare_policies requires >= 2
        pmb::ComparisonTable table;
        if (params.kind == pmb::ProtocolKind::Streaming) {
            auto policy = factories[0]();
            table.reports.push_back(pmb::run_streaming_protocol(stream, *policy, queries, params, digest));
        } else {
            table.reports.push_back(pmb::run_sliding_window_protocol(stream, factories[0], queries, params, digest));
        }
        table.ranked_indices = {0};
        return table;
    }
    return pmb::compare_policies(stream, factories, queries, params, digest, args.jobs);
}

int cmd_gen_stream(const pmb::StreamSpec& spec, const std::string& out_path) {
    pmb::Stream stream = pmb::gen_synthetic_stream(spec);
    pmb::save_stream(out_path, stream);

    std::ostringstream scenes;
    scenes << "scene_id,start_tick,end_tick\n";
    for (const auto& s : stream.scenes)
        scenes << s.scene_id << "," << s.start_tick << "," << s.end_tick << "\n";
    pmb::write_file_atomic(out_path + ".scenes.csv", scenes.str());

    std::uintmax_t bytes = std::filesystem::file_size(out_path);
    std::cout << "wrote " << stream.frames.size() << " frames, " << bytes << " bytes to " << out_path << "\n";
    return kExitOk;
}

int cmd_inspect(const std::string& path) {
    std::ifstream probe(path, std::ios::binary);
    if (!probe)
        throw pmb::IoError("cannot open: " + path);
    char magic[4] = {};
    probe.read(magic, 4);
    probe.close();

    if (std::string(magic, 4) == "PMBS") {
        pmb::Stream stream = pmb::load_stream(path);
        std::cout << "stream file: " << path << "\n"
                  << "  base_fps: " << stream.base_fps << "\n"
                  << "  dims: " << stream.height << "x" << stream.width << "x" << stream.depth << "\n"
                  << "  frames: " << stream.frames.size() << "\n"
                  << "  scenes: " << stream.scenes.size() << "\n";
        for (const auto& s : stream.scenes)
            std::cout << "    scene " << s.scene_id << ": ticks [" << s.start_tick << ", " << s.end_tick << ")\n";
        return kExitOk;
    }

    // report.jsonl: aggregate per policy
    std::ifstream in(path);
    std::string line;
    std::map<std::string, std::pair<double, std::size_t>> recall;  // sum, count
    std::map<std::string, std::size_t> peak;
    bool any = false;
    while (std::getline(in, line)) {
        if (line.empty())
            continue;
        nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
        if (j.is_discarded())
            throw pmb::IoError(path + ": not a stream file (bad magic) and not JSON-lines");
        any = true;
        if (j.value("type", "") != "query")
            continue;
        std::string policy = j.value("policy", "?");
        recall[policy].first += j.value("scene_recall", 0.0);
        recall[policy].second += 1;
        peak[policy] = std::max(peak[policy], j.value("token_count", std::size_t{0}));
    }
    if (!any)
        throw pmb::IoError(path + ": empty or unreadable");
    std::cout << "report: " << path << "\n";
    for (const auto& [policy, acc] : recall) {
        double mean = acc.second ? acc.first / acc.second : 0.0;
        std::cout << "  " << policy << ": mean scene recall " << mean << ", peak tokens " << peak[policy] << " over "
                  << acc.second << " queries\n";
    }
    return kExitOk;
}

int dispatch(int argc, char** argv) {
    CLI::App app{"pyramid memory bank stream simulator"};
    app.require_subcommand(1);

    // gen-stream
    auto* gen = app.add_subcommand("gen-stream", "generate a deterministic synthetic stream");
    pmb::StreamSpec spec;
    spec.seed = default_seed();
    std::string dims = "16x16x8";
    std::string gen_out;
    gen->add_option("--seed", spec.seed, "rng seed");
    gen->add_option("--scenes", spec.scene_count, "scene count");
    gen->add_option("--duration", spec.duration_s, "stream length in seconds");
    gen->add_option("--fps", spec.base_fps, "base frame rate");
    gen->add_option("--dims", dims, "frame dims HxWxD");
    gen->add_option("--noise", spec.noise_sigma, "noise sigma");
    gen->add_option("-o,--out", gen_out, "output stream file")->required();

    // shared simulate/compare options
    SimulateArgs sim;
    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("-s,--stream", sim.stream_path, "input stream file")->required();
        cmd->add_option("-c,--config", sim.config_path, "bank config file (default: online 832-token config)");
        cmd->add_option("--set", sim.overrides, "config override key=value (repeatable)");
        cmd->add_option("--protocol", sim.protocol, "streaming | sliding");
        cmd->add_option("--fps", sim.fps, "protocol resample fps");
        cmd->add_option("--window", sim.window_s, "sliding window seconds");
        cmd->add_option("--query-every", sim.query_every_s, "query period in seconds");
        cmd->add_option("--query-at", sim.query_at_s, "explicit query times in seconds");
        cmd->add_option("-o,--out", sim.out_dir, "output directory");
        cmd->add_option("--seed", sim.seed, "seed echoed into reports");
    };

    auto* simulate = app.add_subcommand("simulate", "run one policy over a stream");
    std::string policy_name = "pyramid";
    add_common(simulate);
    simulate->add_option("--policy", policy_name, "pyramid | fifo | token-merge | uniform | none");

    auto* compare = app.add_subcommand("compare", "run several policies and rank them");
    std::string policies_csv = "pyramid,fifo,token-merge,uniform,none";
    add_common(compare);
    compare->add_option("--policies", policies_csv, "comma-separated policy names");
    compare->add_option("--jobs", sim.jobs, "parallel worker count");

    auto* inspect = app.add_subcommand("inspect", "describe a stream or report file");
    std::string inspect_path;
    inspect->add_option("path", inspect_path, "stream or report file")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    if (gen->parsed()) {
        parse_dims(dims, spec.height, spec.width, spec.depth);
        return cmd_gen_stream(spec, gen_out);
    }
    if (simulate->parsed()) {
        pmb::BankConfig cfg = resolve_config(sim);
        pmb::ComparisonTable table = run_policies(sim, cfg, {policy_name});
        write_reports(sim, cfg, table);
        std::cout << "policy " << policy_name << ": mean scene recall "
                  << table.reports[0].aggregates.mean_scene_recall << ", peak tokens "
                  << table.reports[0].aggregates.peak_tokens << "\n";
        return kExitOk;
    }
    if (compare->parsed()) {
        std::vector<std::string> names;
        std::stringstream ss(policies_csv);
        std::string item;
        while (std::getline(ss, item, ','))
            if (!item.empty())
                names.push_back(item);
        for (std::size_t i = 0; i < names.size(); ++i)
            for (std::size_t j = i + 1; j < names.size(); ++j)
                if (names[i] == names[j])
                    throw pmb::InvalidArgument("duplicate policy name: " + names[i]);
        if (names.size() < 2)
            throw pmb::InvalidArgument("compare needs at least two policies");
        pmb::BankConfig cfg = resolve_config(sim);
        pmb::ComparisonTable table = run_policies(sim, cfg, names);
        write_reports(sim, cfg, table);
        for (std::size_t rank = 0; rank < table.ranked_indices.size(); ++rank) {
            const auto& r = table.reports[table.ranked_indices[rank]];
            std::cout << (rank + 1) << ". " << r.policy << "  recall=" << r.aggregates.mean_scene_recall
                      << "  peak_tokens=" << r.aggregates.peak_tokens << "\n";
        }
        return kExitOk;
    }
    if (inspect->parsed())
        return cmd_inspect(inspect_path);
    return kExitUsage;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return dispatch(argc, argv);
    } catch (const pmb::QueryOutOfRange& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitProtocol;
    } catch (const pmb::IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitIo;
    } catch (const pmb::Error& e) {
        // config / spec / argument problems
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitIo;
    }
}
