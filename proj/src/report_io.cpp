// Copyright (c) 2026 pmbank contributors
// SPDX-License-Identifier: Apache-2.0

#include "pmb/report_io.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace pmb {

using nlohmann::json;

void write_file_atomic(const std::string& path, const std::string& contents) {
    std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out)
            throw IoError("cannot open for writing: " + tmp);
        out << contents;
        if (!out)
            throw IoError("write failed: " + tmp);
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec)
        throw IoError("rename failed: " + tmp + " -> " + path + ": " + ec.message());
}

void write_report_jsonl(const std::string& path, const ReportMeta& meta, const std::vector<RunReport>& reports) {
    std::ostringstream out;
    json meta_line = {
        {"type", "meta"},         {"config", meta.config_text}, {"config_digest", meta.config_digest},
        {"seed", meta.seed},      {"stream", meta.stream_path}, {"protocol", meta.protocol},
    };
    out << meta_line.dump() << "\n";
    for (const auto& report : reports) {
        for (const auto& q : report.queries) {
            json line = {
                {"type", "query"},
                {"policy", report.policy},
                {"simulator_only", report.simulator_only},
                {"query_tick", q.query_tick},
                {"frames_offered", q.frames_offered},
                {"frames_in_readout", q.frames_in_readout},
                {"token_count", q.token_count},
                {"scene_recall", q.scene_recall},
                {"temporal_coverage", q.temporal_coverage},
            };
            if (report.budget)
                line["budget"] = *report.budget;
            out << line.dump() << "\n";
        }
    }
    write_file_atomic(path, out.str());
}

void write_summary_csv(const std::string& path, const std::vector<RunReport>& reports,
                       const std::vector<std::size_t>& ranked_indices) {
    std::ostringstream out;
    out << "policy,budget,simulator_only,mean_scene_recall,peak_tokens,tokens_appended,tokens_erased,"
           "recompute_savings\n";
    auto row = [&](const RunReport& r) {
        out << r.policy << ",";
        if (r.budget)
            out << *r.budget;
        else
            out << "unbounded";
        out << "," << (r.simulator_only ? 1 : 0);
        char buf[64];
        std::snprintf(buf, sizeof(buf), ",%.6f", r.aggregates.mean_scene_recall);
        out << buf;
        out << "," << r.aggregates.peak_tokens << "," << r.aggregates.tokens_appended << ","
            << r.aggregates.tokens_erased;
        std::snprintf(buf, sizeof(buf), ",%.6f", r.aggregates.recompute_savings);
        out << buf << "\n";
    };
    if (ranked_indices.size() == reports.size()) {
        for (std::size_t i : ranked_indices)
            row(reports[i]);
    } else {
        for (const auto& r : reports)
            row(r);
    }
    write_file_atomic(path, out.str());
}

void write_timings_csv(const std::string& path, const std::vector<RunReport>& reports) {
    std::ostringstream out;
    out << "policy,wall_time_s\n";
    for (const auto& r : reports) {
        char buf[64];
        std::snprintf(buf, sizeof(buf), "%.6f", r.wall_time_s);
        out << r.policy << "," << buf << "\n";
    }
    write_file_atomic(path, out.str());
}

}  // namespace pmb
