// Copyright (c) 2026 pmbank contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <vector>

#include "pmb/protocols.hpp"

namespace pmb {

struct ReportMeta {
    std::string config_text;  // fully resolved key=value rendering
    std::string config_digest;
    std::uint64_t seed = 0;
    std::string stream_path;
    std::string protocol;
};

/// JSON-lines report: one meta line, then one line per (policy, query)
/// record. Deterministic: no wall-time fields. Atomic write.
void write_report_jsonl(const std::string& path, const ReportMeta& meta, const std::vector<RunReport>& reports);

/// CSV summary, one row per policy in ranked order (mean scene recall
/// descending, ties stable). Deterministic.
void write_summary_csv(const std::string& path, const std::vector<RunReport>& reports,
                       const std::vector<std::size_t>& ranked_indices);

/// Wall-clock times, kept out of the deterministic report files.
void write_timings_csv(const std::string& path, const std::vector<RunReport>& reports);

/// Atomic text write used by all report writers.
void write_file_atomic(const std::string& path, const std::string& contents);

}  // namespace pmb
