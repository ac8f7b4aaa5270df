// Copyright (c) 2026 pmbank contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "pmb/core_types.hpp"
#include "pmb/memory_bank.hpp"

namespace pmb {

/// Common surface for all memory update policies so the harness can drive
/// them interchangeably. Single-writer per instance.
class Policy {
public:
    virtual ~Policy() = default;

    virtual std::string_view name() const = 0;
    virtual std::vector<SyncEvent> ingest(Timestamp ts, const FeatureGrid& grid) = 0;
    virtual std::vector<Frame> readout() const = 0;
    virtual std::size_t token_count() const = 0;

    /// nullopt for unbounded policies.
    virtual std::optional<std::size_t> budget() const = 0;

    /// True for policies that keep an unbounded shadow of the stream and
    /// only exist for comparison runs (uniform sample, no compression).
    virtual bool simulator_only() const { return false; }
};

/// Single full-resolution queue; overflow evicts the oldest frame.
std::unique_ptr<Policy> make_fifo_policy(std::size_t capacity, std::uint32_t res_h, std::uint32_t res_w,
                                         std::uint32_t depth);

/// Overflow merges the most-similar adjacent pair (pooled cosine, same tie
/// rules as the bank) into their element-wise mean, keeping the earlier
/// timestamp.
std::unique_ptr<Policy> make_token_merge_policy(std::size_t capacity, std::uint32_t res_h, std::uint32_t res_w,
                                                std::uint32_t depth);

/// Retrospective: keeps the whole stream and reads out k uniformly spaced
/// frames, indices round(j*(N-1)/(k-1)), round half up.
std::unique_ptr<Policy> make_uniform_sample_policy(std::size_t k, std::uint32_t res_h, std::uint32_t res_w,
                                                   std::uint32_t depth);

/// Retains everything, no budget.
std::unique_ptr<Policy> make_no_compression_policy(std::uint32_t res_h, std::uint32_t res_w, std::uint32_t depth);

/// Adapter over PyramidMemoryBank.
std::unique_ptr<Policy> make_pyramid_policy(const BankConfig& cfg);

class PyramidPolicy;

/// Frame capacity for a flat baseline at or just under the pyramid budget:
/// floor(budget / tokens_per_frame), at least 1.
std::size_t matched_frame_capacity(std::size_t budget_tokens, std::size_t tokens_per_frame);

/// CLI policy names: pyramid, fifo, token-merge, uniform, none. Flat
/// baselines get capacities matched to cfg's budget at layer-1 resolution.
/// Throws InvalidArgument for unknown names.
std::unique_ptr<Policy> make_policy(std::string_view name, const BankConfig& cfg);

}  // namespace pmb
