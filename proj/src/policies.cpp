// Copyright (c) 2026 pmbank contributors
// SPDX-License-Identifier: Apache-2.0

#include "pmb/policies.hpp"

#include <algorithm>
#include <cmath>
#include <deque>

#include "pmb/tensor_ops.hpp"

namespace pmb {

namespace {

void check_frame_input(std::optional<std::uint64_t>& last_tick, Timestamp ts, const FeatureGrid& grid,
                       std::uint32_t res_h, std::uint32_t res_w, std::uint32_t depth) {
    if (last_tick && ts.tick <= *last_tick)
        throw NonMonotonicTimestamp("policy ingest: tick " + std::to_string(ts.tick) + " not after " +
                                    std::to_string(*last_tick));
    if (grid.height != res_h || grid.width != res_w || grid.depth != depth)
        throw ShapeMismatch("policy ingest: unexpected grid shape");
    last_tick = ts.tick;
}

/// Index of the most-similar adjacent pair, ties to the earliest pair,
/// ZeroVector below everything. Same rule the bank applies.
std::size_t most_similar_adjacent(const std::vector<Frame>& frames) {
    std::size_t best = 0;
    std::optional<float> best_sim;
    for (std::size_t i = 0; i + 1 < frames.size(); ++i) {
        std::optional<float> sim = pooled_pair_similarity(frames[i], frames[i + 1]);
        if (i == 0) {
            best_sim = sim;
        } else if (sim && (!best_sim || *sim > *best_sim)) {
            best = i;
            best_sim = sim;
        }
    }
    return best;
}

class FifoPolicy final : public Policy {
public:
    FifoPolicy(std::size_t capacity, std::uint32_t res_h, std::uint32_t res_w, std::uint32_t depth)
        : capacity_(capacity), res_h_(res_h), res_w_(res_w), depth_(depth) {
        if (capacity_ < 1)
            throw InvalidArgument("fifo: capacity must be >= 1");
    }

    std::string_view name() const override { return "fifo"; }

    std::vector<SyncEvent> ingest(Timestamp ts, const FeatureGrid& grid) override {
        check_frame_input(last_tick_, ts, grid, res_h_, res_w_, depth_);
        frames_.push_back(Frame{ts, grid, 1, FrameOrigin::StreamSampled});
        std::vector<SyncEvent> events;
        while (frames_.size() > capacity_) {
            events.push_back(SyncEvent{frames_.front().ts, 1, static_cast<std::uint32_t>(events.size() + 1)});
            frames_.pop_front();
        }
        return events;
    }

    std::vector<Frame> readout() const override { return {frames_.begin(), frames_.end()}; }
    std::size_t token_count() const override {
        return frames_.size() * static_cast<std::size_t>(res_h_) * res_w_;
    }
    std::optional<std::size_t> budget() const override {
        return capacity_ * static_cast<std::size_t>(res_h_) * res_w_;
    }

private:
    std::size_t capacity_;
    std::uint32_t res_h_, res_w_, depth_;
    std::deque<Frame> frames_;
    std::optional<std::uint64_t> last_tick_;
};

class TokenMergePolicy final : public Policy {
public:
    TokenMergePolicy(std::size_t capacity, std::uint32_t res_h, std::uint32_t res_w, std::uint32_t depth)
        : capacity_(capacity), res_h_(res_h), res_w_(res_w), depth_(depth) {
        if (capacity_ < 2)
            throw InvalidArgument("token-merge: capacity must be >= 2");
    }

    std::string_view name() const override { return "token-merge"; }

    std::vector<SyncEvent> ingest(Timestamp ts, const FeatureGrid& grid) override {
        check_frame_input(last_tick_, ts, grid, res_h_, res_w_, depth_);
        frames_.push_back(Frame{ts, grid, 1, FrameOrigin::StreamSampled});
        std::vector<SyncEvent> events;
        while (frames_.size() > capacity_) {
            std::size_t i = most_similar_adjacent(frames_);
            Frame& earlier = frames_[i];
            const Frame& later = frames_[i + 1];
            for (std::size_t k = 0; k < earlier.grid.data.size(); ++k)
                earlier.grid.data[k] = (earlier.grid.data[k] + later.grid.data[k]) * 0.5f;
            events.push_back(SyncEvent{earlier.ts, 1, static_cast<std::uint32_t>(events.size() + 1)});
            frames_.erase(frames_.begin() + static_cast<std::ptrdiff_t>(i + 1));
        }
        return events;
    }

    std::vector<Frame> readout() const override { return frames_; }
    std::size_t token_count() const override {
        return frames_.size() * static_cast<std::size_t>(res_h_) * res_w_;
    }
    std::optional<std::size_t> budget() const override {
        return capacity_ * static_cast<std::size_t>(res_h_) * res_w_;
    }

private:
    std::size_t capacity_;
    std::uint32_t res_h_, res_w_, depth_;
    std::vector<Frame> frames_;
    std::optional<std::uint64_t> last_tick_;
};

class UniformSamplePolicy final : public Policy {
public:
    UniformSamplePolicy(std::size_t k, std::uint32_t res_h, std::uint32_t res_w, std::uint32_t depth)
        : k_(k), res_h_(res_h), res_w_(res_w), depth_(depth) {
        if (k_ < 2)
            throw InvalidArgument("uniform: k must be >= 2");
    }

    std::string_view name() const override { return "uniform"; }

    std::vector<SyncEvent> ingest(Timestamp ts, const FeatureGrid& grid) override {
        check_frame_input(last_tick_, ts, grid, res_h_, res_w_, depth_);
        shadow_.push_back(Frame{ts, grid, 1, FrameOrigin::StreamSampled});
        return {};  // offline semantics, no cache sync
    }

    std::vector<Frame> readout() const override {
        const std::size_t n = shadow_.size();
        if (n <= k_)
            return shadow_;
        std::vector<Frame> out;
        out.reserve(k_);
        for (std::size_t j = 0; j < k_; ++j) {
            // round half up on j*(N-1)/(k-1)
            std::size_t index = (j * (n - 1) * 2 + (k_ - 1)) / (2 * (k_ - 1));
            out.push_back(shadow_[index]);
        }
        return out;
    }

    std::size_t token_count() const override {
        return std::min(shadow_.size(), k_) * static_cast<std::size_t>(res_h_) * res_w_;
    }
    std::optional<std::size_t> budget() const override {
        return k_ * static_cast<std::size_t>(res_h_) * res_w_;
    }
    bool simulator_only() const override { return true; }

private:
    std::size_t k_;
    std::uint32_t res_h_, res_w_, depth_;
    std::vector<Frame> shadow_;
    std::optional<std::uint64_t> last_tick_;
};

class NoCompressionPolicy final : public Policy {
public:
    NoCompressionPolicy(std::uint32_t res_h, std::uint32_t res_w, std::uint32_t depth)
        : res_h_(res_h), res_w_(res_w), depth_(depth) {}

    std::string_view name() const override { return "none"; }

    std::vector<SyncEvent> ingest(Timestamp ts, const FeatureGrid& grid) override {
        check_frame_input(last_tick_, ts, grid, res_h_, res_w_, depth_);
        frames_.push_back(Frame{ts, grid, 1, FrameOrigin::StreamSampled});
        return {};
    }

    std::vector<Frame> readout() const override { return frames_; }
    std::size_t token_count() const override {
        return frames_.size() * static_cast<std::size_t>(res_h_) * res_w_;
    }
    std::optional<std::size_t> budget() const override { return std::nullopt; }
    bool simulator_only() const override { return true; }

private:
    std::uint32_t res_h_, res_w_, depth_;
    std::vector<Frame> frames_;
    std::optional<std::uint64_t> last_tick_;
};

class PyramidPolicyImpl final : public Policy {
public:
    explicit PyramidPolicyImpl(const BankConfig& cfg) : bank_(cfg) {}

    std::string_view name() const override { return "pyramid"; }
    std::vector<SyncEvent> ingest(Timestamp ts, const FeatureGrid& grid) override { return bank_.ingest(ts, grid); }
    std::vector<Frame> readout() const override { return bank_.readout(); }
    std::size_t token_count() const override { return bank_.token_count(); }
    std::optional<std::size_t> budget() const override { return bank_.config().total_token_budget(); }

private:
    PyramidMemoryBank bank_;
};

}  // namespace

std::unique_ptr<Policy> make_fifo_policy(std::size_t capacity, std::uint32_t res_h, std::uint32_t res_w,
                                         std::uint32_t depth) {
    return std::make_unique<FifoPolicy>(capacity, res_h, res_w, depth);
}

std::unique_ptr<Policy> make_token_merge_policy(std::size_t capacity, std::uint32_t res_h, std::uint32_t res_w,
                                                std::uint32_t depth) {
    return std::make_unique<TokenMergePolicy>(capacity, res_h, res_w, depth);
}

std::unique_ptr<Policy> make_uniform_sample_policy(std::size_t k, std::uint32_t res_h, std::uint32_t res_w,
                                                   std::uint32_t depth) {
    return std::make_unique<UniformSamplePolicy>(k, res_h, res_w, depth);
}

std::unique_ptr<Policy> make_no_compression_policy(std::uint32_t res_h, std::uint32_t res_w, std::uint32_t depth) {
    return std::make_unique<NoCompressionPolicy>(res_h, res_w, depth);
}

std::unique_ptr<Policy> make_pyramid_policy(const BankConfig& cfg) {
    return std::make_unique<PyramidPolicyImpl>(cfg);
}

std::size_t matched_frame_capacity(std::size_t budget_tokens, std::size_t tokens_per_frame) {
    if (tokens_per_frame == 0)
        throw InvalidArgument("matched_frame_capacity: tokens_per_frame must be positive");
    return std::max<std::size_t>(1, budget_tokens / tokens_per_frame);
}

std::unique_ptr<Policy> make_policy(std::string_view name, const BankConfig& cfg) {
    const LayerConfig& first = cfg.layers.front();
    std::size_t matched = matched_frame_capacity(cfg.total_token_budget(), first.tokens_per_frame());
    if (name == "pyramid")
        return make_pyramid_policy(cfg);
    if (name == "fifo")
        return make_fifo_policy(matched, first.res_h, first.res_w, cfg.depth);
    if (name == "token-merge")
        return make_token_merge_policy(std::max<std::size_t>(2, matched), first.res_h, first.res_w, cfg.depth);
    if (name == "uniform")
        return make_uniform_sample_policy(std::max<std::size_t>(2, matched), first.res_h, first.res_w, cfg.depth);
    if (name == "none")
        return make_no_compression_policy(first.res_h, first.res_w, cfg.depth);
    throw InvalidArgument("unknown policy: " + std::string(name));
}

}  // namespace pmb
