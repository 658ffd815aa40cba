#pragma once

#include <functional>
#include <optional>
#include <string_view>
#include <span>
#include <vector>

#include "logmine/core.hpp"
#include "logmine/feedback.hpp"
#include "logmine/kernels.hpp"

namespace logmine {

/// One pass over the cluster's members in ascending index order. Without
/// `lossless_fb` no feedback is asked. With it, each LCS step goes through
/// lossless_template so the human can strip colliding parameters.
TokenSeq message_completion(const ClusterTemplatePair& cluster, const LogStore& logs,
                            FeedbackProvider* lossless_fb = nullptr);

struct LosslessResult {
    TokenSeq tmpl;
    std::size_t rounds = 0;  // dummy-token rounds taken
};

/// LCS of `a` and `b`, refined while the human reports message loss: the
/// named dummy tokens are trimmed from both inputs and the LCS recomputed.
/// A null dummy answer ends the loop with the current LCS.
LosslessResult lossless_template(TokenSeq a, TokenSeq b, FeedbackProvider& fb,
                                 std::span<const LogIndex> context = {});

/// Called after each streamed item with (processed, total).
using ProgressFn = std::function<void(std::size_t, std::size_t)>;

struct MergeResult {
    std::vector<ClusterTemplatePair> loss;
    std::vector<ClusterTemplatePair> complete;
    // Input pairs absorbed without a question, and loss judgements on input
    // pairs. Lossless-template checks during a merge are not included here.
    std::size_t absorbed = 0;
    std::size_t loss_checks = 0;
};

/// Streams `input` once. Pairs whose template contains a kept complete
/// template are absorbed; otherwise the human judges loss and, if complete,
/// picks a kept template to merge with.
MergeResult merge(std::span<const ClusterTemplatePair> input, const LogStore& logs, FeedbackProvider& fb,
                  const ProgressFn& progress = {});

/// Splits one cluster into pure, message-complete pairs, streaming its logs
/// in ascending index order. `cluster` must be non-empty. The parallel path
/// precomputes template matches per batch and revalidates them after every
/// template change, so it returns exactly what the serial path returns.
std::vector<ClusterTemplatePair> separation(std::span<const LogIndex> cluster, const LogStore& logs,
                                            FeedbackProvider& fb, Execution exec = Execution::Serial,
                                            const ProgressFn& progress = {});

inline constexpr std::size_t kUntilStableCap = 100;

struct PipelineProgress {
    std::size_t round = 0;
    std::string_view phase;  // "completion", "merge" or "separation"
    std::size_t done = 0;
    std::size_t total = 0;
};

struct PipelineOptions {
    /// Extra merge/separation rounds; nullopt repeats until the loss set is
    /// empty, at most kUntilStableCap rounds.
    std::optional<std::size_t> n_repeat = 0;
    bool lossless_completion = false;
    Execution exec = Execution::Parallel;
    std::function<void(const PipelineProgress&)> on_progress = nullptr;
};

struct RoundTrace {
    std::size_t merge_input = 0;
    std::size_t loss = 0;
    std::size_t complete = 0;
    std::size_t separated = 0;  // pairs produced by separation
    FeedbackCounters merge_feedback;
    FeedbackCounters separation_feedback;
};

struct PipelineTrace {
    std::vector<ClusterTemplatePair> completed;  // after message completion
    std::vector<RoundTrace> rounds;
};

/// Message completion on every pair, then merge/separation rounds. The
/// result is re-validated as a full, disjoint clustering.
MinedClustering pipeline(const MinedClustering& base, const LogStore& logs, FeedbackProvider& fb,
                         const PipelineOptions& options = {}, PipelineTrace* trace = nullptr);

}  // namespace logmine
