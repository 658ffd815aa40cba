#pragma once

// Data-parallel inner loops of the refinement pipeline. Every kernel has a
// serial reference path; the OpenMP path must produce identical results and
// is compared against it in tests and in the benchmark target.

#include <cstdint>
#include <span>
#include <vector>

#include "logmine/core.hpp"

namespace logmine {

enum class Execution { Serial, Parallel };

inline constexpr std::int64_t kNoMatch = -1;

/// Index of the first template (from `start` on) that embeds in `log`.
std::int64_t first_embedding(std::span<const TokenSeq> templates, std::span<const Token> log,
                             std::size_t start = 0) noexcept;

/// first_embedding for a batch of logs against one template snapshot.
std::vector<std::int64_t> first_embedding_batch(std::span<const TokenSeq> templates, const LogStore& logs,
                                                std::span<const LogIndex> batch, Execution exec);

/// Streaming LCS reduction over one cluster's members (ascending index);
/// returns the cluster's mined template as soon as the running LCS stops
/// containing it. Feedback-free.
TokenSeq complete_message(std::span<const LogIndex> members, const TokenSeq& mined, const LogStore& logs);

/// complete_message for every pair, pairs being independent.
std::vector<TokenSeq> complete_messages(std::span<const ClusterTemplatePair> pairs, const LogStore& logs,
                                        Execution exec);

/// Number of logs whose own reference template embeds in their cluster's
/// template; `reference_of(n)` returns that template.
template <typename RefFn>
std::size_t count_embedded_members(std::span<const ClusterTemplatePair> pairs, RefFn&& reference_of,
                                   Execution exec) {
    std::size_t total = 0;
    const auto n_pairs = static_cast<std::int64_t>(pairs.size());
    if (exec == Execution::Parallel) {
#pragma omp parallel for schedule(dynamic) reduction(+ : total)
        for (std::int64_t p = 0; p < n_pairs; ++p)
            for (LogIndex n : pairs[p].members)
                if (is_subsequence(reference_of(n), pairs[p].tmpl)) ++total;
    } else {
        for (std::int64_t p = 0; p < n_pairs; ++p)
            for (LogIndex n : pairs[p].members)
                if (is_subsequence(reference_of(n), pairs[p].tmpl)) ++total;
    }
    return total;
}

int worker_threads() noexcept;

}  // namespace logmine
