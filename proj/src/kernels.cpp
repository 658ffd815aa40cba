#include "logmine/kernels.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace logmine {

int worker_threads() noexcept {
#ifdef _OPENMP
    return omp_get_max_threads();
#else
    return 1;
#endif
}

std::int64_t first_embedding(std::span<const TokenSeq> templates, std::span<const Token> log,
                             std::size_t start) noexcept {
    for (std::size_t i = start; i < templates.size(); ++i)
        if (is_subsequence(templates[i], log)) return static_cast<std::int64_t>(i);
    return kNoMatch;
}

std::vector<std::int64_t> first_embedding_batch(std::span<const TokenSeq> templates, const LogStore& logs,
                                                std::span<const LogIndex> batch, Execution exec) {
    std::vector<std::int64_t> out(batch.size(), kNoMatch);
    const auto size = static_cast<std::int64_t>(batch.size());
    if (exec == Execution::Parallel) {
#pragma omp parallel for schedule(static)
        for (std::int64_t i = 0; i < size; ++i) out[i] = first_embedding(templates, logs[batch[i]]);
    } else {
        for (std::int64_t i = 0; i < size; ++i) out[i] = first_embedding(templates, logs[batch[i]]);
    }
    return out;
}

TokenSeq complete_message(std::span<const LogIndex> members, const TokenSeq& mined, const LogStore& logs) {
    if (members.empty()) return mined;
    TokenSeq running = logs[members.front()];
    for (std::size_t i = 1; i < members.size(); ++i) {
        const TokenSeq& log = logs[members[i]];
        if (is_subsequence(running, log)) continue;
        running = lcs(running, log);
        if (!is_subsequence(mined, running)) return mined;
    }
    return running;
}

std::vector<TokenSeq> complete_messages(std::span<const ClusterTemplatePair> pairs, const LogStore& logs,
                                        Execution exec) {
    std::vector<TokenSeq> out(pairs.size());
    const auto size = static_cast<std::int64_t>(pairs.size());
    if (exec == Execution::Parallel) {
#pragma omp parallel for schedule(dynamic)
        for (std::int64_t p = 0; p < size; ++p) out[p] = complete_message(pairs[p].members, pairs[p].tmpl, logs);
    } else {
        for (std::int64_t p = 0; p < size; ++p) out[p] = complete_message(pairs[p].members, pairs[p].tmpl, logs);
    }
    return out;
}

}  // namespace logmine
