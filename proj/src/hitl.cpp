#include "logmine/hitl.hpp"

#include <algorithm>

namespace logmine {

namespace {

constexpr std::size_t kContextSamples = 3;
constexpr std::size_t kSeparationBatch = 8192;

std::span<const LogIndex> context_of(const ClusterTemplatePair& pair) {
    return std::span<const LogIndex>(pair.members).first(std::min(pair.members.size(), kContextSamples));
}

}  // namespace

TokenSeq message_completion(const ClusterTemplatePair& cluster, const LogStore& logs, FeedbackProvider* lossless_fb) {
    if (cluster.members.empty()) throw ValidationError("message completion needs a non-empty cluster");
    if (!lossless_fb) return complete_message(cluster.members, cluster.tmpl, logs);

    TokenSeq running = logs[cluster.members.front()];
    for (std::size_t i = 1; i < cluster.members.size(); ++i) {
        const TokenSeq& log = logs[cluster.members[i]];
        if (is_subsequence(running, log)) continue;
        const LogIndex ctx[] = {cluster.members.front(), cluster.members[i]};
        running = lossless_template(std::move(running), log, *lossless_fb, ctx).tmpl;
        if (!is_subsequence(cluster.tmpl, running)) return cluster.tmpl;
    }
    return running;
}

LosslessResult lossless_template(TokenSeq a, TokenSeq b, FeedbackProvider& fb, std::span<const LogIndex> context) {
    LosslessResult result{lcs(a, b), 0};
    while (!a.empty() && !b.empty() && fb.message_loss(result.tmpl, context)) {
        auto victims = fb.dummy_tokens(result.tmpl, context);
        if (!victims) break;
        ++result.rounds;
        a = trim_tokens(a, *victims);
        b = trim_tokens(b, *victims);
        result.tmpl = lcs(a, b);
    }
    return result;
}

MergeResult merge(std::span<const ClusterTemplatePair> input, const LogStore& /*logs*/, FeedbackProvider& fb,
                  const ProgressFn& progress) {
    MergeResult out;
    std::vector<TokenSeq> pool;  // mirrors out.complete[i].tmpl

    for (std::size_t i = 0; i < input.size(); ++i) {
        if (progress) progress(i, input.size());
        const ClusterTemplatePair& pair = input[i];
        const auto hit = first_embedding(pool, pair.tmpl);
        if (hit != kNoMatch) {
            absorb_members(out.complete[static_cast<std::size_t>(hit)], pair.members);
            ++out.absorbed;
            continue;
        }
        const auto ctx = context_of(pair);
        ++out.loss_checks;
        if (fb.message_loss(pair.tmpl, ctx)) {
            out.loss.push_back(pair);
            continue;
        }
        Question q = build_select_question(pair.tmpl, pool);
        q.context.assign(ctx.begin(), ctx.end());
        const auto chosen = fb.select(q);
        if (!chosen) {
            out.complete.push_back(pair);
            pool.push_back(pair.tmpl);
            continue;
        }
        const std::size_t j = q.candidates[*chosen].pool_index;
        TokenSeq merged = lossless_template(pool[j], pair.tmpl, fb, ctx).tmpl;
        absorb_members(out.complete[j], pair.members);
        out.complete[j].tmpl = merged;
        pool[j] = std::move(merged);
    }
    if (progress) progress(input.size(), input.size());
    return out;
}

namespace {

// Handles one log with no embedding template: ask for a selection and either
// open a singleton pair or fold the log into the chosen pair. Returns the
// index of the template that changed.
std::size_t place_unmatched(LogIndex n, const LogStore& logs, FeedbackProvider& fb,
                            std::vector<ClusterTemplatePair>& pairs, std::vector<TokenSeq>& pool) {
    const TokenSeq& log = logs[n];
    Question q = build_select_question(log, pool, n);
    q.context = {n};
    const auto chosen = fb.select(q);
    if (!chosen) {
        pairs.push_back({{n}, log});
        pool.push_back(log);
        return pool.size() - 1;
    }
    const std::size_t j = q.candidates[*chosen].pool_index;
    const LogIndex ctx[] = {n};
    TokenSeq merged = lossless_template(pool[j], log, fb, ctx).tmpl;
    pairs[j].members.push_back(n);
    pairs[j].tmpl = merged;
    pool[j] = std::move(merged);
    return j;
}

}  // namespace

std::vector<ClusterTemplatePair> separation(std::span<const LogIndex> cluster, const LogStore& logs,
                                            FeedbackProvider& fb, Execution exec, const ProgressFn& progress) {
    if (cluster.empty()) throw ValidationError("separation needs a non-empty cluster");
    std::vector<LogIndex> order(cluster.begin(), cluster.end());
    std::sort(order.begin(), order.end());

    std::vector<ClusterTemplatePair> pairs;
    std::vector<TokenSeq> pool;

    if (exec == Execution::Serial) {
        for (std::size_t i = 0; i < order.size(); ++i) {
            const LogIndex n = order[i];
            // Only unmatched logs can block on a question, so report before them.
            const auto hit = first_embedding(pool, logs[n]);
            if (hit != kNoMatch)
                pairs[static_cast<std::size_t>(hit)].members.push_back(n);
            else {
                if (progress) progress(i, order.size());
                place_unmatched(n, logs, fb, pairs, pool);
            }
        }
        if (progress) progress(order.size(), order.size());
        return pairs;
    }

    for (std::size_t start = 0; start < order.size(); start += kSeparationBatch) {
        const auto batch = std::span<const LogIndex>(order).subspan(start, std::min(kSeparationBatch, order.size() - start));
        const auto cached = first_embedding_batch(pool, logs, batch, exec);
        // Templates below `stable` are unchanged since the snapshot, so a
        // cached hit below it is still the first hit.
        std::size_t stable = pool.size();
        for (std::size_t i = 0; i < batch.size(); ++i) {
            const LogIndex n = batch[i];
            auto hit = cached[i];
            if (hit == kNoMatch || static_cast<std::size_t>(hit) >= stable) hit = first_embedding(pool, logs[n], stable);
            if (hit != kNoMatch) {
                pairs[static_cast<std::size_t>(hit)].members.push_back(n);
            } else {
                if (progress) progress(start + i, order.size());
                stable = std::min(stable, place_unmatched(n, logs, fb, pairs, pool));
            }
        }
    }
    if (progress) progress(order.size(), order.size());
    return pairs;
}

MinedClustering pipeline(const MinedClustering& base, const LogStore& logs, FeedbackProvider& fb,
                         const PipelineOptions& options, PipelineTrace* trace) {
    base.validate();
    if (base.n_logs != logs.size())
        throw ValidationError("clustering covers " + std::to_string(base.n_logs) + " logs but the store holds " +
                              std::to_string(logs.size()));

    auto report = [&](std::size_t round, std::string_view phase) -> ProgressFn {
        if (!options.on_progress) return {};
        return [&options, round, phase](std::size_t done, std::size_t total) {
            options.on_progress({round, phase, done, total});
        };
    };

    std::vector<ClusterTemplatePair> working = base.pairs;
    if (options.lossless_completion) {
        const auto tick = report(0, "completion");
        for (std::size_t p = 0; p < working.size(); ++p) {
            if (tick) tick(p, working.size());
            working[p].tmpl = message_completion(working[p], logs, &fb);
        }
    } else {
        auto completed = complete_messages(working, logs, options.exec);
        for (std::size_t p = 0; p < working.size(); ++p) working[p].tmpl = std::move(completed[p]);
    }
    if (trace) trace->completed = working;

    std::size_t budget = options.n_repeat.value_or(kUntilStableCap - 1);
    for (std::size_t round_no = 0;; ++round_no) {
        RoundTrace round;
        round.merge_input = working.size();
        const FeedbackCounters before_merge = fb.counters();
        MergeResult merged = merge(working, logs, fb, report(round_no, "merge"));
        round.merge_feedback = fb.counters().since(before_merge);
        round.loss = merged.loss.size();
        round.complete = merged.complete.size();

        const FeedbackCounters before_sep = fb.counters();
        const auto tick = report(round_no, "separation");
        for (std::size_t l = 0; l < merged.loss.size(); ++l) {
            if (tick) tick(l, merged.loss.size());
            auto split = separation(merged.loss[l].members, logs, fb, options.exec);
            round.separated += split.size();
            std::move(split.begin(), split.end(), std::back_inserter(merged.complete));
        }
        round.separation_feedback = fb.counters().since(before_sep);
        working = std::move(merged.complete);
        const bool settled = round.loss == 0;
        if (trace) trace->rounds.push_back(std::move(round));

        if (settled || budget == 0) break;
        --budget;
    }

    MinedClustering out{std::move(working), logs.size()};
    out.validate();
    return out;
}

}  // namespace logmine
