#include "logmine/metrics.hpp"

#include <algorithm>
#include <numeric>

namespace logmine {

namespace {

std::optional<std::uint32_t> shared_cluster(const ClusterTemplatePair& pair, const GroundTruth& gt) {
    if (pair.members.empty()) throw ValidationError("cannot diagnose an empty cluster");
    for (LogIndex n : pair.members)
        if (n >= gt.n_logs()) throw ValidationError("unknown log index " + std::to_string(n));
    const auto k = gt.cluster_of(pair.members.front());
    for (LogIndex n : pair.members)
        if (gt.cluster_of(n) != k) return std::nullopt;
    return k;
}

bool is_full_cluster(const ClusterTemplatePair& pair, const GroundTruth& gt, std::uint32_t k) {
    // Members are distinct and all in cluster k, so equal sizes mean equal sets.
    return pair.members.size() == gt.members(k).size();
}

double mean(std::span<const std::size_t> values) {
    if (values.empty()) return 0.0;
    return static_cast<double>(std::accumulate(values.begin(), values.end(), std::size_t{0})) /
           static_cast<double>(values.size());
}

void fill_feedback(ComplexityStats& stats, const FeedbackCounters& counters) {
    stats.avg_question_length = mean(counters.question_lengths);
    stats.avg_selected_rank = mean(counters.selected_ranks);
    stats.n_message_loss = counters.n_message_loss;
    stats.n_select = counters.n_select;
    stats.n_dummy_token = counters.n_dummy_token;
}

// Exceptions must not escape an OpenMP region, so indices are checked up front.
void check_indices(const MinedClustering& mc, const GroundTruth& gt) {
    for (const auto& pair : mc.pairs) {
        if (pair.members.empty()) throw ValidationError("cannot score an empty cluster");
        for (LogIndex n : pair.members)
            if (n >= gt.n_logs()) throw ValidationError("unknown log index " + std::to_string(n));
    }
}

std::size_t surplus(std::size_t have, std::size_t truth) { return have > truth ? have - truth : 0; }

}  // namespace

PairDiagnosis diagnose(const ClusterTemplatePair& pair, const GroundTruth& gt) {
    PairDiagnosis d;
    const auto k = shared_cluster(pair, gt);
    const auto embedded = gt.matched_cluster(pair.tmpl);
    d.completeness = embedded ? Completeness::Complete : Completeness::Loss;
    if (k) {
        d.purity = Purity::Pure;
        d.fullness = is_full_cluster(pair, gt, *k) ? Fullness::Full : Fullness::Partial;
        d.matched_gt_cluster = k;
    } else {
        d.matched_gt_cluster = embedded;
    }
    return d;
}

double group_accuracy(const MinedClustering& mc, const GroundTruth& gt, Execution exec) {
    if (mc.n_logs == 0) return 0.0;
    check_indices(mc, gt);
    std::size_t correct = 0;
    const auto n_pairs = static_cast<std::int64_t>(mc.pairs.size());
    auto score = [&](std::int64_t p) -> std::size_t {
        const auto& pair = mc.pairs[static_cast<std::size_t>(p)];
        const auto k = shared_cluster(pair, gt);
        return k && is_full_cluster(pair, gt, *k) ? pair.members.size() : 0;
    };
    if (exec == Execution::Parallel) {
#pragma omp parallel for schedule(dynamic) reduction(+ : correct)
        for (std::int64_t p = 0; p < n_pairs; ++p) correct += score(p);
    } else {
        for (std::int64_t p = 0; p < n_pairs; ++p) correct += score(p);
    }
    return static_cast<double>(correct) / static_cast<double>(mc.n_logs);
}

double message_accuracy(const MinedClustering& mc, const GroundTruth& gt, Execution exec) {
    if (mc.n_logs == 0) return 0.0;
    check_indices(mc, gt);
    const auto covered = count_embedded_members(
        mc.pairs, [&](LogIndex n) -> const TokenSeq& { return gt.template_of_log(n); }, exec);
    return static_cast<double>(covered) / static_cast<double>(mc.n_logs);
}

ErrorCensus census(std::span<const ClusterTemplatePair> pairs, const GroundTruth& gt) {
    ErrorCensus c;
    for (const auto& pair : pairs) {
        const auto d = diagnose(pair, gt);
        const bool complete = d.completeness == Completeness::Complete;
        if (d.purity == Purity::Mixed)
            ++(complete ? c.complete_mixed : c.loss_mixed);
        else if (!complete)
            ++c.loss_pure;
        else if (d.fullness == Fullness::Partial)
            ++c.complete_partial;
        else
            ++c.correct;
    }
    return c;
}

ComplexityStats merge_complexity(std::span<const ClusterTemplatePair> input, const GroundTruth& gt,
                                 const FeedbackCounters& counters) {
    ComplexityStats stats;
    stats.n_input = input.size();
    std::vector<bool> embedded(gt.n_clusters(), false);
    std::size_t n_complete = 0;
    for (const auto& pair : input) {
        for (std::uint32_t k = 0; k < gt.n_clusters(); ++k)
            if (!embedded[k] && is_subsequence(gt.template_of(k), pair.tmpl)) embedded[k] = true;
        const auto matched = gt.matched_cluster(pair.tmpl);
        if (!matched) continue;
        ++n_complete;
        const auto own = shared_cluster(pair, gt).value_or(*matched);
        stats.d_max = std::max(stats.d_max, surplus(pair.tmpl.size(), gt.template_of(own).size()));
    }
    stats.n_distinct_templates = static_cast<std::size_t>(std::count(embedded.begin(), embedded.end(), true));
    if (stats.n_distinct_templates)
        stats.redundancy = static_cast<double>(n_complete) / static_cast<double>(stats.n_distinct_templates);
    fill_feedback(stats, counters);
    return stats;
}

ComplexityStats separation_complexity(std::span<const LogIndex> cluster, const LogStore& logs,
                                      const GroundTruth& gt, const FeedbackCounters& counters) {
    ComplexityStats stats;
    stats.n_input = cluster.size();
    std::vector<bool> embedded(gt.n_clusters(), false);
    for (LogIndex n : cluster) {
        const TokenSeq& log = logs[n];
        for (std::uint32_t k = 0; k < gt.n_clusters(); ++k)
            if (!embedded[k] && is_subsequence(gt.template_of(k), log)) embedded[k] = true;
        stats.d_max = std::max(stats.d_max, surplus(log.size(), gt.template_of_log(n).size()));
    }
    stats.n_distinct_templates = static_cast<std::size_t>(std::count(embedded.begin(), embedded.end(), true));
    if (stats.n_distinct_templates)
        stats.redundancy = static_cast<double>(cluster.size()) / static_cast<double>(stats.n_distinct_templates);
    fill_feedback(stats, counters);
    return stats;
}

EvaluationReport evaluate(const MinedClustering& mc, const GroundTruth& gt, Execution exec) {
    mc.validate();
    if (mc.n_logs != gt.n_logs())
        throw ValidationError("clustering covers " + std::to_string(mc.n_logs) + " logs, ground truth " +
                              std::to_string(gt.n_logs()));
    EvaluationReport r;
    r.n_logs = mc.n_logs;
    r.n_pairs = mc.pairs.size();
    r.ga = group_accuracy(mc, gt, exec);
    r.ma = message_accuracy(mc, gt, exec);
    r.census = census(mc.pairs, gt);
    r.stats = merge_complexity(mc.pairs, gt, {});
    return r;
}

nlohmann::json to_json(const ErrorCensus& c) {
    return {{"loss_pure", c.loss_pure},
            {"complete_partial", c.complete_partial},
            {"loss_mixed", c.loss_mixed},
            {"complete_mixed", c.complete_mixed},
            {"correct", c.correct}};
}

nlohmann::json to_json(const FeedbackCounters& f) {
    return {{"n_message_loss", f.n_message_loss},
            {"n_select", f.n_select},
            {"n_dummy_token", f.n_dummy_token},
            {"total", f.total()},
            {"avg_question_length", mean(f.question_lengths)},
            {"avg_selected_rank", mean(f.selected_ranks)}};
}

nlohmann::json to_json(const ComplexityStats& s) {
    return {{"n_input", s.n_input},
            {"n_distinct_templates", s.n_distinct_templates},
            {"redundancy", s.redundancy},
            {"d_max", s.d_max},
            {"avg_question_length", s.avg_question_length},
            {"avg_selected_rank", s.avg_selected_rank},
            {"n_message_loss", s.n_message_loss},
            {"n_select", s.n_select},
            {"n_dummy_token", s.n_dummy_token}};
}

namespace {

template <typename T>
nlohmann::json or_null(const std::optional<T>& value) {
    if (!value) return nullptr;
    if constexpr (std::is_arithmetic_v<T>)
        return *value;
    else
        return to_json(*value);
}

}  // namespace

nlohmann::json to_json(const RefinementReport& r) {
    return {{"kind", "refinement"},
            {"version", RefinementReport::kVersion},
            {"n_logs", r.n_logs},
            {"pairs_before", r.pairs_before},
            {"pairs_after", r.pairs_after},
            {"ga_before", or_null(r.ga_before)},
            {"ma_before", or_null(r.ma_before)},
            {"ga_after", or_null(r.ga_after)},
            {"ma_after", or_null(r.ma_after)},
            {"census_before", or_null(r.census_before)},
            {"census_after", or_null(r.census_after)},
            {"feedback", to_json(r.counters)},
            {"merge_stats", or_null(r.merge_stats)},
            {"rounds", r.rounds}};
}

nlohmann::json to_json(const EvaluationReport& r) {
    return {{"kind", "evaluation"},
            {"version", EvaluationReport::kVersion},
            {"n_logs", r.n_logs},
            {"n_pairs", r.n_pairs},
            {"ga", r.ga},
            {"ma", r.ma},
            {"census", to_json(r.census)},
            {"stats", to_json(r.stats)}};
}

}  // namespace logmine
