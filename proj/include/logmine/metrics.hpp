#pragma once

#include <optional>
#include <span>
#include <vector>

#include "json.hpp"

#include "logmine/core.hpp"
#include "logmine/feedback.hpp"
#include "logmine/kernels.hpp"

namespace logmine {

enum class Purity { Pure, Mixed };
enum class Fullness { Full, Partial, NotApplicable };
enum class Completeness { Complete, Loss };

struct PairDiagnosis {
    Purity purity = Purity::Mixed;
    Fullness fullness = Fullness::NotApplicable;  // defined only for pure clusters
    Completeness completeness = Completeness::Loss;
    /// Shared cluster of a pure pair; for a mixed pair, the cluster whose
    /// template embeds (if any).
    std::optional<std::uint32_t> matched_gt_cluster;
};

PairDiagnosis diagnose(const ClusterTemplatePair& pair, const GroundTruth& gt);

double group_accuracy(const MinedClustering& mc, const GroundTruth& gt, Execution exec = Execution::Serial);
double message_accuracy(const MinedClustering& mc, const GroundTruth& gt, Execution exec = Execution::Serial);

/// Pair counts per error class. complete_mixed holds mixed clusters whose
/// template still embeds a ground-truth template; the mixed-implies-loss
/// property says it should stay zero, and it is reported rather than assumed.
struct ErrorCensus {
    std::size_t loss_pure = 0;
    std::size_t complete_partial = 0;
    std::size_t loss_mixed = 0;
    std::size_t complete_mixed = 0;
    std::size_t correct = 0;

    std::size_t total() const noexcept { return loss_pure + complete_partial + loss_mixed + complete_mixed + correct; }
};

ErrorCensus census(std::span<const ClusterTemplatePair> pairs, const GroundTruth& gt);

struct ComplexityStats {
    std::size_t n_input = 0;               // pairs (merge) or logs (separation)
    std::size_t n_distinct_templates = 0;  // N_dst for merge, N_tpl for separation
    double redundancy = 0.0;
    std::size_t d_max = 0;                 // max token surplus over the ground-truth template
    double avg_question_length = 0.0;
    double avg_selected_rank = 0.0;
    std::size_t n_message_loss = 0;
    std::size_t n_select = 0;
    std::size_t n_dummy_token = 0;

    std::size_t select_bound() const noexcept { return n_distinct_templates * (d_max + 1); }
    std::size_t dummy_bound() const noexcept { return n_distinct_templates * d_max * d_max; }
};

/// Query statistics for a merge run over `input`. Distinct templates count
/// the ground-truth templates embedded in some input template; redundancy is
/// complete input pairs per distinct template; d_max is the largest surplus
/// len(template) - len(ground truth) over complete input pairs.
ComplexityStats merge_complexity(std::span<const ClusterTemplatePair> input, const GroundTruth& gt,
                                 const FeedbackCounters& counters);

/// Query statistics for a separation run over `cluster`. Distinct templates
/// count ground-truth templates embedded in some member log; d_max is the
/// largest surplus len(log) - len(its ground-truth template).
ComplexityStats separation_complexity(std::span<const LogIndex> cluster, const LogStore& logs,
                                      const GroundTruth& gt, const FeedbackCounters& counters);

struct RefinementReport {
    static constexpr int kVersion = 1;

    std::size_t n_logs = 0;
    std::size_t pairs_before = 0;
    std::size_t pairs_after = 0;
    // Ground-truth scores; empty when the run had no ground truth.
    std::optional<double> ga_before;
    std::optional<double> ma_before;
    std::optional<double> ga_after;
    std::optional<double> ma_after;
    std::optional<ErrorCensus> census_before;
    std::optional<ErrorCensus> census_after;
    FeedbackCounters counters;
    std::optional<ComplexityStats> merge_stats;
    std::size_t rounds = 0;
};

struct EvaluationReport {
    static constexpr int kVersion = 1;

    std::size_t n_logs = 0;
    std::size_t n_pairs = 0;
    double ga = 0.0;
    double ma = 0.0;
    ErrorCensus census;
    ComplexityStats stats;  // feedback fields zero
};

EvaluationReport evaluate(const MinedClustering& mc, const GroundTruth& gt, Execution exec = Execution::Serial);

nlohmann::json to_json(const ErrorCensus& census);
nlohmann::json to_json(const FeedbackCounters& counters);
nlohmann::json to_json(const ComplexityStats& stats);
nlohmann::json to_json(const RefinementReport& report);
nlohmann::json to_json(const EvaluationReport& report);

}  // namespace logmine
