#pragma once

#include <filesystem>
#include <optional>
#include <string_view>

#include "logmine/core.hpp"
#include "logmine/corpus.hpp"
#include "logmine/feedback.hpp"
#include "logmine/hitl.hpp"
#include "logmine/metrics.hpp"

namespace logmine {

/// Where a run's corpus and base clustering come from. Either `generate` or
/// `logs` must be set; `truth` goes with `logs`.
struct RunSpec {
    std::optional<std::filesystem::path> logs;
    std::optional<std::filesystem::path> truth;
    std::optional<std::filesystem::path> import_path;  // base clustering; baseline parser otherwise
    std::optional<SyntheticSpec> generate;
    BaselineKnobs knobs;
};

struct PreparedRun {
    LogStore logs;
    std::optional<GroundTruth> truth;
    MinedClustering base;
};

PreparedRun prepare_run(const RunSpec& spec);

/// "K=50,logs_per_cluster=40,param_slots=2"; K is an alias of n_clusters.
SyntheticSpec parse_generate(std::string_view text, std::uint64_t seed);
/// One "split_p=0.3" style setting.
void apply_knob(BaselineKnobs& knobs, std::string_view setting);
/// A count or "until-stable" (nullopt).
std::optional<std::size_t> parse_repeat(std::string_view text);

struct RunOutcome {
    MinedClustering refined;
    RefinementReport report;
};

/// Runs the pipeline on `run` and scores it against the ground truth when present.
RunOutcome refine(const PreparedRun& run, FeedbackProvider& fb, const PipelineOptions& options);

}  // namespace logmine
