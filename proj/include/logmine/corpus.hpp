#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "json.hpp"

#include "logmine/core.hpp"
#include "logmine/feedback.hpp"

namespace logmine {

struct Corpus {
    LogStore logs;
    GroundTruth truth;
};

/// Raw log file: one log per line. Blank lines are skipped; `line_numbers`
/// (1-based) keeps the original position of every kept line.
struct RawLogFile {
    LogStore logs;
    std::vector<std::size_t> line_numbers;
};

RawLogFile read_raw_logs(std::istream& in);

/// Ground truth in the LineId,EventId,EventTemplate layout (extra columns
/// ignored, fields may be quoted). LineId refers to the raw file's 1-based
/// line numbers; every kept line needs exactly one row. Event ids become
/// cluster ids in first-seen order; "<*>" gaps are dropped from templates.
GroundTruth parse_ground_truth(std::istream& in, const RawLogFile& raw);

Corpus load_corpus(const std::filesystem::path& raw_log_path, const std::filesystem::path& ground_truth_path);

void write_raw_logs(const std::filesystem::path& path, const LogStore& logs);
/// Writes one row per log; EventId is E<k+1>, EventTemplate is the cluster's
/// template rendered with "<*>" gaps against its members.
void write_ground_truth(const std::filesystem::path& path, const Corpus& corpus);

struct BaselineKnobs {
    double split_p = 0.0;     // chance to split each bucket in two
    double merge_p = 0.0;     // chance to fold the next bucket into this one
    double truncate_p = 0.0;  // chance to drop a template's last token
    std::uint64_t seed = 0;
};

/// Buckets logs by (token count, first token) in first-seen order; each
/// bucket's template is the tokens shared at the same position by all its
/// members. The knobs then inject controlled errors.
MinedClustering baseline_parse(const LogStore& logs, const BaselineKnobs& knobs = {});

nlohmann::json clustering_to_json(const MinedClustering& mc);
/// Validates full + disjoint coverage; "<*>" entries in templates are dropped.
MinedClustering clustering_from_json(const nlohmann::json& doc);
MinedClustering import_clustering(const std::filesystem::path& path);
void export_clustering(const MinedClustering& mc, const std::filesystem::path& path);

/// The clustering that equals the ground truth, pair k holding cluster k.
MinedClustering ground_truth_clustering(const GroundTruth& gt);

struct SyntheticSpec {
    std::size_t n_clusters = 10;
    std::size_t logs_per_cluster = 20;
    std::size_t param_slots = 2;
    std::uint64_t seed = 0;
    std::size_t min_words = 3;  // constant words per template, keyword excluded
    std::size_t max_words = 6;
    /// Every log of a cluster reuses the same parameter tokens, which lets an
    /// LCS of two logs pick parameters over template words.
    bool shared_params = false;
    /// Shuffle log order instead of emitting clusters round-robin.
    bool shuffle = true;
};

/// Templates draw words from a shared pool plus one unique keyword each, so
/// no template embeds in another cluster's logs. Parameters are inserted at
/// random positions and never repeat inside a cluster (unless shared_params).
Corpus generate_synthetic(const SyntheticSpec& spec);

}  // namespace logmine
