#pragma once

#include <optional>
#include <span>
#include <stdexcept>
#include <string_view>
#include <variant>
#include <vector>

#include "logmine/core.hpp"

namespace logmine {

enum class QuestionKind { MessageLoss, DummyToken, Select };

std::string_view to_string(QuestionKind kind) noexcept;

struct Candidate {
    TokenSeq tmpl;
    std::size_t lcs_length = 0;
    std::size_t pool_index = 0;  // position in the pool the question was built from
};

struct Question {
    QuestionKind kind = QuestionKind::MessageLoss;
    TokenSeq target;
    /// Set when the target is a raw log rather than a template.
    std::optional<LogIndex> target_log;
    /// Select only: sorted by lcs_length, descending, all positive.
    std::vector<Candidate> candidates;
    /// Member logs shown to a human for context.
    std::vector<LogIndex> context;
};

struct MessageLossAnswer {
    bool loss = false;
};

struct DummyTokenAnswer {
    std::optional<TokenSeq> tokens;  // nullopt: cannot identify
};

struct SelectAnswer {
    std::optional<std::size_t> index;  // nullopt: none matches
};

using Answer = std::variant<MessageLossAnswer, DummyTokenAnswer, SelectAnswer>;

QuestionKind kind_of(const Answer& answer) noexcept;

/// Thrown out of FeedbackProvider::ask when an interactive session is cancelled.
class SessionAborted : public std::runtime_error {
public:
    SessionAborted() : std::runtime_error("feedback session aborted") {}
};

struct FeedbackCounters {
    std::size_t n_message_loss = 0;
    std::size_t n_select = 0;
    std::size_t n_dummy_token = 0;
    std::vector<std::size_t> question_lengths;  // candidate-list size per Select
    std::vector<std::size_t> selected_ranks;    // 1-based, non-null Selects only

    std::size_t total() const noexcept { return n_message_loss + n_select + n_dummy_token; }
    FeedbackCounters since(const FeedbackCounters& earlier) const;
};

/// Checks that `answer` fits `q`: matching kind, dummy tokens drawn from the
/// target, select index in range. Throws ValidationError.
void validate_answer(const Question& q, const Answer& answer);

/// Answer source for the three question kinds. ask() validates and counts;
/// subclasses only implement respond().
class FeedbackProvider {
public:
    virtual ~FeedbackProvider() = default;

    Answer ask(const Question& q);

    bool message_loss(const TokenSeq& tmpl, std::span<const LogIndex> context = {});
    std::optional<TokenSeq> dummy_tokens(const TokenSeq& tmpl, std::span<const LogIndex> context = {});
    std::optional<std::size_t> select(const Question& q);

    const FeedbackCounters& counters() const noexcept { return counters_; }

protected:
    virtual Answer respond(const Question& q) = 0;

private:
    FeedbackCounters counters_;
};

/// Per-log cluster ids and constant-token templates.
class GroundTruth {
public:
    GroundTruth() = default;
    GroundTruth(std::vector<std::uint32_t> cluster_of, std::vector<TokenSeq> templates);

    std::size_t n_logs() const noexcept { return cluster_of_.size(); }
    std::size_t n_clusters() const noexcept { return templates_.size(); }
    std::uint32_t cluster_of(LogIndex n) const { return cluster_of_.at(n); }
    const TokenSeq& template_of(std::uint32_t k) const { return templates_.at(k); }
    const TokenSeq& template_of_log(LogIndex n) const { return templates_.at(cluster_of(n)); }
    const std::vector<LogIndex>& members(std::uint32_t k) const { return members_.at(k); }
    const std::vector<TokenSeq>& templates() const noexcept { return templates_; }

    /// The ground-truth cluster whose template embeds in `seq`; the longest
    /// such template wins, ties to the smallest id. Logs a warning when more
    /// than one template embeds.
    std::optional<std::uint32_t> matched_cluster(std::span<const Token> seq) const;

    bool has_message_loss(std::span<const Token> seq) const { return !matched_cluster(seq).has_value(); }

    /// Pairs (k, k') with template k a subsequence of template k'.
    std::vector<std::pair<std::uint32_t, std::uint32_t>> nested_templates() const;
    /// Logs whose own template does not embed in them.
    std::vector<LogIndex> non_embedding_logs(const LogStore& logs) const;

private:
    std::vector<std::uint32_t> cluster_of_;
    std::vector<TokenSeq> templates_;
    std::vector<std::vector<LogIndex>> members_;
};

/// Candidates are the pool entries with a non-empty LCS against the target,
/// sorted by LCS length descending; ties keep pool order.
Question build_select_question(const TokenSeq& target, std::span<const TokenSeq> pool,
                               std::optional<LogIndex> target_log = std::nullopt);

bool simulate_message_loss(std::span<const Token> tmpl, const GroundTruth& gt);
DummyTokenAnswer simulate_dummy_token(std::span<const Token> tmpl, const GroundTruth& gt);
SelectAnswer simulate_select(const Question& q, const GroundTruth& gt);

/// Ground-truth-backed provider. Always right on message loss; returns null
/// for dummy tokens and selections whenever the target itself has loss.
class Simulator final : public FeedbackProvider {
public:
    explicit Simulator(const GroundTruth& gt) : gt_(gt) {}

protected:
    Answer respond(const Question& q) override;

private:
    const GroundTruth& gt_;
};

}  // namespace logmine
