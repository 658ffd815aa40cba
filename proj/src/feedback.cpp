#include "logmine/feedback.hpp"

#include <algorithm>
#include <spdlog/spdlog.h>

namespace logmine {

std::string_view to_string(QuestionKind kind) noexcept {
    switch (kind) {
        case QuestionKind::MessageLoss: return "message_loss";
        case QuestionKind::DummyToken: return "dummy_token";
        case QuestionKind::Select: return "select";
    }
    return "unknown";
}

QuestionKind kind_of(const Answer& answer) noexcept {
    return static_cast<QuestionKind>(answer.index());
}

FeedbackCounters FeedbackCounters::since(const FeedbackCounters& earlier) const {
    FeedbackCounters d;
    d.n_message_loss = n_message_loss - earlier.n_message_loss;
    d.n_select = n_select - earlier.n_select;
    d.n_dummy_token = n_dummy_token - earlier.n_dummy_token;
    d.question_lengths.assign(question_lengths.begin() + static_cast<std::ptrdiff_t>(earlier.question_lengths.size()),
                              question_lengths.end());
    d.selected_ranks.assign(selected_ranks.begin() + static_cast<std::ptrdiff_t>(earlier.selected_ranks.size()),
                            selected_ranks.end());
    return d;
}

void validate_answer(const Question& q, const Answer& answer) {
    if (kind_of(answer) != q.kind)
        throw ValidationError("answer kind '" + std::string(to_string(kind_of(answer))) +
                              "' does not match question kind '" + std::string(to_string(q.kind)) + "'");
    if (const auto* dummy = std::get_if<DummyTokenAnswer>(&answer); dummy && dummy->tokens) {
        if (dummy->tokens->empty()) throw ValidationError("dummy-token answer must name at least one token");
        for (Token t : *dummy->tokens)
            if (std::find(q.target.begin(), q.target.end(), t) == q.target.end())
                throw ValidationError("dummy token '" + std::string(t.text()) + "' does not occur in the template");
    }
    if (const auto* sel = std::get_if<SelectAnswer>(&answer); sel && sel->index) {
        if (*sel->index >= q.candidates.size())
            throw ValidationError("select index " + std::to_string(*sel->index) + " out of range (" +
                                  std::to_string(q.candidates.size()) + " candidates)");
    }
}

Answer FeedbackProvider::ask(const Question& q) {
    Answer answer = respond(q);
    validate_answer(q, answer);
    switch (q.kind) {
        case QuestionKind::MessageLoss: ++counters_.n_message_loss; break;
        case QuestionKind::DummyToken: ++counters_.n_dummy_token; break;
        case QuestionKind::Select:
            ++counters_.n_select;
            counters_.question_lengths.push_back(q.candidates.size());
            if (auto idx = std::get<SelectAnswer>(answer).index) counters_.selected_ranks.push_back(*idx + 1);
            break;
    }
    return answer;
}

bool FeedbackProvider::message_loss(const TokenSeq& tmpl, std::span<const LogIndex> context) {
    Question q;
    q.kind = QuestionKind::MessageLoss;
    q.target = tmpl;
    q.context.assign(context.begin(), context.end());
    return std::get<MessageLossAnswer>(ask(q)).loss;
}

std::optional<TokenSeq> FeedbackProvider::dummy_tokens(const TokenSeq& tmpl, std::span<const LogIndex> context) {
    Question q;
    q.kind = QuestionKind::DummyToken;
    q.target = tmpl;
    q.context.assign(context.begin(), context.end());
    return std::get<DummyTokenAnswer>(ask(q)).tokens;
}

std::optional<std::size_t> FeedbackProvider::select(const Question& q) {
    return std::get<SelectAnswer>(ask(q)).index;
}

GroundTruth::GroundTruth(std::vector<std::uint32_t> cluster_of, std::vector<TokenSeq> templates)
    : cluster_of_(std::move(cluster_of)), templates_(std::move(templates)), members_(templates_.size()) {
    for (std::size_t n = 0; n < cluster_of_.size(); ++n) {
        const auto k = cluster_of_[n];
        if (k >= templates_.size())
            throw ValidationError("log " + std::to_string(n) + " assigned to unknown cluster " + std::to_string(k));
        members_[k].push_back(static_cast<LogIndex>(n));
    }
}

std::optional<std::uint32_t> GroundTruth::matched_cluster(std::span<const Token> seq) const {
    std::optional<std::uint32_t> best;
    std::size_t hits = 0;
    for (std::uint32_t k = 0; k < templates_.size(); ++k) {
        if (!is_subsequence(templates_[k], seq)) continue;
        ++hits;
        if (!best || templates_[k].size() > templates_[*best].size()) best = k;
    }
    if (hits > 1)
        spdlog::warn("{} ground-truth templates embed in '{}'; using cluster {}", hits, join(seq), *best);
    return best;
}

std::vector<std::pair<std::uint32_t, std::uint32_t>> GroundTruth::nested_templates() const {
    std::vector<std::pair<std::uint32_t, std::uint32_t>> out;
    for (std::uint32_t i = 0; i < templates_.size(); ++i)
        for (std::uint32_t j = 0; j < templates_.size(); ++j)
            if (i != j && is_subsequence(templates_[i], templates_[j])) out.emplace_back(i, j);
    return out;
}

std::vector<LogIndex> GroundTruth::non_embedding_logs(const LogStore& logs) const {
    std::vector<LogIndex> out;
    for (LogIndex n = 0; n < cluster_of_.size() && n < logs.size(); ++n)
        if (!is_subsequence(template_of_log(n), logs[n])) out.push_back(n);
    return out;
}

Question build_select_question(const TokenSeq& target, std::span<const TokenSeq> pool,
                               std::optional<LogIndex> target_log) {
    Question q;
    q.kind = QuestionKind::Select;
    q.target = target;
    q.target_log = target_log;
    for (std::size_t i = 0; i < pool.size(); ++i) {
        const std::size_t len = lcs_length(target, pool[i]);
        if (len > 0) q.candidates.push_back({pool[i], len, i});
    }
    std::stable_sort(q.candidates.begin(), q.candidates.end(),
                     [](const Candidate& x, const Candidate& y) { return x.lcs_length > y.lcs_length; });
    return q;
}

bool simulate_message_loss(std::span<const Token> tmpl, const GroundTruth& gt) {
    for (const auto& t : gt.templates())
        if (is_subsequence(t, tmpl)) return false;
    return true;
}

DummyTokenAnswer simulate_dummy_token(std::span<const Token> tmpl, const GroundTruth& gt) {
    const auto k = gt.matched_cluster(tmpl);
    if (!k) return {};
    const TokenSeq& truth = gt.template_of(*k);
    for (Token t : tmpl)
        if (std::find(truth.begin(), truth.end(), t) == truth.end()) return {TokenSeq{t}};
    return {};
}

SelectAnswer simulate_select(const Question& q, const GroundTruth& gt) {
    std::optional<std::uint32_t> k;
    if (q.target_log)
        k = gt.cluster_of(*q.target_log);
    else
        k = gt.matched_cluster(q.target);
    if (!k) return {};
    const TokenSeq& truth = gt.template_of(*k);
    for (std::size_t i = 0; i < q.candidates.size(); ++i)
        if (is_subsequence(truth, q.candidates[i].tmpl)) return {i};
    return {};
}

Answer Simulator::respond(const Question& q) {
    switch (q.kind) {
        case QuestionKind::MessageLoss: return MessageLossAnswer{simulate_message_loss(q.target, gt_)};
        case QuestionKind::DummyToken: return simulate_dummy_token(q.target, gt_);
        case QuestionKind::Select: return simulate_select(q, gt_);
    }
    return SelectAnswer{};
}

}  // namespace logmine
