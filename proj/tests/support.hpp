#pragma once
// Shared helpers for the test binaries: token shorthands, an independent LCS
// oracle, and scripted feedback providers.

#include <algorithm>
#include <bit>
#include <cstdint>
#include <deque>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "logmine/core.hpp"
#include "logmine/feedback.hpp"

namespace testing {

using namespace logmine;

inline TokenSeq S(std::string_view line) { return tokenize(line); }

inline std::vector<std::string> texts(std::span<const Token> seq) {
    std::vector<std::string> out;
    for (Token t : seq) out.emplace_back(t.text());
    return out;
}

// Plain string-level embedding check; shares no code with the library.
inline bool embeds(const std::vector<std::string>& small, const std::vector<std::string>& big) {
    std::size_t j = 0;
    for (const auto& w : small) {
        while (j < big.size() && big[j] != w) ++j;
        if (j == big.size()) return false;
        ++j;
    }
    return true;
}

// Longest common subsequence by enumerating every subsequence of the shorter
// side and keeping the longest one that embeds in the other. Exponential;
// fine up to ~18 tokens.
inline std::size_t brute_lcs_length(const std::vector<std::string>& a, const std::vector<std::string>& b) {
    const auto& small = a.size() <= b.size() ? a : b;
    const auto& big = a.size() <= b.size() ? b : a;
    std::size_t best = 0;
    const std::uint32_t n_masks = 1u << small.size();
    std::vector<std::string> pick;
    for (std::uint32_t mask = 0; mask < n_masks; ++mask) {
        const auto len = static_cast<std::size_t>(std::popcount(mask));
        if (len <= best) continue;
        pick.clear();
        for (std::size_t i = 0; i < small.size(); ++i)
            if (mask & (1u << i)) pick.push_back(small[i]);
        if (embeds(pick, big)) best = len;
    }
    return best;
}

inline TokenSeq random_seq(std::mt19937_64& rng, std::size_t len, std::size_t alphabet, std::string_view prefix = "w") {
    std::uniform_int_distribution<std::size_t> pick(0, alphabet - 1);
    TokenSeq out;
    for (std::size_t i = 0; i < len; ++i) out.emplace_back(std::string(prefix) + std::to_string(pick(rng)));
    return out;
}

/// Answers from a fixed script and records every question.
class ScriptedProvider : public FeedbackProvider {
public:
    std::deque<Answer> script;
    std::vector<Question> asked;

protected:
    Answer respond(const Question& q) override {
        asked.push_back(q);
        if (script.empty()) throw std::logic_error("script exhausted at a " + std::string(to_string(q.kind)) + " question");
        Answer a = std::move(script.front());
        script.pop_front();
        return a;
    }
};

/// Fails on any question; for code paths that must stay feedback-free.
class SilentProvider : public FeedbackProvider {
protected:
    Answer respond(const Question& q) override {
        throw std::logic_error("unexpected " + std::string(to_string(q.kind)) + " question");
    }
};

/// A human who knows the reference template `truth`: reports loss iff it does
/// not embed, and names every target token absent from it.
class KnowingHuman : public FeedbackProvider {
public:
    explicit KnowingHuman(TokenSeq truth) : truth_(std::move(truth)) {}

protected:
    Answer respond(const Question& q) override {
        switch (q.kind) {
            case QuestionKind::MessageLoss: return MessageLossAnswer{!is_subsequence(truth_, q.target)};
            case QuestionKind::DummyToken: {
                TokenSeq picked;
                for (Token t : q.target)
                    if (std::find(truth_.begin(), truth_.end(), t) == truth_.end()) picked.push_back(t);
                if (picked.empty()) return DummyTokenAnswer{std::nullopt};
                return DummyTokenAnswer{std::move(picked)};
            }
            case QuestionKind::Select: break;
        }
        return SelectAnswer{std::nullopt};
    }

private:
    TokenSeq truth_;
};

/// Type-valid but otherwise arbitrary answers, reproducible from the seed.
class RandomProvider : public FeedbackProvider {
public:
    explicit RandomProvider(std::uint64_t seed) : rng_(seed) {}

protected:
    Answer respond(const Question& q) override {
        switch (q.kind) {
            case QuestionKind::MessageLoss: return MessageLossAnswer{rng_() % 2 == 0};
            case QuestionKind::DummyToken: {
                if (q.target.empty() || rng_() % 4 == 0) return DummyTokenAnswer{std::nullopt};
                TokenSeq picked;
                for (Token t : q.target)
                    if (rng_() % 3 == 0) picked.push_back(t);
                if (picked.empty()) picked.push_back(q.target[rng_() % q.target.size()]);
                return DummyTokenAnswer{std::move(picked)};
            }
            case QuestionKind::Select:
                if (q.candidates.empty() || rng_() % 3 == 0) return SelectAnswer{std::nullopt};
                return SelectAnswer{static_cast<std::size_t>(rng_() % q.candidates.size())};
        }
        return SelectAnswer{std::nullopt};
    }

private:
    std::mt19937_64 rng_;
};

}  // namespace testing
