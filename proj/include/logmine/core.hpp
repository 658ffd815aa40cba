#pragma once

#include <compare>
#include <cstdint>
#include <deque>
#include <functional>
#include <shared_mutex>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace logmine {

/// Raised when an input (file, clustering, answer) breaks a documented invariant.
class ValidationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

using TokenId = std::uint32_t;
using LogIndex = std::uint32_t;

inline constexpr std::string_view kWildcard = "<*>";

/// Process-wide interning table. Token ids are dense and assigned in
/// first-seen order; the texts are never freed.
class TokenDictionary {
public:
    static TokenDictionary& global();

    TokenId intern(std::string_view text);
    std::string_view text(TokenId id) const;
    std::size_t size() const;

private:
    mutable std::shared_mutex mutex_;
    std::deque<std::string> texts_;
    std::unordered_map<std::string_view, TokenId> ids_;
};

/// A single whitespace-free word of a log line. Compared by interned id,
/// so equality is text equality.
class Token {
public:
    explicit Token(std::string_view text);

    static Token from_id(TokenId id) noexcept { return Token(id, 0); }

    TokenId id() const noexcept { return id_; }
    std::string_view text() const;

    friend bool operator==(Token, Token) = default;
    friend auto operator<=>(Token, Token) = default;

private:
    Token(TokenId id, int) noexcept : id_(id) {}
    TokenId id_;
};

using TokenSeq = std::vector<Token>;

/// Splits on runs of whitespace. Throws ValidationError on a literal "<*>".
TokenSeq tokenize(std::string_view line);

/// Splits on whitespace and drops every token containing "<*>", so the
/// result holds only the constant tokens of a template.
TokenSeq tokenize_template(std::string_view line);

TokenSeq make_seq(std::initializer_list<std::string_view> words);
std::string join(std::span<const Token> seq);

/// True iff `a` embeds into `b` under a strictly increasing index map.
/// Greedy two-pointer scan, linear in len(b).
bool is_subsequence(std::span<const Token> a, std::span<const Token> b) noexcept;

/// Longest common subsequence. Ties are broken by tracing the prefix table
/// back from the end and taking a match whenever the last tokens agree, else
/// dropping from `a` when that keeps the length; the result is canonical for
/// a given (a, b).
TokenSeq lcs(std::span<const Token> a, std::span<const Token> b);

/// Length of the LCS only; no traceback.
std::size_t lcs_length(std::span<const Token> a, std::span<const Token> b);

/// Removes every occurrence of every victim, keeping survivor order.
TokenSeq trim_tokens(std::span<const Token> seq, std::span<const Token> victims);

/// Joins `tmpl` with spaces and inserts one "<*>" wherever any sample has
/// skipped tokens before, between, or after template tokens. Throws
/// ValidationError if `tmpl` is not a subsequence of some sample.
std::string render_template(std::span<const Token> tmpl,
                            std::span<const TokenSeq> samples);

struct LogStore {
    std::vector<TokenSeq> logs;
    std::vector<std::string> raw_lines;

    std::size_t size() const noexcept { return logs.size(); }
    const TokenSeq& operator[](LogIndex n) const { return logs.at(n); }

    static LogStore from_lines(std::span<const std::string> lines);
};

struct ClusterTemplatePair {
    std::vector<LogIndex> members;  // sorted ascending
    TokenSeq tmpl;

    friend bool operator==(const ClusterTemplatePair&, const ClusterTemplatePair&) = default;
};

/// Merges `extra` into the sorted member list of `pair`.
void absorb_members(ClusterTemplatePair& pair, std::span<const LogIndex> extra);

struct MinedClustering {
    std::vector<ClusterTemplatePair> pairs;
    std::size_t n_logs = 0;

    /// Throws ValidationError naming the first empty cluster, out-of-range,
    /// duplicated, or missing index.
    void validate() const;

    friend bool operator==(const MinedClustering&, const MinedClustering&) = default;
};

}  // namespace logmine

template <>
struct std::hash<logmine::Token> {
    std::size_t operator()(logmine::Token t) const noexcept { return std::hash<logmine::TokenId>{}(t.id()); }
};
