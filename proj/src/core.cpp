#include "logmine/core.hpp"

#include <algorithm>
#include <cctype>
#include <mutex>
#include <unordered_set>

namespace logmine {

namespace {

bool is_space(char c) noexcept {
    return std::isspace(static_cast<unsigned char>(c)) != 0;
}

template <typename Fn>
void for_each_word(std::string_view line, Fn&& fn) {
    std::size_t i = 0;
    while (i < line.size()) {
        while (i < line.size() && is_space(line[i])) ++i;
        std::size_t j = i;
        while (j < line.size() && !is_space(line[j])) ++j;
        if (j > i) fn(line.substr(i, j - i));
        i = j;
    }
}

}  // namespace

TokenDictionary& TokenDictionary::global() {
    static TokenDictionary dict;
    return dict;
}

TokenId TokenDictionary::intern(std::string_view text) {
    {
        std::shared_lock lock(mutex_);
        if (auto it = ids_.find(text); it != ids_.end()) return it->second;
    }
    std::unique_lock lock(mutex_);
    if (auto it = ids_.find(text); it != ids_.end()) return it->second;
    const auto id = static_cast<TokenId>(texts_.size());
    const std::string& stored = texts_.emplace_back(text);
    ids_.emplace(std::string_view(stored), id);
    return id;
}

std::string_view TokenDictionary::text(TokenId id) const {
    std::shared_lock lock(mutex_);
    return texts_.at(id);
}

std::size_t TokenDictionary::size() const {
    std::shared_lock lock(mutex_);
    return texts_.size();
}

Token::Token(std::string_view text) {
    if (text.empty()) throw std::invalid_argument("empty token");
    if (text == kWildcard) throw std::invalid_argument("wildcard is not a token");
    if (std::any_of(text.begin(), text.end(), is_space))
        throw std::invalid_argument("token contains whitespace: '" + std::string(text) + "'");
    id_ = TokenDictionary::global().intern(text);
}

std::string_view Token::text() const {
    return TokenDictionary::global().text(id_);
}

TokenSeq tokenize(std::string_view line) {
    TokenSeq out;
    auto& dict = TokenDictionary::global();
    for_each_word(line, [&](std::string_view w) {
        if (w == kWildcard) throw ValidationError("log line contains a literal <*> token");
        out.push_back(Token::from_id(dict.intern(w)));
    });
    return out;
}

TokenSeq tokenize_template(std::string_view line) {
    TokenSeq out;
    auto& dict = TokenDictionary::global();
    for_each_word(line, [&](std::string_view w) {
        if (w.find(kWildcard) != std::string_view::npos) return;
        out.push_back(Token::from_id(dict.intern(w)));
    });
    return out;
}

TokenSeq make_seq(std::initializer_list<std::string_view> words) {
    TokenSeq out;
    out.reserve(words.size());
    for (auto w : words) out.emplace_back(w);
    return out;
}

std::string join(std::span<const Token> seq) {
    std::string out;
    for (std::size_t i = 0; i < seq.size(); ++i) {
        if (i) out.push_back(' ');
        out += seq[i].text();
    }
    return out;
}

bool is_subsequence(std::span<const Token> a, std::span<const Token> b) noexcept {
    if (a.size() > b.size()) return false;
    std::size_t i = 0;
    for (std::size_t j = 0; i < a.size() && j < b.size(); ++j)
        if (a[i] == b[j]) ++i;
    return i == a.size();
}

namespace {

// Prefix table: cell (i, j) holds len(LCS(a[0..i), b[0..j))).
void fill_lcs_table(std::span<const Token> a, std::span<const Token> b,
                    std::vector<std::uint32_t>& table) {
    const std::size_t cols = b.size() + 1;
    table.assign((a.size() + 1) * cols, 0);
    for (std::size_t i = 1; i <= a.size(); ++i) {
        const Token ai = a[i - 1];
        std::uint32_t* row = table.data() + i * cols;
        const std::uint32_t* up = row - cols;
        for (std::size_t j = 1; j <= b.size(); ++j) {
            row[j] = ai == b[j - 1] ? up[j - 1] + 1 : std::max(up[j], row[j - 1]);
        }
    }
}

}  // namespace

TokenSeq lcs(std::span<const Token> a, std::span<const Token> b) {
    if (a.empty() || b.empty()) return {};
    if (is_subsequence(a, b)) return TokenSeq(a.begin(), a.end());
    if (is_subsequence(b, a)) return TokenSeq(b.begin(), b.end());

    thread_local std::vector<std::uint32_t> table;
    fill_lcs_table(a, b, table);
    const std::size_t cols = b.size() + 1;

    TokenSeq out;
    out.reserve(table.back());
    std::size_t i = a.size();
    std::size_t j = b.size();
    while (i > 0 && j > 0) {
        if (a[i - 1] == b[j - 1]) {
            out.push_back(a[i - 1]);
            --i;
            --j;
        } else if (table[(i - 1) * cols + j] >= table[i * cols + j - 1]) {
            --i;
        } else {
            --j;
        }
    }
    std::reverse(out.begin(), out.end());
    return out;
}

std::size_t lcs_length(std::span<const Token> a, std::span<const Token> b) {
    if (a.empty() || b.empty()) return 0;
    // Two rolling rows are enough without a traceback.
    thread_local std::vector<std::uint32_t> prev, cur;
    prev.assign(b.size() + 1, 0);
    cur.assign(b.size() + 1, 0);
    for (std::size_t i = 1; i <= a.size(); ++i) {
        for (std::size_t j = 1; j <= b.size(); ++j)
            cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
        std::swap(prev, cur);
    }
    return prev[b.size()];
}

TokenSeq trim_tokens(std::span<const Token> seq, std::span<const Token> victims) {
    if (victims.empty()) return TokenSeq(seq.begin(), seq.end());
    std::unordered_set<Token> drop(victims.begin(), victims.end());
    TokenSeq out;
    out.reserve(seq.size());
    for (Token t : seq)
        if (!drop.contains(t)) out.push_back(t);
    return out;
}

std::string render_template(std::span<const Token> tmpl, std::span<const TokenSeq> samples) {
    // gap[i] marks skipped tokens right before template token i; gap[size] is the tail.
    std::vector<bool> gap(tmpl.size() + 1, false);
    for (const TokenSeq& s : samples) {
        std::size_t j = 0;
        for (std::size_t i = 0; i < tmpl.size(); ++i) {
            const std::size_t start = j;
            while (j < s.size() && s[j] != tmpl[i]) ++j;
            if (j == s.size())
                throw ValidationError("template '" + join(tmpl) + "' is not a subsequence of sample '" +
                                      join(s) + "'");
            if (j > start) gap[i] = true;
            ++j;
        }
        if (j < s.size()) gap[tmpl.size()] = true;
    }

    std::string out;
    auto emit = [&](std::string_view w) {
        if (!out.empty()) out.push_back(' ');
        out += w;
    };
    for (std::size_t i = 0; i < tmpl.size(); ++i) {
        if (gap[i]) emit(kWildcard);
        emit(tmpl[i].text());
    }
    if (gap[tmpl.size()]) emit(kWildcard);
    return out;
}

LogStore LogStore::from_lines(std::span<const std::string> lines) {
    LogStore store;
    store.logs.reserve(lines.size());
    store.raw_lines.reserve(lines.size());
    for (const auto& line : lines) {
        store.logs.push_back(tokenize(line));
        store.raw_lines.push_back(line);
    }
    return store;
}

void absorb_members(ClusterTemplatePair& pair, std::span<const LogIndex> extra) {
    const auto mid = static_cast<std::ptrdiff_t>(pair.members.size());
    pair.members.insert(pair.members.end(), extra.begin(), extra.end());
    if (!std::is_sorted(pair.members.begin() + mid, pair.members.end()))
        std::sort(pair.members.begin() + mid, pair.members.end());
    std::inplace_merge(pair.members.begin(), pair.members.begin() + mid, pair.members.end());
}

void MinedClustering::validate() const {
    std::vector<std::int64_t> owner(n_logs, -1);
    for (std::size_t p = 0; p < pairs.size(); ++p) {
        if (pairs[p].members.empty())
            throw ValidationError("cluster " + std::to_string(p) + " has no members");
        for (LogIndex n : pairs[p].members) {
            if (n >= n_logs)
                throw ValidationError("cluster " + std::to_string(p) + " references log index " +
                                      std::to_string(n) + " outside [0, " + std::to_string(n_logs) + ")");
            if (owner[n] >= 0)
                throw ValidationError("log index " + std::to_string(n) + " appears in clusters " +
                                      std::to_string(owner[n]) + " and " + std::to_string(p));
            owner[n] = static_cast<std::int64_t>(p);
        }
    }
    for (std::size_t n = 0; n < n_logs; ++n)
        if (owner[n] < 0) throw ValidationError("log index " + std::to_string(n) + " is not covered by any cluster");
}

}  // namespace logmine
