#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "support.hpp"

using namespace testing;

TEST_CASE("tokens reject empty text, whitespace and the wildcard") {
    CHECK_THROWS_AS(Token(""), std::invalid_argument);
    CHECK_THROWS_AS(Token("a b"), std::invalid_argument);
    CHECK_THROWS_AS(Token("tab\there"), std::invalid_argument);
    CHECK_THROWS_AS(Token("<*>"), std::invalid_argument);
    CHECK(Token("x") == Token("x"));
    CHECK(Token("x") != Token("y"));
    CHECK(Token("alpha").text() == "alpha");
}

TEST_CASE("tokenize splits on whitespace runs") {
    CHECK(texts(S("  a\tb   c ")) == std::vector<std::string>{"a", "b", "c"});
    CHECK(S("").empty());
    CHECK(S("   ").empty());
    CHECK_THROWS_AS(S("a <*> b"), ValidationError);
}

TEST_CASE("template tokenization drops wildcard tokens") {
    CHECK(texts(tokenize_template("<*> open <*> file <*>")) == std::vector<std::string>{"open", "file"});
    CHECK(texts(tokenize_template("blk_<*> done")) == std::vector<std::string>{"done"});
}

TEST_CASE("is_subsequence") {
    CHECK(is_subsequence(S("a c"), S("a b c")));
    CHECK(is_subsequence(S(""), S("a")));
    CHECK(is_subsequence(S(""), S("")));
    CHECK_FALSE(is_subsequence(S("c a"), S("a b c")));
    CHECK_FALSE(is_subsequence(S("a a"), S("a b")));
    CHECK(is_subsequence(S("a a"), S("a b a")));
}

TEST_CASE("lcs examples") {
    CHECK(texts(lcs(S("a b c d"), S("b d"))) == std::vector<std::string>{"b", "d"});
    CHECK(lcs(S("a"), S("")).empty());
    CHECK(lcs(S("x y"), S("p q")).empty());
    CHECK(texts(lcs(S("open file 12 done"), S("open file 99 done"))) ==
          std::vector<std::string>{"open", "file", "done"});
    // Tie: both "a" and "b" have length 1; the traceback drops from the first
    // argument's tail first, leaving the match on "a".
    CHECK(texts(lcs(S("a b"), S("b a"))) == std::vector<std::string>{"a"});
    CHECK(lcs_length(S("a b"), S("b a")) == 1);
}

TEST_CASE("lcs matches the enumeration oracle on every short pair") {
    std::vector<TokenSeq> all{{}};
    for (std::size_t len = 1; len <= 5; ++len) {
        std::vector<TokenSeq> next;
        for (const auto& s : all)
            if (s.size() == len - 1)
                for (const char* w : {"a", "b", "c"}) {
                    auto t = s;
                    t.emplace_back(w);
                    next.push_back(t);
                }
        all.insert(all.end(), next.begin(), next.end());
    }
    REQUIRE(all.size() == 364);
    std::size_t mismatches = 0;
    for (std::size_t i = 0; i < all.size(); i += 3)
        for (const auto& b : all) {
            const auto expect = brute_lcs_length(texts(all[i]), texts(b));
            const auto got = lcs(all[i], b);
            if (got.size() != expect || lcs_length(all[i], b) != expect || !is_subsequence(got, all[i]) ||
                !is_subsequence(got, b))
                ++mismatches;
        }
    CHECK(mismatches == 0);
}

TEST_CASE("lcs properties on random pairs") {
    std::mt19937_64 rng(7);
    for (int trial = 0; trial < 500; ++trial) {
        const auto a = random_seq(rng, rng() % 30, 2 + rng() % 6);
        const auto b = random_seq(rng, rng() % 30, 2 + rng() % 6);
        const auto ab = lcs(a, b);
        CHECK(is_subsequence(ab, a));
        CHECK(is_subsequence(ab, b));
        CHECK(ab.size() == lcs(b, a).size());
        CHECK(ab.size() == lcs_length(a, b));
        CHECK(lcs(a, a) == a);
        CHECK(lcs(a, b) == ab);  // deterministic
    }
}

TEST_CASE("trim_tokens removes every occurrence") {
    CHECK(texts(trim_tokens(S("a 1 b 1 c 2"), S("1 2"))) == std::vector<std::string>{"a", "b", "c"});
    CHECK(trim_tokens(S("a b"), S("")) == S("a b"));
}

TEST_CASE("render_template marks gaps against the samples") {
    const std::vector<TokenSeq> samples{S("a x c"), S("a c y")};
    CHECK(render_template(S("a c"), samples) == "a <*> c <*>");
    CHECK(render_template(S("a c"), std::vector<TokenSeq>{S("a c")}) == "a c");
    CHECK(render_template(S("b"), std::vector<TokenSeq>{S("a b")}) == "<*> b");
    CHECK(render_template(S("a c"), {}) == "a c");
    CHECK_THROWS_AS(render_template(S("c a"), samples), ValidationError);
}

TEST_CASE("absorb_members keeps members sorted") {
    ClusterTemplatePair p{{1, 4, 9}, S("t")};
    const LogIndex extra[] = {0, 5, 10};
    absorb_members(p, extra);
    CHECK(p.members == std::vector<LogIndex>{0, 1, 4, 5, 9, 10});
}

TEST_CASE("clustering validation names the problem") {
    MinedClustering ok{{{{0, 2}, S("a")}, {{1}, S("b")}}, 3};
    CHECK_NOTHROW(ok.validate());

    auto message = [](const MinedClustering& mc) {
        try {
            mc.validate();
        } catch (const ValidationError& e) {
            return std::string(e.what());
        }
        return std::string();
    };
    CHECK(message({{{{0, 1}, S("a")}, {{}, S("b")}}, 2}).find("no members") != std::string::npos);
    CHECK(message({{{{0, 1, 5}, S("a")}}, 2}).find("5") != std::string::npos);
    CHECK(message({{{{0, 1}, S("a")}, {{1}, S("b")}}, 2}).find("1") != std::string::npos);
    CHECK(message({{{{0}, S("a")}}, 2}).find("1") != std::string::npos);
}

TEST_CASE("LogStore from raw lines") {
    const std::vector<std::string> lines{"a b", "c"};
    const auto store = LogStore::from_lines(lines);
    REQUIRE(store.size() == 2);
    CHECK(store[0] == S("a b"));
    CHECK(store.raw_lines[1] == "c");
    CHECK_THROWS(store[2]);
}
