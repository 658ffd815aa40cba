#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <thread>

#include "httplib.h"

#include "logmine/service.hpp"
#include "support.hpp"

using namespace testing;
using nlohmann::json;

namespace {

class LiveServer {
public:
    LiveServer() {
        port_ = server_.bind("127.0.0.1", 0);
        thread_ = std::thread([this] { server_.listen(); });
        server_.wait_until_ready();
    }
    ~LiveServer() {
        server_.stop();
        thread_.join();
    }

    httplib::Client client() const {
        httplib::Client c("127.0.0.1", port_);
        c.set_read_timeout(30, 0);
        return c;
    }
    service::SessionRegistry& registry() { return server_.registry(); }

private:
    service::Server server_;
    int port_ = 0;
    std::thread thread_;
};

json body_of(const httplib::Result& r) {
    REQUIRE(r);
    return json::parse(r->body);
}

json small_request(const std::string& repeat = "until-stable") {
    return {{"generate", {{"K", 4}, {"logs_per_cluster", 5}}},
            {"knobs", {{"merge_p", 0.9}, {"truncate_p", 0.5}}},
            {"seed", 1},
            {"repeat", repeat}};
}

std::string create(httplib::Client& c, const json& request) {
    auto r = c.Post("/sessions", request.dump(), "application/json");
    REQUIRE(r);
    REQUIRE(r->status == 201);
    return json::parse(r->body)["id"].get<std::string>();
}

json next_question(httplib::Client& c, const std::string& id) {
    return body_of(c.Get("/sessions/" + id + "/question?wait_ms=10000"));
}

Question question_from(const json& q) {
    Question out;
    const auto kind = q["kind"].get<std::string>();
    out.kind = kind == "message_loss" ? QuestionKind::MessageLoss
               : kind == "dummy_token" ? QuestionKind::DummyToken
                                       : QuestionKind::Select;
    for (const auto& t : q["target"]) out.target.emplace_back(t.get<std::string>());
    if (!q["target_log"].is_null()) out.target_log = q["target_log"].get<LogIndex>();
    for (const auto& c : q["candidates"]) {
        Candidate cand;
        for (const auto& t : c["tokens"]) cand.tmpl.emplace_back(t.get<std::string>());
        cand.lcs_length = c["lcs_length"].get<std::size_t>();
        out.candidates.push_back(std::move(cand));
    }
    return out;
}

// The answer the simulator would give, as a wire payload.
json simulated_answer(const json& wire, const GroundTruth& gt) {
    const Question q = question_from(wire);
    json a = {{"seq", wire["seq"]}, {"kind", wire["kind"]}};
    switch (q.kind) {
        case QuestionKind::MessageLoss: a["loss"] = simulate_message_loss(q.target, gt); break;
        case QuestionKind::DummyToken: {
            const auto d = simulate_dummy_token(q.target, gt);
            a["tokens"] = d.tokens ? json(texts(*d.tokens)) : json(nullptr);
            break;
        }
        case QuestionKind::Select: {
            const auto s = simulate_select(q, gt);
            a["index"] = s.index ? json(*s.index) : json(nullptr);
            break;
        }
    }
    return a;
}

// Answers every question like the simulator until the session finishes.
json drive_to_result(httplib::Client& c, const std::string& id, const GroundTruth& gt, std::size_t* questions = nullptr) {
    std::size_t asked = 0;
    while (true) {
        const auto q = next_question(c, id);
        if (!q["pending"].get<bool>()) {
            if (q["state"] == "finished") break;
            REQUIRE(q["state"] != "aborted");
            continue;
        }
        ++asked;
        auto r = c.Post("/sessions/" + id + "/answer", simulated_answer(q["question"], gt).dump(), "application/json");
        REQUIRE(r);
        REQUIRE(r->status == 200);
    }
    if (questions) *questions = asked;
    return body_of(c.Get("/sessions/" + id + "/result"));
}

PreparedRun prepared(const json& request) { return prepare_run(service::parse_session_request(request).run); }

}  // namespace

TEST_CASE("health and an empty registry") {
    LiveServer server;
    auto c = server.client();
    const auto h = body_of(c.Get("/healthz"));
    CHECK(h["status"] == "ok");
    CHECK(h["sessions"] == 0);
    CHECK(body_of(c.Get("/sessions"))["sessions"].empty());
}

TEST_CASE("session creation") {
    LiveServer server;
    auto c = server.client();
    const auto a = create(c, small_request());
    const auto b = create(c, small_request());
    CHECK(a != b);
    CHECK(server.registry().size() == 2);
    const auto st = body_of(c.Get("/sessions/" + a));
    CHECK((st["state"] == "running" || st["state"] == "awaiting_answer"));
    CHECK(st["has_truth"] == true);

    auto bad = c.Post("/sessions", R"({"logs": "/no/such/file.log"})", "application/json");
    REQUIRE(bad);
    CHECK(bad->status == 400);
    CHECK(json::parse(bad->body)["error"].get<std::string>().find("/no/such/file.log") != std::string::npos);
    CHECK(c.Post("/sessions", R"({"bogus": 1})", "application/json")->status == 400);
    CHECK(c.Post("/sessions", "not json", "application/json")->status == 400);
    CHECK(c.Post("/sessions", R"({"generate": "K=2", "repeat": "forever"})", "application/json")->status == 400);
}

TEST_CASE("unknown sessions are not found") {
    LiveServer server;
    auto c = server.client();
    CHECK(c.Get("/sessions/nope")->status == 404);
    CHECK(c.Get("/sessions/nope/question")->status == 404);
    CHECK(c.Post("/sessions/nope/answer", "{}", "application/json")->status == 404);
    CHECK(c.Post("/sessions/nope/abort", "", "application/json")->status == 404);
    CHECK(c.Get("/sessions/nope/result")->status == 404);
}

TEST_CASE("answers are validated against the pending question") {
    LiveServer server;
    auto c = server.client();
    const auto id = create(c, small_request());
    const auto gt = *prepared(small_request()).truth;

    // Walk to the first select question with candidates, answering as the simulator.
    json q;
    while (true) {
        const auto w = next_question(c, id);
        REQUIRE(w["pending"].get<bool>());
        q = w["question"];
        const auto st = body_of(c.Get("/sessions/" + id));
        CHECK(st["state"] == "awaiting_answer");
        CHECK(st["question_seq"] == q["seq"]);
        if (q["kind"] == "select" && !q["candidates"].empty()) break;
        REQUIRE(c.Post("/sessions/" + id + "/answer", simulated_answer(q, gt).dump(), "application/json")->status == 200);
    }
    const auto url = "/sessions/" + id + "/answer";
    auto post = [&](const json& a) { return c.Post(url, a.dump(), "application/json")->status; };

    CHECK(post({{"seq", q["seq"]}, {"kind", "message_loss"}, {"loss", true}}) == 400);
    CHECK(post({{"seq", q["seq"]}, {"kind", "select"}, {"index", q["candidates"].size()}}) == 400);
    CHECK(post({{"seq", q["seq"]}, {"kind", "select"}, {"index", -1}}) == 400);
    CHECK(post({{"seq", q["seq"].get<std::uint64_t>() + 5}, {"kind", "select"}, {"index", 0}}) == 409);
    CHECK(post({{"kind", "select"}, {"index", 0}}) == 400);

    const auto before = body_of(c.Get("/sessions/" + id))["feedback"]["total"].get<std::size_t>();
    const auto answer = simulated_answer(q, gt);
    auto ok = c.Post(url, answer.dump(), "application/json");
    CHECK(ok->status == 200);
    CHECK(json::parse(ok->body)["status"] == "accepted");
    auto again = c.Post(url, answer.dump(), "application/json");
    CHECK(again->status == 200);
    CHECK(json::parse(again->body)["status"] == "duplicate");

    // The pipeline moves on: the next question (or the finish) shows the answer counted.
    const auto w = next_question(c, id);
    const auto after = body_of(c.Get("/sessions/" + id))["feedback"]["total"].get<std::size_t>();
    CHECK(after > before);
    if (w["pending"].get<bool>()) CHECK(w["question"]["seq"].get<std::uint64_t>() > q["seq"].get<std::uint64_t>());
}

TEST_CASE("questions render templates and context") {
    LiveServer server;
    auto c = server.client();
    const auto id = create(c, small_request());
    const auto w = next_question(c, id);
    REQUIRE(w["pending"].get<bool>());
    const auto& q = w["question"];
    CHECK(q["seq"] == 1);
    CHECK(q["kind"] == "message_loss");
    CHECK(!q["context"].empty());
    CHECK(q["context"][0]["raw"].is_string());
    CHECK(q["target_rendered"].get<std::string>().find(q["target"][0].get<std::string>()) != std::string::npos);
    // A repeated read returns the same question.
    CHECK(next_question(c, id)["question"] == q);
}

TEST_CASE("dummy-token answers are matched by token text") {
    const Question q = [] {
        Question q;
        q.kind = QuestionKind::DummyToken;
        q.target = S("a 7 b");
        return q;
    }();
    const auto [seq, answer] = service::answer_from_json({{"seq", 3}, {"kind", "dummy_token"}, {"tokens", {"7"}}}, q);
    CHECK(seq == 3);
    CHECK(*std::get<DummyTokenAnswer>(answer).tokens == S("7"));
    const auto declined = service::answer_from_json({{"seq", 3}, {"kind", "dummy_token"}, {"tokens", nullptr}}, q);
    CHECK_FALSE(std::get<DummyTokenAnswer>(declined.second).tokens);
    CHECK_THROWS_AS(service::answer_from_json({{"seq", 3}, {"kind", "dummy_token"}, {"tokens", {"zz"}}}, q),
                    ValidationError);
    CHECK_THROWS_AS(service::answer_from_json({{"seq", 3}, {"kind", "dummy_token"}, {"tokens", "7"}}, q),
                    ValidationError);
}

TEST_CASE("abort") {
    LiveServer server;
    auto c = server.client();
    SUBCASE("a running session, twice") {
        const auto id = create(c, small_request());
        REQUIRE(next_question(c, id)["pending"].get<bool>());
        const auto r = body_of(c.Post("/sessions/" + id + "/abort", "", "application/json"));
        CHECK(r["state"] == "aborted");
        CHECK(r["question_seq"].is_null());
        CHECK(body_of(c.Post("/sessions/" + id + "/abort", "", "application/json"))["state"] == "aborted");
        const auto q = next_question(c, id);
        CHECK_FALSE(q["pending"].get<bool>());
        CHECK(q["state"] == "aborted");
        CHECK(c.Get("/sessions/" + id + "/result")->status == 409);
        CHECK(c.Post("/sessions/" + id + "/answer", R"({"seq": 1, "kind": "message_loss", "loss": true})",
                     "application/json")
                  ->status == 409);
    }
    SUBCASE("a finished session stays finished") {
        const auto id = create(c, small_request());
        drive_to_result(c, id, *prepared(small_request()).truth);
        CHECK(body_of(c.Post("/sessions/" + id + "/abort", "", "application/json"))["state"] == "finished");
        CHECK(c.Get("/sessions/" + id + "/result")->status == 200);
    }
}

TEST_CASE("a finished session points at its result") {
    LiveServer server;
    auto c = server.client();
    const auto id = create(c, small_request());
    CHECK(c.Get("/sessions/" + id + "/result")->status == 409);
    const auto result = drive_to_result(c, id, *prepared(small_request()).truth);
    const auto q = next_question(c, id);
    CHECK_FALSE(q["pending"].get<bool>());
    CHECK(q["result"] == "/sessions/" + id + "/result");
    CHECK(result["report"]["kind"] == "refinement");
    CHECK(result["report"]["ga_after"] == 1.0);
    CHECK(result["clustering"]["n_logs"] == 20);
    CHECK(result["rendered"].size() == result["clustering"]["clusters"].size());
    const auto st = body_of(c.Get("/sessions/" + id));
    CHECK(st["state"] == "finished");
    CHECK(st["progress"]["done"] == st["progress"]["total"]);
}

TEST_CASE("a scripted client reproduces the headless simulator run") {
    const json request = {{"generate", {{"K", 50}, {"logs_per_cluster", 40}, {"param_slots", 2}}},
                          {"knobs", {{"split_p", 0.3}, {"merge_p", 0.5}, {"truncate_p", 0.5}}},
                          {"seed", 0},
                          {"repeat", "until-stable"}};
    const auto run = prepared(request);
    Simulator sim(*run.truth);
    const auto headless = refine(run, sim, service::parse_session_request(request).options);

    LiveServer server;
    auto c = server.client();
    const auto id = create(c, request);
    std::size_t questions = 0;
    const auto result = drive_to_result(c, id, *run.truth, &questions);
    CHECK(questions == headless.report.counters.total());
    CHECK(result["clustering"].dump() == clustering_to_json(headless.refined).dump());
    CHECK(result["report"].dump() == to_json(headless.report).dump());
}

TEST_CASE("listen addresses") {
    CHECK(service::parse_address("0.0.0.0:9000") == std::pair<std::string, int>{"0.0.0.0", 9000});
    CHECK(service::parse_address(":81") == std::pair<std::string, int>{"127.0.0.1", 81});
    CHECK(service::parse_address("example") == std::pair<std::string, int>{"example", 8080});
    CHECK_THROWS_AS(service::parse_address("h:99999"), ValidationError);
    CHECK_THROWS_AS(service::parse_address("h:x"), ValidationError);
}

TEST_CASE("binding a used port fails") {
    service::Server a, b;
    const int port = a.bind("127.0.0.1", 0);
    CHECK_THROWS_WITH_AS(b.bind("127.0.0.1", port), doctest::Contains("in use"), std::runtime_error);
}
