#include "logmine/service.hpp"

#include <charconv>
#include <cstdio>
#include <random>

#include <spdlog/spdlog.h>

#include "httplib.h"

#include "logmine/corpus.hpp"

namespace logmine::service {

using nlohmann::json;

namespace {

constexpr auto kMaxLongPoll = std::chrono::milliseconds(30000);

json tokens_json(std::span<const Token> seq) {
    json out = json::array();
    for (Token t : seq) out.push_back(t.text());
    return out;
}

std::string render_against(std::span<const Token> tmpl, std::span<const LogIndex> context, const LogStore& logs) {
    std::vector<TokenSeq> samples;
    for (LogIndex n : context)
        if (n < logs.size()) samples.push_back(logs[n]);
    try {
        return render_template(tmpl, samples);
    } catch (const ValidationError&) {
        return join(tmpl);
    }
}

bool is_count(const json& v) { return v.is_number_unsigned() || (v.is_number_integer() && v.get<std::int64_t>() >= 0); }

std::string random_suffix() {
    static std::mutex mu;
    static std::mt19937_64 rng{std::random_device{}()};
    std::lock_guard lock(mu);
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(rng()));
    return std::string(buf, 8);
}

}  // namespace

std::optional<PendingQuestion> InteractiveProvider::pending() const {
    std::lock_guard lock(mu_);
    return pending_;
}

std::optional<PendingQuestion> InteractiveProvider::wait_for_question(std::chrono::milliseconds timeout) const {
    std::unique_lock lock(mu_);
    cv_.wait_for(lock, timeout, [&] { return pending_.has_value() || closed_ || aborted_; });
    return pending_;
}

InteractiveProvider::Ack InteractiveProvider::post(std::uint64_t seq, const Answer& answer) {
    std::lock_guard lock(mu_);
    if (aborted_) throw ConflictError("session was aborted");
    if (seq != 0 && seq == last_answered_) return Ack::Duplicate;
    if (!pending_ || pending_->seq != seq)
        throw ConflictError("question " + std::to_string(seq) + " is not pending" +
                            (pending_ ? " (pending: " + std::to_string(pending_->seq) + ")" : std::string()));
    validate_answer(pending_->question, answer);
    answer_ = answer;
    last_answered_ = seq;
    pending_.reset();
    cv_.notify_all();
    return Ack::Accepted;
}

InteractiveProvider::Ack InteractiveProvider::post(const json& body) {
    if (!body.is_object() || !body.contains("seq") || !is_count(body["seq"]))
        throw ValidationError("answer needs a non-negative integer 'seq'");
    const auto seq = body["seq"].get<std::uint64_t>();
    Question q;
    {
        std::lock_guard lock(mu_);
        if (aborted_) throw ConflictError("session was aborted");
        if (seq != 0 && seq == last_answered_) return Ack::Duplicate;
        if (!pending_ || pending_->seq != seq)
            throw ConflictError("question " + std::to_string(seq) + " is not pending");
        q = pending_->question;
    }
    const auto [s, answer] = answer_from_json(body, q);
    return post(s, answer);
}

void InteractiveProvider::abort() {
    std::lock_guard lock(mu_);
    aborted_ = true;
    pending_.reset();
    cv_.notify_all();
}

void InteractiveProvider::close() {
    std::lock_guard lock(mu_);
    closed_ = true;
    cv_.notify_all();
}

bool InteractiveProvider::aborted() const {
    std::lock_guard lock(mu_);
    return aborted_;
}

FeedbackCounters InteractiveProvider::counters_snapshot() const {
    std::lock_guard lock(mu_);
    return snapshot_;
}

void InteractiveProvider::publish_counters() {
    std::lock_guard lock(mu_);
    snapshot_ = counters();
}

Answer InteractiveProvider::respond(const Question& q) {
    std::unique_lock lock(mu_);
    snapshot_ = counters();
    if (aborted_) throw SessionAborted();
    pending_ = PendingQuestion{++next_seq_, q};
    answer_.reset();
    cv_.notify_all();
    cv_.wait(lock, [&] { return aborted_ || answer_.has_value(); });
    if (aborted_) throw SessionAborted();
    Answer a = std::move(*answer_);
    answer_.reset();
    return a;
}

std::string_view to_string(SessionState state) noexcept {
    switch (state) {
        case SessionState::Running: return "running";
        case SessionState::AwaitingAnswer: return "awaiting_answer";
        case SessionState::Finished: return "finished";
        case SessionState::Aborted: return "aborted";
    }
    return "unknown";
}

SessionRequest parse_session_request(const json& body) {
    if (!body.is_object()) throw ValidationError("session request must be a JSON object");
    SessionRequest req;
    auto path = [&](const char* key) -> std::optional<std::filesystem::path> {
        if (!body.contains(key)) return std::nullopt;
        if (!body[key].is_string()) throw ValidationError(std::string("'") + key + "' must be a path string");
        return std::filesystem::path(body[key].get<std::string>());
    };
    std::uint64_t seed = 0;
    for (const auto& [key, value] : body.items()) {
        if (key == "logs" || key == "truth" || key == "import" || key == "generate" || key == "knobs" ||
            key == "repeat" || key == "lossless_completion")
            continue;
        if (key == "seed") {
            if (!is_count(value)) throw ValidationError("'seed' must be a non-negative integer");
            seed = value.get<std::uint64_t>();
            continue;
        }
        throw ValidationError("unknown session field '" + key + "'");
    }
    req.run.logs = path("logs");
    req.run.truth = path("truth");
    req.run.import_path = path("import");
    req.run.knobs.seed = seed;
    if (body.contains("generate")) {
        const json& g = body["generate"];
        std::string text;
        if (g.is_string()) {
            text = g.get<std::string>();
        } else if (g.is_object()) {
            for (const auto& [key, value] : g.items()) {
                if (!value.is_number_integer() && !value.is_boolean())
                    throw ValidationError("generator setting '" + key + "' must be an integer");
                text += key + "=" + (value.is_boolean() ? std::string(value.get<bool>() ? "1" : "0") : value.dump()) + ",";
            }
        } else {
            throw ValidationError("'generate' must be a string or an object");
        }
        req.run.generate = parse_generate(text, seed);
    }
    if (body.contains("knobs")) {
        const json& k = body["knobs"];
        if (!k.is_object()) throw ValidationError("'knobs' must be an object");
        for (const auto& [key, value] : k.items()) {
            if (!value.is_number()) throw ValidationError("knob '" + key + "' must be a number");
            apply_knob(req.run.knobs, key + "=" + value.dump());
        }
    }
    if (body.contains("repeat")) {
        const json& r = body["repeat"];
        if (is_count(r))
            req.options.n_repeat = r.get<std::size_t>();
        else if (r.is_string())
            req.options.n_repeat = parse_repeat(r.get<std::string>());
        else
            throw ValidationError("'repeat' must be a count or \"until-stable\"");
    }
    if (body.contains("lossless_completion")) {
        if (!body["lossless_completion"].is_boolean()) throw ValidationError("'lossless_completion' must be a boolean");
        req.options.lossless_completion = body["lossless_completion"].get<bool>();
    }
    return req;
}

json question_to_json(const PendingQuestion& pending, const LogStore& logs) {
    const Question& q = pending.question;
    json j = {{"seq", pending.seq},
              {"kind", to_string(q.kind)},
              {"target", tokens_json(q.target)},
              {"target_rendered", render_against(q.target, q.context, logs)},
              {"target_log", q.target_log ? json(*q.target_log) : json(nullptr)}};
    json candidates = json::array();
    for (std::size_t i = 0; i < q.candidates.size(); ++i) {
        const Candidate& c = q.candidates[i];
        candidates.push_back({{"index", i},
                              {"tokens", tokens_json(c.tmpl)},
                              {"rendered", join(c.tmpl)},
                              {"lcs_length", c.lcs_length}});
    }
    j["candidates"] = std::move(candidates);
    json context = json::array();
    for (LogIndex n : q.context)
        if (n < logs.size()) context.push_back({{"log", n}, {"raw", logs.raw_lines.at(n)}});
    j["context"] = std::move(context);
    return j;
}

std::pair<std::uint64_t, Answer> answer_from_json(const json& body, const Question& q) {
    if (!body.is_object()) throw ValidationError("answer must be a JSON object");
    if (!body.contains("seq") || !is_count(body["seq"]))
        throw ValidationError("answer needs a non-negative integer 'seq'");
    if (!body.contains("kind") || !body["kind"].is_string()) throw ValidationError("answer needs a 'kind'");
    const auto seq = body["seq"].get<std::uint64_t>();
    const auto kind = body["kind"].get<std::string>();
    if (kind != to_string(q.kind))
        throw ValidationError("answer kind '" + kind + "' does not match question kind '" + std::string(to_string(q.kind)) +
                              "'");
    switch (q.kind) {
        case QuestionKind::MessageLoss:
            if (!body.contains("loss") || !body["loss"].is_boolean())
                throw ValidationError("message_loss answer needs a boolean 'loss'");
            return {seq, MessageLossAnswer{body["loss"].get<bool>()}};
        case QuestionKind::DummyToken: {
            const json& tokens = body.value("tokens", json(nullptr));
            if (tokens.is_null()) return {seq, DummyTokenAnswer{std::nullopt}};
            if (!tokens.is_array()) throw ValidationError("dummy_token answer needs 'tokens': array or null");
            TokenSeq picked;
            for (const json& t : tokens) {
                if (!t.is_string()) throw ValidationError("dummy tokens must be strings");
                const auto text = t.get<std::string>();
                const auto it = std::find_if(q.target.begin(), q.target.end(),
                                             [&](Token tok) { return tok.text() == text; });
                if (it == q.target.end())
                    throw ValidationError("dummy token '" + text + "' does not occur in the template");
                picked.push_back(*it);
            }
            return {seq, DummyTokenAnswer{std::move(picked)}};
        }
        case QuestionKind::Select: {
            const json& index = body.value("index", json(nullptr));
            if (index.is_null()) return {seq, SelectAnswer{std::nullopt}};
            if (!is_count(index)) throw ValidationError("select answer needs 'index': integer or null");
            return {seq, SelectAnswer{index.get<std::size_t>()}};
        }
    }
    throw ValidationError("unknown question kind");
}

Session::Session(std::string id, PreparedRun run, PipelineOptions options)
    : id_(std::move(id)), run_(std::move(run)), options_(std::move(options)) {
    worker_ = std::thread([this] { this->run(); });
}

Session::~Session() {
    provider_.abort();
    join();
}

void Session::join() {
    std::lock_guard lock(join_mu_);
    if (worker_.joinable()) worker_.join();
}

void Session::run() {
    try {
        PipelineOptions opts = options_;
        opts.on_progress = [this](const PipelineProgress& p) {
            std::lock_guard lock(mu_);
            progress_ = p;
        };
        RunOutcome outcome = refine(run_, provider_, opts);
        provider_.publish_counters();
        std::lock_guard lock(mu_);
        outcome_ = std::move(outcome);
        done_ = true;
    } catch (const SessionAborted&) {
        provider_.publish_counters();
        std::lock_guard lock(mu_);
        aborted_ = true;
    } catch (const std::exception& e) {
        spdlog::error("session {} failed: {}", id_, e.what());
        std::lock_guard lock(mu_);
        aborted_ = true;
        error_ = e.what();
    }
    provider_.close();
}

SessionState Session::state() const {
    {
        std::lock_guard lock(mu_);
        if (done_) return SessionState::Finished;
        if (aborted_) return SessionState::Aborted;
    }
    if (provider_.aborted()) return SessionState::Aborted;
    return provider_.pending() ? SessionState::AwaitingAnswer : SessionState::Running;
}

json Session::status_json() const {
    const auto st = state();
    const auto pending = st == SessionState::AwaitingAnswer ? provider_.pending() : std::nullopt;
    std::lock_guard lock(mu_);
    json j = {{"id", id_},
              {"state", to_string(st)},
              {"n_logs", run_.logs.size()},
              {"progress",
               {{"round", progress_.round},
                {"phase", progress_.phase.empty() ? std::string("completion") : std::string(progress_.phase)},
                {"done", progress_.done},
                {"total", progress_.total}}},
              {"feedback", to_json(provider_.counters_snapshot())},
              {"question_seq", pending ? json(pending->seq) : json(nullptr)},
              {"has_truth", run_.truth.has_value()}};
    if (!error_.empty()) j["error"] = error_;
    return j;
}

std::optional<json> Session::result_json() const {
    std::lock_guard lock(mu_);
    if (!outcome_) return std::nullopt;
    json clustering = clustering_to_json(outcome_->refined);
    // Rendered templates for display; the plain token lists stay authoritative.
    json rendered = json::array();
    for (const auto& pair : outcome_->refined.pairs) {
        std::vector<TokenSeq> samples;
        for (std::size_t i = 0; i < std::min<std::size_t>(pair.members.size(), 3); ++i)
            samples.push_back(run_.logs[pair.members[i]]);
        rendered.push_back(render_template(pair.tmpl, samples));
    }
    return json{{"report", to_json(outcome_->report)}, {"clustering", std::move(clustering)}, {"rendered", rendered}};
}

void Session::abort() {
    {
        std::lock_guard lock(mu_);
        if (done_ || aborted_) return;
    }
    provider_.abort();
}

SessionRegistry::~SessionRegistry() { abort_all(); }

std::shared_ptr<Session> SessionRegistry::create(const SessionRequest& request) {
    PreparedRun run = prepare_run(request.run);
    std::lock_guard lock(mu_);
    std::string id = "s" + std::to_string(++next_id_) + "-" + random_suffix();
    auto session = std::make_shared<Session>(id, std::move(run), request.options);
    sessions_.emplace(std::move(id), session);
    return session;
}

std::shared_ptr<Session> SessionRegistry::find(const std::string& id) const {
    std::lock_guard lock(mu_);
    const auto it = sessions_.find(id);
    return it == sessions_.end() ? nullptr : it->second;
}

std::size_t SessionRegistry::size() const {
    std::lock_guard lock(mu_);
    return sessions_.size();
}

std::vector<std::shared_ptr<Session>> SessionRegistry::list() const {
    std::lock_guard lock(mu_);
    std::vector<std::shared_ptr<Session>> out;
    for (const auto& [id, s] : sessions_) out.push_back(s);
    return out;
}

void SessionRegistry::abort_all() {
    for (const auto& s : list()) s->abort();
}

namespace {

void reply(httplib::Response& res, int status, const json& body) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
}

void reply_error(httplib::Response& res, int status, const std::string& message) {
    reply(res, status, {{"error", message}});
}

// Runs a handler, mapping our exceptions onto status codes.
template <typename F>
void guarded(httplib::Response& res, F&& f) {
    try {
        f();
    } catch (const json::exception& e) {
        reply_error(res, 400, std::string("bad JSON: ") + e.what());
    } catch (const ValidationError& e) {
        reply_error(res, 400, e.what());
    } catch (const ConflictError& e) {
        reply_error(res, 409, e.what());
    } catch (const std::invalid_argument& e) {
        reply_error(res, 400, e.what());
    } catch (const std::exception& e) {
        reply_error(res, 500, e.what());
    }
}

}  // namespace

Server::Server() : http_(std::make_unique<httplib::Server>()) {
    // Long-polls hold a worker each.
    http_->new_task_queue = [] { return new httplib::ThreadPool(32); };
    http_->set_default_headers({{"Access-Control-Allow-Origin", "*"}});
    // No SO_REUSEPORT, so a second server on a busy port fails to bind.
    http_->set_socket_options([](socket_t sock) {
        int yes = 1;
        setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, reinterpret_cast<const char*>(&yes), sizeof(yes));
    });
    install_routes();
}

Server::~Server() {
    stop();
    registry_.abort_all();
}

void Server::install_routes() {
    auto& svr = *http_;
    auto with_session = [this](const httplib::Request& req, httplib::Response& res) -> std::shared_ptr<Session> {
        auto s = registry_.find(req.matches[1]);
        if (!s) reply_error(res, 404, "no session '" + std::string(req.matches[1]) + "'");
        return s;
    };

    svr.Get("/healthz", [this](const httplib::Request&, httplib::Response& res) {
        reply(res, 200, {{"status", "ok"}, {"sessions", registry_.size()}});
    });

    svr.Options(R"(/.*)", [](const httplib::Request&, httplib::Response& res) {
        res.set_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS");
        res.set_header("Access-Control-Allow-Headers", "Content-Type");
        res.status = 204;
    });

    svr.Get("/sessions", [this](const httplib::Request&, httplib::Response& res) {
        json out = json::array();
        for (const auto& s : registry_.list()) out.push_back(s->status_json());
        reply(res, 200, {{"sessions", out}});
    });

    svr.Post("/sessions", [this](const httplib::Request& req, httplib::Response& res) {
        guarded(res, [&] {
            const auto request = parse_session_request(json::parse(req.body));
            auto s = registry_.create(request);
            reply(res, 201, s->status_json());
        });
    });

    svr.Get(R"(/sessions/([^/]+))", [=](const httplib::Request& req, httplib::Response& res) {
        if (auto s = with_session(req, res)) reply(res, 200, s->status_json());
    });

    svr.Get(R"(/sessions/([^/]+)/question)", [=](const httplib::Request& req, httplib::Response& res) {
        auto s = with_session(req, res);
        if (!s) return;
        guarded(res, [&] {
            std::chrono::milliseconds wait{0};
            if (req.has_param("wait_ms"))
                wait = std::min(kMaxLongPoll, std::chrono::milliseconds(std::stoll(req.get_param_value("wait_ms"))));
            auto pending = wait.count() > 0 ? s->provider().wait_for_question(wait) : s->provider().pending();
            if (pending) {
                reply(res, 200, {{"pending", true}, {"question", question_to_json(*pending, s->logs())}});
                return;
            }
            const auto st = s->state();
            json body = {{"pending", false}, {"state", to_string(st)}};
            if (st == SessionState::Finished) body["result"] = "/sessions/" + s->id() + "/result";
            reply(res, 200, body);
        });
    });

    svr.Post(R"(/sessions/([^/]+)/answer)", [=](const httplib::Request& req, httplib::Response& res) {
        auto s = with_session(req, res);
        if (!s) return;
        guarded(res, [&] {
            const auto ack = s->provider().post(json::parse(req.body));
            reply(res, 200, {{"status", ack == InteractiveProvider::Ack::Accepted ? "accepted" : "duplicate"}});
        });
    });

    svr.Post(R"(/sessions/([^/]+)/abort)", [=](const httplib::Request& req, httplib::Response& res) {
        auto s = with_session(req, res);
        if (!s) return;
        s->abort();
        // The worker leaves promptly once aborted; wait so the reply shows the final state.
        if (s->state() != SessionState::Finished) s->join();
        reply(res, 200, s->status_json());
    });

    svr.Get(R"(/sessions/([^/]+)/result)", [=](const httplib::Request& req, httplib::Response& res) {
        auto s = with_session(req, res);
        if (!s) return;
        if (auto result = s->result_json())
            reply(res, 200, *result);
        else
            reply_error(res, 409, "session is " + std::string(to_string(s->state())));
    });
}

int Server::bind(const std::string& host, int port) {
    const int bound = port == 0 ? http_->bind_to_any_port(host) : (http_->bind_to_port(host, port) ? port : -1);
    if (bound < 0)
        throw std::runtime_error("cannot bind " + host + ":" + std::to_string(port) + " (address in use?)");
    return bound;
}

void Server::listen() { http_->listen_after_bind(); }

void Server::stop() {
    if (http_->is_running()) http_->stop();
}

void Server::wait_until_ready() const { http_->wait_until_ready(); }

std::pair<std::string, int> parse_address(std::string_view text, std::string host, int port) {
    const auto colon = text.rfind(':');
    std::string_view h = colon == std::string_view::npos ? text : text.substr(0, colon);
    if (!h.empty()) host = std::string(h);
    if (colon != std::string_view::npos) {
        const auto p = text.substr(colon + 1);
        int value = -1;
        const auto [end, ec] = std::from_chars(p.data(), p.data() + p.size(), value);
        if (ec != std::errc{} || end != p.data() + p.size() || value < 0 || value > 65535)
            throw ValidationError("bad port in address '" + std::string(text) + "'");
        port = value;
    }
    return {host, port};
}

}  // namespace logmine::service
