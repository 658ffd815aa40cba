#pragma once

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "json.hpp"

#include "logmine/feedback.hpp"
#include "logmine/hitl.hpp"
#include "logmine/workflow.hpp"

namespace httplib {
class Server;
}

namespace logmine::service {

/// An answer that does not belong to the pending question.
class ConflictError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct PendingQuestion {
    std::uint64_t seq = 0;  // 1-based, increases per question
    Question question;
};

/// Feedback provider fed from outside: respond() parks the question in a
/// single slot and blocks until post() delivers the answer or abort() fires.
class InteractiveProvider final : public FeedbackProvider {
public:
    enum class Ack { Accepted, Duplicate };

    std::optional<PendingQuestion> pending() const;
    /// Waits up to `timeout` for a question; returns early once closed.
    std::optional<PendingQuestion> wait_for_question(std::chrono::milliseconds timeout) const;

    /// Throws ConflictError when `seq` is not the pending question and
    /// ValidationError when the answer does not fit it. Re-posting the last
    /// answered seq is acknowledged and ignored.
    Ack post(std::uint64_t seq, const Answer& answer);
    /// Like post(), but takes the JSON answer body.
    Ack post(const nlohmann::json& body);

    void abort();
    /// No more questions will come; wakes long-polls.
    void close();
    bool aborted() const;

    /// Counters as of the last question, safe to read from any thread.
    FeedbackCounters counters_snapshot() const;
    /// Called on the pipeline thread to refresh counters_snapshot().
    void publish_counters();

protected:
    Answer respond(const Question& q) override;

private:
    mutable std::mutex mu_;
    mutable std::condition_variable cv_;
    std::optional<PendingQuestion> pending_;
    std::optional<Answer> answer_;
    std::uint64_t next_seq_ = 0;
    std::uint64_t last_answered_ = 0;
    bool aborted_ = false;
    bool closed_ = false;
    FeedbackCounters snapshot_;
};

enum class SessionState { Running, AwaitingAnswer, Finished, Aborted };
std::string_view to_string(SessionState state) noexcept;

struct SessionRequest {
    RunSpec run;
    PipelineOptions options;
};

/// Reads a POST /sessions body.
SessionRequest parse_session_request(const nlohmann::json& body);

nlohmann::json question_to_json(const PendingQuestion& pending, const LogStore& logs);
/// {"seq": n, "kind": ..., ...} into (seq, answer); dummy tokens are looked up
/// in `q`'s target by text.
std::pair<std::uint64_t, Answer> answer_from_json(const nlohmann::json& body, const Question& q);

/// One pipeline run on its own thread, driven through an InteractiveProvider.
class Session {
public:
    Session(std::string id, PreparedRun run, PipelineOptions options);
    ~Session();
    Session(const Session&) = delete;
    Session& operator=(const Session&) = delete;

    const std::string& id() const noexcept { return id_; }
    SessionState state() const;
    InteractiveProvider& provider() noexcept { return provider_; }
    const LogStore& logs() const noexcept { return run_.logs; }

    nlohmann::json status_json() const;
    /// {"report", "clustering"} once finished.
    std::optional<nlohmann::json> result_json() const;
    /// Stops the pipeline; a finished session stays finished.
    void abort();
    /// Blocks until the pipeline thread has ended.
    void join();

private:
    void run();

    std::string id_;
    PreparedRun run_;
    PipelineOptions options_;
    InteractiveProvider provider_;

    mutable std::mutex mu_;
    bool done_ = false;
    bool aborted_ = false;
    std::string error_;
    PipelineProgress progress_;
    std::optional<RunOutcome> outcome_;
    std::mutex join_mu_;
    std::thread worker_;
};

/// Shared, internally synchronized session map.
class SessionRegistry {
public:
    ~SessionRegistry();
    std::shared_ptr<Session> create(const SessionRequest& request);
    std::shared_ptr<Session> find(const std::string& id) const;
    std::size_t size() const;
    std::vector<std::shared_ptr<Session>> list() const;  // by id
    void abort_all();

private:
    mutable std::mutex mu_;
    std::map<std::string, std::shared_ptr<Session>> sessions_;
    std::uint64_t next_id_ = 0;
};

/// The HTTP API over a SessionRegistry.
class Server {
public:
    Server();
    ~Server();

    /// Port 0 picks a free port. Returns the bound port; throws on failure.
    int bind(const std::string& host, int port);
    /// Serves until stop(); call after bind().
    void listen();
    void stop();
    void wait_until_ready() const;

    SessionRegistry& registry() noexcept { return registry_; }

private:
    void install_routes();

    SessionRegistry registry_;
    std::unique_ptr<httplib::Server> http_;
};

/// "host:port", "host" or ":port" into its parts, keeping defaults for the missing half.
std::pair<std::string, int> parse_address(std::string_view text, std::string host = "127.0.0.1", int port = 8080);

}  // namespace logmine::service
