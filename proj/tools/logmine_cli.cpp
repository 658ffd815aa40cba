#include <csignal>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <thread>

#include <spdlog/spdlog.h>

#include "CLI11.hpp"

#include "logmine/corpus.hpp"
#include "logmine/metrics.hpp"
#include "logmine/service.hpp"
#include "logmine/workflow.hpp"

namespace fs = std::filesystem;
using namespace logmine;

namespace {

constexpr int kInputError = 2;

struct CorpusFlags {
    std::string logs;
    std::string truth;
    std::string import_path;
    std::string generate;
    std::vector<std::string> knobs;
    std::uint64_t seed = 0;

    void add_to(CLI::App& cmd) {
        cmd.add_option("--logs", logs, "raw log file, one log per line");
        cmd.add_option("--truth", truth, "ground-truth CSV (LineId,EventId,EventTemplate)");
        cmd.add_option("--import", import_path, "base clustering JSON; the built-in baseline parser otherwise");
        cmd.add_option("--generate", generate, "synthetic corpus, e.g. K=50,logs_per_cluster=40,param_slots=2");
        cmd.add_option("--knob", knobs, "baseline error knob k=v (split_p, merge_p, truncate_p); repeatable");
        cmd.add_option("--seed", seed, "seed for the generator and the knobs");
    }

    RunSpec spec(bool need_truth) const {
        RunSpec s;
        if (!generate.empty()) s.generate = parse_generate(generate, seed);
        if (!logs.empty()) s.logs = logs;
        if (!truth.empty()) s.truth = truth;
        if (!import_path.empty()) s.import_path = import_path;
        for (const auto& k : knobs) apply_knob(s.knobs, k);
        s.knobs.seed = seed;
        if (need_truth && !s.generate && !s.truth) throw ValidationError("--truth is required with --logs");
        for (const auto& p : {s.logs, s.truth, s.import_path})
            if (p && !fs::exists(*p)) throw ValidationError("no such file: '" + p->string() + "'");
        return s;
    }
};

void write_json(const fs::path& path, const nlohmann::json& doc) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ValidationError("cannot write '" + path.string() + "'");
    out << doc.dump(2) << '\n';
}

void print_scores(const RefinementReport& r) {
    std::printf("logs %zu  pairs %zu -> %zu  rounds %zu\n", r.n_logs, r.pairs_before, r.pairs_after, r.rounds);
    if (r.ga_before)
        std::printf("GA %.4f -> %.4f  MA %.4f -> %.4f\n", *r.ga_before, *r.ga_after, *r.ma_before, *r.ma_after);
    std::printf("feedback: message_loss %zu  select %zu  dummy_token %zu\n", r.counters.n_message_loss,
                r.counters.n_select, r.counters.n_dummy_token);
}

int cmd_run(const CorpusFlags& flags, const std::string& repeat, const std::string& out_dir, bool lossless, bool serial) {
    const PreparedRun run = prepare_run(flags.spec(true));
    Simulator sim(*run.truth);
    PipelineOptions options;
    options.n_repeat = parse_repeat(repeat);
    options.lossless_completion = lossless;
    options.exec = serial ? Execution::Serial : Execution::Parallel;
    const RunOutcome outcome = refine(run, sim, options);

    fs::create_directories(out_dir);
    write_json(fs::path(out_dir) / "report.json", to_json(outcome.report));
    write_json(fs::path(out_dir) / "clustering.json", clustering_to_json(outcome.refined));
    print_scores(outcome.report);
    return 0;
}

int cmd_evaluate(const CorpusFlags& flags, const std::string& out_dir) {
    const PreparedRun run = prepare_run(flags.spec(true));
    const EvaluationReport r = evaluate(run.base, *run.truth);
    std::printf("logs %zu  pairs %zu\nGA %.4f  MA %.4f\n", r.n_logs, r.n_pairs, r.ga, r.ma);
    std::printf("census: correct %zu  loss_pure %zu  complete_partial %zu  loss_mixed %zu  complete_mixed %zu\n",
                r.census.correct, r.census.loss_pure, r.census.complete_partial, r.census.loss_mixed,
                r.census.complete_mixed);
    if (!out_dir.empty()) {
        fs::create_directories(out_dir);
        write_json(fs::path(out_dir) / "evaluation.json", to_json(r));
    }
    return 0;
}

int cmd_generate(const std::string& generate, std::uint64_t seed, const std::string& out_dir,
                 const std::vector<std::string>& knobs) {
    const Corpus corpus = generate_synthetic(parse_generate(generate, seed));
    fs::create_directories(out_dir);
    write_raw_logs(fs::path(out_dir) / "logs.log", corpus.logs);
    write_ground_truth(fs::path(out_dir) / "truth.csv", corpus);
    BaselineKnobs k;
    for (const auto& knob : knobs) apply_knob(k, knob);
    k.seed = seed;
    export_clustering(baseline_parse(corpus.logs, k), fs::path(out_dir) / "baseline.json");
    std::printf("wrote %zu logs in %zu clusters to %s\n", corpus.logs.size(), corpus.truth.n_clusters(),
                out_dir.c_str());
    return 0;
}

int cmd_serve(const std::string& address) {
    const auto [host, port] = service::parse_address(address);

    sigset_t signals;
    sigemptyset(&signals);
    sigaddset(&signals, SIGINT);
    sigaddset(&signals, SIGTERM);
    pthread_sigmask(SIG_BLOCK, &signals, nullptr);

    service::Server server;
    int bound = 0;
    try {
        bound = server.bind(host, port);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kInputError;
    }
    std::thread waiter([&] {
        int sig = 0;
        sigwait(&signals, &sig);
        server.stop();
    });
    std::printf("listening on %s:%d\n", host.c_str(), bound);
    std::fflush(stdout);
    server.listen();
    // listen() also returns on its own if the socket fails; release the waiter then.
    pthread_kill(waiter.native_handle(), SIGTERM);
    waiter.join();
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Human-in-the-loop log template refinement"};
    app.require_subcommand(1);

    CorpusFlags flags;
    std::string repeat = "0";
    std::string out_dir = ".";
    bool lossless = false;
    bool serial = false;
    auto* run = app.add_subcommand("run", "refine a base clustering with the ground-truth simulator");
    flags.add_to(*run);
    run->add_option("--repeat", repeat, "extra merge/separation rounds, or until-stable")->capture_default_str();
    run->add_option("--out", out_dir, "directory for report.json and clustering.json")->capture_default_str();
    run->add_flag("--lossless-completion", lossless, "ask for dummy tokens during message completion");
    run->add_flag("--serial", serial, "use the serial kernels");

    CorpusFlags eval_flags;
    std::string eval_out;
    auto* eval = app.add_subcommand("evaluate", "score a clustering against ground truth");
    eval_flags.add_to(*eval);
    eval->add_option("--out", eval_out, "directory for evaluation.json");

    std::string gen_spec;
    std::uint64_t gen_seed = 0;
    std::string gen_out;
    std::vector<std::string> gen_knobs;
    auto* gen = app.add_subcommand("generate", "write a synthetic corpus with ground truth and a baseline clustering");
    gen->add_option("--generate", gen_spec, "generator settings, e.g. K=50,logs_per_cluster=40")->required();
    gen->add_option("--seed", gen_seed, "generator seed");
    gen->add_option("--knob", gen_knobs, "baseline error knob k=v; repeatable");
    gen->add_option("--out", gen_out, "output directory")->required();

    std::string address = "127.0.0.1:8080";
    auto* serve = app.add_subcommand("serve", "serve the interactive session API");
    serve->add_option("--serve-addr", address, "host:port to bind")->envname("LOGMINE_SERVE_ADDR")->capture_default_str();

    CLI11_PARSE(app, argc, argv);

    try {
        if (*run) return cmd_run(flags, repeat, out_dir, lossless, serial);
        if (*eval) return cmd_evaluate(eval_flags, eval_out);
        if (*gen) return cmd_generate(gen_spec, gen_seed, gen_out, gen_knobs);
        if (*serve) return cmd_serve(address);
    } catch (const ValidationError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kInputError;
    } catch (const std::invalid_argument& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kInputError;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
