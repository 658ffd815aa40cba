#include "logmine/workflow.hpp"

#include <cctype>
#include <charconv>
#include <fstream>
#include <string>

namespace logmine {

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

std::pair<std::string_view, std::string_view> split_setting(std::string_view setting) {
    const auto eq = setting.find('=');
    if (eq == std::string_view::npos) throw ValidationError("expected key=value, got '" + std::string(setting) + "'");
    return {trim(setting.substr(0, eq)), trim(setting.substr(eq + 1))};
}

template <typename T>
T parse_number(std::string_view key, std::string_view text) {
    T value{};
    const auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc{} || end != text.data() + text.size())
        throw ValidationError("bad value '" + std::string(text) + "' for " + std::string(key));
    return value;
}

double parse_probability(std::string_view key, std::string_view text) {
    std::size_t used = 0;
    double p = 0.0;
    try {
        p = std::stod(std::string(text), &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used == 0 || used != text.size() || !(p >= 0.0 && p <= 1.0))
        throw ValidationError("knob " + std::string(key) + " needs a probability in [0, 1], got '" + std::string(text) + "'");
    return p;
}

}  // namespace

SyntheticSpec parse_generate(std::string_view text, std::uint64_t seed) {
    SyntheticSpec spec;
    spec.seed = seed;
    while (!text.empty()) {
        const auto comma = text.find(',');
        const auto item = trim(text.substr(0, comma));
        text = comma == std::string_view::npos ? std::string_view{} : text.substr(comma + 1);
        if (item.empty()) continue;
        const auto [key, value] = split_setting(item);
        if (key == "K" || key == "n_clusters")
            spec.n_clusters = parse_number<std::size_t>(key, value);
        else if (key == "logs_per_cluster")
            spec.logs_per_cluster = parse_number<std::size_t>(key, value);
        else if (key == "param_slots")
            spec.param_slots = parse_number<std::size_t>(key, value);
        else if (key == "min_words")
            spec.min_words = parse_number<std::size_t>(key, value);
        else if (key == "max_words")
            spec.max_words = parse_number<std::size_t>(key, value);
        else if (key == "shared_params")
            spec.shared_params = parse_number<int>(key, value) != 0;
        else if (key == "seed")
            spec.seed = parse_number<std::uint64_t>(key, value);
        else
            throw ValidationError("unknown generator setting '" + std::string(key) + "'");
    }
    if (spec.n_clusters == 0) throw ValidationError("generator needs K >= 1");
    if (spec.logs_per_cluster == 0) throw ValidationError("generator needs logs_per_cluster >= 1");
    if (spec.min_words == 0 || spec.min_words > spec.max_words || spec.max_words > 40)
        throw ValidationError("generator needs 1 <= min_words <= max_words <= 40");
    return spec;
}

void apply_knob(BaselineKnobs& knobs, std::string_view setting) {
    const auto [key, value] = split_setting(setting);
    if (key == "split_p")
        knobs.split_p = parse_probability(key, value);
    else if (key == "merge_p")
        knobs.merge_p = parse_probability(key, value);
    else if (key == "truncate_p")
        knobs.truncate_p = parse_probability(key, value);
    else
        throw ValidationError("unknown knob '" + std::string(key) + "'");
}

std::optional<std::size_t> parse_repeat(std::string_view text) {
    text = trim(text);
    if (text == "until-stable") return std::nullopt;
    return parse_number<std::size_t>("--repeat", text);
}

PreparedRun prepare_run(const RunSpec& spec) {
    PreparedRun run;
    if (spec.generate) {
        if (spec.logs || spec.truth) throw ValidationError("use either a generator or log/truth files, not both");
        Corpus corpus = generate_synthetic(*spec.generate);
        run.logs = std::move(corpus.logs);
        run.truth = std::move(corpus.truth);
    } else if (spec.logs) {
        if (spec.truth) {
            Corpus corpus = load_corpus(*spec.logs, *spec.truth);
            run.logs = std::move(corpus.logs);
            run.truth = std::move(corpus.truth);
        } else {
            std::ifstream in(*spec.logs);
            if (!in) throw ValidationError("cannot open '" + spec.logs->string() + "'");
            run.logs = read_raw_logs(in).logs;
        }
    } else {
        throw ValidationError("no corpus given: pass log files or a generator spec");
    }
    if (run.logs.size() == 0) throw ValidationError("the corpus holds no logs");

    if (spec.import_path) {
        run.base = import_clustering(*spec.import_path);
        if (run.base.n_logs != run.logs.size())
            throw ValidationError("imported clustering covers " + std::to_string(run.base.n_logs) +
                                  " logs but the corpus holds " + std::to_string(run.logs.size()));
    } else {
        run.base = baseline_parse(run.logs, spec.knobs);
    }
    return run;
}

RunOutcome refine(const PreparedRun& run, FeedbackProvider& fb, const PipelineOptions& options) {
    PipelineTrace trace;
    const FeedbackCounters before = fb.counters();
    RunOutcome out;
    out.refined = pipeline(run.base, run.logs, fb, options, &trace);

    RefinementReport& r = out.report;
    r.n_logs = run.logs.size();
    r.pairs_before = run.base.pairs.size();
    r.pairs_after = out.refined.pairs.size();
    r.counters = fb.counters().since(before);
    r.rounds = trace.rounds.size();
    if (run.truth) {
        const GroundTruth& gt = *run.truth;
        r.ga_before = group_accuracy(run.base, gt, options.exec);
        r.ma_before = message_accuracy(run.base, gt, options.exec);
        r.ga_after = group_accuracy(out.refined, gt, options.exec);
        r.ma_after = message_accuracy(out.refined, gt, options.exec);
        r.census_before = census(run.base.pairs, gt);
        r.census_after = census(out.refined.pairs, gt);
        if (!trace.rounds.empty())
            r.merge_stats = merge_complexity(trace.completed, gt, trace.rounds.front().merge_feedback);
    }
    return out;
}

}  // namespace logmine
