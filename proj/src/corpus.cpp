#include "logmine/corpus.hpp"

#include <algorithm>
#include <array>
#include <fstream>
#include <map>
#include <numeric>
#include <random>
#include <sstream>
#include <limits>
#include <unordered_map>

#include <spdlog/spdlog.h>

namespace logmine {

namespace {

std::ifstream open_in(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open '" + path.string() + "'");
    return in;
}

std::ofstream open_out(const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ValidationError("cannot write '" + path.string() + "'");
    return out;
}

void strip_cr(std::string& line) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
}

bool blank(std::string_view s) {
    return std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isspace(c) != 0; });
}

// One CSV record; quoted fields may hold commas, doubled quotes, and newlines.
bool read_csv_record(std::istream& in, std::vector<std::string>& fields, std::size_t& line_no) {
    fields.clear();
    std::string line;
    if (!std::getline(in, line)) return false;
    ++line_no;
    std::string field;
    bool quoted = false;
    for (std::size_t i = 0;; ++i) {
        if (i == line.size()) {
            if (quoted) {
                if (!std::getline(in, line)) throw ValidationError("unterminated quoted field at line " + std::to_string(line_no));
                ++line_no;
                field.push_back('\n');
                i = static_cast<std::size_t>(-1);
                continue;
            }
            strip_cr(field);
            fields.push_back(std::move(field));
            return true;
        }
        const char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    field.push_back('"');
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                field.push_back(c);
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            fields.push_back(std::move(field));
            field.clear();
        } else {
            field.push_back(c);
        }
    }
}

std::string csv_quote(std::string_view s) {
    if (s.find_first_of(",\"\n") == std::string_view::npos) return std::string(s);
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out.push_back('"');
        out.push_back(c);
    }
    out.push_back('"');
    return out;
}

// Tokens shared by every member at the same position.
TokenSeq positional_template(const LogStore& logs, std::span<const LogIndex> members) {
    std::size_t width = logs[members.front()].size();
    for (LogIndex n : members) width = std::min(width, logs[n].size());
    TokenSeq out;
    const TokenSeq& first = logs[members.front()];
    for (std::size_t p = 0; p < width; ++p) {
        const Token t = first[p];
        if (std::all_of(members.begin(), members.end(), [&](LogIndex n) { return logs[n][p] == t; })) out.push_back(t);
    }
    return out;
}

constexpr std::array<std::string_view, 48> kWordPool = {
    "failed",   "password", "from",    "port",     "user",    "session", "opened",  "closed",
    "connection", "error",  "request", "received", "sent",    "to",      "for",     "on",
    "block",    "packet",   "node",    "job",      "task",    "started", "finished", "state",
    "changed",  "timeout",  "retry",   "cache",    "miss",    "disk",    "write",   "read",
    "socket",   "bound",    "listening", "accepted", "denied", "invalid", "token",  "expired",
    "worker",   "thread",   "queue",   "full",     "memory",  "usage",   "service", "ready"};

}  // namespace

RawLogFile read_raw_logs(std::istream& in) {
    RawLogFile out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        strip_cr(line);
        if (blank(line)) continue;
        try {
            out.logs.logs.push_back(tokenize(line));
        } catch (const ValidationError& e) {
            throw ValidationError("line " + std::to_string(line_no) + ": " + e.what());
        }
        out.logs.raw_lines.push_back(line);
        out.line_numbers.push_back(line_no);
    }
    return out;
}

GroundTruth parse_ground_truth(std::istream& in, const RawLogFile& raw) {
    std::vector<std::string> fields;
    std::size_t line_no = 0;
    if (!read_csv_record(in, fields, line_no)) throw ValidationError("ground-truth file is empty");
    auto column = [&](std::string_view name) {
        for (std::size_t i = 0; i < fields.size(); ++i) {
            std::string_view f = fields[i];
            if (f.size() >= 3 && static_cast<unsigned char>(f[0]) == 0xEF) f.remove_prefix(3);  // UTF-8 BOM
            if (f == name) return i;
        }
        throw ValidationError("ground-truth header lacks column '" + std::string(name) + "'");
    };
    const std::size_t c_line = column("LineId");
    const std::size_t c_event = column("EventId");
    const std::size_t c_tmpl = column("EventTemplate");
    const std::size_t needed = std::max({c_line, c_event, c_tmpl}) + 1;

    std::unordered_map<std::size_t, std::size_t> slot_of_line;  // raw line number -> store index
    for (std::size_t i = 0; i < raw.line_numbers.size(); ++i) slot_of_line.emplace(raw.line_numbers[i], i);

    constexpr std::uint32_t kUnset = std::numeric_limits<std::uint32_t>::max();
    std::vector<std::uint32_t> cluster_of(raw.logs.size(), kUnset);
    std::unordered_map<std::string, std::uint32_t> cluster_of_event;
    std::vector<TokenSeq> templates;
    std::size_t rows = 0;

    while (read_csv_record(in, fields, line_no)) {
        if (fields.size() == 1 && blank(fields[0])) continue;
        if (fields.size() < needed)
            throw ValidationError("ground-truth line " + std::to_string(line_no) + ": expected at least " +
                                  std::to_string(needed) + " fields, got " + std::to_string(fields.size()));
        ++rows;
        std::size_t line_id = 0;
        try {
            std::size_t used = 0;
            line_id = std::stoul(fields[c_line], &used);
            if (used != fields[c_line].size()) throw std::invalid_argument("trailing");
        } catch (const std::exception&) {
            throw ValidationError("ground-truth line " + std::to_string(line_no) + ": bad LineId '" + fields[c_line] + "'");
        }
        auto slot = slot_of_line.find(line_id);
        if (slot == slot_of_line.end()) {
            if (line_id >= 1 && line_id <= (raw.line_numbers.empty() ? 0 : raw.line_numbers.back())) continue;  // blank raw line
            throw ValidationError("ground-truth LineId " + std::to_string(line_id) + " has no log line");
        }
        if (cluster_of[slot->second] != kUnset)
            throw ValidationError("ground-truth LineId " + std::to_string(line_id) + " appears twice");

        auto [it, fresh] = cluster_of_event.try_emplace(fields[c_event], static_cast<std::uint32_t>(templates.size()));
        if (fresh) {
            templates.push_back(tokenize_template(fields[c_tmpl]));
        } else if (tokenize_template(fields[c_tmpl]) != templates[it->second]) {
            spdlog::warn("event {} has differing templates; keeping the first", fields[c_event]);
        }
        cluster_of[slot->second] = it->second;
    }
    if (rows == 0) throw ValidationError("ground-truth file has no rows");
    for (std::size_t i = 0; i < cluster_of.size(); ++i)
        if (cluster_of[i] == kUnset)
            throw ValidationError("row-count mismatch: log line " + std::to_string(raw.line_numbers[i]) +
                                  " has no ground-truth row");

    GroundTruth gt(std::move(cluster_of), std::move(templates));
    if (auto nested = gt.nested_templates(); !nested.empty())
        spdlog::warn("{} ground-truth template pairs nest (first: {} inside {})", nested.size(), nested.front().first,
                     nested.front().second);
    if (auto bad = gt.non_embedding_logs(raw.logs); !bad.empty())
        spdlog::warn("{} logs do not contain their ground-truth template (first: line {})", bad.size(),
                     raw.line_numbers[bad.front()]);
    return gt;
}

Corpus load_corpus(const std::filesystem::path& raw_log_path, const std::filesystem::path& ground_truth_path) {
    auto raw_in = open_in(raw_log_path);
    RawLogFile raw = read_raw_logs(raw_in);
    auto gt_in = open_in(ground_truth_path);
    GroundTruth gt = parse_ground_truth(gt_in, raw);
    return {std::move(raw.logs), std::move(gt)};
}

void write_raw_logs(const std::filesystem::path& path, const LogStore& logs) {
    auto out = open_out(path);
    for (std::size_t n = 0; n < logs.size(); ++n)
        out << (n < logs.raw_lines.size() ? logs.raw_lines[n] : join(logs.logs[n])) << '\n';
}

void write_ground_truth(const std::filesystem::path& path, const Corpus& corpus) {
    const auto& gt = corpus.truth;
    std::vector<std::string> rendered(gt.n_clusters());
    for (std::uint32_t k = 0; k < gt.n_clusters(); ++k) {
        std::vector<TokenSeq> samples;
        for (LogIndex n : gt.members(k)) samples.push_back(corpus.logs[n]);
        rendered[k] = render_template(gt.template_of(k), samples);
    }
    auto out = open_out(path);
    out << "LineId,EventId,EventTemplate\n";
    for (LogIndex n = 0; n < gt.n_logs(); ++n) {
        const auto k = gt.cluster_of(n);
        out << n + 1 << ",E" << k + 1 << ',' << csv_quote(rendered[k]) << '\n';
    }
}

MinedClustering baseline_parse(const LogStore& logs, const BaselineKnobs& knobs) {
    if (logs.size() == 0) throw ValidationError("cannot parse an empty log store");
    std::vector<std::vector<LogIndex>> buckets;
    std::map<std::pair<std::size_t, TokenId>, std::size_t> bucket_of;
    constexpr TokenId kEmptyLine = std::numeric_limits<TokenId>::max();
    for (LogIndex n = 0; n < logs.size(); ++n) {
        const TokenSeq& log = logs[n];
        const auto key = std::make_pair(log.size(), log.empty() ? kEmptyLine : log.front().id());
        auto [it, fresh] = bucket_of.try_emplace(key, buckets.size());
        if (fresh) buckets.emplace_back();
        buckets[it->second].push_back(n);
    }

    std::mt19937_64 rng(knobs.seed);
    std::uniform_real_distribution<double> coin(0.0, 1.0);

    if (knobs.split_p > 0) {
        std::vector<std::vector<LogIndex>> split;
        for (auto& bucket : buckets) {
            if (bucket.size() >= 2 && coin(rng) < knobs.split_p) {
                std::shuffle(bucket.begin(), bucket.end(), rng);
                const auto cut = std::uniform_int_distribution<std::size_t>(1, bucket.size() - 1)(rng);
                std::vector<LogIndex> left(bucket.begin(), bucket.begin() + static_cast<std::ptrdiff_t>(cut));
                std::vector<LogIndex> right(bucket.begin() + static_cast<std::ptrdiff_t>(cut), bucket.end());
                std::sort(left.begin(), left.end());
                std::sort(right.begin(), right.end());
                split.push_back(std::move(left));
                split.push_back(std::move(right));
            } else {
                split.push_back(std::move(bucket));
            }
        }
        buckets = std::move(split);
    }

    if (knobs.merge_p > 0) {
        std::vector<std::vector<LogIndex>> merged;
        for (std::size_t i = 0; i < buckets.size(); ++i) {
            if (i + 1 < buckets.size() && coin(rng) < knobs.merge_p) {
                auto both = std::move(buckets[i]);
                both.insert(both.end(), buckets[i + 1].begin(), buckets[i + 1].end());
                std::sort(both.begin(), both.end());
                merged.push_back(std::move(both));
                ++i;
            } else {
                merged.push_back(std::move(buckets[i]));
            }
        }
        buckets = std::move(merged);
    }

    MinedClustering mc{{}, logs.size()};
    for (auto& bucket : buckets) {
        TokenSeq tmpl = positional_template(logs, bucket);
        if (knobs.truncate_p > 0 && coin(rng) < knobs.truncate_p && !tmpl.empty()) tmpl.pop_back();
        mc.pairs.push_back({std::move(bucket), std::move(tmpl)});
    }
    return mc;
}

nlohmann::json clustering_to_json(const MinedClustering& mc) {
    nlohmann::json clusters = nlohmann::json::array();
    for (const auto& pair : mc.pairs) {
        nlohmann::json tokens = nlohmann::json::array();
        for (Token t : pair.tmpl) tokens.push_back(std::string(t.text()));
        clusters.push_back({{"template", std::move(tokens)}, {"members", pair.members}});
    }
    return {{"n_logs", mc.n_logs}, {"clusters", std::move(clusters)}};
}

MinedClustering clustering_from_json(const nlohmann::json& doc) {
    MinedClustering mc;
    try {
        mc.n_logs = doc.at("n_logs").get<std::size_t>();
        for (const auto& c : doc.at("clusters")) {
            ClusterTemplatePair pair;
            for (const auto& t : c.at("template")) {
                const auto text = t.get<std::string>();
                if (text.find(kWildcard) != std::string::npos) continue;
                try {
                    pair.tmpl.emplace_back(text);
                } catch (const std::invalid_argument& e) {
                    throw ValidationError(std::string("bad template token: ") + e.what());
                }
            }
            pair.members = c.at("members").get<std::vector<LogIndex>>();
            std::sort(pair.members.begin(), pair.members.end());
            mc.pairs.push_back(std::move(pair));
        }
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("malformed clustering document: ") + e.what());
    }
    mc.validate();
    return mc;
}

MinedClustering import_clustering(const std::filesystem::path& path) {
    auto in = open_in(path);
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError("'" + path.string() + "' is not valid JSON: " + e.what());
    }
    return clustering_from_json(doc);
}

void export_clustering(const MinedClustering& mc, const std::filesystem::path& path) {
    auto out = open_out(path);
    out << clustering_to_json(mc).dump(2) << '\n';
}

MinedClustering ground_truth_clustering(const GroundTruth& gt) {
    MinedClustering mc{{}, gt.n_logs()};
    for (std::uint32_t k = 0; k < gt.n_clusters(); ++k)
        if (!gt.members(k).empty()) mc.pairs.push_back({gt.members(k), gt.template_of(k)});
    return mc;
}

Corpus generate_synthetic(const SyntheticSpec& spec) {
    if (spec.n_clusters == 0) throw std::invalid_argument("synthetic corpus needs at least one cluster");
    if (spec.min_words > spec.max_words || spec.max_words > kWordPool.size())
        throw std::invalid_argument("bad template word range");
    std::mt19937_64 rng(spec.seed);

    std::vector<TokenSeq> templates(spec.n_clusters);
    std::vector<std::string_view> pool(kWordPool.begin(), kWordPool.end());
    for (std::size_t k = 0; k < spec.n_clusters; ++k) {
        std::shuffle(pool.begin(), pool.end(), rng);
        const auto n_words = std::uniform_int_distribution<std::size_t>(spec.min_words, spec.max_words)(rng);
        TokenSeq& t = templates[k];
        for (std::size_t w = 0; w < n_words; ++w) t.emplace_back(pool[w]);
        const auto at = std::uniform_int_distribution<std::size_t>(0, t.size())(rng);
        t.insert(t.begin() + static_cast<std::ptrdiff_t>(at), Token("evt" + std::to_string(k)));
    }

    const std::size_t n_logs = spec.n_clusters * spec.logs_per_cluster;
    std::vector<std::uint32_t> owner(n_logs);
    for (std::size_t i = 0; i < n_logs; ++i) owner[i] = static_cast<std::uint32_t>(i % spec.n_clusters);
    if (spec.shuffle) std::shuffle(owner.begin(), owner.end(), rng);

    auto param = [](std::size_t value) { return Token(std::to_string(value)); };
    std::vector<std::size_t> next_param(spec.n_clusters, 0);
    LogStore logs;
    logs.logs.reserve(n_logs);
    logs.raw_lines.reserve(n_logs);
    for (std::size_t i = 0; i < n_logs; ++i) {
        const auto k = owner[i];
        TokenSeq log = templates[k];
        for (std::size_t s = 0; s < spec.param_slots; ++s) {
            const std::size_t value = spec.shared_params ? s : next_param[k]++;
            const auto at = std::uniform_int_distribution<std::size_t>(0, log.size())(rng);
            log.insert(log.begin() + static_cast<std::ptrdiff_t>(at), param(value));
        }
        logs.raw_lines.push_back(join(log));
        logs.logs.push_back(std::move(log));
    }
    return {std::move(logs), GroundTruth(std::move(owner), std::move(templates))};
}

}  // namespace logmine
