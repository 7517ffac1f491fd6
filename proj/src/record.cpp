#include "cocoa/record.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "cocoa/error.hpp"

namespace cocoa {

using nlohmann::json;

bool Sequence::has_entropies() const {
    for (const auto& t : tokens)
        if (!t.dist_entropy) return false;
    return true;
}

std::string join_tokens(const Sequence& seq, std::optional<std::size_t> skip) {
    std::string out;
    for (std::size_t i = 0; i < seq.tokens.size(); ++i) {
        if (skip && *skip == i) continue;
        out += seq.tokens[i].text;
    }
    return out;
}

Matrix Matrix::identity(std::size_t n) {
    Matrix m(n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
}

double Matrix::trace() const {
    double t = 0.0;
    for (std::size_t i = 0; i < n_; ++i) t += (*this)(i, i);
    return t;
}

std::string_view to_string(TargetStrategy s) {
    switch (s) {
    case TargetStrategy::greedy: return "greedy";
    case TargetStrategy::random: return "random";
    case TargetStrategy::best: return "best";
    case TargetStrategy::best_normalized: return "best_normalized";
    }
    return "?";
}

TargetStrategy parse_strategy(std::string_view name) {
    if (name == "greedy") return TargetStrategy::greedy;
    if (name == "random") return TargetStrategy::random;
    if (name == "best") return TargetStrategy::best;
    if (name == "best_normalized") return TargetStrategy::best_normalized;
    throw ConfigError("unknown target strategy '" + std::string(name) + "'");
}

double seq_log_prob(const Sequence& seq) {
    double s = 0.0;
    for (const auto& t : seq.tokens) s += t.log_prob;
    return s;
}

TargetRef select_target(const GenerationRecord& record, TargetStrategy strategy) {
    switch (strategy) {
    case TargetStrategy::greedy:
        if (!record.greedy)
            throw DataError("record '" + record.record_id + "': greedy target requested but no greedy sequence");
        return {&*record.greedy, std::nullopt};
    case TargetStrategy::random:
        return {&record.samples.front(), 0};
    case TargetStrategy::best:
    case TargetStrategy::best_normalized: {
        const bool normalize = strategy == TargetStrategy::best_normalized;
        std::size_t best = 0;
        double best_score = 0.0;
        for (std::size_t i = 0; i < record.samples.size(); ++i) {
            const auto& s = record.samples[i];
            double score = seq_log_prob(s);
            if (normalize) score /= static_cast<double>(s.length());
            // strict '>' keeps the lowest index on ties
            if (i == 0 || score > best_score) {
                best = i;
                best_score = score;
            }
        }
        return {&record.samples[best], best};
    }
    }
    throw DataError("unreachable target strategy");
}

namespace {

[[noreturn]] void fail(const std::string& record_id, const std::string& what) {
    throw DataError("record '" + record_id + "': " + what);
}

double finite_number(const json& v, const std::string& record_id, const std::string& field) {
    if (!v.is_number()) fail(record_id, field + " must be a number");
    double x = v.get<double>();
    if (!std::isfinite(x)) fail(record_id, field + " must be finite");
    return x;
}

Sequence sequence_from_json(const json& j, const std::string& record_id, const std::string& field) {
    if (!j.is_object()) fail(record_id, field + " must be an object");
    auto it = j.find("tokens");
    if (it == j.end() || !it->is_array()) fail(record_id, field + ".tokens missing");
    if (it->empty()) fail(record_id, field + ".tokens must be non-empty");
    Sequence seq;
    seq.tokens.reserve(it->size());
    for (std::size_t k = 0; k < it->size(); ++k) {
        const auto& tj = (*it)[k];
        const std::string tf = field + ".tokens[" + std::to_string(k) + "]";
        if (!tj.is_object()) fail(record_id, tf + " must be an object");
        TokenObservation tok;
        if (auto t = tj.find("text"); t != tj.end()) {
            if (!t->is_string()) fail(record_id, tf + ".text must be a string");
            tok.text = t->get<std::string>();
        } else {
            fail(record_id, tf + ".text missing");
        }
        auto lp = tj.find("log_prob");
        if (lp == tj.end()) fail(record_id, tf + ".log_prob missing");
        tok.log_prob = finite_number(*lp, record_id, tf + ".log_prob");
        if (tok.log_prob > 0.0) fail(record_id, tf + ".log_prob must be <= 0");
        if (auto e = tj.find("dist_entropy"); e != tj.end() && !e->is_null()) {
            double h = finite_number(*e, record_id, tf + ".dist_entropy");
            if (h < 0.0) fail(record_id, tf + ".dist_entropy must be >= 0");
            tok.dist_entropy = h;
        }
        seq.tokens.push_back(std::move(tok));
    }
    if (auto t = j.find("text"); t != j.end() && !t->is_null()) {
        if (!t->is_string()) fail(record_id, field + ".text must be a string");
        seq.text = t->get<std::string>();
    } else {
        seq.text = join_tokens(seq);
    }
    return seq;
}

} // namespace

GenerationRecord record_from_json(const json& j) {
    if (!j.is_object()) throw DataError("record must be a JSON object");
    GenerationRecord r;
    auto id = j.find("record_id");
    if (id == j.end() || !id->is_string()) throw DataError("record_id missing or not a string");
    r.record_id = id->get<std::string>();

    if (auto in = j.find("input_text"); in != j.end() && in->is_string())
        r.input_text = in->get<std::string>();
    else
        fail(r.record_id, "input_text missing or not a string");

    auto samples = j.find("samples");
    if (samples == j.end() || !samples->is_array() || samples->empty())
        fail(r.record_id, "samples must be a non-empty array");
    for (std::size_t i = 0; i < samples->size(); ++i)
        r.samples.push_back(sequence_from_json((*samples)[i], r.record_id, "samples[" + std::to_string(i) + "]"));

    if (auto g = j.find("greedy"); g != j.end() && !g->is_null())
        r.greedy = sequence_from_json(*g, r.record_id, "greedy");

    if (auto q = j.find("quality"); q != j.end() && !q->is_null()) {
        if (!q->is_object()) fail(r.record_id, "quality must be an object");
        for (const auto& [name, v] : q->items()) {
            double x = finite_number(v, r.record_id, "quality." + name);
            if (x < 0.0 || x > 1.0) fail(r.record_id, "quality." + name + " must lie in [0,1]");
            r.quality[name] = x;
        }
    }

    if (auto ps = j.find("precomputed_sim"); ps != j.end() && !ps->is_null()) {
        if (!ps->is_object()) fail(r.record_id, "precomputed_sim must be an object");
        const std::size_t n = r.samples.size() + r.sample_offset();
        for (const auto& [name, rows] : ps->items()) {
            const std::string f = "precomputed_sim." + name;
            if (!rows.is_array() || rows.size() != n)
                fail(r.record_id, f + " must be a " + std::to_string(n) + "x" + std::to_string(n) + " matrix");
            Matrix m(n);
            for (std::size_t a = 0; a < n; ++a) {
                if (!rows[a].is_array() || rows[a].size() != n)
                    fail(r.record_id, f + " row " + std::to_string(a) + " has wrong length");
                for (std::size_t b = 0; b < n; ++b) {
                    double x = finite_number(rows[a][b], r.record_id, f);
                    if (x < 0.0 || x > 1.0) fail(r.record_id, f + " entries must lie in [0,1]");
                    m(a, b) = x;
                }
            }
            r.precomputed_sim.emplace(name, std::move(m));
        }
    }
    return r;
}

json sequence_to_json(const Sequence& seq) {
    json tokens = json::array();
    for (const auto& t : seq.tokens) {
        json tj{{"text", t.text}, {"log_prob", t.log_prob}};
        tj["dist_entropy"] = t.dist_entropy ? json(*t.dist_entropy) : json(nullptr);
        tokens.push_back(std::move(tj));
    }
    return json{{"tokens", std::move(tokens)}, {"text", seq.text}};
}

json record_to_json(const GenerationRecord& r) {
    json j;
    j["record_id"] = r.record_id;
    j["input_text"] = r.input_text;
    j["greedy"] = r.greedy ? sequence_to_json(*r.greedy) : json(nullptr);
    json samples = json::array();
    for (const auto& s : r.samples) samples.push_back(sequence_to_json(s));
    j["samples"] = std::move(samples);
    j["quality"] = json::object();
    for (const auto& [k, v] : r.quality) j["quality"][k] = v;
    if (r.precomputed_sim.empty()) {
        j["precomputed_sim"] = nullptr;
    } else {
        json blocks = json::object();
        for (const auto& [name, m] : r.precomputed_sim) {
            json rows = json::array();
            for (std::size_t a = 0; a < m.size(); ++a) {
                json row = json::array();
                for (std::size_t b = 0; b < m.size(); ++b) row.push_back(m(a, b));
                rows.push_back(std::move(row));
            }
            blocks[name] = std::move(rows);
        }
        j["precomputed_sim"] = std::move(blocks);
    }
    return j;
}

RecordReader::RecordReader(const std::filesystem::path& path)
    : path_(path), in_(std::make_unique<std::ifstream>(path)) {
    if (!*in_) throw DataError("cannot open records file '" + path.string() + "'");
}

RecordReader::~RecordReader() = default;

std::optional<GenerationRecord> RecordReader::next() {
    std::string line;
    while (std::getline(*in_, line)) {
        ++line_no_;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        const std::string where = path_.string() + ":" + std::to_string(line_no_) + ": ";
        json j;
        try {
            j = json::parse(line);
        } catch (const json::parse_error& e) {
            throw DataError(where + "malformed JSON: " + e.what());
        }
        GenerationRecord r;
        try {
            r = record_from_json(j);
        } catch (const DataError& e) {
            throw DataError(where + e.what());
        }
        auto [it, inserted] = seen_.emplace(r.record_id, line_no_);
        if (!inserted)
            throw DataError(where + "duplicate record_id '" + r.record_id + "' (first seen on line " +
                            std::to_string(it->second) + ")");
        return r;
    }
    return std::nullopt;
}

std::vector<GenerationRecord> load_records(const std::filesystem::path& path) {
    RecordReader reader(path);
    std::vector<GenerationRecord> out;
    while (auto r = reader.next()) out.push_back(std::move(*r));
    return out;
}

void write_records(const std::filesystem::path& path, const std::vector<GenerationRecord>& records) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write '" + path.string() + "'");
    for (const auto& r : records) out << record_to_json(r).dump() << '\n';
}

} // namespace cocoa
