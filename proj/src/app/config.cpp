#include "cocoa/app/config.hpp"

#include <set>
#include <thread>

#include <toml.hpp>

#include "cocoa/error.hpp"
#include "cocoa/provider.hpp"

namespace cocoa::app {

namespace {

const std::vector<std::string> kKeys{
    "records",   "estimators",     "strategy",   "backend",      "relevance_backend", "endpoint",
    "temperature", "max_rejection", "output",     "scores",       "report",            "curves",
    "cache",     "workers",        "batch_size", "retries",      "backoff_ms",        "max_in_flight",
    "backends",  "strategies",     "seed",       "n_records",    "samples",           "vocab",
    "overlap",   "rho",            "quality_model", "confident_rate", "greedy",        "groups",
    "datasets",
};
const std::set<std::string> kTopLevelKeys(kKeys.begin(), kKeys.end());

std::size_t parse_count(const std::string& key, const std::string& v) {
    try {
        std::size_t pos = 0;
        long long x = std::stoll(v, &pos);
        if (pos != v.size() || x < 0) throw std::invalid_argument(v);
        return static_cast<std::size_t>(x);
    } catch (const std::exception&) {
        throw ConfigError("option --" + key + ": expected a non-negative integer, got '" + v + "'");
    }
}

double parse_real(const std::string& key, const std::string& v) {
    try {
        std::size_t pos = 0;
        double x = std::stod(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return x;
    } catch (const std::exception&) {
        throw ConfigError("option --" + key + ": expected a number, got '" + v + "'");
    }
}

[[noreturn]] void bad(const std::string& key, const std::string& what) {
    throw ConfigError("config key '" + key + "': " + what);
}

std::string get_string(const toml::node& node, const std::string& key) {
    auto v = node.value<std::string>();
    if (!v) bad(key, "expected a string");
    return *v;
}

double get_double(const toml::node& node, const std::string& key) {
    auto v = node.value<double>();
    if (!v) bad(key, "expected a number");
    return *v;
}

std::int64_t get_int(const toml::node& node, const std::string& key) {
    auto v = node.value<std::int64_t>();
    if (!v) bad(key, "expected an integer");
    return *v;
}

std::size_t get_count(const toml::node& node, const std::string& key) {
    auto v = get_int(node, key);
    if (v < 0) bad(key, "must be non-negative");
    return static_cast<std::size_t>(v);
}

std::vector<std::string> get_strings(const toml::node& node, const std::string& key) {
    if (auto s = node.value<std::string>()) return split_list(*s);
    const auto* arr = node.as_array();
    if (!arr) bad(key, "expected an array of strings");
    std::vector<std::string> out;
    for (const auto& el : *arr) out.push_back(get_string(el, key));
    return out;
}

} // namespace

std::vector<std::string> split_list(const std::string& csv) {
    std::vector<std::string> out;
    std::string cur;
    auto flush = [&] {
        auto lo = cur.find_first_not_of(" \t");
        auto hi = cur.find_last_not_of(" \t");
        if (lo != std::string::npos) out.push_back(cur.substr(lo, hi - lo + 1));
        cur.clear();
    };
    for (char c : csv) {
        if (c == ',') flush();
        else cur.push_back(c);
    }
    flush();
    return out;
}

const std::vector<std::string>& config_keys() { return kKeys; }

void apply_override(RunConfig& c, const std::string& key, const std::string& v) {
    if (!kTopLevelKeys.contains(key)) throw ConfigError("unknown option --" + key);
    if (key == "records") c.records = v;
    else if (key == "estimators") {
        c.estimators.clear();
        for (const auto& n : split_list(v)) c.estimators.push_back(parse_estimator(n));
    } else if (key == "strategy") c.strategy = parse_strategy(v);
    else if (key == "backend") c.backend = SimilarityBackend::parse(v);
    else if (key == "relevance_backend") c.relevance_backend = SimilarityBackend::parse(v);
    else if (key == "endpoint") c.endpoint = v;
    else if (key == "temperature") c.temperature = parse_real(key, v);
    else if (key == "max_rejection") c.max_rejection = parse_real(key, v);
    else if (key == "output") c.output = v;
    else if (key == "scores") c.scores = v;
    else if (key == "report") c.report = v;
    else if (key == "curves") c.curves = v;
    else if (key == "cache") c.cache = v;
    else if (key == "workers") c.workers = parse_count(key, v);
    else if (key == "batch_size") c.batch_size = parse_count(key, v);
    else if (key == "retries") c.retries = static_cast<int>(parse_count(key, v));
    else if (key == "backoff_ms") c.backoff_ms = static_cast<int>(parse_count(key, v));
    else if (key == "max_in_flight") c.max_in_flight = parse_count(key, v);
    else if (key == "backends") {
        c.backends.clear();
        for (const auto& n : split_list(v)) c.backends.push_back(SimilarityBackend::parse(n));
    } else if (key == "strategies") {
        c.strategies.clear();
        for (const auto& n : split_list(v)) c.strategies.push_back(parse_strategy(n));
    } else if (key == "seed") c.synth.seed = parse_count(key, v);
    else if (key == "n_records") c.synth.n_records = parse_count(key, v);
    else if (key == "samples") c.synth.samples = parse_count(key, v);
    else if (key == "vocab") c.synth.vocab = parse_count(key, v);
    else if (key == "overlap") c.synth.overlap = parse_real(key, v);
    else if (key == "rho") c.synth.rho = parse_real(key, v);
    else if (key == "quality_model") c.synth.quality_model = v;
    else if (key == "confident_rate") c.synth.confident_rate = parse_real(key, v);
    else if (key == "greedy") {
        if (v == "true" || v == "1") c.synth.greedy = true;
        else if (v == "false" || v == "0") c.synth.greedy = false;
        else throw ConfigError("option --greedy: expected true or false");
    } else if (key == "groups" || key == "datasets") {
        auto eq = v.find('=');
        if (eq == std::string::npos || eq == 0) throw ConfigError("option --" + key + ": expected name=...");
        const std::string name = v.substr(0, eq), rest = v.substr(eq + 1);
        if (key == "groups") {
            c.groups[name] = split_list(rest);
        } else {
            DatasetSpec d{name, rest, {}};
            if (auto colon = rest.find(':'); colon != std::string::npos) {
                d.records = rest.substr(0, colon);
                d.scores = rest.substr(colon + 1);
            }
            c.datasets.push_back(std::move(d));
        }
    }
}

ScoringConfig RunConfig::scoring() const {
    return ScoringConfig{backend, relevance_backend, temperature};
}

std::vector<DatasetSpec> RunConfig::resolved_datasets() const {
    if (!datasets.empty()) return datasets;
    return {DatasetSpec{"default", records, scores}};
}

void RunConfig::validate() const {
    if (!(max_rejection > 0.0 && max_rejection <= 1.0)) throw ConfigError("max_rejection must lie in (0, 1]");
    if (!(temperature > 0.0)) throw ConfigError("temperature must be positive");
    if (workers == 0) throw ConfigError("workers must be at least 1");
    if (batch_size == 0) throw ConfigError("batch_size must be positive");
    if (retries < 1) throw ConfigError("retries must be at least 1");
    if (max_in_flight == 0) throw ConfigError("max_in_flight must be positive");
    if (relevance_backend && !relevance_backend->is_lexical() && !relevance_backend->is_remote())
        throw ConfigError("relevance_backend must be a text backend");
    std::set<std::string> names;
    for (const auto& d : datasets)
        if (!names.insert(d.name).second) throw ConfigError("dataset '" + d.name + "' declared twice");
}

RunConfig default_config() {
    RunConfig c;
    c.endpoint = default_endpoint();
    c.workers = std::max(1u, std::thread::hardware_concurrency());
    return c;
}

void load_toml(const std::filesystem::path& path, RunConfig& c) {
    toml::table tbl;
    try {
        tbl = toml::parse_file(path.string());
    } catch (const toml::parse_error& e) {
        throw ConfigError("cannot parse config '" + path.string() + "': " + std::string(e.description()));
    }
    for (const auto& [k, node] : tbl) {
        const std::string key(k.str());
        if (!kTopLevelKeys.contains(key)) bad(key, "unknown key");

        if (key == "records") c.records = get_string(node, key);
        else if (key == "estimators") {
            c.estimators.clear();
            for (const auto& n : get_strings(node, key)) c.estimators.push_back(parse_estimator(n));
        } else if (key == "strategy") c.strategy = parse_strategy(get_string(node, key));
        else if (key == "backend") c.backend = SimilarityBackend::parse(get_string(node, key));
        else if (key == "relevance_backend") c.relevance_backend = SimilarityBackend::parse(get_string(node, key));
        else if (key == "endpoint") c.endpoint = get_string(node, key);
        else if (key == "temperature") c.temperature = get_double(node, key);
        else if (key == "max_rejection") c.max_rejection = get_double(node, key);
        else if (key == "output") c.output = get_string(node, key);
        else if (key == "scores") c.scores = get_string(node, key);
        else if (key == "report") c.report = get_string(node, key);
        else if (key == "curves") c.curves = get_string(node, key);
        else if (key == "cache") c.cache = get_string(node, key);
        else if (key == "workers") c.workers = get_count(node, key);
        else if (key == "batch_size") c.batch_size = get_count(node, key);
        else if (key == "retries") c.retries = static_cast<int>(get_int(node, key));
        else if (key == "backoff_ms") c.backoff_ms = static_cast<int>(get_int(node, key));
        else if (key == "max_in_flight") c.max_in_flight = get_count(node, key);
        else if (key == "backends") {
            c.backends.clear();
            for (const auto& n : get_strings(node, key)) c.backends.push_back(SimilarityBackend::parse(n));
        } else if (key == "strategies") {
            c.strategies.clear();
            for (const auto& n : get_strings(node, key)) c.strategies.push_back(parse_strategy(n));
        } else if (key == "seed") c.synth.seed = static_cast<std::uint64_t>(get_int(node, key));
        else if (key == "n_records") c.synth.n_records = get_count(node, key);
        else if (key == "samples") c.synth.samples = get_count(node, key);
        else if (key == "vocab") c.synth.vocab = get_count(node, key);
        else if (key == "overlap") c.synth.overlap = get_double(node, key);
        else if (key == "rho") c.synth.rho = get_double(node, key);
        else if (key == "quality_model") c.synth.quality_model = get_string(node, key);
        else if (key == "confident_rate") c.synth.confident_rate = get_double(node, key);
        else if (key == "greedy") {
            auto v = node.value<bool>();
            if (!v) bad(key, "expected a boolean");
            c.synth.greedy = *v;
        } else if (key == "groups") {
            const auto* t = node.as_table();
            if (!t) bad(key, "expected a table of dataset lists");
            c.groups.clear();
            for (const auto& [g, members] : *t) c.groups[std::string(g.str())] = get_strings(members, key);
        } else if (key == "datasets") {
            const auto* t = node.as_table();
            if (!t) bad(key, "expected a table of dataset tables");
            c.datasets.clear();
            for (const auto& [name, entry] : *t) {
                const auto* st = entry.as_table();
                if (!st) bad(key, "dataset '" + std::string(name.str()) + "' must be a table");
                DatasetSpec d{std::string(name.str()), {}, {}};
                for (const auto& [dk, dv] : *st) {
                    if (dk == "records") d.records = get_string(dv, key);
                    else if (dk == "scores") d.scores = get_string(dv, key);
                    else bad(key, "unknown dataset field '" + std::string(dk.str()) + "'");
                }
                c.datasets.push_back(std::move(d));
            }
        }
    }
}

} // namespace cocoa::app
