#include "cocoa/app/commands.hpp"

#include <atomic>
#include <map>
#include <set>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <thread>

#include "cocoa/app/synth.hpp"
#include "cocoa/error.hpp"

namespace cocoa::app {

using nlohmann::json;

namespace {

// Rethrows the in-flight exception with `context` prepended, keeping its kind.
[[noreturn]] void rethrow_with(const std::string& context) {
    try {
        throw;
    } catch (const ConfigError& e) {
        throw ConfigError(context + e.what());
    } catch (const ProviderError& e) {
        throw ProviderError(context + e.what());
    } catch (const DataError& e) {
        throw DataError(context + e.what());
    } catch (const std::exception& e) {
        throw DataError(context + e.what());
    }
}

std::ofstream open_output(const std::filesystem::path& path) {
    if (path.empty()) throw ConfigError("no output path given");
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write '" + path.string() + "'");
    return out;
}

std::string fixed(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6f", x);
    return buf;
}

// Runs fn(i) for i in [0, n) on up to `workers` threads. The error of the
// lowest failing index is rethrown so failures are reported deterministically.
template <class Fn>
void parallel_for(std::size_t n, std::size_t workers, Fn fn) {
    std::vector<std::exception_ptr> errors(n);
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i; (i = next++) < n;) {
            try {
                fn(i);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    const std::size_t width = std::max<std::size_t>(1, std::min(workers, n));
    if (width == 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (std::size_t w = 0; w < width; ++w) pool.emplace_back(worker);
    }
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

std::vector<GenerationRecord> load_dataset(const DatasetSpec& d) {
    if (d.records.empty()) throw ConfigError("dataset '" + d.name + "' has no records path");
    return load_records(d.records);
}

} // namespace

ProviderSession::ProviderSession(const RunConfig& config)
    : ProviderSession(config, config.endpoint.empty() ? nullptr : std::make_shared<HttpTransport>(config.endpoint)) {}

ProviderSession::ProviderSession(const RunConfig& config, std::shared_ptr<SimilarityTransport> transport)
    : cache_path_(config.cache), cache_(std::make_shared<SimilarityCache>()) {
    if (!cache_path_.empty()) cache_->load(cache_path_);
    if (transport) {
        ProviderOptions opts;
        opts.batch_size = config.batch_size;
        opts.max_attempts = config.retries;
        opts.backoff = std::chrono::milliseconds(config.backoff_ms);
        opts.max_in_flight = static_cast<std::ptrdiff_t>(config.max_in_flight);
        client_ = std::make_unique<ProviderClient>(std::move(transport), cache_, opts);
    }
}

void ProviderSession::save_cache() const {
    if (!cache_path_.empty() && cache_->size() > 0) cache_->save(cache_path_);
}

std::vector<EstimatorResult> score_records(std::span<const GenerationRecord> records,
                                           std::span<const Estimator> estimators, TargetStrategy strategy,
                                           const ScoringConfig& scoring, const ScorerFactory& factory,
                                           std::size_t workers) {
    const std::size_t per = estimators.size();
    std::vector<EstimatorResult> out(records.size() * per);
    parallel_for(records.size(), workers, [&](std::size_t r) {
        RecordScorer scorer(records[r], scoring, factory);
        for (std::size_t e = 0; e < per; ++e) {
            try {
                out[r * per + e] = scorer.score(estimators[e], strategy);
            } catch (...) {
                rethrow_with("record '" + records[r].record_id + "', estimator " +
                             std::string(to_string(estimators[e])) + ": ");
            }
        }
    });
    return out;
}

void write_scores(const std::filesystem::path& path, std::span<const EstimatorResult> results) {
    auto out = open_output(path);
    for (const auto& r : results) out << r.to_json().dump() << '\n';
}

std::vector<EstimatorResult> read_scores(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open scores file '" + path.string() + "'");
    std::vector<EstimatorResult> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        const std::string where = path.string() + ":" + std::to_string(line_no) + ": ";
        try {
            auto j = json::parse(line);
            EstimatorResult r;
            r.record_id = j.at("record_id").get<std::string>();
            r.estimator = parse_estimator(j.at("estimator").get<std::string>());
            if (auto s = j.find("strategy"); s != j.end() && !s->is_null())
                r.strategy = parse_strategy(s->get<std::string>());
            r.value = j.at("value").get<double>();
            if (auto f = j.find("flags"); f != j.end()) r.flags = f->get<std::vector<std::string>>();
            out.push_back(std::move(r));
        } catch (const json::exception& e) {
            throw DataError(where + e.what());
        } catch (const ConfigError& e) {
            throw DataError(where + e.what());
        }
    }
    return out;
}

DatasetEvaluation evaluate_dataset(const std::string& dataset, std::span<const GenerationRecord> records,
                                   std::span<const EstimatorResult> scores, TargetStrategy default_strategy,
                                   double max_rejection) {
    std::map<std::string, const GenerationRecord*> by_id;
    for (const auto& r : records) by_id[r.record_id] = &r;

    std::map<std::string, std::vector<eval::ScoredInstance>> instances;
    for (const auto& s : scores) {
        auto it = by_id.find(s.record_id);
        if (it == by_id.end())
            throw DataError("dataset '" + dataset + "': scored record '" + s.record_id + "' not found in records");
        const std::string strategy(to_string(s.strategy.value_or(default_strategy)));
        auto q = it->second->quality.find(strategy);
        if (q == it->second->quality.end())
            throw DataError("dataset '" + dataset + "': missing quality '" + strategy + "' for record '" +
                            s.record_id + "'");
        instances[std::string(to_string(s.estimator))].push_back({s.record_id, s.value, q->second});
    }

    DatasetEvaluation out{dataset, {}, {}};
    for (const auto& [estimator, xs] : instances) {
        try {
            out.reports[estimator] = eval::prr(xs, max_rejection);
        } catch (const eval::UndefinedPrrError& e) {
            out.reports[estimator] = std::nullopt;
            out.errors[estimator] = e.what();
        }
    }
    return out;
}

json evaluation_report(std::span<const DatasetEvaluation> datasets, const eval::TaskGroups& configured) {
    eval::TaskGroups groups = configured;
    if (groups.empty()) {
        auto& all = groups["all"];
        for (const auto& d : datasets) all.push_back(d.dataset);
    }

    json report;
    report["datasets"] = json::object();
    std::set<std::string> estimators;
    for (const auto& d : datasets) {
        json entry = json::object();
        for (const auto& [est, rep] : d.reports) {
            estimators.insert(est);
            entry[est] = rep ? rep->to_json() : json{{"prr", nullptr}, {"error", d.errors.at(est)}};
        }
        report["datasets"][d.dataset] = std::move(entry);
    }

    report["groups"] = json::object();
    for (const auto& est : estimators) {
        std::map<std::string, std::optional<double>> prr_by_dataset;
        for (const auto& d : datasets) {
            auto it = d.reports.find(est);
            if (it != d.reports.end()) prr_by_dataset[d.dataset] = it->second ? std::optional(it->second->prr) : std::nullopt;
        }
        for (const auto& [group, members] : groups) {
            try {
                auto mean = eval::aggregate_mean_prr(prr_by_dataset, {{group, members}});
                report["groups"][group][est] = mean.at(group);
            } catch (const DataError& e) {
                report["groups"][group][est] = json{{"prr", nullptr}, {"error", e.what()}};
            }
        }
    }
    return report;
}

void cmd_score(const RunConfig& config, ProviderSession& session) {
    config.validate();
    if (config.estimators.empty()) throw ConfigError("no estimators given");
    auto records = load_records(config.records);
    auto results = score_records(records, config.estimators, config.strategy, config.scoring(), session.factory(),
                                 config.workers);
    write_scores(config.output, results);
    session.save_cache();
}

void cmd_evaluate(const RunConfig& config) {
    config.validate();
    std::vector<DatasetEvaluation> evals;
    for (const auto& d : config.resolved_datasets()) {
        if (d.scores.empty()) throw ConfigError("dataset '" + d.name + "' has no scores path");
        auto records = load_dataset(d);
        auto scores = read_scores(d.scores);
        evals.push_back(evaluate_dataset(d.name, records, scores, config.strategy, config.max_rejection));
    }
    auto report = evaluation_report(evals, config.groups);
    report["max_rejection"] = config.max_rejection;
    if (config.report.empty()) {
        std::cout << report.dump(2) << '\n';
    } else {
        auto out = open_output(config.report);
        out << report.dump(2) << '\n';
    }
    if (!config.curves.empty()) {
        std::filesystem::create_directories(config.curves);
        for (const auto& d : evals)
            for (const auto& [est, rep] : d.reports)
                if (rep) {
                    std::ofstream out(config.curves / (d.dataset + "__" + est + ".csv"), std::ios::binary);
                    out << rep->curves_csv();
                }
    }
    for (const auto& d : evals)
        for (const auto& [est, msg] : d.errors) std::cerr << "warning: " << d.dataset << "/" << est << ": " << msg << '\n';
}

void cmd_ablate(const RunConfig& config, ProviderSession& session) {
    config.validate();
    if (config.estimators.empty()) throw ConfigError("no estimators given");
    const auto backends = config.backends.empty() ? std::vector{config.backend} : config.backends;
    const auto strategies = config.strategies.empty() ? std::vector{config.strategy} : config.strategies;
    for (const auto& b : backends)
        if (b.is_remote() && !session.client())
            throw ConfigError("backend '" + b.name() + "' needs a provider endpoint");
    const auto datasets = config.resolved_datasets();

    // prr[dataset][row] with rows ordered estimator, backend, strategy.
    const std::size_t rows = config.estimators.size() * backends.size() * strategies.size();
    std::vector<std::vector<std::string>> cells(datasets.size(), std::vector<std::string>(rows));
    const auto factory = session.factory();
    for (std::size_t d = 0; d < datasets.size(); ++d) {
        auto records = load_dataset(datasets[d]);
        for (std::size_t b = 0; b < backends.size(); ++b) {
            ScoringConfig scoring = config.scoring();
            scoring.backend = backends[b];
            for (std::size_t s = 0; s < strategies.size(); ++s) {
                auto results = score_records(records, config.estimators, strategies[s], scoring, factory,
                                             config.workers);
                auto ev = evaluate_dataset(datasets[d].name, records, results, strategies[s], config.max_rejection);
                for (std::size_t e = 0; e < config.estimators.size(); ++e) {
                    const auto& rep = ev.reports.at(std::string(to_string(config.estimators[e])));
                    const std::size_t row = (e * backends.size() + b) * strategies.size() + s;
                    cells[d][row] = rep ? fixed(rep->prr) : "NA";
                }
            }
        }
    }

    auto out = open_output(config.output);
    out << "estimator,backend,strategy";
    for (const auto& d : datasets) out << ',' << d.name;
    out << '\n';
    for (std::size_t e = 0; e < config.estimators.size(); ++e)
        for (std::size_t b = 0; b < backends.size(); ++b)
            for (std::size_t s = 0; s < strategies.size(); ++s) {
                const std::size_t row = (e * backends.size() + b) * strategies.size() + s;
                out << to_string(config.estimators[e]) << ',' << backends[b].name() << ',' << to_string(strategies[s]);
                for (std::size_t d = 0; d < datasets.size(); ++d) out << ',' << cells[d][row];
                out << '\n';
            }
    session.save_cache();
}

void cmd_synth(const RunConfig& config) {
    auto records = synthesize(config.synth);
    auto out = open_output(config.output);
    for (const auto& r : records) out << record_to_json(r).dump() << '\n';
}

void cmd_sim(const RunConfig& config, ProviderSession& session) {
    config.validate();
    const auto& backend = config.backend;
    if (backend.kind == BackendKind::precomputed) throw ConfigError("sim needs a concrete backend, not a precomputed block");
    if (backend.is_remote() && !session.client())
        throw ConfigError("backend '" + backend.name() + "' needs a provider endpoint (set --endpoint or " +
                          kEndpointEnvVar + ")");
    auto records = load_records(config.records);
    const auto factory = session.factory();
    parallel_for(records.size(), config.workers, [&](std::size_t r) {
        auto scorer = factory.make(backend);
        try {
            attach_precomputed(records[r], backend, *scorer);
        } catch (...) {
            rethrow_with("record '" + records[r].record_id + "': ");
        }
    });
    auto out = open_output(config.output);
    for (const auto& r : records) out << record_to_json(r).dump() << '\n';
    session.save_cache();
}

} // namespace cocoa::app
