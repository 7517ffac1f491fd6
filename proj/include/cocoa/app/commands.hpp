#pragma once

// Batch pipeline behind the `cocoa` CLI subcommands.

#include <filesystem>
#include <memory>
#include <span>
#include <vector>

#include <json.hpp>

#include "cocoa/app/config.hpp"
#include "cocoa/provider.hpp"
#include "cocoa/scoring.hpp"

namespace cocoa::app {

// Provider client plus its persistent cache, when an endpoint is configured.
class ProviderSession {
public:
    explicit ProviderSession(const RunConfig& config);
    ProviderSession(const RunConfig& config, std::shared_ptr<SimilarityTransport> transport);

    ScorerFactory factory() const { return ScorerFactory(client_.get()); }
    ProviderClient* client() const { return client_.get(); }
    void save_cache() const;

private:
    std::filesystem::path cache_path_;
    std::shared_ptr<SimilarityCache> cache_;
    std::unique_ptr<ProviderClient> client_;
};

// Scores every (record, estimator) pair on a bounded worker pool. Results
// come back in record-major input order regardless of completion order.
std::vector<EstimatorResult> score_records(std::span<const GenerationRecord> records,
                                           std::span<const Estimator> estimators, TargetStrategy strategy,
                                           const ScoringConfig& scoring, const ScorerFactory& factory,
                                           std::size_t workers);

void write_scores(const std::filesystem::path& path, std::span<const EstimatorResult> results);
std::vector<EstimatorResult> read_scores(const std::filesystem::path& path);

// Joins scores with record qualities and computes PRR per estimator. Records
// without the needed quality entry raise DataError.
struct DatasetEvaluation {
    std::string dataset;
    std::map<std::string, std::optional<eval::PrrReport>> reports;  // by estimator
    std::map<std::string, std::string> errors;                      // undefined PRRs
};

DatasetEvaluation evaluate_dataset(const std::string& dataset, std::span<const GenerationRecord> records,
                                   std::span<const EstimatorResult> scores, TargetStrategy default_strategy,
                                   double max_rejection);

nlohmann::json evaluation_report(std::span<const DatasetEvaluation> datasets, const eval::TaskGroups& groups);

void cmd_score(const RunConfig& config, ProviderSession& session);
void cmd_evaluate(const RunConfig& config);
void cmd_ablate(const RunConfig& config, ProviderSession& session);
void cmd_synth(const RunConfig& config);
void cmd_sim(const RunConfig& config, ProviderSession& session);

} // namespace cocoa::app
