#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "cocoa/evaluation.hpp"
#include "cocoa/record.hpp"
#include "cocoa/scoring.hpp"
#include "cocoa/similarity.hpp"

namespace cocoa::app {

struct SynthParams {
    std::uint64_t seed = 7;
    std::size_t n_records = 200;
    std::size_t samples = 10;
    std::size_t vocab = 50;
    double overlap = 0.5;         // mean rate at which samples repeat the answer
    double rho = 0.5;             // weight of planted agreement in quality
    std::string quality_model = "planted";  // planted | independent
    double confident_rate = 0.5;  // share of records in the confident log-prob regime
    bool greedy = true;
};

struct DatasetSpec {
    std::string name;
    std::filesystem::path records;
    std::filesystem::path scores;
};

struct RunConfig {
    std::filesystem::path records;
    std::vector<Estimator> estimators;
    TargetStrategy strategy = TargetStrategy::best;
    SimilarityBackend backend{BackendKind::jaccard, {}};
    std::optional<SimilarityBackend> relevance_backend;
    std::string endpoint;
    double temperature = 0.001;
    double max_rejection = eval::kDefaultMaxRejection;
    eval::TaskGroups groups;
    std::vector<DatasetSpec> datasets;

    std::filesystem::path output;
    std::filesystem::path scores;
    std::filesystem::path report;
    std::filesystem::path curves;
    std::filesystem::path cache;
    std::size_t workers = 1;

    std::size_t batch_size = 32;
    int retries = 3;
    int backoff_ms = 100;
    std::size_t max_in_flight = 4;

    std::vector<SimilarityBackend> backends;      // ablate
    std::vector<TargetStrategy> strategies;       // ablate

    SynthParams synth;

    ScoringConfig scoring() const;
    // Datasets to process: the [datasets] table, or the single records/scores
    // pair under the name "default".
    std::vector<DatasetSpec> resolved_datasets() const;
    void validate() const;
};

// Defaults with the endpoint taken from the environment.
RunConfig default_config();

// Overlays keys from a TOML file onto `config`. Unknown keys are rejected.
void load_toml(const std::filesystem::path& path, RunConfig& config);

// Applies one command-line override. Keys are the config keys; list values
// are comma separated. `datasets` takes "name=records[:scores]" and `groups`
// takes "name=ds1,ds2"; both append.
void apply_override(RunConfig& config, const std::string& key, const std::string& value);

// All config keys, in the order they are documented.
const std::vector<std::string>& config_keys();

std::vector<std::string> split_list(const std::string& csv);

} // namespace cocoa::app
