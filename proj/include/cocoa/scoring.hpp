#pragma once

// Dispatch from estimator ids to the estimator functions for one record.

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "cocoa/estimators.hpp"
#include "cocoa/provider.hpp"
#include "cocoa/record.hpp"
#include "cocoa/similarity.hpp"

namespace cocoa {

enum class Estimator {
    msp,
    ppl,
    mte,
    token_sar,
    mcse,
    mcnse,
    semantic_entropy,
    sentence_sar,
    sar,
    deg_mat,
    eig_val_laplacian,
    num_sem_sets,
    ave_dissimilarity,
    cocoa_msp,
    cocoa_ppl,
    cocoa_mte,
    additive_cocoa_msp,
    additive_cocoa_ppl,
    additive_cocoa_mte,
    full_sample_cocoa_msp,
    full_sample_cocoa_ppl,
    full_sample_cocoa_mte,
    prob_cocoa_msp,
    prob_cocoa_ppl,
};

std::string_view to_string(Estimator e);
Estimator parse_estimator(std::string_view name);
const std::vector<Estimator>& all_estimators();

// Whether the estimator reads the selected target (otherwise it only reads
// the sample set and ignores the strategy).
bool uses_target(Estimator e);

struct EstimatorResult {
    Estimator estimator{};
    std::string record_id;
    std::optional<TargetStrategy> strategy;
    double value = 0.0;
    std::vector<std::string> flags;

    nlohmann::json to_json() const;
};

struct ScoringConfig {
    SimilarityBackend backend{BackendKind::jaccard, {}};
    // Text backend for TokenSAR relevance. Unset: the run backend, or the
    // backend a precomputed block is named after.
    std::optional<SimilarityBackend> relevance_backend;
    double temperature = 0.001;
};

// Hands out text scorers; remote backends go through the provider client.
class ScorerFactory {
public:
    explicit ScorerFactory(ProviderClient* client = nullptr) : client_(client) {}

    // Throws ConfigError when a remote backend is requested without a client.
    std::unique_ptr<PairScorer> make(const SimilarityBackend& backend) const;
    bool has_provider() const { return client_ != nullptr; }

private:
    ProviderClient* client_;
};

// Scores one record, memoizing similarity matrices across estimators.
class RecordScorer {
public:
    RecordScorer(const GenerationRecord& record, const ScoringConfig& config, const ScorerFactory& factory);

    EstimatorResult score(Estimator estimator, TargetStrategy strategy);

    // Raw pairwise block over [greedy?] + samples for the run backend.
    const Matrix& pool_raw();
    // Symmetrized sample-by-sample matrix.
    const SimilarityMatrix& sample_matrix();
    std::vector<double> target_row(const TargetRef& target);
    const estimators::SemanticClustering& clustering();
    const std::vector<estimators::TokenSarValue>& sample_token_sar();
    estimators::TokenSarValue target_token_sar(const TargetRef& target);

private:
    std::size_t pool_index(const TargetRef& target) const;
    PairScorer& relevance_scorer();
    double info_value(Estimator base, const TargetRef& target, std::vector<std::string>& flags);

    const GenerationRecord& record_;
    const ScoringConfig& config_;
    const ScorerFactory& factory_;
    std::optional<Matrix> pool_raw_;
    std::optional<SimilarityMatrix> sample_matrix_;
    std::optional<estimators::SemanticClustering> clustering_;
    std::optional<std::vector<estimators::TokenSarValue>> sample_token_sar_;
    std::optional<estimators::TokenSarValue> greedy_token_sar_;
    std::unique_ptr<PairScorer> relevance_;
};

// Convenience wrapper for a single estimator on a single record.
EstimatorResult score_record(const GenerationRecord& record, Estimator estimator, TargetStrategy strategy,
                             const ScoringConfig& config, const ScorerFactory& factory);

// Fills precomputed_sim[backend.name()] with the raw pool matrix.
void attach_precomputed(GenerationRecord& record, const SimilarityBackend& backend, PairScorer& scorer);

} // namespace cocoa
