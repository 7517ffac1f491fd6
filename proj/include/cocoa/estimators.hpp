#pragma once

// Uncertainty estimators. Larger values mean a less reliable output.
//
// Single-sequence scores read one target sequence; repeated-sampling and
// consistency scores read the sample set and its similarity matrix; the
// CoCoA family combines a target's confidence with its average
// dissimilarity to the samples.

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

#include "cocoa/record.hpp"
#include "cocoa/similarity.hpp"

namespace cocoa::estimators {

// --- single sequence --------------------------------------------------------

double msp(const Sequence& target);
double ppl(const Sequence& target);
// Throws DataError if any token lacks dist_entropy.
double mte(const Sequence& target);

// R_T for every token: 1 - g(input ⊕ y, input ⊕ y with token k removed).
std::vector<double> token_relevance(const Sequence& target, std::string_view input_text, PairScorer& scorer);

struct TokenSarValue {
    double value = 0.0;
    bool uniform_fallback = false;  // all relevances were zero
};

TokenSarValue token_sar(const Sequence& target, std::span<const double> relevance);
TokenSarValue token_sar(const Sequence& target, std::string_view input_text, PairScorer& scorer);

// --- repeated sampling ------------------------------------------------------

double mcse(std::span<const Sequence> samples);
double mcnse(std::span<const Sequence> samples);

struct SemanticClustering {
    std::vector<std::size_t> assignments;  // sample index -> cluster id
    std::size_t num_clusters = 0;
};

// Single greedy pass in sample order. A sample joins the first cluster whose
// first member it mutually entails (entail > contra both ways), otherwise it
// founds a new cluster. Matrices are directional probabilities over samples.
SemanticClustering cluster_semantic(const Matrix& p_entail, const Matrix& p_contra);

double semantic_entropy(std::span<const double> log_probs, const SemanticClustering& clustering);
double semantic_entropy(std::span<const Sequence> samples, const SemanticClustering& clustering);

// -(1/M) sum_i log(P_i + (1/t) sum_{k != i} g_ik P_k), evaluated in log space.
// Throws DataError for t <= 0.
double sentence_sar(std::span<const double> log_probs, const Matrix& g, double temperature);
double sentence_sar(std::span<const Sequence> samples, const SimilarityMatrix& g, double temperature);

// SentenceSAR over token-shifted probabilities P'_i = exp(-token_sar_i).
double sar(std::span<const double> token_sar_values, const SimilarityMatrix& g, double temperature);

// --- consistency ------------------------------------------------------------

double deg_mat(const SimilarityMatrix& g);
double eig_val_laplacian(const SimilarityMatrix& g);
double num_sem_sets(const SemanticClustering& clustering);

// Mean of (1 - g_*i) over the target row.
double ave_dissimilarity(std::span<const double> target_row);

// --- CoCoA family -----------------------------------------------------------

double cocoa(double u_info, double u_cons);
double additive_cocoa(double u_info, double u_cons);
double full_sample_cocoa(double u_info, const SimilarityMatrix& g);
// (1 - exp(-u_info)) * u_cons; u_info is an msp or ppl value.
double prob_cocoa(double u_info, double u_cons);

} // namespace cocoa::estimators
