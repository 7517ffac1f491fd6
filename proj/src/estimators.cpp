#include "cocoa/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "cocoa/error.hpp"
#include "cocoa/spectral.hpp"

namespace cocoa::estimators {

namespace {

double log_sum_exp(std::span<const double> xs) {
    double hi = -std::numeric_limits<double>::infinity();
    for (double x : xs) hi = std::max(hi, x);
    if (!std::isfinite(hi)) return hi;
    double s = 0.0;
    for (double x : xs) s += std::exp(x - hi);
    return hi + std::log(s);
}

void require_square(const Matrix& g, std::size_t m, const char* what) {
    if (g.size() != m)
        throw DataError(std::string(what) + ": similarity matrix is " + std::to_string(g.size()) + "x" +
                        std::to_string(g.size()) + " but there are " + std::to_string(m) + " samples");
}

} // namespace

double msp(const Sequence& target) { return -seq_log_prob(target); }

double ppl(const Sequence& target) { return msp(target) / static_cast<double>(target.length()); }

double mte(const Sequence& target) {
    double sum = 0.0;
    for (std::size_t l = 0; l < target.tokens.size(); ++l) {
        const auto& h = target.tokens[l].dist_entropy;
        if (!h) throw DataError("mean token entropy needs dist_entropy, missing on token " + std::to_string(l));
        sum += *h;
    }
    return sum / static_cast<double>(target.length());
}

std::vector<double> token_relevance(const Sequence& target, std::string_view input_text, PairScorer& scorer) {
    const std::string prefix = std::string(input_text) + " ";
    const std::string full = prefix + join_tokens(target);
    std::vector<TextPair> pairs;
    pairs.reserve(target.length());
    for (std::size_t k = 0; k < target.length(); ++k) pairs.emplace_back(full, prefix + join_tokens(target, k));
    auto g = scorer.score(pairs);
    if (g.size() != pairs.size()) throw ProviderError("scorer returned a misaligned score list");
    for (double& v : g) v = 1.0 - v;
    return g;
}

TokenSarValue token_sar(const Sequence& target, std::span<const double> relevance) {
    const std::size_t len = target.length();
    if (relevance.size() != len) throw DataError("token_sar: relevance count does not match token count");
    double total = 0.0;
    for (double r : relevance) total += r;
    TokenSarValue out;
    if (total <= 0.0) {
        out.uniform_fallback = true;
        out.value = ppl(target);
        return out;
    }
    double acc = 0.0;
    for (std::size_t l = 0; l < len; ++l) acc -= (relevance[l] / total) * target.tokens[l].log_prob;
    out.value = acc;
    return out;
}

TokenSarValue token_sar(const Sequence& target, std::string_view input_text, PairScorer& scorer) {
    auto r = token_relevance(target, input_text, scorer);
    return token_sar(target, r);
}

double mcse(std::span<const Sequence> samples) {
    if (samples.empty()) throw DataError("mcse needs at least one sample");
    double s = 0.0;
    for (const auto& y : samples) s += seq_log_prob(y);
    return -s / static_cast<double>(samples.size());
}

double mcnse(std::span<const Sequence> samples) {
    if (samples.empty()) throw DataError("mcnse needs at least one sample");
    double s = 0.0;
    for (const auto& y : samples) s += seq_log_prob(y) / static_cast<double>(y.length());
    return -s / static_cast<double>(samples.size());
}

SemanticClustering cluster_semantic(const Matrix& p_entail, const Matrix& p_contra) {
    const std::size_t m = p_entail.size();
    if (p_contra.size() != m) throw DataError("cluster_semantic: entail/contra matrices differ in size");
    SemanticClustering c;
    c.assignments.resize(m);
    std::vector<std::size_t> representative;
    for (std::size_t i = 0; i < m; ++i) {
        std::size_t found = representative.size();
        for (std::size_t k = 0; k < representative.size(); ++k) {
            const std::size_t r = representative[k];
            if (p_entail(i, r) > p_contra(i, r) && p_entail(r, i) > p_contra(r, i)) {
                found = k;
                break;
            }
        }
        if (found == representative.size()) representative.push_back(i);
        c.assignments[i] = found;
    }
    c.num_clusters = representative.size();
    return c;
}

double semantic_entropy(std::span<const double> log_probs, const SemanticClustering& clustering) {
    const std::size_t m = log_probs.size();
    if (m == 0 || clustering.assignments.size() != m)
        throw DataError("semantic_entropy: clustering does not cover the samples");
    std::vector<std::vector<double>> members(clustering.num_clusters);
    for (std::size_t i = 0; i < m; ++i) members.at(clustering.assignments[i]).push_back(log_probs[i]);
    double u = 0.0;
    for (const auto& lp : members) {
        if (lp.empty()) continue;
        const double weight = static_cast<double>(lp.size()) / static_cast<double>(m);
        u -= weight * log_sum_exp(lp);
    }
    return u;
}

double semantic_entropy(std::span<const Sequence> samples, const SemanticClustering& clustering) {
    std::vector<double> lp;
    lp.reserve(samples.size());
    for (const auto& y : samples) lp.push_back(seq_log_prob(y));
    return semantic_entropy(lp, clustering);
}

double sentence_sar(std::span<const double> log_probs, const Matrix& g, double temperature) {
    if (!(temperature > 0.0)) throw DataError("sentence_sar: temperature must be positive");
    const std::size_t m = log_probs.size();
    if (m == 0) throw DataError("sentence_sar needs at least one sample");
    require_square(g, m, "sentence_sar");
    const double log_t = std::log(temperature);
    std::vector<double> terms;
    double u = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        terms.assign(1, log_probs[i]);
        for (std::size_t k = 0; k < m; ++k)
            if (k != i && g(i, k) > 0.0) terms.push_back(std::log(g(i, k)) + log_probs[k] - log_t);
        u -= log_sum_exp(terms);
    }
    return u / static_cast<double>(m);
}

double sentence_sar(std::span<const Sequence> samples, const SimilarityMatrix& g, double temperature) {
    std::vector<double> lp;
    lp.reserve(samples.size());
    for (const auto& y : samples) lp.push_back(seq_log_prob(y));
    return sentence_sar(lp, g.entries, temperature);
}

double sar(std::span<const double> token_sar_values, const SimilarityMatrix& g, double temperature) {
    std::vector<double> lp;
    lp.reserve(token_sar_values.size());
    for (double v : token_sar_values) lp.push_back(-v);
    return sentence_sar(lp, g.entries, temperature);
}

double deg_mat(const SimilarityMatrix& g) {
    const std::size_t m = g.size();
    if (m == 0) throw DataError("deg_mat needs a non-empty matrix");
    double trace_d = 0.0;
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < m; ++j) trace_d += g(i, j);
    const double mm = static_cast<double>(m);
    return 1.0 - trace_d / (mm * mm);
}

double eig_val_laplacian(const SimilarityMatrix& g) {
    if (g.size() == 0) throw DataError("eig_val_laplacian needs a non-empty matrix");
    double u = 0.0;
    for (double lambda : spectral::sym_eigenvalues(spectral::normalized_laplacian(g)))
        u += std::max(0.0, 1.0 - lambda);
    return u;
}

double num_sem_sets(const SemanticClustering& clustering) { return static_cast<double>(clustering.num_clusters); }

double ave_dissimilarity(std::span<const double> target_row) {
    if (target_row.empty()) throw DataError("ave_dissimilarity needs at least one sample");
    double s = 0.0;
    for (double g : target_row) s += 1.0 - g;
    return s / static_cast<double>(target_row.size());
}

double cocoa(double u_info, double u_cons) { return u_info * u_cons; }

double additive_cocoa(double u_info, double u_cons) { return u_info + u_cons; }

double full_sample_cocoa(double u_info, const SimilarityMatrix& g) { return u_info * deg_mat(g); }

double prob_cocoa(double u_info, double u_cons) { return -std::expm1(-u_info) * u_cons; }

} // namespace cocoa::estimators
