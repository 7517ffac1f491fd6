#pragma once

// Similarity functions g(a, b) in [0,1] and the symmetrized matrices built
// from them.

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "cocoa/record.hpp"

namespace cocoa {

enum class BackendKind { jaccard, rouge_l, nli_entail, nli_contra, cross_encoder, align_score, precomputed };

struct SimilarityBackend {
    BackendKind kind = BackendKind::jaccard;
    std::string block;  // name of the precomputed block, only for kind == precomputed

    static SimilarityBackend parse(std::string_view name);
    std::string name() const;

    bool is_lexical() const { return kind == BackendKind::jaccard || kind == BackendKind::rouge_l; }
    bool is_remote() const { return !is_lexical() && kind != BackendKind::precomputed; }

    bool operator==(const SimilarityBackend&) const = default;
};

// Lowercased, whitespace-split words with leading/trailing ASCII punctuation
// stripped. Words that are pure punctuation are dropped.
std::vector<std::string> words(std::string_view text);

double jaccard(std::string_view a, std::string_view b);
double rouge_l(std::string_view a, std::string_view b);

using TextPair = std::pair<std::string, std::string>;

// Scores ordered text pairs with one backend. Implementations must return
// one score per pair, order-aligned, each in [0,1].
class PairScorer {
public:
    virtual ~PairScorer() = default;
    virtual std::vector<double> score(std::span<const TextPair> pairs) = 0;
    virtual SimilarityBackend backend() const = 0;
};

class LexicalScorer final : public PairScorer {
public:
    explicit LexicalScorer(SimilarityBackend backend);
    std::vector<double> score(std::span<const TextPair> pairs) override;
    SimilarityBackend backend() const override { return backend_; }

private:
    SimilarityBackend backend_;
};

struct SimilarityMatrix {
    Matrix entries;
    SimilarityBackend backend;
    bool symmetrized = false;

    std::size_t size() const { return entries.size(); }
    double operator()(std::size_t i, std::size_t j) const { return entries(i, j); }
};

// Directional scores g(text_i, text_j) for all i != j; diagonal fixed at 1.
Matrix raw_matrix(std::span<const std::string> texts, PairScorer& scorer);

// (g_ij + g_ji) / 2 with the diagonal forced to 1.
Matrix symmetrize(const Matrix& raw);

SimilarityMatrix build_matrix(std::span<const Sequence> seqs, PairScorer& scorer);

// Symmetrized similarity between the target and every sample. When the target
// is samples[self_index], that entry is exactly 1 and never scored.
std::vector<double> target_row(const Sequence& target, std::span<const Sequence> samples, PairScorer& scorer,
                               std::optional<std::size_t> self_index = std::nullopt);

} // namespace cocoa
