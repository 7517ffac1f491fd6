#include "cocoa/similarity.hpp"

#include <algorithm>
#include <cctype>
#include <set>

#include "cocoa/error.hpp"

namespace cocoa {

SimilarityBackend SimilarityBackend::parse(std::string_view name) {
    constexpr std::string_view prefix = "precomputed:";
    if (name.starts_with(prefix)) {
        auto block = name.substr(prefix.size());
        if (block.empty()) throw ConfigError("precomputed backend needs a block name");
        return {BackendKind::precomputed, std::string(block)};
    }
    if (name == "jaccard") return {BackendKind::jaccard, {}};
    if (name == "rouge_l") return {BackendKind::rouge_l, {}};
    if (name == "nli_entail") return {BackendKind::nli_entail, {}};
    if (name == "nli_contra") return {BackendKind::nli_contra, {}};
    if (name == "cross_encoder") return {BackendKind::cross_encoder, {}};
    if (name == "align_score") return {BackendKind::align_score, {}};
    throw ConfigError("unknown similarity backend '" + std::string(name) + "'");
}

std::string SimilarityBackend::name() const {
    switch (kind) {
    case BackendKind::jaccard: return "jaccard";
    case BackendKind::rouge_l: return "rouge_l";
    case BackendKind::nli_entail: return "nli_entail";
    case BackendKind::nli_contra: return "nli_contra";
    case BackendKind::cross_encoder: return "cross_encoder";
    case BackendKind::align_score: return "align_score";
    case BackendKind::precomputed: return "precomputed:" + block;
    }
    return "?";
}

namespace {

// Length in bytes of a Unicode whitespace sequence starting at text[i], or 0.
std::size_t space_width(std::string_view text, std::size_t i) {
    auto byte = [&](std::size_t k) -> unsigned char {
        return i + k < text.size() ? static_cast<unsigned char>(text[i + k]) : 0;
    };
    const unsigned char c = byte(0);
    if (c == ' ' || (c >= '\t' && c <= '\r')) return 1;
    if (c == 0xC2 && (byte(1) == 0x85 || byte(1) == 0xA0)) return 2;
    if (c == 0xE1 && byte(1) == 0x9A && byte(2) == 0x80) return 3;
    if (c == 0xE2 && byte(1) == 0x80) {
        const unsigned char d = byte(2);
        if ((d >= 0x80 && d <= 0x8A) || d == 0xA8 || d == 0xA9 || d == 0xAF) return 3;
    }
    if (c == 0xE2 && byte(1) == 0x81 && byte(2) == 0x9F) return 3;
    if (c == 0xE3 && byte(1) == 0x80 && byte(2) == 0x80) return 3;
    return 0;
}

bool is_punct(char c) { return std::ispunct(static_cast<unsigned char>(c)) != 0; }

std::size_t lcs_length(const std::vector<std::string>& a, const std::vector<std::string>& b) {
    std::vector<std::size_t> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
    for (std::size_t i = 1; i <= a.size(); ++i) {
        for (std::size_t j = 1; j <= b.size(); ++j)
            cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
        std::swap(prev, cur);
    }
    return prev[b.size()];
}

} // namespace

std::vector<std::string> words(std::string_view text) {
    std::vector<std::string> out;
    std::string cur;
    auto flush = [&] {
        std::size_t lo = 0, hi = cur.size();
        while (lo < hi && is_punct(cur[lo])) ++lo;
        while (hi > lo && is_punct(cur[hi - 1])) --hi;
        if (hi > lo) out.push_back(cur.substr(lo, hi - lo));
        cur.clear();
    };
    for (std::size_t i = 0; i < text.size();) {
        if (std::size_t w = space_width(text, i)) {
            flush();
            i += w;
            continue;
        }
        cur.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(text[i]))));
        ++i;
    }
    flush();
    return out;
}

double jaccard(std::string_view a, std::string_view b) {
    auto wa = words(a), wb = words(b);
    std::set<std::string> sa(wa.begin(), wa.end()), sb(wb.begin(), wb.end());
    if (sa.empty() && sb.empty()) return 1.0;
    std::size_t shared = 0;
    for (const auto& w : sa) shared += sb.count(w);
    const std::size_t uni = sa.size() + sb.size() - shared;
    return static_cast<double>(shared) / static_cast<double>(uni);
}

double rouge_l(std::string_view a, std::string_view b) {
    auto wa = words(a), wb = words(b);
    if (wa.empty() || wb.empty()) return 0.0;
    const std::size_t lcs = lcs_length(wa, wb);
    if (lcs == 0) return 0.0;
    // F1 of P = lcs/|b| and R = lcs/|a| reduces to 2*lcs/(|a|+|b|).
    return 2.0 * static_cast<double>(lcs) / static_cast<double>(wa.size() + wb.size());
}

LexicalScorer::LexicalScorer(SimilarityBackend backend) : backend_(std::move(backend)) {
    if (!backend_.is_lexical())
        throw ConfigError("backend '" + backend_.name() + "' is not a lexical backend");
}

std::vector<double> LexicalScorer::score(std::span<const TextPair> pairs) {
    std::vector<double> out;
    out.reserve(pairs.size());
    const bool use_jaccard = backend_.kind == BackendKind::jaccard;
    for (const auto& [a, b] : pairs) out.push_back(use_jaccard ? jaccard(a, b) : rouge_l(a, b));
    return out;
}

Matrix raw_matrix(std::span<const std::string> texts, PairScorer& scorer) {
    const std::size_t n = texts.size();
    std::vector<TextPair> pairs;
    pairs.reserve(n * (n - (n ? 1 : 0)));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            if (i != j) pairs.emplace_back(texts[i], texts[j]);
    auto scores = scorer.score(pairs);
    if (scores.size() != pairs.size()) throw ProviderError("scorer returned a misaligned score list");
    Matrix m = Matrix::identity(n);
    std::size_t k = 0;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            if (i != j) m(i, j) = scores[k++];
    return m;
}

Matrix symmetrize(const Matrix& raw) {
    const std::size_t n = raw.size();
    Matrix m(n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) m(i, j) = i == j ? 1.0 : (raw(i, j) + raw(j, i)) / 2.0;
    return m;
}

SimilarityMatrix build_matrix(std::span<const Sequence> seqs, PairScorer& scorer) {
    if (seqs.empty()) throw DataError("build_matrix needs at least one sequence");
    std::vector<std::string> texts;
    texts.reserve(seqs.size());
    for (const auto& s : seqs) texts.push_back(s.text);
    return {symmetrize(raw_matrix(texts, scorer)), scorer.backend(), true};
}

std::vector<double> target_row(const Sequence& target, std::span<const Sequence> samples, PairScorer& scorer,
                               std::optional<std::size_t> self_index) {
    if (samples.empty()) throw DataError("target_row needs at least one sample");
    std::vector<TextPair> pairs;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        if (self_index && *self_index == i) continue;
        pairs.emplace_back(target.text, samples[i].text);
        pairs.emplace_back(samples[i].text, target.text);
    }
    auto scores = scorer.score(pairs);
    if (scores.size() != pairs.size()) throw ProviderError("scorer returned a misaligned score list");
    std::vector<double> row(samples.size(), 1.0);
    std::size_t k = 0;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        if (self_index && *self_index == i) continue;
        row[i] = (scores[k] + scores[k + 1]) / 2.0;
        k += 2;
    }
    return row;
}

} // namespace cocoa
