#include "cocoa/scoring.hpp"

#include <array>
#include <cmath>

#include "cocoa/error.hpp"

namespace cocoa {

namespace {

struct EstimatorName {
    Estimator id;
    std::string_view name;
};

constexpr std::array kEstimatorNames{
    EstimatorName{Estimator::msp, "msp"},
    EstimatorName{Estimator::ppl, "ppl"},
    EstimatorName{Estimator::mte, "mte"},
    EstimatorName{Estimator::token_sar, "token_sar"},
    EstimatorName{Estimator::mcse, "mcse"},
    EstimatorName{Estimator::mcnse, "mcnse"},
    EstimatorName{Estimator::semantic_entropy, "semantic_entropy"},
    EstimatorName{Estimator::sentence_sar, "sentence_sar"},
    EstimatorName{Estimator::sar, "sar"},
    EstimatorName{Estimator::deg_mat, "deg_mat"},
    EstimatorName{Estimator::eig_val_laplacian, "eig_val_laplacian"},
    EstimatorName{Estimator::num_sem_sets, "num_sem_sets"},
    EstimatorName{Estimator::ave_dissimilarity, "ave_dissimilarity"},
    EstimatorName{Estimator::cocoa_msp, "cocoa_msp"},
    EstimatorName{Estimator::cocoa_ppl, "cocoa_ppl"},
    EstimatorName{Estimator::cocoa_mte, "cocoa_mte"},
    EstimatorName{Estimator::additive_cocoa_msp, "additive_cocoa_msp"},
    EstimatorName{Estimator::additive_cocoa_ppl, "additive_cocoa_ppl"},
    EstimatorName{Estimator::additive_cocoa_mte, "additive_cocoa_mte"},
    EstimatorName{Estimator::full_sample_cocoa_msp, "full_sample_cocoa_msp"},
    EstimatorName{Estimator::full_sample_cocoa_ppl, "full_sample_cocoa_ppl"},
    EstimatorName{Estimator::full_sample_cocoa_mte, "full_sample_cocoa_mte"},
    EstimatorName{Estimator::prob_cocoa_msp, "prob_cocoa_msp"},
    EstimatorName{Estimator::prob_cocoa_ppl, "prob_cocoa_ppl"},
};

constexpr const char* kUniformRelevanceFlag = "uniform_relevance_fallback";

} // namespace

std::string_view to_string(Estimator e) {
    for (const auto& n : kEstimatorNames)
        if (n.id == e) return n.name;
    return "?";
}

Estimator parse_estimator(std::string_view name) {
    for (const auto& n : kEstimatorNames)
        if (n.name == name) return n.id;
    throw ConfigError("unknown estimator '" + std::string(name) + "'");
}

const std::vector<Estimator>& all_estimators() {
    static const std::vector<Estimator> all = [] {
        std::vector<Estimator> v;
        for (const auto& n : kEstimatorNames) v.push_back(n.id);
        return v;
    }();
    return all;
}

bool uses_target(Estimator e) {
    switch (e) {
    case Estimator::mcse:
    case Estimator::mcnse:
    case Estimator::semantic_entropy:
    case Estimator::sentence_sar:
    case Estimator::sar:
    case Estimator::deg_mat:
    case Estimator::eig_val_laplacian:
    case Estimator::num_sem_sets:
        return false;
    default:
        return true;
    }
}

nlohmann::json EstimatorResult::to_json() const {
    nlohmann::json j;
    j["record_id"] = record_id;
    j["estimator"] = std::string(cocoa::to_string(estimator));
    j["strategy"] = strategy ? nlohmann::json(std::string(cocoa::to_string(*strategy))) : nlohmann::json(nullptr);
    j["value"] = value;
    j["flags"] = flags;
    return j;
}

std::unique_ptr<PairScorer> ScorerFactory::make(const SimilarityBackend& backend) const {
    if (backend.is_lexical()) return std::make_unique<LexicalScorer>(backend);
    if (backend.is_remote()) {
        if (!client_)
            throw ConfigError("backend '" + backend.name() + "' needs a provider endpoint (set --endpoint or " +
                              kEndpointEnvVar + ")");
        return std::make_unique<ProviderScorer>(*client_, backend);
    }
    throw ConfigError("backend '" + backend.name() + "' cannot score free text");
}

RecordScorer::RecordScorer(const GenerationRecord& record, const ScoringConfig& config, const ScorerFactory& factory)
    : record_(record), config_(config), factory_(factory) {}

std::size_t RecordScorer::pool_index(const TargetRef& target) const {
    return target.is_greedy() ? 0 : *target.sample_index + record_.sample_offset();
}

const Matrix& RecordScorer::pool_raw() {
    if (pool_raw_) return *pool_raw_;
    const auto& backend = config_.backend;
    if (backend.kind == BackendKind::precomputed) {
        auto it = record_.precomputed_sim.find(backend.block);
        if (it == record_.precomputed_sim.end())
            throw DataError("record '" + record_.record_id + "' has no precomputed similarity block '" +
                            backend.block + "'");
        pool_raw_ = it->second;
    } else {
        std::vector<std::string> texts;
        if (record_.greedy) texts.push_back(record_.greedy->text);
        for (const auto& s : record_.samples) texts.push_back(s.text);
        pool_raw_ = raw_matrix(texts, *factory_.make(backend));
    }
    return *pool_raw_;
}

const SimilarityMatrix& RecordScorer::sample_matrix() {
    if (sample_matrix_) return *sample_matrix_;
    const Matrix& raw = pool_raw();
    const std::size_t off = record_.sample_offset(), m = record_.num_samples();
    Matrix sub(m);
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < m; ++j) sub(i, j) = raw(i + off, j + off);
    sample_matrix_ = SimilarityMatrix{symmetrize(sub), config_.backend, true};
    return *sample_matrix_;
}

std::vector<double> RecordScorer::target_row(const TargetRef& target) {
    const Matrix& raw = pool_raw();
    const std::size_t t = pool_index(target), off = record_.sample_offset();
    std::vector<double> row(record_.num_samples());
    for (std::size_t i = 0; i < row.size(); ++i) {
        const std::size_t p = i + off;
        row[i] = p == t ? 1.0 : (raw(t, p) + raw(p, t)) / 2.0;
    }
    return row;
}

const estimators::SemanticClustering& RecordScorer::clustering() {
    if (clustering_) return *clustering_;
    const std::size_t m = record_.num_samples(), off = record_.sample_offset();
    Matrix entail(m), contra_score(m);
    auto e = record_.precomputed_sim.find("nli_entail");
    auto c = record_.precomputed_sim.find("nli_contra");
    if (e != record_.precomputed_sim.end() && c != record_.precomputed_sim.end()) {
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < m; ++j) {
                entail(i, j) = e->second(i + off, j + off);
                contra_score(i, j) = c->second(i + off, j + off);
            }
    } else {
        if (!factory_.has_provider())
            throw ConfigError("record '" + record_.record_id +
                              "': semantic clustering needs precomputed nli_entail/nli_contra blocks or a provider");
        std::vector<std::string> texts;
        for (const auto& s : record_.samples) texts.push_back(s.text);
        entail = raw_matrix(texts, *factory_.make({BackendKind::nli_entail, {}}));
        contra_score = raw_matrix(texts, *factory_.make({BackendKind::nli_contra, {}}));
    }
    // The nli_contra backend reports 1 - p_contra.
    Matrix p_contra(m);
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < m; ++j) p_contra(i, j) = 1.0 - contra_score(i, j);
    clustering_ = estimators::cluster_semantic(entail, p_contra);
    return *clustering_;
}

PairScorer& RecordScorer::relevance_scorer() {
    if (relevance_) return *relevance_;
    SimilarityBackend backend;
    if (config_.relevance_backend) {
        backend = *config_.relevance_backend;
    } else if (config_.backend.kind != BackendKind::precomputed) {
        backend = config_.backend;
    } else {
        try {
            backend = SimilarityBackend::parse(config_.backend.block);
        } catch (const ConfigError&) {
            throw ConfigError("TokenSAR relevance needs a text backend; set relevance_backend");
        }
    }
    relevance_ = factory_.make(backend);
    return *relevance_;
}

const std::vector<estimators::TokenSarValue>& RecordScorer::sample_token_sar() {
    if (sample_token_sar_) return *sample_token_sar_;
    std::vector<estimators::TokenSarValue> v;
    v.reserve(record_.num_samples());
    for (const auto& s : record_.samples)
        v.push_back(estimators::token_sar(s, record_.input_text, relevance_scorer()));
    sample_token_sar_ = std::move(v);
    return *sample_token_sar_;
}

estimators::TokenSarValue RecordScorer::target_token_sar(const TargetRef& target) {
    if (!target.is_greedy()) return sample_token_sar()[*target.sample_index];
    if (!greedy_token_sar_)
        greedy_token_sar_ = estimators::token_sar(*target.sequence, record_.input_text, relevance_scorer());
    return *greedy_token_sar_;
}

double RecordScorer::info_value(Estimator base, const TargetRef& target, std::vector<std::string>& flags) {
    const Sequence& y = *target.sequence;
    switch (base) {
    case Estimator::msp: return estimators::msp(y);
    case Estimator::ppl: return estimators::ppl(y);
    case Estimator::mte:
        if (!y.has_entropies())
            throw DataError("record '" + record_.record_id + "': mean token entropy needs dist_entropy on every token");
        return estimators::mte(y);
    case Estimator::token_sar: {
        auto v = target_token_sar(target);
        if (v.uniform_fallback) flags.emplace_back(kUniformRelevanceFlag);
        return v.value;
    }
    default: break;
    }
    throw ConfigError("not an information-based estimator");
}

EstimatorResult RecordScorer::score(Estimator estimator, TargetStrategy strategy) {
    EstimatorResult r;
    r.estimator = estimator;
    r.record_id = record_.record_id;
    r.strategy = strategy;

    auto target = [&] { return select_target(record_, strategy); };
    auto cons = [&](const TargetRef& t) { return estimators::ave_dissimilarity(target_row(t)); };
    const auto t = config_.temperature;
    using E = Estimator;

    switch (estimator) {
    case E::msp:
    case E::ppl:
    case E::mte:
    case E::token_sar:
        r.value = info_value(estimator, target(), r.flags);
        break;
    case E::mcse: r.value = estimators::mcse(record_.samples); break;
    case E::mcnse: r.value = estimators::mcnse(record_.samples); break;
    case E::semantic_entropy: r.value = estimators::semantic_entropy(record_.samples, clustering()); break;
    case E::sentence_sar: r.value = estimators::sentence_sar(record_.samples, sample_matrix(), t); break;
    case E::sar: {
        std::vector<double> v;
        for (const auto& ts : sample_token_sar()) {
            v.push_back(ts.value);
            if (ts.uniform_fallback && r.flags.empty()) r.flags.emplace_back(kUniformRelevanceFlag);
        }
        r.value = estimators::sar(v, sample_matrix(), t);
        break;
    }
    case E::deg_mat: r.value = estimators::deg_mat(sample_matrix()); break;
    case E::eig_val_laplacian: r.value = estimators::eig_val_laplacian(sample_matrix()); break;
    case E::num_sem_sets: r.value = estimators::num_sem_sets(clustering()); break;
    case E::ave_dissimilarity: r.value = cons(target()); break;
    case E::cocoa_msp:
    case E::cocoa_ppl:
    case E::cocoa_mte: {
        const E base = estimator == E::cocoa_msp ? E::msp : estimator == E::cocoa_ppl ? E::ppl : E::mte;
        auto tr = target();
        r.value = estimators::cocoa(info_value(base, tr, r.flags), cons(tr));
        break;
    }
    case E::additive_cocoa_msp:
    case E::additive_cocoa_ppl:
    case E::additive_cocoa_mte: {
        const E base = estimator == E::additive_cocoa_msp   ? E::msp
                       : estimator == E::additive_cocoa_ppl ? E::ppl
                                                            : E::mte;
        auto tr = target();
        r.value = estimators::additive_cocoa(info_value(base, tr, r.flags), cons(tr));
        break;
    }
    case E::full_sample_cocoa_msp:
    case E::full_sample_cocoa_ppl:
    case E::full_sample_cocoa_mte: {
        const E base = estimator == E::full_sample_cocoa_msp   ? E::msp
                       : estimator == E::full_sample_cocoa_ppl ? E::ppl
                                                               : E::mte;
        r.value = estimators::full_sample_cocoa(info_value(base, target(), r.flags), sample_matrix());
        break;
    }
    case E::prob_cocoa_msp:
    case E::prob_cocoa_ppl: {
        const E base = estimator == E::prob_cocoa_msp ? E::msp : E::ppl;
        auto tr = target();
        r.value = estimators::prob_cocoa(info_value(base, tr, r.flags), cons(tr));
        break;
    }
    }
    if (!std::isfinite(r.value))
        throw DataError("record '" + record_.record_id + "': estimator " + std::string(to_string(estimator)) +
                        " produced a non-finite value");
    return r;
}

EstimatorResult score_record(const GenerationRecord& record, Estimator estimator, TargetStrategy strategy,
                             const ScoringConfig& config, const ScorerFactory& factory) {
    RecordScorer scorer(record, config, factory);
    return scorer.score(estimator, strategy);
}

void attach_precomputed(GenerationRecord& record, const SimilarityBackend& backend, PairScorer& scorer) {
    std::vector<std::string> texts;
    if (record.greedy) texts.push_back(record.greedy->text);
    for (const auto& s : record.samples) texts.push_back(s.text);
    record.precomputed_sim[backend.name()] = raw_matrix(texts, scorer);
}

} // namespace cocoa
