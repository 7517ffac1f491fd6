// Acceptance suite: one PASS/FAIL line per criterion; exit status 1 if any
// criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "cocoa/app/commands.hpp"
#include "cocoa/app/config.hpp"
#include "cocoa/estimators.hpp"
#include "cocoa/evaluation.hpp"
#include "cocoa/spectral.hpp"
#include "fixtures.hpp"
#include "oracle.hpp"
#include "oracle_sweep.hpp"

using namespace cocoa;

namespace {

struct Outcome {
    bool pass = true;
    std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

SimilarityMatrix sim(const Matrix& m) { return {m, {BackendKind::jaccard, {}}, true}; }

std::vector<eval::ScoredInstance> instances(const std::vector<double>& u, const std::vector<double>& q) {
    std::vector<eval::ScoredInstance> xs;
    for (std::size_t i = 0; i < u.size(); ++i) xs.push_back({"i" + std::to_string(i), u[i], q[i]});
    return xs;
}

// --- criteria ---------------------------------------------------------------

Outcome formula_oracle() {
    const auto t0 = Clock::now();
    const auto res = sweep::run(250, 20240601, 1e-9);
    const double secs = seconds_since(t0);
    Outcome o;
    o.pass = res.mismatches.empty() && secs < 60.0 && res.records >= 200;
    o.detail = fmt("%zu records, %zu comparisons over 24 estimators x {jaccard, precomputed}, worst rel err %.3g, "
                   "%.1fs",
                   res.records, res.comparisons, res.worst_rel, secs);
    if (!res.mismatches.empty()) {
        const auto& m = res.mismatches.front();
        o.detail += fmt("; first mismatch %s/%s/%s/%s engine %.17g oracle %.17g", m.record_id.c_str(),
                        m.estimator.c_str(), m.strategy.c_str(), m.backend.c_str(), m.engine, m.reference);
    }
    return o;
}

Outcome closed_forms() {
    Outcome o;
    double worst_eig = 0.0;
    for (std::size_t m = 1; m <= 12; ++m) {
        if (estimators::deg_mat(sim(Matrix(m, 1.0))) != 0.0) o.pass = false;
        if (estimators::deg_mat(sim(Matrix::identity(m))) != 1.0 - 1.0 / static_cast<double>(m)) o.pass = false;
    }
    for (std::size_t c = 1; c <= 3; ++c)
        for (std::size_t m = c; m <= 12; ++m) {
            // c contiguous blocks of near-equal size
            Matrix g(m);
            for (std::size_t i = 0; i < m; ++i)
                for (std::size_t j = 0; j < m; ++j) g(i, j) = (i * c / m) == (j * c / m) ? 1.0 : 0.0;
            worst_eig = std::max(worst_eig, std::abs(estimators::eig_val_laplacian(sim(g)) - static_cast<double>(c)));
        }
    o.pass = o.pass && worst_eig <= 1e-8;
    o.detail = fmt("DegMat exact on all-ones and identity for M=1..12; EigVal c-block max error %.3g", worst_eig);
    return o;
}

Outcome spectral_solver() {
    fixtures::Rng rng(31337);
    double worst_root = 0.0, worst_trace = 0.0;
    for (int k = 0; k < 1000; ++k) {
        const double scale = std::pow(10.0, rng.uniform(-1, 1));
        Matrix a(3);
        double raw[3][3];
        for (int i = 0; i < 3; ++i)
            for (int j = i; j < 3; ++j) a(i, j) = a(j, i) = rng.uniform(-scale, scale);
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) raw[i][j] = a(i, j);
        const auto eig = spectral::sym_eigenvalues(a);
        const auto roots = oracle::char_poly_roots3(raw);
        for (int i = 0; i < 3; ++i) worst_root = std::max(worst_root, std::abs(eig[i] - roots[i]));
        const double sum = eig[0] + eig[1] + eig[2];
        worst_trace = std::max(worst_trace, std::abs(sum - a.trace()) / std::max(1.0, std::abs(a.trace())));
    }
    Outcome o;
    o.pass = worst_root <= 1e-8 && worst_trace <= 1e-10;
    o.detail = fmt("1000 random symmetric 3x3: max |lambda - root| %.3g, max trace error %.3g", worst_root, worst_trace);
    return o;
}

Outcome prr_exactness() {
    Outcome o;
    const double hand = eval::prr(instances({0, 5, 1, 6}, {1, 0, 1, 0})).prr;
    if (hand != 1.0) o.pass = false;

    fixtures::Rng rng(99);
    std::size_t sets = 0, perms = 0;
    bool dominance = true, anti_min = true, perfect_max = true;
    for (std::size_t n = 2; n <= 7; ++n)
        for (int trial = 0; trial < 5; ++trial) {
            std::vector<double> q(n);
            for (auto& x : q) x = std::round(rng.uniform() * 4) / 4;
            if (std::all_of(q.begin(), q.end(), [&](double v) { return v == q[0]; })) q[0] = q[0] < 0.5 ? 1.0 : 0.0;
            ++sets;
            std::vector<std::size_t> order(n);
            std::iota(order.begin(), order.end(), 0);
            double lo = 1e300, hi = -1e300;
            do {
                std::vector<double> u(n);
                for (std::size_t i = 0; i < n; ++i) u[order[i]] = static_cast<double>(i);
                const auto r = eval::prr(instances(u, q));
                ++perms;
                lo = std::min(lo, r.prr);
                hi = std::max(hi, r.prr);
                for (std::size_t k = 0; k < r.oracle.size(); ++k)
                    if (r.oracle[k].quality < r.estimator[k].quality - 1e-12) dominance = false;
            } while (std::next_permutation(order.begin(), order.end()));
            std::vector<std::size_t> by_q(n);
            std::iota(by_q.begin(), by_q.end(), 0);
            std::stable_sort(by_q.begin(), by_q.end(), [&](auto a, auto b) { return q[a] > q[b]; });
            std::vector<double> perfect(n), anti(n);
            for (std::size_t i = 0; i < n; ++i) {
                perfect[by_q[i]] = static_cast<double>(i);
                anti[by_q[i]] = -static_cast<double>(i);
            }
            if (std::abs(eval::prr(instances(perfect, q)).prr - 1.0) > 1e-12 || std::abs(hi - 1.0) > 1e-12)
                perfect_max = false;
            if (std::abs(eval::prr(instances(anti, q)).prr - lo) > 1e-12) anti_min = false;
        }

    fixtures::Rng sim_rng(424242);
    std::vector<double> u(10000), q(10000);
    for (auto& x : u) x = sim_rng.uniform();
    for (auto& x : q) x = sim_rng.uniform();
    const double independent = eval::prr(instances(u, q)).prr;

    o.pass = o.pass && dominance && anti_min && perfect_max && std::abs(independent) < 0.05;
    o.detail = fmt("n=4 hand case PRR=%.17g; %zu sets / %zu permutations (n<=7): dominance %s, perfect max %s, "
                   "anti-oracle min %s; independent n=10000 PRR=%.4f",
                   hand, sets, perms, dominance ? "ok" : "VIOLATED", perfect_max ? "ok" : "VIOLATED",
                   anti_min ? "ok" : "VIOLATED", independent);
    return o;
}

Outcome monotone_invariance() {
    fixtures::Rng rng(777);
    std::size_t identical = 0;
    for (int k = 0; k < 50; ++k) {
        const std::size_t n = 10 + rng.below(500);
        std::vector<double> u(n), q(n), e(n), a(n);
        for (auto& x : u) x = rng.uniform(-5, 5);
        for (auto& x : q) x = rng.uniform();
        for (std::size_t i = 0; i < n; ++i) {
            e[i] = std::exp(u[i]);
            a[i] = 3 * u[i] + 7;
        }
        const double base = eval::prr(instances(u, q)).prr;
        if (eval::prr(instances(e, q)).prr == base && eval::prr(instances(a, q)).prr == base) ++identical;
    }
    return {identical == 50, fmt("%zu/50 instance sets bit-identical under exp(u) and 3u+7", identical)};
}

double pipeline_prr(const std::filesystem::path& dir, std::uint64_t seed, double rho, const std::string& estimator) {
    app::RunConfig c;
    c.workers = 4;
    c.synth.seed = seed;
    c.synth.rho = rho;
    c.synth.n_records = 600;
    c.records = dir / "records.jsonl";
    c.output = c.records;
    app::cmd_synth(c);
    c.estimators = {Estimator::cocoa_msp, Estimator::msp};
    c.output = dir / "scores.jsonl";
    app::ProviderSession session(c);
    app::cmd_score(c, session);
    c.scores = c.output;
    c.report = dir / "report.json";
    app::cmd_evaluate(c);
    auto j = nlohmann::json::parse(fixtures::read_file(c.report));
    return j["datasets"]["default"][estimator]["prr"].get<double>();
}

Outcome planted_signal() {
    const auto t0 = Clock::now();
    fixtures::TempDir dir;
    const std::vector<double> rhos{0.0, 0.3, 0.6, 0.9};
    Outcome o;
    std::ostringstream detail;
    for (std::uint64_t seed : {1, 2, 3}) {
        std::vector<double> prrs;
        for (double rho : rhos) prrs.push_back(pipeline_prr(dir.path(), seed, rho, "cocoa_msp"));
        const double msp = pipeline_prr(dir.path(), seed, 0.9, "msp");
        const bool increasing = std::adjacent_find(prrs.begin(), prrs.end(), std::greater_equal<>()) == prrs.end();
        const bool beats = prrs.back() > msp;
        o.pass = o.pass && increasing && beats;
        detail << "seed " << seed << ": cocoa_msp " << fmt("%.3f/%.3f/%.3f/%.3f", prrs[0], prrs[1], prrs[2], prrs[3])
               << fmt(" vs msp %.3f at rho=0.9; ", msp);
    }
    const double secs = seconds_since(t0);
    o.pass = o.pass && secs < 300.0;
    detail << fmt("%.1fs", secs);
    o.detail = detail.str();
    return o;
}

Outcome collapse_identities() {
    fixtures::Rng rng(2718);
    double worst = 0.0;
    std::size_t cases = 0;
    LexicalScorer zero_relevance({BackendKind::jaccard, {}});
    for (int k = 0; k < 500; ++k) {
        auto rec = fixtures::random_record(rng, "c" + std::to_string(k));
        const std::size_t m = rec.samples.size();
        estimators::SemanticClustering singletons;
        singletons.num_clusters = m;
        for (std::size_t i = 0; i < m; ++i) singletons.assignments.push_back(i);
        const double mcse = estimators::mcse(rec.samples);
        worst = std::max(worst, sweep::rel_err(estimators::semantic_entropy(rec.samples, singletons), mcse));

        const auto& y = rec.samples[0];
        const std::vector<double> uniform(y.length(), rng.uniform(0.01, 1.0));
        worst = std::max(worst, sweep::rel_err(estimators::token_sar(y, uniform).value, estimators::ppl(y)));

        double direct = 0.0;
        for (const auto& s : rec.samples) direct -= std::log(oracle::prob(s));
        direct /= static_cast<double>(m);
        const double t = rng.coin() ? 0.001 : rng.uniform(0.01, 10);
        worst = std::max(worst, sweep::rel_err(estimators::sentence_sar(rec.samples, sim(Matrix::identity(m)), t),
                                               direct));
        cases += 3;
    }
    return {worst <= 1e-9, fmt("%zu identity checks (semantic entropy/mcse, token_sar/ppl, sentence_sar/-mean log P), "
                               "worst rel err %.3g",
                               cases, worst)};
}

std::vector<std::string> full_run(const std::filesystem::path& dir, std::size_t workers) {
    app::RunConfig c;
    c.workers = workers;
    c.synth.seed = 99;
    c.synth.n_records = 150;
    c.records = dir / "records.jsonl";
    c.output = c.records;
    app::cmd_synth(c);

    c.backend = SimilarityBackend::parse("rouge_l");
    c.output = dir / "augmented.jsonl";
    app::ProviderSession sim_session(c);
    app::cmd_sim(c, sim_session);

    c.records = dir / "augmented.jsonl";
    c.backend = SimilarityBackend::parse("precomputed:rouge_l");
    c.estimators = all_estimators();
    c.estimators.erase(std::remove_if(c.estimators.begin(), c.estimators.end(),
                                      [](Estimator e) {
                                          return e == Estimator::semantic_entropy || e == Estimator::num_sem_sets;
                                      }),
                       c.estimators.end());
    c.output = dir / "scores.jsonl";
    app::ProviderSession score_session(c);
    app::cmd_score(c, score_session);

    c.scores = c.output;
    c.report = dir / "report.json";
    c.curves = dir / "curves";
    app::cmd_evaluate(c);

    c.datasets = {{"synth", dir / "records.jsonl", {}}};
    c.backends = {SimilarityBackend::parse("jaccard"), SimilarityBackend::parse("rouge_l")};
    c.strategies = {TargetStrategy::greedy, TargetStrategy::best};
    c.estimators = {Estimator::cocoa_msp, Estimator::cocoa_ppl, Estimator::deg_mat, Estimator::sar};
    c.output = dir / "ablation.csv";
    app::ProviderSession ablate_session(c);
    app::cmd_ablate(c, ablate_session);

    std::vector<std::string> files;
    for (const char* f : {"records.jsonl", "augmented.jsonl", "scores.jsonl", "report.json", "ablation.csv"})
        files.push_back(fixtures::read_file(dir / f));
    std::vector<std::filesystem::path> curves;
    for (const auto& e : std::filesystem::directory_iterator(dir / "curves")) curves.push_back(e.path());
    std::sort(curves.begin(), curves.end());
    for (const auto& p : curves) files.push_back(p.filename().string() + "\n" + fixtures::read_file(p));
    return files;
}

Outcome determinism() {
    fixtures::TempDir a, b, c;
    const auto first = full_run(a.path(), 4);
    const auto second = full_run(b.path(), 4);
    const auto serial = full_run(c.path(), 1);
    std::size_t bytes = 0;
    for (const auto& f : first) bytes += f.size();
    const bool same = first == second && first == serial;
    return {same, fmt("synth -> sim -> score -> evaluate -> ablate, %zu files / %zu bytes, identical across reruns "
                      "and worker counts: %s",
                      first.size(), bytes, same ? "yes" : "no")};
}

} // namespace

int main() {
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
        {"formula-oracle", formula_oracle},
        {"closed-form-cases", closed_forms},
        {"spectral-solver", spectral_solver},
        {"prr-exactness", prr_exactness},
        {"monotone-invariance", monotone_invariance},
        {"planted-signal", planted_signal},
        {"collapse-identities", collapse_identities},
        {"determinism", determinism},
    };
    int failed = 0;
    for (const auto& [name, fn] : criteria) {
        Outcome o;
        try {
            o = fn();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        std::printf("%s %s: %s\n", o.pass ? "PASS" : "FAIL", name.c_str(), o.detail.c_str());
        std::fflush(stdout);
        failed += !o.pass;
    }
    std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
    return failed ? 1 : 0;
}
