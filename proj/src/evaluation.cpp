#include "cocoa/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

namespace cocoa::eval {

namespace {

void validate(std::span<const ScoredInstance> instances, double max_rejection) {
    if (instances.size() < 2) throw DataError("rejection curves need at least 2 instances");
    if (!(max_rejection > 0.0 && max_rejection <= 1.0)) throw DataError("max_rejection must lie in (0, 1]");
    for (const auto& x : instances) {
        if (!std::isfinite(x.uncertainty))
            throw DataError("instance '" + x.record_id + "' has a non-finite uncertainty");
        if (!(x.quality >= 0.0 && x.quality <= 1.0))
            throw DataError("instance '" + x.record_id + "' has quality outside [0,1]");
    }
}

// Instance order in which items are retained longest-first: rejection
// removes from the back.
std::vector<std::size_t> retention_order(std::span<const ScoredInstance> xs, Ranking ranking) {
    std::vector<std::size_t> idx(xs.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    if (ranking == Ranking::estimator) {
        std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
            if (xs[a].uncertainty != xs[b].uncertainty) return xs[a].uncertainty < xs[b].uncertainty;
            return xs[a].record_id < xs[b].record_id;
        });
    } else if (ranking == Ranking::oracle) {
        std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
            if (xs[a].quality != xs[b].quality) return xs[a].quality > xs[b].quality;
            return xs[a].record_id < xs[b].record_id;
        });
    }
    return idx;
}

double area(const Curve& c) {
    double s = 0.0;
    for (const auto& p : c) s += p.quality;
    return s / static_cast<double>(c.size());
}

std::string fmt(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

} // namespace

std::size_t rejection_steps(std::size_t n, double max_rejection) {
    // The relative nudge keeps products like 100 * 0.29 from flooring to 28.
    return static_cast<std::size_t>(std::floor(static_cast<double>(n) * max_rejection * (1.0 + 1e-12)));
}

Curve rejection_curve(std::span<const ScoredInstance> instances, Ranking ranking, double max_rejection) {
    validate(instances, max_rejection);
    const std::size_t n = instances.size();
    const std::size_t steps = std::min(rejection_steps(n, max_rejection), n - 1);
    const double nd = static_cast<double>(n);
    Curve curve;
    curve.reserve(steps + 1);
    if (ranking == Ranking::random) {
        double total = 0.0;
        for (const auto& x : instances) total += x.quality;
        const double mean = total / nd;
        for (std::size_t k = 0; k <= steps; ++k) curve.push_back({static_cast<double>(k) / nd, mean});
        return curve;
    }
    const auto order = retention_order(instances, ranking);
    std::vector<double> prefix(n + 1, 0.0);
    for (std::size_t i = 0; i < n; ++i) prefix[i + 1] = prefix[i] + instances[order[i]].quality;
    for (std::size_t k = 0; k <= steps; ++k) {
        const std::size_t kept = n - k;
        curve.push_back({static_cast<double>(k) / nd, prefix[kept] / static_cast<double>(kept)});
    }
    return curve;
}

PrrReport prr(std::span<const ScoredInstance> instances, double max_rejection) {
    PrrReport r;
    r.estimator = rejection_curve(instances, Ranking::estimator, max_rejection);
    r.oracle = rejection_curve(instances, Ranking::oracle, max_rejection);
    r.random = rejection_curve(instances, Ranking::random, max_rejection);
    r.auc_unc = area(r.estimator);
    r.auc_oracle = area(r.oracle);
    r.auc_rnd = area(r.random);
    r.n = instances.size();
    r.max_rejection = max_rejection;

    const bool constant_quality = std::all_of(instances.begin(), instances.end(), [&](const ScoredInstance& x) {
        return x.quality == instances.front().quality;
    });
    const double denom = r.auc_oracle - r.auc_rnd;
    if (constant_quality || r.estimator.size() < 2 || !(denom > 0.0))
        throw UndefinedPrrError("undefined PRR: oracle and random rejection curves coincide");
    r.prr = (r.auc_unc - r.auc_rnd) / denom;
    return r;
}

nlohmann::json PrrReport::to_json() const {
    auto curve_json = [](const Curve& c) {
        nlohmann::json a = nlohmann::json::array();
        for (const auto& p : c) a.push_back({p.rejection, p.quality});
        return a;
    };
    return {
        {"prr", prr},
        {"auc_unc", auc_unc},
        {"auc_oracle", auc_oracle},
        {"auc_rnd", auc_rnd},
        {"n", n},
        {"max_rejection", max_rejection},
        {"curves", {{"estimator", curve_json(estimator)}, {"oracle", curve_json(oracle)}, {"random", curve_json(random)}}},
    };
}

std::string PrrReport::curves_csv() const {
    std::string out = "rejection,estimator,oracle,random\n";
    for (std::size_t k = 0; k < estimator.size(); ++k)
        out += fmt(estimator[k].rejection) + "," + fmt(estimator[k].quality) + "," + fmt(oracle[k].quality) + "," +
               fmt(random[k].quality) + "\n";
    return out;
}

std::map<std::string, double> aggregate_mean_prr(const std::map<std::string, std::optional<double>>& prr_by_dataset,
                                                 const TaskGroups& groups) {
    std::map<std::string, double> out;
    for (const auto& [group, datasets] : groups) {
        if (datasets.empty()) throw DataError("task group '" + group + "' is empty");
        double sum = 0.0;
        for (const auto& ds : datasets) {
            auto it = prr_by_dataset.find(ds);
            if (it == prr_by_dataset.end())
                throw DataError("task group '" + group + "' lists unknown dataset '" + ds + "'");
            if (!it->second)
                throw UndefinedPrrError("task group '" + group + "': dataset '" + ds + "' has an undefined PRR");
            sum += *it->second;
        }
        out[group] = sum / static_cast<double>(datasets.size());
    }
    return out;
}

TaskGroups default_task_groups() {
    return {
        {"qa", {"triviaqa", "mmlu", "coqa", "gsm8k"}},
        {"nmt", {"wmt14_fren", "wmt19_deen"}},
        {"sum", {"xsum"}},
    };
}

} // namespace cocoa::eval
