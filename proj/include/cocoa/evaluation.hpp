#pragma once

// Prediction-rejection evaluation.
//
// Instances are rejected one at a time (most uncertain first) up to
// floor(n * max_rejection); each curve point is the mean quality of what is
// retained. AUC is the mean over the K+1 grid points, and
//   PRR = (AUC_unc - AUC_rnd) / (AUC_oracle - AUC_rnd).

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "cocoa/error.hpp"

namespace cocoa::eval {

constexpr double kDefaultMaxRejection = 0.5;

struct ScoredInstance {
    std::string record_id;
    double uncertainty = 0.0;
    double quality = 0.0;
};

enum class Ranking { estimator, oracle, random };

struct CurvePoint {
    double rejection = 0.0;
    double quality = 0.0;
};

using Curve = std::vector<CurvePoint>;

class UndefinedPrrError : public DataError {
public:
    using DataError::DataError;
};

struct PrrReport {
    Curve estimator, oracle, random;
    double auc_unc = 0.0, auc_oracle = 0.0, auc_rnd = 0.0;
    double prr = 0.0;
    std::size_t n = 0;
    double max_rejection = kDefaultMaxRejection;

    nlohmann::json to_json() const;
    // "rejection,estimator,oracle,random" plus one line per grid point.
    std::string curves_csv() const;
};

// Number of rejection steps K for n instances.
std::size_t rejection_steps(std::size_t n, double max_rejection);

Curve rejection_curve(std::span<const ScoredInstance> instances, Ranking ranking,
                      double max_rejection = kDefaultMaxRejection);

// Throws UndefinedPrrError when the oracle and random areas coincide.
PrrReport prr(std::span<const ScoredInstance> instances, double max_rejection = kDefaultMaxRejection);

using TaskGroups = std::map<std::string, std::vector<std::string>>;

// Unweighted mean PRR per group. A missing or undefined (nullopt) dataset
// PRR poisons its group and raises UndefinedPrrError.
std::map<std::string, double> aggregate_mean_prr(const std::map<std::string, std::optional<double>>& prr_by_dataset,
                                                 const TaskGroups& groups);

// QA / NMT / SUM grouping of the standard benchmark datasets.
TaskGroups default_task_groups();

} // namespace cocoa::eval
