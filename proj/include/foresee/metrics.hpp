#pragma once

#include <array>
#include <string>
#include <vector>

#include "foresee/classifiers.hpp"
#include "foresee/common.hpp"
#include "foresee/dataset.hpp"

namespace foresee {

enum class OddsAggregation { mean, max };

std::string to_string(OddsAggregation agg);

/// Confusion counts split by group; index 0 = non-protected, 1 = protected.
struct GroupConfusion {
    std::array<std::size_t, 2> tp{};
    std::array<std::size_t, 2> fp{};
    std::array<std::size_t, 2> tn{};
    std::array<std::size_t, 2> fn{};

    std::size_t total(int g) const { return tp[g] + fp[g] + tn[g] + fn[g]; }
    std::size_t positives(int g) const { return tp[g] + fn[g]; }
    std::size_t negatives(int g) const { return fp[g] + tn[g]; }

    // each throws PreconditionError when the denominator is empty
    double tpr(int g) const;
    double fpr(int g) const;
    double error_rate(int g) const;
    double positive_prediction_rate(int g) const;
};

/// All three vectors are positionally aligned.
GroupConfusion confusion_of(const std::vector<std::uint8_t>& preds,
                            const std::vector<std::uint8_t>& labels,
                            const std::vector<std::uint8_t>& sensitive);

/// |P(pred=1 | protected) - P(pred=1 | non-protected)|
double demographic_parity_gap(const std::vector<std::uint8_t>& preds,
                              const std::vector<std::uint8_t>& sensitive);

/// |TPR_protected - TPR_non-protected|
double equal_opportunity_gap(const std::vector<std::uint8_t>& preds,
                             const std::vector<std::uint8_t>& labels,
                             const std::vector<std::uint8_t>& sensitive);

/// Aggregate of the TPR gap and FPR gap (mean by default, max behind the flag).
double equalized_odds_gap(const std::vector<std::uint8_t>& preds,
                          const std::vector<std::uint8_t>& labels,
                          const std::vector<std::uint8_t>& sensitive,
                          OddsAggregation agg = OddsAggregation::mean);

/// |error rate in protected group - error rate in non-protected group|
double misclassification_gap(const std::vector<std::uint8_t>& preds,
                             const std::vector<std::uint8_t>& labels,
                             const std::vector<std::uint8_t>& sensitive);

/// Positions of the ceil(gamma*n) highest-risk rows, ties broken by lower
/// position. Returned sorted ascending.
IndexSet top_risk_subset(const std::vector<double>& risks, double gamma);

/// Misclassification gap restricted to the top-gamma rows by risk. A witness
/// lower bound: the max over all subsets of mass >= gamma is not searched.
double subpop_misclassification_gap(const std::vector<std::uint8_t>& preds,
                                    const std::vector<std::uint8_t>& labels,
                                    const std::vector<std::uint8_t>& sensitive,
                                    const std::vector<double>& risks, double gamma);

/// Metrics for one evaluation slice. Gaps that cannot be computed on the slice
/// (a group absent, or no positives/negatives where a rate needs them) come
/// back as NaN with an explanatory note instead of failing the whole report.
struct SubsetMetrics {
    std::string subset;  // "all", "high", "low"
    std::size_t count = 0;
    double accuracy = 0.0;
    double f1 = 0.0;
    double dem_parity = 0.0;
    double opportunity = 0.0;
    double odds = 0.0;
    double mis_gap = 0.0;
    GroupConfusion confusion;
    std::vector<std::string> notes;
};

struct ClassifierEval {
    std::string classifier;
    bool convergence_warning = false;
    std::vector<SubsetMetrics> subsets;
};

struct FairnessReport {
    std::string dataset;
    std::string strategy = "none";
    double lambda = 0.5;
    OddsAggregation odds_agg = OddsAggregation::mean;
    std::size_t train_count = 0;
    std::size_t test_count = 0;
    std::vector<ClassifierEval> classifiers;

    const SubsetMetrics* find(const std::string& classifier, const std::string& subset) const;
};

SubsetMetrics compute_subset_metrics(const std::string& name,
                                     const std::vector<std::uint8_t>& preds,
                                     const std::vector<std::uint8_t>& labels,
                                     const std::vector<std::uint8_t>& sensitive,
                                     OddsAggregation agg);

struct EvaluationConfig {
    std::vector<ClassifierKind> kinds{ClassifierKind::logistic, ClassifierKind::random_forest,
                                      ClassifierKind::knn, ClassifierKind::linear_svm};
    ClassifierParams params;
    double lambda = 0.5;
    OddsAggregation odds_agg = OddsAggregation::mean;
    unsigned threads = 1;
};

/// Trains each configured classifier on `train`, predicts on `test`, and
/// reports metrics on the full test slice plus its high-risk (risk > lambda)
/// and low-risk partitions. `test_risks` is aligned with `test`.
FairnessReport evaluate_fairness(const Dataset& data, const IndexSet& train, const IndexSet& test,
                                 const std::vector<double>& test_risks,
                                 const EvaluationConfig& cfg);

}  // namespace foresee
