#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "foresee/classifiers.hpp"
#include "foresee/dataset.hpp"
#include "foresee/metrics.hpp"

namespace foresee {

enum class Strategy {
    pre_train_and_test,
    pre_test_only,
    post_demP,
    post_eqODD,
    post_eqOPP,
};

std::string to_string(Strategy s);
Strategy strategy_from_string(const std::string& name);
bool is_postprocess(Strategy s);

enum class FilterMode { train_and_test, test_only };

struct FilteredSplit {
    IndexSet train;
    IndexSet test;
    std::size_t removed_train = 0;
    std::size_t removed_test = 0;
};

/// Drops rows whose risk exceeds lambda. test_only leaves the training split
/// untouched. Risks align positionally with their index sets. Raises when a
/// filtered split ends up empty or loses one of the sensitive groups.
FilteredSplit preprocess_filter(const Dataset& data, const IndexSet& train, const IndexSet& test,
                                const std::vector<double>& train_risks,
                                const std::vector<double>& test_risks, double lambda,
                                FilterMode mode);

enum class ConstraintKind { dem_parity, eq_odds, eq_opportunity };

std::string to_string(ConstraintKind c);

struct ThresholdPlan {
    double t_protected = 0.5;
    double t_other = 0.5;
    double constraint_value = 0.0;  // metric on the target subset at the chosen pair
    double error_rate = 0.0;        // target-subset error at the chosen pair
    bool feasible = true;
    ConstraintKind constraint = ConstraintKind::dem_parity;
    double epsilon = 0.0;
    std::size_t grid = 101;
};

struct PostprocessResult {
    ThresholdPlan plan;
    std::vector<std::uint8_t> adjusted;  // aligned with the eval index set
};

/// Exhaustive search over per-group threshold pairs on a uniform grid.
/// Feasible pairs hold the constraint metric at or below epsilon on the rows
/// of `eval` marked in `high_mask`; among them the lowest target-subset error
/// wins, then the smaller threshold gap, then the lower protected threshold,
/// then the lower non-protected one. With no feasible pair, returns the
/// minimum-constraint pair with `feasible` cleared. Adjusted predictions use
/// the selected pair on marked rows and the model's own threshold elsewhere.
PostprocessResult postprocess_thresholds(const ClassifierModel& model, const Dataset& data,
                                         const IndexSet& eval,
                                         const std::vector<std::uint8_t>& high_mask,
                                         ConstraintKind constraint, double epsilon,
                                         std::size_t grid = 101, unsigned threads = 1);

struct MitigationConfig {
    Strategy strategy = Strategy::pre_train_and_test;
    double lambda = 0.5;
    double epsilon = 0.02;
    std::size_t grid = 101;
    // share of the training split set aside to fit post-processing thresholds
    double validation_fraction = 0.25;
    std::uint64_t seed = 0;
    ClassifierParams params;
    OddsAggregation odds_agg = OddsAggregation::mean;
    unsigned threads = 1;
};

struct MitigationOutcome {
    FairnessReport report;
    std::size_t removed_train = 0;
    std::size_t removed_test = 0;
    bool used_thresholds = false;
    ThresholdPlan plan;  // meaningful when used_thresholds
};

/// Runs one classifier under one strategy. Pre-processing refits on the
/// filtered split; post-processing keeps the model and adjusts thresholds fit
/// on a stratified validation slice of the training split, then applies them
/// to the high-risk test rows.
MitigationOutcome run_mitigation(const Dataset& data, const IndexSet& train, const IndexSet& test,
                                 const std::vector<double>& train_risks,
                                 const std::vector<double>& test_risks, ClassifierKind kind,
                                 const MitigationConfig& cfg);

}  // namespace foresee
