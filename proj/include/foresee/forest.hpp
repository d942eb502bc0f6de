#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "foresee/dataset.hpp"
#include "foresee/tree.hpp"

namespace foresee {

struct ForestParams {
    std::size_t m_target = 100;      // trees to retain
    double instance_fraction = 0.6;  // sub-sample share per tree, without replacement
    double feature_fraction = 0.7;
    double beta = 0.55;              // held-out accuracy needed to retain a tree
    bool include_sensitive = true;   // sensitive attribute as a candidate split feature
    bool optimistic_absent = false;  // absent-group leaf error 0 instead of 1
    TreeParams tree;
    std::uint64_t seed = 0;
    std::size_t max_attempts = 0;    // 0 = 5 * m_target

    std::size_t attempts_budget() const { return max_attempts ? max_attempts : 5 * m_target; }
};

struct RetainedTree {
    TreeModel tree;
    double validation_accuracy = 0.0;
    std::size_t candidate_index = 0;
};

struct Forest {
    std::vector<RetainedTree> trees;
    ForestParams params;
    std::size_t rejected_count = 0;
    std::size_t attempts = 0;
    std::size_t feature_space_width = 0;  // encoded columns, plus the sensitive slot when used

    std::size_t size() const { return trees.size(); }
};

struct RiskRow {
    std::size_t row_id = 0;
    double risk = 0.0;
    bool high = false;
};

struct RiskReport {
    std::vector<RiskRow> rows;
    double lambda = 0.5;
    std::string estimator;            // "foresee" or "baseline"
    std::size_t model_trees = 0;
    std::uint64_t seed = 0;

    std::size_t high_count() const;
    std::size_t low_count() const { return rows.size() - high_count(); }
};

Forest build_forest(const Dataset& data, const IndexSet& train, const ForestParams& params,
                    int threads = 1);

// absolute group error-rate difference at a leaf; an absent group counts as
// error 1 (pessimistic) or mirrors the present group (optimistic)
double leaf_risk(const LeafStats& stats, bool optimistic_absent);

double tree_risk(const TreeModel& tree, const FeatureView& view, std::size_t row,
                 bool optimistic_absent);
double tree_risk(const TreeModel& tree, std::span<const double> x, bool optimistic_absent);

double foresee_risk(const Forest& forest, const FeatureView& view, std::size_t row);
double foresee_risk(const Forest& forest, std::span<const double> x);

// shared by both estimators: evaluate risk_of per instance and partition at lambda
RiskReport score_rows(const IndexSet& indices, double lambda, std::string estimator,
                      const std::function<double(std::size_t)>& risk_of, int threads = 1);

RiskReport score_dataset(const Forest& forest, const Dataset& data, const IndexSet& indices,
                         double lambda, int threads = 1);

}  // namespace foresee
