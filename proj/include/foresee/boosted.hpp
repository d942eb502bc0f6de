#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "foresee/dataset.hpp"
#include "foresee/forest.hpp"

namespace foresee {

struct BoostParams {
    int rounds = 200;
    double learning_rate = 0.1;
    int max_depth = 3;
    std::size_t min_leaf = 10;
    std::uint64_t seed = 0;
};

struct RegressionNode {
    int feature = -1;  // -1 marks a leaf
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    double value = 0.0;

    bool is_leaf() const { return feature < 0; }
};

struct RegressionTree {
    std::vector<RegressionNode> nodes;

    template <typename F>
    double route(F&& value_at) const {
        const RegressionNode* n = &nodes.front();
        while (!n->is_leaf())
            n = &nodes[static_cast<std::size_t>(value_at(static_cast<std::size_t>(n->feature)) <=
                                                        n->threshold
                                                    ? n->left
                                                    : n->right)];
        return n->value;
    }
};

// one boosted ensemble over (encoded features, sensitive) represents both
// response surfaces; the sensitive input is overridden at query time
struct AdditiveModel {
    double base = 0.0;
    double learning_rate = 0.1;
    int rounds = 0;
    std::vector<RegressionTree> trees;
    std::size_t sensitive_column = 0;

    // x spans the encoded features only; s fills the sensitive slot
    double raw_score(std::span<const double> x, int s) const;
    double predict(std::span<const double> x, int s) const;  // raw clamped to [0,1]
    double raw_score(const FeatureView& plain_view, std::size_t row, int s) const;
    double predict(const FeatureView& plain_view, std::size_t row, int s) const;
};

AdditiveModel fit_additive(const Dataset& data, const IndexSet& train, const BoostParams& params);

double baseline_risk(const AdditiveModel& model, std::span<const double> x);
double baseline_risk(const AdditiveModel& model, const FeatureView& plain_view, std::size_t row);

RiskReport score_dataset_baseline(const AdditiveModel& model, const Dataset& data,
                                  const IndexSet& indices, double lambda, int threads = 1);

}  // namespace foresee
