#include "foresee/forest.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <optional>

namespace foresee {

namespace {

std::size_t fraction_count(double fraction, std::size_t n, const char* what) {
    if (!(fraction > 0.0 && fraction <= 1.0))
        throw PreconditionError(std::string(what) + " fraction must lie in (0, 1]");
    auto c = static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(n)));
    return std::clamp<std::size_t>(c, 1, n);
}

struct Candidate {
    std::optional<TreeModel> tree;
    double accuracy = 0.0;
    bool accepted = false;
};

Candidate fit_candidate(const Dataset& data, const FeatureView& view, const IndexSet& train,
                        const ForestParams& params, std::size_t k) {
    Rng rng(derive_seed(params.seed, k));

    IndexSet pool = train;
    shuffle(pool, rng);
    std::size_t n_sub = fraction_count(params.instance_fraction, pool.size(), "instance");
    IndexSet sub(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(n_sub));
    IndexSet held_out(pool.begin() + static_cast<std::ptrdiff_t>(n_sub), pool.end());

    IndexSet all_features(view.cols);
    for (std::size_t j = 0; j < view.cols; ++j) all_features[j] = j;
    std::size_t n_feat = fraction_count(params.feature_fraction, view.cols, "feature");
    IndexSet feats = sample_without_replacement(all_features, n_feat, rng);

    Candidate c;
    c.tree = fit_tree(view, data.labels, data.sensitive, sub, feats, params.tree,
                      derive_seed(params.seed, k));
    c.accuracy = accuracy(*c.tree, view, data.labels, held_out.empty() ? sub : held_out);
    c.accepted = c.accuracy >= params.beta;
    return c;
}

}  // namespace

Forest build_forest(const Dataset& data, const IndexSet& train, const ForestParams& params,
                    int threads) {
    if (train.empty()) throw PreconditionError("build_forest: empty training set");
    if (params.m_target < 1) throw PreconditionError("build_forest: m_target must be >= 1");
    if (!(params.beta > 0.0 && params.beta < 1.0))
        throw PreconditionError("build_forest: beta must lie in (0, 1)");
    if (params.attempts_budget() < params.m_target)
        throw PreconditionError("build_forest: max_attempts smaller than m_target");
    bool has[2] = {false, false};
    for (std::size_t i : train) has[data.sensitive[i] != 0] = true;
    if (!has[0] || !has[1])
        throw PreconditionError("build_forest: training set lacks one sensitive group");

    FeatureView view = make_view(data, params.include_sensitive);

    Forest forest;
    forest.params = params;
    forest.feature_space_width = view.cols;

    // candidates are fitted in fixed-size waves and scanned in index order, so
    // the retained set never depends on the thread count
    const std::size_t budget = params.attempts_budget();
    const std::size_t wave = std::clamp<std::size_t>(static_cast<std::size_t>(threads) * 4,
                                                     8, budget);
    double best_seen = 0.0;
    std::size_t next = 0;
    while (next < budget && forest.trees.size() < params.m_target) {
        std::size_t hi = std::min(budget, next + wave);
        std::vector<Candidate> batch(hi - next);
        parallel_for(batch.size(), threads, [&](std::size_t j) {
            batch[j] = fit_candidate(data, view, train, params, next + j);
        });
        for (std::size_t j = 0; j < batch.size() && forest.trees.size() < params.m_target; ++j) {
            Candidate& c = batch[j];
            best_seen = std::max(best_seen, c.accuracy);
            ++forest.attempts;
            if (c.accepted) {
                forest.trees.push_back({std::move(*c.tree), c.accuracy, next + j});
            } else {
                ++forest.rejected_count;
            }
        }
        next = hi;
    }

    if (forest.trees.empty()) {
        char buf[64];
        std::snprintf(buf, sizeof buf, "%.4f", best_seen);
        throw EstimatorError("beta too strict: no tree reached beta=" +
                             std::to_string(params.beta) + " after " +
                             std::to_string(forest.attempts) +
                             " attempts (best accuracy " + buf + ")");
    }
    return forest;
}

double leaf_risk(const LeafStats& stats, bool optimistic_absent) {
    const std::size_t ns = stats.count[0], s = stats.count[1];
    if (ns == 0 && s == 0) return 1.0;  // unreachable for training-built leaves
    if (ns > 0 && s > 0) {
        // |err_s - err_ns| reduces to the positive-rate gap under either
        // predicted class; this form keeps that identity exact in floats
        double ps = static_cast<double>(stats.positives[1]) / static_cast<double>(s);
        double pns = static_cast<double>(stats.positives[0]) / static_cast<double>(ns);
        return std::abs(ps - pns);
    }
    if (optimistic_absent) return 0.0;
    int g = s > 0 ? 1 : 0;
    double err =
        static_cast<double>(stats.misclassified[g]) / static_cast<double>(stats.count[g]);
    return 1.0 - err;  // |err_present - err_absent| with err_absent = 1
}

double tree_risk(const TreeModel& tree, const FeatureView& view, std::size_t row,
                 bool optimistic_absent) {
    return leaf_risk(tree.leaf_node(view, row).stats, optimistic_absent);
}

double tree_risk(const TreeModel& tree, std::span<const double> x, bool optimistic_absent) {
    return leaf_risk(tree.leaf_node(x).stats, optimistic_absent);
}

namespace {

template <typename LeafFn>
double mean_tree_risk(const Forest& forest, LeafFn&& leaf_of_tree) {
    if (forest.trees.empty()) throw PreconditionError("foresee_risk: empty forest");
    double sum = 0.0;
    for (const RetainedTree& rt : forest.trees)
        sum += leaf_risk(leaf_of_tree(rt.tree), forest.params.optimistic_absent);
    return sum / static_cast<double>(forest.trees.size());
}

}  // namespace

double foresee_risk(const Forest& forest, const FeatureView& view, std::size_t row) {
    return mean_tree_risk(forest, [&](const TreeModel& t) -> const LeafStats& {
        return t.leaf_node(view, row).stats;
    });
}

double foresee_risk(const Forest& forest, std::span<const double> x) {
    return mean_tree_risk(
        forest, [&](const TreeModel& t) -> const LeafStats& { return t.leaf_node(x).stats; });
}

std::size_t RiskReport::high_count() const {
    std::size_t c = 0;
    for (const RiskRow& r : rows) c += r.high;
    return c;
}

RiskReport score_rows(const IndexSet& indices, double lambda, std::string estimator,
                      const std::function<double(std::size_t)>& risk_of, int threads) {
    if (!(lambda >= 0.0 && lambda <= 1.0))
        throw PreconditionError("score_rows: lambda must lie in [0, 1]");
    RiskReport report;
    report.lambda = lambda;
    report.estimator = std::move(estimator);
    report.rows.resize(indices.size());
    parallel_for(indices.size(), threads, [&](std::size_t k) {
        double r = risk_of(indices[k]);
        report.rows[k] = {indices[k], r, r > lambda};
    });
    return report;
}

RiskReport score_dataset(const Forest& forest, const Dataset& data, const IndexSet& indices,
                         double lambda, int threads) {
    FeatureView view = make_view(data, forest.params.include_sensitive);
    RiskReport report = score_rows(
        indices, lambda, "foresee", [&](std::size_t i) { return foresee_risk(forest, view, i); },
        threads);
    report.model_trees = forest.size();
    report.seed = forest.params.seed;
    return report;
}

}  // namespace foresee
