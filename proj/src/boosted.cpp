#include "foresee/boosted.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace foresee {

namespace {

// squared-error split quality: sum over children of (sum of residuals)^2 / n
double gain_term(double sum, std::size_t n) { return sum * sum / static_cast<double>(n); }

struct RegBuilder {
    const FeatureView& view;
    const std::vector<double>& residual;
    int max_depth;
    std::size_t min_leaf;
    std::vector<std::size_t> idx;
    std::vector<char> binary;
    std::vector<RegressionNode> nodes;
    std::vector<std::pair<double, double>> scratch;  // (feature value, residual)

    void detect_binary() {
        binary.assign(view.cols, 1);
        for (std::size_t f = 0; f < view.cols; ++f) {
            for (std::size_t i : idx) {
                double v = view.value(i, f);
                if (v != 0.0 && v != 1.0) {
                    binary[f] = 0;
                    break;
                }
            }
        }
    }

    int build(std::size_t lo, std::size_t hi, int depth) {
        std::size_t n = hi - lo;
        double sum = 0.0, mn = residual[idx[lo]], mx = mn;
        for (std::size_t k = lo; k < hi; ++k) {
            double r = residual[idx[k]];
            sum += r;
            mn = std::min(mn, r);
            mx = std::max(mx, r);
        }

        bool splittable = depth < max_depth && n >= 2 * min_leaf && mn != mx;
        double best_s = -std::numeric_limits<double>::infinity();
        int best_f = -1;
        double best_t = 0.0;

        if (splittable) {
            for (std::size_t f = 0; f < view.cols; ++f) {
                if (binary[f]) {
                    std::size_t n0 = 0;
                    double sum0 = 0.0;
                    for (std::size_t k = lo; k < hi; ++k) {
                        std::size_t i = idx[k];
                        if (view.value(i, f) == 0.0) {
                            ++n0;
                            sum0 += residual[i];
                        }
                    }
                    if (n0 < min_leaf || n - n0 < min_leaf) continue;
                    double s = gain_term(sum0, n0) + gain_term(sum - sum0, n - n0);
                    if (s > best_s) {
                        best_s = s;
                        best_f = static_cast<int>(f);
                        best_t = 0.5;
                    }
                    continue;
                }
                scratch.clear();
                for (std::size_t k = lo; k < hi; ++k) {
                    std::size_t i = idx[k];
                    scratch.emplace_back(view.value(i, f), residual[i]);
                }
                std::sort(scratch.begin(), scratch.end(),
                          [](const auto& a, const auto& b) { return a.first < b.first; });
                double left_sum = 0.0;
                for (std::size_t k = 0; k + 1 < n; ++k) {
                    left_sum += scratch[k].second;
                    double v1 = scratch[k].first, v2 = scratch[k + 1].first;
                    if (v1 == v2) continue;
                    std::size_t nl = k + 1;
                    if (n - nl < min_leaf) break;
                    if (nl < min_leaf) continue;
                    double t = v1 + (v2 - v1) / 2;
                    if (t >= v2) t = v1;
                    double s = gain_term(left_sum, nl) + gain_term(sum - left_sum, n - nl);
                    if (s > best_s) {
                        best_s = s;
                        best_f = static_cast<int>(f);
                        best_t = t;
                    }
                }
            }
        }

        if (best_f < 0) {
            RegressionNode leaf;
            leaf.value = sum / static_cast<double>(n);
            nodes.push_back(leaf);
            return static_cast<int>(nodes.size()) - 1;
        }

        auto mid_it = std::partition(idx.begin() + static_cast<std::ptrdiff_t>(lo),
                                     idx.begin() + static_cast<std::ptrdiff_t>(hi),
                                     [&](std::size_t i) {
                                         return view.value(i, static_cast<std::size_t>(best_f)) <=
                                                best_t;
                                     });
        auto mid = static_cast<std::size_t>(mid_it - idx.begin());
        nodes.emplace_back();
        auto self = static_cast<int>(nodes.size()) - 1;
        nodes[static_cast<std::size_t>(self)].feature = best_f;
        nodes[static_cast<std::size_t>(self)].threshold = best_t;
        int left = build(lo, mid, depth + 1);
        int right = build(mid, hi, depth + 1);
        nodes[static_cast<std::size_t>(self)].left = left;
        nodes[static_cast<std::size_t>(self)].right = right;
        return self;
    }
};

}  // namespace

AdditiveModel fit_additive(const Dataset& data, const IndexSet& train, const BoostParams& params) {
    if (train.empty()) throw PreconditionError("fit_additive: empty training set");
    if (params.rounds < 1) throw PreconditionError("fit_additive: rounds must be >= 1");
    if (!(params.learning_rate > 0.0 && params.learning_rate <= 1.0))
        throw PreconditionError("fit_additive: learning_rate must lie in (0, 1]");

    FeatureView view = make_view(data, true);

    AdditiveModel model;
    model.learning_rate = params.learning_rate;
    model.rounds = params.rounds;
    model.sensitive_column = data.encoded().cols;

    double ysum = 0.0;
    for (std::size_t i : train) ysum += data.labels[i];
    model.base = ysum / static_cast<double>(train.size());

    std::vector<double> residual(data.size(), 0.0);
    for (std::size_t i : train) residual[i] = static_cast<double>(data.labels[i]) - model.base;

    RegBuilder b{view, residual, params.max_depth, params.min_leaf};
    b.idx = train;
    b.scratch.reserve(train.size());
    b.detect_binary();

    for (int round = 0; round < params.rounds; ++round) {
        b.nodes.clear();
        b.idx = train;
        b.build(0, b.idx.size(), 0);

        RegressionTree tree;
        tree.nodes = std::move(b.nodes);
        b.nodes = {};
        for (std::size_t i : train) {
            double v = tree.route([&](std::size_t f) { return view.value(i, f); });
            residual[i] -= params.learning_rate * v;
        }
        model.trees.push_back(std::move(tree));
    }
    return model;
}

double AdditiveModel::raw_score(std::span<const double> x, int s) const {
    if (x.size() < sensitive_column)
        throw PreconditionError("additive model: feature vector narrower than the fitted space");
    double acc = 0.0;
    for (const RegressionTree& t : trees)
        acc += t.route([&](std::size_t f) {
            return f == sensitive_column ? static_cast<double>(s) : x[f];
        });
    return base + learning_rate * acc;
}

double AdditiveModel::predict(std::span<const double> x, int s) const {
    return std::clamp(raw_score(x, s), 0.0, 1.0);
}

double AdditiveModel::raw_score(const FeatureView& plain_view, std::size_t row, int s) const {
    double acc = 0.0;
    for (const RegressionTree& t : trees)
        acc += t.route([&](std::size_t f) {
            return f == sensitive_column ? static_cast<double>(s) : plain_view.value(row, f);
        });
    return base + learning_rate * acc;
}

double AdditiveModel::predict(const FeatureView& plain_view, std::size_t row, int s) const {
    return std::clamp(raw_score(plain_view, row, s), 0.0, 1.0);
}

double baseline_risk(const AdditiveModel& model, std::span<const double> x) {
    return std::abs(model.predict(x, 1) - model.predict(x, 0));
}

double baseline_risk(const AdditiveModel& model, const FeatureView& plain_view, std::size_t row) {
    return std::abs(model.predict(plain_view, row, 1) - model.predict(plain_view, row, 0));
}

RiskReport score_dataset_baseline(const AdditiveModel& model, const Dataset& data,
                                  const IndexSet& indices, double lambda, int threads) {
    FeatureView view = make_view(data, false);
    RiskReport report = score_rows(
        indices, lambda, "baseline", [&](std::size_t i) { return baseline_risk(model, view, i); },
        threads);
    report.model_trees = model.trees.size();
    report.seed = 0;
    return report;
}

}  // namespace foresee
