#include "foresee/tree.hpp"

#include <algorithm>
#include <limits>

namespace foresee {

namespace {

// split quality as sum over children of (c0^2 + c1^2)/n; maximizing this is
// equivalent to minimizing the weighted Gini impurity
double purity(std::size_t pos, std::size_t n) {
    double c1 = static_cast<double>(pos);
    double c0 = static_cast<double>(n - pos);
    return (c0 * c0 + c1 * c1) / static_cast<double>(n);
}

struct Builder {
    const FeatureView& view;
    const std::vector<std::uint8_t>& labels;
    const std::vector<std::uint8_t>& sensitive;
    const TreeParams& params;
    const IndexSet& features;  // ascending, de-duplicated
    std::vector<std::size_t> idx;
    std::vector<char> binary;  // per view column, over the instance subset
    std::vector<TreeNode> nodes;
    std::vector<std::pair<double, std::uint8_t>> scratch;
    int leaf_count = 0;

    void detect_binary() {
        binary.assign(view.cols, 0);
        for (std::size_t f : features) {
            bool ok = true;
            for (std::size_t i : idx) {
                double v = view.value(i, f);
                if (v != 0.0 && v != 1.0) {
                    ok = false;
                    break;
                }
            }
            binary[f] = ok ? 1 : 0;
        }
    }

    int make_leaf(std::size_t lo, std::size_t hi, std::size_t pos) {
        TreeNode node;
        std::size_t n = hi - lo;
        node.leaf_id = leaf_count++;
        node.prediction = pos > n - pos ? 1 : 0;
        LeafStats& st = node.stats;
        st.total = n;
        st.total_positives = pos;
        st.prediction_tie = pos * 2 == n;
        for (std::size_t k = lo; k < hi; ++k) {
            std::size_t i = idx[k];
            int g = sensitive[i] != 0;
            ++st.count[g];
            st.positives[g] += labels[i] != 0;
        }
        for (int g = 0; g < 2; ++g)
            st.misclassified[g] =
                node.prediction == 1 ? st.count[g] - st.positives[g] : st.positives[g];
        nodes.push_back(node);
        return static_cast<int>(nodes.size()) - 1;
    }

    int build(std::size_t lo, std::size_t hi, int depth) {
        std::size_t n = hi - lo;
        std::size_t pos = 0;
        for (std::size_t k = lo; k < hi; ++k) pos += labels[idx[k]] != 0;

        bool splittable = depth < params.max_depth && n >= 2 * params.min_leaf && pos != 0 &&
                          pos != n;
        if (!splittable) return make_leaf(lo, hi, pos);

        double best_s = -std::numeric_limits<double>::infinity();
        int best_f = -1;
        double best_t = 0.0;

        for (std::size_t f : features) {
            if (binary[f]) {
                std::size_t n0 = 0, pos0 = 0;
                for (std::size_t k = lo; k < hi; ++k) {
                    std::size_t i = idx[k];
                    if (view.value(i, f) == 0.0) {
                        ++n0;
                        pos0 += labels[i] != 0;
                    }
                }
                if (n0 < params.min_leaf || n - n0 < params.min_leaf) continue;
                double s = purity(pos0, n0) + purity(pos - pos0, n - n0);
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
                scratch.emplace_back(view.value(i, f), labels[i]);
            }
            std::sort(scratch.begin(), scratch.end(),
                      [](const auto& a, const auto& b) { return a.first < b.first; });
            std::size_t left_pos = 0;
            for (std::size_t k = 0; k + 1 < n; ++k) {
                left_pos += scratch[k].second != 0;
                double v1 = scratch[k].first, v2 = scratch[k + 1].first;
                if (v1 == v2) continue;
                std::size_t nl = k + 1;
                if (n - nl < params.min_leaf) break;
                if (nl < params.min_leaf) continue;
                double t = v1 + (v2 - v1) / 2;
                if (t >= v2) t = v1;  // gap below midpoint precision; v1 partitions identically
                double s = purity(left_pos, nl) + purity(pos - left_pos, n - nl);
                if (s > best_s) {
                    best_s = s;
                    best_f = static_cast<int>(f);
                    best_t = t;
                }
            }
        }

        if (best_f < 0) return make_leaf(lo, hi, pos);

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

TreeModel fit_tree(const FeatureView& view, const std::vector<std::uint8_t>& labels,
                   const std::vector<std::uint8_t>& sensitive, const IndexSet& instance_subset,
                   const IndexSet& feature_subset, const TreeParams& params, std::uint64_t seed) {
    if (instance_subset.empty()) throw PreconditionError("fit_tree: empty instance subset");
    if (feature_subset.empty()) throw PreconditionError("fit_tree: empty feature subset");
    if (params.max_depth < 1) throw PreconditionError("fit_tree: max_depth must be >= 1");
    if (params.min_leaf < 1) throw PreconditionError("fit_tree: min_leaf must be >= 1");
    if (labels.size() != view.rows || sensitive.size() != view.rows)
        throw PreconditionError("fit_tree: label/sensitive length does not match view rows");
    for (std::size_t i : instance_subset)
        if (i >= view.rows) throw PreconditionError("fit_tree: instance index out of range");

    IndexSet feats = feature_subset;
    std::sort(feats.begin(), feats.end());
    feats.erase(std::unique(feats.begin(), feats.end()), feats.end());
    if (feats.back() >= view.cols) throw PreconditionError("fit_tree: feature index out of range");

    Builder b{view, labels, sensitive, params, feats};
    b.idx = instance_subset;
    b.scratch.reserve(b.idx.size());
    b.detect_binary();
    b.build(0, b.idx.size(), 0);

    TreeModel model;
    model.nodes = std::move(b.nodes);
    model.params = params;
    model.feature_subset = std::move(feats);
    model.instance_subset = instance_subset;
    model.seed = seed;
    model.leaf_count = b.leaf_count;
    model.set_required_width(model.feature_subset.back() + 1);
    return model;
}

const TreeNode& TreeModel::leaf_node(std::span<const double> x) const {
    if (x.size() < required_width_)
        throw PreconditionError("tree: feature vector narrower than the fitted feature space");
    return route([&](std::size_t f) { return x[f]; });
}

double accuracy(const TreeModel& tree, const FeatureView& view,
                const std::vector<std::uint8_t>& labels, const IndexSet& indices) {
    if (indices.empty()) throw PreconditionError("accuracy: empty index set");
    std::size_t hits = 0;
    for (std::size_t i : indices) hits += tree.predict(view, i) == (labels[i] != 0);
    return static_cast<double>(hits) / static_cast<double>(indices.size());
}

}  // namespace foresee
