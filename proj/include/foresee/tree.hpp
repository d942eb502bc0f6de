#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "foresee/common.hpp"
#include "foresee/dataset.hpp"

namespace foresee {

struct TreeParams {
    int max_depth = 6;
    std::size_t min_leaf = 10;
};

// per-leaf label and error bookkeeping, split by sensitive group.
// group index: 0 = non-protected, 1 = protected.
struct LeafStats {
    std::size_t count[2] = {0, 0};
    std::size_t positives[2] = {0, 0};
    std::size_t misclassified[2] = {0, 0};
    std::size_t total = 0;
    std::size_t total_positives = 0;
    bool prediction_tie = false;
};

struct TreeNode {
    int feature = -1;  // -1 marks a leaf
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    int leaf_id = -1;
    int prediction = 0;
    LeafStats stats;

    bool is_leaf() const { return feature < 0; }
};

class TreeModel {
public:
    std::vector<TreeNode> nodes;
    TreeParams params;
    IndexSet feature_subset;
    IndexSet instance_subset;
    std::uint64_t seed = 0;
    int leaf_count = 0;

    // routes by `x <= threshold` goes left; value_at(col) supplies feature values
    template <typename F>
    const TreeNode& route(F&& value_at) const {
        const TreeNode* n = &nodes.front();
        while (!n->is_leaf())
            n = &nodes[static_cast<std::size_t>(value_at(static_cast<std::size_t>(n->feature)) <=
                                                        n->threshold
                                                    ? n->left
                                                    : n->right)];
        return *n;
    }

    const TreeNode& leaf_node(const FeatureView& view, std::size_t row) const {
        return route([&](std::size_t f) { return view.value(row, f); });
    }
    const TreeNode& leaf_node(std::span<const double> x) const;

    int leaf_of(const FeatureView& view, std::size_t row) const {
        return leaf_node(view, row).leaf_id;
    }
    int leaf_of(std::span<const double> x) const { return leaf_node(x).leaf_id; }
    int predict(const FeatureView& view, std::size_t row) const {
        return leaf_node(view, row).prediction;
    }
    int predict(std::span<const double> x) const { return leaf_node(x).prediction; }

    // widest feature index the tree may consult, plus one
    std::size_t required_width() const { return required_width_; }
    void set_required_width(std::size_t w) { required_width_ = w; }

private:
    std::size_t required_width_ = 0;
};

TreeModel fit_tree(const FeatureView& view, const std::vector<std::uint8_t>& labels,
                   const std::vector<std::uint8_t>& sensitive, const IndexSet& instance_subset,
                   const IndexSet& feature_subset, const TreeParams& params, std::uint64_t seed);

double accuracy(const TreeModel& tree, const FeatureView& view,
                const std::vector<std::uint8_t>& labels, const IndexSet& indices);

}  // namespace foresee
