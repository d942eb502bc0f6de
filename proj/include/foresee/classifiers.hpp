#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "foresee/dataset.hpp"
#include "foresee/tree.hpp"

namespace foresee {

enum class ClassifierKind { logistic, random_forest, knn, linear_svm };
enum class PerfMetric { f1, accuracy };

const char* to_string(ClassifierKind kind);
ClassifierKind classifier_from_string(const std::string& name);

struct ClassifierParams {
    double logit_lr = 0.1;
    int logit_epochs = 500;
    double svm_lambda = 1e-3;
    double svm_lr = 0.5;
    int svm_epochs = 500;
    std::size_t rf_trees = 100;
    int rf_depth = 10;
    std::size_t rf_min_leaf = 1;
    double rf_feature_fraction = 0.7;
    bool rf_balanced = true;  // class-balanced bootstrap per tree
    std::size_t knn_k = 15;
    double threshold = 0.5;
    std::uint64_t seed = 0;
};

// shifts/scales the numeric passthrough columns; one-hot columns stay raw
struct Standardizer {
    IndexSet columns;
    std::vector<double> mean;
    std::vector<double> sdev;

    void fit(const Matrix& encoded, const IndexSet& rows, const IndexSet& numeric_columns);
    void apply(std::span<double> row) const;
    std::vector<double> transform(const FeatureView& view, std::size_t row) const;
};

struct ClassifierModel {
    ClassifierKind kind = ClassifierKind::logistic;
    ClassifierParams params;
    double threshold = 0.5;
    bool convergence_warning = false;
    Standardizer scaler;

    std::vector<double> weights;  // linear kinds
    double bias = 0.0;

    std::vector<TreeModel> rf_trees;

    Matrix knn_train;                       // standardized training rows
    std::vector<std::uint8_t> knn_labels;   // aligned to knn_train rows
    IndexSet knn_source_rows;               // original dataset row ids (tie-break order)
};

ClassifierModel fit_classifier(const Dataset& data, const IndexSet& train, ClassifierKind kind,
                               const ClassifierParams& params, int threads = 1);

double predict_proba(const ClassifierModel& model, const FeatureView& plain_view, std::size_t row);
int predict(const ClassifierModel& model, const FeatureView& plain_view, std::size_t row);

// positionally aligned with `indices`
std::vector<double> predict_proba_many(const ClassifierModel& model, const Dataset& data,
                                       const IndexSet& indices, int threads = 1);
std::vector<std::uint8_t> predict_many(const ClassifierModel& model, const Dataset& data,
                                       const IndexSet& indices, int threads = 1);
std::vector<std::uint8_t> apply_threshold(const std::vector<double>& probas, double threshold);

// preds and labels positionally aligned
double accuracy_of(const std::vector<std::uint8_t>& preds,
                   const std::vector<std::uint8_t>& labels);
double f1_of(const std::vector<std::uint8_t>& preds, const std::vector<std::uint8_t>& labels);

double performance(const ClassifierModel& model, const Dataset& data, const IndexSet& indices,
                   PerfMetric metric, int threads = 1);

}  // namespace foresee
