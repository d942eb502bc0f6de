#include "foresee/classifiers.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace foresee {

namespace {

double sigmoid(double z) {
    if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
    double e = std::exp(z);
    return e / (1.0 + e);
}

// numerically stable mean log-loss for raw scores z
double log_loss(const std::vector<double>& z, const std::vector<std::uint8_t>& y) {
    double acc = 0.0;
    for (std::size_t i = 0; i < z.size(); ++i) {
        double softplus = std::max(z[i], 0.0) + std::log1p(std::exp(-std::abs(z[i])));
        acc += softplus - (y[i] ? z[i] : 0.0);
    }
    return acc / static_cast<double>(z.size());
}

Matrix standardized_rows(const Dataset& data, const IndexSet& rows, const Standardizer& scaler) {
    const Matrix& enc = data.encoded();
    Matrix out(rows.size(), enc.cols);
    for (std::size_t k = 0; k < rows.size(); ++k) {
        auto src = enc.row(rows[k]);
        std::copy(src.begin(), src.end(), out.row(k).begin());
        scaler.apply(out.row(k));
    }
    return out;
}

void fit_logistic(ClassifierModel& m, const Matrix& x, const std::vector<std::uint8_t>& y) {
    const std::size_t n = x.rows, d = x.cols;
    m.weights.assign(d, 0.0);
    m.bias = 0.0;

    std::vector<double> z(n, 0.0), grad(d);
    auto forward = [&](const std::vector<double>& w, double b, std::vector<double>& out) {
        for (std::size_t i = 0; i < n; ++i) {
            auto row = x.row(i);
            double acc = b;
            for (std::size_t j = 0; j < d; ++j) acc += w[j] * row[j];
            out[i] = acc;
        }
    };

    forward(m.weights, m.bias, z);
    double loss = log_loss(z, y);
    double step = m.params.logit_lr;
    bool converged = false;

    std::vector<double> cand_w(d), cand_z(n);
    for (int epoch = 0; epoch < m.params.logit_epochs; ++epoch) {
        std::fill(grad.begin(), grad.end(), 0.0);
        double grad_b = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double delta = sigmoid(z[i]) - static_cast<double>(y[i]);
            auto row = x.row(i);
            for (std::size_t j = 0; j < d; ++j) grad[j] += delta * row[j];
            grad_b += delta;
        }
        double inv_n = 1.0 / static_cast<double>(n);

        // accepted-step rule: halve until the loss does not increase
        bool accepted = false;
        double cand_b = 0.0, cand_loss = 0.0;
        for (int half = 0; half < 40; ++half) {
            for (std::size_t j = 0; j < d; ++j) cand_w[j] = m.weights[j] - step * grad[j] * inv_n;
            cand_b = m.bias - step * grad_b * inv_n;
            forward(cand_w, cand_b, cand_z);
            cand_loss = log_loss(cand_z, y);
            if (cand_loss <= loss) {
                accepted = true;
                break;
            }
            step /= 2;
        }
        if (!accepted) break;
        m.weights.swap(cand_w);
        m.bias = cand_b;
        z.swap(cand_z);
        double drop = loss - cand_loss;
        loss = cand_loss;
        if (drop < 1e-10) {
            converged = true;
            break;
        }
    }
    m.convergence_warning = !converged;
}

void fit_svm(ClassifierModel& m, const Matrix& x, const std::vector<std::uint8_t>& y) {
    const std::size_t n = x.rows, d = x.cols;
    std::vector<double> w(d, 0.0);
    double b = 0.0;

    auto objective = [&](const std::vector<double>& wv, double bv) {
        double hinge = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            auto row = x.row(i);
            double acc = bv;
            for (std::size_t j = 0; j < d; ++j) acc += wv[j] * row[j];
            double margin = (y[i] ? 1.0 : -1.0) * acc;
            hinge += std::max(0.0, 1.0 - margin);
        }
        double reg = 0.0;
        for (double v : wv) reg += v * v;
        return hinge / static_cast<double>(n) + 0.5 * m.params.svm_lambda * reg;
    };

    std::vector<double> best_w = w;
    double best_b = b, best_obj = objective(w, b);
    std::vector<double> grad(d);
    for (int epoch = 0; epoch < m.params.svm_epochs; ++epoch) {
        for (std::size_t j = 0; j < d; ++j) grad[j] = m.params.svm_lambda * w[j];
        double grad_b = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            auto row = x.row(i);
            double acc = b;
            for (std::size_t j = 0; j < d; ++j) acc += w[j] * row[j];
            double sign = y[i] ? 1.0 : -1.0;
            if (sign * acc < 1.0) {
                double scale = -sign / static_cast<double>(n);
                for (std::size_t j = 0; j < d; ++j) grad[j] += scale * row[j];
                grad_b += scale;
            }
        }
        double lr = m.params.svm_lr / std::sqrt(static_cast<double>(epoch + 1));
        for (std::size_t j = 0; j < d; ++j) w[j] -= lr * grad[j];
        b -= lr * grad_b;
        double obj = objective(w, b);
        if (obj < best_obj) {
            best_obj = obj;
            best_w = w;
            best_b = b;
        }
    }
    m.weights = std::move(best_w);
    m.bias = best_b;
    m.convergence_warning = false;
}

void fit_rf(ClassifierModel& m, const Dataset& data, const IndexSet& train, int threads) {
    const Matrix& enc = data.encoded();
    FeatureView view{&enc, nullptr, enc.rows, enc.cols};

    IndexSet pos, neg;
    for (std::size_t i : train) (data.labels[i] ? pos : neg).push_back(i);
    if (m.params.rf_balanced && (pos.empty() || neg.empty()))
        throw PreconditionError("random forest: balanced bootstrap needs both label classes");

    IndexSet all_features(enc.cols);
    std::iota(all_features.begin(), all_features.end(), 0);
    auto n_feat = static_cast<std::size_t>(
        std::ceil(m.params.rf_feature_fraction * static_cast<double>(enc.cols)));
    n_feat = std::clamp<std::size_t>(n_feat, 1, enc.cols);

    m.rf_trees.resize(m.params.rf_trees);
    TreeParams tp{m.params.rf_depth, m.params.rf_min_leaf};
    parallel_for(m.params.rf_trees, threads, [&](std::size_t t) {
        Rng rng(derive_seed(m.params.seed, t));
        IndexSet boot(train.size());
        if (m.params.rf_balanced) {
            std::size_t half = train.size() / 2;
            for (std::size_t i = 0; i < half; ++i)
                boot[i] = pos[static_cast<std::size_t>(rng.below(pos.size()))];
            for (std::size_t i = half; i < train.size(); ++i)
                boot[i] = neg[static_cast<std::size_t>(rng.below(neg.size()))];
        } else {
            for (std::size_t i = 0; i < train.size(); ++i)
                boot[i] = train[static_cast<std::size_t>(rng.below(train.size()))];
        }
        IndexSet feats = sample_without_replacement(all_features, n_feat, rng);
        m.rf_trees[t] = fit_tree(view, data.labels, data.sensitive, boot, feats, tp,
                                 derive_seed(m.params.seed, t));
    });
}

// training rows are stored sorted by original id, so the (distance, position)
// order below IS the documented (distance, original row id) tie-break
double knn_score(const ClassifierModel& m, const std::vector<double>& q) {
    const std::size_t n = m.knn_train.rows, d = m.knn_train.cols;
    std::vector<std::pair<double, std::size_t>> dist(n);
    for (std::size_t i = 0; i < n; ++i) {
        auto row = m.knn_train.row(i);
        double acc = 0.0;
        for (std::size_t j = 0; j < d; ++j) {
            double diff = q[j] - row[j];
            acc += diff * diff;
        }
        dist[i] = {acc, i};
    }
    std::size_t k = std::min<std::size_t>(m.params.knn_k, n);
    std::nth_element(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k - 1), dist.end());
    std::size_t hits = 0;
    for (std::size_t r = 0; r < k; ++r) hits += m.knn_labels[dist[r].second] != 0;
    return static_cast<double>(hits) / static_cast<double>(k);
}

}  // namespace

const char* to_string(ClassifierKind kind) {
    switch (kind) {
        case ClassifierKind::logistic: return "logistic";
        case ClassifierKind::random_forest: return "random_forest";
        case ClassifierKind::knn: return "knn";
        case ClassifierKind::linear_svm: return "linear_svm";
    }
    return "unknown";
}

ClassifierKind classifier_from_string(const std::string& name) {
    if (name == "logistic" || name == "lr") return ClassifierKind::logistic;
    if (name == "random_forest" || name == "rf") return ClassifierKind::random_forest;
    if (name == "knn") return ClassifierKind::knn;
    if (name == "linear_svm" || name == "svm") return ClassifierKind::linear_svm;
    throw PreconditionError("unknown classifier kind: " + name);
}

void Standardizer::fit(const Matrix& encoded, const IndexSet& rows,
                       const IndexSet& numeric_columns) {
    columns = numeric_columns;
    mean.assign(columns.size(), 0.0);
    sdev.assign(columns.size(), 0.0);
    if (rows.empty()) return;
    double inv_n = 1.0 / static_cast<double>(rows.size());
    for (std::size_t c = 0; c < columns.size(); ++c) {
        double acc = 0.0;
        for (std::size_t i : rows) acc += encoded.at(i, columns[c]);
        mean[c] = acc * inv_n;
        double var = 0.0;
        for (std::size_t i : rows) {
            double dv = encoded.at(i, columns[c]) - mean[c];
            var += dv * dv;
        }
        sdev[c] = std::sqrt(var * inv_n);
    }
}

void Standardizer::apply(std::span<double> row) const {
    for (std::size_t c = 0; c < columns.size(); ++c) {
        double& v = row[columns[c]];
        v = sdev[c] > 0.0 ? (v - mean[c]) / sdev[c] : v - mean[c];
    }
}

std::vector<double> Standardizer::transform(const FeatureView& view, std::size_t row) const {
    std::vector<double> out(view.cols);
    for (std::size_t j = 0; j < view.cols; ++j) out[j] = view.value(row, j);
    apply(out);
    return out;
}

ClassifierModel fit_classifier(const Dataset& data, const IndexSet& train, ClassifierKind kind,
                               const ClassifierParams& params, int threads) {
    if (train.empty()) throw PreconditionError("fit_classifier: empty training set");
    ClassifierModel m;
    m.kind = kind;
    m.params = params;
    m.threshold = params.threshold;

    if (kind == ClassifierKind::random_forest) {
        fit_rf(m, data, train, threads);
        return m;
    }

    m.scaler.fit(data.encoded(), train, data.numeric_encoded_columns());
    switch (kind) {
        case ClassifierKind::logistic: {
            Matrix x = standardized_rows(data, train, m.scaler);
            fit_logistic(m, x, gather(data.labels, train));
            break;
        }
        case ClassifierKind::linear_svm: {
            Matrix x = standardized_rows(data, train, m.scaler);
            fit_svm(m, x, gather(data.labels, train));
            break;
        }
        case ClassifierKind::knn: {
            IndexSet sorted_train = train;
            std::sort(sorted_train.begin(), sorted_train.end());
            m.knn_train = standardized_rows(data, sorted_train, m.scaler);
            m.knn_labels = gather(data.labels, sorted_train);
            m.knn_source_rows = std::move(sorted_train);
            break;
        }
        case ClassifierKind::random_forest:
            break;
    }
    return m;
}

double predict_proba(const ClassifierModel& model, const FeatureView& plain_view,
                     std::size_t row) {
    switch (model.kind) {
        case ClassifierKind::logistic:
        case ClassifierKind::linear_svm: {
            std::vector<double> x = model.scaler.transform(plain_view, row);
            if (x.size() < model.weights.size())
                throw PreconditionError("predict: feature vector narrower than the fitted space");
            double acc = model.bias;
            for (std::size_t j = 0; j < model.weights.size(); ++j) acc += model.weights[j] * x[j];
            return sigmoid(acc);
        }
        case ClassifierKind::random_forest: {
            std::size_t votes = 0;
            for (const TreeModel& t : model.rf_trees) votes += t.predict(plain_view, row);
            return static_cast<double>(votes) / static_cast<double>(model.rf_trees.size());
        }
        case ClassifierKind::knn: {
            std::vector<double> q = model.scaler.transform(plain_view, row);
            return knn_score(model, q);
        }
    }
    return 0.0;
}

int predict(const ClassifierModel& model, const FeatureView& plain_view, std::size_t row) {
    return predict_proba(model, plain_view, row) >= model.threshold ? 1 : 0;
}

std::vector<double> predict_proba_many(const ClassifierModel& model, const Dataset& data,
                                       const IndexSet& indices, int threads) {
    FeatureView view = make_view(data, false);
    std::vector<double> out(indices.size());
    parallel_for(indices.size(), threads,
                 [&](std::size_t k) { out[k] = predict_proba(model, view, indices[k]); });
    return out;
}

std::vector<std::uint8_t> apply_threshold(const std::vector<double>& probas, double threshold) {
    std::vector<std::uint8_t> out(probas.size());
    for (std::size_t i = 0; i < probas.size(); ++i) out[i] = probas[i] >= threshold ? 1 : 0;
    return out;
}

std::vector<std::uint8_t> predict_many(const ClassifierModel& model, const Dataset& data,
                                       const IndexSet& indices, int threads) {
    return apply_threshold(predict_proba_many(model, data, indices, threads), model.threshold);
}

double accuracy_of(const std::vector<std::uint8_t>& preds,
                   const std::vector<std::uint8_t>& labels) {
    if (preds.empty() || preds.size() != labels.size())
        throw PreconditionError("accuracy_of: prediction/label vectors empty or misaligned");
    std::size_t hits = 0;
    for (std::size_t i = 0; i < preds.size(); ++i) hits += preds[i] == labels[i];
    return static_cast<double>(hits) / static_cast<double>(preds.size());
}

double f1_of(const std::vector<std::uint8_t>& preds, const std::vector<std::uint8_t>& labels) {
    if (preds.empty() || preds.size() != labels.size())
        throw PreconditionError("f1_of: prediction/label vectors empty or misaligned");
    std::size_t tp = 0, fp = 0, fn = 0;
    for (std::size_t i = 0; i < preds.size(); ++i) {
        tp += preds[i] && labels[i];
        fp += preds[i] && !labels[i];
        fn += !preds[i] && labels[i];
    }
    if (tp == 0) return 0.0;
    double precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
    double recall = static_cast<double>(tp) / static_cast<double>(tp + fn);
    return 2.0 * precision * recall / (precision + recall);
}

double performance(const ClassifierModel& model, const Dataset& data, const IndexSet& indices,
                   PerfMetric metric, int threads) {
    if (indices.empty()) throw PreconditionError("performance: empty index set");
    std::vector<std::uint8_t> preds = predict_many(model, data, indices, threads);
    std::vector<std::uint8_t> labels = gather(data.labels, indices);
    return metric == PerfMetric::f1 ? f1_of(preds, labels) : accuracy_of(preds, labels);
}

}  // namespace foresee
