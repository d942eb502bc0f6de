#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "foresee/classifiers.hpp"

using namespace foresee;

namespace {

IndexSet iota(std::size_t n) {
    IndexSet v(n);
    for (std::size_t i = 0; i < n; ++i) v[i] = i;
    return v;
}

Dataset separable(std::size_t n, std::uint64_t seed) {
    Matrix m(n, 3);
    std::vector<std::uint8_t> sens(n), lab(n);
    Rng rng(seed);
    for (std::size_t i = 0; i < n; ++i) {
        m.at(i, 0) = rng.uniform();
        m.at(i, 1) = rng.uniform() * 40.0 - 20.0;  // wide scale to exercise standardization
        m.at(i, 2) = static_cast<double>(rng.below(2));
        lab[i] = m.at(i, 0) + m.at(i, 1) / 40.0 > 0.5;
        sens[i] = static_cast<std::uint8_t>(rng.below(2));
    }
    sens[0] = 0;
    sens[1] = 1;
    lab[0] = 0;
    lab[1] = 1;
    return Dataset::from_numeric("cls", std::move(m), sens, lab);
}

}  // namespace

TEST_CASE("logistic separates a separable fixture") {
    Dataset d = separable(400, 10);
    ClassifierParams p;
    ClassifierModel m = fit_classifier(d, iota(d.size()), ClassifierKind::logistic, p);
    double acc = performance(m, d, iota(d.size()), PerfMetric::accuracy);
    CHECK(acc >= 0.97);
}

TEST_CASE("logistic with zero weights scores one half") {
    ClassifierModel m;
    m.kind = ClassifierKind::logistic;
    m.weights = {0.0, 0.0};
    m.bias = 0.0;
    Matrix probe(1, 2);
    probe.at(0, 0) = 3.0;
    probe.at(0, 1) = -2.0;
    FeatureView v{&probe, nullptr, 1, 2};
    CHECK(predict_proba(m, v, 0) == 0.5);
    CHECK(predict(m, v, 0) == 1);  // score >= threshold
    m.threshold = 0.0;
    CHECK(predict(m, v, 0) == 1);
}

TEST_CASE("svm separates a separable fixture") {
    Dataset d = separable(400, 12);
    ClassifierParams p;
    ClassifierModel m = fit_classifier(d, iota(d.size()), ClassifierKind::linear_svm, p);
    double acc = performance(m, d, iota(d.size()), PerfMetric::accuracy);
    CHECK(acc >= 0.95);
}

TEST_CASE("random forest votes match the tree mode") {
    Dataset d = separable(300, 14);
    ClassifierParams p;
    p.rf_trees = 15;
    p.rf_depth = 4;
    p.rf_min_leaf = 5;
    p.seed = 9;
    ClassifierModel m = fit_classifier(d, iota(d.size()), ClassifierKind::random_forest, p);
    REQUIRE(m.rf_trees.size() == 15);
    FeatureView v = make_view(d, false);
    for (std::size_t i = 0; i < 40; ++i) {
        std::size_t votes = 0;
        for (const auto& t : m.rf_trees) votes += t.predict(v, i);
        double frac = static_cast<double>(votes) / 15.0;
        CHECK(predict_proba(m, v, i) == frac);
        CHECK(predict(m, v, i) == (frac >= 0.5 ? 1 : 0));
    }
    double acc = performance(m, d, iota(d.size()), PerfMetric::accuracy);
    CHECK(acc >= 0.9);
}

TEST_CASE("knn with k=1 memorizes its training points") {
    Dataset d = separable(150, 16);
    ClassifierParams p;
    p.knn_k = 1;
    ClassifierModel m = fit_classifier(d, iota(d.size()), ClassifierKind::knn, p);
    CHECK(performance(m, d, iota(d.size()), PerfMetric::accuracy) == 1.0);
}

TEST_CASE("knn score is the positive fraction among neighbors") {
    // three training points, one query equidistant cluster: k=3 -> 2/3
    Matrix m(4, 1);
    m.at(0, 0) = 0.0;
    m.at(1, 0) = 1.0;
    m.at(2, 0) = 2.0;
    m.at(3, 0) = 1.0;  // query row
    std::vector<std::uint8_t> sens{0, 1, 0, 1};
    std::vector<std::uint8_t> lab{1, 1, 0, 0};
    Dataset d = Dataset::from_numeric("knn3", std::move(m), sens, lab);
    ClassifierParams p;
    p.knn_k = 3;
    ClassifierModel model = fit_classifier(d, IndexSet{0, 1, 2}, ClassifierKind::knn, p);
    FeatureView v = make_view(d, false);
    CHECK(predict_proba(model, v, 3) == doctest::Approx(2.0 / 3.0));
}

TEST_CASE("knn distance ties resolve by lower original row index") {
    // two training points equidistant from the query; only the lower row id wins
    Matrix m(3, 1);
    m.at(0, 0) = 0.0;  // label 1, row 0
    m.at(1, 0) = 2.0;  // label 0, row 1
    m.at(2, 0) = 1.0;  // query
    std::vector<std::uint8_t> sens{0, 1, 0};
    std::vector<std::uint8_t> lab{1, 0, 1};
    Dataset d = Dataset::from_numeric("tie", std::move(m), sens, lab);
    ClassifierParams p;
    p.knn_k = 1;
    // pass training rows in descending order; the tie must still go to row 0
    ClassifierModel model = fit_classifier(d, IndexSet{1, 0}, ClassifierKind::knn, p);
    FeatureView v = make_view(d, false);
    CHECK(predict_proba(model, v, 2) == 1.0);
}

TEST_CASE("classifiers never consult the sensitive column") {
    Dataset d = separable(200, 18);
    IndexSet train = iota(d.size());
    Dataset flipped = d;
    for (auto& s : flipped.sensitive) s = static_cast<std::uint8_t>(1 - s);

    for (ClassifierKind kind : {ClassifierKind::logistic, ClassifierKind::linear_svm,
                                ClassifierKind::knn, ClassifierKind::random_forest}) {
        ClassifierParams p;
        p.rf_trees = 10;
        p.seed = 4;
        ClassifierModel a = fit_classifier(d, train, kind, p);
        ClassifierModel b = fit_classifier(flipped, train, kind, p);
        auto pa = predict_proba_many(a, d, train);
        auto pb = predict_proba_many(b, flipped, train);
        for (std::size_t i = 0; i < pa.size(); ++i) CHECK(pa[i] == pb[i]);
    }
}

TEST_CASE("performance metrics match hand-built confusion counts") {
    std::vector<std::uint8_t> preds{1, 1, 0, 0};
    std::vector<std::uint8_t> labels{1, 0, 1, 0};
    CHECK(accuracy_of(preds, labels) == 0.5);
    CHECK(f1_of(preds, labels) == doctest::Approx(0.5));

    std::vector<std::uint8_t> perfect{1, 0, 1};
    CHECK(accuracy_of(perfect, perfect) == 1.0);
    CHECK(f1_of(perfect, perfect) == 1.0);

    std::vector<std::uint8_t> none{0, 0, 0, 0};
    std::vector<std::uint8_t> half{1, 1, 0, 0};
    CHECK(accuracy_of(none, half) == 0.5);
    CHECK(f1_of(none, half) == 0.0);

    CHECK_THROWS_AS(accuracy_of({}, {}), PreconditionError);
    CHECK_THROWS_AS(f1_of({1}, {1, 0}), PreconditionError);
}

TEST_CASE("standardizer centers and scales only numeric columns") {
    Matrix m(4, 2);
    m.at(0, 0) = 10.0;
    m.at(1, 0) = 20.0;
    m.at(2, 0) = 30.0;
    m.at(3, 0) = 40.0;
    for (std::size_t i = 0; i < 4; ++i) m.at(i, 1) = i % 2;
    Standardizer s;
    s.fit(m, {0, 1, 2, 3}, {0});
    std::vector<double> row{25.0, 1.0};
    s.apply(row);
    CHECK(row[0] == doctest::Approx(0.0));
    CHECK(row[1] == 1.0);

    // constant column degrades to centering, not division by zero
    Matrix c(3, 1, 7.0);
    Standardizer sc;
    sc.fit(c, {0, 1, 2}, {0});
    std::vector<double> r2{7.0};
    sc.apply(r2);
    CHECK(r2[0] == 0.0);
}

TEST_CASE("classifier kind names round-trip") {
    for (ClassifierKind k : {ClassifierKind::logistic, ClassifierKind::random_forest,
                             ClassifierKind::knn, ClassifierKind::linear_svm})
        CHECK(classifier_from_string(to_string(k)) == k);
    CHECK(classifier_from_string("rf") == ClassifierKind::random_forest);
    CHECK(classifier_from_string("lr") == ClassifierKind::logistic);
    CHECK(classifier_from_string("svm") == ClassifierKind::linear_svm);
    CHECK_THROWS_AS(classifier_from_string("mlp"), PreconditionError);
}

TEST_CASE("rf fit is deterministic across thread counts") {
    Dataset d = separable(250, 20);
    ClassifierParams p;
    p.rf_trees = 12;
    p.seed = 33;
    ClassifierModel a = fit_classifier(d, iota(d.size()), ClassifierKind::random_forest, p, 1);
    ClassifierModel b = fit_classifier(d, iota(d.size()), ClassifierKind::random_forest, p, 3);
    auto pa = predict_proba_many(a, d, iota(d.size()), 1);
    auto pb = predict_proba_many(b, d, iota(d.size()), 3);
    for (std::size_t i = 0; i < pa.size(); ++i) CHECK(pa[i] == pb[i]);
}

TEST_CASE("balanced bootstrap lifts the minority positive rate") {
    // 10% positives; balanced trees should predict positive far more often
    std::size_t n = 400;
    Matrix m(n, 2);
    std::vector<std::uint8_t> sens(n), lab(n);
    Rng rng(41);
    for (std::size_t i = 0; i < n; ++i) {
        m.at(i, 0) = rng.uniform();
        m.at(i, 1) = rng.uniform();
        lab[i] = rng.uniform() < (m.at(i, 0) > 0.8 ? 0.7 : 0.04);
        sens[i] = static_cast<std::uint8_t>(rng.below(2));
    }
    lab[0] = 1;
    lab[1] = 0;
    sens[0] = 0;
    sens[1] = 1;
    Dataset d = Dataset::from_numeric("imb", std::move(m), sens, lab);
    ClassifierParams balanced;
    balanced.rf_trees = 30;
    balanced.seed = 3;
    ClassifierParams plain = balanced;
    plain.rf_balanced = false;
    auto mb = fit_classifier(d, iota(n), ClassifierKind::random_forest, balanced);
    auto mp = fit_classifier(d, iota(n), ClassifierKind::random_forest, plain);
    auto pb = predict_many(mb, d, iota(n));
    auto pp = predict_many(mp, d, iota(n));
    double rate_b = std::accumulate(pb.begin(), pb.end(), 0.0) / static_cast<double>(n);
    double rate_p = std::accumulate(pp.begin(), pp.end(), 0.0) / static_cast<double>(n);
    CHECK(rate_b > rate_p);
}

TEST_CASE("fit_classifier validates inputs") {
    Dataset d = separable(50, 22);
    ClassifierParams p;
    CHECK_THROWS_AS(fit_classifier(d, {}, ClassifierKind::logistic, p), PreconditionError);
}
