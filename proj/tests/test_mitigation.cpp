#include <doctest.h>

#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

#include "foresee/mitigation.hpp"

using namespace foresee;

namespace {

using Bits = std::vector<std::uint8_t>;

Dataset two_group_rows(const std::vector<double>& feature, const Bits& sens, const Bits& labels) {
    Matrix m(feature.size(), 1);
    for (std::size_t i = 0; i < feature.size(); ++i) m.at(i, 0) = feature[i];
    return Dataset::from_numeric("mit", std::move(m), sens, labels);
}

IndexSet iota(std::size_t n) {
    IndexSet v(n);
    std::iota(v.begin(), v.end(), std::size_t{0});
    return v;
}

}  // namespace

TEST_CASE("filter keeps only rows at or below the risk threshold") {
    Dataset d = two_group_rows({0.1, 0.2, 0.3, 0.4, 0.5, 0.6}, {0, 1, 0, 1, 0, 1},
                               {1, 0, 1, 0, 1, 0});
    IndexSet train{0, 1, 2, 3};
    IndexSet test{4, 5};
    FilteredSplit f = preprocess_filter(d, train, test, {0.9, 0.1, 0.2, 0.8}, {0.3, 0.4}, 0.5,
                                        FilterMode::train_and_test);
    CHECK(f.train == IndexSet{1, 2});
    CHECK(f.test == test);
    CHECK(f.removed_train == 2);
    CHECK(f.removed_test == 0);
}

TEST_CASE("lambda one is the identity filter") {
    Dataset d = two_group_rows({0.1, 0.2, 0.3, 0.4}, {0, 1, 0, 1}, {1, 0, 1, 0});
    IndexSet train{0, 1};
    IndexSet test{2, 3};
    FilteredSplit f = preprocess_filter(d, train, test, {1.0, 0.99}, {0.5, 1.0}, 1.0,
                                        FilterMode::train_and_test);
    CHECK(f.train == train);
    CHECK(f.test == test);
    CHECK(f.removed_train == 0);
    CHECK(f.removed_test == 0);
}

TEST_CASE("test-only mode never touches the training split") {
    Dataset d = two_group_rows({0.1, 0.2, 0.3, 0.4, 0.5, 0.6}, {0, 1, 0, 1, 0, 1},
                               {1, 0, 1, 0, 1, 0});
    IndexSet train{0, 1, 2};
    IndexSet test{3, 4, 5};
    FilteredSplit f = preprocess_filter(d, train, test, {0.9, 0.9, 0.9}, {0.9, 0.1, 0.2}, 0.5,
                                        FilterMode::test_only);
    CHECK(f.train == train);
    CHECK(f.removed_train == 0);
    CHECK(f.test == IndexSet{4, 5});
    CHECK(f.removed_test == 1);
}

TEST_CASE("filter failures are descriptive") {
    Dataset d = two_group_rows({0.1, 0.2, 0.3, 0.4}, {0, 1, 0, 1}, {1, 0, 1, 0});
    IndexSet train{0, 1};
    IndexSet test{2, 3};
    // everything in test is high risk
    CHECK_THROWS_WITH_AS(
        preprocess_filter(d, train, test, {0.1, 0.1}, {0.9, 0.9}, 0.5, FilterMode::test_only),
        doctest::Contains("test"), ValidationError);
    // filtering strips the protected group from train
    CHECK_THROWS_WITH_AS(preprocess_filter(d, train, test, {0.1, 0.9}, {0.1, 0.1}, 0.5,
                                           FilterMode::train_and_test),
                         doctest::Contains("protected"), ValidationError);
    CHECK_THROWS_AS(preprocess_filter(d, train, test, {0.1}, {0.1, 0.1}, 0.5,
                                      FilterMode::train_and_test),
                    PreconditionError);
    CHECK_THROWS_AS(preprocess_filter(d, train, test, {0.1, 0.1}, {0.1, 0.1}, 1.5,
                                      FilterMode::train_and_test),
                    PreconditionError);
}

TEST_CASE("thresholds settle on the lowest zero-error point for clean scores") {
    // knn with k=1 reproduces each row's own label as a 0/1 proba, so every
    // threshold in (0, 1] classifies perfectly; the tie-break then prefers
    // the smallest spread and the lowest thresholds, which is (0.01, 0.01)
    // on a 101-point grid since t=0 marks every row positive.
    std::vector<double> x{0.0, 1.0, 2.0, 3.0};
    Bits sens{0, 0, 1, 1};
    Bits labels{0, 1, 0, 1};
    Dataset d = two_group_rows(x, sens, labels);
    ClassifierParams p;
    p.knn_k = 1;
    ClassifierModel knn = fit_classifier(d, iota(4), ClassifierKind::knn, p);

    PostprocessResult r = postprocess_thresholds(knn, d, iota(4), {1, 1, 1, 1},
                                                 ConstraintKind::dem_parity, 0.02);
    CHECK(r.plan.feasible);
    CHECK(r.plan.error_rate == 0.0);
    CHECK(r.plan.constraint_value == 0.0);
    CHECK(r.plan.t_protected == r.plan.t_other);
    CHECK(r.plan.t_protected == doctest::Approx(0.01));
    CHECK(r.adjusted == Bits{0, 1, 0, 1});
}

namespace {

struct Fixture {
    Dataset data;
    ClassifierModel model;
    std::vector<double> probas;
};

// knn k=1 on its own rows turns per-row labels into per-row probas of 0/1;
// to get arbitrary probas in between, use k up to 5 with crafted neighbor
// pools. For oracle tests the exact proba values only need to be known, not
// arbitrary, so instead read them back from the model.
Fixture random_fixture(Rng& rng, std::size_t n) {
    std::vector<double> x(n);
    Bits sens(n), labels(n);
    for (std::size_t i = 0; i < n; ++i) {
        x[i] = rng.uniform() * 10.0;
        sens[i] = static_cast<std::uint8_t>(rng.below(2));
        labels[i] = static_cast<std::uint8_t>(rng.below(2));
    }
    // both groups, both label values in each group
    sens[0] = 0;
    labels[0] = 0;
    sens[1] = 0;
    labels[1] = 1;
    sens[2] = 1;
    labels[2] = 0;
    sens[3] = 1;
    labels[3] = 1;
    Fixture f{two_group_rows(x, sens, labels), {}, {}};
    ClassifierParams p;
    p.knn_k = 3;
    f.model = fit_classifier(f.data, iota(n), ClassifierKind::knn, p);
    f.probas = predict_proba_many(f.model, f.data, iota(n));
    return f;
}

struct OraclePick {
    std::size_t ip = 0, io = 0;
    bool feasible = false;
    double error = 0.0;
};

// independent enumeration of the whole grid with the documented tie-break
OraclePick brute_force(const Fixture& f, const Bits& mask, ConstraintKind kind, double eps) {
    const std::size_t grid = 101;
    Bits sub_labels, sub_sens;
    std::vector<double> sub_probas;
    for (std::size_t i = 0; i < f.probas.size(); ++i) {
        if (!mask[i]) continue;
        sub_labels.push_back(f.data.labels[i]);
        sub_sens.push_back(f.data.sensitive[i]);
        sub_probas.push_back(f.probas[i]);
    }
    OraclePick best;
    bool have_any = false;
    double best_metric = std::numeric_limits<double>::infinity();
    std::size_t best_err = 0, best_spread = 0;
    OraclePick fallback;
    double fb_metric = std::numeric_limits<double>::infinity();
    std::size_t fb_err = 0, fb_spread = 0;
    for (std::size_t ip = 0; ip < grid; ++ip) {
        for (std::size_t io = 0; io < grid; ++io) {
            Bits preds(sub_probas.size());
            for (std::size_t i = 0; i < sub_probas.size(); ++i)
                preds[i] = sub_probas[i] >= (sub_sens[i] ? ip : io) * 0.01;
            double metric = 0.0;
            switch (kind) {
                case ConstraintKind::dem_parity:
                    metric = demographic_parity_gap(preds, sub_sens);
                    break;
                case ConstraintKind::eq_opportunity:
                    metric = equal_opportunity_gap(preds, sub_labels, sub_sens);
                    break;
                case ConstraintKind::eq_odds:
                    metric = equalized_odds_gap(preds, sub_labels, sub_sens);
                    break;
            }
            std::size_t err = 0;
            for (std::size_t i = 0; i < preds.size(); ++i) err += preds[i] != sub_labels[i];
            std::size_t spread = ip > io ? ip - io : io - ip;
            if (metric <= eps) {
                bool better = !have_any || err < best_err ||
                              (err == best_err &&
                               (spread < best_spread ||
                                (spread == best_spread &&
                                 (ip < best.ip || (ip == best.ip && io < best.io)))));
                if (better) {
                    have_any = true;
                    best = {ip, io, true, 0.0};
                    best_err = err;
                    best_spread = spread;
                }
            }
            bool fb_better = metric < fb_metric ||
                             (metric == fb_metric &&
                              (err < fb_err ||
                               (err == fb_err &&
                                (spread < fb_spread ||
                                 (spread == fb_spread &&
                                  (ip < fallback.ip || (ip == fallback.ip && io < fallback.io)))))));
            if (fb_better) {
                fallback = {ip, io, false, 0.0};
                fb_metric = metric;
                fb_err = err;
                fb_spread = spread;
            }
        }
    }
    OraclePick pick = have_any ? best : fallback;
    pick.feasible = have_any;
    std::size_t err_count = 0;
    for (std::size_t i = 0; i < sub_probas.size(); ++i) {
        bool pred = sub_probas[i] >= (sub_sens[i] ? pick.ip : pick.io) * 0.01;
        err_count += pred != static_cast<bool>(sub_labels[i]);
    }
    pick.error = static_cast<double>(err_count) / static_cast<double>(sub_probas.size());
    return pick;
}

}  // namespace

TEST_CASE("grid search matches an independent full enumeration") {
    Rng rng(8181);
    const ConstraintKind kinds[] = {ConstraintKind::dem_parity, ConstraintKind::eq_opportunity,
                                    ConstraintKind::eq_odds};
    const double epsilons[] = {0.0, 0.02, 0.15};
    for (int trial = 0; trial < 12; ++trial) {
        Fixture f = random_fixture(rng, 8);
        Bits mask(8, 1);
        ConstraintKind kind = kinds[trial % 3];
        double eps = epsilons[(trial / 3) % 3];
        CAPTURE(trial);

        OraclePick expect = brute_force(f, mask, kind, eps);
        PostprocessResult got =
            postprocess_thresholds(f.model, f.data, iota(8), mask, kind, eps);
        CHECK(got.plan.feasible == expect.feasible);
        CHECK(got.plan.t_protected == doctest::Approx(expect.ip * 0.01).epsilon(1e-12));
        CHECK(got.plan.t_other == doctest::Approx(expect.io * 0.01).epsilon(1e-12));
        CHECK(got.plan.error_rate == doctest::Approx(expect.error).epsilon(1e-12));
    }
}

TEST_CASE("infinite tolerance reduces to pure error minimization") {
    Rng rng(929);
    Fixture f = random_fixture(rng, 8);
    Bits mask(8, 1);
    double inf = std::numeric_limits<double>::infinity();
    PostprocessResult free_pick = postprocess_thresholds(f.model, f.data, iota(8), mask,
                                                         ConstraintKind::dem_parity, inf);
    CHECK(free_pick.plan.feasible);
    OraclePick expect = brute_force(f, mask, ConstraintKind::dem_parity, inf);
    CHECK(free_pick.plan.error_rate == doctest::Approx(expect.error));

    // no other pair can beat it on error
    PostprocessResult tight = postprocess_thresholds(f.model, f.data, iota(8), mask,
                                                     ConstraintKind::dem_parity, 0.0);
    CHECK(tight.plan.error_rate >= free_pick.plan.error_rate);
}

TEST_CASE("search runs identically across thread counts") {
    Rng rng(31);
    Fixture f = random_fixture(rng, 12);
    Bits mask(12, 1);
    PostprocessResult a = postprocess_thresholds(f.model, f.data, iota(12), mask,
                                                 ConstraintKind::eq_odds, 0.05, 101, 1);
    PostprocessResult b = postprocess_thresholds(f.model, f.data, iota(12), mask,
                                                 ConstraintKind::eq_odds, 0.05, 101, 4);
    CHECK(a.plan.t_protected == b.plan.t_protected);
    CHECK(a.plan.t_other == b.plan.t_other);
    CHECK(a.adjusted == b.adjusted);
}

TEST_CASE("low-risk rows keep the model threshold") {
    std::vector<double> x{0.0, 1.0, 2.0, 3.0, 4.0, 5.0};
    Bits sens{0, 1, 0, 1, 0, 1};
    Bits labels{0, 0, 1, 1, 1, 1};
    Dataset d = two_group_rows(x, sens, labels);
    ClassifierParams p;
    p.knn_k = 1;
    ClassifierModel knn = fit_classifier(d, iota(6), ClassifierKind::knn, p);
    Bits mask{1, 1, 1, 1, 0, 0};
    PostprocessResult r = postprocess_thresholds(knn, d, iota(6), mask,
                                                 ConstraintKind::dem_parity, 0.5);
    // rows 4 and 5 score 1.0 under k=1, above the default threshold
    CHECK(r.adjusted[4] == 1);
    CHECK(r.adjusted[5] == 1);
}

TEST_CASE("grid search validates its inputs") {
    std::vector<double> x{0.0, 1.0, 2.0, 3.0};
    Bits sens{0, 0, 1, 1};
    Bits labels{0, 1, 0, 1};
    Dataset d = two_group_rows(x, sens, labels);
    ClassifierParams p;
    p.knn_k = 1;
    ClassifierModel knn = fit_classifier(d, iota(4), ClassifierKind::knn, p);

    CHECK_THROWS_AS(postprocess_thresholds(knn, d, {}, {}, ConstraintKind::dem_parity, 0.1),
                    PreconditionError);
    CHECK_THROWS_AS(
        postprocess_thresholds(knn, d, iota(4), {0, 0, 0, 0}, ConstraintKind::dem_parity, 0.1),
        PreconditionError);
    // every high-risk row in one group
    CHECK_THROWS_WITH_AS(
        postprocess_thresholds(knn, d, iota(4), {1, 1, 0, 0}, ConstraintKind::dem_parity, 0.1),
        doctest::Contains("group"), PreconditionError);
    // no positive labels among the protected high-risk rows
    CHECK_THROWS_WITH_AS(
        postprocess_thresholds(knn, d, iota(4), {1, 1, 1, 0}, ConstraintKind::eq_opportunity, 0.1),
        doctest::Contains("positive"), PreconditionError);
    CHECK_THROWS_AS(
        postprocess_thresholds(knn, d, iota(4), {1, 1, 1, 1}, ConstraintKind::dem_parity, -0.1),
        PreconditionError);
}

TEST_CASE("strategy names round-trip") {
    for (Strategy s : {Strategy::pre_train_and_test, Strategy::pre_test_only, Strategy::post_demP,
                       Strategy::post_eqODD, Strategy::post_eqOPP})
        CHECK(strategy_from_string(to_string(s)) == s);
    CHECK_THROWS_AS(strategy_from_string("in_processing"), PreconditionError);
    CHECK(is_postprocess(Strategy::post_demP));
    CHECK(!is_postprocess(Strategy::pre_test_only));
}

namespace {

/// Labels follow x0 > 0.5, except protected rows in the high-risk band where
/// the label flips. An unaware learner keeps predicting the majority rule, so
/// its mistakes concentrate on protected high-risk rows.
struct BiasedWorld {
    Dataset data;
    IndexSet train, test;
    std::vector<double> train_risks, test_risks;
};

BiasedWorld biased_world(std::size_t n, std::uint64_t seed) {
    Rng rng(seed);
    Matrix m(n, 1);
    Bits sens(n), labels(n);
    std::vector<double> risks(n);
    for (std::size_t i = 0; i < n; ++i) {
        double x = rng.uniform();
        m.at(i, 0) = x;
        sens[i] = static_cast<std::uint8_t>(rng.below(2));
        bool high = i % 4 == 0;
        risks[i] = high ? 0.9 : 0.1;
        bool base = x > 0.5;
        labels[i] = (high && sens[i]) ? !base : base;
    }
    sens[0] = 0;
    sens[1] = 1;
    BiasedWorld w;
    w.data = Dataset::from_numeric("biased", std::move(m), std::move(sens), std::move(labels));
    for (std::size_t i = 0; i < n; ++i) {
        if (i % 3 == 0) {
            w.test.push_back(i);
            w.test_risks.push_back(risks[i]);
        } else {
            w.train.push_back(i);
            w.train_risks.push_back(risks[i]);
        }
    }
    return w;
}

}  // namespace

TEST_CASE("filtering the risky band shrinks the opportunity gap") {
    BiasedWorld w = biased_world(900, 555);
    MitigationConfig cfg;
    cfg.strategy = Strategy::pre_train_and_test;
    cfg.params.logit_epochs = 200;

    EvaluationConfig ecfg;
    ecfg.kinds = {ClassifierKind::logistic};
    ecfg.params = cfg.params;
    FairnessReport before =
        evaluate_fairness(w.data, w.train, w.test, w.test_risks, ecfg);
    const SubsetMetrics* base = before.find("logistic", "all");
    REQUIRE(base != nullptr);
    CHECK(base->opportunity > 0.15);

    MitigationOutcome out = run_mitigation(w.data, w.train, w.test, w.train_risks, w.test_risks,
                                           ClassifierKind::logistic, cfg);
    CHECK(out.report.strategy == "pre_train_and_test");
    CHECK(out.removed_train > 0);
    CHECK(out.removed_test > 0);
    const SubsetMetrics* after = out.report.find("logistic", "all");
    REQUIRE(after != nullptr);
    CHECK(after->opportunity < 0.5 * base->opportunity);

    MitigationOutcome test_only = run_mitigation(w.data, w.train, w.test, w.train_risks,
                                                 w.test_risks, ClassifierKind::logistic,
                                                 [&] {
                                                     MitigationConfig c = cfg;
                                                     c.strategy = Strategy::pre_test_only;
                                                     return c;
                                                 }());
    CHECK(test_only.removed_train == 0);
    CHECK(test_only.removed_test == out.removed_test);
}

namespace {

/// The protected group's feature sits lower, so an unaware learner hands it
/// fewer positive predictions and the parity gap opens up.
BiasedWorld shifted_world(std::size_t n, std::uint64_t seed) {
    Rng rng(seed);
    Matrix m(n, 1);
    Bits sens(n), labels(n);
    std::vector<double> risks(n, 0.9);  // everything high risk
    for (std::size_t i = 0; i < n; ++i) {
        bool s = rng.below(2);
        double x = rng.uniform() * (s ? 0.75 : 1.0);
        m.at(i, 0) = x;
        sens[i] = static_cast<std::uint8_t>(s);
        labels[i] = x > 0.4;
    }
    sens[0] = 0;
    sens[1] = 1;
    labels[0] = 0;
    labels[1] = 1;
    BiasedWorld w;
    w.data = Dataset::from_numeric("shifted", std::move(m), std::move(sens), std::move(labels));
    for (std::size_t i = 0; i < n; ++i) {
        if (i % 3 == 0) {
            w.test.push_back(i);
            w.test_risks.push_back(risks[i]);
        } else {
            w.train.push_back(i);
            w.train_risks.push_back(risks[i]);
        }
    }
    return w;
}

}  // namespace

TEST_CASE("parity-constrained thresholds close the parity gap") {
    BiasedWorld w = shifted_world(900, 808);
    MitigationConfig cfg;
    cfg.strategy = Strategy::post_demP;
    cfg.epsilon = 0.05;
    cfg.params.logit_epochs = 250;
    cfg.seed = 5;

    EvaluationConfig ecfg;
    ecfg.kinds = {ClassifierKind::logistic};
    ecfg.params = cfg.params;
    FairnessReport before = evaluate_fairness(w.data, w.train, w.test, w.test_risks, ecfg);
    const SubsetMetrics* base = before.find("logistic", "all");
    REQUIRE(base != nullptr);
    CHECK(base->dem_parity > 0.12);

    MitigationOutcome out = run_mitigation(w.data, w.train, w.test, w.train_risks, w.test_risks,
                                           ClassifierKind::logistic, cfg);
    CHECK(out.used_thresholds);
    CHECK(out.plan.feasible);
    CHECK(out.plan.constraint == ConstraintKind::dem_parity);
    const SubsetMetrics* after = out.report.find("logistic", "all");
    REQUIRE(after != nullptr);
    CHECK(after->dem_parity < base->dem_parity);
    CHECK(out.report.strategy == "post_demP");
}

TEST_CASE("mitigation validates its inputs") {
    BiasedWorld w = biased_world(120, 9);
    MitigationConfig cfg;
    CHECK_THROWS_AS(run_mitigation(w.data, w.train, w.test, {0.5}, w.test_risks,
                                   ClassifierKind::logistic, cfg),
                    PreconditionError);
    cfg.lambda = 2.0;
    CHECK_THROWS_AS(run_mitigation(w.data, w.train, w.test, w.train_risks, w.test_risks,
                                   ClassifierKind::logistic, cfg),
                    PreconditionError);
}
