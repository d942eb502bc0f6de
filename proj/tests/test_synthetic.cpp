#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <vector>

#include "foresee/synthetic.hpp"

using namespace foresee;

TEST_CASE("generated sample matches its analytic risk") {
    SyntheticSample s = generate_synthetic({5000, 11, false});
    REQUIRE(s.data.size() == 5000);
    REQUIRE(s.true_risk.size() == 5000);
    CHECK(s.data.features.size() == 2);

    std::size_t protected_n = 0;
    for (std::size_t i = 0; i < s.data.size(); ++i) {
        double a = s.data.raw.at(i, 0);
        double b = s.data.raw.at(i, 1);
        CHECK(a >= 0.0);
        CHECK(a < 1.0);
        CHECK(b >= 0.0);
        CHECK(b < 1.0);
        CHECK(s.true_risk[i] == 0.5 * (a + b));
        if (s.data.sensitive[i]) {
            ++protected_n;
            CHECK(s.data.labels[i] == 1);  // the protected response is sure
        }
    }
    // binomial(5000, 1/2) stays within 3 sigma of its mean
    CHECK(std::llabs(static_cast<long long>(protected_n) - 2500) <= 106);
}

TEST_CASE("generation is reproducible and seed-sensitive") {
    SyntheticSample a = generate_synthetic({300, 4, false});
    SyntheticSample b = generate_synthetic({300, 4, false});
    CHECK(a.data.raw.data == b.data.raw.data);
    CHECK(a.data.sensitive == b.data.sensitive);
    CHECK(a.data.labels == b.data.labels);
    CHECK(a.true_risk == b.true_risk);

    SyntheticSample c = generate_synthetic({300, 5, false});
    CHECK(a.data.raw.data != c.data.raw.data);

    CHECK_THROWS_AS(generate_synthetic({0, 1, false}), PreconditionError);
}

TEST_CASE("null response override zeroes the analytic risk") {
    SyntheticSample s = generate_synthetic({400, 9, true});
    for (double r : s.true_risk) CHECK(r == 0.0);
    // labels stay stochastic in both groups
    std::size_t pos = 0;
    for (auto y : s.data.labels) pos += y;
    CHECK(pos > 100);
    CHECK(pos < 300);
}

TEST_CASE("grid sanity for the random theorem inputs") {
    Rng rng(21);
    GridDGP g = random_grid_dgp(50, rng);
    double sum_s = 0.0, sum_ns = 0.0;
    for (std::size_t i = 0; i < g.cells; ++i) {
        sum_s += g.mass_s[i];
        sum_ns += g.mass_ns[i];
        CHECK(g.risk(i) == std::fabs(g.eta_s[i] - g.eta_ns[i]));
    }
    CHECK(sum_s == doctest::Approx(1.0));
    CHECK(sum_ns == doctest::Approx(1.0));

    GridDGP shared = random_shared_mass_dgp(30, rng);
    CHECK(shared.mass_s == shared.mass_ns);
}

namespace {

BiasExperimentConfig small_config() {
    BiasExperimentConfig cfg;
    cfg.seeds = 2;
    cfg.n = 1200;
    cfg.base_seed = 17;
    cfg.forest.m_target = 30;
    cfg.forest.tree.min_leaf = 10;
    cfg.boost.rounds = 50;
    return cfg;
}

}  // namespace

TEST_CASE("bias experiment aggregates per-seed bin means") {
    BiasExperimentConfig cfg = small_config();
    BiasReport rep = run_bias_experiment(cfg);

    REQUIRE(rep.foresee_bins.size() == kBiasBins);
    REQUIRE(rep.baseline_bins.size() == kBiasBins);
    REQUIRE(rep.foresee_seed_means.size() == cfg.seeds);

    std::size_t total = 0;
    for (std::size_t b = 0; b < kBiasBins; ++b) {
        const BiasBin& bin = rep.foresee_bins[b];
        CHECK(bin.low == doctest::Approx(b / 20.0));
        CHECK(bin.high == doctest::Approx((b + 1) / 20.0));
        CHECK(bin.count == rep.baseline_bins[b].count);
        total += bin.count;
        if (bin.count > 0) {
            CHECK(bin.mean >= 0.0);
            CHECK(bin.mean <= 1.0);
            CHECK(bin.sdev >= 0.0);
        } else {
            CHECK(std::isnan(bin.mean));
        }
    }
    CHECK(total == cfg.seeds * cfg.n);

    // mid-range bins have plenty of mass under the triangular risk density
    CHECK(rep.foresee_bins[9].count > 100);

    // estimates in the middle bins should sit near the bin centers even at
    // this small scale; the full-scale tolerance lives in the acceptance suite
    for (std::size_t b = 6; b < 14; ++b) {
        double center = (static_cast<double>(b) + 0.5) / 20.0;
        CHECK(std::fabs(rep.foresee_bins[b].mean - center) < 0.12);
    }
}

TEST_CASE("bias experiment is deterministic") {
    BiasExperimentConfig cfg = small_config();
    cfg.seeds = 2;
    cfg.n = 600;
    cfg.forest.m_target = 15;
    cfg.boost.rounds = 25;
    BiasReport a = run_bias_experiment(cfg);
    BiasReport b = run_bias_experiment(cfg);
    cfg.threads = 3;
    BiasReport c = run_bias_experiment(cfg);
    for (std::size_t i = 0; i < kBiasBins; ++i) {
        if (a.foresee_bins[i].count == 0) {
            CHECK(b.foresee_bins[i].count == 0);
            CHECK(c.foresee_bins[i].count == 0);
            continue;
        }
        CHECK(a.foresee_bins[i].mean == b.foresee_bins[i].mean);
        CHECK(a.foresee_bins[i].mean == c.foresee_bins[i].mean);
        CHECK(a.baseline_bins[i].mean == b.baseline_bins[i].mean);
        CHECK(a.baseline_bins[i].mean == c.baseline_bins[i].mean);
        CHECK(a.foresee_bins[i].sdev == c.foresee_bins[i].sdev);
    }
}

TEST_CASE("independent response collapses the estimated risk") {
    BiasExperimentConfig cfg;
    cfg.seeds = 2;
    cfg.n = 2000;
    cfg.base_seed = 23;
    cfg.null_response = true;
    cfg.forest.m_target = 40;
    // a 0.55 accuracy bar is unreachable on a coin-flip response, so the
    // filter here only screens out degenerate fits
    cfg.forest.beta = 0.45;
    cfg.boost.rounds = 40;
    BiasReport rep = run_bias_experiment(cfg);
    // every instance lands in the lowest bin
    CHECK(rep.foresee_bins[0].count == cfg.seeds * cfg.n);
    CHECK(rep.foresee_bins[0].mean < 0.15);
}

TEST_CASE("estimator failures carry the seed id") {
    BiasExperimentConfig cfg = small_config();
    cfg.seeds = 2;
    cfg.n = 400;
    cfg.forest.beta = 0.999999;  // unattainable
    cfg.forest.m_target = 10;
    CHECK_THROWS_WITH_AS(run_bias_experiment(cfg), doctest::Contains("seed"), EstimatorError);
}
