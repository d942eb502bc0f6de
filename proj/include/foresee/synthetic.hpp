#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "foresee/boosted.hpp"
#include "foresee/dataset.hpp"
#include "foresee/forest.hpp"

namespace foresee {

struct SyntheticConfig {
    std::size_t n = 5000;
    std::uint64_t seed = 0;
    // override used in testing: both groups draw Y ~ Bernoulli(0.5), so the
    // analytic risk is identically zero
    bool null_response = false;
};

/// Two uniform features on [0,1]^2, balanced groups. The protected group has
/// Y = 1 always; the other draws Y ~ Bernoulli(1 - (x0+x1)/2), which makes the
/// analytic risk (x0+x1)/2. The risk travels in a sidecar so it can never leak
/// into anything fit on `data`.
struct SyntheticSample {
    Dataset data;
    std::vector<double> true_risk;
};

SyntheticSample generate_synthetic(const SyntheticConfig& cfg);

/// Discrete two-group response model over a finite set of feature cells.
/// Every probability is exact, so the theorem oracles carry no sampling noise.
struct GridDGP {
    std::size_t cells = 0;
    std::vector<double> eta_s;   // P(Y=1 | cell, protected)
    std::vector<double> eta_ns;  // P(Y=1 | cell, non-protected)
    std::vector<double> mass_s;  // P(cell | protected), sums to 1
    std::vector<double> mass_ns;

    double risk(std::size_t i) const { return std::fabs(eta_s[i] - eta_ns[i]); }
    void validate() const;
};

GridDGP random_grid_dgp(std::size_t cells, Rng& rng);

/// Same as random_grid_dgp but with one shared feature law for both groups.
GridDGP random_shared_mass_dgp(std::size_t cells, Rng& rng);

std::vector<std::uint8_t> random_classifier_table(std::size_t cells, Rng& rng);

inline constexpr std::size_t kBiasBins = 20;

struct BiasBin {
    double low = 0.0;
    double high = 0.0;
    double mean = 0.0;   // across per-seed bin means
    double sdev = 0.0;   // sample deviation across per-seed bin means
    std::size_t count = 0;  // instances pooled over all seeds
};

struct BiasReport {
    std::size_t seeds = 0;
    std::size_t n = 0;
    std::vector<BiasBin> foresee_bins;
    std::vector<BiasBin> baseline_bins;
    // [seed][bin] mean estimate for that seed, NaN where the bin was empty
    std::vector<std::vector<double>> foresee_seed_means;
    std::vector<std::vector<double>> baseline_seed_means;
};

struct BiasExperimentConfig {
    std::size_t seeds = 20;
    std::size_t n = 5000;
    std::uint64_t base_seed = 0;
    ForestParams forest;
    BoostParams boost;
    unsigned threads = 1;
    bool null_response = false;

    BiasExperimentConfig() {
        // A tree that splits on the sensitive column sends each group to its
        // own leaf, and the absent-group rule then pins that leaf's risk at 1
        // regardless of the features. The bias measurement needs the risk the
        // features themselves carry, so the ensemble here runs feature-only.
        forest.include_sensitive = false;
    }
};

/// Monte-Carlo comparison of both estimators against the analytic risk:
/// per seed, draw a sample, fit both on it, score every instance, and bin the
/// estimates by true risk. Estimator failure aborts with the seed id.
BiasReport run_bias_experiment(const BiasExperimentConfig& cfg);

}  // namespace foresee
