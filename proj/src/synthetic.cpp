#include "foresee/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

namespace foresee {

SyntheticSample generate_synthetic(const SyntheticConfig& cfg) {
    if (cfg.n < 1) throw PreconditionError("generate_synthetic: n must be at least 1");
    Rng rng(cfg.seed);
    Matrix x(cfg.n, 2);
    std::vector<std::uint8_t> sens(cfg.n), labels(cfg.n);
    std::vector<double> risk(cfg.n);
    for (std::size_t i = 0; i < cfg.n; ++i) {
        double a = rng.uniform();
        double b = rng.uniform();
        x.at(i, 0) = a;
        x.at(i, 1) = b;
        bool s = rng.uniform() < 0.5;
        double r = cfg.null_response ? 0.0 : 0.5 * (a + b);
        double p_pos = cfg.null_response ? 0.5 : (s ? 1.0 : 1.0 - r);
        // uniform() < 1 always holds, so the protected group's sure label
        // costs a draw too and the stream stays aligned across configs
        bool y = rng.uniform() < p_pos;
        sens[i] = s;
        labels[i] = y;
        risk[i] = r;
    }
    return {Dataset::from_numeric("synthetic", std::move(x), std::move(sens), std::move(labels)),
            std::move(risk)};
}

void GridDGP::validate() const {
    if (cells == 0) throw PreconditionError("grid: no cells");
    if (eta_s.size() != cells || eta_ns.size() != cells || mass_s.size() != cells ||
        mass_ns.size() != cells)
        throw PreconditionError("grid: table sizes disagree with the cell count");
    double sum_s = 0.0, sum_ns = 0.0;
    for (std::size_t i = 0; i < cells; ++i) {
        if (!(eta_s[i] >= 0.0 && eta_s[i] <= 1.0) || !(eta_ns[i] >= 0.0 && eta_ns[i] <= 1.0))
            throw PreconditionError("grid: response values must lie in [0, 1]");
        if (!(mass_s[i] >= 0.0) || !(mass_ns[i] >= 0.0))
            throw PreconditionError("grid: cell masses must be non-negative");
        sum_s += mass_s[i];
        sum_ns += mass_ns[i];
    }
    if (std::fabs(sum_s - 1.0) > 1e-9 || std::fabs(sum_ns - 1.0) > 1e-9)
        throw PreconditionError("grid: cell masses must sum to 1 per group");
}

namespace {

std::vector<double> random_simplex(std::size_t cells, Rng& rng) {
    std::vector<double> w(cells);
    double total = 0.0;
    for (auto& v : w) {
        v = 0.05 + rng.uniform();  // floor keeps every cell reachable
        total += v;
    }
    for (auto& v : w) v /= total;
    return w;
}

}  // namespace

GridDGP random_grid_dgp(std::size_t cells, Rng& rng) {
    GridDGP g;
    g.cells = cells;
    g.eta_s.resize(cells);
    g.eta_ns.resize(cells);
    for (std::size_t i = 0; i < cells; ++i) {
        g.eta_s[i] = rng.uniform();
        g.eta_ns[i] = rng.uniform();
    }
    g.mass_s = random_simplex(cells, rng);
    g.mass_ns = random_simplex(cells, rng);
    g.validate();
    return g;
}

GridDGP random_shared_mass_dgp(std::size_t cells, Rng& rng) {
    GridDGP g = random_grid_dgp(cells, rng);
    g.mass_ns = g.mass_s;
    return g;
}

std::vector<std::uint8_t> random_classifier_table(std::size_t cells, Rng& rng) {
    std::vector<std::uint8_t> g(cells);
    for (auto& v : g) v = static_cast<std::uint8_t>(rng.below(2));
    return g;
}

namespace {

struct SeedAccum {
    std::array<double, kBiasBins> foresee_sum{};
    std::array<double, kBiasBins> baseline_sum{};
    std::array<std::size_t, kBiasBins> count{};
};

std::size_t bin_of(double r) {
    auto k = static_cast<std::size_t>(r * static_cast<double>(kBiasBins));
    return std::min(k, kBiasBins - 1);
}

std::vector<BiasBin> reduce_bins(const std::vector<std::vector<double>>& seed_means,
                                 const std::vector<SeedAccum>& accums) {
    std::vector<BiasBin> bins(kBiasBins);
    for (std::size_t b = 0; b < kBiasBins; ++b) {
        BiasBin& bin = bins[b];
        bin.low = static_cast<double>(b) / kBiasBins;
        bin.high = static_cast<double>(b + 1) / kBiasBins;
        double sum = 0.0, sq = 0.0;
        std::size_t seeds_with_data = 0;
        for (std::size_t k = 0; k < seed_means.size(); ++k) {
            bin.count += accums[k].count[b];
            double m = seed_means[k][b];
            if (std::isnan(m)) continue;
            ++seeds_with_data;
            sum += m;
            sq += m * m;
        }
        if (seeds_with_data == 0) {
            bin.mean = bin.sdev = std::numeric_limits<double>::quiet_NaN();
            continue;
        }
        double n = static_cast<double>(seeds_with_data);
        bin.mean = sum / n;
        bin.sdev = seeds_with_data < 2
                       ? 0.0
                       : std::sqrt(std::max(0.0, (sq - sum * sum / n) / (n - 1.0)));
    }
    return bins;
}

}  // namespace

BiasReport run_bias_experiment(const BiasExperimentConfig& cfg) {
    if (cfg.seeds < 2) throw PreconditionError("run_bias_experiment: need at least 2 seeds");
    if (cfg.n < 1) throw PreconditionError("run_bias_experiment: n must be at least 1");

    std::vector<SeedAccum> accums(cfg.seeds);
    parallel_for(cfg.seeds, cfg.threads, [&](std::size_t k) {
        std::uint64_t seed = derive_seed(cfg.base_seed, k);
        try {
            SyntheticSample sample = generate_synthetic({cfg.n, seed, cfg.null_response});
            IndexSet all(sample.data.size());
            std::iota(all.begin(), all.end(), std::size_t{0});

            ForestParams fp = cfg.forest;
            fp.seed = derive_seed(seed, 1);
            Forest forest = build_forest(sample.data, all, fp, 1);
            FeatureView fview = make_view(sample.data, fp.include_sensitive);

            BoostParams bp = cfg.boost;
            bp.seed = derive_seed(seed, 2);
            AdditiveModel boosted = fit_additive(sample.data, all, bp);
            FeatureView bview = make_view(sample.data, false);

            SeedAccum& acc = accums[k];
            for (std::size_t i = 0; i < sample.data.size(); ++i) {
                std::size_t b = bin_of(sample.true_risk[i]);
                acc.foresee_sum[b] += foresee_risk(forest, fview, i);
                acc.baseline_sum[b] += baseline_risk(boosted, bview, i);
                acc.count[b] += 1;
            }
        } catch (const EstimatorError& e) {
            throw EstimatorError("seed " + std::to_string(k) + ": " + e.what());
        }
    });

    BiasReport rep;
    rep.seeds = cfg.seeds;
    rep.n = cfg.n;
    rep.foresee_seed_means.assign(cfg.seeds,
                                  std::vector<double>(kBiasBins, std::numeric_limits<double>::quiet_NaN()));
    rep.baseline_seed_means = rep.foresee_seed_means;
    for (std::size_t k = 0; k < cfg.seeds; ++k) {
        for (std::size_t b = 0; b < kBiasBins; ++b) {
            if (accums[k].count[b] == 0) continue;
            double n = static_cast<double>(accums[k].count[b]);
            rep.foresee_seed_means[k][b] = accums[k].foresee_sum[b] / n;
            rep.baseline_seed_means[k][b] = accums[k].baseline_sum[b] / n;
        }
    }
    rep.foresee_bins = reduce_bins(rep.foresee_seed_means, accums);
    rep.baseline_bins = reduce_bins(rep.baseline_seed_means, accums);
    return rep;
}

}  // namespace foresee
