#pragma once

#include <span>
#include <vector>

#include "foresee/synthetic.hpp"

namespace foresee {

/// For a deterministic classifier table over a grid, builds each cell's group
/// misclassification probabilities from the response tables and returns the
/// max over cells of | |mis_s - mis_ns| - risk |. The identity says this is 0.
double verify_theorem1(std::span<const double> eta_s, std::span<const double> eta_ns,
                       std::span<const std::uint8_t> classifier);

struct AggregateBoundCheck {
    double lhs = 0.0;         // |error-rate gap between groups|
    double risk_terms = 0.0;  // half the mean risk under each group's feature law
    double mass_gap = 0.0;    // sum over cells of |mass_s - mass_ns|
    double standard_tv = 0.0;
    double rhs = 0.0;         // risk_terms + mass_gap
    // The bound carries the unhalved mass difference; the conventional total
    // variation is half that. Both are reported, and this flag marks inputs
    // where the choice changes the number.
    bool tv_convention_differs = false;

    bool holds() const { return lhs <= rhs; }
};

AggregateBoundCheck verify_theorem2(const GridDGP& dgp,
                                    const std::vector<std::uint8_t>& classifier);

struct SubpopBoundCheck {
    double gap = 0.0;        // misclassification gap conditional on the subset
    double kappa = 0.0;      // (inf of the classifier over the subset - 1/2) / 2
    double mean_risk = 0.0;  // E[risk | subset]
    double bound = 0.0;      // kappa * mean_risk
    double subset_mass = 0.0;

    bool holds() const { return gap > bound; }
};

/// Hypotheses, all checked: the two groups share one feature law; eta_s is
/// strictly above eta_ns on every subset cell; the stochastic classifier stays
/// strictly above 1/2 on the subset; the subset mass exceeds gamma.
SubpopBoundCheck verify_theorem3(const GridDGP& dgp, const std::vector<double>& classifier,
                                 const std::vector<std::uint8_t>& subset, double gamma);

struct SubpopCase {
    GridDGP dgp;
    std::vector<double> classifier;
    std::vector<std::uint8_t> subset;
    double gamma = 0.0;
};

/// Randomized instance satisfying every verify_theorem3 hypothesis.
SubpopCase random_subpop_case(std::size_t cells, Rng& rng);

}  // namespace foresee
