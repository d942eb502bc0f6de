#include "foresee/theorems.hpp"

#include <algorithm>
#include <cmath>

namespace foresee {

namespace {

void check_eta(double v, const char* fn) {
    if (!(v >= 0.0 && v <= 1.0))
        throw PreconditionError(std::string(fn) + ": response values must lie in [0, 1]");
}

// P(prediction != Y | cell, group) for a classifier that outputs 1 with
// probability g at the cell, independent of Y given the cell
double mis_prob(double g, double eta) { return g * (1.0 - eta) + (1.0 - g) * eta; }

}  // namespace

double verify_theorem1(std::span<const double> eta_s, std::span<const double> eta_ns,
                       std::span<const std::uint8_t> classifier) {
    if (eta_s.empty()) throw PreconditionError("verify_theorem1: empty grid");
    if (eta_s.size() != eta_ns.size() || eta_s.size() != classifier.size())
        throw PreconditionError("verify_theorem1: tables must share the grid");
    double worst = 0.0;
    for (std::size_t i = 0; i < eta_s.size(); ++i) {
        check_eta(eta_s[i], "verify_theorem1");
        check_eta(eta_ns[i], "verify_theorem1");
        double g = classifier[i] ? 1.0 : 0.0;
        double delta = std::fabs(mis_prob(g, eta_s[i]) - mis_prob(g, eta_ns[i]));
        double r = std::fabs(eta_s[i] - eta_ns[i]);
        worst = std::max(worst, std::fabs(delta - r));
    }
    return worst;
}

AggregateBoundCheck verify_theorem2(const GridDGP& dgp,
                                    const std::vector<std::uint8_t>& classifier) {
    dgp.validate();
    if (classifier.size() != dgp.cells)
        throw PreconditionError("verify_theorem2: classifier table must cover the grid");

    double err_s = 0.0, err_ns = 0.0, risk_s = 0.0, risk_ns = 0.0, mass_gap = 0.0;
    for (std::size_t i = 0; i < dgp.cells; ++i) {
        double g = classifier[i] ? 1.0 : 0.0;
        err_s += dgp.mass_s[i] * mis_prob(g, dgp.eta_s[i]);
        err_ns += dgp.mass_ns[i] * mis_prob(g, dgp.eta_ns[i]);
        double r = dgp.risk(i);
        risk_s += dgp.mass_s[i] * r;
        risk_ns += dgp.mass_ns[i] * r;
        mass_gap += std::fabs(dgp.mass_s[i] - dgp.mass_ns[i]);
    }

    AggregateBoundCheck out;
    out.lhs = std::fabs(err_s - err_ns);
    out.risk_terms = 0.5 * risk_s + 0.5 * risk_ns;
    out.mass_gap = mass_gap;
    out.standard_tv = 0.5 * mass_gap;
    out.rhs = out.risk_terms + out.mass_gap;
    out.tv_convention_differs = mass_gap > 0.0;
    return out;
}

SubpopBoundCheck verify_theorem3(const GridDGP& dgp, const std::vector<double>& classifier,
                                 const std::vector<std::uint8_t>& subset, double gamma) {
    dgp.validate();
    if (classifier.size() != dgp.cells || subset.size() != dgp.cells)
        throw PreconditionError("verify_theorem3: tables must cover the grid");
    if (!(gamma > 0.0 && gamma < 1.0))
        throw PreconditionError("verify_theorem3: gamma must lie in (0, 1)");
    for (std::size_t i = 0; i < dgp.cells; ++i) {
        if (dgp.mass_s[i] != dgp.mass_ns[i])
            throw PreconditionError(
                "verify_theorem3: the feature law must not depend on the group");
        if (!(classifier[i] >= 0.0 && classifier[i] <= 1.0))
            throw PreconditionError("verify_theorem3: classifier values must lie in [0, 1]");
    }

    double mass = 0.0, inf_g = 1.0;
    bool any = false;
    for (std::size_t i = 0; i < dgp.cells; ++i) {
        if (!subset[i]) continue;
        any = true;
        mass += dgp.mass_s[i];
        inf_g = std::min(inf_g, classifier[i]);
        if (!(dgp.eta_s[i] > dgp.eta_ns[i]))
            throw PreconditionError(
                "verify_theorem3: the protected response must be strictly larger on every "
                "subset cell");
    }
    if (!any) throw PreconditionError("verify_theorem3: empty subset");
    if (!(mass > gamma))
        throw PreconditionError("verify_theorem3: subset mass must exceed gamma");
    if (!(inf_g > 0.5))
        throw PreconditionError(
            "verify_theorem3: the classifier must stay strictly above 1/2 on the subset");

    double err_s = 0.0, err_ns = 0.0, mean_risk = 0.0;
    for (std::size_t i = 0; i < dgp.cells; ++i) {
        if (!subset[i]) continue;
        err_s += dgp.mass_s[i] * mis_prob(classifier[i], dgp.eta_s[i]);
        err_ns += dgp.mass_s[i] * mis_prob(classifier[i], dgp.eta_ns[i]);
        mean_risk += dgp.mass_s[i] * (dgp.eta_s[i] - dgp.eta_ns[i]);
    }

    SubpopBoundCheck out;
    out.subset_mass = mass;
    out.gap = std::fabs(err_s - err_ns) / mass;
    out.kappa = (inf_g - 0.5) / 2.0;
    out.mean_risk = mean_risk / mass;
    out.bound = out.kappa * out.mean_risk;
    return out;
}

SubpopCase random_subpop_case(std::size_t cells, Rng& rng) {
    if (cells < 2) throw PreconditionError("random_subpop_case: need at least 2 cells");
    SubpopCase c;
    c.dgp = random_shared_mass_dgp(cells, rng);
    c.classifier.resize(cells);
    c.subset.assign(cells, 0);

    std::size_t members = 1 + rng.below(cells - 1);
    IndexSet order(cells);
    for (std::size_t i = 0; i < cells; ++i) order[i] = i;
    shuffle(order, rng);
    for (std::size_t i = 0; i < members; ++i) c.subset[order[i]] = 1;

    double mass = 0.0;
    for (std::size_t i = 0; i < cells; ++i) {
        if (c.subset[i]) {
            double low = rng.uniform() * 0.5;          // eta_ns in [0, 0.5)
            double lift = 0.05 + rng.uniform() * 0.4;  // strict separation
            c.dgp.eta_ns[i] = low;
            c.dgp.eta_s[i] = std::min(1.0, low + lift);
            c.classifier[i] = 0.55 + rng.uniform() * 0.45;
            mass += c.dgp.mass_s[i];
        } else {
            c.classifier[i] = rng.uniform();
        }
    }
    c.gamma = mass * (0.1 + 0.8 * rng.uniform());
    return c;
}

}  // namespace foresee
