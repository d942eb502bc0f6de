#include "foresee/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace foresee {

namespace {

const char* group_name(int g) { return g == 1 ? "protected" : "non-protected"; }

void check_aligned(const std::vector<std::uint8_t>& preds, const std::vector<std::uint8_t>& labels,
                   const std::vector<std::uint8_t>& sensitive) {
    if (preds.empty()) throw PreconditionError("metrics: empty prediction vector");
    if (preds.size() != labels.size() || preds.size() != sensitive.size())
        throw PreconditionError("metrics: preds, labels and sensitive must be the same length");
}

double rate_or_throw(std::size_t num, std::size_t den, int g, const char* what) {
    if (den == 0)
        throw PreconditionError(std::string("metrics: ") + group_name(g) + " group has no " + what);
    return static_cast<double>(num) / static_cast<double>(den);
}

}  // namespace

std::string to_string(OddsAggregation agg) {
    return agg == OddsAggregation::mean ? "mean" : "max";
}

double GroupConfusion::tpr(int g) const {
    return rate_or_throw(tp[g], positives(g), g, "positive labels");
}

double GroupConfusion::fpr(int g) const {
    return rate_or_throw(fp[g], negatives(g), g, "negative labels");
}

double GroupConfusion::error_rate(int g) const {
    return rate_or_throw(fp[g] + fn[g], total(g), g, "members");
}

double GroupConfusion::positive_prediction_rate(int g) const {
    return rate_or_throw(tp[g] + fp[g], total(g), g, "members");
}

GroupConfusion confusion_of(const std::vector<std::uint8_t>& preds,
                            const std::vector<std::uint8_t>& labels,
                            const std::vector<std::uint8_t>& sensitive) {
    check_aligned(preds, labels, sensitive);
    GroupConfusion c;
    for (std::size_t i = 0; i < preds.size(); ++i) {
        int g = sensitive[i] ? 1 : 0;
        if (labels[i]) {
            (preds[i] ? c.tp : c.fn)[g] += 1;
        } else {
            (preds[i] ? c.fp : c.tn)[g] += 1;
        }
    }
    return c;
}

double demographic_parity_gap(const std::vector<std::uint8_t>& preds,
                              const std::vector<std::uint8_t>& sensitive) {
    if (preds.empty()) throw PreconditionError("metrics: empty prediction vector");
    if (preds.size() != sensitive.size())
        throw PreconditionError("metrics: preds and sensitive must be the same length");
    std::array<std::size_t, 2> n{}, pos{};
    for (std::size_t i = 0; i < preds.size(); ++i) {
        int g = sensitive[i] ? 1 : 0;
        n[g] += 1;
        pos[g] += preds[i];
    }
    double r1 = rate_or_throw(pos[1], n[1], 1, "members");
    double r0 = rate_or_throw(pos[0], n[0], 0, "members");
    return std::fabs(r1 - r0);
}

double equal_opportunity_gap(const std::vector<std::uint8_t>& preds,
                             const std::vector<std::uint8_t>& labels,
                             const std::vector<std::uint8_t>& sensitive) {
    GroupConfusion c = confusion_of(preds, labels, sensitive);
    return std::fabs(c.tpr(1) - c.tpr(0));
}

double equalized_odds_gap(const std::vector<std::uint8_t>& preds,
                          const std::vector<std::uint8_t>& labels,
                          const std::vector<std::uint8_t>& sensitive, OddsAggregation agg) {
    GroupConfusion c = confusion_of(preds, labels, sensitive);
    double tpr_gap = std::fabs(c.tpr(1) - c.tpr(0));
    double fpr_gap = std::fabs(c.fpr(1) - c.fpr(0));
    return agg == OddsAggregation::mean ? 0.5 * (tpr_gap + fpr_gap) : std::max(tpr_gap, fpr_gap);
}

double misclassification_gap(const std::vector<std::uint8_t>& preds,
                             const std::vector<std::uint8_t>& labels,
                             const std::vector<std::uint8_t>& sensitive) {
    GroupConfusion c = confusion_of(preds, labels, sensitive);
    return std::fabs(c.error_rate(1) - c.error_rate(0));
}

IndexSet top_risk_subset(const std::vector<double>& risks, double gamma) {
    if (risks.empty()) throw PreconditionError("top_risk_subset: empty risk vector");
    if (!(gamma > 0.0 && gamma <= 1.0))
        throw PreconditionError("top_risk_subset: gamma must lie in (0, 1]");
    std::size_t take = static_cast<std::size_t>(
        std::ceil(gamma * static_cast<double>(risks.size())));
    take = std::clamp<std::size_t>(take, 1, risks.size());
    IndexSet order(risks.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return risks[a] > risks[b]; });
    order.resize(take);
    std::sort(order.begin(), order.end());
    return order;
}

double subpop_misclassification_gap(const std::vector<std::uint8_t>& preds,
                                    const std::vector<std::uint8_t>& labels,
                                    const std::vector<std::uint8_t>& sensitive,
                                    const std::vector<double>& risks, double gamma) {
    check_aligned(preds, labels, sensitive);
    if (risks.size() != preds.size())
        throw PreconditionError("metrics: risks must align with predictions");
    IndexSet keep = top_risk_subset(risks, gamma);
    std::vector<std::uint8_t> p = gather(preds, keep);
    std::vector<std::uint8_t> l = gather(labels, keep);
    std::vector<std::uint8_t> s = gather(sensitive, keep);
    return misclassification_gap(p, l, s);
}

SubsetMetrics compute_subset_metrics(const std::string& name,
                                     const std::vector<std::uint8_t>& preds,
                                     const std::vector<std::uint8_t>& labels,
                                     const std::vector<std::uint8_t>& sensitive,
                                     OddsAggregation agg) {
    SubsetMetrics m;
    m.subset = name;
    m.count = preds.size();
    if (preds.empty()) {
        m.accuracy = m.f1 = m.dem_parity = m.opportunity = m.odds = m.mis_gap =
            std::numeric_limits<double>::quiet_NaN();
        m.notes.push_back("subset is empty");
        return m;
    }
    m.confusion = confusion_of(preds, labels, sensitive);
    m.accuracy = accuracy_of(preds, labels);
    m.f1 = f1_of(preds, labels);
    auto guarded = [&](double& slot, const char* metric, auto compute) {
        try {
            slot = compute();
        } catch (const PreconditionError& e) {
            slot = std::numeric_limits<double>::quiet_NaN();
            m.notes.push_back(std::string(metric) + ": " + e.what());
        }
    };
    guarded(m.dem_parity, "dem_parity", [&] { return demographic_parity_gap(preds, sensitive); });
    guarded(m.opportunity, "opportunity",
            [&] { return equal_opportunity_gap(preds, labels, sensitive); });
    guarded(m.odds, "odds", [&] { return equalized_odds_gap(preds, labels, sensitive, agg); });
    guarded(m.mis_gap, "mis_gap", [&] { return misclassification_gap(preds, labels, sensitive); });
    return m;
}

const SubsetMetrics* FairnessReport::find(const std::string& classifier,
                                          const std::string& subset) const {
    for (const auto& c : classifiers) {
        if (c.classifier != classifier) continue;
        for (const auto& s : c.subsets)
            if (s.subset == subset) return &s;
    }
    return nullptr;
}

FairnessReport evaluate_fairness(const Dataset& data, const IndexSet& train, const IndexSet& test,
                                 const std::vector<double>& test_risks,
                                 const EvaluationConfig& cfg) {
    if (test.empty()) throw PreconditionError("evaluate_fairness: empty test set");
    if (test_risks.size() != test.size())
        throw PreconditionError("evaluate_fairness: risks must align with the test set");
    if (!(cfg.lambda >= 0.0 && cfg.lambda <= 1.0))
        throw PreconditionError("evaluate_fairness: lambda must lie in [0, 1]");

    FairnessReport report;
    report.dataset = data.name;
    report.lambda = cfg.lambda;
    report.odds_agg = cfg.odds_agg;
    report.train_count = train.size();
    report.test_count = test.size();

    IndexSet high, low;
    for (std::size_t i = 0; i < test.size(); ++i)
        (test_risks[i] > cfg.lambda ? high : low).push_back(i);

    std::vector<std::uint8_t> labels = gather(data.labels, test);
    std::vector<std::uint8_t> sens = gather(data.sensitive, test);

    for (ClassifierKind kind : cfg.kinds) {
        ClassifierModel model = fit_classifier(data, train, kind, cfg.params, cfg.threads);
        std::vector<std::uint8_t> preds = predict_many(model, data, test, cfg.threads);

        ClassifierEval eval;
        eval.classifier = to_string(kind);
        eval.convergence_warning = model.convergence_warning;
        eval.subsets.push_back(
            compute_subset_metrics("all", preds, labels, sens, cfg.odds_agg));
        auto slice = [&](const char* name, const IndexSet& pos) {
            return compute_subset_metrics(name, gather(preds, pos), gather(labels, pos),
                                          gather(sens, pos), cfg.odds_agg);
        };
        eval.subsets.push_back(slice("high", high));
        eval.subsets.push_back(slice("low", low));
        report.classifiers.push_back(std::move(eval));
    }
    return report;
}

}  // namespace foresee
