#include "foresee/mitigation.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numeric>

namespace foresee {

std::string to_string(Strategy s) {
    switch (s) {
        case Strategy::pre_train_and_test: return "pre_train_and_test";
        case Strategy::pre_test_only: return "pre_test_only";
        case Strategy::post_demP: return "post_demP";
        case Strategy::post_eqODD: return "post_eqODD";
        case Strategy::post_eqOPP: return "post_eqOPP";
    }
    return "unknown";
}

Strategy strategy_from_string(const std::string& name) {
    if (name == "pre_train_and_test") return Strategy::pre_train_and_test;
    if (name == "pre_test_only") return Strategy::pre_test_only;
    if (name == "post_demP") return Strategy::post_demP;
    if (name == "post_eqODD") return Strategy::post_eqODD;
    if (name == "post_eqOPP") return Strategy::post_eqOPP;
    throw PreconditionError("unknown mitigation strategy: " + name);
}

bool is_postprocess(Strategy s) {
    return s == Strategy::post_demP || s == Strategy::post_eqODD || s == Strategy::post_eqOPP;
}

std::string to_string(ConstraintKind c) {
    switch (c) {
        case ConstraintKind::dem_parity: return "demP";
        case ConstraintKind::eq_odds: return "eqODD";
        case ConstraintKind::eq_opportunity: return "eqOPP";
    }
    return "unknown";
}

namespace {

void check_group_presence(const Dataset& data, const IndexSet& rows, const char* split_name) {
    if (rows.empty())
        throw ValidationError(std::string("preprocess_filter: the ") + split_name +
                              " split is empty after filtering");
    bool any[2] = {false, false};
    for (std::size_t i : rows) any[data.sensitive[i] ? 1 : 0] = true;
    if (!any[0] || !any[1])
        throw ValidationError(std::string("preprocess_filter: the ") + split_name +
                              " split lost the " + (any[0] ? "protected" : "non-protected") +
                              " group");
}

IndexSet keep_low_risk(const IndexSet& rows, const std::vector<double>& risks, double lambda) {
    IndexSet out;
    out.reserve(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i)
        if (!(risks[i] > lambda)) out.push_back(rows[i]);
    return out;
}

}  // namespace

FilteredSplit preprocess_filter(const Dataset& data, const IndexSet& train, const IndexSet& test,
                                const std::vector<double>& train_risks,
                                const std::vector<double>& test_risks, double lambda,
                                FilterMode mode) {
    if (!(lambda >= 0.0 && lambda <= 1.0))
        throw PreconditionError("preprocess_filter: lambda must lie in [0, 1]");
    if (train_risks.size() != train.size() || test_risks.size() != test.size())
        throw PreconditionError("preprocess_filter: risks must align with their index sets");

    FilteredSplit out;
    out.test = keep_low_risk(test, test_risks, lambda);
    out.removed_test = test.size() - out.test.size();
    if (mode == FilterMode::train_and_test) {
        out.train = keep_low_risk(train, train_risks, lambda);
        out.removed_train = train.size() - out.train.size();
        check_group_presence(data, out.train, "train");
    } else {
        out.train = train;
    }
    check_group_presence(data, out.test, "test");
    return out;
}

namespace {

struct TargetRow {
    double proba = 0.0;
    std::uint8_t label = 0;
    std::uint8_t group = 0;
};

struct PairScore {
    // integer-ranked so ties resolve without float comparisons
    std::size_t errors = 0;
    std::size_t spread = 0;  // |grid index gap|
    std::size_t ip = 0;      // protected threshold index
    std::size_t io = 0;

    bool operator<(const PairScore& other) const {
        if (errors != other.errors) return errors < other.errors;
        if (spread != other.spread) return spread < other.spread;
        if (ip != other.ip) return ip < other.ip;
        return io < other.io;
    }
};

struct CellCounts {
    std::array<std::size_t, 2> n{}, pos_label{}, neg_label{};
    std::array<std::size_t, 2> pred_pos{}, tp{}, fp{};
};

double constraint_metric(const CellCounts& c, ConstraintKind kind) {
    auto rate = [](std::size_t num, std::size_t den) {
        return static_cast<double>(num) / static_cast<double>(den);
    };
    switch (kind) {
        case ConstraintKind::dem_parity:
            return std::fabs(rate(c.pred_pos[1], c.n[1]) - rate(c.pred_pos[0], c.n[0]));
        case ConstraintKind::eq_opportunity:
            return std::fabs(rate(c.tp[1], c.pos_label[1]) - rate(c.tp[0], c.pos_label[0]));
        case ConstraintKind::eq_odds: {
            double tpr_gap = std::fabs(rate(c.tp[1], c.pos_label[1]) - rate(c.tp[0], c.pos_label[0]));
            double fpr_gap = std::fabs(rate(c.fp[1], c.neg_label[1]) - rate(c.fp[0], c.neg_label[0]));
            return 0.5 * (tpr_gap + fpr_gap);
        }
    }
    return 0.0;
}

}  // namespace

PostprocessResult postprocess_thresholds(const ClassifierModel& model, const Dataset& data,
                                         const IndexSet& eval,
                                         const std::vector<std::uint8_t>& high_mask,
                                         ConstraintKind constraint, double epsilon,
                                         std::size_t grid, unsigned threads) {
    if (eval.empty()) throw PreconditionError("postprocess_thresholds: empty eval set");
    if (high_mask.size() != eval.size())
        throw PreconditionError("postprocess_thresholds: mask must align with the eval set");
    if (!(epsilon >= 0.0)) throw PreconditionError("postprocess_thresholds: epsilon must be >= 0");
    if (grid < 2) throw PreconditionError("postprocess_thresholds: grid needs at least 2 points");

    std::vector<double> probas = predict_proba_many(model, data, eval, threads);

    std::vector<TargetRow> target;
    for (std::size_t i = 0; i < eval.size(); ++i) {
        if (!high_mask[i]) continue;
        target.push_back({probas[i], data.labels[eval[i]], data.sensitive[eval[i]]});
    }
    if (target.empty())
        throw PreconditionError("postprocess_thresholds: no rows marked high-risk");

    CellCounts base;
    for (const TargetRow& t : target) {
        int g = t.group ? 1 : 0;
        base.n[g] += 1;
        (t.label ? base.pos_label : base.neg_label)[g] += 1;
    }
    if (base.n[0] == 0 || base.n[1] == 0)
        throw PreconditionError(std::string("postprocess_thresholds: the ") +
                                (base.n[0] ? "protected" : "non-protected") +
                                " group is absent from the high-risk subset");
    if (constraint != ConstraintKind::dem_parity && (base.pos_label[0] == 0 || base.pos_label[1] == 0))
        throw PreconditionError(
            "postprocess_thresholds: a group has no positive labels in the high-risk subset, "
            "so the constraint rate is undefined");
    if (constraint == ConstraintKind::eq_odds && (base.neg_label[0] == 0 || base.neg_label[1] == 0))
        throw PreconditionError(
            "postprocess_thresholds: a group has no negative labels in the high-risk subset, "
            "so the constraint rate is undefined");

    double step = 1.0 / static_cast<double>(grid - 1);
    auto evaluate_pair = [&](std::size_t ip, std::size_t io) {
        double tp_thresh = static_cast<double>(ip) * step;
        double to_thresh = static_cast<double>(io) * step;
        CellCounts c = base;
        std::size_t errors = 0;
        for (const TargetRow& t : target) {
            int g = t.group ? 1 : 0;
            bool pred = t.proba >= (t.group ? tp_thresh : to_thresh);
            if (pred) {
                c.pred_pos[g] += 1;
                (t.label ? c.tp : c.fp)[g] += 1;
            }
            errors += pred != static_cast<bool>(t.label);
        }
        return std::pair<double, std::size_t>(constraint_metric(c, constraint), errors);
    };

    struct RowBest {
        bool any_feasible = false;
        PairScore feasible_best;
        double min_constraint = std::numeric_limits<double>::infinity();
        PairScore constraint_best;
    };
    std::vector<RowBest> rows(grid);
    parallel_for(grid, threads, [&](std::size_t ip) {
        RowBest& best = rows[ip];
        for (std::size_t io = 0; io < grid; ++io) {
            auto [metric, errors] = evaluate_pair(ip, io);
            std::size_t spread = ip > io ? ip - io : io - ip;
            PairScore score{errors, spread, ip, io};
            if (metric <= epsilon && (!best.any_feasible || score < best.feasible_best)) {
                best.any_feasible = true;
                best.feasible_best = score;
            }
            if (metric < best.min_constraint ||
                (metric == best.min_constraint && score < best.constraint_best)) {
                best.min_constraint = metric;
                best.constraint_best = score;
            }
        }
    });

    bool any_feasible = false;
    PairScore chosen;
    double min_constraint = std::numeric_limits<double>::infinity();
    PairScore fallback;
    for (const RowBest& r : rows) {
        if (r.any_feasible && (!any_feasible || r.feasible_best < chosen)) {
            any_feasible = true;
            chosen = r.feasible_best;
        }
        if (r.min_constraint < min_constraint ||
            (r.min_constraint == min_constraint && r.constraint_best < fallback)) {
            min_constraint = r.min_constraint;
            fallback = r.constraint_best;
        }
    }
    if (!any_feasible) chosen = fallback;

    PostprocessResult out;
    out.plan.constraint = constraint;
    out.plan.epsilon = epsilon;
    out.plan.grid = grid;
    out.plan.feasible = any_feasible;
    out.plan.t_protected = static_cast<double>(chosen.ip) * step;
    out.plan.t_other = static_cast<double>(chosen.io) * step;
    auto [metric, errors] = evaluate_pair(chosen.ip, chosen.io);
    out.plan.constraint_value = metric;
    out.plan.error_rate = static_cast<double>(errors) / static_cast<double>(target.size());

    out.adjusted.resize(eval.size());
    for (std::size_t i = 0; i < eval.size(); ++i) {
        double t = high_mask[i]
                       ? (data.sensitive[eval[i]] ? out.plan.t_protected : out.plan.t_other)
                       : model.threshold;
        out.adjusted[i] = probas[i] >= t;
    }
    return out;
}

namespace {

/// Deterministic stratified pick of roughly `fraction` of `rows`, stratified
/// by (label, group) so the slice keeps every confusion cell populated.
IndexSet validation_slice(const Dataset& data, const IndexSet& rows, double fraction,
                          std::uint64_t seed) {
    std::array<IndexSet, 4> strata;
    for (std::size_t i : rows)
        strata[2 * data.labels[i] + data.sensitive[i]].push_back(i);
    IndexSet picked;
    for (std::size_t k = 0; k < strata.size(); ++k) {
        IndexSet& s = strata[k];
        if (s.empty()) continue;
        Rng rng(derive_seed(seed, 0xa11d + k));
        shuffle(s, rng);
        auto take = static_cast<std::size_t>(
            std::ceil(fraction * static_cast<double>(s.size())));
        take = std::clamp<std::size_t>(take, 1, s.size());
        picked.insert(picked.end(), s.begin(), s.begin() + take);
    }
    std::sort(picked.begin(), picked.end());
    return picked;
}

ConstraintKind constraint_of(Strategy s) {
    switch (s) {
        case Strategy::post_demP: return ConstraintKind::dem_parity;
        case Strategy::post_eqODD: return ConstraintKind::eq_odds;
        case Strategy::post_eqOPP: return ConstraintKind::eq_opportunity;
        default: throw PreconditionError("constraint_of: not a post-processing strategy");
    }
}

}  // namespace

MitigationOutcome run_mitigation(const Dataset& data, const IndexSet& train, const IndexSet& test,
                                 const std::vector<double>& train_risks,
                                 const std::vector<double>& test_risks, ClassifierKind kind,
                                 const MitigationConfig& cfg) {
    if (train_risks.size() != train.size() || test_risks.size() != test.size())
        throw PreconditionError("run_mitigation: risks must align with their index sets");
    if (!(cfg.lambda >= 0.0 && cfg.lambda <= 1.0))
        throw PreconditionError("run_mitigation: lambda must lie in [0, 1]");

    MitigationOutcome out;

    if (!is_postprocess(cfg.strategy)) {
        FilterMode mode = cfg.strategy == Strategy::pre_train_and_test
                              ? FilterMode::train_and_test
                              : FilterMode::test_only;
        FilteredSplit filtered =
            preprocess_filter(data, train, test, train_risks, test_risks, cfg.lambda, mode);
        out.removed_train = filtered.removed_train;
        out.removed_test = filtered.removed_test;

        // same keep rule as preprocess_filter, so risks stay aligned
        std::vector<double> kept_risks;
        kept_risks.reserve(filtered.test.size());
        for (std::size_t i = 0; i < test.size(); ++i)
            if (!(test_risks[i] > cfg.lambda)) kept_risks.push_back(test_risks[i]);

        EvaluationConfig ecfg;
        ecfg.kinds = {kind};
        ecfg.params = cfg.params;
        ecfg.lambda = cfg.lambda;
        ecfg.odds_agg = cfg.odds_agg;
        ecfg.threads = cfg.threads;
        out.report =
            evaluate_fairness(data, filtered.train, filtered.test, kept_risks, ecfg);
        out.report.strategy = to_string(cfg.strategy);
        return out;
    }

    ClassifierModel model = fit_classifier(data, train, kind, cfg.params, cfg.threads);

    IndexSet val = validation_slice(data, train, cfg.validation_fraction, cfg.seed);
    std::vector<double> val_risks;
    val_risks.reserve(val.size());
    {
        IndexSet order(train.size());
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::sort(order.begin(), order.end(),
                  [&](std::size_t a, std::size_t b) { return train[a] < train[b]; });
        for (std::size_t v : val) {
            auto it = std::lower_bound(order.begin(), order.end(), v,
                                       [&](std::size_t pos, std::size_t row) {
                                           return train[pos] < row;
                                       });
            if (it == order.end() || train[*it] != v)
                throw PreconditionError("run_mitigation: validation row missing from train");
            val_risks.push_back(train_risks[*it]);
        }
    }
    std::vector<std::uint8_t> val_high(val.size());
    for (std::size_t i = 0; i < val.size(); ++i) val_high[i] = val_risks[i] > cfg.lambda;

    PostprocessResult fit = postprocess_thresholds(model, data, val, val_high,
                                                   constraint_of(cfg.strategy), cfg.epsilon,
                                                   cfg.grid, cfg.threads);
    out.plan = fit.plan;
    out.used_thresholds = true;

    // apply the fitted pair to the high-risk test rows
    std::vector<double> probas = predict_proba_many(model, data, test, cfg.threads);
    std::vector<std::uint8_t> preds(test.size());
    IndexSet high_pos, low_pos;
    for (std::size_t i = 0; i < test.size(); ++i) {
        bool high = test_risks[i] > cfg.lambda;
        double t = high ? (data.sensitive[test[i]] ? fit.plan.t_protected : fit.plan.t_other)
                        : model.threshold;
        preds[i] = probas[i] >= t;
        (high ? high_pos : low_pos).push_back(i);
    }

    std::vector<std::uint8_t> labels = gather(data.labels, test);
    std::vector<std::uint8_t> sens = gather(data.sensitive, test);

    ClassifierEval eval;
    eval.classifier = to_string(kind);
    eval.convergence_warning = model.convergence_warning;
    eval.subsets.push_back(compute_subset_metrics("all", preds, labels, sens, cfg.odds_agg));
    eval.subsets.push_back(compute_subset_metrics("high", gather(preds, high_pos),
                                                  gather(labels, high_pos),
                                                  gather(sens, high_pos), cfg.odds_agg));
    eval.subsets.push_back(compute_subset_metrics("low", gather(preds, low_pos),
                                                  gather(labels, low_pos), gather(sens, low_pos),
                                                  cfg.odds_agg));

    out.report.dataset = data.name;
    out.report.strategy = to_string(cfg.strategy);
    out.report.lambda = cfg.lambda;
    out.report.odds_agg = cfg.odds_agg;
    out.report.train_count = train.size();
    out.report.test_count = test.size();
    out.report.classifiers.push_back(std::move(eval));
    return out;
}

}  // namespace foresee
