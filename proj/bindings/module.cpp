#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "foresee/boosted.hpp"
#include "foresee/dataset.hpp"
#include "foresee/forest.hpp"
#include "foresee/metrics.hpp"
#include "foresee/mitigation.hpp"
#include "foresee/serialize.hpp"
#include "foresee/synthetic.hpp"

// Thin native module. Composite results cross as JSON strings; the package
// wrapper in python/foresee parses them into dicts.

namespace py = pybind11;
using namespace foresee;

namespace {

IndexSet all_rows(const Dataset& d) {
    IndexSet v(d.size());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = i;
    return v;
}

int pick_threads(int threads) { return threads > 0 ? threads : default_threads(); }

ForestParams forest_params(std::size_t trees, double beta, double instance_fraction,
                           double feature_fraction, int depth, std::size_t min_leaf,
                           bool include_sensitive, bool optimistic, std::uint64_t seed) {
    ForestParams p;
    p.m_target = trees;
    p.beta = beta;
    p.instance_fraction = instance_fraction;
    p.feature_fraction = feature_fraction;
    p.tree.max_depth = depth;
    p.tree.min_leaf = min_leaf;
    p.include_sensitive = include_sensitive;
    p.optimistic_absent = optimistic;
    p.seed = seed;
    return p;
}

std::vector<double> score_risks(const Dataset& data, const ForestParams& params, double lambda,
                                int threads) {
    IndexSet rows = all_rows(data);
    Forest forest = build_forest(data, rows, params, threads);
    RiskReport report = score_dataset(forest, data, rows, lambda, threads);
    std::vector<double> risks;
    risks.reserve(report.rows.size());
    for (const RiskRow& r : report.rows) risks.push_back(r.risk);
    return risks;
}

std::vector<double> score_baseline(const Dataset& data, std::size_t rounds, int depth,
                                   double learning_rate, std::size_t min_leaf,
                                   std::uint64_t seed, double lambda, int threads) {
    BoostParams bp;
    bp.rounds = rounds;
    bp.max_depth = depth;
    bp.learning_rate = learning_rate;
    bp.min_leaf = min_leaf;
    bp.seed = seed;
    IndexSet rows = all_rows(data);
    AdditiveModel model = fit_additive(data, rows, bp);
    RiskReport report = score_dataset_baseline(model, data, rows, lambda, threads);
    std::vector<double> risks;
    risks.reserve(report.rows.size());
    for (const RiskRow& r : report.rows) risks.push_back(r.risk);
    return risks;
}

std::vector<ClassifierKind> parse_kinds(const std::vector<std::string>& names) {
    std::vector<ClassifierKind> kinds;
    for (const std::string& n : names) kinds.push_back(classifier_from_string(n));
    if (kinds.empty()) throw PreconditionError("no classifiers requested");
    return kinds;
}

std::string evaluate_json(const Dataset& data, const std::vector<std::string>& classifiers,
                          double lambda, double train_ratio, const std::string& odds_agg,
                          const ForestParams& fp, std::uint64_t seed, int threads) {
    SplitPair parts = split(data, train_ratio, seed);
    ForestParams params = fp;
    params.seed = derive_seed(seed, 1);
    Forest forest = build_forest(data, parts.train, params, threads);
    RiskReport risk = score_dataset(forest, data, parts.test, lambda, threads);
    std::vector<double> test_risks;
    test_risks.reserve(risk.rows.size());
    for (const RiskRow& r : risk.rows) test_risks.push_back(r.risk);

    EvaluationConfig cfg;
    cfg.kinds = parse_kinds(classifiers);
    cfg.params.seed = derive_seed(seed, 2);
    cfg.lambda = lambda;
    cfg.odds_agg = odds_agg == "max" ? OddsAggregation::max : OddsAggregation::mean;
    cfg.threads = static_cast<unsigned>(threads);
    FairnessReport report = evaluate_fairness(data, parts.train, parts.test, test_risks, cfg);
    return json_text(fairness_report_json(report));
}

std::string mitigate_json(const Dataset& data, const std::string& strategy,
                          const std::string& classifier, double lambda, double epsilon,
                          double train_ratio, const ForestParams& fp, std::uint64_t seed,
                          int threads) {
    Strategy strat = strategy_from_string(strategy);
    ClassifierKind kind = classifier_from_string(classifier);
    SplitPair parts = split(data, train_ratio, seed);

    ForestParams params = fp;
    params.seed = derive_seed(seed, 1);
    Forest forest = build_forest(data, parts.train, params, threads);
    auto risks_on = [&](const IndexSet& rows) {
        RiskReport r = score_dataset(forest, data, rows, lambda, threads);
        std::vector<double> v;
        v.reserve(r.rows.size());
        for (const RiskRow& row : r.rows) v.push_back(row.risk);
        return v;
    };
    std::vector<double> train_risks = risks_on(parts.train);
    std::vector<double> test_risks = risks_on(parts.test);

    EvaluationConfig ecfg;
    ecfg.kinds = {kind};
    ecfg.params.seed = derive_seed(seed, 2);
    ecfg.lambda = lambda;
    ecfg.threads = static_cast<unsigned>(threads);
    FairnessReport unmitigated = evaluate_fairness(data, parts.train, parts.test, test_risks, ecfg);

    MitigationConfig mcfg;
    mcfg.strategy = strat;
    mcfg.lambda = lambda;
    mcfg.epsilon = epsilon;
    mcfg.seed = derive_seed(seed, 3);
    mcfg.params = ecfg.params;
    mcfg.threads = threads;
    MitigationOutcome outcome =
        run_mitigation(data, parts.train, parts.test, train_risks, test_risks, kind, mcfg);

    Json j = Json::object();
    j["unmitigated"] = fairness_report_json(unmitigated);
    j["mitigated"] = fairness_report_json(outcome.report);
    j["removed_train"] = outcome.removed_train;
    j["removed_test"] = outcome.removed_test;
    if (outcome.used_thresholds) {
        Json plan = Json::object();
        plan["constraint"] = to_string(outcome.plan.constraint);
        plan["epsilon"] = outcome.plan.epsilon;
        plan["t_protected"] = outcome.plan.t_protected;
        plan["t_other"] = outcome.plan.t_other;
        plan["constraint_value"] = outcome.plan.constraint_value;
        plan["error_rate"] = outcome.plan.error_rate;
        plan["feasible"] = outcome.plan.feasible;
        j["plan"] = std::move(plan);
    }
    return json_text(j);
}

std::string simulate_json(std::size_t seeds, std::size_t n, std::uint64_t base_seed,
                          std::size_t trees, std::size_t boost_rounds, bool null_response,
                          int threads) {
    BiasExperimentConfig cfg;
    cfg.seeds = seeds;
    cfg.n = n;
    cfg.base_seed = base_seed;
    cfg.threads = static_cast<unsigned>(pick_threads(threads));
    cfg.null_response = null_response;
    cfg.forest.m_target = trees;
    cfg.boost.rounds = boost_rounds;
    BiasReport report = run_bias_experiment(cfg);
    return json_text(bias_report_json(report));
}

Dataset dataset_from_arrays(const std::string& name,
                            const std::vector<std::vector<double>>& rows,
                            const std::vector<int>& sensitive, const std::vector<int>& labels) {
    if (rows.empty()) throw ValidationError("dataset needs at least one row");
    Matrix m(rows.size(), rows.front().size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i].size() != m.cols)
            throw ValidationError("row " + std::to_string(i) + " has a different width");
        for (std::size_t j = 0; j < m.cols; ++j) m.at(i, j) = rows[i][j];
    }
    auto to_bytes = [](const std::vector<int>& v) {
        std::vector<std::uint8_t> out;
        out.reserve(v.size());
        for (int x : v) out.push_back(x != 0);
        return out;
    };
    return Dataset::from_numeric(name, std::move(m), to_bytes(sensitive), to_bytes(labels));
}

}  // namespace

PYBIND11_MODULE(_foresee, m) {
    m.doc() = "native core for ex-ante fairness risk scoring";

    py::class_<Dataset>(m, "Dataset")
        .def_static("load",
                    [](const std::string& data_path, const std::string& schema_path) {
                        return load_csv(data_path, Schema::from_file(schema_path));
                    },
                    py::arg("data_path"), py::arg("schema_path"))
        .def_static("from_arrays", &dataset_from_arrays, py::arg("name"), py::arg("rows"),
                    py::arg("sensitive"), py::arg("labels"))
        .def("__len__", &Dataset::size)
        .def_property_readonly("name", [](const Dataset& d) { return d.name; })
        .def_property_readonly("feature_names", [](const Dataset& d) {
            std::vector<std::string> names;
            for (const FeatureSpec& f : d.features) names.push_back(f.name);
            return names;
        });

    m.def(
        "score",
        [](const Dataset& data, std::size_t trees, double beta, double instance_fraction,
           double feature_fraction, int depth, std::size_t min_leaf, bool include_sensitive,
           bool optimistic, double lambda, std::uint64_t seed, int threads) {
            ForestParams p = forest_params(trees, beta, instance_fraction, feature_fraction,
                                           depth, min_leaf, include_sensitive, optimistic, seed);
            return score_risks(data, p, lambda, pick_threads(threads));
        },
        py::arg("data"), py::arg("trees") = 100, py::arg("beta") = 0.55,
        py::arg("instance_fraction") = 0.6, py::arg("feature_fraction") = 0.7,
        py::arg("depth") = 6, py::arg("min_leaf") = 10, py::arg("include_sensitive") = true,
        py::arg("optimistic") = false, py::arg("lambda_") = 0.5, py::arg("seed") = 0,
        py::arg("threads") = 0, "per-row ensemble risk scores over the whole dataset");

    m.def(
        "baseline_risk",
        [](const Dataset& data, std::size_t rounds, int depth, double learning_rate,
           std::size_t min_leaf, double lambda, std::uint64_t seed, int threads) {
            return score_baseline(data, rounds, depth, learning_rate, min_leaf, seed, lambda,
                                  pick_threads(threads));
        },
        py::arg("data"), py::arg("rounds") = 200, py::arg("depth") = 3,
        py::arg("learning_rate") = 0.1, py::arg("min_leaf") = 10, py::arg("lambda_") = 0.5,
        py::arg("seed") = 0, py::arg("threads") = 0,
        "per-row counterfactual risk from the boosted-ensemble baseline");

    m.def(
        "evaluate_fairness_json",
        [](const Dataset& data, const std::vector<std::string>& classifiers, double lambda,
           double train_ratio, const std::string& odds_agg, std::size_t trees, std::uint64_t seed,
           int threads) {
            ForestParams fp;
            fp.m_target = trees;
            return evaluate_json(data, classifiers, lambda, train_ratio, odds_agg, fp, seed,
                                 pick_threads(threads));
        },
        py::arg("data"),
        py::arg("classifiers") =
            std::vector<std::string>{"logistic", "random_forest", "knn", "linear_svm"},
        py::arg("lambda_") = 0.5, py::arg("train_ratio") = 0.7, py::arg("odds_agg") = "mean",
        py::arg("trees") = 100, py::arg("seed") = 0, py::arg("threads") = 0);

    m.def(
        "mitigate_json",
        [](const Dataset& data, const std::string& strategy, const std::string& classifier,
           double lambda, double epsilon, double train_ratio, std::size_t trees,
           std::uint64_t seed, int threads) {
            ForestParams fp;
            fp.m_target = trees;
            return mitigate_json(data, strategy, classifier, lambda, epsilon, train_ratio, fp,
                                 seed, pick_threads(threads));
        },
        py::arg("data"), py::arg("strategy"), py::arg("classifier") = "random_forest",
        py::arg("lambda_") = 0.5, py::arg("epsilon") = 0.02, py::arg("train_ratio") = 0.7,
        py::arg("trees") = 100, py::arg("seed") = 0, py::arg("threads") = 0);

    m.def("simulate_bias_json", &simulate_json, py::arg("seeds") = 20, py::arg("n") = 5000,
          py::arg("base_seed") = 0, py::arg("trees") = 100, py::arg("boost_rounds") = 200,
          py::arg("null_response") = false, py::arg("threads") = 0);

    py::register_exception<IoError>(m, "IoError");
    py::register_exception<SchemaError>(m, "SchemaError");
    py::register_exception<ValidationError>(m, "ValidationError");
    py::register_exception<EstimatorError>(m, "EstimatorError");
}
