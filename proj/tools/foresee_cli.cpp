#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "foresee/boosted.hpp"
#include "foresee/forest.hpp"
#include "foresee/metrics.hpp"
#include "foresee/mitigation.hpp"
#include "foresee/serialize.hpp"
#include "foresee/synthetic.hpp"

namespace fs = std::filesystem;
using namespace foresee;

namespace {

// Exit codes, one per error class so scripts can branch on the failure kind.
// 12 is the warning-class exit for an infeasible post-processing tolerance:
// output is still written, but the constraint could not be met.
enum ExitCode {
    kOk = 0,
    kUsage = 2,
    kIo = 3,
    kSchema = 4,
    kValidation = 5,
    kPrecondition = 6,
    kEstimator = 7,
    kInternal = 10,
    kInfeasible = 12,
};

struct CommonOpts {
    std::string data;
    std::string schema;
    std::string out_dir = ".";
    std::uint64_t seed = 0;
    int threads = 0;  // 0 = hardware concurrency
    double lambda = 0.5;
    std::string format = "csv";
};

struct ForestOpts {
    std::size_t trees = 100;
    double beta = 0.55;
    double instance_fraction = 0.6;
    double feature_fraction = 0.7;
    int depth = 6;
    std::size_t min_leaf = 10;
    bool optimistic = false;
    bool no_sensitive = false;
};

struct BoostOpts {
    int rounds = 200;
    int depth = 3;
    double learning_rate = 0.1;
    std::size_t min_leaf = 10;
};

void add_common(CLI::App* sub, CommonOpts& c, bool needs_data) {
    if (needs_data) {
        sub->add_option("--data", c.data, "input CSV")->required();
        sub->add_option("--schema", c.schema, "schema file (key=value)")->required();
    }
    sub->add_option("--seed", c.seed, "RNG seed")->capture_default_str();
    sub->add_option("--threads", c.threads, "worker threads, 0 = all hardware threads")
        ->capture_default_str();
    sub->add_option("--out-dir", c.out_dir, "directory for artifacts")->capture_default_str();
    sub->add_option("--lambda", c.lambda, "risk threshold splitting High from Low")
        ->capture_default_str();
    sub->add_option("--format", c.format, "tabular artifact format")
        ->check(CLI::IsMember({"csv", "json"}))
        ->capture_default_str();
    sub->fallthrough();  // lets --config appear after the subcommand name
}

void add_forest_core(CLI::App* sub, ForestOpts& f) {
    sub->add_option("--trees", f.trees, "retained trees per ensemble")->capture_default_str();
    sub->add_option("--beta", f.beta, "held-out accuracy a tree needs to be retained")
        ->capture_default_str();
    sub->add_option("--instance-fraction", f.instance_fraction,
                    "training rows sub-sampled per tree")
        ->capture_default_str();
    sub->add_option("--feature-fraction", f.feature_fraction, "feature share drawn per tree")
        ->capture_default_str();
    sub->add_option("--depth", f.depth, "tree depth cap")->capture_default_str();
    sub->add_option("--min-leaf", f.min_leaf, "minimum instances per leaf")->capture_default_str();
}

void add_forest_flags(CLI::App* sub, ForestOpts& f) {
    sub->add_flag("--optimistic", f.optimistic,
                  "score an absent-group leaf as if it matched the present group");
    sub->add_flag("--no-sensitive-feature", f.no_sensitive,
                  "exclude the sensitive column from tree splits");
}

void add_boost(CLI::App* sub, BoostOpts& b) {
    sub->add_option("--boost-rounds", b.rounds, "boosting rounds")->capture_default_str();
    sub->add_option("--boost-depth", b.depth, "boosted tree depth")->capture_default_str();
    sub->add_option("--boost-lr", b.learning_rate, "boosting learning rate")
        ->capture_default_str();
    sub->add_option("--boost-min-leaf", b.min_leaf, "minimum rows per boosted leaf")
        ->capture_default_str();
}

ForestParams to_forest_params(const ForestOpts& f, std::uint64_t seed) {
    ForestParams p;
    p.m_target = f.trees;
    p.beta = f.beta;
    p.instance_fraction = f.instance_fraction;
    p.feature_fraction = f.feature_fraction;
    p.tree.max_depth = f.depth;
    p.tree.min_leaf = f.min_leaf;
    p.optimistic_absent = f.optimistic;
    p.include_sensitive = !f.no_sensitive;
    p.seed = seed;
    return p;
}

BoostParams to_boost_params(const BoostOpts& b, std::uint64_t seed) {
    BoostParams p;
    p.rounds = b.rounds;
    p.max_depth = b.depth;
    p.learning_rate = b.learning_rate;
    p.min_leaf = b.min_leaf;
    p.seed = seed;
    return p;
}

Json forest_params_json(const ForestParams& p) {
    Json j = Json::object();
    j["trees"] = p.m_target;
    j["beta"] = p.beta;
    j["instance_fraction"] = p.instance_fraction;
    j["feature_fraction"] = p.feature_fraction;
    j["depth"] = p.tree.max_depth;
    j["min_leaf"] = p.tree.min_leaf;
    j["include_sensitive"] = p.include_sensitive;
    j["optimistic"] = p.optimistic_absent;
    return j;
}

Json boost_params_json(const BoostParams& p) {
    Json j = Json::object();
    j["rounds"] = p.rounds;
    j["depth"] = p.max_depth;
    j["learning_rate"] = p.learning_rate;
    j["min_leaf"] = p.min_leaf;
    return j;
}

int resolve_threads(int flag) { return flag > 0 ? flag : default_threads(); }

// artifact writer that collects the paths for the manifest
struct OutDir {
    fs::path dir;
    std::vector<std::string> written;

    explicit OutDir(const std::string& d) : dir(d) {
        std::error_code ec;
        fs::create_directories(dir, ec);
        if (ec) throw IoError("cannot create output directory: " + d);
    }

    std::string put(const std::string& name, const std::string& content) {
        std::string path = (dir / name).string();
        write_text_file(path, content);
        std::cout << "wrote " << path << "\n";
        written.push_back(path);
        return path;
    }
};

void finish_manifest(OutDir& out, RunManifest& m) {
    m.timestamp = iso8601_utc_now();
    m.outputs = out.written;
    m.outputs.push_back((out.dir / "manifest.json").string());
    out.put("manifest.json", json_text(manifest_json(m)));
}

void digest_input(RunManifest& m, const std::string& path) {
    m.input_digests.emplace_back(path, sha256_file(path));
}

Dataset load_input(const CommonOpts& c) {
    Schema schema = Schema::from_file(c.schema);
    return load_csv(c.data, schema);
}

IndexSet all_rows(const Dataset& d) {
    IndexSet v(d.size());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = i;
    return v;
}

std::vector<double> risks_of(const RiskReport& r) {
    std::vector<double> v;
    v.reserve(r.rows.size());
    for (const RiskRow& row : r.rows) v.push_back(row.risk);
    return v;
}

// --- audit ------------------------------------------------------------------

struct AuditOpts {
    CommonOpts common;
    ForestOpts forest;
    BoostOpts boost;
    std::string estimator = "foresee";
    bool save_model = false;
};

int cmd_audit(const AuditOpts& o) {
    Dataset data = load_input(o.common);
    IndexSet rows = all_rows(data);
    int threads = resolve_threads(o.common.threads);
    OutDir out(o.common.out_dir);

    RunManifest manifest;
    manifest.subcommand = "audit";
    manifest.seeds = {o.common.seed};
    digest_input(manifest, o.common.data);
    digest_input(manifest, o.common.schema);

    RiskReport report;
    if (o.estimator == "foresee") {
        ForestParams fp = to_forest_params(o.forest, o.common.seed);
        Forest forest = build_forest(data, rows, fp, threads);
        report = score_dataset(forest, data, rows, o.common.lambda, threads);
        manifest.parameters["forest"] = forest_params_json(fp);
        if (o.save_model) out.put("forest.json", json_text(forest_json(forest)));
    } else {
        BoostParams bp = to_boost_params(o.boost, o.common.seed);
        AdditiveModel model = fit_additive(data, rows, bp);
        report = score_dataset_baseline(model, data, rows, o.common.lambda, threads);
        manifest.parameters["boost"] = boost_params_json(bp);
    }

    manifest.parameters["data"] = o.common.data;
    manifest.parameters["schema"] = o.common.schema;
    manifest.parameters["seed"] = o.common.seed;
    manifest.parameters["threads"] = threads;
    manifest.parameters["lambda"] = o.common.lambda;
    manifest.parameters["format"] = o.common.format;
    manifest.parameters["estimator"] = o.estimator;
    manifest.parameters["rows"] = data.size();

    if (o.common.format == "json")
        out.put("risk.json", json_text(risk_report_json(report)));
    else
        out.put("risk.csv", risk_report_csv(report));
    out.put("risk_histogram.json", json_text(risk_histogram_json(report)));
    finish_manifest(out, manifest);

    std::cout << "audit: " << report.rows.size() << " rows scored, " << report.high_count()
              << " High / " << report.low_count() << " Low at lambda=" << o.common.lambda << "\n";
    return kOk;
}

// --- simulate ---------------------------------------------------------------

struct SimulateOpts {
    CommonOpts common;
    ForestOpts forest;
    BoostOpts boost;
    std::size_t seeds = 20;
    std::size_t n = 5000;
    bool null_response = false;
};

int cmd_simulate(const SimulateOpts& o) {
    BiasExperimentConfig cfg;
    cfg.seeds = o.seeds;
    cfg.n = o.n;
    cfg.base_seed = o.common.seed;
    cfg.threads = static_cast<unsigned>(resolve_threads(o.common.threads));
    cfg.null_response = o.null_response;
    ForestParams fp = to_forest_params(o.forest, 0);
    fp.include_sensitive = cfg.forest.include_sensitive;  // the experiment config pins this off
    cfg.forest = fp;
    cfg.boost = to_boost_params(o.boost, 0);

    BiasReport report = run_bias_experiment(cfg);

    OutDir out(o.common.out_dir);
    RunManifest manifest;
    manifest.subcommand = "simulate";
    manifest.seeds = {o.common.seed};
    manifest.parameters["seeds"] = o.seeds;
    manifest.parameters["n"] = o.n;
    manifest.parameters["base_seed"] = o.common.seed;
    manifest.parameters["threads"] = cfg.threads;
    manifest.parameters["format"] = o.common.format;
    manifest.parameters["null_response"] = o.null_response;
    manifest.parameters["forest"] = forest_params_json(cfg.forest);
    manifest.parameters["boost"] = boost_params_json(cfg.boost);

    if (o.common.format == "json")
        out.put("bias.json", json_text(bias_report_json(report)));
    else
        out.put("bias.csv", bias_report_csv(report));
    finish_manifest(out, manifest);

    std::cout << "simulate: " << o.seeds << " seeds x " << o.n << " rows"
              << (o.null_response ? " (null response)" : "") << "\n";
    return kOk;
}

// --- evaluate ---------------------------------------------------------------

struct EvaluateOpts {
    CommonOpts common;
    ForestOpts forest;
    double train_ratio = 0.7;
    std::string classifiers = "logistic,random_forest,knn,linear_svm";
    std::string odds_agg = "mean";
};

std::vector<ClassifierKind> parse_classifiers(const std::string& list) {
    std::vector<ClassifierKind> kinds;
    std::stringstream ss(list);
    std::string token;
    while (std::getline(ss, token, ','))
        if (!token.empty()) kinds.push_back(classifier_from_string(token));
    if (kinds.empty()) throw PreconditionError("no classifiers requested");
    return kinds;
}

OddsAggregation parse_odds_agg(const std::string& name) {
    if (name == "mean") return OddsAggregation::mean;
    if (name == "max") return OddsAggregation::max;
    throw PreconditionError("unknown odds aggregation: " + name);
}

void warn_all(const std::vector<std::string>& warnings) {
    for (const std::string& w : warnings) std::cerr << "warning: " << w << "\n";
}

int cmd_evaluate(const EvaluateOpts& o) {
    Dataset data = load_input(o.common);
    SplitPair parts = split(data, o.train_ratio, o.common.seed);
    warn_all(parts.warnings);
    int threads = resolve_threads(o.common.threads);

    ForestParams fp = to_forest_params(o.forest, derive_seed(o.common.seed, 1));
    Forest forest = build_forest(data, parts.train, fp, threads);
    RiskReport risk = score_dataset(forest, data, parts.test, o.common.lambda, threads);
    std::vector<double> test_risks = risks_of(risk);
    if (risk.high_count() == 0)
        std::cerr << "warning: the High partition is empty at lambda=" << o.common.lambda
                  << "; High metrics are absent\n";

    EvaluationConfig cfg;
    cfg.kinds = parse_classifiers(o.classifiers);
    cfg.params.seed = derive_seed(o.common.seed, 2);
    cfg.lambda = o.common.lambda;
    cfg.odds_agg = parse_odds_agg(o.odds_agg);
    cfg.threads = threads;
    FairnessReport report = evaluate_fairness(data, parts.train, parts.test, test_risks, cfg);

    OutDir out(o.common.out_dir);
    RunManifest manifest;
    manifest.subcommand = "evaluate";
    manifest.seeds = {o.common.seed};
    digest_input(manifest, o.common.data);
    digest_input(manifest, o.common.schema);
    manifest.parameters["data"] = o.common.data;
    manifest.parameters["schema"] = o.common.schema;
    manifest.parameters["seed"] = o.common.seed;
    manifest.parameters["threads"] = threads;
    manifest.parameters["lambda"] = o.common.lambda;
    manifest.parameters["train_ratio"] = o.train_ratio;
    manifest.parameters["classifiers"] = o.classifiers;
    manifest.parameters["odds_aggregation"] = o.odds_agg;
    manifest.parameters["train_count"] = parts.train.size();
    manifest.parameters["test_count"] = parts.test.size();
    manifest.parameters["forest"] = forest_params_json(fp);

    out.put("fairness.csv", fairness_report_csv(report));
    out.put("fairness.json", json_text(fairness_report_json(report)));
    finish_manifest(out, manifest);

    std::cout << "evaluate: " << cfg.kinds.size() << " classifiers, train " << parts.train.size()
              << " / test " << parts.test.size() << ", High " << risk.high_count() << "\n";
    return kOk;
}

// --- profile ----------------------------------------------------------------

struct ProfileOpts {
    CommonOpts common;
    ForestOpts forest;
    std::string risks_path;
    double fraction = 0.2;
};

// rows of a previously written risk CSV (row_id,risk,partition)
std::pair<IndexSet, std::vector<double>> parse_risk_csv(const std::string& path,
                                                        std::size_t dataset_rows) {
    std::istringstream in(read_text_file(path));
    std::string line;
    if (!std::getline(in, line) || line.rfind("row_id,risk", 0) != 0)
        throw ValidationError("risk file " + path + " does not start with a row_id,risk header");
    IndexSet ids;
    std::vector<double> risks;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::stringstream cells(line);
        std::string id_cell, risk_cell;
        if (!std::getline(cells, id_cell, ',') || !std::getline(cells, risk_cell, ','))
            throw ValidationError("risk file " + path + " line " + std::to_string(line_no) +
                                  ": expected row_id,risk,...");
        try {
            std::size_t id = std::stoul(id_cell);
            double risk = std::stod(risk_cell);
            if (id >= dataset_rows)
                throw ValidationError("risk file " + path + " line " + std::to_string(line_no) +
                                      ": row id " + id_cell + " is outside the dataset");
            ids.push_back(id);
            risks.push_back(risk);
        } catch (const ValidationError&) {
            throw;
        } catch (const std::exception&) {
            throw ValidationError("risk file " + path + " line " + std::to_string(line_no) +
                                  ": unparsable cells");
        }
    }
    if (ids.empty()) throw ValidationError("risk file " + path + " has no data rows");
    return {std::move(ids), std::move(risks)};
}

int cmd_profile(const ProfileOpts& o) {
    Dataset data = load_input(o.common);
    int threads = resolve_threads(o.common.threads);

    OutDir out(o.common.out_dir);
    RunManifest manifest;
    manifest.subcommand = "profile";
    manifest.seeds = {o.common.seed};
    digest_input(manifest, o.common.data);
    digest_input(manifest, o.common.schema);

    IndexSet rows;
    std::vector<double> risks;
    if (!o.risks_path.empty()) {
        digest_input(manifest, o.risks_path);
        std::tie(rows, risks) = parse_risk_csv(o.risks_path, data.size());
        manifest.parameters["risks"] = o.risks_path;
    } else {
        rows = all_rows(data);
        ForestParams fp = to_forest_params(o.forest, o.common.seed);
        Forest forest = build_forest(data, rows, fp, threads);
        RiskReport report = score_dataset(forest, data, rows, o.common.lambda, threads);
        risks = risks_of(report);
        manifest.parameters["forest"] = forest_params_json(fp);
    }

    ProfileReport profile = profile_features(data, rows, risks, o.fraction);
    warn_all(profile.warnings);

    manifest.parameters["data"] = o.common.data;
    manifest.parameters["schema"] = o.common.schema;
    manifest.parameters["seed"] = o.common.seed;
    manifest.parameters["threads"] = threads;
    manifest.parameters["fraction"] = o.fraction;
    manifest.parameters["format"] = o.common.format;

    if (o.common.format == "json")
        out.put("profile.json", json_text(profile_report_json(profile)));
    else
        out.put("profile.csv", profile_report_csv(profile));
    finish_manifest(out, manifest);

    std::cout << "profile: top/bottom " << profile.per_group_take
              << " rows per group over " << data.features.size() << " features\n";
    return kOk;
}

// --- mitigate ---------------------------------------------------------------

struct MitigateOpts {
    CommonOpts common;
    ForestOpts forest;
    std::string strategy;
    std::string classifier = "random_forest";
    std::string odds_agg = "mean";
    double train_ratio = 0.7;
    double epsilon = 0.02;
    std::size_t grid = 101;
    double validation_fraction = 0.25;
};

int cmd_mitigate(const MitigateOpts& o) {
    Strategy strategy = strategy_from_string(o.strategy);
    ClassifierKind kind = classifier_from_string(o.classifier);

    Dataset data = load_input(o.common);
    SplitPair parts = split(data, o.train_ratio, o.common.seed);
    warn_all(parts.warnings);
    int threads = resolve_threads(o.common.threads);

    ForestParams fp = to_forest_params(o.forest, derive_seed(o.common.seed, 1));
    Forest forest = build_forest(data, parts.train, fp, threads);
    std::vector<double> train_risks =
        risks_of(score_dataset(forest, data, parts.train, o.common.lambda, threads));
    std::vector<double> test_risks =
        risks_of(score_dataset(forest, data, parts.test, o.common.lambda, threads));

    EvaluationConfig ecfg;
    ecfg.kinds = {kind};
    ecfg.params.seed = derive_seed(o.common.seed, 2);
    ecfg.lambda = o.common.lambda;
    ecfg.odds_agg = parse_odds_agg(o.odds_agg);
    ecfg.threads = threads;
    FairnessReport unmitigated =
        evaluate_fairness(data, parts.train, parts.test, test_risks, ecfg);

    MitigationConfig mcfg;
    mcfg.strategy = strategy;
    mcfg.lambda = o.common.lambda;
    mcfg.epsilon = o.epsilon;
    mcfg.grid = o.grid;
    mcfg.validation_fraction = o.validation_fraction;
    mcfg.seed = derive_seed(o.common.seed, 3);
    mcfg.params = ecfg.params;
    mcfg.odds_agg = ecfg.odds_agg;
    mcfg.threads = threads;
    MitigationOutcome outcome = run_mitigation(data, parts.train, parts.test, train_risks,
                                               test_risks, kind, mcfg);

    OutDir out(o.common.out_dir);
    RunManifest manifest;
    manifest.subcommand = "mitigate";
    manifest.seeds = {o.common.seed};
    digest_input(manifest, o.common.data);
    digest_input(manifest, o.common.schema);
    manifest.parameters["data"] = o.common.data;
    manifest.parameters["schema"] = o.common.schema;
    manifest.parameters["seed"] = o.common.seed;
    manifest.parameters["threads"] = threads;
    manifest.parameters["lambda"] = o.common.lambda;
    manifest.parameters["train_ratio"] = o.train_ratio;
    manifest.parameters["strategy"] = o.strategy;
    manifest.parameters["classifier"] = o.classifier;
    manifest.parameters["odds_aggregation"] = o.odds_agg;
    manifest.parameters["epsilon"] = o.epsilon;
    manifest.parameters["grid"] = o.grid;
    manifest.parameters["validation_fraction"] = o.validation_fraction;
    manifest.parameters["train_count"] = parts.train.size();
    manifest.parameters["test_count"] = parts.test.size();
    manifest.parameters["removed_train"] = outcome.removed_train;
    manifest.parameters["removed_test"] = outcome.removed_test;
    manifest.parameters["forest"] = forest_params_json(fp);

    out.put("fairness.csv", fairness_reports_csv({unmitigated, outcome.report}));
    Json j = Json::object();
    j["unmitigated"] = fairness_report_json(unmitigated);
    j["mitigated"] = fairness_report_json(outcome.report);
    j["removed_train"] = outcome.removed_train;
    j["removed_test"] = outcome.removed_test;
    if (outcome.used_thresholds) {
        Json plan = Json::object();
        plan["constraint"] = to_string(outcome.plan.constraint);
        plan["epsilon"] = outcome.plan.epsilon;
        plan["grid"] = outcome.plan.grid;
        plan["t_protected"] = outcome.plan.t_protected;
        plan["t_other"] = outcome.plan.t_other;
        plan["constraint_value"] = outcome.plan.constraint_value;
        plan["error_rate"] = outcome.plan.error_rate;
        plan["feasible"] = outcome.plan.feasible;
        j["plan"] = std::move(plan);
    }
    out.put("fairness.json", json_text(j));
    finish_manifest(out, manifest);

    std::cout << "mitigate: strategy " << o.strategy << " with " << o.classifier;
    if (outcome.used_thresholds)
        std::cout << ", thresholds (" << outcome.plan.t_protected << ", "
                  << outcome.plan.t_other << ")"
                  << (outcome.plan.feasible ? "" : " [infeasible tolerance]");
    else
        std::cout << ", removed " << outcome.removed_train << " train / "
                  << outcome.removed_test << " test rows";
    std::cout << "\n";

    if (outcome.used_thresholds && !outcome.plan.feasible) {
        std::cerr << "warning: no threshold pair met the tolerance " << o.epsilon
                  << "; wrote the minimum-constraint pair instead\n";
        return kInfeasible;
    }
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"ex-ante fairness risk scoring and mitigation"};
    app.require_subcommand(1);
    app.set_config("--config", "",
                   "key=value file with options under a [subcommand] section; "
                   "command-line flags take precedence");

    AuditOpts audit;
    CLI::App* audit_cmd =
        app.add_subcommand("audit", "score a dataset and partition it at the risk threshold");
    add_common(audit_cmd, audit.common, true);
    add_forest_core(audit_cmd, audit.forest);
    add_forest_flags(audit_cmd, audit.forest);
    add_boost(audit_cmd, audit.boost);
    audit_cmd->add_option("--estimator", audit.estimator, "risk estimator")
        ->check(CLI::IsMember({"foresee", "baseline"}))
        ->capture_default_str();
    audit_cmd->add_flag("--save-model", audit.save_model, "also write the fitted forest as JSON");

    SimulateOpts simulate;
    CLI::App* simulate_cmd = app.add_subcommand(
        "simulate", "synthetic-benchmark bias comparison of both estimators");
    add_common(simulate_cmd, simulate.common, false);
    add_forest_core(simulate_cmd, simulate.forest);
    add_boost(simulate_cmd, simulate.boost);
    simulate_cmd->add_option("--seeds", simulate.seeds, "independent replications")
        ->capture_default_str();
    simulate_cmd->add_option("--n", simulate.n, "sample size per replication")
        ->capture_default_str();
    simulate_cmd->add_flag("--null-response", simulate.null_response,
                           "degenerate generator: labels independent of the sensitive group");

    EvaluateOpts evaluate;
    CLI::App* evaluate_cmd = app.add_subcommand(
        "evaluate", "train classifiers and report fairness metrics by risk partition");
    add_common(evaluate_cmd, evaluate.common, true);
    add_forest_core(evaluate_cmd, evaluate.forest);
    add_forest_flags(evaluate_cmd, evaluate.forest);
    evaluate_cmd->add_option("--train-ratio", evaluate.train_ratio, "train share of the split")
        ->capture_default_str();
    evaluate_cmd->add_option("--classifiers", evaluate.classifiers, "comma-separated kinds")
        ->capture_default_str();
    evaluate_cmd->add_option("--odds-agg", evaluate.odds_agg, "equalized-odds aggregation")
        ->check(CLI::IsMember({"mean", "max"}))
        ->capture_default_str();

    ProfileOpts profile;
    CLI::App* profile_cmd = app.add_subcommand(
        "profile", "contrast feature distributions of risk extremes, balanced across groups");
    add_common(profile_cmd, profile.common, true);
    add_forest_core(profile_cmd, profile.forest);
    add_forest_flags(profile_cmd, profile.forest);
    profile_cmd->add_option("--risks", profile.risks_path,
                            "risk CSV from a previous audit; omit to score in-process");
    profile_cmd->add_option("--fraction", profile.fraction, "slice size, share of all rows")
        ->capture_default_str();

    MitigateOpts mitigate;
    CLI::App* mitigate_cmd =
        app.add_subcommand("mitigate", "apply a risk-guided fairness mitigation and re-evaluate");
    add_common(mitigate_cmd, mitigate.common, true);
    add_forest_core(mitigate_cmd, mitigate.forest);
    add_forest_flags(mitigate_cmd, mitigate.forest);
    mitigate_cmd
        ->add_option("--strategy", mitigate.strategy,
                     "pre_train_and_test, pre_test_only, post_demP, post_eqODD, or post_eqOPP")
        ->required();
    mitigate_cmd->add_option("--classifier", mitigate.classifier, "downstream classifier kind")
        ->capture_default_str();
    mitigate_cmd->add_option("--odds-agg", mitigate.odds_agg, "equalized-odds aggregation")
        ->check(CLI::IsMember({"mean", "max"}))
        ->capture_default_str();
    mitigate_cmd->add_option("--train-ratio", mitigate.train_ratio, "train share of the split")
        ->capture_default_str();
    mitigate_cmd->add_option("--epsilon", mitigate.epsilon, "fairness tolerance for thresholds")
        ->capture_default_str();
    mitigate_cmd->add_option("--grid", mitigate.grid, "threshold grid points per group")
        ->capture_default_str();
    mitigate_cmd
        ->add_option("--validation-fraction", mitigate.validation_fraction,
                     "train share used to fit thresholds")
        ->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? kOk : kUsage;
    }

    try {
        if (*audit_cmd) return cmd_audit(audit);
        if (*simulate_cmd) return cmd_simulate(simulate);
        if (*evaluate_cmd) return cmd_evaluate(evaluate);
        if (*profile_cmd) return cmd_profile(profile);
        if (*mitigate_cmd) return cmd_mitigate(mitigate);
    } catch (const IoError& e) {
        std::cerr << "io error: " << e.what() << "\n";
        return kIo;
    } catch (const SchemaError& e) {
        std::cerr << "schema error: " << e.what() << "\n";
        return kSchema;
    } catch (const ValidationError& e) {
        std::cerr << "validation error: " << e.what() << "\n";
        return kValidation;
    } catch (const PreconditionError& e) {
        std::cerr << "precondition error: " << e.what() << "\n";
        return kPrecondition;
    } catch (const EstimatorError& e) {
        std::cerr << "estimator error: " << e.what() << "\n";
        return kEstimator;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kInternal;
    }
    return kUsage;
}
