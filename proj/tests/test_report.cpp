#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <limits>

#include "foresee/serialize.hpp"

using namespace foresee;

namespace {
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
}

TEST_CASE("doubles print as shortest round-trip text") {
    CHECK(format_double(0.5) == "0.5");
    CHECK(format_double(0.0) == "0");
    CHECK(format_double(1.0) == "1");
    CHECK(format_double(kNaN) == "");
    double third = 1.0 / 3.0;
    CHECK(std::stod(format_double(third)) == third);
}

TEST_CASE("csv escaping quotes only when needed") {
    CHECK(csv_escape("plain") == "plain");
    CHECK(csv_escape("a,b") == "\"a,b\"");
    CHECK(csv_escape("say \"hi\"") == "\"say \"\"hi\"\"\"");
    CHECK(csv_escape("line\nbreak") == "\"line\nbreak\"");
}

namespace {

RiskReport small_risk_report() {
    RiskReport r;
    r.lambda = 0.5;
    r.estimator = "foresee";
    r.model_trees = 7;
    r.seed = 3;
    double risks[] = {0.0, 0.02, 0.05, 1.0};
    for (std::size_t i = 0; i < 4; ++i) r.rows.push_back({i, risks[i], risks[i] > r.lambda});
    return r;
}

}  // namespace

TEST_CASE("risk csv lists each row with its partition") {
    std::string csv = risk_report_csv(small_risk_report());
    CHECK(csv ==
          "row_id,risk,partition\n"
          "0,0,Low\n"
          "1,0.02,Low\n"
          "2,0.05,Low\n"
          "3,1,High\n");
}

TEST_CASE("risk histogram buckets into twenty bins") {
    Json j = risk_histogram_json(small_risk_report());
    CHECK(j["estimator"] == "foresee");
    CHECK(j["count"] == 4);
    CHECK(j["high_count"] == 1);
    CHECK(j["low_count"] == 3);
    REQUIRE(j["bins"].size() == 20);
    CHECK(j["bins"][0]["count"] == 2);   // 0.0 and 0.02
    CHECK(j["bins"][1]["count"] == 1);   // 0.05 lands on the second bin's edge
    CHECK(j["bins"][19]["count"] == 1);  // 1.0 clamps into the last bin
    CHECK(j["bins"][19]["high"] == 1.0);
    std::size_t total = 0;
    for (const auto& b : j["bins"]) total += b["count"].get<std::size_t>();
    CHECK(total == 4);
}

TEST_CASE("risk json carries the same rows as the csv") {
    Json j = risk_report_json(small_risk_report());
    CHECK(j["count"] == 4);
    REQUIRE(j["rows"].is_array());
    REQUIRE(j["rows"].size() == 4);
    CHECK(j["rows"][3]["risk"] == 1.0);
    CHECK(j["rows"][3]["partition"] == "High");
    // parse the serialized text back to prove it is valid json
    Json back = Json::parse(json_text(j));
    CHECK(back["count"] == 4);
}

TEST_CASE("bias csv emits foresee rows then baseline rows") {
    BiasReport r;
    r.seeds = 2;
    r.n = 10;
    r.foresee_bins = {{0.0, 0.05, 0.5, 0.01, 3}, {0.05, 0.1, kNaN, kNaN, 0}};
    r.baseline_bins = {{0.0, 0.05, 0.6, 0.02, 3}, {0.05, 0.1, kNaN, kNaN, 0}};
    CHECK(bias_report_csv(r) ==
          "bin_low,bin_high,estimator,mean,std,count\n"
          "0,0.05,foresee,0.5,0.01,3\n"
          "0.05,0.1,foresee,,,0\n"
          "0,0.05,baseline,0.6,0.02,3\n"
          "0.05,0.1,baseline,,,0\n");
    Json j = bias_report_json(r);
    CHECK(j["seeds"] == 2);
    CHECK(j["estimators"]["foresee"][1]["mean"].is_null());
    CHECK(j["estimators"]["baseline"][0]["mean"] == 0.6);
}

namespace {

FairnessReport tiny_fairness_report(const std::string& strategy) {
    FairnessReport r;
    r.dataset = "adult";
    r.strategy = strategy;
    r.lambda = 0.5;
    r.train_count = 70;
    r.test_count = 30;
    ClassifierEval eval;
    eval.classifier = "random_forest";
    SubsetMetrics all;
    all.subset = "all";
    all.count = 30;
    all.accuracy = 0.8;
    all.f1 = 0.75;
    all.dem_parity = 0.2;
    all.opportunity = 0.1;
    all.odds = 0.15;
    all.mis_gap = 0.05;
    all.confusion.tp = {3, 4};
    SubsetMetrics high;
    high.subset = "high";
    high.count = 0;
    high.accuracy = kNaN;
    high.f1 = kNaN;
    high.dem_parity = kNaN;
    high.opportunity = kNaN;
    high.odds = kNaN;
    high.mis_gap = kNaN;
    high.notes = {"subset is empty, metrics unavailable"};
    eval.subsets = {all, high};
    r.classifiers.push_back(eval);
    return r;
}

}  // namespace

TEST_CASE("fairness csv is one flat row per classifier and subset") {
    std::string csv = fairness_report_csv(tiny_fairness_report("none"));
    CHECK(csv ==
          "dataset,strategy,lambda,odds_aggregation,classifier,subset,count,"
          "accuracy,f1,demP,eqOPP,eqODD,mis_gap,notes\n"
          "adult,none,0.5,mean,random_forest,all,30,0.8,0.75,0.2,0.1,0.15,0.05,\n"
          "adult,none,0.5,mean,random_forest,high,0,,,,,,,"
          "\"subset is empty, metrics unavailable\"\n");
}

TEST_CASE("mitigation rows share the header with the base table") {
    std::vector<FairnessReport> both = {tiny_fairness_report("none"),
                                        tiny_fairness_report("post_demP")};
    std::string csv = fairness_reports_csv(both);
    CHECK(csv.find("adult,none,") != std::string::npos);
    CHECK(csv.find("adult,post_demP,") != std::string::npos);
    // exactly one header line
    CHECK(csv.find("dataset,strategy") == 0);
    CHECK(csv.find("dataset,strategy", 1) == std::string::npos);
}

TEST_CASE("fairness json nests classifier then subset then metric") {
    Json j = fairness_report_json(tiny_fairness_report("none"));
    CHECK(j["strategy"] == "none");
    const Json& rf = j["classifiers"]["random_forest"];
    CHECK(rf["subsets"]["all"]["demP"] == 0.2);
    CHECK(rf["subsets"]["all"]["confusion"]["tp"][1] == 4);
    CHECK(rf["subsets"]["high"]["demP"].is_null());
    CHECK(rf["subsets"]["high"]["notes"][0] ==
          "subset is empty, metrics unavailable");
}

namespace {

Dataset forest_fixture(std::size_t n) {
    Matrix m(n, 2);
    std::vector<std::uint8_t> sens(n), labels(n);
    Rng rng(12);
    for (std::size_t i = 0; i < n; ++i) {
        m.at(i, 0) = rng.uniform();
        m.at(i, 1) = rng.uniform();
        sens[i] = i % 2;
        labels[i] = m.at(i, 0) > 0.5;
    }
    return Dataset::from_numeric("fx", std::move(m), std::move(sens), std::move(labels));
}

}  // namespace

TEST_CASE("forest json records params and per-tree retention") {
    Dataset d = forest_fixture(200);
    IndexSet all(d.size());
    std::iota(all.begin(), all.end(), std::size_t{0});
    ForestParams fp;
    fp.m_target = 5;
    fp.beta = 0.5;
    fp.seed = 9;
    Forest f = build_forest(d, all, fp);
    Json j = forest_json(f);
    CHECK(j["params"]["beta"] == 0.5);
    CHECK(j["params"]["m_target"] == 5);
    CHECK(j["retained"] == f.trees.size());
    REQUIRE(j["trees"].size() == f.trees.size());
    for (const auto& t : j["trees"]) {
        CHECK(t["validation_accuracy"].get<double>() >= 0.5);
        CHECK(t["model"]["nodes"].size() > 0);
    }
    // text form parses back
    Json back = Json::parse(json_text(j));
    CHECK(back["retained"] == f.trees.size());
}

namespace {

Dataset profile_fixture() {
    // one numeric column, one categorical with three levels
    std::vector<FeatureSpec> specs = {
        {"income", FeatureKind::numeric, {}},
        {"job", FeatureKind::categorical, {"blue", "pink", "white"}},
    };
    Matrix m(8, 2);
    double income[] = {10, 20, 30, 40, 50, 60, 70, 80};
    double job[] = {0, 0, 1, 2, 2, 2, 1, 0};
    for (std::size_t i = 0; i < 8; ++i) {
        m.at(i, 0) = income[i];
        m.at(i, 1) = job[i];
    }
    std::vector<std::uint8_t> sens = {0, 0, 0, 0, 1, 1, 1, 1};
    std::vector<std::uint8_t> labels = {0, 1, 0, 1, 0, 1, 0, 1};
    return Dataset::from_raw("p", specs, std::move(m), std::move(sens), std::move(labels));
}

}  // namespace

TEST_CASE("profile contrasts the risk extremes of each group") {
    Dataset d = profile_fixture();
    IndexSet all = {0, 1, 2, 3, 4, 5, 6, 7};
    // risk rises with row id inside each group
    std::vector<double> risks = {0.1, 0.2, 0.3, 0.4, 0.15, 0.25, 0.35, 0.45};
    ProfileReport r = profile_features(d, all, risks, 0.5);
    // take = ceil(8 * 0.5 / 2) = 2 per group
    CHECK(r.per_group_take == 2);
    CHECK(r.top_count == 4);
    CHECK(r.bottom_count == 4);
    REQUIRE(r.rows.size() == 2);
    // top: rows {2,3} from group 0 and {6,7} from group 1 -> incomes 30,40,70,80
    CHECK(r.rows[0].feature == "income");
    CHECK(r.rows[0].kind == "numeric");
    CHECK(r.rows[0].top_mean == doctest::Approx(55.0));
    // bottom: rows {0,1} and {4,5} -> incomes 10,20,50,60
    CHECK(r.rows[0].bottom_mean == doctest::Approx(35.0));
    // top jobs: {1,2,1,0} -> tie between blue(1) pink(2)... counts: blue 1, pink 2, white 1
    CHECK(r.rows[1].kind == "categorical");
    CHECK(r.rows[1].top_mode == "pink");
    // bottom jobs: rows 0,1,4,5 -> {0,0,2,2}: blue 2, white 2, tie -> lowest index
    CHECK(r.rows[1].bottom_mode == "blue");
    CHECK(r.warnings.empty());
}

TEST_CASE("profile tie-breaks equal risks by row id") {
    Dataset d = profile_fixture();
    IndexSet all = {0, 1, 2, 3, 4, 5, 6, 7};
    std::vector<double> uniform(8, 0.5);
    ProfileReport r = profile_features(d, all, uniform, 0.5);
    // all risks equal: top and bottom both resolve to the first rows per group
    CHECK(r.rows[0].top_mean == r.rows[0].bottom_mean);
    CHECK(r.rows[0].top_mean == doctest::Approx((10 + 20 + 50 + 60) / 4.0));
}

TEST_CASE("profile flags a group smaller than the requested take") {
    Dataset d = profile_fixture();
    IndexSet subset = {0, 1, 2, 3, 4};  // one protected row only
    std::vector<double> risks = {0.1, 0.2, 0.3, 0.4, 0.5};
    ProfileReport r = profile_features(d, subset, risks, 0.5);
    REQUIRE(r.warnings.size() == 1);
    CHECK(r.warnings[0].find("protected") != std::string::npos);
    CHECK(r.top_count == 3);  // 2 from the larger group, 1 from the smaller
}

TEST_CASE("profile rejects bad arguments") {
    Dataset d = profile_fixture();
    IndexSet all = {0, 1, 2, 3, 4, 5, 6, 7};
    std::vector<double> risks(8, 0.5);
    CHECK_THROWS_AS(profile_features(d, all, risks, 0.0), PreconditionError);
    CHECK_THROWS_AS(profile_features(d, all, risks, 0.6), PreconditionError);
    CHECK_THROWS_AS(profile_features(d, all, {0.5}, 0.2), PreconditionError);
    CHECK_THROWS_AS(profile_features(d, {}, {}, 0.2), PreconditionError);
    IndexSet one_group = {0, 1, 2, 3};
    std::vector<double> four(4, 0.5);
    CHECK_THROWS_WITH_AS(profile_features(d, one_group, four, 0.2),
                         doctest::Contains("protected"), PreconditionError);
}

TEST_CASE("manifest json reflects every field") {
    RunManifest m;
    m.subcommand = "audit";
    m.parameters["lambda"] = 0.5;
    m.parameters["trees"] = 100;
    m.seeds = {42};
    m.input_digests = {{"data.csv", "abc123"}};
    m.outputs = {"risk.csv", "manifest.json"};
    m.timestamp = "2024-01-01T00:00:00Z";
    Json j = manifest_json(m);
    CHECK(j["subcommand"] == "audit");
    CHECK(j["parameters"]["lambda"] == 0.5);
    CHECK(j["seeds"][0] == 42);
    CHECK(j["inputs"][0]["path"] == "data.csv");
    CHECK(j["inputs"][0]["sha256"] == "abc123");
    CHECK(j["outputs"][1] == "manifest.json");
    CHECK(j["timestamp"] == "2024-01-01T00:00:00Z");
}

TEST_CASE("timestamp honors the reproducible-build epoch") {
    setenv("SOURCE_DATE_EPOCH", "0", 1);
    CHECK(iso8601_utc_now() == "1970-01-01T00:00:00Z");
    setenv("SOURCE_DATE_EPOCH", "86400", 1);
    CHECK(iso8601_utc_now() == "1970-01-02T00:00:00Z");
    unsetenv("SOURCE_DATE_EPOCH");
    CHECK(iso8601_utc_now().size() == 20);
}

TEST_CASE("text files round-trip and failures throw") {
    namespace fs = std::filesystem;
    fs::path tmp = fs::temp_directory_path() / "foresee_report_test.txt";
    write_text_file(tmp.string(), "hello\nworld\n");
    CHECK(read_text_file(tmp.string()) == "hello\nworld\n");
    fs::remove(tmp);
    CHECK_THROWS_AS(read_text_file(tmp.string()), IoError);
    CHECK_THROWS_AS(write_text_file("/nonexistent-dir/x.txt", "y"), IoError);
}
