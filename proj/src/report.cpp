#include "foresee/serialize.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <sstream>

namespace foresee {

std::string format_double(double v) {
    if (std::isnan(v)) return "";
    std::array<char, 32> buf;
    auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    return std::string(buf.data(), end);
}

std::string csv_escape(const std::string& cell) {
    if (cell.find_first_of(",\"\n\r") == std::string::npos) return cell;
    std::string out = "\"";
    for (char c : cell) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

// --- risk reports ----------------------------------------------------------

std::string risk_report_csv(const RiskReport& r) {
    std::string out = "row_id,risk,partition\n";
    for (const RiskRow& row : r.rows) {
        out += std::to_string(row.row_id);
        out += ',';
        out += format_double(row.risk);
        out += ',';
        out += row.high ? "High" : "Low";
        out += '\n';
    }
    return out;
}

namespace {

constexpr std::size_t kRiskBins = 20;

std::size_t bin_of(double risk) {
    auto b = static_cast<std::size_t>(risk * static_cast<double>(kRiskBins));
    return std::min(b, kRiskBins - 1);
}

// absent metrics become real json nulls rather than NaN doubles
Json number_or_null(double v) {
    if (std::isnan(v)) return nullptr;
    return v;
}

Json risk_meta(const RiskReport& r) {
    Json j = Json::object();
    j["estimator"] = r.estimator;
    j["lambda"] = r.lambda;
    j["seed"] = r.seed;
    j["model_trees"] = r.model_trees;
    j["count"] = r.rows.size();
    j["high_count"] = r.high_count();
    j["low_count"] = r.low_count();
    return j;
}

}  // namespace

Json risk_histogram_json(const RiskReport& r) {
    std::array<std::size_t, kRiskBins> counts{};
    for (const RiskRow& row : r.rows) counts[bin_of(row.risk)] += 1;
    Json j = risk_meta(r);
    Json bins = Json::array();
    for (std::size_t b = 0; b < kRiskBins; ++b) {
        Json bin = Json::object();
        bin["low"] = static_cast<double>(b) / kRiskBins;
        bin["high"] = static_cast<double>(b + 1) / kRiskBins;
        bin["count"] = counts[b];
        bins.push_back(std::move(bin));
    }
    j["bins"] = std::move(bins);
    return j;
}

Json risk_report_json(const RiskReport& r) {
    Json j = risk_meta(r);
    Json rows = Json::array();
    for (const RiskRow& row : r.rows) {
        Json item = Json::object();
        item["row_id"] = row.row_id;
        item["risk"] = row.risk;
        item["partition"] = row.high ? "High" : "Low";
        rows.push_back(std::move(item));
    }
    j["rows"] = std::move(rows);
    return j;
}

// --- synthetic bias experiment ---------------------------------------------

namespace {

void bias_rows(std::string& out, const std::vector<BiasBin>& bins, const char* estimator) {
    for (const BiasBin& b : bins) {
        out += format_double(b.low);
        out += ',';
        out += format_double(b.high);
        out += ',';
        out += estimator;
        out += ',';
        out += format_double(b.mean);
        out += ',';
        out += format_double(b.sdev);
        out += ',';
        out += std::to_string(b.count);
        out += '\n';
    }
}

Json bias_bins_json(const std::vector<BiasBin>& bins) {
    Json arr = Json::array();
    for (const BiasBin& b : bins) {
        Json bin = Json::object();
        bin["low"] = b.low;
        bin["high"] = b.high;
        bin["mean"] = number_or_null(b.mean);
        bin["std"] = number_or_null(b.sdev);
        bin["count"] = b.count;
        arr.push_back(std::move(bin));
    }
    return arr;
}

}  // namespace

std::string bias_report_csv(const BiasReport& r) {
    std::string out = "bin_low,bin_high,estimator,mean,std,count\n";
    bias_rows(out, r.foresee_bins, "foresee");
    bias_rows(out, r.baseline_bins, "baseline");
    return out;
}

Json bias_report_json(const BiasReport& r) {
    Json j = Json::object();
    j["seeds"] = r.seeds;
    j["n"] = r.n;
    Json est = Json::object();
    est["foresee"] = bias_bins_json(r.foresee_bins);
    est["baseline"] = bias_bins_json(r.baseline_bins);
    j["estimators"] = std::move(est);
    return j;
}

// --- fairness reports ------------------------------------------------------

namespace {

const char kFairnessHeader[] =
    "dataset,strategy,lambda,odds_aggregation,classifier,subset,count,"
    "accuracy,f1,demP,eqOPP,eqODD,mis_gap,notes\n";

void fairness_rows(std::string& out, const FairnessReport& r) {
    for (const ClassifierEval& c : r.classifiers) {
        for (const SubsetMetrics& s : c.subsets) {
            out += csv_escape(r.dataset);
            out += ',';
            out += csv_escape(r.strategy);
            out += ',';
            out += format_double(r.lambda);
            out += ',';
            out += to_string(r.odds_agg);
            out += ',';
            out += c.classifier;
            out += ',';
            out += s.subset;
            out += ',';
            out += std::to_string(s.count);
            out += ',';
            out += format_double(s.accuracy);
            out += ',';
            out += format_double(s.f1);
            out += ',';
            out += format_double(s.dem_parity);
            out += ',';
            out += format_double(s.opportunity);
            out += ',';
            out += format_double(s.odds);
            out += ',';
            out += format_double(s.mis_gap);
            out += ',';
            std::string notes;
            for (const std::string& n : s.notes) {
                if (!notes.empty()) notes += "; ";
                notes += n;
            }
            out += csv_escape(notes);
            out += '\n';
        }
    }
}

}  // namespace

std::string fairness_report_csv(const FairnessReport& r) {
    std::string out = kFairnessHeader;
    fairness_rows(out, r);
    return out;
}

std::string fairness_reports_csv(const std::vector<FairnessReport>& reports) {
    std::string out = kFairnessHeader;
    for (const FairnessReport& r : reports) fairness_rows(out, r);
    return out;
}

Json fairness_report_json(const FairnessReport& r) {
    Json j = Json::object();
    j["dataset"] = r.dataset;
    j["strategy"] = r.strategy;
    j["lambda"] = r.lambda;
    j["odds_aggregation"] = to_string(r.odds_agg);
    j["train_count"] = r.train_count;
    j["test_count"] = r.test_count;
    Json classifiers = Json::object();
    for (const ClassifierEval& c : r.classifiers) {
        Json subsets = Json::object();
        for (const SubsetMetrics& s : c.subsets) {
            Json m = Json::object();
            m["count"] = s.count;
            m["accuracy"] = number_or_null(s.accuracy);
            m["f1"] = number_or_null(s.f1);
            m["demP"] = number_or_null(s.dem_parity);
            m["eqOPP"] = number_or_null(s.opportunity);
            m["eqODD"] = number_or_null(s.odds);
            m["mis_gap"] = number_or_null(s.mis_gap);
            Json confusion = Json::object();
            confusion["tp"] = s.confusion.tp;
            confusion["fp"] = s.confusion.fp;
            confusion["tn"] = s.confusion.tn;
            confusion["fn"] = s.confusion.fn;
            m["confusion"] = std::move(confusion);
            m["notes"] = s.notes;
            subsets[s.subset] = std::move(m);
        }
        Json entry = Json::object();
        entry["convergence_warning"] = c.convergence_warning;
        entry["subsets"] = std::move(subsets);
        classifiers[c.classifier] = std::move(entry);
    }
    j["classifiers"] = std::move(classifiers);
    return j;
}

// --- model provenance ------------------------------------------------------

Json tree_json(const TreeModel& t) {
    Json j = Json::object();
    j["seed"] = t.seed;
    j["max_depth"] = t.params.max_depth;
    j["min_leaf"] = t.params.min_leaf;
    j["leaf_count"] = t.leaf_count;
    j["feature_subset"] = t.feature_subset;
    Json nodes = Json::array();
    for (const TreeNode& n : t.nodes) {
        Json node = Json::object();
        if (n.is_leaf()) {
            node["leaf_id"] = n.leaf_id;
            node["prediction"] = n.prediction;
            Json stats = Json::object();
            stats["count"] = Json::array({n.stats.count[0], n.stats.count[1]});
            stats["positives"] = Json::array({n.stats.positives[0], n.stats.positives[1]});
            stats["misclassified"] =
                Json::array({n.stats.misclassified[0], n.stats.misclassified[1]});
            node["stats"] = std::move(stats);
        } else {
            node["feature"] = n.feature;
            node["threshold"] = n.threshold;
            node["left"] = n.left;
            node["right"] = n.right;
        }
        nodes.push_back(std::move(node));
    }
    j["nodes"] = std::move(nodes);
    return j;
}

Json forest_json(const Forest& f) {
    Json j = Json::object();
    Json params = Json::object();
    params["m_target"] = f.params.m_target;
    params["instance_fraction"] = f.params.instance_fraction;
    params["feature_fraction"] = f.params.feature_fraction;
    params["beta"] = f.params.beta;
    params["include_sensitive"] = f.params.include_sensitive;
    params["optimistic_absent"] = f.params.optimistic_absent;
    params["max_depth"] = f.params.tree.max_depth;
    params["min_leaf"] = f.params.tree.min_leaf;
    params["seed"] = f.params.seed;
    params["max_attempts"] = f.params.attempts_budget();
    j["params"] = std::move(params);
    j["retained"] = f.trees.size();
    j["rejected"] = f.rejected_count;
    j["attempts"] = f.attempts;
    j["feature_space_width"] = f.feature_space_width;
    Json trees = Json::array();
    for (const RetainedTree& t : f.trees) {
        Json entry = Json::object();
        entry["candidate_index"] = t.candidate_index;
        entry["validation_accuracy"] = t.validation_accuracy;
        entry["model"] = tree_json(t.tree);
        trees.push_back(std::move(entry));
    }
    j["trees"] = std::move(trees);
    return j;
}

// --- feature profile -------------------------------------------------------

namespace {

// rows of one sensitive group ordered by risk, ties to the lower row id
IndexSet ranked_group(const Dataset& data, const IndexSet& indices,
                      const std::vector<double>& risks, bool protected_group, bool descending) {
    std::vector<std::size_t> pos;
    for (std::size_t i = 0; i < indices.size(); ++i)
        if (static_cast<bool>(data.sensitive[indices[i]]) == protected_group) pos.push_back(i);
    std::sort(pos.begin(), pos.end(), [&](std::size_t a, std::size_t b) {
        if (risks[a] != risks[b]) return descending ? risks[a] > risks[b] : risks[a] < risks[b];
        return indices[a] < indices[b];
    });
    IndexSet rows;
    rows.reserve(pos.size());
    for (std::size_t p : pos) rows.push_back(indices[p]);
    return rows;
}

double column_mean(const Dataset& data, const IndexSet& rows, std::size_t col) {
    double sum = 0.0;
    for (std::size_t i : rows) sum += data.raw.at(i, col);
    return sum / static_cast<double>(rows.size());
}

std::string column_mode(const Dataset& data, const IndexSet& rows, std::size_t col) {
    std::vector<std::size_t> counts(data.features[col].categories.size(), 0);
    for (std::size_t i : rows) {
        auto idx = static_cast<std::size_t>(data.raw.at(i, col));
        if (idx < counts.size()) counts[idx] += 1;
    }
    std::size_t best = 0;
    for (std::size_t c = 1; c < counts.size(); ++c)
        if (counts[c] > counts[best]) best = c;
    return data.category_of(col, static_cast<double>(best));
}

}  // namespace

ProfileReport profile_features(const Dataset& data, const IndexSet& indices,
                               const std::vector<double>& risks, double fraction) {
    if (indices.empty()) throw PreconditionError("profile_features: empty index set");
    if (risks.size() != indices.size())
        throw PreconditionError("profile_features: risks must align with the index set");
    if (!(fraction > 0.0 && fraction <= 0.5))
        throw PreconditionError("profile_features: fraction must lie in (0, 0.5]");

    ProfileReport out;
    out.fraction = fraction;
    auto take = static_cast<std::size_t>(
        std::ceil(fraction * static_cast<double>(indices.size()) / 2.0));
    out.per_group_take = take;

    IndexSet top, bottom;
    for (bool grp : {false, true}) {
        IndexSet desc = ranked_group(data, indices, risks, grp, true);
        if (desc.empty())
            throw PreconditionError(std::string("profile_features: the ") +
                                    (grp ? "protected" : "non-protected") +
                                    " group is absent");
        std::size_t got = std::min(take, desc.size());
        if (got < take)
            out.warnings.push_back(std::string("the ") + (grp ? "protected" : "non-protected") +
                                   " group has only " + std::to_string(desc.size()) +
                                   " rows, fewer than the requested " + std::to_string(take));
        top.insert(top.end(), desc.begin(), desc.begin() + got);
        IndexSet asc = ranked_group(data, indices, risks, grp, false);
        bottom.insert(bottom.end(), asc.begin(), asc.begin() + got);
    }
    out.top_count = top.size();
    out.bottom_count = bottom.size();

    for (std::size_t col = 0; col < data.features.size(); ++col) {
        ProfileRow row;
        row.feature = data.features[col].name;
        if (data.features[col].kind == FeatureKind::numeric) {
            row.kind = "numeric";
            row.top_mean = column_mean(data, top, col);
            row.bottom_mean = column_mean(data, bottom, col);
        } else {
            row.kind = "categorical";
            row.top_mode = column_mode(data, top, col);
            row.bottom_mode = column_mode(data, bottom, col);
        }
        out.rows.push_back(std::move(row));
    }
    return out;
}

std::string profile_report_csv(const ProfileReport& r) {
    std::string out = "feature,kind,top,bottom\n";
    for (const ProfileRow& row : r.rows) {
        out += csv_escape(row.feature);
        out += ',';
        out += row.kind;
        out += ',';
        if (row.kind == "numeric") {
            out += format_double(row.top_mean);
            out += ',';
            out += format_double(row.bottom_mean);
        } else {
            out += csv_escape(row.top_mode);
            out += ',';
            out += csv_escape(row.bottom_mode);
        }
        out += '\n';
    }
    return out;
}

Json profile_report_json(const ProfileReport& r) {
    Json j = Json::object();
    j["fraction"] = r.fraction;
    j["top_count"] = r.top_count;
    j["bottom_count"] = r.bottom_count;
    j["per_group_take"] = r.per_group_take;
    j["warnings"] = r.warnings;
    Json rows = Json::array();
    for (const ProfileRow& row : r.rows) {
        Json item = Json::object();
        item["feature"] = row.feature;
        item["kind"] = row.kind;
        if (row.kind == "numeric") {
            item["top"] = row.top_mean;
            item["bottom"] = row.bottom_mean;
        } else {
            item["top"] = row.top_mode;
            item["bottom"] = row.bottom_mode;
        }
        rows.push_back(std::move(item));
    }
    j["features"] = std::move(rows);
    return j;
}

// --- run manifest ----------------------------------------------------------

Json manifest_json(const RunManifest& m) {
    Json j = Json::object();
    j["subcommand"] = m.subcommand;
    j["parameters"] = m.parameters;
    j["seeds"] = m.seeds;
    Json inputs = Json::array();
    for (const auto& [path, digest] : m.input_digests) {
        Json entry = Json::object();
        entry["path"] = path;
        entry["sha256"] = digest;
        inputs.push_back(std::move(entry));
    }
    j["inputs"] = std::move(inputs);
    j["outputs"] = m.outputs;
    j["timestamp"] = m.timestamp;
    return j;
}

std::string iso8601_utc_now() {
    std::time_t now = std::time(nullptr);
    if (const char* epoch = std::getenv("SOURCE_DATE_EPOCH")) {
        char* end = nullptr;
        long long v = std::strtoll(epoch, &end, 10);
        if (end && *end == '\0') now = static_cast<std::time_t>(v);
    }
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

// --- file helpers ----------------------------------------------------------

std::string json_text(const Json& j) { return j.dump(2) + "\n"; }

void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open for writing: " + path);
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw IoError("write failed: " + path);
}

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    if (in.bad()) throw IoError("read failed: " + path);
    return buf.str();
}

}  // namespace foresee
