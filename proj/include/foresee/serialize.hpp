#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "foresee/dataset.hpp"
#include "foresee/forest.hpp"
#include "foresee/metrics.hpp"
#include "foresee/synthetic.hpp"

namespace foresee {

// insertion-ordered so emitted documents read in the order fields are written;
// ordering is fixed in code, so output bytes stay reproducible
using Json = nlohmann::ordered_json;

/// Shortest decimal text that parses back to the same double. NaN prints as
/// an empty string so absent metrics leave blank CSV cells.
std::string format_double(double v);

std::string csv_escape(const std::string& cell);

// --- risk reports ----------------------------------------------------------

std::string risk_report_csv(const RiskReport& r);

/// Histogram summary over 20 equal-width risk bins plus partition counts.
Json risk_histogram_json(const RiskReport& r);

/// Full rows as JSON, same content as the CSV surface.
Json risk_report_json(const RiskReport& r);

// --- synthetic bias experiment ---------------------------------------------

std::string bias_report_csv(const BiasReport& r);
Json bias_report_json(const BiasReport& r);

// --- fairness reports ------------------------------------------------------

/// Flat table, one row per (classifier, subset), strategy column included.
std::string fairness_report_csv(const FairnessReport& r);

/// One header, then every report's rows in order. Used when mitigation rows
/// join the unmitigated table.
std::string fairness_reports_csv(const std::vector<FairnessReport>& reports);

Json fairness_report_json(const FairnessReport& r);

// --- model provenance ------------------------------------------------------

Json tree_json(const TreeModel& t);
Json forest_json(const Forest& f);

// --- feature profile -------------------------------------------------------

struct ProfileRow {
    std::string feature;
    std::string kind;        // "numeric" or "categorical"
    double top_mean = 0.0;   // numeric only
    double bottom_mean = 0.0;
    std::string top_mode;    // categorical only
    std::string bottom_mode;
};

/// Top vs bottom risk slices, each drawn half from each sensitive group.
struct ProfileReport {
    double fraction = 0.2;
    std::size_t top_count = 0;
    std::size_t bottom_count = 0;
    std::size_t per_group_take = 0;
    std::vector<ProfileRow> rows;
    std::vector<std::string> warnings;
};

/// risks aligned with `indices`. From each sensitive group the highest- and
/// lowest-risk ceil(fraction * n / 2) rows are taken (risk ties resolved by
/// lower row id); a group smaller than that take is used whole with a
/// warning. Numeric features compare means, categorical ones compare modes
/// (mode ties resolved by lowest category index).
ProfileReport profile_features(const Dataset& data, const IndexSet& indices,
                               const std::vector<double>& risks, double fraction);

std::string profile_report_csv(const ProfileReport& r);
Json profile_report_json(const ProfileReport& r);

// --- run manifest ----------------------------------------------------------

struct RunManifest {
    std::string subcommand;
    Json parameters = Json::object();  // resolved values after precedence
    std::vector<std::uint64_t> seeds;
    std::vector<std::pair<std::string, std::string>> input_digests;  // path, sha256
    std::vector<std::string> outputs;
    std::string timestamp;
};

Json manifest_json(const RunManifest& m);

/// Current UTC time, ISO 8601. Honors SOURCE_DATE_EPOCH for reproducible runs.
std::string iso8601_utc_now();

// --- file helpers ----------------------------------------------------------

std::string json_text(const Json& j);  // two-space indent, trailing newline

void write_text_file(const std::string& path, const std::string& content);
std::string read_text_file(const std::string& path);

}  // namespace foresee
