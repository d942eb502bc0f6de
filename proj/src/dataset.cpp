#include "foresee/dataset.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace foresee {

namespace {

std::string trim(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    std::size_t b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::string cur;
    std::stringstream ss(s);
    while (std::getline(ss, cur, ',')) {
        std::string t = trim(cur);
        if (!t.empty()) out.push_back(t);
    }
    return out;
}

// one RFC-4180 record; handles quoted fields, embedded commas/newlines, ""
bool read_record(std::istream& in, std::vector<std::string>& fields) {
    fields.clear();
    std::string field;
    bool in_quotes = false;
    bool saw_any = false;
    int c;
    while ((c = in.get()) != EOF) {
        saw_any = true;
        char ch = static_cast<char>(c);
        if (in_quotes) {
            if (ch == '"') {
                if (in.peek() == '"') {
                    in.get();
                    field.push_back('"');
                } else {
                    in_quotes = false;
                }
            } else {
                field.push_back(ch);
            }
        } else if (ch == '"') {
            in_quotes = true;
        } else if (ch == ',') {
            fields.push_back(field);
            field.clear();
        } else if (ch == '\n') {
            if (!field.empty() && field.back() == '\r') field.pop_back();
            fields.push_back(field);
            return true;
        } else {
            field.push_back(ch);
        }
    }
    if (!saw_any) return false;
    if (!field.empty() && field.back() == '\r') field.pop_back();
    fields.push_back(field);
    return true;
}

bool parse_number(const std::string& s, double& out) {
    if (s.empty()) return false;
    char* end = nullptr;
    out = std::strtod(s.c_str(), &end);
    return end == s.c_str() + s.size() && std::isfinite(out);
}

}  // namespace

Schema Schema::from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open schema file: " + path);
    return parse(in, path);
}

Schema Schema::parse(std::istream& in, const std::string& origin) {
    Schema s;
    std::set<std::string> seen;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        std::size_t eq = t.find('=');
        if (eq == std::string::npos)
            throw SchemaError(origin + ":" + std::to_string(lineno) + ": expected key = value");
        std::string key = trim(t.substr(0, eq));
        std::string value = trim(t.substr(eq + 1));
        seen.insert(key);
        if (key == "sensitive_column") s.sensitive_column = value;
        else if (key == "sensitive_protected_value") s.sensitive_protected_value = value;
        else if (key == "label_column") s.label_column = value;
        else if (key == "label_positive_value") s.label_positive_value = value;
        else if (key == "categorical_columns") s.categorical_columns = split_list(value);
        else if (key == "drop_columns") s.drop_columns = split_list(value);
        else if (key == "missing_values") {
            s.missing_values = split_list(value);
            s.missing_values.push_back("");  // empty cell is always missing
        } else {
            throw SchemaError(origin + ":" + std::to_string(lineno) + ": unknown key '" + key + "'");
        }
    }
    for (const char* required : {"sensitive_column", "sensitive_protected_value", "label_column",
                                 "label_positive_value"})
        if (!seen.count(required))
            throw SchemaError(origin + ": missing required key '" + std::string(required) + "'");
    return s;
}

Dataset Dataset::from_raw(std::string name, std::vector<FeatureSpec> features, Matrix raw,
                          std::vector<std::uint8_t> sensitive, std::vector<std::uint8_t> labels) {
    Dataset d;
    d.name = std::move(name);
    d.features = std::move(features);
    d.raw = std::move(raw);
    d.sensitive = std::move(sensitive);
    d.labels = std::move(labels);
    d.validate();
    d.build_encoding();
    return d;
}

Dataset Dataset::from_numeric(std::string name, Matrix values, std::vector<std::uint8_t> sensitive,
                              std::vector<std::uint8_t> labels) {
    std::vector<FeatureSpec> specs;
    specs.reserve(values.cols);
    for (std::size_t j = 0; j < values.cols; ++j)
        specs.push_back({"x" + std::to_string(j), FeatureKind::numeric, {}});
    return from_raw(std::move(name), std::move(specs), std::move(values), std::move(sensitive),
                    std::move(labels));
}

void Dataset::validate() const {
    if (raw.rows == 0) throw ValidationError(name + ": dataset is empty");
    if (sensitive.size() != raw.rows || labels.size() != raw.rows)
        throw ValidationError(name + ": row, sensitive and label counts disagree");
    if (raw.cols != features.size())
        throw ValidationError(name + ": feature spec count does not match row width");
    bool has[2] = {false, false};
    for (std::uint8_t s : sensitive) has[s != 0] = true;
    if (!has[0] || !has[1])
        throw ValidationError(name + ": one sensitive group empty (group " +
                              std::string(has[0] ? "1" : "0") + " has no members)");
    for (std::size_t j = 0; j < features.size(); ++j) {
        const auto& f = features[j];
        for (std::size_t i = 0; i < raw.rows; ++i) {
            double v = raw.at(i, j);
            if (f.kind == FeatureKind::numeric) {
                if (!std::isfinite(v))
                    throw ValidationError(name + ": non-finite value in numeric feature '" + f.name +
                                          "' at row " + std::to_string(i));
            } else if (v != kUnknownCategory &&
                       (v < 0 || v >= static_cast<double>(f.categories.size()) ||
                        v != std::floor(v))) {
                throw ValidationError(name + ": category index out of range in '" + f.name +
                                      "' at row " + std::to_string(i));
            }
        }
    }
}

void Dataset::build_encoding() {
    encoded_names_.clear();
    encoded_offset_.assign(features.size(), 0);
    std::size_t total = 0;
    for (std::size_t j = 0; j < features.size(); ++j) {
        encoded_offset_[j] = total;
        if (features[j].kind == FeatureKind::numeric) {
            encoded_names_.push_back(features[j].name);
            ++total;
        } else {
            for (const auto& cat : features[j].categories)
                encoded_names_.push_back(features[j].name + "=" + cat);
            total += features[j].categories.size();
        }
    }
    encoded_ = Matrix(raw.rows, total);
    for (std::size_t i = 0; i < raw.rows; ++i) {
        for (std::size_t j = 0; j < features.size(); ++j) {
            double v = raw.at(i, j);
            if (features[j].kind == FeatureKind::numeric) {
                encoded_.at(i, encoded_offset_[j]) = v;
            } else if (v != kUnknownCategory) {
                encoded_.at(i, encoded_offset_[j] + static_cast<std::size_t>(v)) = 1.0;
            }
        }
    }
    encoded_binary_.assign(total, true);
    for (std::size_t j = 0; j < features.size(); ++j) {
        if (features[j].kind != FeatureKind::numeric) continue;
        std::size_t col = encoded_offset_[j];
        for (std::size_t i = 0; i < raw.rows; ++i) {
            double v = encoded_.at(i, col);
            if (v != 0.0 && v != 1.0) {
                encoded_binary_[col] = false;
                break;
            }
        }
    }
}

std::vector<double> Dataset::encode_row(const FeatureVector& row) const {
    if (row.size() != features.size())
        throw PreconditionError(name + ": feature vector length mismatch");
    std::vector<double> out(encoded_.cols, 0.0);
    for (std::size_t j = 0; j < features.size(); ++j) {
        if (features[j].kind == FeatureKind::numeric) {
            out[encoded_offset_[j]] = row[j];
        } else if (row[j] != kUnknownCategory) {
            auto idx = static_cast<std::size_t>(row[j]);
            if (idx >= features[j].categories.size())
                throw PreconditionError(name + ": category index out of range for '" +
                                        features[j].name + "'");
            out[encoded_offset_[j] + idx] = 1.0;
        }
    }
    return out;
}

IndexSet Dataset::numeric_encoded_columns() const {
    IndexSet cols;
    for (std::size_t j = 0; j < features.size(); ++j)
        if (features[j].kind == FeatureKind::numeric) cols.push_back(encoded_offset_[j]);
    return cols;
}

std::string Dataset::category_of(std::size_t feature, double cell) const {
    const auto& f = features.at(feature);
    if (f.kind == FeatureKind::numeric) {
        std::ostringstream ss;
        ss << cell;
        return ss.str();
    }
    if (cell == kUnknownCategory) return "<unknown>";
    return f.categories.at(static_cast<std::size_t>(cell));
}

FeatureView make_view(const Dataset& data, bool include_sensitive) {
    FeatureView v;
    v.base = &data.encoded();
    v.rows = data.size();
    v.cols = data.encoded().cols;
    if (include_sensitive) {
        v.sensitive = data.sensitive.data();
        v.cols += 1;
    }
    return v;
}

Dataset load_csv(const std::string& path, const Schema& schema) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open dataset file: " + path);

    std::vector<std::string> header;
    if (!read_record(in, header)) throw SchemaError(path + ": empty file, header row required");
    for (auto& h : header) h = trim(h);

    auto column_of = [&](const std::string& name) -> std::size_t {
        auto it = std::find(header.begin(), header.end(), name);
        if (it == header.end())
            throw SchemaError(path + ": column '" + name + "' not found in header");
        return static_cast<std::size_t>(it - header.begin());
    };

    std::size_t sens_col = column_of(schema.sensitive_column);
    std::size_t label_col = column_of(schema.label_column);
    std::set<std::size_t> dropped_cols;
    for (const auto& d : schema.drop_columns) dropped_cols.insert(column_of(d));
    dropped_cols.insert(sens_col);
    dropped_cols.insert(label_col);
    std::set<std::size_t> categorical_cols;
    for (const auto& c : schema.categorical_columns) categorical_cols.insert(column_of(c));

    std::vector<std::size_t> feature_cols;
    for (std::size_t j = 0; j < header.size(); ++j)
        if (!dropped_cols.count(j)) feature_cols.push_back(j);
    if (feature_cols.empty()) throw SchemaError(path + ": no feature columns left after drops");

    std::set<std::string> missing(schema.missing_values.begin(), schema.missing_values.end());
    missing.insert("");

    // pass 1: keep rows with no missing cell among used columns
    std::vector<std::vector<std::string>> rows;
    std::size_t dropped_missing = 0;
    std::vector<std::string> record;
    std::size_t lineno = 1;
    while (read_record(in, record)) {
        ++lineno;
        if (record.size() == 1 && trim(record[0]).empty()) continue;  // trailing blank line
        if (record.size() != header.size())
            throw ValidationError(path + ": row " + std::to_string(lineno) + " has " +
                                  std::to_string(record.size()) + " cells, expected " +
                                  std::to_string(header.size()));
        for (auto& cell : record) cell = trim(cell);
        bool has_missing = false;
        for (std::size_t j : feature_cols)
            if (missing.count(record[j])) has_missing = true;
        if (missing.count(record[sens_col]) || missing.count(record[label_col])) has_missing = true;
        if (has_missing) {
            ++dropped_missing;
            continue;
        }
        rows.push_back(record);
    }
    if (rows.empty()) throw ValidationError(path + ": no usable rows");

    // category vocabularies, sorted for a file-order independent encoding
    std::map<std::size_t, std::vector<std::string>> vocab;
    for (std::size_t j : feature_cols) {
        if (!categorical_cols.count(j)) continue;
        std::set<std::string> values;
        for (const auto& r : rows) values.insert(r[j]);
        vocab[j] = std::vector<std::string>(values.begin(), values.end());
    }

    std::vector<FeatureSpec> specs;
    for (std::size_t j : feature_cols) {
        FeatureSpec spec;
        spec.name = header[j];
        if (categorical_cols.count(j)) {
            spec.kind = FeatureKind::categorical;
            spec.categories = vocab[j];
        }
        specs.push_back(std::move(spec));
    }

    Matrix raw(rows.size(), feature_cols.size());
    std::vector<std::uint8_t> sensitive(rows.size()), labels(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto& r = rows[i];
        for (std::size_t k = 0; k < feature_cols.size(); ++k) {
            std::size_t j = feature_cols[k];
            if (categorical_cols.count(j)) {
                const auto& v = vocab[j];
                auto it = std::lower_bound(v.begin(), v.end(), r[j]);
                raw.at(i, k) = static_cast<double>(it - v.begin());
            } else {
                double value;
                if (!parse_number(r[j], value))
                    throw ValidationError(path + ": row " + std::to_string(i) +
                                          ": cannot parse numeric cell '" + r[j] + "' in column '" +
                                          header[j] + "'");
                raw.at(i, k) = value;
            }
        }
        sensitive[i] = r[sens_col] == schema.sensitive_protected_value ? 1 : 0;
        labels[i] = r[label_col] == schema.label_positive_value ? 1 : 0;
    }

    bool label_seen[2] = {false, false};
    for (std::uint8_t y : labels) label_seen[y] = true;
    if (!label_seen[0] || !label_seen[1])
        throw ValidationError(path + ": label column '" + schema.label_column +
                              "' is not binary after mapping (only one value present)");

    std::string name = path;
    if (auto slash = name.find_last_of("/\\"); slash != std::string::npos) name = name.substr(slash + 1);
    if (auto dot = name.find_last_of('.'); dot != std::string::npos && dot > 0) name = name.substr(0, dot);

    Dataset d = Dataset::from_raw(std::move(name), std::move(specs), std::move(raw),
                                  std::move(sensitive), std::move(labels));
    d.dropped_rows = dropped_missing;
    return d;
}

SplitPair split(const Dataset& data, double ratio, std::uint64_t seed) {
    if (!(ratio > 0.0 && ratio < 1.0))
        throw PreconditionError("split ratio must lie strictly between 0 and 1");

    const std::size_t n = data.size();
    std::array<IndexSet, 4> strata;  // (label, sensitive) -> 2*label + sensitive
    for (std::size_t i = 0; i < n; ++i)
        strata[2 * (data.labels[i] != 0) + (data.sensitive[i] != 0)].push_back(i);

    SplitPair out;
    out.seed = seed;

    std::vector<std::size_t> eligible;
    std::size_t small_rows = 0;
    for (std::size_t k = 0; k < strata.size(); ++k) {
        if (strata[k].empty()) continue;
        if (strata[k].size() < 2) {
            out.warnings.push_back("stratum (label=" + std::to_string(k / 2) + ", sensitive=" +
                                   std::to_string(k % 2) + ") has fewer than 2 rows; assigned to train");
            out.train.insert(out.train.end(), strata[k].begin(), strata[k].end());
            small_rows += strata[k].size();
        } else {
            eligible.push_back(k);
        }
    }

    // largest-remainder apportionment keeps each stratum and the total within
    // one row of the target ratio
    auto target_total = static_cast<std::size_t>(std::llround(ratio * static_cast<double>(n)));
    target_total = target_total > small_rows ? target_total - small_rows : 0;
    std::size_t eligible_rows = 0;
    for (std::size_t k : eligible) eligible_rows += strata[k].size();
    if (target_total > eligible_rows) target_total = eligible_rows;

    std::vector<std::size_t> take(eligible.size());
    std::vector<std::pair<double, std::size_t>> remainders;
    std::size_t base_sum = 0;
    for (std::size_t e = 0; e < eligible.size(); ++e) {
        double exact = ratio * static_cast<double>(strata[eligible[e]].size());
        take[e] = static_cast<std::size_t>(std::floor(exact));
        base_sum += take[e];
        remainders.emplace_back(-(exact - std::floor(exact)), e);
    }
    std::sort(remainders.begin(), remainders.end());
    for (std::size_t r = 0; base_sum < target_total && r < remainders.size(); ++r, ++base_sum)
        ++take[remainders[r].second];
    while (base_sum > target_total) {  // ratio rounded low; trim from the last stratum up
        for (std::size_t e = eligible.size(); e-- > 0 && base_sum > target_total;)
            if (take[e] > 0) { --take[e]; --base_sum; }
    }

    for (std::size_t e = 0; e < eligible.size(); ++e) {
        IndexSet& s = strata[eligible[e]];
        Rng rng(derive_seed(seed, eligible[e]));
        shuffle(s, rng);
        // keep at least one row on each side of an eligible stratum
        std::size_t c = std::clamp<std::size_t>(take[e], 1, s.size() - 1);
        out.train.insert(out.train.end(), s.begin(), s.begin() + static_cast<std::ptrdiff_t>(c));
        out.test.insert(out.test.end(), s.begin() + static_cast<std::ptrdiff_t>(c), s.end());
    }
    std::sort(out.train.begin(), out.train.end());
    std::sort(out.test.begin(), out.test.end());
    return out;
}

}  // namespace foresee
