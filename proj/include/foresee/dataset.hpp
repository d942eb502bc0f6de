#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "foresee/common.hpp"

namespace foresee {

enum class FeatureKind { numeric, categorical };

struct FeatureSpec {
    std::string name;
    FeatureKind kind = FeatureKind::numeric;
    std::vector<std::string> categories;  // empty for numeric
};

/// Key-value schema config: `sensitive_column`, `sensitive_protected_value`,
/// `label_column`, `label_positive_value`, `categorical_columns`,
/// `drop_columns`, `missing_values`. Lists are comma separated.
struct Schema {
    std::string sensitive_column;
    std::string sensitive_protected_value;
    std::string label_column;
    std::string label_positive_value;
    std::vector<std::string> categorical_columns;
    std::vector<std::string> drop_columns;
    std::vector<std::string> missing_values = {"", "?"};

    static Schema from_file(const std::string& path);
    static Schema parse(std::istream& in, const std::string& origin);
};

// Raw feature row. Numeric cells hold the value, categorical cells hold the
// category index within the FeatureSpec list (kUnknownCategory if unseen).
using FeatureVector = std::vector<double>;

inline constexpr double kUnknownCategory = -1.0;

/// Immutable after construction; concurrent reads are safe.
class Dataset {
public:
    std::string name;
    std::vector<FeatureSpec> features;
    Matrix raw;                           // n x |features|, categoricals as indices
    std::vector<std::uint8_t> sensitive;  // 1 = protected group
    std::vector<std::uint8_t> labels;     // 1 = positive outcome
    std::size_t dropped_rows = 0;

    static Dataset from_raw(std::string name, std::vector<FeatureSpec> features, Matrix raw,
                            std::vector<std::uint8_t> sensitive, std::vector<std::uint8_t> labels);

    // all-numeric convenience for fixtures and the synthetic generator
    static Dataset from_numeric(std::string name, Matrix values, std::vector<std::uint8_t> sensitive,
                                std::vector<std::uint8_t> labels);

    std::size_t size() const { return raw.rows; }

    /// One-hot encoded feature matrix, sensitive and label excluded.
    const Matrix& encoded() const { return encoded_; }
    const std::vector<std::string>& encoded_names() const { return encoded_names_; }
    /// true where an encoded column takes only values {0,1} (one-hot or
    /// binary numeric); the tree splitter uses this as a counting fast path
    const std::vector<bool>& encoded_binary() const { return encoded_binary_; }

    std::vector<double> encode_row(const FeatureVector& row) const;

    std::string category_of(std::size_t feature, double cell) const;

    /// encoded columns carrying numeric features verbatim (the standardization
    /// targets; one-hot columns stay raw)
    IndexSet numeric_encoded_columns() const;

private:
    void build_encoding();
    void validate() const;

    Matrix encoded_;
    std::vector<std::string> encoded_names_;
    std::vector<bool> encoded_binary_;
    std::vector<std::size_t> encoded_offset_;  // per raw feature, first encoded column
};

/// Read-only view: the encoded matrix with the sensitive attribute optionally
/// appended as one extra trailing column.
struct FeatureView {
    const Matrix* base = nullptr;
    const std::uint8_t* sensitive = nullptr;  // null when excluded
    std::size_t rows = 0;
    std::size_t cols = 0;

    double value(std::size_t i, std::size_t j) const {
        return j < base->cols ? base->at(i, j) : static_cast<double>(sensitive[i]);
    }
};

FeatureView make_view(const Dataset& data, bool include_sensitive);

struct SplitPair {
    IndexSet train;
    IndexSet test;
    std::uint64_t seed = 0;
    std::vector<std::string> warnings;
};

struct CsvLoadResult {
    Dataset data;
    std::size_t dropped_missing = 0;
};

/// RFC-4180 style CSV with a header row. Rows with missing cells are dropped
/// and counted. Columns not named categorical are parsed as numeric; an
/// unparsable cell raises a row-level error naming the row.
Dataset load_csv(const std::string& path, const Schema& schema);

/// Stratified by (label, sensitive); deterministic under seed. A stratum with
/// fewer than 2 rows goes entirely to train with a warning flag on the pair.
SplitPair split(const Dataset& data, double ratio, std::uint64_t seed);

}  // namespace foresee
