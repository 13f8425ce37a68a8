#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <variant>
#include <vector>

#include "ndtsel/matrix.hpp"

namespace ndtsel {

/// Numeric feature matrix with integer class labels in 0..class_count-1.
struct Dataset {
    std::string name;
    Matrix features;                        // N x d
    std::vector<int> labels;                // N
    std::vector<std::string> feature_names; // d
    std::vector<std::string> class_names;   // C, index = class id

    std::size_t size() const { return labels.size(); }
    std::size_t dimension() const { return features.cols(); }
    std::size_t class_count() const { return class_names.size(); }

    std::vector<std::size_t> class_counts() const;
};

/// Throws Error when any Dataset invariant is violated.
void validate(const Dataset& dataset);

enum class ColumnKind { numeric, categorical };
enum class CategoricalPolicy { drop, one_hot };

struct RawColumn {
    std::string name;
    ColumnKind kind = ColumnKind::numeric;
    std::vector<std::string> cells;  // empty string = missing
};

/// A parsed table before preprocessing: typed feature columns plus the raw
/// label column.
struct RawTable {
    std::string name;
    std::vector<RawColumn> features;
    RawColumn label;
};

struct CsvOptions {
    char delimiter = ',';
    bool has_header = true;
};

/// Column selector for the label: a header name or a zero-based index.
/// Negative indices count from the end (-1 = last column).
using LabelColumn = std::variant<std::string, long>;

/// RFC-4180 style tokenizer (quoted fields, doubled quotes, CRLF).
std::vector<std::vector<std::string>> parse_csv(std::string_view text, char delimiter);

/// Builds a typed RawTable from tokenized rows. Missing-value tokens ("", "?",
/// "NA", "NaN") are normalized to the empty string; a column is numeric when
/// every non-missing cell parses as a finite number.
RawTable make_raw_table(std::vector<std::vector<std::string>> rows, const CsvOptions& options,
                        const LabelColumn& label, std::string name);

Dataset preprocess(const RawTable& table, CategoricalPolicy policy);

/// Converts a dataset back into a fully numeric RawTable (inverse of the
/// numeric path of preprocess).
RawTable to_raw_table(const Dataset& dataset);

Dataset load_csv(const std::filesystem::path& path, const LabelColumn& label, const CsvOptions& options = {},
                 CategoricalPolicy policy = CategoricalPolicy::drop);

/// Writes features then the label (as its class name) in the last column.
void write_csv(const Dataset& dataset, std::ostream& out);
void write_csv(const Dataset& dataset, const std::filesystem::path& path);

struct SplitRatios {
    double train = 0.5;
    double validation = 0.25;
    double test = 0.25;
};

struct DataSplit {
    std::vector<std::size_t> train;
    std::vector<std::size_t> validation;
    std::vector<std::size_t> test;
    std::uint64_t seed = 0;
};

/// Stratified random subsampling into three disjoint partitions. Partition
/// totals are the largest-remainder rounding of ratio*N, and each class gets
/// floor or ceil of its ideal share in every partition.
DataSplit stratified_split(const Dataset& dataset, const SplitRatios& ratios, std::uint64_t seed);

/// Parameters of the synthetic two-class generator. Class 0 is a unit Gaussian
/// at the origin; class 1 is an equal mixture of unit Gaussians centred at
/// +separation*u and -separation*u with u the unit diagonal (1,...,1)/sqrt(d).
/// Class 0 occupies an oblique slab flanked by class 1, so no hyperplane
/// separates the classes and axis-aligned splits need a staircase.
struct SimParams {
    double separation = 4.0;
};

Dataset make_sim_dataset(std::size_t n, std::size_t d, std::uint64_t seed, const SimParams& params = {});

}  // namespace ndtsel
