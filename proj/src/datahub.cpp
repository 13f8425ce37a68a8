#include "ndtsel/datahub.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

#include "ndtsel/error.hpp"
#include "ndtsel/random.hpp"
#include "ndtsel/text.hpp"

namespace ndtsel {

std::vector<std::size_t> Dataset::class_counts() const {
    std::vector<std::size_t> counts(class_count(), 0);
    for (int y : labels) {
        if (y >= 0 && static_cast<std::size_t>(y) < counts.size()) ++counts[static_cast<std::size_t>(y)];
    }
    return counts;
}

void validate(const Dataset& dataset) {
    const std::size_t n = dataset.size();
    const std::size_t c = dataset.class_count();
    if (dataset.features.rows() != n) throw Error("dataset: feature rows do not match label count");
    if (dataset.feature_names.size() != dataset.dimension()) throw Error("dataset: feature name count mismatch");
    if (dataset.dimension() == 0) throw Error("dataset: no feature columns");
    if (c < 2) throw Error("single-class dataset");
    for (double v : dataset.features.flat()) {
        if (!std::isfinite(v)) throw Error("dataset: non-finite feature value");
    }
    for (int y : dataset.labels) {
        if (y < 0 || static_cast<std::size_t>(y) >= c) throw Error("dataset: label out of range");
    }
    const auto counts = dataset.class_counts();
    for (std::size_t k = 0; k < c; ++k) {
        if (counts[k] == 0) throw Error("dataset: class '" + dataset.class_names[k] + "' has no instances");
    }
    if (n < 4 * c) throw Error("dataset: need at least 4 instances per class (N >= 4*C)");
}

std::vector<std::vector<std::string>> parse_csv(std::string_view text, char delimiter) {
    std::vector<std::vector<std::string>> rows;
    std::vector<std::string> row;
    std::string field;
    bool in_quotes = false;
    bool field_started = false;

    auto end_field = [&] {
        row.push_back(std::move(field));
        field.clear();
        field_started = false;
    };
    auto end_row = [&] {
        end_field();
        const bool blank = row.size() == 1 && trim(row[0]).empty();
        if (!blank) rows.push_back(std::move(row));
        row.clear();
    };

    for (std::size_t i = 0; i < text.size(); ++i) {
        const char ch = text[i];
        if (in_quotes) {
            if (ch == '"') {
                if (i + 1 < text.size() && text[i + 1] == '"') {
                    field.push_back('"');
                    ++i;
                } else {
                    in_quotes = false;
                }
            } else {
                field.push_back(ch);
            }
        } else if (ch == '"' && !field_started) {
            in_quotes = true;
            field_started = true;
        } else if (ch == delimiter) {
            end_field();
        } else if (ch == '\n') {
            end_row();
        } else if (ch == '\r') {
            if (i + 1 < text.size() && text[i + 1] == '\n') continue;
            end_row();
        } else {
            field.push_back(ch);
            field_started = true;
        }
    }
    if (in_quotes) throw Error("csv: unterminated quoted field");
    if (field_started || !field.empty() || !row.empty()) end_row();
    return rows;
}

namespace {

bool is_missing_token(std::string_view cell) {
    cell = trim(cell);
    return cell.empty() || cell == "?" || cell == "NA" || cell == "NaN" || cell == "nan";
}

ColumnKind infer_kind(const std::vector<std::string>& cells) {
    bool any = false;
    for (const auto& cell : cells) {
        if (cell.empty()) continue;
        any = true;
        if (!parse_finite(cell)) return ColumnKind::categorical;
    }
    return any ? ColumnKind::numeric : ColumnKind::categorical;
}

}  // namespace

RawTable make_raw_table(std::vector<std::vector<std::string>> rows, const CsvOptions& options,
                        const LabelColumn& label, std::string name) {
    if (rows.empty()) throw Error("csv: no rows");
    std::vector<std::string> header;
    if (options.has_header) {
        header = std::move(rows.front());
        rows.erase(rows.begin());
        for (auto& h : header) h = std::string(trim(h));
    }
    const std::size_t width = options.has_header ? header.size() : rows.empty() ? 0 : rows.front().size();
    if (width < 2) throw Error("csv: need at least one feature column and a label column");
    if (!options.has_header) {
        for (std::size_t j = 0; j < width; ++j) header.push_back("col" + std::to_string(j));
    }
    for (std::size_t r = 0; r < rows.size(); ++r) {
        if (rows[r].size() != width) {
            throw Error("csv: row " + std::to_string(r + 1) + " has " + std::to_string(rows[r].size()) +
                        " fields, expected " + std::to_string(width));
        }
    }

    std::size_t label_index = 0;
    if (const auto* label_name = std::get_if<std::string>(&label)) {
        const auto it = std::find(header.begin(), header.end(), *label_name);
        if (it == header.end()) throw Error("csv: label column '" + *label_name + "' not found");
        label_index = static_cast<std::size_t>(it - header.begin());
    } else {
        const long idx = std::get<long>(label);
        const long resolved = idx < 0 ? static_cast<long>(width) + idx : idx;
        if (resolved < 0 || resolved >= static_cast<long>(width)) {
            throw Error("csv: label column index " + std::to_string(idx) + " out of range");
        }
        label_index = static_cast<std::size_t>(resolved);
    }

    RawTable table;
    table.name = std::move(name);
    for (std::size_t j = 0; j < width; ++j) {
        RawColumn column;
        column.name = header[j];
        column.cells.reserve(rows.size());
        for (const auto& row : rows) {
            column.cells.push_back(is_missing_token(row[j]) ? std::string() : std::string(trim(row[j])));
        }
        if (j == label_index) {
            column.kind = ColumnKind::categorical;
            table.label = std::move(column);
        } else {
            column.kind = infer_kind(column.cells);
            table.features.push_back(std::move(column));
        }
    }
    return table;
}

Dataset preprocess(const RawTable& table, CategoricalPolicy policy) {
    const std::size_t n_raw = table.label.cells.size();
    std::vector<const RawColumn*> kept;
    for (const auto& column : table.features) {
        if (column.cells.size() != n_raw) throw Error("preprocess: ragged table");
        if (column.kind == ColumnKind::numeric || policy == CategoricalPolicy::one_hot) kept.push_back(&column);
    }
    if (kept.empty()) throw Error("preprocess: zero feature columns remain");

    std::vector<std::size_t> rows;
    for (std::size_t r = 0; r < n_raw; ++r) {
        bool complete = !table.label.cells[r].empty();
        for (const RawColumn* column : kept) complete = complete && !column->cells[r].empty();
        if (complete) rows.push_back(r);
    }
    if (rows.empty()) throw Error("preprocess: zero rows remain after removing missing values");

    Dataset out;
    out.name = table.name;

    // Output columns: numeric pass-through or one indicator per sorted level.
    struct OutColumn {
        const RawColumn* source;
        std::string level;  // empty for numeric
    };
    std::vector<OutColumn> columns;
    for (const RawColumn* column : kept) {
        if (column->kind == ColumnKind::numeric) {
            columns.push_back({column, {}});
            out.feature_names.push_back(column->name);
            continue;
        }
        std::set<std::string> levels;
        for (std::size_t r : rows) levels.insert(column->cells[r]);
        for (const auto& level : levels) {
            columns.push_back({column, level});
            out.feature_names.push_back(column->name + "=" + level);
        }
    }

    out.features = Matrix(rows.size(), columns.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        for (std::size_t j = 0; j < columns.size(); ++j) {
            const auto& cell = columns[j].source->cells[rows[i]];
            if (columns[j].level.empty() && columns[j].source->kind == ColumnKind::numeric) {
                const auto value = parse_finite(cell);
                if (!value) throw Error("preprocess: non-numeric cell in numeric column '" + columns[j].source->name + "'");
                out.features(i, j) = *value;
            } else {
                out.features(i, j) = cell == columns[j].level ? 1.0 : 0.0;
            }
        }
    }

    std::set<std::string> label_values;
    for (std::size_t r : rows) label_values.insert(table.label.cells[r]);
    out.class_names.assign(label_values.begin(), label_values.end());
    std::map<std::string, int> label_ids;
    for (std::size_t k = 0; k < out.class_names.size(); ++k) label_ids[out.class_names[k]] = static_cast<int>(k);
    out.labels.reserve(rows.size());
    for (std::size_t r : rows) out.labels.push_back(label_ids.at(table.label.cells[r]));

    validate(out);
    return out;
}

RawTable to_raw_table(const Dataset& dataset) {
    RawTable table;
    table.name = dataset.name;
    for (std::size_t j = 0; j < dataset.dimension(); ++j) {
        RawColumn column{dataset.feature_names[j], ColumnKind::numeric, {}};
        column.cells.reserve(dataset.size());
        for (std::size_t i = 0; i < dataset.size(); ++i) column.cells.push_back(format_double(dataset.features(i, j)));
        table.features.push_back(std::move(column));
    }
    table.label = RawColumn{"label", ColumnKind::categorical, {}};
    for (int y : dataset.labels) table.label.cells.push_back(dataset.class_names[static_cast<std::size_t>(y)]);
    return table;
}

Dataset load_csv(const std::filesystem::path& path, const LabelColumn& label, const CsvOptions& options,
                 CategoricalPolicy policy) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot read file '" + path.string() + "'");
    std::ostringstream buffer;
    buffer << in.rdbuf();
    auto rows = parse_csv(buffer.str(), options.delimiter);
    return preprocess(make_raw_table(std::move(rows), options, label, path.stem().string()), policy);
}

namespace {

std::string quote_if_needed(const std::string& field) {
    if (field.find_first_of(",\"\n\r") == std::string::npos) return field;
    std::string quoted = "\"";
    for (char ch : field) {
        if (ch == '"') quoted.push_back('"');
        quoted.push_back(ch);
    }
    quoted.push_back('"');
    return quoted;
}

}  // namespace

void write_csv(const Dataset& dataset, std::ostream& out) {
    for (const auto& name : dataset.feature_names) out << quote_if_needed(name) << ',';
    out << "label\n";
    for (std::size_t i = 0; i < dataset.size(); ++i) {
        for (std::size_t j = 0; j < dataset.dimension(); ++j) out << format_double(dataset.features(i, j)) << ',';
        out << quote_if_needed(dataset.class_names[static_cast<std::size_t>(dataset.labels[i])]) << '\n';
    }
}

void write_csv(const Dataset& dataset, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write file '" + path.string() + "'");
    write_csv(dataset, out);
    out.flush();
    if (!out) throw Error("write failed for '" + path.string() + "'");
}

namespace {

// Largest-remainder apportionment of `total` units by `ratios`; ties go to the
// lower index.
std::vector<std::size_t> apportion(std::size_t total, const std::vector<double>& ratios) {
    std::vector<std::size_t> out(ratios.size());
    std::vector<std::pair<double, std::size_t>> remainders;
    std::size_t assigned = 0;
    for (std::size_t p = 0; p < ratios.size(); ++p) {
        const double ideal = ratios[p] * static_cast<double>(total);
        out[p] = static_cast<std::size_t>(std::floor(ideal));
        assigned += out[p];
        remainders.emplace_back(ideal - std::floor(ideal), p);
    }
    std::stable_sort(remainders.begin(), remainders.end(),
                     [](const auto& a, const auto& b) { return a.first > b.first; });
    for (std::size_t k = 0; assigned < total; ++k, ++assigned) ++out[remainders[k % remainders.size()].second];
    return out;
}

}  // namespace

DataSplit stratified_split(const Dataset& dataset, const SplitRatios& ratios, std::uint64_t seed) {
    const std::vector<double> shares{ratios.train, ratios.validation, ratios.test};
    for (double r : shares) {
        if (!(r > 0.0)) throw Error("split: ratios must be positive");
    }
    if (std::abs(shares[0] + shares[1] + shares[2] - 1.0) > 1e-9) throw Error("split: ratios must sum to 1");

    const std::size_t n_classes = dataset.class_count();
    const auto class_sizes = dataset.class_counts();
    const std::size_t parts = shares.size();
    const auto totals = apportion(dataset.size(), shares);

    // Per-class floors, then distribute the leftover units so that row sums
    // equal class sizes and column sums equal the partition totals. Each cell
    // receives at most one extra unit, which keeps it within 1 of its ideal.
    std::vector<std::vector<std::size_t>> alloc(n_classes, std::vector<std::size_t>(parts));
    std::vector<std::vector<double>> frac(n_classes, std::vector<double>(parts));
    std::vector<std::size_t> row_left(n_classes);
    std::vector<std::size_t> col_left = totals;
    for (std::size_t c = 0; c < n_classes; ++c) {
        std::size_t sum = 0;
        for (std::size_t p = 0; p < parts; ++p) {
            const double ideal = shares[p] * static_cast<double>(class_sizes[c]);
            alloc[c][p] = static_cast<std::size_t>(std::floor(ideal));
            frac[c][p] = ideal - std::floor(ideal);
            sum += alloc[c][p];
            col_left[p] -= alloc[c][p];
        }
        row_left[c] = class_sizes[c] - sum;
    }
    std::vector<std::size_t> part_order(parts);
    std::iota(part_order.begin(), part_order.end(), 0);
    std::stable_sort(part_order.begin(), part_order.end(),
                     [&](std::size_t a, std::size_t b) { return col_left[a] > col_left[b]; });
    for (std::size_t p : part_order) {
        std::vector<std::size_t> classes(n_classes);
        std::iota(classes.begin(), classes.end(), 0);
        std::stable_sort(classes.begin(), classes.end(), [&](std::size_t a, std::size_t b) {
            if (row_left[a] != row_left[b]) return row_left[a] > row_left[b];
            return frac[a][p] > frac[b][p];
        });
        for (std::size_t k = 0; k < col_left[p]; ++k) {
            const std::size_t c = classes[k];
            if (row_left[c] == 0) throw Error("split: internal apportionment failure");
            ++alloc[c][p];
            --row_left[c];
        }
    }

    for (std::size_t c = 0; c < n_classes; ++c) {
        for (std::size_t p = 0; p < parts; ++p) {
            if (alloc[c][p] == 0) {
                throw Error("split: class '" + dataset.class_names[c] + "' too small to appear in every partition");
            }
        }
    }

    std::vector<std::vector<std::size_t>> members(n_classes);
    for (std::size_t i = 0; i < dataset.size(); ++i) members[static_cast<std::size_t>(dataset.labels[i])].push_back(i);

    DataSplit split;
    split.seed = seed;
    std::vector<std::size_t>* targets[] = {&split.train, &split.validation, &split.test};
    Rng rng(seed);
    for (std::size_t c = 0; c < n_classes; ++c) {
        rng.shuffle(std::span<std::size_t>(members[c]));
        std::size_t offset = 0;
        for (std::size_t p = 0; p < parts; ++p) {
            targets[p]->insert(targets[p]->end(), members[c].begin() + static_cast<std::ptrdiff_t>(offset),
                               members[c].begin() + static_cast<std::ptrdiff_t>(offset + alloc[c][p]));
            offset += alloc[c][p];
        }
    }
    for (auto* target : targets) std::sort(target->begin(), target->end());
    return split;
}

Dataset make_sim_dataset(std::size_t n, std::size_t d, std::uint64_t seed, const SimParams& params) {
    if (n < 4) throw Error("simulate: n must be at least 4");
    if (d < 1) throw Error("simulate: d must be at least 1");

    Dataset out;
    out.name = "sim_" + std::to_string(n) + "_" + std::to_string(d);
    out.features = Matrix(n, d);
    out.labels.resize(n);
    out.class_names = {"0", "1"};
    for (std::size_t j = 0; j < d; ++j) out.feature_names.push_back("x" + std::to_string(j));

    const double offset = params.separation / std::sqrt(static_cast<double>(d));
    Rng rng(seed);
    for (std::size_t i = 0; i < n; ++i) {
        const int label = static_cast<int>(i % 2);
        double shift = 0.0;
        if (label == 1) shift = (i / 2) % 2 == 0 ? offset : -offset;
        for (std::size_t j = 0; j < d; ++j) out.features(i, j) = rng.normal() + shift;
        out.labels[i] = label;
    }
    return out;
}

}  // namespace ndtsel
