#include "ndtsel/metrics.hpp"

#include <algorithm>

#include "ndtsel/error.hpp"

namespace ndtsel {
namespace {

void check_pair(std::span<const int> a, std::span<const int> b, const char* what) {
    if (a.size() != b.size()) throw Error(std::string(what) + ": length mismatch");
    if (a.empty()) throw Error(std::string(what) + ": empty input");
}

}  // namespace

double AgreementTable::observed() const {
    std::size_t diagonal = 0;
    for (std::size_t k = 0; k < classes; ++k) diagonal += at(k, k);
    return static_cast<double>(diagonal) / static_cast<double>(total);
}

double AgreementTable::chance() const {
    const double n = static_cast<double>(total);
    double pe = 0.0;
    for (std::size_t k = 0; k < classes; ++k) {
        std::size_t row = 0;
        std::size_t col = 0;
        for (std::size_t j = 0; j < classes; ++j) {
            row += at(k, j);
            col += at(j, k);
        }
        pe += (static_cast<double>(row) / n) * (static_cast<double>(col) / n);
    }
    return pe;
}

AgreementTable agreement_table(std::span<const int> a, std::span<const int> b) {
    check_pair(a, b, "agreement_table");
    int top = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (a[i] < 0 || b[i] < 0) throw Error("agreement_table: negative label");
        top = std::max({top, a[i], b[i]});
    }
    AgreementTable table;
    table.classes = static_cast<std::size_t>(top) + 1;
    table.total = a.size();
    table.counts.assign(table.classes * table.classes, 0);
    for (std::size_t i = 0; i < a.size(); ++i) {
        ++table.counts[static_cast<std::size_t>(a[i]) * table.classes + static_cast<std::size_t>(b[i])];
    }
    return table;
}

double accuracy(std::span<const int> pred, std::span<const int> truth) {
    check_pair(pred, truth, "accuracy");
    std::size_t hits = 0;
    for (std::size_t i = 0; i < pred.size(); ++i) hits += pred[i] == truth[i] ? 1 : 0;
    return static_cast<double>(hits) / static_cast<double>(pred.size());
}

double cohens_kappa(std::span<const int> a, std::span<const int> b) {
    const AgreementTable table = agreement_table(a, b);
    const double po = table.observed();
    const double pe = table.chance();
    if (pe >= 1.0) return 1.0;  // both raters constant on the same class
    return (po - pe) / (1.0 - pe);
}

}  // namespace ndtsel
