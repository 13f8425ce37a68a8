#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "ndtsel/matrix.hpp"

namespace ndtsel {

/// C x C contingency counts between two label vectors (rows: first rater).
struct AgreementTable {
    std::size_t classes = 0;
    std::size_t total = 0;
    std::vector<std::size_t> counts;  // row-major

    std::size_t at(std::size_t a, std::size_t b) const { return counts[a * classes + b]; }
    double observed() const;  // p_o
    double chance() const;    // p_e
};

AgreementTable agreement_table(std::span<const int> a, std::span<const int> b);

/// Fraction of positions where pred equals truth.
double accuracy(std::span<const int> pred, std::span<const int> truth);

/// Cohen's kappa, (p_o - p_e) / (1 - p_e). Two identical constant raters give
/// p_e = 1 and are defined to agree perfectly (1.0).
double cohens_kappa(std::span<const int> a, std::span<const int> b);

}  // namespace ndtsel
