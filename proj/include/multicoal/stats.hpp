#pragma once

// Two-sample chi-square homogeneity test over empirical laws of count
// vectors, with deterministic low-expectation bin pooling.

#include <map>
#include <stdexcept>
#include <vector>

#include "multicoal/numerics.hpp"

namespace multicoal {

struct ChiSquareResult {
    double statistic = 0.0;
    double dof = 0.0;
    double p_value = 1.0;
    std::size_t bins = 0;
};

// Bins with pooled expected count below `min_expected` are merged (in sorted
// state order) into one overflow bin. Returns p = 1 when fewer than two
// effective bins remain.
inline ChiSquareResult two_sample_chi_square(const std::map<std::vector<int>, std::size_t>& a,
                                             const std::map<std::vector<int>, std::size_t>& b,
                                             double min_expected = 5.0) {
    double na = 0.0, nb = 0.0;
    for (const auto& [s, c] : a) na += static_cast<double>(c);
    for (const auto& [s, c] : b) nb += static_cast<double>(c);
    if (na == 0.0 || nb == 0.0) throw std::invalid_argument("two_sample_chi_square: empty sample");
    const double n = na + nb;

    std::map<std::vector<int>, std::pair<double, double>> merged;
    for (const auto& [s, c] : a) merged[s].first += static_cast<double>(c);
    for (const auto& [s, c] : b) merged[s].second += static_cast<double>(c);

    std::vector<std::pair<double, double>> bins;
    double pool_a = 0.0, pool_b = 0.0;
    for (const auto& [s, counts] : merged) {
        const double pooled = counts.first + counts.second;
        if (pooled * na / n < min_expected || pooled * nb / n < min_expected) {
            pool_a += counts.first;
            pool_b += counts.second;
        } else {
            bins.emplace_back(counts.first, counts.second);
        }
    }
    if (pool_a + pool_b > 0.0) bins.emplace_back(pool_a, pool_b);

    ChiSquareResult result;
    result.bins = bins.size();
    if (bins.size() < 2) return result;
    for (const auto& [oa, ob] : bins) {
        const double pooled = oa + ob;
        const double ea = pooled * na / n;
        const double eb = pooled * nb / n;
        result.statistic += (oa - ea) * (oa - ea) / ea + (ob - eb) * (ob - eb) / eb;
    }
    result.dof = static_cast<double>(bins.size() - 1);
    result.p_value = chi_square_sf(result.statistic, result.dof);
    return result;
}

}  // namespace multicoal
