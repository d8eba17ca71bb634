#pragma once

// Exact merger-rate evaluation, the consistency recursion, and jump-chain
// transition enumeration for finite block configurations.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "multicoal/measures.hpp"
#include "multicoal/numerics.hpp"

namespace multicoal {

// Number of blocks of each type.
struct BlockCounts {
    std::vector<int> n;

    BlockCounts() = default;
    explicit BlockCounts(std::vector<int> counts) : n(std::move(counts)) {
        for (int c : n)
            if (c < 0) throw std::invalid_argument("BlockCounts: negative count");
    }
    static BlockCounts zeros(int d) { return BlockCounts(std::vector<int>(d, 0)); }
    static BlockCounts unit(int d, int type, int count = 1) {
        std::vector<int> v(d, 0);
        v.at(type) = count;
        return BlockCounts(std::move(v));
    }

    int dim() const { return static_cast<int>(n.size()); }
    int total() const { return std::accumulate(n.begin(), n.end(), 0); }
    int operator[](int i) const { return n[i]; }
    int& operator[](int i) { return n[i]; }

    bool operator==(const BlockCounts& other) const { return n == other.n; }
    bool operator<(const BlockCounts& other) const { return n < other.n; }

    // coordinatewise <=
    bool dominated_by(const BlockCounts& other) const {
        if (dim() != other.dim()) return false;
        for (int i = 0; i < dim(); ++i)
            if (n[i] > other.n[i]) return false;
        return true;
    }

    bool is_zero() const { return total() == 0; }
    bool is_unit(int type) const {
        if (n[type] != 1) return false;
        return total() == 1;
    }

    BlockCounts plus_unit(int type, int amount = 1) const {
        BlockCounts out = *this;
        out.n[type] += amount;
        return out;
    }

    std::string to_string() const {
        std::string s = "(";
        for (int i = 0; i < dim(); ++i) {
            if (i) s += ",";
            s += std::to_string(n[i]);
        }
        return s + ")";
    }
};

// Rate at which a fixed set of k of the b standing blocks merges into a
// single block of type `target`:
//   sum_{j != target} 1{k = e_j} rho[j -> target]
//   + 1{k = 2 e_target} rho[target target -> target]
//   + sum over atoms (w, s) of w * prod_j s_j^{k_j} (1 - s_j)^{b_j - k_j},
// with the 0^0 = 1 convention.
inline double merger_rate(const MergerMeasureSet& m, const BlockCounts& b, const BlockCounts& k,
                          int target) {
    m.check_type(target);
    if (b.dim() != m.dim() || k.dim() != m.dim())
        throw std::invalid_argument("merger_rate: dimension mismatch");
    if (!k.dominated_by(b)) throw std::invalid_argument("merger_rate: k exceeds b");
    if (k.is_zero()) throw std::invalid_argument("merger_rate: k = 0 is not a merger");
    if (k.is_unit(target))
        throw std::invalid_argument("merger_rate: k = e_target is not a transition");

    double rate = 0.0;
    if (k.total() == 1) {
        for (int j = 0; j < m.dim(); ++j) {
            if (j != target && k[j] == 1) rate += m.colour_change_rate(j, target);
        }
    }
    if (k.total() == 2 && k[target] == 2) rate += m.pair_rate(target);
    for (const auto& atom : m.q_measure(target).atoms()) {
        double prod = atom.weight;
        for (int j = 0; j < m.dim() && prod != 0.0; ++j)
            prod *= ipow(atom.point[j], k[j]) * ipow(1.0 - atom.point[j], b[j] - k[j]);
        rate += prod;
    }
    return rate;
}

// lambda_{b,k -> i} - lambda_{b+e_j,k -> i} - lambda_{b+e_j,k+e_j -> i};
// zero (up to rounding) for every valid input.
inline double recursion_residual(const MergerMeasureSet& m, const BlockCounts& b,
                                 const BlockCounts& k, int target, int j) {
    const BlockCounts b1 = b.plus_unit(j);
    return merger_rate(m, b, k, target) - merger_rate(m, b1, k, target) -
           merger_rate(m, b1, k.plus_unit(j), target);
}

// Residual scaled by the largest of the three terms.
inline double recursion_residual_relative(const MergerMeasureSet& m, const BlockCounts& b,
                                          const BlockCounts& k, int target, int j) {
    const BlockCounts b1 = b.plus_unit(j);
    const double r0 = merger_rate(m, b, k, target);
    const double r1 = merger_rate(m, b1, k, target);
    const double r2 = merger_rate(m, b1, k.plus_unit(j), target);
    const double scale = std::max({r0, r1, r2, 1e-300});
    return (r0 - r1 - r2) / scale;
}

struct TransitionClass {
    BlockCounts k;
    int target;
    double multiplicity;  // prod_j binom(n_j, k_j); exact for desk-scale counts
    double per_set_rate;
    double class_rate;
};

struct TransitionTable {
    std::vector<TransitionClass> classes;
    double total_rate = 0.0;
    std::vector<double> cumulative;  // running class-rate sums, for sampling
};

namespace detail {

inline double binom(int n, int k) {
    if (k < 0 || k > n) return 0.0;
    k = std::min(k, n - k);
    double out = 1.0;
    for (int i = 1; i <= k; ++i) out = out * (n - k + i) / i;
    return out;
}

}  // namespace detail

// Enumerate all classes (k, target) with k <= n, k not 0 and not e_target,
// and positive per-set rate. Throws when the enumeration bound
// prod_j (n_j + 1) * d exceeds `cap`.
inline TransitionTable transition_table(const MergerMeasureSet& m, const BlockCounts& n,
                                        std::size_t cap = 1'000'000) {
    if (n.dim() != m.dim()) throw std::invalid_argument("transition_table: dimension mismatch");
    if (n.total() < 1) throw std::invalid_argument("transition_table: no blocks");
    double bound = static_cast<double>(m.dim());
    for (int i = 0; i < n.dim(); ++i) bound *= n[i] + 1;
    if (bound > static_cast<double>(cap))
        throw std::runtime_error("transition_table: class enumeration exceeds cap");

    TransitionTable table;
    BlockCounts k = BlockCounts::zeros(n.dim());
    // mixed-radix iteration over all k <= n
    while (true) {
        if (!k.is_zero()) {
            double mult = 1.0;
            for (int j = 0; j < n.dim(); ++j) mult *= detail::binom(n[j], k[j]);
            for (int target = 0; target < m.dim(); ++target) {
                if (k.is_unit(target)) continue;
                const double rate = merger_rate(m, n, k, target);
                if (rate > 0.0) {
                    table.total_rate += mult * rate;
                    table.classes.push_back({k, target, mult, rate, mult * rate});
                    table.cumulative.push_back(table.total_rate);
                }
            }
        }
        int pos = 0;
        while (pos < n.dim() && k[pos] == n[pos]) k[pos++] = 0;
        if (pos == n.dim()) break;
        ++k[pos];
    }
    return table;
}

}  // namespace multicoal
