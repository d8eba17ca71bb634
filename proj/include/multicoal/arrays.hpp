#pragma once

// Finite truncations of non-negative arrays mu[b,k] indexed by pairs k <= b
// living outside a box B_ell in Z^d_{>=0}, their consistency recursion
//   mu[b,k] = mu[b+e_j,k] + mu[b+e_j,k+e_j],
// construction from a representation (point masses rho on the minimal
// elements, an atomic measure J on the cube), and numeric recovery of that
// representation from the values.

#include <cmath>
#include <cstddef>
#include <map>
#include <optional>
#include <stdexcept>
#include <vector>

#include "multicoal/measures.hpp"
#include "multicoal/numerics.hpp"

namespace multicoal {

struct ArrayDomain {
    int d;
    std::vector<int> ell;  // box bound per coordinate
    int b_max;             // truncation bound per coordinate

    ArrayDomain(int d_, std::vector<int> ell_, int b_max_)
        : d(d_), ell(std::move(ell_)), b_max(b_max_) {
        if (d < 1) throw std::invalid_argument("ArrayDomain: d must be >= 1");
        if (static_cast<int>(ell.size()) != d)
            throw std::invalid_argument("ArrayDomain: ell must have d entries");
        for (int e : ell)
            if (e < 0) throw std::invalid_argument("ArrayDomain: negative box bound");
        for (int e : ell)
            if (e + 1 >= b_max)
                throw std::invalid_argument("ArrayDomain: truncation does not clear the box");
        // every point outside the box dominates a minimal element (ell_i+1) e_i
        std::vector<int> b(d, 0);
        while (true) {
            if (!in_box(b)) {
                bool dominated = false;
                for (int i = 0; i < d && !dominated; ++i) dominated = b[i] >= ell[i] + 1;
                if (!dominated)
                    throw std::logic_error("ArrayDomain: point fails to dominate a minimal element");
            }
            int pos = 0;
            while (pos < d && b[pos] == b_max) b[pos++] = 0;
            if (pos == d) break;
            ++b[pos];
        }
    }

    bool in_box(const std::vector<int>& v) const {
        for (int i = 0; i < d; ++i)
            if (v[i] > ell[i]) return false;
        return true;
    }

    std::vector<std::vector<int>> minimal_elements() const {
        std::vector<std::vector<int>> out;
        for (int i = 0; i < d; ++i) {
            std::vector<int> x(d, 0);
            x[i] = ell[i] + 1;
            out.push_back(std::move(x));
        }
        return out;
    }
};

class RateArray {
public:
    struct Representation {
        std::map<std::vector<int>, double> rho;
        CubeMeasure j;
    };

    explicit RateArray(ArrayDomain domain) : dom_(std::move(domain)) {
        const int side = dom_.b_max + 1;
        std::size_t boxes = 1;
        for (int i = 0; i < dom_.d; ++i) boxes *= static_cast<std::size_t>(side);
        offsets_.assign(boxes + 1, 0);
        std::vector<int> b(dom_.d, 0);
        for (std::size_t lin = 0; lin < boxes; ++lin) {
            std::size_t slots = 1;
            for (int i = 0; i < dom_.d; ++i) slots *= static_cast<std::size_t>(b[i] + 1);
            offsets_[lin + 1] = offsets_[lin] + slots;
            int pos = 0;
            while (pos < dom_.d && b[pos] == dom_.b_max) b[pos++] = 0;
            if (pos < dom_.d) ++b[pos];
        }
        values_.assign(offsets_.back(), 0.0);
    }

    const ArrayDomain& domain() const { return dom_; }

    bool in_domain(const std::vector<int>& b, const std::vector<int>& k) const {
        if (dom_.in_box(b) || dom_.in_box(k)) return false;
        for (int i = 0; i < dom_.d; ++i) {
            if (b[i] > dom_.b_max || k[i] < 0 || k[i] > b[i]) return false;
        }
        return true;
    }

    double at(const std::vector<int>& b, const std::vector<int>& k) const {
        return values_[index(b, k)];
    }
    void set(const std::vector<int>& b, const std::vector<int>& k, double v) {
        values_[index(b, k)] = v;
        representation.reset();  // the values no longer come from it
    }

    // populated by array_from_representation; the stored values reproduce it
    std::optional<Representation> representation;

    // Visit every (b, k) in the domain.
    template <class F>
    void for_each(F&& f) const {
        std::vector<int> b(dom_.d, 0), k(dom_.d, 0);
        while (true) {
            if (!dom_.in_box(b)) {
                std::fill(k.begin(), k.end(), 0);
                while (true) {
                    if (!dom_.in_box(k)) f(b, k);
                    int pos = 0;
                    while (pos < dom_.d && k[pos] == b[pos]) k[pos++] = 0;
                    if (pos == dom_.d) break;
                    ++k[pos];
                }
            }
            int pos = 0;
            while (pos < dom_.d && b[pos] == dom_.b_max) b[pos++] = 0;
            if (pos == dom_.d) break;
            ++b[pos];
        }
    }

private:
    std::size_t index(const std::vector<int>& b, const std::vector<int>& k) const {
        if (!in_domain(b, k)) throw std::out_of_range("RateArray: index outside domain");
        std::size_t lin = 0;
        for (int i = dom_.d - 1; i >= 0; --i)
            lin = lin * static_cast<std::size_t>(dom_.b_max + 1) + static_cast<std::size_t>(b[i]);
        std::size_t rank = 0;
        std::size_t stride = 1;
        for (int i = 0; i < dom_.d; ++i) {
            rank += static_cast<std::size_t>(k[i]) * stride;
            stride *= static_cast<std::size_t>(b[i] + 1);
        }
        return offsets_[lin] + rank;
    }

    ArrayDomain dom_;
    std::vector<std::size_t> offsets_;
    std::vector<double> values_;
};

// mu[b,k] = sum_{x in Gamma_ell} 1{k = x} rho(x) + sum over atoms (w, s) of
// w prod_j s_j^{k_j} (1 - s_j)^{b_j - k_j}. Missing rho entries default to 0.
inline RateArray array_from_representation(ArrayDomain domain,
                                           const std::map<std::vector<int>, double>& rho,
                                           const CubeMeasure& j_measure) {
    if (j_measure.dim() != domain.d)
        throw std::invalid_argument("array_from_representation: measure dimension mismatch");
    const auto minimal = domain.minimal_elements();
    for (const auto& [x, r] : rho) {
        if (!(r >= 0.0)) throw std::invalid_argument("array_from_representation: negative rho");
        bool is_minimal = false;
        for (const auto& g : minimal) is_minimal |= g == x;
        if (!is_minimal)
            throw std::invalid_argument("array_from_representation: rho key not a minimal element");
    }

    // per-atom power tables over 0..b_max
    const int side = domain.b_max + 1;
    const auto& atoms = j_measure.atoms();
    std::vector<std::vector<std::vector<double>>> s_pow(atoms.size()), c_pow(atoms.size());
    for (std::size_t a = 0; a < atoms.size(); ++a) {
        s_pow[a].assign(domain.d, std::vector<double>(side));
        c_pow[a].assign(domain.d, std::vector<double>(side));
        for (int j = 0; j < domain.d; ++j) {
            s_pow[a][j][0] = 1.0;
            c_pow[a][j][0] = 1.0;
            for (int p = 1; p < side; ++p) {
                s_pow[a][j][p] = s_pow[a][j][p - 1] * atoms[a].point[j];
                c_pow[a][j][p] = c_pow[a][j][p - 1] * (1.0 - atoms[a].point[j]);
            }
        }
    }

    RateArray array(std::move(domain));
    array.for_each([&](const std::vector<int>& b, const std::vector<int>& k) {
        double v = 0.0;
        const auto it = rho.find(k);
        if (it != rho.end()) v += it->second;
        for (std::size_t a = 0; a < atoms.size(); ++a) {
            double prod = atoms[a].weight;
            for (int j = 0; j < array.domain().d && prod != 0.0; ++j)
                prod *= s_pow[a][j][k[j]] * c_pow[a][j][b[j] - k[j]];
            v += prod;
        }
        array.set(b, k, v);
    });
    array.representation = RateArray::Representation{rho, j_measure};
    return array;
}

struct RecursionCheck {
    double max_abs = 0.0;
    double max_rel = 0.0;
    std::vector<int> arg_b, arg_k;
    int arg_j = -1;
};

// Residuals of mu[b,k] - mu[b+e_j,k] - mu[b+e_j,k+e_j] over every interior
// triple; max_rel scales each residual by the largest of the three terms.
inline RecursionCheck check_recursion_array(const RateArray& a) {
    RecursionCheck check;
    const int d = a.domain().d;
    std::vector<int> b1(d), k1(d);
    a.for_each([&](const std::vector<int>& b, const std::vector<int>& k) {
        const double v = a.at(b, k);
        for (int j = 0; j < d; ++j) {
            if (b[j] + 1 > a.domain().b_max) continue;
            b1.assign(b.begin(), b.end());
            ++b1[j];
            k1.assign(k.begin(), k.end());
            ++k1[j];
            const double v1 = a.at(b1, k);
            const double v2 = a.at(b1, k1);
            const double res = std::abs(v - v1 - v2);
            const double rel = res / std::max({v, v1, v2, 1e-300});
            if (res > check.max_abs) check.max_abs = res;
            if (rel > check.max_rel) {
                check.max_rel = rel;
                check.arg_b = b;
                check.arg_k = k;
                check.arg_j = j;
            }
        }
    });
    return check;
}

struct RhoEstimate {
    double value;
    double error_proxy;  // last increment of the decreasing column limit
};

struct RecoveryReport {
    std::map<std::vector<int>, RhoEstimate> rho;
    // Power moments int s^m J(ds) for m outside the box with every
    // coordinate <= b_max and |m| <= the requested order. At the minimal
    // elements themselves the point mass and the moment are confounded at
    // finite truncation; there the table holds mu[m,m] - rho_estimate, so
    // those entries inherit the rho error proxy.
    std::map<std::vector<int>, double> power_moments;
    double max_recursion_residual = 0.0;
};

// Reads the representation back off a recursion-satisfying array: rho(x) as
// the decreasing limit of the k = x column mu[x + B(1,..,1), x], moments of
// J from the diagonal entries of the translated arrays. The overload taking
// a precomputed RecursionCheck avoids re-walking the array.
inline RecoveryReport recover_representation(const RateArray& a, const RecursionCheck& check,
                                             int moment_order = 10, double recursion_tol = 1e-9) {
    if (check.max_rel > recursion_tol)
        throw std::runtime_error("recover_representation: recursion violated beyond tolerance");

    RecoveryReport report;
    report.max_recursion_residual = check.max_rel;
    const ArrayDomain& dom = a.domain();

    for (const auto& x : dom.minimal_elements()) {
        int x_max = 0;
        for (int i = 0; i < dom.d; ++i) x_max = std::max(x_max, x[i]);
        const int b_steps = dom.b_max - x_max;
        auto column = [&](int steps) {
            std::vector<int> b = x;
            for (int i = 0; i < dom.d; ++i) b[i] += steps;
            return a.at(b, x);
        };
        const double last = column(b_steps);
        const double prev = b_steps >= 1 ? column(b_steps - 1) : last;
        report.rho[x] = {last, std::abs(prev - last)};
    }

    // moments: m must dominate a minimal element and sit inside the truncation
    std::vector<int> m(dom.d, 0);
    const int cap = std::min(moment_order, dom.b_max);
    while (true) {
        int total = 0;
        for (int i = 0; i < dom.d; ++i) total += m[i];
        if (total <= moment_order && !dom.in_box(m) && total > 0) {
            double value = a.at(m, m);
            const auto it = report.rho.find(m);
            if (it != report.rho.end()) value -= it->second.value;
            report.power_moments[m] = value;
        }
        int pos = 0;
        while (pos < dom.d && m[pos] == cap) m[pos++] = 0;
        if (pos == dom.d) break;
        ++m[pos];
    }
    return report;
}

inline RecoveryReport recover_representation(const RateArray& a, int moment_order = 10,
                                             double recursion_tol = 1e-9) {
    return recover_representation(a, check_recursion_array(a), moment_order, recursion_tol);
}

}  // namespace multicoal
