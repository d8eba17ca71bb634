#pragma once

// The characterizing data of a multitype coalescent with d colours:
// colour-change rates rho[j -> i], within-type pairwise rates rho[ii -> i],
// and one finite atomic merger measure on [0,1]^d per target colour.
//
// Merger measures are stored as finite atom lists. Parametric densities
// enter only through an explicit quadrature discretization whose rule is
// recorded in the measure's family tag, so every integral the library
// computes is exact at the representation.
//
// Types are 0-based throughout the C++ API; the JSON schema (io.hpp) and the
// CLI use 1-based type labels.

#include <cmath>
#include <cstddef>
#include <functional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "multicoal/numerics.hpp"

namespace multicoal {

struct CubeAtom {
    double weight;
    std::vector<double> point;
};

// Finite atomic measure on [0,1]^d that does not charge the origin.
class CubeMeasure {
public:
    explicit CubeMeasure(int d, std::vector<CubeAtom> atoms = {}, std::string family_tag = {})
        : d_(d), atoms_(std::move(atoms)), family_tag_(std::move(family_tag)) {
        if (d_ < 1) throw std::invalid_argument("CubeMeasure: dimension must be >= 1");
        for (const auto& a : atoms_) {
            if (!(a.weight >= 0.0)) throw std::invalid_argument("CubeMeasure: negative atom weight");
            if (static_cast<int>(a.point.size()) != d_)
                throw std::invalid_argument("CubeMeasure: atom dimension mismatch");
            bool all_zero = true;
            for (double s : a.point) {
                if (!(s >= 0.0 && s <= 1.0))
                    throw std::invalid_argument("CubeMeasure: atom coordinate outside [0,1]");
                if (s != 0.0) all_zero = false;
            }
            if (all_zero && a.weight > 0.0)
                throw std::invalid_argument(
                    "CubeMeasure: atom at the zero vector (use the pairwise rate instead)");
        }
    }

    static CubeMeasure zero(int d) { return CubeMeasure(d); }

    int dim() const { return d_; }
    const std::vector<CubeAtom>& atoms() const { return atoms_; }
    bool empty() const { return atoms_.empty(); }
    const std::string& family_tag() const { return family_tag_; }

    double total_mass() const {
        double m = 0.0;
        for (const auto& a : atoms_) m += a.weight;
        return m;
    }

private:
    int d_;
    std::vector<CubeAtom> atoms_;
    std::string family_tag_;
};

// Immutable after construction; safe to share across concurrent workers.
class MergerMeasureSet {
public:
    MergerMeasureSet(int d, std::vector<std::vector<double>> rho_change,
                     std::vector<double> rho_pair, std::vector<CubeMeasure> q_measures)
        : d_(d),
          rho_change_(std::move(rho_change)),
          rho_pair_(std::move(rho_pair)),
          q_(std::move(q_measures)) {
        if (d_ < 1) throw std::invalid_argument("MergerMeasureSet: d must be >= 1");
        if (static_cast<int>(rho_change_.size()) != d_)
            throw std::invalid_argument("MergerMeasureSet: rho_change must be d x d");
        for (int j = 0; j < d_; ++j) {
            if (static_cast<int>(rho_change_[j].size()) != d_)
                throw std::invalid_argument("MergerMeasureSet: rho_change must be d x d");
            for (int i = 0; i < d_; ++i) {
                if (j == i && rho_change_[j][i] != 0.0)
                    throw std::invalid_argument("MergerMeasureSet: diagonal colour change undefined");
                if (!(rho_change_[j][i] >= 0.0))
                    throw std::invalid_argument("MergerMeasureSet: negative colour-change rate");
            }
        }
        if (static_cast<int>(rho_pair_.size()) != d_)
            throw std::invalid_argument("MergerMeasureSet: rho_pair must have d entries");
        for (double r : rho_pair_)
            if (!(r >= 0.0)) throw std::invalid_argument("MergerMeasureSet: negative pairwise rate");
        if (static_cast<int>(q_.size()) != d_)
            throw std::invalid_argument("MergerMeasureSet: need one merger measure per type");
        for (const auto& q : q_)
            if (q.dim() != d_)
                throw std::invalid_argument("MergerMeasureSet: merger measure dimension mismatch");
    }

    int dim() const { return d_; }

    // rho[j -> i]; requires j != i.
    double colour_change_rate(int from, int to) const {
        check_type(from);
        check_type(to);
        if (from == to) throw std::invalid_argument("colour_change_rate: from == to");
        return rho_change_[from][to];
    }

    double pair_rate(int type) const {
        check_type(type);
        return rho_pair_[type];
    }

    const CubeMeasure& q_measure(int target) const {
        check_type(target);
        return q_[target];
    }

    const std::vector<std::vector<double>>& rho_change() const { return rho_change_; }
    const std::vector<double>& rho_pair() const { return rho_pair_; }

    bool has_any_q_mass() const {
        for (const auto& q : q_)
            if (q.total_mass() > 0.0) return true;
        return false;
    }

    void check_type(int i) const {
        if (i < 0 || i >= d_) throw std::out_of_range("type index out of range");
    }

private:
    int d_;
    std::vector<std::vector<double>> rho_change_;  // [from][to]
    std::vector<double> rho_pair_;
    std::vector<CubeMeasure> q_;
};

// Incremental construction; discretizes parametric within-type densities.
class MeasureSetBuilder {
public:
    explicit MeasureSetBuilder(int d)
        : d_(d),
          rho_change_(d > 0 ? d : 1, std::vector<double>(d > 0 ? d : 1, 0.0)),
          rho_pair_(d > 0 ? d : 1, 0.0),
          atoms_(d > 0 ? d : 1),
          tags_(d > 0 ? d : 1) {
        if (d < 1) throw std::invalid_argument("MeasureSetBuilder: d must be >= 1");
    }

    MeasureSetBuilder& colour_change(int from, int to, double rate) {
        check(from);
        check(to);
        if (from == to) throw std::invalid_argument("colour_change: from == to");
        rho_change_[from][to] = rate;
        return *this;
    }

    MeasureSetBuilder& pair_rate(int type, double rate) {
        check(type);
        rho_pair_[type] = rate;
        return *this;
    }

    MeasureSetBuilder& atom(int target, double weight, std::vector<double> s) {
        check(target);
        atoms_[target].push_back({weight, std::move(s)});
        return *this;
    }

    // Midpoint discretization of a within-type merger density on (0,1] for
    // `target`: node c gets weight density(s_c)/nodes at the point s_c * e_target.
    MeasureSetBuilder& within_type_density(int target, const std::function<double(double)>& density,
                                           int nodes, const std::string& family_name) {
        check(target);
        if (nodes < 1) throw std::invalid_argument("within_type_density: need >= 1 node");
        for (int c = 0; c < nodes; ++c) {
            const double s = (c + 0.5) / nodes;
            const double w = density(s) / nodes;
            if (!(w >= 0.0) || !std::isfinite(w))
                throw std::invalid_argument("within_type_density: density must be finite and >= 0");
            if (w == 0.0) continue;
            std::vector<double> point(d_, 0.0);
            point[target] = s;
            atoms_[target].push_back({w, std::move(point)});
        }
        std::ostringstream tag;
        tag << family_name << ";rule=midpoint;nodes=" << nodes;
        if (!tags_[target].empty()) tags_[target] += "|";
        tags_[target] += tag.str();
        return *this;
    }

    MergerMeasureSet build() const {
        std::vector<CubeMeasure> q;
        q.reserve(d_);
        for (int i = 0; i < d_; ++i) q.emplace_back(d_, atoms_[i], tags_[i]);
        return MergerMeasureSet(d_, rho_change_, rho_pair_, std::move(q));
    }

private:
    void check(int i) const {
        if (i < 0 || i >= d_) throw std::out_of_range("MeasureSetBuilder: type out of range");
    }

    int d_;
    std::vector<std::vector<double>> rho_change_;
    std::vector<double> rho_pair_;
    std::vector<std::vector<CubeAtom>> atoms_;
    std::vector<std::string> tags_;
};

// Per-type value of the integral of (s_i^2 + sum_{j != i} s_j) against the
// type-i merger measure. Finite by construction for atomic measures.
struct IntegrabilityReport {
    std::vector<double> value;
    bool all_finite;
};

inline IntegrabilityReport check_integrability(const MergerMeasureSet& m) {
    IntegrabilityReport report;
    report.value.resize(m.dim(), 0.0);
    report.all_finite = true;
    for (int i = 0; i < m.dim(); ++i) {
        double v = 0.0;
        for (const auto& a : m.q_measure(i).atoms()) {
            double integrand = a.point[i] * a.point[i];
            for (int j = 0; j < m.dim(); ++j)
                if (j != i) integrand += a.point[j];
            v += a.weight * integrand;
        }
        report.value[i] = v;
        if (!std::isfinite(v)) report.all_finite = false;
    }
    return report;
}

// Single-type data seen by type i: the pairwise rate together with the
// pushforward of the type-i merger measure under s -> s_i. Atoms whose i-th
// coordinate vanishes drive no type-i merger; their mass is reported, not
// silently dropped, because it feeds the killing data below.
struct ProjectedMeasure {
    double pair_rate;
    CubeMeasure qbar;  // 1-dimensional
    double dropped_mass;
};

inline ProjectedMeasure project_measure(const MergerMeasureSet& m, int type) {
    m.check_type(type);
    std::vector<CubeAtom> atoms;
    double dropped = 0.0;
    for (const auto& a : m.q_measure(type).atoms()) {
        if (a.point[type] > 0.0)
            atoms.push_back({a.weight, {a.point[type]}});
        else
            dropped += a.weight;
    }
    return {m.pair_rate(type), CubeMeasure(1, std::move(atoms)), dropped};
}

// Killing data for the projected type-i coalescent: per-block elimination
// rate sum_{j != i} rho[i -> j], the large-killing measure W_i (pushforward
// of sum_{j != i} Q_{-> j} under s -> s_i, zero-coordinate atoms reported
// separately), and the average removal rate
//   r_i = sum_{j != i} int s_i Q_{-> j}(ds) + sum_{j != i} rho[i -> j].
struct KillMeasure {
    double total_rate;      // r_i
    double per_block_rate;  // sum_{j != i} rho[i -> j]
    CubeMeasure large;      // W_i on (0,1], 1-dimensional
    double dropped_mass;    // mass of W_i at {0}
};

inline KillMeasure kill_measure(const MergerMeasureSet& m, int type) {
    m.check_type(type);
    double per_block = 0.0;
    for (int j = 0; j < m.dim(); ++j)
        if (j != type) per_block += m.colour_change_rate(type, j);
    std::vector<CubeAtom> atoms;
    double dropped = 0.0;
    double integral = 0.0;
    for (int j = 0; j < m.dim(); ++j) {
        if (j == type) continue;
        for (const auto& a : m.q_measure(j).atoms()) {
            integral += a.weight * a.point[type];
            if (a.point[type] > 0.0)
                atoms.push_back({a.weight, {a.point[type]}});
            else
                dropped += a.weight;
        }
    }
    return {integral + per_block, per_block, CubeMeasure(1, std::move(atoms)), dropped};
}

// --- single-type decomposition --------------------------------------------

// A finite measure on [0,1]: possible atom at 0 plus atoms in (0,1].
struct LambdaMeasure {
    double mass_at_zero = 0.0;
    std::vector<std::pair<double, double>> atoms;  // (weight, s), s in (0,1]
};

struct SingleTypePair {
    double rho;
    CubeMeasure q;  // 1-dimensional, not charging 0
};

// Lambda = rho * delta_0 + s^2 Q(ds), i.e. Q(ds) = s^{-2} Lambda(ds) on (0,1].
inline SingleTypePair single_type_decompose(const LambdaMeasure& lambda) {
    if (!(lambda.mass_at_zero >= 0.0))
        throw std::invalid_argument("single_type_decompose: negative mass at zero");
    std::vector<CubeAtom> atoms;
    for (const auto& [w, s] : lambda.atoms) {
        if (!(w >= 0.0)) throw std::invalid_argument("single_type_decompose: negative weight");
        if (!(s > 0.0 && s <= 1.0))
            throw std::invalid_argument("single_type_decompose: atom outside (0,1]");
        atoms.push_back({w / (s * s), {s}});
    }
    return {lambda.mass_at_zero, CubeMeasure(1, std::move(atoms))};
}

inline LambdaMeasure single_type_compose(double rho, const CubeMeasure& q) {
    if (q.dim() != 1) throw std::invalid_argument("single_type_compose: q must be 1-dimensional");
    LambdaMeasure lambda;
    lambda.mass_at_zero = rho;
    for (const auto& a : q.atoms()) lambda.atoms.emplace_back(a.weight * a.point[0] * a.point[0], a.point[0]);
    return lambda;
}

// --- induced local rates of a continuous-state branching process ----------

struct JumpAtom {
    double weight;
    std::vector<double> jump;  // r in R^d, coordinatewise >= 0
};

struct CsbpParams {
    std::vector<double> beta;                 // beta_i >= 0
    std::vector<std::vector<double>> kappa;   // kappa[i][j], off-diagonal >= 0
    std::vector<std::vector<JumpAtom>> nu;    // per type, atomic jump measure
};

// Two index conventions for the induced colour-change rate circulate:
// `feller_display` (default) reads kappa[j][i] x_j / x_i as the rate at
// which a type-j block turns to type i; `transposed` reads it the other
// way, kappa[i][j] x_i / x_j.
enum class KappaConvention { feller_display, transposed };

inline MergerMeasureSet csbp_local_rates(const CsbpParams& p, const std::vector<double>& x,
                                         KappaConvention convention = KappaConvention::feller_display) {
    const int d = static_cast<int>(p.beta.size());
    if (d < 1) throw std::invalid_argument("csbp_local_rates: empty parameter set");
    if (static_cast<int>(p.kappa.size()) != d || static_cast<int>(p.nu.size()) != d ||
        static_cast<int>(x.size()) != d)
        throw std::invalid_argument("csbp_local_rates: dimension mismatch");
    for (double xi : x)
        if (!(xi > 0.0)) throw std::invalid_argument("csbp_local_rates: population must be positive");
    for (int i = 0; i < d; ++i) {
        if (!(p.beta[i] >= 0.0)) throw std::invalid_argument("csbp_local_rates: negative beta");
        for (int j = 0; j < d; ++j)
            if (i != j && !(p.kappa[i][j] >= 0.0))
                throw std::invalid_argument("csbp_local_rates: negative off-diagonal kappa");
    }

    MeasureSetBuilder builder(d);
    for (int i = 0; i < d; ++i) builder.pair_rate(i, p.beta[i] / x[i]);
    for (int j = 0; j < d; ++j) {
        for (int i = 0; i < d; ++i) {
            if (i == j) continue;
            // feller_display: a block of type j turns to type i at rate
            // kappa[j -> i] x_j / x_i; transposed: kappa[i -> j] x_i / x_j.
            const double rate = convention == KappaConvention::feller_display
                                    ? p.kappa[j][i] * x[j] / x[i]
                                    : p.kappa[i][j] * x[i] / x[j];
            builder.colour_change(j, i, rate);
        }
    }
    for (int i = 0; i < d; ++i) {
        for (const auto& a : p.nu[i]) {
            if (static_cast<int>(a.jump.size()) != d)
                throw std::invalid_argument("csbp_local_rates: jump dimension mismatch");
            std::vector<double> s(d);
            for (int j = 0; j < d; ++j) {
                if (!(a.jump[j] >= 0.0))
                    throw std::invalid_argument("csbp_local_rates: negative jump coordinate");
                s[j] = a.jump[j] / (x[j] + a.jump[j]);
            }
            builder.atom(i, a.weight, std::move(s));
        }
    }
    return builder.build();
}

}  // namespace multicoal
