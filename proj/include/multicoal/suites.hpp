#pragma once

// Canonical verification batteries and the random instance generators they
// fuzz with. The CLI `verify` subcommand and the acceptance runner both
// drive these.

#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "multicoal/analysis.hpp"
#include "multicoal/arrays.hpp"
#include "multicoal/presets.hpp"
#include "multicoal/verify.hpp"

namespace multicoal {

// --- random instances --------------------------------------------------------

struct RandomMeasureOptions {
    int d_min = 1;
    int d_max = 3;
    int max_atoms = 3;
    double max_weight = 1.5;
    double max_rate = 2.0;
};

inline MergerMeasureSet random_measure_set(StreamRng& rng, const RandomMeasureOptions& opt = {}) {
    const int d = opt.d_min + static_cast<int>(rng.uniform_index(
                                  static_cast<std::size_t>(opt.d_max - opt.d_min + 1)));
    MeasureSetBuilder builder(d);
    for (int i = 0; i < d; ++i) {
        if (rng.bernoulli(0.7)) builder.pair_rate(i, opt.max_rate * rng.uniform01());
        for (int j = 0; j < d; ++j)
            if (j != i && rng.bernoulli(0.5))
                builder.colour_change(j, i, opt.max_rate * rng.uniform01());
    }
    for (int i = 0; i < d; ++i) {
        const std::size_t n_atoms = rng.uniform_index(static_cast<std::size_t>(opt.max_atoms + 1));
        for (std::size_t a = 0; a < n_atoms; ++a) {
            std::vector<double> s(d);
            bool has_mass = false;
            for (int j = 0; j < d; ++j) {
                s[j] = rng.bernoulli(0.25) ? 0.0 : rng.uniform01();
                has_mass |= s[j] > 0.0;
            }
            if (!has_mass) s[static_cast<int>(rng.uniform_index(d))] = 0.5 + 0.5 * rng.uniform01();
            builder.atom(i, opt.max_weight * rng.uniform01(), std::move(s));
        }
    }
    return builder.build();
}

// coordinates in {0} union [1, 25]: the regime where the total-decrease
// functional dominates the per-type speeds pointwise
inline std::vector<double> random_count_point(StreamRng& rng, int d) {
    std::vector<double> x(d);
    for (int i = 0; i < d; ++i) x[i] = rng.bernoulli(0.15) ? 0.0 : 1.0 + 24.0 * rng.uniform01();
    return x;
}

struct RandomRepresentation {
    ArrayDomain domain;
    std::map<std::vector<int>, double> rho;
    CubeMeasure j;
};

// Atom coordinates are kept in [0.55, 1] so the k = x column limit resolves
// the point masses to well under 2^-12 at a truncation of 16.
inline RandomRepresentation random_representation(StreamRng& rng, int d, int b_max = 16) {
    std::vector<int> ell(d);
    for (int i = 0; i < d; ++i) ell[i] = static_cast<int>(rng.uniform_index(3));
    ArrayDomain domain(d, ell, b_max);
    std::map<std::vector<int>, double> rho;
    for (const auto& x : domain.minimal_elements()) rho[x] = 2.0 * rng.uniform01();
    const std::size_t n_atoms = 1 + rng.uniform_index(3);
    std::vector<CubeAtom> atoms;
    for (std::size_t a = 0; a < n_atoms; ++a) {
        std::vector<double> s(d);
        for (int i = 0; i < d; ++i) s[i] = 0.55 + 0.45 * rng.uniform01();
        atoms.push_back({0.1 + 0.9 * rng.uniform01(), std::move(s)});
    }
    return {std::move(domain), std::move(rho), CubeMeasure(d, std::move(atoms))};
}

// --- suites ------------------------------------------------------------------

// Recursion identity on random atomic measure sets: every valid (b, k, i, j)
// with |b| <= b_total has relative residual within 1e-12.
inline std::vector<TestReport> suite_recursion(std::uint64_t seed, int n_sets = 100,
                                               int b_total = 10,
                                               std::optional<MergerMeasureSet> fixed = {}) {
    double worst = 0.0;
    std::string worst_at;
    long checked = 0;
    const int actual_sets = fixed.has_value() ? 1 : n_sets;
    for (int instance = 0; instance < actual_sets; ++instance) {
        StreamRng rng(seed, static_cast<std::uint64_t>(instance));
        const MergerMeasureSet m = fixed.has_value() ? *fixed : random_measure_set(rng);
        const int d = m.dim();
        std::vector<int> b(d, 0);
        while (true) {
            int total = 0;
            for (int c : b) total += c;
            if (total >= 1 && total <= b_total) {
                BlockCounts bc{std::vector<int>(b.begin(), b.end())};
                std::vector<int> k(d, 0);
                while (true) {
                    BlockCounts kc{std::vector<int>(k.begin(), k.end())};
                    if (!kc.is_zero()) {
                        for (int i = 0; i < d; ++i) {
                            if (kc.is_unit(i)) continue;
                            for (int j = 0; j < d; ++j) {
                                const double rel =
                                    std::abs(recursion_residual_relative(m, bc, kc, i, j));
                                ++checked;
                                if (rel > worst) {
                                    worst = rel;
                                    std::ostringstream os;
                                    os << "instance=" << instance << " b=" << bc.to_string()
                                       << " k=" << kc.to_string() << " i=" << i + 1
                                       << " j=" << j + 1;
                                    worst_at = os.str();
                                }
                            }
                        }
                    }
                    int pos = 0;
                    while (pos < d && k[pos] == b[pos]) k[pos++] = 0;
                    if (pos == d) break;
                    ++k[pos];
                }
            }
            int pos = 0;
            while (pos < d && b[pos] == b_total) b[pos++] = 0;
            if (pos == d) break;
            ++b[pos];
        }
    }
    TestReport report;
    report.name = "recursion_identity";
    report.statistic = worst;
    report.threshold = 1e-12;
    report.pass = worst <= 1e-12;
    report.replicas = static_cast<std::size_t>(checked);
    report.seed = seed;
    report.details = "worst at " + worst_at;
    return {report};
}

// Array representation round trip: recursion residual, recovered point
// masses, recovered moments.
inline std::vector<TestReport> suite_arrays(std::uint64_t seed, int n_instances = 100,
                                            int b_max = 16, int moment_order = 10) {
    double worst_res = 0.0, worst_rho = 0.0, worst_moment = 0.0, worst_moment_minimal = 0.0;
    for (int instance = 0; instance < n_instances; ++instance) {
        StreamRng rng(seed, 1000 + static_cast<std::uint64_t>(instance));
        const int d = 1 + static_cast<int>(rng.uniform_index(3));
        const RandomRepresentation rep = random_representation(rng, d, b_max);
        const RateArray array = array_from_representation(rep.domain, rep.rho, rep.j);
        const RecursionCheck check = check_recursion_array(array);
        worst_res = std::max(worst_res, check.max_rel);
        const RecoveryReport recovery = recover_representation(array, check, moment_order);
        for (const auto& [x, est] : recovery.rho)
            worst_rho = std::max(worst_rho, std::abs(est.value - rep.rho.at(x)));
        const auto minimal = rep.domain.minimal_elements();
        for (const auto& [mi, value] : recovery.power_moments) {
            double truth = 0.0;
            for (const auto& atom : rep.j.atoms()) {
                double prod = atom.weight;
                for (int c = 0; c < d; ++c) prod *= ipow(atom.point[c], mi[c]);
                truth += prod;
            }
            bool at_minimal = false;
            for (const auto& x : minimal) at_minimal |= x == mi;
            if (at_minimal)
                worst_moment_minimal = std::max(worst_moment_minimal, std::abs(value - truth));
            else
                worst_moment = std::max(worst_moment, std::abs(value - truth));
        }
    }
    const double rho_tol = std::pow(2.0, -12);
    std::vector<TestReport> reports(3);
    reports[0] = {"array_recursion", worst_res, 1e-12, worst_res <= 1e-12,
                  static_cast<std::size_t>(n_instances), seed, ""};
    reports[1] = {"array_rho_recovery", worst_rho, rho_tol, worst_rho <= rho_tol,
                  static_cast<std::size_t>(n_instances), seed, ""};
    // moments at the minimal elements are confounded with rho at finite
    // truncation and inherit its tolerance
    const bool moments_ok = worst_moment <= 1e-10 && worst_moment_minimal <= rho_tol;
    std::ostringstream os;
    os << "max separable=" << worst_moment << " max at minimal elements=" << worst_moment_minimal;
    reports[2] = {"array_moment_recovery", worst_moment, 1e-10, moments_ok,
                  static_cast<std::size_t>(n_instances), seed, os.str()};
    return reports;
}

// The processing-speed inequalities and the flow identity, fuzzed over
// random (measure, point) pairs.
inline std::vector<TestReport> suite_inequalities(std::uint64_t seed, int n_pairs = 1000,
                                                  std::optional<MergerMeasureSet> fixed = {}) {
    double sandwich_low = 0.0;    // psi_tilde - psi            <= 0
    double sandwich_high = 0.0;   // psi - 2 psi_tilde at q >= 2 <= 0
    double one_lower = 0.0;       // sum psi_tilde - Psi        <= 0
    double psi_convex = 0.0;      // midpoint excess
    double omega_convex = 0.0;
    double flow_identity = 0.0;   // |Psi + sum Phi|
    for (int p = 0; p < n_pairs; ++p) {
        StreamRng rng(seed, 2000 + static_cast<std::uint64_t>(p));
        const MergerMeasureSet m = fixed.has_value() ? *fixed : random_measure_set(rng);
        const int d = m.dim();
        const int type = static_cast<int>(rng.uniform_index(d));

        const double q_low = 30.0 * rng.uniform01();
        sandwich_low = std::max(sandwich_low, psi_tilde(m, type, q_low) - psi(m, type, q_low));
        const double q_high = 2.0 + 28.0 * rng.uniform01();
        sandwich_high =
            std::max(sandwich_high, psi(m, type, q_high) - 2.0 * psi_tilde(m, type, q_high));

        const std::vector<double> x = random_count_point(rng, d);
        double tilde_sum = 0.0;
        for (int i = 0; i < d; ++i) tilde_sum += psi_tilde(m, i, x[i]);
        one_lower = std::max(one_lower, tilde_sum - big_psi(m, x));

        std::vector<double> y(d), mid(d);
        for (int i = 0; i < d; ++i) {
            y[i] = 25.0 * rng.uniform01();
            mid[i] = 0.5 * (x[i] + y[i]);
        }
        psi_convex = std::max(psi_convex, big_psi(m, mid) - 0.5 * (big_psi(m, x) + big_psi(m, y)));

        const double xa = 40.0 * rng.uniform01();
        const double xb = 40.0 * rng.uniform01();
        omega_convex = std::max(omega_convex, omega(m, 0.5 * (xa + xb)) -
                                                  0.5 * (omega(m, xa) + omega(m, xb)));

        double phi_sum = 0.0;
        for (double c : phi_flow(m, x)) phi_sum += c;
        flow_identity = std::max(flow_identity, std::abs(big_psi(m, x) + phi_sum));
    }
    const auto make = [&](const std::string& name, double stat) {
        return TestReport{name, stat, 1e-10, stat <= 1e-10, static_cast<std::size_t>(n_pairs),
                          seed, ""};
    };
    return {make("sandwich_psi_tilde_le_psi", sandwich_low),
            make("sandwich_two_psi_tilde_ge_psi", sandwich_high),
            make("psi_tilde_sum_lower_bound", one_lower),
            make("big_psi_convexity", psi_convex),
            make("omega_convexity", omega_convex),
            make("flow_identity", flow_identity)};
}

// --- canonical configurations for the Monte Carlo suites ----------------------

struct NamedConfig {
    std::string name;
    MergerMeasureSet measure;
    BlockCounts n0;
    std::vector<GroundElement> subset;
};

inline std::vector<NamedConfig> monte_carlo_configs() {
    std::vector<NamedConfig> configs;
    {
        MeasureSetBuilder b(1);
        b.pair_rate(0, 0.5).atom(0, 1.0, {0.5});
        configs.push_back({"single-type-atom", b.build(), BlockCounts({5}),
                           {{0, 0}, {0, 1}, {0, 2}}});
    }
    configs.push_back({"seed-bank", seed_bank(), BlockCounts({3, 2}),
                       {{0, 0}, {0, 1}, {0, 2}, {1, 0}}});
    {
        MeasureSetBuilder b(2);
        b.pair_rate(0, 1.0)
            .colour_change(0, 1, 0.3)
            .colour_change(1, 0, 0.7)
            .atom(0, 0.8, {0.5, 0.25})
            .atom(1, 0.4, {0.1, 0.9});
        configs.push_back({"two-type-mixed", b.build(), BlockCounts({2, 2}),
                           {{0, 0}, {1, 0}, {1, 1}}});
    }
    return configs;
}

inline std::vector<TestReport> suite_drift(std::uint64_t seed, std::size_t replicas = 100'000) {
    std::vector<TestReport> reports;
    {
        MeasureSetBuilder b(1);
        b.pair_rate(0, 1.0);
        TestReport r = mc_drift_check(b.build(), BlockCounts({4}), 0.0, replicas,
                                      detail::derived_seed(seed, 10));
        r.name = "drift/kingman";
        reports.push_back(std::move(r));
    }
    {
        MeasureSetBuilder b(2);
        b.colour_change(1, 0, 1.0);
        TestReport r = mc_drift_check(b.build(), BlockCounts({2, 2}), 0.0, replicas,
                                      detail::derived_seed(seed, 11));
        r.name = "drift/colour-change";
        reports.push_back(std::move(r));
    }
    {
        MeasureSetBuilder b(2);
        b.atom(0, 1.0, {1.0, 1.0});
        TestReport r = mc_drift_check(b.build(), BlockCounts({2, 2}), 0.0, replicas,
                                      detail::derived_seed(seed, 12));
        r.name = "drift/full-merger-atom";
        reports.push_back(std::move(r));
    }
    return reports;
}

inline std::vector<TestReport> suite_consistency(std::uint64_t seed,
                                                 std::size_t replicas = 100'000) {
    std::vector<TestReport> reports;
    int salt = 20;
    for (const auto& config : monte_carlo_configs()) {
        TestReport eng = engine_equivalence_check(config.measure, config.n0, 1.0, replicas,
                                                  detail::derived_seed(seed, salt++));
        eng.name = "engines/" + config.name;
        reports.push_back(std::move(eng));
        TestReport proj =
            consistency_check(config.measure, TypedPartition::singletons(config.n0), config.subset,
                              1.0, replicas, detail::derived_seed(seed, salt++));
        proj.name = "projection/" + config.name;
        reports.push_back(std::move(proj));
    }
    return reports;
}

inline std::vector<TestReport> suite_jensen(std::uint64_t seed, std::size_t replicas = 100'000) {
    const std::vector<double> times{0.25, 1.0};
    std::vector<TestReport> reports;
    int salt = 30;
    for (int n : {10, 20}) {
        MeasureSetBuilder b(1);
        b.pair_rate(0, 1.0);
        TestReport r = jensen_bound_check(b.build(), BlockCounts({n}), times, replicas,
                                          detail::derived_seed(seed, salt++));
        r.name = "jensen/kingman-d1-n" + std::to_string(n);
        reports.push_back(std::move(r));
    }
    for (int n : {10, 20}) {
        MeasureSetBuilder b(2);
        b.pair_rate(0, 1.0).pair_rate(1, 1.0);
        TestReport r = jensen_bound_check(b.build(), BlockCounts({n / 2, n / 2}), times, replicas,
                                          detail::derived_seed(seed, salt++));
        r.name = "jensen/kingman-d2-n" + std::to_string(n);
        reports.push_back(std::move(r));
    }
    return reports;
}

inline std::vector<TestReport> suite_exchange(std::uint64_t seed, std::size_t replicas = 50'000) {
    std::vector<TestReport> reports;
    {
        // one doubleton of the first type, swap the two singleton labels
        const MergerMeasureSet m = monte_carlo_configs()[2].measure;
        std::vector<TypedPartition::Block> blocks = {
            {0, {{0, 0}, {0, 1}}}, {0, {{0, 2}}}, {0, {{0, 3}}}, {1, {{1, 0}}}};
        TypedPartition p0(2, blocks);
        TestReport r = exchangeability_check(m, p0, {{0, 1, 3, 2}, {0}}, 1.0, replicas,
                                             detail::derived_seed(seed, 40));
        r.name = "exchange/swap-singletons";
        reports.push_back(std::move(r));
    }
    {
        // swap a doubleton member with a singleton
        const MergerMeasureSet m = seed_bank();
        std::vector<TypedPartition::Block> blocks = {
            {0, {{0, 0}, {0, 1}}}, {0, {{0, 2}}}, {1, {{1, 0}}}};
        TypedPartition p0(2, blocks);
        TestReport r = exchangeability_check(m, p0, {{0, 2, 1}, {0}}, 1.0, replicas,
                                             detail::derived_seed(seed, 41));
        r.name = "exchange/move-doubleton";
        reports.push_back(std::move(r));
    }
    return reports;
}

inline std::vector<TestReport> suite_coupling(std::uint64_t seed, std::size_t replicas = 100'000) {
    TestReport r = coupling_bound_check(seed_bank(), 0, 10, 0.5, replicas,
                                        detail::derived_seed(seed, 50));
    r.name = "coupling/seed-bank-active";
    return {r};
}

}  // namespace multicoal
