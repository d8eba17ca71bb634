#pragma once

// Statistical and exact checks tying simulator output to the analysis
// functionals: drift against the total-decrease rate, projection
// consistency, the Jensen descent bound, exchangeability, engine
// equivalence and the killed-coalescent coupling bound.
//
// Every check is deterministic given (seed, configuration); reports carry
// the seed and replica count needed to reproduce them.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "multicoal/analysis.hpp"
#include "multicoal/measures.hpp"
#include "multicoal/partition.hpp"
#include "multicoal/rates.hpp"
#include "multicoal/simulate.hpp"
#include "multicoal/stats.hpp"

namespace multicoal {

struct TestReport {
    std::string name;
    double statistic = 0.0;
    double threshold = 0.0;
    bool pass = false;
    std::size_t replicas = 0;
    std::uint64_t seed = 0;
    std::string details;
};

namespace detail {

inline std::uint64_t derived_seed(std::uint64_t seed, std::uint64_t salt) {
    // splitmix64 step keeps derived ensembles on disjoint streams
    std::uint64_t z = seed + salt * 0x9E3779B97F4A7C15ull;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

// counts of a piecewise-constant trajectory at time t
inline BlockCounts counts_at(const Trajectory& traj, double t) {
    BlockCounts state = traj.initial;
    for (const auto& e : traj.events) {
        if (e.time > t) break;
        state = e.after;
    }
    return state;
}

// max over {m >= 0 : |m| <= total} of |Psi(m) - Psi(n)|
inline double psi_range_bound(const MergerMeasureSet& m, const BlockCounts& n) {
    const int total = n.total();
    std::vector<double> xn(n.n.begin(), n.n.end());
    const double psi_n = big_psi(m, xn);
    double worst = 0.0;
    std::vector<int> state(m.dim(), 0);
    while (true) {
        int sum = 0;
        for (int c : state) sum += c;
        if (sum <= total) {
            std::vector<double> x(state.begin(), state.end());
            worst = std::max(worst, std::abs(big_psi(m, x) - psi_n));
        }
        int pos = 0;
        while (pos < m.dim() && state[pos] == total) state[pos++] = 0;
        if (pos == m.dim()) break;
        ++state[pos];
    }
    return worst;
}

}  // namespace detail

// Monte Carlo drift against -Psi(n): the ensemble estimate of
// E[sum_j (N_j(h) - N_j(0))] / h must match within 4 standard errors plus
// the first-order bias bound R(n) h/2 * max |Psi(m) - Psi(n)|.
inline TestReport mc_drift_check(const MergerMeasureSet& m, const BlockCounts& n, double h,
                                 std::size_t replicas, std::uint64_t seed) {
    if (n.total() < 1) throw std::invalid_argument("mc_drift_check: degenerate n");
    const TransitionTable table = transition_table(m, n);
    const double rate = table.total_rate;
    if (h <= 0.0) h = rate > 0.0 ? 0.05 / rate : 0.05;

    const std::vector<double> xn(n.n.begin(), n.n.end());
    const double target = -big_psi(m, xn);
    const double bias_bound = 0.5 * rate * h * detail::psi_range_bound(m, n);

    TableCache cache;
    const EnsembleSummary est = ensemble_mean(replicas, seed, [&](StreamRng& rng, std::size_t) {
        const Trajectory traj = simulate_jump_chain(m, n, h, rng, 1'000'000, &cache);
        return static_cast<double>(traj.final_state.total() - n.total());
    });
    const double drift = est.mean / h;
    const double se = est.std_error / h;

    TestReport report;
    report.name = "drift";
    report.statistic = std::abs(drift - target);
    report.threshold = 4.0 * se + bias_bound;
    report.pass = report.statistic <= report.threshold;
    report.replicas = replicas;
    report.seed = seed;
    std::ostringstream os;
    os << "n=" << n.to_string() << " h=" << h << " drift=" << drift << " target=" << target
       << " se=" << se << " bias_bound=" << bias_bound;
    report.details = os.str();
    return report;
}

// Law of lumped counts from the full labelled simulation projected onto
// `subset`, against the law simulated directly on the subset, at time t.
inline TestReport consistency_check(const MergerMeasureSet& m, const TypedPartition& p0,
                                    const std::vector<GroundElement>& subset, double t,
                                    std::size_t replicas, std::uint64_t seed) {
    if (subset.empty()) throw std::invalid_argument("consistency_check: empty subset");
    const BlockCounts n_sub = p0.project(subset).counts();

    const auto projected_law =
        ensemble_counts(replicas, seed, [&](StreamRng& rng, std::size_t) {
            const LabelledResult full = simulate_labelled(m, p0, t, rng);
            return full.partition.project(subset).counts();
        });
    TableCache cache;
    const auto direct_law = ensemble_counts(
        replicas, detail::derived_seed(seed, 1), [&](StreamRng& rng, std::size_t) {
            return simulate_jump_chain(m, n_sub, t, rng, 1'000'000, &cache).final_state;
        });

    const ChiSquareResult chi = two_sample_chi_square(projected_law, direct_law);
    TestReport report;
    report.name = "consistency";
    report.statistic = chi.p_value;
    report.threshold = 0.001;
    report.pass = chi.p_value > 0.001;
    report.replicas = replicas;
    report.seed = seed;
    std::ostringstream os;
    os << "subset_counts=" << n_sub.to_string() << " t=" << t << " chi2=" << chi.statistic
       << " dof=" << chi.dof << " bins=" << chi.bins << " p=" << chi.p_value;
    report.details = os.str();
    return report;
}

// Jump-chain vs atomic-event engine: laws of lumped counts at time t.
inline TestReport engine_equivalence_check(const MergerMeasureSet& m, const BlockCounts& n0,
                                           double t, std::size_t replicas, std::uint64_t seed) {
    TableCache cache;
    const auto jump_law = ensemble_counts(replicas, seed, [&](StreamRng& rng, std::size_t) {
        return simulate_jump_chain(m, n0, t, rng, 1'000'000, &cache).final_state;
    });
    const TypedPartition p0 = TypedPartition::singletons(n0);
    const auto atomic_law =
        ensemble_counts(replicas, detail::derived_seed(seed, 2), [&](StreamRng& rng, std::size_t) {
            return simulate_labelled(m, p0, t, rng).trajectory.final_state;
        });

    const ChiSquareResult chi = two_sample_chi_square(jump_law, atomic_law);
    TestReport report;
    report.name = "engine_equivalence";
    report.statistic = chi.p_value;
    report.threshold = 0.001;
    report.pass = chi.p_value > 0.001;
    report.replicas = replicas;
    report.seed = seed;
    std::ostringstream os;
    os << "n0=" << n0.to_string() << " t=" << t << " chi2=" << chi.statistic << " dof=" << chi.dof
       << " bins=" << chi.bins << " p=" << chi.p_value;
    report.details = os.str();
    return report;
}

// Ensemble mean of the total block count against the integral-equation
// solution w_{|n0|}(t) (exact kernel), at every grid time.
inline TestReport jensen_bound_check(const MergerMeasureSet& m, const BlockCounts& n0,
                                     const std::vector<double>& times, std::size_t replicas,
                                     std::uint64_t seed) {
    DescentOptions opt;
    opt.kernel = SpeedKernel::exact;
    const std::vector<double> w =
        descent_profile(m, times, static_cast<double>(n0.total()), opt);

    const double t_max = *std::max_element(times.begin(), times.end());
    std::vector<double> sum(times.size(), 0.0), sum_sq(times.size(), 0.0);
    TableCache cache;
    for (std::size_t r = 0; r < replicas; ++r) {
        StreamRng rng(seed, r);
        const Trajectory traj = simulate_jump_chain(m, n0, t_max, rng, 1'000'000, &cache);
        for (std::size_t j = 0; j < times.size(); ++j) {
            const double v = detail::counts_at(traj, times[j]).total();
            sum[j] += v;
            sum_sq[j] += v * v;
        }
    }

    TestReport report;
    report.name = "jensen_bound";
    report.replicas = replicas;
    report.seed = seed;
    report.threshold = 1e-9 * n0.total();
    report.statistic = -std::numeric_limits<double>::infinity();
    std::ostringstream os;
    os << "n0=" << n0.to_string();
    for (std::size_t j = 0; j < times.size(); ++j) {
        const double mean = sum[j] / static_cast<double>(replicas);
        const double var = std::max(
            0.0, (sum_sq[j] - sum[j] * sum[j] / static_cast<double>(replicas)) /
                     static_cast<double>(replicas - 1));
        const double se = std::sqrt(var / static_cast<double>(replicas));
        const double excess = mean - w[j] - 3.0 * se;
        report.statistic = std::max(report.statistic, excess);
        os << " [t=" << times[j] << " mean=" << mean << " w=" << w[j] << " se=" << se << "]";
    }
    report.pass = report.statistic <= report.threshold;
    report.details = os.str();
    return report;
}

// Lumped-count laws started from p0 and from the within-type relabelling of
// p0 must agree. The permutation is given per type; anything that is not a
// per-type bijection is rejected by permute_within_types.
inline TestReport exchangeability_check(const MergerMeasureSet& m, const TypedPartition& p0,
                                        const std::vector<std::vector<int>>& sigma, double t,
                                        std::size_t replicas, std::uint64_t seed) {
    const TypedPartition permuted = p0.permute_within_types(sigma);
    const auto law_a = ensemble_counts(replicas, seed, [&](StreamRng& rng, std::size_t) {
        return simulate_labelled(m, p0, t, rng).trajectory.final_state;
    });
    const auto law_b =
        ensemble_counts(replicas, detail::derived_seed(seed, 3), [&](StreamRng& rng, std::size_t) {
            return simulate_labelled(m, permuted, t, rng).trajectory.final_state;
        });

    const ChiSquareResult chi = two_sample_chi_square(law_a, law_b);
    TestReport report;
    report.name = "exchangeability";
    report.statistic = chi.p_value;
    report.threshold = 0.001;
    report.pass = chi.p_value > 0.001;
    report.replicas = replicas;
    report.seed = seed;
    std::ostringstream os;
    os << "t=" << t << " chi2=" << chi.statistic << " dof=" << chi.dof << " p=" << chi.p_value;
    report.details = os.str();
    return report;
}

// A ground-set relabelling must stay within each type; cross-type maps are
// invalid input for the exchangeability check.
inline std::vector<std::vector<int>> permutation_from_pairs(
    const BlockCounts& sizes, const std::vector<std::pair<GroundElement, GroundElement>>& pairs) {
    std::vector<std::vector<int>> sigma(sizes.dim());
    for (int i = 0; i < sizes.dim(); ++i) {
        sigma[i].resize(sizes[i]);
        for (int p = 0; p < sizes[i]; ++p) sigma[i][p] = p;
    }
    for (const auto& [from, to] : pairs) {
        if (from.type != to.type)
            throw std::invalid_argument("permutation mixes types");
        if (from.type < 0 || from.type >= sizes.dim() || from.index < 0 ||
            from.index >= sizes[from.type] || to.index < 0 || to.index >= sizes[to.type])
            throw std::invalid_argument("permutation_from_pairs: element out of range");
        sigma[from.type][from.index] = to.index;
    }
    return sigma;
}

// Killed projected coalescent against e^{-r_i t} times the unkilled
// reference: E[#alive at t] >= e^{-r_i t} E[#kappa(t)] - 3 sigma.
inline TestReport coupling_bound_check(const MergerMeasureSet& m, int type, int n_blocks,
                                       double t, std::size_t replicas, std::uint64_t seed) {
    const KillMeasure kill = kill_measure(m, type);
    const double damping = std::exp(-kill.total_rate * t);

    const EnsembleSummary killed = ensemble_mean(replicas, seed, [&](StreamRng& rng, std::size_t) {
        return static_cast<double>(
            simulate_projected_killed(m, type, n_blocks, t, rng, true).final_state.total());
    });
    const EnsembleSummary reference =
        ensemble_mean(replicas, detail::derived_seed(seed, 4), [&](StreamRng& rng, std::size_t) {
            return static_cast<double>(
                simulate_projected_killed(m, type, n_blocks, t, rng, false).final_state.total());
        });

    const double bound = damping * reference.mean;
    const double sigma = std::sqrt(killed.std_error * killed.std_error +
                                   damping * damping * reference.std_error * reference.std_error);

    TestReport report;
    report.name = "coupling_bound";
    report.statistic = bound - killed.mean;  // positive excess would violate the bound
    report.threshold = 3.0 * sigma;
    report.pass = report.statistic <= report.threshold;
    report.replicas = replicas;
    report.seed = seed;
    std::ostringstream os;
    os << "type=" << type + 1 << " n=" << n_blocks << " t=" << t << " r_i=" << kill.total_rate
       << " killed_mean=" << killed.mean << " bound=" << bound << " sigma=" << sigma;
    report.details = os.str();
    return report;
}

}  // namespace multicoal
