#pragma once

// Exact stochastic simulation at finite block counts.
//
// Two engines generate the same law of lumped counts:
//  * the jump chain over count vectors (Gillespie direct method over the
//    enumerated transition classes), and
//  * the atomic-event engine over labelled partitions, where each merger
//    measure atom carries its own clock and blocks elect to participate
//    independently.
// A third engine runs the killed projected coalescent of a single type.
//
// Trajectories record effective events only: an atom ring with no
// participants, or with a single participant already of the target colour,
// advances time but is not an event.

#include <map>
#include <stdexcept>
#include <vector>

#include "multicoal/measures.hpp"
#include "multicoal/partition.hpp"
#include "multicoal/rates.hpp"
#include "multicoal/rng.hpp"

namespace multicoal {

enum class EventKind { colour_change, merger, kill };

inline const char* event_kind_name(EventKind k) {
    switch (k) {
        case EventKind::colour_change: return "colour_change";
        case EventKind::merger: return "merger";
        case EventKind::kill: return "kill";
    }
    return "?";
}

struct Event {
    double time;
    EventKind kind;
    int target;           // type of the resulting block (or killed type)
    BlockCounts k;        // participation per type (kill: victims per type)
    BlockCounts after;    // counts after the event
};

struct Trajectory {
    BlockCounts initial;
    double t_max = 0.0;
    std::vector<Event> events;
    BlockCounts final_state;
    bool absorbed = false;  // total event rate hit zero before t_max

    const BlockCounts& state_at_end() const { return final_state; }
};

namespace detail {

inline void check_event_invariants(const BlockCounts& before, const Event& e) {
    const int drop = before.total() - e.after.total();
    if (drop < 0) throw std::logic_error("trajectory invariant: total block count increased");
    if (e.kind == EventKind::merger && drop != e.k.total() - 1)
        throw std::logic_error("trajectory invariant: merger must drop |k| - 1 blocks");
    if (e.kind == EventKind::colour_change && drop != 0)
        throw std::logic_error("trajectory invariant: colour change must preserve totals");
}

}  // namespace detail

// Cache of transition tables keyed by the count vector; one jump-chain
// ensemble revisits the same states across replicas.
using TableCache = std::map<std::vector<int>, TransitionTable>;

inline const TransitionTable& cached_table(const MergerMeasureSet& m, const BlockCounts& n,
                                           std::size_t cap, TableCache* cache) {
    if (cache == nullptr) {
        thread_local TransitionTable scratch;
        scratch = transition_table(m, n, cap);
        return scratch;
    }
    auto it = cache->find(n.n);
    if (it == cache->end()) it = cache->emplace(n.n, transition_table(m, n, cap)).first;
    return it->second;
}

// Continuous-time jump chain over lumped counts. Stops at t_max or when the
// total class rate is zero.
inline Trajectory simulate_jump_chain(const MergerMeasureSet& m, const BlockCounts& n0,
                                      double t_max, StreamRng& rng,
                                      std::size_t cap = 1'000'000, TableCache* cache = nullptr) {
    if (n0.total() < 1) throw std::invalid_argument("simulate_jump_chain: no initial blocks");
    Trajectory traj;
    traj.initial = n0;
    traj.t_max = t_max;
    BlockCounts n = n0;
    double t = 0.0;
    while (true) {
        const TransitionTable& table = cached_table(m, n, cap, cache);
        if (table.total_rate <= 0.0) {
            traj.absorbed = true;
            break;
        }
        t += rng.exponential(table.total_rate);
        if (t > t_max) break;
        const TransitionClass& cls = table.classes[rng.categorical_from_cumulative(table.cumulative)];
        BlockCounts after = n;
        for (int j = 0; j < n.dim(); ++j) after[j] -= cls.k[j];
        ++after[cls.target];
        Event e{t, cls.k.total() == 1 ? EventKind::colour_change : EventKind::merger, cls.target,
                cls.k, after};
        detail::check_event_invariants(n, e);
        traj.events.push_back(e);
        n = after;
    }
    traj.final_state = n;
    return traj;
}

struct LabelledResult {
    Trajectory trajectory;
    TypedPartition partition;  // state at min(t_max, absorption)
};

// Atomic-event engine on labelled partitions. Requires atomic merger
// measures (always true for this representation).
inline LabelledResult simulate_labelled(const MergerMeasureSet& m, const TypedPartition& p0,
                                        double t_max, StreamRng& rng) {
    const int d = m.dim();
    if (p0.dim() != d) throw std::invalid_argument("simulate_labelled: dimension mismatch");

    std::vector<TypedPartition::Block> blocks = p0.blocks();
    Trajectory traj;
    traj.initial = p0.counts();
    traj.t_max = t_max;

    // flattened atom list: (target, weight, point)
    struct AtomClock {
        int target;
        double weight;
        const std::vector<double>* point;
    };
    std::vector<AtomClock> atom_clocks;
    for (int i = 0; i < d; ++i)
        for (const auto& a : m.q_measure(i).atoms())
            if (a.weight > 0.0) atom_clocks.push_back({i, a.weight, &a.point});

    double t = 0.0;
    std::vector<double> cum;
    std::vector<std::size_t> colour_members;  // scratch
    while (true) {
        BlockCounts counts = BlockCounts::zeros(d);
        for (const auto& b : blocks) ++counts[b.colour];

        cum.clear();
        double total = 0.0;
        // categories: ordered colour pairs (j -> i), then within-type pairs, then atoms
        for (int j = 0; j < d; ++j)
            for (int i = 0; i < d; ++i) {
                if (i == j) continue;
                total += m.colour_change_rate(j, i) * counts[j];
                cum.push_back(total);
            }
        for (int i = 0; i < d; ++i) {
            total += m.pair_rate(i) * 0.5 * counts[i] * (counts[i] - 1);
            cum.push_back(total);
        }
        for (const auto& a : atom_clocks) {
            total += a.weight;
            cum.push_back(total);
        }
        if (total <= 0.0) {
            traj.absorbed = true;
            break;
        }
        t += rng.exponential(total);
        if (t > t_max) break;

        std::size_t idx = rng.categorical_from_cumulative(cum);
        const std::size_t n_pairs = static_cast<std::size_t>(d) * (d - 1);
        const BlockCounts before = counts;
        if (idx < n_pairs) {
            // single-block colour change j -> i
            const int j = static_cast<int>(idx / (d - 1));
            int i = static_cast<int>(idx % (d - 1));
            if (i >= j) ++i;
            colour_members.clear();
            for (std::size_t bi = 0; bi < blocks.size(); ++bi)
                if (blocks[bi].colour == j) colour_members.push_back(bi);
            if (colour_members.empty()) continue;  // zero-rate category, not reachable
            blocks[colour_members[rng.uniform_index(colour_members.size())]].colour = i;
            Event e{t, EventKind::colour_change, i, BlockCounts::unit(d, j), BlockCounts()};
            BlockCounts after = before;
            --after[j];
            ++after[i];
            e.after = after;
            detail::check_event_invariants(before, e);
            traj.events.push_back(std::move(e));
        } else if (idx < n_pairs + static_cast<std::size_t>(d)) {
            // within-type pairwise merger
            const int i = static_cast<int>(idx - n_pairs);
            colour_members.clear();
            for (std::size_t bi = 0; bi < blocks.size(); ++bi)
                if (blocks[bi].colour == i) colour_members.push_back(bi);
            if (colour_members.size() < 2) continue;  // zero-rate category
            std::size_t u = rng.uniform_index(colour_members.size());
            std::size_t v = rng.uniform_index(colour_members.size() - 1);
            if (v >= u) ++v;
            const std::size_t keep = colour_members[std::min(u, v)];
            const std::size_t gone = colour_members[std::max(u, v)];
            auto& dst = blocks[keep].members;
            dst.insert(dst.end(), blocks[gone].members.begin(), blocks[gone].members.end());
            std::sort(dst.begin(), dst.end());
            blocks.erase(blocks.begin() + static_cast<std::ptrdiff_t>(gone));
            Event e{t, EventKind::merger, i, BlockCounts::unit(d, i, 2), BlockCounts()};
            BlockCounts after = before;
            --after[i];
            e.after = after;
            detail::check_event_invariants(before, e);
            traj.events.push_back(std::move(e));
        } else {
            // atom ring: every block of colour j participates with probability s_j
            const AtomClock& atom = atom_clocks[idx - n_pairs - d];
            std::vector<std::size_t> participants;
            for (std::size_t bi = 0; bi < blocks.size(); ++bi)
                if (rng.bernoulli((*atom.point)[blocks[bi].colour])) participants.push_back(bi);
            if (participants.empty()) continue;                                     // no-op
            if (participants.size() == 1 && blocks[participants[0]].colour == atom.target)
                continue;                                                           // no-op
            BlockCounts k = BlockCounts::zeros(d);
            for (std::size_t bi : participants) ++k[blocks[bi].colour];
            auto& dst = blocks[participants[0]];
            for (std::size_t p = participants.size(); p-- > 1;) {
                auto& src = blocks[participants[p]];
                dst.members.insert(dst.members.end(), src.members.begin(), src.members.end());
                blocks.erase(blocks.begin() + static_cast<std::ptrdiff_t>(participants[p]));
            }
            dst.colour = atom.target;
            std::sort(dst.members.begin(), dst.members.end());
            BlockCounts after = before;
            for (int j = 0; j < d; ++j) after[j] -= k[j];
            ++after[atom.target];
            Event e{t, k.total() == 1 ? EventKind::colour_change : EventKind::merger, atom.target,
                    k, after};
            detail::check_event_invariants(before, e);
            traj.events.push_back(std::move(e));
        }
    }

    BlockCounts final_counts = BlockCounts::zeros(d);
    for (const auto& b : blocks) ++final_counts[b.colour];
    traj.final_state = final_counts;
    return {std::move(traj), TypedPartition(d, std::move(blocks))};
}

// Killed projected coalescent for one type: the single-type
// (pair rate, projected measure)-coalescent plus per-block elimination and
// large killing events where each block dies independently with the event's
// parameter. `with_killing = false` gives the plain projected coalescent
// used as the coupling reference.
inline Trajectory simulate_projected_killed(const MergerMeasureSet& m, int type, int n_blocks,
                                            double t_max, StreamRng& rng,
                                            bool with_killing = true) {
    if (n_blocks < 0) throw std::invalid_argument("simulate_projected_killed: negative count");
    const ProjectedMeasure proj = project_measure(m, type);
    const KillMeasure kill = kill_measure(m, type);

    Trajectory traj;
    traj.initial = BlockCounts({n_blocks});
    traj.t_max = t_max;

    int alive = n_blocks;
    double t = 0.0;
    std::vector<double> cum;
    while (alive > 0) {
        cum.clear();
        double total = 0.0;
        total += proj.pair_rate * 0.5 * alive * (alive - 1);
        cum.push_back(total);
        for (const auto& a : proj.qbar.atoms()) {
            total += a.weight;
            cum.push_back(total);
        }
        if (with_killing) {
            total += kill.per_block_rate * alive;
            cum.push_back(total);
            for (const auto& a : kill.large.atoms()) {
                total += a.weight;
                cum.push_back(total);
            }
        }
        if (total <= 0.0) {
            traj.absorbed = true;
            break;
        }
        t += rng.exponential(total);
        if (t > t_max) break;

        const std::size_t idx = rng.categorical_from_cumulative(cum);
        const std::size_t n_qbar = proj.qbar.atoms().size();
        const BlockCounts before({alive});
        if (idx == 0) {
            if (alive < 2) continue;  // zero-rate category
            --alive;
            Event e{t, EventKind::merger, 0, BlockCounts({2}), BlockCounts({alive})};
            detail::check_event_invariants(before, e);
            traj.events.push_back(std::move(e));
        } else if (idx <= n_qbar) {
            const double u = proj.qbar.atoms()[idx - 1].point[0];
            const int participants = rng.binomial(alive, u);
            if (participants < 2) continue;  // no-op (a lone participant keeps its colour)
            alive -= participants - 1;
            Event e{t, EventKind::merger, 0, BlockCounts({participants}), BlockCounts({alive})};
            detail::check_event_invariants(before, e);
            traj.events.push_back(std::move(e));
        } else if (idx == n_qbar + 1) {
            --alive;
            traj.events.push_back({t, EventKind::kill, 0, BlockCounts({1}), BlockCounts({alive})});
        } else {
            const double u = kill.large.atoms()[idx - n_qbar - 2].point[0];
            const int victims = rng.binomial(alive, u);
            if (victims == 0) continue;  // no-op
            alive -= victims;
            traj.events.push_back(
                {t, EventKind::kill, 0, BlockCounts({victims}), BlockCounts({alive})});
        }
    }
    traj.final_state = BlockCounts({alive});
    if (alive == 0) traj.absorbed = true;
    return traj;
}

// --- ensembles -------------------------------------------------------------

struct EnsembleSummary {
    double mean = 0.0;
    double variance = 0.0;
    double std_error = 0.0;
    std::size_t replicas = 0;

    // half width of the normal-approximation 95% confidence interval
    double ci95_half_width() const { return 1.959963984540054 * std_error; }
};

// Replica r draws from stream (seed, r); results do not depend on execution
// order.
template <class F>
EnsembleSummary ensemble_mean(std::size_t replicas, std::uint64_t seed, F&& replica_fn) {
    if (replicas < 1) throw std::invalid_argument("ensemble_mean: need >= 1 replica");
    double sum = 0.0, sum_sq = 0.0;
    for (std::size_t r = 0; r < replicas; ++r) {
        StreamRng rng(seed, r);
        const double v = replica_fn(rng, r);
        sum += v;
        sum_sq += v * v;
    }
    EnsembleSummary s;
    s.replicas = replicas;
    s.mean = sum / static_cast<double>(replicas);
    s.variance = replicas > 1
                     ? std::max(0.0, (sum_sq - sum * sum / static_cast<double>(replicas)) /
                                         static_cast<double>(replicas - 1))
                     : 0.0;
    s.std_error = std::sqrt(s.variance / static_cast<double>(replicas));
    return s;
}

// Empirical law over count vectors.
template <class F>
std::map<std::vector<int>, std::size_t> ensemble_counts(std::size_t replicas, std::uint64_t seed,
                                                        F&& replica_fn) {
    std::map<std::vector<int>, std::size_t> law;
    for (std::size_t r = 0; r < replicas; ++r) {
        StreamRng rng(seed, r);
        ++law[replica_fn(rng, r).n];
    }
    return law;
}

}  // namespace multicoal
