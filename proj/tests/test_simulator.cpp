#include <doctest.h>

#include <cmath>
#include <set>

#include "multicoal/presets.hpp"
#include "multicoal/simulate.hpp"
#include "multicoal/stats.hpp"
#include "multicoal/suites.hpp"

using namespace multicoal;

namespace {

// Independent reference for the single-type pairwise coalescent: integrate
// the master equation of the block-counting death chain with fixed-step RK4.
double kingman_expected_blocks(int n0, double rho, double t) {
    std::vector<double> p(n0 + 1, 0.0);
    p[n0] = 1.0;
    auto rate = [&](int k) { return 0.5 * rho * k * (k - 1); };
    auto deriv = [&](const std::vector<double>& q) {
        std::vector<double> dq(n0 + 1, 0.0);
        for (int k = 1; k <= n0; ++k) {
            dq[k] -= rate(k) * q[k];
            if (k + 1 <= n0) dq[k] += rate(k + 1) * q[k + 1];
        }
        return dq;
    };
    const int steps = 20000;
    const double h = t / steps;
    for (int s = 0; s < steps; ++s) {
        const auto k1 = deriv(p);
        std::vector<double> tmp(n0 + 1);
        for (int i = 0; i <= n0; ++i) tmp[i] = p[i] + 0.5 * h * k1[i];
        const auto k2 = deriv(tmp);
        for (int i = 0; i <= n0; ++i) tmp[i] = p[i] + 0.5 * h * k2[i];
        const auto k3 = deriv(tmp);
        for (int i = 0; i <= n0; ++i) tmp[i] = p[i] + h * k3[i];
        const auto k4 = deriv(tmp);
        for (int i = 0; i <= n0; ++i) p[i] += h / 6.0 * (k1[i] + 2 * k2[i] + 2 * k3[i] + k4[i]);
    }
    double mean = 0.0;
    for (int k = 1; k <= n0; ++k) mean += k * p[k];
    return mean;
}

}  // namespace

TEST_CASE("identical streams reproduce identical trajectories") {
    const MergerMeasureSet m = monte_carlo_configs()[2].measure;
    const BlockCounts n0({3, 2});
    StreamRng r1(99, 5), r2(99, 5);
    const Trajectory a = simulate_jump_chain(m, n0, 2.0, r1);
    const Trajectory b = simulate_jump_chain(m, n0, 2.0, r2);
    REQUIRE(a.events.size() == b.events.size());
    for (std::size_t i = 0; i < a.events.size(); ++i) {
        CHECK(a.events[i].time == b.events[i].time);
        CHECK(a.events[i].k == b.events[i].k);
        CHECK(a.events[i].target == b.events[i].target);
    }
    StreamRng r3(99, 5), r4(99, 5);
    const TypedPartition p0 = TypedPartition::singletons(n0);
    const LabelledResult la = simulate_labelled(m, p0, 2.0, r3);
    const LabelledResult lb = simulate_labelled(m, p0, 2.0, r4);
    CHECK(la.trajectory.events.size() == lb.trajectory.events.size());
    CHECK(la.trajectory.final_state == lb.trajectory.final_state);
}

TEST_CASE("two pairwise blocks coalesce at an exponential time of the pair rate") {
    MeasureSetBuilder b(1);
    b.pair_rate(0, 1.0);
    const MergerMeasureSet m = b.build();
    const EnsembleSummary s = ensemble_mean(100'000, 7, [&](StreamRng& rng, std::size_t) {
        const Trajectory traj = simulate_jump_chain(m, BlockCounts({2}), 100.0, rng);
        REQUIRE(traj.events.size() == 1);
        return traj.events[0].time;
    });
    CHECK(std::abs(s.mean - 1.0) <= 0.01);
}

TEST_CASE("an isolated block changes colour at its exponential clock") {
    MeasureSetBuilder b(2);
    b.colour_change(1, 0, 1.0);
    const MergerMeasureSet m = b.build();
    const EnsembleSummary s = ensemble_mean(100'000, 8, [&](StreamRng& rng, std::size_t) {
        const Trajectory traj = simulate_jump_chain(m, BlockCounts({0, 1}), 100.0, rng);
        REQUIRE(traj.events.size() == 1);
        REQUIRE(traj.events[0].kind == EventKind::colour_change);
        REQUIRE(traj.final_state == BlockCounts({1, 0}));
        return traj.events[0].time;
    });
    CHECK(std::abs(s.mean - 1.0) <= 0.01);
}

TEST_CASE("dormant blocks never merge directly") {
    const MergerMeasureSet m = seed_bank();
    for (std::size_t r = 0; r < 2000; ++r) {
        StreamRng rng(9, r);
        const Trajectory traj = simulate_jump_chain(m, BlockCounts({3, 3}), 3.0, rng);
        for (const auto& e : traj.events) {
            const bool dormant_pair = e.k == BlockCounts({0, 2});
            CHECK_FALSE(dormant_pair);
        }
    }
}

TEST_CASE("a full-participation atom collapses everything in one ring") {
    MeasureSetBuilder b(2);
    b.atom(0, 1.0, {1.0, 1.0});
    const MergerMeasureSet m = b.build();
    const TypedPartition p0 = TypedPartition::singletons(BlockCounts({3, 2}));
    const EnsembleSummary s = ensemble_mean(50'000, 10, [&](StreamRng& rng, std::size_t) {
        const LabelledResult res = simulate_labelled(m, p0, 100.0, rng);
        REQUIRE(res.trajectory.events.size() == 1);
        REQUIRE(res.trajectory.final_state == BlockCounts({1, 0}));
        return res.trajectory.events[0].time;
    });
    CHECK(std::abs(s.mean - 1.0) <= 0.015);
}

TEST_CASE("pairwise-only dynamics reduce to independent per-colour coalescents") {
    MeasureSetBuilder b(2);
    b.pair_rate(0, 1.0).pair_rate(1, 2.0);
    const MergerMeasureSet m = b.build();
    const TypedPartition p0 = TypedPartition::singletons(BlockCounts({4, 3}));
    for (std::size_t r = 0; r < 1000; ++r) {
        StreamRng rng(19, r);
        const LabelledResult res = simulate_labelled(m, p0, 5.0, rng);
        for (const auto& e : res.trajectory.events) {
            CHECK(e.kind == EventKind::merger);
            CHECK(e.k == BlockCounts::unit(2, e.target, 2));
        }
        // no block ever holds elements of mixed original type
        for (const auto& block : res.partition.blocks()) {
            for (const auto& member : block.members) CHECK(member.type == block.colour);
        }
    }
}

TEST_CASE("block counts never increase and mergers drop |k| - 1") {
    const MergerMeasureSet m = monte_carlo_configs()[2].measure;
    for (std::size_t r = 0; r < 500; ++r) {
        StreamRng rng(11, r);
        const LabelledResult res =
            simulate_labelled(m, TypedPartition::singletons(BlockCounts({3, 3})), 2.0, rng);
        int total = 6;
        for (const auto& e : res.trajectory.events) {
            CHECK(e.after.total() <= total);
            if (e.kind == EventKind::merger) CHECK(total - e.after.total() == e.k.total() - 1);
            if (e.kind == EventKind::colour_change) CHECK(e.after.total() == total);
            total = e.after.total();
        }
    }
}

TEST_CASE("lumped laws of the two engines agree on a quick config") {
    MeasureSetBuilder b(1);
    b.pair_rate(0, 0.5).atom(0, 1.0, {0.5});
    const MergerMeasureSet m = b.build();
    const BlockCounts n0({5});
    TableCache cache;
    const auto jump = ensemble_counts(20'000, 12, [&](StreamRng& rng, std::size_t) {
        return simulate_jump_chain(m, n0, 1.0, rng, 1'000'000, &cache).final_state;
    });
    const auto atomic = ensemble_counts(20'000, 13, [&](StreamRng& rng, std::size_t) {
        return simulate_labelled(m, TypedPartition::singletons(n0), 1.0, rng).trajectory.final_state;
    });
    CHECK(two_sample_chi_square(jump, atomic).p_value > 0.001);
}

TEST_CASE("engines agree on a three-type configuration") {
    MeasureSetBuilder b(3);
    b.pair_rate(0, 0.8)
        .colour_change(0, 2, 0.3)
        .colour_change(2, 1, 0.5)
        .atom(1, 0.6, {0.4, 0.7, 0.2})
        .atom(2, 0.3, {0.0, 0.5, 0.9});
    const MergerMeasureSet m = b.build();
    const BlockCounts n0({2, 2, 1});
    TableCache cache;
    const auto jump = ensemble_counts(30'000, 61, [&](StreamRng& rng, std::size_t) {
        return simulate_jump_chain(m, n0, 0.8, rng, 1'000'000, &cache).final_state;
    });
    const auto atomic = ensemble_counts(30'000, 62, [&](StreamRng& rng, std::size_t) {
        return simulate_labelled(m, TypedPartition::singletons(n0), 0.8, rng)
            .trajectory.final_state;
    });
    const ChiSquareResult chi = two_sample_chi_square(jump, atomic);
    INFO("chi2=", chi.statistic, " dof=", chi.dof, " p=", chi.p_value);
    CHECK(chi.p_value > 0.001);
}

TEST_CASE("partition projection: identity, single block, tower property") {
    const TypedPartition p(2, {{0, {{0, 0}, {0, 1}}}, {1, {{1, 0}}}, {0, {{0, 2}}}});
    const auto full = p.project(p.ground_set());
    CHECK(full.block_count() == p.block_count());
    CHECK(full.counts() == p.counts());

    const auto single = p.project({{0, 0}});
    REQUIRE(single.block_count() == 1);
    CHECK(single.blocks()[0].colour == 0);
    REQUIRE(single.blocks()[0].members.size() == 1);

    const std::vector<GroundElement> mid{{0, 0}, {0, 2}, {1, 0}};
    const std::vector<GroundElement> inner{{0, 0}, {1, 0}};
    const auto via = p.project(mid).project(inner);
    const auto direct = p.project(inner);
    CHECK(via.counts() == direct.counts());
    CHECK(via.block_count() == direct.block_count());

    CHECK_THROWS_AS(p.project({}), std::invalid_argument);
}

TEST_CASE("killed projected coalescent: structure") {
    // no cross terms: a plain single-type coalescent, no kill events
    MeasureSetBuilder iso(2);
    iso.pair_rate(0, 1.0).atom(0, 0.5, {0.5, 0.0});
    const MergerMeasureSet m_iso = iso.build();
    for (std::size_t r = 0; r < 300; ++r) {
        StreamRng rng(14, r);
        const Trajectory traj = simulate_projected_killed(m_iso, 0, 6, 2.0, rng, true);
        for (const auto& e : traj.events) CHECK(e.kind != EventKind::kill);
    }

    // seed bank: pairwise mergers plus single-block eliminations only
    const MergerMeasureSet sb = seed_bank();
    bool saw_kill = false;
    for (std::size_t r = 0; r < 300; ++r) {
        StreamRng rng(15, r);
        const Trajectory traj = simulate_projected_killed(sb, 0, 6, 2.0, rng, true);
        for (const auto& e : traj.events) {
            if (e.kind == EventKind::kill) {
                saw_kill = true;
                CHECK(e.k == BlockCounts({1}));  // no large killing in the seed bank
            } else {
                CHECK(e.k == BlockCounts({2}));  // pairwise merger
            }
        }
    }
    CHECK(saw_kill);

    // the reference process ignores killing entirely
    for (std::size_t r = 0; r < 100; ++r) {
        StreamRng rng(16, r);
        const Trajectory traj = simulate_projected_killed(sb, 0, 6, 2.0, rng, false);
        for (const auto& e : traj.events) CHECK(e.kind == EventKind::merger);
    }
}

namespace {

// Independent reference for the killed projected coalescent: the alive
// count is a Markov chain on {0..n0}; integrate its master equation with
// fixed-step RK4. Transitions from state a:
//   pairwise merger            rate rho C(a,2),            a -> a-1
//   projected atom (w, u)      rate w P(Bin(a,u) = k), k>=2, a -> a-k+1
//   per-block elimination      rate kill_rate * a,          a -> a-1
//   large killing atom (w, u)  rate w P(Bin(a,u) = k), k>=1, a -> a-k
double killed_master_mean(const multicoal::MergerMeasureSet& m, int type, int n0, double t) {
    using multicoal::detail::binom;
    const multicoal::ProjectedMeasure proj = multicoal::project_measure(m, type);
    const multicoal::KillMeasure kill = multicoal::kill_measure(m, type);
    auto bin_pmf = [](int n, int k, double u) {
        return binom(n, k) * multicoal::ipow(u, k) * multicoal::ipow(1.0 - u, n - k);
    };
    std::vector<std::vector<double>> gen(n0 + 1, std::vector<double>(n0 + 1, 0.0));
    for (int a = 0; a <= n0; ++a) {
        auto add = [&](int to, double rate) {
            gen[a][to] += rate;
            gen[a][a] -= rate;
        };
        if (a >= 2) add(a - 1, proj.pair_rate * 0.5 * a * (a - 1));
        for (const auto& atom : proj.qbar.atoms())
            for (int k = 2; k <= a; ++k)
                add(a - k + 1, atom.weight * bin_pmf(a, k, atom.point[0]));
        if (a >= 1) add(a - 1, kill.per_block_rate * a);
        for (const auto& atom : kill.large.atoms())
            for (int k = 1; k <= a; ++k) add(a - k, atom.weight * bin_pmf(a, k, atom.point[0]));
    }
    std::vector<double> p(n0 + 1, 0.0);
    p[n0] = 1.0;
    auto deriv = [&](const std::vector<double>& q) {
        std::vector<double> dq(n0 + 1, 0.0);
        for (int a = 0; a <= n0; ++a)
            for (int b = 0; b <= n0; ++b) dq[b] += q[a] * gen[a][b];
        return dq;
    };
    const int steps = 20000;
    const double h = t / steps;
    for (int s = 0; s < steps; ++s) {
        const auto k1 = deriv(p);
        std::vector<double> tmp(n0 + 1);
        for (int i = 0; i <= n0; ++i) tmp[i] = p[i] + 0.5 * h * k1[i];
        const auto k2 = deriv(tmp);
        for (int i = 0; i <= n0; ++i) tmp[i] = p[i] + 0.5 * h * k2[i];
        const auto k3 = deriv(tmp);
        for (int i = 0; i <= n0; ++i) tmp[i] = p[i] + h * k3[i];
        const auto k4 = deriv(tmp);
        for (int i = 0; i <= n0; ++i) p[i] += h / 6.0 * (k1[i] + 2 * k2[i] + 2 * k3[i] + k4[i]);
    }
    double mean = 0.0;
    for (int a = 1; a <= n0; ++a) mean += a * p[a];
    return mean;
}

}  // namespace

TEST_CASE("killed projected engine matches its master equation") {
    // seed bank, active type: pure death chain (mergers plus eliminations)
    {
        const MergerMeasureSet sb = seed_bank();
        const double reference = killed_master_mean(sb, 0, 8, 0.5);
        const EnsembleSummary mc = ensemble_mean(100'000, 63, [&](StreamRng& rng, std::size_t) {
            return static_cast<double>(
                simulate_projected_killed(sb, 0, 8, 0.5, rng, true).final_state.total());
        });
        CHECK(std::abs(mc.mean - reference) <= 4.0 * mc.std_error);
    }
    // projected atoms and large killing events in one configuration
    {
        MeasureSetBuilder b(2);
        b.pair_rate(0, 1.0)
            .colour_change(0, 1, 0.7)
            .atom(0, 0.5, {0.6, 0.3})
            .atom(1, 0.4, {0.5, 0.8});
        const MergerMeasureSet m = b.build();
        const double reference = killed_master_mean(m, 0, 8, 0.6);
        const EnsembleSummary mc = ensemble_mean(100'000, 64, [&](StreamRng& rng, std::size_t) {
            return static_cast<double>(
                simulate_projected_killed(m, 0, 8, 0.6, rng, true).final_state.total());
        });
        CHECK(std::abs(mc.mean - reference) <= 4.0 * mc.std_error);
    }
}

TEST_CASE("ensemble mean matches the master-equation reference") {
    MeasureSetBuilder b(1);
    b.pair_rate(0, 1.0);
    const MergerMeasureSet m = b.build();
    TableCache cache;
    const EnsembleSummary s = ensemble_mean(100'000, 17, [&](StreamRng& rng, std::size_t) {
        return static_cast<double>(
            simulate_jump_chain(m, BlockCounts({10}), 1.0, rng, 1'000'000, &cache)
                .final_state.total());
    });
    const double reference = kingman_expected_blocks(10, 1.0, 1.0);
    CHECK(std::abs(s.mean - reference) <= 3.0 * s.std_error);

    // replica determinism: rerunning the ensemble reproduces the summary
    const EnsembleSummary again = ensemble_mean(1000, 17, [&](StreamRng& rng, std::size_t) {
        return static_cast<double>(
            simulate_jump_chain(m, BlockCounts({10}), 1.0, rng, 1'000'000, &cache)
                .final_state.total());
    });
    const EnsembleSummary again2 = ensemble_mean(1000, 17, [&](StreamRng& rng, std::size_t) {
        return static_cast<double>(
            simulate_jump_chain(m, BlockCounts({10}), 1.0, rng, 1'000'000, &cache)
                .final_state.total());
    });
    CHECK(again.mean == again2.mean);
    CHECK(again.variance == again2.variance);
}

TEST_CASE("jump chain stops at absorption") {
    MeasureSetBuilder b(1);
    b.pair_rate(0, 5.0);
    StreamRng rng(18, 0);
    const Trajectory traj = simulate_jump_chain(b.build(), BlockCounts({4}), 1e9, rng);
    CHECK(traj.absorbed);
    CHECK(traj.final_state == BlockCounts({1}));
    CHECK_THROWS_AS(simulate_jump_chain(b.build(), BlockCounts({0}), 1.0, rng),
                    std::invalid_argument);
}
