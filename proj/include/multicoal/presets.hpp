#pragma once

// Built-in example configurations.

#include "multicoal/measures.hpp"

namespace multicoal {

// Two types, within-type pairwise mergers and colour changes only.
inline MergerMeasureSet multitype_kingman() {
    MeasureSetBuilder b(2);
    b.pair_rate(0, 1.0).pair_rate(1, 0.5).colour_change(0, 1, 0.5).colour_change(1, 0, 0.25);
    return b.build();
}

// Active (type 1) and dormant (type 2) blocks: the dormant type never
// merges, it only wakes up.
inline MergerMeasureSet seed_bank(double rho_aa = 1.0, double rho_ad = 1.0, double rho_da = 1.0) {
    MeasureSetBuilder b(2);
    b.pair_rate(0, rho_aa).colour_change(0, 1, rho_ad).colour_change(1, 0, rho_da);
    return b.build();
}

// Big mergers happen within types only, with a common one-dimensional
// measure J: the type-i merger measure is J placed on the i-th axis.
inline MergerMeasureSet limic_sturm(int d = 2,
                                    std::vector<std::pair<double, double>> j_atoms = {{0.5, 0.5},
                                                                                      {0.25, 0.8}}) {
    MeasureSetBuilder b(d);
    for (int i = 0; i < d; ++i) {
        for (const auto& [w, u] : j_atoms) {
            std::vector<double> s(d, 0.0);
            s[i] = u;
            b.atom(i, w, std::move(s));
        }
    }
    return b.build();
}

inline CsbpParams csbp_example_params() {
    CsbpParams p;
    p.beta = {1.0, 0.5};
    p.kappa = {{0.0, 0.4}, {0.3, 0.0}};
    p.nu.resize(2);
    p.nu[0].push_back({0.6, {1.0, 1.0}});
    p.nu[1].push_back({0.2, {0.5, 2.0}});
    return p;
}

// Local merger rates of the example branching process at population (2, 1).
inline MergerMeasureSet csbp_local_example() {
    return csbp_local_rates(csbp_example_params(), {2.0, 1.0});
}

}  // namespace multicoal
