// Acceptance suite: one line per criterion, exit code = number of failures.
//
//   1 recursion identity on random atomic measure sets
//   2 array representation round trip
//   3 Monte Carlo drift against the total-decrease rate
//   4 coming-down-from-infinity classification
//   5 descent profile closed form
//   6 processing-speed inequality battery
//   7 engine equivalence and projection consistency
//   8 Jensen descent bound
//   9 killed-coalescent coupling bound

#include <chrono>
#include <cmath>
#include <cstdio>
#include <optional>
#include <string>
#include <vector>

#include "multicoal/analysis.hpp"
#include "multicoal/presets.hpp"
#include "multicoal/suites.hpp"

using namespace multicoal;

namespace {

constexpr std::uint64_t kSeed = 20260808;

int failures = 0;

void criterion(int id, const std::string& title, const std::vector<TestReport>& reports,
               double seconds) {
    bool pass = true;
    for (const auto& r : reports) pass &= r.pass;
    if (!pass) ++failures;
    std::printf("[%s] %d. %s (%.1fs)\n", pass ? "PASS" : "FAIL", id, title.c_str(), seconds);
    for (const auto& r : reports) {
        if (!r.pass)
            std::printf("         failed: %s statistic=%.3e threshold=%.3e %s\n", r.name.c_str(),
                        r.statistic, r.threshold, r.details.c_str());
    }
    std::fflush(stdout);
}

template <class F>
std::pair<std::vector<TestReport>, double> timed(F&& f) {
    const auto start = std::chrono::steady_clock::now();
    std::vector<TestReport> reports = f();
    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return {std::move(reports), seconds};
}

TestReport verdict_report(const std::string& name, const MergerMeasureSet& m,
                          CdiVerdict expected_overall) {
    const CdiReport report = classify_cdi(m);
    TestReport r;
    r.name = name;
    r.statistic = report.overall == expected_overall ? 0.0 : 1.0;
    r.threshold = 0.0;
    r.pass = report.overall == expected_overall;
    r.details = std::string("verdict=") + cdi_verdict_name(report.overall) + " expected=" +
                cdi_verdict_name(expected_overall);
    return r;
}

std::vector<TestReport> cdi_criterion() {
    std::vector<TestReport> reports;
    reports.push_back(
        verdict_report("cdi/multitype-kingman", multitype_kingman(), CdiVerdict::comes_down));
    // one type with no pairwise rate and only finite merger mass
    MeasureSetBuilder b(2);
    b.pair_rate(0, 1.0).atom(1, 2.0, {0.25, 0.5});
    reports.push_back(
        verdict_report("cdi/zero-pair-finite-mass", b.build(), CdiVerdict::stays_infinite));
    reports.push_back(verdict_report("cdi/seed-bank", seed_bank(), CdiVerdict::stays_infinite));
    const CdiReport sb = classify_cdi(seed_bank());
    TestReport per_type;
    per_type.name = "cdi/seed-bank-per-type";
    per_type.pass = sb.per_type[0].verdict == CdiVerdict::comes_down &&
                    sb.per_type[1].verdict == CdiVerdict::stays_infinite;
    per_type.statistic = per_type.pass ? 0.0 : 1.0;
    reports.push_back(per_type);
    return reports;
}

std::vector<TestReport> descent_criterion() {
    MeasureSetBuilder b(1);
    b.pair_rate(0, 1.0);
    const MergerMeasureSet m = b.build();
    const std::vector<double> times{0.1, 0.5, 1.0, 2.0};
    const std::vector<double> w = descent_profile(m, times, std::nullopt);
    TestReport r;
    r.name = "descent/kingman-winf";
    r.threshold = 1e-6;
    r.statistic = 0.0;
    std::string detail;
    for (std::size_t i = 0; i < times.size(); ++i) {
        r.statistic = std::max(r.statistic, std::abs(w[i] - 2.0 / times[i]));
        detail += " w(" + std::to_string(times[i]) + ")=" + std::to_string(w[i]);
    }
    r.pass = r.statistic <= r.threshold;
    r.details = detail;
    return {r};
}

}  // namespace

int main() {
    std::printf("multicoal acceptance suite (seed %llu)\n",
                static_cast<unsigned long long>(kSeed));

    auto [r1, t1] = timed([] { return suite_recursion(kSeed, 100, 10); });
    criterion(1, "recursion identity: 100 random atomic sets, all |b| <= 10, residual <= 1e-12",
              r1, t1);

    auto [r2, t2] = timed([] { return suite_arrays(kSeed, 100, 16, 10); });
    criterion(2, "array representation round trip: residual <= 1e-12, rho within 2^-12, "
                 "moments within 1e-10", r2, t2);

    auto [r3, t3] = timed([] { return suite_drift(kSeed, 100'000); });
    criterion(3, "drift: Kingman Psi(4)=6, colour change Psi=0, atom Psi=3, 4 sigma at 1e5",
              r3, t3);

    auto [r4, t4] = timed([] { return cdi_criterion(); });
    criterion(4, "coming down from infinity iff every pairwise rate is positive", r4, t4);

    auto [r5, t5] = timed([] { return descent_criterion(); });
    criterion(5, "descent profile: single-type Kingman w(t) = 2/t within 1e-6", r5, t5);

    auto [r6, t6] = timed([] { return suite_inequalities(kSeed, 1000); });
    criterion(6, "inequalities: sandwich, lower bound, convexity, flow identity within 1e-10",
              r6, t6);

    auto [r7, t7] = timed([] { return suite_consistency(kSeed, 100'000); });
    criterion(7, "engine equivalence and projection consistency: chi-square p > 0.001 at 1e5",
              r7, t7);

    auto [r8, t8] = timed([] { return suite_jensen(kSeed, 100'000); });
    criterion(8, "Jensen bound: mean total blocks <= w(t) + 3 sigma on Kingman d=1,2", r8, t8);

    auto [r9, t9] = timed([] { return suite_coupling(kSeed, 100'000); });
    criterion(9, "coupling bound: killed projected mean >= e^{-r t} reference - 3 sigma", r9, t9);

    std::printf("%d of 9 criteria passed\n", 9 - failures);
    return failures;
}
