#include <doctest.h>

#include <cmath>

#include "multicoal/numerics.hpp"
#include "multicoal/rng.hpp"

using namespace multicoal;

TEST_CASE("integer powers use the 0^0 = 1 convention") {
    CHECK(ipow(0.0, 0) == 1.0);
    CHECK(ipow(0.0, 3) == 0.0);
    CHECK(ipow(2.0, 10) == 1024.0);
    CHECK(ipow(0.5, 1) == 0.5);
    CHECK_THROWS_AS(ipow(2.0, -1), std::invalid_argument);
}

TEST_CASE("pow_one_minus handles the s = 1 boundary") {
    CHECK(pow_one_minus(1.0, 0.0) == 1.0);
    CHECK(pow_one_minus(1.0, 2.5) == 0.0);
    CHECK(pow_one_minus(0.0, 7.0) == 1.0);
    CHECK(pow_one_minus(0.5, 2.0) == doctest::Approx(0.25).epsilon(1e-14));
    CHECK(pow_one_minus(0.3, 4.5) == doctest::Approx(std::pow(0.7, 4.5)).epsilon(1e-14));
}

TEST_CASE("adaptive simpson on smooth integrands") {
    CHECK(adaptive_simpson([](double x) { return x * x; }, 0.0, 1.0) ==
          doctest::Approx(1.0 / 3).epsilon(1e-12));
    CHECK(adaptive_simpson([](double x) { return std::sin(x); }, 0.0, M_PI) ==
          doctest::Approx(2.0).epsilon(1e-11));
    CHECK(adaptive_simpson([](double x) { return std::exp(-x); }, 0.0, 20.0) ==
          doctest::Approx(1.0 - std::exp(-20.0)).epsilon(1e-10));
}

TEST_CASE("golden section finds the minimum of a convex function") {
    const LineMin m =
        golden_min([](double x) { return (x - 2.0) * (x - 2.0) + 1.0; }, 0.0, 5.0, 1e-10);
    CHECK(m.x == doctest::Approx(2.0).epsilon(1e-7));
    CHECK(m.value == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("bisection on a decreasing function") {
    const double root = bisect_decreasing([](double x) { return 1.0 - x * x; }, 0.0, 4.0, 1e-12);
    CHECK(root == doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("rk45 matches closed forms") {
    // scalar exponential decay
    auto decay = [](double, const std::vector<double>& y) { return std::vector<double>{-y[0]}; };
    const auto exp_path = rk45_integrate(decay, {1.0}, 0.0, {0.5, 1.0, 2.0}, 1e-10, 1e-12);
    CHECK(exp_path[0][0] == doctest::Approx(std::exp(-0.5)).epsilon(1e-9));
    CHECK(exp_path[2][0] == doctest::Approx(std::exp(-2.0)).epsilon(1e-9));

    // logistic block-count decay v' = -v(v-1)/2 from v(0) = 10
    auto logistic = [](double, const std::vector<double>& y) {
        return std::vector<double>{-0.5 * y[0] * (y[0] - 1.0)};
    };
    const auto path = rk45_integrate(logistic, {10.0}, 0.0, {0.25, 1.0}, 1e-10, 1e-12);
    auto closed = [](double t) { return 1.0 / (1.0 - 0.9 * std::exp(-0.5 * t)); };
    CHECK(path[0][0] == doctest::Approx(closed(0.25)).epsilon(1e-8));
    CHECK(path[1][0] == doctest::Approx(closed(1.0)).epsilon(1e-8));
}

TEST_CASE("regularized incomplete gamma and chi-square tails") {
    CHECK(gamma_p(2.0, 1.0) + gamma_q(2.0, 1.0) == doctest::Approx(1.0).epsilon(1e-14));
    // classical 95% critical values
    CHECK(chi_square_sf(3.841458820694124, 1) == doctest::Approx(0.05).epsilon(1e-9));
    CHECK(chi_square_sf(11.070497693516351, 5) == doctest::Approx(0.05).epsilon(1e-9));
    CHECK(chi_square_sf(0.0, 3) == 1.0);
    // the chi-square with two degrees of freedom has sf exp(-x/2)
    CHECK(chi_square_sf(4.0, 2) == doctest::Approx(std::exp(-2.0)).epsilon(1e-12));
}

TEST_CASE("philox known-answer vectors") {
    const auto zeros = detail::philox4x32_10({0, 0, 0, 0}, {0, 0});
    CHECK(zeros[0] == 0x6627e8d5u);
    CHECK(zeros[1] == 0xe169c58du);
    CHECK(zeros[2] == 0xbc57ac4cu);
    CHECK(zeros[3] == 0x9b00dbd8u);
    const auto ones = detail::philox4x32_10({0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu},
                                            {0xffffffffu, 0xffffffffu});
    CHECK(ones[0] == 0x408f276du);
    CHECK(ones[1] == 0x41c83b0eu);
    CHECK(ones[2] == 0xa20bc7c6u);
    CHECK(ones[3] == 0x6d5451fdu);
}

TEST_CASE("streams are reproducible and independent") {
    StreamRng a(42, 7), b(42, 7), c(42, 8);
    bool all_equal = true, any_diff = false;
    for (int i = 0; i < 100; ++i) {
        const auto va = a.next_u64();
        all_equal &= va == b.next_u64();
        any_diff |= va != c.next_u64();
    }
    CHECK(all_equal);
    CHECK(any_diff);
}

TEST_CASE("uniform and exponential draws have the right moments") {
    StreamRng rng(1, 0);
    double sum_u = 0.0, sum_e = 0.0;
    const int n = 200'000;
    for (int i = 0; i < n; ++i) {
        const double u = rng.uniform01();
        REQUIRE(u >= 0.0);
        REQUIRE(u < 1.0);
        sum_u += u;
        sum_e += rng.exponential(2.0);
    }
    CHECK(sum_u / n == doctest::Approx(0.5).epsilon(0.005));
    CHECK(sum_e / n == doctest::Approx(0.5).epsilon(0.01));
}

TEST_CASE("categorical sampling respects cumulative weights") {
    StreamRng rng(3, 0);
    const std::vector<double> cum{0.1, 0.1, 0.6};  // weights 0.1, 0, 0.5
    int counts[3] = {0, 0, 0};
    for (int i = 0; i < 60'000; ++i) ++counts[rng.categorical_from_cumulative(cum)];
    CHECK(counts[1] == 0);
    CHECK(static_cast<double>(counts[0]) / 60'000 == doctest::Approx(1.0 / 6).epsilon(0.05));
}
