#pragma once

// Shared numerical kernels: integer powers with the 0^0 = 1 convention,
// adaptive Simpson quadrature, golden-section line search, bisection,
// a Dormand-Prince 5(4) adaptive ODE stepper and the regularized
// incomplete gamma function (for chi-square p-values).

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <stdexcept>
#include <vector>

namespace multicoal {

// x^n for integer n >= 0, with 0^0 = 1.
inline double ipow(double x, long n) {
    if (n < 0) throw std::invalid_argument("ipow: negative exponent");
    double result = 1.0;
    double base = x;
    while (n > 0) {
        if (n & 1) result *= base;
        base *= base;
        n >>= 1;
    }
    return result;
}

// (1 - s)^x for real x >= 0 and s in [0,1]; s = 1 contributes 0 for x > 0
// and 1 for x = 0.
inline double pow_one_minus(double s, double x) {
    if (x == 0.0) return 1.0;
    if (s >= 1.0) return 0.0;
    if (s <= 0.0) return 1.0;
    return std::exp(x * std::log1p(-s));
}

namespace detail {

inline double simpson_segment(double a, double fa, double b, double fb, double fm) {
    return (b - a) / 6.0 * (fa + 4.0 * fm + fb);
}

template <class F>
double adaptive_simpson_rec(F& f, double a, double fa, double b, double fb, double m, double fm,
                            double whole, double tol, int depth) {
    const double lm = 0.5 * (a + m);
    const double rm = 0.5 * (m + b);
    const double flm = f(lm);
    const double frm = f(rm);
    const double left = simpson_segment(a, fa, m, fm, flm);
    const double right = simpson_segment(m, fm, b, fb, frm);
    const double delta = left + right - whole;
    if (depth <= 0 || std::abs(delta) <= 15.0 * tol) return left + right + delta / 15.0;
    return adaptive_simpson_rec(f, a, fa, m, fm, lm, flm, left, 0.5 * tol, depth - 1) +
           adaptive_simpson_rec(f, m, fm, b, fb, rm, frm, right, 0.5 * tol, depth - 1);
}

}  // namespace detail

template <class F>
double adaptive_simpson(F f, double a, double b, double tol = 1e-12, int max_depth = 48) {
    if (a == b) return 0.0;
    const double m = 0.5 * (a + b);
    const double fa = f(a), fb = f(b), fm = f(m);
    const double whole = detail::simpson_segment(a, fa, b, fb, fm);
    return detail::adaptive_simpson_rec(f, a, fa, b, fb, m, fm, whole, tol, max_depth);
}

struct LineMin {
    double x;
    double value;
};

// Golden-section minimization of a convex function on [a, b].
template <class F>
LineMin golden_min(F f, double a, double b, double xtol) {
    constexpr double inv_phi = 0.6180339887498949;
    double x1 = b - inv_phi * (b - a);
    double x2 = a + inv_phi * (b - a);
    double f1 = f(x1), f2 = f(x2);
    while (b - a > xtol) {
        if (f1 <= f2) {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - inv_phi * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + inv_phi * (b - a);
            f2 = f(x2);
        }
    }
    const double xm = 0.5 * (a + b);
    return {xm, f(xm)};
}

// Solve g(x) = 0 for g non-increasing on [lo, hi] with g(lo) >= 0 >= g(hi).
template <class F>
double bisect_decreasing(F g, double lo, double hi, double xtol, int max_iter = 200) {
    for (int it = 0; it < max_iter && hi - lo > xtol; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (g(mid) >= 0.0)
            lo = mid;
        else
            hi = mid;
    }
    return 0.5 * (lo + hi);
}

// Dormand-Prince 5(4) adaptive stepper. Integrates y' = f(t, y) from t0
// through the sorted grid `times`, recording the state at each grid time.
template <class F>
std::vector<std::vector<double>> rk45_integrate(F f, std::vector<double> y, double t0,
                                                const std::vector<double>& times,
                                                double rtol = 1e-8, double atol = 1e-10) {
    static const double c[7] = {0.0, 1.0 / 5, 3.0 / 10, 4.0 / 5, 8.0 / 9, 1.0, 1.0};
    static const double a2[] = {1.0 / 5};
    static const double a3[] = {3.0 / 40, 9.0 / 40};
    static const double a4[] = {44.0 / 45, -56.0 / 15, 32.0 / 9};
    static const double a5[] = {19372.0 / 6561, -25360.0 / 2187, 64448.0 / 6561, -212.0 / 729};
    static const double a6[] = {9017.0 / 3168, -355.0 / 33, 46732.0 / 5247, 49.0 / 176,
                                -5103.0 / 18656};
    static const double a7[] = {35.0 / 384, 0.0, 500.0 / 1113, 125.0 / 192, -2187.0 / 6784,
                                11.0 / 84};
    static const double b4[] = {5179.0 / 57600, 0.0,           7571.0 / 16695, 393.0 / 640,
                                -92097.0 / 339200, 187.0 / 2100, 1.0 / 40};
    const double* as[6] = {a2, a3, a4, a5, a6, a7};

    const std::size_t n = y.size();
    std::vector<std::vector<double>> out;
    out.reserve(times.size());

    double t = t0;
    std::size_t next = 0;
    while (next < times.size() && times[next] <= t) out.push_back(y), ++next;
    if (next >= times.size()) return out;

    std::vector<std::vector<double>> k(7, std::vector<double>(n));
    std::vector<double> ytmp(n), y5(n), y4(n);
    double h = std::max(1e-8, (times.back() - t0) * 1e-4);

    while (next < times.size()) {
        const double t_target = times[next];
        if (t + h > t_target) h = t_target - t;
        if (h <= std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(t)) * 4.0)
            throw std::runtime_error("rk45: step size underflow");

        k[0] = f(t, y);
        bool rejected = false;
        for (int stage = 1; stage < 7; ++stage) {
            for (std::size_t i = 0; i < n; ++i) {
                double acc = 0.0;
                for (int j = 0; j < stage; ++j) acc += as[stage - 1][j] * k[j][i];
                ytmp[i] = y[i] + h * acc;
            }
            k[stage] = f(t + c[stage] * h, ytmp);
        }
        double err = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double acc5 = 0.0, acc4 = 0.0;
            for (int j = 0; j < 6; ++j) acc5 += a7[j] * k[j][i];
            for (int j = 0; j < 7; ++j) acc4 += b4[j] * k[j][i];
            y5[i] = y[i] + h * acc5;
            y4[i] = y[i] + h * acc4;
            const double sc = atol + rtol * std::max(std::abs(y[i]), std::abs(y5[i]));
            const double e = (y5[i] - y4[i]) / sc;
            err += e * e;
        }
        err = std::sqrt(err / static_cast<double>(n));
        if (err <= 1.0) {
            t += h;
            y = y5;
            while (next < times.size() && times[next] <= t + 1e-14 * std::max(1.0, std::abs(t))) {
                out.push_back(y);
                ++next;
            }
        } else {
            rejected = true;
        }
        const double factor = 0.9 * std::pow(err > 0.0 ? 1.0 / err : 1e4, 0.2);
        h *= std::clamp(factor, rejected ? 0.1 : 0.2, 5.0);
    }
    return out;
}

// --- regularized incomplete gamma, for chi-square tail probabilities ------

inline double log_gamma(double x) { return std::lgamma(x); }

namespace detail {

inline double gamma_p_series(double a, double x) {
    double term = 1.0 / a;
    double sum = term;
    for (int n = 1; n < 1000; ++n) {
        term *= x / (a + n);
        sum += term;
        if (std::abs(term) < std::abs(sum) * 1e-16) break;
    }
    return sum * std::exp(-x + a * std::log(x) - log_gamma(a));
}

inline double gamma_q_cf(double a, double x) {
    // Lentz continued fraction for the upper tail.
    const double tiny = 1e-300;
    double b = x + 1.0 - a;
    double c = 1.0 / tiny;
    double d = 1.0 / b;
    double h = d;
    for (int i = 1; i < 1000; ++i) {
        const double an = -static_cast<double>(i) * (static_cast<double>(i) - a);
        b += 2.0;
        d = an * d + b;
        if (std::abs(d) < tiny) d = tiny;
        c = b + an / c;
        if (std::abs(c) < tiny) c = tiny;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::abs(del - 1.0) < 1e-16) break;
    }
    return h * std::exp(-x + a * std::log(x) - log_gamma(a));
}

}  // namespace detail

inline double gamma_p(double a, double x) {
    if (x < 0.0 || a <= 0.0) throw std::invalid_argument("gamma_p: bad arguments");
    if (x == 0.0) return 0.0;
    return (x < a + 1.0) ? detail::gamma_p_series(a, x) : 1.0 - detail::gamma_q_cf(a, x);
}

inline double gamma_q(double a, double x) {
    if (x < 0.0 || a <= 0.0) throw std::invalid_argument("gamma_q: bad arguments");
    if (x == 0.0) return 1.0;
    return (x < a + 1.0) ? 1.0 - detail::gamma_p_series(a, x) : detail::gamma_q_cf(a, x);
}

// P(X > stat) for X ~ chi-square with `dof` degrees of freedom.
inline double chi_square_sf(double stat, double dof) {
    if (dof <= 0.0) throw std::invalid_argument("chi_square_sf: dof must be positive");
    if (stat <= 0.0) return 1.0;
    return gamma_q(0.5 * dof, 0.5 * stat);
}

}  // namespace multicoal
