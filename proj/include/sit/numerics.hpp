#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

// Special functions and distribution functions (normal and Student's t)
// used by every analytic formula in the library. All functions are pure
// and safe to call concurrently.

namespace sit {

// A real number constrained to [0, 1]. Construction validates the range;
// reads convert implicitly to double.
class Probability {
public:
    explicit Probability(double value) : value_(value) {
        if (!(value >= 0.0 && value <= 1.0)) {
            throw std::domain_error("probability must lie in [0, 1], got " +
                                    std::to_string(value));
        }
    }

    double value() const noexcept { return value_; }
    operator double() const noexcept { return value_; }

private:
    double value_;
};

// Positive real degrees of freedom. The Welch-Satterthwaite combination
// produces non-integer values, so this is not restricted to integers.
class DegreesOfFreedom {
public:
    explicit DegreesOfFreedom(double value) : value_(value) {
        if (!(value > 0.0) || !std::isfinite(value)) {
            throw std::domain_error("degrees of freedom must be positive, got " +
                                    std::to_string(value));
        }
    }

    double value() const noexcept { return value_; }
    operator double() const noexcept { return value_; }

private:
    double value_;
};

namespace detail {

// Lanczos approximation, g = 7, 9 coefficients. Relative error is a few
// ulps over the positive axis.
inline double lanczos_log_gamma(double x) {
    static constexpr double coeffs[] = {
        0.99999999999980993,    676.5203681218851,     -1259.1392167224028,
        771.32342877765313,     -176.61502916214059,   12.507343278686905,
        -0.13857109526572012,   9.9843695780195716e-6, 1.5056327351493116e-7,
    };
    constexpr double half_log_two_pi = 0.91893853320467274178;

    double sum = coeffs[0];
    for (int i = 1; i < 9; ++i) {
        sum += coeffs[i] / (x - 1.0 + i);
    }
    const double t = x + 6.5;  // x + g - 0.5
    return half_log_two_pi + (x - 0.5) * std::log(t) - t + std::log(sum);
}

// Continued fraction for the regularized incomplete beta (modified Lentz).
// Converges for x < (a + 1) / (a + b + 2); the caller picks the branch.
inline double beta_continued_fraction(double a, double b, double x) {
    constexpr double tiny = 1e-300;
    constexpr double eps = 1e-16;
    constexpr int max_iterations = 5000;

    const double qab = a + b;
    const double qap = a + 1.0;
    const double qam = a - 1.0;

    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::fabs(d) < tiny) d = tiny;
    d = 1.0 / d;
    double h = d;

    for (int m = 1; m <= max_iterations; ++m) {
        const int m2 = 2 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < tiny) d = tiny;
        c = 1.0 + aa / c;
        if (std::fabs(c) < tiny) c = tiny;
        d = 1.0 / d;
        h *= d * c;

        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < tiny) d = tiny;
        c = 1.0 + aa / c;
        if (std::fabs(c) < tiny) c = tiny;
        d = 1.0 / d;
        const double delta = d * c;
        h *= delta;
        if (std::fabs(delta - 1.0) < eps) return h;
    }
    throw std::runtime_error("incomplete beta continued fraction failed to converge");
}

}  // namespace detail

// ln Gamma(x) for x > 0.
inline double log_gamma(double x);

namespace detail {

// ln Gamma(x + delta) - ln Gamma(x). The direct difference cancels badly
// once both values are large, so for large x this uses the Stirling
// series rearranged so every term stays O(delta * log x).
inline double log_gamma_ratio(double x, double delta) {
    if (x < 15.0) return log_gamma(x + delta) - log_gamma(x);
    auto stirling_tail = [](double z) {
        const double inv2 = 1.0 / (z * z);
        return ((inv2 / 1260.0 - 1.0 / 360.0) * inv2 + 1.0 / 12.0) / z;
    };
    return (x - 0.5) * std::log1p(delta / x) + delta * std::log(x + delta) - delta +
           stirling_tail(x + delta) - stirling_tail(x);
}

// Core of I_x(a, b) taking x and its complement as separately computed
// values, so callers with an exact expression for 1 - x (the t CDF) do
// not lose precision to the subtraction when x is close to 1.
inline double incomplete_beta_pair(double a, double b, double x, double xc) {
    if (x <= 0.0) return 0.0;
    if (xc <= 0.0) return 1.0;

    const double hi = std::max(a, b);
    const double lo = std::min(a, b);
    const double log_beta = log_gamma(lo) - log_gamma_ratio(hi, lo);
    const double log_front = -log_beta + a * std::log(x) + b * std::log(xc);
    const double front = std::exp(log_front);

    double result;
    if (x < (a + 1.0) / (a + b + 2.0)) {
        result = front * beta_continued_fraction(a, b, x) / a;
    } else {
        result = 1.0 - front * beta_continued_fraction(b, a, xc) / b;
    }
    return std::clamp(result, 0.0, 1.0);
}

}  // namespace detail

inline double log_gamma(double x) {
    if (!(x > 0.0)) {
        throw std::domain_error("log_gamma requires x > 0, got " + std::to_string(x));
    }
    if (x < 0.5) {
        // Reflection keeps the Lanczos sum away from its poles.
        constexpr double log_pi = 1.1447298858494001741;
        return log_pi - std::log(std::sin(M_PI * x)) - detail::lanczos_log_gamma(1.0 - x);
    }
    return detail::lanczos_log_gamma(x);
}

// Regularized incomplete beta I_x(a, b), monotone nondecreasing in x.
inline Probability regularized_incomplete_beta(double a, double b, double x) {
    if (!(a > 0.0) || !(b > 0.0)) {
        throw std::domain_error("regularized_incomplete_beta requires a, b > 0");
    }
    if (!(x >= 0.0 && x <= 1.0)) {
        throw std::domain_error("regularized_incomplete_beta requires x in [0, 1], got " +
                                std::to_string(x));
    }
    return Probability(detail::incomplete_beta_pair(a, b, x, 1.0 - x));
}

// Standard normal CDF.
inline Probability normal_cdf(double z) {
    return Probability(std::clamp(0.5 * std::erfc(-z * M_SQRT1_2), 0.0, 1.0));
}

// Standard normal density.
inline double normal_pdf(double z) {
    constexpr double inv_sqrt_two_pi = 0.39894228040143267794;
    return inv_sqrt_two_pi * std::exp(-0.5 * z * z);
}

// Standard normal quantile. Acklam's rational approximation refined with
// one Halley step against the erfc-based CDF; accurate to a few ulps.
inline double normal_quantile(double p) {
    if (!(p > 0.0 && p < 1.0)) {
        throw std::domain_error("normal_quantile requires p in (0, 1), got " +
                                std::to_string(p));
    }

    static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                                   -2.759285104469687e+02, 1.383577518672690e+02,
                                   -3.066479806614716e+01, 2.506628277459239e+00};
    static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                                   -1.556989798598866e+02, 6.680131188771972e+01,
                                   -1.328068155288572e+01};
    static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                                   -2.400758277161838e+00, -2.549732539343734e+00,
                                   4.374664141464968e+00,  2.938163982698783e+00};
    static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                                   2.445134137142996e+00, 3.754408661907416e+00};
    constexpr double p_low = 0.02425;

    double x;
    if (p < p_low) {
        const double q = std::sqrt(-2.0 * std::log(p));
        x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    } else if (p <= 1.0 - p_low) {
        const double q = p - 0.5;
        const double r = q * q;
        x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
            (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
    } else {
        const double q = std::sqrt(-2.0 * std::log1p(-p));
        x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }

    // Halley refinement.
    const double e = normal_cdf(x).value() - p;
    const double u = e / normal_pdf(x);
    x -= u / (1.0 + 0.5 * x * u);
    return x;
}

// Student's t density.
inline double t_pdf(double t, DegreesOfFreedom nu) {
    const double v = nu.value();
    const double log_norm =
        log_gamma(0.5 * (v + 1.0)) - log_gamma(0.5 * v) - 0.5 * std::log(v * M_PI);
    return std::exp(log_norm - 0.5 * (v + 1.0) * std::log1p(t * t / v));
}

// Student's t CDF via the incomplete beta function.
inline Probability t_cdf(double t, DegreesOfFreedom nu) {
    if (t == 0.0) return Probability(0.5);
    const double v = nu.value();
    const double t2 = t * t;
    const double x = v / (v + t2);
    const double xc = t2 / (v + t2);
    // P(T >= |t|)
    const double tail = 0.5 * detail::incomplete_beta_pair(0.5 * v, 0.5, x, xc);
    return Probability(t > 0.0 ? 1.0 - tail : tail);
}

// Student's t quantile: bracketed Newton iteration on t_cdf. Absolute
// tolerance 1e-9 on the abscissa (more than downstream planning needs).
inline double t_quantile(double p, DegreesOfFreedom nu) {
    if (!(p > 0.0 && p < 1.0)) {
        throw std::domain_error("t_quantile requires p in (0, 1), got " +
                                std::to_string(p));
    }
    if (p == 0.5) return 0.0;
    if (p < 0.5) return -t_quantile(1.0 - p, nu);

    const double v = nu.value();

    // Initial guess: normal quantile plus the leading Cornish-Fisher term.
    const double z = normal_quantile(p);
    double guess = z + (z * z * z + z) / (4.0 * v);
    if (!(guess > 0.0)) guess = z;

    double lo = 0.0;
    double hi = std::max(guess, 1.0);
    for (int i = 0; i < 2000 && t_cdf(hi, nu).value() < p; ++i) {
        lo = hi;
        hi *= 2.0;
    }

    double x = std::clamp(guess, lo, hi);
    for (int i = 0; i < 200; ++i) {
        const double f = t_cdf(x, nu).value() - p;
        if (f > 0.0) {
            hi = x;
        } else {
            lo = x;
        }
        const double density = t_pdf(x, nu);
        double step = density > 0.0 ? f / density : 0.0;
        double next = x - step;
        if (!(next > lo && next < hi)) {
            next = 0.5 * (lo + hi);  // bisection fallback
        }
        if (std::fabs(next - x) <= 1e-12 * std::max(1.0, std::fabs(next)) ||
            hi - lo <= 1e-12 * std::max(1.0, hi)) {
            return next;
        }
        x = next;
    }
    return x;
}

}  // namespace sit
