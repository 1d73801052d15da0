#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "sit/core.hpp"
#include "sit/numerics.hpp"

// Analytic power, minimum detectable effect and minimum sample size for
// the stacked design. Follows the plug-in convention: the pooled standard
// error is treated as fixed at its planning value, so power comes from a
// shifted central t rather than a noncentral one. Monte Carlo agreement
// at realistic sample sizes is part of the acceptance suite.

namespace sit {

// One group in a planning calculation: its variance, its (fixed) size and
// an optional weight. A weight k enters exactly as if the variance were
// k^2 * s^2 throughout.
struct PlanningGroup {
    double variance = 0.0;
    std::int64_t n = 0;
    double weight = 1.0;
};

namespace detail {

struct PlanningPool {
    double pooled_psi = 0.0;   // sum of w^2 s^2 / n
    double nu = 0.0;           // Welch-Satterthwaite dof (0 when degenerate)
};

inline PlanningPool pool_planning_groups(std::span<const PlanningGroup> groups) {
    if (groups.empty()) {
        throw std::invalid_argument("planning needs at least one group");
    }
    double pooled = 0.0;
    double denom = 0.0;
    for (const PlanningGroup& g : groups) {
        if (g.n < 2) {
            throw std::invalid_argument("planning group sizes must be >= 2");
        }
        if (!(g.variance >= 0.0)) {
            throw std::invalid_argument("planning group variances must be >= 0");
        }
        const double psi = g.weight * g.weight * g.variance / static_cast<double>(g.n);
        pooled += psi;
        denom += psi * psi / static_cast<double>(g.n - 1);
    }
    if (!(pooled > 0.0)) return {0.0, 0.0};
    return {pooled, pooled * pooled / denom};
}

inline double effective_alpha(const TestConfig& config) {
    return config.sided() == Sidedness::two_sided ? 0.5 * config.alpha().value()
                                                  : config.alpha().value();
}

}  // namespace detail

// Probability of detecting a true difference theta with the given groups.
inline Probability power(double theta, const TestConfig& config,
                         std::span<const PlanningGroup> groups) {
    if (!(theta > 0.0)) {
        throw std::invalid_argument("power requires theta > 0");
    }
    const auto pool = detail::pool_planning_groups(groups);
    if (pool.pooled_psi == 0.0) {
        return Probability(1.0);  // no noise; any positive effect is certain
    }
    const DegreesOfFreedom nu(pool.nu);
    const double critical = t_quantile(1.0 - detail::effective_alpha(config), nu);
    const double shifted = critical - theta / std::sqrt(pool.pooled_psi);
    return Probability(1.0 - t_cdf(shifted, nu).value());
}

// Smallest true difference detectable at the configured power target.
inline double min_detectable_effect(const TestConfig& config,
                                    std::span<const PlanningGroup> groups) {
    const auto pool = detail::pool_planning_groups(groups);
    if (pool.pooled_psi == 0.0) return 0.0;
    const DegreesOfFreedom nu(pool.nu);
    const double quantile_gap = t_quantile(1.0 - detail::effective_alpha(config), nu) -
                                t_quantile(1.0 - config.min_power().value(), nu);
    return quantile_gap * std::sqrt(pool.pooled_psi);
}

struct RatioPlan {
    std::int64_t n_control = 0;
    std::int64_t n_exposed = 0;
};

namespace detail {

inline std::int64_t exposed_size(std::int64_t n_control, double ratio) {
    const double scaled = std::ceil(ratio * static_cast<double>(n_control));
    return std::max<std::int64_t>(2, static_cast<std::int64_t>(scaled));
}

inline std::vector<PlanningGroup> plan_at(std::span<const double> control_variances,
                                          std::span<const double> exposed_variances,
                                          std::int64_t n_control, double ratio) {
    std::vector<PlanningGroup> groups;
    groups.reserve(control_variances.size() + exposed_variances.size());
    for (double s2 : control_variances) groups.push_back({s2, n_control, 1.0});
    const std::int64_t n_exp = exposed_size(n_control, ratio);
    for (double s2 : exposed_variances) groups.push_back({s2, n_exp, 1.0});
    return groups;
}

}  // namespace detail

// Minimum control-group size (and the implied exposed-group size) when the
// exposed groups are k2/k1 times larger. The quantile gap depends on the
// degrees of freedom, which depend on the answer, so the closed form seeds
// a fixed-point iteration; the result is then nudged so the returned n is
// the smallest whose power meets the target.
inline RatioPlan min_sample_ratio(double theta, const TestConfig& config,
                                  std::span<const double> control_variances,
                                  std::span<const double> exposed_variances,
                                  double k1, double k2) {
    if (!(theta > 0.0)) {
        throw std::invalid_argument("sample size calculation requires theta > 0");
    }
    if (!(k1 > 0.0) || !(k2 > 0.0)) {
        throw std::invalid_argument("ratio coefficients must be positive");
    }
    if (control_variances.empty() && exposed_variances.empty()) {
        throw std::invalid_argument("sample size calculation needs at least one group");
    }
    for (double s2 : control_variances) {
        if (!(s2 >= 0.0)) throw std::invalid_argument("variances must be >= 0");
    }
    for (double s2 : exposed_variances) {
        if (!(s2 >= 0.0)) throw std::invalid_argument("variances must be >= 0");
    }

    const double ratio = k2 / k1;
    double bound_factor = 0.0;
    for (double s2 : control_variances) bound_factor += s2;
    for (double s2 : exposed_variances) bound_factor += s2 * (k1 / k2);

    if (bound_factor == 0.0) {
        return {2, detail::exposed_size(2, ratio)};
    }

    auto power_at = [&](std::int64_t n) {
        const auto groups =
            detail::plan_at(control_variances, exposed_variances, n, ratio);
        return sit::power(theta, config, groups).value();
    };

    // Closed-form seed with normal quantiles.
    const double z_gap = normal_quantile(1.0 - detail::effective_alpha(config)) -
                         normal_quantile(1.0 - config.min_power().value());
    const double seed = (z_gap / theta) * (z_gap / theta) * bound_factor;
    std::int64_t n = std::max<std::int64_t>(2, static_cast<std::int64_t>(std::ceil(seed)));

    // Fixed-point refinement with t quantiles at the current size.
    for (int iter = 0; iter < 10; ++iter) {
        const auto groups = detail::plan_at(control_variances, exposed_variances, n, ratio);
        const auto pool = detail::pool_planning_groups(groups);
        const DegreesOfFreedom nu(pool.nu);
        const double t_gap = t_quantile(1.0 - detail::effective_alpha(config), nu) -
                             t_quantile(1.0 - config.min_power().value(), nu);
        const double refined = (t_gap / theta) * (t_gap / theta) * bound_factor;
        const std::int64_t next =
            std::max<std::int64_t>(2, static_cast<std::int64_t>(std::ceil(refined)));
        if (next == n) break;
        n = next;
    }

    // Smallest n whose power meets the target.
    const double target = config.min_power().value();
    while (power_at(n) < target) ++n;
    while (n > 2 && power_at(n - 1) >= target) --n;
    return {n, detail::exposed_size(n, ratio)};
}

// Minimum per-group size when every group has the same size.
inline std::int64_t min_sample_equal(double theta, const TestConfig& config,
                                     std::span<const double> variances) {
    return min_sample_ratio(theta, config, variances, {}, 1.0, 1.0).n_control;
}

}  // namespace sit
