#pragma once

#include <cmath>
#include <span>
#include <stdexcept>

#include "sit/core.hpp"
#include "sit/numerics.hpp"

// The stacked test statistic: difference of within-strategy incrementalities,
// Welch's t in its weighted general form, Welch-Satterthwaite degrees of
// freedom, and p-values.

namespace sit {

namespace detail {

inline void require_role(const GroupSummary& g, GroupId expected) {
    if (g.group_id() != expected) {
        throw std::invalid_argument(std::string("expected group ") + to_string(expected) +
                                    ", got " + to_string(g.group_id()));
    }
}

}  // namespace detail

// (E2 - C2) - (E1 - C1) on the sample means.
inline double stacked_difference(const GroupSummary& e1, const GroupSummary& c1,
                                 const GroupSummary& e2, const GroupSummary& c2) {
    detail::require_role(e1, GroupId::E1);
    detail::require_role(c1, GroupId::C1);
    detail::require_role(e2, GroupId::E2);
    detail::require_role(c2, GroupId::C2);
    return (e2.mean() - c2.mean()) - (e1.mean() - c1.mean());
}

struct WelchStatistic {
    double t;
    DegreesOfFreedom nu;
};

// Weighted Welch t over any number of groups:
//   t  = sum_g w_g m_g / sqrt(sum_g w_g^2 psi_g)
//   nu = (sum_g w_g^2 psi_g)^2 / sum_g (w_g^2 psi_g)^2 / (n_g - 1)
// With unit weights this is the classic Welch-Satterthwaite combination.
inline WelchStatistic welch_statistic(std::span<const GroupSummary> groups) {
    if (groups.size() < 2) {
        throw std::invalid_argument("welch_statistic needs at least 2 groups");
    }
    double numerator = 0.0;
    double pooled_psi = 0.0;
    double nu_denominator = 0.0;
    for (const GroupSummary& g : groups) {
        const double psi = g.weight() * g.weight() * g.psi();
        numerator += g.weight() * g.mean();
        pooled_psi += psi;
        nu_denominator += psi * psi / static_cast<double>(g.n() - 1);
    }
    if (!(pooled_psi > 0.0)) {
        throw std::domain_error(
            "all group variances are zero; cannot form a test statistic");
    }
    return {numerator / std::sqrt(pooled_psi),
            DegreesOfFreedom(pooled_psi * pooled_psi / nu_denominator)};
}

inline Probability p_value(double t, DegreesOfFreedom nu, Sidedness sided) {
    const double upper = 1.0 - t_cdf(t, nu).value();
    if (sided == Sidedness::one_sided_greater) {
        return Probability(upper);
    }
    const double upper_abs = 1.0 - t_cdf(std::fabs(t), nu).value();
    return Probability(std::min(1.0, 2.0 * upper_abs));
}

// Welch interval for one exposed/control pair at two-sided level 1 - alpha.
inline StrategyIncrement strategy_increment(const GroupSummary& exposed,
                                            const GroupSummary& control,
                                            Probability alpha) {
    const double estimate = exposed.mean() - control.mean();
    const double psi = exposed.psi() + control.psi();
    if (!(psi > 0.0)) {
        return {estimate, {estimate, estimate}};
    }
    const double se = std::sqrt(psi);
    const double nu = psi * psi / (exposed.psi() * exposed.psi() /
                                       static_cast<double>(exposed.n() - 1) +
                                   control.psi() * control.psi() /
                                       static_cast<double>(control.n() - 1));
    const double half_width =
        t_quantile(1.0 - 0.5 * alpha.value(), DegreesOfFreedom(nu)) * se;
    return {estimate, {estimate - half_width, estimate + half_width}};
}

// Full stacked test: statistic, p-value, decision, per-strategy intervals.
inline TestResult run_test(const GroupSummary& e1, const GroupSummary& c1,
                           const GroupSummary& e2, const GroupSummary& c2,
                           const TestConfig& config) {
    const double d_bar = stacked_difference(e1, c1, e2, c2);
    const GroupSummary groups[] = {e1, c1, e2, c2};
    const WelchStatistic stat = welch_statistic(groups);
    const Probability p = p_value(stat.t, stat.nu, config.sided());
    return TestResult{
        d_bar,
        stat.t,
        stat.nu,
        p,
        p.value() < config.alpha().value(),
        strategy_increment(e1, c1, config.alpha()),
        strategy_increment(e2, c2, config.alpha()),
    };
}

}  // namespace sit
