#pragma once

#include <cmath>
#include <stdexcept>

#include "sit/core.hpp"
#include "sit/numerics.hpp"

// Analytic comparison of the stacked incrementality test (SIT) against a
// restricted-population A/B test (RPT) over the same qualifiers. These
// formulas use population variances and normal quantiles: at the planning
// stage there is no sampling variability in the variance, so the statistic
// is treated as normal rather than t-distributed. Group halves are exact
// real-valued fractions here; integer allocation effects belong to the
// simulator.

namespace sit {

struct ComparisonReport {
    double delta_rpt = 0.0;   // incrementality difference observable by RPT
    double delta_sit = 0.0;   // stacked incrementality difference
    double theta_rpt = 0.0;   // RPT minimum detectable effect
    double theta_sit = 0.0;   // SIT minimum detectable effect
    bool sit_superior = false;
    double margin = 0.0;      // (delta_sit - delta_rpt) - (theta_sit - theta_rpt)
};

namespace detail {

// z_{1-alpha} - z_{1-pi_min}; positive because alpha < pi_min.
inline double normal_quantile_gap(const TestConfig& config) {
    const double alpha = config.sided() == Sidedness::two_sided
                             ? 0.5 * config.alpha().value()
                             : config.alpha().value();
    return normal_quantile(1.0 - alpha) - normal_quantile(1.0 - config.min_power().value());
}

}  // namespace detail

// Difference between the two RPT arm means. The strategy-2 arm serves
// interventions to sets 2 and overlap while set 1 stays on the base
// action; the strategy-1 arm mirrors it.
inline double rpt_difference(const PopulationSpec& pop) {
    const auto& s = pop.sets();
    const double n1 = static_cast<double>(pop.n1());
    const double n2 = static_cast<double>(pop.n2());
    const double no = static_cast<double>(pop.n_overlap());
    const double n_total = static_cast<double>(pop.n_total());

    const double arm2 = n2 * s.set2.mu_intervention + no * s.overlap.mu_intervention_2 +
                        n1 * s.set1.mu_base;
    const double arm1 = n2 * s.set2.mu_base + no * s.overlap.mu_intervention_1 +
                        n1 * s.set1.mu_intervention;
    return (arm2 - arm1) / n_total;
}

// Stacked incrementality difference: strategy-2 incrementality over its
// audience minus strategy-1 incrementality over its audience.
inline double sit_difference(const PopulationSpec& pop) {
    const auto& s = pop.sets();
    const double n1 = static_cast<double>(pop.n1());
    const double n2 = static_cast<double>(pop.n2());
    const double no = static_cast<double>(pop.n_overlap());

    const double inc2 = (n2 * (s.set2.mu_intervention - s.set2.mu_base) +
                         no * (s.overlap.mu_intervention_2 - s.overlap.mu_base)) /
                        (n2 + no);
    const double inc1 = (n1 * (s.set1.mu_intervention - s.set1.mu_base) +
                         no * (s.overlap.mu_intervention_1 - s.overlap.mu_base)) /
                        (n1 + no);
    return inc2 - inc1;
}

// RPT minimum detectable effect.
inline double rpt_mde(const PopulationSpec& pop, const TestConfig& config) {
    const auto& s = pop.sets();
    const double n1 = static_cast<double>(pop.n1());
    const double n2 = static_cast<double>(pop.n2());
    const double no = static_cast<double>(pop.n_overlap());
    const double n_total = static_cast<double>(pop.n_total());

    const double pooled = n1 * (s.set1.sigma2_intervention + s.set1.sigma2_base) +
                          n2 * (s.set2.sigma2_intervention + s.set2.sigma2_base) +
                          no * (s.overlap.sigma2_intervention_1 +
                                s.overlap.sigma2_intervention_2);
    return detail::normal_quantile_gap(config) * M_SQRT2 * std::sqrt(pooled) / n_total;
}

// SIT minimum detectable effect. Compared with the RPT expression it
// carries audience-ratio multipliers >= 1 and extra base-variance terms
// for the overlap set, so it can never fall below rpt_mde.
inline double sit_mde(const PopulationSpec& pop, const TestConfig& config) {
    const auto& s = pop.sets();
    const double n1 = static_cast<double>(pop.n1());
    const double n2 = static_cast<double>(pop.n2());
    const double no = static_cast<double>(pop.n_overlap());
    const double n_total = static_cast<double>(pop.n_total());

    const double ratio1 = n_total / (n1 + no);
    const double ratio2 = n_total / (n2 + no);

    const double pooled =
        n1 * ratio1 * ratio1 * (s.set1.sigma2_intervention + s.set1.sigma2_base) +
        n2 * ratio2 * ratio2 * (s.set2.sigma2_intervention + s.set2.sigma2_base) +
        no * (ratio1 * ratio1 *
                  (s.overlap.sigma2_intervention_1 + s.overlap.sigma2_base) +
              ratio2 * ratio2 *
                  (s.overlap.sigma2_intervention_2 + s.overlap.sigma2_base));
    return 2.0 * detail::normal_quantile_gap(config) * std::sqrt(pooled) / n_total;
}

// SIT is the better design when its gain in observable incrementality
// difference exceeds its loss in sensitivity.
inline ComparisonReport compare_designs(const PopulationSpec& pop,
                                        const TestConfig& config) {
    ComparisonReport report;
    report.delta_rpt = rpt_difference(pop);
    report.delta_sit = sit_difference(pop);
    report.theta_rpt = rpt_mde(pop, config);
    report.theta_sit = sit_mde(pop, config);
    report.margin =
        (report.delta_sit - report.delta_rpt) - (report.theta_sit - report.theta_rpt);
    report.sit_superior = report.margin > 0.0;
    return report;
}

// Special case: disjoint audiences of equal size n. Returns the smallest
// real-valued n per strategy above which SIT beats RPT.
inline double special_case_min_n(const SetDistribution& set1, const SetDistribution& set2,
                                 const TestConfig& config) {
    const double delta = (set2.mu_intervention - set2.mu_base) -
                         (set1.mu_intervention - set1.mu_base);
    if (!(delta > 0.0)) {
        throw std::domain_error(
            "special_case_min_n requires strategy 2 to out-increment strategy 1");
    }
    for (double s2 : {set1.sigma2_intervention, set1.sigma2_base,
                      set2.sigma2_intervention, set2.sigma2_base}) {
        if (!(s2 >= 0.0)) throw std::domain_error("variances must be >= 0");
    }
    const double sum_var = set1.sigma2_intervention + set1.sigma2_base +
                           set2.sigma2_intervention + set2.sigma2_base;
    const double z = detail::normal_quantile_gap(config);
    const double root = (4.0 - M_SQRT2) * z * std::sqrt(sum_var) / delta;
    return root * root;
}

// Worst-case bound for conversion-rate metrics: every Bernoulli variance
// is at most 1/4, so the four-variance sum is at most 1.
inline double conversion_bound_min_n(double delta, const TestConfig& config) {
    if (!(delta > 0.0 && delta <= 1.0)) {
        throw std::domain_error(
            "conversion-rate difference must lie in (0, 1], got " + std::to_string(delta));
    }
    const double z = detail::normal_quantile_gap(config);
    const double scaled = (4.0 - M_SQRT2) * z / delta;
    return scaled * scaled;
}

}  // namespace sit
