#pragma once

#include <cmath>
#include <concepts>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "sit/numerics.hpp"

// Domain types shared by the analytic modules: per-group sample summaries,
// the three-set population decomposition, test configuration and results.
// All types are immutable values; construction validates the invariants.

namespace sit {

enum class GroupId { E1, C1, E2, C2 };

inline const char* to_string(GroupId id) {
    switch (id) {
        case GroupId::E1: return "E1";
        case GroupId::C1: return "C1";
        case GroupId::E2: return "E2";
        case GroupId::C2: return "C2";
    }
    return "?";
}

// Sign convention for composing the stacked difference
// D = (E2 - C2) - (E1 - C1) as a single weighted sum over groups.
inline double default_group_weight(GroupId id) {
    switch (id) {
        case GroupId::E1: return -1.0;
        case GroupId::C1: return +1.0;
        case GroupId::E2: return +1.0;
        case GroupId::C2: return -1.0;
    }
    return 0.0;
}

// Per-group sample statistics feeding the test statistic.
class GroupSummary {
public:
    GroupSummary(GroupId group_id, std::int64_t n, double mean, double variance,
                 double weight)
        : group_id_(group_id), n_(n), mean_(mean), variance_(variance), weight_(weight) {
        if (n < 2) {
            throw std::invalid_argument(std::string("group ") + to_string(group_id) +
                                        ": sample variance needs n >= 2, got n = " +
                                        std::to_string(n));
        }
        if (!(variance >= 0.0)) {
            throw std::invalid_argument(std::string("group ") + to_string(group_id) +
                                        ": variance must be >= 0, got " +
                                        std::to_string(variance));
        }
    }

    GroupSummary(GroupId group_id, std::int64_t n, double mean, double variance)
        : GroupSummary(group_id, n, mean, variance, default_group_weight(group_id)) {}

    GroupId group_id() const noexcept { return group_id_; }
    std::int64_t n() const noexcept { return n_; }
    double mean() const noexcept { return mean_; }
    double variance() const noexcept { return variance_; }
    double weight() const noexcept { return weight_; }

    // Squared standard error of the group's sample mean.
    double psi() const noexcept { return variance_ / static_cast<double>(n_); }

private:
    GroupId group_id_;
    std::int64_t n_;
    double mean_;
    double variance_;
    double weight_;
};

enum class ResponseMode { bernoulli, gaussian };

// Mean/variance of one qualification set, before and under intervention.
struct SetDistribution {
    double mu_base = 0.0;
    double sigma2_base = 0.0;
    double mu_intervention = 0.0;
    double sigma2_intervention = 0.0;
};

// The overlap set reacts separately to each strategy's intervention.
struct OverlapDistribution {
    double mu_base = 0.0;
    double sigma2_base = 0.0;
    double mu_intervention_1 = 0.0;
    double sigma2_intervention_1 = 0.0;
    double mu_intervention_2 = 0.0;
    double sigma2_intervention_2 = 0.0;
};

struct SetParameters {
    SetDistribution set1;     // qualifies for strategy 1 only
    SetDistribution set2;     // qualifies for strategy 2 only
    OverlapDistribution overlap;
};

inline double bernoulli_variance(double p) { return p * (1.0 - p); }

// Convenience constructors for conversion-rate metrics, where the
// variance is determined by the mean.
inline SetDistribution bernoulli_set(double p_base, double p_intervention) {
    return {p_base, bernoulli_variance(p_base), p_intervention,
            bernoulli_variance(p_intervention)};
}

inline OverlapDistribution bernoulli_overlap(double p_base, double p_intervention_1,
                                             double p_intervention_2) {
    return {p_base,           bernoulli_variance(p_base),
            p_intervention_1, bernoulli_variance(p_intervention_1),
            p_intervention_2, bernoulli_variance(p_intervention_2)};
}

namespace detail {

inline void check_pair(double mu, double sigma2, ResponseMode mode, const char* what) {
    if (!(sigma2 >= 0.0)) {
        throw std::invalid_argument(std::string(what) + ": variance must be >= 0");
    }
    if (mode == ResponseMode::bernoulli) {
        if (!(mu >= 0.0 && mu <= 1.0)) {
            throw std::invalid_argument(std::string(what) +
                                        ": bernoulli mean must lie in [0, 1]");
        }
        if (std::fabs(sigma2 - bernoulli_variance(mu)) > 1e-12) {
            throw std::invalid_argument(std::string(what) +
                                        ": bernoulli variance must equal mu*(1-mu)");
        }
    }
}

}  // namespace detail

inline void validate_set_parameters(const SetParameters& sets, ResponseMode mode) {
    detail::check_pair(sets.set1.mu_base, sets.set1.sigma2_base, mode, "set1 base");
    detail::check_pair(sets.set1.mu_intervention, sets.set1.sigma2_intervention, mode,
                       "set1 intervention");
    detail::check_pair(sets.set2.mu_base, sets.set2.sigma2_base, mode, "set2 base");
    detail::check_pair(sets.set2.mu_intervention, sets.set2.sigma2_intervention, mode,
                       "set2 intervention");
    detail::check_pair(sets.overlap.mu_base, sets.overlap.sigma2_base, mode,
                       "overlap base");
    detail::check_pair(sets.overlap.mu_intervention_1, sets.overlap.sigma2_intervention_1,
                       mode, "overlap intervention 1");
    detail::check_pair(sets.overlap.mu_intervention_2, sets.overlap.sigma2_intervention_2,
                       mode, "overlap intervention 2");
}

// Sizes of the three qualification sets plus their response parameters.
class PopulationSpec {
public:
    PopulationSpec(std::int64_t n1, std::int64_t n2, std::int64_t n_overlap,
                   SetParameters sets)
        : n1_(n1), n2_(n2), n_overlap_(n_overlap), sets_(std::move(sets)) {
        if (n1 < 0 || n2 < 0 || n_overlap < 0) {
            throw std::invalid_argument("set sizes must be nonnegative");
        }
        if (n_total() < 4) {
            throw std::invalid_argument("population must contain at least 4 qualifiers");
        }
        if (n1 + n_overlap < 1 || n2 + n_overlap < 1) {
            throw std::invalid_argument("each strategy needs a nonempty audience");
        }
    }

    std::int64_t n1() const noexcept { return n1_; }
    std::int64_t n2() const noexcept { return n2_; }
    std::int64_t n_overlap() const noexcept { return n_overlap_; }
    std::int64_t n_total() const noexcept { return n1_ + n2_ + n_overlap_; }
    const SetParameters& sets() const noexcept { return sets_; }

    std::int64_t strategy_1_audience() const noexcept { return n1_ + n_overlap_; }
    std::int64_t strategy_2_audience() const noexcept { return n2_ + n_overlap_; }

private:
    std::int64_t n1_;
    std::int64_t n2_;
    std::int64_t n_overlap_;
    SetParameters sets_;
};

enum class Sidedness { one_sided_greater, two_sided };

// Significance level, target power, sidedness.
class TestConfig {
public:
    TestConfig(double alpha, double min_power,
               Sidedness sided = Sidedness::one_sided_greater)
        : alpha_(alpha), min_power_(min_power), sided_(sided) {
        if (!(alpha < min_power)) {
            throw std::invalid_argument(
                "significance level must be below the power target (alpha < pi_min)");
        }
    }

    Probability alpha() const noexcept { return alpha_; }
    Probability min_power() const noexcept { return min_power_; }
    Sidedness sided() const noexcept { return sided_; }

private:
    Probability alpha_;
    Probability min_power_;
    Sidedness sided_;
};

struct ConfidenceInterval {
    double lo = 0.0;
    double hi = 0.0;

    bool entirely_below(double x) const noexcept { return hi < x; }
    bool entirely_above(double x) const noexcept { return lo > x; }
};

// A per-strategy incrementality estimate with its Welch interval.
struct StrategyIncrement {
    double estimate = 0.0;
    ConfidenceInterval ci;
};

struct TestResult {
    double d_bar = 0.0;          // stacked difference of sample means
    double t_stat = 0.0;
    DegreesOfFreedom nu;
    Probability p_value;
    bool reject_null = false;
    StrategyIncrement increment_1;
    StrategyIncrement increment_2;
};

// Net benefit of rolling a strategy out to its projected audience.
inline double net_benefit(double incrementality, std::int64_t audience_size) {
    if (audience_size < 0) {
        throw std::invalid_argument("audience size must be nonnegative");
    }
    return incrementality * static_cast<double>(audience_size);
}

template <typename R>
concept QualifiedRecord = requires(const R& r) {
    { r.qualifies_1 } -> std::convertible_to<bool>;
    { r.qualifies_2 } -> std::convertible_to<bool>;
};

// Reconstruct per-strategy control groups from a merged control pool.
// A record qualifying for both strategies lands in both outputs.
template <QualifiedRecord R>
std::pair<std::vector<R>, std::vector<R>> pooled_control_split(
    const std::vector<R>& merged_control) {
    std::pair<std::vector<R>, std::vector<R>> out;
    for (const R& record : merged_control) {
        if (!record.qualifies_1 && !record.qualifies_2) {
            throw std::invalid_argument(
                "merged control record qualifies for neither strategy");
        }
        if (record.qualifies_1) out.first.push_back(record);
        if (record.qualifies_2) out.second.push_back(record);
    }
    return out;
}

}  // namespace sit
