#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "sit/core.hpp"
#include "sit/numerics.hpp"
#include "sit/random.hpp"
#include "sit/welch.hpp"

// Seeded Monte Carlo simulation of populations and experiment designs,
// empirical power estimation, contamination injection, and the data
// quality diagnostics (sample ratio mismatch, covariate balance,
// incrementality sign). Identical (config, seed) pairs produce identical
// reports regardless of thread count or replicate execution order.

namespace sit::sim {

enum class DesignMode {
    sit_separate_controls,  // population halved, per-strategy E/C splits
    sit_merged_control,     // one control pool, split post-hoc by flags
    rpt,                    // qualifiers only, two arms
    full_population,        // everyone, two arms
};

inline const char* to_string(DesignMode mode) {
    switch (mode) {
        case DesignMode::sit_separate_controls: return "sit_separate_controls";
        case DesignMode::sit_merged_control: return "sit_merged_control";
        case DesignMode::rpt: return "rpt";
        case DesignMode::full_population: return "full_population";
    }
    return "?";
}

// Individuals who qualify for neither strategy; they only enter the
// full-population design, responding at their base rate under every arm.
struct NonQualifierPool {
    std::int64_t count = 0;
    double mu = 0.0;
    double sigma2 = 0.0;
};

struct Design {
    DesignMode mode = DesignMode::sit_separate_controls;
    double exposed_control_ratio = 1.0;  // SIT modes; arms always split 50/50
    NonQualifierPool non_qualifiers;     // full_population mode only

    void validate() const {
        if (!(exposed_control_ratio > 0.0)) {
            throw std::invalid_argument("exposed:control ratio must be positive");
        }
        if (non_qualifiers.count < 0 || !(non_qualifiers.sigma2 >= 0.0)) {
            throw std::invalid_argument("invalid non-qualifier pool");
        }
    }
};

// Where an individual ended up after allocation. `none` covers both the
// unassigned (qualified but not drawn into a group) and the excluded.
enum class Slot : std::uint8_t { none, e1, c1, e2, c2, merged_control, arm1, arm2 };

struct Individual {
    std::int64_t id = 0;
    bool qualifies_1 = false;
    bool qualifies_2 = false;
    double covariate = 0.0;
    Slot assigned_group = Slot::none;
    double response = 0.0;
};

struct ContaminationScenario {
    enum class Kind {
        none,
        cross_strategy_exclusion,  // drops high-covariate members of E1
        external_event,            // an outside uplift overrides treatment
        control_proxy_mismatch,    // controls over-include high responders
    };

    Kind kind = Kind::none;

    // cross_strategy_exclusion
    double exclusion_covariate_threshold = 0.7;
    double exclusion_probability = 0.0;

    // external_event
    double external_uplift = 0.0;
    double external_take_up = 0.0;

    // control_proxy_mismatch
    double proxy_over_inclusion = 0.0;
    double proxy_response_mu = 1.0;
    double proxy_response_sigma2 = 0.0;

    void validate() const {
        auto in_unit = [](double x) { return x >= 0.0 && x <= 1.0; };
        switch (kind) {
            case Kind::none:
                break;
            case Kind::cross_strategy_exclusion:
                if (!in_unit(exclusion_covariate_threshold) ||
                    !in_unit(exclusion_probability)) {
                    throw std::invalid_argument(
                        "exclusion threshold and probability must lie in [0, 1]");
                }
                break;
            case Kind::external_event:
                if (!in_unit(external_take_up)) {
                    throw std::invalid_argument("take-up fraction must lie in [0, 1]");
                }
                break;
            case Kind::control_proxy_mismatch:
                if (!(proxy_over_inclusion >= 0.0) || !(proxy_response_sigma2 >= 0.0)) {
                    throw std::invalid_argument("invalid proxy over-inclusion parameters");
                }
                break;
        }
    }
};

inline const char* to_string(ContaminationScenario::Kind kind) {
    using Kind = ContaminationScenario::Kind;
    switch (kind) {
        case Kind::none: return "none";
        case Kind::cross_strategy_exclusion: return "cross_strategy_exclusion";
        case Kind::external_event: return "external_event";
        case Kind::control_proxy_mismatch: return "control_proxy_mismatch";
    }
    return "?";
}

enum class DiagnosticStatus { pass, warn, fail };

inline const char* to_string(DiagnosticStatus status) {
    switch (status) {
        case DiagnosticStatus::pass: return "pass";
        case DiagnosticStatus::warn: return "warn";
        case DiagnosticStatus::fail: return "fail";
    }
    return "?";
}

// One simulated experiment.
struct ReplicateRow {
    std::int64_t replicate = 0;
    double d_bar = 0.0;
    double t = 0.0;
    double nu = 0.0;
    double p_value = 1.0;
    bool reject = false;
    double d1 = std::numeric_limits<double>::quiet_NaN();
    double d2 = std::numeric_limits<double>::quiet_NaN();
    double srm_p = 1.0;
    double ks_p = 1.0;
};

struct DiagnosticSummary {
    std::string name;
    double statistic = 0.0;  // fraction of replicates failing individually
    double p_value = std::numeric_limits<double>::quiet_NaN();  // median across replicates
    DiagnosticStatus status = DiagnosticStatus::pass;
};

struct SimulationReport {
    std::int64_t replicates = 0;
    double rejection_rate = 0.0;
    ConfidenceInterval rejection_rate_ci;
    double mean_d_bar = 0.0;
    double mean_increment_1 = std::numeric_limits<double>::quiet_NaN();
    double mean_increment_2 = std::numeric_limits<double>::quiet_NaN();
    std::vector<DiagnosticSummary> diagnostics;
    std::vector<ReplicateRow> rows;

    bool any_hard_failure() const {
        for (const auto& d : diagnostics) {
            if (d.status == DiagnosticStatus::fail) return true;
        }
        return false;
    }
};

// ---------------------------------------------------------------------------
// Diagnostics
// ---------------------------------------------------------------------------

struct SrmResult {
    double chi_square;
    Probability p_value;
};

// One-degree-of-freedom goodness of fit of (observed_a, observed_b)
// against an expected a:b ratio.
inline SrmResult srm_check(std::int64_t observed_a, std::int64_t observed_b,
                           double expected_ratio) {
    if (observed_a < 0 || observed_b < 0) {
        throw std::invalid_argument("group counts must be nonnegative");
    }
    const std::int64_t total = observed_a + observed_b;
    if (total == 0) {
        throw std::invalid_argument("srm_check needs at least one observation");
    }
    if (!(expected_ratio > 0.0) || !std::isfinite(expected_ratio)) {
        throw std::invalid_argument("expected ratio must be positive and finite");
    }
    const double expected_a =
        static_cast<double>(total) * expected_ratio / (1.0 + expected_ratio);
    const double expected_b = static_cast<double>(total) / (1.0 + expected_ratio);
    const double da = static_cast<double>(observed_a) - expected_a;
    const double db = static_cast<double>(observed_b) - expected_b;
    const double chi = da * da / expected_a + db * db / expected_b;
    // Chi-square(1) upper tail without going through the gamma function.
    return {chi, Probability(std::erfc(std::sqrt(0.5 * chi)))};
}

struct KsResult {
    double statistic;
    Probability p_value;
};

namespace detail {

// Asymptotic Kolmogorov tail Q(lambda) = 2 sum (-1)^{j-1} exp(-2 j^2 lambda^2),
// truncated at 100 terms.
inline double kolmogorov_tail(double lambda) {
    if (lambda < 1e-10) return 1.0;
    double sum = 0.0;
    double sign = 1.0;
    for (int j = 1; j <= 100; ++j) {
        const double term = std::exp(-2.0 * j * j * lambda * lambda);
        sum += sign * term;
        if (term < 1e-17 * std::fabs(sum)) break;
        sign = -sign;
    }
    return std::clamp(2.0 * sum, 0.0, 1.0);
}

}  // namespace detail

// Two-sample Kolmogorov-Smirnov test with the asymptotic p-value.
inline KsResult covariate_balance_check(std::span<const double> sample_e,
                                        std::span<const double> sample_c) {
    if (sample_e.empty() || sample_c.empty()) {
        throw std::invalid_argument("covariate balance check needs nonempty samples");
    }
    std::vector<double> e(sample_e.begin(), sample_e.end());
    std::vector<double> c(sample_c.begin(), sample_c.end());
    std::sort(e.begin(), e.end());
    std::sort(c.begin(), c.end());

    const double ne = static_cast<double>(e.size());
    const double nc = static_cast<double>(c.size());
    std::size_t i = 0, j = 0;
    double d = 0.0;
    while (i < e.size() && j < c.size()) {
        const double x = std::min(e[i], c[j]);
        while (i < e.size() && e[i] <= x) ++i;
        while (j < c.size() && c[j] <= x) ++j;
        d = std::max(d, std::fabs(static_cast<double>(i) / ne -
                                  static_cast<double>(j) / nc));
    }

    const double n_eff = std::sqrt(ne * nc / (ne + nc));
    const double lambda = (n_eff + 0.12 + 0.11 / n_eff) * d;
    return {d, Probability(detail::kolmogorov_tail(lambda))};
}

// Fails when either strategy's incrementality interval sits entirely
// below zero; warns when a point estimate is negative.
inline DiagnosticStatus incrementality_sign_check(const TestResult& result) {
    if (result.increment_1.ci.entirely_below(0.0) ||
        result.increment_2.ci.entirely_below(0.0)) {
        return DiagnosticStatus::fail;
    }
    if (result.increment_1.estimate < 0.0 || result.increment_2.estimate < 0.0) {
        return DiagnosticStatus::warn;
    }
    return DiagnosticStatus::pass;
}

// ---------------------------------------------------------------------------
// Population generation and allocation
// ---------------------------------------------------------------------------

namespace detail {

// Stream tags for the counter-based RNG.
inline constexpr std::uint64_t kTagCovariate = 1;
inline constexpr std::uint64_t kTagArm = 2;
inline constexpr std::uint64_t kTagGroup = 3;
inline constexpr std::uint64_t kTagResponse = 4;
inline constexpr std::uint64_t kTagTakeUp = 5;
inline constexpr std::uint64_t kTagExclude = 6;
inline constexpr std::uint64_t kTagProxy = 7;

// Set-1 covariates are uniform on [0, 1]; set-2 and overlap covariates are
// u^(1/4) (a Beta(4, 1) draw), concentrated near 1 so that the covariate
// correlates with strategy-2 qualification the way a churn-risk score would.
inline double covariate_for(std::uint64_t seed, std::int64_t id, bool strategy2_like) {
    const double u = rng::uniform01(rng::key(seed, kTagCovariate,
                                             static_cast<std::uint64_t>(id)));
    return strategy2_like ? std::pow(u, 0.25) : u;
}

}  // namespace detail

// Deterministically generate the qualifying population: n1 strategy-1-only
// individuals, then n2 strategy-2-only, then the overlap set.
inline std::vector<Individual> generate_population(const PopulationSpec& pop,
                                                   ResponseMode response_mode,
                                                   std::uint64_t seed) {
    validate_set_parameters(pop.sets(), response_mode);
    std::vector<Individual> individuals;
    individuals.reserve(static_cast<std::size_t>(pop.n_total()));
    std::int64_t id = 0;
    for (std::int64_t i = 0; i < pop.n1(); ++i, ++id) {
        individuals.push_back({id, true, false, detail::covariate_for(seed, id, false),
                               Slot::none, 0.0});
    }
    for (std::int64_t i = 0; i < pop.n2(); ++i, ++id) {
        individuals.push_back({id, false, true, detail::covariate_for(seed, id, true),
                               Slot::none, 0.0});
    }
    for (std::int64_t i = 0; i < pop.n_overlap(); ++i, ++id) {
        individuals.push_back({id, true, true, detail::covariate_for(seed, id, true),
                               Slot::none, 0.0});
    }
    return individuals;
}

// Add never-qualifying individuals (full-population designs only).
inline void append_non_qualifiers(std::vector<Individual>& individuals,
                                  const NonQualifierPool& pool, std::uint64_t seed) {
    std::int64_t id = static_cast<std::int64_t>(individuals.size());
    for (std::int64_t i = 0; i < pool.count; ++i, ++id) {
        individuals.push_back({id, false, false, detail::covariate_for(seed, id, false),
                               Slot::none, 0.0});
    }
}

// Assign every individual to a slot according to the design.
inline void allocate(std::vector<Individual>& individuals, const Design& design,
                     std::uint64_t seed) {
    design.validate();
    const double r = design.exposed_control_ratio;
    const double p_exposed = r / (1.0 + r);          // within a SIT half
    const double p_branch = r / (2.0 * r + 1.0);     // merged-control branches

    for (Individual& ind : individuals) {
        const auto id = static_cast<std::uint64_t>(ind.id);
        const double u_arm = rng::uniform01(rng::key(seed, detail::kTagArm, id));
        ind.assigned_group = Slot::none;

        switch (design.mode) {
            case DesignMode::sit_separate_controls: {
                const bool first_half = u_arm < 0.5;
                if (first_half && ind.qualifies_1) {
                    const double u = rng::uniform01(rng::key(seed, detail::kTagGroup, id));
                    ind.assigned_group = u < p_exposed ? Slot::e1 : Slot::c1;
                } else if (!first_half && ind.qualifies_2) {
                    const double u = rng::uniform01(rng::key(seed, detail::kTagGroup, id));
                    ind.assigned_group = u < p_exposed ? Slot::e2 : Slot::c2;
                }
                break;
            }
            case DesignMode::sit_merged_control: {
                if (!ind.qualifies_1 && !ind.qualifies_2) break;
                if (u_arm < p_branch) {
                    if (ind.qualifies_1) ind.assigned_group = Slot::e1;
                } else if (u_arm < 2.0 * p_branch) {
                    if (ind.qualifies_2) ind.assigned_group = Slot::e2;
                } else {
                    ind.assigned_group = Slot::merged_control;
                }
                break;
            }
            case DesignMode::rpt: {
                if (!ind.qualifies_1 && !ind.qualifies_2) break;
                ind.assigned_group = u_arm < 0.5 ? Slot::arm1 : Slot::arm2;
                break;
            }
            case DesignMode::full_population: {
                ind.assigned_group = u_arm < 0.5 ? Slot::arm1 : Slot::arm2;
                break;
            }
        }
    }
}

namespace detail {

struct ResponseParams {
    double mu;
    double sigma2;
};

// Base (untreated) response parameters for an individual's set.
inline ResponseParams base_params(const Individual& ind, const SetParameters& sets,
                                  const Design& design) {
    if (ind.qualifies_1 && ind.qualifies_2) {
        return {sets.overlap.mu_base, sets.overlap.sigma2_base};
    }
    if (ind.qualifies_1) return {sets.set1.mu_base, sets.set1.sigma2_base};
    if (ind.qualifies_2) return {sets.set2.mu_base, sets.set2.sigma2_base};
    return {design.non_qualifiers.mu, design.non_qualifiers.sigma2};
}

// Response parameters given the slot the individual landed in.
inline ResponseParams treated_params(const Individual& ind, const SetParameters& sets,
                                     const Design& design) {
    const bool overlap = ind.qualifies_1 && ind.qualifies_2;
    switch (ind.assigned_group) {
        case Slot::e1:
            return overlap ? ResponseParams{sets.overlap.mu_intervention_1,
                                            sets.overlap.sigma2_intervention_1}
                           : ResponseParams{sets.set1.mu_intervention,
                                            sets.set1.sigma2_intervention};
        case Slot::e2:
            return overlap ? ResponseParams{sets.overlap.mu_intervention_2,
                                            sets.overlap.sigma2_intervention_2}
                           : ResponseParams{sets.set2.mu_intervention,
                                            sets.set2.sigma2_intervention};
        case Slot::arm1:
            // Strategy-1 side: interventions for its qualifiers, base otherwise.
            if (ind.qualifies_1) {
                return overlap ? ResponseParams{sets.overlap.mu_intervention_1,
                                                sets.overlap.sigma2_intervention_1}
                               : ResponseParams{sets.set1.mu_intervention,
                                                sets.set1.sigma2_intervention};
            }
            return base_params(ind, sets, design);
        case Slot::arm2:
            if (ind.qualifies_2) {
                return overlap ? ResponseParams{sets.overlap.mu_intervention_2,
                                                sets.overlap.sigma2_intervention_2}
                               : ResponseParams{sets.set2.mu_intervention,
                                                sets.set2.sigma2_intervention};
            }
            return base_params(ind, sets, design);
        case Slot::c1:
        case Slot::c2:
        case Slot::merged_control:
            return base_params(ind, sets, design);
        case Slot::none:
            break;
    }
    return base_params(ind, sets, design);
}

inline double draw_response(const ResponseParams& params, ResponseMode mode,
                            std::uint64_t seed, std::int64_t id) {
    const auto k = rng::key(seed, kTagResponse, static_cast<std::uint64_t>(id));
    if (mode == ResponseMode::bernoulli) {
        const double p = std::clamp(params.mu, 0.0, 1.0);
        return rng::uniform01(k) < p ? 1.0 : 0.0;
    }
    return params.mu + std::sqrt(params.sigma2) * normal_quantile(rng::uniform_open01(k));
}

}  // namespace detail

// Apply the scenario and draw responses for every assigned individual.
// Exclusion happens before measurement; proxy over-inclusion appends
// synthetic control members after it.
inline void apply_treatment_and_measure(std::vector<Individual>& individuals,
                                        const SetParameters& sets, const Design& design,
                                        const ContaminationScenario& scenario,
                                        ResponseMode response_mode, std::uint64_t seed) {
    scenario.validate();
    using Kind = ContaminationScenario::Kind;

    if (scenario.kind == Kind::cross_strategy_exclusion) {
        // Strategy 2 "bars" its high-covariate targets from strategy-1
        // exposure: they qualified elsewhere первыми and are silently dropped.
        for (Individual& ind : individuals) {
            if (ind.assigned_group != Slot::e1) continue;
            if (ind.covariate <= scenario.exclusion_covariate_threshold) continue;
            const double u = rng::uniform01(
                rng::key(seed, detail::kTagExclude, static_cast<std::uint64_t>(ind.id)));
            if (u < scenario.exclusion_probability) {
                ind.assigned_group = Slot::none;
            }
        }
    }

    for (Individual& ind : individuals) {
        if (ind.assigned_group == Slot::none) {
            ind.response = std::numeric_limits<double>::quiet_NaN();
            continue;
        }
        detail::ResponseParams params =
            detail::treated_params(ind, sets, design);
        if (scenario.kind == Kind::external_event) {
            const double u = rng::uniform01(
                rng::key(seed, detail::kTagTakeUp, static_cast<std::uint64_t>(ind.id)));
            if (u < scenario.external_take_up) {
                // The external event displaces the treatment entirely.
                const auto base = detail::base_params(ind, sets, design);
                params = {base.mu + scenario.external_uplift, base.sigma2};
            }
        }
        ind.response = detail::draw_response(params, response_mode, seed, ind.id);
    }

    if (scenario.kind == Kind::control_proxy_mismatch &&
        design.mode != DesignMode::rpt && design.mode != DesignMode::full_population) {
        // Members who could never have been exposed leak into the control
        // groups. They are extra people: the exposed side is untouched.
        std::int64_t c1 = 0, c2 = 0;
        for (const Individual& ind : individuals) {
            if (ind.assigned_group == Slot::c1) ++c1;
            if (ind.assigned_group == Slot::c2) ++c2;
            if (ind.assigned_group == Slot::merged_control) {
                if (ind.qualifies_1) ++c1;
                if (ind.qualifies_2) ++c2;
            }
        }
        const auto extra_1 =
            static_cast<std::int64_t>(std::llround(scenario.proxy_over_inclusion * c1));
        const auto extra_2 =
            static_cast<std::int64_t>(std::llround(scenario.proxy_over_inclusion * c2));
        std::int64_t id = static_cast<std::int64_t>(individuals.size());
        const detail::ResponseParams high{scenario.proxy_response_mu,
                                          scenario.proxy_response_sigma2};
        for (std::int64_t i = 0; i < extra_1 + extra_2; ++i, ++id) {
            Individual extra;
            extra.id = id;
            extra.qualifies_1 = i < extra_1;
            extra.qualifies_2 = !extra.qualifies_1;
            extra.covariate = rng::uniform01(
                rng::key(seed, detail::kTagProxy, static_cast<std::uint64_t>(id)));
            extra.assigned_group = extra.qualifies_1 ? Slot::c1 : Slot::c2;
            extra.response =
                detail::draw_response(high, response_mode, seed, id);
            individuals.push_back(extra);
        }
    }
}

namespace detail {

struct Accumulator {
    std::int64_t n = 0;
    double mean = 0.0;
    double m2 = 0.0;

    void add(double x) {
        ++n;
        const double delta = x - mean;
        mean += delta / static_cast<double>(n);
        m2 += delta * (x - mean);
    }

    double variance() const { return n > 1 ? m2 / static_cast<double>(n - 1) : 0.0; }
};

struct GroupData {
    Accumulator stats;
    std::vector<double> covariates;

    void add(const Individual& ind) {
        stats.add(ind.response);
        covariates.push_back(ind.covariate);
    }
};

}  // namespace detail

// ---------------------------------------------------------------------------
// Replicated runs
// ---------------------------------------------------------------------------

inline SimulationReport estimate_power(const PopulationSpec& pop,
                                       ResponseMode response_mode, const Design& design,
                                       const ContaminationScenario& scenario,
                                       const TestConfig& config, std::int64_t replicates,
                                       std::uint64_t seed, int threads = 1) {
    if (replicates < 100) {
        throw std::invalid_argument("estimate_power needs at least 100 replicates");
    }
    design.validate();
    scenario.validate();
    validate_set_parameters(pop.sets(), response_mode);

    const bool sit_mode = design.mode == DesignMode::sit_separate_controls ||
                          design.mode == DesignMode::sit_merged_control;

    SimulationReport report;
    report.replicates = replicates;
    report.rows.resize(static_cast<std::size_t>(replicates));

    // Per-replicate trackers of incrementality sign-check outcomes.
    std::vector<std::uint8_t> sign_status(static_cast<std::size_t>(replicates), 0);

    auto run_replicate = [&](std::int64_t index) {
        const std::uint64_t rep_seed = rng::replicate_seed(seed, index);

        std::vector<Individual> individuals =
            generate_population(pop, response_mode, rep_seed);
        if (design.mode == DesignMode::full_population) {
            append_non_qualifiers(individuals, design.non_qualifiers, rep_seed);
        }
        allocate(individuals, design, rep_seed);
        apply_treatment_and_measure(individuals, pop.sets(), design, scenario,
                                    response_mode, rep_seed);

        detail::GroupData e1, c1, e2, c2, arm1, arm2;
        for (const Individual& ind : individuals) {
            switch (ind.assigned_group) {
                case Slot::e1: e1.add(ind); break;
                case Slot::c1: c1.add(ind); break;
                case Slot::e2: e2.add(ind); break;
                case Slot::c2: c2.add(ind); break;
                case Slot::merged_control:
                    if (ind.qualifies_1) c1.add(ind);
                    if (ind.qualifies_2) c2.add(ind);
                    break;
                case Slot::arm1: arm1.add(ind); break;
                case Slot::arm2: arm2.add(ind); break;
                case Slot::none: break;
            }
        }

        ReplicateRow row;
        row.replicate = index;

        if (sit_mode) {
            const GroupSummary ge1(GroupId::E1, e1.stats.n, e1.stats.mean,
                                   e1.stats.variance());
            const GroupSummary gc1(GroupId::C1, c1.stats.n, c1.stats.mean,
                                   c1.stats.variance());
            const GroupSummary ge2(GroupId::E2, e2.stats.n, e2.stats.mean,
                                   e2.stats.variance());
            const GroupSummary gc2(GroupId::C2, c2.stats.n, c2.stats.mean,
                                   c2.stats.variance());
            const TestResult result = run_test(ge1, gc1, ge2, gc2, config);

            row.d_bar = result.d_bar;
            row.t = result.t_stat;
            row.nu = result.nu.value();
            row.p_value = result.p_value.value();
            row.reject = result.reject_null;
            row.d1 = result.increment_1.estimate;
            row.d2 = result.increment_2.estimate;

            const double r = design.exposed_control_ratio;
            const double srm_1 = srm_check(e1.stats.n, c1.stats.n, r).p_value.value();
            const double srm_2 = srm_check(e2.stats.n, c2.stats.n, r).p_value.value();
            row.srm_p = std::min(1.0, 2.0 * std::min(srm_1, srm_2));
            const double ks_1 =
                covariate_balance_check(e1.covariates, c1.covariates).p_value.value();
            const double ks_2 =
                covariate_balance_check(e2.covariates, c2.covariates).p_value.value();
            row.ks_p = std::min(1.0, 2.0 * std::min(ks_1, ks_2));

            sign_status[static_cast<std::size_t>(index)] =
                static_cast<std::uint8_t>(incrementality_sign_check(result));
        } else {
            // Two-arm designs: the strategy-2 side plays the exposed role.
            const GroupSummary g_arm2(GroupId::E2, arm2.stats.n, arm2.stats.mean,
                                      arm2.stats.variance(), +1.0);
            const GroupSummary g_arm1(GroupId::E1, arm1.stats.n, arm1.stats.mean,
                                      arm1.stats.variance(), -1.0);
            const GroupSummary pair[] = {g_arm2, g_arm1};
            const WelchStatistic stat = welch_statistic(pair);
            const Probability p = p_value(stat.t, stat.nu, config.sided());

            row.d_bar = arm2.stats.mean - arm1.stats.mean;
            row.t = stat.t;
            row.nu = stat.nu.value();
            row.p_value = p.value();
            row.reject = p.value() < config.alpha().value();

            row.srm_p = srm_check(arm2.stats.n, arm1.stats.n, 1.0).p_value.value();
            row.ks_p =
                covariate_balance_check(arm2.covariates, arm1.covariates).p_value.value();
        }

        report.rows[static_cast<std::size_t>(index)] = row;
    };

    int worker_count = threads;
    if (worker_count <= 0) {
        worker_count = static_cast<int>(std::thread::hardware_concurrency());
        if (worker_count <= 0) worker_count = 1;
    }
    if (worker_count == 1) {
        for (std::int64_t i = 0; i < replicates; ++i) run_replicate(i);
    } else {
        std::vector<std::thread> workers;
        workers.reserve(static_cast<std::size_t>(worker_count));
        for (int w = 0; w < worker_count; ++w) {
            workers.emplace_back([&, w] {
                for (std::int64_t i = w; i < replicates; i += worker_count) {
                    run_replicate(i);
                }
            });
        }
        for (auto& t : workers) t.join();
    }

    // Order-insensitive aggregation over the indexed rows.
    std::int64_t rejected = 0;
    double sum_d = 0.0, sum_d1 = 0.0, sum_d2 = 0.0;
    std::vector<double> srm_ps, ks_ps;
    srm_ps.reserve(report.rows.size());
    ks_ps.reserve(report.rows.size());
    std::int64_t srm_failures = 0, ks_failures = 0, sign_failures = 0;
    constexpr double kHardFailLevel = 0.001;

    for (const ReplicateRow& row : report.rows) {
        rejected += row.reject ? 1 : 0;
        sum_d += row.d_bar;
        if (sit_mode) {
            sum_d1 += row.d1;
            sum_d2 += row.d2;
        }
        srm_ps.push_back(row.srm_p);
        ks_ps.push_back(row.ks_p);
        if (row.srm_p < kHardFailLevel) ++srm_failures;
        if (row.ks_p < kHardFailLevel) ++ks_failures;
    }
    for (std::uint8_t s : sign_status) {
        if (s == static_cast<std::uint8_t>(DiagnosticStatus::fail)) ++sign_failures;
    }

    const double n = static_cast<double>(replicates);
    report.rejection_rate = static_cast<double>(rejected) / n;
    report.mean_d_bar = sum_d / n;
    if (sit_mode) {
        report.mean_increment_1 = sum_d1 / n;
        report.mean_increment_2 = sum_d2 / n;
    }

    // Wilson interval at ~95% for the rejection rate.
    {
        const double z = 1.959963984540054;
        const double phat = report.rejection_rate;
        const double denom = 1.0 + z * z / n;
        const double centre = phat + z * z / (2.0 * n);
        const double half = z * std::sqrt(phat * (1.0 - phat) / n +
                                          z * z / (4.0 * n * n));
        report.rejection_rate_ci = {std::max(0.0, (centre - half) / denom),
                                    std::min(1.0, (centre + half) / denom)};
    }

    auto median_of = [](std::vector<double>& values) {
        const auto mid = values.size() / 2;
        std::nth_element(values.begin(), values.begin() + mid, values.end());
        return values[mid];
    };
    auto status_for = [](double fail_fraction) {
        if (fail_fraction >= 0.5) return DiagnosticStatus::fail;
        if (fail_fraction >= 0.1) return DiagnosticStatus::warn;
        return DiagnosticStatus::pass;
    };

    const double srm_fraction = static_cast<double>(srm_failures) / n;
    const double ks_fraction = static_cast<double>(ks_failures) / n;
    report.diagnostics.push_back({"sample_ratio_mismatch", srm_fraction,
                                  median_of(srm_ps), status_for(srm_fraction)});
    report.diagnostics.push_back({"covariate_balance", ks_fraction, median_of(ks_ps),
                                  status_for(ks_fraction)});
    if (sit_mode) {
        const double sign_fraction = static_cast<double>(sign_failures) / n;
        report.diagnostics.push_back({"incrementality_sign", sign_fraction,
                                      std::numeric_limits<double>::quiet_NaN(),
                                      status_for(sign_fraction)});
    }
    return report;
}

}  // namespace sit::sim
