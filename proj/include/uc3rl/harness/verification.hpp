#pragma once

#include "uc3rl/algorithm.hpp"
#include "uc3rl/analysis.hpp"
#include "uc3rl/harness/export.hpp"
#include "uc3rl/harness/generator.hpp"
#include "uc3rl/random_models.hpp"

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace uc3rl::harness {

inline constexpr double kLemmaTolerance = 1e-9;

struct SuiteSizes {
    std::size_t mdp_triples = 1000;
    std::size_t scalar_tuples = 10000;
    std::size_t tv_pairs = 100000;
    std::size_t potential_sequences = 10000;
    std::size_t max_sequence_length = 500;
    std::size_t oracle_runs = 50;
    std::size_t oracle_episodes = 200;
    double oracle_delta = 0.1;
};

namespace verify_detail {

/// Log-uniform on [10^lo, 10^hi].
inline double log_uniform(Rng& rng, double lo, double hi) { return std::pow(10.0, rng.uniform(lo, hi)); }

/// True dynamics, rewards and a nearby estimate. The estimate's distance and
/// the reward scale are both spread over several decades so that some
/// instances sit close to the tight end of the inequalities.
struct ComInstance {
    LayeredMdp truth;
    LayeredMdp estimate;
    DeterministicPolicy policy;
};

inline ComInstance random_com_instance(Rng& rng) {
    const auto shape = random_shape(rng, 3, 3, 3);
    const auto p = random_kernel(shape, rng);
    const auto phat = mix_kernels(p, random_kernel(shape, rng), log_uniform(rng, -4.0, 0.0));
    auto rewards = random_rewards(shape, rng, log_uniform(rng, -3.0, 0.0));
    auto policy = random_policy(shape, rng);
    return {LayeredMdp(p, rewards, 1.0), LayeredMdp(phat, rewards, 1.0), std::move(policy)};
}

inline std::vector<double> nearby(std::span<const double> p, Rng& rng) {
    const auto noise = rng.dirichlet_uniform(p.size());
    const double w = log_uniform(rng, -5.0, 0.0);
    std::vector<double> out(p.size());
    double total = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) total += out[i] = (1.0 - w) * p[i] + w * noise[i];
    for (auto& x : out) x /= total;
    return out;
}

}  // namespace verify_detail

inline std::vector<CheckReport> run_com_suite(std::uint64_t seed, const SuiteSizes& n = {}) {
    using namespace verify_detail;
    Rng rng = Rng(seed).split(1);
    CheckReport com("change_of_measure", kLemmaTolerance);
    CheckReport occ("occupancy_change_of_measure", kLemmaTolerance);
    for (std::size_t i = 0; i < n.mdp_triples; ++i) {
        const auto inst = random_com_instance(rng);
        com.record(check_change_of_measure(inst.truth, inst.estimate, inst.policy));
        occ.record(check_occupancy_com(inst.truth.transitions(), inst.estimate.transitions(), inst.policy,
                                       inst.truth.rewards()));
    }

    CheckReport refined("refined_change_of_measure", kLemmaTolerance);
    for (std::size_t i = 0; i < n.scalar_tuples; ++i) {
        const std::size_t support = 1 + rng.index(8);
        const auto p = rng.dirichlet_uniform(support);
        const auto q = (i % 2 == 0) ? nearby(p, rng) : rng.dirichlet_uniform(support);
        std::vector<double> values(support);
        const double scale = log_uniform(rng, -3.0, 0.0);
        for (auto& v : values) v = scale * rng.uniform();
        const double beta = log_uniform(rng, 0.0, 2.0);
        refined.record(check_refined_com(p, q, values, 1.0, beta));
    }

    CheckReport tv("tv_hellinger", kLemmaTolerance);
    CheckReport kappa("tv_hellinger_kappa_search", kLemmaTolerance);
    double max_ratio = 0.0;
    for (std::size_t i = 0; i < n.tv_pairs; ++i) {
        const std::size_t support = 2 + rng.index(7);
        const auto p = rng.dirichlet_uniform(support);
        const auto q = (i % 2 == 0) ? nearby(p, rng) : rng.dirichlet_uniform(support);
        const auto e = check_tv_hellinger(p, q);
        tv.record(e);
        const double d2 = e.rhs / kTvHellingerKappa;
        if (d2 > 1e-12) max_ratio = std::max(max_ratio, e.lhs / d2);
    }
    kappa.instances = n.tv_pairs;
    kappa.worst_slack = kTvHellingerKappa - max_ratio;
    kappa.violations = max_ratio > kTvHellingerKappa + kLemmaTolerance ? 1 : 0;
    return {com, occ, refined, tv, kappa};
}

inline std::vector<CheckReport> run_potential_suite(std::uint64_t seed, const SuiteSizes& n = {}) {
    Rng rng = Rng(seed).split(2);
    CheckReport report("potential_bound", kLemmaTolerance);
    std::vector<double> x;
    for (std::size_t i = 0; i < n.potential_sequences; ++i) {
        const std::size_t len = 1 + rng.index(n.max_sequence_length);
        const double lambda = verify_detail::log_uniform(rng, -2.0, 2.0);
        x.assign(len, 0.0);
        const std::size_t pattern = i % 4;
        for (auto& xt : x) {
            switch (pattern) {
                case 0: xt = lambda * rng.uniform(); break;
                case 1: xt = lambda; break;
                case 2: xt = rng.bernoulli(0.2) ? lambda : 0.0; break;
                default: xt = lambda * std::pow(rng.uniform(), 4.0); break;
            }
        }
        report.record(check_potential_bound(x, lambda));
    }
    return {report};
}

inline std::vector<CheckReport> run_valdiff_suite(std::uint64_t seed, const SuiteSizes& n = {}) {
    Rng rng = Rng(seed).split(3);
    CheckReport report("value_difference_identity", kLemmaTolerance);
    for (std::size_t i = 0; i < n.mdp_triples; ++i) {
        const auto shape = random_shape(rng, 1 + rng.index(4), 3, 3);
        const auto m = random_mdp(shape, rng);
        const auto m2 = random_mdp(shape, rng);
        report.record(check_value_difference(m, m2, random_policy(shape, rng)));
    }
    return {report};
}

struct OracleRun {
    OracleLhs lhs;
    OracleLhs rhs;
};

/// One seeded run of the algorithm for T episodes on the problem, then the
/// exact oracle-bound left-hand sides at t = T.
inline OracleRun run_oracle_bound_instance(const Problem& problem, std::size_t episodes, double delta,
                                           std::uint64_t seed) {
    const auto& inst = problem.instance;
    const AlgoParams params{episodes, delta, std::nullopt, std::nullopt};
    const auto betas = resolve_betas(params, inst.shape(), problem.rewards.size(), problem.dynamics.size());
    EpisodeCache cache(inst.shape(), inst.context_count(), problem.rewards.size(), problem.dynamics.size());
    Rng rng(seed);
    for (std::size_t t = 0; t < episodes; ++t) uc3rl_episode(inst, problem.rewards, problem.dynamics, betas, cache, rng);
    return {eval_oracle_lhs(inst, cache, problem.rewards, problem.dynamics, betas, episodes),
            oracle_bounds(inst.shape().horizon, episodes, problem.rewards.size(), problem.dynamics.size(), delta)};
}

/// Fraction-of-violations check across seeded runs on the reference problem
/// (pass when at most delta + 0.1 of the runs exceed the bound).
inline std::vector<CheckReport> run_oracle_stat_suite(std::uint64_t seed, const SuiteSizes& n = {}) {
    const auto problem = gen_instance(reference_spec(), kReferenceInstanceSeed).problem;
    const double allowed = n.oracle_delta + 0.1;
    CheckReport reward("oracle_reward_bound", 0.0, allowed);
    CheckReport dynamics("oracle_dynamics_bound", 0.0, allowed);
    for (std::size_t r = 0; r < n.oracle_runs; ++r) {
        const auto run = run_oracle_bound_instance(problem, n.oracle_episodes, n.oracle_delta, seed + r);
        reward.record({run.lhs.reward, run.rhs.reward});
        dynamics.record({run.lhs.dynamics, run.rhs.dynamics});
    }
    return {reward, dynamics};
}

inline std::vector<CheckReport> run_suite(const std::string& name, std::uint64_t seed, const SuiteSizes& n = {}) {
    std::vector<CheckReport> out;
    auto append = [&](std::vector<CheckReport> r) { out.insert(out.end(), r.begin(), r.end()); };
    const bool all = name == "all";
    if (!all && name != "com" && name != "potential" && name != "valdiff" && name != "oracle-stat")
        throw ConfigError("verify: unknown suite '" + name + "'");
    if (all || name == "com") append(run_com_suite(seed, n));
    if (all || name == "potential") append(run_potential_suite(seed, n));
    if (all || name == "valdiff") append(run_valdiff_suite(seed, n));
    if (all || name == "oracle-stat") append(run_oracle_stat_suite(seed, n));
    return out;
}

/// 0 when every report passed, 1 otherwise.
inline int verify_exit_code(const std::vector<CheckReport>& reports) {
    for (const auto& r : reports)
        if (!r.passed()) return 1;
    return 0;
}

inline std::string reports_csv(const std::vector<CheckReport>& reports) {
    std::string out = "name,instances,violations,worst_slack,tolerance\n";
    for (const auto& r : reports)
        out += r.name + "," + std::to_string(r.instances) + "," + std::to_string(r.violations) + "," +
               format_real(r.worst_slack) + "," + format_real(r.tolerance) + "\n";
    return out;
}

inline std::string reports_table(const std::vector<CheckReport>& reports) {
    std::string out;
    char line[256];
    std::snprintf(line, sizeof line, "%-30s %10s %10s %16s %10s %6s\n", "name", "instances", "violations",
                  "worst_slack", "tolerance", "status");
    out += line;
    for (const auto& r : reports) {
        std::snprintf(line, sizeof line, "%-30s %10zu %10zu %16.6g %10.3g %6s\n", r.name.c_str(), r.instances,
                      r.violations, r.worst_slack, r.tolerance, r.passed() ? "ok" : "FAIL");
        out += line;
    }
    return out;
}

}  // namespace uc3rl::harness
