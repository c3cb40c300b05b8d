#pragma once

#include "uc3rl/algorithm.hpp"
#include "uc3rl/cmdp.hpp"
#include "uc3rl/function_classes.hpp"
#include "uc3rl/mdp.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace uc3rl {

/// Both sides of one inequality instance, LHS <= RHS.
struct InequalityEval {
    double lhs = 0.0;
    double rhs = 0.0;

    double slack() const noexcept { return rhs - lhs; }
};

/// Aggregate over a randomized suite of instances of one inequality.
struct CheckReport {
    std::string name;
    std::size_t instances = 0;
    std::size_t violations = 0;
    double worst_slack = std::numeric_limits<double>::infinity();
    double tolerance = 0.0;
    /// Largest violation fraction still counted as a pass (0 for deterministic lemmas).
    double allowed_violation_rate = 0.0;

    CheckReport() = default;
    CheckReport(std::string n, double tol, double allowed_rate = 0.0)
        : name(std::move(n)), tolerance(tol), allowed_violation_rate(allowed_rate) {}

    void record(const InequalityEval& e) {
        ++instances;
        if (e.lhs > e.rhs + tolerance) ++violations;
        worst_slack = std::min(worst_slack, e.slack());
    }

    double violation_rate() const noexcept {
        return instances == 0 ? 0.0 : static_cast<double>(violations) / static_cast<double>(instances);
    }

    bool passed() const noexcept {
        if (allowed_violation_rate == 0.0) return violations == 0;
        return violation_rate() <= allowed_violation_rate;
    }
};

namespace detail {

inline void check_distribution(std::span<const double> p, const char* what) {
    double total = 0.0;
    for (double x : p) {
        if (!(x >= 0.0) || !std::isfinite(x))
            throw std::invalid_argument(std::string(what) + ": entries must be finite and >= 0");
        total += x;
    }
    if (std::abs(total - 1.0) > kStochasticTolerance)
        throw std::invalid_argument(std::string(what) + ": sums to " + std::to_string(total) + ", expected 1");
}

inline void check_pair(std::span<const double> p, std::span<const double> q) {
    if (p.size() != q.size()) throw std::invalid_argument("distributions have different lengths");
    check_distribution(p, "p");
    check_distribution(q, "q");
}

}  // namespace detail

/// D_H^2(p, q) = sum_x (sqrt p(x) - sqrt q(x))^2, in [0, 2].
inline double hellinger_sq(std::span<const double> p, std::span<const double> q) {
    detail::check_pair(p, q);
    double total = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        const double d = std::sqrt(p[i]) - std::sqrt(q[i]);
        total += d * d;
    }
    return total;
}

/// D_H^2 between the rows of two kernels at every (h, s, a).
inline StateActionTable hellinger_table(const TransitionKernel& p, const TransitionKernel& q) {
    if (!(p.shape() == q.shape())) throw std::invalid_argument("hellinger_table: kernel shapes differ");
    const auto& sh = p.shape();
    StateActionTable out(sh);
    for (std::size_t h = 0; h < sh.horizon; ++h)
        for (std::size_t s = 0; s < sh.states(h); ++s)
            for (std::size_t a = 0; a < sh.action_count; ++a) out(h, s, a) = hellinger_sq(p.row(h, s, a), q.row(h, s, a));
    return out;
}

namespace detail {

inline void check_unit_rewards(const LayeredMdp& m) {
    const auto& r = m.rewards();
    if (r.min() < 0.0 || r.max() > 1.0) throw std::invalid_argument("change of measure: rewards must lie in [0, 1]");
}

}  // namespace detail

/// V^pi_{Mhat}(s_0) <= 3 V^pi_M(s_0) + 9 H^2 E_{P, pi}[sum_h D_H^2(Phat(.|s_h,a_h), P(.|s_h,a_h))].
/// Both MDPs must carry the same rewards in [0, 1]; only the dynamics differ.
inline InequalityEval check_change_of_measure(const LayeredMdp& m, const LayeredMdp& mhat,
                                              const DeterministicPolicy& policy) {
    if (!(m.shape() == mhat.shape())) throw std::invalid_argument("change of measure: MDP shapes differ");
    detail::check_unit_rewards(m);
    if (!(m.rewards() == mhat.rewards()))
        throw std::invalid_argument("change of measure: both MDPs must share one reward function");
    const double h = static_cast<double>(m.horizon());
    const double lhs = policy_eval(mhat, policy).start();
    const double value = policy_eval(m, policy).start();
    const double hellinger =
        weighted_sum(occupancy(m, policy), hellinger_table(mhat.transitions(), m.transitions()));
    return {lhs, 3.0 * value + 9.0 * h * h * hellinger};
}

/// Occupancy form: sum q(pi, Phat) r <= 3 sum q(pi, P) r + 9 H^2 sum q(pi, P) D_H^2(P, Phat).
inline InequalityEval check_occupancy_com(const TransitionKernel& p, const TransitionKernel& phat,
                                          const DeterministicPolicy& policy, const StateActionTable& rewards) {
    if (!(p.shape() == phat.shape()) || !(rewards.shape() == p.shape()))
        throw std::invalid_argument("occupancy change of measure: shapes differ");
    if (rewards.min() < 0.0 || rewards.max() > 1.0)
        throw std::invalid_argument("occupancy change of measure: rewards must lie in [0, 1]");
    const double h = static_cast<double>(p.shape().horizon);
    const auto q_true = occupancy(p, policy);
    const auto q_hat = occupancy(phat, policy);
    const double lhs = weighted_sum(q_hat, rewards);
    const double rhs = 3.0 * weighted_sum(q_true, rewards) + 9.0 * h * h * weighted_sum(q_true, hellinger_table(p, phat));
    return {lhs, rhs};
}

/// E_p[f] <= (1 + 1/beta) E_q[f] + 3 beta R D_H^2(p, q) for 0 <= f <= R, beta >= 1.
inline InequalityEval check_refined_com(std::span<const double> p, std::span<const double> q,
                                        std::span<const double> values, double bound, double beta) {
    if (!(beta >= 1.0)) throw std::invalid_argument("refined change of measure: beta must be >= 1");
    if (values.size() != p.size()) throw std::invalid_argument("refined change of measure: length mismatch");
    for (double v : values)
        if (!(v >= 0.0 && v <= bound))
            throw std::invalid_argument("refined change of measure: values must lie in [0, R]");
    const double d2 = hellinger_sq(p, q);
    double ep = 0.0, eq = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        ep += p[i] * values[i];
        eq += q[i] * values[i];
    }
    return {ep, (1.0 + 1.0 / beta) * eq + 3.0 * beta * bound * d2};
}

/// sum_t x_t / (lambda + sum_{k<t} x_k) <= 2 log(T + 1) for x_t in [0, lambda].
inline InequalityEval check_potential_bound(std::span<const double> x, double lambda) {
    if (!(lambda > 0.0)) throw std::invalid_argument("potential bound: lambda must be > 0");
    double running = lambda;
    double lhs = 0.0;
    for (double xt : x) {
        if (!(xt >= 0.0 && xt <= lambda)) throw std::invalid_argument("potential bound: x_t outside [0, lambda]");
        lhs += xt / running;
        running += xt;
    }
    return {lhs, 2.0 * std::log(static_cast<double>(x.size()) + 1.0)};
}

/// Squared L1 row distance against the Hellinger distance:
/// (sum_x |p - q|)^2 <= kappa D_H^2(p, q) with kappa = 4.
inline constexpr double kTvHellingerKappa = 4.0;

inline InequalityEval check_tv_hellinger(std::span<const double> p, std::span<const double> q,
                                         double kappa = kTvHellingerKappa) {
    const double d2 = hellinger_sq(p, q);
    double l1 = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) l1 += std::abs(p[i] - q[i]);
    return {l1 * l1, kappa * d2};
}

/// Value-difference identity as an equality check: returns |lhs - rhs| as lhs
/// and 0 as rhs, so a tolerance of 1e-9 applies directly.
inline InequalityEval check_value_difference(const LayeredMdp& m, const LayeredMdp& m2,
                                             const DeterministicPolicy& policy) {
    const double direct = policy_eval(m, policy).start() - policy_eval(m2, policy).start();
    return {std::abs(direct - value_difference_terms(m, m2, policy)), 0.0};
}

struct OracleLhs {
    double reward = 0.0;
    double dynamics = 0.0;
};

/// Exact left-hand sides of the oracle approximation bounds at round t:
///   reward:   E_c[ sum_{i<t} E_{pi_i(c), P_star^c}[ sum_h (f_t - f_star)^2(c, s_h, a_h) ] ]
///   dynamics: E_c[ sum_{i<t} E_{pi_i(c), P_star^c}[ sum_h D_H^2(P_star^c, P_t^c)(s_h, a_h) ] ]
/// where (f_t, P_t) are the round-t fits in the cache. The counterfactual
/// policies pi_i(c) are reconstructed for every context.
inline OracleLhs eval_oracle_lhs(const CmdpInstance& inst, EpisodeCache& cache, const RewardFunctionClass& fc,
                                 const DynamicsFunctionClass& pc, const Betas& betas, std::size_t t) {
    if (!fc.star_index || !pc.star_index) throw std::invalid_argument("eval_oracle_lhs: star index unset");
    if (t < 2) throw std::invalid_argument("eval_oracle_lhs: t must be >= 2");
    if (t > cache.fitted().size()) throw std::out_of_range("eval_oracle_lhs: round t has no fitted models");
    const auto fit = cache.fitted()[t - 1];
    const auto& sh = inst.shape();
    OracleLhs out;
    for (std::size_t c = 0; c < inst.context_count(); ++c) {
        const double weight = inst.context_probs()[c];
        if (weight == 0.0) continue;
        const auto& truth = inst.dynamics()[c];
        StateActionTable reward_err(sh);
        const auto& f_hat = fc.members[fit.reward_index][c];
        const auto& f_star = fc.members[*fc.star_index][c];
        for (std::size_t h = 0; h < sh.horizon; ++h) {
            auto e = reward_err.layer(h);
            const auto x = f_hat.layer(h);
            const auto y = f_star.layer(h);
            for (std::size_t i = 0; i < e.size(); ++i) e[i] = (x[i] - y[i]) * (x[i] - y[i]);
        }
        const auto dyn_err = hellinger_table(truth, pc.members[fit.dynamics_index][c]);
        const auto policies = reconstruct_policies(cache, fc, pc, betas, c, t - 1);
        double reward_sum = 0.0, dyn_sum = 0.0;
        for (const auto& policy : policies) {
            const auto occ = occupancy(truth, policy);
            reward_sum += weighted_sum(occ, reward_err);
            dyn_sum += weighted_sum(occ, dyn_err);
        }
        out.reward += weight * reward_sum;
        out.dynamics += weight * dyn_sum;
    }
    return out;
}

/// Right-hand sides 68 H log(2 T^3 |F| / delta) and 2 H log(T H |F_P| / delta).
inline OracleLhs oracle_bounds(std::size_t horizon, std::size_t episodes, std::size_t reward_class_size,
                               std::size_t dynamics_class_size, double delta) {
    const double h = static_cast<double>(horizon);
    const double t = static_cast<double>(episodes);
    return {68.0 * h * (std::log(2.0) + 3.0 * std::log(t) + std::log(static_cast<double>(reward_class_size)) -
                        std::log(delta)),
            2.0 * h * std::log(t * h * static_cast<double>(dynamics_class_size) / delta)};
}

}  // namespace uc3rl
