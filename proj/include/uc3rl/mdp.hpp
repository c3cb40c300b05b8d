#pragma once

#include "uc3rl/tables.hpp"

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace uc3rl {

/// Loop-free finite-horizon MDP with rewards in [0, r_max].
///
/// States are indexed natively per layer as (h, s). The start state is (0, 0)
/// and the terminal state is (H, 0). Construction validates row
/// stochasticity and the reward range; the object is immutable afterwards.
class LayeredMdp {
public:
    LayeredMdp(TransitionKernel transitions, StateActionTable rewards, double reward_upper_bound)
        : transitions_(std::move(transitions)),
          rewards_(std::move(rewards)),
          reward_upper_bound_(reward_upper_bound) {
        transitions_.shape().validate();
        if (!(rewards_.shape() == transitions_.shape()))
            throw std::invalid_argument("mdp: reward table and transition kernel shapes differ");
        if (!(reward_upper_bound_ >= 0.0))
            throw std::invalid_argument("mdp: reward upper bound must be >= 0");
        transitions_.validate();
        const auto& sh = shape();
        for (std::size_t h = 0; h < sh.horizon; ++h)
            for (std::size_t s = 0; s < sh.states(h); ++s)
                for (std::size_t a = 0; a < sh.action_count; ++a) {
                    const double r = rewards_(h, s, a);
                    if (!(r >= 0.0 && r <= reward_upper_bound_))
                        throw std::invalid_argument(index_path("rewards", {h, s, a}) + " = " +
                                                    std::to_string(r) + " outside [0, " +
                                                    std::to_string(reward_upper_bound_) + "]");
                }
    }

    const LayeredShape& shape() const noexcept { return transitions_.shape(); }
    std::size_t horizon() const noexcept { return shape().horizon; }
    const TransitionKernel& transitions() const noexcept { return transitions_; }
    const StateActionTable& rewards() const noexcept { return rewards_; }
    double reward_upper_bound() const noexcept { return reward_upper_bound_; }

private:
    TransitionKernel transitions_;
    StateActionTable rewards_;
    double reward_upper_bound_;
};

/// One action per layer-h state, h in [0, H).
struct DeterministicPolicy {
    std::vector<std::vector<std::size_t>> actions;

    DeterministicPolicy() = default;
    explicit DeterministicPolicy(const LayeredShape& shape, std::size_t fill = 0) {
        actions.resize(shape.horizon);
        for (std::size_t h = 0; h < shape.horizon; ++h) actions[h].assign(shape.states(h), fill);
    }

    std::size_t operator()(std::size_t h, std::size_t s) const { return actions[h][s]; }

    void check_compatible(const LayeredShape& shape) const {
        if (actions.size() != shape.horizon)
            throw std::invalid_argument("policy: expected " + std::to_string(shape.horizon) + " layers, got " +
                                        std::to_string(actions.size()));
        for (std::size_t h = 0; h < shape.horizon; ++h) {
            if (actions[h].size() != shape.states(h))
                throw std::invalid_argument(index_path("policy", {h}) + ": wrong number of states");
            for (std::size_t s = 0; s < actions[h].size(); ++s)
                if (actions[h][s] >= shape.action_count)
                    throw std::invalid_argument(index_path("policy", {h, s}) + ": action out of range");
        }
    }

    friend bool operator==(const DeterministicPolicy&, const DeterministicPolicy&) = default;
};

/// V[h][s] for h in [0, H]; the terminal layer is zero.
struct ValueTable {
    std::vector<std::vector<double>> v;

    double start() const { return v.front().front(); }
    double operator()(std::size_t h, std::size_t s) const { return v[h][s]; }
};

/// q[h][s][a]: probability of visiting (s, a) at step h.
struct OccupancyMeasure {
    StateActionTable q;

    double operator()(std::size_t h, std::size_t s, std::size_t a) const { return q(h, s, a); }
};

struct PlanResult {
    DeterministicPolicy policy;
    ValueTable values;
};

namespace detail {

inline double expected_next(const TransitionKernel& kernel, std::size_t h, std::size_t s, std::size_t a,
                            const std::vector<double>& next_values) {
    const auto row = kernel.row(h, s, a);
    double acc = 0.0;
    for (std::size_t n = 0; n < row.size(); ++n) acc += row[n] * next_values[n];
    return acc;
}

inline ValueTable zero_values(const LayeredShape& shape) {
    ValueTable out;
    out.v.resize(shape.horizon + 1);
    for (std::size_t h = 0; h <= shape.horizon; ++h) out.v[h].assign(shape.states(h), 0.0);
    return out;
}

}  // namespace detail

/// Backward induction. Ties go to the lowest action index.
inline PlanResult plan(const LayeredMdp& mdp) {
    const auto& sh = mdp.shape();
    PlanResult out{DeterministicPolicy(sh), detail::zero_values(sh)};
    for (std::size_t h = sh.horizon; h-- > 0;) {
        for (std::size_t s = 0; s < sh.states(h); ++s) {
            std::size_t best_action = 0;
            double best = -INFINITY;
            for (std::size_t a = 0; a < sh.action_count; ++a) {
                const double q = mdp.rewards()(h, s, a) +
                                 detail::expected_next(mdp.transitions(), h, s, a, out.values.v[h + 1]);
                if (q > best) {
                    best = q;
                    best_action = a;
                }
            }
            out.policy.actions[h][s] = best_action;
            out.values.v[h][s] = best;
        }
    }
    return out;
}

inline ValueTable policy_eval(const LayeredMdp& mdp, const DeterministicPolicy& policy) {
    const auto& sh = mdp.shape();
    policy.check_compatible(sh);
    auto values = detail::zero_values(sh);
    for (std::size_t h = sh.horizon; h-- > 0;)
        for (std::size_t s = 0; s < sh.states(h); ++s) {
            const std::size_t a = policy(h, s);
            values.v[h][s] =
                mdp.rewards()(h, s, a) + detail::expected_next(mdp.transitions(), h, s, a, values.v[h + 1]);
        }
    return values;
}

/// Forward DP for q_h(s, a | policy, kernel).
inline OccupancyMeasure occupancy(const TransitionKernel& kernel, const DeterministicPolicy& policy) {
    const auto& sh = kernel.shape();
    policy.check_compatible(sh);
    OccupancyMeasure out{StateActionTable(sh)};
    std::vector<double> state_mass{1.0};
    for (std::size_t h = 0; h < sh.horizon; ++h) {
        std::vector<double> next_mass(sh.states(h + 1), 0.0);
        for (std::size_t s = 0; s < sh.states(h); ++s) {
            const std::size_t a = policy(h, s);
            out.q(h, s, a) = state_mass[s];
            if (state_mass[s] == 0.0) continue;
            const auto row = kernel.row(h, s, a);
            for (std::size_t n = 0; n < row.size(); ++n) next_mass[n] += state_mass[s] * row[n];
        }
        state_mass = std::move(next_mass);
    }
    return out;
}

inline OccupancyMeasure occupancy(const LayeredMdp& mdp, const DeterministicPolicy& policy) {
    return occupancy(mdp.transitions(), policy);
}

/// sum_{h,s,a} weights(h,s,a) * values(h,s,a)
inline double weighted_sum(const OccupancyMeasure& occ, const StateActionTable& values) {
    occ.q.check_same_shape(values);
    double acc = 0.0;
    const auto& sh = values.shape();
    for (std::size_t h = 0; h < sh.horizon; ++h) {
        const auto w = occ.q.layer(h);
        const auto x = values.layer(h);
        for (std::size_t i = 0; i < w.size(); ++i) acc += w[i] * x[i];
    }
    return acc;
}

/// Right-hand side of the value-difference identity for a shared policy:
/// sum_h E_{policy, m2}[(r - r2)(s_h, a_h) + (P - P2)(.|s_h, a_h) . V^{policy}_{m, h+1}],
/// which equals V^{policy}_m(s_0) - V^{policy}_{m2}(s_0).
inline double value_difference_terms(const LayeredMdp& m, const LayeredMdp& m2, const DeterministicPolicy& policy) {
    if (!(m.shape() == m2.shape())) throw std::invalid_argument("value difference: MDP shapes differ");
    const auto& sh = m.shape();
    const auto values = policy_eval(m, policy);
    const auto occ = occupancy(m2, policy);
    double total = 0.0;
    for (std::size_t h = 0; h < sh.horizon; ++h)
        for (std::size_t s = 0; s < sh.states(h); ++s) {
            const std::size_t a = policy(h, s);
            const double weight = occ(h, s, a);
            if (weight == 0.0) continue;
            const auto p = m.transitions().row(h, s, a);
            const auto p2 = m2.transitions().row(h, s, a);
            double drift = 0.0;
            for (std::size_t n = 0; n < p.size(); ++n) drift += (p[n] - p2[n]) * values.v[h + 1][n];
            total += weight * (m.rewards()(h, s, a) - m2.rewards()(h, s, a) + drift);
        }
    return total;
}

}  // namespace uc3rl
