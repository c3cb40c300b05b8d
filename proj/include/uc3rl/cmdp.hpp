#pragma once

#include "uc3rl/mdp.hpp"
#include "uc3rl/rng.hpp"

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace uc3rl {

enum class RewardNoise { bernoulli, deterministic };

inline std::string_view to_string(RewardNoise noise) {
    return noise == RewardNoise::bernoulli ? "bernoulli" : "deterministic";
}

inline RewardNoise parse_reward_noise(std::string_view text) {
    if (text == "bernoulli") return RewardNoise::bernoulli;
    if (text == "deterministic") return RewardNoise::deterministic;
    throw std::invalid_argument("reward_noise: expected 'bernoulli' or 'deterministic', got '" + std::string(text) +
                                "'");
}

/// Per-context tables: index [c].
using ContextRewards = std::vector<StateActionTable>;
using ContextDynamics = std::vector<TransitionKernel>;

/// Ground-truth contextual MDP over integer context ids.
class CmdpInstance {
public:
    CmdpInstance(std::vector<double> context_probs, ContextDynamics dynamics, ContextRewards mean_rewards,
                 RewardNoise noise = RewardNoise::bernoulli)
        : context_probs_(std::move(context_probs)),
          dynamics_(std::move(dynamics)),
          mean_rewards_(std::move(mean_rewards)),
          noise_(noise) {
        if (context_probs_.empty()) throw std::invalid_argument("instance: at least one context required");
        if (dynamics_.size() != context_probs_.size() || mean_rewards_.size() != context_probs_.size())
            throw std::invalid_argument("instance: dynamics/mean_rewards must have one entry per context");
        double total = 0.0;
        for (std::size_t c = 0; c < context_probs_.size(); ++c) {
            if (!(context_probs_[c] >= 0.0))
                throw std::invalid_argument(index_path("context_probs", {c}) + " must be >= 0");
            total += context_probs_[c];
        }
        if (std::abs(total - 1.0) > 1e-12)
            throw std::invalid_argument("context_probs: sums to " + std::to_string(total) + ", expected 1");
        const auto& sh = dynamics_.front().shape();
        mdps_.reserve(context_probs_.size());
        optimal_.reserve(context_probs_.size());
        for (std::size_t c = 0; c < context_probs_.size(); ++c) {
            if (!(dynamics_[c].shape() == sh) || !(mean_rewards_[c].shape() == sh))
                throw std::invalid_argument(index_path("instance: context", {c}) + " has a different shape");
            dynamics_[c].validate(index_path("dynamics", {c}));
            try {
                mdps_.emplace_back(dynamics_[c], mean_rewards_[c], 1.0);
            } catch (const std::invalid_argument& e) {
                throw std::invalid_argument(index_path("mean_rewards", {c}) + ": " + e.what());
            }
            optimal_.push_back(plan(mdps_.back()));
        }
    }

    std::size_t context_count() const noexcept { return context_probs_.size(); }
    const LayeredShape& shape() const noexcept { return dynamics_.front().shape(); }
    const std::vector<double>& context_probs() const noexcept { return context_probs_; }
    const ContextDynamics& dynamics() const noexcept { return dynamics_; }
    const ContextRewards& mean_rewards() const noexcept { return mean_rewards_; }
    RewardNoise reward_noise() const noexcept { return noise_; }

    /// True MDP M(c) with r_max = 1.
    const LayeredMdp& mdp(std::size_t c) const { return mdps_.at(c); }
    const PlanResult& optimal(std::size_t c) const { return optimal_.at(c); }

private:
    std::vector<double> context_probs_;
    ContextDynamics dynamics_;
    ContextRewards mean_rewards_;
    RewardNoise noise_;
    std::vector<LayeredMdp> mdps_;
    std::vector<PlanResult> optimal_;
};

struct Step {
    std::size_t state = 0;
    std::size_t action = 0;
    double reward = 0.0;

    friend bool operator==(const Step&, const Step&) = default;
};

/// One episode: steps[h] = (s_h, a_h, r_h); s_{h+1} is steps[h+1].state, or
/// terminal_state for h = H-1.
struct Trajectory {
    std::size_t context = 0;
    std::vector<Step> steps;
    std::size_t terminal_state = 0;

    std::size_t next_state(std::size_t h) const {
        return h + 1 < steps.size() ? steps[h + 1].state : terminal_state;
    }

    double realized_return() const {
        double total = 0.0;
        for (const auto& s : steps) total += s.reward;
        return total;
    }

    friend bool operator==(const Trajectory&, const Trajectory&) = default;
};

inline std::size_t sample_context(const CmdpInstance& inst, Rng& rng) {
    return sample_categorical(inst.context_probs(), rng);
}

/// Draw order per step is fixed: reward first (Bernoulli only), then the next state.
inline Trajectory sample_trajectory(const CmdpInstance& inst, std::size_t c, const DeterministicPolicy& policy,
                                    Rng& rng) {
    const auto& sh = inst.shape();
    policy.check_compatible(sh);
    const auto& kernel = inst.dynamics().at(c);
    const auto& means = inst.mean_rewards()[c];
    Trajectory out;
    out.context = c;
    out.steps.reserve(sh.horizon);
    std::size_t s = 0;
    for (std::size_t h = 0; h < sh.horizon; ++h) {
        const std::size_t a = policy(h, s);
        const double mean = means(h, s, a);
        double r = mean;
        if (inst.reward_noise() == RewardNoise::bernoulli) r = rng.bernoulli(mean) ? 1.0 : 0.0;
        out.steps.push_back({s, a, r});
        s = sample_categorical(kernel.row(h, s, a), rng);
    }
    out.terminal_state = s;
    return out;
}

struct RegretStep {
    double vstar = 0.0;
    double vplayed = 0.0;

    double regret() const { return vstar - vplayed; }
};

/// Exact per-episode pseudo-regret against the true M(c).
inline RegretStep pseudo_regret_step(const CmdpInstance& inst, std::size_t c, const DeterministicPolicy& played) {
    return {inst.optimal(c).values.start(), policy_eval(inst.mdp(c), played).start()};
}

}  // namespace uc3rl
