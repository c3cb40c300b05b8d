#pragma once

#include "uc3rl/cmdp.hpp"
#include "uc3rl/function_classes.hpp"
#include "uc3rl/mdp.hpp"
#include "uc3rl/oracles.hpp"
#include "uc3rl/rng.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace uc3rl {

/// Run parameters. Unset betas mean "use the theoretical formulas".
struct AlgoParams {
    std::size_t episodes = 1;
    double delta = 0.1;
    std::optional<double> beta_r;
    std::optional<double> beta_p;

    void validate() const {
        if (episodes < 1) throw std::invalid_argument("params: T must be >= 1");
        if (!(delta > 0.0 && delta < 1.0)) throw std::invalid_argument("params: delta must lie in (0, 1)");
        if (beta_r && !(*beta_r > 0.0)) throw std::invalid_argument("params: beta_r must be > 0");
        if (beta_p && !(*beta_p > 0.0)) throw std::invalid_argument("params: beta_p must be > 0");
    }
};

struct Betas {
    double reward = 0.0;
    double dynamics = 0.0;
};

/// beta_r = H sqrt(112 T log(18 T^4 H |F| |F_P| / delta^2) / (|S| |A| log(T+1)))
/// beta_P = H sqrt(157 T log(3 T H |F_P| / delta) / (|S| |A| log(T+1)))
/// with |S| the total number of states over all layers.
inline Betas compute_betas(std::size_t episodes, double delta, const LayeredShape& shape, std::size_t reward_class_size,
                           std::size_t dynamics_class_size) {
    if (episodes <= 1) throw std::invalid_argument("compute_betas: T must be > 1");
    if (!(delta > 0.0 && delta < 1.0)) throw std::invalid_argument("compute_betas: delta must lie in (0, 1)");
    if (reward_class_size < 1 || dynamics_class_size < 1 || shape.horizon < 1 || shape.action_count < 1 ||
        shape.total_states() < 1)
        throw std::invalid_argument("compute_betas: all sizes must be >= 1");
    const double t = static_cast<double>(episodes);
    const double h = static_cast<double>(shape.horizon);
    const double f = static_cast<double>(reward_class_size);
    const double fp = static_cast<double>(dynamics_class_size);
    const double denom = static_cast<double>(shape.total_states()) * static_cast<double>(shape.action_count) *
                         std::log(t + 1.0);
    const double log_r = std::log(18.0) + 4.0 * std::log(t) + std::log(h) + std::log(f) + std::log(fp) -
                         2.0 * std::log(delta);
    const double log_p = std::log(3.0 * t * h * fp / delta);
    return {h * std::sqrt(112.0 * t * log_r / denom), h * std::sqrt(157.0 * t * log_p / denom)};
}

/// Explicit overrides win; the rest come from compute_betas.
inline Betas resolve_betas(const AlgoParams& params, const LayeredShape& shape, std::size_t reward_class_size,
                           std::size_t dynamics_class_size) {
    params.validate();
    if (params.beta_r && params.beta_p) return {*params.beta_r, *params.beta_p};
    const auto formula = compute_betas(params.episodes, params.delta, shape, reward_class_size, dynamics_class_size);
    return {params.beta_r.value_or(formula.reward), params.beta_p.value_or(formula.dynamics)};
}

struct Bonuses {
    StateActionTable reward;
    StateActionTable dynamics;
};

/// b^R = min{1, (beta_r / 2) / (1 + n)}, b^P = min{H, (beta_P H / 2) / (1 + n)}.
inline Bonuses bonuses(double beta_r, double beta_p, std::size_t horizon, const StateActionTable& mass) {
    if (!(beta_r >= 0.0) || !(beta_p >= 0.0)) throw std::invalid_argument("bonuses: betas must be >= 0");
    const double hd = static_cast<double>(horizon);
    Bonuses out{StateActionTable(mass.shape()), StateActionTable(mass.shape())};
    for (std::size_t h = 0; h < mass.shape().horizon; ++h) {
        const auto n = mass.layer(h);
        auto br = out.reward.layer(h);
        auto bp = out.dynamics.layer(h);
        for (std::size_t i = 0; i < n.size(); ++i) {
            if (!(n[i] >= 0.0)) throw std::invalid_argument(index_path("bonuses: negative mass at layer", {h}));
            br[i] = std::min(1.0, (beta_r / 2.0) / (1.0 + n[i]));
            bp[i] = std::min(hd, (beta_p * hd / 2.0) / (1.0 + n[i]));
        }
    }
    return out;
}

/// M_hat(c) = (P_hat^c, f_hat(c) + b^R + b^P) with r_max = H + 2.
inline LayeredMdp build_optimistic_mdp(const StateActionTable& fitted_rewards, const TransitionKernel& fitted_dynamics,
                                       const Bonuses& bonus) {
    fitted_rewards.check_same_shape(bonus.reward);
    fitted_rewards.check_same_shape(bonus.dynamics);
    if (!(fitted_rewards.shape() == fitted_dynamics.shape()))
        throw std::invalid_argument("optimistic mdp: reward and dynamics shapes differ");
    StateActionTable rewards = fitted_rewards;
    rewards += bonus.reward;
    rewards += bonus.dynamics;
    return LayeredMdp(fitted_dynamics, std::move(rewards), static_cast<double>(fitted_rewards.shape().horizon) + 2.0);
}

struct FittedModels {
    std::size_t reward_index = 0;
    std::size_t dynamics_index = 0;

    friend bool operator==(const FittedModels&, const FittedModels&) = default;
};

/// Algorithm state across rounds: the fitted oracle outputs of every round,
/// the history, running oracle losses, and memoized reconstructions.
///
/// Reconstructed policies pi_k(c; .) are stored per context for k = 1..K_c.
/// Counterfactual mass sum_{i<k} q(pi_i(c), P_j^c) is kept as a running sum
/// per (context, dynamics member j) and extended in increasing i, so any
/// reconstruction path performs the same additions in the same order.
class EpisodeCache {
public:
    EpisodeCache(const LayeredShape& shape, std::size_t contexts, std::size_t reward_class_size,
                 std::size_t dynamics_class_size)
        : shape_(shape),
          history_(shape),
          oracles_(reward_class_size, dynamics_class_size),
          policies_(contexts) {}

    /// Number of completed fits (rounds started).
    std::size_t round() const noexcept { return fitted_.size(); }
    const LayeredShape& shape() const noexcept { return shape_; }
    std::size_t context_count() const noexcept { return policies_.size(); }
    const std::vector<FittedModels>& fitted() const noexcept { return fitted_; }
    const HistoryDataset& history() const noexcept { return history_; }
    const IncrementalOracles& oracles() const noexcept { return oracles_; }

    void record_fit(FittedModels fit) { fitted_.push_back(fit); }

    void record_episode(Trajectory tr, const RewardFunctionClass& fc, const DynamicsFunctionClass& pc) {
        oracles_.observe(tr, fc, pc);
        history_.append(std::move(tr));
    }

    /// Memoized pi_1(c)..pi_K(c).
    const std::vector<DeterministicPolicy>& memoized_policies(std::size_t c) const { return policies_.at(c); }

    std::size_t planning_calls() const noexcept { return planning_calls_; }

    void clear_memo() {
        for (auto& p : policies_) p.clear();
        mass_.clear();
    }

private:
    struct MassAccumulator {
        std::size_t policies = 0;
        StateActionTable mass;
    };

    friend StateActionTable counterfactual_mass(EpisodeCache&, const DynamicsFunctionClass&, std::size_t, std::size_t);
    friend std::span<const DeterministicPolicy> reconstruct_policies(EpisodeCache&, const RewardFunctionClass&,
                                                                     const DynamicsFunctionClass&, const Betas&,
                                                                     std::size_t, std::size_t);

    LayeredShape shape_;
    std::vector<FittedModels> fitted_;
    HistoryDataset history_;
    IncrementalOracles oracles_;
    std::vector<std::vector<DeterministicPolicy>> policies_;
    std::map<std::pair<std::size_t, std::size_t>, MassAccumulator> mass_;
    std::size_t planning_calls_ = 0;
};

/// n_k(c) = sum_{i<k} q(., . | pi_i(c), P_hat_k^c). Requires pi_1(c)..pi_{k-1}(c) memoized.
inline StateActionTable counterfactual_mass(EpisodeCache& cache, const DynamicsFunctionClass& pc, std::size_t c,
                                            std::size_t k) {
    if (k < 1 || k > cache.fitted_.size())
        throw std::out_of_range("counterfactual_mass: no fitted models for round " + std::to_string(k));
    const auto& policies = cache.policies_.at(c);
    if (policies.size() < k - 1)
        throw std::logic_error("counterfactual_mass: earlier policies for this context are not reconstructed");
    const std::size_t j = cache.fitted_[k - 1].dynamics_index;
    const auto& kernel = pc.members.at(j).at(c);

    auto [it, inserted] = cache.mass_.try_emplace({c, j});
    auto& acc = it->second;
    if (inserted) acc.mass = StateActionTable(cache.shape_);
    if (acc.policies > k - 1) {
        StateActionTable fresh(cache.shape_);
        for (std::size_t i = 0; i + 1 < k; ++i) fresh += occupancy(kernel, policies[i]).q;
        return fresh;
    }
    for (; acc.policies + 1 < k; ++acc.policies) acc.mass += occupancy(kernel, policies[acc.policies]).q;
    return acc.mass;
}

/// pi_1(c)..pi_t(c), computing and memoizing any rounds not yet reconstructed
/// for context c. Round k plans on M_hat_k(c) built from the round-k fits and
/// the counterfactual mass of pi_1(c)..pi_{k-1}(c) under P_hat_k^c.
inline std::span<const DeterministicPolicy> reconstruct_policies(EpisodeCache& cache, const RewardFunctionClass& fc,
                                                                 const DynamicsFunctionClass& pc, const Betas& betas,
                                                                 std::size_t c, std::size_t t) {
    if (t > cache.fitted_.size())
        throw std::out_of_range("reconstruct_policies: round " + std::to_string(t) + " has no fitted models");
    auto& policies = cache.policies_.at(c);
    while (policies.size() < t) {
        const std::size_t k = policies.size() + 1;
        const auto fit = cache.fitted_[k - 1];
        const auto mass = counterfactual_mass(cache, pc, c, k);
        const auto bonus = bonuses(betas.reward, betas.dynamics, cache.shape_.horizon, mass);
        const auto optimistic =
            build_optimistic_mdp(fc.members.at(fit.reward_index).at(c), pc.members.at(fit.dynamics_index).at(c), bonus);
        policies.push_back(plan(optimistic).policy);
        ++cache.planning_calls_;
    }
    return std::span<const DeterministicPolicy>(policies).first(t);
}

/// Realized contextual potential of round t at context c:
/// sum_{h,s,a} q(s,a | pi_t(c), P_hat_t^c) / (1 + n_t(c)(s,a)).
inline double realized_potential(EpisodeCache& cache, const RewardFunctionClass& fc, const DynamicsFunctionClass& pc,
                                 const Betas& betas, std::size_t c, std::size_t t) {
    const auto policies = reconstruct_policies(cache, fc, pc, betas, c, t);
    const auto mass = counterfactual_mass(cache, pc, c, t);
    const auto& kernel = pc.members.at(cache.fitted()[t - 1].dynamics_index).at(c);
    const auto occ = occupancy(kernel, policies[t - 1]);
    double total = 0.0;
    for (std::size_t h = 0; h < cache.shape().horizon; ++h) {
        const auto q = occ.q.layer(h);
        const auto n = mass.layer(h);
        for (std::size_t i = 0; i < q.size(); ++i) total += q[i] / (1.0 + n[i]);
    }
    return total;
}

struct EpisodeRecord {
    std::size_t t = 0;
    std::size_t context = 0;
    double vstar = 0.0;
    double vplayed = 0.0;
    double realized_return = 0.0;
    double potential = 0.0;
};

struct EpisodeResult {
    Trajectory trajectory;
    EpisodeRecord record;
};

/// One round of the algorithm: refit both oracles on the history, draw a
/// context, reconstruct and play pi_t(c_t), and log the exact pseudo-regret.
inline EpisodeResult uc3rl_episode(const CmdpInstance& inst, const RewardFunctionClass& fc,
                                   const DynamicsFunctionClass& pc, const Betas& betas, EpisodeCache& cache, Rng& rng) {
    const std::size_t t = cache.round() + 1;
    cache.record_fit({cache.oracles().fit_rewards(), cache.oracles().fit_dynamics()});
    const std::size_t c = sample_context(inst, rng);
    const auto policies = reconstruct_policies(cache, fc, pc, betas, c, t);
    const DeterministicPolicy& played = policies[t - 1];
    const double potential = realized_potential(cache, fc, pc, betas, c, t);

    EpisodeResult out;
    out.trajectory = sample_trajectory(inst, c, played, rng);
    const auto regret = pseudo_regret_step(inst, c, played);
    out.record = {t, c, regret.vstar, regret.vplayed, out.trajectory.realized_return(), potential};
    cache.record_episode(out.trajectory, fc, pc);
    return out;
}

}  // namespace uc3rl
