#pragma once

#include "uc3rl/cmdp.hpp"
#include "uc3rl/function_classes.hpp"
#include "uc3rl/random_models.hpp"
#include "uc3rl/rng.hpp"

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace uc3rl::harness {

enum class ContextDistribution { uniform, dirichlet };

struct GeneratorSpec {
    std::size_t contexts = 1;
    LayeredShape shape;
    std::size_t reward_class_size = 1;
    std::size_t dynamics_class_size = 1;
    double decoy_magnitude = 0.3;
    RewardNoise reward_noise = RewardNoise::bernoulli;
    ContextDistribution context_distribution = ContextDistribution::uniform;

    void validate() const {
        if (contexts < 1) throw std::invalid_argument("generator: contexts must be >= 1");
        shape.validate();
        if (reward_class_size < 1) throw std::invalid_argument("generator: reward_class_size must be >= 1");
        if (dynamics_class_size < 1) throw std::invalid_argument("generator: dynamics_class_size must be >= 1");
        if (!(decoy_magnitude > 0.0 && decoy_magnitude <= 1.0))
            throw std::invalid_argument("generator: decoy_magnitude must lie in (0, 1]");
    }
};

/// C=5, H=3, layers [1,3,3,1], A=2, |F|=8, |F_P|=4, Bernoulli rewards.
inline GeneratorSpec reference_spec() {
    GeneratorSpec spec;
    spec.contexts = 5;
    spec.shape = LayeredShape{3, {1, 3, 3, 1}, 2};
    spec.reward_class_size = 8;
    spec.dynamics_class_size = 4;
    spec.decoy_magnitude = 0.3;
    spec.reward_noise = RewardNoise::bernoulli;
    return spec;
}

inline constexpr std::uint64_t kReferenceInstanceSeed = 20240611;

struct Problem {
    CmdpInstance instance;
    RewardFunctionClass rewards;
    DynamicsFunctionClass dynamics;
};

struct GeneratedProblem {
    Problem problem;
    std::size_t planted_reward_index = 0;
    std::size_t planted_dynamics_index = 0;
};

template <class Member>
void plant_truth(std::vector<Member>& members, std::size_t position) {
    std::swap(members[0], members[position]);
}

/// Random realizable problem: Dirichlet(1) rows, uniform mean rewards, and
/// decoy classes built around the truth, which sits at a random recorded index.
inline GeneratedProblem gen_instance(const GeneratorSpec& spec, std::uint64_t seed) {
    spec.validate();
    Rng rng(seed);
    std::vector<double> probs(spec.contexts, 1.0 / static_cast<double>(spec.contexts));
    if (spec.context_distribution == ContextDistribution::dirichlet) probs = rng.dirichlet_uniform(spec.contexts);

    ContextDynamics dynamics;
    ContextRewards rewards;
    for (std::size_t c = 0; c < spec.contexts; ++c) {
        dynamics.push_back(random_kernel(spec.shape, rng));
        rewards.push_back(random_rewards(spec.shape, rng));
    }

    RewardFunctionClass fc{perturb_class(rewards, spec.reward_class_size, spec.decoy_magnitude, rng), {}};
    DynamicsFunctionClass pc{perturb_class(dynamics, spec.dynamics_class_size, spec.decoy_magnitude, rng), {}};
    const std::size_t reward_pos = rng.index(fc.size());
    const std::size_t dyn_pos = rng.index(pc.size());
    plant_truth(fc.members, reward_pos);
    plant_truth(pc.members, dyn_pos);

    CmdpInstance inst(std::move(probs), std::move(dynamics), std::move(rewards), spec.reward_noise);
    const auto report = validate_realizability(fc, pc, inst);
    if (!report.realizable() || *report.reward_star != reward_pos || *report.dynamics_star != dyn_pos)
        throw std::logic_error("generator: planted truth not recovered by the realizability check");
    return {Problem{std::move(inst), std::move(fc), std::move(pc)}, reward_pos, dyn_pos};
}

}  // namespace uc3rl::harness
