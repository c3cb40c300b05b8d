#pragma once

#include "uc3rl/mdp.hpp"
#include "uc3rl/rng.hpp"

#include <cstddef>
#include <vector>

namespace uc3rl {

// Random instances for the check suites: Dirichlet(1) transition rows and
// uniform rewards.

inline LayeredShape random_shape(Rng& rng, std::size_t horizon, std::size_t max_width, std::size_t max_actions) {
    LayeredShape shape;
    shape.horizon = horizon;
    shape.layer_sizes.assign(horizon + 1, 1);
    for (std::size_t h = 1; h < horizon; ++h) shape.layer_sizes[h] = 1 + rng.index(max_width);
    shape.action_count = 1 + rng.index(max_actions);
    return shape;
}

inline TransitionKernel random_kernel(const LayeredShape& shape, Rng& rng) {
    TransitionKernel kernel(shape);
    for (std::size_t h = 0; h < shape.horizon; ++h)
        for (std::size_t s = 0; s < shape.states(h); ++s)
            for (std::size_t a = 0; a < shape.action_count; ++a) {
                const auto row = rng.dirichlet_uniform(shape.states(h + 1));
                std::copy(row.begin(), row.end(), kernel.row(h, s, a).begin());
            }
    return kernel;
}

/// (1 - weight) * base + weight * other, row by row.
inline TransitionKernel mix_kernels(const TransitionKernel& base, const TransitionKernel& other, double weight) {
    TransitionKernel out = base;
    const auto& sh = base.shape();
    for (std::size_t h = 0; h < sh.horizon; ++h)
        for (std::size_t s = 0; s < sh.states(h); ++s)
            for (std::size_t a = 0; a < sh.action_count; ++a) {
                auto r = out.row(h, s, a);
                const auto o = other.row(h, s, a);
                for (std::size_t n = 0; n < r.size(); ++n) r[n] = (1.0 - weight) * r[n] + weight * o[n];
            }
    out.normalize_rows();
    return out;
}

inline StateActionTable random_rewards(const LayeredShape& shape, Rng& rng, double upper = 1.0) {
    StateActionTable table(shape);
    for (std::size_t h = 0; h < shape.horizon; ++h)
        for (auto& x : table.layer(h)) x = upper * rng.uniform();
    return table;
}

inline DeterministicPolicy random_policy(const LayeredShape& shape, Rng& rng) {
    DeterministicPolicy policy(shape);
    for (auto& layer : policy.actions)
        for (auto& a : layer) a = rng.index(shape.action_count);
    return policy;
}

inline LayeredMdp random_mdp(const LayeredShape& shape, Rng& rng, double reward_upper = 1.0) {
    return LayeredMdp(random_kernel(shape, rng), random_rewards(shape, rng, reward_upper), reward_upper);
}

}  // namespace uc3rl
