#include "support/brute_force.hpp"
#include "uc3rl/algorithm.hpp"
#include "uc3rl/harness/generator.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace uc3rl;
using uc3rl::harness::gen_instance;
using uc3rl::harness::GeneratorSpec;
using uc3rl::harness::Problem;

namespace {

const LayeredShape kShape{3, {1, 3, 3, 1}, 2};

GeneratorSpec spec_with(std::size_t contexts, std::size_t f, std::size_t fp,
                        RewardNoise noise = RewardNoise::bernoulli) {
    GeneratorSpec spec;
    spec.contexts = contexts;
    spec.shape = kShape;
    spec.reward_class_size = f;
    spec.dynamics_class_size = fp;
    spec.reward_noise = noise;
    return spec;
}

struct Runner {
    Problem problem;
    Betas betas;
    EpisodeCache cache;
    Rng rng;

    Runner(Problem p, Betas b, std::uint64_t seed)
        : problem(std::move(p)),
          betas(b),
          cache(problem.instance.shape(), problem.instance.context_count(), problem.rewards.size(),
                problem.dynamics.size()),
          rng(seed) {}

    EpisodeResult step() { return uc3rl_episode(problem.instance, problem.rewards, problem.dynamics, betas, cache, rng); }
};

}  // namespace

TEST(Betas, FrozenRegressionValues) {
    // Direct high-precision evaluation of both formulas at
    // T=1000, H=3, |S|=8, |A|=2, |F|=8, |F_P|=4, delta=0.1.
    const auto b = compute_betas(1000, 0.1, kShape, 8, 4);
    EXPECT_NEAR(b.reward, 601.611210892645, 1e-9);
    EXPECT_NEAR(b.dynamics, 404.400781227228, 1e-9);
}

TEST(Betas, ScaleLikeSquareRootOfT) {
    for (std::size_t t : {1000u, 100000u, 10000000u}) {
        const double ratio = compute_betas(4 * t, 0.1, kShape, 8, 4).reward / compute_betas(t, 0.1, kShape, 8, 4).reward;
        EXPECT_GT(ratio, 1.9);
        EXPECT_LT(ratio, 2.1);
    }
}

TEST(Betas, PositiveAndValidated) {
    const auto b = compute_betas(2, 0.999, LayeredShape{1, {1, 1}, 1}, 1, 1);
    EXPECT_GT(b.reward, 0.0);
    EXPECT_GT(b.dynamics, 0.0);
    EXPECT_THROW(compute_betas(1, 0.1, kShape, 8, 4), std::invalid_argument);
    EXPECT_THROW(compute_betas(10, 1.0, kShape, 8, 4), std::invalid_argument);
    EXPECT_THROW(compute_betas(10, 0.1, kShape, 0, 4), std::invalid_argument);
}

TEST(Betas, ExplicitOverridesWin) {
    AlgoParams params{1000, 0.1, 2.5, std::nullopt};
    const auto b = resolve_betas(params, kShape, 8, 4);
    EXPECT_EQ(b.reward, 2.5);
    EXPECT_NEAR(b.dynamics, 404.400781227228, 1e-9);
    params.beta_p = -1.0;
    EXPECT_THROW(resolve_betas(params, kShape, 8, 4), std::invalid_argument);
}

TEST(Bonuses, EmptyMassAndClampBoundary) {
    const StateActionTable zero(kShape);
    auto b = bonuses(1.5, 0.4, 3, zero);
    EXPECT_DOUBLE_EQ(b.reward(0, 0, 0), 0.75);
    EXPECT_DOUBLE_EQ(b.dynamics(1, 2, 1), 0.6);
    b = bonuses(100.0, 100.0, 3, zero);
    EXPECT_EQ(b.reward(2, 1, 0), 1.0);
    EXPECT_EQ(b.dynamics(2, 1, 0), 3.0);

    const double beta = 9.0;
    const StateActionTable boundary(kShape, beta / 2.0 - 1.0);
    EXPECT_EQ(bonuses(beta, beta, 3, boundary).reward(1, 1, 1), 1.0);
    const StateActionTable beyond(kShape, beta / 2.0 - 0.5);
    EXPECT_LT(bonuses(beta, beta, 3, beyond).reward(1, 1, 1), 1.0);
}

TEST(Bonuses, QuarterAtMassThree) {
    const StateActionTable mass(kShape, 3.0);
    EXPECT_DOUBLE_EQ(bonuses(2.0, 2.0, 3, mass).reward(0, 0, 1), 0.25);
}

TEST(Bonuses, NonIncreasingInMass) {
    Rng rng(1);
    for (int i = 0; i < 200; ++i) {
        const double br = rng.uniform(0.0, 50.0), bp = rng.uniform(0.0, 50.0);
        StateActionTable lo(kShape), hi(kShape);
        for (std::size_t h = 0; h < 3; ++h) {
            auto x = lo.layer(h);
            auto y = hi.layer(h);
            for (std::size_t j = 0; j < x.size(); ++j) {
                x[j] = rng.uniform(0.0, 100.0);
                y[j] = x[j] + rng.uniform(0.0, 100.0);
            }
        }
        const auto a = bonuses(br, bp, 3, lo), b = bonuses(br, bp, 3, hi);
        for (std::size_t h = 0; h < 3; ++h)
            for (std::size_t j = 0; j < a.reward.layer(h).size(); ++j) {
                EXPECT_LE(b.reward.layer(h)[j], a.reward.layer(h)[j]);
                EXPECT_LE(b.dynamics.layer(h)[j], a.dynamics.layer(h)[j]);
                EXPECT_GE(b.reward.layer(h)[j], 0.0);
                EXPECT_LE(a.dynamics.layer(h)[j], 3.0);
            }
    }
    EXPECT_THROW(bonuses(1.0, 1.0, 3, StateActionTable(kShape, -0.5)), std::invalid_argument);
}

TEST(OptimisticMdp, RewardsAreFittedPlusBonuses) {
    Rng rng(2);
    const auto kernel = random_kernel(kShape, rng);
    const StateActionTable fhat(kShape, 0.5);
    const Bonuses zero{StateActionTable(kShape), StateActionTable(kShape)};
    EXPECT_EQ(build_optimistic_mdp(fhat, kernel, zero).rewards(), fhat);

    const Bonuses full{StateActionTable(kShape, 1.0), StateActionTable(kShape, 3.0)};
    const auto m = build_optimistic_mdp(fhat, kernel, full);
    EXPECT_EQ(m.reward_upper_bound(), 5.0);
    for (std::size_t h = 0; h < 3; ++h)
        for (double r : m.rewards().layer(h)) EXPECT_DOUBLE_EQ(r, 4.5);
    EXPECT_EQ(m.transitions(), kernel);

    const LayeredShape other{2, {1, 2, 1}, 2};
    EXPECT_THROW(build_optimistic_mdp(StateActionTable(other), kernel, zero), std::invalid_argument);
}

TEST(Reconstruct, FirstRoundPlansOnEmptyHistoryBonuses) {
    auto problem = gen_instance(spec_with(2, 4, 2), 3).problem;
    const Betas betas{3.0, 2.0};
    EpisodeCache cache(kShape, 2, problem.rewards.size(), problem.dynamics.size());
    EXPECT_THROW(reconstruct_policies(cache, problem.rewards, problem.dynamics, betas, 0, 1), std::out_of_range);
    cache.record_fit({1, 1});
    const auto policies = reconstruct_policies(cache, problem.rewards, problem.dynamics, betas, 1, 1);
    ASSERT_EQ(policies.size(), 1u);
    const auto expected = plan(build_optimistic_mdp(problem.rewards.members[1][1], problem.dynamics.members[1][1],
                                                    bonuses(3.0, 2.0, 3, StateActionTable(kShape))));
    EXPECT_EQ(policies[0], expected.policy);
}

TEST(Reconstruct, SingleContextPlansOncePerRound) {
    Runner run(gen_instance(spec_with(1, 4, 2), 4).problem, {20.0, 10.0}, 5);
    for (std::size_t t = 1; t <= 60; ++t) {
        run.step();
        EXPECT_EQ(run.cache.planning_calls(), t);
        EXPECT_EQ(run.cache.memoized_policies(0).size(), t);
    }
}

TEST(Reconstruct, ClearedMemoRebuildsIdenticalPolicies) {
    Runner run(gen_instance(spec_with(3, 4, 3), 6).problem, {30.0, 15.0}, 7);
    for (int t = 0; t < 80; ++t) run.step();
    std::vector<std::vector<DeterministicPolicy>> before;
    for (std::size_t c = 0; c < 3; ++c) {
        const auto p = reconstruct_policies(run.cache, run.problem.rewards, run.problem.dynamics, run.betas, c, 80);
        before.emplace_back(p.begin(), p.end());
    }
    run.cache.clear_memo();
    // Reconstruct in a different context order and with a detour to a shorter prefix.
    for (std::size_t c : {2u, 0u, 1u}) {
        reconstruct_policies(run.cache, run.problem.rewards, run.problem.dynamics, run.betas, c, 17);
        const auto p = reconstruct_policies(run.cache, run.problem.rewards, run.problem.dynamics, run.betas, c, 80);
        EXPECT_TRUE(std::equal(p.begin(), p.end(), before[c].begin(), before[c].end())) << "context " << c;
    }
}

TEST(Reconstruct, MassMatchesDirectSum) {
    Runner run(gen_instance(spec_with(2, 4, 4), 8).problem, {30.0, 15.0}, 9);
    for (int t = 0; t < 50; ++t) run.step();
    for (std::size_t c = 0; c < 2; ++c) {
        const auto policies = reconstruct_policies(run.cache, run.problem.rewards, run.problem.dynamics, run.betas, c, 50);
        for (std::size_t k : {1u, 7u, 50u}) {
            const auto& kernel = run.problem.dynamics.members[run.cache.fitted()[k - 1].dynamics_index][c];
            StateActionTable direct(kShape);
            for (std::size_t i = 0; i + 1 < k; ++i) direct += uc3rl::testing::path_occupancy(kernel, policies[i]);
            const auto mass = counterfactual_mass(run.cache, run.problem.dynamics, c, k);
            for (std::size_t h = 0; h < 3; ++h)
                for (std::size_t j = 0; j < mass.layer(h).size(); ++j)
                    EXPECT_NEAR(mass.layer(h)[j], direct.layer(h)[j], 1e-9);
        }
    }
}

TEST(Episode, CacheInvariantsEveryRound) {
    Runner run(gen_instance(spec_with(3, 8, 4), 10).problem, {40.0, 20.0}, 11);
    for (std::size_t t = 1; t <= 100; ++t) {
        const auto out = run.step();
        EXPECT_EQ(out.record.t, t);
        EXPECT_EQ(run.cache.fitted().size(), t);
        EXPECT_EQ(run.cache.history().size(), t);
        EXPECT_EQ(run.cache.memoized_policies(out.record.context).size(), t);
        EXPECT_GE(out.record.vstar - out.record.vplayed, -1e-12);
        EXPECT_GE(out.record.potential, 0.0);
        EXPECT_LE(out.record.potential, static_cast<double>(kShape.horizon) + 1e-12);
        const auto fit = run.cache.fitted().back();
        HistoryDataset prefix(kShape);
        for (std::size_t i = 0; i + 1 < t; ++i) prefix.append(run.cache.history().episodes()[i]);
        EXPECT_EQ(fit.reward_index, lsr_fit(prefix, run.problem.rewards));
        EXPECT_EQ(fit.dynamics_index, llr_fit(prefix, run.problem.dynamics));
    }
}

TEST(Episode, FirstRoundOnDeterministicInstance) {
    GeneratorSpec spec = spec_with(1, 1, 1, RewardNoise::deterministic);
    auto problem = gen_instance(spec, 12).problem;
    ContextDynamics chain{uc3rl::testing::point_mass_chain(kShape)};
    CmdpInstance inst(problem.instance.context_probs(), chain, problem.instance.mean_rewards(),
                      RewardNoise::deterministic);
    RewardFunctionClass fc{{inst.mean_rewards()}, 0};
    DynamicsFunctionClass pc{{inst.dynamics()}, 0};
    const Betas betas{4.0, 4.0};
    EpisodeCache cache(kShape, 1, 1, 1);
    Rng rng(13);
    const auto out = uc3rl_episode(inst, fc, pc, betas, cache, rng);
    const auto expected =
        plan(build_optimistic_mdp(inst.mean_rewards()[0], chain[0], bonuses(4.0, 4.0, 3, StateActionTable(kShape))));
    std::size_t s = 0;
    for (std::size_t h = 0; h < 3; ++h) {
        EXPECT_EQ(out.trajectory.steps[h].state, s);
        EXPECT_EQ(out.trajectory.steps[h].action, expected.policy(h, s));
        EXPECT_EQ(out.trajectory.steps[h].reward, inst.mean_rewards()[0](h, s, expected.policy(h, s)));
        s = (s + expected.policy(h, s)) % kShape.states(h + 1);
    }
}

TEST(Episode, KnownModelRegretFlattens) {
    // Truth-only classes with moderate bonuses: per-episode regret over the
    // last tenth must be far below the first tenth.
    Runner run(gen_instance(spec_with(3, 1, 1), 14).problem, {2.0, 2.0}, 15);
    constexpr std::size_t episodes = 3000;
    double first = 0.0, last = 0.0;
    for (std::size_t t = 1; t <= episodes; ++t) {
        const auto r = run.step().record;
        if (t <= episodes / 10) first += r.vstar - r.vplayed;
        if (t > episodes - episodes / 10) last += r.vstar - r.vplayed;
    }
    first /= episodes / 10;
    last /= episodes / 10;
    EXPECT_LT(last, 0.05 * 3.0);
    EXPECT_LT(last, 0.5 * first);
}

TEST(Episode, SameSeedSameRun) {
    auto problem = gen_instance(spec_with(3, 8, 4), 16).problem;
    Runner a(problem, {50.0, 50.0}, 17), b(problem, {50.0, 50.0}, 17);
    for (int t = 0; t < 60; ++t) {
        const auto x = a.step(), y = b.step();
        ASSERT_EQ(x.trajectory, y.trajectory);
        ASSERT_EQ(x.record.vplayed, y.record.vplayed);
        ASSERT_EQ(x.record.potential, y.record.potential);
    }
}
