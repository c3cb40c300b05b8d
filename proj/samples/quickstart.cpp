// Generates the reference problem, runs the algorithm and the uniform-random
// baseline for a few hundred episodes, and prints cumulative regret.

#include "uc3rl/harness/experiment.hpp"
#include "uc3rl/harness/generator.hpp"

#include <cstdio>

int main() {
    using namespace uc3rl::harness;
    const auto problem = gen_instance(reference_spec(), kReferenceInstanceSeed).problem;

    uc3rl::AlgoParams params;
    params.episodes = 500;
    params.delta = 0.1;

    for (auto algorithm : {Algorithm::uc3rl, Algorithm::greedy_no_bonus, Algorithm::random_baseline}) {
        const auto rec = run_seed(problem, algorithm, params, 1);
        std::printf("%-16s", to_string(algorithm).c_str());
        for (std::size_t t : checkpoints(params.episodes)) std::printf("  R(%zu) = %8.2f", t, rec.cumulative_at(t));
        std::printf("\n");
    }
}
