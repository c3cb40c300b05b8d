#pragma once

#include "uc3rl/algorithm.hpp"
#include "uc3rl/cmdp.hpp"
#include "uc3rl/harness/generator.hpp"
#include "uc3rl/harness/instance_io.hpp"
#include "uc3rl/random_models.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <optional>
#include <string>
#include <thread>
#include <vector>

namespace uc3rl::harness {

enum class Algorithm { uc3rl, random_baseline, greedy_no_bonus, oracle_optimal };

inline std::string to_string(Algorithm a) {
    switch (a) {
        case Algorithm::uc3rl: return "uc3rl";
        case Algorithm::random_baseline: return "random_baseline";
        case Algorithm::greedy_no_bonus: return "greedy_no_bonus";
        case Algorithm::oracle_optimal: return "oracle_optimal";
    }
    return "unknown";
}

inline Algorithm parse_algorithm(const std::string& name) {
    for (auto a : {Algorithm::uc3rl, Algorithm::random_baseline, Algorithm::greedy_no_bonus, Algorithm::oracle_optimal})
        if (to_string(a) == name) return a;
    throw ConfigError("algorithm: unknown value '" + name + "'");
}

struct ExperimentConfig {
    std::optional<std::string> instance_path;
    std::optional<GeneratorSpec> generator;
    std::uint64_t generator_seed = kReferenceInstanceSeed;
    Algorithm algorithm = Algorithm::uc3rl;
    AlgoParams params;
    std::vector<std::uint64_t> seeds;
    std::string output_dir = ".";
    /// Worker threads for independent seeds; 0 picks the hardware concurrency.
    unsigned jobs = 0;

    void validate() const {
        if (!instance_path && !generator) throw ConfigError("config: one of 'instance' or 'generator' is required");
        if (seeds.empty()) throw ConfigError("config: 'seeds' must be nonempty");
        try {
            params.validate();
        } catch (const std::invalid_argument& e) {
            throw ConfigError(std::string("config: ") + e.what());
        }
    }
};

inline ExperimentConfig config_from_json(const json& j) {
    ExperimentConfig cfg;
    if (!j.is_object()) throw ConfigError("config: expected a JSON object");
    try {
        if (j.contains("instance")) cfg.instance_path = j.at("instance").get<std::string>();
        if (j.contains("generator")) cfg.generator = generator_spec_from_json(j.at("generator"));
        cfg.generator_seed = j.value("generator_seed", cfg.generator_seed);
        cfg.algorithm = parse_algorithm(j.value("algorithm", std::string("uc3rl")));
        cfg.params.episodes = io_detail::require(j, "T", "config").get<std::size_t>();
        cfg.params.delta = j.value("delta", cfg.params.delta);
        for (const char* key : {"beta_r", "beta_p"}) {
            if (!j.contains(key)) continue;
            const auto& v = j.at(key);
            std::optional<double> beta;
            if (v.is_string()) {
                if (v.get<std::string>() != "auto") throw ConfigError(std::string("config.") + key + ": expected a number or 'auto'");
            } else {
                beta = v.get<double>();
            }
            (std::string(key) == "beta_r" ? cfg.params.beta_r : cfg.params.beta_p) = beta;
        }
        cfg.seeds = io_detail::require(j, "seeds", "config").get<std::vector<std::uint64_t>>();
        cfg.output_dir = j.value("output_dir", cfg.output_dir);
        cfg.jobs = j.value("jobs", 0u);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    cfg.validate();
    return cfg;
}

struct RegretRow {
    std::size_t t = 0;
    std::size_t context = 0;
    double vstar = 0.0;
    double vplayed = 0.0;
    double instant_regret = 0.0;
    double cumulative_regret = 0.0;
    double realized_return = 0.0;
    double potential = 0.0;
};

struct RegretRecord {
    std::uint64_t seed = 0;
    std::vector<RegretRow> rows;

    double cumulative_at(std::size_t t) const { return rows.at(t - 1).cumulative_regret; }
};

struct SummaryRow {
    std::size_t t = 0;
    double mean = 0.0;
    double stddev = 0.0;
};

struct ExperimentResult {
    Algorithm algorithm = Algorithm::uc3rl;
    std::vector<RegretRecord> records;  // sorted by seed
    std::vector<SummaryRow> summary;
};

inline Problem resolve_problem(const ExperimentConfig& cfg) {
    if (cfg.instance_path) return load_problem(*cfg.instance_path);
    return gen_instance(*cfg.generator, cfg.generator_seed).problem;
}

namespace experiment_detail {

inline void append_row(RegretRecord& rec, std::size_t c, double vstar, double vplayed, double realized,
                       double potential) {
    const double prev = rec.rows.empty() ? 0.0 : rec.rows.back().cumulative_regret;
    const double inst = vstar - vplayed;
    rec.rows.push_back({rec.rows.size() + 1, c, vstar, vplayed, inst, prev + inst, realized, potential});
}

}  // namespace experiment_detail

/// One seed of one algorithm for T episodes. All randomness comes from Rng(seed).
inline RegretRecord run_seed(const Problem& problem, Algorithm algorithm, const AlgoParams& params,
                             std::uint64_t seed) {
    const auto& inst = problem.instance;
    RegretRecord rec{seed, {}};
    rec.rows.reserve(params.episodes);
    Rng rng(seed);

    if (algorithm == Algorithm::uc3rl || algorithm == Algorithm::greedy_no_bonus) {
        const Betas betas = algorithm == Algorithm::uc3rl
                                ? resolve_betas(params, inst.shape(), problem.rewards.size(), problem.dynamics.size())
                                : Betas{0.0, 0.0};
        EpisodeCache cache(inst.shape(), inst.context_count(), problem.rewards.size(), problem.dynamics.size());
        for (std::size_t t = 1; t <= params.episodes; ++t) {
            const auto step = uc3rl_episode(inst, problem.rewards, problem.dynamics, betas, cache, rng);
            const auto& r = step.record;
            experiment_detail::append_row(rec, r.context, r.vstar, r.vplayed, r.realized_return, r.potential);
        }
        return rec;
    }

    for (std::size_t t = 1; t <= params.episodes; ++t) {
        const std::size_t c = sample_context(inst, rng);
        const DeterministicPolicy policy =
            algorithm == Algorithm::random_baseline ? random_policy(inst.shape(), rng) : inst.optimal(c).policy;
        const auto tr = sample_trajectory(inst, c, policy, rng);
        const auto regret = pseudo_regret_step(inst, c, policy);
        experiment_detail::append_row(rec, c, regret.vstar, regret.vplayed, tr.realized_return(), 0.0);
    }
    return rec;
}

/// Checkpoints T/4, T/2, T (deduplicated, each at least 1).
inline std::vector<std::size_t> checkpoints(std::size_t episodes) {
    std::vector<std::size_t> out;
    for (std::size_t t : {episodes / 4, episodes / 2, episodes}) {
        t = std::max<std::size_t>(t, 1);
        if (out.empty() || out.back() != t) out.push_back(t);
    }
    return out;
}

inline std::vector<SummaryRow> summarize(const std::vector<RegretRecord>& records, std::size_t episodes) {
    std::vector<SummaryRow> out;
    for (std::size_t t : checkpoints(episodes)) {
        double mean = 0.0;
        for (const auto& r : records) mean += r.cumulative_at(t);
        mean /= static_cast<double>(records.size());
        double var = 0.0;
        for (const auto& r : records) var += (r.cumulative_at(t) - mean) * (r.cumulative_at(t) - mean);
        const double sd = records.size() > 1 ? std::sqrt(var / static_cast<double>(records.size() - 1)) : 0.0;
        out.push_back({t, mean, sd});
    }
    return out;
}

/// Runs every seed (in parallel when jobs > 1) and aggregates by ascending seed.
inline ExperimentResult run_experiment(const Problem& problem, const ExperimentConfig& cfg) {
    cfg.validate();
    auto seeds = cfg.seeds;
    std::sort(seeds.begin(), seeds.end());
    ExperimentResult result;
    result.algorithm = cfg.algorithm;
    result.records.resize(seeds.size());

    unsigned jobs = cfg.jobs == 0 ? std::max(1u, std::thread::hardware_concurrency()) : cfg.jobs;
    jobs = std::min<unsigned>(jobs, static_cast<unsigned>(seeds.size()));
    std::vector<std::exception_ptr> errors(seeds.size());
    auto work = [&](std::size_t first) {
        for (std::size_t i = first; i < seeds.size(); i += jobs) {
            try {
                result.records[i] = run_seed(problem, cfg.algorithm, cfg.params, seeds[i]);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    if (jobs <= 1) {
        work(0);
    } else {
        std::vector<std::jthread> pool;
        for (unsigned w = 0; w < jobs; ++w) pool.emplace_back(work, w);
    }
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
    result.summary = summarize(result.records, cfg.params.episodes);
    return result;
}

inline ExperimentResult run_experiment(const ExperimentConfig& cfg) {
    cfg.validate();
    return run_experiment(resolve_problem(cfg), cfg);
}

}  // namespace uc3rl::harness
