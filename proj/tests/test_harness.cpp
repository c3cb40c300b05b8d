#include "support/brute_force.hpp"
#include "uc3rl/harness/experiment.hpp"
#include "uc3rl/harness/export.hpp"
#include "uc3rl/harness/generator.hpp"
#include "uc3rl/harness/instance_io.hpp"
#include "uc3rl/harness/verification.hpp"

#include <boost/property_tree/ptree.hpp>
#include <boost/property_tree/xml_parser.hpp>
#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace uc3rl;
using namespace uc3rl::harness;
namespace fs = std::filesystem;

namespace {

std::string read_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

fs::path scratch_dir(const std::string& name) {
    const auto dir = fs::temp_directory_path() / ("uc3rl_test_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string expect_config_error(const std::function<void()>& fn) {
    try {
        fn();
    } catch (const ConfigError& e) {
        return e.what();
    }
    ADD_FAILURE() << "expected ConfigError";
    return {};
}

ExperimentConfig config_for(Algorithm algorithm, std::size_t episodes, std::vector<std::uint64_t> seeds) {
    ExperimentConfig cfg;
    cfg.generator = reference_spec();
    cfg.algorithm = algorithm;
    cfg.params.episodes = episodes;
    cfg.seeds = std::move(seeds);
    cfg.jobs = 1;
    return cfg;
}

/// Two contexts; action 0 pays 0.75 and action 1 pays 0.25 at every step.
Problem gap_problem() {
    const LayeredShape shape{3, {1, 3, 3, 1}, 2};
    Rng rng(99);
    StateActionTable r(shape);
    for (std::size_t h = 0; h < 3; ++h)
        for (std::size_t s = 0; s < shape.states(h); ++s) {
            r(h, s, 0) = 0.75;
            r(h, s, 1) = 0.25;
        }
    ContextDynamics d{random_kernel(shape, rng), random_kernel(shape, rng)};
    CmdpInstance inst({0.4, 0.6}, d, {r, r}, RewardNoise::bernoulli);
    RewardFunctionClass fc{{inst.mean_rewards()}, 0};
    DynamicsFunctionClass pc{{inst.dynamics()}, 0};
    return Problem{std::move(inst), std::move(fc), std::move(pc)};
}

}  // namespace

TEST(Generator, SameSeedSameProblem) {
    const auto a = gen_instance(reference_spec(), 42), b = gen_instance(reference_spec(), 42);
    EXPECT_EQ(problem_to_json(a.problem).dump(), problem_to_json(b.problem).dump());
    EXPECT_EQ(a.planted_reward_index, b.planted_reward_index);
    const auto c = gen_instance(reference_spec(), 43);
    EXPECT_NE(problem_to_json(a.problem).dump(), problem_to_json(c.problem).dump());
}

TEST(Generator, InstancesSatisfyInvariants) {
    for (std::uint64_t seed = 0; seed < 30; ++seed) {
        auto spec = reference_spec();
        spec.context_distribution = seed % 2 ? ContextDistribution::dirichlet : ContextDistribution::uniform;
        auto g = gen_instance(spec, seed);
        auto& p = g.problem;
        EXPECT_EQ(p.instance.context_count(), 5u);
        EXPECT_EQ(p.rewards.size(), 8u);
        EXPECT_EQ(p.dynamics.size(), 4u);
        EXPECT_EQ(p.rewards.star_index, std::optional<std::size_t>(g.planted_reward_index));
        EXPECT_EQ(p.dynamics.star_index, std::optional<std::size_t>(g.planted_dynamics_index));
        EXPECT_NO_THROW(p.rewards.validate(p.instance.shape(), 5));
        EXPECT_NO_THROW(p.dynamics.validate(p.instance.shape(), 5));
        const auto report = validate_realizability(p.rewards, p.dynamics, p.instance);
        EXPECT_TRUE(report.realizable());
    }
}

TEST(Generator, SingletonClassesHoldOnlyTheTruth) {
    auto spec = reference_spec();
    spec.reward_class_size = 1;
    spec.dynamics_class_size = 1;
    const auto g = gen_instance(spec, 7);
    ASSERT_EQ(g.problem.rewards.size(), 1u);
    EXPECT_EQ(g.problem.rewards.members[0], g.problem.instance.mean_rewards());
    EXPECT_EQ(g.problem.dynamics.members[0], g.problem.instance.dynamics());
}

TEST(Generator, RejectsInvalidSpec) {
    auto spec = reference_spec();
    spec.decoy_magnitude = 0.0;
    EXPECT_THROW(gen_instance(spec, 1), std::invalid_argument);
    spec = reference_spec();
    spec.shape.layer_sizes = {1, 3, 1};
    EXPECT_THROW(gen_instance(spec, 1), std::invalid_argument);
}

TEST(InstanceIo, RoundTripPreservesEverything) {
    const auto g = gen_instance(reference_spec(), 5);
    const auto dir = scratch_dir("roundtrip");
    const auto path = (dir / "inst.json").string();
    write_text_file(path, problem_to_json(g.problem).dump(1));
    const auto loaded = load_problem(path);
    EXPECT_EQ(loaded.instance.dynamics(), g.problem.instance.dynamics());
    EXPECT_EQ(loaded.instance.mean_rewards(), g.problem.instance.mean_rewards());
    EXPECT_EQ(loaded.instance.context_probs(), g.problem.instance.context_probs());
    EXPECT_EQ(loaded.rewards.members, g.problem.rewards.members);
    EXPECT_EQ(loaded.dynamics.star_index, g.problem.dynamics.star_index);
    EXPECT_EQ(problem_to_json(loaded).dump(), problem_to_json(g.problem).dump());
}

TEST(InstanceIo, MissingClassesDefaultToTruth) {
    const auto g = gen_instance(reference_spec(), 6);
    const auto dir = scratch_dir("noclass");
    const auto path = (dir / "inst.json").string();
    write_text_file(path, instance_to_json(g.problem.instance).dump());
    const auto loaded = load_problem(path);
    EXPECT_EQ(loaded.rewards.size(), 1u);
    EXPECT_EQ(loaded.dynamics.size(), 1u);
    EXPECT_EQ(loaded.rewards.star_index, std::optional<std::size_t>(0));
}

TEST(InstanceIo, ErrorsCarryIndexPaths) {
    const auto g = gen_instance(reference_spec(), 8);
    const json good = problem_to_json(g.problem);

    json j = good;
    j["dynamics"][2][1][0][1][0] = j["dynamics"][2][1][0][1][0].get<double>() + 0.05;
    EXPECT_NE(expect_config_error([&] { instance_from_json(j); }).find("dynamics[2][1][0][1]"), std::string::npos);

    j = good;
    j["mean_rewards"][4][2][1][0] = -0.1;
    EXPECT_NE(expect_config_error([&] { instance_from_json(j); }).find("mean_rewards[4]"), std::string::npos);

    j = good;
    j["dynamics"][0][1].erase(2);
    EXPECT_NE(expect_config_error([&] { instance_from_json(j); }).find("dynamics[0][1]"), std::string::npos);

    j = good;
    j["mean_rewards"][1][0][0][1] = "high";
    EXPECT_NE(expect_config_error([&] { instance_from_json(j); }).find("mean_rewards[1][0][0][1]"), std::string::npos);

    j = good;
    j["context_probs"][0] = 0.9;
    EXPECT_NE(expect_config_error([&] { instance_from_json(j); }).find("context_probs"), std::string::npos);

    j = good;
    j["reward_class"]["members"][3][0][0][0][0] = 2.0;
    EXPECT_NE(expect_config_error([&] { instance_from_json(j); }).find("reward_class.members[3][0][0][0][0]"),
              std::string::npos);

    j = good;
    j.erase("horizon");
    EXPECT_NE(expect_config_error([&] { instance_from_json(j); }).find("horizon"), std::string::npos);

    expect_config_error([] { read_json_file("/nonexistent/instance.json"); });
}

TEST(InstanceIo, UnrealizableClassesAreRejected) {
    const auto g = gen_instance(reference_spec(), 9);
    json j = problem_to_json(g.problem);
    auto& members = j["reward_class"]["members"];
    members.erase(*g.problem.rewards.star_index);
    const auto dir = scratch_dir("unrealizable");
    const auto path = (dir / "inst.json").string();
    write_text_file(path, j.dump());
    EXPECT_NE(expect_config_error([&] { load_problem(path); }).find("not realizable"), std::string::npos);
}

TEST(Config, ParsesAutoAndExplicitBetas) {
    json j = {{"generator",
               {{"contexts", 2},
                {"horizon", 2},
                {"layer_sizes", {1, 2, 1}},
                {"action_count", 2},
                {"reward_class_size", 3},
                {"dynamics_class_size", 2}}},
              {"algorithm", "greedy_no_bonus"},
              {"T", 50},
              {"beta_r", "auto"},
              {"beta_p", 3.5},
              {"seeds", {3, 1}}};
    const auto cfg = config_from_json(j);
    EXPECT_EQ(cfg.algorithm, Algorithm::greedy_no_bonus);
    EXPECT_FALSE(cfg.params.beta_r.has_value());
    EXPECT_EQ(cfg.params.beta_p, std::optional<double>(3.5));
    EXPECT_EQ(cfg.params.episodes, 50u);

    json bad = j;
    bad["beta_r"] = "large";
    expect_config_error([&] { config_from_json(bad); });
    bad = j;
    bad["beta_p"] = -2.0;
    expect_config_error([&] { config_from_json(bad); });
    bad = j;
    bad["seeds"] = json::array();
    expect_config_error([&] { config_from_json(bad); });
    bad = j;
    bad["algorithm"] = "ucb";
    expect_config_error([&] { config_from_json(bad); });
    bad = j;
    bad.erase("T");
    expect_config_error([&] { config_from_json(bad); });
    bad = j;
    bad["delta"] = 1.5;
    expect_config_error([&] { config_from_json(bad); });
}

TEST(Export, CsvLayoutAndFormatting) {
    RegretRecord rec{4, {}};
    rec.rows.push_back({1, 2, 1.0 / 3.0, 0.25, 1.0 / 3.0 - 0.25, 1.0 / 3.0 - 0.25, 1.0, 0.5});
    rec.rows.push_back({2, 0, 2.0, 2.0, 0.0, 1.0 / 3.0 - 0.25, 2.0, 0.1});
    const auto csv = regret_csv(std::span(&rec, 1));
    std::istringstream in(csv);
    std::vector<std::string> lines;
    for (std::string line; std::getline(in, line);) lines.push_back(line);
    ASSERT_EQ(lines.size(), 3u);
    EXPECT_EQ(lines[0], "seed,t,context_id,vstar,vplayed,instant_regret,cumulative_regret");
    EXPECT_EQ(lines[1], "4,1,2,0.333333333333,0.25,0.0833333333333,0.0833333333333");
    EXPECT_EQ(lines[2], "4,2,0,2,2,0,0.0833333333333");
    EXPECT_EQ(format_real(1e-20), "1e-20");
    EXPECT_THROW(export_csv({}, "/tmp/never.csv"), ConfigError);
}

TEST(Export, ReexportIsByteIdentical) {
    auto cfg = config_for(Algorithm::uc3rl, 40, {1, 2});
    const auto result = run_experiment(cfg);
    const auto dir = scratch_dir("reexport");
    export_csv(result.records, (dir / "a.csv").string());
    export_csv(result.records, (dir / "b.csv").string());
    EXPECT_EQ(read_file(dir / "a.csv"), read_file(dir / "b.csv"));
    EXPECT_THROW(export_csv(result.records, (dir / "missing" / "c.csv").string()), ConfigError);
}

TEST(Export, SvgIsWellFormedWithOnePathPerSeedPlusMean) {
    auto cfg = config_for(Algorithm::random_baseline, 30, {1, 2, 3});
    const auto svg = regret_svg(run_experiment(cfg).records);
    boost::property_tree::ptree tree;
    std::istringstream in(svg);
    ASSERT_NO_THROW(boost::property_tree::read_xml(in, tree));
    std::size_t seeds = 0, means = 0, paths = 0;
    for (const auto& [name, node] : tree.get_child("svg")) {
        if (name != "path") continue;
        ++paths;
        const auto cls = node.get<std::string>("<xmlattr>.class");
        seeds += cls == "seed";
        means += cls == "mean";
    }
    EXPECT_EQ(paths, 4u);
    EXPECT_EQ(seeds, 3u);
    EXPECT_EQ(means, 1u);
}

TEST(Experiment, OracleOptimalHasNoRegret) {
    const auto result = run_experiment(config_for(Algorithm::oracle_optimal, 200, {1, 2}));
    ASSERT_EQ(result.summary.size(), 3u);
    for (const auto& s : result.summary) EXPECT_LE(std::abs(s.mean), 1e-6);
    EXPECT_EQ(result.summary[0].t, 50u);
    EXPECT_EQ(result.summary[2].t, 200u);
}

TEST(Experiment, RandomBaselineSlopeMatchesExactGap) {
    const auto problem = gap_problem();
    double slope = 0.0;
    for (std::size_t c = 0; c < 2; ++c)
        slope += problem.instance.context_probs()[c] *
                 (problem.instance.optimal(c).values.start() - uc3rl::testing::mean_policy_value(problem.instance.mdp(c)));
    EXPECT_NEAR(slope, 0.75, 1e-12);
    ExperimentConfig cfg = config_for(Algorithm::random_baseline, 2000, {1, 2, 3});
    const auto result = run_experiment(problem, cfg);
    const double measured = result.summary.back().mean / 2000.0;
    EXPECT_NEAR(measured, slope, 0.2 * slope);
    const double first_half = result.summary[1].mean / 1000.0;
    EXPECT_NEAR(first_half, slope, 0.2 * slope);
}

TEST(Experiment, KnownModelUc3rlBeatsRandom) {
    auto spec = reference_spec();
    spec.reward_class_size = 1;
    spec.dynamics_class_size = 1;
    auto cfg = config_for(Algorithm::uc3rl, 500, {1, 2, 3});
    cfg.generator = spec;
    const double uc = run_experiment(cfg).summary.back().mean;
    cfg.algorithm = Algorithm::random_baseline;
    const double rnd = run_experiment(cfg).summary.back().mean;
    EXPECT_LT(uc, rnd);
}

TEST(Experiment, GreedyAndParallelRunsAreDeterministic) {
    auto cfg = config_for(Algorithm::greedy_no_bonus, 60, {5, 3, 4});
    const auto serial = run_experiment(cfg);
    cfg.jobs = 3;
    const auto parallel = run_experiment(cfg);
    EXPECT_EQ(regret_csv(serial.records), regret_csv(parallel.records));
    EXPECT_EQ(serial.records.front().seed, 3u);
}

TEST(Verification, SmallSuitesPassAndSerialize) {
    SuiteSizes n;
    n.mdp_triples = 50;
    n.scalar_tuples = 200;
    n.tv_pairs = 500;
    n.potential_sequences = 200;
    n.oracle_runs = 3;
    n.oracle_episodes = 30;
    const auto reports = run_suite("all", 1, n);
    EXPECT_EQ(reports.size(), 9u);
    for (const auto& r : reports) EXPECT_TRUE(r.passed()) << r.name;
    const auto csv = reports_csv(reports);
    EXPECT_EQ(csv.substr(0, csv.find('\n')), "name,instances,violations,worst_slack,tolerance");
    EXPECT_EQ(verify_exit_code(reports), 0);
    auto failing = reports;
    failing[0].violations = 1;
    EXPECT_EQ(verify_exit_code(failing), 1);
    EXPECT_THROW(run_suite("bogus", 1, n), ConfigError);
}
