// Command line front end: instance generation, experiments and lemma checks.
//
//   uc3rl gen-env --spec <file> --seed <u64> --out <file>
//   uc3rl run     --config <file> --out-dir <dir>
//   uc3rl verify  --suite <all|com|potential|valdiff|oracle-stat> --seed <u64> --out <file>
//
// Exit codes: 0 success, 1 a verified inequality was violated, 2 I/O or
// configuration error.

#include "uc3rl/harness/experiment.hpp"
#include "uc3rl/harness/export.hpp"
#include "uc3rl/harness/generator.hpp"
#include "uc3rl/harness/instance_io.hpp"
#include "uc3rl/harness/verification.hpp"

#include "CLI11.hpp"

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <string>

namespace {

namespace fs = std::filesystem;
using namespace uc3rl::harness;

constexpr int kExitViolation = 1;
constexpr int kExitConfig = 2;

int gen_env(const std::string& spec_path, std::uint64_t seed, const std::string& out_path) {
    const auto spec = generator_spec_from_json(read_json_file(spec_path));
    const auto generated = gen_instance(spec, seed);
    write_text_file(out_path, problem_to_json(generated.problem).dump(1) + "\n");
    std::cout << "wrote " << out_path << " (reward star " << generated.planted_reward_index << ", dynamics star "
              << generated.planted_dynamics_index << ")\n";
    return 0;
}

int run(const std::string& config_path, const std::string& out_dir) {
    auto cfg = config_from_json(read_json_file(config_path));
    if (cfg.instance_path && fs::path(*cfg.instance_path).is_relative())
        cfg.instance_path = (fs::path(config_path).parent_path() / *cfg.instance_path).string();
    if (!out_dir.empty()) cfg.output_dir = out_dir;
    std::error_code ec;
    fs::create_directories(cfg.output_dir, ec);
    if (ec) throw ConfigError("cannot create '" + cfg.output_dir + "': " + ec.message());

    const auto result = run_experiment(cfg);
    const fs::path dir(cfg.output_dir);
    for (const auto& rec : result.records)
        export_csv(std::span(&rec, 1), (dir / ("seed_" + std::to_string(rec.seed) + ".csv")).string());
    write_text_file((dir / "summary.csv").string(), summary_csv(result));
    write_text_file((dir / "diagnostics.csv").string(), diagnostics_csv(result.records));
    export_svg(result.records, (dir / "regret.svg").string());

    std::cout << "algorithm " << to_string(result.algorithm) << ", " << result.records.size() << " seed(s), T = "
              << cfg.params.episodes << "\n";
    for (const auto& s : result.summary)
        std::cout << "  t = " << s.t << ": cumulative regret " << format_real(s.mean) << " +- "
                  << format_real(s.stddev) << "\n";
    return 0;
}

int verify(const std::string& suite, std::uint64_t seed, const std::string& out_path) {
    const auto reports = run_suite(suite, seed);
    write_text_file(out_path, reports_csv(reports));
    std::cout << reports_table(reports);
    return verify_exit_code(reports) == 0 ? 0 : kExitViolation;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Optimistic contextual RL with offline regression oracles"};
    app.require_subcommand(1);

    std::string spec_path, gen_out;
    std::uint64_t gen_seed = 0;
    auto* gen = app.add_subcommand("gen-env", "Generate a realizable instance with function classes");
    gen->add_option("--spec", spec_path, "Generator spec JSON")->required();
    gen->add_option("--seed", gen_seed, "Generator seed")->required();
    gen->add_option("--out", gen_out, "Output instance JSON")->required();

    std::string config_path, out_dir;
    auto* run_cmd = app.add_subcommand("run", "Run an experiment and write regret CSV/SVG");
    run_cmd->add_option("--config", config_path, "Experiment config JSON")->required();
    run_cmd->add_option("--out-dir", out_dir, "Output directory (overrides config output_dir)");

    std::string suite = "all", verify_out;
    std::uint64_t verify_seed = 0;
    auto* verify_cmd = app.add_subcommand("verify", "Run the numerical lemma checks");
    verify_cmd->add_option("--suite", suite, "Suite name")
        ->check(CLI::IsMember({"all", "com", "potential", "valdiff", "oracle-stat"}));
    verify_cmd->add_option("--seed", verify_seed, "Suite seed")->required();
    verify_cmd->add_option("--out", verify_out, "Output CheckReport CSV")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitConfig;
    }

    try {
        if (*gen) return gen_env(spec_path, gen_seed, gen_out);
        if (*run_cmd) return run(config_path, out_dir);
        if (*verify_cmd) return verify(suite, verify_seed, verify_out);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfig;
    }
    return kExitConfig;
}
