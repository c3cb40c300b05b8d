#pragma once

#include "uc3rl/cmdp.hpp"
#include "uc3rl/function_classes.hpp"
#include "uc3rl/harness/generator.hpp"

#include "json.hpp"

#include <cstddef>
#include <fstream>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace uc3rl::harness {

using nlohmann::json;

/// I/O, parse, or configuration failure (CLI exit code 2).
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

namespace io_detail {

inline const json& require(const json& j, const std::string& key, const std::string& where) {
    if (!j.is_object() || !j.contains(key)) throw ConfigError(where + ": missing key '" + key + "'");
    return j.at(key);
}

inline const json& require_array(const json& j, std::size_t expected, const std::string& path) {
    if (!j.is_array()) throw ConfigError(path + ": expected an array");
    if (j.size() != expected)
        throw ConfigError(path + ": expected " + std::to_string(expected) + " entries, got " + std::to_string(j.size()));
    return j;
}

inline double number_at(const json& j, const std::string& path) {
    if (!j.is_number()) throw ConfigError(path + ": expected a number");
    return j.get<double>();
}

inline std::string sub(const std::string& path, std::size_t i) { return path + "[" + std::to_string(i) + "]"; }

inline json table_to_json(const StateActionTable& t) {
    json out = json::array();
    const auto& sh = t.shape();
    for (std::size_t h = 0; h < sh.horizon; ++h) {
        json layer = json::array();
        for (std::size_t s = 0; s < sh.states(h); ++s) {
            json actions = json::array();
            for (std::size_t a = 0; a < sh.action_count; ++a) actions.push_back(t(h, s, a));
            layer.push_back(std::move(actions));
        }
        out.push_back(std::move(layer));
    }
    return out;
}

inline json kernel_to_json(const TransitionKernel& k) {
    json out = json::array();
    const auto& sh = k.shape();
    for (std::size_t h = 0; h < sh.horizon; ++h) {
        json layer = json::array();
        for (std::size_t s = 0; s < sh.states(h); ++s) {
            json actions = json::array();
            for (std::size_t a = 0; a < sh.action_count; ++a) {
                const auto row = k.row(h, s, a);
                actions.push_back(std::vector<double>(row.begin(), row.end()));
            }
            layer.push_back(std::move(actions));
        }
        out.push_back(std::move(layer));
    }
    return out;
}

inline StateActionTable table_from_json(const json& j, const LayeredShape& sh, const std::string& path) {
    StateActionTable out(sh);
    require_array(j, sh.horizon, path);
    for (std::size_t h = 0; h < sh.horizon; ++h) {
        const auto ph = sub(path, h);
        require_array(j[h], sh.states(h), ph);
        for (std::size_t s = 0; s < sh.states(h); ++s) {
            const auto ps = sub(ph, s);
            require_array(j[h][s], sh.action_count, ps);
            for (std::size_t a = 0; a < sh.action_count; ++a) out(h, s, a) = number_at(j[h][s][a], sub(ps, a));
        }
    }
    return out;
}

inline TransitionKernel kernel_from_json(const json& j, const LayeredShape& sh, const std::string& path) {
    TransitionKernel out(sh);
    require_array(j, sh.horizon, path);
    for (std::size_t h = 0; h < sh.horizon; ++h) {
        const auto ph = sub(path, h);
        require_array(j[h], sh.states(h), ph);
        for (std::size_t s = 0; s < sh.states(h); ++s) {
            const auto ps = sub(ph, s);
            require_array(j[h][s], sh.action_count, ps);
            for (std::size_t a = 0; a < sh.action_count; ++a) {
                const auto pa = sub(ps, a);
                require_array(j[h][s][a], sh.states(h + 1), pa);
                auto row = out.row(h, s, a);
                for (std::size_t n = 0; n < row.size(); ++n) row[n] = number_at(j[h][s][a][n], sub(pa, n));
            }
        }
    }
    try {
        out.validate(path);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    return out;
}

inline std::optional<std::size_t> star_from_json(const json& j, const std::string& path) {
    if (!j.contains("star_index") || j.at("star_index").is_null()) return std::nullopt;
    if (!j.at("star_index").is_number_unsigned()) throw ConfigError(path + ".star_index: expected an unsigned integer");
    return j.at("star_index").get<std::size_t>();
}

}  // namespace io_detail

struct LoadedProblem {
    CmdpInstance instance;
    std::optional<RewardFunctionClass> rewards;
    std::optional<DynamicsFunctionClass> dynamics;
};

inline json instance_to_json(const CmdpInstance& inst, const RewardFunctionClass* fc = nullptr,
                             const DynamicsFunctionClass* pc = nullptr) {
    const auto& sh = inst.shape();
    json out;
    out["horizon"] = sh.horizon;
    out["layer_sizes"] = sh.layer_sizes;
    out["action_count"] = sh.action_count;
    out["context_probs"] = inst.context_probs();
    out["reward_noise"] = std::string(to_string(inst.reward_noise()));
    json dyn = json::array(), rew = json::array();
    for (std::size_t c = 0; c < inst.context_count(); ++c) {
        dyn.push_back(io_detail::kernel_to_json(inst.dynamics()[c]));
        rew.push_back(io_detail::table_to_json(inst.mean_rewards()[c]));
    }
    out["dynamics"] = std::move(dyn);
    out["mean_rewards"] = std::move(rew);
    if (fc) {
        json members = json::array();
        for (const auto& m : fc->members) {
            json per_context = json::array();
            for (const auto& t : m) per_context.push_back(io_detail::table_to_json(t));
            members.push_back(std::move(per_context));
        }
        out["reward_class"] = {{"members", std::move(members)},
                               {"star_index", fc->star_index ? json(*fc->star_index) : json(nullptr)}};
    }
    if (pc) {
        json members = json::array();
        for (const auto& m : pc->members) {
            json per_context = json::array();
            for (const auto& k : m) per_context.push_back(io_detail::kernel_to_json(k));
            members.push_back(std::move(per_context));
        }
        out["dynamics_class"] = {{"members", std::move(members)},
                                 {"star_index", pc->star_index ? json(*pc->star_index) : json(nullptr)}};
    }
    return out;
}

inline json problem_to_json(const Problem& p) { return instance_to_json(p.instance, &p.rewards, &p.dynamics); }

/// Parses and validates an instance document. Every failure is a ConfigError
/// whose message starts with the offending index path.
inline LoadedProblem instance_from_json(const json& j) {
    using namespace io_detail;
    const std::string root = "instance";
    LayeredShape sh;
    try {
        sh.horizon = require(j, "horizon", root).get<std::size_t>();
        sh.layer_sizes = require(j, "layer_sizes", root).get<std::vector<std::size_t>>();
        sh.action_count = require(j, "action_count", root).get<std::size_t>();
        sh.validate();
    } catch (const json::exception& e) {
        throw ConfigError(root + ": malformed shape fields: " + e.what());
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }

    const auto& probs_j = require(j, "context_probs", root);
    if (!probs_j.is_array() || probs_j.empty()) throw ConfigError("context_probs: expected a nonempty array");
    const std::size_t contexts = probs_j.size();
    std::vector<double> probs;
    for (std::size_t c = 0; c < contexts; ++c) probs.push_back(number_at(probs_j[c], sub("context_probs", c)));

    const auto& dyn_j = require_array(require(j, "dynamics", root), contexts, "dynamics");
    const auto& rew_j = require_array(require(j, "mean_rewards", root), contexts, "mean_rewards");
    ContextDynamics dynamics;
    ContextRewards rewards;
    for (std::size_t c = 0; c < contexts; ++c) {
        dynamics.push_back(kernel_from_json(dyn_j[c], sh, sub("dynamics", c)));
        rewards.push_back(table_from_json(rew_j[c], sh, sub("mean_rewards", c)));
    }
    RewardNoise noise = RewardNoise::bernoulli;
    try {
        if (j.contains("reward_noise")) noise = parse_reward_noise(j.at("reward_noise").get<std::string>());
    } catch (const std::exception& e) {
        throw ConfigError(std::string("reward_noise: ") + e.what());
    }

    std::optional<CmdpInstance> inst;
    try {
        inst.emplace(std::move(probs), std::move(dynamics), std::move(rewards), noise);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }

    LoadedProblem out{std::move(*inst), std::nullopt, std::nullopt};
    if (j.contains("reward_class")) {
        const auto& cj = j.at("reward_class");
        const std::string path = "reward_class.members";
        const auto& mj = require(cj, "members", "reward_class");
        if (!mj.is_array() || mj.empty()) throw ConfigError(path + ": expected a nonempty array");
        RewardFunctionClass fc;
        for (std::size_t m = 0; m < mj.size(); ++m) {
            require_array(mj[m], contexts, sub(path, m));
            ContextRewards member;
            for (std::size_t c = 0; c < contexts; ++c)
                member.push_back(table_from_json(mj[m][c], sh, sub(sub(path, m), c)));
            fc.members.push_back(std::move(member));
        }
        fc.star_index = star_from_json(cj, "reward_class");
        try {
            fc.validate(sh, contexts);
        } catch (const std::invalid_argument& e) {
            throw ConfigError(e.what());
        }
        out.rewards = std::move(fc);
    }
    if (j.contains("dynamics_class")) {
        const auto& cj = j.at("dynamics_class");
        const std::string path = "dynamics_class.members";
        const auto& mj = require(cj, "members", "dynamics_class");
        if (!mj.is_array() || mj.empty()) throw ConfigError(path + ": expected a nonempty array");
        DynamicsFunctionClass pc;
        for (std::size_t m = 0; m < mj.size(); ++m) {
            require_array(mj[m], contexts, sub(path, m));
            ContextDynamics member;
            for (std::size_t c = 0; c < contexts; ++c)
                member.push_back(kernel_from_json(mj[m][c], sh, sub(sub(path, m), c)));
            pc.members.push_back(std::move(member));
        }
        pc.star_index = star_from_json(cj, "dynamics_class");
        if (pc.star_index && *pc.star_index >= pc.size()) throw ConfigError("dynamics_class.star_index out of range");
        out.dynamics = std::move(pc);
    }
    return out;
}

inline json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open '" + path + "'");
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError("'" + path + "': " + e.what());
    }
}

inline void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot write '" + path + "'");
    out << text;
    if (!out) throw ConfigError("failed writing '" + path + "'");
}

/// Loads an instance file. Classes absent from the file default to the truth
/// alone (|F| = |F_P| = 1); realizability is then re-checked against the
/// instance, which overwrites any recorded star index.
inline Problem load_problem(const std::string& path) {
    auto loaded = instance_from_json(read_json_file(path));
    RewardFunctionClass fc = loaded.rewards.value_or(RewardFunctionClass{{loaded.instance.mean_rewards()}, 0});
    DynamicsFunctionClass pc = loaded.dynamics.value_or(DynamicsFunctionClass{{loaded.instance.dynamics()}, 0});
    const auto report = validate_realizability(fc, pc, loaded.instance);
    if (!report.realizable())
        throw ConfigError("'" + path + "': function classes are not realizable for this instance");
    return Problem{std::move(loaded.instance), std::move(fc), std::move(pc)};
}

inline GeneratorSpec generator_spec_from_json(const json& j) {
    const std::string where = "generator spec";
    GeneratorSpec spec;
    try {
        spec.contexts = io_detail::require(j, "contexts", where).get<std::size_t>();
        spec.shape.horizon = io_detail::require(j, "horizon", where).get<std::size_t>();
        spec.shape.layer_sizes = io_detail::require(j, "layer_sizes", where).get<std::vector<std::size_t>>();
        spec.shape.action_count = io_detail::require(j, "action_count", where).get<std::size_t>();
        spec.reward_class_size = io_detail::require(j, "reward_class_size", where).get<std::size_t>();
        spec.dynamics_class_size = io_detail::require(j, "dynamics_class_size", where).get<std::size_t>();
        spec.decoy_magnitude = j.value("decoy_magnitude", spec.decoy_magnitude);
        spec.reward_noise = parse_reward_noise(j.value("reward_noise", std::string("bernoulli")));
        const auto dist = j.value("context_distribution", std::string("uniform"));
        if (dist == "uniform")
            spec.context_distribution = ContextDistribution::uniform;
        else if (dist == "dirichlet")
            spec.context_distribution = ContextDistribution::dirichlet;
        else
            throw ConfigError(where + ".context_distribution: expected 'uniform' or 'dirichlet'");
        spec.validate();
    } catch (const json::exception& e) {
        throw ConfigError(where + ": " + e.what());
    } catch (const std::invalid_argument& e) {
        throw ConfigError(where + ": " + e.what());
    }
    return spec;
}

}  // namespace uc3rl::harness
