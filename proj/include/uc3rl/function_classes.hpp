#pragma once

#include "uc3rl/cmdp.hpp"
#include "uc3rl/rng.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace uc3rl {

/// Finite reward class F: members[m][c] is the reward table f_m(c, ., .).
struct RewardFunctionClass {
    std::vector<ContextRewards> members;
    std::optional<std::size_t> star_index;

    std::size_t size() const noexcept { return members.size(); }

    void validate(const LayeredShape& shape, std::size_t contexts) const {
        if (members.empty()) throw std::invalid_argument("reward_class: no members");
        for (std::size_t m = 0; m < members.size(); ++m) {
            if (members[m].size() != contexts)
                throw std::invalid_argument(index_path("reward_class.members", {m}) + ": wrong context count");
            for (std::size_t c = 0; c < contexts; ++c) {
                const auto& t = members[m][c];
                if (!(t.shape() == shape))
                    throw std::invalid_argument(index_path("reward_class.members", {m, c}) + ": shape mismatch");
                for (std::size_t h = 0; h < shape.horizon; ++h)
                    for (std::size_t s = 0; s < shape.states(h); ++s)
                        for (std::size_t a = 0; a < shape.action_count; ++a)
                            if (!(t(h, s, a) >= 0.0 && t(h, s, a) <= 1.0))
                                throw std::invalid_argument(
                                    index_path("reward_class.members", {m, c, h, s, a}) + ": outside [0, 1]");
            }
        }
        if (star_index && *star_index >= members.size())
            throw std::invalid_argument("reward_class.star_index out of range");
    }
};

/// Finite dynamics class F_P: members[m][c] is the kernel P_m^c.
struct DynamicsFunctionClass {
    std::vector<ContextDynamics> members;
    std::optional<std::size_t> star_index;

    std::size_t size() const noexcept { return members.size(); }

    void validate(const LayeredShape& shape, std::size_t contexts) const {
        if (members.empty()) throw std::invalid_argument("dynamics_class: no members");
        for (std::size_t m = 0; m < members.size(); ++m) {
            if (members[m].size() != contexts)
                throw std::invalid_argument(index_path("dynamics_class.members", {m}) + ": wrong context count");
            for (std::size_t c = 0; c < contexts; ++c) {
                if (!(members[m][c].shape() == shape))
                    throw std::invalid_argument(index_path("dynamics_class.members", {m, c}) + ": shape mismatch");
                members[m][c].validate(index_path("dynamics_class.members", {m, c}));
            }
        }
        if (star_index && *star_index >= members.size())
            throw std::invalid_argument("dynamics_class.star_index out of range");
    }
};

struct RealizabilityReport {
    std::optional<std::size_t> reward_star;
    std::optional<std::size_t> dynamics_star;

    bool rewards_realizable() const noexcept { return reward_star.has_value(); }
    bool dynamics_realizable() const noexcept { return dynamics_star.has_value(); }
    bool realizable() const noexcept { return rewards_realizable() && dynamics_realizable(); }
};

namespace detail {

inline constexpr double kRealizabilityTolerance = 1e-12;

inline bool tables_match(const StateActionTable& x, const StateActionTable& y) {
    if (!(x.shape() == y.shape())) return false;
    for (std::size_t h = 0; h < x.shape().horizon; ++h) {
        const auto a = x.layer(h);
        const auto b = y.layer(h);
        for (std::size_t i = 0; i < a.size(); ++i)
            if (std::abs(a[i] - b[i]) > kRealizabilityTolerance) return false;
    }
    return true;
}

inline bool kernels_match(const TransitionKernel& x, const TransitionKernel& y) {
    const auto& sh = x.shape();
    if (!(sh == y.shape())) return false;
    for (std::size_t h = 0; h < sh.horizon; ++h)
        for (std::size_t s = 0; s < sh.states(h); ++s)
            for (std::size_t a = 0; a < sh.action_count; ++a) {
                const auto p = x.row(h, s, a);
                const auto q = y.row(h, s, a);
                for (std::size_t n = 0; n < p.size(); ++n)
                    if (std::abs(p[n] - q[n]) > kRealizabilityTolerance) return false;
            }
    return true;
}

template <class Member, class Pred>
std::optional<std::size_t> first_match(const std::vector<Member>& members, const Member& truth, Pred same) {
    for (std::size_t m = 0; m < members.size(); ++m) {
        bool all = true;
        for (std::size_t c = 0; c < truth.size() && all; ++c) all = same(members[m][c], truth[c]);
        if (all) return m;
    }
    return std::nullopt;
}

}  // namespace detail

/// Looks for the lowest-index members equal to the true tables (entrywise,
/// 1e-12) and records them as star indices. Existing star indices are
/// overwritten, and cleared when no member matches.
inline RealizabilityReport validate_realizability(RewardFunctionClass& fc, DynamicsFunctionClass& pc,
                                                  const CmdpInstance& inst) {
    fc.validate(inst.shape(), inst.context_count());
    pc.validate(inst.shape(), inst.context_count());
    RealizabilityReport report;
    report.reward_star = detail::first_match(fc.members, inst.mean_rewards(), detail::tables_match);
    report.dynamics_star = detail::first_match(pc.members, inst.dynamics(), detail::kernels_match);
    fc.star_index = report.reward_star;
    pc.star_index = report.dynamics_star;
    return report;
}

namespace detail {

inline void check_perturbation_args(std::size_t count, double magnitude) {
    if (count < 1) throw std::invalid_argument("perturb_class: count must be >= 1");
    if (!(magnitude >= 0.0 && magnitude <= 1.0))
        throw std::invalid_argument("perturb_class: magnitude must lie in [0, 1], got " + std::to_string(magnitude));
}

}  // namespace detail

/// Weight of the uniform row mixed into every dynamics decoy, which keeps
/// decoy log-losses finite on any data.
inline constexpr double kDecoyUniformMix = 1e-3;

/// Base rewards plus count-1 decoys. Every entry moves by up to +-magnitude
/// (clipped to [0, 1]) and one random entry moves by at least magnitude/2.
/// The base is member 0; magnitude 0 yields exact copies.
inline std::vector<ContextRewards> perturb_class(const ContextRewards& base, std::size_t count, double magnitude,
                                                 Rng& rng) {
    detail::check_perturbation_args(count, magnitude);
    std::vector<ContextRewards> out(count, base);
    if (magnitude == 0.0 || base.empty()) return out;
    const auto& sh = base.front().shape();
    for (std::size_t m = 1; m < count; ++m) {
        auto& member = out[m];
        for (std::size_t c = 0; c < member.size(); ++c)
            for (std::size_t h = 0; h < sh.horizon; ++h)
                for (auto& x : member[c].layer(h)) x = std::clamp(x + magnitude * rng.uniform(-1.0, 1.0), 0.0, 1.0);
        const std::size_t c = rng.index(member.size());
        const std::size_t h = rng.index(sh.horizon);
        const std::size_t s = rng.index(sh.states(h));
        const std::size_t a = rng.index(sh.action_count);
        const double x = base[c](h, s, a);
        member[c](h, s, a) = x >= 0.5 ? x - std::min(magnitude, x) : x + std::min(magnitude, 1.0 - x);
    }
    return out;
}

/// Base dynamics plus count-1 decoys. Each decoy row is mixed with a random
/// Dirichlet(1) row at weight magnitude; one random row with at least two
/// successors is instead pulled toward its least likely successor, moving
/// that entry by at least magnitude/2. Decoys are then mixed with the uniform
/// row at weight kDecoyUniformMix and renormalized.
inline std::vector<ContextDynamics> perturb_class(const ContextDynamics& base, std::size_t count, double magnitude,
                                                  Rng& rng) {
    detail::check_perturbation_args(count, magnitude);
    std::vector<ContextDynamics> out(count, base);
    if (magnitude == 0.0 || base.empty()) return out;
    const auto& sh = base.front().shape();

    struct RowId {
        std::size_t c, h, s, a;
    };
    std::vector<RowId> branching;
    for (std::size_t c = 0; c < base.size(); ++c)
        for (std::size_t h = 0; h < sh.horizon; ++h)
            if (sh.states(h + 1) > 1)
                for (std::size_t s = 0; s < sh.states(h); ++s)
                    for (std::size_t a = 0; a < sh.action_count; ++a) branching.push_back({c, h, s, a});

    for (std::size_t m = 1; m < count; ++m) {
        auto& member = out[m];
        std::optional<RowId> forced;
        if (!branching.empty()) forced = branching[rng.index(branching.size())];
        for (std::size_t c = 0; c < member.size(); ++c)
            for (std::size_t h = 0; h < sh.horizon; ++h)
                for (std::size_t s = 0; s < sh.states(h); ++s)
                    for (std::size_t a = 0; a < sh.action_count; ++a) {
                        auto row = member[c].row(h, s, a);
                        const std::size_t n = row.size();
                        if (forced && forced->c == c && forced->h == h && forced->s == s && forced->a == a) {
                            const auto target = static_cast<std::size_t>(
                                std::distance(row.begin(), std::min_element(row.begin(), row.end())));
                            for (std::size_t i = 0; i < n; ++i)
                                row[i] = (1.0 - magnitude) * row[i] + (i == target ? magnitude : 0.0);
                        } else {
                            const auto noise = rng.dirichlet_uniform(n);
                            for (std::size_t i = 0; i < n; ++i) row[i] = (1.0 - magnitude) * row[i] + magnitude * noise[i];
                        }
                        for (auto& p : row)
                            p = (1.0 - kDecoyUniformMix) * p + kDecoyUniformMix / static_cast<double>(n);
                    }
        for (auto& kernel : member) kernel.normalize_rows();
    }
    return out;
}

}  // namespace uc3rl
