#pragma once

#include "uc3rl/cmdp.hpp"
#include "uc3rl/function_classes.hpp"

#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <vector>

namespace uc3rl {

/// Append-only sequence of observed episodes.
class HistoryDataset {
public:
    HistoryDataset() = default;
    explicit HistoryDataset(LayeredShape shape) : shape_(std::move(shape)) {}

    void append(Trajectory episode) {
        if (!shape_.layer_sizes.empty() && episode.steps.size() != shape_.horizon)
            throw std::invalid_argument("history: trajectory length does not match horizon");
        episodes_.push_back(std::move(episode));
    }

    const std::vector<Trajectory>& episodes() const noexcept { return episodes_; }
    std::size_t size() const noexcept { return episodes_.size(); }
    bool empty() const noexcept { return episodes_.empty(); }

private:
    LayeredShape shape_;
    std::vector<Trajectory> episodes_;
};

/// Neumaier-compensated running sum.
class CompensatedSum {
public:
    void add(double x) noexcept {
        const double t = sum_ + x;
        if (std::abs(sum_) >= std::abs(x))
            compensation_ += (sum_ - t) + x;
        else
            compensation_ += (x - t) + sum_;
        sum_ = t;
    }
    double value() const noexcept { return sum_ + compensation_; }

private:
    double sum_ = 0.0;
    double compensation_ = 0.0;
};

/// Accumulated loss of one class member; infinite once any term is infinite.
class MemberLoss {
public:
    void add(double term) noexcept {
        if (std::isinf(term))
            infinite_ = true;
        else
            sum_.add(term);
    }
    bool infinite() const noexcept { return infinite_; }
    double value() const noexcept { return infinite_ ? std::numeric_limits<double>::infinity() : sum_.value(); }

private:
    CompensatedSum sum_;
    bool infinite_ = false;
};

/// Every member of the dynamics class assigns probability zero to some
/// observed transition.
class AllInfiniteLoss : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

namespace detail {

inline void add_squared_loss(MemberLoss& acc, const ContextRewards& f, const Trajectory& tr) {
    const auto& table = f.at(tr.context);
    for (std::size_t h = 0; h < tr.steps.size(); ++h) {
        const auto& st = tr.steps[h];
        const double diff = table(h, st.state, st.action) - st.reward;
        acc.add(diff * diff);
    }
}

inline void add_log_loss(MemberLoss& acc, const ContextDynamics& p, const Trajectory& tr) {
    const auto& kernel = p.at(tr.context);
    for (std::size_t h = 0; h < tr.steps.size(); ++h) {
        const auto& st = tr.steps[h];
        const double prob = kernel(h, st.state, st.action, tr.next_state(h));
        acc.add(prob > 0.0 ? -std::log(prob) : std::numeric_limits<double>::infinity());
    }
}

/// Lowest index attaining the minimum finite loss; npos when all are infinite.
inline std::size_t argmin_loss(const std::vector<MemberLoss>& losses) {
    std::size_t best = static_cast<std::size_t>(-1);
    double best_value = std::numeric_limits<double>::infinity();
    for (std::size_t m = 0; m < losses.size(); ++m) {
        if (losses[m].infinite()) continue;
        if (best == static_cast<std::size_t>(-1) || losses[m].value() < best_value) {
            best = m;
            best_value = losses[m].value();
        }
    }
    return best;
}

}  // namespace detail

/// Sum over episodes (outer) and steps (inner) of (f(c, s_h, a_h) - r_h)^2 per member.
inline std::vector<double> lsr_losses(const HistoryDataset& data, const RewardFunctionClass& fc) {
    std::vector<double> out;
    out.reserve(fc.size());
    for (const auto& f : fc.members) {
        MemberLoss acc;
        for (const auto& tr : data.episodes()) detail::add_squared_loss(acc, f, tr);
        out.push_back(acc.value());
    }
    return out;
}

/// Sum of log(1 / P^c(s_{h+1} | s_h, a_h)) per member; +inf on a zero-probability transition.
inline std::vector<double> llr_losses(const HistoryDataset& data, const DynamicsFunctionClass& pc) {
    std::vector<double> out;
    out.reserve(pc.size());
    for (const auto& p : pc.members) {
        MemberLoss acc;
        for (const auto& tr : data.episodes()) detail::add_log_loss(acc, p, tr);
        out.push_back(acc.value());
    }
    return out;
}

/// Offline least-squares oracle over the whole dataset. Ties go to the lowest
/// index, so an empty dataset returns 0.
inline std::size_t lsr_fit(const HistoryDataset& data, const RewardFunctionClass& fc) {
    if (fc.members.empty()) throw std::invalid_argument("lsr_fit: empty reward class");
    std::vector<MemberLoss> losses(fc.size());
    for (std::size_t m = 0; m < fc.size(); ++m)
        for (const auto& tr : data.episodes()) detail::add_squared_loss(losses[m], fc.members[m], tr);
    return detail::argmin_loss(losses);
}

/// Offline log-loss oracle. Throws AllInfiniteLoss when no member has finite loss.
inline std::size_t llr_fit(const HistoryDataset& data, const DynamicsFunctionClass& pc) {
    if (pc.members.empty()) throw std::invalid_argument("llr_fit: empty dynamics class");
    std::vector<MemberLoss> losses(pc.size());
    for (std::size_t m = 0; m < pc.size(); ++m)
        for (const auto& tr : data.episodes()) detail::add_log_loss(losses[m], pc.members[m], tr);
    const auto best = detail::argmin_loss(losses);
    if (best == static_cast<std::size_t>(-1))
        throw AllInfiniteLoss("llr_fit: every dynamics member assigns zero probability to an observed transition");
    return best;
}

/// Running per-member losses. Feeding the same episodes in the same order
/// gives bit-identical losses (and argmins) to lsr_fit / llr_fit on the full
/// dataset, at O(H * class size) per new episode.
class IncrementalOracles {
public:
    IncrementalOracles() = default;
    IncrementalOracles(std::size_t reward_members, std::size_t dynamics_members)
        : reward_losses_(reward_members), dynamics_losses_(dynamics_members) {}

    void observe(const Trajectory& tr, const RewardFunctionClass& fc, const DynamicsFunctionClass& pc) {
        for (std::size_t m = 0; m < fc.size(); ++m) detail::add_squared_loss(reward_losses_[m], fc.members[m], tr);
        for (std::size_t m = 0; m < pc.size(); ++m) detail::add_log_loss(dynamics_losses_[m], pc.members[m], tr);
    }

    std::size_t fit_rewards() const { return detail::argmin_loss(reward_losses_); }

    std::size_t fit_dynamics() const {
        const auto best = detail::argmin_loss(dynamics_losses_);
        if (best == static_cast<std::size_t>(-1))
            throw AllInfiniteLoss("llr oracle: every dynamics member assigns zero probability to an observed transition");
        return best;
    }

    double reward_loss(std::size_t m) const { return reward_losses_.at(m).value(); }
    double dynamics_loss(std::size_t m) const { return dynamics_losses_.at(m).value(); }

private:
    std::vector<MemberLoss> reward_losses_;
    std::vector<MemberLoss> dynamics_losses_;
};

}  // namespace uc3rl
