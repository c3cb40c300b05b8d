#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace uc3rl {

/// Row-sum tolerance for every stochastic table in the library.
inline constexpr double kStochasticTolerance = 1e-9;

inline std::string index_path(std::string_view root, std::initializer_list<std::size_t> idx) {
    std::string out(root);
    for (auto i : idx) out += "[" + std::to_string(i) + "]";
    return out;
}

/// Layer structure shared by every table: H+1 layers with a single start
/// and a single terminal state, and a fixed action set.
struct LayeredShape {
    std::size_t horizon = 0;
    std::vector<std::size_t> layer_sizes;
    std::size_t action_count = 0;

    std::size_t states(std::size_t h) const { return layer_sizes.at(h); }

    /// Sum of all layer sizes (terminal layer included).
    std::size_t total_states() const {
        return std::accumulate(layer_sizes.begin(), layer_sizes.end(), std::size_t{0});
    }

    void validate() const {
        if (horizon < 1) throw std::invalid_argument("shape: horizon must be >= 1");
        if (layer_sizes.size() != horizon + 1)
            throw std::invalid_argument("shape: layer_sizes must have horizon+1 entries, got " +
                                        std::to_string(layer_sizes.size()));
        if (layer_sizes.front() != 1) throw std::invalid_argument("shape: layer_sizes[0] must be 1");
        if (layer_sizes.back() != 1)
            throw std::invalid_argument("shape: layer_sizes[" + std::to_string(horizon) + "] must be 1");
        for (std::size_t h = 0; h < layer_sizes.size(); ++h)
            if (layer_sizes[h] == 0)
                throw std::invalid_argument(index_path("shape: layer_sizes", {h}) + " must be positive");
        if (action_count < 1) throw std::invalid_argument("shape: action_count must be >= 1");
    }

    friend bool operator==(const LayeredShape&, const LayeredShape&) = default;
};

/// Dense table over (h, s, a) for h in [0, H). Used for rewards, occupancy
/// measures, counterfactual mass and bonuses.
class StateActionTable {
public:
    StateActionTable() = default;

    explicit StateActionTable(LayeredShape shape, double fill = 0.0) : shape_(std::move(shape)) {
        data_.resize(shape_.horizon);
        for (std::size_t h = 0; h < shape_.horizon; ++h)
            data_[h].assign(shape_.states(h) * shape_.action_count, fill);
    }

    const LayeredShape& shape() const noexcept { return shape_; }

    double& operator()(std::size_t h, std::size_t s, std::size_t a) {
        return data_[h][s * shape_.action_count + a];
    }
    double operator()(std::size_t h, std::size_t s, std::size_t a) const {
        return data_[h][s * shape_.action_count + a];
    }

    std::span<double> layer(std::size_t h) { return data_[h]; }
    std::span<const double> layer(std::size_t h) const { return data_[h]; }

    StateActionTable& operator+=(const StateActionTable& other) {
        check_same_shape(other);
        for (std::size_t h = 0; h < data_.size(); ++h)
            for (std::size_t i = 0; i < data_[h].size(); ++i) data_[h][i] += other.data_[h][i];
        return *this;
    }

    void check_same_shape(const StateActionTable& other) const {
        if (!(shape_ == other.shape_)) throw std::invalid_argument("state-action table shape mismatch");
    }

    double min() const {
        double m = INFINITY;
        for (const auto& l : data_)
            for (double x : l) m = std::min(m, x);
        return m;
    }
    double max() const {
        double m = -INFINITY;
        for (const auto& l : data_)
            for (double x : l) m = std::max(m, x);
        return m;
    }

    friend bool operator==(const StateActionTable&, const StateActionTable&) = default;

private:
    LayeredShape shape_;
    std::vector<std::vector<double>> data_;
};

/// Layered transition tensor P[h][s][a][s'] from layer h into layer h+1.
class TransitionKernel {
public:
    TransitionKernel() = default;

    /// All-zero tensor; callers fill rows and then call validate() or normalize_rows().
    explicit TransitionKernel(LayeredShape shape) : shape_(std::move(shape)) {
        data_.resize(shape_.horizon);
        for (std::size_t h = 0; h < shape_.horizon; ++h)
            data_[h].assign(shape_.states(h) * shape_.action_count * shape_.states(h + 1), 0.0);
    }

    const LayeredShape& shape() const noexcept { return shape_; }

    std::span<double> row(std::size_t h, std::size_t s, std::size_t a) {
        const std::size_t n = shape_.states(h + 1);
        return std::span<double>(data_[h]).subspan((s * shape_.action_count + a) * n, n);
    }
    std::span<const double> row(std::size_t h, std::size_t s, std::size_t a) const {
        const std::size_t n = shape_.states(h + 1);
        return std::span<const double>(data_[h]).subspan((s * shape_.action_count + a) * n, n);
    }

    double operator()(std::size_t h, std::size_t s, std::size_t a, std::size_t next) const {
        return row(h, s, a)[next];
    }

    /// Throws std::invalid_argument naming the first offending row as root[h][s][a].
    void validate(std::string_view root = "dynamics") const {
        for (std::size_t h = 0; h < shape_.horizon; ++h)
            for (std::size_t s = 0; s < shape_.states(h); ++s)
                for (std::size_t a = 0; a < shape_.action_count; ++a) {
                    double total = 0.0;
                    for (std::size_t n = 0; n < shape_.states(h + 1); ++n) {
                        const double p = row(h, s, a)[n];
                        if (!(p >= 0.0) || !std::isfinite(p))
                            throw std::invalid_argument(index_path(root, {h, s, a, n}) +
                                                        ": probability must be finite and >= 0");
                        total += p;
                    }
                    if (std::abs(total - 1.0) > kStochasticTolerance)
                        throw std::invalid_argument(index_path(root, {h, s, a}) + ": row sums to " +
                                                    std::to_string(total) + ", expected 1");
                }
    }

    /// Divides every row by its sum. Rows summing to zero become uniform.
    void normalize_rows() {
        for (std::size_t h = 0; h < shape_.horizon; ++h)
            for (std::size_t s = 0; s < shape_.states(h); ++s)
                for (std::size_t a = 0; a < shape_.action_count; ++a) {
                    auto r = row(h, s, a);
                    double total = std::accumulate(r.begin(), r.end(), 0.0);
                    for (auto& p : r) p = total > 0.0 ? p / total : 1.0 / static_cast<double>(r.size());
                }
    }

    friend bool operator==(const TransitionKernel&, const TransitionKernel&) = default;

private:
    LayeredShape shape_;
    std::vector<std::vector<double>> data_;
};

}  // namespace uc3rl
