#pragma once

#include <catfl/bytes.hpp>
#include <catfl/rng.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

namespace catfl::fl {

struct TrainError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ModelVector {
    std::vector<double> weights;
    std::uint32_t round = 0;

    bool operator==(const ModelVector&) const = default;
};

struct DataShard {
    std::vector<std::vector<double>> features;
    std::vector<double> targets;
    int client_index = 0;
};

struct FLConfig {
    std::uint32_t rounds = 50;
    std::uint32_t total_clients = 10;
    std::uint32_t participants_per_round = 10;
    std::uint32_t local_epochs = 5;
    double learning_rate = 0.05;
    std::uint32_t dimension = 4;
    std::uint64_t data_seed = 1;
    std::uint32_t points_per_client = 100;
    double noise_sigma = 0.1;

    void validate() const {
        if (rounds == 0 || total_clients == 0 || participants_per_round == 0 ||
            local_epochs == 0 || dimension == 0 || points_per_client == 0) {
            throw std::invalid_argument("fl config: all counts must be positive");
        }
        if (participants_per_round > total_clients) {
            throw std::invalid_argument("fl config: participation exceeds client count");
        }
        if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
            throw std::invalid_argument("fl config: learning rate must be positive");
        }
        if (noise_sigma < 0.0) throw std::invalid_argument("fl config: negative noise");
    }
};

struct Task {
    std::vector<DataShard> shards;
    DataShard test;
    std::vector<double> true_weights;
};

/// Synthetic linear regression y = w*.x + noise. One shard per client plus a
/// held-out test shard, all driven by the caller's rng.
inline Task make_task(const FLConfig& cfg, SeededRng& rng) {
    cfg.validate();
    Task task;
    task.true_weights.resize(cfg.dimension);
    for (auto& w : task.true_weights) w = 2.0 * rng.next_unit() - 1.0;

    auto fill = [&](DataShard& shard, std::size_t n, int index) {
        shard.client_index = index;
        shard.features.resize(n);
        shard.targets.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
            auto& x = shard.features[i];
            x.resize(cfg.dimension);
            double y = 0.0;
            for (std::uint32_t j = 0; j < cfg.dimension; ++j) {
                x[j] = rng.next_gaussian();
                y += task.true_weights[j] * x[j];
            }
            shard.targets[i] = y + cfg.noise_sigma * rng.next_gaussian();
        }
    };

    task.shards.resize(cfg.total_clients);
    for (std::uint32_t c = 0; c < cfg.total_clients; ++c) {
        fill(task.shards[c], cfg.points_per_client, static_cast<int>(c));
    }
    fill(task.test, 512, -1);
    return task;
}

inline double evaluate(const ModelVector& model, const DataShard& data) {
    if (data.targets.empty()) throw std::invalid_argument("evaluate: empty data");
    double sum = 0.0;
    for (std::size_t i = 0; i < data.targets.size(); ++i) {
        const auto& x = data.features[i];
        if (x.size() != model.weights.size()) {
            throw std::invalid_argument("evaluate: dimension mismatch");
        }
        double pred = 0.0;
        for (std::size_t j = 0; j < x.size(); ++j) pred += model.weights[j] * x[j];
        double err = pred - data.targets[i];
        sum += err * err;
    }
    return sum / static_cast<double>(data.targets.size());
}

/// Full-batch gradient descent on the mean squared loss; the gradient of
/// (1/n) sum (w.x - y)^2 is (2/n) sum (w.x - y) x. Round is bumped by one.
inline ModelVector local_train(const ModelVector& model, const DataShard& shard,
                               std::uint32_t epochs, double lr) {
    if (shard.targets.empty()) throw std::invalid_argument("local_train: empty shard");
    ModelVector out = model;
    const std::size_t n = shard.targets.size();
    const std::size_t d = out.weights.size();
    std::vector<double> grad(d);
    for (std::uint32_t e = 0; e < epochs; ++e) {
        std::fill(grad.begin(), grad.end(), 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            const auto& x = shard.features[i];
            if (x.size() != d) throw std::invalid_argument("local_train: dimension mismatch");
            double pred = 0.0;
            for (std::size_t j = 0; j < d; ++j) pred += out.weights[j] * x[j];
            double residual = pred - shard.targets[i];
            for (std::size_t j = 0; j < d; ++j) grad[j] += residual * x[j];
        }
        double scale = 2.0 * lr / static_cast<double>(n);
        for (std::size_t j = 0; j < d; ++j) {
            out.weights[j] -= scale * grad[j];
            if (!std::isfinite(out.weights[j])) {
                throw TrainError("local training diverged to a non-finite weight");
            }
        }
    }
    out.round = model.round + 1;
    return out;
}

/// Canonical update bytes: 4-byte round, 4-byte weight count (both
/// big-endian), then each weight as IEEE-754 little-endian.
inline Bytes encode_update(const ModelVector& model) {
    Bytes out;
    out.reserve(8 + model.weights.size() * 8);
    append_u32be(out, model.round);
    append_u32be(out, static_cast<std::uint32_t>(model.weights.size()));
    for (double w : model.weights) {
        std::uint64_t bits;
        std::memcpy(&bits, &w, sizeof bits);
        for (int shift = 0; shift < 64; shift += 8) {
            out.push_back(static_cast<std::uint8_t>(bits >> shift));
        }
    }
    return out;
}

inline std::optional<ModelVector> decode_update(std::span<const std::uint8_t> data) {
    Cursor cur(data);
    auto round = cur.take_u32be();
    auto count = cur.take_u32be();
    if (!round || !count) return std::nullopt;
    if (cur.remaining() != static_cast<std::size_t>(*count) * 8) return std::nullopt;
    ModelVector model;
    model.round = *round;
    model.weights.resize(*count);
    for (auto& w : model.weights) {
        auto raw = cur.take(8);
        std::uint64_t bits = 0;
        for (int i = 7; i >= 0; --i) bits = (bits << 8) | (*raw)[static_cast<std::size_t>(i)];
        std::memcpy(&w, &bits, sizeof w);
    }
    return model;
}

inline std::size_t update_size(std::uint32_t dimension) { return 8 + 8 * std::size_t{dimension}; }

/// Weighted mean of the updates. All inputs must agree on dimension and
/// round; weights are nonnegative and not all zero.
inline ModelVector aggregate(std::span<const ModelVector> updates,
                             std::span<const double> weights) {
    if (updates.empty()) throw std::invalid_argument("aggregate: no updates");
    if (weights.size() != updates.size()) {
        throw std::invalid_argument("aggregate: weight count mismatch");
    }
    const std::size_t d = updates.front().weights.size();
    const std::uint32_t round = updates.front().round;
    double total = 0.0;
    for (double w : weights) {
        if (w < 0.0 || !std::isfinite(w)) throw std::invalid_argument("aggregate: bad weight");
        total += w;
    }
    if (total <= 0.0) throw std::invalid_argument("aggregate: weights sum to zero");

    ModelVector out;
    out.round = round;
    out.weights.assign(d, 0.0);
    for (std::size_t i = 0; i < updates.size(); ++i) {
        const auto& u = updates[i];
        if (u.weights.size() != d) throw std::invalid_argument("aggregate: dimension mismatch");
        if (u.round != round) throw std::invalid_argument("aggregate: round mismatch");
        double scale = weights[i] / total;
        for (std::size_t j = 0; j < d; ++j) out.weights[j] += scale * u.weights[j];
    }
    return out;
}

/// Ordinary least squares over pooled shards via the normal equations,
/// solved by Gaussian elimination with partial pivoting. This is the
/// closed-form convergence reference for the iterative path.
inline std::vector<double> least_squares(std::span<const DataShard> shards) {
    std::size_t d = 0;
    for (const auto& s : shards) {
        if (!s.features.empty()) {
            d = s.features.front().size();
            break;
        }
    }
    if (d == 0) throw std::invalid_argument("least_squares: no data");

    std::vector<std::vector<double>> m(d, std::vector<double>(d + 1, 0.0));
    for (const auto& s : shards) {
        for (std::size_t i = 0; i < s.targets.size(); ++i) {
            const auto& x = s.features[i];
            for (std::size_t r = 0; r < d; ++r) {
                for (std::size_t c = 0; c < d; ++c) m[r][c] += x[r] * x[c];
                m[r][d] += x[r] * s.targets[i];
            }
        }
    }

    for (std::size_t col = 0; col < d; ++col) {
        std::size_t pivot = col;
        for (std::size_t r = col + 1; r < d; ++r) {
            if (std::fabs(m[r][col]) > std::fabs(m[pivot][col])) pivot = r;
        }
        if (std::fabs(m[pivot][col]) < 1e-12) {
            throw std::runtime_error("least_squares: singular normal equations");
        }
        std::swap(m[col], m[pivot]);
        for (std::size_t r = 0; r < d; ++r) {
            if (r == col) continue;
            double factor = m[r][col] / m[col][col];
            for (std::size_t c = col; c <= d; ++c) m[r][c] -= factor * m[col][c];
        }
    }
    std::vector<double> w(d);
    for (std::size_t r = 0; r < d; ++r) w[r] = m[r][d] / m[r][r];
    return w;
}

}  // namespace catfl::fl
