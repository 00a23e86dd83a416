#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "charlead/errors.hpp"

namespace charlead {

// First/second-moment accumulators over the flat parameter buffer.
template <typename T>
struct AdamState {
    std::vector<T> m, v;
    int64_t t = 0;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;

    explicit AdamState(std::size_t size) : m(size, T(0)), v(size, T(0)) {}
};

template <typename T>
struct NesterovState {
    std::vector<T> velocity;
    double mu = 0.9;

    explicit NesterovState(std::size_t size, double momentum = 0.9)
        : velocity(size, T(0)), mu(momentum) {}
};

// Scales gradients so the global L2 norm never exceeds max_norm; direction
// is preserved. Throws NumericError("gradient overflow") on non-finite
// entries. Returns the pre-clip norm.
template <typename T>
double clip_gradients(std::span<T> grads, double max_norm) {
    if (!(max_norm > 0.0))
        throw std::invalid_argument("max_norm must be positive");
    double sumsq = 0.0;
    for (T g : grads) {
        const double gd = static_cast<double>(g);
        if (!std::isfinite(gd)) throw NumericError("gradient overflow");
        sumsq += gd * gd;
    }
    const double norm = std::sqrt(sumsq);
    if (norm > max_norm) {
        const T scale = static_cast<T>(max_norm / norm);
        for (T& g : grads) g *= scale;
    }
    return norm;
}

// One Adam update with bias correction.
template <typename T>
void adam_step(std::span<T> params, std::span<const T> grads,
               AdamState<T>& state, double lr) {
    if (params.size() != grads.size() || params.size() != state.m.size())
        throw std::invalid_argument("adam_step shape mismatch");
    state.t += 1;
    const double b1 = state.beta1, b2 = state.beta2;
    const double bc1 = 1.0 - std::pow(b1, static_cast<double>(state.t));
    const double bc2 = 1.0 - std::pow(b2, static_cast<double>(state.t));
    for (std::size_t i = 0; i < params.size(); ++i) {
        const double g = static_cast<double>(grads[i]);
        const double m = b1 * static_cast<double>(state.m[i]) + (1.0 - b1) * g;
        const double v =
            b2 * static_cast<double>(state.v[i]) + (1.0 - b2) * g * g;
        state.m[i] = static_cast<T>(m);
        state.v[i] = static_cast<T>(v);
        const double m_hat = m / bc1;
        const double v_hat = v / bc2;
        params[i] = static_cast<T>(static_cast<double>(params[i]) -
                                   lr * m_hat / (std::sqrt(v_hat) + state.eps));
    }
}

// Nesterov momentum: the gradient is applied at the look-ahead point.
// v' = mu*v - lr*g ; theta' = theta + mu*v' - lr*g
template <typename T>
void nesterov_step(std::span<T> params, std::span<const T> grads,
                   NesterovState<T>& state, double lr) {
    if (params.size() != grads.size() ||
        params.size() != state.velocity.size())
        throw std::invalid_argument("nesterov_step shape mismatch");
    const double mu = state.mu;
    for (std::size_t i = 0; i < params.size(); ++i) {
        const double g = static_cast<double>(grads[i]);
        const double v =
            mu * static_cast<double>(state.velocity[i]) - lr * g;
        state.velocity[i] = static_cast<T>(v);
        params[i] = static_cast<T>(static_cast<double>(params[i]) + mu * v -
                                   lr * g);
    }
}

// ----------------------------------------------------------- scheduling

enum class OptimizerKind : uint8_t { Adam, NesterovSgd };

inline const char* optimizer_name(OptimizerKind k) {
    return k == OptimizerKind::Adam ? "adam" : "nesterov_sgd";
}

struct Schedule {
    int32_t adam_epochs = 55;
    int32_t sgd_epochs = 20;
    double adam_lr = 0.001;
    double sgd_lr = 0.002;

    int32_t total_epochs() const { return adam_epochs + sgd_epochs; }
    void validate() const {
        if (adam_epochs < 0 || sgd_epochs < 0)
            throw ConfigError("epoch counts must be >= 0");
        if (!(adam_lr > 0.0) || !(sgd_lr > 0.0))
            throw ConfigError("learning rates must be positive");
    }
};

struct EpochOptimizer {
    OptimizerKind kind;
    double lr;
};

// epoch is 1-based; the switch happens after adam_epochs.
inline EpochOptimizer optimizer_for_epoch(const Schedule& schedule,
                                          int32_t epoch) {
    schedule.validate();
    if (epoch < 1 || epoch > schedule.total_epochs())
        throw std::out_of_range("epoch " + std::to_string(epoch) +
                                " outside schedule of " +
                                std::to_string(schedule.total_epochs()));
    if (epoch <= schedule.adam_epochs)
        return {OptimizerKind::Adam, schedule.adam_lr};
    return {OptimizerKind::NesterovSgd, schedule.sgd_lr};
}

}  // namespace charlead
