#pragma once

#include <cmath>

#include "symmetria/net.hpp"

namespace symmetria {

struct AdamWConfig {
  double learning_rate = 0.05;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double weight_decay = 0.01;
};

struct OptimizerState {
  AdamWConfig config;
  Eigen::VectorXd first_moment;
  Eigen::VectorXd second_moment;
  std::uint64_t step = 0;

  static OptimizerState for_model(const ModelParams& params, AdamWConfig config = {}) {
    OptimizerState s;
    s.config = config;
    s.first_moment = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(params.parameter_count()));
    s.second_moment = s.first_moment;
    return s;
  }
};

/// One AdamW update with decoupled weight decay and bias-corrected moments:
///   p <- p (1 - lr wd);  m <- b1 m + (1-b1) g;  v <- b2 v + (1-b2) g^2
///   p <- p - lr (m / (1 - b1^t)) / (sqrt(v / (1 - b2^t)) + eps)
inline void adamw_step(OptimizerState& state, ModelParams& params, const ModelGradients& grads) {
  const auto n = static_cast<Eigen::Index>(params.parameter_count());
  if (state.first_moment.size() != n || state.second_moment.size() != n ||
      static_cast<Eigen::Index>(grads.parameter_count()) != n)
    throw Error("adamw_step: shape mismatch between parameters, gradients and optimizer state");
  const AdamWConfig& c = state.config;
  Eigen::VectorXd p = params.flatten();
  const Eigen::VectorXd g = grads.flatten();
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double bc1 = 1.0 - std::pow(c.beta1, t);
  const double bc2 = 1.0 - std::pow(c.beta2, t);
  for (Eigen::Index i = 0; i < n; ++i) {
    p[i] *= 1.0 - c.learning_rate * c.weight_decay;
    state.first_moment[i] = c.beta1 * state.first_moment[i] + (1.0 - c.beta1) * g[i];
    state.second_moment[i] = c.beta2 * state.second_moment[i] + (1.0 - c.beta2) * g[i] * g[i];
    const double m_hat = state.first_moment[i] / bc1;
    const double v_hat = state.second_moment[i] / bc2;
    p[i] -= c.learning_rate * m_hat / (std::sqrt(v_hat) + c.epsilon);
  }
  params.unflatten(p);
}

}  // namespace symmetria
