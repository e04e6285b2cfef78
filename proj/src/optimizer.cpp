// Copyright (c) 2026 vrft contributors
// SPDX-License-Identifier: Apache-2.0

#include "vrft/optimizer.hpp"

#include <cmath>
#include <string>

#include "vrft/error.hpp"

namespace vrft {

OptimizerKind parse_optimizer(std::string_view s) {
  if (s == "sgd") return OptimizerKind::sgd;
  if (s == "adam") return OptimizerKind::adam;
  throw ConfigError("unknown optimizer '" + std::string(s) + "' (expected sgd or adam)");
}

std::string_view to_string(OptimizerKind k) noexcept { return k == OptimizerKind::sgd ? "sgd" : "adam"; }

void OptimizerConfig::validate(std::string_view path) const {
  const std::string p(path);
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate))
    throw ConfigError(p + ".learning_rate must be finite and >= 0");
  if (!std::isfinite(clip_norm)) throw ConfigError(p + ".clip_norm must be finite");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0))
    throw ConfigError(p + ".beta1/beta2 must lie in [0, 1)");
  if (!(epsilon > 0.0)) throw ConfigError(p + ".epsilon must be > 0");
}

double global_norm(const Trainable& grad) {
  double s = 0.0;
  for (auto b : grad.blocks())
    for (double v : b) s += v * v;
  return std::sqrt(s);
}

double Optimizer::step(Trainable& params, Trainable& grad) {
  const double norm = global_norm(grad);
  if (!std::isfinite(norm)) throw NumericError("non-finite gradient norm");
  if (config_.clip_norm > 0.0 && norm > config_.clip_norm) {
    const double f = config_.clip_norm / norm;
    for (auto b : grad.blocks())
      for (auto& v : b) v *= f;
  }
  const double lr = config_.learning_rate;
  if (config_.kind == OptimizerKind::sgd) {
    params.add(grad, -lr);
    return norm;
  }
  if (t_ == 0) {
    m_ = params.zeros_like();
    v_ = params.zeros_like();
  }
  ++t_;
  const double b1 = config_.beta1, b2 = config_.beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(t_));
  auto pb = params.blocks();
  const auto gb = grad.blocks();
  auto mb = m_.blocks();
  auto vb = v_.blocks();
  for (std::size_t k = 0; k < pb.size(); ++k)
    for (std::size_t i = 0; i < pb[k].size(); ++i) {
      const double g = gb[k][i];
      mb[k][i] = b1 * mb[k][i] + (1.0 - b1) * g;
      vb[k][i] = b2 * vb[k][i] + (1.0 - b2) * g * g;
      pb[k][i] -= lr * (mb[k][i] / c1) / (std::sqrt(vb[k][i] / c2) + config_.epsilon);
    }
  return norm;
}

}  // namespace vrft
