// Copyright (c) 2026 vrft contributors
// SPDX-License-Identifier: Apache-2.0
//
// First-order updates over the trainable blocks with global-norm clipping.

#pragma once

#include <string_view>

#include "vrft/policy.hpp"

namespace vrft {

enum class OptimizerKind { sgd, adam };

OptimizerKind parse_optimizer(std::string_view s);
std::string_view to_string(OptimizerKind k) noexcept;

struct OptimizerConfig {
  OptimizerKind kind = OptimizerKind::adam;
  double learning_rate = 0.01;
  double clip_norm = 5.0;  // <= 0 disables clipping
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  void validate(std::string_view path) const;
};

double global_norm(const Trainable& grad);

class Optimizer {
 public:
  explicit Optimizer(OptimizerConfig config) : config_(config) {}

  /// Clips `grad` in place, then updates `params`. Returns the pre-clip
  /// gradient norm. Throws NumericError when the gradient is not finite;
  /// parameters are left untouched in that case.
  double step(Trainable& params, Trainable& grad);

  const OptimizerConfig& config() const noexcept { return config_; }

 private:
  OptimizerConfig config_;
  Trainable m_, v_;
  long long t_ = 0;
};

}  // namespace vrft
