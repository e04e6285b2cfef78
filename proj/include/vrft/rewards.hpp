// Copyright (c) 2026 vrft contributors
// SPDX-License-Identifier: Apache-2.0
//
// Verifiable rewards: pure functions of (output text, ground truth, config).

#pragma once

#include <optional>
#include <string>
#include <string_view>

#include "vrft/core.hpp"
#include "vrft/data.hpp"

namespace vrft {

struct RewardConfig {
  double iou_low_threshold = 0.1;
  std::string diagnosis_prefix{kDiagnosisPrefix};

  void validate() const;
};

/// 1 when the output starts with the configured prefix and the remainder
/// contains the normalized gold label as a contiguous token run, else 0.
double reward_diagnosis(std::string_view output, std::string_view gold_label,
                        const RewardConfig& cfg);

/// First four (optionally signed) integers in order as (x, y, w, h).
/// Fewer than four integers or a box violating its invariants yields
/// nullopt.
std::optional<BoundingBox> parse_box(std::string_view output);

/// IoU with the gold box when it reaches the threshold, else 0.
double reward_localization(std::string_view output, const BoundingBox& gold,
                           const RewardConfig& cfg);

/// Multiset token F1. Throws ArgumentError when gold normalizes to nothing.
double token_f1(std::string_view pred, std::string_view gold);

/// Multiset token recall |pred ∩ gold| / |gold|. Throws ArgumentError when
/// gold normalizes to nothing.
double token_recall(std::string_view pred, std::string_view gold);

/// Reward of `output` for a diagnosis or grounding sample. VQA samples have
/// no reward and raise ConfigError.
double task_reward(const TaskSample& sample, std::string_view output,
                   const std::vector<std::string>& classes, const RewardConfig& cfg);

}  // namespace vrft
