// Copyright (c) 2026 vrft contributors
// SPDX-License-Identifier: Apache-2.0
//
// Stage 1: mean negative log-likelihood of gold responses, minimized over
// the trainable blocks only.

#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "vrft/data.hpp"
#include "vrft/optimizer.hpp"
#include "vrft/policy.hpp"

namespace vrft {

struct SftConfig {
  OptimizerConfig optimizer{};
  int batch_size = 32;
  int steps = 4000;
  /// Probability of hiding each instruction word bucket from a training
  /// example at a given step. At least one bucket is always kept.
  double instruction_dropout = 0.0;
  std::uint64_t seed = 0;

  void validate() const;
};

struct SftExample {
  const EncodedInput* input = nullptr;
  TokenSequence gold;
};

/// Encodes the target response of `sample` and appends the end token.
/// Throws ArgumentError naming the first word outside the vocabulary.
TokenSequence gold_sequence(const PolicyParams& params, const TaskSample& sample,
                            const std::vector<std::string>& classes);

/// -(1/N) sum_i log p(gold_i | input_i).
double sft_loss(const PolicyParams& params, std::span<const SftExample> batch);
PathObjective sft_objective(std::span<const SftExample> batch);

/// One optimizer step on `batch`; returns the loss before the update.
double sft_step(PolicyParams& params, std::span<const SftExample> batch, Optimizer& optimizer,
                Execution exec = Execution::parallel);

struct SftResult {
  PolicyParams params;
  std::vector<double> losses;  // one per step
};

/// Mini-batches are drawn without replacement within a step from a stream
/// derived from (seed, step).
SftResult train_sft(PolicyParams initial, const DatasetSplit& data, const SftConfig& config,
                    const std::vector<std::string>& classes, Execution exec = Execution::parallel);

/// CSV with header "step,loss".
void write_loss_csv(const std::filesystem::path& path, std::span<const double> losses,
                    std::string_view config_hash);

}  // namespace vrft
