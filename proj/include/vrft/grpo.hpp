// Copyright (c) 2026 vrft contributors
// SPDX-License-Identifier: Apache-2.0
//
// Stage 2: group sampling, group-relative advantages and the clipped
// surrogate with a KL penalty towards a reference policy.

#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string_view>
#include <vector>

#include "vrft/data.hpp"
#include "vrft/optimizer.hpp"
#include "vrft/policy.hpp"
#include "vrft/rewards.hpp"

namespace vrft {

/// Policy the KL penalty is measured against: the per-step sampling
/// snapshot, or the policy RFT started from.
enum class KlReference { snapshot, initial };

KlReference parse_kl_reference(std::string_view name);
std::string_view to_string(KlReference r) noexcept;

struct GrpoConfig {
  int group_size = 8;
  double clip_epsilon = 0.2;
  double kl_weight = 0.04;
  double std_epsilon = 1e-8;
  KlDirection kl_direction = KlDirection::forward;
  KlReference kl_reference = KlReference::snapshot;
  OptimizerConfig optimizer{OptimizerKind::sgd, 0.02, 5.0};
  int iterations = 20;
  int batch_size = 8;
  /// Share of the training split drawn for RFT.
  double rft_fraction = 0.01;
  /// Further fraction of that subset (data-efficiency ablation).
  double data_fraction = 1.0;
  std::uint64_t seed = 0;

  void validate() const;
};

struct AdvantageSet {
  std::vector<double> raw;         // r_i - mean
  std::vector<double> normalized;  // raw / (population std + std_epsilon)
};

/// Throws ArgumentError for fewer than two rewards.
AdvantageSet group_advantages(std::span<const double> rewards, double std_epsilon);

struct GroupRollout {
  const TaskSample* sample = nullptr;
  const EncodedInput* input = nullptr;
  std::vector<SampledOutput> outputs;  // log-probs under the snapshot
  std::vector<double> rewards;
  PolicySnapshot snapshot;
  const PolicyParams* kl_reference = nullptr;  // null: the snapshot
};

struct GrpoLoss {
  double loss = 0.0;
  double surrogate = 0.0;  // averaged clipped surrogate (before the sign flip)
  double kl = 0.0;         // averaged per-token KL
  double mean_ratio = 0.0;
  double clip_fraction = 0.0;  // tokens whose clipped branch is strictly smaller
  std::size_t tokens = 0;
  PathObjective objective;  // differentiable form at the current parameters
};

/// L = (1/M) sum_m (1/G) sum_i (1/T_i) sum_t [-min(r_t A_i, clip(r_t) A_i) + beta KL_t]
/// with r_t = exp(log p_theta - log p_old). Throws NumericError naming the
/// rollout when a ratio is not finite.
GrpoLoss grpo_loss(const PolicyParams& params, std::span<const GroupRollout> rollouts,
                   const GrpoConfig& cfg);

struct GrpoDiagnostics {
  double loss = 0.0;         // before the update
  double mean_reward = 0.0;  // over all sampled outputs
  double mean_ratio = 1.0;   // after the update, over sampled tokens
  double kl = 0.0;           // after the update
  double clip_fraction = 0.0;  // after the update
};

/// Samples G outputs per batch element from a snapshot of `params`, scores
/// them and takes one optimizer step on grpo_loss. Group streams are
/// derived from (stream_seed, element index). A null `kl_reference` means
/// the snapshot.
GrpoDiagnostics grpo_step(PolicyParams& params, std::span<const TaskSample* const> batch,
                          std::span<const EncodedInput* const> inputs, const GrpoConfig& cfg,
                          Optimizer& optimizer, std::uint64_t stream_seed,
                          const std::vector<std::string>& classes, const RewardConfig& reward,
                          Execution exec = Execution::parallel,
                          const PolicyParams* kl_reference = nullptr);

/// ceil(rft_fraction * |data|) reliable diagnosis and grounding samples,
/// stratified; then data_fraction of that subset. Throws
/// ArgumentError when nothing remains.
DatasetSplit rft_subset(const DatasetSplit& data, const GrpoConfig& cfg);

struct RftResult {
  PolicyParams params;
  std::vector<GrpoDiagnostics> diagnostics;
  DatasetSplit subset;
};

RftResult train_rft(PolicyParams sft_params, const DatasetSplit& data, const GrpoConfig& cfg,
                    const std::vector<std::string>& classes, const RewardConfig& reward,
                    Execution exec = Execution::parallel);

/// CSV with header "step,mean_reward,mean_ratio,kl,clip_fraction".
void write_diagnostics_csv(const std::filesystem::path& path,
                           std::span<const GrpoDiagnostics> diagnostics,
                           std::string_view config_hash);

}  // namespace vrft
