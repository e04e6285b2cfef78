// Copyright (c) 2026 vrft contributors
// SPDX-License-Identifier: Apache-2.0
//
// Evaluation metrics, the evaluation driver and the ablation protocols
// (prompt robustness, data efficiency).

#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "vrft/data.hpp"
#include "vrft/grpo.hpp"
#include "vrft/policy.hpp"
#include "vrft/rewards.hpp"

namespace vrft {

struct ClassificationMetrics {
  double accuracy = 0.0;
  double macro_f1 = 0.0;
};

/// Accuracy and macro-F1 over the classes present in `golds`. A missing
/// prediction is wrong and adds no false positive. Throws ArgumentError on
/// length mismatch, empty input or labels outside [0, n_classes).
ClassificationMetrics classification_metrics(std::span<const std::optional<int>> preds,
                                             std::span<const int> golds, int n_classes);
ClassificationMetrics classification_metrics(std::span<const int> preds,
                                             std::span<const int> golds, int n_classes);

struct VqaMetrics {
  double closed_accuracy = 0.0;
  double open_recall = 0.0;
  std::size_t closed = 0;
  std::size_t open = 0;
  std::size_t skipped = 0;  // samples whose gold answer is empty
};

/// Closed questions (with options) score exact normalized match; open
/// questions score multiset token recall.
VqaMetrics vqa_metrics(std::span<const std::string> preds, std::span<const TaskSample> samples);

inline const std::vector<double>& default_iou_thresholds() {
  static const std::vector<double> t{0.1, 0.3, 0.5};
  return t;
}

struct GroundingMetrics {
  std::vector<double> thresholds;
  std::vector<double> accuracy;  // Acc@threshold, same order
  double miou = 0.0;
};

/// Missing predictions count as IoU 0. Throws ArgumentError on length
/// mismatch or empty input.
GroundingMetrics grounding_metrics(std::span<const std::optional<BoundingBox>> preds,
                                   std::span<const BoundingBox> golds,
                                   const std::vector<double>& thresholds = default_iou_thresholds());

enum class Decoding { sampled, greedy };

Decoding parse_decoding(std::string_view s);
std::string_view to_string(Decoding d) noexcept;

struct EvalConfig {
  std::vector<double> thresholds = default_iou_thresholds();
  /// Sampled decoding uses a per-sample stream derived from (seed, index),
  /// so two models see the same random numbers on the same sample.
  Decoding decoding = Decoding::sampled;
  std::uint64_t seed = 0;
  std::string diagnosis_prefix{kDiagnosisPrefix};

  void validate() const;
};

inline constexpr int kEvalReportSchema = 1;

struct EvalReport {
  int schema_version = kEvalReportSchema;
  std::string config_hash;
  std::string config_echo = "{}";  // resolved configuration, compact JSON
  std::map<std::string, std::map<std::string, double>> metrics;  // task -> name -> value
  std::map<std::string, std::size_t> counts;

  double metric(const std::string& task, const std::string& name) const;
  std::string to_json() const;
  std::string csv_header() const;
  std::string csv_row() const;
};

/// Class whose name follows the diagnosis prefix, if any.
std::optional<int> predict_label(std::string_view output, const std::vector<std::string>& classes,
                                 std::string_view prefix);

/// Decoded responses of `params` on each sample of `split`, in order.
std::vector<std::string> decode_split(const PolicyParams& params, const DatasetSplit& split,
                                      const EvalConfig& cfg, Execution exec = Execution::parallel);

/// Decodes every sample and scores each task present in the split. Throws
/// ArgumentError("empty dataset") on an empty split.
EvalReport evaluate(const PolicyParams& params, const DatasetSplit& split,
                    const std::vector<std::string>& classes, const EvalConfig& cfg,
                    Execution exec = Execution::parallel);

/// Base instruction plus ten paraphrases, each with a {modality} slot.
const std::vector<std::string>& robustness_templates();

struct RobustnessResult {
  std::vector<std::string> templates;
  std::vector<EvalReport> reports;
  std::vector<double> accuracies;
  double max_delta = 0.0;  // max |acc_i - acc_j|
};

/// Re-evaluates the diagnosis samples of `split` with each template as the
/// instruction. Throws ArgumentError for fewer than two templates or a
/// template without the placeholder.
RobustnessResult prompt_robustness(const PolicyParams& params, const DatasetSplit& split,
                                   const std::vector<std::string>& templates,
                                   std::string_view modality,
                                   const std::vector<std::string>& classes, const EvalConfig& cfg,
                                   Execution exec = Execution::parallel);

struct SweepRow {
  double fraction = 1.0;
  std::size_t subset_size = 0;
  EvalReport report;
};

/// Trains RFT from the same SFT parameters at each fraction of the RFT
/// subset and evaluates on `heldout`. Rows follow `fractions`.
std::vector<SweepRow> data_efficiency_sweep(const PolicyParams& sft_params,
                                            const DatasetSplit& train, const DatasetSplit& heldout,
                                            const std::vector<double>& fractions,
                                            const GrpoConfig& grpo,
                                            const std::vector<std::string>& classes,
                                            const RewardConfig& reward, const EvalConfig& eval,
                                            Execution exec = Execution::parallel);

}  // namespace vrft
