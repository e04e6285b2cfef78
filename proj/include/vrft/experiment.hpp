// Copyright (c) 2026 vrft contributors
// SPDX-License-Identifier: Apache-2.0
//
// Experiment configuration (one JSON document with dotted-path overrides)
// and the pipeline commands behind the command-line tool.

#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "vrft/data.hpp"
#include "vrft/grpo.hpp"
#include "vrft/metrics.hpp"
#include "vrft/policy.hpp"
#include "vrft/rewards.hpp"
#include "vrft/sft.hpp"

namespace vrft {

struct ExperimentConfig {
  std::uint64_t seed = 7;
  std::string output_dir = "out";
  bool parallel = true;

  GeneratorConfig data{};
  int train_images = 2000;
  int test_images = 500;
  std::string train_path;  // empty: <output_dir>/train.jsonl
  std::string test_path;   // empty: <output_dir>/test.jsonl

  PolicyConfig policy{};
  SftConfig sft{};
  GrpoConfig grpo{};
  RewardConfig reward{};
  EvalConfig eval{};
  std::string eval_checkpoint = "rft";  // "sft" or "rft"
  std::vector<double> sweep_fractions{0.2, 0.4, 0.6, 0.8, 1.0};

  /// Defaults tuned for the planted-shape task.
  ExperimentConfig();

  /// Throws ConfigError naming the offending field path.
  void validate() const;

  /// Resolved configuration as JSON text (sub-seeds included).
  std::string to_json() const;
  /// 16 hex digits of FNV-1a over to_json().
  std::string hash() const;

  Execution execution() const noexcept { return parallel ? Execution::parallel : Execution::serial; }
  std::filesystem::path out_path() const { return output_dir; }
  std::filesystem::path train_file() const;
  std::filesystem::path test_file() const;
  std::vector<std::string> classes() const { return class_names(data.classes); }

  std::uint64_t train_data_seed() const;
  std::uint64_t test_data_seed() const;
  std::uint64_t policy_seed() const;
};

/// Builds a configuration from defaults, an optional JSON file and
/// "dotted.path=value" overrides (values parsed as JSON, else taken as a
/// string). Sub-seeds are re-derived from the master seed, so a resolved
/// echo loads back unchanged. Unknown fields and type errors raise
/// ConfigError with the field path; an unreadable file raises IoError.
ExperimentConfig load_config(const std::filesystem::path* file,
                             const std::vector<std::string>& overrides);

const std::vector<std::string>& command_names();

/// Runs one pipeline command. Returns the process exit status: 0 on
/// success, 1 on a reported error (one JSON line on `err`), 2 for an
/// unknown command (usage on `err`).
int run_command(std::string_view command, const ExperimentConfig& config, std::ostream& out,
                std::ostream& err);

std::string usage_text();

}  // namespace vrft
