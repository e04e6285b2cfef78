// Copyright (c) 2026 vrft contributors
// SPDX-License-Identifier: Apache-2.0

#include "vrft/rewards.hpp"

#include <algorithm>
#include <cctype>
#include <climits>
#include <map>

#include "vrft/error.hpp"

namespace vrft {

void RewardConfig::validate() const {
  if (!(iou_low_threshold >= 0.0 && iou_low_threshold < 1.0))
    throw ConfigError("reward.iou_low_threshold must lie in [0, 1)");
  if (diagnosis_prefix.empty()) throw ConfigError("reward.diagnosis_prefix must be non-empty");
}

namespace {

std::string lower_trimmed(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  std::string out(s.substr(b, e - b + 1));
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

std::map<std::string, int> bag(const std::vector<std::string>& tokens) {
  std::map<std::string, int> m;
  for (const auto& t : tokens) ++m[t];
  return m;
}

int overlap(const std::vector<std::string>& pred, const std::vector<std::string>& gold) {
  const auto pg = bag(pred);
  int common = 0;
  for (const auto& [tok, n] : bag(gold)) {
    auto it = pg.find(tok);
    if (it != pg.end()) common += std::min(n, it->second);
  }
  return common;
}

}  // namespace

double reward_diagnosis(std::string_view output, std::string_view gold_label,
                        const RewardConfig& cfg) {
  const auto gold = normalize_and_tokenize(gold_label);
  if (gold.empty()) return 0.0;
  const auto text = lower_trimmed(output);
  const auto prefix = lower_trimmed(cfg.diagnosis_prefix);
  if (text.compare(0, prefix.size(), prefix) != 0) return 0.0;
  const auto rest = normalize_and_tokenize(std::string_view(text).substr(prefix.size()));
  if (rest.size() < gold.size()) return 0.0;
  for (std::size_t i = 0; i + gold.size() <= rest.size(); ++i)
    if (std::equal(gold.begin(), gold.end(), rest.begin() + static_cast<long>(i))) return 1.0;
  return 0.0;
}

std::optional<BoundingBox> parse_box(std::string_view output) {
  std::vector<long long> nums;
  std::size_t i = 0;
  while (i < output.size() && nums.size() < 4) {
    const bool neg = output[i] == '-' && i + 1 < output.size() &&
                     std::isdigit(static_cast<unsigned char>(output[i + 1]));
    if (!neg && !std::isdigit(static_cast<unsigned char>(output[i]))) {
      ++i;
      continue;
    }
    if (neg) ++i;
    long long v = 0;
    bool overflow = false;
    while (i < output.size() && std::isdigit(static_cast<unsigned char>(output[i]))) {
      if (v > (LLONG_MAX - 9) / 10) overflow = true;
      if (!overflow) v = v * 10 + (output[i] - '0');
      ++i;
    }
    if (overflow || v > INT_MAX) return std::nullopt;
    nums.push_back(neg ? -v : v);
  }
  if (nums.size() < 4) return std::nullopt;
  BoundingBox b{static_cast<int>(nums[0]), static_cast<int>(nums[1]), static_cast<int>(nums[2]),
                static_cast<int>(nums[3])};
  if (!b.valid()) return std::nullopt;
  return b;
}

double reward_localization(std::string_view output, const BoundingBox& gold,
                           const RewardConfig& cfg) {
  const auto box = parse_box(output);
  if (!box) return 0.0;
  const double v = iou(*box, gold);
  return v >= cfg.iou_low_threshold ? v : 0.0;
}

double token_f1(std::string_view pred, std::string_view gold) {
  const auto g = normalize_and_tokenize(gold);
  if (g.empty()) throw ArgumentError("token F1 is undefined for an empty gold answer");
  const auto p = normalize_and_tokenize(pred);
  if (p.empty()) return 0.0;
  const int common = overlap(p, g);
  if (common == 0) return 0.0;
  const double precision = static_cast<double>(common) / static_cast<double>(p.size());
  const double recall = static_cast<double>(common) / static_cast<double>(g.size());
  return 2.0 * precision * recall / (precision + recall);
}

double token_recall(std::string_view pred, std::string_view gold) {
  const auto g = normalize_and_tokenize(gold);
  if (g.empty()) throw ArgumentError("token recall is undefined for an empty gold answer");
  return static_cast<double>(overlap(normalize_and_tokenize(pred), g)) /
         static_cast<double>(g.size());
}

double task_reward(const TaskSample& sample, std::string_view output,
                   const std::vector<std::string>& classes, const RewardConfig& cfg) {
  switch (sample.task) {
    case Task::diagnosis:
      if (!sample.label || *sample.label < 0 || *sample.label >= static_cast<int>(classes.size()))
        throw ArgumentError("diagnosis sample has no valid label");
      return reward_diagnosis(output, classes[static_cast<std::size_t>(*sample.label)], cfg);
    case Task::grounding:
      if (!sample.box) throw ArgumentError("grounding sample has no box");
      return reward_localization(output, *sample.box, cfg);
    case Task::vqa:
      break;
  }
  throw ConfigError("no reward function for task " + std::string(to_string(sample.task)));
}

}  // namespace vrft
