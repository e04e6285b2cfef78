// Copyright (c) 2026 vrft contributors
// SPDX-License-Identifier: Apache-2.0

#include "vrft/metrics.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>

#include <json.hpp>

#include "vrft/error.hpp"

namespace vrft {

using nlohmann::json;

ClassificationMetrics classification_metrics(std::span<const std::optional<int>> preds,
                                             std::span<const int> golds, int n_classes) {
  if (preds.size() != golds.size())
    throw ArgumentError("predictions and golds differ in length");
  if (golds.empty()) throw ArgumentError("classification metrics need at least one sample");
  if (n_classes < 1) throw ArgumentError("n_classes must be >= 1");
  auto check = [&](int c) {
    if (c < 0 || c >= n_classes)
      throw ArgumentError("label " + std::to_string(c) + " outside [0, " + std::to_string(n_classes) + ")");
  };
  const auto k = static_cast<std::size_t>(n_classes);
  std::vector<long long> tp(k, 0), fp(k, 0), fn(k, 0);
  std::vector<bool> present(k, false);
  long long correct = 0;
  for (std::size_t i = 0; i < golds.size(); ++i) {
    const int g = golds[i];
    check(g);
    present[static_cast<std::size_t>(g)] = true;
    if (preds[i]) {
      check(*preds[i]);
      if (*preds[i] == g) {
        ++correct;
        ++tp[static_cast<std::size_t>(g)];
        continue;
      }
      ++fp[static_cast<std::size_t>(*preds[i])];
    }
    ++fn[static_cast<std::size_t>(g)];
  }
  ClassificationMetrics m;
  m.accuracy = static_cast<double>(correct) / static_cast<double>(golds.size());
  double f1_sum = 0.0;
  int n_present = 0;
  for (std::size_t c = 0; c < k; ++c) {
    if (!present[c]) continue;
    ++n_present;
    const long long denom = 2 * tp[c] + fp[c] + fn[c];
    f1_sum += denom == 0 ? 0.0 : 2.0 * static_cast<double>(tp[c]) / static_cast<double>(denom);
  }
  m.macro_f1 = f1_sum / n_present;
  return m;
}

ClassificationMetrics classification_metrics(std::span<const int> preds,
                                             std::span<const int> golds, int n_classes) {
  std::vector<std::optional<int>> p(preds.begin(), preds.end());
  return classification_metrics(p, golds, n_classes);
}

VqaMetrics vqa_metrics(std::span<const std::string> preds, std::span<const TaskSample> samples) {
  if (preds.size() != samples.size()) throw ArgumentError("predictions and samples differ in length");
  VqaMetrics m;
  double closed_hits = 0.0, recall_sum = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const auto& s = samples[i];
    if (s.task != Task::vqa) throw ArgumentError("vqa_metrics received a non-VQA sample");
    const auto gold = s.answer ? normalize_and_tokenize(*s.answer) : std::vector<std::string>{};
    if (gold.empty()) {
      ++m.skipped;
      continue;
    }
    if (s.options) {
      ++m.closed;
      if (normalize_and_tokenize(preds[i]) == gold) closed_hits += 1.0;
    } else {
      ++m.open;
      recall_sum += token_recall(preds[i], *s.answer);
    }
  }
  if (m.closed) m.closed_accuracy = closed_hits / static_cast<double>(m.closed);
  if (m.open) m.open_recall = recall_sum / static_cast<double>(m.open);
  return m;
}

GroundingMetrics grounding_metrics(std::span<const std::optional<BoundingBox>> preds,
                                   std::span<const BoundingBox> golds,
                                   const std::vector<double>& thresholds) {
  if (preds.size() != golds.size()) throw ArgumentError("predictions and golds differ in length");
  if (golds.empty()) throw ArgumentError("grounding metrics need at least one sample");
  GroundingMetrics m;
  m.thresholds = thresholds;
  std::vector<long long> hits(thresholds.size(), 0);
  double sum = 0.0;
  for (std::size_t i = 0; i < golds.size(); ++i) {
    const double v = preds[i] ? iou(*preds[i], golds[i]) : 0.0;
    sum += v;
    for (std::size_t k = 0; k < thresholds.size(); ++k)
      if (v >= thresholds[k]) ++hits[k];
  }
  const double n = static_cast<double>(golds.size());
  for (auto h : hits) m.accuracy.push_back(static_cast<double>(h) / n);
  m.miou = sum / n;
  return m;
}

Decoding parse_decoding(std::string_view s) {
  if (s == "sampled") return Decoding::sampled;
  if (s == "greedy") return Decoding::greedy;
  throw ConfigError("unknown decoding '" + std::string(s) + "' (expected sampled or greedy)");
}

std::string_view to_string(Decoding d) noexcept { return d == Decoding::sampled ? "sampled" : "greedy"; }

void EvalConfig::validate() const {
  if (thresholds.empty()) throw ConfigError("eval.thresholds must be non-empty");
  for (double t : thresholds)
    if (!(t >= 0.0 && t <= 1.0)) throw ConfigError("eval.thresholds must lie in [0, 1]");
  if (diagnosis_prefix.empty()) throw ConfigError("reward.diagnosis_prefix must be non-empty");
}

double EvalReport::metric(const std::string& task, const std::string& name) const {
  auto t = metrics.find(task);
  if (t != metrics.end()) {
    auto v = t->second.find(name);
    if (v != t->second.end()) return v->second;
  }
  throw ArgumentError("report has no metric " + task + "." + name);
}

std::string EvalReport::to_json() const {
  json j;
  j["schema_version"] = schema_version;
  j["config_hash"] = config_hash;
  j["config"] = json::parse(config_echo);
  j["counts"] = counts;
  j["metrics"] = metrics;
  return j.dump(2);
}

std::string EvalReport::csv_header() const {
  std::string h = "schema_version,config_hash";
  for (const auto& [k, v] : counts) h += ",count." + k;
  for (const auto& [task, m] : metrics)
    for (const auto& [name, v] : m) h += "," + task + "." + name;
  return h;
}

std::string EvalReport::csv_row() const {
  std::string r = std::to_string(schema_version) + "," + config_hash;
  for (const auto& [k, v] : counts) r += "," + std::to_string(v);
  for (const auto& [task, m] : metrics)
    for (const auto& [name, v] : m) r += "," + format_number(v);
  return r;
}

std::optional<int> predict_label(std::string_view output, const std::vector<std::string>& classes,
                                 std::string_view prefix) {
  std::string text(output);
  std::transform(text.begin(), text.end(), text.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  const auto start = text.find_first_not_of(" \t\r\n");
  if (start == std::string::npos) return std::nullopt;
  std::string pre(prefix);
  std::transform(pre.begin(), pre.end(), pre.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (text.compare(start, pre.size(), pre) != 0) return std::nullopt;
  const auto rest = normalize_and_tokenize(std::string_view(text).substr(start + pre.size()));
  for (std::size_t i = 0; i < rest.size(); ++i)
    for (std::size_t c = 0; c < classes.size(); ++c) {
      const auto name = normalize_and_tokenize(classes[c]);
      if (!name.empty() && i + name.size() <= rest.size() &&
          std::equal(name.begin(), name.end(), rest.begin() + static_cast<long>(i)))
        return static_cast<int>(c);
    }
  return std::nullopt;
}

std::vector<std::string> decode_split(const PolicyParams& params, const DatasetSplit& split,
                                      const EvalConfig& cfg, Execution exec) {
  std::vector<std::string> out(split.size());
  for_each_index(split.size(), exec, [&](std::size_t i) {
    const auto input = encode_input(params.config, split.samples[i]);
    SampledOutput o;
    if (cfg.decoding == Decoding::greedy) {
      o = greedy_decode(params, input);
    } else {
      Rng rng(derive_seed(cfg.seed, {static_cast<std::uint64_t>(i)}));
      o = sample_output(params, input, rng);
    }
    out[i] = params.vocab.decode(o.tokens);
  });
  return out;
}

namespace {

std::string threshold_name(double t) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "acc@%g", t);
  return buf;
}

}  // namespace

EvalReport evaluate(const PolicyParams& params, const DatasetSplit& split,
                    const std::vector<std::string>& classes, const EvalConfig& cfg,
                    Execution exec) {
  cfg.validate();
  if (split.empty()) throw ArgumentError("empty dataset");
  const auto texts = decode_split(params, split, cfg, exec);

  std::vector<std::optional<int>> label_pred;
  std::vector<int> label_gold;
  std::vector<std::optional<BoundingBox>> box_pred;
  std::vector<BoundingBox> box_gold;
  std::vector<std::string> vqa_pred;
  std::vector<TaskSample> vqa_samples;
  for (std::size_t i = 0; i < split.size(); ++i) {
    const auto& s = split.samples[i];
    switch (s.task) {
      case Task::diagnosis:
        label_pred.push_back(predict_label(texts[i], classes, cfg.diagnosis_prefix));
        label_gold.push_back(*s.label);
        break;
      case Task::grounding:
        box_pred.push_back(parse_box(texts[i]));
        box_gold.push_back(*s.box);
        break;
      case Task::vqa:
        vqa_pred.push_back(texts[i]);
        vqa_samples.push_back(s);
        break;
    }
  }

  EvalReport r;
  r.counts["total"] = split.size();
  if (!label_gold.empty()) {
    const auto m = classification_metrics(label_pred, label_gold, static_cast<int>(classes.size()));
    r.metrics["diagnosis"] = {{"accuracy", m.accuracy}, {"macro_f1", m.macro_f1}};
    r.counts["diagnosis"] = label_gold.size();
  }
  if (!box_gold.empty()) {
    const auto m = grounding_metrics(box_pred, box_gold, cfg.thresholds);
    auto& g = r.metrics["grounding"];
    for (std::size_t k = 0; k < m.thresholds.size(); ++k) g[threshold_name(m.thresholds[k])] = m.accuracy[k];
    g["miou"] = m.miou;
    r.counts["grounding"] = box_gold.size();
  }
  if (!vqa_samples.empty()) {
    const auto m = vqa_metrics(vqa_pred, vqa_samples);
    r.metrics["vqa"] = {{"closed_accuracy", m.closed_accuracy}, {"open_recall", m.open_recall}};
    r.counts["vqa_closed"] = m.closed;
    r.counts["vqa_open"] = m.open;
    r.counts["vqa_skipped"] = m.skipped;
  }
  return r;
}

const std::vector<std::string>& robustness_templates() {
  static const std::vector<std::string> t{
      "Analyze the given {modality} image for diagnosis.",
      "Please perform diagnostic analysis on the provided {modality} image for diagnosis.",
      "Given a {modality} scan, determine the correct diagnosis",
      "Evaluate the following {modality} image for diagnosis",
      "Assess the {modality} image and provide a diagnosis",
      "Based on the {modality} image, identify the diagnosis",
      "For this {modality} image, specify its diagnosis",
      "Analyze the provided {modality} scan for diagnosis",
      "Interpret the {modality} image to determine its diagnosis",
      "Diagnose the given {modality} image",
      "Use the {modality} image to establish its diagnosis",
  };
  return t;
}

RobustnessResult prompt_robustness(const PolicyParams& params, const DatasetSplit& split,
                                   const std::vector<std::string>& templates,
                                   std::string_view modality,
                                   const std::vector<std::string>& classes, const EvalConfig& cfg,
                                   Execution exec) {
  if (templates.size() < 2) throw ArgumentError("prompt robustness needs at least two templates");
  std::vector<std::string> filled;
  for (const auto& t : templates) filled.push_back(fill_modality(t, modality));
  const auto diag = filter_task(split, Task::diagnosis);
  if (diag.empty()) throw ArgumentError("empty dataset");

  RobustnessResult out;
  out.templates = templates;
  for (const auto& instruction : filled) {
    DatasetSplit variant = diag;
    for (auto& s : variant.samples) s.instruction = instruction;
    out.reports.push_back(evaluate(params, variant, classes, cfg, exec));
    out.accuracies.push_back(out.reports.back().metric("diagnosis", "accuracy"));
  }
  const auto [lo, hi] = std::minmax_element(out.accuracies.begin(), out.accuracies.end());
  out.max_delta = *hi - *lo;
  return out;
}

std::vector<SweepRow> data_efficiency_sweep(const PolicyParams& sft_params,
                                            const DatasetSplit& train, const DatasetSplit& heldout,
                                            const std::vector<double>& fractions,
                                            const GrpoConfig& grpo,
                                            const std::vector<std::string>& classes,
                                            const RewardConfig& reward, const EvalConfig& eval,
                                            Execution exec) {
  std::vector<SweepRow> rows;
  for (double f : fractions) {
    GrpoConfig cfg = grpo;
    cfg.data_fraction = f;
    auto rft = train_rft(sft_params, train, cfg, classes, reward, exec);
    rows.push_back({f, rft.subset.size(), evaluate(rft.params, heldout, classes, eval, exec)});
  }
  return rows;
}

}  // namespace vrft
