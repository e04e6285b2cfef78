// Copyright (c) 2026 vrft contributors
// SPDX-License-Identifier: Apache-2.0
//
// Planted-shape dataset generation, JSONL ingestion and the subsetting
// protocols (stratified fractions, k-shot).

#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "vrft/core.hpp"

namespace vrft {

/// Single-channel H x W image with intensities in [0, 1], row-major.
struct GridImage {
  int height = 0;
  int width = 0;
  std::vector<double> pixels;

  GridImage() = default;
  GridImage(int h, int w, double fill = 0.0)
      : height(h), width(w), pixels(static_cast<std::size_t>(h) * w, fill) {}

  double at(int r, int c) const { return pixels[static_cast<std::size_t>(r) * width + c]; }
  double& at(int r, int c) { return pixels[static_cast<std::size_t>(r) * width + c]; }

  /// Throws SchemaError when dimensions or intensities break the invariants.
  void validate() const;

  friend bool operator==(const GridImage&, const GridImage&) = default;
};

enum class Task { diagnosis, grounding, vqa };

std::string_view to_string(Task t) noexcept;
std::optional<Task> parse_task(std::string_view s) noexcept;

struct TaskSample {
  Task task = Task::diagnosis;
  std::shared_ptr<const GridImage> image;
  std::string instruction;
  std::optional<int> label;                        // diagnosis
  std::optional<BoundingBox> box;                  // grounding
  std::optional<std::string> answer;               // vqa
  std::optional<std::vector<std::string>> options; // closed vqa
  /// Annotated response text. When absent the canonical rendering of the
  /// task fields is the response.
  std::optional<std::string> response;
  /// False when the annotated response is known to be defective.
  bool reliable = true;
};

struct Provenance {
  std::string source;  // "generator" or the ingested path
  std::uint64_t seed = 0;
  std::string config;  // compact JSON echo
};

struct DatasetSplit {
  std::vector<TaskSample> samples;
  Provenance provenance;

  std::size_t size() const noexcept { return samples.size(); }
  bool empty() const noexcept { return samples.empty(); }
};

/// Canonical class names; classes beyond the list are "class<k>".
std::vector<std::string> class_names(int count);

/// Fills "{modality}" in a template. Throws ArgumentError if absent.
std::string fill_modality(std::string_view templ, std::string_view modality);

inline constexpr std::string_view kModalityPlaceholder = "{modality}";

/// Instruction phrasings used when generating training records.
const std::vector<std::string>& diagnosis_instructions();
const std::vector<std::string>& grounding_instructions();

struct GeneratorConfig {
  int height = 16;
  int width = 16;
  int classes = 3;
  int n = 100;
  double noise_level = 0.1;
  int min_shape = 4;
  int max_shape = 6;
  /// Probability that a grounding annotation omits the box size. Such
  /// records keep the exact gold box but are marked unreliable.
  double incomplete_box_rate = 0.0;
  std::string modality = "grid";

  void validate() const;
  std::string to_json() const;
};

/// Emits one diagnosis, one grounding and one VQA record per image, in
/// image order. Deterministic in (config, seed).
DatasetSplit generate_planted_shapes(const GeneratorConfig& config, std::uint64_t seed);

/// Canonical response text: "diagnosis: <name>", "x<x> y<y> w<w> h<h>", or
/// the VQA answer.
std::string canonical_response(const TaskSample& s, const std::vector<std::string>& classes);
/// The annotated response if present, else the canonical one.
std::string target_response(const TaskSample& s, const std::vector<std::string>& classes);

/// Reads one JSON object per line. When `expected` is set every record must
/// have that task. Warnings (e.g. an empty file) are appended to `warnings`.
DatasetSplit load_jsonl(const std::filesystem::path& path, std::optional<Task> expected = {},
                        std::vector<std::string>* warnings = nullptr);
void save_jsonl(const DatasetSplit& split, const std::filesystem::path& path);
std::string to_jsonl_line(const TaskSample& s);

/// Stratum key: task plus label when present.
std::string stratum_of(const TaskSample& s);

/// Stratified draw of exactly `count` samples using largest-remainder
/// allocation across strata. Selected samples keep their original order.
DatasetSplit stratified_subset(const DatasetSplit& split, std::size_t count, std::uint64_t seed);

/// ceil(fraction * n) samples, stratified. fraction must lie in (0, 1].
DatasetSplit subset_fraction(const DatasetSplit& split, double fraction, std::uint64_t seed);

/// Exactly k labelled samples per class present in the split.
DatasetSplit subset_kshot(const DatasetSplit& split, int k, std::uint64_t seed);

/// Samples of one task only (order preserved).
DatasetSplit filter_task(const DatasetSplit& split, Task task);

}  // namespace vrft
