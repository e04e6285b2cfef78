// Copyright (c) 2026 vrft contributors
// SPDX-License-Identifier: Apache-2.0
//
// Shared fixtures and independent oracles for the unit and acceptance tests.

#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "vrft/core.hpp"
#include "vrft/data.hpp"
#include "vrft/policy.hpp"
#include "vrft/rng.hpp"

namespace vrft::testing {

inline std::vector<std::string> small_classes() { return class_names(3); }

inline PolicyConfig small_config() {
  PolicyConfig c;
  c.model_dim = 4;
  c.instruction_dim = 32;
  c.token_dim = 3;
  c.max_len = 6;
  c.rank = 2;
  c.alpha = 4.0;
  c.patch = 4;
  return c;
}

inline GeneratorConfig small_data(int n) {
  GeneratorConfig g;
  g.height = 8;
  g.width = 8;
  g.classes = 3;
  g.n = n;
  g.min_shape = 3;
  g.max_shape = 4;
  return g;
}

/// Small policy over an 8x8 grid. With `random_b` the adapter factor B is
/// filled so that every head term is active.
inline PolicyParams small_policy(std::uint64_t seed, bool random_b = true) {
  auto p = init_policy(small_config(), build_vocabulary(8, 8, small_classes()), seed);
  if (random_b) {
    Rng rng(derive_seed(seed, "test-b"));
    for (auto& v : p.trainable.lora_b.flat()) v = 0.3 * rng.normal();
  }
  return p;
}

/// Every trainable coordinate as (block index, offset).
struct Coordinate {
  std::size_t block;
  std::size_t offset;
};

inline std::vector<Coordinate> random_coordinates(const PolicyParams& p, std::size_t count,
                                                  std::uint64_t seed) {
  const auto blocks = p.trainable.blocks();
  std::vector<Coordinate> all;
  for (std::size_t b = 0; b < blocks.size(); ++b)
    for (std::size_t i = 0; i < blocks[b].size(); ++i) all.push_back({b, i});
  Rng rng(seed);
  std::vector<Coordinate> out;
  // Cover every block first, then draw uniformly.
  for (std::size_t b = 0; b < blocks.size(); ++b)
    if (!blocks[b].empty()) out.push_back({b, rng.below(blocks[b].size())});
  while (out.size() < count) out.push_back(all[rng.below(all.size())]);
  return out;
}

inline double& coordinate(PolicyParams& p, const Coordinate& c) {
  return p.trainable.blocks()[c.block][c.offset];
}

inline double coordinate(const Trainable& t, const Coordinate& c) {
  return t.blocks()[c.block][c.offset];
}

/// Central difference of f with respect to one trainable coordinate.
inline double central_difference(PolicyParams& p, const Coordinate& c,
                                 const std::function<double(const PolicyParams&)>& f,
                                 double step) {
  double& v = coordinate(p, c);
  const double saved = v;
  v = saved + step;
  const double up = f(p);
  v = saved - step;
  const double down = f(p);
  v = saved;
  return (up - down) / (2.0 * step);
}

inline double relative_error(double analytic, double numeric) {
  const double scale = std::max({std::abs(analytic), std::abs(numeric), 1e-6});
  return std::abs(analytic - numeric) / scale;
}

/// Brute-force IoU by counting covered cells on a grid.
inline double iou_by_cells(const BoundingBox& a, const BoundingBox& b) {
  const int x1 = std::max(a.x + a.w, b.x + b.w);
  const int y1 = std::max(a.y + a.h, b.y + b.h);
  long long inter = 0, uni = 0;
  for (int y = 0; y < y1; ++y)
    for (int x = 0; x < x1; ++x) {
      const bool in_a = x >= a.x && x < a.x + a.w && y >= a.y && y < a.y + a.h;
      const bool in_b = x >= b.x && x < b.x + b.w && y >= b.y && y < b.y + b.h;
      inter += (in_a && in_b) ? 1 : 0;
      uni += (in_a || in_b) ? 1 : 0;
    }
  return static_cast<double>(inter) / static_cast<double>(uni);
}

inline BoundingBox random_box(Rng& rng, int extent) {
  BoundingBox b;
  b.w = rng.between(1, extent / 2);
  b.h = rng.between(1, extent / 2);
  b.x = rng.between(0, extent - b.w);
  b.y = rng.between(0, extent - b.h);
  return b;
}

/// Head logits recomputed from the parameter blocks with plain loops.
inline std::vector<double> logits_oracle(const PolicyParams& p, const std::vector<double>& h) {
  const auto v = p.vocab_size();
  const auto r = static_cast<std::size_t>(p.config.rank);
  std::vector<double> u(r, 0.0), z(v, 0.0);
  for (std::size_t k = 0; k < r; ++k)
    for (std::size_t i = 0; i < h.size(); ++i) u[k] += h[i] * p.trainable.lora_b(i, k);
  const double s = p.config.alpha / p.config.rank;
  for (std::size_t j = 0; j < v; ++j) {
    double acc = 0.0;
    for (std::size_t i = 0; i < h.size(); ++i) acc += h[i] * p.base(i, j);
    double low = 0.0;
    for (std::size_t k = 0; k < r; ++k) low += u[k] * p.trainable.lora_a(k, j);
    z[j] = acc + s * low;
  }
  return z;
}

inline std::vector<double> softmax_oracle(const std::vector<double>& z) {
  double m = z[0];
  for (double v : z) m = std::max(m, v);
  std::vector<double> p(z.size());
  double s = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) s += (p[i] = std::exp(z[i] - m));
  for (auto& v : p) v /= s;
  return p;
}

/// Context at `step` after `prefix` tokens, built from the layout
/// [e_hat | pooled p_hat | instruction presence | prev embedding | step].
inline std::vector<double> context_oracle(const PolicyParams& p, const EncodedInput& in,
                                          TokenId prev, int step) {
  const auto& c = p.config;
  const auto proj = project(p, in);
  std::vector<double> h;
  h.insert(h.end(), proj.disease.begin(), proj.disease.end());
  h.insert(h.end(), proj.pixel.begin(), proj.pixel.end());
  std::vector<double> instr(static_cast<std::size_t>(c.instruction_dim), 0.0);
  for (auto b : in.instruction) instr[b] = 1.0;
  h.insert(h.end(), instr.begin(), instr.end());
  const auto emb = p.token_embedding.row(prev);
  h.insert(h.end(), emb.begin(), emb.end());
  std::vector<double> onehot(static_cast<std::size_t>(c.max_len), 0.0);
  onehot[static_cast<std::size_t>(step)] = 1.0;
  h.insert(h.end(), onehot.begin(), onehot.end());
  return h;
}

/// Per-step log-probabilities of `tokens` from the oracles above.
inline std::vector<double> step_log_probs_oracle(const PolicyParams& p, const EncodedInput& in,
                                                 const TokenSequence& tokens) {
  std::vector<double> out;
  TokenId prev = p.begin_token();
  for (std::size_t t = 0; t < tokens.size(); ++t) {
    const auto probs = softmax_oracle(logits_oracle(p, context_oracle(p, in, prev, static_cast<int>(t))));
    out.push_back(std::log(probs[tokens[t]]));
    prev = tokens[t];
  }
  return out;
}

struct ClassificationOracle {
  double accuracy;
  double macro_f1;
};

/// Accuracy and macro-F1 from an explicit confusion matrix over the classes
/// present in the gold labels. A missing prediction (-1) is a miss only.
inline ClassificationOracle classification_oracle(const std::vector<int>& preds,
                                                  const std::vector<int>& golds, int n) {
  std::vector<std::vector<int>> confusion(static_cast<std::size_t>(n),
                                          std::vector<int>(static_cast<std::size_t>(n) + 1, 0));
  int correct = 0;
  for (std::size_t i = 0; i < golds.size(); ++i) {
    const int p = preds[i] < 0 ? n : preds[i];
    ++confusion[static_cast<std::size_t>(golds[i])][static_cast<std::size_t>(p)];
    correct += preds[i] == golds[i] ? 1 : 0;
  }
  double f1_sum = 0.0;
  int present = 0;
  for (int c = 0; c < n; ++c) {
    int tp = confusion[static_cast<std::size_t>(c)][static_cast<std::size_t>(c)], fn = 0, fp = 0;
    for (int k = 0; k <= n; ++k)
      if (k != c) fn += confusion[static_cast<std::size_t>(c)][static_cast<std::size_t>(k)];
    for (int g = 0; g < n; ++g)
      if (g != c) fp += confusion[static_cast<std::size_t>(g)][static_cast<std::size_t>(c)];
    if (tp + fn == 0) continue;
    ++present;
    f1_sum += tp == 0 ? 0.0 : 2.0 * tp / (2.0 * tp + fp + fn);
  }
  return {static_cast<double>(correct) / static_cast<double>(golds.size()), f1_sum / present};
}

struct GroundingOracle {
  std::vector<double> accuracy;
  double miou;
};

/// Per-pair recomputation with cell-counted IoU; missing predictions score 0.
inline GroundingOracle grounding_oracle(const std::vector<std::optional<BoundingBox>>& preds,
                                        const std::vector<BoundingBox>& golds,
                                        const std::vector<double>& thresholds) {
  GroundingOracle out{std::vector<double>(thresholds.size(), 0.0), 0.0};
  for (std::size_t i = 0; i < golds.size(); ++i) {
    const double v = preds[i] ? iou_by_cells(*preds[i], golds[i]) : 0.0;
    out.miou += v;
    for (std::size_t k = 0; k < thresholds.size(); ++k) out.accuracy[k] += v >= thresholds[k] ? 1.0 : 0.0;
  }
  const auto n = static_cast<double>(golds.size());
  out.miou /= n;
  for (auto& a : out.accuracy) a /= n;
  return out;
}

/// Fresh empty directory under the system temp path.
inline std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("vrft_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace vrft::testing
