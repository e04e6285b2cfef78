// Copyright (c) 2026 vrft contributors
// SPDX-License-Identifier: Apache-2.0
//
// Frozen image encoders (global disease embedding, pixel feature map) and
// the trainable affine connectors that project them to the policy width.

#pragma once

#include <vector>

#include "vrft/data.hpp"
#include "vrft/linalg.hpp"

namespace vrft {

/// Width of the disease embedding: mean, variance, max, active fraction,
/// four quadrant means and the active-region extent (left, top, width,
/// height as fractions of the grid).
inline constexpr std::size_t kDiseaseDim = 12;
/// Channels per pixel-map cell: patch mean, max and variance.
inline constexpr std::size_t kPixelChannels = 3;
/// Intensity above which a cell counts as part of the finding.
inline constexpr double kActiveThreshold = 0.5;

using DiseaseEmbedding = std::vector<double>;

/// Grid of cells, each a vector of `channels` statistics, stored row-major
/// as (cell, channel).
struct PixelFeatureMap {
  int rows = 0;
  int cols = 0;
  Matrix values;  // (rows * cols) x channels

  std::size_t cells() const noexcept { return values.rows(); }
  std::size_t channels() const noexcept { return values.cols(); }
  /// Mean over cells of each channel.
  std::vector<double> pooled() const;
};

DiseaseEmbedding encode_disease(const GridImage& image);

/// Throws ConfigError when the image extent is not divisible by `patch`.
PixelFeatureMap encode_pixel(const GridImage& image, int patch);

struct ConnectorParams {
  Matrix disease_weight;  // d_m x d_e
  std::vector<double> disease_bias;
  Matrix pixel_weight;  // d_m x C
  std::vector<double> pixel_bias;

  ConnectorParams() = default;
  ConnectorParams(std::size_t d_m, std::size_t d_e, std::size_t c)
      : disease_weight(d_m, d_e), disease_bias(d_m), pixel_weight(d_m, c), pixel_bias(d_m) {}

  std::size_t model_dim() const noexcept { return disease_weight.rows(); }

  friend bool operator==(const ConnectorParams&, const ConnectorParams&) = default;
};

struct ConnectorOutput {
  std::vector<double> disease;  // e_hat, d_m
  Matrix pixel;                 // p_hat, one d_m row per cell
};

/// e_hat = Wd e + bd; p_hat(cell) = Wp p(cell) + bp. Throws ArgumentError
/// on dimension mismatch.
ConnectorOutput apply_connectors(const DiseaseEmbedding& e, const PixelFeatureMap& p,
                                 const ConnectorParams& params);

/// Mean over cells of p_hat, computed as Wp mean(p) + bp.
std::vector<double> pooled_pixel_projection(std::span<const double> pooled,
                                            const ConnectorParams& params);

/// Accumulates parameter gradients for upstream gradients d_e_hat and
/// d_pooled (gradient w.r.t. the mean-pooled p_hat).
void connector_backward(const DiseaseEmbedding& e, std::span<const double> pooled,
                        std::span<const double> d_disease, std::span<const double> d_pooled,
                        ConnectorParams& grad);

}  // namespace vrft
