// Copyright (c) 2026 vrft contributors
// SPDX-License-Identifier: Apache-2.0

#include "vrft/encoders.hpp"

#include <algorithm>

#include "vrft/error.hpp"

namespace vrft {

std::vector<double> PixelFeatureMap::pooled() const {
  std::vector<double> out(channels(), 0.0);
  for (std::size_t c = 0; c < cells(); ++c) axpy(1.0, values.row(c), out);
  const double n = static_cast<double>(cells());
  for (auto& v : out) v /= n;
  return out;
}

namespace {

struct RegionStats {
  double mean = 0.0;
  double var = 0.0;
  double max = 0.0;
};

RegionStats region_stats(const GridImage& img, int r0, int r1, int c0, int c1) {
  RegionStats s;
  const double n = static_cast<double>((r1 - r0) * (c1 - c0));
  for (int r = r0; r < r1; ++r)
    for (int c = c0; c < c1; ++c) {
      const double v = img.at(r, c);
      s.mean += v;
      s.max = std::max(s.max, v);
    }
  s.mean /= n;
  for (int r = r0; r < r1; ++r)
    for (int c = c0; c < c1; ++c) {
      const double d = img.at(r, c) - s.mean;
      s.var += d * d;
    }
  s.var /= n;
  return s;
}

}  // namespace

DiseaseEmbedding encode_disease(const GridImage& img) {
  const int h = img.height, w = img.width;
  const auto all = region_stats(img, 0, h, 0, w);
  int active = 0, top = h, bottom = -1, left = w, right = -1;
  for (int r = 0; r < h; ++r)
    for (int c = 0; c < w; ++c)
      if (img.at(r, c) > kActiveThreshold) {
        ++active;
        top = std::min(top, r);
        bottom = std::max(bottom, r);
        left = std::min(left, c);
        right = std::max(right, c);
      }
  DiseaseEmbedding e;
  e.reserve(kDiseaseDim);
  e.push_back(all.mean);
  e.push_back(all.var);
  e.push_back(all.max);
  e.push_back(static_cast<double>(active) / static_cast<double>(h * w));
  const int hm = h / 2, wm = w / 2;
  e.push_back(region_stats(img, 0, hm, 0, wm).mean);
  e.push_back(region_stats(img, 0, hm, wm, w).mean);
  e.push_back(region_stats(img, hm, h, 0, wm).mean);
  e.push_back(region_stats(img, hm, h, wm, w).mean);
  if (active > 0) {
    e.push_back(static_cast<double>(left) / w);
    e.push_back(static_cast<double>(top) / h);
    e.push_back(static_cast<double>(right - left + 1) / w);
    e.push_back(static_cast<double>(bottom - top + 1) / h);
  } else {
    e.insert(e.end(), 4, 0.0);
  }
  return e;
}

PixelFeatureMap encode_pixel(const GridImage& img, int patch) {
  if (patch < 1 || img.height % patch != 0 || img.width % patch != 0)
    throw ConfigError("image " + std::to_string(img.height) + "x" + std::to_string(img.width) +
                      " is not divisible by patch size " + std::to_string(patch));
  PixelFeatureMap map;
  map.rows = img.height / patch;
  map.cols = img.width / patch;
  map.values = Matrix(static_cast<std::size_t>(map.rows * map.cols), kPixelChannels);
  for (int i = 0; i < map.rows; ++i)
    for (int j = 0; j < map.cols; ++j) {
      const auto s = region_stats(img, i * patch, (i + 1) * patch, j * patch, (j + 1) * patch);
      auto cell = map.values.row(static_cast<std::size_t>(i * map.cols + j));
      cell[0] = s.mean;
      cell[1] = s.max;
      cell[2] = s.var;
    }
  return map;
}

namespace {

void check_dims(const ConnectorParams& p, std::size_t d_e, std::size_t c) {
  const auto d_m = p.model_dim();
  if (p.disease_weight.cols() != d_e)
    throw ArgumentError("disease connector expects " + std::to_string(p.disease_weight.cols()) +
                        " inputs, got " + std::to_string(d_e));
  if (p.pixel_weight.cols() != c)
    throw ArgumentError("pixel connector expects " + std::to_string(p.pixel_weight.cols()) +
                        " channels, got " + std::to_string(c));
  if (p.disease_bias.size() != d_m || p.pixel_weight.rows() != d_m || p.pixel_bias.size() != d_m)
    throw ArgumentError("connector output widths disagree");
}

void affine(const Matrix& w, const std::vector<double>& b, std::span<const double> x,
            std::span<double> y) {
  mat_vec(w, x, y);
  axpy(1.0, b, y);
}

}  // namespace

ConnectorOutput apply_connectors(const DiseaseEmbedding& e, const PixelFeatureMap& p,
                                 const ConnectorParams& params) {
  check_dims(params, e.size(), p.channels());
  const auto d_m = params.model_dim();
  ConnectorOutput out;
  out.disease.resize(d_m);
  affine(params.disease_weight, params.disease_bias, e, out.disease);
  out.pixel = Matrix(p.cells(), d_m);
  for (std::size_t c = 0; c < p.cells(); ++c)
    affine(params.pixel_weight, params.pixel_bias, p.values.row(c), out.pixel.row(c));
  return out;
}

std::vector<double> pooled_pixel_projection(std::span<const double> pooled,
                                            const ConnectorParams& params) {
  if (pooled.size() != params.pixel_weight.cols())
    throw ArgumentError("pixel connector expects " + std::to_string(params.pixel_weight.cols()) +
                        " channels, got " + std::to_string(pooled.size()));
  std::vector<double> out(params.model_dim());
  affine(params.pixel_weight, params.pixel_bias, pooled, out);
  return out;
}

void connector_backward(const DiseaseEmbedding& e, std::span<const double> pooled,
                        std::span<const double> d_disease, std::span<const double> d_pooled,
                        ConnectorParams& grad) {
  add_outer(grad.disease_weight, 1.0, d_disease, e);
  axpy(1.0, d_disease, grad.disease_bias);
  add_outer(grad.pixel_weight, 1.0, d_pooled, pooled);
  axpy(1.0, d_pooled, grad.pixel_bias);
}

}  // namespace vrft
