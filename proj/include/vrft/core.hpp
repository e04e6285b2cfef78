// Copyright (c) 2026 vrft contributors
// SPDX-License-Identifier: Apache-2.0
//
// Geometry and text primitives shared by rewards, metrics and data handling.

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace vrft {

/// Axis-aligned box in integer grid cells: left edge x, top edge y.
struct BoundingBox {
  int x = 0;
  int y = 0;
  int w = 0;
  int h = 0;

  bool valid() const noexcept { return w > 0 && h > 0 && x >= 0 && y >= 0; }
  bool fits(int width, int height) const noexcept {
    return valid() && x + w <= width && y + h <= height;
  }
  long long area() const noexcept { return static_cast<long long>(w) * h; }

  friend bool operator==(const BoundingBox&, const BoundingBox&) = default;
};

/// Intersection over union of two valid boxes, in [0, 1].
double iou(const BoundingBox& a, const BoundingBox& b) noexcept;

/// Lowercase ASCII, replace punctuation by whitespace, split on whitespace.
std::vector<std::string> normalize_and_tokenize(std::string_view text);

std::string join(const std::vector<std::string>& words, std::string_view sep = " ");

/// Round-trip decimal rendering (%.17g) used in every artifact.
std::string format_number(double v);

using TokenId = std::uint32_t;
using TokenSequence = std::vector<TokenId>;

/// Bijective symbol table. Ids are assigned in insertion order.
class Vocabulary {
 public:
  Vocabulary() = default;
  explicit Vocabulary(const std::vector<std::string>& symbols);

  TokenId add(const std::string& symbol);
  std::optional<TokenId> find(std::string_view symbol) const;
  /// Throws ArgumentError naming the symbol when it is absent.
  TokenId id(std::string_view symbol) const;
  const std::string& symbol(TokenId id) const;
  std::size_t size() const noexcept { return symbols_.size(); }
  const std::vector<std::string>& symbols() const noexcept { return symbols_; }

  /// Whitespace-split `text` and map each word; throws naming the first
  /// word that is not a symbol.
  TokenSequence encode(std::string_view text) const;
  /// Space-joined symbols, skipping the structural begin/end markers.
  std::string decode(const TokenSequence& tokens) const;

  friend bool operator==(const Vocabulary& a, const Vocabulary& b) {
    return a.symbols_ == b.symbols_;
  }

 private:
  std::vector<std::string> symbols_;
  std::unordered_map<std::string, TokenId> index_;
};

inline constexpr std::string_view kBeginToken = "<bos>";
inline constexpr std::string_view kEndToken = "<eos>";
inline constexpr std::string_view kDiagnosisPrefix = "diagnosis:";

/// Answer words available to VQA responses.
const std::vector<std::string>& answer_words();

/// Output vocabulary for a grid of the given extent and class names:
/// structural tokens, class labels, slot-specific coordinate tokens
/// (x0.., y0.., w1.., h1..) and answer words.
Vocabulary build_vocabulary(int width, int height, const std::vector<std::string>& class_names);

}  // namespace vrft
