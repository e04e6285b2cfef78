// Copyright (c) 2026 vrft contributors
// SPDX-License-Identifier: Apache-2.0

#include "vrft/core.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>

#include "vrft/error.hpp"

namespace vrft {

double iou(const BoundingBox& a, const BoundingBox& b) noexcept {
  const long long ix = std::max(0, std::min(a.x + a.w, b.x + b.w) - std::max(a.x, b.x));
  const long long iy = std::max(0, std::min(a.y + a.h, b.y + b.h) - std::max(a.y, b.y));
  const long long inter = ix * iy;
  const long long uni = a.area() + b.area() - inter;
  if (uni <= 0) return 0.0;
  return static_cast<double>(inter) / static_cast<double>(uni);
}

std::vector<std::string> normalize_and_tokenize(std::string_view text) {
  std::vector<std::string> out;
  std::string cur;
  for (unsigned char c : text) {
    if (std::isspace(c) || (c < 0x80 && std::ispunct(c))) {
      if (!cur.empty()) out.push_back(std::move(cur));
      cur.clear();
      continue;
    }
    cur.push_back(c < 0x80 ? static_cast<char>(std::tolower(c)) : static_cast<char>(c));
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

std::string join(const std::vector<std::string>& words, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < words.size(); ++i) {
    if (i) out += sep;
    out += words[i];
  }
  return out;
}

std::string format_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

Vocabulary::Vocabulary(const std::vector<std::string>& symbols) {
  for (const auto& s : symbols) add(s);
}

TokenId Vocabulary::add(const std::string& symbol) {
  if (symbol.empty()) throw ArgumentError("vocabulary symbol must be non-empty");
  if (index_.contains(symbol)) throw ArgumentError("duplicate vocabulary symbol '" + symbol + "'");
  const auto id = static_cast<TokenId>(symbols_.size());
  symbols_.push_back(symbol);
  index_.emplace(symbol, id);
  return id;
}

std::optional<TokenId> Vocabulary::find(std::string_view symbol) const {
  auto it = index_.find(std::string(symbol));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

TokenId Vocabulary::id(std::string_view symbol) const {
  if (auto t = find(symbol)) return *t;
  throw ArgumentError("token '" + std::string(symbol) + "' is not in the vocabulary");
}

const std::string& Vocabulary::symbol(TokenId id) const {
  if (id >= symbols_.size())
    throw ArgumentError("token index " + std::to_string(id) + " outside vocabulary of size " +
                        std::to_string(symbols_.size()));
  return symbols_[id];
}

TokenSequence Vocabulary::encode(std::string_view text) const {
  TokenSequence out;
  std::string word;
  auto flush = [&] {
    if (word.empty()) return;
    std::string lower = word;
    std::transform(lower.begin(), lower.end(), lower.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    out.push_back(id(lower));
    word.clear();
  };
  for (char c : text) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      flush();
    } else {
      word.push_back(c);
    }
  }
  flush();
  return out;
}

std::string Vocabulary::decode(const TokenSequence& tokens) const {
  std::string out;
  for (TokenId t : tokens) {
    const auto& s = symbol(t);
    if (s == kBeginToken || s == kEndToken) continue;
    if (!out.empty()) out += ' ';
    out += s;
  }
  return out;
}

const std::vector<std::string>& answer_words() {
  static const std::vector<std::string> words{"yes", "no", "upper", "lower", "left", "right"};
  return words;
}

Vocabulary build_vocabulary(int width, int height, const std::vector<std::string>& class_names) {
  Vocabulary v;
  v.add(std::string(kBeginToken));
  v.add(std::string(kEndToken));
  v.add(std::string(kDiagnosisPrefix));
  for (const auto& c : class_names) v.add(c);
  for (int i = 0; i < width; ++i) v.add("x" + std::to_string(i));
  for (int i = 0; i < height; ++i) v.add("y" + std::to_string(i));
  for (int i = 1; i <= width; ++i) v.add("w" + std::to_string(i));
  for (int i = 1; i <= height; ++i) v.add("h" + std::to_string(i));
  for (const auto& a : answer_words()) v.add(a);
  return v;
}

}  // namespace vrft
