// Copyright (c) 2026 vrft contributors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include "support.hpp"
#include "vrft/core.hpp"
#include "vrft/error.hpp"
#include "vrft/rng.hpp"

using namespace vrft;
using vrft::testing::iou_by_cells;
using vrft::testing::random_box;

TEST_SUITE("core") {
  TEST_CASE("iou of identical, disjoint and offset boxes") {
    CHECK(iou({0, 0, 4, 4}, {0, 0, 4, 4}) == 1.0);
    CHECK(iou({0, 0, 2, 2}, {5, 5, 2, 2}) == 0.0);
    // One shared cell, seven covered cells.
    CHECK(iou({0, 0, 2, 2}, {1, 1, 2, 2}) == doctest::Approx(1.0 / 7.0).epsilon(1e-15));
    CHECK(iou({0, 0, 2, 2}, {2, 0, 2, 2}) == 0.0);  // touching edges share no cell
  }

  TEST_CASE("iou is symmetric, bounded and matches cell counting") {
    Rng rng(11);
    for (int i = 0; i < 10000; ++i) {
      const auto a = random_box(rng, 16), b = random_box(rng, 16);
      const double v = iou(a, b);
      REQUIRE(v >= 0.0);
      REQUIRE(v <= 1.0);
      REQUIRE(v == iou(b, a));
      REQUIRE(iou(a, a) == 1.0);
      if (i < 1000) REQUIRE(std::abs(v - iou_by_cells(a, b)) <= 1e-12);
    }
  }

  TEST_CASE("normalize_and_tokenize follows the stated rule") {
    CHECK(normalize_and_tokenize("Left lung, nodule.") ==
          std::vector<std::string>{"left", "lung", "nodule"});
    CHECK(normalize_and_tokenize("").empty());
    CHECK(normalize_and_tokenize("NODULE nodule") == std::vector<std::string>{"nodule", "nodule"});
    CHECK(normalize_and_tokenize("  \t\n ").empty());
  }

  TEST_CASE("normalize_and_tokenize is idempotent after re-joining") {
    Rng rng(5);
    const std::string alphabet = "abcXYZ ,.;:!?-\t'\"()";
    for (int i = 0; i < 500; ++i) {
      std::string s;
      const int len = rng.between(0, 40);
      for (int k = 0; k < len; ++k) s += alphabet[rng.below(alphabet.size())];
      const auto once = normalize_and_tokenize(s);
      REQUIRE(normalize_and_tokenize(join(once)) == once);
    }
  }

  TEST_CASE("vocabulary is a bijection with stable order") {
    const auto v = build_vocabulary(8, 8, {"square", "cross", "stripe"});
    CHECK(v.size() == 3 + 3 + 4 * 8 + answer_words().size());
    CHECK(v == build_vocabulary(8, 8, {"square", "cross", "stripe"}));
    for (TokenId i = 0; i < v.size(); ++i) CHECK(v.id(v.symbol(i)) == i);
    CHECK(v.symbol(0) == kBeginToken);
    CHECK(v.symbol(1) == kEndToken);
    CHECK(v.find("x7").has_value());
    CHECK_FALSE(v.find("x8").has_value());
    CHECK(v.find("w8").has_value());
    CHECK_FALSE(v.find("w0").has_value());
  }

  TEST_CASE("vocabulary encodes and decodes responses") {
    const auto v = build_vocabulary(8, 8, {"square", "cross", "stripe"});
    const auto seq = v.encode("diagnosis: Cross");
    REQUIRE(seq.size() == 2);
    CHECK(v.decode(seq) == "diagnosis: cross");
    auto with_end = v.encode("x1 y2 w3 h4");
    with_end.push_back(v.id(kEndToken));
    CHECK(v.decode(with_end) == "x1 y2 w3 h4");
    CHECK_THROWS_AS(v.encode("diagnosis: melanoma"), ArgumentError);
    try {
      (void)v.encode("diagnosis: melanoma");
    } catch (const ArgumentError& e) {
      CHECK(std::string(e.what()).find("melanoma") != std::string::npos);
    }
  }

  TEST_CASE("derived seeds separate streams deterministically") {
    CHECK(derive_seed(1, "a") == derive_seed(1, "a"));
    CHECK(derive_seed(1, "a") != derive_seed(1, "b"));
    CHECK(derive_seed(1, {0}) != derive_seed(1, {1}));
    CHECK(derive_seed(1, {0, 1}) != derive_seed(1, {1, 0}));
    Rng a(3), b(3);
    for (int i = 0; i < 100; ++i) CHECK(a.uniform() == b.uniform());
  }

  TEST_CASE("format_number round-trips doubles") {
    Rng rng(9);
    for (int i = 0; i < 1000; ++i) {
      const double v = rng.normal() * std::pow(10.0, rng.between(-20, 20));
      REQUIRE(std::stod(format_number(v)) == v);
    }
    CHECK(format_number(0.5) == "0.5");
  }
}
