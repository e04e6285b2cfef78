// Copyright (c) 2026 vrft contributors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include "support.hpp"
#include "vrft/error.hpp"
#include "vrft/rewards.hpp"

using namespace vrft;
using vrft::testing::random_box;

namespace {

std::string box_text(const BoundingBox& b) {
  return "x" + std::to_string(b.x) + " y" + std::to_string(b.y) + " w" + std::to_string(b.w) + " h" +
         std::to_string(b.h);
}

// Multiset F1 by explicit counting.
double f1_oracle(const std::vector<std::string>& p, const std::vector<std::string>& g) {
  std::vector<bool> used(g.size(), false);
  double common = 0.0;
  for (const auto& t : p)
    for (std::size_t k = 0; k < g.size(); ++k)
      if (!used[k] && g[k] == t) {
        used[k] = true;
        common += 1.0;
        break;
      }
  if (common == 0.0) return 0.0;
  const double prec = common / static_cast<double>(p.size()), rec = common / static_cast<double>(g.size());
  return 2.0 * prec * rec / (prec + rec);
}

}  // namespace

TEST_SUITE("rewards") {
  TEST_CASE("diagnosis reward requires the prefix and the label") {
    const RewardConfig cfg;
    CHECK(reward_diagnosis("diagnosis: melanoma", "melanoma", cfg) == 1.0);
    CHECK(reward_diagnosis("melanoma", "melanoma", cfg) == 0.0);
    CHECK(reward_diagnosis("diagnosis: nevus", "melanoma", cfg) == 0.0);
    CHECK(reward_diagnosis("Diagnosis: Melanoma.", "melanoma", cfg) == 1.0);
    CHECK(reward_diagnosis("diagnosis: melanomas", "melanoma", cfg) == 0.0);
    CHECK(reward_diagnosis("diagnosis: basal cell carcinoma", "basal cell carcinoma", cfg) == 1.0);
    CHECK(reward_diagnosis("diagnosis: cell basal carcinoma", "basal cell carcinoma", cfg) == 0.0);
    CHECK(reward_diagnosis("", "melanoma", cfg) == 0.0);
    RewardConfig custom;
    custom.diagnosis_prefix = "answer:";
    CHECK(reward_diagnosis("answer: melanoma", "melanoma", custom) == 1.0);
    CHECK(reward_diagnosis("diagnosis: melanoma", "melanoma", custom) == 0.0);
  }

  TEST_CASE("parse_box reads four integers in order") {
    CHECK(parse_box("location: (2, 3, 4, 4)") == BoundingBox{2, 3, 4, 4});
    CHECK(parse_box("x1 y2 w3 h4") == BoundingBox{1, 2, 3, 4});
    CHECK_FALSE(parse_box("2 3 4").has_value());
    CHECK_FALSE(parse_box("(1,1,0,5)").has_value());
    CHECK_FALSE(parse_box("(-1,1,2,5)").has_value());
    CHECK_FALSE(parse_box("").has_value());
    CHECK(parse_box("1 2 3 4 5") == BoundingBox{1, 2, 3, 4});
  }

  TEST_CASE("localization reward thresholds the IoU") {
    const RewardConfig cfg;
    const BoundingBox gold{0, 0, 2, 2};
    CHECK(reward_localization(box_text(gold), gold, cfg) == 1.0);
    CHECK(reward_localization("x1 y1 w2 h2", gold, cfg) == doctest::Approx(1.0 / 7.0).epsilon(1e-15));
    // One shared cell in a 20-cell union.
    const BoundingBox tall{0, 0, 1, 11}, wide{0, 10, 10, 1};
    REQUIRE(iou(tall, wide) == doctest::Approx(0.05).epsilon(1e-15));
    CHECK(reward_localization(box_text(wide), tall, cfg) == 0.0);
    CHECK(reward_localization("x1 y1", gold, cfg) == 0.0);
    CHECK(reward_localization("nothing here", gold, cfg) == 0.0);
  }

  TEST_CASE("localization reward is zero below the threshold and monotone above it") {
    Rng rng(7);
    const RewardConfig cfg;
    std::vector<std::pair<double, double>> pairs;
    for (int i = 0; i < 5000; ++i) {
      const auto gold = random_box(rng, 12), pred = random_box(rng, 12);
      const double v = iou(pred, gold);
      const double r = reward_localization(box_text(pred), gold, cfg);
      REQUIRE(r >= 0.0);
      REQUIRE(r <= 1.0);
      if (v < cfg.iou_low_threshold)
        REQUIRE(r == 0.0);
      else
        REQUIRE(r == v);
      pairs.emplace_back(v, r);
    }
    std::sort(pairs.begin(), pairs.end());
    for (std::size_t i = 1; i < pairs.size(); ++i) REQUIRE(pairs[i].second >= pairs[i - 1].second);
  }

  TEST_CASE("token F1 examples") {
    CHECK(token_f1("lung nodule", "lung nodule") == 1.0);
    CHECK(token_f1("left lung nodule", "lung nodule") == doctest::Approx(0.8).epsilon(1e-15));
    CHECK(token_f1("heart", "lung nodule") == 0.0);
    CHECK(token_f1("", "lung") == 0.0);
    CHECK(token_f1("nodule nodule", "nodule") == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
    CHECK_THROWS_AS(token_f1("lung", " ,. "), ArgumentError);
    CHECK(token_recall("lung nodule present", "lung nodule") == 1.0);
    CHECK(token_recall("nodule", "lung nodule") == 0.5);
    CHECK_THROWS_AS(token_recall("lung", ""), ArgumentError);
  }

  TEST_CASE("token F1 is symmetric and matches multiset counting") {
    Rng rng(3);
    const std::vector<std::string> words{"lung", "nodule", "left", "right", "mass"};
    for (int i = 0; i < 2000; ++i) {
      std::vector<std::string> a(1 + rng.below(5)), b(1 + rng.below(5));
      for (auto& w : a) w = words[rng.below(words.size())];
      for (auto& w : b) w = words[rng.below(words.size())];
      const double ab = token_f1(join(a), join(b));
      REQUIRE(ab == token_f1(join(b), join(a)));
      REQUIRE(std::abs(ab - f1_oracle(a, b)) <= 1e-12);
      REQUIRE(ab >= 0.0);
      REQUIRE(ab <= 1.0);
    }
  }

  TEST_CASE("task reward dispatches on the task") {
    const auto split = generate_planted_shapes(vrft::testing::small_data(3), 2);
    const auto classes = vrft::testing::small_classes();
    const RewardConfig cfg;
    for (const auto& s : split.samples) {
      if (s.task == Task::vqa) {
        CHECK_THROWS_AS(task_reward(s, "yes", classes, cfg), ConfigError);
        continue;
      }
      CHECK(task_reward(s, canonical_response(s, classes), classes, cfg) == 1.0);
      CHECK(task_reward(s, "", classes, cfg) == 0.0);
    }
  }

  TEST_CASE("reward configuration is validated") {
    RewardConfig cfg;
    cfg.iou_low_threshold = 1.0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg.iou_low_threshold = -0.1;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = {};
    cfg.diagnosis_prefix.clear();
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
  }
}
