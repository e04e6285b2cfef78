// Copyright (c) 2026 vrft contributors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <fstream>
#include <map>
#include <set>

#include <json.hpp>

#include "support.hpp"
#include "vrft/data.hpp"
#include "vrft/error.hpp"

using namespace vrft;
using vrft::testing::scratch_dir;
using vrft::testing::small_classes;
using vrft::testing::small_data;

namespace {

DatasetSplit labelled_split(int per_class, int classes) {
  auto img = std::make_shared<const GridImage>(8, 8, 0.0);
  DatasetSplit s;
  for (int i = 0; i < per_class * classes; ++i) {
    TaskSample t;
    t.task = Task::diagnosis;
    t.image = img;
    t.instruction = "case " + std::to_string(i);
    t.label = i % classes;
    s.samples.push_back(t);
  }
  return s;
}

std::map<int, int> label_counts(const DatasetSplit& s) {
  std::map<int, int> m;
  for (const auto& t : s.samples) ++m[*t.label];
  return m;
}

std::string serialized(const DatasetSplit& s) {
  std::string out;
  for (const auto& t : s.samples) out += to_jsonl_line(t) + "\n";
  return out;
}

void write_lines(const std::filesystem::path& p, const std::vector<std::string>& lines) {
  std::ofstream f(p, std::ios::binary);
  for (const auto& l : lines) f << l << '\n';
}

template <class Fn>
std::string error_message(Fn&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.what();
  }
  return {};
}

}  // namespace

TEST_SUITE("data") {
  TEST_CASE("generation emits three records per image sharing the image") {
    const auto split = generate_planted_shapes(small_data(10), 1);
    REQUIRE(split.size() == 30);
    std::map<Task, int> per_task;
    for (std::size_t i = 0; i < split.size(); ++i) {
      ++per_task[split.samples[i].task];
      CHECK(split.samples[i].image == split.samples[i - i % 3].image);
    }
    CHECK(per_task[Task::diagnosis] == 10);
    CHECK(per_task[Task::grounding] == 10);
    CHECK(per_task[Task::vqa] == 10);
    for (const auto& s : split.samples) {
      switch (s.task) {
        case Task::diagnosis:
          CHECK((s.label && !s.box && !s.answer));
          break;
        case Task::grounding:
          CHECK((s.box && !s.label && !s.answer));
          break;
        case Task::vqa:
          CHECK((s.answer && !s.label && !s.box));
          break;
      }
    }
  }

  TEST_CASE("noise-free images are binary and the gold box covers the shape") {
    auto cfg = small_data(40);
    cfg.noise_level = 0.0;
    const auto split = generate_planted_shapes(cfg, 2);
    for (const auto& s : split.samples) {
      if (s.task != Task::grounding) continue;
      const auto& img = *s.image;
      int x0 = img.width, y0 = img.height, x1 = -1, y1 = -1;
      for (int r = 0; r < img.height; ++r)
        for (int c = 0; c < img.width; ++c) {
          const double v = img.at(r, c);
          REQUIRE((v == 0.0 || v == 1.0));
          if (v == 1.0) {
            x0 = std::min(x0, c);
            y0 = std::min(y0, r);
            x1 = std::max(x1, c);
            y1 = std::max(y1, r);
          }
        }
      REQUIRE(x1 >= 0);
      CHECK(*s.box == BoundingBox{x0, y0, x1 - x0 + 1, y1 - y0 + 1});
      CHECK(s.box->fits(img.width, img.height));
    }
  }

  TEST_CASE("noisy intensities stay inside the unit interval") {
    auto cfg = small_data(30);
    cfg.noise_level = 0.45;
    for (const auto& s : generate_planted_shapes(cfg, 3).samples) CHECK_NOTHROW(s.image->validate());
  }

  TEST_CASE("generation is deterministic in config and seed") {
    const auto a = generate_planted_shapes(small_data(20), 9);
    const auto b = generate_planted_shapes(small_data(20), 9);
    const auto c = generate_planted_shapes(small_data(20), 10);
    CHECK(serialized(a) == serialized(b));
    CHECK(serialized(a) != serialized(c));
  }

  TEST_CASE("oversized shapes and bad class counts are configuration errors") {
    auto cfg = small_data(5);
    cfg.max_shape = 7;
    CHECK_THROWS_AS(generate_planted_shapes(cfg, 1), ConfigError);
    cfg = small_data(5);
    cfg.classes = 9;
    CHECK_THROWS_AS(generate_planted_shapes(cfg, 1), ConfigError);
    cfg.classes = 1;
    CHECK_THROWS_AS(generate_planted_shapes(cfg, 1), ConfigError);
  }

  TEST_CASE("incomplete annotations keep the gold box and are unreliable") {
    auto cfg = small_data(200);
    cfg.incomplete_box_rate = 0.5;
    const auto split = generate_planted_shapes(cfg, 4);
    int unreliable = 0;
    for (const auto& s : split.samples) {
      if (s.task != Task::grounding) {
        CHECK(s.reliable);
        continue;
      }
      REQUIRE(s.box);
      if (!s.reliable) {
        ++unreliable;
        const auto words = normalize_and_tokenize(target_response(s, small_classes()));
        REQUIRE(words.size() == 2);
        CHECK(words[0] == "x" + std::to_string(s.box->x));
        CHECK(words[1] == "y" + std::to_string(s.box->y));
      } else {
        CHECK(target_response(s, small_classes()) == canonical_response(s, small_classes()));
      }
    }
    CHECK(unreliable > 60);
    CHECK(unreliable < 140);
  }

  TEST_CASE("jsonl round trip preserves every field") {
    auto cfg = small_data(6);
    cfg.incomplete_box_rate = 0.5;
    const auto split = generate_planted_shapes(cfg, 5);
    const auto dir = scratch_dir("roundtrip");
    save_jsonl(split, dir / "s.jsonl");
    const auto back = load_jsonl(dir / "s.jsonl");
    CHECK(serialized(back) == serialized(split));
    std::vector<std::string> five;
    for (int i = 0; i < 5; ++i) five.push_back(to_jsonl_line(split.samples[static_cast<std::size_t>(i)]));
    write_lines(dir / "five.jsonl", five);
    CHECK(load_jsonl(dir / "five.jsonl").size() == 5);
  }

  TEST_CASE("jsonl errors carry line numbers and field names") {
    const auto split = generate_planted_shapes(small_data(2), 6);
    const auto dir = scratch_dir("jsonl_errors");
    std::vector<std::string> lines;
    for (const auto& s : split.samples) lines.push_back(to_jsonl_line(s));

    auto bad_box = lines;
    auto j = nlohmann::json::parse(lines[1]);
    j["box"] = {1, 1, 0, 3};
    bad_box[2] = j.dump();
    write_lines(dir / "box.jsonl", {bad_box[0], bad_box[0], bad_box[2]});
    const auto msg = error_message([&] { (void)load_jsonl(dir / "box.jsonl"); });
    CHECK(msg.find("invalid box, line 3") != std::string::npos);

    auto missing = nlohmann::json::parse(lines[0]);
    missing.erase("instruction");
    write_lines(dir / "missing.jsonl", {lines[0], missing.dump()});
    const auto msg2 = error_message([&] { (void)load_jsonl(dir / "missing.jsonl"); });
    CHECK(msg2.find("missing field 'instruction'") != std::string::npos);
    CHECK(msg2.find("line 2") != std::string::npos);
    CHECK_THROWS_AS(load_jsonl(dir / "missing.jsonl"), ParseError);

    write_lines(dir / "mixed.jsonl", {lines[0], lines[1]});
    CHECK_THROWS_AS(load_jsonl(dir / "mixed.jsonl", Task::diagnosis), SchemaError);
    CHECK_NOTHROW(load_jsonl(dir / "mixed.jsonl"));
  }

  TEST_CASE("an empty file gives an empty split and a warning") {
    const auto dir = scratch_dir("jsonl_empty");
    write_lines(dir / "empty.jsonl", {});
    std::vector<std::string> warnings;
    const auto split = load_jsonl(dir / "empty.jsonl", {}, &warnings);
    CHECK(split.empty());
    REQUIRE(warnings.size() == 1);
    CHECK(warnings[0].find("empty") != std::string::npos);
  }

  TEST_CASE("subset_fraction stratifies by class") {
    const auto split = labelled_split(25, 4);
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
      const auto sub = subset_fraction(split, 0.2, seed);
      REQUIRE(sub.size() == 20);
      for (const auto& [label, n] : label_counts(sub)) REQUIRE(n == 5);
    }
    CHECK(serialized(subset_fraction(split, 1.0, 3)) == serialized(split));
    CHECK(subset_fraction(labelled_split(1, 3), 0.2, 1).size() == 1);
    CHECK(serialized(subset_fraction(split, 0.4, 8)) == serialized(subset_fraction(split, 0.4, 8)));
    CHECK_THROWS_AS(subset_fraction(split, 0.0, 1), ArgumentError);
    CHECK_THROWS_AS(subset_fraction(split, 1.5, 1), ArgumentError);
    CHECK_THROWS_AS(subset_fraction(DatasetSplit{}, 0.5, 1), ArgumentError);
  }

  TEST_CASE("subset_fraction uses the ceiling for every fraction") {
    const auto split = generate_planted_shapes(small_data(17), 8);
    for (double f : {0.2, 0.4, 0.6, 0.8, 1.0, 0.33})
      CHECK(subset_fraction(split, f, 1).size() ==
            static_cast<std::size_t>(std::ceil(f * static_cast<double>(split.size()) - 1e-9)));
  }

  TEST_CASE("subset_kshot draws exactly k per class") {
    const auto split = labelled_split(10, 3);
    CHECK(subset_kshot(split, 4, 1).size() == 12);
    CHECK(subset_kshot(split, 10, 1).size() == 30);
    std::set<std::string> selections;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
      const auto sub = subset_kshot(split, 4, seed);
      for (const auto& [label, n] : label_counts(sub)) REQUIRE(n == 4);
      selections.insert(serialized(sub));
    }
    CHECK(selections.size() > 1);
    const auto msg = error_message([&] { (void)subset_kshot(split, 11, 1); });
    CHECK(msg.find("class 0") != std::string::npos);
  }

  TEST_CASE("modality templates require the placeholder") {
    CHECK(fill_modality("What is in this {modality} image?", "grid") == "What is in this grid image?");
    CHECK_THROWS_AS(fill_modality("no slot", "grid"), ArgumentError);
    for (const auto& t : diagnosis_instructions()) CHECK(t.find(kModalityPlaceholder) != std::string::npos);
    for (const auto& t : grounding_instructions()) CHECK(t.find(kModalityPlaceholder) != std::string::npos);
  }
}
