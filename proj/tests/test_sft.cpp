// Copyright (c) 2026 vrft contributors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <fstream>
#include <sstream>

#include "support.hpp"
#include "vrft/checkpoint.hpp"
#include "vrft/error.hpp"
#include "vrft/sft.hpp"

using namespace vrft;
using namespace vrft::testing;

namespace {

Vocabulary vocabulary_of(std::size_t n) {
  std::vector<std::string> symbols{std::string(kBeginToken), std::string(kEndToken)};
  for (std::size_t i = symbols.size(); i < n; ++i) symbols.push_back("w" + std::to_string(i));
  return Vocabulary(symbols);
}

struct Batch {
  PolicyParams params = small_policy(23);
  DatasetSplit data;
  std::vector<EncodedInput> inputs;
  std::vector<SftExample> examples;

  explicit Batch(int images) : data(generate_planted_shapes(small_data(images), 4)) {
    inputs.reserve(data.size());
    for (const auto& s : data.samples) inputs.push_back(encode_input(params.config, s));
    for (std::size_t i = 0; i < data.size(); ++i)
      examples.push_back({&inputs[i], gold_sequence(params, data.samples[i], small_classes())});
  }
};

SftConfig quick_config(int steps) {
  SftConfig c;
  c.steps = steps;
  c.batch_size = 8;
  c.seed = 3;
  return c;
}

}  // namespace

TEST_SUITE("sft") {
  TEST_CASE("gold sequences end with the end token") {
    Batch b(3);
    for (std::size_t i = 0; i < b.data.size(); ++i) {
      const auto& gold = b.examples[i].gold;
      CHECK(gold.back() == b.params.end_token());
      CHECK(b.params.vocab.decode(gold) == target_response(b.data.samples[i], small_classes()));
    }
    auto bad = b.data.samples[0];
    bad.task = Task::diagnosis;
    bad.box.reset();
    bad.answer.reset();
    bad.label = 0;
    CHECK_THROWS_WITH_AS(gold_sequence(b.params, bad, {"melanoma", "nevus", "other"}),
                         doctest::Contains("melanoma"), ArgumentError);
  }

  TEST_CASE("uniform policy loss is L ln V") {
    auto p = init_policy(small_config(), vocabulary_of(32), 1);
    for (auto& v : p.base.flat()) v = 0.0;
    const auto in = encode_input(p.config, *generate_planted_shapes(small_data(1), 1).samples[0].image, "x");
    const std::vector<SftExample> batch{{&in, TokenSequence{5, 1}}};
    CHECK(sft_loss(p, batch) == doctest::Approx(2.0 * std::log(32.0)).epsilon(1e-14));
  }

  TEST_CASE("loss is the mean negative log-probability") {
    Batch b(4);
    const std::span<const SftExample> one(b.examples.data(), 1);
    CHECK(std::abs(sft_loss(b.params, one) + log_prob(b.params, *b.examples[0].input, b.examples[0].gold)) <= 1e-12);
    double sum = 0.0;
    for (const auto& e : b.examples) sum -= log_prob(b.params, *e.input, e.gold);
    const double loss = sft_loss(b.params, b.examples);
    CHECK(loss == doctest::Approx(sum / static_cast<double>(b.examples.size())).epsilon(1e-13));
    CHECK(loss >= 0.0);
    auto doubled = b.examples;
    doubled.insert(doubled.end(), b.examples.begin(), b.examples.end());
    CHECK(std::abs(sft_loss(b.params, doubled) - loss) <= 1e-12);
    CHECK_THROWS_AS(sft_loss(b.params, std::span<const SftExample>{}), ArgumentError);
  }

  TEST_CASE("zero learning rate leaves parameters unchanged") {
    Batch b(4);
    const auto before = b.params;
    Optimizer opt({OptimizerKind::sgd, 0.0, 5.0});
    const double loss = sft_step(b.params, b.examples, opt);
    CHECK(loss == sft_loss(before, b.examples));
    CHECK(b.params.trainable == before.trainable);
    CHECK(b.params.base == before.base);
  }

  TEST_CASE("a step changes only the trainable blocks") {
    Batch b(4);
    const auto before = b.params;
    Optimizer opt({OptimizerKind::adam, 0.05, 5.0});
    (void)sft_step(b.params, b.examples, opt);
    CHECK(block_bytes(b.params, "base") == block_bytes(before, "base"));
    CHECK(block_bytes(b.params, "token_embedding") == block_bytes(before, "token_embedding"));
    CHECK(b.params.trainable != before.trainable);
  }

  TEST_CASE("gradient matches central differences") {
    Batch b(3);
    const auto grad = grad_trainable(b.params, sft_objective(b.examples), Execution::serial);
    // The objective is the negated mean log-likelihood.
    auto probe = b.params;
    for (const auto& c : random_coordinates(probe, 100, 5)) {
      const double numeric = central_difference(
          probe, c, [&](const PolicyParams& p) { return sft_loss(p, b.examples); }, 1e-5);
      REQUIRE(relative_error(coordinate(grad, c), numeric) < 1e-4);
    }
  }

  TEST_CASE("200 steps on 50 samples halve the loss") {
    Batch b(17);
    std::vector<SftExample> batch(b.examples.begin(), b.examples.begin() + 50);
    const double initial = sft_loss(b.params, batch);
    Optimizer opt({OptimizerKind::adam, 0.01, 5.0});
    std::vector<double> losses;
    for (int s = 0; s < 200; ++s) losses.push_back(sft_step(b.params, batch, opt));
    const double final_loss = sft_loss(b.params, batch);
    CHECK(final_loss <= 0.5 * initial);
    std::vector<double> smooth;
    for (std::size_t i = 0; i + 10 <= losses.size(); i += 10) {
      double m = 0.0;
      for (std::size_t k = i; k < i + 10; ++k) m += losses[k];
      smooth.push_back(m / 10.0);
    }
    for (std::size_t i = 1; i < smooth.size(); ++i) CHECK(smooth[i] < smooth[i - 1]);
  }

  TEST_CASE("zero steps return the initial parameters") {
    Batch b(4);
    const auto result = train_sft(b.params, b.data, quick_config(0), small_classes());
    CHECK(result.params.trainable == b.params.trainable);
    CHECK(result.losses.empty());
  }

  TEST_CASE("training is deterministic and keeps frozen blocks") {
    Batch b(6);
    auto cfg = quick_config(15);
    cfg.instruction_dropout = 0.3;
    const auto r1 = train_sft(b.params, b.data, cfg, small_classes());
    const auto r2 = train_sft(b.params, b.data, cfg, small_classes(), Execution::serial);
    CHECK(r1.losses == r2.losses);
    CHECK(r1.params.trainable == r2.params.trainable);
    CHECK(r1.losses.size() == 15);
    CHECK(block_bytes(r1.params, "base") == block_bytes(b.params, "base"));
    CHECK(block_bytes(r1.params, "token_embedding") == block_bytes(b.params, "token_embedding"));
    cfg.seed = 4;
    CHECK(train_sft(b.params, b.data, cfg, small_classes()).losses != r1.losses);
  }

  TEST_CASE("invalid configurations and empty data are rejected") {
    Batch b(2);
    auto cfg = quick_config(5);
    cfg.batch_size = 0;
    CHECK_THROWS_AS(train_sft(b.params, b.data, cfg, small_classes()), ConfigError);
    cfg = quick_config(5);
    cfg.instruction_dropout = 1.0;
    CHECK_THROWS_AS(train_sft(b.params, b.data, cfg, small_classes()), ConfigError);
    cfg = quick_config(5);
    cfg.optimizer.learning_rate = -1.0;
    CHECK_THROWS_AS(train_sft(b.params, b.data, cfg, small_classes()), ConfigError);
    CHECK_THROWS_AS(train_sft(b.params, DatasetSplit{}, quick_config(5), small_classes()), ArgumentError);
  }

  TEST_CASE("loss trajectory csv") {
    const auto dir = scratch_dir("sft_csv");
    const std::vector<double> losses{2.5, 1.25};
    write_loss_csv(dir / "loss.csv", losses, "h");
    std::ifstream in(dir / "loss.csv");
    std::stringstream ss;
    ss << in.rdbuf();
    const auto text = ss.str();
    CHECK(text.find("step,loss\n") != std::string::npos);
    CHECK(text.find("0,2.5\n") != std::string::npos);
    CHECK(text.find("1,1.25\n") != std::string::npos);
  }
}
