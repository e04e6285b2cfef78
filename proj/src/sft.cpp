// Copyright (c) 2026 vrft contributors
// SPDX-License-Identifier: Apache-2.0

#include "vrft/sft.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include "vrft/error.hpp"

namespace vrft {

void SftConfig::validate() const {
  optimizer.validate("sft.optimizer");
  if (batch_size < 1) throw ConfigError("sft.batch_size must be >= 1");
  if (steps < 0) throw ConfigError("sft.steps must be >= 0");
  if (!(instruction_dropout >= 0.0 && instruction_dropout < 1.0))
    throw ConfigError("sft.instruction_dropout must lie in [0, 1)");
}

TokenSequence gold_sequence(const PolicyParams& params, const TaskSample& sample,
                            const std::vector<std::string>& classes) {
  auto seq = params.vocab.encode(target_response(sample, classes));
  seq.push_back(params.end_token());
  if (seq.size() > static_cast<std::size_t>(params.config.max_len))
    throw ArgumentError("gold response of " + std::to_string(seq.size()) +
                        " tokens exceeds max length " + std::to_string(params.config.max_len));
  return seq;
}

PathObjective sft_objective(std::span<const SftExample> batch) {
  if (batch.empty()) throw ArgumentError("SFT batch is empty");
  PathObjective obj;
  const double w = -1.0 / static_cast<double>(batch.size());
  for (const auto& ex : batch) {
    PathTerm term;
    term.input = ex.input;
    term.tokens = ex.gold;
    term.logp_weight.assign(ex.gold.size(), w);
    obj.terms.push_back(std::move(term));
  }
  return obj;
}

double sft_loss(const PolicyParams& params, std::span<const SftExample> batch) {
  if (batch.empty()) throw ArgumentError("SFT batch is empty");
  double s = 0.0;
  for (const auto& ex : batch) s += log_prob(params, *ex.input, ex.gold);
  return -s / static_cast<double>(batch.size());
}

double sft_step(PolicyParams& params, std::span<const SftExample> batch, Optimizer& optimizer,
                Execution exec) {
  const double loss = sft_loss(params, batch);
  if (!std::isfinite(loss)) throw NumericError("non-finite SFT loss");
  auto grad = grad_trainable(params, sft_objective(batch), exec);
  optimizer.step(params.trainable, grad);
  return loss;
}

SftResult train_sft(PolicyParams initial, const DatasetSplit& data, const SftConfig& config,
                    const std::vector<std::string>& classes, Execution exec) {
  config.validate();
  if (data.empty()) throw ArgumentError("empty dataset");
  std::vector<EncodedInput> inputs(data.size());
  for_each_index(data.size(), exec, [&](std::size_t i) {
    inputs[i] = encode_input(initial.config, data.samples[i]);
  });
  std::vector<SftExample> examples(data.size());
  for (std::size_t i = 0; i < data.size(); ++i)
    examples[i] = {&inputs[i], gold_sequence(initial, data.samples[i], classes)};

  SftResult result{std::move(initial), {}};
  result.losses.reserve(static_cast<std::size_t>(config.steps));
  Optimizer opt(config.optimizer);
  const auto n = examples.size();
  const auto bs = static_cast<std::size_t>(config.batch_size);
  std::vector<std::size_t> order(n);
  std::vector<SftExample> batch;
  std::vector<EncodedInput> dropped(std::min(bs, n));
  for (int step = 0; step < config.steps; ++step) {
    Rng rng(derive_seed(config.seed, {static_cast<std::uint64_t>(step)}));
    batch.clear();
    if (bs >= n) {
      batch = examples;
    } else {
      std::iota(order.begin(), order.end(), std::size_t{0});
      for (std::size_t k = 0; k < bs; ++k) {
        std::swap(order[k], order[k + rng.below(n - k)]);
        batch.push_back(examples[order[k]]);
      }
    }
    if (config.instruction_dropout > 0.0) {
      for (std::size_t k = 0; k < batch.size(); ++k) {
        const auto& src = *batch[k].input;
        auto& dst = dropped[k];
        dst.disease = src.disease;
        dst.pooled_pixel = src.pooled_pixel;
        dst.instruction.clear();
        for (auto b : src.instruction)
          if (rng.uniform() >= config.instruction_dropout) dst.instruction.push_back(b);
        if (dst.instruction.empty() && !src.instruction.empty())
          dst.instruction.push_back(src.instruction[rng.below(src.instruction.size())]);
        batch[k].input = &dst;
      }
    }
    try {
      result.losses.push_back(sft_step(result.params, batch, opt, exec));
    } catch (const Error& e) {
      throw Error(e.kind(), "SFT step " + std::to_string(step) + ": " + e.what());
    }
  }
  return result;
}

void write_loss_csv(const std::filesystem::path& path, std::span<const double> losses,
                    std::string_view config_hash) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << "# config_hash=" << config_hash << '\n' << "step,loss\n";
  for (std::size_t i = 0; i < losses.size(); ++i) out << i << ',' << format_number(losses[i]) << '\n';
  if (!out) throw IoError("write failed for " + path.string());
}

}  // namespace vrft
