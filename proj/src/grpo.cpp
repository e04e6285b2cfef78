// Copyright (c) 2026 vrft contributors
// SPDX-License-Identifier: Apache-2.0

#include "vrft/grpo.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <optional>
#include <string>

#include "vrft/error.hpp"

namespace vrft {

KlReference parse_kl_reference(std::string_view name) {
  if (name == "snapshot") return KlReference::snapshot;
  if (name == "initial") return KlReference::initial;
  throw ConfigError("grpo.kl_reference must be 'snapshot' or 'initial', got '" + std::string(name) +
                    "'");
}

std::string_view to_string(KlReference r) noexcept {
  return r == KlReference::initial ? "initial" : "snapshot";
}

void GrpoConfig::validate() const {
  if (group_size < 2) throw ConfigError("grpo.group_size must be >= 2");
  if (!(clip_epsilon > 0.0 && clip_epsilon < 1.0))
    throw ConfigError("grpo.clip_epsilon must lie in (0, 1)");
  if (!(kl_weight >= 0.0) || !std::isfinite(kl_weight))
    throw ConfigError("grpo.kl_weight must be finite and >= 0");
  if (!(std_epsilon > 0.0)) throw ConfigError("grpo.std_epsilon must be > 0");
  optimizer.validate("grpo.optimizer");
  if (iterations < 0) throw ConfigError("grpo.iterations must be >= 0");
  if (batch_size < 1) throw ConfigError("grpo.batch_size must be >= 1");
  if (!(rft_fraction > 0.0 && rft_fraction <= 1.0))
    throw ConfigError("grpo.rft_fraction must lie in (0, 1]");
  if (!(data_fraction > 0.0 && data_fraction <= 1.0))
    throw ConfigError("grpo.data_fraction must lie in (0, 1]");
}

AdvantageSet group_advantages(std::span<const double> rewards, double std_epsilon) {
  if (rewards.size() < 2)
    throw ArgumentError("a group needs at least two rewards, got " + std::to_string(rewards.size()));
  const double n = static_cast<double>(rewards.size());
  double mean = 0.0;
  for (double r : rewards) mean += r;
  mean /= n;
  AdvantageSet a;
  a.raw.reserve(rewards.size());
  double var = 0.0;
  for (double r : rewards) {
    a.raw.push_back(r - mean);
    var += (r - mean) * (r - mean);
  }
  const double denom = std::sqrt(var / n) + std_epsilon;
  for (double v : a.raw) a.normalized.push_back(v / denom);
  return a;
}

GrpoLoss grpo_loss(const PolicyParams& params, std::span<const GroupRollout> rollouts,
                   const GrpoConfig& cfg) {
  if (rollouts.empty()) throw ArgumentError("GRPO loss needs at least one rollout");
  GrpoLoss out;
  const double lo = 1.0 - cfg.clip_epsilon, hi = 1.0 + cfg.clip_epsilon;
  const double per_rollout = 1.0 / static_cast<double>(rollouts.size());
  double ratio_sum = 0.0;
  std::size_t clipped = 0;
  for (std::size_t m = 0; m < rollouts.size(); ++m) {
    const auto& ro = rollouts[m];
    const auto g = ro.outputs.size();
    if (g < 2 || ro.rewards.size() != g)
      throw ArgumentError("rollout " + std::to_string(m) + " must carry G >= 2 outputs and rewards");
    if (!ro.input) throw ArgumentError("rollout " + std::to_string(m) + " has no input");
    const auto adv = group_advantages(ro.rewards, cfg.std_epsilon);
    const auto& ref = ro.kl_reference ? *ro.kl_reference : ro.snapshot.params();
    for (std::size_t i = 0; i < g; ++i) {
      const auto& o = ro.outputs[i];
      const auto lp = step_log_probs(params, *ro.input, o.tokens);
      const auto kl = step_kl(params, ref, *ro.input, o.tokens, cfg.kl_direction);
      const double a = adv.normalized[i];
      const double c = per_rollout / static_cast<double>(g) / static_cast<double>(lp.size());
      PathTerm term;
      term.input = ro.input;
      term.tokens = o.tokens;
      term.reference = &ref;
      term.kl_direction = cfg.kl_direction;
      term.logp_weight.resize(lp.size());
      term.kl_weight.assign(lp.size(), c * cfg.kl_weight);
      for (std::size_t t = 0; t < lp.size(); ++t) {
        const double r = std::exp(lp[t] - o.log_probs[t]);
        if (!std::isfinite(r))
          throw NumericError("non-finite probability ratio in rollout " + std::to_string(m) +
                             ", output " + std::to_string(i) + ", step " + std::to_string(t));
        const double unclipped = r * a;
        const double clipped_term = std::clamp(r, lo, hi) * a;
        const bool clip_active = clipped_term < unclipped;
        const double surr = clip_active ? clipped_term : unclipped;
        out.surrogate += c * surr;
        out.kl += c * kl[t];
        term.logp_weight[t] = clip_active ? 0.0 : -c * unclipped;
        ratio_sum += r;
        clipped += clip_active ? 1 : 0;
        ++out.tokens;
      }
      out.objective.terms.push_back(std::move(term));
    }
  }
  out.loss = -out.surrogate + cfg.kl_weight * out.kl;
  out.mean_ratio = ratio_sum / static_cast<double>(out.tokens);
  out.clip_fraction = static_cast<double>(clipped) / static_cast<double>(out.tokens);
  return out;
}

GrpoDiagnostics grpo_step(PolicyParams& params, std::span<const TaskSample* const> batch,
                          std::span<const EncodedInput* const> inputs, const GrpoConfig& cfg,
                          Optimizer& optimizer, std::uint64_t stream_seed,
                          const std::vector<std::string>& classes, const RewardConfig& reward,
                          Execution exec, const PolicyParams* kl_reference) {
  if (batch.empty()) throw ArgumentError("GRPO batch is empty");
  if (inputs.size() != batch.size()) throw ArgumentError("GRPO batch and inputs differ in size");
  for (const auto* s : batch)
    if (s->task == Task::vqa) throw ConfigError("no reward function for task vqa");

  const auto snapshot = PolicySnapshot::take(params);
  std::vector<GroupRollout> rollouts;
  rollouts.reserve(batch.size());
  for (std::size_t k = 0; k < batch.size(); ++k)
    rollouts.push_back({batch[k], inputs[k], {}, {}, snapshot, kl_reference});
  for_each_index(batch.size(), exec, [&](std::size_t k) {
    Rng rng(derive_seed(stream_seed, {static_cast<std::uint64_t>(k)}));
    auto& ro = rollouts[k];
    ro.outputs = sample_group(snapshot.params(), *ro.input, cfg.group_size, rng);
    for (const auto& o : ro.outputs)
      ro.rewards.push_back(task_reward(*ro.sample, params.vocab.decode(o.tokens), classes, reward));
  });

  GrpoDiagnostics d;
  double reward_sum = 0.0;
  std::size_t count = 0;
  for (const auto& ro : rollouts)
    for (double r : ro.rewards) {
      reward_sum += r;
      ++count;
    }
  d.mean_reward = reward_sum / static_cast<double>(count);

  const auto before = grpo_loss(params, rollouts, cfg);
  d.loss = before.loss;
  auto grad = grad_trainable(params, before.objective, exec);
  optimizer.step(params.trainable, grad);

  const auto after = grpo_loss(params, rollouts, cfg);
  d.mean_ratio = after.mean_ratio;
  d.kl = after.kl;
  d.clip_fraction = after.clip_fraction;
  return d;
}

DatasetSplit rft_subset(const DatasetSplit& data, const GrpoConfig& cfg) {
  cfg.validate();
  DatasetSplit pool;
  pool.provenance = data.provenance;
  for (const auto& s : data.samples)
    if (s.task != Task::vqa && s.reliable) pool.samples.push_back(s);
  if (pool.empty()) throw ArgumentError("no reliable diagnosis or grounding samples for RFT");
  auto count = static_cast<std::size_t>(
      std::ceil(cfg.rft_fraction * static_cast<double>(data.size()) - 1e-9));
  count = std::clamp<std::size_t>(count, 1, pool.size());
  auto subset = stratified_subset(pool, count, derive_seed(cfg.seed, "rft-subset"));
  if (cfg.data_fraction < 1.0)
    subset = subset_fraction(subset, cfg.data_fraction, derive_seed(cfg.seed, "rft-fraction"));
  if (subset.empty()) throw ArgumentError("RFT subset is empty");
  return subset;
}

RftResult train_rft(PolicyParams sft_params, const DatasetSplit& data, const GrpoConfig& cfg,
                    const std::vector<std::string>& classes, const RewardConfig& reward,
                    Execution exec) {
  cfg.validate();
  reward.validate();
  RftResult result{std::move(sft_params), {}, rft_subset(data, cfg)};
  const auto& subset = result.subset;
  std::vector<EncodedInput> inputs(subset.size());
  for (std::size_t i = 0; i < subset.size(); ++i)
    inputs[i] = encode_input(result.params.config, subset.samples[i]);

  std::optional<PolicyParams> anchor;
  if (cfg.kl_reference == KlReference::initial) anchor = result.params;
  Optimizer opt(cfg.optimizer);
  const auto bs = static_cast<std::size_t>(cfg.batch_size);
  std::vector<const TaskSample*> batch(bs);
  std::vector<const EncodedInput*> batch_inputs(bs);
  for (int it = 0; it < cfg.iterations; ++it) {
    Rng rng(derive_seed(cfg.seed, {static_cast<std::uint64_t>(it), 0}));
    for (std::size_t k = 0; k < bs; ++k) {
      const auto pick = rng.below(subset.size());
      batch[k] = &subset.samples[pick];
      batch_inputs[k] = &inputs[pick];
    }
    try {
      result.diagnostics.push_back(grpo_step(result.params, batch, batch_inputs, cfg, opt,
                                             derive_seed(cfg.seed, {static_cast<std::uint64_t>(it), 1}),
                                             classes, reward, exec, anchor ? &*anchor : nullptr));
    } catch (const Error& e) {
      throw Error(e.kind(), "RFT iteration " + std::to_string(it) + ": " + e.what());
    }
  }
  return result;
}

void write_diagnostics_csv(const std::filesystem::path& path,
                           std::span<const GrpoDiagnostics> diagnostics,
                           std::string_view config_hash) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << "# config_hash=" << config_hash << '\n' << "step,mean_reward,mean_ratio,kl,clip_fraction\n";
  for (std::size_t i = 0; i < diagnostics.size(); ++i) {
    const auto& d = diagnostics[i];
    out << i << ',' << format_number(d.mean_reward) << ',' << format_number(d.mean_ratio) << ','
        << format_number(d.kl) << ',' << format_number(d.clip_fraction) << '\n';
  }
  if (!out) throw IoError("write failed for " + path.string());
}

}  // namespace vrft
