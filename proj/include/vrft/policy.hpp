// Copyright (c) 2026 vrft contributors
// SPDX-License-Identifier: Apache-2.0
//
// Autoregressive categorical policy over a small vocabulary. The output
// head is a frozen base matrix plus a scaled low-rank adapter; the decoding
// context concatenates the projected image features, hashed instruction
// features, the previous token's embedding and a one-hot step index.

#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "vrft/core.hpp"
#include "vrft/data.hpp"
#include "vrft/encoders.hpp"
#include "vrft/linalg.hpp"
#include "vrft/parallel.hpp"
#include "vrft/rng.hpp"

namespace vrft {

struct PolicyConfig {
  int model_dim = 16;          // d_m, width of e_hat and p_hat
  int instruction_dim = 1024;  // hashed instruction buckets
  int token_dim = 16;          // previous-token embedding width
  int max_len = 8;             // maximum output tokens, end token included
  int rank = 8;                // adapter rank r
  double alpha = 16.0;         // adapter scale numerator
  int patch = 4;               // pixel encoder patch size
  int stem = 5;                // leading characters kept per instruction word
  double base_scale = 0.1;
  double adapter_scale = 0.1;
  double connector_scale = 0.3;
  double embedding_scale = 1.0;

  void validate() const;
  std::size_t context_dim() const noexcept {
    return static_cast<std::size_t>(2 * model_dim + instruction_dim + token_dim + max_len);
  }
  double adapter_multiplier() const noexcept { return alpha / rank; }
};

/// Parameters that training may change. Gradients share this layout.
struct Trainable {
  Matrix lora_b;  // context_dim x r, starts at zero
  Matrix lora_a;  // r x V
  ConnectorParams connectors;

  static constexpr std::array<std::string_view, 6> kBlockNames{
      "lora_b", "lora_a", "disease_weight", "disease_bias", "pixel_weight", "pixel_bias"};

  std::array<std::span<double>, 6> blocks();
  std::array<std::span<const double>, 6> blocks() const;
  Trainable zeros_like() const;
  std::size_t parameter_count() const;
  void add(const Trainable& other, double scale = 1.0);

  friend bool operator==(const Trainable&, const Trainable&) = default;
};

struct PolicyParams {
  PolicyConfig config;
  Vocabulary vocab;
  std::uint64_t seed = 0;
  Matrix base;             // frozen, context_dim x V
  Matrix token_embedding;  // frozen, V x token_dim
  Trainable trainable;

  std::size_t vocab_size() const noexcept { return vocab.size(); }
  TokenId begin_token() const { return vocab.id(kBeginToken); }
  TokenId end_token() const { return vocab.id(kEndToken); }
};

/// Draws the frozen blocks, the adapter factor A and the connectors from
/// seed-derived streams; B is zero so the initial head equals the base.
PolicyParams init_policy(const PolicyConfig& config, Vocabulary vocab, std::uint64_t seed);

/// Frozen, immutable copy of a parameter state.
class PolicySnapshot {
 public:
  static PolicySnapshot take(const PolicyParams& params) {
    return PolicySnapshot(std::make_shared<const PolicyParams>(params));
  }
  const PolicyParams& params() const noexcept { return *params_; }

 private:
  explicit PolicySnapshot(std::shared_ptr<const PolicyParams> p) : params_(std::move(p)) {}
  std::shared_ptr<const PolicyParams> params_;
};

/// Sorted, de-duplicated bucket indices of the hashed word stems.
std::vector<std::uint32_t> instruction_buckets(std::string_view text, int dim, int stem);

/// Parameter-free encoding of one input, reused across decoding steps.
struct EncodedInput {
  DiseaseEmbedding disease;
  std::vector<double> pooled_pixel;
  std::vector<std::uint32_t> instruction;
};

EncodedInput encode_input(const PolicyConfig& config, const GridImage& image,
                          std::string_view instruction);
EncodedInput encode_input(const PolicyConfig& config, const TaskSample& sample);

/// Connector outputs for one input under the current parameters.
struct Projection {
  std::vector<double> disease;  // e_hat
  std::vector<double> pixel;    // mean-pooled p_hat
};

Projection project(const PolicyParams& params, const EncodedInput& input);

/// Writes h_t for step `step` with previous token `prev` into `h`.
void build_context(const PolicyParams& params, const EncodedInput& input, const Projection& proj,
                   TokenId prev, int step, std::span<double> h);

/// Logits h^T W0 + (alpha / r) (h^T B) A.
std::vector<double> head_logits(const PolicyParams& params, std::span<const double> h);
/// Softmax of the head logits.
std::vector<double> token_distribution(const PolicyParams& params, std::span<const double> h);

/// log p(token_t | h_t) for each step of `output`.
std::vector<double> step_log_probs(const PolicyParams& params, const EncodedInput& input,
                                   const TokenSequence& output);
/// Sum of the per-step log-probabilities. Throws ArgumentError on empty,
/// over-long or out-of-vocabulary output.
double log_prob(const PolicyParams& params, const EncodedInput& input, const TokenSequence& output);
double log_prob(const PolicyParams& params, const TaskSample& sample, const TokenSequence& output);

struct SampledOutput {
  TokenSequence tokens;
  std::vector<double> log_probs;  // under the sampling policy
  bool terminated = false;        // ended with the end token
};

SampledOutput sample_output(const PolicyParams& params, const EncodedInput& input, Rng& rng);
SampledOutput greedy_decode(const PolicyParams& params, const EncodedInput& input);
/// G i.i.d. ancestral samples from one stream. Throws ArgumentError if G < 2.
std::vector<SampledOutput> sample_group(const PolicyParams& params, const EncodedInput& input,
                                        int group_size, Rng& rng);

/// forward: KL(current || reference). reverse: KL(reference || current).
enum class KlDirection { forward, reverse };

KlDirection parse_kl_direction(std::string_view s);
std::string_view to_string(KlDirection d) noexcept;

/// Sum_j p_j (log p_j - log q_j) for log-probability vectors.
double categorical_kl(std::span<const double> log_p, std::span<const double> log_q);

/// Per-step exact KL between the two policies along `output`.
std::vector<double> step_kl(const PolicyParams& params, const PolicyParams& reference,
                            const EncodedInput& input, const TokenSequence& output,
                            KlDirection direction);
/// Mean over steps of step_kl.
double kl_divergence(const PolicyParams& params, const PolicySnapshot& snapshot,
                     const EncodedInput& input, const TokenSequence& output,
                     KlDirection direction = KlDirection::forward);

/// One token path contributing
///   sum_t logp_weight[t] * log p(token_t | h_t) + sum_t kl_weight[t] * KL_t
/// to an objective. Weights are held constant during differentiation.
struct PathTerm {
  const EncodedInput* input = nullptr;
  TokenSequence tokens;
  std::vector<double> logp_weight;
  std::vector<double> kl_weight;  // empty: no KL contribution
  const PolicyParams* reference = nullptr;
  KlDirection kl_direction = KlDirection::forward;
};

struct PathObjective {
  std::vector<PathTerm> terms;
};

/// Analytic gradient of the objective with respect to the trainable blocks
/// only. Each path is differentiated into its own buffer and the buffers
/// are summed in path order, so serial and parallel results are identical.
/// Throws NumericError naming the path and step on non-finite values.
Trainable grad_trainable(const PolicyParams& params, const PathObjective& objective,
                         Execution exec = Execution::parallel);

/// Value of the objective; used to cross-check the analytic gradient.
double objective_value(const PolicyParams& params, const PathObjective& objective);

}  // namespace vrft
