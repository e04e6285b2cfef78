// Copyright (c) 2026 vrft contributors
// SPDX-License-Identifier: Apache-2.0

#include "vrft/policy.hpp"

#include <algorithm>
#include <cmath>
#include <optional>

#include "vrft/error.hpp"

namespace vrft {

void PolicyConfig::validate() const {
  auto positive = [](int v, const char* name) {
    if (v < 1) throw ConfigError(std::string("policy.") + name + " must be >= 1");
  };
  positive(model_dim, "model_dim");
  positive(instruction_dim, "instruction_dim");
  positive(token_dim, "token_dim");
  positive(max_len, "max_len");
  positive(rank, "rank");
  positive(patch, "patch");
  positive(stem, "stem");
  if (!(alpha > 0.0)) throw ConfigError("policy.alpha must be > 0");
  for (double s : {base_scale, adapter_scale, connector_scale, embedding_scale})
    if (!(s >= 0.0) || !std::isfinite(s)) throw ConfigError("policy init scales must be finite and >= 0");
}

std::array<std::span<double>, 6> Trainable::blocks() {
  return {lora_b.flat(),
          lora_a.flat(),
          connectors.disease_weight.flat(),
          std::span<double>(connectors.disease_bias),
          connectors.pixel_weight.flat(),
          std::span<double>(connectors.pixel_bias)};
}

std::array<std::span<const double>, 6> Trainable::blocks() const {
  return {lora_b.flat(),
          lora_a.flat(),
          connectors.disease_weight.flat(),
          std::span<const double>(connectors.disease_bias),
          connectors.pixel_weight.flat(),
          std::span<const double>(connectors.pixel_bias)};
}

Trainable Trainable::zeros_like() const {
  Trainable z;
  z.lora_b = Matrix(lora_b.rows(), lora_b.cols());
  z.lora_a = Matrix(lora_a.rows(), lora_a.cols());
  z.connectors = ConnectorParams(connectors.model_dim(), connectors.disease_weight.cols(),
                                 connectors.pixel_weight.cols());
  return z;
}

std::size_t Trainable::parameter_count() const {
  std::size_t n = 0;
  for (auto b : blocks()) n += b.size();
  return n;
}

void Trainable::add(const Trainable& other, double scale) {
  auto dst = blocks();
  const auto src = other.blocks();
  for (std::size_t k = 0; k < dst.size(); ++k) axpy(scale, src[k], dst[k]);
}

namespace {

void fill_normal(std::span<double> v, double scale, std::uint64_t seed) {
  Rng rng(seed);
  for (auto& x : v) x = scale * rng.normal();
}

}  // namespace

PolicyParams init_policy(const PolicyConfig& config, Vocabulary vocab, std::uint64_t seed) {
  config.validate();
  if (vocab.size() < 2) throw ConfigError("vocabulary must hold at least two symbols");
  PolicyParams p;
  p.config = config;
  p.vocab = std::move(vocab);
  p.seed = seed;
  const auto d = config.context_dim();
  const auto v = p.vocab.size();
  const auto dm = static_cast<std::size_t>(config.model_dim);
  p.base = Matrix(d, v);
  p.token_embedding = Matrix(v, static_cast<std::size_t>(config.token_dim));
  p.trainable.lora_b = Matrix(d, static_cast<std::size_t>(config.rank));
  p.trainable.lora_a = Matrix(static_cast<std::size_t>(config.rank), v);
  p.trainable.connectors = ConnectorParams(dm, kDiseaseDim, kPixelChannels);
  fill_normal(p.base.flat(), config.base_scale, derive_seed(seed, "base"));
  fill_normal(p.token_embedding.flat(), config.embedding_scale, derive_seed(seed, "token_embedding"));
  fill_normal(p.trainable.lora_a.flat(), config.adapter_scale, derive_seed(seed, "lora_a"));
  fill_normal(p.trainable.connectors.disease_weight.flat(), config.connector_scale,
              derive_seed(seed, "disease_weight"));
  fill_normal(p.trainable.connectors.pixel_weight.flat(), config.connector_scale,
              derive_seed(seed, "pixel_weight"));
  // Touch the ids so a vocabulary without structural tokens fails early.
  (void)p.begin_token();
  (void)p.end_token();
  return p;
}

std::vector<std::uint32_t> instruction_buckets(std::string_view text, int dim, int stem) {
  std::vector<std::uint32_t> out;
  for (const auto& word : normalize_and_tokenize(text)) {
    const auto s = std::string_view(word).substr(0, static_cast<std::size_t>(stem));
    out.push_back(static_cast<std::uint32_t>(fnv1a64(s) % static_cast<std::uint64_t>(dim)));
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

EncodedInput encode_input(const PolicyConfig& config, const GridImage& image,
                          std::string_view instruction) {
  EncodedInput in;
  in.disease = encode_disease(image);
  in.pooled_pixel = encode_pixel(image, config.patch).pooled();
  in.instruction = instruction_buckets(instruction, config.instruction_dim, config.stem);
  return in;
}

EncodedInput encode_input(const PolicyConfig& config, const TaskSample& sample) {
  if (!sample.image) throw ArgumentError("sample has no image");
  return encode_input(config, *sample.image, sample.instruction);
}

Projection project(const PolicyParams& params, const EncodedInput& input) {
  const auto& c = params.trainable.connectors;
  Projection p;
  p.disease.resize(c.model_dim());
  if (input.disease.size() != c.disease_weight.cols())
    throw ArgumentError("disease embedding has " + std::to_string(input.disease.size()) +
                        " entries, connector expects " + std::to_string(c.disease_weight.cols()));
  mat_vec(c.disease_weight, input.disease, p.disease);
  axpy(1.0, c.disease_bias, p.disease);
  p.pixel = pooled_pixel_projection(input.pooled_pixel, c);
  return p;
}

void build_context(const PolicyParams& params, const EncodedInput& input, const Projection& proj,
                   TokenId prev, int step, std::span<double> h) {
  const auto& cfg = params.config;
  const auto dm = static_cast<std::size_t>(cfg.model_dim);
  const auto di = static_cast<std::size_t>(cfg.instruction_dim);
  const auto dt = static_cast<std::size_t>(cfg.token_dim);
  std::fill(h.begin(), h.end(), 0.0);
  std::copy(proj.disease.begin(), proj.disease.end(), h.begin());
  std::copy(proj.pixel.begin(), proj.pixel.end(), h.begin() + static_cast<long>(dm));
  for (auto b : input.instruction) h[2 * dm + b] = 1.0;
  const auto emb = params.token_embedding.row(prev);
  std::copy(emb.begin(), emb.end(), h.begin() + static_cast<long>(2 * dm + di));
  h[2 * dm + di + dt + static_cast<std::size_t>(step)] = 1.0;
}

namespace {

// z = h^T W0 + s (h^T B) A; u receives h^T B.
void head_forward(const PolicyParams& params, std::span<const double> h, std::span<double> u,
                  std::span<double> z) {
  const auto& t = params.trainable;
  vec_mat(h, params.base, z);
  vec_mat(h, t.lora_b, u);
  const double s = params.config.adapter_multiplier();
  for (std::size_t k = 0; k < u.size(); ++k) {
    const double uk = s * u[k];
    if (uk == 0.0) continue;
    axpy(uk, t.lora_a.row(k), z);
  }
}

void check_token(const PolicyParams& params, TokenId tok) {
  if (tok >= params.vocab_size())
    throw ArgumentError("token index " + std::to_string(tok) + " outside vocabulary of size " +
                        std::to_string(params.vocab_size()));
}

void check_output(const PolicyParams& params, const TokenSequence& output) {
  if (output.empty()) throw ArgumentError("output sequence is empty");
  if (output.size() > static_cast<std::size_t>(params.config.max_len))
    throw ArgumentError("output of length " + std::to_string(output.size()) +
                        " exceeds max length " + std::to_string(params.config.max_len));
  for (auto tok : output) check_token(params, tok);
}

// Reusable per-path decoding state.
class Decoder {
 public:
  Decoder(const PolicyParams& params, const EncodedInput& input)
      : params_(params),
        input_(input),
        proj_(project(params, input)),
        h_(params.config.context_dim()),
        u_(static_cast<std::size_t>(params.config.rank)),
        z_(params.vocab_size()),
        logp_(params.vocab_size()) {}

  // Log-distribution at `step` after `prev`.
  std::span<const double> step(TokenId prev, int step) {
    build_context(params_, input_, proj_, prev, step, h_);
    head_forward(params_, h_, u_, z_);
    log_softmax(z_, logp_);
    return logp_;
  }

  std::span<const double> context() const { return h_; }
  std::span<const double> adapter_in() const { return u_; }
  std::span<const double> logits() const { return z_; }
  const Projection& projection() const { return proj_; }

 private:
  const PolicyParams& params_;
  const EncodedInput& input_;
  Projection proj_;
  std::vector<double> h_, u_, z_, logp_;
};

bool all_finite(std::span<const double> v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

}  // namespace

std::vector<double> head_logits(const PolicyParams& params, std::span<const double> h) {
  if (h.size() != params.config.context_dim())
    throw ArgumentError("context has width " + std::to_string(h.size()) + ", expected " +
                        std::to_string(params.config.context_dim()));
  std::vector<double> u(static_cast<std::size_t>(params.config.rank));
  std::vector<double> z(params.vocab_size());
  head_forward(params, h, u, z);
  return z;
}

std::vector<double> token_distribution(const PolicyParams& params, std::span<const double> h) {
  const auto z = head_logits(params, h);
  std::vector<double> p(z.size());
  softmax(z, p);
  return p;
}

std::vector<double> step_log_probs(const PolicyParams& params, const EncodedInput& input,
                                   const TokenSequence& output) {
  check_output(params, output);
  Decoder dec(params, input);
  std::vector<double> out;
  out.reserve(output.size());
  TokenId prev = params.begin_token();
  for (std::size_t t = 0; t < output.size(); ++t) {
    out.push_back(dec.step(prev, static_cast<int>(t))[output[t]]);
    prev = output[t];
  }
  return out;
}

double log_prob(const PolicyParams& params, const EncodedInput& input, const TokenSequence& output) {
  double s = 0.0;
  for (double v : step_log_probs(params, input, output)) s += v;
  return s;
}

double log_prob(const PolicyParams& params, const TaskSample& sample, const TokenSequence& output) {
  return log_prob(params, encode_input(params.config, sample), output);
}

namespace {

template <class Choose>
SampledOutput decode_with(const PolicyParams& params, const EncodedInput& input, Choose&& choose) {
  Decoder dec(params, input);
  SampledOutput out;
  const TokenId end = params.end_token();
  TokenId prev = params.begin_token();
  for (int t = 0; t < params.config.max_len; ++t) {
    const auto logp = dec.step(prev, t);
    const TokenId tok = choose(logp);
    out.tokens.push_back(tok);
    out.log_probs.push_back(logp[tok]);
    prev = tok;
    if (tok == end) {
      out.terminated = true;
      break;
    }
  }
  return out;
}

}  // namespace

SampledOutput sample_output(const PolicyParams& params, const EncodedInput& input, Rng& rng) {
  return decode_with(params, input, [&](std::span<const double> logp) {
    const double u = rng.uniform();
    double cum = 0.0;
    TokenId last = 0;
    for (std::size_t j = 0; j < logp.size(); ++j) {
      const double p = std::exp(logp[j]);
      if (p <= 0.0) continue;
      last = static_cast<TokenId>(j);
      cum += p;
      if (u < cum) return last;
    }
    return last;
  });
}

SampledOutput greedy_decode(const PolicyParams& params, const EncodedInput& input) {
  return decode_with(params, input, [](std::span<const double> logp) {
    return static_cast<TokenId>(std::max_element(logp.begin(), logp.end()) - logp.begin());
  });
}

std::vector<SampledOutput> sample_group(const PolicyParams& params, const EncodedInput& input,
                                        int group_size, Rng& rng) {
  if (group_size < 2)
    throw ArgumentError("group size must be >= 2, got " + std::to_string(group_size));
  std::vector<SampledOutput> out;
  out.reserve(static_cast<std::size_t>(group_size));
  for (int i = 0; i < group_size; ++i) out.push_back(sample_output(params, input, rng));
  return out;
}

KlDirection parse_kl_direction(std::string_view s) {
  if (s == "forward") return KlDirection::forward;
  if (s == "reverse") return KlDirection::reverse;
  throw ConfigError("unknown KL direction '" + std::string(s) + "' (expected forward or reverse)");
}

std::string_view to_string(KlDirection d) noexcept {
  return d == KlDirection::forward ? "forward" : "reverse";
}

double categorical_kl(std::span<const double> log_p, std::span<const double> log_q) {
  double kl = 0.0;
  for (std::size_t j = 0; j < log_p.size(); ++j) {
    const double p = std::exp(log_p[j]);
    if (p > 0.0) kl += p * (log_p[j] - log_q[j]);
  }
  return kl;
}

std::vector<double> step_kl(const PolicyParams& params, const PolicyParams& reference,
                            const EncodedInput& input, const TokenSequence& output,
                            KlDirection direction) {
  check_output(params, output);
  if (!params.base.same_shape(reference.base))
    throw ArgumentError("reference policy has different dimensions");
  Decoder cur(params, input);
  Decoder ref(reference, input);
  std::vector<double> out;
  TokenId prev = params.begin_token();
  for (std::size_t t = 0; t < output.size(); ++t) {
    const auto lp = cur.step(prev, static_cast<int>(t));
    const auto lq = ref.step(prev, static_cast<int>(t));
    out.push_back(direction == KlDirection::forward ? categorical_kl(lp, lq)
                                                    : categorical_kl(lq, lp));
    prev = output[t];
  }
  return out;
}

double kl_divergence(const PolicyParams& params, const PolicySnapshot& snapshot,
                     const EncodedInput& input, const TokenSequence& output,
                     KlDirection direction) {
  const auto kl = step_kl(params, snapshot.params(), input, output, direction);
  double s = 0.0;
  for (double v : kl) s += v;
  return s / static_cast<double>(kl.size());
}

namespace {

void check_term(const PolicyParams& params, const PathTerm& term, std::size_t index) {
  if (!term.input) throw ArgumentError("path " + std::to_string(index) + " has no input");
  check_output(params, term.tokens);
  if (term.logp_weight.size() != term.tokens.size())
    throw ArgumentError("path " + std::to_string(index) + " has mismatched log-prob weights");
  if (!term.kl_weight.empty()) {
    if (term.kl_weight.size() != term.tokens.size())
      throw ArgumentError("path " + std::to_string(index) + " has mismatched KL weights");
    if (!term.reference)
      throw ArgumentError("path " + std::to_string(index) + " has KL weights but no reference");
  }
}

[[noreturn]] void non_finite(std::size_t path, std::size_t step, const char* what) {
  throw NumericError(std::string("non-finite ") + what + " in path " + std::to_string(path) +
                     " at step " + std::to_string(step));
}

Trainable path_gradient(const PolicyParams& params, const PathTerm& term, std::size_t index) {
  Trainable g = params.trainable.zeros_like();
  const auto& cfg = params.config;
  const auto dm = static_cast<std::size_t>(cfg.model_dim);
  const auto v = params.vocab_size();
  const auto r = static_cast<std::size_t>(cfg.rank);
  const double s = cfg.adapter_multiplier();
  const Matrix& w0 = params.base;
  const Matrix& b = params.trainable.lora_b;
  const Matrix& a = params.trainable.lora_a;

  Decoder dec(params, *term.input);
  std::optional<Decoder> ref;
  if (!term.kl_weight.empty()) ref.emplace(*term.reference, *term.input);

  std::vector<double> gz(v), p(v), av(r), d_disease(dm, 0.0), d_pixel(dm, 0.0);
  TokenId prev = params.begin_token();
  for (std::size_t t = 0; t < term.tokens.size(); ++t) {
    const auto logp = dec.step(prev, static_cast<int>(t));
    if (!all_finite(dec.logits())) non_finite(index, t, "logits");
    for (std::size_t j = 0; j < v; ++j) p[j] = std::exp(logp[j]);

    const double w = term.logp_weight[t];
    for (std::size_t j = 0; j < v; ++j) gz[j] = -w * p[j];
    gz[term.tokens[t]] += w;

    if (ref && term.kl_weight[t] != 0.0) {
      const double k = term.kl_weight[t];
      const auto logq = ref->step(prev, static_cast<int>(t));
      if (term.kl_direction == KlDirection::forward) {
        const double kl = categorical_kl(logp, logq);
        for (std::size_t j = 0; j < v; ++j) gz[j] += k * p[j] * (logp[j] - logq[j] - kl);
      } else {
        for (std::size_t j = 0; j < v; ++j) gz[j] += k * (p[j] - std::exp(logq[j]));
      }
    }
    if (!all_finite(gz)) non_finite(index, t, "logit gradient");

    const auto h = dec.context();
    add_outer(g.lora_a, s, dec.adapter_in(), gz);
    mat_vec(a, gz, av);
    add_outer(g.lora_b, s, h, av);
    for (std::size_t i = 0; i < 2 * dm; ++i) {
      const double dh = dot(w0.row(i), gz) + s * dot(b.row(i), av);
      (i < dm ? d_disease[i] : d_pixel[i - dm]) += dh;
    }
    prev = term.tokens[t];
  }
  connector_backward(term.input->disease, term.input->pooled_pixel, d_disease, d_pixel,
                     g.connectors);
  for (auto blk : g.blocks())
    if (!all_finite(blk)) non_finite(index, term.tokens.size(), "parameter gradient");
  return g;
}

}  // namespace

Trainable grad_trainable(const PolicyParams& params, const PathObjective& objective,
                         Execution exec) {
  const auto n = objective.terms.size();
  for (std::size_t i = 0; i < n; ++i) check_term(params, objective.terms[i], i);
  std::vector<Trainable> parts(n);
  for_each_index(n, exec, [&](std::size_t i) {
    parts[i] = path_gradient(params, objective.terms[i], i);
  });
  Trainable total = params.trainable.zeros_like();
  for (const auto& part : parts) total.add(part);
  return total;
}

double objective_value(const PolicyParams& params, const PathObjective& objective) {
  double total = 0.0;
  for (std::size_t i = 0; i < objective.terms.size(); ++i) {
    const auto& term = objective.terms[i];
    check_term(params, term, i);
    const auto lp = step_log_probs(params, *term.input, term.tokens);
    for (std::size_t t = 0; t < lp.size(); ++t) total += term.logp_weight[t] * lp[t];
    if (!term.kl_weight.empty()) {
      const auto kl = step_kl(params, *term.reference, *term.input, term.tokens, term.kl_direction);
      for (std::size_t t = 0; t < kl.size(); ++t) total += term.kl_weight[t] * kl[t];
    }
  }
  return total;
}

}  // namespace vrft
