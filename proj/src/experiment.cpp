// Copyright (c) 2026 vrft contributors
// SPDX-License-Identifier: Apache-2.0

#include "vrft/experiment.hpp"

#include <algorithm>
#include <cstdio>
#include <map>
#include <fstream>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "vrft/checkpoint.hpp"
#include "vrft/error.hpp"

namespace vrft {

using nlohmann::json;

ExperimentConfig::ExperimentConfig() {
  data.incomplete_box_rate = 0.2;
  sft.optimizer = {OptimizerKind::adam, 0.01, 5.0};
  sft.batch_size = 32;
  sft.steps = 4000;
  sft.instruction_dropout = 0.5;
  grpo.kl_reference = KlReference::initial;
  grpo.kl_weight = 0.1;
  grpo.optimizer = {OptimizerKind::sgd, 0.01, 5.0};
  grpo.iterations = 40;
  grpo.batch_size = 16;
}

std::uint64_t ExperimentConfig::train_data_seed() const { return derive_seed(seed, "data.train"); }
std::uint64_t ExperimentConfig::test_data_seed() const { return derive_seed(seed, "data.test"); }
std::uint64_t ExperimentConfig::policy_seed() const { return derive_seed(seed, "policy"); }

std::filesystem::path ExperimentConfig::train_file() const {
  return train_path.empty() ? out_path() / "train.jsonl" : std::filesystem::path(train_path);
}

std::filesystem::path ExperimentConfig::test_file() const {
  return test_path.empty() ? out_path() / "test.jsonl" : std::filesystem::path(test_path);
}

namespace {

json optimizer_tree(const OptimizerConfig& o) {
  return {{"kind", std::string(to_string(o.kind))},
          {"learning_rate", o.learning_rate},
          {"clip_norm", o.clip_norm},
          {"beta1", o.beta1},
          {"beta2", o.beta2},
          {"epsilon", o.epsilon}};
}

json config_tree(const ExperimentConfig& c) {
  json j;
  j["seed"] = c.seed;
  j["output_dir"] = c.output_dir;
  j["parallel"] = c.parallel;
  j["data"] = {{"height", c.data.height},
               {"width", c.data.width},
               {"classes", c.data.classes},
               {"noise_level", c.data.noise_level},
               {"min_shape", c.data.min_shape},
               {"max_shape", c.data.max_shape},
               {"incomplete_box_rate", c.data.incomplete_box_rate},
               {"modality", c.data.modality},
               {"train_images", c.train_images},
               {"test_images", c.test_images},
               {"train_path", c.train_path},
               {"test_path", c.test_path}};
  const auto& p = c.policy;
  j["policy"] = {{"model_dim", p.model_dim},
                 {"instruction_dim", p.instruction_dim},
                 {"token_dim", p.token_dim},
                 {"max_len", p.max_len},
                 {"rank", p.rank},
                 {"alpha", p.alpha},
                 {"patch", p.patch},
                 {"stem", p.stem},
                 {"base_scale", p.base_scale},
                 {"adapter_scale", p.adapter_scale},
                 {"connector_scale", p.connector_scale},
                 {"embedding_scale", p.embedding_scale}};
  j["sft"] = {{"optimizer", optimizer_tree(c.sft.optimizer)},
              {"batch_size", c.sft.batch_size},
              {"steps", c.sft.steps},
              {"instruction_dropout", c.sft.instruction_dropout}};
  const auto& g = c.grpo;
  j["grpo"] = {{"group_size", g.group_size},
               {"clip_epsilon", g.clip_epsilon},
               {"kl_weight", g.kl_weight},
               {"std_epsilon", g.std_epsilon},
               {"kl_direction", std::string(to_string(g.kl_direction))},
               {"kl_reference", std::string(to_string(g.kl_reference))},
               {"optimizer", optimizer_tree(g.optimizer)},
               {"iterations", g.iterations},
               {"batch_size", g.batch_size},
               {"rft_fraction", g.rft_fraction},
               {"data_fraction", g.data_fraction}};
  j["reward"] = {{"iou_low_threshold", c.reward.iou_low_threshold},
                 {"diagnosis_prefix", c.reward.diagnosis_prefix}};
  j["eval"] = {{"thresholds", c.eval.thresholds},
               {"decoding", std::string(to_string(c.eval.decoding))},
               {"checkpoint", c.eval_checkpoint}};
  j["sweep"] = {{"fractions", c.sweep_fractions}};
  return j;
}

bool is_integer(const json& v) { return v.is_number_integer() || v.is_number_unsigned(); }

// Overlays `user` onto `base`, rejecting unknown fields and type changes.
void merge(json& base, const json& user, const std::string& path) {
  if (!user.is_object()) throw ConfigError("field '" + (path.empty() ? "<root>" : path) + "' must be an object");
  for (auto it = user.begin(); it != user.end(); ++it) {
    const std::string p = path.empty() ? it.key() : path + "." + it.key();
    if (!base.contains(it.key())) throw ConfigError("unknown field '" + p + "'");
    json& slot = base[it.key()];
    const json& v = it.value();
    if (slot.is_object()) {
      merge(slot, v, p);
      continue;
    }
    bool ok = false;
    if (is_integer(slot)) ok = is_integer(v);
    else if (slot.is_number_float()) ok = v.is_number();
    else if (slot.is_string()) ok = v.is_string();
    else if (slot.is_boolean()) ok = v.is_boolean();
    else if (slot.is_array()) ok = v.is_array();
    if (!ok) {
      const char* want = is_integer(slot)          ? "an integer"
                         : slot.is_number_float() ? "a number"
                         : slot.is_string()       ? "a string"
                         : slot.is_boolean()      ? "a boolean"
                                                  : "an array";
      throw ConfigError("field '" + p + "' must be " + want);
    }
    if (slot.is_array())
      for (const auto& e : v)
        if (!e.is_number()) throw ConfigError("field '" + p + "' must hold numbers");
    slot = v;
  }
}

template <class T>
T read(const json& j, const char* key, const std::string& path) {
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError("field '" + (path.empty() ? std::string(key) : path + "." + key) +
                      "' has an invalid value");
  }
}

OptimizerConfig read_optimizer(const json& j, const std::string& path) {
  OptimizerConfig o;
  o.kind = parse_optimizer(read<std::string>(j, "kind", path));
  o.learning_rate = read<double>(j, "learning_rate", path);
  o.clip_norm = read<double>(j, "clip_norm", path);
  o.beta1 = read<double>(j, "beta1", path);
  o.beta2 = read<double>(j, "beta2", path);
  o.epsilon = read<double>(j, "epsilon", path);
  return o;
}

ExperimentConfig from_tree(const json& j) {
  ExperimentConfig c;
  c.seed = read<std::uint64_t>(j, "seed", "");
  c.output_dir = read<std::string>(j, "output_dir", "");
  c.parallel = read<bool>(j, "parallel", "");
  const auto& d = j.at("data");
  c.data.height = read<int>(d, "height", "data");
  c.data.width = read<int>(d, "width", "data");
  c.data.classes = read<int>(d, "classes", "data");
  c.data.noise_level = read<double>(d, "noise_level", "data");
  c.data.min_shape = read<int>(d, "min_shape", "data");
  c.data.max_shape = read<int>(d, "max_shape", "data");
  c.data.incomplete_box_rate = read<double>(d, "incomplete_box_rate", "data");
  c.data.modality = read<std::string>(d, "modality", "data");
  c.train_images = read<int>(d, "train_images", "data");
  c.test_images = read<int>(d, "test_images", "data");
  c.train_path = read<std::string>(d, "train_path", "data");
  c.test_path = read<std::string>(d, "test_path", "data");
  const auto& p = j.at("policy");
  c.policy.model_dim = read<int>(p, "model_dim", "policy");
  c.policy.instruction_dim = read<int>(p, "instruction_dim", "policy");
  c.policy.token_dim = read<int>(p, "token_dim", "policy");
  c.policy.max_len = read<int>(p, "max_len", "policy");
  c.policy.rank = read<int>(p, "rank", "policy");
  c.policy.alpha = read<double>(p, "alpha", "policy");
  c.policy.patch = read<int>(p, "patch", "policy");
  c.policy.stem = read<int>(p, "stem", "policy");
  c.policy.base_scale = read<double>(p, "base_scale", "policy");
  c.policy.adapter_scale = read<double>(p, "adapter_scale", "policy");
  c.policy.connector_scale = read<double>(p, "connector_scale", "policy");
  c.policy.embedding_scale = read<double>(p, "embedding_scale", "policy");
  const auto& s = j.at("sft");
  c.sft.optimizer = read_optimizer(s.at("optimizer"), "sft.optimizer");
  c.sft.batch_size = read<int>(s, "batch_size", "sft");
  c.sft.steps = read<int>(s, "steps", "sft");
  c.sft.instruction_dropout = read<double>(s, "instruction_dropout", "sft");
  const auto& g = j.at("grpo");
  c.grpo.group_size = read<int>(g, "group_size", "grpo");
  c.grpo.clip_epsilon = read<double>(g, "clip_epsilon", "grpo");
  c.grpo.kl_weight = read<double>(g, "kl_weight", "grpo");
  c.grpo.std_epsilon = read<double>(g, "std_epsilon", "grpo");
  c.grpo.kl_direction = parse_kl_direction(read<std::string>(g, "kl_direction", "grpo"));
  c.grpo.kl_reference = parse_kl_reference(read<std::string>(g, "kl_reference", "grpo"));
  c.grpo.optimizer = read_optimizer(g.at("optimizer"), "grpo.optimizer");
  c.grpo.iterations = read<int>(g, "iterations", "grpo");
  c.grpo.batch_size = read<int>(g, "batch_size", "grpo");
  c.grpo.rft_fraction = read<double>(g, "rft_fraction", "grpo");
  c.grpo.data_fraction = read<double>(g, "data_fraction", "grpo");
  const auto& r = j.at("reward");
  c.reward.iou_low_threshold = read<double>(r, "iou_low_threshold", "reward");
  c.reward.diagnosis_prefix = read<std::string>(r, "diagnosis_prefix", "reward");
  const auto& e = j.at("eval");
  c.eval.thresholds = read<std::vector<double>>(e, "thresholds", "eval");
  c.eval.decoding = parse_decoding(read<std::string>(e, "decoding", "eval"));
  c.eval_checkpoint = read<std::string>(e, "checkpoint", "eval");
  c.sweep_fractions = read<std::vector<double>>(j.at("sweep"), "fractions", "sweep");
  return c;
}

// Sub-seeds and mirrored fields that follow from the rest of the config.
ExperimentConfig resolved(ExperimentConfig c) {
  c.sft.seed = derive_seed(c.seed, "sft");
  c.grpo.seed = derive_seed(c.seed, "grpo");
  c.eval.seed = derive_seed(c.seed, "eval");
  c.eval.diagnosis_prefix = c.reward.diagnosis_prefix;
  return c;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

}  // namespace

void ExperimentConfig::validate() const {
  if (output_dir.empty()) throw ConfigError("field 'output_dir' must be non-empty");
  GeneratorConfig g = data;
  g.n = 1;
  g.validate();
  if (train_images < 1) throw ConfigError("field 'data.train_images' must be >= 1");
  if (test_images < 1) throw ConfigError("field 'data.test_images' must be >= 1");
  policy.validate();
  if (data.height % policy.patch != 0 || data.width % policy.patch != 0)
    throw ConfigError("field 'policy.patch' must divide data.height and data.width");
  if (policy.max_len < 5) throw ConfigError("field 'policy.max_len' must be >= 5 to hold a box and end token");
  sft.validate();
  grpo.validate();
  reward.validate();
  eval.validate();
  if (eval_checkpoint != "sft" && eval_checkpoint != "rft")
    throw ConfigError("field 'eval.checkpoint' must be \"sft\" or \"rft\"");
  if (sweep_fractions.empty()) throw ConfigError("field 'sweep.fractions' must be non-empty");
  for (double f : sweep_fractions)
    if (!(f > 0.0 && f <= 1.0)) throw ConfigError("field 'sweep.fractions' entries must lie in (0, 1]");
}

std::string ExperimentConfig::to_json() const {
  const auto r = resolved(*this);
  json j = config_tree(r);
  // The output location does not change any result.
  j.erase("output_dir");
  j["derived_seeds"] = {{"data.train", r.train_data_seed()},
                        {"data.test", r.test_data_seed()},
                        {"policy", r.policy_seed()},
                        {"sft", r.sft.seed},
                        {"grpo", r.grpo.seed},
                        {"eval", r.eval.seed}};
  return j.dump();
}

std::string ExperimentConfig::hash() const { return hex64(fnv1a64(to_json())); }

ExperimentConfig load_config(const std::filesystem::path* file,
                             const std::vector<std::string>& overrides) {
  json tree = config_tree(ExperimentConfig{});
  if (file) {
    std::ifstream in(*file, std::ios::binary);
    if (!in) throw IoError("cannot open config file " + file->string());
    json user;
    try {
      user = json::parse(in);
    } catch (const json::exception& e) {
      throw ConfigError("config file " + file->string() + " is not valid JSON: " + e.what());
    }
    // Echoed configurations carry their sub-seeds, which are always re-derived.
    if (user.is_object()) user.erase("derived_seeds");
    merge(tree, user, "");
  }
  for (const auto& ov : overrides) {
    const auto eq = ov.find('=');
    if (eq == std::string::npos || eq == 0)
      throw ConfigError("override '" + ov + "' must have the form key=value");
    const std::string key = ov.substr(0, eq);
    const std::string text = ov.substr(eq + 1);
    json value;
    try {
      value = json::parse(text);
    } catch (const json::exception&) {
      value = text;
    }
    json patch = value;
    std::vector<std::string> parts;
    std::stringstream ss(key);
    for (std::string part; std::getline(ss, part, '.');) parts.push_back(part);
    for (auto it = parts.rbegin(); it != parts.rend(); ++it) patch = json{{*it, patch}};
    merge(tree, patch, "");
  }
  auto cfg = resolved(from_tree(tree));
  cfg.validate();
  return cfg;
}

const std::vector<std::string>& command_names() {
  static const std::vector<std::string> names{"gen-data", "train-sft", "train-rft",
                                              "eval",     "sweep",     "report"};
  return names;
}

std::string usage_text() {
  return "usage: vrft <command> [--config PATH] [--set key=value]... [--out DIR] [--seed N]\n"
         "commands:\n"
         "  gen-data   generate train/test planted-shape splits as JSONL\n"
         "  train-sft  supervised fine-tuning of the adapter and connectors\n"
         "  train-rft  group-relative reinforcement fine-tuning from the SFT checkpoint\n"
         "  eval       evaluate a checkpoint on the test split\n"
         "  sweep      data-efficiency sweep and prompt-robustness evaluation\n"
         "  report     summarize the reports found in the output directory\n";
}

namespace {

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("write failed for " + path.string());
}

json read_json(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

struct Context {
  const ExperimentConfig& cfg;
  std::string hash;
  std::filesystem::path out;
  std::ostream& log;
  std::ostream& err;
};

DatasetSplit load_split(const Context& ctx, const std::filesystem::path& path) {
  std::vector<std::string> warnings;
  auto split = load_jsonl(path, std::nullopt, &warnings);
  for (const auto& w : warnings) ctx.err << json{{"warning", w}}.dump() << '\n';
  if (split.empty()) throw ArgumentError("empty dataset");
  for (const auto& s : split.samples)
    if (s.image->height != ctx.cfg.data.height || s.image->width != ctx.cfg.data.width)
      throw ConfigError("field 'data.height'/'data.width' disagrees with images in " + path.string());
  return split;
}

void write_meta(const Context& ctx, const std::filesystem::path& jsonl, const DatasetSplit& split) {
  auto meta = jsonl;
  meta.replace_extension(".meta.json");
  json j{{"config_hash", ctx.hash},
         {"source", split.provenance.source},
         {"seed", split.provenance.seed},
         {"generator", json::parse(split.provenance.config)},
         {"samples", split.size()}};
  write_text(meta, j.dump(2) + "\n");
}

void cmd_gen_data(const Context& ctx) {
  const auto& cfg = ctx.cfg;
  GeneratorConfig train = cfg.data;
  train.n = cfg.train_images;
  GeneratorConfig test = cfg.data;
  test.n = cfg.test_images;
  test.incomplete_box_rate = 0.0;
  const auto tr = generate_planted_shapes(train, cfg.train_data_seed());
  const auto te = generate_planted_shapes(test, cfg.test_data_seed());
  save_jsonl(tr, cfg.train_file());
  save_jsonl(te, cfg.test_file());
  write_meta(ctx, cfg.train_file(), tr);
  write_meta(ctx, cfg.test_file(), te);
  ctx.log << "wrote " << tr.size() << " samples to " << cfg.train_file().string() << "\n"
          << "wrote " << te.size() << " samples to " << cfg.test_file().string() << "\n";
}

PolicyParams load_stage(const Context& ctx, const std::string& name) {
  return load_checkpoint(ctx.out / name, &ctx.cfg.policy);
}

void cmd_train_sft(const Context& ctx) {
  const auto& cfg = ctx.cfg;
  const auto train = load_split(ctx, cfg.train_file());
  const auto classes = cfg.classes();
  auto init = init_policy(cfg.policy, build_vocabulary(cfg.data.width, cfg.data.height, classes),
                          cfg.policy_seed());
  const auto result = train_sft(std::move(init), train, cfg.sft, classes, cfg.execution());
  save_checkpoint(result.params, ctx.out / "sft", ctx.hash);
  write_loss_csv(ctx.out / "sft_loss.csv", result.losses, ctx.hash);
  ctx.log << "sft steps=" << result.losses.size();
  if (!result.losses.empty())
    ctx.log << " first_loss=" << format_number(result.losses.front())
            << " final_loss=" << format_number(result.losses.back());
  ctx.log << "\n";
}

void cmd_train_rft(const Context& ctx) {
  const auto& cfg = ctx.cfg;
  const auto train = load_split(ctx, cfg.train_file());
  auto sft = load_stage(ctx, "sft");
  const auto result = train_rft(std::move(sft), train, cfg.grpo, cfg.classes(), cfg.reward,
                                cfg.execution());
  save_checkpoint(result.params, ctx.out / "rft", ctx.hash);
  write_diagnostics_csv(ctx.out / "rft_diagnostics.csv", result.diagnostics, ctx.hash);
  save_jsonl(result.subset, ctx.out / "rft_subset.jsonl");
  ctx.log << "rft iterations=" << result.diagnostics.size() << " subset=" << result.subset.size()
          << "\n";
}

EvalReport stamped(EvalReport r, const Context& ctx) {
  r.config_hash = ctx.hash;
  r.config_echo = ctx.cfg.to_json();
  return r;
}

void cmd_eval(const Context& ctx) {
  const auto& cfg = ctx.cfg;
  const auto test = load_split(ctx, cfg.test_file());
  const auto params = load_stage(ctx, cfg.eval_checkpoint);
  const auto report = stamped(evaluate(params, test, cfg.classes(), cfg.eval, cfg.execution()), ctx);
  const auto stem = ctx.out / ("eval_report_" + cfg.eval_checkpoint);
  write_text(stem.string() + ".json", report.to_json() + "\n");
  write_text(stem.string() + ".csv", report.csv_header() + "\n" + report.csv_row() + "\n");
  for (const auto& [task, m] : report.metrics)
    for (const auto& [name, v] : m) ctx.log << task << "." << name << "=" << format_number(v) << "\n";
}

void cmd_sweep(const Context& ctx) {
  const auto& cfg = ctx.cfg;
  const auto train = load_split(ctx, cfg.train_file());
  const auto test = load_split(ctx, cfg.test_file());
  const auto sft = load_stage(ctx, "sft");
  const auto classes = cfg.classes();
  const auto rows = data_efficiency_sweep(sft, train, test, cfg.sweep_fractions, cfg.grpo, classes,
                                          cfg.reward, cfg.eval, cfg.execution());
  std::string csv = "# config_hash=" + ctx.hash + "\n";
  json sweep = json::array();
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto r = stamped(rows[i].report, ctx);
    if (i == 0) csv += "fraction,subset_size," + r.csv_header() + "\n";
    csv += format_number(rows[i].fraction) + "," + std::to_string(rows[i].subset_size) + "," +
           r.csv_row() + "\n";
    sweep.push_back({{"fraction", rows[i].fraction},
                     {"subset_size", rows[i].subset_size},
                     {"metrics", r.metrics},
                     {"counts", r.counts}});
    ctx.log << "fraction=" << format_number(rows[i].fraction)
            << " subset=" << rows[i].subset_size;
    for (const auto& [task, m] : r.metrics)
      for (const auto& [name, v] : m) ctx.log << " " << task << "." << name << "=" << format_number(v);
    ctx.log << "\n";
  }
  write_text(ctx.out / "sweep.csv", csv);
  write_text(ctx.out / "sweep.json",
             json{{"config_hash", ctx.hash}, {"rows", sweep}}.dump(2) + "\n");

  const auto model = load_stage(ctx, cfg.eval_checkpoint);
  const auto rob = prompt_robustness(model, test, robustness_templates(), cfg.data.modality, classes,
                                     cfg.eval, cfg.execution());
  std::string rcsv = "# config_hash=" + ctx.hash + "\ntemplate_index,accuracy,macro_f1,template\n";
  json per = json::array();
  for (std::size_t i = 0; i < rob.templates.size(); ++i) {
    const double f1 = rob.reports[i].metric("diagnosis", "macro_f1");
    rcsv += std::to_string(i) + "," + format_number(rob.accuracies[i]) + "," + format_number(f1) +
            ",\"" + rob.templates[i] + "\"\n";
    per.push_back({{"template", rob.templates[i]}, {"accuracy", rob.accuracies[i]}, {"macro_f1", f1}});
  }
  write_text(ctx.out / "robustness.csv", rcsv);
  write_text(ctx.out / "robustness.json",
             json{{"config_hash", ctx.hash},
                  {"checkpoint", cfg.eval_checkpoint},
                  {"max_delta", rob.max_delta},
                  {"templates", per}}
                     .dump(2) +
                 "\n");
  ctx.log << "prompt robustness max_delta=" << format_number(rob.max_delta) << "\n";
}

void cmd_report(const Context& ctx) {
  std::ostringstream md;
  json summary{{"config_hash", ctx.hash}};
  bool any = false;
  md << "# Experiment summary\n\nconfig hash: `" << ctx.hash << "`\n";
  std::map<std::string, json> evals;
  for (const char* stage : {"sft", "rft"}) {
    const auto path = ctx.out / (std::string("eval_report_") + stage + ".json");
    if (std::filesystem::exists(path)) evals[stage] = read_json(path);
  }
  if (!evals.empty()) {
    any = true;
    md << "\n## Held-out metrics\n\n| metric |";
    for (const auto& [stage, j] : evals) md << " " << stage << " |";
    md << "\n|---|";
    for (std::size_t i = 0; i < evals.size(); ++i) md << "---|";
    md << "\n";
    const auto& first = evals.begin()->second.at("metrics");
    for (const auto& [task, m] : first.items())
      for (const auto& [name, v] : m.items()) {
        md << "| " << task << "." << name << " |";
        for (const auto& [stage, j] : evals) {
          const auto& mm = j.at("metrics");
          if (mm.contains(task) && mm.at(task).contains(name))
            md << " " << format_number(mm.at(task).at(name).get<double>()) << " |";
          else
            md << " - |";
        }
        md << "\n";
      }
    for (const auto& [stage, j] : evals) summary["eval"][stage] = j.at("metrics");
  }
  const auto sweep_path = ctx.out / "sweep.json";
  if (std::filesystem::exists(sweep_path)) {
    any = true;
    const auto sweep = read_json(sweep_path);
    md << "\n## Data-efficiency sweep\n\n| fraction | subset | diagnosis.accuracy | "
          "diagnosis.macro_f1 | grounding.acc@0.5 | grounding.miou |\n|---|---|---|---|---|---|\n";
    auto get = [](const json& m, const char* t, const char* n) {
      return m.contains(t) && m.at(t).contains(n) ? format_number(m.at(t).at(n).get<double>())
                                                  : std::string("-");
    };
    for (const auto& row : sweep.at("rows")) {
      const auto& m = row.at("metrics");
      md << "| " << format_number(row.at("fraction").get<double>()) << " | "
         << row.at("subset_size").get<std::size_t>() << " | " << get(m, "diagnosis", "accuracy")
         << " | " << get(m, "diagnosis", "macro_f1") << " | " << get(m, "grounding", "acc@0.5")
         << " | " << get(m, "grounding", "miou") << " |\n";
    }
    summary["sweep"] = sweep.at("rows");
  }
  const auto rob_path = ctx.out / "robustness.json";
  if (std::filesystem::exists(rob_path)) {
    any = true;
    const auto rob = read_json(rob_path);
    md << "\n## Prompt robustness\n\nmax pairwise accuracy delta: "
       << format_number(rob.at("max_delta").get<double>()) << "\n";
    summary["robustness_max_delta"] = rob.at("max_delta");
  }
  if (!any) throw IoError("nothing to report in " + ctx.out.string());
  write_text(ctx.out / "summary.md", md.str());
  write_text(ctx.out / "summary.json", summary.dump(2) + "\n");
  ctx.log << md.str();
}

}  // namespace

int run_command(std::string_view command, const ExperimentConfig& config, std::ostream& out,
                std::ostream& err) {
  const auto& names = command_names();
  if (std::find(names.begin(), names.end(), command) == names.end()) {
    err << "unknown command '" << command << "'\n" << usage_text();
    return 2;
  }
  try {
    config.validate();
    const auto cfg = resolved(config);
    Context ctx{cfg, cfg.hash(), cfg.out_path(), out, err};
    std::filesystem::create_directories(ctx.out);
    write_text(ctx.out / (std::string(command) + ".config.json"),
               json{{"command", std::string(command)}, {"config_hash", ctx.hash}, {"config", json::parse(cfg.to_json())}}
                       .dump(2) +
                   "\n");
    if (command == "gen-data") cmd_gen_data(ctx);
    else if (command == "train-sft") cmd_train_sft(ctx);
    else if (command == "train-rft") cmd_train_rft(ctx);
    else if (command == "eval") cmd_eval(ctx);
    else if (command == "sweep") cmd_sweep(ctx);
    else cmd_report(ctx);
    return 0;
  } catch (const Error& e) {
    err << json{{"error", e.kind()}, {"command", std::string(command)}, {"message", e.what()}}.dump() << '\n';
  } catch (const std::exception& e) {
    err << json{{"error", "internal"}, {"command", std::string(command)}, {"message", e.what()}}.dump() << '\n';
  }
  return 1;
}

}  // namespace vrft
