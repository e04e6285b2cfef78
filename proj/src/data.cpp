// Copyright (c) 2026 vrft contributors
// SPDX-License-Identifier: Apache-2.0

#include "vrft/data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "vrft/error.hpp"
#include "vrft/rng.hpp"

namespace vrft {

using nlohmann::json;

void GridImage::validate() const {
  if (height < 8 || width < 8)
    throw SchemaError("image must be at least 8x8, got " + std::to_string(height) + "x" +
                      std::to_string(width));
  if (pixels.size() != static_cast<std::size_t>(height) * width)
    throw SchemaError("image data has " + std::to_string(pixels.size()) + " values, expected " +
                      std::to_string(height * width));
  for (double v : pixels)
    if (!std::isfinite(v) || v < 0.0 || v > 1.0)
      throw SchemaError("image intensity outside [0,1]");
}

std::string_view to_string(Task t) noexcept {
  switch (t) {
    case Task::diagnosis: return "diagnosis";
    case Task::grounding: return "grounding";
    case Task::vqa: return "vqa";
  }
  return "?";
}

std::optional<Task> parse_task(std::string_view s) noexcept {
  if (s == "diagnosis") return Task::diagnosis;
  if (s == "grounding") return Task::grounding;
  if (s == "vqa") return Task::vqa;
  return std::nullopt;
}

std::vector<std::string> class_names(int count) {
  static const std::vector<std::string> names{"square", "cross",    "stripe",  "frame",
                                              "column", "diagonal", "saltire", "corner"};
  std::vector<std::string> out;
  for (int k = 0; k < count; ++k)
    out.push_back(k < static_cast<int>(names.size()) ? names[k] : "class" + std::to_string(k));
  return out;
}

std::string fill_modality(std::string_view templ, std::string_view modality) {
  const auto pos = templ.find(kModalityPlaceholder);
  if (pos == std::string_view::npos)
    throw ArgumentError("template lacks the {modality} placeholder: '" + std::string(templ) + "'");
  std::string out(templ);
  std::size_t at = 0;
  while ((at = out.find(kModalityPlaceholder, at)) != std::string::npos) {
    out.replace(at, kModalityPlaceholder.size(), modality);
    at += modality.size();
  }
  return out;
}

const std::vector<std::string>& diagnosis_instructions() {
  static const std::vector<std::string> v{
      "Analyze the given {modality} image for diagnosis.",
      "What is the diagnosis for this {modality} image?",
      "Provide the diagnosis shown in the {modality} image.",
      "State the most likely diagnosis of this {modality} image.",
      "Report its diagnosis for this {modality} image.",
      "Give a diagnosis for the {modality} image.",
  };
  return v;
}

const std::vector<std::string>& grounding_instructions() {
  static const std::vector<std::string> v{
      "Locate the finding in the {modality} image and report its bounding box.",
      "Where is the lesion in this {modality} image? Give the box.",
      "Report the location of the finding in the given {modality} image.",
      "Provide the bounding box of the abnormal region in this {modality} image.",
  };
  return v;
}

namespace {

struct VqaKind {
  std::string_view question;
  enum { shape, upper, where } kind;
};

const std::vector<VqaKind>& vqa_kinds() {
  static const std::vector<VqaKind> v{
      {"What shape is shown in the {modality} image?", VqaKind::shape},
      {"Is the finding in the upper half of the {modality} image?", VqaKind::upper},
      {"Which region of the {modality} image contains the finding?", VqaKind::where},
  };
  return v;
}

// Cells of one planted shape inside its w x h box, plus the box extent.
struct ShapeStencil {
  int w = 0;
  int h = 0;
  std::vector<std::pair<int, int>> cells;  // (row, col) relative to the box
};

ShapeStencil make_stencil(int cls, int s) {
  ShapeStencil st;
  auto put = [&](int r, int c) { st.cells.emplace_back(r, c); };
  switch (cls % 8) {
    case 0:  // square
      st.w = st.h = s;
      for (int r = 0; r < s; ++r)
        for (int c = 0; c < s; ++c) put(r, c);
      break;
    case 1: {  // cross
      st.w = st.h = s;
      const int a = (s - 1) / 2, b = s / 2;
      for (int r = 0; r < s; ++r)
        for (int c = 0; c < s; ++c)
          if (r == a || r == b || c == a || c == b) put(r, c);
      break;
    }
    case 2:  // horizontal stripe
      st.w = s + 2;
      st.h = 2;
      for (int r = 0; r < 2; ++r)
        for (int c = 0; c < st.w; ++c) put(r, c);
      break;
    case 3:  // frame
      st.w = st.h = s;
      for (int r = 0; r < s; ++r)
        for (int c = 0; c < s; ++c)
          if (r == 0 || c == 0 || r == s - 1 || c == s - 1) put(r, c);
      break;
    case 4:  // column
      st.w = 2;
      st.h = s + 2;
      for (int r = 0; r < st.h; ++r)
        for (int c = 0; c < 2; ++c) put(r, c);
      break;
    case 5:  // diagonal
      st.w = st.h = s;
      for (int r = 0; r < s; ++r) put(r, r);
      break;
    case 6:  // saltire
      st.w = st.h = s;
      for (int r = 0; r < s; ++r) {
        put(r, r);
        if (s - 1 - r != r) put(r, s - 1 - r);
      }
      break;
    default:  // corner
      st.w = st.h = s;
      for (int r = 0; r < s; ++r) put(r, 0);
      for (int c = 1; c < s; ++c) put(s - 1, c);
      break;
  }
  return st;
}

}  // namespace

void GeneratorConfig::validate() const {
  if (height < 8 || width < 8) throw ConfigError("data.height/data.width must be >= 8");
  if (classes < 2 || classes > 8) throw ConfigError("data.classes must lie in 2..8");
  if (n < 1) throw ConfigError("data.n must be >= 1");
  if (!(noise_level >= 0.0 && noise_level < 0.5))
    throw ConfigError("data.noise_level must lie in [0, 0.5)");
  if (min_shape < 3 || max_shape < min_shape)
    throw ConfigError("data.min_shape must be >= 3 and <= data.max_shape");
  // Stripes and columns extend two cells beyond the nominal size.
  if (max_shape + 2 > std::min(width, height))
    throw ConfigError("shape of size " + std::to_string(max_shape + 2) +
                      " does not fit a " + std::to_string(height) + "x" +
                      std::to_string(width) + " grid");
  if (!(incomplete_box_rate >= 0.0 && incomplete_box_rate <= 1.0))
    throw ConfigError("data.incomplete_box_rate must lie in [0, 1]");
  if (modality.empty()) throw ConfigError("data.modality must be non-empty");
}

std::string GeneratorConfig::to_json() const {
  json j{{"height", height},         {"width", width},
         {"classes", classes},       {"n", n},
         {"noise_level", noise_level}, {"min_shape", min_shape},
         {"max_shape", max_shape},   {"incomplete_box_rate", incomplete_box_rate},
         {"modality", modality}};
  return j.dump();
}

DatasetSplit generate_planted_shapes(const GeneratorConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  Rng rng(seed);
  const auto names = class_names(cfg.classes);
  const auto& diag = diagnosis_instructions();
  const auto& ground = grounding_instructions();
  const auto& vqa = vqa_kinds();

  DatasetSplit split;
  split.provenance = {"generator", seed, cfg.to_json()};
  split.samples.reserve(static_cast<std::size_t>(cfg.n) * 3);

  for (int i = 0; i < cfg.n; ++i) {
    const int cls = static_cast<int>(rng.below(static_cast<std::uint64_t>(cfg.classes)));
    const int size = rng.between(cfg.min_shape, cfg.max_shape);
    const auto st = make_stencil(cls, size);
    const int x = rng.between(0, cfg.width - st.w);
    const int y = rng.between(0, cfg.height - st.h);

    auto img = std::make_shared<GridImage>(cfg.height, cfg.width);
    for (auto& v : img->pixels) v = rng.uniform() * cfg.noise_level;
    for (auto [r, c] : st.cells) img->at(y + r, x + c) = 1.0 - rng.uniform() * cfg.noise_level;
    std::shared_ptr<const GridImage> shared = std::move(img);

    TaskSample d;
    d.task = Task::diagnosis;
    d.image = shared;
    d.instruction = fill_modality(diag[rng.below(diag.size())], cfg.modality);
    d.label = cls;

    TaskSample g;
    g.task = Task::grounding;
    g.image = shared;
    g.instruction = fill_modality(ground[rng.below(ground.size())], cfg.modality);
    g.box = BoundingBox{x, y, st.w, st.h};
    if (rng.uniform() < cfg.incomplete_box_rate) {
      g.response = "x" + std::to_string(x) + " y" + std::to_string(y);
      g.reliable = false;
    }

    TaskSample q;
    q.task = Task::vqa;
    q.image = shared;
    const auto& kind = vqa[rng.below(vqa.size())];
    q.instruction = fill_modality(kind.question, cfg.modality);
    const bool upper = 2 * y + st.h < cfg.height;
    const bool left = 2 * x + st.w < cfg.width;
    switch (kind.kind) {
      case VqaKind::shape:
        q.answer = names[cls];
        q.options = names;
        break;
      case VqaKind::upper:
        q.answer = upper ? "yes" : "no";
        q.options = std::vector<std::string>{"yes", "no"};
        break;
      case VqaKind::where:
        q.answer = std::string(upper ? "upper" : "lower") + " " + (left ? "left" : "right");
        break;
    }

    split.samples.push_back(std::move(d));
    split.samples.push_back(std::move(g));
    split.samples.push_back(std::move(q));
  }
  return split;
}

std::string canonical_response(const TaskSample& s, const std::vector<std::string>& classes) {
  switch (s.task) {
    case Task::diagnosis:
      if (!s.label || *s.label < 0 || *s.label >= static_cast<int>(classes.size()))
        throw ArgumentError("diagnosis sample has no valid label");
      return std::string(kDiagnosisPrefix) + " " + classes[*s.label];
    case Task::grounding: {
      if (!s.box) throw ArgumentError("grounding sample has no box");
      const auto& b = *s.box;
      return "x" + std::to_string(b.x) + " y" + std::to_string(b.y) + " w" + std::to_string(b.w) +
             " h" + std::to_string(b.h);
    }
    case Task::vqa:
      if (!s.answer) throw ArgumentError("vqa sample has no answer");
      return join(normalize_and_tokenize(*s.answer));
  }
  return {};
}

std::string target_response(const TaskSample& s, const std::vector<std::string>& classes) {
  if (s.response) return *s.response;
  return canonical_response(s, classes);
}

std::string to_jsonl_line(const TaskSample& s) {
  json j;
  j["task"] = std::string(to_string(s.task));
  j["image"] = {{"h", s.image->height}, {"w", s.image->width}, {"data", s.image->pixels}};
  j["instruction"] = s.instruction;
  if (s.label) j["label"] = *s.label;
  if (s.box) j["box"] = {s.box->x, s.box->y, s.box->w, s.box->h};
  if (s.answer) j["answer"] = *s.answer;
  if (s.options) j["options"] = *s.options;
  if (s.response) j["response"] = *s.response;
  if (!s.reliable) j["reliable"] = false;
  return j.dump();
}

void save_jsonl(const DatasetSplit& split, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  for (const auto& s : split.samples) out << to_jsonl_line(s) << '\n';
  if (!out) throw IoError("write failed for " + path.string());
}

namespace {

std::string at_line(std::size_t line) { return ", line " + std::to_string(line); }

TaskSample parse_record(const json& j, std::size_t line, std::optional<Task> expected) {
  if (!j.is_object()) throw ParseError("record is not a JSON object" + at_line(line));
  auto require = [&](const char* field) -> const json& {
    if (!j.contains(field)) throw ParseError(std::string("missing field '") + field + "'" + at_line(line));
    return j.at(field);
  };
  TaskSample s;
  try {
    const auto task_name = require("task").get<std::string>();
    auto task = parse_task(task_name);
    if (!task) throw SchemaError("unknown task '" + task_name + "'" + at_line(line));
    if (expected && *task != *expected)
      throw SchemaError("task '" + task_name + "' does not match expected '" +
                        std::string(to_string(*expected)) + "'" + at_line(line));
    s.task = *task;

    const auto& im = require("image");
    if (!im.is_object() || !im.contains("h") || !im.contains("w") || !im.contains("data"))
      throw ParseError("image must carry h, w and data" + at_line(line));
    auto img = std::make_shared<GridImage>(im.at("h").get<int>(), im.at("w").get<int>());
    img->pixels = im.at("data").get<std::vector<double>>();
    try {
      img->validate();
    } catch (const SchemaError& e) {
      throw SchemaError(std::string(e.what()) + at_line(line));
    }
    s.image = std::move(img);
    s.instruction = require("instruction").get<std::string>();

    auto forbid = [&](const char* field) {
      if (j.contains(field))
        throw SchemaError(std::string("field '") + field + "' not allowed for task " + task_name +
                          at_line(line));
    };
    switch (s.task) {
      case Task::diagnosis:
        s.label = require("label").get<int>();
        if (*s.label < 0) throw SchemaError("invalid label" + at_line(line));
        forbid("box");
        forbid("answer");
        forbid("options");
        break;
      case Task::grounding: {
        const auto b = require("box").get<std::vector<int>>();
        if (b.size() != 4) throw ParseError("box must have 4 integers" + at_line(line));
        BoundingBox box{b[0], b[1], b[2], b[3]};
        if (!box.fits(s.image->width, s.image->height))
          throw SchemaError("invalid box" + at_line(line));
        s.box = box;
        forbid("label");
        forbid("answer");
        forbid("options");
        break;
      }
      case Task::vqa:
        s.answer = require("answer").get<std::string>();
        if (j.contains("options")) s.options = j.at("options").get<std::vector<std::string>>();
        forbid("label");
        forbid("box");
        break;
    }
    if (j.contains("response")) s.response = j.at("response").get<std::string>();
    if (j.contains("reliable")) s.reliable = j.at("reliable").get<bool>();
  } catch (const json::exception& e) {
    throw ParseError(std::string("malformed record: ") + e.what() + at_line(line));
  }
  return s;
}

}  // namespace

DatasetSplit load_jsonl(const std::filesystem::path& path, std::optional<Task> expected,
                        std::vector<std::string>* warnings) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  DatasetSplit split;
  split.provenance = {path.string(), 0, "{}"};
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      throw ParseError(std::string("invalid JSON: ") + e.what() + at_line(lineno));
    }
    split.samples.push_back(parse_record(j, lineno, expected));
  }
  if (split.empty() && warnings) warnings->push_back("empty dataset: " + path.string());
  return split;
}

std::string stratum_of(const TaskSample& s) {
  std::string key(to_string(s.task));
  if (s.label) key += ":" + std::to_string(*s.label);
  return key;
}

namespace {

template <class T>
void shuffle(std::vector<T>& v, Rng& rng) {
  for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[rng.below(i)]);
}

DatasetSplit pick(const DatasetSplit& split, std::vector<std::size_t> idx, std::string_view what) {
  std::sort(idx.begin(), idx.end());
  DatasetSplit out;
  out.provenance = split.provenance;
  out.provenance.source += std::string("|") + std::string(what);
  out.samples.reserve(idx.size());
  for (auto i : idx) out.samples.push_back(split.samples[i]);
  return out;
}

}  // namespace

DatasetSplit stratified_subset(const DatasetSplit& split, std::size_t count, std::uint64_t seed) {
  if (split.empty()) throw ArgumentError("cannot subset an empty split");
  if (count > split.size()) throw ArgumentError("subset larger than split");
  std::map<std::string, std::vector<std::size_t>> strata;
  for (std::size_t i = 0; i < split.size(); ++i) strata[stratum_of(split.samples[i])].push_back(i);

  const double n = static_cast<double>(split.size());
  struct Quota {
    const std::string* key;
    std::size_t base;
    double remainder;
  };
  std::vector<Quota> quotas;
  std::size_t assigned = 0;
  for (const auto& [key, members] : strata) {
    const double exact = static_cast<double>(members.size()) * static_cast<double>(count) / n;
    const auto base = static_cast<std::size_t>(std::floor(exact));
    quotas.push_back({&key, base, exact - static_cast<double>(base)});
    assigned += base;
  }
  std::vector<std::size_t> order(quotas.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return quotas[a].remainder > quotas[b].remainder;
  });
  for (std::size_t k = 0; assigned < count; ++k, ++assigned) ++quotas[order[k]].base;

  std::vector<std::size_t> chosen;
  for (const auto& q : quotas) {
    auto members = strata.at(*q.key);
    Rng rng(derive_seed(seed, *q.key));
    shuffle(members, rng);
    chosen.insert(chosen.end(), members.begin(), members.begin() + static_cast<long>(q.base));
  }
  return pick(split, std::move(chosen), "stratified");
}

DatasetSplit subset_fraction(const DatasetSplit& split, double fraction, std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction <= 1.0))
    throw ArgumentError("fraction must lie in (0, 1], got " + std::to_string(fraction));
  if (split.empty()) throw ArgumentError("cannot subset an empty split");
  if (fraction == 1.0) return split;
  const auto count = static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(split.size()) - 1e-9));
  return stratified_subset(split, std::max<std::size_t>(count, 1), seed);
}

DatasetSplit subset_kshot(const DatasetSplit& split, int k, std::uint64_t seed) {
  if (k < 1) throw ArgumentError("k must be >= 1");
  std::map<int, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < split.size(); ++i)
    if (split.samples[i].label) by_class[*split.samples[i].label].push_back(i);
  if (by_class.empty()) throw ArgumentError("k-shot subsetting needs labelled samples");
  std::vector<std::size_t> chosen;
  for (auto& [cls, members] : by_class) {
    if (members.size() < static_cast<std::size_t>(k))
      throw ArgumentError("class " + std::to_string(cls) + " has " +
                          std::to_string(members.size()) + " samples, fewer than k=" +
                          std::to_string(k));
    Rng rng(derive_seed(seed, {static_cast<std::uint64_t>(cls)}));
    shuffle(members, rng);
    chosen.insert(chosen.end(), members.begin(), members.begin() + k);
  }
  return pick(split, std::move(chosen), "kshot");
}

DatasetSplit filter_task(const DatasetSplit& split, Task task) {
  DatasetSplit out;
  out.provenance = split.provenance;
  for (const auto& s : split.samples)
    if (s.task == task) out.samples.push_back(s);
  return out;
}

}  // namespace vrft
