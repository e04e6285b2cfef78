// Copyright (c) 2026 vrft contributors
// SPDX-License-Identifier: Apache-2.0
//
// Command-line front end: vrft <command> [--config PATH] [--set k=v]...
// [--out DIR] [--seed N]

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "vrft/error.hpp"
#include "vrft/experiment.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Two-stage fine-tuning engine on planted-shape grids", "vrft"};
  std::string command;
  std::string config_path;
  std::vector<std::string> overrides;
  std::optional<std::string> out_dir;
  std::optional<std::uint64_t> seed;
  app.add_option("command", command, "one of gen-data, train-sft, train-rft, eval, sweep, report");
  app.add_option("--config", config_path, "JSON configuration file");
  app.add_option("--set", overrides, "dotted-path override key=value (repeatable)")->allow_extra_args(false);
  app.add_option("--out", out_dir, "output directory");
  app.add_option("--seed", seed, "master seed");
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    std::cout << vrft::usage_text();
    return 0;
  } catch (const CLI::ParseError& e) {
    std::cerr << nlohmann::json{{"error", "argument"}, {"message", e.what()}}.dump() << '\n'
              << vrft::usage_text();
    return 2;
  }
  if (command.empty()) {
    std::cerr << vrft::usage_text();
    return 2;
  }
  const auto& names = vrft::command_names();
  if (std::find(names.begin(), names.end(), command) == names.end()) {
    std::cerr << "unknown command '" << command << "'\n" << vrft::usage_text();
    return 2;
  }
  vrft::ExperimentConfig cfg;
  try {
    const std::filesystem::path path(config_path);
    cfg = vrft::load_config(config_path.empty() ? nullptr : &path, overrides);
    if (out_dir) cfg.output_dir = *out_dir;
    if (seed) cfg.seed = *seed;
  } catch (const vrft::Error& e) {
    std::cerr << nlohmann::json{{"error", e.kind()}, {"command", command}, {"message", e.what()}}.dump()
              << '\n';
    return 1;
  }
  return vrft::run_command(command, cfg, std::cout, std::cerr);
}
