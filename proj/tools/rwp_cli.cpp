/* Copyright 2026 The RWP Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "rwp/commands.hpp"

namespace {

struct RawOptions {
  std::string config;
  std::string out_dir;
  std::string checkpoint;
  std::size_t iterations = 20;
  std::string probe;
  std::optional<std::uint64_t> seed_override;
};

rwp::CommandOptions to_options(const RawOptions& raw) {
  rwp::CommandOptions opts;
  opts.config = raw.config;
  if (!raw.out_dir.empty()) opts.out_dir = raw.out_dir;
  if (!raw.checkpoint.empty()) opts.checkpoint = raw.checkpoint;
  opts.iterations = raw.iterations;
  opts.probe = raw.probe;
  opts.seed_override = raw.seed_override;
  return opts;
}

void add_common(CLI::App* cmd, RawOptions& raw) {
  cmd->add_option("--config", raw.config, "experiment config file")->required()->check(CLI::ExistingFile);
  cmd->add_option("--out", raw.out_dir, "output directory (overrides [output] dir)");
  cmd->add_option("--seed-override", raw.seed_override, "replace every training seed");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Random weight perturbation training and probes"};
  app.require_subcommand(1);
  RawOptions raw;

  auto* train = app.add_subcommand("train", "train a model and write metrics");
  add_common(train, raw);

  auto* probe = app.add_subcommand("probe", "run a landscape probe on a checkpoint");
  add_common(probe, raw);
  probe->add_option("--checkpoint", raw.checkpoint, "parameter checkpoint")->required();
  probe->add_option("--probe", raw.probe, "slice, filter-norms or radius")
      ->required()
      ->check(CLI::IsMember({"slice", "filter-norms", "radius"}));

  auto* bench = app.add_subcommand("bench", "time SGD, SAM and RWP steps");
  add_common(bench, raw);
  bench->add_option("--iterations", raw.iterations, "timed steps per rule")
      ->check(CLI::Range(10, 1000000));

  auto* corrupt = app.add_subcommand("corrupt-eval", "accuracy under input corruptions");
  add_common(corrupt, raw);
  corrupt->add_option("--checkpoint", raw.checkpoint, "parameter checkpoint")->required();

  CLI11_PARSE(app, argc, argv);

  const rwp::CommandOptions opts = to_options(raw);
  if (train->parsed()) return rwp::cmd_train(opts, std::cerr);
  if (probe->parsed()) return rwp::cmd_probe(opts, std::cerr);
  if (bench->parsed()) return rwp::cmd_bench(opts, std::cerr);
  return rwp::cmd_corrupt_eval(opts, std::cerr);
}
