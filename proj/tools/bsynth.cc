//
// Copyright 2026 The bsynth Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//

// bsynth: encode, synthesize, decode and evaluate tabular data under
// differential privacy. Run `bsynth --help` for commands and config keys.

#include <cstdint>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "bsynth/commands.h"

namespace {

constexpr char kConfigKeys[] = R"(Config keys (JSON, all optional):
  input.source                 datagen | csv
  input.population.*           generator settings (seed, demographics, fi,
                               deposits, credit)
  input.data, input.schema     CSV and schema paths for source csv
  input.unbanked               unbanked counts CSV (fi with source csv)
  strategy.name                cbp | data_driven
  strategy.overrides.<column>  {method, cutoffs, lower, k, log}
  strategy.compare             [name, name] for the compare command
  mechanism.name               mst | aim | pac
  mechanism.noiseless          true disables all noise (diagnostic)
  mechanism.rounds             AIM rounds
  mechanism.workload           [[column, ...], ...] AIM workload
  mechanism.workload_weights   one weight per workload entry
  mechanism.k, .eta, .delta_k  PAC tuple length, threshold slack, row cap
  mechanism.synthetic_rows     rows to synthesize (default: input rows)
  privacy.epsilon, .delta      per-run budget
  privacy.selection_fraction   budget share for selection
  decode.mode                  left_edge | midpoint | kde
  decode.bandwidth, .grid_points  KDE settings
  application                  fi | yield | credit, or a list
  seed                         synthesis and decode seed
  output                       output directory)";

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Differentially private synthetic tabular data"};
  app.footer(kConfigKeys);
  app.require_subcommand(1);

  bsynth::CommandOptions options;
  uint64_t seed = 0;
  std::string out, mechanism, strategy;
  double epsilon = 0, delta = 0;

  const std::pair<const char*, const char*> commands[] = {
      {"gen-data", "Generate the synthetic-population input datasets"},
      {"encode", "Discretize the input into codes and write the codebook"},
      {"synth", "Run the mechanism on the encoded data"},
      {"decode", "Map synthetic codes back to values"},
      {"eval", "Compute application metrics and plot data"},
      {"pipeline", "Run encode, synth, decode and eval in one go"},
      {"compare", "Run two binning strategies and compare their utility"},
  };
  for (const auto& [name, help] : commands) {
    CLI::App* sub = app.add_subcommand(name, help);
    sub->add_option("--config", options.config_path, "Pipeline config (JSON)")
        ->check(CLI::ExistingFile);
    sub->add_option("--seed", seed,
                    "Seed for synthesis, decoding and the population");
    sub->add_option("--out", out, "Output directory");
    sub->add_option("--mechanism", mechanism, "mst | aim | pac");
    sub->add_option("--strategy", strategy,
                    "cbp | data_driven (compare: two, comma-separated)");
    sub->add_option("--epsilon", epsilon, "Privacy parameter epsilon");
    sub->add_option("--delta", delta, "Privacy parameter delta");
    sub->callback([&, sub, name = std::string(name)] {
      options.command = name;
      if (sub->count("--seed")) options.seed = seed;
      if (sub->count("--out")) options.out = out;
      if (sub->count("--mechanism")) options.mechanism = mechanism;
      if (sub->count("--strategy")) options.strategy = strategy;
      if (sub->count("--epsilon")) options.epsilon = epsilon;
      if (sub->count("--delta")) options.delta = delta;
    });
  }
  CLI11_PARSE(app, argc, argv);

  const absl::Status status = bsynth::RunCommand(options);
  if (!status.ok()) {
    std::cerr << "bsynth " << options.command << ": " << status.message()
              << "\n";
    return 1;
  }
  return 0;
}
