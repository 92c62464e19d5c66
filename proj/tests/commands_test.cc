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

#include "bsynth/commands.h"

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "gmock/gmock.h"
#include "gtest/gtest.h"

namespace bsynth {
namespace {

using ::testing::HasSubstr;

std::filesystem::path TempDir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("bsynth_cmd_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

std::string Slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

nlohmann::json ReadJson(const std::filesystem::path& path) {
  return nlohmann::json::parse(Slurp(path));
}

std::string SmallConfig(const std::filesystem::path& dir) {
  const auto path = dir / "config.json";
  std::ofstream(path) << R"({
      "input": {"population": {"credit": {"n_cards": 3000},
                               "deposits": {"n_deposits": 2000}}},
      "application": ["credit", "yield"], "seed": 4})";
  return path.string();
}

CommandOptions Options(const std::string& command, const std::string& config,
                       const std::filesystem::path& out) {
  CommandOptions o;
  o.command = command;
  o.config_path = config;
  o.out = out.string();
  return o;
}

TEST(CommandsTest, BundledCreditConfigReportsFrobeniusPerStrategyAndMatrix) {
  const std::string config =
      std::string(BSYNTH_CONFIG_DIR) + "/credit_mst_cbp.json";
  const auto dir = TempDir("bundled");
  ASSERT_TRUE(RunCommand(Options("pipeline", config, dir / "run")).ok());
  const auto report = ReadJson(dir / "run" / "credit" / "report.json");
  for (const char* matrix : {"debt", "delinquency"}) {
    EXPECT_TRUE(report["metrics"]["matrices"][matrix]["frobenius"].is_number())
        << matrix;
  }

  ASSERT_TRUE(RunCommand(Options("compare", config, dir / "cmp")).ok());
  const auto comparison = ReadJson(dir / "cmp" / "comparison.json");
  const auto& rows = comparison["applications"]["credit"]["rows"];
  ASSERT_EQ(rows.size(), 2u);
  for (const auto& row : rows) {
    EXPECT_TRUE(row["cbp"].is_number()) << row["metric"];
    EXPECT_TRUE(row["data_driven"].is_number()) << row["metric"];
  }
}

TEST(CommandsTest, StagedCommandsReproduceThePipeline) {
  const auto dir = TempDir("staged");
  const std::string config = SmallConfig(dir);
  for (const char* command :
       {"gen-data", "encode", "synth", "decode", "eval"}) {
    const absl::Status s = RunCommand(Options(command, config, dir / "staged"));
    ASSERT_TRUE(s.ok()) << command << ": " << s;
  }
  ASSERT_TRUE(RunCommand(Options("pipeline", config, dir / "whole")).ok());
  for (const char* app : {"credit", "yield"}) {
    for (const char* file : {"encoded.csv", "synthetic_encoded.csv",
                             "synthetic.csv", "report.json"}) {
      EXPECT_EQ(Slurp(dir / "staged" / app / file),
                Slurp(dir / "whole" / app / file))
          << app << "/" << file;
    }
  }
}

TEST(CommandsTest, FailedCommandStillWritesManifest) {
  const auto dir = TempDir("failed");
  const absl::Status s =
      RunCommand(Options("decode", SmallConfig(dir), dir / "out"));
  ASSERT_FALSE(s.ok());
  const auto manifest = ReadJson(dir / "out" / "manifest.json");
  EXPECT_EQ(manifest["status"], "failed");
  EXPECT_THAT(manifest["error"].get<std::string>(), HasSubstr("codebook"));
}

TEST(CommandsTest, UnknownCommandIsRejected) {
  CommandOptions o;
  o.command = "train";
  EXPECT_FALSE(RunCommand(o).ok());
}

TEST(ResolveConfigTest, FlagsOverrideTheConfig) {
  CommandOptions o;
  o.command = "pipeline";
  o.seed = 77;
  o.mechanism = "aim";
  o.strategy = "data_driven";
  o.epsilon = 3;
  o.delta = 1e-8;
  auto c = ResolveConfig(o);
  ASSERT_TRUE(c.ok()) << c.status();
  EXPECT_EQ(c->seed, 77u);
  EXPECT_EQ(c->input.population.seed, 77u);
  EXPECT_EQ(c->mechanism.name, Mechanism::kAim);
  EXPECT_EQ(c->strategy, Strategy::kDataDriven);
  EXPECT_EQ(c->privacy.epsilon, 3);
  EXPECT_EQ(c->privacy.delta, 1e-8);
}

TEST(ResolveConfigTest, CompareTakesAStrategyPair) {
  CommandOptions o;
  o.command = "compare";
  o.strategy = "data_driven,cbp";
  auto c = ResolveConfig(o);
  ASSERT_TRUE(c.ok()) << c.status();
  EXPECT_EQ(c->compare,
            (std::vector<Strategy>{Strategy::kDataDriven, Strategy::kCbp}));
  o.strategy = "cbp";
  EXPECT_FALSE(ResolveConfig(o).ok());
  o.strategy = "cbp,quantiles";
  EXPECT_FALSE(ResolveConfig(o).ok());
}

TEST(ResolveConfigTest, RejectsInvalidPrivacyAndMissingConfig) {
  CommandOptions o;
  o.command = "pipeline";
  o.epsilon = 0;
  EXPECT_FALSE(ResolveConfig(o).ok());
  o.epsilon.reset();
  o.delta = 1.5;
  EXPECT_FALSE(ResolveConfig(o).ok());
  o.delta.reset();
  o.config_path = "/nonexistent/config.json";
  EXPECT_FALSE(ResolveConfig(o).ok());
}

}  // namespace
}  // namespace bsynth
