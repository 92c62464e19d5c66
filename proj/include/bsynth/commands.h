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

#ifndef BSYNTH_COMMANDS_H_
#define BSYNTH_COMMANDS_H_

// Command implementations behind the bsynth tool. Stage commands share one
// layout under the output directory, one subdirectory per application:
//
//   <out>/<app>/original.csv, original.schema.json, unbanked.csv, join.json
//   <out>/<app>/codebook.json, encoded.csv                       (encode)
//   <out>/<app>/synthetic_encoded.csv, synthesis_log.json         (synth)
//   <out>/<app>/synthetic.csv                                     (decode)
//   <out>/<app>/report.json, plots/*.csv                          (eval)
//   <out>/manifest.json                                           (always)
//
// Running the five stage commands in order gives the same files as
// `pipeline`.

#include <algorithm>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "absl/strings/str_cat.h"
#include "absl/strings/str_split.h"
#include "bsynth/config.h"
#include "bsynth/pipeline.h"
#include "bsynth/status.h"
#include "nlohmann/json.hpp"

namespace bsynth {

inline const std::vector<std::string>& CommandNames() {
  static const std::vector<std::string> kNames = {
      "gen-data", "encode", "synth", "decode", "eval", "pipeline", "compare"};
  return kNames;
}

// Command-line overrides; unset fields keep the config value.
struct CommandOptions {
  std::string command;
  std::string config_path;
  std::optional<uint64_t> seed;
  std::optional<std::string> out;
  std::optional<std::string> mechanism;
  std::optional<std::string> strategy;
  std::optional<double> epsilon;
  std::optional<double> delta;
};

// Loads the config (defaults without --config) and applies the flags. --seed
// sets both the pipeline seed and the population seed. For `compare`,
// --strategy takes a comma-separated pair.
inline absl::StatusOr<PipelineConfig> ResolveConfig(
    const CommandOptions& options) {
  PipelineConfig config;
  if (!options.config_path.empty()) {
    BSYNTH_ASSIGN_OR_RETURN(config, ReadPipelineConfig(options.config_path));
  }
  if (options.seed) {
    config.seed = *options.seed;
    config.input.population.seed = *options.seed;
  }
  if (options.out) config.output = *options.out;
  if (options.mechanism) {
    BSYNTH_ASSIGN_OR_RETURN(config.mechanism.name,
                            ParseMechanism(*options.mechanism));
  }
  if (options.strategy) {
    if (options.command == "compare") {
      std::vector<std::string> names = absl::StrSplit(*options.strategy, ',');
      if (names.size() != 2) {
        return absl::InvalidArgumentError(absl::StrCat(
            "--strategy for compare needs two names separated by a comma, "
            "got '",
            *options.strategy, "'"));
      }
      config.compare.clear();
      for (const std::string& name : names) {
        BSYNTH_ASSIGN_OR_RETURN(Strategy s, ParseStrategy(name));
        config.compare.push_back(s);
      }
    } else {
      BSYNTH_ASSIGN_OR_RETURN(config.strategy,
                              ParseStrategy(*options.strategy));
    }
  }
  if (options.epsilon) config.privacy.epsilon = *options.epsilon;
  if (options.delta) config.privacy.delta = *options.delta;
  BSYNTH_RETURN_IF_ERROR(
      PrivacyParams::Create(config.privacy.epsilon, config.privacy.delta)
          .status());
  if (config.output.empty()) {
    return absl::InvalidArgumentError("output directory is empty");
  }
  return config;
}

namespace internal {

inline std::filesystem::path AppDir(const PipelineConfig& config,
                                    Application app) {
  return std::filesystem::path(config.output) / ApplicationName(app);
}

inline absl::StatusOr<nlohmann::ordered_json> ReadJsonFile(
    const std::filesystem::path& path) {
  BSYNTH_ASSIGN_OR_RETURN(std::string text, ReadFile(path.string()));
  nlohmann::ordered_json doc =
      nlohmann::ordered_json::parse(text, nullptr, false);
  if (doc.is_discarded()) {
    return absl::InvalidArgumentError(
        absl::StrCat("'", path.string(), "' is not valid JSON"));
  }
  return doc;
}

// Join coverage of the credit snapshots, kept beside the joined table.
inline absl::Status WriteJoinCoverage(const AppInput& input,
                                      const std::filesystem::path& dir) {
  if (!input.join) return absl::OkStatus();
  nlohmann::ordered_json j = {{"count", input.join->count_coverage},
                              {"debt", input.join->debt_coverage}};
  return WriteArtifact(dir / "join.json", DumpJson(j));
}

inline absl::Status WriteStageInput(const AppInput& input,
                                    const std::filesystem::path& dir) {
  BSYNTH_RETURN_IF_ERROR(WriteInputArtifacts(input, dir));
  return WriteJoinCoverage(input, dir);
}

// Input from <dir>/original.csv when present; otherwise from the configured
// source, written to <dir> for the later stages.
inline absl::StatusOr<AppInput> LoadStageInput(
    const PipelineConfig& config, Application app,
    const std::filesystem::path& dir) {
  if (!std::filesystem::exists(dir / "original.csv")) {
    BSYNTH_ASSIGN_OR_RETURN(AppInput input,
                            LoadApplicationInput(config.input, app));
    BSYNTH_RETURN_IF_ERROR(WriteStageInput(input, dir));
    return input;
  }
  InputConfig files;
  files.source = "csv";
  files.data = (dir / "original.csv").string();
  files.schema = (dir / "original.schema.json").string();
  if (app == Application::kFi) files.unbanked = (dir / "unbanked.csv").string();
  BSYNTH_ASSIGN_OR_RETURN(AppInput input, LoadApplicationInput(files, app));
  if (std::filesystem::exists(dir / "join.json")) {
    BSYNTH_ASSIGN_OR_RETURN(nlohmann::ordered_json j,
                            ReadJsonFile(dir / "join.json"));
    JoinedCards join;
    join.count_coverage = j.value("count", 0.0);
    join.debt_coverage = j.value("debt", 0.0);
    input.join = std::move(join);
  }
  return input;
}

inline absl::StatusOr<Codebook> LoadCodebook(const std::filesystem::path& dir) {
  BSYNTH_ASSIGN_OR_RETURN(nlohmann::ordered_json doc,
                          ReadJsonFile(dir / "codebook.json"));
  auto book = CodebookFromJson(doc);
  if (!book.ok())
    return Annotate(book.status(), (dir / "codebook.json").string());
  return book;
}

inline absl::StatusOr<EncodedDataset> LoadEncoded(
    const std::filesystem::path& path, const Codebook& book) {
  BSYNTH_ASSIGN_OR_RETURN(std::string text, ReadFile(path.string()));
  auto data = ParseEncoded(text, book);
  if (!data.ok()) return Annotate(data.status(), path.string());
  return data;
}

inline absl::StatusOr<Dataset> LoadSynthetic(const std::filesystem::path& dir,
                                             const Dataset& original) {
  const std::vector<ColumnSpec> schema(original.schema().begin(),
                                       original.schema().end());
  return ReadCsv((dir / "synthetic.csv").string(), schema);
}

inline absl::Status EncodeStage(const PipelineConfig& config, Application app,
                                StageLog& log) {
  const auto dir = AppDir(config, app);
  const std::string tag = absl::StrCat(ApplicationName(app), ":");
  BSYNTH_ASSIGN_OR_RETURN(AppInput input, RunStage(log, tag + "input", [&] {
                            return LoadStageInput(config, app, dir);
                          }));
  BSYNTH_ASSIGN_OR_RETURN(
      EncodedDataset encoded,
      RunStage(log, tag + "encode", [&]() -> absl::StatusOr<EncodedDataset> {
        BSYNTH_ASSIGN_OR_RETURN(
            BinningRules rules,
            ResolveRules(input.data, app, config.strategy, config.overrides));
        return EncodeDataset(input.data, rules);
      }));
  BSYNTH_RETURN_IF_ERROR(WriteArtifact(
      dir / "codebook.json", DumpJson(CodebookToJson(encoded.codebook()))));
  return WriteArtifact(dir / "encoded.csv", FormatEncoded(encoded));
}

inline absl::StatusOr<nlohmann::ordered_json> SynthStage(
    const PipelineConfig& config, Application app, StageLog& log) {
  const auto dir = AppDir(config, app);
  BSYNTH_ASSIGN_OR_RETURN(Codebook book, LoadCodebook(dir));
  BSYNTH_ASSIGN_OR_RETURN(EncodedDataset encoded,
                          LoadEncoded(dir / "encoded.csv", book));
  Rng rng = StreamRng(config.seed, Stream::kSynthesis);
  BSYNTH_ASSIGN_OR_RETURN(
      SynthesisResult result,
      RunStage(log, absl::StrCat(ApplicationName(app), ":synthesize"),
               [&] { return Synthesize(encoded, config, app, rng); }));
  nlohmann::ordered_json synthesis = SynthesisLogToJson(result.log, book);
  BSYNTH_RETURN_IF_ERROR(
      WriteArtifact(dir / "synthetic_encoded.csv", FormatEncoded(result.data)));
  BSYNTH_RETURN_IF_ERROR(
      WriteArtifact(dir / "synthesis_log.json", DumpJson(synthesis)));
  return synthesis;
}

inline absl::Status DecodeStage(const PipelineConfig& config, Application app,
                                StageLog& log) {
  const auto dir = AppDir(config, app);
  BSYNTH_ASSIGN_OR_RETURN(AppInput input, LoadStageInput(config, app, dir));
  BSYNTH_ASSIGN_OR_RETURN(Codebook book, LoadCodebook(dir));
  BSYNTH_ASSIGN_OR_RETURN(EncodedDataset synthetic,
                          LoadEncoded(dir / "synthetic_encoded.csv", book));
  Rng rng = StreamRng(config.seed, Stream::kDecode);
  BSYNTH_ASSIGN_OR_RETURN(
      DecodeResult decoded,
      RunStage(log, absl::StrCat(ApplicationName(app), ":decode"), [&] {
        return DecodeDataset(synthetic, config.decode.mode, &input.data,
                             config.decode.kde, rng);
      }));
  return WriteArtifact(dir / "synthetic.csv", FormatDataset(decoded.data));
}

inline absl::StatusOr<nlohmann::ordered_json> EvalStage(
    const PipelineConfig& config, Application app, StageLog& log) {
  const auto dir = AppDir(config, app);
  RunResult run;
  run.app = app;
  run.strategy = config.strategy;
  BSYNTH_ASSIGN_OR_RETURN(run.input, LoadStageInput(config, app, dir));
  BSYNTH_ASSIGN_OR_RETURN(Codebook book, LoadCodebook(dir));
  BSYNTH_ASSIGN_OR_RETURN(run.encoded, LoadEncoded(dir / "encoded.csv", book));
  BSYNTH_ASSIGN_OR_RETURN(run.synthetic.data,
                          LoadEncoded(dir / "synthetic_encoded.csv", book));
  BSYNTH_ASSIGN_OR_RETURN(nlohmann::ordered_json synthesis,
                          ReadJsonFile(dir / "synthesis_log.json"));
  run.synthetic.log.suppressed_cells =
      synthesis.value("suppressed_cells", std::size_t{0});
  BSYNTH_ASSIGN_OR_RETURN(run.decoded.data, LoadSynthetic(dir, run.input.data));
  run.decoded.dropped_rows =
      run.synthetic.data.num_rows() - run.decoded.data.num_rows();
  BSYNTH_ASSIGN_OR_RETURN(
      run.evaluation,
      RunStage(log, absl::StrCat(ApplicationName(app), ":evaluate"), [&] {
        return Evaluate(run.input, run.encoded, run.synthetic.data,
                        run.decoded.data, config.decode.mode);
      }));
  const nlohmann::ordered_json report = ReportJson(config, run);
  BSYNTH_RETURN_IF_ERROR(WriteArtifact(dir / "report.json", DumpJson(report)));
  for (const PlotFile& plot : run.evaluation.plots) {
    BSYNTH_RETURN_IF_ERROR(
        WriteArtifact(dir / "plots" / plot.name, plot.contents));
  }
  return run.evaluation.metrics;
}

inline absl::Status RunCommandBody(const std::string& command,
                                   const PipelineConfig& config, StageLog& log,
                                   ManifestExtras& extras) {
  const std::filesystem::path out(config.output);
  if (command == "gen-data") {
    if (config.input.source != "datagen") {
      return absl::InvalidArgumentError(
          "gen-data needs input.source 'datagen'");
    }
    for (Application app : config.applications) {
      BSYNTH_ASSIGN_OR_RETURN(
          AppInput input,
          RunStage(log, absl::StrCat(ApplicationName(app), ":generate"),
                   [&] { return LoadApplicationInput(config.input, app); }));
      BSYNTH_RETURN_IF_ERROR(WriteStageInput(input, AppDir(config, app)));
    }
    return absl::OkStatus();
  }
  for (Application app : config.applications) {
    const std::string name = ApplicationName(app);
    if (command == "encode") {
      BSYNTH_RETURN_IF_ERROR(EncodeStage(config, app, log));
    } else if (command == "synth") {
      BSYNTH_ASSIGN_OR_RETURN(extras.synthesis[name],
                              SynthStage(config, app, log));
    } else if (command == "decode") {
      BSYNTH_RETURN_IF_ERROR(DecodeStage(config, app, log));
    } else if (command == "eval") {
      BSYNTH_ASSIGN_OR_RETURN(extras.metrics[name],
                              EvalStage(config, app, log));
    } else if (command == "pipeline") {
      BSYNTH_ASSIGN_OR_RETURN(
          RunResult run, RunApplication(config, app, config.strategy, log));
      BSYNTH_RETURN_IF_ERROR(
          WriteRunArtifacts(config, run, AppDir(config, app)));
      BSYNTH_RETURN_IF_ERROR(WriteJoinCoverage(run.input, AppDir(config, app)));
      extras.synthesis[name] =
          SynthesisLogToJson(run.synthetic.log, run.encoded.codebook());
      extras.metrics[name] = run.evaluation.metrics;
    }
  }
  if (command == "compare") {
    BSYNTH_ASSIGN_OR_RETURN(Comparison comparison,
                            CompareStrategies(config, log));
    const std::vector<std::string> columns =
        comparison.report["strategies"].get<std::vector<std::string>>();
    for (std::size_t i = 0; i < comparison.runs.size(); ++i) {
      const RunResult& run = comparison.runs[i];
      const auto dir = AppDir(config, run.app) / columns[i % 2];
      BSYNTH_RETURN_IF_ERROR(WriteRunArtifacts(config, run, dir));
      extras.synthesis[absl::StrCat(ApplicationName(run.app), "/",
                                    columns[i % 2])] =
          SynthesisLogToJson(run.synthetic.log, run.encoded.codebook());
    }
    BSYNTH_RETURN_IF_ERROR(
        WriteArtifact(out / "comparison.json", DumpJson(comparison.report)));
    BSYNTH_RETURN_IF_ERROR(
        WriteArtifact(out / "comparison.csv", comparison.csv));
    extras.metrics = comparison.report;
  }
  return absl::OkStatus();
}

}  // namespace internal

// Runs one command and writes <out>/manifest.json whether or not it
// succeeds. Returns the command's error, or the manifest write error.
inline absl::Status RunCommand(const CommandOptions& options) {
  if (std::find(CommandNames().begin(), CommandNames().end(),
                options.command) == CommandNames().end()) {
    return absl::InvalidArgumentError(
        absl::StrCat("unknown command '", options.command, "'"));
  }
  BSYNTH_ASSIGN_OR_RETURN(PipelineConfig config, ResolveConfig(options));
  StageLog log;
  ManifestExtras extras;
  extras.command = options.command;
  extras.synthesis = nlohmann::ordered_json::object();
  absl::Status status =
      internal::RunCommandBody(options.command, config, log, extras);
  if (!status.ok()) extras.error = std::string(status.ToString());
  absl::Status manifest = WriteManifest(config, log, extras, config.output);
  if (!status.ok()) return status;
  return manifest;
}

}  // namespace bsynth

#endif  // BSYNTH_COMMANDS_H_
