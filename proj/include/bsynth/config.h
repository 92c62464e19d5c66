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

#ifndef BSYNTH_CONFIG_H_
#define BSYNTH_CONFIG_H_

// Pipeline configuration document.
//
// {
//   "input":       {"source": "datagen" | "csv", "population": {...},
//                   "data": path, "schema": path, "unbanked": path},
//   "strategy":    "cbp" | {"name": ..., "overrides": {column: rule},
//                            "compare": [names]},
//   "mechanism":   "mst" | {"name": "mst" | "aim" | "pac", "noiseless": b,
//                           "rounds": n, "workload": [[columns]...],
//                           "workload_weights": [w...], "k": n, "eta": x,
//                           "delta_k": n, "synthetic_rows": n},
//   "privacy":     {"epsilon": x, "delta": x, "selection_fraction": x},
//   "decode":      "left_edge" | {"mode": ..., "bandwidth": x,
//                                 "grid_points": n},
//   "application": "credit" | ["credit", "yield"],
//   "seed":        n,
//   "output":      dir
// }
//
// A rule is {"method": name, "cutoffs": [...], "lower": x, "k": n,
// "log": bool}.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "absl/strings/str_cat.h"
#include "absl/strings/str_join.h"
#include "bsynth/csv.h"
#include "bsynth/datagen.h"
#include "bsynth/decode.h"
#include "bsynth/encode.h"
#include "bsynth/pac.h"
#include "bsynth/strategies.h"
#include "nlohmann/json.hpp"

namespace bsynth {

enum class Mechanism { kMst, kAim, kPac };

inline const char* MechanismName(Mechanism m) {
  switch (m) {
    case Mechanism::kMst:
      return "mst";
    case Mechanism::kAim:
      return "aim";
    case Mechanism::kPac:
      return "pac";
  }
  return "unknown";
}

inline absl::StatusOr<Mechanism> ParseMechanism(const std::string& name) {
  for (Mechanism m : {Mechanism::kMst, Mechanism::kAim, Mechanism::kPac}) {
    if (name == MechanismName(m)) return m;
  }
  return absl::InvalidArgumentError(
      absl::StrCat("unknown mechanism '", name, "' (allowed: mst, aim, pac)"));
}

struct InputConfig {
  std::string source = "datagen";
  PopulationConfig population;
  std::string data;
  std::string schema;
  std::string unbanked;
};

struct MechanismConfig {
  Mechanism name = Mechanism::kMst;
  bool noiseless = false;
  int rounds = 10;
  std::vector<std::vector<std::string>> workload;
  std::vector<double> workload_weights;
  PacConfig pac;
  // Negative: as many rows as the input.
  int64_t synthetic_rows = -1;
};

struct PrivacyConfig {
  double epsilon = 1.0;
  double delta = 1e-10;
  // Unset: the mechanism default.
  std::optional<double> selection_fraction;
};

struct DecodeConfig {
  DecodeMode mode = DecodeMode::kLeftEdge;
  KdeSpec kde;
};

struct PipelineConfig {
  InputConfig input;
  Strategy strategy = Strategy::kCbp;
  BinningRules overrides;
  std::vector<Strategy> compare = {Strategy::kCbp, Strategy::kDataDriven};
  MechanismConfig mechanism;
  PrivacyConfig privacy;
  DecodeConfig decode;
  std::vector<Application> applications = {Application::kCredit};
  uint64_t seed = 1;
  std::string output = "out";
};

inline nlohmann::ordered_json BinningRuleToJson(const BinningRule& rule) {
  nlohmann::ordered_json j;
  j["method"] = BinningMethodName(rule.method);
  if (rule.method == BinningMethod::kExplicitCutoffs) {
    j["cutoffs"] = rule.cutoffs;
    if (rule.lower) j["lower"] = *rule.lower;
  } else {
    j["k"] = rule.k;
  }
  j["log"] = rule.log_pretransform;
  return j;
}

inline absl::StatusOr<BinningRule> BinningRuleFromJson(
    const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("method") || !j["method"].is_string()) {
    return absl::InvalidArgumentError("rule needs a string 'method'");
  }
  BinningRule rule;
  BSYNTH_ASSIGN_OR_RETURN(rule.method,
                          ParseBinningMethod(j["method"].get<std::string>()));
  try {
    if (j.contains("cutoffs")) {
      rule.cutoffs = j["cutoffs"].get<std::vector<double>>();
    }
    if (j.contains("lower")) rule.lower = j["lower"].get<double>();
    if (j.contains("k")) rule.k = j["k"].get<int>();
    if (j.contains("log")) rule.log_pretransform = j["log"].get<bool>();
  } catch (const nlohmann::json::exception& e) {
    return absl::InvalidArgumentError(e.what());
  }
  if (rule.method == BinningMethod::kExplicitCutoffs && rule.cutoffs.empty()) {
    return absl::InvalidArgumentError("explicit_cutoffs needs 'cutoffs'");
  }
  if (rule.method != BinningMethod::kExplicitCutoffs && rule.k < 1) {
    return absl::InvalidArgumentError(
        absl::StrCat(BinningMethodName(rule.method), " needs 'k' >= 1"));
  }
  return rule;
}

inline nlohmann::ordered_json PipelineConfigToJson(const PipelineConfig& c) {
  nlohmann::ordered_json j;
  nlohmann::ordered_json input;
  input["source"] = c.input.source;
  if (c.input.source == "datagen") {
    input["population"] = PopulationConfigToJson(c.input.population);
  } else {
    input["data"] = c.input.data;
    input["schema"] = c.input.schema;
    if (!c.input.unbanked.empty()) input["unbanked"] = c.input.unbanked;
  }
  j["input"] = input;
  nlohmann::ordered_json strategy;
  strategy["name"] = StrategyName(c.strategy);
  nlohmann::ordered_json overrides = nlohmann::ordered_json::object();
  for (const auto& [name, rule] : c.overrides) {
    overrides[name] = BinningRuleToJson(rule);
  }
  strategy["overrides"] = overrides;
  std::vector<std::string> compare;
  for (Strategy s : c.compare) compare.push_back(StrategyName(s));
  strategy["compare"] = compare;
  j["strategy"] = strategy;
  nlohmann::ordered_json mech;
  mech["name"] = MechanismName(c.mechanism.name);
  mech["noiseless"] = c.mechanism.noiseless;
  if (c.mechanism.name == Mechanism::kAim) {
    mech["rounds"] = c.mechanism.rounds;
    mech["workload"] = c.mechanism.workload;
    mech["workload_weights"] = c.mechanism.workload_weights;
  }
  if (c.mechanism.name == Mechanism::kPac) {
    mech["k"] = c.mechanism.pac.k;
    mech["eta"] = c.mechanism.pac.eta;
    mech["delta_k"] = c.mechanism.pac.delta_k;
  }
  mech["synthetic_rows"] = c.mechanism.synthetic_rows;
  j["mechanism"] = mech;
  nlohmann::ordered_json privacy;
  privacy["epsilon"] = c.privacy.epsilon;
  privacy["delta"] = c.privacy.delta;
  if (c.privacy.selection_fraction) {
    privacy["selection_fraction"] = *c.privacy.selection_fraction;
  }
  j["privacy"] = privacy;
  nlohmann::ordered_json decode;
  decode["mode"] = DecodeModeName(c.decode.mode);
  if (c.decode.mode == DecodeMode::kKde) {
    if (c.decode.kde.bandwidth) decode["bandwidth"] = *c.decode.kde.bandwidth;
    decode["grid_points"] = c.decode.kde.grid_points;
  }
  j["decode"] = decode;
  std::vector<std::string> apps;
  for (Application a : c.applications) apps.push_back(ApplicationName(a));
  j["application"] = apps;
  j["seed"] = c.seed;
  j["output"] = c.output;
  return j;
}

namespace internal {

// A section given either as a bare string (its name) or as an object.
inline nlohmann::json Sectioned(const nlohmann::json& j, const char* key,
                                const char* name_key) {
  if (!j.contains(key)) return nlohmann::json::object();
  const nlohmann::json& v = j[key];
  if (v.is_string()) return nlohmann::json{{name_key, v}};
  return v;
}

}  // namespace internal

// Parses and validates a configuration document. Every problem found is
// reported in one error, each prefixed with its key path.
inline absl::StatusOr<PipelineConfig> PipelineConfigFromJson(
    const nlohmann::json& doc) {
  using internal::CheckKeys;
  if (!doc.is_object()) {
    return absl::InvalidArgumentError("configuration must be a JSON object");
  }
  PipelineConfig c;
  std::vector<std::string> errors;
  CheckKeys(doc, "config",
            {"input", "strategy", "mechanism", "privacy", "decode",
             "application", "seed", "output"},
            errors);

  const nlohmann::json input = internal::Sectioned(doc, "input", "source");
  if (!input.is_object()) {
    errors.push_back("input: must be an object or a source name");
  } else {
    CheckKeys(input, "input",
              {"source", "population", "data", "schema", "unbanked"}, errors);
    internal::ReadOptional(input, "source", "input.", c.input.source, errors);
    internal::ReadOptional(input, "data", "input.", c.input.data, errors);
    internal::ReadOptional(input, "schema", "input.", c.input.schema, errors);
    internal::ReadOptional(input, "unbanked", "input.", c.input.unbanked,
                           errors);
    if (c.input.source != "datagen" && c.input.source != "csv") {
      errors.push_back(absl::StrCat("input.source: unknown source '",
                                    c.input.source,
                                    "' (allowed: datagen, csv)"));
    }
    if (c.input.source == "csv" &&
        (c.input.data.empty() || c.input.schema.empty())) {
      errors.push_back("input: csv source needs 'data' and 'schema' paths");
    }
    if (input.contains("population")) {
      auto pop = PopulationConfigFromJson(input["population"]);
      if (pop.ok()) {
        c.input.population = *pop;
      } else {
        errors.push_back(
            absl::StrCat("input.population: ", pop.status().message()));
      }
    }
  }

  const nlohmann::json strategy = internal::Sectioned(doc, "strategy", "name");
  if (!strategy.is_object()) {
    errors.push_back("strategy: must be an object or a strategy name");
  } else {
    CheckKeys(strategy, "strategy", {"name", "overrides", "compare"}, errors);
    if (strategy.contains("name")) {
      std::string name;
      internal::ReadOptional(strategy, "name", "strategy.", name, errors);
      auto s = ParseStrategy(name);
      if (s.ok()) {
        c.strategy = *s;
      } else {
        errors.push_back(absl::StrCat("strategy.name: ", s.status().message()));
      }
    }
    if (strategy.contains("overrides")) {
      const auto& o = strategy["overrides"];
      if (!o.is_object()) {
        errors.push_back("strategy.overrides: must map columns to rules");
      } else {
        for (const auto& [column, rule_json] : o.items()) {
          auto rule = BinningRuleFromJson(rule_json);
          if (rule.ok()) {
            c.overrides[column] = *rule;
          } else {
            errors.push_back(absl::StrCat("strategy.overrides.", column, ": ",
                                          rule.status().message()));
          }
        }
      }
    }
    if (strategy.contains("compare")) {
      std::vector<std::string> names;
      internal::ReadOptional(strategy, "compare", "strategy.", names, errors);
      if (names.size() != 2) {
        errors.push_back("strategy.compare: needs exactly two strategies");
      } else {
        c.compare.clear();
        for (const auto& n : names) {
          auto s = ParseStrategy(n);
          if (s.ok()) {
            c.compare.push_back(*s);
          } else {
            errors.push_back(
                absl::StrCat("strategy.compare: ", s.status().message()));
          }
        }
      }
    }
  }

  const nlohmann::json mech = internal::Sectioned(doc, "mechanism", "name");
  if (!mech.is_object()) {
    errors.push_back("mechanism: must be an object or a mechanism name");
  } else {
    CheckKeys(mech, "mechanism",
              {"name", "noiseless", "rounds", "workload", "workload_weights",
               "k", "eta", "delta_k", "synthetic_rows"},
              errors);
    if (mech.contains("name")) {
      std::string name;
      internal::ReadOptional(mech, "name", "mechanism.", name, errors);
      auto m = ParseMechanism(name);
      if (m.ok()) {
        c.mechanism.name = *m;
      } else {
        errors.push_back(
            absl::StrCat("mechanism.name: ", m.status().message()));
      }
    }
    MechanismConfig& m = c.mechanism;
    internal::ReadOptional(mech, "noiseless", "mechanism.", m.noiseless,
                           errors);
    internal::ReadOptional(mech, "rounds", "mechanism.", m.rounds, errors);
    internal::ReadOptional(mech, "workload", "mechanism.", m.workload, errors);
    internal::ReadOptional(mech, "workload_weights", "mechanism.",
                           m.workload_weights, errors);
    internal::ReadOptional(mech, "k", "mechanism.", m.pac.k, errors);
    internal::ReadOptional(mech, "eta", "mechanism.", m.pac.eta, errors);
    internal::ReadOptional(mech, "delta_k", "mechanism.", m.pac.delta_k,
                           errors);
    internal::ReadOptional(mech, "synthetic_rows", "mechanism.",
                           m.synthetic_rows, errors);
    if (m.rounds < 1) errors.push_back("mechanism.rounds: must be >= 1");
    if (!m.workload_weights.empty() &&
        m.workload_weights.size() != m.workload.size()) {
      errors.push_back(
          "mechanism.workload_weights: must match the workload length");
    }
    if (auto s = ValidatePacConfig(m.pac); !s.ok()) {
      errors.push_back(absl::StrCat("mechanism: ", s.message()));
    }
  }

  if (doc.contains("privacy")) {
    const auto& p = doc["privacy"];
    if (!p.is_object()) {
      errors.push_back("privacy: must be an object");
    } else {
      CheckKeys(p, "privacy", {"epsilon", "delta", "selection_fraction"},
                errors);
      internal::ReadOptional(p, "epsilon", "privacy.", c.privacy.epsilon,
                             errors);
      internal::ReadOptional(p, "delta", "privacy.", c.privacy.delta, errors);
      if (p.contains("selection_fraction")) {
        double f = 0;
        internal::ReadOptional(p, "selection_fraction", "privacy.", f, errors);
        c.privacy.selection_fraction = f;
        if (!(f >= 0 && f < 1)) {
          errors.push_back("privacy.selection_fraction: must lie in [0, 1)");
        }
      }
    }
  }
  if (!(c.privacy.epsilon > 0) || !std::isfinite(c.privacy.epsilon)) {
    errors.push_back(absl::StrCat("privacy.epsilon: must be positive, got ",
                                  c.privacy.epsilon));
  }
  if (!(c.privacy.delta > 0 && c.privacy.delta < 1)) {
    errors.push_back(absl::StrCat("privacy.delta: must lie in (0, 1), got ",
                                  c.privacy.delta));
  }

  const nlohmann::json decode = internal::Sectioned(doc, "decode", "mode");
  if (!decode.is_object()) {
    errors.push_back("decode: must be an object or a mode name");
  } else {
    CheckKeys(decode, "decode", {"mode", "bandwidth", "grid_points"}, errors);
    if (decode.contains("mode")) {
      std::string mode;
      internal::ReadOptional(decode, "mode", "decode.", mode, errors);
      auto m = ParseDecodeMode(mode);
      if (m.ok()) {
        c.decode.mode = *m;
      } else {
        errors.push_back(absl::StrCat("decode.mode: ", m.status().message()));
      }
    }
    if (decode.contains("bandwidth")) {
      double h = 0;
      internal::ReadOptional(decode, "bandwidth", "decode.", h, errors);
      c.decode.kde.bandwidth = h;
      if (!(h > 0)) errors.push_back("decode.bandwidth: must be positive");
    }
    internal::ReadOptional(decode, "grid_points", "decode.",
                           c.decode.kde.grid_points, errors);
    if (c.decode.kde.grid_points < 2) {
      errors.push_back("decode.grid_points: must be >= 2");
    }
  }

  if (doc.contains("application")) {
    std::vector<std::string> names;
    if (doc["application"].is_string()) {
      names.push_back(doc["application"].get<std::string>());
    } else {
      internal::ReadOptional(doc, "application", "", names, errors);
    }
    if (names.empty()) errors.push_back("application: none given");
    c.applications.clear();
    for (const auto& n : names) {
      auto a = ParseApplication(n);
      if (a.ok()) {
        c.applications.push_back(*a);
      } else {
        errors.push_back(absl::StrCat("application: ", a.status().message()));
      }
    }
  }
  internal::ReadOptional(doc, "seed", "", c.seed, errors);
  internal::ReadOptional(doc, "output", "", c.output, errors);

  if (!errors.empty()) {
    return absl::InvalidArgumentError(absl::StrJoin(errors, "; "));
  }
  return c;
}

inline absl::StatusOr<PipelineConfig> ReadPipelineConfig(
    const std::string& path) {
  BSYNTH_ASSIGN_OR_RETURN(std::string text, ReadFile(path));
  nlohmann::json doc = nlohmann::json::parse(text, nullptr, false);
  if (doc.is_discarded()) {
    return absl::InvalidArgumentError(
        absl::StrCat("'", path, "' is not valid JSON"));
  }
  auto config = PipelineConfigFromJson(doc);
  if (!config.ok()) return Annotate(config.status(), path);
  return config;
}

}  // namespace bsynth

#endif  // BSYNTH_CONFIG_H_
