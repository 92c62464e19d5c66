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

#ifndef BSYNTH_PIPELINE_H_
#define BSYNTH_PIPELINE_H_

// Stage orchestration: input -> encode -> synthesize -> decode -> evaluate,
// plus artifact writing, the run manifest and strategy comparison.

#include <openssl/evp.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "absl/strings/str_cat.h"
#include "bsynth/aim.h"
#include "bsynth/config.h"
#include "bsynth/csv.h"
#include "bsynth/datagen.h"
#include "bsynth/decode.h"
#include "bsynth/encode.h"
#include "bsynth/lowess.h"
#include "bsynth/mst.h"
#include "bsynth/nss.h"
#include "bsynth/pac.h"
#include "bsynth/status.h"
#include "bsynth/strategies.h"
#include "bsynth/transition.h"
#include "bsynth/usage_index.h"
#include "bsynth/yield_curve.h"
#include "nlohmann/json.hpp"

namespace bsynth {

inline constexpr char kBsynthVersion[] = "0.1.0";

// Independent generator per (seed, stream); streams name pipeline stages.
enum class Stream : uint32_t {
  kFiPopulation = 1,
  kDeposits = 2,
  kCards = 3,
  kSynthesis = 10,
  kDecode = 11,
};

inline Rng StreamRng(uint64_t seed, Stream stream) {
  std::seed_seq seq{static_cast<uint32_t>(seed),
                    static_cast<uint32_t>(seed >> 32),
                    static_cast<uint32_t>(stream)};
  return Rng(seq);
}

// ---------------------------------------------------------------- stages --

struct StageRecord {
  std::string name;
  double seconds = 0;
  bool ok = true;
  std::string error;
};

using StageLog = std::vector<StageRecord>;

// Runs `fn`, timing it and recording the outcome. Errors are prefixed with
// the stage name.
template <typename Fn>
auto RunStage(StageLog& log, const std::string& name, Fn&& fn)
    -> decltype(fn()) {
  const auto start = std::chrono::steady_clock::now();
  auto result = fn();
  StageRecord record;
  record.name = name;
  record.seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
          .count();
  record.ok = result.ok();
  if (!result.ok()) {
    record.error = std::string(result.status().message());
    log.push_back(std::move(record));
    return Annotate(result.status(), absl::StrCat("stage '", name, "'"));
  }
  log.push_back(std::move(record));
  return result;
}

struct AppInput {
  Application app = Application::kCredit;
  Dataset data;
  UnbankedCounts unbanked;          // financial inclusion only
  std::optional<JoinedCards> join;  // credit from snapshots only; data moved
};

struct GeneratedPopulation {
  FiPopulation fi;
  Dataset deposits;
  CreditSnapshots cards;
};

inline absl::StatusOr<GeneratedPopulation> GeneratePopulation(
    const PopulationConfig& config) {
  GeneratedPopulation out;
  Rng fi_rng = StreamRng(config.seed, Stream::kFiPopulation);
  BSYNTH_ASSIGN_OR_RETURN(out.fi, GenerateFiPopulation(config, fi_rng));
  Rng dep_rng = StreamRng(config.seed, Stream::kDeposits);
  BSYNTH_ASSIGN_OR_RETURN(out.deposits, GenerateTermDeposits(config, dep_rng));
  Rng card_rng = StreamRng(config.seed, Stream::kCards);
  BSYNTH_ASSIGN_OR_RETURN(out.cards, GenerateCreditCards(config, card_rng));
  return out;
}

inline absl::StatusOr<AppInput> LoadApplicationInput(const InputConfig& input,
                                                     Application app) {
  AppInput out;
  out.app = app;
  if (input.source == "datagen") {
    const PopulationConfig& pop = input.population;
    switch (app) {
      case Application::kFi: {
        Rng rng = StreamRng(pop.seed, Stream::kFiPopulation);
        BSYNTH_ASSIGN_OR_RETURN(FiPopulation fi,
                                GenerateFiPopulation(pop, rng));
        out.data = std::move(fi.data);
        out.unbanked = std::move(fi.unbanked);
        break;
      }
      case Application::kYield: {
        Rng rng = StreamRng(pop.seed, Stream::kDeposits);
        BSYNTH_ASSIGN_OR_RETURN(out.data, GenerateTermDeposits(pop, rng));
        break;
      }
      case Application::kCredit: {
        Rng rng = StreamRng(pop.seed, Stream::kCards);
        BSYNTH_ASSIGN_OR_RETURN(CreditSnapshots cards,
                                GenerateCreditCards(pop, rng));
        BSYNTH_ASSIGN_OR_RETURN(JoinedCards joined,
                                ActiveBothFilter(cards.first, cards.second));
        out.data = std::move(joined.data);
        joined.data = Dataset();
        out.join = std::move(joined);
        break;
      }
    }
    return out;
  }
  BSYNTH_ASSIGN_OR_RETURN(std::vector<ColumnSpec> schema,
                          ReadSchema(input.schema));
  BSYNTH_ASSIGN_OR_RETURN(out.data, ReadCsv(input.data, std::move(schema)));
  if (app == Application::kFi) {
    if (input.unbanked.empty()) {
      return absl::InvalidArgumentError(
          "financial inclusion input needs an 'unbanked' table");
    }
    BSYNTH_ASSIGN_OR_RETURN(std::string text, ReadFile(input.unbanked));
    BSYNTH_ASSIGN_OR_RETURN(out.unbanked, ParseUnbankedCsv(text));
  }
  return out;
}

// Strategy rules with per-column overrides applied on top.
inline absl::StatusOr<BinningRules> ResolveRules(
    const Dataset& data, Application app, Strategy strategy,
    const BinningRules& overrides) {
  BSYNTH_ASSIGN_OR_RETURN(BinningRules rules,
                          StrategyRules(app, strategy, data));
  for (const auto& [column, rule] : overrides) {
    if (!data.ColumnIndex(column)) {
      return absl::InvalidArgumentError(
          absl::StrCat("override for unknown column '", column, "'"));
    }
    rules[column] = rule;
  }
  return rules;
}

// Prioritised pairs per application; AIM weighs them above the remaining
// pairs of the default all-pairs workload.
inline std::vector<std::pair<std::string, std::string>> PriorityPairs(
    Application app) {
  switch (app) {
    case Application::kFi:
      return {{"Age", "nFI"},
              {"nFI", "nSavings"},
              {"nFI", "nLoans"},
              {"Age", "Gender"},
              {"Period", "Age"}};
    case Application::kYield:
      return {{"Term", "InterestRate"},
              {"Currency", "InterestRate"},
              {"typeFI", "InterestRate"},
              {"Period", "InterestRate"},
              {"Capital", "InterestRate"}};
    case Application::kCredit:
      return {{"Delinquency2020", "Delinquency2021"},
              {"Debt2020", "Debt2021"},
              {"Gender", "Delinquency2020"},
              {"Age2020", "Delinquency2020"}};
  }
  return {};
}

inline constexpr double kPriorityWeight = 4.0;

inline absl::StatusOr<std::vector<WorkloadQuery>> ResolveWorkload(
    const MechanismConfig& mech, Application app, const Codebook& codebook) {
  std::vector<WorkloadQuery> workload;
  if (!mech.workload.empty()) {
    for (std::size_t i = 0; i < mech.workload.size(); ++i) {
      WorkloadQuery q;
      for (const std::string& name : mech.workload[i]) {
        BSYNTH_ASSIGN_OR_RETURN(std::size_t c, codebook.RequireColumn(name));
        q.attrs.push_back(static_cast<int>(c));
      }
      if (!mech.workload_weights.empty()) q.weight = mech.workload_weights[i];
      workload.push_back(std::move(q));
    }
    return workload;
  }
  const int d = static_cast<int>(codebook.columns.size());
  for (int a = 0; a < d; ++a) {
    for (int b = a + 1; b < d; ++b) workload.push_back({{a, b}, 1.0});
  }
  for (const auto& [x, y] : PriorityPairs(app)) {
    auto a = codebook.ColumnIndex(x), b = codebook.ColumnIndex(y);
    if (!a || !b) continue;
    workload.push_back(
        {{static_cast<int>(*a), static_cast<int>(*b)}, kPriorityWeight - 1});
  }
  if (workload.empty()) workload.push_back({{0}, 1.0});
  return workload;
}

inline absl::StatusOr<SynthesisResult> Synthesize(const EncodedDataset& data,
                                                  const PipelineConfig& config,
                                                  Application app, Rng& rng) {
  BSYNTH_ASSIGN_OR_RETURN(
      PrivacyParams params,
      PrivacyParams::Create(config.privacy.epsilon, config.privacy.delta));
  const MechanismConfig& mech = config.mechanism;
  const std::size_t n_out = mech.synthetic_rows >= 0
                                ? static_cast<std::size_t>(mech.synthetic_rows)
                                : data.num_rows();
  switch (mech.name) {
    case Mechanism::kMst: {
      MstOptions options;
      if (config.privacy.selection_fraction) {
        options.selection_fraction = *config.privacy.selection_fraction;
      }
      options.noiseless = mech.noiseless;
      return MstSynthesize(data, params, n_out, rng, options);
    }
    case Mechanism::kAim: {
      AimOptions options;
      options.rounds = mech.rounds;
      if (config.privacy.selection_fraction) {
        options.selection_fraction = *config.privacy.selection_fraction;
      }
      options.noiseless = mech.noiseless;
      BSYNTH_ASSIGN_OR_RETURN(std::vector<WorkloadQuery> workload,
                              ResolveWorkload(mech, app, data.codebook()));
      return AimSynthesize(data, workload, params, n_out, rng, options);
    }
    case Mechanism::kPac: {
      PacConfig pac = mech.pac;
      if (mech.noiseless) pac.sigma_k = 0;
      return PacSynthesize(data, pac, params, n_out, rng);
    }
  }
  return absl::InternalError("unhandled mechanism");
}

inline nlohmann::ordered_json SynthesisLogToJson(const SynthesisLog& log,
                                                 const Codebook& codebook) {
  auto name = [&](int c) { return codebook.columns[c].name; };
  nlohmann::ordered_json j;
  j["mechanism"] = log.mechanism;
  j["selection_epsilon"] = log.selection_epsilon;
  nlohmann::ordered_json edges = nlohmann::ordered_json::array();
  for (const Edge& e : log.edges) edges.push_back({name(e.a), name(e.b)});
  j["tree"] = edges;
  nlohmann::ordered_json measurements = nlohmann::ordered_json::array();
  for (const MeasurementRecord& m : log.measurements) {
    nlohmann::ordered_json attrs = nlohmann::ordered_json::array();
    for (int a : m.attrs) attrs.push_back(name(a));
    measurements.push_back({{"attributes", attrs}, {"sigma", m.sigma}});
  }
  j["measurements"] = measurements;
  nlohmann::ordered_json levels = nlohmann::ordered_json::array();
  for (const PacLevelRecord& l : log.pac_levels) {
    levels.push_back({{"length", l.length},
                      {"sigma", l.sigma},
                      {"threshold", l.threshold},
                      {"candidates", l.candidates},
                      {"observed_survivors", l.observed_survivors},
                      {"spurious", l.spurious}});
  }
  if (!levels.empty()) j["pac_levels"] = levels;
  j["suppressed_cells"] = log.suppressed_cells;
  return j;
}

// ------------------------------------------------------------ evaluation --

struct PlotFile {
  std::string name;
  std::string contents;
};

struct Evaluation {
  nlohmann::ordered_json metrics;
  std::vector<PlotFile> plots;
  // Headline utility error relative to the size of the original product.
  double relative_error = 0;
};

namespace internal {

inline nlohmann::json OptionalNumber(std::optional<double> v) {
  return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

inline std::string OptionalCell(std::optional<double> v) {
  return v ? FormatNumber(*v) : std::string();
}

inline absl::StatusOr<Evaluation> EvaluateFi(const AppInput& input,
                                             const EncodedDataset& original,
                                             const EncodedDataset& synthetic,
                                             const Dataset& decoded) {
  BSYNTH_ASSIGN_OR_RETURN(std::vector<UsageIndicators> orig_ind,
                          BuildUsageIndicators(input.data, input.unbanked));
  BSYNTH_ASSIGN_OR_RETURN(std::vector<UsageIndicators> syn_ind,
                          BuildUsageIndicators(decoded, input.unbanked));
  AlignIndicators(orig_ind, syn_ind);
  BSYNTH_ASSIGN_OR_RETURN(UsageComponent orig_b, PcaUsageComponent(orig_ind));
  BSYNTH_ASSIGN_OR_RETURN(UsageComponent syn_b, PcaUsageComponent(syn_ind));
  const auto orig_map = orig_b.AsMap(), syn_map = syn_b.AsMap();
  BSYNTH_ASSIGN_OR_RETURN(TauResult tau, TauMetric(syn_map, orig_map));
  BSYNTH_ASSIGN_OR_RETURN(UsageLevelShares orig_levels, UsageLevels(original));
  BSYNTH_ASSIGN_OR_RETURN(UsageLevelShares syn_levels, UsageLevels(synthetic));

  Evaluation ev;
  nlohmann::ordered_json& m = ev.metrics;
  m["tau_overall"] = tau.overall;
  nlohmann::ordered_json per_group = nlohmann::ordered_json::array();
  std::string tau_csv = FormatCsvRecord({"age_band", "gender", "tau"});
  for (const auto& [key, t] : tau.per_group) {
    per_group.push_back(
        {{"age_band", key.first}, {"gender", key.second}, {"tau", t}});
    tau_csv += FormatCsvRecord({key.first, key.second, FormatNumber(t)});
  }
  m["tau"] = per_group;
  m["psi"] = {{"original", orig_b.psi}, {"synthetic", syn_b.psi}};
  m["unexplained_variance"] = {{"original", orig_b.residual},
                               {"synthetic", syn_b.residual}};
  std::vector<std::string> warnings = orig_b.warnings;
  warnings.insert(warnings.end(), syn_b.warnings.begin(), syn_b.warnings.end());
  m["warnings"] = warnings;
  m["groups"] = orig_map.size();

  nlohmann::ordered_json levels;
  std::string levels_csv =
      FormatCsvRecord({"indicator", "level", "original", "synthetic"});
  for (const auto& [name, shares] : orig_levels.shares) {
    const auto& syn = syn_levels.shares.at(name);
    nlohmann::ordered_json row;
    for (int l = 0; l < 3; ++l) {
      row[UsageLevelName(l)] = {{"original", shares[l]}, {"synthetic", syn[l]}};
      levels_csv +=
          FormatCsvRecord({name, UsageLevelName(l), FormatNumber(shares[l]),
                           FormatNumber(syn[l])});
    }
    levels[name] = row;
  }
  m["usage_levels"] = levels;

  std::string b_csv = FormatCsvRecord(
      {"period", "age_band", "gender", "original", "synthetic"});
  double mean_b = 0;
  for (const auto& [key, v] : orig_map) {
    b_csv += FormatCsvRecord({key.period, key.age_band, key.gender,
                              FormatNumber(v), FormatNumber(syn_map.at(key))});
    mean_b += std::abs(v);
  }
  mean_b /= std::max<std::size_t>(1, orig_map.size());
  ev.relative_error = mean_b > 0 ? tau.overall / mean_b : 0.0;
  m["relative_error"] = ev.relative_error;
  ev.plots = {{"usage_component.csv", b_csv},
              {"tau.csv", tau_csv},
              {"usage_levels.csv", levels_csv}};
  return ev;
}

struct SeriesKey {
  std::string currency;
  std::string type;
  friend auto operator<=>(const SeriesKey&, const SeriesKey&) = default;
};

inline std::map<SeriesKey, std::map<std::string, const YieldCurve*>>
GroupCurves(const std::vector<YieldCurve>& curves) {
  std::map<SeriesKey, std::map<std::string, const YieldCurve*>> out;
  for (const YieldCurve& c : curves) {
    out[{c.key.currency, c.key.type}][c.key.period] = &c;
  }
  return out;
}

struct SeriesError {
  double upsilon = 0;
  std::map<std::string, double> per_period;
  std::size_t excluded_bins = 0;
  std::size_t unmatched_periods = 0;
  double rms_original = 0;
};

// Largest per-period RMSE over the periods both sides have; periods present
// on one side only, or without overlapping bins, are counted, not scored.
inline std::map<SeriesKey, SeriesError> CompareCurves(
    const std::vector<YieldCurve>& synthetic,
    const std::vector<YieldCurve>& original) {
  auto s = GroupCurves(synthetic), o = GroupCurves(original);
  std::map<SeriesKey, SeriesError> out;
  for (const auto& [series, periods] : o) {
    SeriesError& err = out[series];
    double ss = 0;
    std::size_t count = 0;
    for (const auto& [period, curve] : periods) {
      for (const CurvePoint& p : curve->points) {
        if (!p.present) continue;
        ss += p.wai * p.wai;
        ++count;
      }
      const auto sit = s.find(series);
      if (sit == s.end() || !sit->second.contains(period)) {
        ++err.unmatched_periods;
        continue;
      }
      auto report = YieldRmse({*sit->second.at(period)}, {*curve});
      if (!report.ok()) {
        ++err.unmatched_periods;
        continue;
      }
      err.per_period[period] = report->upsilon;
      err.upsilon = std::max(err.upsilon, report->upsilon);
      err.excluded_bins += report->excluded_bins;
    }
    if (const auto sit = s.find(series); sit != s.end()) {
      for (const auto& [period, curve] : sit->second) {
        if (!periods.contains(period)) ++err.unmatched_periods;
      }
    }
    err.rms_original = count > 0 ? std::sqrt(ss / count) : 0.0;
  }
  return out;
}

// Representative term of a bin for smoothing and parametric fits.
inline double BinMidTerm(std::span<const double> edges, std::size_t b) {
  return 0.5 * (edges[b] + edges[b + 1]);
}

struct CurveFits {
  std::vector<std::optional<double>> lowess;
  std::vector<std::optional<double>> nss;
  std::optional<NssFit> fit;
};

inline CurveFits FitCurve(const YieldCurve& curve,
                          std::span<const double> edges) {
  CurveFits out;
  out.lowess.resize(curve.points.size());
  out.nss.resize(curve.points.size());
  std::vector<double> x, y;
  std::vector<std::size_t> bins;
  std::vector<NssPoint> points;
  for (std::size_t b = 0; b < curve.points.size(); ++b) {
    const CurvePoint& p = curve.points[b];
    if (!p.present) continue;
    x.push_back(BinMidTerm(edges, b));
    y.push_back(p.wai);
    bins.push_back(b);
    points.push_back({x.back(), p.wai, static_cast<double>(p.count)});
  }
  if (x.size() >= 3) {
    auto smooth = Lowess(x, y);
    if (smooth.ok()) {
      for (std::size_t i = 0; i < bins.size(); ++i) {
        out.lowess[bins[i]] = (*smooth)[i];
      }
    }
  }
  auto fit = FitNss(points);
  if (fit.ok()) {
    for (std::size_t b = 0; b < curve.points.size(); ++b) {
      out.nss[b] = NssEval(fit->params, BinMidTerm(edges, b));
    }
    out.fit = *fit;
  }
  return out;
}

inline nlohmann::ordered_json NssToJson(const std::optional<NssFit>& fit) {
  if (!fit) return nullptr;
  const NssParams& p = fit->params;
  return {{"beta0", p.beta0},  {"beta1", p.beta1},
          {"beta2", p.beta2},  {"beta3", p.beta3},
          {"tau1", p.tau1},    {"tau2", p.tau2},
          {"rmse", fit->rmse}, {"svensson_term", fit->svensson_term}};
}

inline absl::StatusOr<Evaluation> EvaluateYield(const AppInput& input,
                                                const EncodedDataset& original,
                                                const EncodedDataset& synthetic,
                                                const Dataset& decoded,
                                                DecodeMode mode) {
  const Codebook& book = original.codebook();
  BSYNTH_ASSIGN_OR_RETURN(std::size_t term_col, book.RequireColumn("Term"));
  std::vector<double> edges = book.columns[term_col].edges;
  if (book.columns[term_col].log_flag) {
    for (double& e : edges) e = std::exp(e);
  }
  BSYNTH_ASSIGN_OR_RETURN(std::vector<YieldCurve> orig_curves,
                          BuildYieldCurves(input.data, edges));
  BSYNTH_ASSIGN_OR_RETURN(std::vector<YieldCurve> syn_curves,
                          BuildYieldCurves(decoded, edges));
  const auto errors = CompareCurves(syn_curves, orig_curves);

  Evaluation ev;
  nlohmann::ordered_json& m = ev.metrics;
  m["term_bins"] = edges.size() - 1;
  nlohmann::ordered_json series = nlohmann::ordered_json::array();
  double upsilon = 0;
  std::size_t excluded = 0, unmatched = 0;
  for (const auto& [key, err] : errors) {
    nlohmann::ordered_json s;
    s["currency"] = key.currency;
    s["type"] = key.type;
    s["upsilon"] = err.upsilon;
    s["per_period"] = err.per_period;
    s["excluded_bins"] = err.excluded_bins;
    s["unmatched_periods"] = err.unmatched_periods;
    s["rms_original"] = err.rms_original;
    const double rel =
        err.rms_original > 0 ? err.upsilon / err.rms_original : 0.0;
    s["relative_error"] = rel;
    series.push_back(s);
    upsilon = std::max(upsilon, err.upsilon);
    ev.relative_error = std::max(ev.relative_error, rel);
    excluded += err.excluded_bins;
    unmatched += err.unmatched_periods;
  }
  m["upsilon"] = upsilon;
  m["excluded_bins"] = excluded;
  m["unmatched_periods"] = unmatched;
  m["series"] = series;

  // Decode-mode sensitivity: the same synthetic codes under the two
  // deterministic decoders.
  nlohmann::ordered_json by_mode;
  for (DecodeMode alt : {DecodeMode::kLeftEdge, DecodeMode::kMidpoint}) {
    double u = 0;
    if (alt == mode) {
      u = upsilon;
    } else {
      Rng unused(0);
      BSYNTH_ASSIGN_OR_RETURN(
          DecodeResult alt_decoded,
          DecodeDataset(synthetic, alt, nullptr, {}, unused));
      BSYNTH_ASSIGN_OR_RETURN(std::vector<YieldCurve> alt_curves,
                              BuildYieldCurves(alt_decoded.data, edges));
      for (const auto& [key, err] : CompareCurves(alt_curves, orig_curves)) {
        u = std::max(u, err.upsilon);
      }
    }
    by_mode[DecodeModeName(alt)] = u;
  }
  m["upsilon_by_decode"] = by_mode;
  m["relative_error"] = ev.relative_error;

  // Plot-ready points with smoothed and parametric fits per curve.
  std::map<CurveKey, const YieldCurve*> syn_by_key;
  for (const YieldCurve& c : syn_curves) syn_by_key[c.key] = &c;
  std::string csv = FormatCsvRecord(
      {"period", "currency", "type", "bin", "term_low", "term_high",
       "wai_original", "wai_synthetic", "capital_original", "capital_synthetic",
       "lowess_original", "lowess_synthetic", "nss_original", "nss_synthetic"});
  nlohmann::ordered_json fits = nlohmann::ordered_json::array();
  for (const YieldCurve& oc : orig_curves) {
    const YieldCurve* sc =
        syn_by_key.contains(oc.key) ? syn_by_key.at(oc.key) : nullptr;
    const CurveFits of = FitCurve(oc, edges);
    const CurveFits sf = sc ? FitCurve(*sc, edges) : CurveFits{};
    fits.push_back({{"period", oc.key.period},
                    {"currency", oc.key.currency},
                    {"type", oc.key.type},
                    {"nss_original", NssToJson(of.fit)},
                    {"nss_synthetic", NssToJson(sf.fit)}});
    for (std::size_t b = 0; b < oc.points.size(); ++b) {
      const CurvePoint& op = oc.points[b];
      const CurvePoint* sp = sc ? &sc->points[b] : nullptr;
      auto opt = [](bool present, double v) {
        return present ? std::optional<double>(v) : std::nullopt;
      };
      csv += FormatCsvRecord(
          {oc.key.period, oc.key.currency, oc.key.type, std::to_string(b),
           FormatNumber(edges[b]), FormatNumber(edges[b + 1]),
           OptionalCell(opt(op.present, op.wai)),
           OptionalCell(opt(sp && sp->present, sp ? sp->wai : 0)),
           OptionalCell(opt(op.present, op.total_capital)),
           OptionalCell(opt(sp && sp->present, sp ? sp->total_capital : 0)),
           OptionalCell(of.lowess[b]),
           OptionalCell(sc ? sf.lowess[b] : std::nullopt),
           OptionalCell(of.nss[b]),
           OptionalCell(sc ? sf.nss[b] : std::nullopt)});
    }
  }
  m["curve_fits"] = fits;
  ev.plots = {{"yield_curves.csv", csv}};
  return ev;
}

inline absl::StatusOr<Evaluation> EvaluateCredit(
    const AppInput& input, const EncodedDataset& original,
    const EncodedDataset& synthetic) {
  Evaluation ev;
  nlohmann::ordered_json& m = ev.metrics;
  nlohmann::ordered_json matrices;
  for (const auto& [kind, from, to] :
       {std::tuple{"debt", "Debt2020", "Debt2021"},
        std::tuple{"delinquency", "Delinquency2020", "Delinquency2021"}}) {
    BSYNTH_ASSIGN_OR_RETURN(TransitionMatrix o,
                            TransitionFromColumns(original, from, to));
    BSYNTH_ASSIGN_OR_RETURN(TransitionMatrix s,
                            TransitionFromColumns(synthetic, from, to));
    BSYNTH_ASSIGN_OR_RETURN(FrobeniusResult f, FrobeniusError(s, o));
    const double norm = FrobeniusNorm(o);
    const double rel = norm > 0 ? f.norm / norm : 0.0;
    matrices[kind] = {{"frobenius", f.norm},
                      {"norm_original", norm},
                      {"relative_error", rel},
                      {"excluded_rows", f.excluded_rows},
                      {"states", o.states.size()}};
    ev.relative_error = std::max(ev.relative_error, rel);
    ev.plots.push_back({absl::StrCat("transition_", kind, "_original.csv"),
                        FormatTransitionCsv(o)});
    ev.plots.push_back({absl::StrCat("transition_", kind, "_synthetic.csv"),
                        FormatTransitionCsv(s)});
  }
  m["matrices"] = matrices;

  BSYNTH_ASSIGN_OR_RETURN(
      DelinquencyRates orig_rates,
      DelinquencyRate(original, "Delinquency2020", "Age2020", "Gender"));
  BSYNTH_ASSIGN_OR_RETURN(
      DelinquencyRates syn_rates,
      DelinquencyRate(synthetic, "Delinquency2020", "Age2020", "Gender"));
  nlohmann::ordered_json rates = nlohmann::ordered_json::array();
  std::string csv =
      FormatCsvRecord({"age_band", "gender", "original", "synthetic"});
  for (const auto& [key, o] : orig_rates) {
    const std::optional<double> s = syn_rates.at(key);
    rates.push_back({{"age_band", key.first},
                     {"gender", key.second},
                     {"original", OptionalNumber(o)},
                     {"synthetic", OptionalNumber(s)}});
    csv += FormatCsvRecord(
        {key.first, key.second, OptionalCell(o), OptionalCell(s)});
  }
  m["delinquency_rates"] = rates;
  if (input.join) {
    m["coverage"] = {{"count", input.join->count_coverage},
                     {"debt", input.join->debt_coverage}};
  }
  m["relative_error"] = ev.relative_error;
  ev.plots.push_back({"delinquency_rates.csv", csv});
  return ev;
}

}  // namespace internal

// `original` is the encoded input; `synthetic` the mechanism output (with
// suppressed cells, if any) and `decoded` its numeric restoration.
inline absl::StatusOr<Evaluation> Evaluate(const AppInput& input,
                                           const EncodedDataset& original,
                                           const EncodedDataset& synthetic,
                                           const Dataset& decoded,
                                           DecodeMode mode) {
  switch (input.app) {
    case Application::kFi:
      return internal::EvaluateFi(input, original, synthetic, decoded);
    case Application::kYield:
      return internal::EvaluateYield(input, original, synthetic, decoded, mode);
    case Application::kCredit:
      return internal::EvaluateCredit(input, original, synthetic);
  }
  return absl::InternalError("unhandled application");
}

// ------------------------------------------------------------------ runs --

struct RunResult {
  Application app = Application::kCredit;
  Strategy strategy = Strategy::kCbp;
  AppInput input;
  BinningRules rules;
  EncodedDataset encoded;
  SynthesisResult synthetic;
  DecodeResult decoded;
  Evaluation evaluation;
};

inline nlohmann::ordered_json ReportJson(const PipelineConfig& config,
                                         const RunResult& run) {
  nlohmann::ordered_json r;
  r["application"] = ApplicationName(run.app);
  r["strategy"] = StrategyName(run.strategy);
  r["mechanism"] = MechanismName(config.mechanism.name);
  r["epsilon"] = config.privacy.epsilon;
  r["delta"] = config.privacy.delta;
  r["noiseless"] = config.mechanism.noiseless;
  r["decode_mode"] = DecodeModeName(config.decode.mode);
  r["seed"] = config.seed;
  r["rows"] = {{"original", run.input.data.num_rows()},
               {"synthetic", run.synthetic.data.num_rows()},
               {"decoded", run.decoded.data.num_rows()},
               {"dropped", run.decoded.dropped_rows},
               {"suppressed_cells", run.synthetic.log.suppressed_cells}};
  std::vector<int> domains = run.encoded.codebook().domain_sizes();
  nlohmann::ordered_json dom;
  for (std::size_t c = 0; c < domains.size(); ++c) {
    dom[run.encoded.codebook().columns[c].name] = domains[c];
  }
  r["domains"] = dom;
  r["metrics"] = run.evaluation.metrics;
  return r;
}

inline absl::StatusOr<RunResult> RunApplication(const PipelineConfig& config,
                                                Application app,
                                                Strategy strategy,
                                                StageLog& log) {
  RunResult run;
  run.app = app;
  run.strategy = strategy;
  const std::string tag =
      absl::StrCat(ApplicationName(app), "/", StrategyName(strategy), ":");
  BSYNTH_ASSIGN_OR_RETURN(run.input, RunStage(log, tag + "input", [&] {
                            return LoadApplicationInput(config.input, app);
                          }));
  BSYNTH_ASSIGN_OR_RETURN(
      run.encoded,
      RunStage(log, tag + "encode", [&]() -> absl::StatusOr<EncodedDataset> {
        BSYNTH_ASSIGN_OR_RETURN(
            run.rules,
            ResolveRules(run.input.data, app, strategy, config.overrides));
        return EncodeDataset(run.input.data, run.rules);
      }));
  Rng synth_rng = StreamRng(config.seed, Stream::kSynthesis);
  BSYNTH_ASSIGN_OR_RETURN(run.synthetic, RunStage(log, tag + "synthesize", [&] {
                            return Synthesize(run.encoded, config, app,
                                              synth_rng);
                          }));
  Rng decode_rng = StreamRng(config.seed, Stream::kDecode);
  BSYNTH_ASSIGN_OR_RETURN(run.decoded, RunStage(log, tag + "decode", [&] {
                            return DecodeDataset(
                                run.synthetic.data, config.decode.mode,
                                &run.input.data, config.decode.kde, decode_rng);
                          }));
  BSYNTH_ASSIGN_OR_RETURN(run.evaluation, RunStage(log, tag + "evaluate", [&] {
                            return Evaluate(
                                run.input, run.encoded, run.synthetic.data,
                                run.decoded.data, config.decode.mode);
                          }));
  return run;
}

// ------------------------------------------------------------- artifacts --

inline std::string Sha256Hex(std::string_view data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr);
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(kHex[digest[i] >> 4]);
    out.push_back(kHex[digest[i] & 15]);
  }
  return out;
}

inline absl::Status WriteArtifact(const std::filesystem::path& path,
                                  std::string_view contents) {
  std::error_code ec;
  std::filesystem::create_directories(path.parent_path(), ec);
  if (ec) {
    return absl::PermissionDeniedError(absl::StrCat(
        "cannot create '", path.parent_path().string(), "': ", ec.message()));
  }
  return WriteFile(path.string(), contents);
}

inline std::string DumpJson(const nlohmann::ordered_json& j) {
  return j.dump(2) + "\n";
}

inline absl::Status WriteInputArtifacts(const AppInput& input,
                                        const std::filesystem::path& dir) {
  BSYNTH_RETURN_IF_ERROR(
      WriteArtifact(dir / "original.csv", FormatDataset(input.data)));
  BSYNTH_RETURN_IF_ERROR(
      WriteArtifact(dir / "original.schema.json",
                    DumpJson(SchemaToJson(input.data.schema()))));
  if (input.app == Application::kFi) {
    BSYNTH_RETURN_IF_ERROR(
        WriteArtifact(dir / "unbanked.csv", FormatUnbankedCsv(input.unbanked)));
  }
  return absl::OkStatus();
}

inline absl::Status WriteRunArtifacts(const PipelineConfig& config,
                                      const RunResult& run,
                                      const std::filesystem::path& dir) {
  BSYNTH_RETURN_IF_ERROR(WriteInputArtifacts(run.input, dir));
  const Codebook& book = run.encoded.codebook();
  BSYNTH_RETURN_IF_ERROR(
      WriteArtifact(dir / "codebook.json", DumpJson(CodebookToJson(book))));
  BSYNTH_RETURN_IF_ERROR(
      WriteArtifact(dir / "encoded.csv", FormatEncoded(run.encoded)));
  BSYNTH_RETURN_IF_ERROR(WriteArtifact(dir / "synthetic_encoded.csv",
                                       FormatEncoded(run.synthetic.data)));
  BSYNTH_RETURN_IF_ERROR(
      WriteArtifact(dir / "synthesis_log.json",
                    DumpJson(SynthesisLogToJson(run.synthetic.log, book))));
  BSYNTH_RETURN_IF_ERROR(
      WriteArtifact(dir / "synthetic.csv", FormatDataset(run.decoded.data)));
  BSYNTH_RETURN_IF_ERROR(
      WriteArtifact(dir / "report.json", DumpJson(ReportJson(config, run))));
  for (const PlotFile& plot : run.evaluation.plots) {
    BSYNTH_RETURN_IF_ERROR(
        WriteArtifact(dir / "plots" / plot.name, plot.contents));
  }
  return absl::OkStatus();
}

// Lists every file under `dir` except the manifest itself, with its hash.
inline absl::StatusOr<nlohmann::ordered_json> ArtifactList(
    const std::filesystem::path& dir) {
  std::vector<std::filesystem::path> files;
  std::error_code ec;
  for (auto it = std::filesystem::recursive_directory_iterator(dir, ec);
       !ec && it != std::filesystem::recursive_directory_iterator();
       it.increment(ec)) {
    if (it->is_regular_file() && it->path().filename() != "manifest.json") {
      files.push_back(it->path());
    }
  }
  if (ec) {
    return absl::InternalError(
        absl::StrCat("cannot list '", dir.string(), "': ", ec.message()));
  }
  std::sort(files.begin(), files.end());
  nlohmann::ordered_json list = nlohmann::ordered_json::array();
  for (const auto& f : files) {
    BSYNTH_ASSIGN_OR_RETURN(std::string contents, ReadFile(f.string()));
    list.push_back(
        {{"path", std::filesystem::relative(f, dir).generic_string()},
         {"bytes", contents.size()},
         {"sha256", Sha256Hex(contents)}});
  }
  return list;
}

struct ManifestExtras {
  std::string command;
  nlohmann::ordered_json synthesis = nlohmann::ordered_json::array();
  nlohmann::ordered_json metrics = nlohmann::ordered_json::object();
  std::string error;
};

// Writes manifest.json into `dir`; also called after a failed stage so the
// manifest shows how far the run got.
inline absl::Status WriteManifest(const PipelineConfig& config,
                                  const StageLog& log,
                                  const ManifestExtras& extras,
                                  const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  nlohmann::ordered_json m;
  m["tool"] = "bsynth";
  m["version"] = kBsynthVersion;
  m["command"] = extras.command;
  m["status"] = extras.error.empty() ? "ok" : "failed";
  if (!extras.error.empty()) m["error"] = extras.error;
  m["config"] = PipelineConfigToJson(config);
  nlohmann::ordered_json stages = nlohmann::ordered_json::array();
  for (const StageRecord& s : log) {
    nlohmann::ordered_json st = {
        {"name", s.name}, {"seconds", s.seconds}, {"ok", s.ok}};
    if (!s.ok) st["error"] = s.error;
    stages.push_back(st);
  }
  m["stages"] = stages;
  m["synthesis"] = extras.synthesis;
  m["metrics"] = extras.metrics;
  BSYNTH_ASSIGN_OR_RETURN(m["artifacts"], ArtifactList(dir));
  return WriteArtifact(dir / "manifest.json", DumpJson(m));
}

// ---------------------------------------------------------------- compare --

namespace internal {

// Scalar utility errors per application, lower is better.
inline std::vector<std::pair<std::string, double>> HeadlineMetrics(
    const RunResult& run) {
  const auto& m = run.evaluation.metrics;
  switch (run.app) {
    case Application::kFi:
      return {{"tau", m["tau_overall"].get<double>()}};
    case Application::kYield: {
      std::vector<std::pair<std::string, double>> out = {
          {"upsilon", m["upsilon"].get<double>()}};
      for (const auto& s : m["series"]) {
        out.push_back(
            {absl::StrCat("upsilon_", s["currency"].get<std::string>(), "_",
                          s["type"].get<std::string>()),
             s["upsilon"].get<double>()});
      }
      return out;
    }
    case Application::kCredit:
      return {{"deb", m["matrices"]["debt"]["frobenius"].get<double>()},
              {"del", m["matrices"]["delinquency"]["frobenius"].get<double>()}};
  }
  return {};
}

}  // namespace internal

struct Comparison {
  nlohmann::ordered_json report;
  std::string csv;
  std::vector<RunResult> runs;
};

// Runs every configured application under both comparison strategies with
// the shared seed. Columns are named after the strategies ("#2" marks a
// repeated strategy).
inline absl::StatusOr<Comparison> CompareStrategies(
    const PipelineConfig& config, StageLog& log) {
  Comparison out;
  std::vector<std::string> columns;
  for (Strategy s : config.compare) {
    std::string name = StrategyName(s);
    if (std::find(columns.begin(), columns.end(), name) != columns.end()) {
      name += "#2";
    }
    columns.push_back(name);
  }
  nlohmann::ordered_json apps;
  out.csv = FormatCsvRecord(
      {"application", "metric", columns[0], columns[1], "winner"});
  std::map<Application, std::vector<double>> relative;
  for (Application app : config.applications) {
    std::vector<RunResult> runs;
    for (Strategy s : config.compare) {
      BSYNTH_ASSIGN_OR_RETURN(RunResult run,
                              RunApplication(config, app, s, log));
      runs.push_back(std::move(run));
    }
    const auto a = internal::HeadlineMetrics(runs[0]);
    const auto b = internal::HeadlineMetrics(runs[1]);
    nlohmann::ordered_json rows = nlohmann::ordered_json::array();
    std::map<std::string, double> bm(b.begin(), b.end());
    for (const auto& [metric, va] : a) {
      if (!bm.contains(metric)) continue;
      const double vb = bm.at(metric);
      const std::string winner =
          va < vb ? columns[0] : (vb < va ? columns[1] : "tie");
      nlohmann::ordered_json row;
      row["metric"] = metric;
      row[columns[0]] = va;
      row[columns[1]] = vb;
      row["winner"] = winner;
      rows.push_back(row);
      out.csv += FormatCsvRecord({ApplicationName(app), metric,
                                  FormatNumber(va), FormatNumber(vb), winner});
    }
    nlohmann::ordered_json entry;
    entry["rows"] = rows;
    entry["relative_error"] = {{columns[0], runs[0].evaluation.relative_error},
                               {columns[1], runs[1].evaluation.relative_error}};
    entry["excluded"] = {
        {columns[0], runs[0].evaluation.metrics.value(
                         "excluded_bins", nlohmann::ordered_json(0))},
        {columns[1], runs[1].evaluation.metrics.value(
                         "excluded_bins", nlohmann::ordered_json(0))}};
    entry["dropped_rows"] = {{columns[0], runs[0].decoded.dropped_rows},
                             {columns[1], runs[1].decoded.dropped_rows}};
    apps[ApplicationName(app)] = entry;
    relative[app] = {runs[0].evaluation.relative_error,
                     runs[1].evaluation.relative_error};
    for (auto& r : runs) out.runs.push_back(std::move(r));
  }
  out.report["mechanism"] = MechanismName(config.mechanism.name);
  out.report["epsilon"] = config.privacy.epsilon;
  out.report["delta"] = config.privacy.delta;
  out.report["seed"] = config.seed;
  out.report["strategies"] = columns;
  out.report["applications"] = apps;
  // Frequency-table product (credit) against the decode-dependent one
  // (yield) under the same mechanism and budget.
  if (relative.contains(Application::kCredit) &&
      relative.contains(Application::kYield)) {
    nlohmann::ordered_json fd;
    for (std::size_t i = 0; i < 2; ++i) {
      const double c = relative[Application::kCredit][i];
      const double y = relative[Application::kYield][i];
      fd[columns[i]] = {{"credit_relative_error", c},
                        {"yield_relative_error", y},
                        {"credit_smaller", c < y}};
    }
    out.report["frequency_vs_decode"] = fd;
  }
  return out;
}

}  // namespace bsynth

#endif  // BSYNTH_PIPELINE_H_
