#pragma once

// JSON configuration: strict readers (unknown keys rejected with their path)
// for the economy, sweep, cutoff monotonicity check, metrics, classifier,
// synthetic panel and estimation sections, plus the panel manifest.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <type_traits>
#include <utility>
#include <vector>

#include <json.hpp>

#include "taskmarket/classifier.hpp"
#include "taskmarket/cutoff.hpp"
#include "taskmarket/econometrics.hpp"
#include "taskmarket/error.hpp"
#include "taskmarket/io/csv.hpp"
#include "taskmarket/metrics.hpp"
#include "taskmarket/model.hpp"
#include "taskmarket/rng.hpp"
#include "taskmarket/synthgen.hpp"

namespace taskmarket::io {

using Json = nlohmann::ordered_json;

// Walks one JSON object, recording which keys were consumed.
class ObjectReader {
 public:
  ObjectReader(const Json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(where() + ": expected an object");
  }
  ~ObjectReader() = default;
  ObjectReader(const ObjectReader&) = delete;
  ObjectReader& operator=(const ObjectReader&) = delete;

  bool has(std::string_view key) const { return j_.contains(std::string(key)); }

  const Json& at(std::string_view key) {
    if (!has(key)) throw ConfigError(child(key) + ": required field missing");
    used_.insert(std::string(key));
    return j_.at(std::string(key));
  }

  std::string child(std::string_view key) const { return path_.empty() ? std::string(key) : path_ + "." + std::string(key); }

  template <class T>
  void get(std::string_view key, T& out) {
    if (!has(key)) return;
    out = convert<T>(at(key), child(key));
  }

  template <class T>
  T require(std::string_view key) {
    if (!has(key)) throw ConfigError(child(key) + ": required field missing");
    return convert<T>(at(key), child(key));
  }

  // Throws on the first key that was never read.
  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (!used_.contains(it.key())) throw ConfigError(child(it.key()) + ": unknown key");
    }
  }

  template <class T>
  static T convert(const Json& v, const std::string& path) {
    if constexpr (std::is_same_v<T, bool>) {
      if (!v.is_boolean()) throw ConfigError(path + ": expected a boolean");
      return v.get<bool>();
    } else if constexpr (std::is_same_v<T, std::string>) {
      if (!v.is_string()) throw ConfigError(path + ": expected a string");
      return v.get<std::string>();
    } else if constexpr (std::is_floating_point_v<T>) {
      if (!v.is_number()) throw ConfigError(path + ": expected a number");
      return v.get<T>();
    } else if constexpr (std::is_unsigned_v<T>) {
      if (!v.is_number_integer() || (v.is_number_integer() && !v.is_number_unsigned() && v.get<std::int64_t>() < 0)) {
        throw ConfigError(path + ": expected a nonnegative integer");
      }
      return static_cast<T>(v.get<std::uint64_t>());
    } else if constexpr (std::is_integral_v<T>) {
      if (!v.is_number_integer()) throw ConfigError(path + ": expected an integer");
      return static_cast<T>(v.get<std::int64_t>());
    } else if constexpr (std::is_same_v<T, std::vector<double>>) {
      if (!v.is_array()) throw ConfigError(path + ": expected an array of numbers");
      T out;
      for (std::size_t i = 0; i < v.size(); ++i) out.push_back(convert<double>(v[i], path + "[" + std::to_string(i) + "]"));
      return out;
    } else if constexpr (std::is_same_v<T, std::vector<std::string>>) {
      if (!v.is_array()) throw ConfigError(path + ": expected an array of strings");
      T out;
      for (std::size_t i = 0; i < v.size(); ++i) {
        out.push_back(convert<std::string>(v[i], path + "[" + std::to_string(i) + "]"));
      }
      return out;
    } else {
      static_assert(sizeof(T) == 0, "unsupported config type");
    }
  }

 private:
  std::string where() const { return path_.empty() ? "config" : path_; }

  const Json& j_;
  std::string path_;
  std::set<std::string> used_;
};

inline Json parse_json(std::string_view text, const std::string& source) {
  try {
    return Json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(source + ": invalid JSON: " + e.what());
  }
}

inline Json load_json(const std::filesystem::path& path) { return parse_json(read_file(path), path.string()); }

// ---------------------------------------------------------------------------
// economy

inline OccupationSpec read_occupation(const Json& j, const std::string& path) {
  ObjectReader r(j, path);
  OccupationSpec occ;
  const auto kind = r.require<std::string>("kind");
  const auto parsed = parse_occupation(kind);
  if (!parsed) throw ConfigError(r.child("kind") + ": unknown occupation '" + kind + "'");
  occ.kind = *parsed;
  {
    ObjectReader lam(r.at("lambda"), r.child("lambda"));
    lam.get("manual", occ.lambda_m);
    lam.get("routine", occ.lambda_r);
    lam.get("abstract", occ.lambda_a);
    lam.finish();
  }
  occ.wage = r.require<double>("wage");
  r.finish();
  return occ;
}

inline EconomyConfig read_economy(const Json& j, const std::string& path) {
  ObjectReader r(j, path);
  EconomyConfig econ;
  if (r.has("composition_mode")) {
    const auto mode = r.require<std::string>("composition_mode");
    if (mode == "raw") {
      econ.composition_mode = CompositionMode::Raw;
    } else if (mode == "normalized") {
      econ.composition_mode = CompositionMode::Normalized;
    } else {
      throw ConfigError(r.child("composition_mode") + ": expected \"raw\" or \"normalized\"");
    }
  }
  const Json& occs = r.at("occupations");
  if (!occs.is_array()) throw ConfigError(r.child("occupations") + ": expected an array");
  for (std::size_t i = 0; i < occs.size(); ++i) {
    econ.occupations.push_back(read_occupation(occs[i], r.child("occupations") + "[" + std::to_string(i) + "]"));
  }
  {
    ObjectReader d(r.at("digital"), r.child("digital"));
    d.get("kappa_bar", econ.digital.kappa_bar);
    d.get("theta", econ.digital.theta);
    d.get("gamma", econ.digital.gamma);
    d.get("rental", econ.digital.rental);
    d.finish();
  }
  r.finish();
  econ.validate();
  return econ;
}

inline Json economy_to_json(const EconomyConfig& econ) {
  Json j;
  j["composition_mode"] = std::string(to_string(econ.composition_mode));
  j["occupations"] = Json::array();
  for (const auto& occ : econ.occupations) {
    Json o;
    o["kind"] = std::string(to_string(occ.kind));
    o["lambda"] = {{"manual", occ.lambda_m}, {"routine", occ.lambda_r}, {"abstract", occ.lambda_a}};
    o["wage"] = occ.wage;
    j["occupations"].push_back(o);
  }
  j["digital"] = {{"kappa_bar", econ.digital.kappa_bar},
                  {"theta", econ.digital.theta},
                  {"gamma", econ.digital.gamma},
                  {"rental", econ.digital.rental}};
  return j;
}

// ---------------------------------------------------------------------------
// sweep

struct SweepConfig {
  std::vector<double> thetas;
  SweepOptions options;
};

inline SweepConfig read_sweep(const Json& j, const std::string& path) {
  ObjectReader r(j, path);
  SweepConfig cfg;
  const bool has_list = r.has("theta");
  const bool has_range = r.has("theta_min") || r.has("theta_max") || r.has("theta_count");
  if (has_list == has_range) {
    throw ConfigError(path + ": give either \"theta\" (a list) or theta_min/theta_max/theta_count");
  }
  if (has_list) {
    cfg.thetas = r.require<std::vector<double>>("theta");
    if (cfg.thetas.empty()) throw ConfigError(r.child("theta") + ": theta list is empty");
  } else {
    const auto lo = r.require<double>("theta_min");
    const auto hi = r.require<double>("theta_max");
    const auto n = r.require<std::size_t>("theta_count");
    if (n == 0) throw ConfigError(r.child("theta_count") + ": must be at least 1");
    if (n > 1 && !(hi > lo)) throw ConfigError(r.child("theta_max") + ": must exceed theta_min");
    for (std::size_t i = 0; i < n; ++i) {
      cfg.thetas.push_back(n == 1 ? lo : lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1));
    }
  }
  for (std::size_t i = 0; i < cfg.thetas.size(); ++i) {
    if (!(cfg.thetas[i] >= 0.0) || !std::isfinite(cfg.thetas[i])) {
      throw ConfigError(path + ".theta[" + std::to_string(i) + "]: must be finite and nonnegative");
    }
    if (i > 0 && !(cfg.thetas[i] > cfg.thetas[i - 1])) {
      throw ConfigError(path + ".theta[" + std::to_string(i) + "]: values must be strictly increasing");
    }
  }
  r.get("scan_points", cfg.options.scan_points);
  r.get("tolerance", cfg.options.tolerance);
  if (r.has("regularity")) {
    const auto reg = r.require<std::string>("regularity");
    if (reg == "strict") {
      cfg.options.cutoff.regularity = RegularityCheck::Strict;
    } else if (reg == "non_decreasing") {
      cfg.options.cutoff.regularity = RegularityCheck::NonDecreasing;
    } else {
      throw ConfigError(r.child("regularity") + ": expected \"strict\" or \"non_decreasing\"");
    }
  }
  if (cfg.options.scan_points < 2) throw ConfigError(r.child("scan_points") + ": must be at least 2");
  if (!(cfg.options.tolerance > 0.0)) throw ConfigError(r.child("tolerance") + ": must be positive");
  r.finish();
  return cfg;
}

// ---------------------------------------------------------------------------
// cutoff monotonicity check

struct Prop1Config {
  std::size_t draws = 200;
  std::optional<std::uint64_t> seed;
  Prop1Options options;
};

inline Prop1Config read_prop1(const Json& j, const std::string& path) {
  ObjectReader r(j, path);
  Prop1Config cfg;
  r.get("draws", cfg.draws);
  if (r.has("seed")) cfg.seed = r.require<std::uint64_t>("seed");
  r.get("theta_points", cfg.options.theta_points);
  r.get("theta_min", cfg.options.theta_min);
  r.get("theta_max", cfg.options.theta_max);
  r.get("fd_relative_step", cfg.options.fd_relative_step);
  r.get("max_relative_error", cfg.options.max_relative_error);
  r.get("threads", cfg.options.threads);
  r.finish();
  if (cfg.options.theta_points < 2) throw ConfigError(r.child("theta_points") + ": must be at least 2");
  if (!(cfg.options.theta_min > 0.0 && cfg.options.theta_max > cfg.options.theta_min)) {
    throw ConfigError(path + ": need 0 < theta_min < theta_max");
  }
  return cfg;
}

// ---------------------------------------------------------------------------
// metrics

struct MetricsConfig {
  TaskLoadings loadings;
  double winsor_lower = 0.01;
  double winsor_upper = 0.99;
};

inline MetricsConfig read_metrics(const Json& j, const std::string& path) {
  ObjectReader r(j, path);
  MetricsConfig cfg;
  if (r.has("loadings")) {
    ObjectReader l(r.at("loadings"), r.child("loadings"));
    for (auto k : kAllOccupations) {
      const std::string name(to_string(k));
      if (!l.has(name)) continue;
      ObjectReader row(l.at(name), l.child(name));
      TaskLoading t = cfg.loadings[k];
      row.get("routine", t.routine);
      row.get("abstract", t.abstract);
      row.get("manual", t.manual);
      row.finish();
      try {
        cfg.loadings.set(k, t);
      } catch (const DomainError& e) {
        throw ConfigError(l.child(name) + ": " + e.what());
      }
    }
    l.finish();
  }
  if (r.has("winsor")) {
    ObjectReader w(r.at("winsor"), r.child("winsor"));
    w.get("lower", cfg.winsor_lower);
    w.get("upper", cfg.winsor_upper);
    w.finish();
    if (!(cfg.winsor_lower >= 0.0 && cfg.winsor_lower < cfg.winsor_upper && cfg.winsor_upper <= 1.0)) {
      throw ConfigError(r.child("winsor") + ": need 0 <= lower < upper <= 1");
    }
  }
  r.finish();
  return cfg;
}

// ---------------------------------------------------------------------------
// classifier

struct ClassifierConfig {
  std::optional<std::filesystem::path> input;
  std::optional<std::filesystem::path> stub;
  std::optional<std::filesystem::path> lexicon;
  BatchPlan plan;
};

inline ClassifierConfig read_classifier(const Json& j, const std::string& path,
                                        const std::filesystem::path& base) {
  ObjectReader r(j, path);
  ClassifierConfig cfg;
  auto rel = [&](const std::string& p) { return std::filesystem::path(p).is_absolute() ? std::filesystem::path(p) : base / p; };
  if (r.has("input")) cfg.input = rel(r.require<std::string>("input"));
  if (r.has("stub")) cfg.stub = rel(r.require<std::string>("stub"));
  if (r.has("lexicon")) cfg.lexicon = rel(r.require<std::string>("lexicon"));
  r.get("batch_size", cfg.plan.batch_size);
  r.get("max_concurrency", cfg.plan.max_concurrency);
  if (cfg.plan.batch_size < 1) throw ConfigError(r.child("batch_size") + ": must be at least 1");
  if (cfg.plan.max_concurrency < 1) throw ConfigError(r.child("max_concurrency") + ": must be at least 1");
  r.finish();
  return cfg;
}

// Lexicon file: {"management": ["manager", ...], ..., "physical": [...]}.
// Every category must be present.
inline Lexicon read_lexicon(const Json& j, const std::string& path) {
  ObjectReader r(j, path);
  Lexicon lex;
  for (auto c : kAllCategories) {
    const std::string name(to_string(c));
    auto phrases = r.require<std::vector<std::string>>(name);
    try {
      lex.set(c, std::move(phrases));
    } catch (const Error& e) {
      throw ConfigError(r.child(name) + ": " + e.what());
    }
  }
  r.finish();
  return lex;
}

// ---------------------------------------------------------------------------
// synthetic panel

inline SynthConfig read_synth(const Json& j, const std::string& path) {
  ObjectReader r(j, path);
  SynthConfig cfg;
  r.get("n_firms", cfg.n_firms);
  r.get("n_years", cfg.n_years);
  r.get("first_year", cfg.first_year);
  r.get("n_cities", cfg.n_cities);
  r.get("n_industries", cfg.n_industries);
  r.get("n_provinces", cfg.n_provinces);
  if (r.has("theta")) {
    ObjectReader t(r.at("theta"), r.child("theta"));
    t.get("base", cfg.theta.base);
    t.get("trend", cfg.theta.trend);
    t.get("firm_sd", cfg.theta.firm_sd);
    t.get("city_sd", cfg.theta.city_sd);
    t.get("persistence", cfg.theta.persistence);
    t.get("innovation_sd", cfg.theta.innovation_sd);
    t.get("floor", cfg.theta.floor);
    t.get("endogenous_sd", cfg.theta.endogenous_sd);
    t.get("endogenous_loading", cfg.theta.endogenous_loading);
    t.finish();
  }
  if (r.has("digital")) {
    ObjectReader d(r.at("digital"), r.child("digital"));
    d.get("offset", cfg.digital.offset);
    d.get("scale", cfg.digital.scale);
    d.finish();
  }
  if (r.has("postings")) {
    ObjectReader p(r.at("postings"), r.child("postings"));
    p.get("log_mean", cfg.postings.log_mean);
    p.get("log_sd", cfg.postings.log_sd);
    p.finish();
  }
  if (r.has("share_mode")) {
    const auto mode = r.require<std::string>("share_mode");
    const auto parsed = parse_share_mode(mode);
    if (!parsed) throw ConfigError(r.child("share_mode") + ": expected \"structural\" or \"linearized\"");
    cfg.share_mode = *parsed;
  }
  r.get("share_noise_sd", cfg.share_noise_sd);
  r.get("scan_points", cfg.scan_points);
  r.get("seed", cfg.seed);
  r.finish();
  cfg.validate();
  return cfg;
}

inline Json synth_to_json(const SynthConfig& cfg) {
  Json j;
  j["n_firms"] = cfg.n_firms;
  j["n_years"] = cfg.n_years;
  j["first_year"] = cfg.first_year;
  j["n_cities"] = cfg.n_cities;
  j["n_industries"] = cfg.n_industries;
  j["n_provinces"] = cfg.n_provinces;
  j["theta"] = {{"base", cfg.theta.base},
                {"trend", cfg.theta.trend},
                {"firm_sd", cfg.theta.firm_sd},
                {"city_sd", cfg.theta.city_sd},
                {"persistence", cfg.theta.persistence},
                {"innovation_sd", cfg.theta.innovation_sd},
                {"floor", cfg.theta.floor},
                {"endogenous_sd", cfg.theta.endogenous_sd},
                {"endogenous_loading", cfg.theta.endogenous_loading}};
  j["digital"] = {{"offset", cfg.digital.offset}, {"scale", cfg.digital.scale}};
  j["postings"] = {{"log_mean", cfg.postings.log_mean}, {"log_sd", cfg.postings.log_sd}};
  j["share_mode"] = std::string(to_string(cfg.share_mode));
  j["share_noise_sd"] = cfg.share_noise_sd;
  j["scan_points"] = cfg.scan_points;
  j["seed"] = cfg.seed;
  return j;
}

inline constexpr std::string_view kGeneratorName = "taskmarket-synthgen/1";

inline Json manifest_to_json(const SynthConfig& cfg, const EconomyConfig& econ, const SynthTruth& truth,
                             std::size_t rows) {
  Json j;
  j["generator"] = std::string(kGeneratorName);
  j["rng"] = std::string(Rng::kName);
  j["seed"] = cfg.seed;
  j["rows"] = rows;
  j["synth"] = synth_to_json(cfg);
  j["economy"] = economy_to_json(econ);
  Json t;
  t["theta_ref"] = truth.theta_ref;
  for (auto k : kAllOccupations) {
    const std::string name(to_string(k));
    t["share"][name] = truth.share[index_of(k)];
    t["share_per_theta"][name] = truth.share_per_theta[index_of(k)];
    t["share_per_digital"][name] = truth.share_per_digital[index_of(k)];
  }
  t["hhi_per_digital"] = truth.hhi_per_digital;
  t["score_per_digital"] = {{"routine", truth.score_per_digital.routine},
                            {"abstract", truth.score_per_digital.abstract},
                            {"manual", truth.score_per_digital.manual}};
  j["truth"] = t;
  return j;
}

struct Manifest {
  SynthConfig synth;
  EconomyConfig economy;
};

// Reads back the generating configuration; the truth block is informational.
inline Manifest read_manifest(const Json& j, const std::string& path) {
  ObjectReader r(j, path);
  const auto generator = r.require<std::string>("generator");
  if (generator != kGeneratorName) throw ConfigError(r.child("generator") + ": unsupported generator '" + generator + "'");
  const auto rng = r.require<std::string>("rng");
  if (rng != Rng::kName) throw ConfigError(r.child("rng") + ": unsupported generator '" + rng + "'");
  Manifest m;
  m.synth = read_synth(r.at("synth"), r.child("synth"));
  m.economy = read_economy(r.at("economy"), r.child("economy"));
  if (r.require<std::uint64_t>("seed") != m.synth.seed) throw ConfigError(r.child("seed") + ": disagrees with synth.seed");
  (void)r.at("rows");
  (void)r.at("truth");
  r.finish();
  return m;
}

// ---------------------------------------------------------------------------
// estimation

inline DesignSpec read_design_spec(const Json& j, const std::string& path) {
  ObjectReader r(j, path);
  DesignSpec spec;
  spec.name = r.require<std::string>("name");
  spec.outcome = r.require<std::string>("outcome");
  spec.regressors = r.require<std::vector<std::string>>("regressors");
  r.get("fe", spec.fe_factors);
  if (r.has("cluster")) {
    const Json& c = r.at("cluster");
    spec.cluster = c.is_string() ? std::vector<std::string>{c.get<std::string>()}
                                 : ObjectReader::convert<std::vector<std::string>>(c, r.child("cluster"));
    if (spec.cluster.size() > 2) throw ConfigError(r.child("cluster") + ": at most two factors");
  }
  if (r.has("iv")) {
    ObjectReader iv(r.at("iv"), r.child("iv"));
    IvSpec s;
    s.endogenous = iv.require<std::string>("endogenous");
    s.instruments = iv.require<std::vector<std::string>>("instruments");
    if (s.instruments.empty()) throw ConfigError(iv.child("instruments") + ": at least one instrument required");
    iv.finish();
    spec.iv = s;
  }
  r.finish();
  if (spec.regressors.empty()) throw ConfigError(r.child("regressors") + ": at least one regressor required");
  return spec;
}

struct EstimationConfig {
  std::optional<std::filesystem::path> panel;
  std::vector<DesignSpec> specs;
};

inline EstimationConfig read_estimation(const Json& j, const std::string& path, const std::filesystem::path& base) {
  ObjectReader r(j, path);
  EstimationConfig cfg;
  if (r.has("panel")) {
    const std::filesystem::path p = r.require<std::string>("panel");
    cfg.panel = p.is_absolute() ? p : base / p;
  }
  const Json& specs = r.at("specs");
  if (!specs.is_array() || specs.empty()) throw ConfigError(r.child("specs") + ": expected a non-empty array");
  for (std::size_t i = 0; i < specs.size(); ++i) {
    cfg.specs.push_back(read_design_spec(specs[i], r.child("specs") + "[" + std::to_string(i) + "]"));
  }
  r.finish();
  return cfg;
}

// ---------------------------------------------------------------------------
// whole file

struct RunConfig {
  std::optional<EconomyConfig> economy;
  std::optional<SweepConfig> sweep;
  std::optional<Prop1Config> prop1;
  std::optional<MetricsConfig> metrics;
  std::optional<ClassifierConfig> classifier;
  std::optional<SynthConfig> synth;
  std::optional<EstimationConfig> estimation;
  std::optional<std::filesystem::path> output_dir;
};

// Relative paths inside the file resolve against its directory.
inline RunConfig read_run_config(const Json& j, const std::filesystem::path& base) {
  ObjectReader r(j, "");
  RunConfig cfg;
  if (r.has("economy")) cfg.economy = read_economy(r.at("economy"), "economy");
  if (r.has("sweep")) cfg.sweep = read_sweep(r.at("sweep"), "sweep");
  if (r.has("prop1")) cfg.prop1 = read_prop1(r.at("prop1"), "prop1");
  if (r.has("metrics")) cfg.metrics = read_metrics(r.at("metrics"), "metrics");
  if (r.has("classifier")) cfg.classifier = read_classifier(r.at("classifier"), "classifier", base);
  if (r.has("synth")) cfg.synth = read_synth(r.at("synth"), "synth");
  if (r.has("estimation")) cfg.estimation = read_estimation(r.at("estimation"), "estimation", base);
  if (r.has("output_dir")) {
    const std::filesystem::path p = r.require<std::string>("output_dir");
    cfg.output_dir = p.is_absolute() ? p : base / p;
  }
  r.finish();
  return cfg;
}

inline RunConfig load_run_config(const std::filesystem::path& path) {
  return read_run_config(load_json(path), path.parent_path());
}

}  // namespace taskmarket::io
