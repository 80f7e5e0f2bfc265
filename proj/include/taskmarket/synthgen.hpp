#pragma once

// Seeded synthetic firm-year panels whose hiring shares come from the task
// model, with the model-implied slopes recorded as ground truth.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <span>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "taskmarket/assignment.hpp"
#include "taskmarket/cutoff.hpp"
#include "taskmarket/econometrics.hpp"
#include "taskmarket/error.hpp"
#include "taskmarket/metrics.hpp"
#include "taskmarket/model.hpp"
#include "taskmarket/rng.hpp"

namespace taskmarket {

// Five occupations arranged phys | digital | aux | tech | prof | mgmt on the
// task line for theta roughly in [1.5, 3]. Only phys and aux border digital
// capital, so rising theta takes tasks from them; the other three keep their
// masses and gain share, and hiring concentration falls.
inline EconomyConfig default_economy() {
  EconomyConfig econ;
  econ.occupations = {
      {OccupationKind::Phys, 10.0, 0.0, 9.5, 0.932},
      {OccupationKind::Aux, 0.0, 2.0, 10.0, 0.55},
      {OccupationKind::Tech, 0.0, 1.0, 10.0, 0.471},
      {OccupationKind::Prof, 0.0, 0.4, 10.0, 0.437},
      {OccupationKind::Mgmt, 0.0, 0.0, 10.0, 0.426},
  };
  econ.digital = {10.0, 2.0, 1.05, 1.0};
  econ.composition_mode = CompositionMode::Raw;
  return econ;
}

enum class ShareMode { Structural, Linearized };

constexpr std::string_view to_string(ShareMode m) noexcept {
  return m == ShareMode::Structural ? "structural" : "linearized";
}

inline std::optional<ShareMode> parse_share_mode(std::string_view s) {
  if (s == "structural") return ShareMode::Structural;
  if (s == "linearized") return ShareMode::Linearized;
  return std::nullopt;
}

// theta_it = base + trend * t + firm_i + city_{c(i),t} + e_it + v_it, where
// e_it is AR(1) with the given persistence and innovation sd, and v_it is an
// optional shock that also loads on the prof/phys shares (endogeneity).
struct ThetaProcess {
  double base = 2.0;
  double trend = 0.03;
  double firm_sd = 0.2;
  double city_sd = 0.15;
  double persistence = 0.5;
  double innovation_sd = 0.1;
  double floor = 0.0;
  double endogenous_sd = 0.0;
  double endogenous_loading = 0.0;
};

struct DigitalIndex {
  double offset = 0.0;
  double scale = 1.0;
};

struct PostingVolume {
  double log_mean = 5.0;
  double log_sd = 0.5;
};

struct SynthConfig {
  std::int64_t n_firms = 250;
  std::int64_t n_years = 8;
  std::int64_t first_year = 2015;
  std::int64_t n_cities = 40;
  std::int64_t n_industries = 12;
  std::int64_t n_provinces = 10;
  ThetaProcess theta;
  DigitalIndex digital;
  PostingVolume postings;
  ShareMode share_mode = ShareMode::Structural;
  double share_noise_sd = 0.01;
  std::size_t scan_points = 257;
  std::uint64_t seed = 1;

  void validate() const {
    auto positive = [](std::int64_t v, const char* name) {
      if (v < 1) throw ConfigError(std::string("synth.") + name + " must be a positive integer");
    };
    positive(n_firms, "n_firms");
    positive(n_years, "n_years");
    positive(n_cities, "n_cities");
    positive(n_industries, "n_industries");
    positive(n_provinces, "n_provinces");
    auto nonneg = [](double v, const char* name) {
      if (!(v >= 0.0) || !std::isfinite(v)) throw ConfigError(std::string("synth.") + name + " must be >= 0");
    };
    nonneg(theta.firm_sd, "theta.firm_sd");
    nonneg(theta.city_sd, "theta.city_sd");
    nonneg(theta.innovation_sd, "theta.innovation_sd");
    nonneg(theta.endogenous_sd, "theta.endogenous_sd");
    nonneg(theta.floor, "theta.floor");
    nonneg(postings.log_sd, "postings.log_sd");
    nonneg(share_noise_sd, "share_noise_sd");
    if (!(theta.persistence >= 0.0 && theta.persistence < 1.0)) {
      throw ConfigError("synth.theta.persistence must lie in [0, 1)");
    }
    if (!std::isfinite(theta.base) || !std::isfinite(theta.trend) || !std::isfinite(theta.endogenous_loading)) {
      throw ConfigError("synth.theta values must be finite");
    }
    if (!(digital.scale > 0.0) || !std::isfinite(digital.scale) || !std::isfinite(digital.offset)) {
      throw ConfigError("synth.digital.scale must be positive");
    }
    if (!std::isfinite(postings.log_mean)) throw ConfigError("synth.postings.log_mean must be finite");
    if (scan_points < 2) throw ConfigError("synth.scan_points must be at least 2");
  }

  double theta_ref() const noexcept {
    return theta.base + theta.trend * 0.5 * static_cast<double>(n_years - 1);
  }
};

// Model-implied slopes at theta_ref. "per_digital" values are per unit of
// the digital index (per-theta slope / scale).
struct SynthTruth {
  double theta_ref = 0.0;
  std::array<double, kOccupationCount> share{};
  std::array<double, kOccupationCount> share_per_theta{};
  std::array<double, kOccupationCount> share_per_digital{};
  double hhi_per_digital = 0.0;
  TaskScores score_per_digital;
};

namespace detail {

inline std::array<double, kOccupationCount> model_shares(const EconomyConfig& econ, double theta,
                                                         std::size_t scan_points) {
  const auto map = compute_region_map(econ.with_theta(theta), scan_points);
  try {
    return hiring_shares(labor_demand(map)).values();
  } catch (const AllDigitalError&) {
    throw ConfigError("economy has no labor mass at theta=" + std::to_string(theta));
  }
}

// log1p(V * sum_k w_k s_k) differentiated in theta, at the median volume.
inline double score_slope(const TaskLoadings& loadings, TaskType t, const std::array<double, kOccupationCount>& s,
                          const std::array<double, kOccupationCount>& ds, double volume) {
  double level = 0.0;
  double slope = 0.0;
  for (auto k : kAllOccupations) {
    level += loadings[k][t] * s[index_of(k)];
    slope += loadings[k][t] * ds[index_of(k)];
  }
  return volume * slope / (1.0 + volume * level);
}

// Split `total` by shares with largest-remainder rounding; ties go to the
// lower occupation index.
inline std::array<std::int64_t, kOccupationCount> apportion(std::int64_t total,
                                                            const std::array<double, kOccupationCount>& s) {
  std::array<std::int64_t, kOccupationCount> out{};
  std::array<std::pair<double, std::size_t>, kOccupationCount> rem{};
  std::int64_t assigned = 0;
  for (std::size_t k = 0; k < kOccupationCount; ++k) {
    const double exact = static_cast<double>(total) * s[k];
    out[k] = static_cast<std::int64_t>(std::floor(exact));
    assigned += out[k];
    rem[k] = {exact - static_cast<double>(out[k]), k};
  }
  std::stable_sort(rem.begin(), rem.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
  for (std::size_t i = 0; assigned < total && i < kOccupationCount; ++i, ++assigned) ++out[rem[i].second];
  return out;
}

}  // namespace detail

inline SynthTruth compute_truth(const SynthConfig& cfg, const EconomyConfig& econ) {
  cfg.validate();
  econ.validate();
  SynthTruth t;
  t.theta_ref = cfg.theta_ref();
  const EconomyConfig at = econ.with_theta(t.theta_ref);
  const auto map = compute_region_map(at, kDefaultScanPoints);
  try {
    t.share = hiring_shares(labor_demand(map)).values();
  } catch (const AllDigitalError&) {
    throw ConfigError("economy has no labor mass at theta=" + std::to_string(t.theta_ref));
  }
  t.share_per_theta = share_sensitivity(at, map);
  double dhhi = 0.0;
  for (std::size_t k = 0; k < kOccupationCount; ++k) {
    t.share_per_digital[k] = t.share_per_theta[k] / cfg.digital.scale;
    dhhi += 2.0 * t.share[k] * t.share_per_theta[k];
  }
  t.hhi_per_digital = dhhi / cfg.digital.scale;
  const TaskLoadings loadings;
  const double volume = std::exp(cfg.postings.log_mean);
  t.score_per_digital = {
      detail::score_slope(loadings, TaskType::Routine, t.share, t.share_per_theta, volume) / cfg.digital.scale,
      detail::score_slope(loadings, TaskType::Abstract, t.share, t.share_per_theta, volume) / cfg.digital.scale,
      detail::score_slope(loadings, TaskType::Manual, t.share, t.share_per_theta, volume) / cfg.digital.scale};
  return t;
}

// Column order of generated panels.
inline std::vector<std::string> panel_columns() {
  std::vector<std::string> cols{"firm", "year", "city", "province", "industry", "theta", "digital"};
  for (auto k : kAllOccupations) cols.push_back("share_" + std::string(to_string(k)));
  cols.push_back("hhi");
  cols.push_back("postings");
  for (auto k : kAllOccupations) cols.push_back("count_" + std::string(to_string(k)));
  for (const char* c : {"routine", "abstract", "manual", "size", "roa", "cashflow", "ato", "board", "tobinq",
                        "fixed", "digital_loo", "digital_lag1"}) {
    cols.emplace_back(c);
  }
  return cols;
}

// Draw order (all from one Rng seeded with cfg.seed):
//   1. per firm: city, industry, firm effect, initial AR(1) state;
//   2. per year, per city: common shock;
//   3. per firm, per year: AR innovation, endogenous shock, five share
//      noises, log volume, then size, roa, cashflow, ato, board, tobinq, fixed.
// Controls: size ~ N(22, 1.2); roa ~ N(0.04, 0.06); cashflow ~ N(0.05, 0.07);
// ato ~ exp(N(log 0.6, 0.4)); board ~ N(2.1, 0.2); tobinq ~ 1 + exp(N(0, 0.5));
// fixed ~ U(0, 0.6). None depends on theta.
inline PanelDataset generate_panel(const SynthConfig& cfg, const EconomyConfig& econ) {
  cfg.validate();
  econ.validate();
  const SynthTruth truth = compute_truth(cfg, econ);
  Rng rng(cfg.seed);
  const auto nf = static_cast<std::size_t>(cfg.n_firms);
  const auto ny = static_cast<std::size_t>(cfg.n_years);
  const auto& tp = cfg.theta;

  std::vector<std::int64_t> city(nf), industry(nf);
  std::vector<double> firm_effect(nf), ar_state(nf);
  const double stationary_sd = tp.innovation_sd / std::sqrt(1.0 - tp.persistence * tp.persistence);
  for (std::size_t i = 0; i < nf; ++i) {
    city[i] = static_cast<std::int64_t>(rng.below(static_cast<std::uint64_t>(cfg.n_cities)));
    industry[i] = static_cast<std::int64_t>(rng.below(static_cast<std::uint64_t>(cfg.n_industries)));
    firm_effect[i] = rng.normal(0.0, tp.firm_sd);
    ar_state[i] = rng.normal(0.0, stationary_sd);
  }
  std::vector<double> city_shock(ny * static_cast<std::size_t>(cfg.n_cities));
  for (auto& s : city_shock) s = rng.normal(0.0, tp.city_sd);

  const auto columns = panel_columns();
  std::map<std::string, std::vector<double>> data;
  for (const auto& c : columns) data[c].reserve(nf * ny);
  auto push = [&](const char* name, double v) { data[name].push_back(v); };
  const TaskLoadings loadings;

  for (std::size_t i = 0; i < nf; ++i) {
    for (std::size_t t = 0; t < ny; ++t) {
      if (t > 0) ar_state[i] = tp.persistence * ar_state[i] + rng.normal(0.0, tp.innovation_sd);
      const double endo = rng.normal(0.0, tp.endogenous_sd);
      const double shock = city_shock[t * static_cast<std::size_t>(cfg.n_cities) + static_cast<std::size_t>(city[i])];
      const double theta = std::max(tp.floor, tp.base + tp.trend * static_cast<double>(t) + firm_effect[i] + shock +
                                                  ar_state[i] + endo);

      std::array<double, kOccupationCount> s{};
      if (cfg.share_mode == ShareMode::Structural) {
        s = detail::model_shares(econ, theta, cfg.scan_points);
      } else {
        for (std::size_t k = 0; k < kOccupationCount; ++k) {
          s[k] = truth.share[k] + truth.share_per_theta[k] * (theta - truth.theta_ref);
        }
      }
      std::array<double, kOccupationCount> noise{};
      for (auto& e : noise) e = rng.normal(0.0, cfg.share_noise_sd);
      noise[index_of(OccupationKind::Prof)] += tp.endogenous_loading * endo;
      noise[index_of(OccupationKind::Phys)] -= tp.endogenous_loading * endo;
      double sum = 0.0;
      for (std::size_t k = 0; k < kOccupationCount; ++k) {
        s[k] = std::max(0.0, s[k] + noise[k]);
        sum += s[k];
      }
      if (!(sum > 0.0)) throw ConfigError("share noise left no labor mass at theta=" + std::to_string(theta));
      for (auto& v : s) v /= sum;

      const auto volume = std::max<std::int64_t>(
          1, static_cast<std::int64_t>(std::llround(std::exp(rng.normal(cfg.postings.log_mean, cfg.postings.log_sd)))));
      const auto counts = detail::apportion(volume, s);
      std::map<OccupationKind, std::int64_t> count_map;
      for (auto k : kAllOccupations) count_map[k] = counts[index_of(k)];
      const TaskScores scores = task_scores(loadings, count_map);

      push("firm", static_cast<double>(i + 1));
      push("year", static_cast<double>(cfg.first_year + static_cast<std::int64_t>(t)));
      push("city", static_cast<double>(city[i]));
      push("province", static_cast<double>(city[i] % cfg.n_provinces));
      push("industry", static_cast<double>(industry[i]));
      push("theta", theta);
      push("digital", cfg.digital.offset + cfg.digital.scale * theta);
      for (auto k : kAllOccupations) data["share_" + std::string(to_string(k))].push_back(s[index_of(k)]);
      push("hhi", hhi(s));
      push("postings", static_cast<double>(volume));
      for (auto k : kAllOccupations) {
        data["count_" + std::string(to_string(k))].push_back(static_cast<double>(counts[index_of(k)]));
      }
      push("routine", scores.routine);
      push("abstract", scores.abstract);
      push("manual", scores.manual);
      push("size", rng.normal(22.0, 1.2));
      push("roa", rng.normal(0.04, 0.06));
      push("cashflow", rng.normal(0.05, 0.07));
      push("ato", std::exp(rng.normal(std::log(0.6), 0.4)));
      push("board", rng.normal(2.1, 0.2));
      push("tobinq", 1.0 + std::exp(rng.normal(0.0, 0.5)));
      push("fixed", rng.uniform(0.0, 0.6));
    }
  }

  // Instruments: city-year peer mean excluding the firm, and the one-year lag.
  const auto& digital = data["digital"];
  const auto& years = data["year"];
  std::vector<GroupedValue<std::pair<std::int64_t, std::int64_t>, std::int64_t>> grouped;
  std::vector<PeriodValue<std::int64_t>> periods;
  for (std::size_t r = 0; r < digital.size(); ++r) {
    const auto firm = static_cast<std::int64_t>(data["firm"][r]);
    const auto year = static_cast<std::int64_t>(years[r]);
    grouped.push_back({{static_cast<std::int64_t>(data["city"][r]), year}, firm, digital[r]});
    periods.push_back({firm, year, digital[r]});
  }
  const auto loo = leave_one_out_mean(std::span<const decltype(grouped)::value_type>(grouped));
  const auto lag = lag_series(std::span<const PeriodValue<std::int64_t>>(periods), 1);
  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (std::size_t r = 0; r < digital.size(); ++r) {
    data["digital_loo"].push_back(loo[r].value_or(nan));
    data["digital_lag1"].push_back(lag[r].value_or(nan));
  }

  PanelDataset panel;
  for (const auto& c : columns) panel.add_column(c, std::move(data[c]));
  return panel;
}

}  // namespace taskmarket
