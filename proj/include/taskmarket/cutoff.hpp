#pragma once

// Occupation-versus-digital cutoff tasks and their comparative statics in
// digital capability theta.
//
// For one occupation k the cost gap g(z) = c_k(z) - c_D(z; theta) is negative
// where labor is cheaper. A cutoff exists in the single-crossing sense when
// lambda_k is increasing and g changes sign exactly once, from labor-cheaper
// below to digital-cheaper above. Its theta-derivative follows from the
// implicit function theorem applied to g(z*, theta) = 0.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include "taskmarket/assignment.hpp"
#include "taskmarket/error.hpp"
#include "taskmarket/model.hpp"
#include "taskmarket/rng.hpp"

namespace taskmarket {

enum class CutoffFailure {
  NoCrossing,             // one executor is cheaper on the whole continuum
  MultipleCrossings,      // more than one sign change: use the RegionMap instead
  RegularityViolated,     // lambda_k not increasing, or digital cheaper below the crossing
  DegenerateDenominator,  // d g / d z vanishes at the root
};

constexpr std::string_view to_string(CutoffFailure f) noexcept {
  switch (f) {
    case CutoffFailure::NoCrossing: return "no_crossing";
    case CutoffFailure::MultipleCrossings: return "multiple_crossings";
    case CutoffFailure::RegularityViolated: return "regularity_violated";
    case CutoffFailure::DegenerateDenominator: return "degenerate_denominator";
  }
  return "?";
}

class CutoffError : public Error {
 public:
  CutoffError(CutoffFailure failure, const std::string& what) : Error(what), failure_(failure) {}
  CutoffFailure failure() const noexcept { return failure_; }

 private:
  CutoffFailure failure_;
};

// NonDecreasing admits constant-productivity occupations (lambda' = 0),
// the degenerate limit in which the cutoff has a closed form.
enum class RegularityCheck { Strict, NonDecreasing };

struct CutoffOptions {
  RegularityCheck regularity = RegularityCheck::Strict;
  std::size_t check_points = 1001;
  // Bisection stops once the bracket is this narrow; 0 means run until the
  // bracket cannot shrink in double precision.
  double bracket_width = 1e-12;
};

enum class CutoffLocation { Interior, LowerBoundary, UpperBoundary };

inline constexpr double kCutoffBoundaryTolerance = 1e-9;

struct CutoffResult {
  OccupationKind occupation = OccupationKind::Phys;
  double z_star = 0.0;
  double theta = 0.0;
  bool converged = false;
  int iterations = 0;
  CutoffLocation location = CutoffLocation::Interior;

  bool interior() const noexcept { return location == CutoffLocation::Interior; }
};

inline double cost_gap(const OccupationSpec& occ, const DigitalCapitalSpec& dc, double z,
                       CompositionMode mode) {
  return labor_unit_cost(occ, z, mode) - digital_unit_cost(dc, z);
}

inline CutoffResult solve_cutoff(const OccupationSpec& occ, const DigitalCapitalSpec& dc,
                                 CompositionMode mode, const CutoffOptions& opts = {}) {
  occ.validate();
  dc.validate();
  const std::size_t n = std::max<std::size_t>(opts.check_points, 2);
  const std::string who(to_string(occ.kind));
  auto grid = [n](std::size_t i) {
    return i + 1 == n ? 1.0 : static_cast<double>(i) / static_cast<double>(n - 1);
  };

  double prev_lambda = effective_productivity(occ, 0.0, mode);
  for (std::size_t i = 1; i < n; ++i) {
    const double lambda = effective_productivity(occ, grid(i), mode);
    const bool ok = opts.regularity == RegularityCheck::Strict ? lambda > prev_lambda
                                                               : lambda >= prev_lambda;
    if (!ok) {
      throw CutoffError(CutoffFailure::RegularityViolated,
                        who + ": productivity is not increasing in task complexity");
    }
    prev_lambda = lambda;
  }

  // Sign changes of the gap, ignoring exact zeros on the grid.
  int last_sign = 0;
  std::size_t last_index = 0;
  std::size_t changes = 0;
  std::size_t lo_index = 0;
  std::size_t hi_index = 0;
  int lo_sign = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double g = cost_gap(occ, dc, grid(i), mode);
    const int sign = g < 0.0 ? -1 : (g > 0.0 ? 1 : 0);
    if (sign == 0) continue;
    if (last_sign != 0 && sign != last_sign) {
      ++changes;
      lo_index = last_index;
      hi_index = i;
      lo_sign = last_sign;
    }
    last_sign = sign;
    last_index = i;
  }
  if (changes == 0) {
    throw CutoffError(CutoffFailure::NoCrossing, who + ": cost curves do not cross");
  }
  if (changes > 1) {
    throw CutoffError(CutoffFailure::MultipleCrossings,
                      who + ": cost curves cross " + std::to_string(changes) + " times");
  }
  if (lo_sign > 0) {
    throw CutoffError(CutoffFailure::RegularityViolated,
                      who + ": digital capital is cheaper below the crossing");
  }

  double lo = grid(lo_index);
  double hi = grid(hi_index);
  CutoffResult result;
  result.occupation = occ.kind;
  result.theta = dc.theta;
  while (hi - lo > opts.bracket_width) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    ++result.iterations;
    const double g = cost_gap(occ, dc, mid, mode);
    if (g < 0.0) {
      lo = mid;
    } else if (g > 0.0) {
      hi = mid;
    } else {
      lo = hi = mid;
    }
  }
  result.z_star = 0.5 * (lo + hi);
  result.converged = (hi - lo) <= opts.bracket_width || opts.bracket_width == 0.0;
  if (result.z_star < kCutoffBoundaryTolerance) {
    result.location = CutoffLocation::LowerBoundary;
  } else if (result.z_star > 1.0 - kCutoffBoundaryTolerance) {
    result.location = CutoffLocation::UpperBoundary;
  }
  return result;
}

// d z / d theta along g(z, theta) = c_k(z) - c_D(z; theta) = 0:
//   dz/dtheta = -g_theta / g_z,
//   g_theta = r z^gamma / kappa^2,
//   g_z     = -w lambda'(z) / lambda(z)^2 + r theta gamma z^(gamma-1) / kappa^2.
// Valid at any labor/digital crossing, whichever side labor is on.
inline double cutoff_derivative(const OccupationSpec& occ, const DigitalCapitalSpec& dc, double z,
                                CompositionMode mode) {
  const double lambda = effective_productivity(occ, z, mode);
  if (!(lambda > 0.0)) throw DomainError("cutoff_derivative: zero productivity at z");
  const double lambda_slope = productivity_slope(occ, z, mode);
  const double kappa = digital_productivity(dc, z);
  const double kappa_sq = kappa * kappa;
  const double g_theta = dc.rental * std::pow(z, dc.gamma) / kappa_sq;
  const double g_z = -occ.wage * lambda_slope / (lambda * lambda) +
                     dc.rental * dc.theta * dc.gamma * std::pow(z, dc.gamma - 1.0) / kappa_sq;
  if (std::abs(g_z) < 1e-14) {
    throw CutoffError(CutoffFailure::DegenerateDenominator,
                      std::string(to_string(occ.kind)) + ": cost-gap slope vanishes at the cutoff");
  }
  return -g_theta / g_z;
}

// d L_e / d theta for every executor. Labor-labor boundaries do not move
// with theta; each labor-digital boundary moves at cutoff_derivative.
inline std::array<double, Executor::kCount> demand_sensitivity(const EconomyConfig& econ,
                                                               const RegionMap& map) {
  std::array<double, Executor::kCount> out{};
  for (std::size_t i = 0; i + 1 < map.regions.size(); ++i) {
    const Executor left = map.regions[i].executor;
    const Executor right = map.regions[i + 1].executor;
    if (left.is_digital() == right.is_digital()) continue;
    const Executor labor = left.is_digital() ? right : left;
    const auto* occ = econ.find(labor.occupation());
    const double dz = cutoff_derivative(*occ, econ.digital, map.regions[i].hi, econ.composition_mode);
    out[left.rank()] += dz;
    out[right.rank()] -= dz;
  }
  return out;
}

// d share_k / d theta by the quotient rule on L_k / sum of labor masses.
inline std::array<double, kOccupationCount> share_sensitivity(const EconomyConfig& econ,
                                                              const RegionMap& map) {
  const auto ld = labor_demand(map);
  const auto dl = demand_sensitivity(econ, map);
  double total = 0.0;
  double total_slope = 0.0;
  for (auto k : kAllOccupations) {
    total += ld[Executor::labor(k)];
    total_slope += dl[Executor::labor(k).rank()];
  }
  if (!(total > 0.0)) throw AllDigitalError("no labor mass; share sensitivity undefined");
  std::array<double, kOccupationCount> out{};
  for (auto k : kAllOccupations) {
    const double mass = ld[Executor::labor(k)];
    const double slope = dl[Executor::labor(k).rank()];
    out[index_of(k)] = (slope * total - mass * total_slope) / (total * total);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Theta sweep

struct SweepOptions {
  std::size_t scan_points = kDefaultScanPoints;
  double tolerance = kDefaultRegionTolerance;
  CutoffOptions cutoff;
};

struct SweepRow {
  double theta = 0.0;
  std::array<std::optional<double>, kOccupationCount> cutoff;
  LaborDemand demand;
  std::optional<OccupationShares> shares;  // absent when every task is digital
};

struct SweepTable {
  std::vector<OccupationKind> occupations;  // present in the economy, canonical order
  std::vector<SweepRow> rows;
};

inline SweepTable sweep_theta(const EconomyConfig& econ, const std::vector<double>& thetas,
                              const SweepOptions& opts = {}) {
  econ.validate();
  if (thetas.empty()) throw DomainError("sweep: theta list is empty");
  for (std::size_t i = 0; i < thetas.size(); ++i) {
    if (!(thetas[i] >= 0.0) || !std::isfinite(thetas[i])) {
      throw DomainError("sweep: theta values must be finite and nonnegative");
    }
    if (i > 0 && !(thetas[i] > thetas[i - 1])) {
      throw DomainError("sweep: theta values must be strictly increasing");
    }
  }

  SweepTable table;
  for (auto k : kAllOccupations) {
    if (econ.find(k) != nullptr) table.occupations.push_back(k);
  }
  for (double theta : thetas) {
    const EconomyConfig at = econ.with_theta(theta);
    SweepRow row;
    row.theta = theta;
    const auto map = compute_region_map(at, opts.scan_points, opts.tolerance);
    row.demand = labor_demand(map);
    try {
      row.shares = hiring_shares(row.demand);
    } catch (const AllDigitalError&) {
      row.shares.reset();
    }
    for (const auto& occ : at.occupations) {
      try {
        const auto res = solve_cutoff(occ, at.digital, at.composition_mode, opts.cutoff);
        if (res.interior()) row.cutoff[index_of(occ.kind)] = res.z_star;
      } catch (const CutoffError&) {
      }
    }
    table.rows.push_back(std::move(row));
  }
  return table;
}

// ---------------------------------------------------------------------------
// Monte Carlo check that the cutoff falls in theta

struct Prop1Options {
  std::size_t theta_points = 20;
  double theta_min = 0.5;
  double theta_max = 8.0;
  double fd_relative_step = 1e-5;
  double max_relative_error = 1e-4;
  unsigned threads = 0;  // 0: hardware concurrency
};

struct Prop1Draw {
  std::size_t index = 0;
  OccupationSpec occupation;
  DigitalCapitalSpec digital;  // theta unused
  bool kept = false;
  std::string rejection;       // empty when kept
  bool monotone = false;
  bool signs_agree = false;
  double max_rel_error = 0.0;
  bool passed = false;
  std::vector<double> z_star;
  std::vector<double> derivative;
  std::vector<double> finite_difference;
};

struct Prop1Report {
  std::uint64_t seed = 0;
  std::vector<double> thetas;
  std::vector<Prop1Draw> draws;
  std::size_t kept = 0;
  std::size_t passed = 0;
  double max_rel_error = 0.0;

  bool all_passed() const noexcept { return passed == kept; }
};

// Parameter ranges: capabilities U[0,2], wage U[0.5,2], rental U[0.5,2],
// kappa_bar U[0.1,1], gamma in (1,3]; drawn in that order from mt19937_64.
inline Prop1Draw draw_prop1_instance(Rng& rng, std::size_t index) {
  Prop1Draw d;
  d.index = index;
  d.occupation.kind = OccupationKind::Prof;
  d.occupation.lambda_m = rng.uniform(0.0, 2.0);
  d.occupation.lambda_r = rng.uniform(0.0, 2.0);
  d.occupation.lambda_a = rng.uniform(0.0, 2.0);
  d.occupation.wage = rng.uniform(0.5, 2.0);
  d.digital.rental = rng.uniform(0.5, 2.0);
  d.digital.kappa_bar = rng.uniform(0.1, 1.0);
  d.digital.gamma = 3.0 - 2.0 * rng.uniform01();
  return d;
}

namespace detail {

inline void evaluate_prop1_draw(Prop1Draw& d, const std::vector<double>& thetas,
                                const Prop1Options& opts) {
  CutoffOptions precise;
  precise.bracket_width = 0.0;
  const auto mode = CompositionMode::Raw;
  auto z_at = [&](double theta) {
    DigitalCapitalSpec dc = d.digital;
    dc.theta = theta;
    auto res = solve_cutoff(d.occupation, dc, mode, precise);
    if (!res.interior()) throw CutoffError(CutoffFailure::NoCrossing, "cutoff on the boundary");
    return res.z_star;
  };

  std::vector<double> z(thetas.size()), z_minus(thetas.size()), z_plus(thetas.size());
  try {
    for (std::size_t i = 0; i < thetas.size(); ++i) {
      const double h = opts.fd_relative_step * thetas[i];
      z[i] = z_at(thetas[i]);
      z_minus[i] = z_at(thetas[i] - h);
      z_plus[i] = z_at(thetas[i] + h);
    }
  } catch (const CutoffError& e) {
    d.rejection = std::string(to_string(e.failure()));
    return;
  }
  d.kept = true;
  d.z_star = z;

  d.monotone = true;
  for (std::size_t i = 1; i < z.size(); ++i) {
    if (!(z[i] < z[i - 1])) d.monotone = false;
  }
  d.signs_agree = true;
  for (std::size_t i = 0; i < thetas.size(); ++i) {
    const double h = opts.fd_relative_step * thetas[i];
    DigitalCapitalSpec dc = d.digital;
    dc.theta = thetas[i];
    double analytic = 0.0;
    try {
      analytic = cutoff_derivative(d.occupation, dc, z[i], mode);
    } catch (const CutoffError&) {
      analytic = std::nan("");
    }
    const double fd = (z_plus[i] - z_minus[i]) / (2.0 * h);
    d.derivative.push_back(analytic);
    d.finite_difference.push_back(fd);
    const bool same_sign = (analytic < 0.0 && fd < 0.0) || (analytic > 0.0 && fd > 0.0);
    if (!same_sign) d.signs_agree = false;
    const double rel = std::abs(analytic - fd) / std::abs(fd);
    d.max_rel_error = std::isnan(rel) ? HUGE_VAL : std::max(d.max_rel_error, rel);
  }
  d.passed = d.monotone && d.signs_agree && d.max_rel_error <= opts.max_relative_error;
}

}  // namespace detail

inline Prop1Report verify_proposition1(std::size_t draw_count, std::uint64_t seed,
                                       const Prop1Options& opts = {}) {
  Prop1Report report;
  report.seed = seed;
  const std::size_t m = std::max<std::size_t>(opts.theta_points, 2);
  for (std::size_t i = 0; i < m; ++i) {
    report.thetas.push_back(opts.theta_min + (opts.theta_max - opts.theta_min) *
                                                 static_cast<double>(i) / static_cast<double>(m - 1));
  }

  Rng rng(seed);
  report.draws.reserve(draw_count);
  for (std::size_t i = 0; i < draw_count; ++i) report.draws.push_back(draw_prop1_instance(rng, i));

  unsigned threads = opts.threads != 0 ? opts.threads : std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, std::max<std::size_t>(draw_count, 1)));
  {
    std::vector<std::jthread> workers;
    for (unsigned t = 0; t < threads; ++t) {
      workers.emplace_back([&, t] {
        for (std::size_t i = t; i < report.draws.size(); i += threads) {
          detail::evaluate_prop1_draw(report.draws[i], report.thetas, opts);
        }
      });
    }
  }

  for (const auto& d : report.draws) {
    if (!d.kept) continue;
    ++report.kept;
    if (d.passed) ++report.passed;
    report.max_rel_error = std::max(report.max_rel_error, d.max_rel_error);
  }
  return report;
}

}  // namespace taskmarket
