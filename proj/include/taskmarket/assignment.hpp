#pragma once

// Least-cost assignment of tasks to executors, the induced partition of the
// task continuum, and the resulting labor demand and hiring shares.

#include <algorithm>
#include <array>
#include <compare>
#include <cstddef>
#include <limits>
#include <string>
#include <string_view>
#include <vector>

#include "taskmarket/error.hpp"
#include "taskmarket/model.hpp"

namespace taskmarket {

// Either digital capital or one occupation. Ordered by rank:
// Phys < Aux < Tech < Prof < Mgmt < Digital, so ties favor labor.
class Executor {
 public:
  static constexpr std::size_t kCount = kOccupationCount + 1;

  constexpr Executor() = default;
  static constexpr Executor digital() noexcept { return Executor(kOccupationCount); }
  static constexpr Executor labor(OccupationKind kind) noexcept { return Executor(index_of(kind)); }
  static constexpr Executor from_rank(std::size_t rank) noexcept { return Executor(rank); }

  constexpr bool is_digital() const noexcept { return rank_ == kOccupationCount; }
  constexpr OccupationKind occupation() const noexcept { return static_cast<OccupationKind>(rank_); }
  constexpr std::size_t rank() const noexcept { return rank_; }

  constexpr auto operator<=>(const Executor&) const = default;

 private:
  constexpr explicit Executor(std::size_t rank) noexcept : rank_(rank) {}
  std::size_t rank_ = 0;
};

constexpr std::string_view to_string(Executor e) noexcept {
  return e.is_digital() ? std::string_view("digital") : to_string(e.occupation());
}

inline double unit_cost(const EconomyConfig& econ, Executor e, double z) {
  if (e.is_digital()) return digital_unit_cost(econ.digital, z);
  const auto* occ = econ.find(e.occupation());
  if (occ == nullptr) return std::numeric_limits<double>::infinity();
  return labor_unit_cost(*occ, z, econ.composition_mode);
}

inline Executor cheapest_executor(const EconomyConfig& econ, double z) {
  check_task_index(z);
  double best_cost = std::numeric_limits<double>::infinity();
  Executor best = Executor::digital();
  bool found = false;
  // Ascending rank with strict '<' keeps the lowest-ranked executor on ties.
  for (auto kind : kAllOccupations) {
    const auto* occ = econ.find(kind);
    if (occ == nullptr) continue;
    const double c = labor_unit_cost(*occ, z, econ.composition_mode);
    if (c < best_cost) {
      best_cost = c;
      best = Executor::labor(kind);
      found = true;
    }
  }
  const double cd = digital_unit_cost(econ.digital, z);
  if (cd < best_cost) {
    best_cost = cd;
    best = Executor::digital();
    found = true;
  }
  if (!found) throw InfeasibleTaskError("every executor has infinite cost at z = " + std::to_string(z));
  return best;
}

struct Region {
  double lo = 0.0;
  double hi = 1.0;
  Executor executor;
};

struct RegionMap {
  std::vector<Region> regions;
  double tolerance = 1e-10;
};

inline constexpr std::size_t kDefaultScanPoints = 4097;
inline constexpr double kDefaultRegionTolerance = 1e-10;

namespace detail {

// Narrow [lo, hi] around the first point right of lo where `current` stops
// being the cheapest executor. Returns the final bracket.
inline std::pair<double, double> bracket_winner_change(const EconomyConfig& econ, Executor current,
                                                        double lo, double hi, double tol) {
  while (hi - lo > tol) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (cheapest_executor(econ, mid) == current) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return {lo, hi};
}

}  // namespace detail

// Grid scan followed by bisection at every change of winner. The bisection
// predicate is the argmin itself, so refined boundaries obey exactly the same
// tie-breaking as cheapest_executor; a third executor hiding inside a grid
// cell is picked up by continuing the search from the refined point.
inline RegionMap compute_region_map(const EconomyConfig& econ,
                                    std::size_t scan_points = kDefaultScanPoints,
                                    double tol = kDefaultRegionTolerance) {
  if (scan_points < 2) throw DomainError("scan_points must be at least 2");
  if (!(tol > 0.0)) throw DomainError("region tolerance must be positive");

  const double step = 1.0 / static_cast<double>(scan_points - 1);
  auto grid = [&](std::size_t i) {
    return i + 1 == scan_points ? 1.0 : static_cast<double>(i) * step;
  };

  std::vector<Executor> winners(scan_points);
  for (std::size_t i = 0; i < scan_points; ++i) winners[i] = cheapest_executor(econ, grid(i));

  RegionMap map;
  map.tolerance = tol;
  double region_start = 0.0;
  Executor current = winners.front();

  for (std::size_t i = 0; i + 1 < scan_points; ++i) {
    if (winners[i + 1] == current) continue;
    double lo = grid(i);
    const double hi = grid(i + 1);
    // Walk through every winner change inside this cell.
    for (std::size_t guard = 0; current != winners[i + 1] && guard < Executor::kCount * 4; ++guard) {
      const auto [blo, bhi] = detail::bracket_winner_change(econ, current, lo, hi, tol);
      const double boundary = 0.5 * (blo + bhi);
      const Executor next = cheapest_executor(econ, bhi);
      if (boundary > region_start) {
        map.regions.push_back({region_start, boundary, current});
        region_start = boundary;
      }
      current = next;
      lo = bhi;
    }
  }
  map.regions.push_back({region_start, 1.0, current});

  // Merge neighbours that ended up with the same executor.
  std::vector<Region> merged;
  for (const auto& r : map.regions) {
    if (!merged.empty() && merged.back().executor == r.executor) {
      merged.back().hi = r.hi;
    } else {
      merged.push_back(r);
    }
  }
  map.regions = std::move(merged);
  return map;
}

class LaborDemand {
 public:
  double& operator[](Executor e) noexcept { return mass_[e.rank()]; }
  double operator[](Executor e) const noexcept { return mass_[e.rank()]; }

  double total() const noexcept {
    double s = 0.0;
    for (double m : mass_) s += m;
    return s;
  }

  double labor_total() const noexcept { return total() - mass_[Executor::digital().rank()]; }

  const std::array<double, Executor::kCount>& masses() const noexcept { return mass_; }

 private:
  std::array<double, Executor::kCount> mass_{};
};

inline LaborDemand labor_demand(const RegionMap& map) {
  LaborDemand ld;
  for (const auto& r : map.regions) ld[r.executor] += r.hi - r.lo;
  return ld;
}

// Per-occupation share of human labor demand; digital mass is excluded from
// the denominator.
class OccupationShares {
 public:
  double& operator[](OccupationKind k) noexcept { return share_[index_of(k)]; }
  double operator[](OccupationKind k) const noexcept { return share_[index_of(k)]; }
  const std::array<double, kOccupationCount>& values() const noexcept { return share_; }

 private:
  std::array<double, kOccupationCount> share_{};
};

inline OccupationShares hiring_shares(const LaborDemand& ld) {
  double labor = 0.0;
  for (auto k : kAllOccupations) labor += ld[Executor::labor(k)];
  if (!(labor > 0.0)) throw AllDigitalError("no task is assigned to labor; hiring shares undefined");
  OccupationShares out;
  for (auto k : kAllOccupations) out[k] = ld[Executor::labor(k)] / labor;
  return out;
}

}  // namespace taskmarket
