#pragma once

// Firm-level measurement: task-intensity scores from posting counts,
// hiring concentration, winsorization, and the peer-mean and lag instruments.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "taskmarket/error.hpp"
#include "taskmarket/model.hpp"

namespace taskmarket {

enum class TaskType { Routine, Abstract, Manual };

inline constexpr std::array<TaskType, 3> kAllTaskTypes{TaskType::Routine, TaskType::Abstract,
                                                      TaskType::Manual};

constexpr std::string_view to_string(TaskType t) noexcept {
  switch (t) {
    case TaskType::Routine: return "routine";
    case TaskType::Abstract: return "abstract";
    case TaskType::Manual: return "manual";
  }
  return "?";
}

// One row of the occupation-group task-intensity grid: "+" maps to 1 and
// "-" to 0 by default.
struct TaskLoading {
  double routine = 0.0;
  double abstract = 0.0;
  double manual = 0.0;

  double operator[](TaskType t) const noexcept {
    switch (t) {
      case TaskType::Routine: return routine;
      case TaskType::Abstract: return abstract;
      case TaskType::Manual: return manual;
    }
    return 0.0;
  }
};

// Default qualitative grid keyed by occupation group.
inline const std::map<std::string, TaskLoading>& default_task_grid() {
  static const std::map<std::string, TaskLoading> grid{
      {"managers_professionals", {0.0, 1.0, 0.0}},
      {"production_craft", {1.0, 1.0, 0.0}},
      {"transport_construction", {0.0, 0.0, 1.0}},
      {"machine_operators", {1.0, 0.0, 1.0}},
      {"clerical_sales", {1.0, 0.0, 0.0}},
      {"service", {0.0, 0.0, 1.0}},
  };
  return grid;
}

// Crosswalk from the five functional categories onto grid rows.
// Mgmt/Prof/Tech -> managers_professionals, Aux -> clerical_sales,
// Phys -> machine_operators.
class TaskLoadings {
 public:
  TaskLoadings() {
    const auto& g = default_task_grid();
    set(OccupationKind::Mgmt, g.at("managers_professionals"));
    set(OccupationKind::Prof, g.at("managers_professionals"));
    set(OccupationKind::Tech, g.at("managers_professionals"));
    set(OccupationKind::Aux, g.at("clerical_sales"));
    set(OccupationKind::Phys, g.at("machine_operators"));
  }

  void set(OccupationKind k, TaskLoading l) {
    if (l.routine < 0.0 || l.abstract < 0.0 || l.manual < 0.0) {
      throw DomainError("task loadings must be nonnegative");
    }
    rows_[index_of(k)] = l;
  }
  const TaskLoading& operator[](OccupationKind k) const noexcept { return rows_[index_of(k)]; }

  std::map<OccupationKind, double> weights(TaskType t) const {
    std::map<OccupationKind, double> w;
    for (auto k : kAllOccupations) w[k] = rows_[index_of(k)][t];
    return w;
  }

 private:
  std::array<TaskLoading, kOccupationCount> rows_{};
};

// log(1 + sum_j weight_j * count_j) over the groups present in `counts`.
template <class Group>
double task_score(const std::map<Group, double>& weights,
                  const std::map<Group, std::int64_t>& counts) {
  double weighted = 0.0;
  for (const auto& [group, count] : counts) {
    if (count < 0) throw DomainError("task_score: negative posting count");
    const auto it = weights.find(group);
    if (it == weights.end()) throw DomainError("task_score: no weight for a counted group");
    if (!(it->second >= 0.0)) throw DomainError("task_score: negative weight");
    weighted += it->second * static_cast<double>(count);
  }
  return std::log1p(weighted);
}

struct TaskScores {
  double routine = 0.0;
  double abstract = 0.0;
  double manual = 0.0;
};

inline TaskScores task_scores(const TaskLoadings& loadings,
                              const std::map<OccupationKind, std::int64_t>& counts) {
  return {task_score(loadings.weights(TaskType::Routine), counts),
          task_score(loadings.weights(TaskType::Abstract), counts),
          task_score(loadings.weights(TaskType::Manual), counts)};
}

inline double hhi(std::span<const double> shares) {
  if (shares.empty()) throw DomainError("hhi: empty share vector");
  double sum = 0.0;
  double sq = 0.0;
  for (double s : shares) {
    if (!(s >= 0.0)) throw DomainError("hhi: shares are not a distribution (negative share)");
    sum += s;
    sq += s * s;
  }
  if (std::abs(sum - 1.0) > 1e-9) throw DomainError("hhi: shares are not a distribution (sum != 1)");
  return sq;
}

// 1-indexed nearest-rank order statistic: ceil(p * n), clamped to [1, n].
// The 1e-9 slack keeps p * n from rounding up past an exact integer.
inline std::size_t nearest_rank(double p, std::size_t n) {
  const double k = std::ceil(p * static_cast<double>(n) - 1e-9);
  return static_cast<std::size_t>(std::clamp(k, 1.0, static_cast<double>(n)));
}

inline std::vector<double> winsorize(std::span<const double> values, double p_lo = 0.01,
                                     double p_hi = 0.99) {
  if (values.empty()) throw DomainError("winsorize: empty input");
  if (!(p_lo >= 0.0 && p_lo < p_hi && p_hi <= 1.0)) {
    throw DomainError("winsorize: need 0 <= p_lo < p_hi <= 1");
  }
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  const double lo = sorted[nearest_rank(p_lo, sorted.size()) - 1];
  const double hi = sorted[nearest_rank(p_hi, sorted.size()) - 1];
  std::vector<double> out;
  out.reserve(values.size());
  for (double v : values) out.push_back(std::clamp(v, lo, hi));
  return out;
}

template <class Group, class Unit>
struct GroupedValue {
  Group group;
  Unit unit;
  double value = 0.0;
};

// Peer mean within each group, excluding the unit itself:
// (group sum - own value) / (group size - 1). Singleton groups are missing.
// Output is aligned with the input rows.
template <class Group, class Unit>
std::vector<std::optional<double>> leave_one_out_mean(
    std::span<const GroupedValue<Group, Unit>> series) {
  std::map<Group, std::pair<double, std::size_t>> totals;
  std::set<std::pair<Group, Unit>> seen;
  for (const auto& row : series) {
    if (!seen.insert({row.group, row.unit}).second) {
      throw DomainError("leave_one_out_mean: duplicate (group, unit) pair");
    }
    auto& t = totals[row.group];
    t.first += row.value;
    t.second += 1;
  }
  std::vector<std::optional<double>> out;
  out.reserve(series.size());
  for (const auto& row : series) {
    const auto& [sum, count] = totals.at(row.group);
    if (count < 2) {
      out.emplace_back(std::nullopt);
    } else {
      out.emplace_back((sum - row.value) / static_cast<double>(count - 1));
    }
  }
  return out;
}

template <class Unit>
struct PeriodValue {
  Unit unit;
  std::int64_t period = 0;
  double value = 0.0;
};

// Value of the same unit `lag` periods earlier, or missing; no interpolation
// across gaps. Output is aligned with the input rows.
template <class Unit>
std::vector<std::optional<double>> lag_series(std::span<const PeriodValue<Unit>> rows,
                                              std::int64_t lag) {
  if (lag < 1) throw DomainError("lag_series: lag must be positive");
  std::map<std::pair<Unit, std::int64_t>, double> index;
  for (const auto& r : rows) {
    if (!index.emplace(std::make_pair(r.unit, r.period), r.value).second) {
      throw DomainError("lag_series: duplicate (unit, period) pair");
    }
  }
  std::vector<std::optional<double>> out;
  out.reserve(rows.size());
  for (const auto& r : rows) {
    const auto it = index.find({r.unit, r.period - lag});
    out.emplace_back(it == index.end() ? std::nullopt : std::optional<double>(it->second));
  }
  return out;
}

}  // namespace taskmarket
