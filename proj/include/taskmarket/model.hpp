#pragma once

// Task-based production primitives: the skill mix of each task on the
// complexity continuum, occupational capability vectors, and the unit costs
// of labor and digital capital.

#include <array>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "taskmarket/error.hpp"

namespace taskmarket {

// Raw uses the printed forms m = 1-z, r = 4z(1-z), a = z (which sum to
// 1 + 4z(1-z)); Normalized rescales them onto the unit simplex.
enum class CompositionMode { Raw, Normalized };

// Canonical order Phys < Aux < Tech < Prof < Mgmt drives tie-breaking and
// every column order in emitted files.
enum class OccupationKind : int { Phys = 0, Aux = 1, Tech = 2, Prof = 3, Mgmt = 4 };

inline constexpr std::size_t kOccupationCount = 5;

inline constexpr std::array<OccupationKind, kOccupationCount> kAllOccupations{
    OccupationKind::Phys, OccupationKind::Aux, OccupationKind::Tech,
    OccupationKind::Prof, OccupationKind::Mgmt};

constexpr std::size_t index_of(OccupationKind kind) noexcept {
  return static_cast<std::size_t>(kind);
}

constexpr std::string_view to_string(OccupationKind kind) noexcept {
  switch (kind) {
    case OccupationKind::Phys: return "phys";
    case OccupationKind::Aux: return "aux";
    case OccupationKind::Tech: return "tech";
    case OccupationKind::Prof: return "prof";
    case OccupationKind::Mgmt: return "mgmt";
  }
  return "?";
}

inline std::optional<OccupationKind> parse_occupation(std::string_view name) {
  for (auto kind : kAllOccupations) {
    if (to_string(kind) == name) return kind;
  }
  return std::nullopt;
}

constexpr std::string_view to_string(CompositionMode mode) noexcept {
  return mode == CompositionMode::Raw ? "raw" : "normalized";
}

struct SkillComposition {
  double manual = 0.0;
  double routine = 0.0;
  double abstract = 0.0;

  double sum() const noexcept { return manual + routine + abstract; }
};

inline void check_task_index(double z) {
  if (!(z >= 0.0 && z <= 1.0)) {
    throw DomainError("task index " + std::to_string(z) + " outside [0, 1]");
  }
}

inline SkillComposition skill_composition(double z, CompositionMode mode) {
  check_task_index(z);
  SkillComposition s{1.0 - z, 4.0 * z * (1.0 - z), z};
  if (mode == CompositionMode::Normalized) {
    // raw sum is 1 + 4z(1-z) >= 1 on [0, 1]
    const double total = s.sum();
    s.manual /= total;
    s.routine /= total;
    s.abstract /= total;
  }
  return s;
}

// Componentwise d/dz of skill_composition.
inline SkillComposition skill_composition_slope(double z, CompositionMode mode) {
  check_task_index(z);
  const SkillComposition raw_slope{-1.0, 4.0 - 8.0 * z, 1.0};
  if (mode == CompositionMode::Raw) return raw_slope;

  const SkillComposition raw{1.0 - z, 4.0 * z * (1.0 - z), z};
  const double total = raw.sum();
  const double total_slope = raw_slope.sum();
  const double denom = total * total;
  return {(raw_slope.manual * total - raw.manual * total_slope) / denom,
          (raw_slope.routine * total - raw.routine * total_slope) / denom,
          (raw_slope.abstract * total - raw.abstract * total_slope) / denom};
}

struct OccupationSpec {
  OccupationKind kind = OccupationKind::Phys;
  double lambda_m = 0.0;
  double lambda_r = 0.0;
  double lambda_a = 0.0;
  double wage = 1.0;

  void validate() const {
    const std::string who(to_string(kind));
    if (!(lambda_m >= 0.0 && lambda_r >= 0.0 && lambda_a >= 0.0) ||
        !std::isfinite(lambda_m + lambda_r + lambda_a)) {
      throw ConfigError("occupation " + who + ": capabilities must be finite and nonnegative");
    }
    if (lambda_m + lambda_r + lambda_a <= 0.0) {
      throw ConfigError("occupation " + who + ": capability vector is all zero");
    }
    if (!(wage > 0.0) || !std::isfinite(wage)) {
      throw ConfigError("occupation " + who + ": wage must be positive");
    }
  }
};

struct DigitalCapitalSpec {
  double kappa_bar = 1.0;  // baseline productivity at z = 0
  double theta = 0.0;      // digital capability
  double gamma = 2.0;      // complexity exponent, > 1
  double rental = 1.0;     // rental price (not the routine intensity)

  void validate() const {
    if (!(kappa_bar > 0.0) || !std::isfinite(kappa_bar)) {
      throw ConfigError("digital.kappa_bar must be positive");
    }
    if (!(theta >= 0.0) || !std::isfinite(theta)) {
      throw ConfigError("digital.theta must be nonnegative");
    }
    if (!(gamma > 1.0) || !std::isfinite(gamma)) {
      throw ConfigError("digital.gamma must exceed 1");
    }
    if (!(rental > 0.0) || !std::isfinite(rental)) {
      throw ConfigError("digital.rental must be positive");
    }
  }
};

struct EconomyConfig {
  std::vector<OccupationSpec> occupations;
  DigitalCapitalSpec digital;
  CompositionMode composition_mode = CompositionMode::Raw;

  void validate() const {
    if (occupations.empty()) throw ConfigError("economy needs at least one occupation");
    std::array<bool, kOccupationCount> seen{};
    for (const auto& occ : occupations) {
      occ.validate();
      if (seen[index_of(occ.kind)]) {
        throw ConfigError("duplicate occupation " + std::string(to_string(occ.kind)));
      }
      seen[index_of(occ.kind)] = true;
    }
    digital.validate();
  }

  const OccupationSpec* find(OccupationKind kind) const noexcept {
    for (const auto& occ : occupations) {
      if (occ.kind == kind) return &occ;
    }
    return nullptr;
  }

  // Copy with occupations sorted into canonical order.
  EconomyConfig canonical() const {
    EconomyConfig out = *this;
    out.occupations.clear();
    for (auto kind : kAllOccupations) {
      if (const auto* occ = find(kind)) out.occupations.push_back(*occ);
    }
    return out;
  }

  EconomyConfig with_theta(double theta) const {
    EconomyConfig out = *this;
    out.digital.theta = theta;
    return out;
  }
};

inline double effective_productivity(const OccupationSpec& occ, double z, CompositionMode mode) {
  const auto s = skill_composition(z, mode);
  return occ.lambda_m * s.manual + occ.lambda_r * s.routine + occ.lambda_a * s.abstract;
}

// d lambda_k / dz, analytic in both composition modes.
inline double productivity_slope(const OccupationSpec& occ, double z, CompositionMode mode) {
  const auto ds = skill_composition_slope(z, mode);
  return occ.lambda_m * ds.manual + occ.lambda_r * ds.routine + occ.lambda_a * ds.abstract;
}

// +inf where the occupation has zero productivity.
inline double labor_unit_cost(const OccupationSpec& occ, double z, CompositionMode mode) {
  const double lambda = effective_productivity(occ, z, mode);
  if (lambda <= 0.0) return std::numeric_limits<double>::infinity();
  return occ.wage / lambda;
}

inline double digital_productivity(const DigitalCapitalSpec& dc, double z) {
  check_task_index(z);
  return dc.kappa_bar + dc.theta * std::pow(z, dc.gamma);
}

inline double digital_unit_cost(const DigitalCapitalSpec& dc, double z) {
  return dc.rental / digital_productivity(dc, z);
}

}  // namespace taskmarket
