#include <gtest/gtest.h>

#include <cmath>

#include "taskmarket/cutoff.hpp"
#include "taskmarket/rng.hpp"

using namespace taskmarket;

namespace {

const OccupationSpec kFlat{OccupationKind::Prof, 1.0, 0.0, 1.0, 1.0};

CutoffOptions relaxed() {
  CutoffOptions o;
  o.regularity = RegularityCheck::NonDecreasing;
  return o;
}

DigitalCapitalSpec flat_digital(double theta) { return {1.0, theta, 2.0, 2.0}; }

// ((r lambda / w - kappa_bar) / theta)^(1/gamma)
double closed_form(double theta) { return std::pow((2.0 * 1.0 / 1.0 - 1.0) / theta, 0.5); }

// Instances that satisfy both preconditions at every theta in [0.5, 8]:
// lambda = m + (a - m) z with a > m and labor cheaper at z = 0.
OccupationSpec increasing(double m, double a, double w) { return {OccupationKind::Tech, m, 0.0, a, w}; }

}  // namespace

TEST(SolveCutoff, ConstantLambdaClosedForm) {
  for (double theta : {4.0, 16.0}) {
    const auto res = solve_cutoff(kFlat, flat_digital(theta), CompositionMode::Raw, relaxed());
    EXPECT_NEAR(res.z_star, closed_form(theta), 1e-10);
    EXPECT_TRUE(res.interior());
    EXPECT_TRUE(res.converged);
    EXPECT_EQ(res.occupation, OccupationKind::Prof);
    EXPECT_EQ(res.theta, theta);
  }
  EXPECT_NEAR(solve_cutoff(kFlat, flat_digital(4), CompositionMode::Raw, relaxed()).z_star, 0.5, 1e-10);
  EXPECT_NEAR(solve_cutoff(kFlat, flat_digital(16), CompositionMode::Raw, relaxed()).z_star, 0.25, 1e-10);
}

TEST(SolveCutoff, StrictCheckRejectsConstantLambda) {
  try {
    solve_cutoff(kFlat, flat_digital(4), CompositionMode::Raw);
    FAIL() << "expected RegularityViolated";
  } catch (const CutoffError& e) {
    EXPECT_EQ(e.failure(), CutoffFailure::RegularityViolated);
  }
}

TEST(SolveCutoff, DominanceGivesNoCrossing) {
  try {
    solve_cutoff(kFlat, {1.0, 1.0, 2.0, 0.5}, CompositionMode::Raw, relaxed());
    FAIL() << "expected NoCrossing";
  } catch (const CutoffError& e) {
    EXPECT_EQ(e.failure(), CutoffFailure::NoCrossing);
  }
}

TEST(SolveCutoff, DecreasingProductivityIsIrregular) {
  const OccupationSpec falling{OccupationKind::Phys, 2.0, 0.0, 1.0, 1.0};
  try {
    solve_cutoff(falling, flat_digital(4), CompositionMode::Raw, relaxed());
    FAIL() << "expected RegularityViolated";
  } catch (const CutoffError& e) {
    EXPECT_EQ(e.failure(), CutoffFailure::RegularityViolated);
  }
}

TEST(SolveCutoff, DigitalCheaperBelowIsIrregular) {
  // Productivity rises fast enough that labor overtakes digital from above.
  const OccupationSpec steep{OccupationKind::Prof, 0.1, 0.0, 4.0, 1.0};
  try {
    solve_cutoff(steep, {1.0, 0.0, 2.0, 1.0}, CompositionMode::Raw);
    FAIL() << "expected RegularityViolated";
  } catch (const CutoffError& e) {
    EXPECT_EQ(e.failure(), CutoffFailure::RegularityViolated);
  }
}

TEST(SolveCutoff, MultipleCrossingsDetected) {
  // lambda concave and increasing: labor cost falls early. Digital cost with a
  // large exponent stays flat, then drops late. Gap signs run +, -, +.
  const OccupationSpec concave{OccupationKind::Aux, 0.2, 0.4, 2.0, 1.0};
  try {
    solve_cutoff(concave, {1.0, 3.0, 8.0, 1.0}, CompositionMode::Raw);
    FAIL() << "expected MultipleCrossings";
  } catch (const CutoffError& e) {
    EXPECT_EQ(e.failure(), CutoffFailure::MultipleCrossings);
  }
}

TEST(SolveCutoff, ResidualSmallAndAgreesWithRegionMap) {
  Rng rng(8);
  int checked = 0;
  for (int draw = 0; draw < 400 && checked < 40; ++draw) {
    const auto occ = increasing(rng.uniform(0.5, 1.5), rng.uniform(1.6, 3.0), rng.uniform(0.5, 1.5));
    const DigitalCapitalSpec dc{rng.uniform(0.1, 1), rng.uniform(0.5, 8), 1.0 + rng.uniform(0.05, 2),
                                rng.uniform(0.5, 2)};
    CutoffResult res;
    try {
      res = solve_cutoff(occ, dc, CompositionMode::Raw);
    } catch (const CutoffError&) {
      continue;
    }
    if (!res.interior()) continue;
    ++checked;
    const double ck = labor_unit_cost(occ, res.z_star, CompositionMode::Raw);
    const double cd = digital_unit_cost(dc, res.z_star);
    EXPECT_LE(std::abs(ck - cd), 1e-10 * std::max(ck, cd));

    EconomyConfig econ;
    econ.occupations = {occ};
    econ.digital = dc;
    const auto map = compute_region_map(econ);
    ASSERT_EQ(map.regions.size(), 2u);
    EXPECT_NEAR(map.regions[0].hi, res.z_star, 1e-8);
  }
  EXPECT_GE(checked, 20);
}

TEST(CutoffDerivative, ConstantLambdaSimplification) {
  // lambda' = 0 leaves -z / (theta gamma)
  EXPECT_NEAR(cutoff_derivative(kFlat, flat_digital(4), 0.5, CompositionMode::Raw), -0.0625, 1e-14);
  EXPECT_NEAR(cutoff_derivative(kFlat, flat_digital(16), 0.25, CompositionMode::Raw), -0.0078125, 1e-15);
}

TEST(CutoffDerivative, MatchesFiniteDifferenceAndIsNegative) {
  Rng rng(17);
  int checked = 0;
  for (int draw = 0; draw < 600 && checked < 60; ++draw) {
    const auto mode = draw % 3 == 0 ? CompositionMode::Normalized : CompositionMode::Raw;
    const auto occ = increasing(rng.uniform(0.5, 1.5), rng.uniform(1.6, 3.0), rng.uniform(0.5, 1.5));
    DigitalCapitalSpec dc{rng.uniform(0.1, 1), rng.uniform(0.5, 8), 1.0 + rng.uniform(0.05, 2), rng.uniform(0.5, 2)};
    CutoffOptions precise;
    precise.bracket_width = 0.0;
    const double h = 1e-5 * dc.theta;
    try {
      const auto mid = solve_cutoff(occ, dc, mode, precise);
      auto up = dc, dn = dc;
      up.theta += h;
      dn.theta -= h;
      const auto zu = solve_cutoff(occ, up, mode, precise);
      const auto zd = solve_cutoff(occ, dn, mode, precise);
      if (!mid.interior() || !zu.interior() || !zd.interior()) continue;
      const double fd = (zu.z_star - zd.z_star) / (2 * h);
      const double analytic = cutoff_derivative(occ, dc, mid.z_star, mode);
      EXPECT_LT(analytic, 0.0);
      EXPECT_LE(std::abs(analytic - fd) / std::abs(fd), 1e-4);
      ++checked;
    } catch (const CutoffError&) {
    }
  }
  EXPECT_GE(checked, 30);
}

TEST(ShareSensitivity, MatchesFiniteDifferenceOfShares) {
  EconomyConfig econ;
  econ.occupations = {{OccupationKind::Phys, 10.0, 0.0, 9.5, 0.932}, {OccupationKind::Aux, 0.0, 2.0, 10.0, 0.55},
                      {OccupationKind::Tech, 0.0, 1.0, 10.0, 0.471}, {OccupationKind::Prof, 0.0, 0.4, 10.0, 0.437},
                      {OccupationKind::Mgmt, 0.0, 0.0, 10.0, 0.426}};
  econ.digital = {10.0, 2.1, 1.05, 1.0};
  const auto map = compute_region_map(econ);
  const auto analytic = share_sensitivity(econ, map);
  const double h = 1e-4;
  const auto up = hiring_shares(labor_demand(compute_region_map(econ.with_theta(2.1 + h))));
  const auto dn = hiring_shares(labor_demand(compute_region_map(econ.with_theta(2.1 - h))));
  double sum = 0.0;
  for (auto k : kAllOccupations) {
    const double fd = (up[k] - dn[k]) / (2 * h);
    EXPECT_NEAR(analytic[index_of(k)], fd, 1e-5 + 1e-4 * std::abs(fd)) << to_string(k);
    sum += analytic[index_of(k)];
  }
  EXPECT_NEAR(sum, 0.0, 1e-12);
  EXPECT_LT(analytic[index_of(OccupationKind::Phys)], 0.0);
  EXPECT_GT(analytic[index_of(OccupationKind::Prof)], 0.0);
}

TEST(DemandSensitivity, SingleBoundaryMovesAtCutoffDerivative) {
  EconomyConfig econ;
  econ.occupations = {kFlat};
  econ.digital = flat_digital(4);
  const auto d = demand_sensitivity(econ, compute_region_map(econ));
  EXPECT_NEAR(d[Executor::labor(OccupationKind::Prof).rank()], -0.0625, 1e-8);
  EXPECT_NEAR(d[Executor::digital().rank()], 0.0625, 1e-8);
}

TEST(Sweep, ConstantLambda) {
  EconomyConfig econ;
  econ.occupations = {kFlat};
  econ.digital = flat_digital(0);
  SweepOptions opts;
  opts.cutoff = relaxed();
  const auto table = sweep_theta(econ, {4.0, 16.0}, opts);
  ASSERT_EQ(table.rows.size(), 2u);
  ASSERT_EQ(table.occupations.size(), 1u);
  EXPECT_NEAR(*table.rows[0].cutoff[index_of(OccupationKind::Prof)], 0.5, 1e-10);
  EXPECT_NEAR(*table.rows[1].cutoff[index_of(OccupationKind::Prof)], 0.25, 1e-10);
  EXPECT_NEAR(table.rows[0].demand[Executor::digital()], 0.5, 1e-9);
  EXPECT_NEAR(table.rows[1].demand[Executor::digital()], 0.75, 1e-9);
}

TEST(Sweep, DominatedDigitalAtZeroTheta) {
  EconomyConfig econ;
  econ.occupations = {kFlat};
  econ.digital = {1.0, 0.0, 2.0, 10.0};
  const auto table = sweep_theta(econ, {0.0});
  EXPECT_EQ(table.rows[0].demand[Executor::digital()], 0.0);
  EXPECT_FALSE(table.rows[0].cutoff[index_of(OccupationKind::Prof)].has_value());
  ASSERT_TRUE(table.rows[0].shares.has_value());
  EXPECT_EQ((*table.rows[0].shares)[OccupationKind::Prof], 1.0);
}

TEST(Sweep, RejectsBadThetaLists) {
  EconomyConfig econ;
  econ.occupations = {kFlat};
  EXPECT_THROW(sweep_theta(econ, {}), DomainError);
  EXPECT_THROW(sweep_theta(econ, {1.0, 1.0}), DomainError);
  EXPECT_THROW(sweep_theta(econ, {-1.0}), DomainError);
}

TEST(Sweep, DigitalMassNonDecreasingAndMassesSumToOne) {
  Rng rng(4);
  std::vector<double> thetas;
  for (int i = 0; i <= 40; ++i) thetas.push_back(0.2 * i);
  for (int e = 0; e < 15; ++e) {
    EconomyConfig econ;
    for (auto k : kAllOccupations) {
      econ.occupations.push_back({k, rng.uniform(0, 2), rng.uniform(0, 2), rng.uniform(0, 2), rng.uniform(0.5, 2)});
    }
    econ.digital = {rng.uniform(0.1, 1), 0.0, 1.0 + rng.uniform(0.05, 2), rng.uniform(0.5, 2)};
    SweepOptions opts;
    opts.scan_points = 1025;
    const auto table = sweep_theta(econ, thetas, opts);
    double prev = -1.0;
    for (const auto& row : table.rows) {
      double total = 0;
      for (double m : row.demand.masses()) total += m;
      EXPECT_NEAR(total, 1.0, 1e-9);
      EXPECT_GE(row.demand[Executor::digital()], prev - 1e-9);
      prev = row.demand[Executor::digital()];
    }
  }
}

TEST(Prop1, AllKeptDrawsPass) {
  const auto report = verify_proposition1(20000, 20240601);
  EXPECT_EQ(report.draws.size(), 20000u);
  EXPECT_GT(report.kept, 0u);
  EXPECT_EQ(report.passed, report.kept);
  EXPECT_LE(report.max_rel_error, 1e-4);
  for (const auto& d : report.draws) {
    if (!d.kept) {
      EXPECT_FALSE(d.rejection.empty());
      continue;
    }
    for (std::size_t i = 1; i < d.z_star.size(); ++i) ASSERT_LT(d.z_star[i], d.z_star[i - 1]);
  }
}

TEST(Prop1, DeterministicAcrossThreadCounts) {
  Prop1Options one;
  one.threads = 1;
  Prop1Options many;
  many.threads = 4;
  const auto a = verify_proposition1(3000, 99, one);
  const auto b = verify_proposition1(3000, 99, many);
  ASSERT_EQ(a.draws.size(), b.draws.size());
  EXPECT_EQ(a.kept, b.kept);
  for (std::size_t i = 0; i < a.draws.size(); ++i) {
    EXPECT_EQ(a.draws[i].rejection, b.draws[i].rejection);
    EXPECT_EQ(a.draws[i].z_star, b.draws[i].z_star);
    EXPECT_EQ(a.draws[i].max_rel_error, b.draws[i].max_rel_error);
  }
}

TEST(Prop1, ZeroDrawsTriviallyPasses) {
  const auto report = verify_proposition1(0, 1);
  EXPECT_EQ(report.kept, 0u);
  EXPECT_TRUE(report.all_passed());
  EXPECT_EQ(report.thetas.size(), 20u);
  EXPECT_DOUBLE_EQ(report.thetas.front(), 0.5);
  EXPECT_DOUBLE_EQ(report.thetas.back(), 8.0);
}
