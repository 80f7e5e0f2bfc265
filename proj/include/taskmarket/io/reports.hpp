#pragma once

// Fixed-layout CSV and SVG renderings of sweep tables, the monotonicity
// report, estimation results and classification output.

#include <optional>
#include <string>
#include <vector>

#include "taskmarket/assignment.hpp"
#include "taskmarket/classifier.hpp"
#include "taskmarket/cutoff.hpp"
#include "taskmarket/econometrics.hpp"
#include "taskmarket/io/csv.hpp"
#include "taskmarket/io/svg.hpp"

namespace taskmarket::io {

// theta, cutoff_<kind>..., mass_<executor>... (digital last), share_<kind>...
inline std::string sweep_csv(const SweepTable& table) {
  CsvWriter w;
  std::vector<std::string> header{"theta"};
  for (auto k : table.occupations) header.push_back("cutoff_" + std::string(to_string(k)));
  for (auto k : table.occupations) header.push_back("mass_" + std::string(to_string(k)));
  header.emplace_back("mass_digital");
  for (auto k : table.occupations) header.push_back("share_" + std::string(to_string(k)));
  w.row(header);
  for (const auto& row : table.rows) {
    std::vector<std::string> f{format_number(row.theta)};
    for (auto k : table.occupations) {
      const auto& c = row.cutoff[index_of(k)];
      f.push_back(c ? format_number(*c) : "");
    }
    for (auto k : table.occupations) f.push_back(format_number(row.demand[Executor::labor(k)]));
    f.push_back(format_number(row.demand[Executor::digital()]));
    for (auto k : table.occupations) f.push_back(row.shares ? format_number((*row.shares)[k]) : "");
    w.row(f);
  }
  return w.str();
}

inline std::string sweep_svg(const SweepTable& table) {
  LineChart cutoffs{"Cutoff task by occupation", "theta", "z*", {}};
  LineChart shares{"Hiring shares and digital task mass", "theta", "share / mass", {}};
  for (auto k : table.occupations) {
    Series c{std::string(to_string(k)), {}};
    Series s{std::string(to_string(k)), {}};
    for (const auto& row : table.rows) {
      c.points.emplace_back(row.theta, row.cutoff[index_of(k)]);
      s.points.emplace_back(row.theta, row.shares ? std::optional<double>((*row.shares)[k]) : std::nullopt);
    }
    cutoffs.series.push_back(std::move(c));
    shares.series.push_back(std::move(s));
  }
  Series digital{"digital mass", {}};
  for (const auto& row : table.rows) digital.points.emplace_back(row.theta, row.demand[Executor::digital()]);
  shares.series.push_back(std::move(digital));
  return render_svg({cutoffs, shares});
}

inline std::string prop1_csv(const Prop1Report& report) {
  CsvWriter w;
  w.row({"draw", "lambda_m", "lambda_r", "lambda_a", "wage", "rental", "kappa_bar", "gamma", "kept", "rejection",
         "monotone", "signs_agree", "max_rel_error", "passed"});
  auto flag = [](bool b) { return std::string(b ? "1" : "0"); };
  for (const auto& d : report.draws) {
    w.row({std::to_string(d.index), format_number(d.occupation.lambda_m), format_number(d.occupation.lambda_r),
           format_number(d.occupation.lambda_a), format_number(d.occupation.wage), format_number(d.digital.rental),
           format_number(d.digital.kappa_bar), format_number(d.digital.gamma), flag(d.kept), d.rejection,
           d.kept ? flag(d.monotone) : "", d.kept ? flag(d.signs_agree) : "",
           d.kept ? format_number(d.max_rel_error) : "", d.kept ? flag(d.passed) : ""});
  }
  return w.str();
}

inline std::string results_csv(const std::vector<EstimateResult>& results) {
  CsvWriter w;
  w.row({"spec", "estimator", "term", "coefficient", "se", "t", "p", "stars", "n", "dropped", "r2_within", "vcov",
         "first_stage_f", "weak_instrument"});
  for (const auto& r : results) {
    for (const auto& t : r.terms) {
      w.row({r.spec_name, r.estimator, t.name, format_number(t.coefficient), format_number(t.se),
             format_number(t.t_stat()), format_number(t.p_value()), significance_stars(t.p_value()),
             std::to_string(r.n), std::to_string(r.dropped_rows), format_number(r.r2_within), r.vcov,
             r.first_stage_f ? format_number(*r.first_stage_f) : "",
             r.first_stage_f ? (r.weak_instrument ? "1" : "0") : ""});
    }
  }
  return w.str();
}

inline std::string classification_csv(const std::vector<ClassificationResult>& results) {
  CsvWriter w;
  w.row({"title", "category_code", "category_name", "method"});
  for (const auto& r : results) {
    w.row({r.title, r.category ? std::to_string(code_of(*r.category)) : "",
           r.category ? std::string(to_string(*r.category)) : "", std::string(to_string(r.method))});
  }
  return w.str();
}

}  // namespace taskmarket::io
