#pragma once

// Linear panel estimation: multi-way fixed effects by alternating
// demeaning, OLS via column-pivoted QR, CR1 cluster-robust covariance
// (one- or two-way), and two-stage least squares.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "taskmarket/error.hpp"

namespace taskmarket {

class UnknownColumnError : public ConfigError {
 public:
  explicit UnknownColumnError(const std::string& column)
      : ConfigError("unknown column '" + column + "'"), column_(column) {}
  const std::string& column() const noexcept { return column_; }

 private:
  std::string column_;
};

class RankDeficientError : public Error {
 public:
  explicit RankDeficientError(std::size_t column)
      : Error("design matrix is rank deficient at column " + std::to_string(column)), column_(column) {}
  std::size_t column() const noexcept { return column_; }

 private:
  std::size_t column_;
};

class DemeanConvergenceError : public Error {
 public:
  explicit DemeanConvergenceError(int iterations)
      : Error("fixed-effect demeaning did not converge after " + std::to_string(iterations) + " iterations"),
        iterations_(iterations) {}
  int iterations() const noexcept { return iterations_; }

 private:
  int iterations_;
};

// Column store for firm-year panels. Missing values are NaN.
class PanelDataset {
 public:
  std::size_t rows() const noexcept { return rows_; }
  const std::vector<std::string>& names() const noexcept { return names_; }

  void add_column(std::string name, std::vector<double> values) {
    if (!names_.empty() && values.size() != rows_) {
      throw DomainError("column '" + name + "' has " + std::to_string(values.size()) +
                        " rows, panel has " + std::to_string(rows_));
    }
    if (index_.contains(name)) throw DomainError("duplicate column '" + name + "'");
    rows_ = values.size();
    index_.emplace(name, columns_.size());
    names_.push_back(std::move(name));
    columns_.push_back(std::move(values));
  }

  void set_column(const std::string& name, std::vector<double> values) {
    if (auto it = index_.find(name); it != index_.end()) {
      if (values.size() != rows_) throw DomainError("column '" + name + "' length mismatch");
      columns_[it->second] = std::move(values);
    } else {
      add_column(name, std::move(values));
    }
  }

  bool has_column(std::string_view name) const { return index_.contains(std::string(name)); }

  const std::vector<double>& column(std::string_view name) const {
    const auto it = index_.find(std::string(name));
    if (it == index_.end()) throw UnknownColumnError(std::string(name));
    return columns_[it->second];
  }

  // (unit, period) pairs must be unique.
  void check_unique_keys(std::string_view unit = "firm", std::string_view period = "year") const {
    const auto& u = column(unit);
    const auto& p = column(period);
    std::map<std::pair<double, double>, std::size_t> seen;
    for (std::size_t i = 0; i < rows_; ++i) {
      if (!seen.emplace(std::make_pair(u[i], p[i]), i).second) {
        throw DomainError("duplicate (" + std::string(unit) + ", " + std::string(period) + ") key at row " +
                          std::to_string(i));
      }
    }
  }

 private:
  std::size_t rows_ = 0;
  std::vector<std::string> names_;
  std::vector<std::vector<double>> columns_;
  std::unordered_map<std::string, std::size_t> index_;
};

// Regressor names may be interaction products "a*b" (elementwise).
inline std::vector<double> resolve_column(const PanelDataset& panel, std::string_view expr) {
  std::vector<double> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t star = expr.find('*', start);
    const std::string_view part = expr.substr(start, star == std::string_view::npos ? expr.npos : star - start);
    const auto& col = panel.column(part);
    if (out.empty()) {
      out = col;
    } else {
      for (std::size_t i = 0; i < out.size(); ++i) out[i] *= col[i];
    }
    if (star == std::string_view::npos) break;
    start = star + 1;
  }
  return out;
}

// Dense 0-based codes for a categorical column (levels in sorted order).
struct FactorCodes {
  std::vector<int> codes;
  int levels = 0;
};

inline FactorCodes encode_factor(std::span<const double> values) {
  std::map<double, int> level;
  for (double v : values) level.emplace(v, 0);
  int next = 0;
  for (auto& [v, code] : level) code = next++;
  FactorCodes f;
  f.levels = next;
  f.codes.reserve(values.size());
  for (double v : values) f.codes.push_back(level.at(v));
  return f;
}

// Codes for the intersection of two factors.
inline FactorCodes intersect_factors(const FactorCodes& a, const FactorCodes& b) {
  std::vector<double> combined(a.codes.size());
  for (std::size_t i = 0; i < combined.size(); ++i) {
    combined[i] = static_cast<double>(a.codes[i]) * static_cast<double>(b.levels) + b.codes[i];
  }
  return encode_factor(combined);
}

struct DemeanResult {
  Eigen::MatrixXd data;
  int iterations = 0;
};

inline constexpr double kDemeanTolerance = 1e-10;
inline constexpr int kDemeanMaxIterations = 1000;

namespace detail {

inline double subtract_group_means(Eigen::MatrixXd& m, const FactorCodes& f) {
  Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(f.levels, m.cols());
  Eigen::VectorXd counts = Eigen::VectorXd::Zero(f.levels);
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    sums.row(f.codes[static_cast<std::size_t>(i)]) += m.row(i);
    counts(f.codes[static_cast<std::size_t>(i)]) += 1.0;
  }
  for (Eigen::Index g = 0; g < f.levels; ++g) sums.row(g) /= counts(g);
  double change = 0.0;
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    const auto mean = sums.row(f.codes[static_cast<std::size_t>(i)]);
    change = std::max(change, mean.cwiseAbs().maxCoeff());
    m.row(i) -= mean;
  }
  return change;
}

}  // namespace detail

// Alternating within-group demeaning over every factor until the largest
// cell change in a full sweep is <= tol. One factor needs a single pass;
// no factors means subtracting the column means (an intercept).
inline DemeanResult within_transform(const Eigen::MatrixXd& data, const std::vector<FactorCodes>& factors,
                                     double tol = kDemeanTolerance, int max_iterations = kDemeanMaxIterations) {
  DemeanResult out{data, 0};
  if (data.rows() == 0) return out;
  if (factors.empty()) {
    out.data.rowwise() -= out.data.colwise().mean();
    out.iterations = 1;
    return out;
  }
  for (const auto& f : factors) {
    if (f.levels < 1 || f.codes.size() != static_cast<std::size_t>(data.rows())) {
      throw DomainError("within_transform: factor does not match the data");
    }
  }
  if (factors.size() == 1) {
    detail::subtract_group_means(out.data, factors.front());
    out.iterations = 1;
    return out;
  }
  while (out.iterations < max_iterations) {
    ++out.iterations;
    double change = 0.0;
    for (const auto& f : factors) change = std::max(change, detail::subtract_group_means(out.data, f));
    if (change <= tol) return out;
  }
  throw DemeanConvergenceError(out.iterations);
}

struct OlsFit {
  Eigen::VectorXd beta;
  Eigen::VectorXd residuals;
  Eigen::MatrixXd xtx_inverse;
};

inline constexpr double kRankThreshold = 1e-10;

namespace detail {

inline std::size_t first_dependent_column(const Eigen::MatrixXd& x) {
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(x.leftCols(j + 1));
    qr.setThreshold(kRankThreshold);
    if (qr.rank() < j + 1) return static_cast<std::size_t>(j);
  }
  return static_cast<std::size_t>(x.cols());
}

}  // namespace detail

inline OlsFit ols(const Eigen::MatrixXd& x, const Eigen::VectorXd& y) {
  if (x.rows() != y.rows()) throw DomainError("ols: X and y row counts differ");
  if (x.rows() < x.cols()) throw DomainError("ols: fewer rows than columns");
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(x);
  qr.setThreshold(kRankThreshold);
  if (qr.rank() < x.cols()) throw RankDeficientError(detail::first_dependent_column(x));
  OlsFit fit;
  fit.beta = qr.solve(y);
  fit.residuals = y - x * fit.beta;
  // (X'X)^-1 = P R^-1 R^-T P'
  const auto k = x.cols();
  Eigen::MatrixXd r = qr.matrixR().topLeftCorner(k, k).triangularView<Eigen::Upper>();
  Eigen::MatrixXd r_inv = r.triangularView<Eigen::Upper>().solve(Eigen::MatrixXd::Identity(k, k));
  Eigen::MatrixXd inner = r_inv * r_inv.transpose();
  fit.xtx_inverse = qr.colsPermutation() * inner * qr.colsPermutation().transpose();
  return fit;
}

namespace detail {

inline Eigen::MatrixXd cluster_meat(const Eigen::MatrixXd& x, const Eigen::VectorXd& u, const FactorCodes& f) {
  Eigen::MatrixXd scores = Eigen::MatrixXd::Zero(f.levels, x.cols());
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    scores.row(f.codes[static_cast<std::size_t>(i)]) += x.row(i) * u(i);
  }
  return scores.transpose() * scores;
}

inline Eigen::MatrixXd cr1_covariance(const Eigen::MatrixXd& x, const Eigen::VectorXd& u,
                                      const Eigen::MatrixXd& bread, const FactorCodes& f) {
  if (f.levels < 2) throw DomainError("cluster-robust covariance needs at least two clusters");
  const double n = static_cast<double>(x.rows());
  const double k = static_cast<double>(x.cols());
  const double g = static_cast<double>(f.levels);
  const double scale = g / (g - 1.0) * (n - 1.0) / (n - k);
  return scale * bread * cluster_meat(x, u, f) * bread;
}

}  // namespace detail

// CR1 sandwich. With two factors: V(a) + V(b) - V(a and b).
inline Eigen::MatrixXd cluster_robust_covariance(const Eigen::MatrixXd& x, const Eigen::VectorXd& u,
                                                 const Eigen::MatrixXd& bread,
                                                 const std::vector<FactorCodes>& clusters) {
  if (clusters.empty() || clusters.size() > 2) throw DomainError("clustering supports one or two factors");
  if (clusters.size() == 1) return detail::cr1_covariance(x, u, bread, clusters[0]);
  return detail::cr1_covariance(x, u, bread, clusters[0]) + detail::cr1_covariance(x, u, bread, clusters[1]) -
         detail::cr1_covariance(x, u, bread, intersect_factors(clusters[0], clusters[1]));
}

inline Eigen::VectorXd standard_errors(const Eigen::MatrixXd& covariance) {
  return covariance.diagonal().cwiseMax(0.0).cwiseSqrt();
}

inline Eigen::VectorXd cluster_robust_se(const Eigen::MatrixXd& x, const Eigen::VectorXd& u,
                                         const std::vector<FactorCodes>& clusters) {
  const Eigen::MatrixXd bread = (x.transpose() * x).ldlt().solve(Eigen::MatrixXd::Identity(x.cols(), x.cols()));
  return standard_errors(cluster_robust_covariance(x, u, bread, clusters));
}

struct IvFit {
  Eigen::VectorXd beta;
  Eigen::VectorXd residuals;       // y - X beta with the observed endogenous column
  Eigen::MatrixXd fitted_design;   // X with the endogenous column replaced by its projection
  Eigen::MatrixXd xtx_inverse;     // (Xhat' Xhat)^-1
  double first_stage_f = 0.0;
  bool weak_instrument = false;
};

inline constexpr double kWeakInstrumentF = 10.0;

// 2SLS with one endogenous column of `x` and instruments `z`; every other
// column of `x` is treated as exogenous and included in the first stage.
// `absorbed_df` is the number of parameters absorbed before the call
// (fixed effects), used in the first-stage F denominator.
inline IvFit two_sls(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, Eigen::Index endogenous,
                     const Eigen::MatrixXd& z, double absorbed_df = 0.0) {
  if (z.cols() < 1) throw DomainError("two_sls: at least one instrument required");
  if (endogenous < 0 || endogenous >= x.cols()) throw DomainError("two_sls: endogenous column out of range");
  if (z.rows() != x.rows() || y.rows() != x.rows()) throw DomainError("two_sls: row counts differ");
  const Eigen::Index n = x.rows();
  const Eigen::Index k_exog = x.cols() - 1;

  Eigen::MatrixXd exog(n, k_exog);
  for (Eigen::Index j = 0, c = 0; j < x.cols(); ++j) {
    if (j != endogenous) exog.col(c++) = x.col(j);
  }
  Eigen::MatrixXd first(n, z.cols() + k_exog);
  first << z, exog;
  const Eigen::VectorXd endog = x.col(endogenous);
  const OlsFit stage1 = ols(first, endog);

  IvFit fit;
  fit.fitted_design = x;
  fit.fitted_design.col(endogenous) = endog - stage1.residuals;

  const double rss_u = stage1.residuals.squaredNorm();
  const double rss_r = k_exog > 0 ? ols(exog, endog).residuals.squaredNorm() : endog.squaredNorm();
  const double q = static_cast<double>(z.cols());
  const double df = static_cast<double>(n) - static_cast<double>(first.cols()) - absorbed_df;
  fit.first_stage_f = (df > 0.0 && rss_u > 0.0) ? ((rss_r - rss_u) / q) / (rss_u / df)
                                                : std::numeric_limits<double>::infinity();
  fit.weak_instrument = fit.first_stage_f < kWeakInstrumentF;

  const OlsFit stage2 = ols(fit.fitted_design, y);
  fit.beta = stage2.beta;
  fit.xtx_inverse = stage2.xtx_inverse;
  fit.residuals = y - x * fit.beta;
  return fit;
}

// ---------------------------------------------------------------------------
// Specification-level estimation

struct IvSpec {
  std::string endogenous;  // must be one of the regressors
  std::vector<std::string> instruments;
};

struct DesignSpec {
  std::string name;
  std::string outcome;
  std::vector<std::string> regressors;
  std::vector<std::string> fe_factors;
  std::vector<std::string> cluster;  // zero, one or two factors
  std::optional<IvSpec> iv;

  void validate(const PanelDataset& panel) const {
    if (regressors.empty()) throw ConfigError("spec '" + name + "': no regressors");
    if (std::find(regressors.begin(), regressors.end(), outcome) != regressors.end()) {
      throw ConfigError("spec '" + name + "': outcome '" + outcome + "' is also a regressor");
    }
    if (cluster.size() > 2) throw ConfigError("spec '" + name + "': at most two cluster factors");
    (void)panel.column(outcome);
    for (const auto& r : regressors) (void)resolve_column(panel, r);
    for (const auto& f : fe_factors) (void)panel.column(f);
    for (const auto& c : cluster) (void)panel.column(c);
    if (iv) {
      if (iv->instruments.empty()) throw ConfigError("spec '" + name + "': iv needs at least one instrument");
      if (std::find(regressors.begin(), regressors.end(), iv->endogenous) == regressors.end()) {
        throw ConfigError("spec '" + name + "': endogenous '" + iv->endogenous + "' is not a regressor");
      }
      for (const auto& z : iv->instruments) (void)resolve_column(panel, z);
    }
  }
};

struct Term {
  std::string name;
  double coefficient = 0.0;
  double se = 0.0;

  double t_stat() const noexcept { return se > 0.0 ? coefficient / se : 0.0; }
  // Two-sided p-value, normal reference distribution.
  double p_value() const noexcept {
    return se > 0.0 ? std::erfc(std::abs(t_stat()) / std::sqrt(2.0)) : std::numeric_limits<double>::quiet_NaN();
  }
};

// * p < 0.05, ** p < 0.01, *** p < 0.001
inline std::string significance_stars(double p) {
  if (!(p >= 0.0)) return "";
  if (p < 0.001) return "***";
  if (p < 0.01) return "**";
  if (p < 0.05) return "*";
  return "";
}

struct EstimateResult {
  std::string spec_name;
  std::string estimator;  // "ols" or "2sls"
  std::string vcov;       // "classical" or "cluster:<f>[+<g>]"
  std::vector<Term> terms;
  std::size_t n = 0;
  std::size_t dropped_rows = 0;
  double r2_within = 0.0;
  int demean_iterations = 0;
  std::optional<double> first_stage_f;
  bool weak_instrument = false;

  const Term& term(std::string_view name) const {
    for (const auto& t : terms) {
      if (t.name == name) return t;
    }
    throw UnknownColumnError(std::string(name));
  }
};

inline EstimateResult estimate_spec(const PanelDataset& panel, const DesignSpec& spec) {
  spec.validate(panel);
  const std::size_t k = spec.regressors.size();
  const std::size_t q = spec.iv ? spec.iv->instruments.size() : 0;

  std::vector<std::vector<double>> numeric;  // y, X..., Z...
  numeric.push_back(panel.column(spec.outcome));
  for (const auto& r : spec.regressors) numeric.push_back(resolve_column(panel, r));
  if (spec.iv) {
    for (const auto& z : spec.iv->instruments) numeric.push_back(resolve_column(panel, z));
  }
  std::vector<const std::vector<double>*> categorical;
  for (const auto& f : spec.fe_factors) categorical.push_back(&panel.column(f));
  for (const auto& c : spec.cluster) categorical.push_back(&panel.column(c));

  // Listwise deletion.
  std::vector<std::size_t> keep;
  for (std::size_t i = 0; i < panel.rows(); ++i) {
    bool ok = true;
    for (const auto& col : numeric) ok = ok && std::isfinite(col[i]);
    for (const auto* col : categorical) ok = ok && std::isfinite((*col)[i]);
    if (ok) keep.push_back(i);
  }
  EstimateResult result;
  result.spec_name = spec.name;
  result.estimator = spec.iv ? "2sls" : "ols";
  result.n = keep.size();
  result.dropped_rows = panel.rows() - keep.size();
  if (keep.empty()) throw DomainError("spec '" + spec.name + "': no complete rows");

  const auto n = static_cast<Eigen::Index>(keep.size());
  Eigen::MatrixXd data(n, static_cast<Eigen::Index>(numeric.size()));
  for (Eigen::Index i = 0; i < n; ++i) {
    for (std::size_t c = 0; c < numeric.size(); ++c) data(i, static_cast<Eigen::Index>(c)) = numeric[c][keep[i]];
  }
  auto subset_codes = [&](const std::vector<double>& col) {
    std::vector<double> v(keep.size());
    for (std::size_t i = 0; i < keep.size(); ++i) v[i] = col[keep[i]];
    return encode_factor(v);
  };
  std::vector<FactorCodes> fe;
  double absorbed_df = 1.0;  // intercept
  for (std::size_t f = 0; f < spec.fe_factors.size(); ++f) {
    fe.push_back(subset_codes(*categorical[f]));
    absorbed_df += fe.back().levels - 1;
  }
  std::vector<FactorCodes> clusters;
  for (std::size_t c = 0; c < spec.cluster.size(); ++c) {
    clusters.push_back(subset_codes(*categorical[spec.fe_factors.size() + c]));
  }

  const DemeanResult dm = within_transform(data, fe);
  result.demean_iterations = dm.iterations;
  const Eigen::VectorXd y = dm.data.col(0);
  const Eigen::MatrixXd x = dm.data.middleCols(1, static_cast<Eigen::Index>(k));

  Eigen::VectorXd beta;
  Eigen::VectorXd resid;
  Eigen::MatrixXd design;
  Eigen::MatrixXd bread;
  if (spec.iv) {
    const Eigen::MatrixXd z = dm.data.rightCols(static_cast<Eigen::Index>(q));
    const auto endo = std::find(spec.regressors.begin(), spec.regressors.end(), spec.iv->endogenous) -
                      spec.regressors.begin();
    const IvFit fit = two_sls(x, y, endo, z, absorbed_df);
    beta = fit.beta;
    resid = fit.residuals;
    design = fit.fitted_design;
    bread = fit.xtx_inverse;
    result.first_stage_f = fit.first_stage_f;
    result.weak_instrument = fit.weak_instrument;
  } else {
    const OlsFit fit = ols(x, y);
    beta = fit.beta;
    resid = fit.residuals;
    design = x;
    bread = fit.xtx_inverse;
  }

  Eigen::MatrixXd cov;
  if (clusters.empty()) {
    const double df = static_cast<double>(n) - static_cast<double>(k) - absorbed_df;
    const double sigma2 = df > 0.0 ? resid.squaredNorm() / df : std::numeric_limits<double>::quiet_NaN();
    cov = sigma2 * bread;
    result.vcov = "classical";
  } else {
    cov = cluster_robust_covariance(design, resid, bread, clusters);
    result.vcov = "cluster:" + spec.cluster[0] + (spec.cluster.size() > 1 ? "+" + spec.cluster[1] : "");
  }
  const Eigen::VectorXd se = standard_errors(cov);

  const double tss = y.squaredNorm();
  result.r2_within = tss > 0.0 ? 1.0 - resid.squaredNorm() / tss : 0.0;
  for (std::size_t j = 0; j < k; ++j) {
    result.terms.push_back({spec.regressors[j], beta(static_cast<Eigen::Index>(j)), se(static_cast<Eigen::Index>(j))});
  }
  return result;
}

}  // namespace taskmarket
