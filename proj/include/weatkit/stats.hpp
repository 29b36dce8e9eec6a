#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <set>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "weatkit/bias.hpp"
#include "weatkit/error.hpp"

namespace weatkit {

// Column-named numeric matrix; the construction paths guarantee no NaN
// entries (rows with missing covariates are dropped at join time).
class DataMatrix {
 public:
  DataMatrix() = default;
  explicit DataMatrix(std::size_t n) : n_(n) {}

  void add_column(const std::string& name, std::span<const double> values) {
    if (n_ == 0 && cols() == 0) n_ = values.size();
    if (values.size() != n_)
      throw DataError("data matrix: column " + name + " has " +
                      std::to_string(values.size()) + " rows, expected " +
                      std::to_string(n_));
    for (const auto& existing : names_)
      if (existing == name)
        throw DataError("data matrix: duplicate column name " + name);
    for (double v : values)
      if (!std::isfinite(v))
        throw DataError("data matrix: non-finite value in column " + name);
    names_.push_back(name);
    data_.insert(data_.end(), values.begin(), values.end());
  }

  std::size_t rows() const { return n_; }
  std::size_t cols() const { return names_.size(); }
  const std::vector<std::string>& names() const { return names_; }

  std::span<const double> column(std::size_t j) const {
    return {data_.data() + j * n_, n_};
  }

  std::span<const double> column(const std::string& name) const {
    for (std::size_t j = 0; j < names_.size(); ++j)
      if (names_[j] == name) return column(j);
    throw DataError("data matrix: no column named " + name);
  }

  bool has_column(const std::string& name) const {
    return std::find(names_.begin(), names_.end(), name) != names_.end();
  }

 private:
  std::vector<std::string> names_;
  std::size_t n_ = 0;
  std::vector<double> data_;  // column-major
};

inline double mean(std::span<const double> x) {
  double s = 0.0;
  for (double v : x) s += v;
  return s / double(x.size());
}

// Sample standard deviation (n-1 denominator).
inline double sample_sd(std::span<const double> x) {
  if (x.size() < 2) throw NumericError("sample sd needs at least 2 values");
  double m = mean(x);
  double ss = 0.0;
  for (double v : x) ss += (v - m) * (v - m);
  return std::sqrt(ss / double(x.size() - 1));
}

// (x - mean) / sd with the sample standard deviation.
inline std::vector<double> standardize(std::span<const double> x) {
  if (x.size() < 2)
    throw NumericError("standardize: need at least 2 values");
  double m = mean(x);
  double sd = sample_sd(x);
  if (sd <= 1e-12)
    throw NumericError("standardize: column is constant (sd <= 1e-12)");
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = (x[i] - m) / sd;
  return out;
}

inline double pearson(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size())
    throw NumericError("pearson: lengths differ");
  if (x.size() < 2) throw NumericError("pearson: need at least 2 values");
  double mx = mean(x), my = mean(y);
  double sxx = 0.0, syy = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    double dx = x[i] - mx, dy = y[i] - my;
    sxx += dx * dx;
    syy += dy * dy;
    sxy += dx * dy;
  }
  double n1 = double(x.size() - 1);
  if (std::sqrt(sxx / n1) <= 1e-12 || std::sqrt(syy / n1) <= 1e-12)
    throw NumericError("pearson: constant input");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

// ---------------------------------------------------------------------------
// Student-t tail probability via the regularized incomplete beta function,
// evaluated with a continued fraction (modified Lentz).

namespace detail {

inline double beta_cont_frac(double a, double b, double x) {
  constexpr int kMaxIter = 500;
  constexpr double kEps = 1e-15;
  constexpr double kTiny = 1e-300;
  double qab = a + b, qap = a + 1.0, qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::fabs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIter; ++m) {
    int m2 = 2 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < kEps) return h;
  }
  throw NumericError("incomplete beta: continued fraction did not converge");
}

}  // namespace detail

// Regularized incomplete beta I_x(a, b).
inline double incomplete_beta(double a, double b, double x) {
  if (!(a > 0.0) || !(b > 0.0))
    throw NumericError("incomplete beta: parameters must be positive");
  if (x < 0.0 || x > 1.0)
    throw NumericError("incomplete beta: x outside [0, 1]");
  if (x == 0.0) return 0.0;
  if (x == 1.0) return 1.0;
  double ln_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                    a * std::log(x) + b * std::log1p(-x);
  double front = std::exp(ln_front);
  if (x < (a + 1.0) / (a + b + 2.0))
    return front * detail::beta_cont_frac(a, b, x) / a;
  return 1.0 - front * detail::beta_cont_frac(b, a, 1.0 - x) / b;
}

// Two-sided p-value: 2 P(T_df >= |t|) = I_{df/(df+t^2)}(df/2, 1/2).
inline double t_sf(double t, std::uint64_t df) {
  if (df < 1) throw NumericError("t_sf: df must be >= 1");
  if (t == 0.0) return 1.0;
  double d = double(df);
  double x = d / (d + t * t);
  return std::clamp(incomplete_beta(d / 2.0, 0.5, x), 0.0, 1.0);
}

// ---------------------------------------------------------------------------
// Ordinary least squares with classical standard errors.

struct RegressionResult {
  std::vector<std::string> names;
  std::vector<double> beta;
  std::vector<double> se;
  std::vector<double> t;
  std::vector<double> p;
  std::uint64_t df_resid = 0;
  double r_squared = 0.0;
  std::vector<double> residuals;

  std::size_t index_of(const std::string& name) const {
    for (std::size_t i = 0; i < names.size(); ++i)
      if (names[i] == name) return i;
    throw DataError("regression result: no coefficient named " + name);
  }
};

inline RegressionResult ols(std::span<const double> y, const DataMatrix& X,
                            bool intercept = true) {
  const std::size_t n = y.size();
  if (X.rows() != n) throw DataError("ols: y and X row counts differ");
  const std::size_t params = X.cols() + (intercept ? 1 : 0);
  if (params == 0) throw DataError("ols: no regressors");
  if (n <= params)
    throw DataError("ols: insufficient rows (" + std::to_string(n) +
                    " rows for " + std::to_string(params) + " parameters)");

  Eigen::MatrixXd design(n, params);
  std::vector<std::string> names;
  std::size_t col = 0;
  if (intercept) {
    design.col(0).setOnes();
    names.emplace_back("(intercept)");
    col = 1;
  }
  for (std::size_t j = 0; j < X.cols(); ++j, ++col) {
    auto c = X.column(j);
    for (std::size_t i = 0; i < n; ++i) design(long(i), long(col)) = c[i];
    names.push_back(X.names()[j]);
  }
  Eigen::Map<const Eigen::VectorXd> yv(y.data(), long(n));

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
  if (std::size_t(qr.rank()) < params) {
    std::vector<std::string> collinear;
    const auto& perm = qr.colsPermutation().indices();
    for (long i = qr.rank(); i < long(params); ++i)
      collinear.push_back(names[std::size_t(perm[i])]);
    throw NumericError("ols: design matrix is rank deficient; collinear "
                       "columns: " + join_tokens(collinear));
  }

  Eigen::VectorXd beta = qr.solve(yv);
  Eigen::VectorXd resid = yv - design * beta;
  double rss = resid.squaredNorm();
  std::uint64_t df = n - params;
  double s2 = rss / double(df);

  Eigen::MatrixXd xtx = design.transpose() * design;
  Eigen::MatrixXd cov =
      s2 * xtx.ldlt().solve(Eigen::MatrixXd::Identity(long(params),
                                                      long(params)));

  RegressionResult result;
  result.names = std::move(names);
  result.df_resid = df;
  result.residuals.assign(resid.data(), resid.data() + n);
  double tss;
  if (intercept) {
    double ym = yv.mean();
    tss = (yv.array() - ym).square().sum();
  } else {
    tss = yv.squaredNorm();
  }
  result.r_squared = tss > 0.0 ? 1.0 - rss / tss : 0.0;
  for (std::size_t i = 0; i < params; ++i) {
    double b = beta[long(i)];
    double se = std::sqrt(std::max(cov(long(i), long(i)), 0.0));
    result.beta.push_back(b);
    result.se.push_back(se);
    double tval = se > 0.0 ? b / se
                           : std::numeric_limits<double>::infinity();
    result.t.push_back(tval);
    result.p.push_back(std::isfinite(tval) ? t_sf(tval, df) : 0.0);
  }
  return result;
}

// Frisch-Waugh-Lovell partialling: residualize y and x on Z (with
// intercept), then regress the y-residuals on the x-residuals. The returned
// coefficient and p-value equal the x coefficient of the full regression of
// y on (x, Z) -- the residual regression uses the full model's residual
// degrees of freedom.
struct PartialResult {
  double beta = 0.0;
  double p = 1.0;
  double t = 0.0;
  std::uint64_t df_resid = 0;
};

inline PartialResult partial_out(std::span<const double> y,
                                 std::span<const double> x,
                                 const DataMatrix& Z) {
  const std::size_t n = y.size();
  if (x.size() != n || (Z.cols() > 0 && Z.rows() != n))
    throw DataError("partial_out: input sizes differ");

  std::vector<double> rx, ry;
  if (Z.cols() == 0) {
    double mx = mean(x), my = mean(y);
    rx.resize(n);
    ry.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      rx[i] = x[i] - mx;
      ry[i] = y[i] - my;
    }
  } else {
    rx = ols(x, Z, true).residuals;
    ry = ols(y, Z, true).residuals;
  }

  double sxx = 0.0, sxy = 0.0, x2 = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += rx[i] * rx[i];
    sxy += rx[i] * ry[i];
    x2 += x[i] * x[i];
  }
  if (sxx <= 1e-16 * std::max(x2, 1e-300))
    throw NumericError("partial_out: x lies in the span of the controls");

  std::size_t params = Z.cols() + 2;  // intercept + x + controls
  if (n <= params) throw DataError("partial_out: insufficient rows");
  std::uint64_t df = n - params;

  double beta = sxy / sxx;
  double rss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double e = ry[i] - beta * rx[i];
    rss += e * e;
  }
  double se = std::sqrt(rss / double(df) / sxx);
  PartialResult out;
  out.beta = beta;
  out.df_resid = df;
  out.t = se > 0.0 ? beta / se : std::numeric_limits<double>::infinity();
  out.p = std::isfinite(out.t) ? t_sf(out.t, df) : 0.0;
  return out;
}

// ---------------------------------------------------------------------------
// LOWESS: per-point weighted linear fit over the nearest ceil(fraction*n)
// x-neighbors with tricube weights, no robustness iterations. Neighborhoods
// are defined by the k-th smallest distance and include all points within
// it, which makes the output invariant to permuting the input order.

inline std::vector<double> lowess(std::span<const double> x,
                                  std::span<const double> y,
                                  double fraction = 2.0 / 3.0) {
  const std::size_t n = x.size();
  if (y.size() != n) throw DataError("lowess: x and y lengths differ");
  if (n < 3) throw DataError("lowess: need at least 3 points");
  if (!(fraction > 0.0) || fraction > 1.0)
    throw ConfigError("lowess: fraction must be in (0, 1]");
  std::size_t k = std::size_t(std::ceil(fraction * double(n)));
  if (k < 2) throw ConfigError("lowess: fraction * n must be at least 2");
  k = std::min(k, n);

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t(0));
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (x[a] != x[b]) return x[a] < x[b];
    return y[a] < y[b];  // canonical tie order: permutation invariance
  });
  std::vector<double> xs(n), ys(n);
  for (std::size_t i = 0; i < n; ++i) {
    xs[i] = x[order[i]];
    ys[i] = y[order[i]];
  }

  std::vector<double> fitted_sorted(n);
  for (std::size_t i = 0; i < n; ++i) {
    // nearest-k window in sorted order
    std::size_t lo = i, hi = i;
    while (hi - lo + 1 < k) {
      double dl = lo > 0 ? xs[i] - xs[lo - 1]
                         : std::numeric_limits<double>::infinity();
      double dr = hi + 1 < n ? xs[hi + 1] - xs[i]
                             : std::numeric_limits<double>::infinity();
      if (dl <= dr) --lo;
      else ++hi;
    }
    double dmax = std::max(xs[i] - xs[lo], xs[hi] - xs[i]);
    // include every point tied with the window radius
    while (lo > 0 && xs[i] - xs[lo - 1] <= dmax) --lo;
    while (hi + 1 < n && xs[hi + 1] - xs[i] <= dmax) ++hi;

    if (dmax <= 0.0)
      throw NumericError("lowess: degenerate neighborhood (all neighbor x "
                         "equal) at x = " + std::to_string(xs[i]));

    double sw = 0.0, swx = 0.0, swy = 0.0;
    for (std::size_t j = lo; j <= hi; ++j) {
      double u = (xs[j] > xs[i] ? xs[j] - xs[i] : xs[i] - xs[j]) / dmax;
      double c = 1.0 - u * u * u;
      double w = c * c * c;
      sw += w;
      swx += w * xs[j];
      swy += w * ys[j];
    }
    double xbar = swx / sw, ybar = swy / sw;
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t j = lo; j <= hi; ++j) {
      double u = (xs[j] > xs[i] ? xs[j] - xs[i] : xs[i] - xs[j]) / dmax;
      double c = 1.0 - u * u * u;
      double w = c * c * c;
      sxx += w * (xs[j] - xbar) * (xs[j] - xbar);
      sxy += w * (xs[j] - xbar) * (ys[j] - ybar);
    }
    if (sxx <= 1e-12 * dmax * dmax * sw) {
      fitted_sorted[i] = ybar;  // only the center carries weight
    } else {
      double slope = sxy / sxx;
      fitted_sorted[i] = ybar + slope * (xs[i] - xbar);
    }
  }

  std::vector<double> fitted(n);
  for (std::size_t i = 0; i < n; ++i) fitted[order[i]] = fitted_sorted[i];
  return fitted;
}

// ---------------------------------------------------------------------------
// Association table (outcomes x control sets), each cell the standardized
// coefficient of the WEAT regressor with its significance.

inline std::string significance_stars(double p) {
  if (p < 0.001) return "***";
  if (p < 0.01) return "**";
  if (p < 0.05) return "*";
  return "";
}

struct AssociationCell {
  double beta = std::numeric_limits<double>::quiet_NaN();
  double p = std::numeric_limits<double>::quiet_NaN();
  std::string stars;
  std::string error;

  bool ok() const { return error.empty(); }
};

struct ControlSet {
  std::string label;
  std::vector<std::string> columns;
};

struct AssociationTable {
  std::vector<std::string> outcomes;
  std::vector<std::string> control_labels;
  std::vector<std::vector<AssociationCell>> cells;  // [outcome][control set]
  std::size_t n_rows = 0;
};

// The reserved column names resolvable from a GroupBiasRecord itself.
inline constexpr const char* kWeatColumn = "weat";
inline constexpr const char* kNameFreqColumn = "rel_b_name_freq";

inline std::vector<double> record_column(
    const std::vector<GroupBiasRecord>& records, const std::string& name) {
  std::vector<double> out;
  out.reserve(records.size());
  for (const auto& r : records) {
    if (name == kWeatColumn) {
      out.push_back(r.weat_mean);
    } else if (name == kNameFreqColumn) {
      out.push_back(r.rel_b_name_freq);
    } else {
      auto it = r.covariates.find(name);
      if (it == r.covariates.end())
        throw DataError("covariate " + name + " missing for group " +
                        r.group_id);
      out.push_back(it->second);
    }
  }
  return out;
}

// For each (outcome, control set): standardize outcome, WEAT estimate, and
// the non-indicator controls, regress the outcome on the WEAT estimate plus
// the controls (intercept always included, never reported), and record the
// WEAT coefficient with its p-value and stars. Regression failures are
// recorded per cell without aborting the other cells.
inline AssociationTable build_association_table(
    const std::vector<GroupBiasRecord>& records,
    const std::vector<std::string>& outcomes,
    const std::vector<ControlSet>& control_sets,
    const std::set<std::string>& indicator_columns = {}) {
  if (records.size() < 10)
    throw DataError("association table: need at least 10 complete rows, "
                    "have " + std::to_string(records.size()));
  AssociationTable table;
  table.n_rows = records.size();
  table.outcomes = outcomes;
  for (const auto& cs : control_sets) table.control_labels.push_back(cs.label);

  std::vector<double> weat_raw = record_column(records, kWeatColumn);
  for (const auto& outcome : outcomes) {
    std::vector<double> y_raw = record_column(records, outcome);
    std::vector<AssociationCell> row;
    for (const auto& cs : control_sets) {
      AssociationCell cell;
      try {
        std::vector<double> y = standardize(y_raw);
        DataMatrix X(records.size());
        X.add_column(kWeatColumn, standardize(weat_raw));
        for (const auto& ctrl : cs.columns) {
          std::vector<double> c = record_column(records, ctrl);
          if (indicator_columns.count(ctrl))
            X.add_column(ctrl, c);  // dummies enter unstandardized
          else
            X.add_column(ctrl, standardize(c));
        }
        RegressionResult fit = ols(y, X, true);
        std::size_t wi = fit.index_of(kWeatColumn);
        cell.beta = fit.beta[wi];
        cell.p = fit.p[wi];
        cell.stars = significance_stars(cell.p);
      } catch (const std::exception& e) {
        cell.error = e.what();
      }
      row.push_back(std::move(cell));
    }
    table.cells.push_back(std::move(row));
  }
  return table;
}

}  // namespace weatkit
