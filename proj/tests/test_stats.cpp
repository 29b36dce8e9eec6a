#include <doctest.h>

#include <cmath>
#include <numeric>
#include <vector>

#include "weatkit/rng.hpp"
#include "weatkit/stats.hpp"

using namespace weatkit;

namespace {

// ---- independent oracles ---------------------------------------------------

// Gauss-Jordan solve of the normal equations (X'X) b = X'y, plus classical
// standard errors from the inverted normal matrix. Deliberately a different
// algorithm from the QR path under test.
struct OracleFit {
  std::vector<double> beta, se, t, p;
};

std::vector<std::vector<double>> invert(std::vector<std::vector<double>> a) {
  std::size_t n = a.size();
  std::vector<std::vector<double>> inv(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i) inv[i][i] = 1.0;
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t pivot = col;
    for (std::size_t r = col + 1; r < n; ++r)
      if (std::fabs(a[r][col]) > std::fabs(a[pivot][col])) pivot = r;
    std::swap(a[col], a[pivot]);
    std::swap(inv[col], inv[pivot]);
    double d = a[col][col];
    REQUIRE(std::fabs(d) > 1e-12);
    for (std::size_t j = 0; j < n; ++j) {
      a[col][j] /= d;
      inv[col][j] /= d;
    }
    for (std::size_t r = 0; r < n; ++r) {
      if (r == col) continue;
      double f = a[r][col];
      for (std::size_t j = 0; j < n; ++j) {
        a[r][j] -= f * a[col][j];
        inv[r][j] -= f * inv[col][j];
      }
    }
  }
  return inv;
}

// numeric integration of the t density (Simpson) for the two-sided p
double t_density(double x, double df) {
  double lg = std::lgamma((df + 1) / 2) - std::lgamma(df / 2) -
              0.5 * std::log(df * 3.14159265358979323846);
  return std::exp(lg - (df + 1) / 2 * std::log1p(x * x / df));
}

double t_sf_oracle(double t, double df) {
  double a = 0.0, b = std::fabs(t);
  const int n = 20000;  // even
  double h = (b - a) / n;
  double sum = t_density(a, df) + t_density(b, df);
  for (int i = 1; i < n; ++i)
    sum += t_density(a + i * h, df) * (i % 2 ? 4.0 : 2.0);
  double integral = sum * h / 3.0;
  return 1.0 - 2.0 * integral;
}

OracleFit ols_oracle(const std::vector<double>& y,
                     const std::vector<std::vector<double>>& cols) {
  std::size_t n = y.size();
  std::size_t p = cols.size() + 1;  // + intercept
  std::vector<std::vector<double>> design(n, std::vector<double>(p, 1.0));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j + 1 < p; ++j) design[i][j + 1] = cols[j][i];

  std::vector<std::vector<double>> xtx(p, std::vector<double>(p, 0.0));
  std::vector<double> xty(p, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t a = 0; a < p; ++a) {
      xty[a] += design[i][a] * y[i];
      for (std::size_t b = 0; b < p; ++b)
        xtx[a][b] += design[i][a] * design[i][b];
    }
  auto inv = invert(xtx);
  OracleFit fit;
  fit.beta.assign(p, 0.0);
  for (std::size_t a = 0; a < p; ++a)
    for (std::size_t b = 0; b < p; ++b) fit.beta[a] += inv[a][b] * xty[b];

  double rss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double pred = 0.0;
    for (std::size_t a = 0; a < p; ++a) pred += design[i][a] * fit.beta[a];
    rss += (y[i] - pred) * (y[i] - pred);
  }
  double s2 = rss / double(n - p);
  for (std::size_t a = 0; a < p; ++a) {
    double se = std::sqrt(s2 * inv[a][a]);
    fit.se.push_back(se);
    fit.t.push_back(fit.beta[a] / se);
    fit.p.push_back(t_sf_oracle(fit.beta[a] / se, double(n - p)));
  }
  return fit;
}

std::vector<double> random_vec(std::size_t n, Rng& rng, double lo = -2,
                               double hi = 2) {
  std::vector<double> v(n);
  for (auto& x : v) x = rng.uniform(lo, hi);
  return v;
}

}  // namespace

TEST_CASE("standardize basics") {
  std::vector<double> v = {1, 2, 3};
  auto z = standardize(v);
  CHECK(z[0] == doctest::Approx(-1.0).epsilon(1e-12));
  CHECK(z[1] == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(z[2] == doctest::Approx(1.0).epsilon(1e-12));

  std::vector<double> constant = {5, 5, 5};
  CHECK_THROWS_AS(standardize(constant), NumericError);

  Rng rng(1);
  auto big = random_vec(1000, rng);
  auto zb = standardize(big);
  CHECK(std::fabs(mean(zb)) < 1e-10);
  CHECK(std::fabs(sample_sd(zb) - 1.0) < 1e-10);
}

TEST_CASE("pearson basics and oracle") {
  Rng rng(2);
  auto x = random_vec(100, rng);
  CHECK(pearson(x, x) == doctest::Approx(1.0).epsilon(1e-12));
  auto negx = x;
  for (auto& v : negx) v = -v;
  CHECK(pearson(x, negx) == doctest::Approx(-1.0).epsilon(1e-12));

  auto y = random_vec(100, rng);
  double mx = mean(x), my = mean(y);
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  CHECK(pearson(x, y) ==
        doctest::Approx(sxy / std::sqrt(sxx * syy)).epsilon(1e-12));

  std::vector<double> c = {1, 1, 1};
  std::vector<double> d = {1, 2, 3};
  CHECK_THROWS_AS(pearson(c, d), NumericError);
}

TEST_CASE("t_sf matches the numeric-integration oracle") {
  CHECK(t_sf(0.0, 5) == 1.0);
  CHECK(t_sf(1.5, 30) == t_sf(-1.5, 30));

  double p = t_sf(1.96, 10000);
  CHECK(std::fabs(p - 0.05) < 0.0005);
  CHECK(std::fabs(p - t_sf_oracle(1.96, 10000)) < 1e-9);

  for (double t : {0.3, 1.0, 2.5, 4.0})
    for (std::uint64_t df : {1ull, 5ull, 30ull, 500ull})
      CHECK(std::fabs(t_sf(t, df) - t_sf_oracle(t, double(df))) < 1e-8);

  // monotone decreasing in |t|
  double last = 1.1;
  for (double t = 0.0; t < 6.0; t += 0.25) {
    double cur = t_sf(t, 17);
    CHECK(cur <= last);
    last = cur;
  }
}

TEST_CASE("ols reproduces exact fits") {
  Rng rng(3);
  auto x = standardize(random_vec(50, rng));
  DataMatrix X(50);
  X.add_column("x", x);
  RegressionResult fit = ols(x, X, true);
  CHECK(fit.beta[fit.index_of("x")] == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(fit.r_squared == doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("standardized bivariate beta equals pearson r") {
  Rng rng(4);
  for (int trial = 0; trial < 10; ++trial) {
    auto x = random_vec(60, rng);
    auto y = random_vec(60, rng);
    auto zx = standardize(x), zy = standardize(y);
    DataMatrix X(60);
    X.add_column("x", zx);
    RegressionResult fit = ols(zy, X, true);
    CHECK(std::fabs(fit.beta[1] - pearson(x, y)) < 1e-12);
  }
}

TEST_CASE("ols matches the normal-equations oracle") {
  Rng rng(5);
  for (int trial = 0; trial < 100; ++trial) {
    std::size_t n = 20 + rng.below(180);
    std::size_t p = 1 + rng.below(3);
    std::vector<std::vector<double>> cols;
    for (std::size_t j = 0; j < p; ++j) cols.push_back(random_vec(n, rng));
    auto beta_true = random_vec(p, rng);
    std::vector<double> y(n);
    for (std::size_t i = 0; i < n; ++i) {
      y[i] = 0.5;
      for (std::size_t j = 0; j < p; ++j) y[i] += beta_true[j] * cols[j][i];
      y[i] += rng.normal(0.0, 0.5);
    }
    DataMatrix X(n);
    for (std::size_t j = 0; j < p; ++j)
      X.add_column("c" + std::to_string(j), cols[j]);
    RegressionResult fit = ols(y, X, true);
    OracleFit oracle = ols_oracle(y, cols);
    for (std::size_t a = 0; a < fit.beta.size(); ++a) {
      CHECK(std::fabs(fit.beta[a] - oracle.beta[a]) < 1e-8);
      CHECK(std::fabs(fit.se[a] - oracle.se[a]) < 1e-8);
      CHECK(std::fabs(fit.p[a] - oracle.p[a]) < 1e-8);
    }
    // residual orthogonality
    for (std::size_t j = 0; j < p; ++j) {
      double dot = 0;
      for (std::size_t i = 0; i < n; ++i) dot += fit.residuals[i] * cols[j][i];
      CHECK(std::fabs(dot) < 1e-8 * double(n));
    }
  }
}

TEST_CASE("ols rejects rank deficiency naming the collinear column") {
  Rng rng(6);
  auto x = random_vec(30, rng);
  std::vector<double> x2(x);
  for (auto& v : x2) v *= 2.0;  // exact collinearity
  DataMatrix X(30);
  X.add_column("first", x);
  X.add_column("double_first", x2);
  std::vector<double> y = random_vec(30, rng);
  try {
    ols(y, X, true);
    FAIL("expected NumericError");
  } catch (const NumericError& e) {
    std::string msg = e.what();
    CHECK(msg.find("rank deficient") != std::string::npos);
    bool names_one = msg.find("first") != std::string::npos;
    CHECK(names_one);
  }
}

TEST_CASE("ols rejects insufficient rows") {
  DataMatrix X(3);
  X.add_column("a", std::vector<double>{1, 2, 3});
  X.add_column("b", std::vector<double>{2, 1, 4});
  std::vector<double> y = {1, 2, 3};
  CHECK_THROWS_AS(ols(y, X, true), DataError);
}

TEST_CASE("partial_out satisfies Frisch-Waugh-Lovell") {
  Rng rng(7);
  for (int trial = 0; trial < 100; ++trial) {
    std::size_t n = 40 + rng.below(60);
    auto x = random_vec(n, rng);
    std::vector<std::vector<double>> zc;
    for (int j = 0; j < 3; ++j) zc.push_back(random_vec(n, rng));
    std::vector<double> y(n);
    for (std::size_t i = 0; i < n; ++i)
      y[i] = 1.0 + 0.8 * x[i] + 0.5 * zc[0][i] - 0.3 * zc[1][i] +
             0.2 * zc[2][i] + rng.normal(0, 1);

    DataMatrix Z(n);
    for (int j = 0; j < 3; ++j)
      Z.add_column("z" + std::to_string(j), zc[j]);
    PartialResult partial = partial_out(y, x, Z);

    DataMatrix full(n);
    full.add_column("x", x);
    for (int j = 0; j < 3; ++j)
      full.add_column("z" + std::to_string(j), zc[j]);
    RegressionResult fit = ols(y, full, true);
    std::size_t xi = fit.index_of("x");
    CHECK(std::fabs(partial.beta - fit.beta[xi]) < 1e-8);
    CHECK(std::fabs(partial.p - fit.p[xi]) < 1e-8);
  }
}

TEST_CASE("partial_out with empty controls is the bivariate coefficient") {
  Rng rng(8);
  auto x = random_vec(40, rng);
  auto y = random_vec(40, rng);
  DataMatrix empty(40);
  PartialResult partial = partial_out(y, x, empty);
  DataMatrix X(40);
  X.add_column("x", x);
  RegressionResult fit = ols(y, X, true);
  CHECK(std::fabs(partial.beta - fit.beta[1]) < 1e-12);
  CHECK(std::fabs(partial.p - fit.p[1]) < 1e-10);
}

TEST_CASE("partial_out with x orthogonal to Z equals the bivariate slope") {
  // construct x orthogonal (and mean-centered) against a control column
  std::size_t n = 50;
  Rng rng(9);
  auto z = random_vec(n, rng);
  auto zc = standardize(z);
  auto raw = random_vec(n, rng);
  // project out intercept and zc from raw
  double mz = 0, rz = 0, zz = 0;
  for (std::size_t i = 0; i < n; ++i) mz += raw[i];
  mz /= double(n);
  std::vector<double> x(n);
  for (std::size_t i = 0; i < n; ++i) x[i] = raw[i] - mz;
  for (std::size_t i = 0; i < n; ++i) {
    rz += x[i] * zc[i];
    zz += zc[i] * zc[i];
  }
  for (std::size_t i = 0; i < n; ++i) x[i] -= rz / zz * zc[i];

  auto y = random_vec(n, rng);
  DataMatrix Z(n);
  Z.add_column("z", zc);
  PartialResult partial = partial_out(y, x, Z);

  double sxy = 0, sxx = 0, my = mean(y);
  for (std::size_t i = 0; i < n; ++i) {
    sxy += x[i] * (y[i] - my);
    sxx += x[i] * x[i];
  }
  CHECK(std::fabs(partial.beta - sxy / sxx) < 1e-10);
}

TEST_CASE("partial_out rejects x in the span of Z") {
  std::size_t n = 30;
  Rng rng(10);
  auto z = random_vec(n, rng);
  std::vector<double> x(n);
  for (std::size_t i = 0; i < n; ++i) x[i] = 3.0 * z[i] + 1.0;
  auto y = random_vec(n, rng);
  DataMatrix Z(n);
  Z.add_column("z", z);
  CHECK_THROWS_AS(partial_out(y, x, Z), NumericError);
}

TEST_CASE("lowess reproduces exact lines and constants") {
  std::size_t n = 40;
  std::vector<double> x(n), y(n);
  for (std::size_t i = 0; i < n; ++i) {
    x[i] = double(i) * 0.3 - 2.0;
    y[i] = 1.7 * x[i] + 0.4;
  }
  for (double fraction : {0.2, 0.5, 1.0}) {
    auto fitted = lowess(x, y, fraction);
    for (std::size_t i = 0; i < n; ++i)
      CHECK(std::fabs(fitted[i] - y[i]) < 1e-10);
  }

  std::vector<double> yc(n, 3.25);
  auto fitted = lowess(x, yc, 0.5);
  for (double v : fitted) CHECK(v == doctest::Approx(3.25).epsilon(1e-12));
}

TEST_CASE("lowess matches a per-point weighted least squares oracle") {
  std::size_t n = 200;
  Rng rng(11);
  std::vector<double> x(n), y(n);
  for (std::size_t i = 0; i < n; ++i) {
    x[i] = rng.uniform(0.0, 6.28318);
    y[i] = std::sin(x[i]) + rng.normal(0, 0.3);
  }
  double fraction = 0.3;
  auto fitted = lowess(x, y, fraction);

  // oracle: independent per-point weighted fit via Cramer on the 2x2 normal
  // equations, neighborhoods by k-th smallest distance
  std::size_t k = std::size_t(std::ceil(fraction * double(n)));
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> dist(n);
    for (std::size_t j = 0; j < n; ++j) dist[j] = std::fabs(x[j] - x[i]);
    std::vector<double> sorted = dist;
    std::nth_element(sorted.begin(), sorted.begin() + long(k - 1),
                     sorted.end());
    double dmax = sorted[k - 1];
    double sw = 0, swx = 0, swy = 0, swxx = 0, swxy = 0;
    for (std::size_t j = 0; j < n; ++j) {
      if (dist[j] > dmax) continue;
      double u = dist[j] / dmax;
      double w = std::pow(1.0 - u * u * u, 3.0);
      sw += w;
      swx += w * x[j];
      swy += w * y[j];
      swxx += w * x[j] * x[j];
      swxy += w * x[j] * y[j];
    }
    double det = sw * swxx - swx * swx;
    double a = (swy * swxx - swx * swxy) / det;
    double b = (sw * swxy - swx * swy) / det;
    CHECK(std::fabs(fitted[i] - (a + b * x[i])) < 1e-8);
  }
}

TEST_CASE("lowess is invariant to permuting the points") {
  std::size_t n = 60;
  Rng rng(12);
  std::vector<double> x(n), y(n);
  for (std::size_t i = 0; i < n; ++i) {
    x[i] = rng.uniform(-3, 3);
    y[i] = x[i] * x[i] + rng.normal(0, 0.1);
  }
  auto fitted = lowess(x, y, 0.4);

  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t(0));
  for (std::size_t i = n; i > 1; --i)
    std::swap(perm[i - 1], perm[rng.below(i)]);
  std::vector<double> px(n), py(n);
  for (std::size_t i = 0; i < n; ++i) {
    px[i] = x[perm[i]];
    py[i] = y[perm[i]];
  }
  auto pfitted = lowess(px, py, 0.4);
  for (std::size_t i = 0; i < n; ++i)
    CHECK(pfitted[i] == fitted[perm[i]]);
}

TEST_CASE("lowess degenerate neighborhood errors") {
  std::vector<double> x = {1, 1, 1, 1};
  std::vector<double> y = {1, 2, 3, 4};
  CHECK_THROWS_AS(lowess(x, y, 0.5), NumericError);
  std::vector<double> x2 = {1, 2};
  std::vector<double> y2 = {1, 2};
  CHECK_THROWS_AS(lowess(x2, y2, 0.5), DataError);  // fewer than 3 points
}

TEST_CASE("significance stars follow the cumulative thresholds") {
  CHECK(significance_stars(0.0005) == "***");
  CHECK(significance_stars(0.004) == "**");
  CHECK(significance_stars(0.04) == "*");
  CHECK(significance_stars(0.05) == "");  // boundary gets no star
  CHECK(significance_stars(0.01) == "*");
  CHECK(significance_stars(0.001) == "**");
  CHECK(significance_stars(0.5) == "");
}

namespace {

std::vector<GroupBiasRecord> synthetic_records(std::size_t n,
                                               std::uint64_t seed) {
  Rng rng(seed);
  std::vector<GroupBiasRecord> records;
  for (std::size_t i = 0; i < n; ++i) {
    GroupBiasRecord r;
    r.group_id = "g" + std::to_string(i);
    r.rel_b_name_freq = rng.uniform(0.01, 0.5);
    r.weat_values = {rng.normal(0, 1)};
    r.weat_mean = r.weat_values[0] - 2.0 * r.rel_b_name_freq;
    r.covariates["outcome"] =
        0.7 * r.weat_mean + rng.normal(0, 0.5);
    r.covariates["noise"] = rng.normal(0, 1);
    records.push_back(std::move(r));
  }
  return records;
}

}  // namespace

TEST_CASE("association table: no-controls beta equals pearson r") {
  auto records = synthetic_records(40, 77);
  AssociationTable table = build_association_table(
      records, {"outcome"}, {{"no_controls", {}},
                             {"with_noise", {"noise"}}});
  REQUIRE(table.cells.size() == 1);
  REQUIRE(table.cells[0].size() == 2);
  const AssociationCell& cell = table.cells[0][0];
  REQUIRE(cell.ok());
  std::vector<double> w = record_column(records, "weat");
  std::vector<double> o = record_column(records, "outcome");
  CHECK(std::fabs(cell.beta - pearson(w, o)) < 1e-12);
  CHECK(cell.stars == significance_stars(cell.p));
}

TEST_CASE("association table isolates per-cell failures") {
  auto records = synthetic_records(40, 78);
  for (auto& r : records) r.covariates["clone"] = r.weat_mean;  // collinear
  AssociationTable table = build_association_table(
      records, {"outcome"}, {{"bad", {"clone"}}, {"good", {}}});
  CHECK_FALSE(table.cells[0][0].ok());
  CHECK(table.cells[0][1].ok());
}

TEST_CASE("association table requires 10 rows") {
  auto records = synthetic_records(9, 79);
  CHECK_THROWS_AS(
      build_association_table(records, {"outcome"}, {{"none", {}}}),
      DataError);
}
