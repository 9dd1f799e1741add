#pragma once

// Scoring and statistical estimators: per-task min-max normalization,
// creativity composition, ICC(3,k), Cohen's d, pooled-variance t test,
// percentiles, OLS with plain and HC3 standard errors, standardized betas.
// Everything computes in double; p-values come from a continued-fraction
// regularized incomplete beta (no lookup tables).

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ideaforge/corpus.hpp"
#include "ideaforge/util.hpp"

namespace ideaforge::stats {

struct StatsError : Error {
  using Error::Error;
};

// ---------------------------------------------------------------------------
// Basic moments

inline double mean(const std::vector<double>& v) {
  if (v.empty()) throw StatsError("mean of empty vector");
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

inline double sample_variance(const std::vector<double>& v) {
  if (v.size() < 2) throw StatsError("sample variance needs >=2 values");
  const double m = mean(v);
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return ss / static_cast<double>(v.size() - 1);
}

inline double population_sd(const std::vector<double>& v) {
  if (v.empty()) throw StatsError("sd of empty vector");
  const double m = mean(v);
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(v.size()));
}

inline double pearson(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2)
    throw StatsError("pearson: mismatched or short inputs");
  const double mx = mean(x), my = mean(y);
  double sxy = 0, sxx = 0, syy = 0;
  for (size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) throw StatsError("pearson: zero variance");
  return sxy / std::sqrt(sxx * syy);
}

// ---------------------------------------------------------------------------
// Regularized incomplete beta I_x(a, b), Lentz's continued fraction.
// Converges to ~1e-15 relative accuracy for the t-distribution arguments
// used here.

namespace detail {

inline double betacf(double a, double b, double x) {
  constexpr int kMaxIter = 500;
  constexpr double kEps = 3e-16;
  constexpr double kFpMin = 1e-300;
  const double qab = a + b, qap = a + 1.0, qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::fabs(d) < kFpMin) d = kFpMin;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIter; ++m) {
    const int m2 = 2 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kFpMin) d = kFpMin;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kFpMin) c = kFpMin;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kFpMin) d = kFpMin;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kFpMin) c = kFpMin;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < kEps) return h;
  }
  throw StatsError("incomplete beta did not converge");
}

}  // namespace detail

inline double incomplete_beta(double a, double b, double x) {
  if (a <= 0.0 || b <= 0.0) throw StatsError("incomplete_beta: a,b must be > 0");
  if (x < 0.0 || x > 1.0) throw StatsError("incomplete_beta: x outside [0,1]");
  if (x == 0.0) return 0.0;
  if (x == 1.0) return 1.0;
  const double lbeta = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b);
  const double front = std::exp(lbeta + a * std::log(x) + b * std::log1p(-x));
  if (x < (a + 1.0) / (a + b + 2.0))
    return front * detail::betacf(a, b, x) / a;
  return 1.0 - front * detail::betacf(b, a, 1.0 - x) / b;
}

// Two-sided tail probability of Student's t with df degrees of freedom.
inline double t_two_sided_p(double t, double df) {
  if (df <= 0.0) throw StatsError("t_two_sided_p: df must be positive");
  if (t == 0.0) return 1.0;
  const double x = df / (df + t * t);
  return incomplete_beta(df / 2.0, 0.5, x);
}

// ---------------------------------------------------------------------------
// Group comparison

// (mean_b - mean_a) / pooled SD with (n-1)-weighted pooling.
inline double cohens_d(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() < 2 || b.size() < 2)
    throw StatsError("cohens_d: each group needs >=2 values");
  const double va = sample_variance(a), vb = sample_variance(b);
  const double pooled =
      std::sqrt(((a.size() - 1) * va + (b.size() - 1) * vb) /
                static_cast<double>(a.size() + b.size() - 2));
  if (pooled == 0.0) throw StatsError("cohens_d: zero pooled SD");
  return (mean(b) - mean(a)) / pooled;
}

struct TTestResult {
  double t = 0.0;
  double df = 0.0;
  double p = 1.0;
};

// Pooled-variance (Student) independent-samples t, df = n_a + n_b - 2.
// Sign convention matches cohens_d: positive when group b's mean is larger.
inline TTestResult t_test_independent(const std::vector<double>& a,
                                      const std::vector<double>& b,
                                      bool welch = false) {
  if (a.size() < 2 || b.size() < 2)
    throw StatsError("t_test: each group needs >=2 values");
  const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
  const double va = sample_variance(a), vb = sample_variance(b);
  TTestResult r;
  if (!welch) {
    const double sp2 = ((na - 1) * va + (nb - 1) * vb) / (na + nb - 2);
    if (sp2 == 0.0) throw StatsError("t_test: zero pooled variance");
    r.t = (mean(b) - mean(a)) / std::sqrt(sp2 * (1.0 / na + 1.0 / nb));
    r.df = na + nb - 2;
  } else {
    const double se2 = va / na + vb / nb;
    if (se2 == 0.0) throw StatsError("t_test: zero variance");
    r.t = (mean(b) - mean(a)) / std::sqrt(se2);
    r.df = se2 * se2 /
           (va * va / (na * na * (na - 1)) + vb * vb / (nb * nb * (nb - 1)));
  }
  r.p = t_two_sided_p(r.t, r.df);
  return r;
}

// Linear interpolation between closest ranks, inclusive: q=0 -> min,
// q=100 -> max.
inline double percentile(std::vector<double> values, double q) {
  if (values.empty()) throw StatsError("percentile of empty set");
  if (q < 0.0 || q > 100.0) throw StatsError("percentile: q outside [0,100]");
  std::sort(values.begin(), values.end());
  const double h = q / 100.0 * static_cast<double>(values.size() - 1);
  const size_t lo = static_cast<size_t>(std::floor(h));
  if (lo + 1 >= values.size()) return values.back();
  const double frac = h - static_cast<double>(lo);
  return values[lo] + frac * (values[lo + 1] - values[lo]);
}

// Mean of the top ceil(5% of n) values.
inline double top_fraction_mean(std::vector<double> values, double fraction = 0.05) {
  if (values.empty()) throw StatsError("top_fraction_mean of empty set");
  std::sort(values.begin(), values.end(), std::greater<>());
  size_t k = static_cast<size_t>(
      std::ceil(fraction * static_cast<double>(values.size())));
  k = std::max<size_t>(1, std::min(k, values.size()));
  double s = 0.0;
  for (size_t i = 0; i < k; ++i) s += values[i];
  return s / static_cast<double>(k);
}

// ---------------------------------------------------------------------------
// ICC(3,k): two-way mixed effects, consistency, average of k raters.
// Rows are targets (ideas), columns are raters (judges).

inline double icc_3k(const std::vector<std::vector<double>>& matrix) {
  const size_t n = matrix.size();
  if (n < 2) throw StatsError("icc_3k: need >=2 rows");
  const size_t k = matrix[0].size();
  if (k < 2) throw StatsError("icc_3k: need >=2 columns");
  for (const auto& row : matrix)
    if (row.size() != k) throw StatsError("icc_3k: ragged matrix");

  double grand = 0.0;
  for (const auto& row : matrix)
    for (double x : row) grand += x;
  grand /= static_cast<double>(n * k);

  std::vector<double> row_means(n, 0.0), col_means(k, 0.0);
  for (size_t i = 0; i < n; ++i) {
    for (size_t j = 0; j < k; ++j) {
      row_means[i] += matrix[i][j];
      col_means[j] += matrix[i][j];
    }
    row_means[i] /= static_cast<double>(k);
  }
  for (size_t j = 0; j < k; ++j) col_means[j] /= static_cast<double>(n);

  double ss_rows = 0.0, ss_cols = 0.0, ss_total = 0.0;
  for (size_t i = 0; i < n; ++i)
    ss_rows += (row_means[i] - grand) * (row_means[i] - grand);
  ss_rows *= static_cast<double>(k);
  for (size_t j = 0; j < k; ++j)
    ss_cols += (col_means[j] - grand) * (col_means[j] - grand);
  ss_cols *= static_cast<double>(n);
  for (size_t i = 0; i < n; ++i)
    for (size_t j = 0; j < k; ++j)
      ss_total += (matrix[i][j] - grand) * (matrix[i][j] - grand);
  const double ss_err = ss_total - ss_rows - ss_cols;

  const double ms_rows = ss_rows / static_cast<double>(n - 1);
  const double ms_err = ss_err / static_cast<double>((n - 1) * (k - 1));
  if (ms_rows <= 0.0) throw StatsError("icc_3k: zero between-row variance");
  return (ms_rows - ms_err) / ms_rows;
}

// ---------------------------------------------------------------------------
// OLS with plain and HC3 standard errors

struct OlsOptions {
  bool hc3 = false;
};

struct RegressionResult {
  std::vector<std::string> names;
  Eigen::VectorXd coefficients;
  Eigen::VectorXd se_plain;
  Eigen::VectorXd se_hc3;  // empty unless requested
  double r2 = 0.0;
  double adj_r2 = 0.0;
  int n = 0;
  Eigen::VectorXd residuals;
};

// X must contain the intercept column if one is wanted. Coefficients come
// from a column-pivoted QR; HC3 uses the hat-matrix diagonal:
//   cov = (X'X)^-1 X' diag(e_i^2 / (1-h_ii)^2) X (X'X)^-1.
inline RegressionResult ols_fit(const Eigen::VectorXd& y,
                                const Eigen::MatrixXd& X,
                                const OlsOptions& opt = {},
                                std::vector<std::string> names = {}) {
  const int n = static_cast<int>(X.rows());
  const int p = static_cast<int>(X.cols());
  if (n <= p) throw StatsError("ols_fit: need more rows than columns");
  if (y.size() != n) throw StatsError("ols_fit: y length mismatch");

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(X);
  qr.setThreshold(1e-10);
  if (qr.rank() < p) throw StatsError("ols_fit: rank-deficient design matrix");

  RegressionResult res;
  res.n = n;
  res.coefficients = qr.solve(y);
  res.residuals = y - X * res.coefficients;

  const Eigen::MatrixXd xtx_inv =
      (X.transpose() * X).ldlt().solve(Eigen::MatrixXd::Identity(p, p));

  const double ssr = res.residuals.squaredNorm();
  const double sigma2 = ssr / static_cast<double>(n - p);
  res.se_plain = (sigma2 * xtx_inv.diagonal().array()).sqrt();

  const double ybar = y.mean();
  const double tss = (y.array() - ybar).square().sum();
  res.r2 = tss > 0.0 ? 1.0 - ssr / tss : 0.0;
  res.adj_r2 = 1.0 - (1.0 - res.r2) * static_cast<double>(n - 1) /
                         static_cast<double>(n - p);

  if (opt.hc3) {
    Eigen::VectorXd w(n);
    for (int i = 0; i < n; ++i) {
      const double h = (X.row(i) * xtx_inv * X.row(i).transpose())(0, 0);
      const double denom = 1.0 - h;
      if (denom <= 0.0) throw StatsError("ols_fit: leverage >= 1 in HC3");
      const double e = res.residuals(i);
      w(i) = e * e / (denom * denom);
    }
    const Eigen::MatrixXd meat = X.transpose() * w.asDiagonal() * X;
    const Eigen::MatrixXd cov = xtx_inv * meat * xtx_inv;
    res.se_hc3 = cov.diagonal().array().sqrt();
  }

  if (names.empty())
    for (int j = 0; j < p; ++j) names.push_back("x" + std::to_string(j));
  if (static_cast<int>(names.size()) != p)
    throw StatsError("ols_fit: names length mismatch");
  res.names = std::move(names);
  return res;
}

// z-scores y and every feature column (population SD), prepends an intercept,
// and fits OLS. Returned coefficients exclude the intercept and are invariant
// to positive affine rescaling of any raw predictor.
inline RegressionResult standardized_betas(const Eigen::VectorXd& y,
                                           const Eigen::MatrixXd& features,
                                           std::vector<std::string> names = {},
                                           bool hc3 = false) {
  const int n = static_cast<int>(features.rows());
  const int p = static_cast<int>(features.cols());
  if (n < 3) throw StatsError("standardized_betas: too few rows");

  auto zscore = [&](const Eigen::VectorXd& v) {
    const double m = v.mean();
    const double sd = std::sqrt((v.array() - m).square().sum() / n);
    if (sd == 0.0) throw StatsError("standardized_betas: zero-variance column");
    return Eigen::VectorXd(((v.array() - m) / sd).matrix());
  };

  Eigen::MatrixXd X(n, p + 1);
  X.col(0) = Eigen::VectorXd::Ones(n);
  for (int j = 0; j < p; ++j) X.col(j + 1) = zscore(features.col(j));
  const Eigen::VectorXd yz = zscore(y);

  std::vector<std::string> all_names{"intercept"};
  if (names.empty())
    for (int j = 0; j < p; ++j) names.push_back("x" + std::to_string(j));
  for (auto& nm : names) all_names.push_back(nm);

  OlsOptions opt;
  opt.hc3 = hc3;
  RegressionResult full = ols_fit(yz, X, opt, all_names);

  RegressionResult out;
  out.n = full.n;
  out.r2 = full.r2;
  out.adj_r2 = full.adj_r2;
  out.residuals = full.residuals;
  out.coefficients = full.coefficients.tail(p);
  out.se_plain = full.se_plain.tail(p);
  if (hc3) out.se_hc3 = full.se_hc3.tail(p);
  out.names.assign(full.names.begin() + 1, full.names.end());
  return out;
}

// ---------------------------------------------------------------------------
// Score table

struct ScoreRow {
  std::string idea_id;
  std::string task_id;
  std::string source;
  double novelty = 0.0;
  double usefulness = 0.0;
  double creativity = 0.0;           // novelty * usefulness
  double creativity_additive = 0.0;  // novelty + usefulness
  bool degenerate_novelty = false;   // per-task dimension had no spread
  bool degenerate_usefulness = false;
};

enum class CreativityMode { product, additive };
enum class JudgeAggregation {
  mean_then_minmax,   // average the judges, then min-max per task
  minmax_then_mean,   // min-max each judge's column per task, then average
};

// Min-max normalizes novelty and usefulness to [0,1] within each task.
// Judge scores for an idea are reduced to a single value per the aggregation
// mode. Tasks where every idea got the same value map to 0 with a degenerate
// flag.
inline std::vector<ScoreRow> minmax_normalize(
    const std::vector<Idea>& ideas, const std::vector<JudgeRatingRow>& ratings,
    JudgeAggregation agg = JudgeAggregation::mean_then_minmax) {
  std::map<std::string, std::vector<const JudgeRatingRow*>> by_idea;
  for (const auto& r : ratings) by_idea[r.idea_id].push_back(&r);

  struct Raw {
    double novelty = 0.0, usefulness = 0.0;
  };
  std::map<std::string, Raw> raw;  // idea_id -> judge-aggregated raw value

  for (const auto& idea : ideas) {
    auto it = by_idea.find(idea.idea_id);
    if (it == by_idea.end() || it->second.empty())
      throw SchemaError("idea without ratings: " + idea.idea_id);
    if (agg == JudgeAggregation::mean_then_minmax) {
      double sn = 0, su = 0;
      for (const auto* r : it->second) {
        sn += r->novelty_raw;
        su += r->usefulness_raw;
      }
      raw[idea.idea_id] = {sn / it->second.size(), su / it->second.size()};
    }
  }

  std::vector<ScoreRow> rows;
  rows.reserve(ideas.size());
  for (const auto& idea : ideas) {
    ScoreRow row;
    row.idea_id = idea.idea_id;
    row.task_id = idea.provenance.task_id;
    row.source = enum_name(idea.provenance.source);
    rows.push_back(std::move(row));
  }

  // map task -> row indices
  std::map<std::string, std::vector<size_t>> by_task;
  for (size_t i = 0; i < rows.size(); ++i) by_task[rows[i].task_id].push_back(i);

  auto normalize_dim = [&](bool novelty_dim) {
    for (auto& [task, idxs] : by_task) {
      if (agg == JudgeAggregation::mean_then_minmax) {
        double lo = std::numeric_limits<double>::infinity();
        double hi = -std::numeric_limits<double>::infinity();
        for (size_t i : idxs) {
          const Raw& r = raw[rows[i].idea_id];
          const double v = novelty_dim ? r.novelty : r.usefulness;
          lo = std::min(lo, v);
          hi = std::max(hi, v);
        }
        const bool degenerate = !(hi > lo);
        for (size_t i : idxs) {
          const Raw& r = raw[rows[i].idea_id];
          const double v = novelty_dim ? r.novelty : r.usefulness;
          const double z = degenerate ? 0.0 : (v - lo) / (hi - lo);
          if (novelty_dim) {
            rows[i].novelty = z;
            rows[i].degenerate_novelty = degenerate;
          } else {
            rows[i].usefulness = z;
            rows[i].degenerate_usefulness = degenerate;
          }
        }
      } else {
        // Per-judge min-max over this task's ideas, then mean across judges.
        std::set<std::string> judges;
        for (size_t i : idxs)
          for (const auto* r : by_idea[rows[i].idea_id]) judges.insert(r->judge_id);
        std::map<std::string, double> acc;
        std::map<std::string, int> cnt;
        bool any_spread = false;
        for (const auto& judge : judges) {
          double lo = std::numeric_limits<double>::infinity();
          double hi = -std::numeric_limits<double>::infinity();
          std::map<std::string, double> vals;
          for (size_t i : idxs) {
            for (const auto* r : by_idea[rows[i].idea_id]) {
              if (r->judge_id != judge) continue;
              const double v = novelty_dim ? r->novelty_raw : r->usefulness_raw;
              vals[rows[i].idea_id] = v;
              lo = std::min(lo, v);
              hi = std::max(hi, v);
            }
          }
          const bool degenerate = !(hi > lo);
          if (!degenerate) any_spread = true;
          for (auto& [id, v] : vals) {
            acc[id] += degenerate ? 0.0 : (v - lo) / (hi - lo);
            cnt[id] += 1;
          }
        }
        for (size_t i : idxs) {
          const double z =
              cnt[rows[i].idea_id] ? acc[rows[i].idea_id] / cnt[rows[i].idea_id] : 0.0;
          if (novelty_dim) {
            rows[i].novelty = z;
            rows[i].degenerate_novelty = !any_spread;
          } else {
            rows[i].usefulness = z;
            rows[i].degenerate_usefulness = !any_spread;
          }
        }
      }
    }
  };
  normalize_dim(true);
  normalize_dim(false);
  return rows;
}

// Fills the composed creativity columns. Product mode writes `creativity`,
// additive mode writes `creativity_additive`; callers wanting both call twice.
inline void creativity_scores(std::vector<ScoreRow>& rows, CreativityMode mode) {
  for (auto& r : rows) {
    if (mode == CreativityMode::product)
      r.creativity = r.novelty * r.usefulness;
    else
      r.creativity_additive = r.novelty + r.usefulness;
  }
}

}  // namespace ideaforge::stats
