#pragma once

// Nine per-conversation geometry features over turn embeddings, plus seeded
// k-means, column standardization, VIF, and a 2-D projection for plot export.
//
// Feature math uses plain index-ordered loops on doubles so that an
// independently written reference implementation reproduces values to
// floating-point accuracy. Degenerate inputs surface as flags, never as
// silent zeros (convergence_ratio reports 0 alongside its flag for tabular
// compatibility).

#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ideaforge/corpus.hpp"
#include "ideaforge/embedding.hpp"
#include "ideaforge/stats.hpp"
#include "ideaforge/util.hpp"

namespace ideaforge::traj {

using Point = std::vector<double>;

struct Trajectory {
  std::vector<Point> embeddings;  // e_1..e_n, equal dimensions

  size_t n() const { return embeddings.size(); }

  // Coordinate-wise mean, recomputed on demand.
  Point centroid() const {
    if (embeddings.empty()) throw Error("centroid of empty trajectory");
    Point c(embeddings[0].size(), 0.0);
    for (const auto& e : embeddings) {
      if (e.size() != c.size()) throw Error("trajectory dimension mismatch");
      for (size_t j = 0; j < c.size(); ++j) c[j] += e[j];
    }
    for (double& v : c) v /= static_cast<double>(embeddings.size());
    return c;
  }
};

enum class FeatureFlag { ok, undefined_insufficient_turns, degenerate };

inline const char* flag_name(FeatureFlag f) {
  switch (f) {
    case FeatureFlag::ok: return "ok";
    case FeatureFlag::undefined_insufficient_turns:
      return "undefined_insufficient_turns";
    case FeatureFlag::degenerate: return "degenerate";
  }
  return "?";
}

struct FeatureValue {
  double value = std::numeric_limits<double>::quiet_NaN();
  FeatureFlag flag = FeatureFlag::ok;
  int skipped = 0;  // curvature only: zero-norm delta pairs
};

inline FeatureValue undefined_turns() {
  return {std::numeric_limits<double>::quiet_NaN(),
          FeatureFlag::undefined_insufficient_turns, 0};
}

namespace detail {
inline double dcos(const Point& a, const Point& b) {
  return ideaforge::embed::cosine_distance(a, b);
}
}  // namespace detail

// ---------------------------------------------------------------------------
// The nine features

// mean_i (1 - dcos(e_i, e_{i+1})), turn-to-turn continuity, in [-1, 1].
inline FeatureValue local_coherence(const Trajectory& t) {
  if (t.n() < 2) return undefined_turns();
  double s = 0.0;
  for (size_t i = 0; i + 1 < t.n(); ++i)
    s += 1.0 - detail::dcos(t.embeddings[i], t.embeddings[i + 1]);
  return {s / static_cast<double>(t.n() - 1), FeatureFlag::ok, 0};
}

// mean_i (1 - dcos(e_i, centroid)), focus around the conversation centroid.
inline FeatureValue global_coherence(const Trajectory& t) {
  if (t.n() < 1) return undefined_turns();
  const Point c = t.centroid();
  double norm2 = 0.0;
  for (double v : c) norm2 += v * v;
  if (norm2 == 0.0)
    return {std::numeric_limits<double>::quiet_NaN(), FeatureFlag::degenerate, 0};
  double s = 0.0;
  for (const auto& e : t.embeddings) s += 1.0 - detail::dcos(e, c);
  return {s / static_cast<double>(t.n()), FeatureFlag::ok, 0};
}

// sum_i dcos(e_i, e_{i+1}), total semantic movement, >= 0.
inline FeatureValue path_length(const Trajectory& t) {
  if (t.n() < 2) return undefined_turns();
  double s = 0.0;
  for (size_t i = 0; i + 1 < t.n(); ++i)
    s += detail::dcos(t.embeddings[i], t.embeddings[i + 1]);
  return {s, FeatureFlag::ok, 0};
}

// Mean pairwise cosine distance within [begin, end), i<j pairs only.
inline double mean_pairwise_dcos(const Trajectory& t, size_t begin, size_t end) {
  double s = 0.0;
  size_t cnt = 0;
  for (size_t i = begin; i < end; ++i)
    for (size_t j = i + 1; j < end; ++j) {
      s += detail::dcos(t.embeddings[i], t.embeddings[j]);
      ++cnt;
    }
  return cnt ? s / static_cast<double>(cnt) : 0.0;
}

// (D_early - D_late) / D_early over the first floor(n/2) and last ceil(n/2)
// turns; <= 1, may be negative. D_early ~ 0 reports 0 with a degenerate flag.
inline FeatureValue convergence_ratio(const Trajectory& t) {
  if (t.n() < 4) return undefined_turns();
  const size_t half = t.n() / 2;
  const double d_early = mean_pairwise_dcos(t, 0, half);
  const double d_late = mean_pairwise_dcos(t, half, t.n());
  if (std::fabs(d_early) < 1e-12) return {0.0, FeatureFlag::degenerate, 0};
  return {(d_early - d_late) / d_early, FeatureFlag::ok, 0};
}

// max over i<j of dcos(e_i, e_j), in [0, 2].
inline FeatureValue max_distance(const Trajectory& t) {
  if (t.n() < 2) return undefined_turns();
  double m = 0.0;
  for (size_t i = 0; i < t.n(); ++i)
    for (size_t j = i + 1; j < t.n(); ++j)
      m = std::max(m, detail::dcos(t.embeddings[i], t.embeddings[j]));
  return {m, FeatureFlag::ok, 0};
}

// Mean angle between consecutive steps delta_i = e_{i+1} - e_i, in [0, pi].
// Pairs where either delta has zero norm are skipped and counted.
inline FeatureValue trajectory_curvature(const Trajectory& t) {
  if (t.n() < 3) return undefined_turns();
  const size_t n = t.n();
  const size_t d = t.embeddings[0].size();
  std::vector<Point> deltas(n - 1, Point(d, 0.0));
  std::vector<double> norms(n - 1, 0.0);
  for (size_t i = 0; i + 1 < n; ++i) {
    double nn = 0.0;
    for (size_t j = 0; j < d; ++j) {
      deltas[i][j] = t.embeddings[i + 1][j] - t.embeddings[i][j];
      nn += deltas[i][j] * deltas[i][j];
    }
    norms[i] = std::sqrt(nn);
  }
  double s = 0.0;
  int valid = 0, skipped = 0;
  for (size_t i = 0; i + 1 < deltas.size(); ++i) {
    if (norms[i] == 0.0 || norms[i + 1] == 0.0) {
      ++skipped;
      continue;
    }
    double dot = 0.0;
    for (size_t j = 0; j < d; ++j) dot += deltas[i][j] * deltas[i + 1][j];
    double c = dot / (norms[i] * norms[i + 1]);
    c = std::min(1.0, std::max(-1.0, c));  // absorb FP drift
    s += std::acos(c);
    ++valid;
  }
  if (valid == 0)
    return {std::numeric_limits<double>::quiet_NaN(),
            FeatureFlag::undefined_insufficient_turns, skipped};
  return {s / static_cast<double>(valid), FeatureFlag::ok, skipped};
}

// max over i in late window, j in early window of (1 - dcos(e_i, e_j));
// windows are the first/last ceil(0.3 n) turns (min 1).
inline FeatureValue revisit_score(const Trajectory& t) {
  if (t.n() < 4) return undefined_turns();
  const size_t w = std::max<size_t>(
      1, static_cast<size_t>(std::ceil(0.3 * static_cast<double>(t.n()))));
  double best = -std::numeric_limits<double>::infinity();
  for (size_t i = t.n() - w; i < t.n(); ++i)
    for (size_t j = 0; j < w; ++j)
      best = std::max(best, 1.0 - detail::dcos(t.embeddings[i], t.embeddings[j]));
  return {best, FeatureFlag::ok, 0};
}

// Population SD of ||e_i - centroid||, >= 0.
inline FeatureValue semantic_spread(const Trajectory& t) {
  if (t.n() < 2) return undefined_turns();
  const Point c = t.centroid();
  std::vector<double> dists;
  dists.reserve(t.n());
  for (const auto& e : t.embeddings) {
    double nn = 0.0;
    for (size_t j = 0; j < e.size(); ++j) nn += (e[j] - c[j]) * (e[j] - c[j]);
    dists.push_back(std::sqrt(nn));
  }
  double m = 0.0;
  for (double v : dists) m += v;
  m /= static_cast<double>(dists.size());
  double ss = 0.0;
  for (double v : dists) ss += (v - m) * (v - m);
  return {std::sqrt(ss / static_cast<double>(dists.size())), FeatureFlag::ok, 0};
}

// ---------------------------------------------------------------------------
// Seeded Lloyd k-means.
//
// Pinned contract (independent reimplementations must match draw-for-draw):
//   1. rng = DetRng(seed). Repeatedly draw idx = rng.uniform_index(n); accept
//      the drawn point as a centroid iff it differs element-wise from every
//      centroid accepted so far; stop after k acceptances.
//   2. Up to 100 iterations:
//      a. assign each point to the nearest centroid by squared Euclidean
//         distance (coordinate-order accumulation), ties -> lowest index;
//      b. for each empty cluster in ascending index order, move the point
//         with the largest squared distance to its assigned centroid (ties ->
//         lowest point index; a point moved this round is not moved again);
//      c. recompute centroids as coordinate-wise means (point-index order);
//      d. stop when assignments are unchanged from the previous round.
inline std::vector<int> kmeans_lloyd(const std::vector<Point>& points, int k,
                                     std::uint64_t seed) {
  const size_t n = points.size();
  if (k <= 0) throw Error("kmeans: k must be positive");
  {
    std::vector<Point> distinct;
    for (const auto& p : points) {
      bool seen = false;
      for (const auto& q : distinct)
        if (q == p) {
          seen = true;
          break;
        }
      if (!seen) distinct.push_back(p);
      if (static_cast<int>(distinct.size()) >= k) break;
    }
    if (static_cast<int>(distinct.size()) < k)
      throw Error("kmeans: fewer than k distinct points");
  }

  DetRng rng(seed);
  std::vector<Point> centroids;
  while (static_cast<int>(centroids.size()) < k) {
    const Point& cand = points[rng.uniform_index(n)];
    bool dup = false;
    for (const auto& c : centroids)
      if (c == cand) {
        dup = true;
        break;
      }
    if (!dup) centroids.push_back(cand);
  }

  auto sqdist = [](const Point& a, const Point& b) {
    double s = 0.0;
    for (size_t j = 0; j < a.size(); ++j) s += (a[j] - b[j]) * (a[j] - b[j]);
    return s;
  };

  std::vector<int> assign(n, -1), prev(n, -2);
  for (int iter = 0; iter < 100; ++iter) {
    for (size_t i = 0; i < n; ++i) {
      int best = 0;
      double bd = sqdist(points[i], centroids[0]);
      for (int c = 1; c < k; ++c) {
        const double d = sqdist(points[i], centroids[c]);
        if (d < bd) {
          bd = d;
          best = c;
        }
      }
      assign[i] = best;
    }

    std::vector<int> counts(k, 0);
    for (int a : assign) ++counts[a];
    std::vector<bool> moved(n, false);
    for (int c = 0; c < k; ++c) {
      if (counts[c] > 0) continue;
      size_t far_idx = n;
      double far_d = -1.0;
      for (size_t i = 0; i < n; ++i) {
        if (moved[i] || counts[assign[i]] <= 1) continue;
        const double d = sqdist(points[i], centroids[assign[i]]);
        if (d > far_d) {
          far_d = d;
          far_idx = i;
        }
      }
      if (far_idx == n) throw Error("kmeans: cannot repopulate empty cluster");
      --counts[assign[far_idx]];
      assign[far_idx] = c;
      ++counts[c];
      moved[far_idx] = true;
    }

    const size_t d = points[0].size();
    for (int c = 0; c < k; ++c) {
      Point sum(d, 0.0);
      int cnt = 0;
      for (size_t i = 0; i < n; ++i) {
        if (assign[i] != c) continue;
        for (size_t j = 0; j < d; ++j) sum[j] += points[i][j];
        ++cnt;
      }
      for (size_t j = 0; j < d; ++j) sum[j] /= static_cast<double>(cnt);
      centroids[c] = std::move(sum);
    }

    if (assign == prev) break;
    prev = assign;
  }
  return assign;
}

// Cluster transitions between consecutive turns / (n-1), k-means with k=3.
inline FeatureValue topic_switching_rate(const Trajectory& t, std::uint64_t seed) {
  if (t.n() < 4) return undefined_turns();
  size_t distinct = 0;
  {
    std::vector<const Point*> seen;
    for (const auto& p : t.embeddings) {
      bool found = false;
      for (const auto* q : seen)
        if (*q == p) {
          found = true;
          break;
        }
      if (!found) seen.push_back(&p);
    }
    distinct = seen.size();
  }
  if (distinct < 3) return undefined_turns();
  const std::vector<int> assign = kmeans_lloyd(t.embeddings, 3, seed);
  int switches = 0;
  for (size_t i = 0; i + 1 < assign.size(); ++i)
    if (assign[i] != assign[i + 1]) ++switches;
  return {static_cast<double>(switches) / static_cast<double>(t.n() - 1),
          FeatureFlag::ok, 0};
}

// ---------------------------------------------------------------------------
// Feature vector

inline constexpr std::array<const char*, 9> kFeatureNames{
    "local_coherence",   "global_coherence",     "path_length",
    "convergence_ratio", "max_distance",         "trajectory_curvature",
    "topic_switching_rate", "revisit_score",     "semantic_spread"};

struct TrajectoryFeatures {
  std::array<FeatureValue, 9> values{};  // ordered as kFeatureNames

  const FeatureValue& at(std::string_view name) const {
    for (size_t i = 0; i < kFeatureNames.size(); ++i)
      if (name == kFeatureNames[i]) return values[i];
    throw Error("unknown feature: " + std::string(name));
  }
  bool all_finite() const {
    for (const auto& v : values)
      if (!std::isfinite(v.value)) return false;
    return true;
  }
};

inline TrajectoryFeatures compute_features(const Trajectory& t, std::uint64_t seed) {
  TrajectoryFeatures f;
  f.values[0] = local_coherence(t);
  f.values[1] = global_coherence(t);
  f.values[2] = path_length(t);
  f.values[3] = convergence_ratio(t);
  f.values[4] = max_distance(t);
  f.values[5] = trajectory_curvature(t);
  f.values[6] = topic_switching_rate(t, seed);
  f.values[7] = revisit_score(t);
  f.values[8] = semantic_spread(t);
  return f;
}

// Embeds the discussion-phase turn contents of a transcript in order and
// computes all nine features. Only turn-by-turn structures qualify;
// progressive and no-discussion transcripts are rejected.
template <typename EmbedFn>
TrajectoryFeatures compute_feature_vector(const ConversationTranscript& tr,
                                          EmbedFn&& embed_fn,
                                          std::uint64_t seed) {
  const Discussion d = tr.condition.discussion;
  if (d == Discussion::progressive)
    throw NotApplicableError(
        "progressive structure does not produce a sequential turn trajectory");
  if (d == Discussion::none)
    throw NotApplicableError("no-discussion transcript has no trajectory");

  std::vector<std::string> texts;
  for (const Turn& turn : tr.turns)
    if (turn.phase == Phase::discussion) texts.push_back(turn.content);
  if (texts.empty())
    throw SchemaError("transcript has no discussion-phase turns");

  Trajectory t;
  t.embeddings = embed_fn(texts);
  if (t.embeddings.size() != texts.size())
    throw Error("embed function returned wrong count");
  return compute_features(t, seed);
}

// ---------------------------------------------------------------------------
// Standardization + VIF

struct ZScoreResult {
  Eigen::MatrixXd z;              // rows x kept columns
  std::vector<int> kept;          // original column indices
  std::vector<int> dropped;       // zero-variance columns
  std::vector<double> means, sds; // per original column (population SD)
};

// Population z-scoring per column; zero-variance columns are dropped and
// reported. Column means of the result are 0 and SDs 1 to ~1e-12.
inline ZScoreResult zscore_features(const Eigen::MatrixXd& m) {
  if (m.rows() < 2) throw Error("zscore_features: need >=2 rows");
  ZScoreResult res;
  const auto n = static_cast<double>(m.rows());
  for (int j = 0; j < m.cols(); ++j) {
    const double mean = m.col(j).mean();
    const double sd = std::sqrt((m.col(j).array() - mean).square().sum() / n);
    res.means.push_back(mean);
    res.sds.push_back(sd);
    if (sd == 0.0)
      res.dropped.push_back(j);
    else
      res.kept.push_back(j);
  }
  res.z.resize(m.rows(), static_cast<Eigen::Index>(res.kept.size()));
  for (size_t jj = 0; jj < res.kept.size(); ++jj) {
    const int j = res.kept[jj];
    res.z.col(static_cast<Eigen::Index>(jj)) =
        (m.col(j).array() - res.means[static_cast<size_t>(j)]) /
        res.sds[static_cast<size_t>(j)];
  }
  return res;
}

// VIF_j = 1 / (1 - R^2_j) from regressing column j on the remaining columns
// plus an intercept. Perfect collinearity reports +infinity. R^2 comes from
// the least-squares projection, which stays well-defined even when the other
// columns are themselves collinear.
inline std::vector<double> compute_vif(const Eigen::MatrixXd& X) {
  const int p = static_cast<int>(X.cols());
  if (p < 2) throw Error("compute_vif: need >=2 columns");
  if (X.rows() <= X.cols()) throw Error("compute_vif: need rows > columns");
  std::vector<double> out;
  out.reserve(static_cast<size_t>(p));
  for (int j = 0; j < p; ++j) {
    Eigen::MatrixXd D(X.rows(), p);  // intercept + the other columns
    D.col(0) = Eigen::VectorXd::Ones(X.rows());
    int col = 1;
    for (int o = 0; o < p; ++o)
      if (o != j) D.col(col++) = X.col(o);
    const Eigen::VectorXd y = X.col(j);
    const Eigen::VectorXd resid = y - D * D.colPivHouseholderQr().solve(y);
    const double tss = (y.array() - y.mean()).square().sum();
    if (tss <= 0.0) {
      out.push_back(std::numeric_limits<double>::infinity());
      continue;
    }
    const double r2 = 1.0 - resid.squaredNorm() / tss;
    if (r2 >= 1.0 - 1e-12) {
      out.push_back(std::numeric_limits<double>::infinity());
    } else {
      out.push_back(1.0 / (1.0 - r2));
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// 2-D projection (top-2 principal directions via power iteration with
// deflation; sign fixed so the first non-negligible loading is positive).

struct Projection2D {
  std::vector<std::array<double, 2>> points;  // turn order preserved
  bool degenerate = false;                    // rank < 2, y zeroed
};

namespace detail {

inline bool power_iterate(const Eigen::MatrixXd& cov, Eigen::VectorXd& v,
                          double* lambda) {
  constexpr double kTol = 1e-10;
  constexpr int kMaxIter = 100000;
  DetRng rng(0x9e3779b97f4a7c15ull);
  v.resize(cov.rows());
  for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = rng.normal();
  v.normalize();
  for (int it = 0; it < kMaxIter; ++it) {
    Eigen::VectorXd w = cov * v;
    const double norm = w.norm();
    if (norm < 1e-300) return false;  // operating on a (near) null space
    w /= norm;
    if (w.dot(v) < 0) w = -w;
    const double delta = (w - v).norm();
    v = w;
    if (delta < kTol) break;
  }
  *lambda = v.dot(cov * v);
  // first non-negligible loading positive
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (std::fabs(v(i)) > 1e-12) {
      if (v(i) < 0) v = -v;
      break;
    }
  }
  return true;
}

}  // namespace detail

inline Projection2D pca_project_2d(const Trajectory& t) {
  if (t.n() < 3) throw Error("pca_project_2d: need >=3 turns");
  const auto n = static_cast<Eigen::Index>(t.n());
  const auto d = static_cast<Eigen::Index>(t.embeddings[0].size());
  Eigen::MatrixXd X(n, d);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < d; ++j)
      X(i, j) = t.embeddings[static_cast<size_t>(i)][static_cast<size_t>(j)];
  const Eigen::RowVectorXd mean = X.colwise().mean();
  X.rowwise() -= mean;
  const Eigen::MatrixXd cov = X.transpose() * X / static_cast<double>(n);

  Projection2D out;
  out.points.assign(static_cast<size_t>(n), {0.0, 0.0});

  Eigen::VectorXd v1;
  double l1 = 0.0;
  if (!detail::power_iterate(cov, v1, &l1) || l1 <= 1e-300) {
    out.degenerate = true;  // all points coincide
    return out;
  }
  for (Eigen::Index i = 0; i < n; ++i)
    out.points[static_cast<size_t>(i)][0] = X.row(i).dot(v1);

  const Eigen::MatrixXd cov2 = cov - l1 * v1 * v1.transpose();
  Eigen::VectorXd v2;
  double l2 = 0.0;
  if (!detail::power_iterate(cov2, v2, &l2) || l2 <= 1e-12 * l1) {
    out.degenerate = true;  // rank 1: keep y at zero
    return out;
  }
  for (Eigen::Index i = 0; i < n; ++i)
    out.points[static_cast<size_t>(i)][1] = X.row(i).dot(v2);
  return out;
}

}  // namespace ideaforge::traj
