#include "tarma/suplm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>

#include "format.hpp"
#include "tarma/stats.hpp"

namespace tarma {

ScorePanel score_panel(const TimeSeries& series, const ImaFit& fit, double r) {
  require(fit.residuals.size() == series.steps(), ErrorKind::internal,
          "score_panel: fit does not belong to this series");
  require(std::isfinite(r), ErrorKind::invalid_argument, "threshold must be finite");
  return score_panel(series.values(), fit.residuals, fit.theta_hat, r);
}

InfoBlocks info_blocks(const ScorePanel& p, double sigma2) {
  require(sigma2 > 0.0, ErrorKind::invalid_argument, "sigma2 must be positive");
  const double n = static_cast<double>(p.d_phi0.size());
  InfoBlocks b;
  b.i11.setZero();
  b.i11(0, 0) = p.d_phi0.squaredNorm();
  b.i11(0, 1) = b.i11(1, 0) = p.d_phi0.dot(p.d_theta);
  b.i11(1, 1) = p.d_theta.squaredNorm();
  b.i11 /= sigma2;
  b.i11(2, 2) = n / (2.0 * sigma2 * sigma2);
  b.i12.setZero();
  b.i12(0, 0) = p.d_phi0.dot(p.d_phi10);
  b.i12(0, 1) = p.d_phi0.dot(p.d_phi11);
  b.i12(1, 0) = p.d_theta.dot(p.d_phi10);
  b.i12(1, 1) = p.d_theta.dot(p.d_phi11);
  b.i12 /= sigma2;
  b.i22(0, 0) = p.d_phi10.squaredNorm();
  b.i22(0, 1) = b.i22(1, 0) = p.d_phi10.dot(p.d_phi11);
  b.i22(1, 1) = p.d_phi11.squaredNorm();
  b.i22 /= sigma2;
  return b;
}

Eigen::Vector2d psi2_score(const ScorePanel& p, const Vector& residuals,
                           double sigma2) {
  require(residuals.size() == p.d_phi10.size(), ErrorKind::internal,
          "psi2_score: length mismatch");
  return {-residuals.dot(p.d_phi10) / sigma2, -residuals.dot(p.d_phi11) / sigma2};
}

namespace {

// Conditioning test on the Schur complement after scaling by the diagonal
// of the unprojected block. Both matrices must be expressed for the
// centered regressor so that the test does not depend on location or scale.
bool well_conditioned(const Eigen::Matrix2d& schur, double d1, double d2) {
  if (!(d1 > 0.0) || !(d2 > 0.0)) return false;
  const double s1 = 1.0 / std::sqrt(d1), s2 = 1.0 / std::sqrt(d2);
  const double a = schur(0, 0) * s1 * s1;
  const double c = schur(1, 1) * s2 * s2;
  const double b = 0.5 * (schur(0, 1) + schur(1, 0)) * s1 * s2;
  const double mid = 0.5 * (a + c);
  const double rad = std::hypot(0.5 * (a - c), b);
  const double lmax = mid + rad;
  // Smaller root from the determinant to avoid cancellation.
  const double lmin = lmax > 0.0 ? (a * c - b * b) / lmax : 0.0;
  if (!(lmin > 0.0)) return false;
  return lmax / lmin <= kMaxSchurCondition;
}

double lagged_mean(const Vector& x) {
  return x.head(x.size() - 1).mean();
}

}  // namespace

std::optional<double> lm_stat_at(const TimeSeries& series, const ImaFit& fit,
                                 double r) {
  const ScorePanel panel = score_panel(series, fit, r);
  const InfoBlocks info = info_blocks(panel, fit.sigma2_hat);
  const Eigen::Vector2d g = psi2_score(panel, fit.residuals, fit.sigma2_hat);

  Eigen::Matrix2d schur;
  if (fit.fix_phi0) {
    const Eigen::Matrix2d i11 = info.i11.bottomRightCorner<2, 2>();
    const Eigen::Matrix2d i12 = info.i12.bottomRows<2>();
    schur = info.i22 - i12.transpose() * i11.ldlt().solve(i12);
  } else {
    schur = info.i22 - info.i12.transpose() * info.i11.ldlt().solve(info.i12);
  }

  const double m = lagged_mean(series.values());
  Eigen::Matrix2d j;
  j << 1.0, 0.0, -m, 1.0;
  const Eigen::Matrix2d centered = j * schur * j.transpose();
  const Eigen::Matrix2d centered_i22 = j * info.i22 * j.transpose();
  if (!well_conditioned(centered, centered_i22(0, 0), centered_i22(1, 1)))
    return std::nullopt;
  const double t = g.dot(schur.ldlt().solve(g));
  return std::max(t, 0.0);
}

ThresholdGrid threshold_grid(const TimeSeries& series, double a_pct,
                             double b_pct) {
  require(a_pct > 0.0 && b_pct < 1.0 && a_pct < b_pct,
          ErrorKind::invalid_argument, "band must satisfy 0 < a < b < 1");
  const Vector& x = series.values();
  std::vector<double> all(x.data(), x.data() + x.size());
  std::sort(all.begin(), all.end());
  ThresholdGrid g;
  g.a_pct = a_pct;
  g.b_pct = b_pct;
  g.lower = quantile_sorted(all, a_pct);
  g.upper = quantile_sorted(all, b_pct);
  std::vector<double> lagged(x.data(), x.data() + x.size() - 1);
  std::sort(lagged.begin(), lagged.end());
  lagged.erase(std::unique(lagged.begin(), lagged.end()), lagged.end());
  for (double v : lagged)
    if (v >= g.lower && v <= g.upper) g.values.push_back(v);
  return g;
}

namespace {

// Incremental evaluation of T_n(r) as r sweeps upward through the lagged
// values. Indicator panels are linear filters of I(X_s <= r), so every
// cross product with a fixed sequence y is -sum_{s active} G_y(s) with
// G_y(s) = sum_{t>s} theta^{t-1-s} y_t, and the quadratic terms use the
// kernel K(s, s') = theta^{|s-s'|} C(max(s, s')), C(s) = sum_{k<n-s} theta^{2k}.
// Sums of K against the active set come from a segment tree holding
//   L = sum theta^{hi-s} w_s  and  R = sum theta^{s-lo} C(s) w_s
// for the weights w = 1 and w = X_s - mean.
class Sweep {
 public:
  Sweep(const Vector& x, const ImaFit& fit)
      : n_(x.size() - 1), theta_(fit.theta_hat), fix_phi0_(fit.fix_phi0) {
    const Vector& e = fit.residuals;
    const double m = lagged_mean(x);
    xc_ = (x.head(n_).array() - m).matrix();

    // Nuisance block (phi0, theta) from the panels that do not depend on r.
    double a = 0.0, b = 0.0, e_prev = 0.0;
    Vector av(n_), bv(n_);
    for (Index t = 0; t < n_; ++t) {
      a = -1.0 + theta_ * a;
      b = e_prev + theta_ * b;
      av(t) = a;
      bv(t) = b;
      e_prev = e(t);
    }
    saa_ = av.squaredNorm();
    sab_ = av.dot(bv);
    sbb_ = bv.squaredNorm();

    ge_.resize(n_);
    ga_.resize(n_);
    gb_.resize(n_);
    c_.resize(n_);
    ge_(n_ - 1) = e(n_ - 1);
    ga_(n_ - 1) = av(n_ - 1);
    gb_(n_ - 1) = bv(n_ - 1);
    c_(n_ - 1) = 1.0;
    const double th2 = theta_ * theta_;
    for (Index s = n_ - 2; s >= 0; --s) {
      ge_(s) = e(s) + theta_ * ge_(s + 1);
      ga_(s) = av(s) + theta_ * ga_(s + 1);
      gb_(s) = bv(s) + theta_ * gb_(s + 1);
      c_(s) = 1.0 + th2 * c_(s + 1);
    }

    leaves_ = 1;
    while (leaves_ < n_) leaves_ *= 2;
    pw_.resize(leaves_ + 1);
    pw_[0] = 1.0;
    for (Index k = 1; k <= leaves_; ++k) pw_[k] = pw_[k - 1] * theta_;
    tree_.assign(static_cast<std::size_t>(2 * leaves_), Node{});
  }

  void add(Index u) {
    // Prefix fold over [0, u) and suffix fold over (u, leaves) along the
    // root-to-leaf path of u.
    double p1 = 0.0, p2 = 0.0, q1 = 0.0, q2 = 0.0;
    Index node = 1, lo = 0, len = leaves_;
    while (len > 1) {
      const Index half = len / 2;
      const Node& left = tree_[2 * node];
      const Node& right = tree_[2 * node + 1];
      if (u >= lo + half) {
        p1 = p1 * pw_[half] + left.l1;
        p2 = p2 * pw_[half] + left.l2;
        node = 2 * node + 1;
        lo += half;
      } else {
        q1 = right.r1 + pw_[half] * q1;
        q2 = right.r2 + pw_[half] * q2;
        node = 2 * node;
      }
      len = half;
    }
    const double cu = c_(u), xu = xc_(u);
    const double v1 = theta_ * (cu * p1 + q1);
    const double v2 = theta_ * (cu * p2 + q2);
    qcc_ += 2.0 * v1 + cu;
    qce_ += xu * v1 + v2 + xu * cu;
    qee_ += 2.0 * xu * v2 + xu * xu * cu;
    he1_ += ge_(u);
    he2_ += xu * ge_(u);
    ha1_ += ga_(u);
    ha2_ += xu * ga_(u);
    hb1_ += gb_(u);
    hb2_ += xu * gb_(u);

    Node& leaf = tree_[leaves_ + u];
    leaf = {1.0, xu, cu, cu * xu};
    Index child_len = 1;
    for (Index k = (leaves_ + u) / 2; k >= 1; k /= 2) {
      const Node& l = tree_[2 * k];
      const Node& r = tree_[2 * k + 1];
      const double pk = pw_[child_len];
      tree_[k] = {l.l1 * pk + r.l1, l.l2 * pk + r.l2, l.r1 + pk * r.r1,
                  l.r2 + pk * r.r2};
      child_len *= 2;
    }
  }

  // Statistic for the current active set, scaled back by sigma^2.
  std::optional<double> value(double sigma2) const {
    Eigen::Matrix2d q;
    q << qcc_, qce_, qce_, qee_;
    Eigen::Matrix2d schur;
    if (fix_phi0_) {
      const Eigen::Vector2d pb(-hb1_, -hb2_);
      schur = q - pb * pb.transpose() / sbb_;
    } else {
      Eigen::Matrix2d p;
      p << -ha1_, -hb1_, -ha2_, -hb2_;
      Eigen::Matrix2d nuis;
      nuis << saa_, sab_, sab_, sbb_;
      schur = q - p * nuis.ldlt().solve(p.transpose());
    }
    if (!well_conditioned(schur, qcc_, qee_)) return std::nullopt;
    const Eigen::Vector2d h(he1_, he2_);
    return std::max(h.dot(schur.ldlt().solve(h)) / sigma2, 0.0);
  }

 private:
  struct Node {
    double l1 = 0.0, l2 = 0.0, r1 = 0.0, r2 = 0.0;
  };

  Index n_;
  double theta_;
  bool fix_phi0_;
  Vector xc_, ge_, ga_, gb_, c_;
  double saa_ = 0.0, sab_ = 0.0, sbb_ = 0.0;
  double qcc_ = 0.0, qce_ = 0.0, qee_ = 0.0;
  double he1_ = 0.0, he2_ = 0.0, ha1_ = 0.0, ha2_ = 0.0, hb1_ = 0.0, hb2_ = 0.0;
  Index leaves_ = 1;
  std::vector<double> pw_;
  std::vector<Node> tree_;
};

}  // namespace

std::vector<std::optional<double>> lm_curve(const TimeSeries& series,
                                            const ImaFit& fit,
                                            std::span<const double> thresholds) {
  const Vector& x = series.values();
  const Index n = series.steps();
  require(fit.residuals.size() == n, ErrorKind::internal,
          "lm_curve: fit does not belong to this series");
  require(std::is_sorted(thresholds.begin(), thresholds.end()),
          ErrorKind::internal, "lm_curve: thresholds must be ascending");
  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Index{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](Index i, Index j) { return x(i) < x(j); });
  Sweep sweep(x, fit);
  std::vector<std::optional<double>> out;
  out.reserve(thresholds.size());
  std::size_t next = 0;
  Index added = 0;
  for (double r : thresholds) {
    while (next < order.size() && x(order[next]) <= r) {
      sweep.add(order[next]);
      ++next;
      ++added;
    }
    if (added == 0) {
      out.emplace_back(std::nullopt);
      continue;
    }
    out.push_back(sweep.value(fit.sigma2_hat));
  }
  return out;
}

const char* to_string(PValueSource s) {
  switch (s) {
    case PValueSource::none: return "none";
    case PValueSource::asymptotic_table: return "asymptotic-table";
    case PValueSource::finite_sample_table: return "finite-sample-table";
    case PValueSource::bootstrap: return "bootstrap";
  }
  return "unknown";
}

SupLmResult sup_lm(const TimeSeries& series, const ImaFit& fit, double a_pct,
                   double b_pct) {
  require(series.size() >= 50, ErrorKind::too_short,
          "supLM test needs at least 50 observations");
  const ThresholdGrid grid = threshold_grid(series, a_pct, b_pct);
  const auto values = lm_curve(series, fit, grid.values);
  SupLmResult res;
  res.fit = fit;
  res.grid.a_pct = a_pct;
  res.grid.b_pct = b_pct;
  res.grid.lower = grid.lower;
  res.grid.upper = grid.upper;
  res.grid.grid_size = static_cast<Index>(grid.values.size());
  bool any = false;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!values[i]) {
      res.grid.excluded.push_back(grid.values[i]);
      continue;
    }
    res.curve.push_back({grid.values[i], *values[i]});
    if (!any || *values[i] > res.t_sup) {
      res.t_sup = *values[i];
      res.r_hat = grid.values[i];
      any = true;
    }
  }
  require(any, ErrorKind::untestable_series,
          "no admissible threshold in the search band");
  const Vector& x = series.values();
  std::vector<double> sorted(x.data(), x.data() + x.size());
  std::sort(sorted.begin(), sorted.end());
  res.r_hat_pct = ecdf_sorted(sorted, res.r_hat);
  return res;
}

SupLmResult sup_lm(const TimeSeries& series, double a_pct, double b_pct,
                   bool fix_phi0) {
  require(series.size() >= 50, ErrorKind::too_short,
          "supLM test needs at least 50 observations");
  return sup_lm(series, fit_ima11(series, fix_phi0), a_pct, b_pct);
}

SupLmResult sup_lm_above(const TimeSeries& series, double a_pct, double b_pct,
                         bool fix_phi0) {
  SupLmResult res = sup_lm(series.negated(), a_pct, b_pct, fix_phi0);
  res.above = true;
  res.r_hat = -res.r_hat;
  for (auto& p : res.curve) p.r = -p.r;
  std::reverse(res.curve.begin(), res.curve.end());
  for (auto& v : res.grid.excluded) v = -v;
  std::reverse(res.grid.excluded.begin(), res.grid.excluded.end());
  const double lo = -res.grid.upper, hi = -res.grid.lower;
  res.grid.lower = lo;
  res.grid.upper = hi;
  return res;
}

std::vector<double> sup_lm_bands(const TimeSeries& series,
                                 std::span<const double> pis, bool fix_phi0) {
  require(!pis.empty(), ErrorKind::invalid_argument, "no bands requested");
  require(series.size() >= 50, ErrorKind::too_short,
          "supLM test needs at least 50 observations");
  for (double p : pis)
    require(p > 0.0 && p < 0.5, ErrorKind::invalid_argument,
            "band parameter pi must lie in (0, 0.5)");
  const double widest = *std::min_element(pis.begin(), pis.end());
  const ImaFit fit = fit_ima11(series, fix_phi0);
  const ThresholdGrid grid = threshold_grid(series, widest, 1.0 - widest);
  const auto values = lm_curve(series, fit, grid.values);
  const Vector& x = series.values();
  std::vector<double> sorted(x.data(), x.data() + x.size());
  std::sort(sorted.begin(), sorted.end());
  std::vector<double> out;
  out.reserve(pis.size());
  for (double p : pis) {
    const double lo = quantile_sorted(sorted, p);
    const double hi = quantile_sorted(sorted, 1.0 - p);
    double best = std::numeric_limits<double>::quiet_NaN();
    for (std::size_t i = 0; i < values.size(); ++i) {
      if (grid.values[i] < lo || grid.values[i] > hi || !values[i]) continue;
      if (std::isnan(best) || *values[i] > best) best = *values[i];
    }
    out.push_back(best);
  }
  return out;
}

void write_curve_csv(std::ostream& out, const SupLmResult& result) {
  out << "r,T\n";
  for (const auto& p : result.curve)
    out << format_double(p.r) << ',' << format_double(p.stat) << '\n';
}

}  // namespace tarma
