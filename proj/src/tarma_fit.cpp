#include "tarma/tarma_fit.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <numbers>
#include <optional>
#include <ostream>

#include "format.hpp"
#include "tarma/ima_fit.hpp"
#include "tarma/parallel.hpp"
#include "tarma/stats.hpp"

namespace tarma {

namespace {

// Regime design for a fixed threshold with delay 1.
struct Design {
  Vector y;                 // X_1..X_n
  Eigen::MatrixX4d w;       // (I_L, I_L X_{t-1}, I_U, I_U X_{t-1})
  std::vector<char> lower;  // regime of each t
  Index n_lower = 0;
};

Design make_design(const Vector& x, double r) {
  const Index n = x.size() - 1;
  Design d;
  d.y = x.tail(n);
  d.w.setZero(n, 4);
  d.lower.resize(static_cast<std::size_t>(n));
  for (Index t = 0; t < n; ++t) {
    const double lag = x(t);
    const bool lo = lag <= r;
    d.lower[static_cast<std::size_t>(t)] = lo;
    if (lo) {
      d.w(t, 0) = 1.0;
      d.w(t, 1) = lag;
      ++d.n_lower;
    } else {
      d.w(t, 2) = 1.0;
      d.w(t, 3) = lag;
    }
  }
  return d;
}

// Parameter layout: beta (4), then theta_lower and theta_upper, or a single
// theta when common.
struct Model {
  const Design& d;
  bool common;

  Index dim() const { return common ? 5 : 6; }

  double theta_of(const Vector& p, Index t) const {
    if (common) return p(4);
    return d.lower[static_cast<std::size_t>(t)] ? p(4) : p(5);
  }

  // Residuals e_t = y_t - w_t'beta + theta_R(t) e_{t-1} and, optionally,
  // their derivatives with respect to every parameter.
  double evaluate(const Vector& p, Vector& e, Eigen::MatrixXd* jac) const {
    const Index n = d.y.size();
    const Index k = dim();
    e.resize(n);
    if (jac) jac->resize(n, k);
    Eigen::VectorXd de_prev = Eigen::VectorXd::Zero(k);
    double e_prev = 0.0;
    double rss = 0.0;
    const Eigen::Vector4d beta = p.head<4>();
    for (Index t = 0; t < n; ++t) {
      const double th = theta_of(p, t);
      const double et = d.y(t) - d.w.row(t).dot(beta) + th * e_prev;
      if (jac) {
        Eigen::VectorXd de = th * de_prev;
        de.head<4>() -= d.w.row(t).transpose();
        if (common) {
          de(4) += e_prev;
        } else {
          de(d.lower[static_cast<std::size_t>(t)] ? 4 : 5) += e_prev;
        }
        jac->row(t) = de.transpose();
        de_prev = de;
      }
      e(t) = et;
      e_prev = et;
      rss += et * et;
    }
    return rss;
  }

  // Least squares for beta with the thetas held fixed.
  void profile_beta(Vector& p) const {
    const Index n = d.y.size();
    Eigen::MatrixX4d z(n, 4);
    Vector yt(n);
    double yp = 0.0;
    Eigen::RowVector4d zp = Eigen::RowVector4d::Zero();
    for (Index t = 0; t < n; ++t) {
      const double th = theta_of(p, t);
      yp = d.y(t) + th * yp;
      zp = d.w.row(t) + th * zp;
      yt(t) = yp;
      z.row(t) = zp;
    }
    p.head<4>() = (z.transpose() * z).ldlt().solve(z.transpose() * yt);
  }
};

bool thetas_ok(const Vector& p, bool common) {
  if (std::abs(p(4)) >= kThetaBound) return false;
  return common || std::abs(p(5)) < kThetaBound;
}

struct LocalFit {
  Vector p;
  double rss = std::numeric_limits<double>::infinity();
  Eigen::MatrixXd jac;
  Vector e;
};

LocalFit gauss_newton(const Model& m, Vector p) {
  m.profile_beta(p);
  LocalFit f;
  Eigen::MatrixXd jac;
  Vector e;
  double rss = m.evaluate(p, e, &jac);
  for (int it = 0; it < 100; ++it) {
    const Eigen::MatrixXd jtj = jac.transpose() * jac;
    const Vector step = -jtj.ldlt().solve(jac.transpose() * e);
    if (!step.allFinite()) break;
    double scale = 1.0;
    bool improved = false;
    Vector cand;
    Vector ce;
    double crss = 0.0;
    for (int h = 0; h < 40; ++h, scale *= 0.5) {
      cand = p + scale * step;
      if (!thetas_ok(cand, m.common)) continue;
      crss = m.evaluate(cand, ce, nullptr);
      if (crss <= rss) {
        improved = true;
        break;
      }
    }
    if (!improved) break;
    const double gain = rss - crss;
    p = cand;
    rss = m.evaluate(p, e, &jac);
    if (gain <= 1e-14 * rss && (scale * step).cwiseAbs().maxCoeff() < 1e-10) break;
  }
  f.p = p;
  f.rss = rss;
  f.jac = std::move(jac);
  f.e = std::move(e);
  return f;
}

TarmaFit assemble(const Design& d, const Model& m, const LocalFit& lf, double r,
                  int aic_k) {
  const Index n = d.y.size();
  TarmaFit fit;
  fit.spec.phi_1_0 = lf.p(0);
  fit.spec.phi_1_1 = lf.p(1);
  fit.spec.phi_2_0 = lf.p(2);
  fit.spec.phi_2_1 = lf.p(3);
  fit.spec.theta_lower = lf.p(4);
  fit.spec.theta_upper = m.common ? lf.p(4) : lf.p(5);
  fit.spec.r = r;
  fit.spec.d = 1;
  fit.sigma2_hat = lf.rss / static_cast<double>(n);
  fit.spec.sigma = std::sqrt(fit.sigma2_hat);
  fit.residuals = lf.e;
  fit.lower_count = d.n_lower;
  fit.upper_count = n - d.n_lower;
  fit.aic_k = aic_k > 0 ? aic_k : (m.common ? 6 : 7);
  fit.aic = static_cast<double>(n) * std::log(fit.sigma2_hat) + 2.0 * fit.aic_k;
  fit.loglik = -0.5 * static_cast<double>(n) *
                   std::log(2.0 * std::numbers::pi * fit.sigma2_hat) -
               0.5 * static_cast<double>(n);
  fit.at_boundary = std::abs(fit.spec.theta_lower) >= kThetaBound - 1e-6 ||
                    std::abs(fit.spec.theta_upper) >= kThetaBound - 1e-6;
  // Observed information in Gauss-Newton form: J'J / sigma^2.
  const Eigen::MatrixXd cov =
      fit.sigma2_hat * (lf.jac.transpose() * lf.jac).inverse();
  auto se = [&](Index i) { return std::sqrt(std::max(cov(i, i), 0.0)); };
  fit.se.phi_1_0 = se(0);
  fit.se.phi_1_1 = se(1);
  fit.se.phi_2_0 = se(2);
  fit.se.phi_2_1 = se(3);
  fit.se.theta_lower = se(4);
  fit.se.theta_upper = m.common ? se(4) : se(5);
  return fit;
}

TarmaFit fit_at(const Vector& x, double r, bool common, int aic_k,
                double theta_start, Index min_count) {
  const Design d = make_design(x, r);
  const Index n = d.y.size();
  require(d.n_lower >= min_count && n - d.n_lower >= min_count,
          ErrorKind::no_admissible_threshold,
          "threshold " + format_double(r) + " leaves a regime too small");
  const Model m{d, common};
  LocalFit best;
  for (double start : {theta_start, 0.0}) {
    Vector p = Vector::Zero(m.dim());
    p(4) = start;
    if (!common) p(5) = start;
    LocalFit lf = gauss_newton(m, p);
    if (lf.rss < best.rss) best = std::move(lf);
  }
  require(std::isfinite(best.rss), ErrorKind::internal, "TARMA fit failed");
  return assemble(d, m, best, r, aic_k);
}

double start_theta(const TimeSeries& series) {
  try {
    return std::clamp(fit_ima11(series).theta_hat, -0.9, 0.9);
  } catch (const Error&) {
    return 0.0;
  }
}

}  // namespace

TarmaFit fit_tarma11_at(const TimeSeries& series, double r, bool common_theta,
                        int aic_k) {
  require(series.size() >= 20, ErrorKind::too_short, "TARMA fit needs data");
  return fit_at(series.values(), r, common_theta, aic_k, start_theta(series), 3);
}

TarmaFit fit_tarma11(const TimeSeries& series, const TarmaFitOptions& options) {
  require(series.size() >= 100, ErrorKind::too_short,
          "TARMA fit needs at least 100 observations");
  require(options.min_regime_frac > 0.0 && options.min_regime_frac < 0.5,
          ErrorKind::invalid_argument, "min_regime_frac must lie in (0, 0.5)");
  require(options.a_pct > 0.0 && options.b_pct < 1.0 && options.a_pct < options.b_pct,
          ErrorKind::invalid_argument, "grid band must satisfy 0 < a < b < 1");
  require(options.grid_step > 0.0, ErrorKind::invalid_argument,
          "grid step must be positive");
  const Vector& x = series.values();
  const Index n = series.steps();
  std::vector<double> sorted(x.data(), x.data() + x.size());
  std::sort(sorted.begin(), sorted.end());

  const auto count = static_cast<Index>(
      std::floor((options.b_pct - options.a_pct) / options.grid_step + 1e-9)) + 1;
  std::vector<AicPoint> cand;
  for (Index j = 0; j < count; ++j) {
    const double pct = options.a_pct + options.grid_step * static_cast<double>(j);
    const double r = quantile_sorted(sorted, pct);
    if (!cand.empty() && r == cand.back().r) continue;
    cand.push_back({pct, r, 0.0});
  }
  const Index min_count = std::max<Index>(
      3, static_cast<Index>(std::ceil(options.min_regime_frac * static_cast<double>(n))));
  const double theta0 = start_theta(series);

  std::vector<std::optional<TarmaFit>> fits(cand.size());
  parallel_for(static_cast<Index>(cand.size()), options.threads, [&](Index j) {
    const double r = cand[static_cast<std::size_t>(j)].r;
    Index lower = 0;
    for (Index t = 0; t < n; ++t) lower += x(t) <= r;
    if (lower < min_count || n - lower < min_count) return;
    fits[static_cast<std::size_t>(j)] =
        fit_at(x, r, options.common_theta, options.aic_k, theta0, min_count);
  });

  std::optional<std::size_t> best;
  std::vector<AicPoint> profile;
  for (std::size_t j = 0; j < cand.size(); ++j) {
    if (!fits[j]) continue;
    profile.push_back({cand[j].pct, cand[j].r, fits[j]->aic});
    if (!best || fits[j]->aic < fits[*best]->aic) best = j;
  }
  require(best.has_value(), ErrorKind::no_admissible_threshold,
          "no threshold in the grid leaves both regimes large enough");
  TarmaFit out = std::move(*fits[*best]);
  out.threshold_grid = std::move(profile);
  return out;
}

std::vector<AicPoint> aic_profile(const TarmaFit& fit) { return fit.threshold_grid; }

void write_fit_report(std::ostream& out, const TarmaFit& fit) {
  auto cell = [](double v, double se) {
    return format_fixed(v, 4) + " (" + format_fixed(se, 4) + ")";
  };
  const auto& s = fit.spec;
  out << "TARMA(1,1), X_t = phi_0 + phi_1 X_{t-1} + e_t - theta e_{t-1}\n";
  out << "threshold r = " << format_double(s.r) << ", n = "
      << fit.lower_count + fit.upper_count << '\n';
  out << std::left << std::setw(8) << "regime" << std::setw(22) << "phi_0"
      << std::setw(22) << "phi_1" << "theta" << '\n';
  out << std::setw(8) << "lower" << std::setw(22) << cell(s.phi_1_0, fit.se.phi_1_0)
      << std::setw(22) << cell(s.phi_1_1, fit.se.phi_1_1)
      << cell(s.theta_lower, fit.se.theta_lower) << '\n';
  out << std::setw(8) << "upper" << std::setw(22) << cell(s.phi_2_0, fit.se.phi_2_0)
      << std::setw(22) << cell(s.phi_2_1, fit.se.phi_2_1)
      << cell(s.theta_upper, fit.se.theta_upper) << '\n';
  out << "regime counts: lower " << fit.lower_count << ", upper " << fit.upper_count
      << '\n';
  out << "sigma2 = " << format_double(fit.sigma2_hat) << ", AIC = "
      << format_fixed(fit.aic, 3) << " (k = " << fit.aic_k << ")\n";
  if (fit.at_boundary) out << "warning: MA coefficient at the invertibility bound\n";
}

void write_fit_csv(std::ostream& out, const TarmaFit& fit) {
  const auto& s = fit.spec;
  out << "param,estimate,se\n";
  auto row = [&](const char* name, double v, double se) {
    out << name << ',' << format_double(v) << ',' << format_double(se) << '\n';
  };
  row("phi_1_0", s.phi_1_0, fit.se.phi_1_0);
  row("phi_1_1", s.phi_1_1, fit.se.phi_1_1);
  row("phi_2_0", s.phi_2_0, fit.se.phi_2_0);
  row("phi_2_1", s.phi_2_1, fit.se.phi_2_1);
  row("theta_lower", s.theta_lower, fit.se.theta_lower);
  row("theta_upper", s.theta_upper, fit.se.theta_upper);
  row("r", s.r, 0.0);
  row("sigma2", fit.sigma2_hat, 0.0);
  row("aic", fit.aic, 0.0);
}

void write_aic_csv(std::ostream& out, const TarmaFit& fit) {
  out << "pct,r,aic\n";
  for (const auto& p : fit.threshold_grid)
    out << format_double(p.pct) << ',' << format_double(p.r) << ','
        << format_double(p.aic) << '\n';
}

}  // namespace tarma
