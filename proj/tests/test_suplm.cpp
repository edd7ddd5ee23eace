#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <sstream>
#include <vector>

#include "oracles.hpp"
#include "tarma/model_sim.hpp"
#include "tarma/rng.hpp"
#include "tarma/stats.hpp"
#include "tarma/suplm.hpp"

using namespace tarma;

namespace {

TimeSeries random_walk(std::uint64_t seed, Index n) {
  return simulate_ima(0.0, 0.0, 1.0, n, 0.0, NoiseSpec::gaussian(seed));
}

std::vector<double> as_vec(const TimeSeries& s) {
  return {s.values().data(), s.values().data() + s.size()};
}

// Dense oracle with analytic derivatives from an explicit loop and the full
// 5x5 information inverted directly; the psi_2 block of the inverse is the
// inverse Schur complement.
double dense_lm(const TimeSeries& x, const ImaFit& f, double r) {
  const Index n = x.steps();
  Eigen::MatrixXd d(n, 4);
  Eigen::VectorXd e(n);
  double a = 0, b = 0, c = 0, g = 0, prev = 0;
  for (Index t = 1; t <= n; ++t) {
    const double ind = x[t - 1] <= r ? 1.0 : 0.0;
    a = -1.0 + f.theta_hat * a;
    b = prev + f.theta_hat * b;
    c = -ind + f.theta_hat * c;
    g = -x[t - 1] * ind + f.theta_hat * g;
    d.row(t - 1) << a, b, c, g;
    prev = x[t] - x[t - 1] - f.phi0_hat + f.theta_hat * prev;
    e(t - 1) = prev;
  }
  const double s2 = f.sigma2_hat;
  const Eigen::Matrix4d m = d.transpose() * d / s2;
  Eigen::Matrix<double, 5, 5> info = Eigen::Matrix<double, 5, 5>::Zero();
  const int pos[4] = {0, 1, 3, 4};
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) info(pos[i], pos[j]) = m(i, j);
  info(2, 2) = n / (2 * s2 * s2);
  const Eigen::Vector2d score = -(d.rightCols<2>().transpose() * e) / s2;
  const Eigen::Matrix<double, 5, 5> inv = info.inverse();
  return score.dot(inv.bottomRightCorner<2, 2>() * score);
}

}  // namespace

TEST_SUITE("suplm") {

TEST_CASE("score panel recursions") {
  Vector x(4);
  x << 0.0, 1.0, -1.0, 2.0;
  Vector e(3);
  e << 0.5, -0.2, 0.1;
  const ScorePanel p = score_panel(x, e, 0.5, 0.0);
  CHECK(p.d_phi0(2) == doctest::Approx(-1.75));
  CHECK(p.d_theta(1) == doctest::Approx(0.5));
  // Indicators at lags X_0 = 0 (in), X_1 = 1 (out), X_2 = -1 (in).
  CHECK(p.d_phi10(0) == -1.0);
  CHECK(p.d_phi10(1) == -0.5);
  CHECK(p.d_phi10(2) == doctest::Approx(-1.25));
  CHECK(p.d_phi11(2) == doctest::Approx(1.0));
  const ScorePanel q = score_panel(x, e, 0.5, -5.0);
  CHECK(q.d_phi10.isZero());
  CHECK(q.d_phi11.isZero());
}

TEST_CASE("panel columns match central finite differences") {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const TimeSeries x = random_walk(seed, 200);
    const ImaFit f = fit_ima11(x);
    std::vector<double> xs = as_vec(x);
    std::vector<double> sorted = xs;
    std::sort(sorted.begin(), sorted.end());
    const double r = quantile_sorted(sorted, 0.5);
    const ScorePanel p = score_panel(x, f, r);
    const double h = 1e-6;
    auto fd = [&](int k, Index t) {
      double up[4] = {f.phi0_hat, f.theta_hat, 0, 0}, dn[4] = {f.phi0_hat, f.theta_hat, 0, 0};
      up[k] += h;
      dn[k] -= h;
      const auto eu = oracle::residuals(xs, up[0], up[1], up[2], up[3], r);
      const auto ed = oracle::residuals(xs, dn[0], dn[1], dn[2], dn[3], r);
      return (eu[t] - ed[t]) / (2 * h);
    };
    const Vector* cols[4] = {&p.d_phi0, &p.d_theta, &p.d_phi10, &p.d_phi11};
    for (int k = 0; k < 4; ++k) {
      double worst = 0.0;
      for (Index t = 0; t < 200; t += 7) {
        const double want = fd(k, t), got = (*cols[k])(t);
        worst = std::max(worst, std::abs(got - want) / std::max(1.0, std::abs(want)));
      }
      CHECK(worst < 1e-5);
    }
  }
}

TEST_CASE("degenerate thresholds are excluded") {
  const TimeSeries x = random_walk(4, 200);
  const ImaFit f = fit_ima11(x);
  CHECK_FALSE(lm_stat_at(x, f, x.values().minCoeff() - 1.0).has_value());
  CHECK_FALSE(lm_stat_at(x, f, x.values().maxCoeff()).has_value());
}

TEST_CASE("statistic equals the dense blockwise oracle") {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const TimeSeries x = random_walk(seed, 400);
    const ImaFit f = fit_ima11(x);
    std::vector<double> s = as_vec(x);
    std::sort(s.begin(), s.end());
    const double r = quantile_sorted(s, 0.4);
    const auto t = lm_stat_at(x, f, r);
    REQUIRE(t.has_value());
    CHECK(*t == doctest::Approx(dense_lm(x, f, r)).epsilon(1e-8));
  }
}

TEST_CASE("sweep matches pointwise evaluation and the finite-difference oracle") {
  Rng rng(77);
  for (int rep = 0; rep < 20; ++rep) {
    const Index n = 30 + static_cast<Index>(rng.uniform() * 31);
    const TimeSeries x = simulate_ima(1.6 * rng.uniform() - 0.8, 0.0, 1.0, n, 0.0,
                                      NoiseSpec::gaussian(1000 + rep));
    const ImaFit f = fit_ima11(x);
    const ThresholdGrid g = threshold_grid(x, 0.25, 0.75);
    const auto curve = lm_curve(x, f, g.values);
    const auto xs = as_vec(x);
    for (std::size_t i = 0; i < g.values.size(); ++i) {
      const auto direct = lm_stat_at(x, f, g.values[i]);
      REQUIRE(curve[i].has_value() == direct.has_value());
      if (!curve[i]) continue;
      CHECK(*curve[i] == doctest::Approx(*direct).epsilon(1e-9));
      const auto o = oracle::lm_stat(xs, f.phi0_hat, f.theta_hat, f.sigma2_hat, g.values[i]);
      REQUIRE(o.has_value());
      CHECK(*curve[i] == doctest::Approx(*o).epsilon(1e-5));
    }
  }
}

TEST_CASE("sup statistic bookkeeping") {
  const TimeSeries x = random_walk(9, 300);
  const SupLmResult r = sup_lm(x, 0.25, 0.75);
  REQUIRE(!r.curve.empty());
  double best = -1.0, arg = 0.0;
  for (const auto& p : r.curve) {
    CHECK(p.stat >= 0.0);
    if (p.stat > best) best = p.stat, arg = p.r;
  }
  CHECK(r.t_sup == best);
  CHECK(r.r_hat == arg);
  CHECK(r.grid.grid_size ==
        static_cast<Index>(r.curve.size() + r.grid.excluded.size()));
  CHECK_FALSE(r.pvalue.has_value());
  std::ostringstream csv;
  write_curve_csv(csv, r);
  CHECK(csv.str().rfind("r,T\n", 0) == 0);
}

TEST_CASE("location and scale invariance") {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const TimeSeries x = random_walk(seed, 300);
    const SupLmResult base = sup_lm(x, 0.25, 0.75);
    const SupLmResult shifted = sup_lm(x.affine(1.0, 1000.0), 0.25, 0.75);
    REQUIRE(shifted.curve.size() == base.curve.size());
    for (std::size_t i = 0; i < base.curve.size(); ++i) {
      CHECK(shifted.curve[i].stat == doctest::Approx(base.curve[i].stat).epsilon(1e-8));
      CHECK(shifted.curve[i].r - 1000.0 == doctest::Approx(base.curve[i].r));
    }
    CHECK(shifted.r_hat - 1000.0 == doctest::Approx(base.r_hat));
    for (double lambda : {0.1, 3.0, 1000.0}) {
      const SupLmResult scaled = sup_lm(x.affine(lambda, 0.0), 0.25, 0.75);
      CHECK(scaled.t_sup == doctest::Approx(base.t_sup).epsilon(1e-8));
    }
  }
}

TEST_CASE("regulation from above is the below-test on negated data") {
  const TimeSeries x = random_walk(12, 300);
  const SupLmResult above = sup_lm_above(x, 0.25, 0.75);
  const SupLmResult below = sup_lm(x.negated(), 0.25, 0.75);
  CHECK(above.t_sup == below.t_sup);
  CHECK(above.r_hat == -below.r_hat);
  CHECK(above.above);
}

TEST_CASE("above and below tests have equal null size") {
  int below = 0, above = 0;
  const int reps = 2000;
  for (int i = 0; i < reps; ++i) {
    const TimeSeries x = random_walk(20000 + i, 300);
    below += sup_lm(x, 0.25, 0.75).t_sup > 14.02;
    above += sup_lm_above(x, 0.25, 0.75).t_sup > 14.02;
  }
  const double pb = static_cast<double>(below) / reps, pa = static_cast<double>(above) / reps;
  const double se = std::sqrt((pa * (1 - pa) + pb * (1 - pb)) / reps);
  CHECK(std::abs(pa - pb) < 3.0 * se + 1e-12);
}

TEST_CASE("the above-test has more power on data regulated from above") {
  int below = 0, above = 0;
  for (int i = 0; i < 200; ++i) {
    const TimeSeries x =
        simulate_dgp(DgpId::parse("EQ28", 1.0, 0.0), 300, NoiseSpec::gaussian(300 + i))
            .negated();
    below += sup_lm(x, 0.25, 0.75).t_sup > 14.02;
    above += sup_lm_above(x, 0.25, 0.75).t_sup > 14.02;
  }
  CHECK(above > below);
}

TEST_CASE("band sweep matches separate runs") {
  const TimeSeries x = random_walk(33, 500);
  const std::vector<double> pis{0.01, 0.1, 0.25, 0.4};
  const auto bands = sup_lm_bands(x, pis);
  for (std::size_t i = 0; i < pis.size(); ++i)
    CHECK(bands[i] == doctest::Approx(sup_lm(x, pis[i], 1 - pis[i]).t_sup).epsilon(1e-12));
}

TEST_CASE("grid is the distinct lagged values inside the band") {
  const TimeSeries x = random_walk(2, 100);
  const ThresholdGrid g = threshold_grid(x, 0.25, 0.75);
  std::vector<double> all = as_vec(x);
  std::vector<double> sorted = all;
  std::sort(sorted.begin(), sorted.end());
  const double lo = quantile_sorted(sorted, 0.25), hi = quantile_sorted(sorted, 0.75);
  std::vector<double> want;
  for (Index t = 0; t < x.steps(); ++t)
    if (all[t] >= lo && all[t] <= hi) want.push_back(all[t]);
  std::sort(want.begin(), want.end());
  want.erase(std::unique(want.begin(), want.end()), want.end());
  CHECK(g.values == want);
}

TEST_CASE("input errors") {
  CHECK_THROWS_AS(sup_lm(random_walk(1, 30), 0.25, 0.75), Error);
  CHECK_THROWS_AS(sup_lm(random_walk(1, 100), 0.75, 0.25), Error);
}

}
