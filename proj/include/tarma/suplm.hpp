#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tarma/common.hpp"
#include "tarma/ima_fit.hpp"
#include "tarma/series.hpp"

namespace tarma {

/// Residual derivatives de_t/dpsi_j for t = 1..n at (phi0_hat, theta_hat) and
/// psi_2 = 0, for one threshold r:
///   d_phi0  = -1 + theta d_phi0[t-1]
///   d_theta = e_{t-1} + theta d_theta[t-1]
///   d_phi10 = -I(X_{t-1} <= r) + theta d_phi10[t-1]
///   d_phi11 = -X_{t-1} I(X_{t-1} <= r) + theta d_phi11[t-1]
/// all started from zero at t = 0.
template <typename Scalar>
struct BasicScorePanel {
  VectorX<Scalar> d_phi0;
  VectorX<Scalar> d_theta;
  VectorX<Scalar> d_phi10;
  VectorX<Scalar> d_phi11;
};

using ScorePanel = BasicScorePanel<double>;

template <typename DerivedX, typename DerivedE>
BasicScorePanel<typename DerivedX::Scalar> score_panel(
    const Eigen::MatrixBase<DerivedX>& x,
    const Eigen::MatrixBase<DerivedE>& residuals,
    typename DerivedX::Scalar theta, typename DerivedX::Scalar r) {
  using Scalar = typename DerivedX::Scalar;
  const Index n = residuals.size();
  require(x.size() == n + 1, ErrorKind::internal,
          "score_panel: residual length must be series length - 1");
  BasicScorePanel<Scalar> p;
  p.d_phi0.resize(n);
  p.d_theta.resize(n);
  p.d_phi10.resize(n);
  p.d_phi11.resize(n);
  Scalar a(0), b(0), c(0), e(0), prev_resid(0);
  for (Index t = 1; t <= n; ++t) {
    const Scalar lagged = x(t - 1);
    const Scalar ind = lagged <= r ? Scalar(1) : Scalar(0);
    a = Scalar(-1) + theta * a;
    b = prev_resid + theta * b;
    c = -ind + theta * c;
    e = -lagged * ind + theta * e;
    p.d_phi0(t - 1) = a;
    p.d_theta(t - 1) = b;
    p.d_phi10(t - 1) = c;
    p.d_phi11(t - 1) = e;
    prev_resid = residuals(t - 1);
  }
  return p;
}

ScorePanel score_panel(const TimeSeries& series, const ImaFit& fit, double r);

/// Observed information blocks for psi_1 = (phi0, theta, sigma^2) and
/// psi_2 = (phi_{1,0}, phi_{1,1}) in product form; sigma^2 cross terms are
/// zero and its diagonal entry is n / (2 sigma^4).
struct InfoBlocks {
  Eigen::Matrix3d i11;
  Eigen::Matrix<double, 3, 2> i12;
  Eigen::Matrix2d i22;
};

InfoBlocks info_blocks(const ScorePanel& panel, double sigma2);

/// Score d l / d psi_2 at the null fit.
Eigen::Vector2d psi2_score(const ScorePanel& panel, const Vector& residuals,
                           double sigma2);

/// Evaluations whose normalized Schur complement is this ill-conditioned are
/// dropped from the supremum.
inline constexpr double kMaxSchurCondition = 1e12;

/// T_n(r), or nullopt when the threshold is excluded (singular or
/// ill-conditioned Schur complement). With fit.fix_phi0 the nuisance block is
/// (theta, sigma^2) only.
std::optional<double> lm_stat_at(const TimeSeries& series, const ImaFit& fit,
                                 double r);

/// Distinct lagged values X_0..X_{n-1} lying in the [a_pct, b_pct] type-7
/// percentile band of X_0..X_n.
struct ThresholdGrid {
  double a_pct = 0.0;
  double b_pct = 0.0;
  double lower = 0.0;
  double upper = 0.0;
  std::vector<double> values;  // ascending
};

ThresholdGrid threshold_grid(const TimeSeries& series, double a_pct,
                             double b_pct);

/// T_n(r) for every ascending threshold in one O(n log n) sweep; entries are
/// nullopt where excluded.
std::vector<std::optional<double>> lm_curve(const TimeSeries& series,
                                            const ImaFit& fit,
                                            std::span<const double> thresholds);

enum class PValueSource { none, asymptotic_table, finite_sample_table, bootstrap };

const char* to_string(PValueSource s);

struct CurvePoint {
  double r;
  double stat;
};

struct GridMeta {
  double a_pct = 0.0;
  double b_pct = 0.0;
  double lower = 0.0;  // band endpoints in data units
  double upper = 0.0;
  Index grid_size = 0;
  std::vector<double> excluded;
};

struct SupLmResult {
  double t_sup = 0.0;
  double r_hat = 0.0;
  double r_hat_pct = 0.0;  // empirical CDF of the series at r_hat
  std::vector<CurvePoint> curve;
  GridMeta grid;
  ImaFit fit;
  bool above = false;
  std::optional<double> pvalue;
  PValueSource pvalue_source = PValueSource::none;
  double theta_used_for_table = 0.0;
};

/// Fits the IMA(1,1) null and maximizes T_n(r) over the threshold grid of
/// the [a_pct, b_pct] band. Ties go to the smallest r.
SupLmResult sup_lm(const TimeSeries& series, double a_pct, double b_pct,
                   bool fix_phi0 = false);

/// Same with a precomputed null fit.
SupLmResult sup_lm(const TimeSeries& series, const ImaFit& fit, double a_pct,
                   double b_pct);

/// Regulation from above: sup_lm on -X with thresholds mapped back.
SupLmResult sup_lm_above(const TimeSeries& series, double a_pct, double b_pct,
                         bool fix_phi0 = false);

/// Supremum for each symmetric band [pi, 1 - pi] from a single fit and sweep.
/// NaN marks a band with no admissible threshold.
std::vector<double> sup_lm_bands(const TimeSeries& series,
                                 std::span<const double> pis,
                                 bool fix_phi0 = false);

/// CSV `r,T` of the evaluated curve.
void write_curve_csv(std::ostream& out, const SupLmResult& result);

}  // namespace tarma
