#pragma once

#include <iosfwd>
#include <vector>

#include "tarma/common.hpp"
#include "tarma/model_sim.hpp"
#include "tarma/series.hpp"

namespace tarma {

struct TarmaFitOptions {
  double a_pct = 0.01;
  double b_pct = 0.99;
  double grid_step = 0.01;  // spacing of the percentile levels
  double min_regime_frac = 0.01;
  bool common_theta = false;
  int aic_k = 0;  // 0 selects 7 (6 with common theta)
  int threads = 1;
};

/// Standard errors in TarmaSpec field order; theta_upper duplicates
/// theta_lower under a common theta.
struct TarmaSe {
  double phi_1_0 = 0.0;
  double phi_1_1 = 0.0;
  double phi_2_0 = 0.0;
  double phi_2_1 = 0.0;
  double theta_lower = 0.0;
  double theta_upper = 0.0;
};

struct AicPoint {
  double pct = 0.0;  // percentile level that produced r
  double r = 0.0;
  double aic = 0.0;
};

struct TarmaFit {
  TarmaSpec spec;
  TarmaSe se;
  double aic = 0.0;
  double sigma2_hat = 0.0;
  double loglik = 0.0;
  Vector residuals;  // e_1..e_n
  Index lower_count = 0;
  Index upper_count = 0;
  std::vector<AicPoint> threshold_grid;  // admissible points only
  int aic_k = 7;
  bool at_boundary = false;
};

/// Conditional Gaussian ML fit of a two-regime TARMA(1,1) with delay 1 at
/// fixed threshold r; fails with no_admissible_threshold when a regime is
/// empty.
TarmaFit fit_tarma11_at(const TimeSeries& series, double r,
                        bool common_theta = false, int aic_k = 0);

/// Threshold chosen by minimum AIC (ties to the smallest r) over the
/// percentile grid, keeping points where both regimes hold at least
/// min_regime_frac * n observations.
TarmaFit fit_tarma11(const TimeSeries& series,
                     const TarmaFitOptions& options = {});

std::vector<AicPoint> aic_profile(const TarmaFit& fit);

/// Coefficient table with standard errors in parentheses.
void write_fit_report(std::ostream& out, const TarmaFit& fit);

/// CSV `param,estimate,se` followed by nothing else.
void write_fit_csv(std::ostream& out, const TarmaFit& fit);

/// CSV `pct,r,aic`.
void write_aic_csv(std::ostream& out, const TarmaFit& fit);

}  // namespace tarma
