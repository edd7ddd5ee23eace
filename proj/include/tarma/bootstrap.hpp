#pragma once

#include <cstdint>
#include <vector>

#include "tarma/common.hpp"
#include "tarma/series.hpp"

namespace tarma {

struct BootstrapResult {
  double pvalue = 1.0;
  double t_obs = 0.0;
  std::vector<double> t_star;  // B values in replicate order
  Index redraws = 0;           // untestable replicates that were redrawn
};

/// Wild bootstrap with Rademacher-signed residuals. Each replicate rebuilds
/// X* from the fitted null, refits it and recomputes the sup statistic.
BootstrapResult wild_bootstrap_pvalue(const TimeSeries& series, double a_pct,
                                      double b_pct, Index B,
                                      std::uint64_t seed,
                                      bool fix_phi0 = false, int threads = 1);

}  // namespace tarma
