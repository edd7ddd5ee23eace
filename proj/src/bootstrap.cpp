#include "tarma/bootstrap.hpp"

#include <atomic>

#include "tarma/ima_fit.hpp"
#include "tarma/parallel.hpp"
#include "tarma/rng.hpp"
#include "tarma/suplm.hpp"

namespace tarma {

namespace {

constexpr int kMaxAttemptsPerReplicate = 10;

}  // namespace

BootstrapResult wild_bootstrap_pvalue(const TimeSeries& series, double a_pct,
                                      double b_pct, Index B,
                                      std::uint64_t seed, bool fix_phi0,
                                      int threads) {
  require(B >= 99, ErrorKind::invalid_argument, "bootstrap needs B >= 99");
  const ImaFit fit = fit_ima11(series, fix_phi0);
  const SupLmResult obs = sup_lm(series, fit, a_pct, b_pct);

  const Index n = series.steps();
  const double x0 = series[0];
  const double phi0 = fit.phi0_hat, theta = fit.theta_hat;
  const Vector& resid = fit.residuals;

  BootstrapResult res;
  res.t_obs = obs.t_sup;
  res.t_star.assign(static_cast<std::size_t>(B), 0.0);
  std::atomic<Index> redraws{0};
  parallel_for(B, threads, [&](Index b) {
    Vector xs(n + 1);
    for (int attempt = 0; attempt < kMaxAttemptsPerReplicate; ++attempt) {
      Rng rng(stream_seed(seed, static_cast<std::uint64_t>(b),
                          static_cast<std::uint64_t>(attempt)));
      xs(0) = x0;
      double e_prev = 0.0;
      for (Index t = 1; t <= n; ++t) {
        const double e = rng.sign() * resid(t - 1);
        xs(t) = phi0 + xs(t - 1) + e - theta * e_prev;
        e_prev = e;
      }
      try {
        res.t_star[static_cast<std::size_t>(b)] =
            sup_lm(TimeSeries(xs), a_pct, b_pct, fix_phi0).t_sup;
        return;
      } catch (const Error& err) {
        if (err.kind() != ErrorKind::untestable_series &&
            err.kind() != ErrorKind::degenerate_input)
          throw;
        redraws.fetch_add(1);
      }
    }
    fail(ErrorKind::untestable_series,
         "bootstrap replicate untestable after repeated redraws");
  });
  res.redraws = redraws.load();
  Index exceed = 0;
  for (double t : res.t_star)
    if (t >= res.t_obs) ++exceed;
  res.pvalue = (1.0 + static_cast<double>(exceed)) / (static_cast<double>(B) + 1.0);
  return res;
}

}  // namespace tarma
