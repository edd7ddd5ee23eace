#pragma once

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "tarma/common.hpp"
#include "tarma/series.hpp"

namespace tarma {

/// Two-regime TARMA(1,1):
///   X_t = phi_1_0 + phi_1_1 X_{t-1} + e_t - theta_lower e_{t-1}  if X_{t-d} <= r
///   X_t = phi_2_0 + phi_2_1 X_{t-1} + e_t - theta_upper e_{t-1}  otherwise.
struct TarmaSpec {
  double phi_1_0 = 0.0;
  double phi_1_1 = 1.0;
  double phi_2_0 = 0.0;
  double phi_2_1 = 1.0;
  double theta_lower = 0.0;
  double theta_upper = 0.0;
  double r = 0.0;
  int d = 1;
  double sigma = 1.0;

  /// Common-theta model with an IMA(1,1) upper regime slope left to the caller.
  static TarmaSpec common(double phi_1_0, double phi_1_1, double phi_2_0,
                          double phi_2_1, double theta, double r = 0.0,
                          double sigma = 1.0);

  bool common_theta() const { return theta_lower == theta_upper; }

  /// Throws invalid_spec on non-finite values, |theta| >= 1, sigma <= 0, d < 1.
  void validate() const;
};

enum class NoiseKind { gaussian, rademacher, custom };

/// Innovation source. `gaussian` draws sigma * N(0, 1) and `rademacher` draws
/// sigma * (+-1) from a stream keyed by `seed`; `custom` uses `values` verbatim
/// as e_1, e_2, ... (sigma is not applied).
struct NoiseSpec {
  NoiseKind kind = NoiseKind::gaussian;
  std::uint64_t seed = 0;
  std::vector<double> values;

  static NoiseSpec gaussian(std::uint64_t seed) {
    return {NoiseKind::gaussian, seed, {}};
  }
  static NoiseSpec custom(std::vector<double> values) {
    return {NoiseKind::custom, 0, std::move(values)};
  }
};

/// Innovations e_1..e_n (index 0 holds e_0 = 0).
Vector draw_innovations(const NoiseSpec& noise, Index n, double sigma);

/// X_0 = x0, X_1..X_n from the TARMA recursion with e_0 = 0. For t < d the
/// regime is selected with X_{t-d} taken as x0.
TimeSeries simulate_tarma(const TarmaSpec& spec, Index n, double x0,
                          const NoiseSpec& noise);

/// X_t = phi0 + X_{t-1} + e_t - theta e_{t-1}, e_0 = 0.
TimeSeries simulate_ima(double theta, double phi0, double sigma, Index n,
                        double x0, const NoiseSpec& noise);

enum class RegimeClass { ergodic, null_recurrent, transient };

const char* to_string(RegimeClass c);

/// Long-run behaviour of the constrained model (phi_2_1 = 1, common theta).
RegimeClass classify_regime(const TarmaSpec& spec);

enum class DgpKind {
  eq28,
  m1,
  m2,
  m3,
  m4,
  m5,
  m6,
  m7,
  m8,
  m9,
  m10,
  m11,
  tarma_ima,
};

struct DgpId {
  DgpKind kind = DgpKind::eq28;
  double tau = 0.0;    // eq28, tarma_ima
  double theta = 0.0;  // eq28, tarma_ima
  double snr = std::numeric_limits<double>::infinity();

  /// Accepts EQ28, M1..M11, TARMA_IMA (case-insensitive).
  static DgpId parse(const std::string& name, double tau = 0.0,
                     double theta = 0.0,
                     double snr = std::numeric_limits<double>::infinity());

  /// Short label such as "EQ28(tau=0.5,theta=0)" or "M3,snr=5".
  std::string label() const;
};

/// tau * (0, 0.7, -0.02, 0.99) + (1 - tau) * (0, 1, 0, 1), threshold 0.
TarmaSpec eq28_spec(double tau, double theta);

/// Lower regime (-0.02 tau, 1 - 0.3 tau), upper regime a driftless IMA(1,1),
/// threshold 0.
TarmaSpec tarma_ima_spec(double tau, double theta);

/// Self-exciting TAR(1) parameters of M8..M11 (threshold 0, theta 0).
TarmaSpec tar_spec(DgpKind kind);

/// Burn-in discarded by stationary DGPs (M8..M11).
inline constexpr Index kStationaryBurnIn = 500;

/// One path X_0..X_n of the named DGP. With finite snr the returned series is
/// Y_t = X_t + eta_t with eta ~ N(0, var(X) / snr), var(X) the sample variance
/// of this path; eta comes from a stream derived from noise.seed so that the
/// X path is the same for every snr.
TimeSeries simulate_dgp(const DgpId& dgp, Index n, const NoiseSpec& noise);

/// Adds N(0, var(X)/snr) measurement noise; identity for snr = +inf.
TimeSeries add_measurement_noise(const TimeSeries& x, double snr,
                                 std::uint64_t seed);

}  // namespace tarma
