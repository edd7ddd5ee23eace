#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "tarma/common.hpp"
#include "tarma/null_dist.hpp"

namespace tarma {

/// Threshold diffusion dW = drift(W) ds + dB on [0, horizon] with
///   drift(w) = c_1_0 + c_1_1 w  if w <= tau0,  c_2_0 + c_2_1 w  otherwise.
/// Coefficients already include the rho * sqrt(I_f) factor.
struct DiffusionSpec {
  double c_1_0 = 0.0;
  double c_1_1 = 0.0;
  double c_2_0 = 0.0;
  double c_2_1 = 0.0;
  double tau0 = 0.0;
  Index steps = 5000;
  double w0 = 0.0;
  double horizon = 1.0;
  bool auto_step = false;  // inflate steps in proportion to max |c|

  /// Throws invalid_spec for non-finite values, steps < 1000, horizon <= 0.
  void validate() const;

  /// Number of Euler steps actually taken.
  Index effective_steps() const;
};

/// Local-alternative parameters h = (h_1_0, h_1_1, h_2_0, h_2_1) mapped to
/// drift coefficients: c_i_0 = k h_i_0 / (sigma (1 - theta)), c_i_1 = k h_i_1
/// with k = rho * sqrt(I_f). With validate_contiguity the slopes must satisfy
/// -pi/2 < h_1_1, h_2_1 <= 0 and h_1_1 + h_2_1 < 0.
DiffusionSpec diffusion_from_local_alternative(double h_1_0, double h_1_1,
                                               double h_2_0, double h_2_1,
                                               double rho_sqrt_if, double sigma,
                                               double theta, double tau0,
                                               Index steps,
                                               bool validate_contiguity);

/// Symmetric ergodic example: drift 2h I(w <= 0) - 2h I(w > 0) - w / 2.
DiffusionSpec symmetric_example(double h, Index steps = 5000,
                                double horizon = 1.0);

/// Stationary density of dW = {m I(w <= 0) - m I(w > 0) - w/2} ds + dB:
///   pi(x) = exp[-{(x - h)^2 I(x <= 0) + (x + h)^2 I(x > 0)} / 2] / k,
///   k = 2 sqrt(2 pi) Phi(-h), with h = 2 m.
double stationary_density(double x, double h);

/// Mode parameter h of stationary_density for a symmetric drift intercept m.
inline double symmetric_density_parameter(double drift_intercept) {
  return 2.0 * drift_intercept;
}

/// Euler-Maruyama path W_0..W_N, N = effective_steps().
Vector simulate_threshold_diffusion(const DiffusionSpec& spec,
                                    std::uint64_t seed);

/// Same driven by caller-supplied standard normal draws (size N).
Vector simulate_threshold_diffusion(const DiffusionSpec& spec,
                                    const Vector& normals);

/// F of a threshold-diffusion path on [0, 1] (horizon must be 1).
double limiting_stat_under_alternative(const DiffusionSpec& spec,
                                       const FunctionalBand& band,
                                       Index tau_points, std::uint64_t seed);

/// Overload with fixed tau band and explicit step count.
double limiting_stat_under_alternative(const DiffusionSpec& spec,
                                       double r_lower, double r_upper,
                                       Index steps, Index tau_points,
                                       std::uint64_t seed);

struct PowerPoint {
  double param = 0.0;
  double rate = 0.0;
  double se = 0.0;
};

struct LocalPowerConfig {
  double level = 0.05;
  Index reps = 1000;
  std::uint64_t seed = 1;
  double pi = 0.25;  // quantile band [pi, 1 - pi]
  Index tau_points = 0;
  int threads = 1;
};

/// Rejection rate of F against the asymptotic theta = 0 table quantile at
/// 1 - level for each family member. Throws missing_table when the table has
/// no matching entry.
std::vector<PowerPoint> local_power_curve(
    const std::vector<std::pair<double, DiffusionSpec>>& family,
    const NullTable& table, const LocalPowerConfig& config);

/// Same against an explicit critical value.
std::vector<PowerPoint> local_power_curve(
    const std::vector<std::pair<double, DiffusionSpec>>& family,
    double critical_value, const LocalPowerConfig& config);

/// CSV `param,rate,se`.
void write_power_csv(std::ostream& out, const std::vector<PowerPoint>& curve);

}  // namespace tarma
