#include "tarma/local_power.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <ostream>

#include "format.hpp"
#include "tarma/parallel.hpp"
#include "tarma/rng.hpp"
#include "tarma/stats.hpp"

namespace tarma {

namespace {

constexpr std::uint64_t kDiffusionStream = 0xd1ff;

}  // namespace

void DiffusionSpec::validate() const {
  for (double v : {c_1_0, c_1_1, c_2_0, c_2_1, tau0, w0, horizon})
    require(std::isfinite(v), ErrorKind::invalid_spec,
            "diffusion spec has a non-finite value");
  require(steps >= 1000, ErrorKind::invalid_spec, "diffusion needs steps >= 1000");
  require(horizon > 0.0, ErrorKind::invalid_spec, "diffusion horizon must be positive");
}

Index DiffusionSpec::effective_steps() const {
  if (!auto_step) return steps;
  const double cmax = std::max({std::abs(c_1_0), std::abs(c_1_1),
                                std::abs(c_2_0), std::abs(c_2_1), 1.0});
  return static_cast<Index>(std::ceil(static_cast<double>(steps) * cmax));
}

DiffusionSpec diffusion_from_local_alternative(double h_1_0, double h_1_1,
                                               double h_2_0, double h_2_1,
                                               double rho_sqrt_if, double sigma,
                                               double theta, double tau0,
                                               Index steps,
                                               bool validate_contiguity) {
  require(sigma > 0.0, ErrorKind::invalid_spec, "sigma must be positive");
  require(std::abs(theta) < 1.0, ErrorKind::invalid_spec, "|theta| must be < 1");
  if (validate_contiguity) {
    const double half_pi = std::numbers::pi / 2.0;
    require(h_1_1 > -half_pi && h_1_1 <= 0.0 && h_2_1 > -half_pi && h_2_1 <= 0.0,
            ErrorKind::invalid_spec, "contiguity needs -pi/2 < h_i_1 <= 0");
    require(h_1_1 + h_2_1 < 0.0, ErrorKind::invalid_spec,
            "contiguity needs h_1_1 + h_2_1 < 0");
  }
  DiffusionSpec s;
  const double scale = rho_sqrt_if / (sigma * (1.0 - theta));
  s.c_1_0 = scale * h_1_0;
  s.c_2_0 = scale * h_2_0;
  s.c_1_1 = rho_sqrt_if * h_1_1;
  s.c_2_1 = rho_sqrt_if * h_2_1;
  s.tau0 = tau0;
  s.steps = steps;
  s.validate();
  return s;
}

DiffusionSpec symmetric_example(double h, Index steps, double horizon) {
  require(h >= 0.0, ErrorKind::invalid_spec, "symmetric example needs h >= 0");
  DiffusionSpec s;
  s.c_1_0 = 2.0 * h;
  s.c_2_0 = -2.0 * h;
  s.c_1_1 = -0.5;
  s.c_2_1 = -0.5;
  s.tau0 = 0.0;
  s.steps = steps;
  s.horizon = horizon;
  s.validate();
  return s;
}

double stationary_density(double x, double h) {
  const double k = 2.0 * std::sqrt(2.0 * std::numbers::pi) * normal_cdf(-h);
  const double z = x <= 0.0 ? x - h : x + h;
  return std::exp(-0.5 * z * z) / k;
}

Vector simulate_threshold_diffusion(const DiffusionSpec& spec,
                                    const Vector& normals) {
  spec.validate();
  const Index n = spec.effective_steps();
  require(normals.size() == n, ErrorKind::invalid_argument,
          "need one normal draw per Euler step");
  const double dt = spec.horizon / static_cast<double>(n);
  const double sd = std::sqrt(dt);
  Vector w(n + 1);
  w(0) = spec.w0;
  for (Index k = 0; k < n; ++k) {
    const double x = w(k);
    const double drift =
        x <= spec.tau0 ? spec.c_1_0 + spec.c_1_1 * x : spec.c_2_0 + spec.c_2_1 * x;
    w(k + 1) = x + drift * dt + sd * normals(k);
  }
  require(std::isfinite(w(n)), ErrorKind::invalid_spec, "diffusion path diverged");
  return w;
}

Vector simulate_threshold_diffusion(const DiffusionSpec& spec,
                                    std::uint64_t seed) {
  spec.validate();
  Rng rng(stream_seed(seed, kDiffusionStream));
  Vector z(spec.effective_steps());
  for (Index k = 0; k < z.size(); ++k) z(k) = rng.normal();
  return simulate_threshold_diffusion(spec, z);
}

double limiting_stat_under_alternative(const DiffusionSpec& spec,
                                       const FunctionalBand& band,
                                       Index tau_points, std::uint64_t seed) {
  require(spec.horizon == 1.0, ErrorKind::invalid_spec,
          "the limiting functional lives on [0, 1]");
  const Vector w = simulate_threshold_diffusion(spec, seed);
  return evaluate_functional(w, band, tau_points).F_value;
}

double limiting_stat_under_alternative(const DiffusionSpec& spec,
                                       double r_lower, double r_upper,
                                       Index steps, Index tau_points,
                                       std::uint64_t seed) {
  require(r_lower < r_upper, ErrorKind::invalid_argument, "need r_L < r_U");
  DiffusionSpec s = spec;
  s.steps = steps;
  return limiting_stat_under_alternative(
      s, FunctionalBand::fixed(r_lower, r_upper), tau_points, seed);
}

std::vector<PowerPoint> local_power_curve(
    const std::vector<std::pair<double, DiffusionSpec>>& family,
    double critical_value, const LocalPowerConfig& config) {
  require(config.level > 0.0 && config.level < 1.0, ErrorKind::invalid_argument,
          "level must lie in (0, 1)");
  require(config.reps >= 1000, ErrorKind::invalid_argument,
          "local power needs reps >= 1000");
  const FunctionalBand band = FunctionalBand::quantile(config.pi);
  std::vector<PowerPoint> out;
  for (std::size_t j = 0; j < family.size(); ++j) {
    const auto& [param, spec] = family[j];
    std::vector<char> reject(static_cast<std::size_t>(config.reps), 0);
    parallel_for(config.reps, config.threads, [&](Index i) {
      for (std::uint64_t attempt = 0;; ++attempt) {
        try {
          const double f = limiting_stat_under_alternative(
              spec, band, config.tau_points,
              stream_seed(config.seed, j, static_cast<std::uint64_t>(i), attempt));
          reject[static_cast<std::size_t>(i)] = f > critical_value;
          return;
        } catch (const Error& e) {
          if (e.kind() != ErrorKind::untestable_series || attempt >= 100) throw;
        }
      }
    });
    const double rate =
        static_cast<double>(std::count(reject.begin(), reject.end(), 1)) /
        static_cast<double>(config.reps);
    out.push_back({param, rate, std::sqrt(rate * (1.0 - rate) / config.reps)});
  }
  return out;
}

std::vector<PowerPoint> local_power_curve(
    const std::vector<std::pair<double, DiffusionSpec>>& family,
    const NullTable& table, const LocalPowerConfig& config) {
  const NullEntry* e = table.find(0.0, kAsymptotic, config.pi);
  require(e != nullptr, ErrorKind::missing_table,
          "no asymptotic theta = 0 entry for pi = " + format_double(config.pi));
  const double target = 1.0 - config.level;
  double crit = std::numeric_limits<double>::quiet_NaN();
  for (std::size_t i = 0; i < e->levels.size(); ++i)
    if (std::abs(e->levels[i] - target) < 1e-12) crit = e->quantiles[i];
  if (std::isnan(crit) && !e->samples.empty()) crit = quantile_sorted(e->samples, target);
  require(!std::isnan(crit), ErrorKind::missing_table,
          "null entry has no quantile at level " + format_double(target));
  return local_power_curve(family, crit, config);
}

void write_power_csv(std::ostream& out, const std::vector<PowerPoint>& curve) {
  out << "param,rate,se\n";
  for (const auto& p : curve)
    out << format_double(p.param) << ',' << format_double(p.rate) << ','
        << format_double(p.se) << '\n';
}

}  // namespace tarma
