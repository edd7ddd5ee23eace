#include "tarma/model_sim.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

#include "format.hpp"
#include "tarma/rng.hpp"
#include "tarma/stats.hpp"

namespace tarma {

namespace {

constexpr std::uint64_t kInnovationStream = 0x1a2b;
constexpr std::uint64_t kMeasurementStream = 0x3c4d;

}  // namespace

TarmaSpec TarmaSpec::common(double phi_1_0, double phi_1_1, double phi_2_0,
                            double phi_2_1, double theta, double r,
                            double sigma) {
  TarmaSpec s;
  s.phi_1_0 = phi_1_0;
  s.phi_1_1 = phi_1_1;
  s.phi_2_0 = phi_2_0;
  s.phi_2_1 = phi_2_1;
  s.theta_lower = theta;
  s.theta_upper = theta;
  s.r = r;
  s.sigma = sigma;
  return s;
}

void TarmaSpec::validate() const {
  for (double v : {phi_1_0, phi_1_1, phi_2_0, phi_2_1, theta_lower, theta_upper,
                   r, sigma})
    require(std::isfinite(v), ErrorKind::invalid_spec,
            "TARMA spec has a non-finite parameter");
  require(std::abs(theta_lower) < 1.0 && std::abs(theta_upper) < 1.0,
          ErrorKind::invalid_spec, "TARMA spec needs |theta| < 1 in both regimes");
  require(sigma > 0.0, ErrorKind::invalid_spec, "TARMA spec needs sigma > 0");
  require(d >= 1, ErrorKind::invalid_spec, "TARMA spec needs delay d >= 1");
}

Vector draw_innovations(const NoiseSpec& noise, Index n, double sigma) {
  Vector e = Vector::Zero(n + 1);
  switch (noise.kind) {
    case NoiseKind::gaussian: {
      Rng rng(stream_seed(noise.seed, kInnovationStream));
      for (Index t = 1; t <= n; ++t) e(t) = sigma * rng.normal();
      break;
    }
    case NoiseKind::rademacher: {
      Rng rng(stream_seed(noise.seed, kInnovationStream));
      for (Index t = 1; t <= n; ++t) e(t) = sigma * rng.sign();
      break;
    }
    case NoiseKind::custom:
      require(static_cast<Index>(noise.values.size()) >= n,
              ErrorKind::invalid_argument,
              "custom noise sequence shorter than the requested path");
      for (Index t = 1; t <= n; ++t) e(t) = noise.values[t - 1];
      break;
  }
  return e;
}

namespace {

// Shared step so that equal regimes reproduce simulate_ima bit for bit.
inline double arma_step(double c, double a, double x, double e, double theta,
                        double e_prev) {
  return c + a * x + e - theta * e_prev;
}

Vector tarma_path(const TarmaSpec& spec, Index n, double x0, const Vector& e) {
  Vector x(n + 1);
  x(0) = x0;
  for (Index t = 1; t <= n; ++t) {
    const double lag = t - spec.d >= 0 ? x(t - spec.d) : x0;
    x(t) = lag <= spec.r
               ? arma_step(spec.phi_1_0, spec.phi_1_1, x(t - 1), e(t),
                           spec.theta_lower, e(t - 1))
               : arma_step(spec.phi_2_0, spec.phi_2_1, x(t - 1), e(t),
                           spec.theta_upper, e(t - 1));
  }
  return x;
}

}  // namespace

TimeSeries simulate_tarma(const TarmaSpec& spec, Index n, double x0,
                          const NoiseSpec& noise) {
  spec.validate();
  require(n >= 1, ErrorKind::invalid_argument, "simulate_tarma needs n >= 1");
  require(std::isfinite(x0), ErrorKind::invalid_spec, "x0 must be finite");
  return TimeSeries(tarma_path(spec, n, x0, draw_innovations(noise, n, spec.sigma)));
}

TimeSeries simulate_ima(double theta, double phi0, double sigma, Index n,
                        double x0, const NoiseSpec& noise) {
  require(std::abs(theta) < 1.0, ErrorKind::invalid_spec,
          "simulate_ima needs |theta| < 1");
  require(std::isfinite(phi0) && std::isfinite(x0), ErrorKind::invalid_spec,
          "simulate_ima needs finite phi0 and x0");
  require(sigma > 0.0, ErrorKind::invalid_spec, "simulate_ima needs sigma > 0");
  require(n >= 1, ErrorKind::invalid_argument, "simulate_ima needs n >= 1");
  const Vector e = draw_innovations(noise, n, sigma);
  Vector x(n + 1);
  x(0) = x0;
  for (Index t = 1; t <= n; ++t)
    x(t) = arma_step(phi0, 1.0, x(t - 1), e(t), theta, e(t - 1));
  return TimeSeries(std::move(x));
}

const char* to_string(RegimeClass c) {
  switch (c) {
    case RegimeClass::ergodic: return "ergodic";
    case RegimeClass::null_recurrent: return "null-recurrent";
    case RegimeClass::transient: return "transient";
  }
  return "unknown";
}

RegimeClass classify_regime(const TarmaSpec& spec) {
  spec.validate();
  require(spec.phi_2_1 == 1.0, ErrorKind::unsupported_spec,
          "classification needs phi_2_1 = 1");
  require(spec.common_theta(), ErrorKind::unsupported_spec,
          "classification needs a common theta");
  const double a = spec.phi_1_0, b = spec.phi_1_1, c = spec.phi_2_0;
  if (c < 0.0 && (b < 1.0 || (b == 1.0 && a > 0.0))) return RegimeClass::ergodic;
  if (b == 1.0 && c == 0.0 && a >= 0.0) return RegimeClass::null_recurrent;
  if (b == 1.0 && c < 0.0 && a == 0.0) return RegimeClass::null_recurrent;
  if (b < 1.0 && c == 0.0) return RegimeClass::null_recurrent;
  return RegimeClass::transient;
}

DgpId DgpId::parse(const std::string& name, double tau, double theta,
                   double snr) {
  std::string up;
  for (char ch : name) up.push_back(static_cast<char>(std::toupper(static_cast<unsigned char>(ch))));
  DgpId id;
  id.tau = tau;
  id.theta = theta;
  id.snr = snr;
  if (up == "EQ28") {
    id.kind = DgpKind::eq28;
  } else if (up == "TARMA_IMA") {
    id.kind = DgpKind::tarma_ima;
  } else if (up.size() >= 2 && up[0] == 'M') {
    int k = 0;
    try {
      std::size_t used = 0;
      k = std::stoi(up.substr(1), &used);
      if (used != up.size() - 1) k = 0;
    } catch (const std::exception&) {
      k = 0;
    }
    require(k >= 1 && k <= 11, ErrorKind::invalid_spec, "unknown DGP '" + name + "'");
    id.kind = static_cast<DgpKind>(static_cast<int>(DgpKind::m1) + k - 1);
  } else {
    fail(ErrorKind::invalid_spec, "unknown DGP '" + name + "'");
  }
  require(snr > 0.0, ErrorKind::invalid_spec, "snr must be positive");
  return id;
}

std::string DgpId::label() const {
  std::string s;
  switch (kind) {
    case DgpKind::eq28:
      s = "EQ28(tau=" + format_double(tau) + ",theta=" + format_double(theta) + ")";
      break;
    case DgpKind::tarma_ima:
      s = "TARMA_IMA(tau=" + format_double(tau) + ",theta=" + format_double(theta) + ")";
      break;
    default:
      s = "M" + std::to_string(static_cast<int>(kind) - static_cast<int>(DgpKind::m1) + 1);
  }
  if (std::isfinite(snr)) s += ",snr=" + format_double(snr);
  return s;
}

TarmaSpec eq28_spec(double tau, double theta) {
  return TarmaSpec::common(0.0, tau * 0.7 + (1.0 - tau) * 1.0, tau * -0.02,
                           tau * 0.99 + (1.0 - tau) * 1.0, theta);
}

TarmaSpec tarma_ima_spec(double tau, double theta) {
  return TarmaSpec::common(tau * -0.02, 1.0 - 0.3 * tau, 0.0, 1.0, theta);
}

TarmaSpec tar_spec(DgpKind kind) {
  switch (kind) {
    case DgpKind::m8: return TarmaSpec::common(0.0, 0.6, 0.0, 0.35, 0.0);
    case DgpKind::m9: return TarmaSpec::common(0.0, 0.6, 0.0, -0.35, 0.0);
    case DgpKind::m10: return TarmaSpec::common(0.0, -0.6, 0.0, -0.35, 0.0);
    case DgpKind::m11: return TarmaSpec::common(0.5, -2.0, -0.5, 1.0, 0.0);
    default: fail(ErrorKind::invalid_spec, "not a TAR(1) DGP");
  }
}

namespace {

// Integrates Delta X_t = rho Delta X_{t-1} - ma u_{t-1} + u_t from X_0 = 0.
Vector integrate(const Vector& u, double rho, double ma) {
  const Index n = u.size() - 1;
  Vector x(n + 1);
  x(0) = 0.0;
  double dx = 0.0;
  for (Index t = 1; t <= n; ++t) {
    dx = rho * dx + u(t) - ma * u(t - 1);
    x(t) = x(t - 1) + dx;
  }
  return x;
}

// GARCH(1,1) shocks u_t = sqrt(h_t) e_t, h_t = 0.05 + 0.30 u_{t-1}^2 +
// 0.65 h_{t-1}, h_0 = 1 (unconditional variance), u_0 = 0.
Vector garch_shocks(const Vector& e) {
  Vector u = Vector::Zero(e.size());
  double h = 1.0;
  for (Index t = 1; t < e.size(); ++t) {
    h = 0.05 + 0.30 * u(t - 1) * u(t - 1) + 0.65 * h;
    u(t) = std::sqrt(h) * e(t);
  }
  return u;
}

}  // namespace

TimeSeries simulate_dgp(const DgpId& dgp, Index n, const NoiseSpec& noise) {
  require(n >= 50, ErrorKind::invalid_argument, "simulate_dgp needs n >= 50");
  require(dgp.snr > 0.0, ErrorKind::invalid_spec, "snr must be positive");
  Vector x;
  switch (dgp.kind) {
    case DgpKind::eq28:
      x = simulate_tarma(eq28_spec(dgp.tau, dgp.theta), n, 0.0, noise).values();
      break;
    case DgpKind::tarma_ima:
      x = simulate_tarma(tarma_ima_spec(dgp.tau, dgp.theta), n, 0.0, noise).values();
      break;
    case DgpKind::m1: x = simulate_ima(-0.9, 0.0, 1.0, n, 0.0, noise).values(); break;
    case DgpKind::m2: x = simulate_ima(-0.5, 0.0, 1.0, n, 0.0, noise).values(); break;
    case DgpKind::m3: x = simulate_ima(0.5, 0.0, 1.0, n, 0.0, noise).values(); break;
    case DgpKind::m4: x = simulate_ima(0.9, 0.0, 1.0, n, 0.0, noise).values(); break;
    case DgpKind::m5: {
      Vector e = draw_innovations(noise, n, 1.0);
      for (Index t = n / 2 + 1; t <= n; ++t) e(t) *= 1.5;
      x = integrate(e, -0.6, 0.0);
      break;
    }
    case DgpKind::m6:
      x = integrate(garch_shocks(draw_innovations(noise, n, 1.0)), 0.0, 0.6);
      break;
    case DgpKind::m7:
      x = integrate(garch_shocks(draw_innovations(noise, n, 1.0)), 0.3, 0.0);
      break;
    case DgpKind::m8:
    case DgpKind::m9:
    case DgpKind::m10:
    case DgpKind::m11: {
      const Vector full =
          simulate_tarma(tar_spec(dgp.kind), n + kStationaryBurnIn, 0.0, noise).values();
      x = full.tail(n + 1);
      break;
    }
  }
  TimeSeries series(std::move(x));
  if (!std::isfinite(dgp.snr)) return series;
  return add_measurement_noise(series, dgp.snr, noise.seed);
}

TimeSeries add_measurement_noise(const TimeSeries& x, double snr,
                                 std::uint64_t seed) {
  require(snr > 0.0, ErrorKind::invalid_spec, "snr must be positive");
  if (std::isinf(snr)) return x;
  const Vector& v = x.values();
  const double var = sample_variance(std::span<const double>(v.data(), v.size()));
  const double sd = std::sqrt(var / snr);
  Rng rng(stream_seed(seed, kMeasurementStream));
  Vector y(v.size());
  for (Index t = 0; t < v.size(); ++t) y(t) = v(t) + sd * rng.normal();
  if (x.labels()) return TimeSeries(std::move(y), *x.labels());
  return TimeSeries(std::move(y));
}

}  // namespace tarma
