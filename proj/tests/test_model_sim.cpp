#include <doctest.h>

#include <cmath>
#include <vector>

#include "oracles.hpp"
#include "tarma/model_sim.hpp"
#include "tarma/rng.hpp"
#include "tarma/stats.hpp"

using namespace tarma;

namespace {

std::vector<double> as_vec(const TimeSeries& s) {
  return {s.values().data(), s.values().data() + s.size()};
}

}  // namespace

TEST_SUITE("model_sim") {

TEST_CASE("identical regimes give a random walk") {
  TarmaSpec spec;  // both regimes (0, 1), theta 0
  spec.r = 0.3;
  const auto x = simulate_tarma(spec, 3, 0.0, NoiseSpec::custom({1, -1, 2}));
  CHECK(as_vec(x) == std::vector<double>{0, 1, 0, 2});
}

TEST_CASE("simulate_ima hand examples") {
  CHECK(as_vec(simulate_ima(0.0, 0.0, 1.0, 3, 0.0, NoiseSpec::custom({1, 2, 3}))) ==
        std::vector<double>{0, 1, 3, 6});
  CHECK(as_vec(simulate_ima(0.5, 0.0, 1.0, 2, 0.0, NoiseSpec::custom({1, 1}))) ==
        std::vector<double>{0, 1, 1.5});
  CHECK_THROWS_AS(simulate_ima(1.0, 0.0, 1.0, 2, 0.0, NoiseSpec::custom({1, 1})), Error);
}

TEST_CASE("two-regime recursion matches a step-by-step evaluation") {
  TarmaSpec spec = TarmaSpec::common(0.0, 0.7, 0.1, 1.0, 0.5, 0.0);
  const std::vector<double> e{0.3, -1.2, 0.8};
  const auto x = simulate_tarma(spec, 3, 0.0, NoiseSpec::custom(e));
  // X_0 = 0 <= 0: lower regime. X_1 = 0.7*0 + 0.3 - 0.5*0 = 0.3
  // X_1 > 0: upper. X_2 = 0.1 + 0.3 - 1.2 - 0.5*0.3 = -0.95
  // X_2 <= 0: lower. X_3 = 0.7*(-0.95) + 0.8 - 0.5*(-1.2) = 0.735
  CHECK(x[1] == doctest::Approx(0.3).epsilon(1e-15));
  CHECK(x[2] == doctest::Approx(-0.95).epsilon(1e-15));
  CHECK(x[3] == doctest::Approx(0.735).epsilon(1e-15));
}

TEST_CASE("regime-specific MA coefficients") {
  TarmaSpec spec;
  spec.theta_lower = 0.4;
  spec.theta_upper = -0.3;
  spec.r = 0.5;
  const auto x = simulate_tarma(spec, 2, 0.0, NoiseSpec::custom({1.0, 2.0}));
  // t=1 lower (X_0 = 0): X_1 = 1. t=2 upper (X_1 = 1 > 0.5): X_2 = 1 + 2 + 0.3.
  CHECK(x[2] == doctest::Approx(3.3));
}

TEST_CASE("EQ28 at tau = 0 collapses to the IMA simulator bitwise") {
  for (double theta : {-0.9, 0.0, 0.5}) {
    const auto noise = NoiseSpec::gaussian(42);
    const auto a = simulate_tarma(eq28_spec(0.0, theta), 400, 0.0, noise);
    const auto b = simulate_ima(theta, 0.0, 1.0, 400, 0.0, noise);
    CHECK(as_vec(a) == as_vec(b));
  }
}

TEST_CASE("EQ28 convex combination") {
  const TarmaSpec s = eq28_spec(0.5, 0.0);
  CHECK(s.phi_1_0 == 0.0);
  CHECK(s.phi_1_1 == doctest::Approx(0.85));
  CHECK(s.phi_2_0 == doctest::Approx(-0.01));
  CHECK(s.phi_2_1 == doctest::Approx(0.995));
}

TEST_CASE("MA(1) variance of increments") {
  const double theta = -0.9;
  double pooled = 0.0;
  const int reps = 200;
  for (int i = 0; i < reps; ++i) {
    const auto x = simulate_ima(theta, 0.0, 1.0, 5000, 0.0, NoiseSpec::gaussian(1000 + i));
    std::vector<double> dx(5000);
    for (int t = 0; t < 5000; ++t) dx[t] = x[t + 1] - x[t];
    pooled += sample_variance(dx) / reps;
  }
  CHECK(std::abs(pooled / (1.0 + theta * theta) - 1.0) < 0.05);
}

TEST_CASE("classification examples") {
  CHECK(classify_regime(TarmaSpec::common(0.0, 0.7, -0.02, 1.0, 0.0)) ==
        RegimeClass::ergodic);
  CHECK(classify_regime(TarmaSpec::common(0.0, 1.0, 0.0, 1.0, 0.0)) ==
        RegimeClass::null_recurrent);
  CHECK(classify_regime(TarmaSpec::common(-0.1, 1.0, -0.1, 1.0, 0.0)) ==
        RegimeClass::transient);
  try {
    classify_regime(TarmaSpec::common(0.0, 0.7, -0.02, 0.99, 0.0));
    FAIL("expected unsupported_spec");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::unsupported_spec);
  }
}

TEST_CASE("classification agrees with the condition list on a 50^3 grid") {
  int mismatches = 0;
  for (int i = 0; i < 50; ++i)
    for (int j = 0; j < 50; ++j)
      for (int k = 0; k < 50; ++k) {
        const double p10 = (i - 24) / 24.0;
        const double p11 = 1.0 + (j - 40) / 40.0;
        const double p20 = (k - 30) / 30.0;
        const auto got = classify_regime(TarmaSpec::common(p10, p11, p20, 1.0, 0.0));
        const auto want = oracle::classify(p10, p11, p20);
        mismatches += static_cast<int>(got) != static_cast<int>(want);
      }
  CHECK(mismatches == 0);
}

TEST_CASE("M1 without measurement error is the theta = -0.9 IMA path") {
  const auto noise = NoiseSpec::gaussian(7);
  const auto a = simulate_dgp(DgpId::parse("M1"), 300, noise);
  const auto b = simulate_ima(-0.9, 0.0, 1.0, 300, 0.0, noise);
  CHECK(as_vec(a) == as_vec(b));
}

TEST_CASE("measurement noise variance tracks var(X) / snr") {
  const Index n = 100000;
  const auto noise = NoiseSpec::gaussian(11);
  const auto x = simulate_dgp(DgpId::parse("M3"), n, noise);
  const auto y = simulate_dgp(DgpId::parse("M3", 0, 0, 5.0), n, noise);
  std::vector<double> eta(n + 1), xv = as_vec(x);
  for (Index t = 0; t <= n; ++t) eta[t] = y[t] - x[t];
  CHECK(std::abs(sample_variance(eta) / (sample_variance(xv) / 5.0) - 1.0) < 0.10);
}

TEST_CASE("DGPs are deterministic and finite") {
  for (const char* name : {"EQ28", "M1", "M2", "M3", "M4", "M5", "M6", "M7", "M8",
                           "M9", "M10", "M11", "TARMA_IMA"}) {
    const DgpId id = DgpId::parse(name, 0.5, 0.3);
    const auto a = simulate_dgp(id, 200, NoiseSpec::gaussian(3));
    const auto b = simulate_dgp(id, 200, NoiseSpec::gaussian(3));
    CHECK(as_vec(a) == as_vec(b));
    CHECK(a.values().allFinite());
  }
}

TEST_CASE("M5 scales the second-half innovations by 1.5") {
  const Index n = 20000;
  const auto x = simulate_dgp(DgpId::parse("M5"), n, NoiseSpec::gaussian(5));
  // Recover u_t from Delta X_t = -0.6 Delta X_{t-1} + u_t.
  std::vector<double> first, second;
  double prev = 0.0;
  for (Index t = 1; t <= n; ++t) {
    const double dx = x[t] - x[t - 1];
    (t <= n / 2 ? first : second).push_back(dx + 0.6 * prev);
    prev = dx;
  }
  CHECK(sample_variance(second) / sample_variance(first) ==
        doctest::Approx(2.25).epsilon(0.06));
}

TEST_CASE("labels and parsing") {
  CHECK(DgpId::parse("m3").kind == DgpKind::m3);
  CHECK(DgpId::parse("eq28", 0.5, 0.0).label() == "EQ28(tau=0.5,theta=0)");
  CHECK(DgpId::parse("M3", 0, 0, 5).label() == "M3,snr=5");
  CHECK_THROWS_AS(DgpId::parse("M12"), Error);
  CHECK_THROWS_AS(DgpId::parse("M1", 0, 0, -1.0), Error);
}

TEST_CASE("spec validation") {
  TarmaSpec s;
  s.theta_lower = 1.0;
  CHECK_THROWS_AS(s.validate(), Error);
  s = TarmaSpec{};
  s.sigma = 0.0;
  CHECK_THROWS_AS(s.validate(), Error);
  s = TarmaSpec{};
  s.phi_1_0 = std::nan("");
  CHECK_THROWS_AS(s.validate(), Error);
}

TEST_CASE("stream seeds are stable and distinct") {
  CHECK(stream_seed(1, 2, 3) == stream_seed(1, 2, 3));
  CHECK(stream_seed(1, 2, 3) != stream_seed(1, 3, 2));
  Rng a(5), b(5);
  for (int i = 0; i < 10; ++i) CHECK(a.normal() == b.normal());
}

}
