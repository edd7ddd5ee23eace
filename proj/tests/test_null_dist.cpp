#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <sstream>

#include "cli.hpp"
#include "tarma/null_dist.hpp"
#include "tarma/rng.hpp"
#include "tarma/stats.hpp"

using namespace tarma;

namespace {

const double kPublished[9][5] = {
    {0.01, 15.22, 17.12, 21.33, 26.73}, {0.05, 14.21, 16.13, 20.23, 25.22},
    {0.10, 13.54, 15.50, 19.61, 25.41}, {0.15, 12.98, 14.87, 19.02, 24.48},
    {0.20, 12.52, 14.54, 18.70, 24.22}, {0.25, 12.10, 14.02, 18.15, 23.91},
    {0.30, 11.63, 13.54, 17.67, 22.76}, {0.35, 11.16, 12.99, 17.08, 22.28},
    {0.40, 10.37, 12.29, 16.37, 21.85}};

SupLmResult fake_result(double t, double pi) {
  SupLmResult r;
  r.t_sup = t;
  r.grid.a_pct = pi;
  r.grid.b_pct = 1.0 - pi;
  return r;
}

NullTable shipped() { return load_table(std::filesystem::path(cli::default_table_path())); }

}  // namespace

TEST_SUITE("null_dist") {

TEST_CASE("theta rule") {
  CHECK(table_theta(0.45) == 0.9);
  CHECK(table_theta(-0.45) == -0.9);
  CHECK(table_theta(0.3) == 0.0);
  CHECK(table_theta(-0.1) == 0.0);
}

TEST_CASE("shipped table holds the published asymptotic rows") {
  const NullTable t = shipped();
  for (const auto& row : kPublished) {
    const NullEntry* e = t.find(0.0, kAsymptotic, row[0]);
    REQUIRE(e != nullptr);
    REQUIRE(e->quantiles.size() == 4);
    for (int k = 0; k < 4; ++k) CHECK(e->quantiles[k] == row[k + 1]);
  }
}

TEST_CASE("p-values from the asymptotic table") {
  const NullTable t = shipped();
  SupLmResult r = fake_result(14.02, 0.25);
  CHECK(pvalue_from_table(r, t, 0.0, 300) == doctest::Approx(0.05));
  CHECK(r.pvalue_source == PValueSource::asymptotic_table);
  SupLmResult z = fake_result(0.0, 0.25);
  CHECK(pvalue_from_table(z, t, 0.0, 300) >= 0.999);
  SupLmResult big = fake_result(1000.0, 0.25);
  CHECK(pvalue_from_table(big, t, 0.0, 300) == doctest::Approx(0.001));
}

TEST_CASE("theta rule picks the finite-sample table") {
  const NullTable t = shipped();
  SupLmResult r = fake_result(14.0, 0.25);
  pvalue_from_table(r, t, 0.45, 280);
  CHECK(r.theta_used_for_table == 0.9);
  CHECK(r.pvalue_source == PValueSource::finite_sample_table);
  SupLmResult s = fake_result(14.0, 0.25);
  pvalue_from_table(s, t, 0.1, 280, TableRule::nearest_n);
  CHECK(s.pvalue_source == PValueSource::finite_sample_table);
}

TEST_CASE("missing entries name their key") {
  NullTable t;
  SupLmResult r = fake_result(10.0, 0.25);
  try {
    pvalue_from_table(r, t, 0.0, 300);
    FAIL("expected missing_table");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::missing_table);
    CHECK(std::string(e.what()).find("0.25") != std::string::npos);
  }
  SupLmResult asym = fake_result(10.0, 0.2);
  asym.grid.b_pct = 0.9;
  CHECK_THROWS_AS(pvalue_from_table(asym, shipped(), 0.0, 300), Error);
}

TEST_CASE("retained samples give the add-one p-value") {
  NullEntry e;
  e.levels = {0.5};
  e.quantiles = {2.0};
  e.samples = {1, 2, 3, 4, 5, 6, 7, 8, 9};
  CHECK(entry_pvalue(e, 7.0) == doctest::Approx(4.0 / 10.0));
  CHECK(entry_pvalue(e, 100.0) == doctest::Approx(0.1));
}

TEST_CASE("save and load round trip") {
  NullTable t = shipped();
  std::ostringstream out;
  save_table(out, t);
  std::istringstream in(out.str());
  const NullTable u = load_table(in);
  REQUIRE(u.entries.size() == t.entries.size());
  for (std::size_t i = 0; i < t.entries.size(); ++i) {
    CHECK(u.entries[i].theta == t.entries[i].theta);
    CHECK(u.entries[i].n == t.entries[i].n);
    CHECK(u.entries[i].pi == t.entries[i].pi);
    CHECK(u.entries[i].levels == t.entries[i].levels);
    CHECK(u.entries[i].quantiles == t.entries[i].quantiles);
  }
  CHECK(u.reps == t.reps);
  CHECK(u.created == t.created);
}

TEST_CASE("malformed tables") {
  std::istringstream dec("theta,n,pi,level,quantile\n0,asym,0.25,0.9,12\n0,asym,0.25,0.95,11\n");
  try {
    load_table(dec);
    FAIL("expected invariant_violation");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::invariant_violation);
  }
  std::istringstream bad("theta,n,pi,level,quantile\n0,asym,0.25,0.9\n");
  try {
    load_table(bad);
    FAIL("expected parse error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::parse);
    CHECK(std::string(e.what()).find("line 2") != std::string::npos);
  }
}

TEST_CASE("quantiles fall as the band narrows") {
  const NullTable t = shipped();
  for (double theta : {0.0, -0.9, 0.9})
    for (Index n : {kAsymptotic, Index(100), Index(300), Index(500)}) {
      const NullEntry* prev = nullptr;
      for (const auto& row : kPublished) {
        const NullEntry* e = t.find(theta, n, row[0]);
        if (!e) continue;
        if (prev) {
          // Compare at the 90% level, present in every entry.
          auto at90 = [](const NullEntry* x) {
            const auto it = std::find(x->levels.begin(), x->levels.end(), 0.9);
            return x->quantiles[static_cast<std::size_t>(it - x->levels.begin())];
          };
          CHECK(at90(e) < at90(prev) + 0.25);
        }
        prev = e;
      }
    }
}

TEST_CASE("table construction is independent of the thread count") {
  NullTableConfig cfg;
  cfg.ns = {120};
  cfg.thetas = {0.0, 0.5};
  cfg.pis = {0.1, 0.25};
  cfg.reps = 300;
  cfg.seed = 9;
  cfg.threads = 1;
  const NullTable a = build_null_table(cfg);
  cfg.threads = 3;
  const NullTable b = build_null_table(cfg);
  REQUIRE(a.entries.size() == 4);
  for (std::size_t i = 0; i < 4; ++i) CHECK(a.entries[i].quantiles == b.entries[i].quantiles);
  cfg.pis = {0.5};
  CHECK_THROWS_AS(build_null_table(cfg), Error);
}

TEST_CASE("merging keeps entries and rejects duplicates") {
  NullTableConfig cfg;
  cfg.ns = {100};
  cfg.reps = 200;
  const NullTable a = build_null_table(cfg);
  cfg.ns = {200};
  const NullTable b = build_null_table(cfg);
  CHECK(merge_tables({a, b}).entries.size() == 2);
  CHECK_THROWS_AS(merge_tables({a, a}), Error);
}

TEST_CASE("functional pieces") {
  const auto s = sample_brownian_functional(-0.2, 10.0, 2000, 50, 5);
  Rng rng(stream_seed(5, 0));
  REQUIRE(!s.H.empty());
  for (std::size_t i = 0; i < s.H.size(); ++i) {
    CHECK(s.H[i](0) == s.W1);
    CHECK(s.Lambda[i](0, 0) == 1.0);
    CHECK((s.Lambda[i] - s.Lambda[i].transpose()).isZero());
    if (i > 0) CHECK(s.Lambda[i](1, 1) >= s.Lambda[i - 1](1, 1));
  }
  const Eigen::Matrix3d& last = s.Lambda.back();  // tau = 10: indicator always one
  CHECK(last(1, 1) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(last(1, 1) - last(1, 1) * last(1, 1) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(s.tau_hat < 10.0);
}

TEST_CASE("functional on a hand path") {
  Vector w(5);
  w << 0.0, 0.5, -0.5, 0.25, 1.0;
  const auto s = evaluate_functional(w, FunctionalBand::fixed(-1.0, 2.0), 0, true);
  CHECK(s.W1 == 1.0);
  // Distinct left endpoints -0.5, 0, 0.25, 0.5; the last is excluded (p = 1).
  REQUIRE(s.tau_grid.size() == 4);
  CHECK(s.Lambda[0](1, 1) == doctest::Approx(0.25));
  CHECK(s.H[0](1) == doctest::Approx(0.75));   // increment after W = -0.5
  CHECK(s.H[1](2) == doctest::Approx(-0.375)); // 0 * 0.5 + (-0.5) * 0.75
}

TEST_CASE("Brownian route agrees with the random-walk table") {
  const auto draws =
      brownian_functional_draws(FunctionalBand::quantile(0.25), 5000, 0, 20000, 2024, 1);
  CHECK(std::abs(quantile(draws, 0.90) - 12.10) < 0.6);
  CHECK(std::abs(quantile(draws, 0.95) - 14.02) < 0.6);
  CHECK(std::abs(quantile(draws, 0.99) - 18.15) < 1.2);
}

}
