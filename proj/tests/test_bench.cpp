#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <sstream>

#include "cli.hpp"
#include "tarma/bench.hpp"

using namespace tarma;

namespace {

ExperimentPlan small_plan() {
  std::istringstream in(
      "name = small\n"
      "dgp = EQ28\n"
      "tau = 0, 1.5  # two cells per theta\n"
      "theta = 0, 0.5\n"
      "n = 100\n"
      "reps = 200\n"
      "tests = sLM\n"
      "seed = 5\n");
  return parse_plan(in);
}

NullTable table() { return load_table(std::filesystem::path(cli::default_table_path())); }

}  // namespace

TEST_SUITE("bench") {

TEST_CASE("plan parsing") {
  const ExperimentPlan p = small_plan();
  CHECK(p.name == "small");
  CHECK(p.taus == std::vector<double>{0.0, 1.5});
  CHECK(p.thetas == std::vector<double>{0.0, 0.5});
  CHECK(p.n == 100);
  CHECK(p.run_asymptotic);
  CHECK_FALSE(p.run_bootstrap);
  const auto cells = p.cells();
  REQUIRE(cells.size() == 4);
  CHECK(cells[0].label() == "EQ28(tau=0,theta=0)");
  CHECK(cells[1].label() == "EQ28(tau=1.5,theta=0)");
  std::istringstream m("dgp = M3\ntau = 0, 1\nsnr = inf, 5\ntests = bootstrap\n");
  const ExperimentPlan q = parse_plan(m);
  CHECK(q.cells().size() == 2);
  CHECK(std::isinf(q.snrs[0]));
}

TEST_CASE("plan errors") {
  auto parse_kind = [](const std::string& s) {
    std::istringstream in(s);
    try {
      parse_plan(in);
    } catch (const Error& e) {
      return e.kind();
    }
    return ErrorKind::internal;
  };
  CHECK(parse_kind("colour = red\n") == ErrorKind::parse);
  CHECK(parse_kind("reps = 50\n") == ErrorKind::invalid_spec);
  CHECK(parse_kind("band = 0.3\n") == ErrorKind::parse);
  CHECK(parse_kind("level = 1.5\n") == ErrorKind::invalid_spec);
  CHECK(parse_kind("tests = both\n") == ErrorKind::parse);
  CHECK(parse_kind("n\n") == ErrorKind::parse);
}

TEST_CASE("shipped plans parse") {
  for (const char* name : {"table1_theta0", "table1_size", "table2_power", "table3_m1",
                           "table3_m2", "table3_m3", "table3_m4", "table4_m6"}) {
    CHECK_NOTHROW(load_plan(std::filesystem::path(TARMA_PLAN_DIR) / (std::string(name) + ".plan")));
  }
}

TEST_CASE("reports are deterministic, thread-independent and round-trip") {
  const ExperimentPlan p = small_plan();
  const NullTable t = table();
  const BenchReport a = run_experiment(p, &t, 1);
  const BenchReport b = run_experiment(p, &t, 3);
  const std::string csv = emit_report(a, ReportFormat::csv);
  CHECK(csv == emit_report(b, ReportFormat::csv));
  CHECK(emit_report(a, ReportFormat::markdown) == emit_report(b, ReportFormat::markdown));
  std::istringstream in(csv);
  const auto back = parse_report_csv(in);
  REQUIRE(back.size() == a.cells.size());
  for (std::size_t i = 0; i < back.size(); ++i) {
    const CellRecord& x = a.cells[i];
    const CellRecord& y = back[i];
    CHECK(x.dgp == y.dgp);
    CHECK(x.rejection_pct == y.rejection_pct);
    CHECK(x.mc_se == y.mc_se);
    CHECK(x.rejections == y.rejections);
    CHECK(x.reps_effective == y.reps_effective);
    CHECK(x.cutoff == y.cutoff);
    CHECK(x.test == y.test);
    CHECK(x.rejection_pct >= 0.0);
    CHECK(x.rejection_pct <= 100.0);
    const double f = x.rejection_pct / 100.0;
    CHECK(x.mc_se == doctest::Approx(100.0 * std::sqrt(f * (1 - f) / x.reps_effective)));
  }
  // Markdown: one "rate (se)" cell per record.
  const std::string md = emit_report(a, ReportFormat::markdown);
  std::size_t se_cells = 0;
  for (std::size_t pos = md.find(") |"); pos != std::string::npos; pos = md.find(") |", pos + 1))
    se_cells += md[md.rfind('(', pos) - 1] == ' ';
  CHECK(se_cells == a.cells.size());
  // Power exceeds size at tau = 1.5.
  CHECK(a.cells[1].rejection_pct > a.cells[0].rejection_pct);
}

TEST_CASE("asymptotic cells need a table") {
  const ExperimentPlan p = small_plan();
  try {
    run_experiment(p, nullptr);
    FAIL("expected missing_table");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::missing_table);
  }
}

TEST_CASE("size correction calibrates the null member to the level") {
  ExperimentPlan p = small_plan();
  p.size_correction = true;
  const NullTable t = table();
  const BenchReport r = run_size_corrected(p, &t);
  REQUIRE(r.cells.size() == 4);
  for (const auto& c : r.cells) {
    CHECK(c.size_corrected);
    if (c.tau == 0.0) CHECK(std::abs(c.rejection_pct - 5.0) <= 100.0 / 200.0);
    else CHECK(c.rejection_pct > 5.0);
  }
  ExperimentPlan other = p;
  other.n = 120;
  CHECK_THROWS_AS(size_corrected_power(p, {other}, &t), Error);
}

TEST_CASE("bootstrap cell") {
  std::istringstream in("dgp = M2\nn = 100\nboot_reps = 100\nB = 99\ntests = bootstrap\nseed = 3\n");
  const ExperimentPlan p = parse_plan(in);
  const BenchReport r = run_experiment(p, nullptr);
  REQUIRE(r.cells.size() == 1);
  CHECK(r.cells[0].test == TestKind::bootstrap);
  CHECK(r.cells[0].reps_effective + r.cells[0].untestable == 100);
  CHECK(r.cells[0].rejection_pct < 20.0);
}

}
