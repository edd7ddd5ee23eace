#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "tarma/common.hpp"
#include "tarma/model_sim.hpp"
#include "tarma/null_dist.hpp"

namespace tarma {

enum class TestKind { asymptotic, bootstrap };

const char* to_string(TestKind kind);

/// One Monte-Carlo cell family. List-valued fields (tau, theta, snr) expand
/// into one cell per combination.
struct ExperimentPlan {
  std::string name = "experiment";
  DgpKind dgp = DgpKind::eq28;
  std::vector<double> taus{0.0};
  std::vector<double> thetas{0.0};
  std::vector<double> snrs{std::numeric_limits<double>::infinity()};
  Index n = 300;
  Index reps = 2000;       // asymptotic cells
  Index boot_reps = 500;   // bootstrap cells
  Index bootstrap_B = 500;
  bool run_asymptotic = true;
  bool run_bootstrap = false;
  double level = 0.05;
  double a_pct = 0.25;
  double b_pct = 0.75;
  std::uint64_t seed = 1;
  bool size_correction = false;  // tau = 0 members calibrate the others
  bool fix_phi0 = false;
  std::string table;  // null table path for asymptotic p-values

  /// Cells in plan order.
  std::vector<DgpId> cells() const;

  /// Throws invalid_spec when an invariant is violated.
  void validate() const;
};

/// Parses `key = value` lines; `#` starts a comment. Keys: name, dgp, tau,
/// theta, snr, n, reps, boot_reps, B, tests, level, band, seed,
/// size_correction, fix_phi0, table.
ExperimentPlan parse_plan(std::istream& in);
ExperimentPlan load_plan(const std::filesystem::path& path);

struct CellRecord {
  std::string dgp;  // label
  double tau = 0.0;
  double theta = 0.0;
  double snr = std::numeric_limits<double>::infinity();
  Index n = 0;
  TestKind test = TestKind::asymptotic;
  bool size_corrected = false;
  Index rejections = 0;
  Index reps_effective = 0;
  Index untestable = 0;
  double rejection_pct = 0.0;
  double mc_se = 0.0;
  double cutoff = 0.0;  // critical value or p-value cutoff actually applied
};

struct BenchReport {
  std::string name;
  std::uint64_t seed = 0;
  Index n = 0;
  double level = 0.05;
  std::vector<CellRecord> cells;

  const CellRecord* find(const std::string& dgp, TestKind test) const;
};

/// Per-replicate outcomes of one cell; a replicate that could not be tested
/// holds NaN.
struct CellSamples {
  DgpId dgp;
  TestKind test = TestKind::asymptotic;
  std::vector<double> stats;    // sup statistics
  std::vector<double> pvalues;  // table or bootstrap p-values
};

/// Simulates and tests every replicate of one cell. Replicate i of a cell
/// draws its path from stream_seed(seed, hash(label), i, test).
CellSamples run_cell(const ExperimentPlan& plan, const DgpId& dgp,
                     TestKind test, const NullTable* table, int threads);

/// Nominal-level rejection rates for every cell and requested test.
BenchReport run_experiment(const ExperimentPlan& plan, const NullTable* table,
                           int threads = 1);

/// Size-corrected rates: asymptotic cells reject when the statistic exceeds
/// the (1 - level) quantile of the null plan's statistics, bootstrap cells
/// when the p-value is at most the level quantile of the null plan's
/// p-values. Plans must agree on n and band.
BenchReport size_corrected_power(const ExperimentPlan& null_plan,
                                 const std::vector<ExperimentPlan>& alt_plans,
                                 const NullTable* table, int threads = 1);

/// Splits a size-correction plan into its tau = 0 member (per theta) and the
/// alternatives, runs size_corrected_power per theta and concatenates.
BenchReport run_size_corrected(const ExperimentPlan& plan,
                               const NullTable* table, int threads = 1);

enum class ReportFormat { csv, markdown };

std::string emit_report(const BenchReport& report, ReportFormat format);

/// Parses the CSV rendering back into cell records.
std::vector<CellRecord> parse_report_csv(std::istream& in);

}  // namespace tarma
