#include "cli.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <memory>
#include <optional>
#include <sstream>

#include "format.hpp"
#include "tarma/bench.hpp"
#include "tarma/bootstrap.hpp"
#include "tarma/local_power.hpp"
#include "tarma/model_sim.hpp"
#include "tarma/null_dist.hpp"
#include "tarma/series.hpp"
#include "tarma/suplm.hpp"
#include "tarma/tarma_fit.hpp"

namespace tarma::cli {

std::string default_table_path() { return TARMA_DEFAULT_TABLE; }

namespace {

namespace fs = std::filesystem;

int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::invalid_spec:
    case ErrorKind::unsupported_spec:
    case ErrorKind::invalid_argument:
    case ErrorKind::parse:
      return kConfig;
    case ErrorKind::too_short:
    case ErrorKind::degenerate_input:
    case ErrorKind::untestable_series:
    case ErrorKind::no_admissible_threshold:
      return kData;
    case ErrorKind::missing_table:
      return kMissingTable;
    case ErrorKind::invariant_violation:
    case ErrorKind::internal:
      return kInternal;
  }
  return kInternal;
}

// Writes to --out when given, otherwise to the command's stdout.
class Sink {
 public:
  Sink(const std::string& path, std::ostream& fallback) {
    if (path.empty() || path == "-") {
      stream_ = &fallback;
      return;
    }
    file_ = std::make_unique<std::ofstream>(path);
    require(file_->good(), ErrorKind::invalid_argument, "cannot write " + path);
    stream_ = file_.get();
  }
  std::ostream& operator*() { return *stream_; }

 private:
  std::unique_ptr<std::ofstream> file_;
  std::ostream* stream_ = nullptr;
};

void write_file(const std::string& path, const std::string& text) {
  std::ofstream f(path);
  require(f.good(), ErrorKind::invalid_argument, "cannot write " + path);
  f << text;
}

std::pair<double, double> parse_band(const std::vector<double>& band) {
  require(band.size() == 2, ErrorKind::parse, "--band expects two values a,b");
  require(band[0] > 0.0 && band[1] < 1.0 && band[0] < band[1],
          ErrorKind::invalid_argument, "--band must satisfy 0 < a < b < 1");
  return {band[0], band[1]};
}

NullTable load_table_or_fail(const std::string& path) {
  require(fs::exists(path), ErrorKind::missing_table,
          "null table not found: " + path);
  return load_table(fs::path(path));
}

// ---------------------------------------------------------------- test

struct TestArgs {
  std::string input;
  std::vector<double> band{0.25, 0.75};
  bool above = false;
  Index bootstrap = 0;
  std::string table;
  bool fix_phi0 = false;
  std::uint64_t seed = 1;
  int threads = 1;
  std::string curve_out;
  std::string out;
  std::string rule = "standard";
};

int cmd_test(const TestArgs& a, std::ostream& out) {
  const auto [lo, hi] = parse_band(a.band);
  require(a.rule == "standard" || a.rule == "nearest-n", ErrorKind::parse,
          "--rule must be standard or nearest-n");
  const TimeSeries x = read_series_csv(fs::path(a.input));
  SupLmResult res = a.above ? sup_lm_above(x, lo, hi, a.fix_phi0)
                            : sup_lm(x, lo, hi, a.fix_phi0);
  std::string provenance;
  if (a.bootstrap > 0) {
    const TimeSeries y = a.above ? x.negated() : x;
    const BootstrapResult b =
        wild_bootstrap_pvalue(y, lo, hi, a.bootstrap, a.seed, a.fix_phi0, a.threads);
    res.pvalue = b.pvalue;
    res.pvalue_source = PValueSource::bootstrap;
    provenance = "wild bootstrap, B = " + std::to_string(a.bootstrap) +
                 ", seed = " + std::to_string(a.seed) +
                 ", redraws = " + std::to_string(b.redraws);
  } else {
    const std::string path = a.table.empty() ? default_table_path() : a.table;
    const NullTable table = load_table_or_fail(path);
    const TableRule rule =
        a.rule == "standard" ? TableRule::standard : TableRule::nearest_n;
    pvalue_from_table(res, table, res.fit.theta_hat, x.steps(), rule);
    provenance = std::string(to_string(res.pvalue_source)) + " " + path +
                 "; table theta = " + format_double(res.theta_used_for_table) +
                 " (rule: |theta_hat| <= 0.3 uses theta = 0" +
                 (rule == TableRule::standard ? " with the asymptotic entry" : "") +
                 ", otherwise sign(theta_hat) * 0.9 at the nearest simulated n)";
  }

  Sink sink(a.out, out);
  std::ostream& o = *sink;
  o << "supLM test for an IMA(1,1) null against a TARMA(1,1) alternative\n";
  o << "regulation:       " << (a.above ? "from above (test on -X)" : "from below")
    << '\n';
  o << "observations:     " << x.size() << '\n';
  o << "band:             [" << format_double(lo) << ", " << format_double(hi)
    << "] -> [" << format_double(res.grid.lower) << ", "
    << format_double(res.grid.upper) << "]\n";
  o << "thresholds:       " << res.grid.grid_size << " evaluated, "
    << res.grid.excluded.size() << " excluded\n";
  o << "null fit:         theta_hat = " << format_fixed(res.fit.theta_hat, 4)
    << ", phi0_hat = " << format_fixed(res.fit.phi0_hat, 4)
    << ", sigma2_hat = " << format_double(res.fit.sigma2_hat)
    << (res.fit.fix_phi0 ? " (phi0 fixed at 0)" : "")
    << (res.fit.at_boundary ? " [theta at search bound]" : "") << '\n';
  o << "t_sup:            " << format_fixed(res.t_sup, 4) << '\n';
  o << "r_hat:            " << format_double(res.r_hat) << " (sample percentile "
    << format_fixed(100.0 * res.r_hat_pct, 1) << ")\n";
  o << "p-value:          " << format_fixed(*res.pvalue, 4) << '\n';
  o << "p-value source:   " << provenance << '\n';

  if (!a.curve_out.empty()) {
    std::ostringstream c;
    write_curve_csv(c, res);
    write_file(a.curve_out, c.str());
  }
  return kOk;
}

// ---------------------------------------------------------------- null-table

struct NullTableArgs {
  std::vector<double> thetas{0.0};
  std::vector<std::string> ns{"asym"};
  std::vector<double> pis{0.25};
  std::vector<double> levels{0.90, 0.95, 0.99, 0.999};
  Index reps = 50000;
  Index len = 5000;
  std::uint64_t seed = 1;
  int threads = 1;
  bool fix_phi0 = false;
  std::string created;
  std::string out;
};

int cmd_null_table(const NullTableArgs& a, std::ostream& out) {
  require(a.reps >= 1000, ErrorKind::invalid_argument,
          "a persisted null table needs --reps >= 1000");
  NullTableConfig cfg;
  cfg.thetas = a.thetas;
  cfg.ns.clear();
  for (const auto& s : a.ns) {
    if (s == "asym" || s == "inf") {
      cfg.ns.push_back(kAsymptotic);
      continue;
    }
    const auto v = parse_double(s);
    require(v && *v == std::floor(*v) && *v >= 10, ErrorKind::parse,
            "--n expects integers >= 10 or 'asym', got '" + s + "'");
    cfg.ns.push_back(static_cast<Index>(*v));
  }
  cfg.pis = a.pis;
  cfg.levels = a.levels;
  cfg.reps = a.reps;
  cfg.path_len = a.len;
  cfg.seed = a.seed;
  cfg.threads = a.threads;
  cfg.fix_phi0 = a.fix_phi0;
  cfg.created = a.created;
  const NullTable t = build_null_table(cfg);
  Sink sink(a.out, out);
  save_table(*sink, t);
  return kOk;
}

struct MergeArgs {
  std::vector<std::string> inputs;
  std::string out;
};

int cmd_merge(const MergeArgs& a, std::ostream& out) {
  std::vector<NullTable> tables;
  for (const auto& p : a.inputs) tables.push_back(load_table_or_fail(p));
  Sink sink(a.out, out);
  save_table(*sink, merge_tables(tables));
  return kOk;
}

// ---------------------------------------------------------------- bench

struct BenchArgs {
  std::string plan;
  std::string table;
  std::string format = "markdown";
  std::optional<std::uint64_t> seed;
  std::optional<Index> reps;
  std::optional<Index> boot_reps;
  std::optional<Index> B;
  int threads = 1;
  std::string out;
};

int cmd_bench(const BenchArgs& a, std::ostream& out) {
  require(a.format == "csv" || a.format == "markdown", ErrorKind::parse,
          "--format must be csv or markdown");
  ExperimentPlan plan = load_plan(fs::path(a.plan));
  if (a.seed) plan.seed = *a.seed;
  if (a.reps) plan.reps = *a.reps;
  if (a.boot_reps) plan.boot_reps = *a.boot_reps;
  if (a.B) plan.bootstrap_B = *a.B;
  plan.validate();

  std::optional<NullTable> table;
  if (plan.run_asymptotic) {
    std::string path = a.table;
    if (path.empty() && !plan.table.empty()) {
      fs::path p(plan.table);
      if (p.is_relative()) p = fs::path(a.plan).parent_path() / p;
      path = p.string();
    }
    if (path.empty()) path = default_table_path();
    table = load_table_or_fail(path);
  }
  const NullTable* tp = table ? &*table : nullptr;
  const BenchReport rep = plan.size_correction
                              ? run_size_corrected(plan, tp, a.threads)
                              : run_experiment(plan, tp, a.threads);
  Sink sink(a.out, out);
  *sink << emit_report(rep, a.format == "csv" ? ReportFormat::csv
                                              : ReportFormat::markdown);
  return kOk;
}

// ---------------------------------------------------------------- fit

struct FitArgs {
  std::string input;
  std::vector<double> band{0.01, 0.99};
  double step = 0.01;
  double min_frac = 0.01;
  bool common_theta = false;
  int aic_k = 0;
  int threads = 1;
  std::string out;
  std::string csv_out;
  std::string aic_out;
};

int cmd_fit(const FitArgs& a, std::ostream& out) {
  const auto [lo, hi] = parse_band(a.band);
  require(a.step > 0.0 && a.step < 1.0, ErrorKind::invalid_argument,
          "--step must lie in (0, 1)");
  const TimeSeries x = read_series_csv(fs::path(a.input));
  TarmaFitOptions opt;
  opt.a_pct = lo;
  opt.b_pct = hi;
  opt.grid_step = a.step;
  opt.min_regime_frac = a.min_frac;
  opt.common_theta = a.common_theta;
  opt.aic_k = a.aic_k;
  opt.threads = a.threads;
  const TarmaFit fit = fit_tarma11(x, opt);
  {
    Sink sink(a.out, out);
    write_fit_report(*sink, fit);
  }
  if (!a.csv_out.empty()) {
    std::ostringstream s;
    write_fit_csv(s, fit);
    write_file(a.csv_out, s.str());
  }
  if (!a.aic_out.empty()) {
    std::ostringstream s;
    write_aic_csv(s, fit);
    write_file(a.aic_out, s.str());
  }
  return kOk;
}

// ---------------------------------------------------------------- simulate

struct SimulateArgs {
  std::string dgp = "EQ28";
  double tau = 0.0;
  double theta = 0.0;
  double snr = std::numeric_limits<double>::infinity();
  Index n = 300;
  std::uint64_t seed = 1;
  std::string out;
};

int cmd_simulate(const SimulateArgs& a, std::ostream& out) {
  require(a.n >= 2, ErrorKind::invalid_argument, "--n must be at least 2");
  const DgpId id = DgpId::parse(a.dgp, a.tau, a.theta, a.snr);
  const TimeSeries x = simulate_dgp(id, a.n, NoiseSpec::gaussian(a.seed));
  Sink sink(a.out, out);
  write_series_csv(*sink, x);
  return kOk;
}

// ---------------------------------------------------------------- diffusion

struct DiffusionArgs {
  std::vector<double> hs{0.0, 1.0, 3.0, 6.0};
  Index steps = 5000;
  Index reps = 1000;
  double pi = 0.25;
  double level = 0.05;
  std::optional<double> critical;
  std::string table;
  Index tau_points = 0;
  std::uint64_t seed = 1;
  int threads = 1;
  std::string out;
  std::string path_out;
  double path_h = 3.0;
  double horizon = 1.0;
};

int cmd_diffusion(const DiffusionArgs& a, std::ostream& out) {
  if (!a.path_out.empty()) {
    const DiffusionSpec spec = symmetric_example(a.path_h, a.steps, a.horizon);
    const Vector w = simulate_threshold_diffusion(spec, a.seed);
    const double ds = spec.horizon / static_cast<double>(w.size() - 1);
    std::ostringstream s;
    s << "s,w\n";
    for (Index i = 0; i < w.size(); ++i)
      s << format_double(ds * static_cast<double>(i)) << ',' << format_double(w[i])
        << '\n';
    write_file(a.path_out, s.str());
  }
  std::vector<std::pair<double, DiffusionSpec>> family;
  for (double h : a.hs) family.emplace_back(h, symmetric_example(h, a.steps));
  LocalPowerConfig cfg;
  cfg.level = a.level;
  cfg.reps = a.reps;
  cfg.seed = a.seed;
  cfg.pi = a.pi;
  cfg.tau_points = a.tau_points;
  cfg.threads = a.threads;
  std::vector<PowerPoint> curve;
  if (a.critical) {
    curve = local_power_curve(family, *a.critical, cfg);
  } else {
    const NullTable table =
        load_table_or_fail(a.table.empty() ? default_table_path() : a.table);
    curve = local_power_curve(family, table, cfg);
  }
  Sink sink(a.out, out);
  write_power_csv(*sink, curve);
  return kOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out,
            std::ostream& err) {
  CLI::App app{"supLM test of an IMA(1,1) null against a TARMA(1,1) alternative"};
  app.name("tarma");
  app.require_subcommand(1);

  TestArgs ta;
  auto* test = app.add_subcommand("test", "Test a series for threshold mean reversion");
  test->add_option("input", ta.input, "CSV series (date,value or value)")->required();
  test->add_option("--band", ta.band, "Threshold percentile band a,b")->delimiter(',');
  test->add_flag("--above", ta.above, "Regulation from above (test on -X)");
  test->add_option("--bootstrap", ta.bootstrap, "Wild bootstrap with B resamples");
  test->add_option("--table", ta.table, "Null table CSV");
  test->add_option("--rule", ta.rule, "Table rule: standard or nearest-n");
  test->add_flag("--fix-phi0", ta.fix_phi0, "Fix the drift at zero");
  test->add_option("--seed", ta.seed, "Bootstrap seed");
  test->add_option("--threads", ta.threads, "Worker threads");
  test->add_option("--curve-out", ta.curve_out, "Write the T_n(r) curve as CSV");
  test->add_option("--out", ta.out, "Report path (default stdout)");

  NullTableArgs na;
  auto* null_table = app.add_subcommand("null-table", "Simulate null quantile tables");
  null_table->add_option("--theta", na.thetas, "MA parameters")->delimiter(',');
  null_table->add_option("--n", na.ns, "Series lengths, or 'asym'")->delimiter(',');
  null_table->add_option("--pi", na.pis, "Band parameters pi")->delimiter(',');
  null_table->add_option("--levels", na.levels, "Quantile levels")->delimiter(',');
  null_table->add_option("--reps", na.reps, "Replicates per (theta, n)");
  null_table->add_option("--len", na.len, "Path length of asymptotic entries");
  null_table->add_option("--seed", na.seed, "Seed");
  null_table->add_option("--threads", na.threads, "Worker threads");
  null_table->add_flag("--fix-phi0", na.fix_phi0, "Fix the drift at zero");
  null_table->add_option("--created", na.created, "Value of the created field");
  null_table->add_option("--out", na.out, "Output CSV (default stdout)");

  MergeArgs ma;
  auto* merge = app.add_subcommand("merge-tables", "Concatenate null tables");
  merge->add_option("inputs", ma.inputs, "Table CSVs")->required();
  merge->add_option("--out", ma.out, "Output CSV (default stdout)");

  BenchArgs ba;
  auto* bench = app.add_subcommand("bench", "Run a Monte-Carlo size/power plan");
  bench->add_option("--plan", ba.plan, "Plan file")->required();
  bench->add_option("--table", ba.table, "Null table CSV");
  bench->add_option("--format", ba.format, "csv or markdown");
  bench->add_option("--seed", ba.seed, "Override the plan seed");
  bench->add_option("--reps", ba.reps, "Override asymptotic replicates");
  bench->add_option("--boot-reps", ba.boot_reps, "Override bootstrap replicates");
  bench->add_option("--B", ba.B, "Override bootstrap resamples");
  bench->add_option("--threads", ba.threads, "Worker threads");
  bench->add_option("--out", ba.out, "Output path (default stdout)");

  FitArgs fa;
  auto* fit = app.add_subcommand("fit", "Fit a two-regime TARMA(1,1)");
  fit->add_option("input", fa.input, "CSV series")->required();
  fit->add_option("--band", fa.band, "Threshold percentile band a,b")->delimiter(',');
  fit->add_option("--step", fa.step, "Percentile grid step");
  fit->add_option("--min-frac", fa.min_frac, "Minimum regime fraction");
  fit->add_flag("--common-theta", fa.common_theta, "One MA parameter for both regimes");
  fit->add_option("--aic-k", fa.aic_k, "Parameter count in the AIC (0 = default)");
  fit->add_option("--threads", fa.threads, "Worker threads");
  fit->add_option("--out", fa.out, "Report path (default stdout)");
  fit->add_option("--csv-out", fa.csv_out, "Coefficient CSV");
  fit->add_option("--aic-out", fa.aic_out, "AIC profile CSV");

  SimulateArgs sa;
  auto* simulate = app.add_subcommand("simulate", "Simulate a series from a named DGP");
  simulate->add_option("--dgp", sa.dgp, "EQ28, M1..M11 or TARMA_IMA");
  simulate->add_option("--tau", sa.tau, "Alternative strength");
  simulate->add_option("--theta", sa.theta, "MA parameter");
  simulate->add_option("--snr", sa.snr, "Signal-to-noise ratio (inf = none)");
  simulate->add_option("--n", sa.n, "Number of transitions");
  simulate->add_option("--seed", sa.seed, "Seed");
  simulate->add_option("--out", sa.out, "Output CSV (default stdout)");

  DiffusionArgs da;
  auto* diffusion = app.add_subcommand(
      "diffusion", "Local power of the limiting functional under threshold diffusions");
  diffusion->add_option("--strength", da.hs, "Symmetric example strengths")->delimiter(',');
  diffusion->add_option("--steps", da.steps, "Euler steps per path");
  diffusion->add_option("--reps", da.reps, "Paths per strength");
  diffusion->add_option("--pi", da.pi, "Quantile band parameter");
  diffusion->add_option("--level", da.level, "Test level");
  diffusion->add_option("--critical", da.critical, "Explicit critical value");
  diffusion->add_option("--table", da.table, "Null table CSV");
  diffusion->add_option("--tau-points", da.tau_points, "Threshold grid (0 = all path values)");
  diffusion->add_option("--seed", da.seed, "Seed");
  diffusion->add_option("--threads", da.threads, "Worker threads");
  diffusion->add_option("--out", da.out, "Power CSV (default stdout)");
  diffusion->add_option("--path-out", da.path_out, "Also write one path as CSV");
  diffusion->add_option("--path-strength", da.path_h, "Strength of the written path");
  diffusion->add_option("--horizon", da.horizon, "Horizon of the written path");

  std::vector<const char*> argv;
  for (const auto& s : args) argv.push_back(s.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kConfig;
  }

  try {
    if (*test) return cmd_test(ta, out);
    if (*null_table) return cmd_null_table(na, out);
    if (*merge) return cmd_merge(ma, out);
    if (*bench) return cmd_bench(ba, out);
    if (*fit) return cmd_fit(fa, out);
    if (*simulate) return cmd_simulate(sa, out);
    if (*diffusion) return cmd_diffusion(da, out);
  } catch (const Error& e) {
    err << "error (" << to_string(e.kind()) << "): " << e.what() << '\n';
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kInternal;
  }
  return kConfig;
}

}  // namespace tarma::cli
