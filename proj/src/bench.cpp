#include "tarma/bench.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <istream>
#include <sstream>

#include "format.hpp"
#include "tarma/bootstrap.hpp"
#include "tarma/parallel.hpp"
#include "tarma/rng.hpp"
#include "tarma/stats.hpp"
#include "tarma/suplm.hpp"

namespace tarma {

const char* to_string(TestKind kind) {
  return kind == TestKind::asymptotic ? "sLM" : "sLMb";
}

namespace {

bool is_tarma_family(DgpKind k) {
  return k == DgpKind::eq28 || k == DgpKind::tarma_ima;
}

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string lower(std::string s) {
  for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

std::string strip(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(strip(item));
  return out;
}

double to_number(const std::string& key, const std::string& v) {
  const std::string l = lower(v);
  if (l == "inf" || l == "+inf" || l == "infinity")
    return std::numeric_limits<double>::infinity();
  const auto d = parse_double(v);
  require(d.has_value(), ErrorKind::parse, "plan key '" + key + "': bad number '" + v + "'");
  return *d;
}

std::vector<double> to_numbers(const std::string& key, const std::string& v) {
  std::vector<double> out;
  for (const auto& item : split_list(v)) out.push_back(to_number(key, item));
  require(!out.empty(), ErrorKind::parse, "plan key '" + key + "' is empty");
  return out;
}

bool to_bool(const std::string& key, const std::string& v) {
  const std::string l = lower(v);
  if (l == "true" || l == "yes" || l == "1") return true;
  if (l == "false" || l == "no" || l == "0") return false;
  fail(ErrorKind::parse, "plan key '" + key + "': expected true/false");
}

Index to_index(const std::string& key, const std::string& v) {
  const double d = to_number(key, v);
  require(d == std::floor(d) && d >= 0, ErrorKind::parse,
          "plan key '" + key + "': expected a non-negative integer");
  return static_cast<Index>(d);
}

}  // namespace

std::vector<DgpId> ExperimentPlan::cells() const {
  std::vector<DgpId> out;
  const std::vector<double> one{0.0};
  const auto& th = is_tarma_family(dgp) ? thetas : one;
  const auto& ta = is_tarma_family(dgp) ? taus : one;
  for (double snr : snrs)
    for (double theta : th)
      for (double tau : ta) {
        DgpId id;
        id.kind = dgp;
        id.tau = tau;
        id.theta = theta;
        id.snr = snr;
        out.push_back(id);
      }
  return out;
}

void ExperimentPlan::validate() const {
  require(run_asymptotic || run_bootstrap, ErrorKind::invalid_spec,
          "plan requests no test");
  require(!run_asymptotic || reps >= 100, ErrorKind::invalid_spec,
          "plan needs reps >= 100");
  require(!run_bootstrap || boot_reps >= 100, ErrorKind::invalid_spec,
          "plan needs boot_reps >= 100");
  require(!run_bootstrap || bootstrap_B >= 99, ErrorKind::invalid_spec,
          "plan needs B >= 99");
  require(level > 0.0 && level < 1.0, ErrorKind::invalid_spec,
          "plan level must lie in (0, 1)");
  require(a_pct > 0.0 && b_pct < 1.0 && a_pct < b_pct, ErrorKind::invalid_spec,
          "plan band must satisfy 0 < a < b < 1");
  require(n >= 50, ErrorKind::invalid_spec, "plan needs n >= 50");
  for (double s : snrs) require(s > 0.0, ErrorKind::invalid_spec, "snr must be positive");
  for (double t : thetas)
    require(std::abs(t) < 1.0, ErrorKind::invalid_spec, "|theta| must be < 1");
}

ExperimentPlan parse_plan(std::istream& in) {
  ExperimentPlan plan;
  std::string line;
  Index lineno = 0;
  std::string dgp_name = "EQ28";
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    const std::string t = strip(hash == std::string::npos ? line : line.substr(0, hash));
    if (t.empty()) continue;
    const auto eq = t.find('=');
    require(eq != std::string::npos, ErrorKind::parse,
            "plan line " + std::to_string(lineno) + ": expected key = value");
    const std::string key = lower(strip(t.substr(0, eq)));
    const std::string val = strip(t.substr(eq + 1));
    if (key == "name") plan.name = val;
    else if (key == "dgp") dgp_name = val;
    else if (key == "tau") plan.taus = to_numbers(key, val);
    else if (key == "theta") plan.thetas = to_numbers(key, val);
    else if (key == "snr") plan.snrs = to_numbers(key, val);
    else if (key == "n") plan.n = to_index(key, val);
    else if (key == "reps") plan.reps = to_index(key, val);
    else if (key == "boot_reps") plan.boot_reps = to_index(key, val);
    else if (key == "b") plan.bootstrap_B = to_index(key, val);
    else if (key == "level") plan.level = to_number(key, val);
    else if (key == "seed") plan.seed = static_cast<std::uint64_t>(to_index(key, val));
    else if (key == "size_correction") plan.size_correction = to_bool(key, val);
    else if (key == "fix_phi0") plan.fix_phi0 = to_bool(key, val);
    else if (key == "table") plan.table = val;
    else if (key == "band") {
      const auto b = to_numbers(key, val);
      require(b.size() == 2, ErrorKind::parse, "plan key 'band' needs two values");
      plan.a_pct = b[0];
      plan.b_pct = b[1];
    } else if (key == "tests") {
      plan.run_asymptotic = plan.run_bootstrap = false;
      for (const auto& item : split_list(val)) {
        const std::string l = lower(item);
        if (l == "asymptotic" || l == "slm") plan.run_asymptotic = true;
        else if (l == "bootstrap" || l == "slmb") plan.run_bootstrap = true;
        else fail(ErrorKind::parse, "plan key 'tests': unknown test '" + item + "'");
      }
    } else {
      fail(ErrorKind::parse, "plan line " + std::to_string(lineno) +
                                 ": unknown key '" + key + "'");
    }
  }
  plan.dgp = DgpId::parse(dgp_name).kind;
  plan.validate();
  return plan;
}

ExperimentPlan load_plan(const std::filesystem::path& path) {
  std::ifstream in(path);
  require(in.good(), ErrorKind::parse, "cannot open plan " + path.string());
  return parse_plan(in);
}

const CellRecord* BenchReport::find(const std::string& dgp, TestKind test) const {
  for (const auto& c : cells)
    if (c.dgp == dgp && c.test == test) return &c;
  return nullptr;
}

CellSamples run_cell(const ExperimentPlan& plan, const DgpId& dgp,
                     TestKind test, const NullTable* table, int threads) {
  if (test == TestKind::asymptotic)
    require(table != nullptr, ErrorKind::missing_table,
            "asymptotic cells need a null table");
  const Index reps = test == TestKind::asymptotic ? plan.reps : plan.boot_reps;
  const std::uint64_t key = fnv1a(dgp.label() + "|n=" + std::to_string(plan.n));
  CellSamples out;
  out.dgp = dgp;
  out.test = test;
  const double nan = std::numeric_limits<double>::quiet_NaN();
  out.stats.assign(static_cast<std::size_t>(reps), nan);
  out.pvalues.assign(static_cast<std::size_t>(reps), nan);
  parallel_for(reps, threads, [&](Index i) {
    const std::uint64_t s = stream_seed(plan.seed, key, static_cast<std::uint64_t>(i));
    const TimeSeries x = simulate_dgp(dgp, plan.n, NoiseSpec::gaussian(s));
    const auto k = static_cast<std::size_t>(i);
    try {
      if (test == TestKind::asymptotic) {
        SupLmResult r = sup_lm(x, plan.a_pct, plan.b_pct, plan.fix_phi0);
        out.stats[k] = r.t_sup;
        out.pvalues[k] = pvalue_from_table(r, *table, r.fit.theta_hat, plan.n);
      } else {
        const BootstrapResult b =
            wild_bootstrap_pvalue(x, plan.a_pct, plan.b_pct, plan.bootstrap_B,
                                  stream_seed(s, 0xb007), plan.fix_phi0, 1);
        out.stats[k] = b.t_obs;
        out.pvalues[k] = b.pvalue;
      }
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::untestable_series &&
          e.kind() != ErrorKind::degenerate_input)
        throw;
    }
  });
  return out;
}

namespace {

CellRecord tally(const ExperimentPlan& plan, const CellSamples& s,
                 bool size_corrected, double cutoff) {
  CellRecord rec;
  rec.dgp = s.dgp.label();
  rec.tau = s.dgp.tau;
  rec.theta = s.dgp.theta;
  rec.snr = s.dgp.snr;
  rec.n = plan.n;
  rec.test = s.test;
  rec.size_corrected = size_corrected;
  rec.cutoff = cutoff;
  const Index reps = static_cast<Index>(s.stats.size());
  for (std::size_t i = 0; i < s.stats.size(); ++i) {
    if (std::isnan(s.stats[i])) {
      ++rec.untestable;
      continue;
    }
    bool reject;
    if (!size_corrected) reject = s.pvalues[i] <= plan.level;
    else if (s.test == TestKind::asymptotic) reject = s.stats[i] > cutoff;
    else reject = s.pvalues[i] <= cutoff;
    rec.rejections += reject;
  }
  require(rec.untestable * 100 < reps, ErrorKind::untestable_series,
          rec.dgp + ": " + std::to_string(rec.untestable) +
              " untestable replicates (1% or more)");
  rec.reps_effective = reps - rec.untestable;
  const double frac = static_cast<double>(rec.rejections) /
                      static_cast<double>(rec.reps_effective);
  rec.rejection_pct = 100.0 * frac;
  rec.mc_se = binomial_se_pct(frac, rec.reps_effective);
  return rec;
}

std::vector<double> finite(const std::vector<double>& v) {
  std::vector<double> out;
  for (double x : v)
    if (!std::isnan(x)) out.push_back(x);
  return out;
}

std::vector<TestKind> tests_of(const ExperimentPlan& plan) {
  std::vector<TestKind> t;
  if (plan.run_asymptotic) t.push_back(TestKind::asymptotic);
  if (plan.run_bootstrap) t.push_back(TestKind::bootstrap);
  return t;
}

}  // namespace

BenchReport run_experiment(const ExperimentPlan& plan, const NullTable* table,
                           int threads) {
  plan.validate();
  BenchReport rep;
  rep.name = plan.name;
  rep.seed = plan.seed;
  rep.n = plan.n;
  rep.level = plan.level;
  for (const auto& dgp : plan.cells())
    for (TestKind test : tests_of(plan))
      rep.cells.push_back(
          tally(plan, run_cell(plan, dgp, test, table, threads), false, plan.level));
  return rep;
}

BenchReport size_corrected_power(const ExperimentPlan& null_plan,
                                 const std::vector<ExperimentPlan>& alt_plans,
                                 const NullTable* table, int threads) {
  null_plan.validate();
  for (const auto& alt : alt_plans) {
    alt.validate();
    require(alt.n == null_plan.n && alt.a_pct == null_plan.a_pct &&
                alt.b_pct == null_plan.b_pct,
            ErrorKind::invalid_spec, "size correction needs matching n and band");
  }
  BenchReport rep;
  rep.name = null_plan.name;
  rep.seed = null_plan.seed;
  rep.n = null_plan.n;
  rep.level = null_plan.level;
  for (TestKind test : tests_of(null_plan)) {
    for (const auto& null_dgp : null_plan.cells()) {
      const CellSamples ns = run_cell(null_plan, null_dgp, test, table, threads);
      double cutoff;
      if (test == TestKind::asymptotic) {
        cutoff = quantile(finite(ns.stats), 1.0 - null_plan.level);
      } else {
        cutoff = quantile(finite(ns.pvalues), null_plan.level);
      }
      rep.cells.push_back(tally(null_plan, ns, true, cutoff));
      for (const auto& alt : alt_plans)
        for (const auto& dgp : alt.cells())
          rep.cells.push_back(
              tally(alt, run_cell(alt, dgp, test, table, threads), true, cutoff));
    }
  }
  return rep;
}

BenchReport run_size_corrected(const ExperimentPlan& plan,
                               const NullTable* table, int threads) {
  require(is_tarma_family(plan.dgp), ErrorKind::invalid_spec,
          "size correction needs a tau-indexed DGP family");
  BenchReport rep;
  rep.name = plan.name;
  rep.seed = plan.seed;
  rep.n = plan.n;
  rep.level = plan.level;
  for (double snr : plan.snrs)
    for (double theta : plan.thetas) {
      ExperimentPlan null_plan = plan;
      null_plan.taus = {0.0};
      null_plan.thetas = {theta};
      null_plan.snrs = {snr};
      ExperimentPlan alt = null_plan;
      alt.taus.clear();
      for (double tau : plan.taus)
        if (tau != 0.0) alt.taus.push_back(tau);
      std::vector<ExperimentPlan> alts;
      if (!alt.taus.empty()) alts.push_back(alt);
      const BenchReport part = size_corrected_power(null_plan, alts, table, threads);
      rep.cells.insert(rep.cells.end(), part.cells.begin(), part.cells.end());
    }
  // Group by DGP label then test, matching the table layout.
  std::stable_sort(rep.cells.begin(), rep.cells.end(),
                   [](const CellRecord& a, const CellRecord& b) {
                     if (a.theta != b.theta) return a.theta < b.theta;
                     if (a.tau != b.tau) return a.tau < b.tau;
                     return a.test < b.test;
                   });
  return rep;
}

namespace {

std::string csv_quote(const std::string& s) {
  if (s.find_first_of(",\"") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::vector<std::string> csv_fields(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

constexpr const char* kCsvHeader =
    "dgp,tau,theta,snr,n,test,size_corrected,rejections,reps_effective,"
    "untestable,rejection_pct,mc_se,cutoff";

}  // namespace

std::string emit_report(const BenchReport& report, ReportFormat format) {
  std::ostringstream out;
  if (format == ReportFormat::csv) {
    out << "# name: " << report.name << '\n';
    out << "# seed: " << report.seed << '\n';
    out << "# n: " << report.n << '\n';
    out << "# level: " << format_double(report.level) << '\n';
    out << kCsvHeader << '\n';
    for (const auto& c : report.cells)
      out << csv_quote(c.dgp) << ',' << format_double(c.tau) << ','
          << format_double(c.theta) << ',' << format_double(c.snr) << ',' << c.n
          << ',' << to_string(c.test) << ',' << (c.size_corrected ? 1 : 0) << ','
          << c.rejections << ',' << c.reps_effective << ',' << c.untestable << ','
          << format_double(c.rejection_pct) << ',' << format_double(c.mc_se) << ','
          << format_double(c.cutoff) << '\n';
    return out.str();
  }
  // Markdown: one row per DGP, one column per test.
  std::vector<std::string> rows;
  bool has[2] = {false, false};
  for (const auto& c : report.cells) {
    if (std::find(rows.begin(), rows.end(), c.dgp) == rows.end()) rows.push_back(c.dgp);
    has[static_cast<int>(c.test)] = true;
  }
  out << "**" << report.name << "** (n = " << report.n << ", level = "
      << format_double(report.level) << ", seed = " << report.seed << ")\n\n";
  out << "| DGP |";
  for (int t = 0; t < 2; ++t)
    if (has[t]) out << ' ' << to_string(static_cast<TestKind>(t)) << " |";
  out << "\n|---|";
  for (int t = 0; t < 2; ++t)
    if (has[t]) out << "---:|";
  out << '\n';
  for (const auto& row : rows) {
    out << "| " << row << " |";
    for (int t = 0; t < 2; ++t) {
      if (!has[t]) continue;
      const CellRecord* c = report.find(row, static_cast<TestKind>(t));
      if (c)
        out << ' ' << format_fixed(c->rejection_pct, 1) << " ("
            << format_fixed(c->mc_se, 1) << ") |";
      else
        out << " - |";
    }
    out << '\n';
  }
  return out.str();
}

std::vector<CellRecord> parse_report_csv(std::istream& in) {
  std::vector<CellRecord> out;
  std::string line;
  bool header = false;
  Index lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    if (!header) {
      require(line == kCsvHeader, ErrorKind::parse, "unexpected report header");
      header = true;
      continue;
    }
    const auto f = csv_fields(line);
    require(f.size() == 13, ErrorKind::parse,
            "report line " + std::to_string(lineno) + ": expected 13 fields");
    CellRecord c;
    c.dgp = f[0];
    c.tau = to_number("tau", f[1]);
    c.theta = to_number("theta", f[2]);
    c.snr = to_number("snr", f[3]);
    c.n = to_index("n", f[4]);
    require(f[5] == "sLM" || f[5] == "sLMb", ErrorKind::parse, "unknown test");
    c.test = f[5] == "sLM" ? TestKind::asymptotic : TestKind::bootstrap;
    c.size_corrected = f[6] == "1";
    c.rejections = to_index("rejections", f[7]);
    c.reps_effective = to_index("reps_effective", f[8]);
    c.untestable = to_index("untestable", f[9]);
    c.rejection_pct = to_number("rejection_pct", f[10]);
    c.mc_se = to_number("mc_se", f[11]);
    c.cutoff = to_number("cutoff", f[12]);
    out.push_back(c);
  }
  return out;
}

}  // namespace tarma
