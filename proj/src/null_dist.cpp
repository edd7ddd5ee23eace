#include "tarma/null_dist.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

#include "format.hpp"
#include "tarma/model_sim.hpp"
#include "tarma/parallel.hpp"
#include "tarma/rng.hpp"
#include "tarma/stats.hpp"

namespace tarma {

namespace {

constexpr double kKeyTol = 1e-9;
constexpr int kMaxRedraws = 1000;
constexpr std::uint64_t kBrownianStream = 0xb0b;

bool same(double a, double b) { return std::abs(a - b) < kKeyTol; }

std::uint64_t entry_key(double theta, Index n) {
  return mix64(std::bit_cast<std::uint64_t>(theta + 0.0)) ^
         mix64(static_cast<std::uint64_t>(n) + 0x51ed);
}

std::string key_text(double theta, Index n, double pi) {
  return "(theta=" + format_double(theta) +
         ", n=" + (n == kAsymptotic ? std::string("asym") : std::to_string(n)) +
         ", pi=" + format_double(pi) + ")";
}

}  // namespace

const NullEntry* NullTable::find(double theta, Index n, double pi) const {
  for (const auto& e : entries)
    if (same(e.theta, theta) && e.n == n && same(e.pi, pi)) return &e;
  return nullptr;
}

NullTable build_null_table(const NullTableConfig& config) {
  require(!config.thetas.empty() && !config.ns.empty() && !config.pis.empty(),
          ErrorKind::invalid_argument, "null table needs theta, n and pi values");
  require(config.reps >= 1, ErrorKind::invalid_argument, "reps must be positive");
  for (double p : config.pis)
    require(p > 0.0 && p < 0.5, ErrorKind::invalid_argument,
            "pi must satisfy 0 < pi < 0.5");
  for (double l : config.levels)
    require(l > 0.0 && l < 1.0, ErrorKind::invalid_argument,
            "quantile levels must lie in (0, 1)");
  for (double th : config.thetas)
    require(std::abs(th) < 1.0, ErrorKind::invalid_spec, "|theta| must be < 1");
  std::vector<double> levels = config.levels;
  std::sort(levels.begin(), levels.end());
  levels.erase(std::unique(levels.begin(), levels.end()), levels.end());

  NullTable table;
  table.reps = config.reps;
  table.path_len = config.path_len;
  table.seed = config.seed;
  table.created = config.created;

  for (double theta : config.thetas) {
    for (Index n : config.ns) {
      const Index len = n == kAsymptotic ? config.path_len : n;
      require(len >= 50, ErrorKind::invalid_argument,
              "null paths need at least 50 steps");
      const std::uint64_t key = entry_key(theta, n);
      std::vector<std::vector<double>> stats(
          config.pis.size(), std::vector<double>(static_cast<std::size_t>(config.reps)));
      parallel_for(config.reps, config.threads, [&](Index i) {
        for (int attempt = 0; attempt < kMaxRedraws; ++attempt) {
          const auto noise = NoiseSpec::gaussian(
              stream_seed(config.seed, key, static_cast<std::uint64_t>(i),
                          static_cast<std::uint64_t>(attempt)));
          const TimeSeries x = simulate_ima(theta, 0.0, 1.0, len, 0.0, noise);
          std::vector<double> sups;
          try {
            sups = sup_lm_bands(x, config.pis, config.fix_phi0);
          } catch (const Error& err) {
            if (err.kind() == ErrorKind::degenerate_input) continue;
            throw;
          }
          if (std::any_of(sups.begin(), sups.end(),
                          [](double v) { return std::isnan(v); }))
            continue;
          for (std::size_t k = 0; k < sups.size(); ++k)
            stats[k][static_cast<std::size_t>(i)] = sups[k];
          return;
        }
        fail(ErrorKind::untestable_series, "null replicate could not be tested");
      });
      for (std::size_t k = 0; k < config.pis.size(); ++k) {
        auto& s = stats[k];
        std::sort(s.begin(), s.end());
        NullEntry e;
        e.theta = theta;
        e.n = n;
        e.pi = config.pis[k];
        e.levels = levels;
        for (double l : levels) e.quantiles.push_back(quantile_sorted(s, l));
        if (config.keep_samples) e.samples = std::move(s);
        table.entries.push_back(std::move(e));
      }
    }
  }
  return table;
}

double table_theta(double theta_hat) {
  if (std::abs(theta_hat) <= 0.3) return 0.0;
  return std::copysign(0.9, theta_hat);
}

double entry_pvalue(const NullEntry& entry, double stat) {
  if (!entry.samples.empty()) {
    const auto it =
        std::lower_bound(entry.samples.begin(), entry.samples.end(), stat);
    const double above = static_cast<double>(entry.samples.end() - it);
    return (1.0 + above) / (static_cast<double>(entry.samples.size()) + 1.0);
  }
  require(!entry.levels.empty(), ErrorKind::invariant_violation,
          "null entry without quantiles");
  if (stat <= 0.0) return 1.0;
  // Piecewise-linear CDF through (0, 0) and the stored (quantile, level)
  // knots; beyond the last knot the tail probability is reported as its bound.
  double q_prev = 0.0, l_prev = 0.0;
  for (std::size_t i = 0; i < entry.levels.size(); ++i) {
    const double q = entry.quantiles[i], l = entry.levels[i];
    if (stat <= q) {
      const double cdf = l_prev + (l - l_prev) * (stat - q_prev) / (q - q_prev);
      return 1.0 - cdf;
    }
    q_prev = q;
    l_prev = l;
  }
  return 1.0 - entry.levels.back();
}

double pvalue_from_table(SupLmResult& result, const NullTable& table,
                         double theta_hat, Index n, TableRule rule) {
  const double pi = result.grid.a_pct;
  require(same(result.grid.b_pct, 1.0 - pi), ErrorKind::missing_table,
          "null tables cover symmetric bands [pi, 1 - pi] only");
  const double theta = table_theta(theta_hat);
  const NullEntry* asym = nullptr;
  const NullEntry* nearest = nullptr;
  for (const auto& e : table.entries) {
    if (!same(e.theta, theta) || !same(e.pi, pi)) continue;
    if (e.n == kAsymptotic) {
      asym = &e;
    } else if (!nearest || std::abs(e.n - n) < std::abs(nearest->n - n) ||
               (std::abs(e.n - n) == std::abs(nearest->n - n) && e.n < nearest->n)) {
      nearest = &e;
    }
  }
  const NullEntry* chosen = nullptr;
  if (rule == TableRule::standard && theta == 0.0 && asym) chosen = asym;
  if (!chosen) chosen = nearest ? nearest : asym;
  require(chosen != nullptr, ErrorKind::missing_table,
          "no null table entry for " + key_text(theta, n, pi));
  const double p = entry_pvalue(*chosen, result.t_sup);
  result.pvalue = p;
  result.pvalue_source = chosen->n == kAsymptotic
                             ? PValueSource::asymptotic_table
                             : PValueSource::finite_sample_table;
  result.theta_used_for_table = theta;
  return p;
}

void save_table(std::ostream& out, const NullTable& table) {
  out << "# reps: " << table.reps << '\n';
  out << "# path_len: " << table.path_len << '\n';
  out << "# seed: " << table.seed << '\n';
  out << "# created: " << (table.created.empty() ? "unspecified" : table.created)
      << '\n';
  out << "theta,n,pi,level,quantile\n";
  for (const auto& e : table.entries)
    for (std::size_t i = 0; i < e.levels.size(); ++i)
      out << format_double(e.theta) << ','
          << (e.n == kAsymptotic ? std::string("asym") : std::to_string(e.n))
          << ',' << format_double(e.pi) << ',' << format_double(e.levels[i])
          << ',' << format_double(e.quantiles[i]) << '\n';
}

void save_table(const std::filesystem::path& path, const NullTable& table) {
  std::ofstream out(path);
  require(out.good(), ErrorKind::invalid_argument, "cannot write " + path.string());
  save_table(out, table);
}

namespace {

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> parts;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, sep)) parts.push_back(item);
  if (!s.empty() && s.back() == sep) parts.emplace_back();
  return parts;
}

std::string strip(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
}

}  // namespace

NullTable load_table(std::istream& in) {
  NullTable table;
  std::string line;
  Index lineno = 0;
  bool header = false;
  auto where = [&] { return "null table line " + std::to_string(lineno) + ": "; };
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = strip(line);
    if (t.empty()) continue;
    if (t[0] == '#') {
      const auto colon = t.find(':');
      if (colon == std::string::npos) continue;
      const std::string key = strip(t.substr(1, colon - 1));
      const std::string val = strip(t.substr(colon + 1));
      try {
        if (key == "reps") table.reps = std::stoll(val);
        else if (key == "path_len") table.path_len = std::stoll(val);
        else if (key == "seed") table.seed = std::stoull(val);
        else if (key == "created") table.created = val == "unspecified" ? "" : val;
      } catch (const std::exception&) {
        fail(ErrorKind::parse, where() + "bad metadata value '" + val + "'");
      }
      continue;
    }
    if (!header) {
      require(t == "theta,n,pi,level,quantile", ErrorKind::parse,
              where() + "expected header 'theta,n,pi,level,quantile'");
      header = true;
      continue;
    }
    const auto f = split(t, ',');
    require(f.size() == 5, ErrorKind::parse, where() + "expected 5 fields");
    const auto theta = parse_double(strip(f[0]));
    const auto pi = parse_double(strip(f[2]));
    const auto level = parse_double(strip(f[3]));
    const auto q = parse_double(strip(f[4]));
    require(theta && pi && level && q, ErrorKind::parse, where() + "bad number");
    Index n = kAsymptotic;
    const std::string nt = strip(f[1]);
    if (nt != "asym") {
      const auto nv = parse_double(nt);
      require(nv && *nv == std::floor(*nv) && *nv > 0, ErrorKind::parse,
              where() + "n must be a positive integer or 'asym'");
      n = static_cast<Index>(*nv);
    }
    require(*pi > 0.0 && *pi < 0.5, ErrorKind::parse, where() + "pi outside (0, 0.5)");
    require(*level > 0.0 && *level < 1.0, ErrorKind::parse,
            where() + "level outside (0, 1)");
    NullEntry* e = nullptr;
    for (auto& cand : table.entries)
      if (same(cand.theta, *theta) && cand.n == n && same(cand.pi, *pi)) e = &cand;
    if (!e) {
      table.entries.push_back({*theta, n, *pi, {}, {}, {}});
      e = &table.entries.back();
    }
    if (!e->levels.empty()) {
      require(*level > e->levels.back(), ErrorKind::invariant_violation,
              where() + "levels must increase within " + key_text(*theta, n, *pi));
      require(*q > e->quantiles.back(), ErrorKind::invariant_violation,
              where() + "quantiles must increase within " + key_text(*theta, n, *pi));
    }
    e->levels.push_back(*level);
    e->quantiles.push_back(*q);
  }
  require(header, ErrorKind::parse, "null table has no header line");
  return table;
}

NullTable load_table(const std::filesystem::path& path) {
  std::ifstream in(path);
  require(in.good(), ErrorKind::missing_table, "cannot open null table " + path.string());
  return load_table(in);
}

NullTable merge_tables(const std::vector<NullTable>& tables) {
  NullTable out;
  if (tables.empty()) return out;
  out.reps = tables.front().reps;
  out.path_len = tables.front().path_len;
  out.seed = tables.front().seed;
  out.created = tables.front().created;
  for (const auto& t : tables)
    for (const auto& e : t.entries) {
      require(out.find(e.theta, e.n, e.pi) == nullptr, ErrorKind::invariant_violation,
              "duplicate null table entry " + key_text(e.theta, e.n, e.pi));
      out.entries.push_back(e);
    }
  return out;
}

namespace {

bool well_conditioned(const Eigen::Matrix2d& s, double d1, double d2) {
  if (!(d1 > 0.0) || !(d2 > 0.0)) return false;
  const double s1 = 1.0 / std::sqrt(d1), s2 = 1.0 / std::sqrt(d2);
  const double a = s(0, 0) * s1 * s1, c = s(1, 1) * s2 * s2;
  const double b = 0.5 * (s(0, 1) + s(1, 0)) * s1 * s2;
  const double lmax = 0.5 * (a + c) + std::hypot(0.5 * (a - c), b);
  const double lmin = lmax > 0.0 ? (a * c - b * b) / lmax : 0.0;
  return lmin > 0.0 && lmax / lmin <= kMaxSchurCondition;
}

}  // namespace

BrownianFunctionalSample evaluate_functional(const Vector& w,
                                             const FunctionalBand& band,
                                             Index tau_points, bool keep_grid) {
  const Index steps = w.size() - 1;
  require(steps >= 2, ErrorKind::invalid_argument, "functional needs a path");
  require(band.lower < band.upper, ErrorKind::invalid_argument,
          "degenerate tau band");
  const double dt = 1.0 / static_cast<double>(steps);

  std::vector<Index> order(static_cast<std::size_t>(steps));
  for (Index k = 0; k < steps; ++k) order[static_cast<std::size_t>(k)] = k;
  std::sort(order.begin(), order.end(), [&](Index i, Index j) { return w(i) < w(j); });

  // Prefix sums in sorted order of the left endpoints.
  const std::size_t m = order.size();
  std::vector<double> left(m), cp(m + 1, 0.0), cm(m + 1, 0.0), cq(m + 1, 0.0),
      ch(m + 1, 0.0), chw(m + 1, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    const Index k = order[i];
    const double wk = w(k), dw = w(k + 1) - w(k);
    left[i] = wk;
    cp[i + 1] = cp[i] + dt;
    cm[i + 1] = cm[i] + wk * dt;
    cq[i + 1] = cq[i] + wk * wk * dt;
    ch[i + 1] = ch[i] + dw;
    chw[i + 1] = chw[i] + wk * dw;
  }
  const double w1 = w(steps) - w(0);
  const double wbar = cm[m];

  double lo = band.lower, hi = band.upper;
  if (band.mode == BandMode::quantile) {
    require(band.lower > 0.0 && band.upper < 1.0, ErrorKind::invalid_argument,
            "quantile band must lie in (0, 1)");
    std::vector<double> all(w.data(), w.data() + w.size());
    std::sort(all.begin(), all.end());
    lo = quantile_sorted(all, band.lower);
    hi = quantile_sorted(all, band.upper);
  }
  std::vector<double> taus;
  if (tau_points == 0) {
    for (std::size_t i = 0; i < m; ++i)
      if (left[i] >= lo && left[i] <= hi && (taus.empty() || left[i] != taus.back()))
        taus.push_back(left[i]);
  } else {
    require(tau_points >= 2, ErrorKind::invalid_argument, "need two tau points");
    for (Index j = 0; j < tau_points; ++j)
      taus.push_back(lo + (hi - lo) * static_cast<double>(j) /
                              static_cast<double>(tau_points - 1));
  }

  BrownianFunctionalSample out;
  out.W1 = w1;
  bool any = false;
  Eigen::Matrix2d jac;
  jac << 1.0, 0.0, -wbar, 1.0;
  for (double tau : taus) {
    const std::size_t c = static_cast<std::size_t>(
        std::upper_bound(left.begin(), left.end(), tau) - left.begin());
    const double p = cp[c], mm = cm[c], q = cq[c], h2a = ch[c], h2b = chw[c];
    if (keep_grid) {
      out.tau_grid.push_back(tau);
      out.H.emplace_back(w1, h2a, h2b);
      Eigen::Matrix3d lam;
      lam << 1.0, p, mm, p, p, mm, mm, mm, q;
      out.Lambda.push_back(lam);
    }
    Eigen::Matrix2d schur;
    schur << p - p * p, mm - p * mm, mm - p * mm, q - mm * mm;
    Eigen::Matrix2d l22;
    l22 << p, mm, mm, q;
    const Eigen::Matrix2d cs = jac * schur * jac.transpose();
    const Eigen::Matrix2d cl = jac * l22 * jac.transpose();
    if (!well_conditioned(cs, cl(0, 0), cl(1, 1))) continue;
    const Eigen::Vector2d g(h2a - p * w1, h2b - mm * w1);
    const double f = g.dot(schur.ldlt().solve(g));
    if (!any || f > out.F_value) {
      out.F_value = f;
      out.tau_hat = tau;
      any = true;
    }
  }
  require(any, ErrorKind::untestable_series,
          "functional has no admissible tau in the band");
  return out;
}

BrownianFunctionalSample sample_brownian_functional(const FunctionalBand& band,
                                                    Index steps,
                                                    Index tau_points,
                                                    std::uint64_t seed,
                                                    bool keep_grid) {
  require(steps >= 1000, ErrorKind::invalid_argument,
          "Brownian functional needs at least 1000 steps");
  Rng rng(stream_seed(seed, kBrownianStream));
  const double sd = std::sqrt(1.0 / static_cast<double>(steps));
  Vector w(steps + 1);
  w(0) = 0.0;
  for (Index k = 0; k < steps; ++k) w(k + 1) = w(k) + sd * rng.normal();
  return evaluate_functional(w, band, tau_points, keep_grid);
}

BrownianFunctionalSample sample_brownian_functional(double r_lower,
                                                    double r_upper,
                                                    Index steps,
                                                    Index tau_points,
                                                    std::uint64_t seed) {
  require(r_lower < r_upper, ErrorKind::invalid_argument, "need r_L < r_U");
  return sample_brownian_functional(FunctionalBand::fixed(r_lower, r_upper),
                                    steps, tau_points, seed, true);
}

std::vector<double> brownian_functional_draws(const FunctionalBand& band,
                                              Index steps, Index tau_points,
                                              Index count, std::uint64_t seed,
                                              int threads) {
  std::vector<double> out(static_cast<std::size_t>(count));
  parallel_for(count, threads, [&](Index i) {
    for (std::uint64_t attempt = 0;; ++attempt) {
      try {
        out[static_cast<std::size_t>(i)] =
            sample_brownian_functional(
                band, steps, tau_points,
                stream_seed(seed, static_cast<std::uint64_t>(i), attempt))
                .F_value;
        return;
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::untestable_series || attempt >= kMaxRedraws) throw;
      }
    }
  });
  return out;
}

}  // namespace tarma
