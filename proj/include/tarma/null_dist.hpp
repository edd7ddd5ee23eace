#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "tarma/common.hpp"
#include "tarma/suplm.hpp"

namespace tarma {

/// Sentinel series length marking an asymptotic (long random-walk) entry.
inline constexpr Index kAsymptotic = -1;

struct NullEntry {
  double theta = 0.0;
  Index n = kAsymptotic;
  double pi = 0.25;  // band [pi, 1 - pi]
  std::vector<double> levels;
  std::vector<double> quantiles;
  std::vector<double> samples;  // sorted sup statistics; empty unless retained
};

struct NullTable {
  std::vector<NullEntry> entries;
  Index reps = 0;
  Index path_len = 0;
  std::uint64_t seed = 0;
  std::string created;

  const NullEntry* find(double theta, Index n, double pi) const;
};

struct NullTableConfig {
  std::vector<double> thetas{0.0};
  std::vector<Index> ns{kAsymptotic};
  std::vector<double> pis{0.25};
  std::vector<double> levels{0.90, 0.95, 0.99, 0.999};
  Index reps = 50000;
  Index path_len = 5000;  // transitions simulated for asymptotic entries
  std::uint64_t seed = 1;
  int threads = 1;
  bool keep_samples = false;
  bool fix_phi0 = false;
  std::string created;
};

/// Simulates IMA(1,1) null paths for every (theta, n) and records empirical
/// quantiles of the sup statistic for each symmetric band. All pi values of
/// one (theta, n) pair share the same paths. Replicates that yield no
/// admissible threshold are redrawn.
NullTable build_null_table(const NullTableConfig& config);

/// Rule selecting which stored distribution serves a p-value.
enum class TableRule {
  /// |theta_hat| <= 0.3 uses the theta = 0 entry, preferring the asymptotic
  /// one; otherwise sign(theta_hat) * 0.9 at the nearest finite n.
  standard,
  /// Same theta choice, nearest finite n in both cases.
  nearest_n,
};

/// Theta whose table serves a fit with the given theta_hat.
double table_theta(double theta_hat);

/// Right-tail p-value of result.t_sup, filling result.pvalue,
/// pvalue_source and theta_used_for_table. Uses retained samples when
/// present, otherwise monotone interpolation of the stored quantiles.
double pvalue_from_table(SupLmResult& result, const NullTable& table,
                         double theta_hat, Index n,
                         TableRule rule = TableRule::standard);

/// P-value of a statistic against a single entry.
double entry_pvalue(const NullEntry& entry, double stat);

void save_table(std::ostream& out, const NullTable& table);
void save_table(const std::filesystem::path& path, const NullTable& table);
NullTable load_table(std::istream& in);
NullTable load_table(const std::filesystem::path& path);

/// Concatenates entries; metadata of the first table is kept.
NullTable merge_tables(const std::vector<NullTable>& tables);

/// Search band of the limiting functional: fixed tau endpoints, or the
/// [lower, 1 - lower]-style quantiles of the path itself.
enum class BandMode { fixed, quantile };

struct FunctionalBand {
  BandMode mode = BandMode::fixed;
  double lower = -1.0;
  double upper = 1.0;

  static FunctionalBand fixed(double r_lower, double r_upper) {
    return {BandMode::fixed, r_lower, r_upper};
  }
  static FunctionalBand quantile(double pi) {
    return {BandMode::quantile, pi, 1.0 - pi};
  }
};

struct BrownianFunctionalSample {
  std::vector<double> tau_grid;
  std::vector<Eigen::Vector3d> H;
  std::vector<Eigen::Matrix3d> Lambda;
  double F_value = 0.0;
  double tau_hat = 0.0;
  double W1 = 0.0;
};

/// F(W) for a discretized path W_0..W_steps on [0, 1]: H by left-endpoint
/// Ito sums, Lambda by Riemann sums, sup over tau of the Schur-complement
/// quadratic form. tau_points = 0 evaluates at every distinct path value in
/// the band; otherwise on an even grid. With keep_grid false only F_value,
/// tau_hat and W1 are filled.
BrownianFunctionalSample evaluate_functional(const Vector& w,
                                             const FunctionalBand& band,
                                             Index tau_points,
                                             bool keep_grid = false);

/// One standard Brownian path with `steps` increments and its functional.
BrownianFunctionalSample sample_brownian_functional(double r_lower,
                                                    double r_upper,
                                                    Index steps,
                                                    Index tau_points,
                                                    std::uint64_t seed);

BrownianFunctionalSample sample_brownian_functional(const FunctionalBand& band,
                                                    Index steps,
                                                    Index tau_points,
                                                    std::uint64_t seed,
                                                    bool keep_grid = false);

/// `count` independent draws of F, path i keyed by stream_seed(seed, i).
std::vector<double> brownian_functional_draws(const FunctionalBand& band,
                                              Index steps, Index tau_points,
                                              Index count, std::uint64_t seed,
                                              int threads = 1);

}  // namespace tarma
