#pragma once

#include <cstdint>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "kmt/parallel.hpp"
#include "kmt/stats.hpp"

namespace kmt::ep {

// Lazily built CDFs of S_N for N = 0..max_n; safe to share between threads.
class WalkQuantileTable {
 public:
  explicit WalkQuantileTable(long max_n, long exact_limit = 1L << 15);
  ~WalkQuantileTable();

  long max_n() const { return max_n_; }
  // Quantile of S_N at u. For u > 1/2 the upper tail is searched with 1 - u, which is
  // exact in double, so both tails keep full relative precision.
  long quantile(long N, double u) const;
  const std::vector<double>& cdf(long N) const;  // P{S_N <= -N + 2i}

 private:
  long max_n_;
  long exact_limit_;
  std::unique_ptr<std::once_flag[]> once_;
  mutable std::vector<std::vector<double>> cdf_;
};

struct TreeOptions {
  std::size_t node_cap = std::size_t{1} << 23;
  long lemma_threshold = 1;  // node checks apply for N(I) at or above this
};

// Generations 0..depth; node (p, k) sits at index 2^p - 1 + k.
struct DyadicTree {
  long n = 0;
  int depth = 0;
  std::vector<long> count;
  std::vector<double> z;
  std::vector<long> nhat;
  long checked_nodes = 0;
  long lemma_violations = 0;

  static std::size_t index(int p, std::size_t k) { return (std::size_t{1} << p) - 1 + k; }
  std::size_t nodes_in(int p) const { return std::size_t{1} << p; }
  long left_count(std::size_t node) const { return (count[node] + nhat[node]) / 2; }
};

DyadicTree build_dyadic_tree(long n, int depth, std::uint64_t seed, const WalkQuantileTable& table,
                             const TreeOptions& options = {}, std::uint64_t rep = 0);
DyadicTree build_dyadic_tree(long n, int depth, std::uint64_t seed);

// Values on the grid k / 2^depth, k = 0..2^depth.
struct EpPaths {
  std::vector<double> t;
  std::vector<long> prefix;  // N[0, t]
  std::vector<double> g;     // sqrt(n) (N[0,t]/n - t)
  std::vector<double> w0;    // truncated Haar series of the bridge
};

EpPaths extract_paths(const DyadicTree& tree);

struct DeviationStats {
  long n = 0;
  int depth = 0;
  double d_n = 0.0;       // max over the grid of |N[0,t] - nt - sqrt(n) W0(t)|
  double delta_g = 0.0;   // oscillation of G_n over depth-level intervals
  double delta_w0 = 0.0;  // largest grid increment of W0 over depth-level intervals
  double chi2max = 0.0;   // max over t of sum_{p<=depth} Z(I_{p,t})^2
  long lemma_violations = 0;
};

DeviationStats deviation_stats(const DyadicTree& tree);

// "ceil-log2" (default), "floor-log2" or "fixed:K".
int depth_for(long n, const std::string& rule);

struct EpConfig {
  std::vector<long> n_list{256, 1024, 4096};
  long reps = 2000;
  std::uint64_t seed = 1;
  std::string depth_rule = "ceil-log2";
  TreeOptions tree;
};

struct ChiSquareTail {
  double x = 0.0;
  double empirical = 0.0;
  double bound = 0.0;  // 2 exp(-m - x)
  double se = 0.0;
  bool ok = false;
};

struct EpRow {
  long n = 0;
  int depth = 0;
  double mean_d = 0.0, sd_d = 0.0, q50_d = 0.0, q90_d = 0.0, q99_d = 0.0;
  double mean_delta_g = 0.0, mean_delta_w0 = 0.0, mean_chi2max = 0.0;
  std::vector<ChiSquareTail> tails;
  long lemma_violations = 0;
  long checked_nodes = 0;
};

struct EpExperiment {
  EpConfig config;
  std::vector<EpRow> rows;
  std::vector<std::vector<DeviationStats>> samples;  // [n index][rep]
  stats::LinearFit fit;                              // mean D_n against log n
  double max_d_over_log = 0.0;
  bool monotone = false;
  bool tails_ok = false;
  bool pass = false;
};

EpExperiment run_ep_experiment(const EpConfig& config, Exec exec = Exec::Parallel);

}  // namespace kmt::ep
