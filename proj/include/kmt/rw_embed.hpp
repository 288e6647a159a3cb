#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "kmt/kmt_embed.hpp"
#include "kmt/parallel.hpp"
#include "kmt/rng.hpp"
#include "kmt/stats.hpp"

namespace kmt::rw {

struct GaussianBridge {
  long n = 0;
  std::vector<double> v;  // V_0..V_n
};

GaussianBridge sample_bridge(long n, CounterRng& rng);
GaussianBridge sample_bridge(long n, std::uint64_t seed);

struct MidpointDraw {
  long s = 0;
  double v = 0.0;
  double remainder = 0.0;  // |s - kt/n - v|
};

// s ~ S_k[n,t] and v ~ N(0, k(n-k)/n) joined through one uniform.
MidpointDraw hypergeo_gauss_couple(long n, long t, long k, CounterRng& rng);

struct CoupledPaths {
  long n = 0;
  long t = 0;
  std::vector<long> s;    // S_0..S_n
  std::vector<double> v;  // V_0..V_n
  double t_star = 0.0;    // max_i |S_i - it/n - V_i|
  long nodes = 0;
  long pathwise_violations = 0;  // nodes where T > max(T', T'') + R
};

CoupledPaths recursive_couple(long n, long t, std::uint64_t seed, std::uint64_t rep = 0);

struct InductionConfig {
  double A = 4.2;
  double B = 4.0;
  double lambda0 = 0.25;
  double theta1 = 0.5;
  double M = 1.0;
  double gamma = 0.5;
  double alpha0 = 1.0;

  // Recompute B and lambda0 from M, gamma, theta1, alpha0 at their smallest admissible values.
  static InductionConfig from(double M, double gamma, double theta1, double alpha0, double A = 4.2);
  bool valid() const;
};

struct BridgeRow {
  long n = 0;
  long t = 0;
  double lambda = 0.0;
  double mgf = 0.0;        // empirical E[exp(lambda T*)]
  double log_mgf = 0.0;
  double rhs = 0.0;        // exp(A log n + B lambda^2 t^2 / n) with the configured A, B
  double mean_t_star = 0.0, median_t_star = 0.0;
  bool below_rhs = false;
  long pathwise_violations = 0;
};

struct FullRow {
  long n = 0;
  double mean_dev = 0.0, sd_dev = 0.0, median_dev = 0.0, q90_dev = 0.0;
  long pathwise_violations = 0;
};

struct RwConfig {
  std::vector<long> n_list{256, 1024, 4096};
  std::vector<long> t_list{0};
  std::vector<double> lambdas{0.1};
  long reps = 2000;
  std::uint64_t seed = 1;
  InductionConfig induction;
};

struct BridgeExperiment {
  RwConfig config;
  std::vector<BridgeRow> rows;
  std::vector<std::vector<double>> t_star;  // [(n,t) index][rep]
  double a_hat = 0.0, b_hat = 0.0;          // smallest constants passing every row
  stats::LinearFit fit;                     // log E[e^{lambda T*}] against log n at t = 0, first lambda
  bool median_monotone = false;
  long pathwise_violations = 0;
  bool pass = false;
};

struct FullExperiment {
  RwConfig config;
  std::vector<FullRow> rows;
  std::vector<std::vector<double>> max_dev;  // [n index][rep]
  stats::LinearFit fit;                      // mean max deviation against log n
  long pathwise_violations = 0;
  bool pass = false;
};

BridgeExperiment run_bridge_experiment(const RwConfig& config, Exec exec = Exec::Parallel);
FullExperiment run_full_experiment(const RwConfig& config, Exec exec = Exec::Parallel);

}  // namespace kmt::rw
