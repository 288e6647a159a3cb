#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "kmt/exact_dist.hpp"
#include "kmt/parallel.hpp"
#include "kmt/rational.hpp"

namespace kmt::stein {

// T on the support of a zero-mean lattice law; T(x) = |x| off the support.
class SteinCoefficient {
 public:
  SteinCoefficient(Rational offset, std::vector<Rational> values);

  const Rational& offset() const { return offset_; }
  std::size_t size() const { return values_.size(); }
  const Rational& value(std::size_t i) const { return values_[i]; }
  const std::vector<Rational>& values() const { return values_; }
  Rational at(const Rational& x) const;

  bool operator==(const SteinCoefficient& o) const { return offset_ == o.offset_ && values_ == o.values_; }

 private:
  Rational offset_;
  std::vector<Rational> values_;
};

// T(i) = i + (2/alpha(i)) sum_{j>i} alpha(j) j
SteinCoefficient stein_from_pmf(const LatticePMF& pmf);

// Endpoint values, nonnegative rates and alpha(i)(T(i)-i) = alpha(i+1)(T(i+1)+(i+1)).
bool valid_pair(const SteinCoefficient& t, const LatticePMF& pmf);

SteinCoefficient stein_binomial(int n, const Rational& p);
SteinCoefficient stein_hypergeometric(int n, int k, int s);
SteinCoefficient stein_convolve(const SteinCoefficient& tx, const LatticePMF& px, const SteinCoefficient& ty,
                                const LatticePMF& py);
// Coefficient of 2X + R, R uniform on {-1,0,1} with weights 1/4,1/2,1/4.
SteinCoefficient stein_scale_perturb(const SteinCoefficient& tx, const LatticePMF& px);

// Product-grid chain moving both coordinates together whenever the rates allow.
// State (i,j) has linear index i * ny + j.
struct JointChainRates {
  std::size_t nx = 0, ny = 0;
  Rational x_offset, y_offset;
  std::vector<Rational> tx, ty;          // Stein values on each axis
  std::vector<Rational> x_mass, y_mass;  // stationary laws of the two chains
  std::vector<Rational> up_up, down_down, up_stay, down_stay, stay_up, stay_down;
  std::vector<Rational> A, B, Q;

  std::size_t index(std::size_t i, std::size_t j) const { return i * ny + j; }
  Rational x_atom(std::size_t i) const { return x_offset + static_cast<unsigned long>(i); }
  Rational y_atom(std::size_t j) const { return y_offset + static_cast<unsigned long>(j); }
};

JointChainRates build_joint_chain(const SteinCoefficient& tx, const LatticePMF& px, const SteinCoefficient& ty,
                                  const LatticePMF& py);

struct SolveOptions {
  std::size_t exact_limit = 0;  // also run the rational solver when the class is at most this large
};

struct StationaryCoupling {
  std::size_t nx = 0, ny = 0;
  Rational x_offset, y_offset;
  std::vector<double> gamma;  // dense, zero outside the recurrent class
  std::vector<char> in_class;
  std::size_t class_size = 0;
  std::size_t closed_classes = 0;
  double residual = 0.0;
  double marginal_error = 0.0;
  std::optional<std::vector<Rational>> exact_gamma;
  double exact_vs_float = 0.0;
  std::vector<double> q;  // Q per state
  double h_shift = 0.0;   // H = (i - j) + h_shift for state (i,j)

  double h(std::size_t s) const {
    return static_cast<double>(static_cast<long>(s / ny) - static_cast<long>(s % ny)) + h_shift;
  }
};

StationaryCoupling solve_stationary(const JointChainRates& rates, const SolveOptions& options = {});

struct FunctionalParams {
  double theta = 0.0;
  long a = 0;
  double delta = 0.5;
  double mu = 1.0;
};

struct FunctionalReport {
  FunctionalParams params;
  double p_tail = 0.0;     // P{|H| >= a+1}
  double tail_mid = 0.0;   // E[|H| 1{|H| >= a+1}] / (a+1)
  double tail_rhs = 0.0;   // E[(Q-a)_+] / (a+1)
  double mgf = 0.0;        // E[exp(theta |H|)]
  double mgf_rhs = 0.0;    // 1 + E[Q (exp(theta Q) - 1)]
  double exp_rhs = 0.0;    // (e^mu + (1-delta)/(mu delta e)) E[exp(e^theta theta^2 Q / (2(1-delta)))]
  bool tail_ok = false, mgf_ok = false, exp_ok = false;
  bool ok() const { return tail_ok && mgf_ok && exp_ok; }
};

FunctionalReport coupling_functionals(const StationaryCoupling& sc, const FunctionalParams& params);

// Both sides of E[(Q-|H|)_+ (psi(H) - psi(H-1))] = 2 E[H_+ psi(H-1) - H_- psi(H)].
std::pair<double, double> balance_identity(const StationaryCoupling& sc, const std::function<double(double)>& psi);

// 8 theta^2 e^(2 theta) < 1
bool binomial_theta_admissible(double theta);

struct BinomialPairReport {
  int n = 0;
  double theta = 0.0;
  double functional = 0.0;   // E[exp(theta |2 S_n - S_4n|)] after de-perturbation
  double hat_bound = 0.0;    // e^(2 theta) E[exp(2 theta |H|)]
  std::size_t states = 0, class_size = 0;
  double residual = 0.0, marginal_error = 0.0;
  std::vector<FunctionalReport> functionals;
  bool pass = false;
};

BinomialPairReport couple_binomials(int n, double theta, const SolveOptions& options = {});

struct BinomialSweep {
  double theta = 0.0;
  std::vector<BinomialPairReport> rows;
  double kappa = 0.0;           // running sup of the functional
  double plateau_spread = 0.0;  // (max - min)/max over the last quarter of n
  bool pass = false;
};
BinomialSweep sweep_binomials(int n_max, double theta, Exec exec = Exec::Parallel, const SolveOptions& options = {});

std::vector<double> default_theta_grid();

struct HypergeoPairReport {
  int n = 0, k = 0, s = 0;
  int part = 1;
  std::vector<double> thetas;
  std::vector<double> values;  // functional per theta
  std::size_t states = 0, class_size = 0;
  double residual = 0.0, marginal_error = 0.0;
  std::vector<FunctionalReport> functionals;
  bool functionals_ok = false;     // tail and exponential bounds
  long expectation_failures = 0;   // expectation bound misses; it can fail when Q takes fractional values
};

// Part 1: W1 = S_k[n,0] against W2 = S_4k[4n,0]; values are E[exp(theta |2 W1 - W2|)].
HypergeoPairReport couple_hypergeos_doubling(int n, int k, const std::vector<double>& thetas,
                                             const SolveOptions& options = {});
// Part 2: S_k[n,0] against S_k[n,s] - sk/n; values are E[exp(theta |W1 - W|)].
HypergeoPairReport couple_hypergeos_bias(int n, int k, int s, const std::vector<double>& thetas,
                                         const SolveOptions& options = {});

struct HypergeoSweep {
  std::vector<double> thetas;
  std::vector<HypergeoPairReport> doubling, bias;
  std::optional<double> theta_hat;  // largest grid theta with every part-1 value <= 3/2
  double m_hat = 0.0;               // smallest M with every part-2 value <= exp(1 + M theta^2 s^2 / n)
  long part2_checks = 0;
  bool functionals_ok = false;
  long expectation_failures = 0;
  long expectation_failing_instances = 0;
  bool pass = false;
};
HypergeoSweep sweep_hypergeos(int n_min, int n_max, const std::vector<double>& thetas, Exec exec = Exec::Parallel,
                              const SolveOptions& options = {});

struct HoeffdingReport {
  int n = 0, k = 0;
  Rational p;
  double lambda = 0.0, a = 0.0, b = 0.0;
  double lin_wo = 0.0, lin_w = 0.0, lin_bound = 0.0;
  double quad_wo = 0.0, quad_w = 0.0, quad_bound = 0.0;
  double sq_wo = 0.0, sq_w = 0.0, sq_bound = 0.0;
  bool pass = false;
};

HoeffdingReport hoeffding_bounds_check(int n, int k, const Rational& p, double lambda, double a, double b);

struct HoeffdingSweep {
  long checks = 0;
  long violations = 0;
  std::vector<HoeffdingReport> failures;
  bool pass = false;
};
HoeffdingSweep sweep_hoeffding(int n_max, const std::vector<double>& lambdas, const std::vector<double>& as,
                               const std::vector<double>& bs, Exec exec = Exec::Parallel);

// General-formula oracle against closed forms, convolution and scaling on a fixed corpus.
struct CrossCheckReport {
  int n_max = 0;
  long laws = 0;
  long closed_form_checks = 0;
  long convolution_checks = 0;
  long scaling_checks = 0;
  long mismatch_count = 0;
  std::vector<std::string> mismatches;  // first 20
  bool pass = false;
};
CrossCheckReport cross_validate_stein(int n_max, Exec exec = Exec::Parallel);

struct StationaryCase {
  std::string label;
  std::size_t states = 0, class_size = 0, closed_classes = 0;
  double residual = 0.0, marginal_error = 0.0;
  std::optional<double> diagonal_mass;  // identical chains only
  std::string error;
  bool pass = false;
};

struct StationaryCorpus {
  std::size_t max_states = 0;
  std::vector<StationaryCase> cases;
  bool pass = false;
};
StationaryCorpus check_stationary_corpus(std::size_t max_states, Exec exec = Exec::Parallel);

}  // namespace kmt::stein
