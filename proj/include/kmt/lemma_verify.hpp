#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "kmt/parallel.hpp"
#include "kmt/rational.hpp"

namespace kmt::lemmas {

// alpha_m(k) = C(2m, m+k) / 2^(2m),  k = 0..m
// beta_m(k)  = C(8m+1, 4m+2k) / 2^(8m), k = 0..2m
// Numerators are stored over the shared denominator 2^(8m).
class AlphaBetaTable {
 public:
  explicit AlphaBetaTable(int m);

  int m() const { return m_; }
  unsigned long log2_denominator() const { return 8ul * static_cast<unsigned long>(m_); }

  const BigInt& alpha_num(int k) const { return alpha_[static_cast<std::size_t>(k)]; }
  const BigInt& beta_num(int k) const { return beta_[static_cast<std::size_t>(k)]; }
  // Suffix sums; index one past the end gives zero.
  const BigInt& alpha_tail_num(int k) const { return alpha_tail_[static_cast<std::size_t>(k)]; }
  const BigInt& beta_tail_num(int k) const { return beta_tail_[static_cast<std::size_t>(k)]; }

  Rational alpha(int k) const;
  Rational beta(int k) const;
  Rational alpha_tail(int k) const;
  Rational beta_tail(int k) const;

  // C(8m, 4m+2k) + C(8m, 4m+2k-1) == C(8m+1, 4m+2k) for every stored k.
  bool pascal_identity_holds() const { return pascal_ok_; }

 private:
  int m_;
  std::vector<BigInt> alpha_, beta_, alpha_tail_, beta_tail_;
  bool pascal_ok_ = true;
};

struct Violation {
  std::string check;
  long m = 0;
  long k = 0;
  long l = 0;
  std::string lhs;
  std::string relation;
  std::string rhs;

  bool operator==(const Violation&) const = default;
};

struct SummaryRow {
  long param = 0;  // m, n, or grid index depending on the suite
  bool pass = true;
  double worst_margin = 0.0;
  long checks = 0;

  bool operator==(const SummaryRow&) const = default;
};

struct LemmaReport {
  std::string id;
  std::vector<std::pair<std::string, long>> params;
  long checks = 0;
  std::vector<Violation> violations;
  // Failures below a discovered threshold; they do not affect pass.
  std::vector<Violation> below_threshold;
  std::optional<long> threshold;
  std::optional<long> threshold_even;
  bool pass = true;
  double worst_margin = 0.0;
  std::vector<SummaryRow> rows;
  std::vector<std::pair<std::string, double>> values;

  void finalize();
  bool operator==(const LemmaReport&) const = default;
};

AlphaBetaTable alpha_beta_tables(int m);

LemmaReport check_mass_domination(int m_max, Exec exec = Exec::Parallel);
LemmaReport check_shifted_domination(int m_max, Exec exec = Exec::Parallel);
LemmaReport check_ratio_monotonicity(int m_max, int h_max, Exec exec = Exec::Parallel);
LemmaReport check_tail_domination(int m_max, Exec exec = Exec::Parallel);
LemmaReport check_entropy_bound(int grid_size, Exec exec = Exec::Parallel);
LemmaReport check_ash_sandwich(int n_max, Exec exec = Exec::Parallel);

// D(p) = p log 2p + (1-p) log(2-2p), evaluated at p = (1+x)/2.
long double bernoulli_divergence(long double x);
// Q(t) = 4 D(1/2 + t/2) - D(1/2 + s/2), s = 2t - t^2.
long double entropy_gap(long double t);

}  // namespace kmt::lemmas
