#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "kmt/exact_dist.hpp"
#include "kmt/parallel.hpp"
#include "kmt/rational.hpp"

namespace kmt::coupling {

// Law on strictly increasing (not necessarily unit-spaced) atoms.
class DiscreteLaw {
 public:
  DiscreteLaw(std::vector<Rational> atoms, std::vector<Rational> masses);
  explicit DiscreteLaw(const LatticePMF& pmf);

  std::size_t size() const { return atoms_.size(); }
  const std::vector<Rational>& atoms() const { return atoms_; }
  const std::vector<Rational>& masses() const { return masses_; }
  const Rational& atom(std::size_t i) const { return atoms_[i]; }
  const Rational& mass(std::size_t i) const { return masses_[i]; }

 private:
  std::vector<Rational> atoms_, masses_;
};

// Law of |c X| for a law X.
DiscreteLaw abs_law(const LatticePMF& pmf, const Rational& factor = 1);

struct Cell {
  std::size_t row;
  std::size_t col;
  Rational mass;
};

class CouplingTable {
 public:
  CouplingTable(DiscreteLaw rows, DiscreteLaw cols, std::vector<Cell> cells);

  const DiscreteLaw& rows() const { return rows_; }
  const DiscreteLaw& cols() const { return cols_; }
  const std::vector<Cell>& cells() const { return cells_; }

  std::vector<Rational> row_sums() const;
  std::vector<Rational> col_sums() const;
  bool marginals_exact() const;
  // No pair (k,l), (k',l') with k < k' and l > l'.
  bool non_crossing() const;

 private:
  DiscreteLaw rows_, cols_;
  std::vector<Cell> cells_;  // sorted by (row, col)
};

// Merge of two integer weight vectors with equal totals; emit(i, j, overlap) is called for every
// positive-length overlap of the cumulative intervals, in increasing order.
void comonotone_merge(std::span<const BigInt> a, std::span<const BigInt> b,
                      const std::function<void(std::size_t, std::size_t, const BigInt&)>& emit);

CouplingTable comonotone_couple(const DiscreteLaw& a, const DiscreteLaw& b);
CouplingTable comonotone_couple(const LatticePMF& a, const LatticePMF& b);

struct SignedCell {
  long s_n;
  long s_4n;
  Rational mass;
};

// Coupling of S_n and S_4n: |2 S_n| and |S_4n| comonotone, shared symmetric sign.
struct WalkPairCoupling {
  int n = 0;
  CouplingTable abs_table;
  std::vector<SignedCell> cells;
  Rational abs_margin;   // min over support of |S_4n| + 2 - 2|S_n|
  Rational diff_margin;  // min over support of S_4n^2/(8n) + 9 - |2 S_n - S_4n|
  bool pass = false;
};

WalkPairCoupling signed_couple_2s_4s(int n);

// Same margins without materializing rational cells (integer merge only).
struct WalkPairMargins {
  int n = 0;
  Rational abs_margin;
  Rational diff_margin;
  long pairs = 0;
  bool pass = false;
};
WalkPairMargins walk_pair_margins(int n);

struct WalkPairSweep {
  int n_max = 0;
  std::vector<WalkPairMargins> rows;  // even n = 2..n_max
  std::optional<long> threshold;
  bool pass = false;
};
WalkPairSweep sweep_walk_pair(int n_max, Exec exec = Exec::Parallel);

// S_n = F_n^{-1}(Phi(Z)) checked against |S_n| <= |Z| sqrt n + 3 and |S_n - Z sqrt n| <= Z^2 + 11.
struct QuantileCheckReport {
  int n = 0;
  double abs_margin = 0.0;
  double diff_margin = 0.0;
  long points = 0;
  bool pass = false;
};
QuantileCheckReport gaussian_quantile_check(int n);

struct QuantileSweep {
  int n_max = 0;
  std::vector<QuantileCheckReport> rows;  // n = 1..n_max
  std::optional<long> threshold;
  bool pass = false;
};
QuantileSweep sweep_gaussian_quantile(int n_max, Exec exec = Exec::Parallel);

struct ChainOptions {
  std::size_t table_limit = std::size_t{1} << 15;  // atoms of the larger walk law
  bool allow_fallback = true;
};

struct ChainTrajectory {
  int n = 0;
  int sign = 1;
  std::vector<long long> s;  // S_n, S_4n, ..., S_{4^depth n}
  std::vector<double> z;     // S_{4^k n} / sqrt(4^k n)
  std::vector<bool> exact_step;
};

class ChainSampler {
 public:
  ChainSampler(int n, int depth, ChainOptions options = {});

  // Deterministic in (seed, index); throws VerificationFailure if a step breaks
  // 2|S| <= |S'| + 2 or |2S - S'| <= S'^2/(8n') + 9.
  ChainTrajectory sample(std::uint64_t seed, std::uint64_t index = 0) const;

  int n() const { return n_; }
  int depth() const { return depth_; }
  std::size_t exact_steps() const { return steps_.size(); }

 private:
  struct Row {
    std::vector<long long> b;   // |S_4n'| values
    std::vector<long double> cum;  // conditional CDF
  };
  struct Step {
    long long n_prime;
    std::vector<Row> rows;  // indexed by |S_n'| / 2 (n' even) or (|S_n'|-1)/2
  };
  int n_;
  int depth_;
  ChainOptions options_;
  std::vector<long double> start_cdf_;  // law of |S_n|
  std::vector<Step> steps_;             // exact steps, a prefix of the chain
};

ChainTrajectory chain_sample(int n, int depth, std::uint64_t seed, ChainOptions options = {});

}  // namespace kmt::coupling
