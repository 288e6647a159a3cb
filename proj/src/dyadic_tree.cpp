#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "kmt/errors.hpp"
#include "kmt/exact_dist.hpp"
#include "kmt/kmt_embed.hpp"
#include "kmt/normal.hpp"
#include "kmt/rational.hpp"
#include "kmt/rng.hpp"

namespace kmt::ep {

WalkQuantileTable::WalkQuantileTable(long max_n, long exact_limit)
    : max_n_(max_n), exact_limit_(exact_limit) {
  if (max_n < 0) throw InvalidParameter("table size must be nonnegative");
  once_ = std::make_unique<std::once_flag[]>(static_cast<std::size_t>(max_n + 1));
  cdf_.resize(static_cast<std::size_t>(max_n + 1));
}

WalkQuantileTable::~WalkQuantileTable() = default;

const std::vector<double>& WalkQuantileTable::cdf(long N) const {
  if (N < 0 || N > max_n_) throw InvalidParameter("walk length outside the table");
  const auto u = static_cast<std::size_t>(N);
  std::call_once(once_[u], [&] {
    std::vector<double> c(u + 1);
    if (N <= exact_limit_) {
      auto row = binomial_row(static_cast<unsigned>(N));
      BigInt run = 0;
      for (std::size_t i = 0; i <= u; ++i) {
        run += row[i];
        c[i] = N < 16000 ? static_cast<double>(std::ldexp(to_long_double(run), static_cast<int>(-N)))
                         : static_cast<double>(to_long_double(dyadic(run, static_cast<unsigned long>(N))));
      }
    } else {
      const long double top = std::lgamma(static_cast<long double>(N) + 1) - N * std::log(2.0L);
      long double run = 0;
      for (std::size_t i = 0; i <= u; ++i) {
        const long double j = static_cast<long double>(i);
        run += std::exp(top - std::lgamma(j + 1) - std::lgamma(static_cast<long double>(N) - j + 1));
        c[i] = static_cast<double>(run);
      }
    }
    c[u] = 1.0;
    cdf_[u] = std::move(c);
  });
  return cdf_[u];
}

long WalkQuantileTable::quantile(long N, double u) const {
  if (!(u > 0 && u < 1)) throw InvalidParameter("quantile level must lie in (0,1)");
  if (N == 0) return 0;
  const auto& c = cdf(N);
  if (u <= 0.5) {
    const auto i = std::lower_bound(c.begin(), c.end(), u) - c.begin();
    return -N + 2 * static_cast<long>(i);
  }
  // smallest i with P{S > x_i} = F(x_{N-1-i}) <= 1 - u
  const double v = 1.0 - u;
  const long j = static_cast<long>(std::upper_bound(c.begin(), c.end(), v) - c.begin()) - 1;
  const long i = N - 1 - j;
  return -N + 2 * i;
}

DyadicTree build_dyadic_tree(long n, int depth, std::uint64_t seed, const WalkQuantileTable& table,
                             const TreeOptions& options, std::uint64_t rep) {
  if (n < 1) throw InvalidParameter("n must be positive");
  if (depth < 1) throw InvalidParameter("depth must be at least 1");
  if (depth >= 62 || (std::size_t{1} << (depth + 1)) - 1 > options.node_cap)
    throw CapabilityError("dyadic tree exceeds the node cap");
  if (table.max_n() < n) throw InvalidParameter("quantile table too small for n");
  DyadicTree t;
  t.n = n;
  t.depth = depth;
  const std::size_t total = (std::size_t{1} << (depth + 1)) - 1;
  t.count.assign(total, 0);
  t.z.assign(total, 0.0);
  t.nhat.assign(total, 0);
  t.count[0] = n;
  for (int p = 0; p <= depth; ++p) {
    for (std::size_t k = 0; k < t.nodes_in(p); ++k) {
      const std::size_t node = DyadicTree::index(p, k);
      auto rng = CounterRng::derive(seed, {rep, static_cast<std::uint64_t>(p), k});
      const double u = rng.uniform();
      const double z = normal::quantile(u);
      const long N = t.count[node];
      t.z[node] = z;
      const long nh = N > 0 ? table.quantile(N, u) : 0;
      t.nhat[node] = nh;
      if (N > 0 && N >= options.lemma_threshold) {
        ++t.checked_nodes;
        const double rn = std::sqrt(static_cast<double>(N));
        const bool ok = std::abs(static_cast<double>(nh)) <= std::abs(z) * rn + 3 + 1e-9 &&
                        std::abs(nh - z * rn) <= z * z + 11 + 1e-9;
        if (!ok) ++t.lemma_violations;
      }
      if (p < depth) {
        const long left = (N + nh) / 2;
        t.count[DyadicTree::index(p + 1, 2 * k)] = left;
        t.count[DyadicTree::index(p + 1, 2 * k + 1)] = N - left;
      }
    }
  }
  return t;
}

DyadicTree build_dyadic_tree(long n, int depth, std::uint64_t seed) {
  WalkQuantileTable table(n);
  return build_dyadic_tree(n, depth, seed, table);
}

EpPaths extract_paths(const DyadicTree& tree) {
  const int m = tree.depth;
  const std::size_t G = std::size_t{1} << m;
  EpPaths out;
  out.t.resize(G + 1);
  out.prefix.assign(G + 1, 0);
  out.g.resize(G + 1);
  out.w0.assign(G + 1, 0.0);
  const double rn = std::sqrt(static_cast<double>(tree.n));
  for (std::size_t k = 0; k < G; ++k) out.prefix[k + 1] = out.prefix[k] + tree.count[DyadicTree::index(m, k)];
  for (std::size_t k = 0; k <= G; ++k) {
    out.t[k] = static_cast<double>(k) / static_cast<double>(G);
    out.g[k] = (static_cast<double>(out.prefix[k]) - tree.n * out.t[k]) / rn;
  }
  // midpoint refinement: W0(mid I) = average of the endpoints + Z(I) 2^{-p/2-1}
  for (int p = 0; p < m; ++p) {
    const std::size_t stride = G >> p, half = stride / 2;
    const double scale = std::ldexp(1.0, -1) / std::sqrt(std::ldexp(1.0, p));
    for (std::size_t k = 0; k < (std::size_t{1} << p); ++k) {
      const std::size_t lo = k * stride, hi = lo + stride;
      out.w0[lo + half] = 0.5 * (out.w0[lo] + out.w0[hi]) + tree.z[DyadicTree::index(p, k)] * scale;
    }
  }
  return out;
}

DeviationStats deviation_stats(const DyadicTree& tree) {
  const auto paths = extract_paths(tree);
  DeviationStats s;
  s.n = tree.n;
  s.depth = tree.depth;
  s.lemma_violations = tree.lemma_violations;
  const double rn = std::sqrt(static_cast<double>(tree.n));
  const std::size_t G = paths.t.size() - 1;
  for (std::size_t k = 0; k <= G; ++k)
    s.d_n = std::max(s.d_n, std::abs(static_cast<double>(paths.prefix[k]) - tree.n * paths.t[k] - rn * paths.w0[k]));
  const double cell = static_cast<double>(tree.n) / static_cast<double>(G);
  for (std::size_t k = 0; k < G; ++k) {
    const double c = static_cast<double>(tree.count[DyadicTree::index(tree.depth, k)]);
    s.delta_g = std::max(s.delta_g, std::max(c, cell) / rn);
    s.delta_w0 = std::max(s.delta_w0, std::abs(paths.w0[k + 1] - paths.w0[k]));
  }
  // chi-square sums along every root-to-level-depth chain
  std::vector<double> acc{tree.z[0] * tree.z[0]};
  for (int p = 1; p <= tree.depth; ++p) {
    std::vector<double> next(std::size_t{1} << p);
    for (std::size_t k = 0; k < next.size(); ++k) {
      const double z = tree.z[DyadicTree::index(p, k)];
      next[k] = acc[k / 2] + z * z;
    }
    acc = std::move(next);
  }
  s.chi2max = *std::max_element(acc.begin(), acc.end());
  return s;
}

int depth_for(long n, const std::string& rule) {
  if (n < 1) throw InvalidParameter("n must be positive");
  int floor_log = 0;
  while ((2L << floor_log) <= n) ++floor_log;
  const int ceil_log = (1L << floor_log) == n ? floor_log : floor_log + 1;
  if (rule == "ceil-log2") return std::max(1, ceil_log);
  if (rule == "floor-log2") return std::max(1, floor_log);
  if (rule.rfind("fixed:", 0) == 0) {
    int d = 0;
    try {
      d = std::stoi(rule.substr(6));
    } catch (const std::exception&) {
      throw InvalidParameter("bad depth rule: " + rule);
    }
    if (d < 1) throw InvalidParameter("fixed depth must be at least 1");
    return d;
  }
  throw InvalidParameter("unknown depth rule: " + rule);
}

EpExperiment run_ep_experiment(const EpConfig& config, Exec exec) {
  if (config.reps < 2) throw InvalidParameter("reps must be at least 2");
  if (config.n_list.empty()) throw InvalidParameter("empty n list");
  EpExperiment ex;
  ex.config = config;
  ex.monotone = true;
  ex.tails_ok = true;
  bool clean = true;
  std::vector<double> logs, means;
  for (std::size_t ni = 0; ni < config.n_list.size(); ++ni) {
    const long n = config.n_list[ni];
    const int m = depth_for(n, config.depth_rule);
    WalkQuantileTable table(n);
    auto samples = map_range(exec, 0, config.reps, [&](long r) {
      return deviation_stats(
          build_dyadic_tree(n, m, config.seed, table, config.tree, static_cast<std::uint64_t>(ni) << 32 | r));
    });
    EpRow row;
    row.n = n;
    row.depth = m;
    std::vector<double> d, dg, dw, chi;
    for (const auto& s : samples) {
      d.push_back(s.d_n);
      dg.push_back(s.delta_g);
      dw.push_back(s.delta_w0);
      chi.push_back(s.chi2max);
      row.lemma_violations += s.lemma_violations;
    }
    row.mean_d = stats::mean(d);
    row.sd_d = std::sqrt(stats::variance(d));
    row.q50_d = stats::quantile(d, 0.5);
    row.q90_d = stats::quantile(d, 0.9);
    row.q99_d = stats::quantile(d, 0.99);
    row.mean_delta_g = stats::mean(dg);
    row.mean_delta_w0 = stats::mean(dw);
    row.mean_chi2max = stats::mean(chi);
    const double reps = static_cast<double>(config.reps);
    for (double x : {0.0, 1.0, 2.0}) {
      ChiSquareTail tail;
      tail.x = x;
      const double level = 10 * (m + x);
      tail.empirical = static_cast<double>(std::count_if(chi.begin(), chi.end(), [&](double c) { return c >= level; })) / reps;
      tail.bound = 2 * std::exp(-m - x);
      tail.se = std::sqrt(tail.empirical * (1 - tail.empirical) / reps);
      tail.ok = tail.empirical <= tail.bound + 3 * tail.se;
      ex.tails_ok = ex.tails_ok && tail.ok;
      row.tails.push_back(tail);
    }
    clean = clean && row.lemma_violations == 0;
    if (!ex.rows.empty() && row.mean_d < ex.rows.back().mean_d) ex.monotone = false;
    logs.push_back(std::log(static_cast<double>(n)));
    means.push_back(row.mean_d);
    ex.max_d_over_log = std::max(ex.max_d_over_log, row.mean_d / logs.back());
    ex.rows.push_back(std::move(row));
    ex.samples.push_back(std::move(samples));
  }
  if (logs.size() >= 2) ex.fit = stats::fit_line(logs, means);
  ex.pass = ex.tails_ok && clean && (logs.size() < 2 || ex.fit.r2 >= 0.95);
  return ex;
}

}  // namespace kmt::ep
