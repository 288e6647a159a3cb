#include <algorithm>
#include <cmath>

#include "kmt/errors.hpp"
#include "kmt/normal.hpp"
#include "kmt/rw_embed.hpp"

namespace kmt::rw {

namespace {

void check_probable(long n, long t) {
  if (n < 1) throw InvalidParameter("n must be positive");
  if (t > n || t < -n || (n - t) % 2 != 0) throw InvalidParameter("t is not a probable value of S_n");
}

struct Node {
  std::vector<long> s;
  std::vector<double> v;
  double t_star = 0.0;
  long nodes = 0;
  long violations = 0;
};

double deviation(const std::vector<long>& s, const std::vector<double>& v, long t) {
  const long n = static_cast<long>(s.size()) - 1;
  double worst = 0.0;
  for (long i = 1; i <= n; ++i)
    worst = std::max(worst, std::abs(static_cast<double>(s[i]) - static_cast<double>(i) * t / n - v[i]));
  return worst;
}

Node couple(long n, long t, std::uint64_t seed, std::uint64_t rep, std::uint64_t depth, std::uint64_t index) {
  if ((n - t) % 2 != 0 || t > n || t < -n) throw ModelViolation("recursion reached an improbable endpoint");
  auto rng = CounterRng::derive(seed, {rep, depth, index});
  Node out;
  out.nodes = 1;
  if (n <= 5) {
    // uniform arrangement of the steps, bridge drawn independently
    std::vector<int> steps;
    for (long i = 0; i < (n + t) / 2; ++i) steps.push_back(1);
    while (static_cast<long>(steps.size()) < n) steps.push_back(-1);
    for (std::size_t i = steps.size(); i > 1; --i) std::swap(steps[i - 1], steps[rng.below(i)]);
    out.s.assign(static_cast<std::size_t>(n + 1), 0);
    for (long i = 0; i < n; ++i) out.s[i + 1] = out.s[i] + steps[static_cast<std::size_t>(i)];
    out.v = sample_bridge(n, rng).v;
    out.t_star = deviation(out.s, out.v, t);
    return out;
  }
  const long k = n / 2;
  const auto mid = hypergeo_gauss_couple(n, t, k, rng);
  Node left = couple(k, mid.s, seed, rep, depth + 1, 2 * index);
  Node right = couple(n - k, t - mid.s, seed, rep, depth + 1, 2 * index + 1);
  out.s.resize(static_cast<std::size_t>(n + 1));
  out.v.resize(static_cast<std::size_t>(n + 1));
  for (long i = 0; i <= k; ++i) {
    out.s[i] = left.s[i];
    out.v[i] = left.v[i] + static_cast<double>(i) / k * mid.v;
  }
  for (long i = k; i <= n; ++i) {
    out.s[i] = mid.s + right.s[i - k];
    out.v[i] = right.v[i - k] + static_cast<double>(n - i) / (n - k) * mid.v;
  }
  out.t_star = deviation(out.s, out.v, t);
  out.nodes = 1 + left.nodes + right.nodes;
  out.violations = left.violations + right.violations;
  if (out.t_star > std::max(left.t_star, right.t_star) + mid.remainder + 1e-9 * (1 + out.t_star)) ++out.violations;
  return out;
}

}  // namespace

GaussianBridge sample_bridge(long n, CounterRng& rng) {
  if (n < 1) throw InvalidParameter("n must be positive");
  GaussianBridge b;
  b.n = n;
  b.v.assign(static_cast<std::size_t>(n + 1), 0.0);
  for (long i = 1; i <= n; ++i) b.v[i] = b.v[i - 1] + rng.normal();
  const double total = b.v[n];
  for (long i = 1; i < n; ++i) b.v[i] -= static_cast<double>(i) / n * total;
  b.v[n] = 0.0;
  return b;
}

GaussianBridge sample_bridge(long n, std::uint64_t seed) {
  auto rng = CounterRng::derive(seed, {0x6272});
  return sample_bridge(n, rng);
}

MidpointDraw hypergeo_gauss_couple(long n, long t, long k, CounterRng& rng) {
  check_probable(n, t);
  if (3 * k < n || 3 * k > 2 * n) throw InvalidParameter("k must lie in [n/3, 2n/3]");
  const long plus = (n + t) / 2, minus = n - plus;
  const long lo = std::max(0L, k - minus), hi = std::min(k, plus);
  // weights relative to the mode by the ratio recurrence
  long mode = (k + 1) * (plus + 1) / (n + 2);
  mode = std::clamp(mode, lo, hi);
  const std::size_t L = static_cast<std::size_t>(hi - lo + 1);
  std::vector<long double> w(L, 0.0L);
  w[static_cast<std::size_t>(mode - lo)] = 1.0L;
  constexpr long double tiny = 1e-40L;
  for (long j = mode; j < hi; ++j) {
    const long double r = static_cast<long double>(plus - j) * (k - j) / (static_cast<long double>(j + 1) * (minus - k + j + 1));
    w[static_cast<std::size_t>(j + 1 - lo)] = w[static_cast<std::size_t>(j - lo)] * r;
    if (w[static_cast<std::size_t>(j + 1 - lo)] < tiny) break;
  }
  for (long j = mode; j > lo; --j) {
    const long double r = static_cast<long double>(plus - j + 1) * (k - j + 1) / (static_cast<long double>(j) * (minus - k + j));
    w[static_cast<std::size_t>(j - 1 - lo)] = w[static_cast<std::size_t>(j - lo)] / r;
    if (w[static_cast<std::size_t>(j - 1 - lo)] < tiny) break;
  }
  long double total = 0.0L;
  for (auto x : w) total += x;

  const double u = rng.uniform();
  const double sigma = std::sqrt(static_cast<double>(k) * (n - k) / n);
  MidpointDraw d;
  d.v = sigma * normal::quantile(u);
  long j = lo;
  if (u <= 0.5) {
    const long double target = u * total;
    long double run = 0.0L;
    for (j = lo; j < hi; ++j) {
      run += w[static_cast<std::size_t>(j - lo)];
      if (run >= target) break;
    }
  } else {
    // smallest j with P{J > j} <= 1 - u
    const long double target = (1.0L - u) * total;
    long double above = 0.0L;
    j = hi;
    while (j > lo && above + w[static_cast<std::size_t>(j - lo)] <= target) {
      above += w[static_cast<std::size_t>(j - lo)];
      --j;
    }
  }
  d.s = 2 * j - k;
  d.remainder = std::abs(static_cast<double>(d.s) - static_cast<double>(k) * t / n - d.v);
  return d;
}

CoupledPaths recursive_couple(long n, long t, std::uint64_t seed, std::uint64_t rep) {
  check_probable(n, t);
  Node node = couple(n, t, seed, rep, 0, 1);
  CoupledPaths p;
  p.n = n;
  p.t = t;
  p.s = std::move(node.s);
  p.v = std::move(node.v);
  p.t_star = node.t_star;
  p.nodes = node.nodes;
  p.pathwise_violations = node.violations;
  return p;
}

InductionConfig InductionConfig::from(double M, double gamma, double theta1, double alpha0, double A) {
  InductionConfig c;
  c.A = A;
  c.M = M;
  c.gamma = gamma;
  c.theta1 = theta1;
  c.alpha0 = alpha0;
  c.B = 2 * M / (1 - gamma);
  c.lambda0 = std::min(theta1 / 2, std::sqrt(alpha0 / (2 * c.B)));
  return c;
}

bool InductionConfig::valid() const {
  const double a_min = (1 + std::log(2.0)) / std::log(1.5);
  for (double x : {A, B, lambda0, theta1, M, gamma, alpha0})
    if (!(x > 0) || !std::isfinite(x)) return false;
  return gamma < 1 && A >= a_min && B >= 2 * M / (1 - gamma) * (1 - 1e-12) &&
         lambda0 <= std::min(theta1 / 2, std::sqrt(alpha0 / (2 * B))) * (1 + 1e-12);
}

BridgeExperiment run_bridge_experiment(const RwConfig& config, Exec exec) {
  if (config.reps < 2) throw InvalidParameter("reps must be at least 2");
  if (config.n_list.empty() || config.t_list.empty() || config.lambdas.empty())
    throw InvalidParameter("empty experiment grid");
  if (!config.induction.valid()) throw InvalidParameter("induction constants violate their constraints");
  for (double l : config.lambdas)
    if (l < 0 || l > config.induction.lambda0) throw InvalidParameter("lambda must lie in [0, lambda0]");
  BridgeExperiment ex;
  ex.config = config;
  const auto& ic = config.induction;
  std::vector<double> fit_x, fit_y;
  std::vector<double> medians;
  for (std::size_t ni = 0; ni < config.n_list.size(); ++ni)
    for (std::size_t ti = 0; ti < config.t_list.size(); ++ti) {
      const long n = config.n_list[ni], t = config.t_list[ti];
      check_probable(n, t);
      std::vector<long> viol(static_cast<std::size_t>(config.reps));
      auto ts = map_range(exec, 0, config.reps, [&](long r) {
        auto p = recursive_couple(n, t, config.seed, ni << 40 | ti << 32 | static_cast<std::uint64_t>(r));
        viol[static_cast<std::size_t>(r)] = p.pathwise_violations;
        return p.t_star;
      });
      long v = 0;
      for (long x : viol) v += x;
      ex.pathwise_violations += v;
      const double med = stats::quantile(ts, 0.5);
      if (t == 0) medians.push_back(med);
      for (std::size_t li = 0; li < config.lambdas.size(); ++li) {
        const double lam = config.lambdas[li];
        stats::CompensatedSum acc;
        for (double x : ts) acc.add(std::exp(lam * x));
        BridgeRow row;
        row.n = n;
        row.t = t;
        row.lambda = lam;
        row.mgf = static_cast<double>(acc.value()) / static_cast<double>(config.reps);
        row.log_mgf = std::log(row.mgf);
        row.rhs = std::exp(ic.A * std::log(static_cast<double>(n)) + ic.B * lam * lam * t * t / n);
        row.below_rhs = row.mgf <= row.rhs;
        row.mean_t_star = stats::mean(ts);
        row.median_t_star = med;
        row.pathwise_violations = v;
        if (t == 0 && li == 0) {
          fit_x.push_back(std::log(static_cast<double>(n)));
          fit_y.push_back(row.log_mgf);
        }
        ex.rows.push_back(row);
      }
      ex.t_star.push_back(std::move(ts));
    }
  for (const auto& r : ex.rows)
    if (r.t == 0 && r.n >= 2) ex.a_hat = std::max(ex.a_hat, r.log_mgf / std::log(static_cast<double>(r.n)));
  for (const auto& r : ex.rows)
    if (r.t != 0 && r.lambda > 0)
      ex.b_hat = std::max(ex.b_hat, (r.log_mgf - ex.a_hat * std::log(static_cast<double>(r.n))) * r.n /
                                        (r.lambda * r.lambda * r.t * r.t));
  ex.median_monotone = std::is_sorted(medians.begin(), medians.end());
  if (fit_x.size() >= 2) ex.fit = stats::fit_line(fit_x, fit_y);
  ex.pass = (fit_x.size() < 2 || ex.fit.r2 >= 0.9) && ex.pathwise_violations == 0;
  return ex;
}

FullExperiment run_full_experiment(const RwConfig& config, Exec exec) {
  if (config.reps < 2) throw InvalidParameter("reps must be at least 2");
  if (config.n_list.empty()) throw InvalidParameter("empty n list");
  FullExperiment ex;
  ex.config = config;
  std::vector<double> xs, ys;
  const std::uint64_t path_seed = CounterRng::mix(config.seed ^ 0x66756c6cULL);
  for (std::size_t ni = 0; ni < config.n_list.size(); ++ni) {
    const long n = config.n_list[ni];
    if (n < 1) throw InvalidParameter("n must be positive");
    ep::WalkQuantileTable table(n);
    std::vector<long> viol(static_cast<std::size_t>(config.reps));
    auto devs = map_range(exec, 0, config.reps, [&](long r) {
      auto rng = CounterRng::derive(config.seed, {0x66, ni, static_cast<std::uint64_t>(r)});
      const double u = rng.uniform();
      const double z = normal::quantile(u);
      const long sn = table.quantile(n, u);
      auto p = recursive_couple(n, sn, path_seed, ni << 32 | static_cast<std::uint64_t>(r));
      viol[static_cast<std::size_t>(r)] = p.pathwise_violations;
      const double rn = std::sqrt(static_cast<double>(n));
      double worst = 0.0;
      for (long k = 0; k <= n; ++k)
        worst = std::max(worst, std::abs(static_cast<double>(p.s[k]) - (p.v[k] + static_cast<double>(k) / n * rn * z)));
      return worst;
    });
    FullRow row;
    row.n = n;
    for (long x : viol) row.pathwise_violations += x;
    ex.pathwise_violations += row.pathwise_violations;
    row.mean_dev = stats::mean(devs);
    row.sd_dev = std::sqrt(stats::variance(devs));
    row.median_dev = stats::quantile(devs, 0.5);
    row.q90_dev = stats::quantile(devs, 0.9);
    xs.push_back(std::log(static_cast<double>(n)));
    ys.push_back(row.mean_dev);
    ex.rows.push_back(row);
    ex.max_dev.push_back(std::move(devs));
  }
  if (xs.size() >= 2) ex.fit = stats::fit_line(xs, ys);
  ex.pass = (xs.size() < 2 || ex.fit.r2 >= 0.95) && ex.pathwise_violations == 0;
  return ex;
}

}  // namespace kmt::rw
