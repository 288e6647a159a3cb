#include <algorithm>
#include <array>
#include <cmath>

#include "kmt/errors.hpp"
#include "kmt/stats.hpp"
#include "kmt/stein_markov.hpp"

namespace kmt::stein {

using stats::CompensatedSum;

namespace {

bool within(double lhs, double rhs) { return lhs <= rhs * (1 + 1e-9) + 1e-12; }

struct Pair {
  LatticePMF px, py;
  SteinCoefficient tx, ty;
};

// E over gamma of exp(2 theta |x - y + r|), r drawn from R given Y = y, where Y = 2V + R.
// v_law is the law of V (offset on the half lattice allowed).
std::vector<double> deperturbed(const StationaryCoupling& sc, const LatticePMF& v_law, const std::vector<double>& thetas) {
  std::vector<double> out(thetas.size());
  // conditional law of R per Y atom
  std::vector<std::array<double, 3>> cond(sc.ny);
  for (std::size_t j = 0; j < sc.ny; ++j) {
    Rational y = sc.y_offset + static_cast<unsigned long>(j);
    std::array<Rational, 3> w;
    Rational total = 0;
    for (int r = -1; r <= 1; ++r) {
      Rational v = (y - r) / 2;
      Rational pr = r == 0 ? Rational(1, 2) : Rational(1, 4);
      w[static_cast<std::size_t>(r + 1)] = pr * v_law.mass_at(v);
      total += w[static_cast<std::size_t>(r + 1)];
    }
    for (std::size_t r = 0; r < 3; ++r) cond[j][r] = sgn(total) > 0 ? Rational(w[r] / total).get_d() : 0.0;
  }
  for (std::size_t t = 0; t < thetas.size(); ++t) {
    CompensatedSum acc;
    for (std::size_t s = 0; s < sc.gamma.size(); ++s) {
      if (!sc.in_class[s] || sc.gamma[s] == 0.0) continue;
      const std::size_t j = s % sc.ny;
      const double h = sc.h(s);
      for (int r = -1; r <= 1; ++r) {
        const double c = cond[j][static_cast<std::size_t>(r + 1)];
        if (c > 0) acc.add(sc.gamma[s] * c * std::exp(2 * thetas[t] * std::abs(h + r)));
      }
    }
    out[t] = acc.value();
  }
  return out;
}

double abs_h_mgf(const StationaryCoupling& sc, double theta) {
  CompensatedSum acc;
  for (std::size_t s = 0; s < sc.gamma.size(); ++s)
    if (sc.in_class[s]) acc.add(sc.gamma[s] * std::exp(theta * std::abs(sc.h(s))));
  return acc.value();
}

bool integral(double x) { return std::abs(x - std::round(x)) < 1e-12; }

std::vector<FunctionalReport> standard_functionals(const StationaryCoupling& sc, double theta) {
  std::vector<FunctionalReport> out;
  for (long a = 0; a <= 3; ++a) out.push_back(coupling_functionals(sc, {theta, a, 0.5, 1.0}));
  return out;
}

bool all_ok(const std::vector<FunctionalReport>& f) {
  return std::all_of(f.begin(), f.end(), [](const FunctionalReport& r) { return r.ok(); });
}

void summarize(HypergeoPairReport& rep) {
  rep.functionals_ok = std::all_of(rep.functionals.begin(), rep.functionals.end(),
                                   [](const FunctionalReport& r) { return r.tail_ok && r.exp_ok; });
  rep.expectation_failures = std::count_if(rep.functionals.begin(), rep.functionals.end(),
                                           [](const FunctionalReport& r) { return !r.mgf_ok; });
}

void check_hypergeo_args(int n, int k) {
  if (n < 2 || n % 2 != 0) throw InvalidParameter("n must be a positive even integer");
  if (3 * k < n || 3 * k > 2 * n) throw InvalidParameter("k must lie in [n/3, 2n/3]");
}

}  // namespace

FunctionalReport coupling_functionals(const StationaryCoupling& sc, const FunctionalParams& params) {
  if (params.theta < 0 || params.a < 0) throw InvalidParameter("theta and a must be nonnegative");
  if (!(params.delta > 0 && params.delta < 1) || !(params.mu > 0)) throw InvalidParameter("need 0<delta<1 and mu>0");
  const double th = params.theta, a1 = static_cast<double>(params.a + 1);
  const double c = std::exp(th) * th * th / (2 * (1 - params.delta));
  CompensatedSum p_tail, mid, rhs, mgf, mgf_rhs, ex;
  for (std::size_t s = 0; s < sc.gamma.size(); ++s) {
    if (!sc.in_class[s]) continue;
    const double g = sc.gamma[s], h = std::abs(sc.h(s)), q = sc.q[s];
    if (h >= a1 - 1e-12) {
      p_tail.add(g);
      mid.add(g * h);
    }
    rhs.add(g * std::max(q - static_cast<double>(params.a), 0.0));
    mgf.add(g * std::exp(th * h));
    mgf_rhs.add(g * q * std::expm1(th * q));
    ex.add(g * std::exp(c * q));
  }
  FunctionalReport f;
  f.params = params;
  f.p_tail = p_tail.value();
  f.tail_mid = mid.value() / a1;
  f.tail_rhs = rhs.value() / a1;
  f.mgf = mgf.value();
  f.mgf_rhs = 1 + mgf_rhs.value();
  f.exp_rhs = (std::exp(params.mu) + (1 - params.delta) / (params.mu * params.delta * std::exp(1.0))) * ex.value();
  f.tail_ok = within(f.p_tail, f.tail_mid) && within(f.tail_mid, f.tail_rhs);
  f.mgf_ok = within(f.mgf, f.mgf_rhs);
  f.exp_ok = within(f.mgf, f.exp_rhs);
  return f;
}

std::pair<double, double> balance_identity(const StationaryCoupling& sc, const std::function<double(double)>& psi) {
  CompensatedSum lhs, rhs;
  for (std::size_t s = 0; s < sc.gamma.size(); ++s) {
    if (!sc.in_class[s]) continue;
    const double g = sc.gamma[s], h = sc.h(s);
    lhs.add(g * std::max(sc.q[s] - std::abs(h), 0.0) * (psi(h) - psi(h - 1)));
    rhs.add(2 * g * (std::max(h, 0.0) * psi(h - 1) - std::max(-h, 0.0) * psi(h)));
  }
  return {lhs.value(), rhs.value()};
}

bool binomial_theta_admissible(double theta) { return theta >= 0 && 8 * theta * theta * std::exp(2 * theta) < 1; }

BinomialPairReport couple_binomials(int n, double theta, const SolveOptions& options) {
  if (n < 1) throw InvalidParameter("n must be positive");
  if (!binomial_theta_admissible(theta)) throw InvalidParameter("theta violates 8 theta^2 e^(2 theta) < 1");
  const LatticePMF px = make_centered_binomial(4 * n, Rational(1, 2));
  const LatticePMF walk = make_walk_pmf(n);
  const LatticePMF py = perturb_scale(walk);
  const auto tx = stein_binomial(4 * n, Rational(1, 2));
  // fair walks of any length have the constant coefficient n/2
  const SteinCoefficient tw(walk.offset(), std::vector<Rational>(walk.size(), frac(n, 2)));
  const auto ty = stein_scale_perturb(tw, walk);
  const auto rates = build_joint_chain(tx, px, ty, py);
  const auto sc = solve_stationary(rates, options);

  BinomialPairReport rep;
  rep.n = n;
  rep.theta = theta;
  rep.functional = deperturbed(sc, walk, {theta})[0];
  rep.hat_bound = std::exp(2 * theta) * abs_h_mgf(sc, 2 * theta);
  rep.states = rates.nx * rates.ny;
  rep.class_size = sc.class_size;
  rep.residual = sc.residual;
  rep.marginal_error = sc.marginal_error;
  rep.functionals = standard_functionals(sc, 2 * theta);
  rep.pass = within(rep.functional, rep.hat_bound) && all_ok(rep.functionals) && sc.residual <= 1e-10 &&
             sc.marginal_error <= 1e-9;
  return rep;
}

BinomialSweep sweep_binomials(int n_max, double theta, Exec exec, const SolveOptions& options) {
  if (n_max < 1) throw InvalidParameter("n_max must be positive");
  BinomialSweep sw;
  sw.theta = theta;
  sw.rows = map_range(exec, 1, n_max + 1, [&](long n) { return couple_binomials(static_cast<int>(n), theta, options); });
  sw.pass = true;
  for (const auto& r : sw.rows) {
    sw.kappa = std::max(sw.kappa, r.functional);
    sw.pass = sw.pass && r.pass;
  }
  const std::size_t from = sw.rows.size() - (sw.rows.size() + 3) / 4;
  double lo = sw.rows[from].functional, hi = lo;
  for (std::size_t i = from; i < sw.rows.size(); ++i) {
    lo = std::min(lo, sw.rows[i].functional);
    hi = std::max(hi, sw.rows[i].functional);
  }
  sw.plateau_spread = (hi - lo) / hi;
  sw.pass = sw.pass && sw.plateau_spread < 0.05;
  return sw;
}

std::vector<double> default_theta_grid() {
  std::vector<double> g;
  for (int i = 1; i <= 50; ++i) g.push_back(i / 100.0);
  return g;
}

HypergeoPairReport couple_hypergeos_doubling(int n, int k, const std::vector<double>& thetas,
                                             const SolveOptions& options) {
  check_hypergeo_args(n, k);
  const LatticePMF px = make_hypergeometric(4 * n, 4 * k, 0, HypergeoForm::Centered);
  const LatticePMF v = make_hypergeometric(n, k, 0, HypergeoForm::Centered);
  const LatticePMF py = perturb_scale(v);
  const auto tx = stein_hypergeometric(4 * n, 4 * k, 0);
  const auto ty = stein_scale_perturb(stein_hypergeometric(n, k, 0), v);
  const auto rates = build_joint_chain(tx, px, ty, py);
  const auto sc = solve_stationary(rates, options);
  HypergeoPairReport rep;
  rep.n = n;
  rep.k = k;
  rep.part = 1;
  rep.thetas = thetas;
  rep.values = deperturbed(sc, v, thetas);
  rep.states = rates.nx * rates.ny;
  rep.class_size = sc.class_size;
  rep.residual = sc.residual;
  rep.marginal_error = sc.marginal_error;
  for (double t : thetas) {
    auto f = standard_functionals(sc, 2 * t);
    rep.functionals.insert(rep.functionals.end(), f.begin(), f.end());
  }
  summarize(rep);
  return rep;
}

HypergeoPairReport couple_hypergeos_bias(int n, int k, int s, const std::vector<double>& thetas,
                                         const SolveOptions& options) {
  check_hypergeo_args(n, k);
  const LatticePMF px = make_hypergeometric(n, k, 0, HypergeoForm::Centered);
  const LatticePMF py = make_hypergeometric(n, k, s, HypergeoForm::Centered);
  const auto rates = build_joint_chain(stein_hypergeometric(n, k, 0), px, stein_hypergeometric(n, k, s), py);
  const auto sc = solve_stationary(rates, options);
  HypergeoPairReport rep;
  rep.n = n;
  rep.k = k;
  rep.s = s;
  rep.part = 2;
  rep.thetas = thetas;
  for (double t : thetas) rep.values.push_back(abs_h_mgf(sc, 2 * t));
  rep.states = rates.nx * rates.ny;
  rep.class_size = sc.class_size;
  rep.residual = sc.residual;
  rep.marginal_error = sc.marginal_error;
  // the functional bounds need H on the integers
  if (integral(sc.h_shift))
    for (double t : thetas) {
      auto f = standard_functionals(sc, 2 * t);
      rep.functionals.insert(rep.functionals.end(), f.begin(), f.end());
    }
  summarize(rep);
  return rep;
}

HypergeoSweep sweep_hypergeos(int n_min, int n_max, const std::vector<double>& thetas, Exec exec,
                              const SolveOptions& options) {
  if (thetas.empty()) throw InvalidParameter("empty theta grid");
  if (!std::is_sorted(thetas.begin(), thetas.end())) throw InvalidParameter("theta grid must be increasing");
  HypergeoSweep sw;
  sw.thetas = thetas;
  std::vector<int> ns;
  for (int n = n_min + (n_min % 2); n <= n_max; n += 2) ns.push_back(n);
  if (ns.empty()) throw InvalidParameter("no even n in range");
  sw.doubling = map_range(exec, 0, static_cast<long>(ns.size()), [&](long i) {
    const int n = ns[static_cast<std::size_t>(i)];
    return couple_hypergeos_doubling(n, n / 2, thetas, options);
  });
  // largest grid prefix on which every instance stays at or below 3/2
  std::size_t good = thetas.size();
  for (const auto& r : sw.doubling) {
    std::size_t t = 0;
    while (t < r.values.size() && r.values[t] <= 1.5) ++t;
    good = std::min(good, t);
  }
  if (good > 0) sw.theta_hat = thetas[good - 1];
  std::vector<double> part2(thetas.begin(), thetas.begin() + static_cast<long>(good));

  struct Job {
    int n, k, s;
  };
  std::vector<Job> jobs;
  for (int n : ns) {
    std::vector<int> ks{(n + 2) / 3, n / 2, 2 * n / 3};
    ks.erase(std::unique(ks.begin(), ks.end()), ks.end());
    for (int k : ks)
      for (int s = 0; s <= n; s += 2) jobs.push_back({n, k, s});
  }
  if (!part2.empty())
    sw.bias = map_range(exec, 0, static_cast<long>(jobs.size()), [&](long i) {
      const auto& j = jobs[static_cast<std::size_t>(i)];
      return couple_hypergeos_bias(j.n, j.k, j.s, part2, options);
    });

  bool ok = sw.theta_hat.has_value();
  for (const auto& r : sw.doubling) {
    ok = ok && r.functionals_ok && r.residual <= 1e-10 && r.marginal_error <= 1e-9;
    sw.expectation_failures += r.expectation_failures;
    sw.expectation_failing_instances += r.expectation_failures > 0;
  }
  bool zero_bias_ok = true;
  for (const auto& r : sw.bias) {
    ok = ok && r.functionals_ok && r.residual <= 1e-10 && r.marginal_error <= 1e-9;
    sw.expectation_failures += r.expectation_failures;
    sw.expectation_failing_instances += r.expectation_failures > 0;
    for (std::size_t t = 0; t < r.thetas.size(); ++t) {
      ++sw.part2_checks;
      if (r.s == 0) {
        zero_bias_ok = zero_bias_ok && within(r.values[t], std::exp(1.0));
        continue;
      }
      const double th = r.thetas[t];
      const double need = (std::log(r.values[t]) - 1) * r.n / (th * th * r.s * r.s);
      sw.m_hat = std::max(sw.m_hat, need);
    }
  }
  sw.functionals_ok = ok;
  sw.pass = ok && zero_bias_ok;
  return sw;
}

}  // namespace kmt::stein
