#include <cmath>
#include <exception>
#include <string>

#include "kmt/errors.hpp"
#include "kmt/stein_markov.hpp"

namespace kmt::stein {

namespace {

struct Law {
  std::string label;
  LatticePMF pmf;
  SteinCoefficient closed;
};

std::vector<Law> binomial_laws(int n) {
  std::vector<Law> out;
  for (int j = 1; j < n; ++j) {
    const Rational p = frac(j, n);
    out.push_back({"binomial(" + std::to_string(n) + "," + to_string(p) + ")", make_centered_binomial(n, p),
                   stein_binomial(n, p)});
  }
  return out;
}

std::vector<Law> hypergeo_laws(int n) {
  std::vector<Law> out;
  for (int k = 1; k < n; ++k)
    for (int s = -(n - 2); s <= n - 2; s += 2)
      out.push_back({"hypergeometric(" + std::to_string(n) + "," + std::to_string(k) + "," + std::to_string(s) + ")",
                     make_hypergeometric(n, k, s, HypergeoForm::Centered), stein_hypergeometric(n, k, s)});
  return out;
}

struct Tally {
  long laws = 0, closed = 0, conv = 0, scale = 0, bad = 0;
  std::vector<std::string> notes;

  void miss(std::string what) {
    ++bad;
    if (notes.size() < 20) notes.push_back(std::move(what));
  }
  void merge(Tally&& o) {
    laws += o.laws;
    closed += o.closed;
    conv += o.conv;
    scale += o.scale;
    bad += o.bad;
    for (auto& s : o.notes)
      if (notes.size() < 20) notes.push_back(std::move(s));
  }
};

void check_law(const Law& law, Tally& t) {
  ++t.laws;
  const SteinCoefficient oracle = stein_from_pmf(law.pmf);
  ++t.closed;
  if (!(oracle == law.closed)) t.miss("closed form " + law.label);
  const LatticePMF scaled = perturb_scale(law.pmf);
  ++t.scale;
  if (!(stein_from_pmf(scaled) == stein_scale_perturb(law.closed, law.pmf))) t.miss("scaling " + law.label);
}

void check_convolution(const Law& a, const Law& b, Tally& t) {
  ++t.conv;
  const SteinCoefficient oracle = stein_from_pmf(convolve(a.pmf, b.pmf));
  if (!(oracle == stein_convolve(a.closed, a.pmf, b.closed, b.pmf))) t.miss("convolution " + a.label + " * " + b.label);
}

bool within(double lhs, double rhs) { return lhs <= rhs; }

StationaryCase solve_case(std::string label, const SteinCoefficient& tx, const LatticePMF& px,
                          const SteinCoefficient& ty, const LatticePMF& py, bool identical) {
  StationaryCase c;
  c.label = std::move(label);
  try {
    const auto rates = build_joint_chain(tx, px, ty, py);
    c.states = rates.nx * rates.ny;
    const auto sc = solve_stationary(rates);
    c.class_size = sc.class_size;
    c.closed_classes = sc.closed_classes;
    c.residual = sc.residual;
    c.marginal_error = sc.marginal_error;
    c.pass = sc.closed_classes == 1 && within(sc.residual, 1e-10) && within(sc.marginal_error, 1e-9);
    if (identical) {
      double diag = 0.0;
      for (std::size_t s = 0; s < sc.gamma.size(); ++s)
        if (sc.in_class[s] && sc.h(s) == 0.0) diag += sc.gamma[s];
      c.diagonal_mass = diag;
      c.pass = c.pass && diag >= 1 - 1e-12;
    }
  } catch (const std::exception& e) {
    c.error = e.what();
    c.pass = false;
  }
  return c;
}

struct CaseSpec {
  std::string label;
  LatticePMF px, py;
  SteinCoefficient tx, ty;
  bool identical;
};

std::vector<CaseSpec> corpus(std::size_t max_states) {
  std::vector<CaseSpec> out;
  auto add = [&](std::string label, LatticePMF px, SteinCoefficient tx, LatticePMF py, SteinCoefficient ty,
                 bool identical) {
    if (px.size() * py.size() > max_states) return;
    out.push_back({std::move(label), std::move(px), std::move(py), std::move(tx), std::move(ty), identical});
  };
  for (int n = 1; n <= 30; ++n)
    for (auto& law : binomial_laws(n)) add("identical " + law.label, law.pmf, law.closed, law.pmf, law.closed, true);
  for (int n = 2; n <= 24; n += 2)
    for (int k = (n + 2) / 3; 3 * k <= 2 * n; ++k)
      for (int s : {0, 2, n / 2 - (n / 2) % 2}) {
        if (s >= n) continue;
        const auto pmf = make_hypergeometric(n, k, s, HypergeoForm::Centered);
        const auto t = stein_hypergeometric(n, k, s);
        add("identical hypergeometric(" + std::to_string(n) + "," + std::to_string(k) + "," + std::to_string(s) + ")",
            pmf, t, pmf, t, true);
      }
  for (int n = 1; n <= 64; ++n) {
    const LatticePMF walk = make_walk_pmf(n);
    const SteinCoefficient tw(walk.offset(), std::vector<Rational>(walk.size(), frac(n, 2)));
    add("binomial(" + std::to_string(4 * n) + ",1/2) vs scaled walk(" + std::to_string(n) + ")",
        make_centered_binomial(4 * n, Rational(1, 2)), stein_binomial(4 * n, Rational(1, 2)), perturb_scale(walk),
        stein_scale_perturb(tw, walk), false);
  }
  for (int n = 2; n <= 40; n += 2)
    for (int j = 1; j < n; j += 3) {
      const Rational p = frac(j, n);
      add("binomial(" + std::to_string(n) + "," + to_string(p) + ") vs binomial(" + std::to_string(n) + ",1/2)",
          make_centered_binomial(n, p), stein_binomial(n, p), make_centered_binomial(n, Rational(1, 2)),
          stein_binomial(n, Rational(1, 2)), false);
    }
  for (int n = 6; n <= 64; n += 2) {
    const int k = n / 2;
    const LatticePMF v = make_hypergeometric(n, k, 0, HypergeoForm::Centered);
    add("hypergeometric(" + std::to_string(4 * n) + "," + std::to_string(4 * k) + ",0) vs scaled hypergeometric(" +
            std::to_string(n) + "," + std::to_string(k) + ",0)",
        make_hypergeometric(4 * n, 4 * k, 0, HypergeoForm::Centered), stein_hypergeometric(4 * n, 4 * k, 0),
        perturb_scale(v), stein_scale_perturb(stein_hypergeometric(n, k, 0), v), false);
    for (int s = 2; s < n; s += 4)
      add("hypergeometric(" + std::to_string(n) + "," + std::to_string(k) + ",0) vs hypergeometric(" +
              std::to_string(n) + "," + std::to_string(k) + "," + std::to_string(s) + ")",
          v, stein_hypergeometric(n, k, 0), make_hypergeometric(n, k, s, HypergeoForm::Centered),
          stein_hypergeometric(n, k, s), false);
  }
  return out;
}

}  // namespace

CrossCheckReport cross_validate_stein(int n_max, Exec exec) {
  if (n_max < 2) throw InvalidParameter("n_max must be at least 2");
  auto parts = map_range(exec, 2, n_max + 1, [](long n) {
    Tally t;
    for (const auto& law : binomial_laws(static_cast<int>(n))) check_law(law, t);
    for (const auto& law : hypergeo_laws(static_cast<int>(n))) check_law(law, t);
    return t;
  });
  std::vector<Law> small;
  for (int n = 2; n <= std::min(n_max, 6); ++n) {
    for (auto& law : binomial_laws(n)) small.push_back(std::move(law));
    for (auto& law : hypergeo_laws(n)) small.push_back(std::move(law));
  }
  auto conv = map_range(exec, 0, static_cast<long>(small.size()), [&](long i) {
    Tally t;
    for (std::size_t j = static_cast<std::size_t>(i); j < small.size(); ++j)
      check_convolution(small[static_cast<std::size_t>(i)], small[j], t);
    return t;
  });
  Tally total;
  for (auto& t : parts) total.merge(std::move(t));
  for (auto& t : conv) total.merge(std::move(t));

  CrossCheckReport r;
  r.n_max = n_max;
  r.laws = total.laws;
  r.closed_form_checks = total.closed;
  r.convolution_checks = total.conv;
  r.scaling_checks = total.scale;
  r.mismatch_count = total.bad;
  r.mismatches = std::move(total.notes);
  r.pass = total.bad == 0;
  return r;
}

StationaryCorpus check_stationary_corpus(std::size_t max_states, Exec exec) {
  const auto specs = corpus(max_states);
  StationaryCorpus out;
  out.max_states = max_states;
  out.cases = map_range(exec, 0, static_cast<long>(specs.size()), [&](long i) {
    const auto& c = specs[static_cast<std::size_t>(i)];
    return solve_case(c.label, c.tx, c.px, c.ty, c.py, c.identical);
  });
  out.pass = !out.cases.empty();
  for (const auto& c : out.cases) out.pass = out.pass && c.pass;
  return out;
}

}  // namespace kmt::stein
