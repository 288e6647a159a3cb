#include <algorithm>
#include <array>
#include <cmath>

#include "kmt/errors.hpp"
#include "kmt/stein_markov.hpp"

namespace kmt::stein {

namespace {

struct Move {
  int di, dj;
  const std::vector<Rational> JointChainRates::*rate;
};

constexpr std::array<Move, 6> kMoves{{{1, 1, &JointChainRates::up_up},
                                      {-1, -1, &JointChainRates::down_down},
                                      {1, 0, &JointChainRates::up_stay},
                                      {-1, 0, &JointChainRates::down_stay},
                                      {0, 1, &JointChainRates::stay_up},
                                      {0, -1, &JointChainRates::stay_down}}};

struct Edge {
  std::size_t to;
  int move;
};

std::vector<std::vector<Edge>> out_edges(const JointChainRates& r) {
  std::vector<std::vector<Edge>> g(r.nx * r.ny);
  for (std::size_t i = 0; i < r.nx; ++i)
    for (std::size_t j = 0; j < r.ny; ++j) {
      const std::size_t s = r.index(i, j);
      for (int m = 0; m < 6; ++m) {
        const auto& mv = kMoves[m];
        if (sgn((r.*mv.rate)[s]) == 0) continue;
        const long ni = static_cast<long>(i) + mv.di, nj = static_cast<long>(j) + mv.dj;
        if (ni < 0 || nj < 0 || ni >= static_cast<long>(r.nx) || nj >= static_cast<long>(r.ny))
          throw ModelViolation("positive rate leaves the grid");
        g[s].push_back({r.index(static_cast<std::size_t>(ni), static_cast<std::size_t>(nj)), m});
      }
    }
  return g;
}

// Iterative Tarjan; returns component id per vertex.
std::vector<std::size_t> strong_components(const std::vector<std::vector<Edge>>& g, std::size_t& count) {
  const std::size_t N = g.size(), none = static_cast<std::size_t>(-1);
  std::vector<std::size_t> index(N, none), low(N, 0), comp(N, none), stack;
  std::vector<char> on_stack(N, 0);
  std::vector<std::pair<std::size_t, std::size_t>> call;
  std::size_t next = 0;
  count = 0;
  for (std::size_t root = 0; root < N; ++root) {
    if (index[root] != none) continue;
    call.push_back({root, 0});
    index[root] = low[root] = next++;
    stack.push_back(root);
    on_stack[root] = 1;
    while (!call.empty()) {
      auto& [v, e] = call.back();
      if (e < g[v].size()) {
        const std::size_t w = g[v][e++].to;
        if (index[w] == none) {
          index[w] = low[w] = next++;
          stack.push_back(w);
          on_stack[w] = 1;
          call.push_back({w, 0});
        } else if (on_stack[w]) {
          low[v] = std::min(low[v], index[w]);
        }
        continue;
      }
      const std::size_t done = v;
      call.pop_back();
      if (!call.empty()) low[call.back().first] = std::min(low[call.back().first], low[done]);
      if (low[done] == index[done]) {
        std::size_t w;
        do {
          w = stack.back();
          stack.pop_back();
          on_stack[w] = 0;
          comp[w] = count;
        } while (w != done);
        ++count;
      }
    }
  }
  return comp;
}

template <class Scalar>
bool is_zero(const Scalar& x) {
  if constexpr (std::is_same_v<Scalar, Rational>)
    return sgn(x) == 0;
  else
    return x == 0;
}

// Grassmann-Taksar-Heyman elimination on a generator whose off-diagonal entries lie
// within `band` of the diagonal. rows[r] lists (column, rate) pairs.
template <class Scalar>
std::vector<Scalar> gth_banded(const std::vector<std::vector<std::pair<std::size_t, Scalar>>>& rows,
                               std::size_t band) {
  const std::size_t N = rows.size(), W = 2 * band + 1;
  std::vector<Scalar> P(N * W);
  auto at = [&](std::size_t r, std::size_t c) -> Scalar& { return P[r * W + (c + band - r)]; };
  for (std::size_t r = 0; r < N; ++r)
    for (const auto& [c, v] : rows[r]) at(r, c) += v;
  for (std::size_t k = N; k-- > 1;) {
    const std::size_t lo = k > band ? k - band : 0;
    Scalar s = 0;
    for (std::size_t c = lo; c < k; ++c) s += at(k, c);
    if (is_zero(s)) throw ModelViolation("recurrent class is not irreducible");
    for (std::size_t i = lo; i < k; ++i) {
      Scalar& pik = at(i, k);
      if (is_zero(pik)) continue;
      pik /= s;
      for (std::size_t j = lo; j < k; ++j) {
        if (j == i) continue;
        const Scalar& pkj = at(k, j);
        if (!is_zero(pkj)) at(i, j) += pik * pkj;
      }
    }
  }
  std::vector<Scalar> pi(N);
  pi[0] = 1;
  Scalar total = 1;
  for (std::size_t k = 1; k < N; ++k) {
    const std::size_t lo = k > band ? k - band : 0;
    Scalar v = 0;
    for (std::size_t i = lo; i < k; ++i)
      if (!is_zero(at(i, k))) v += pi[i] * at(i, k);
    pi[k] = v;
    total += v;
  }
  for (auto& v : pi) v /= total;
  return pi;
}

}  // namespace

StationaryCoupling solve_stationary(const JointChainRates& r, const SolveOptions& options) {
  const std::size_t N = r.nx * r.ny;
  if (N == 0) throw InvalidParameter("empty product grid");
  auto g = out_edges(r);
  std::size_t ncomp = 0;
  auto comp = strong_components(g, ncomp);
  std::vector<char> closed(ncomp, 1);
  for (std::size_t s = 0; s < N; ++s)
    for (const auto& e : g[s])
      if (comp[e.to] != comp[s]) closed[comp[s]] = 0;

  StationaryCoupling sc;
  sc.nx = r.nx;
  sc.ny = r.ny;
  sc.x_offset = r.x_offset;
  sc.y_offset = r.y_offset;
  sc.h_shift = Rational(r.x_offset - r.y_offset).get_d();
  sc.closed_classes = static_cast<std::size_t>(std::count(closed.begin(), closed.end(), char{1}));
  if (sc.closed_classes != 1) throw ModelViolation("joint chain has more than one closed class");

  auto median = [](const std::vector<Rational>& m) {
    Rational c = 0;
    for (std::size_t i = 0; i < m.size(); ++i) {
      c += m[i];
      if (2 * c >= 1) return i;
    }
    return m.size() - 1;
  };
  const std::size_t anchor = r.index(median(r.x_mass), median(r.y_mass));
  const std::size_t cls = comp[anchor];
  if (!closed[cls]) throw ModelViolation("median pair is not recurrent");

  // Order class states with the shorter axis inner so the generator is banded.
  const bool j_inner = r.ny <= r.nx;
  std::vector<std::size_t> order;
  if (j_inner) {
    for (std::size_t s = 0; s < N; ++s)
      if (comp[s] == cls) order.push_back(s);
  } else {
    for (std::size_t j = 0; j < r.ny; ++j)
      for (std::size_t i = 0; i < r.nx; ++i)
        if (comp[r.index(i, j)] == cls) order.push_back(r.index(i, j));
  }
  const std::size_t M = order.size();
  const std::size_t none = static_cast<std::size_t>(-1);
  std::vector<std::size_t> pos(N, none);
  for (std::size_t p = 0; p < M; ++p) pos[order[p]] = p;

  std::vector<std::vector<Rational>> exact_rates;
  std::vector<std::vector<std::pair<std::size_t, double>>> rows(M);
  std::size_t band = 0;
  for (std::size_t p = 0; p < M; ++p) {
    const std::size_t s = order[p];
    for (const auto& e : g[s]) {
      const std::size_t q = pos[e.to];
      band = std::max(band, q > p ? q - p : p - q);
      rows[p].push_back({q, (r.*kMoves[e.move].rate)[s].get_d()});
    }
  }
  auto pi = gth_banded<double>(rows, band);

  sc.gamma.assign(N, 0.0);
  sc.in_class.assign(N, 0);
  sc.class_size = M;
  for (std::size_t p = 0; p < M; ++p) {
    sc.gamma[order[p]] = pi[p];
    sc.in_class[order[p]] = 1;
  }

  if (M <= options.exact_limit) {
    std::vector<std::vector<std::pair<std::size_t, Rational>>> qrows(M);
    for (std::size_t p = 0; p < M; ++p)
      for (const auto& e : g[order[p]]) qrows[p].push_back({pos[e.to], (r.*kMoves[e.move].rate)[order[p]]});
    auto exact = gth_banded<Rational>(qrows, band);
    std::vector<Rational> dense(N);
    double diff = 0.0;
    for (std::size_t p = 0; p < M; ++p) {
      diff = std::max(diff, std::abs(exact[p].get_d() - pi[p]));
      dense[order[p]] = std::move(exact[p]);
    }
    sc.exact_gamma = std::move(dense);
    sc.exact_vs_float = diff;
  }

  // balance residual: inflow minus outflow per class state
  std::vector<double> flow(N, 0.0);
  for (std::size_t p = 0; p < M; ++p) {
    const std::size_t s = order[p];
    for (const auto& [q, rate] : rows[p]) {
      flow[order[q]] += pi[p] * rate;
      flow[s] -= pi[p] * rate;
    }
  }
  for (std::size_t s = 0; s < N; ++s) sc.residual = std::max(sc.residual, std::abs(flow[s]));

  std::vector<double> mx(r.nx, 0.0), my(r.ny, 0.0);
  for (std::size_t i = 0; i < r.nx; ++i)
    for (std::size_t j = 0; j < r.ny; ++j) {
      mx[i] += sc.gamma[r.index(i, j)];
      my[j] += sc.gamma[r.index(i, j)];
    }
  for (std::size_t i = 0; i < r.nx; ++i)
    sc.marginal_error = std::max(sc.marginal_error, std::abs(mx[i] - r.x_mass[i].get_d()));
  for (std::size_t j = 0; j < r.ny; ++j)
    sc.marginal_error = std::max(sc.marginal_error, std::abs(my[j] - r.y_mass[j].get_d()));

  sc.q.resize(N);
  for (std::size_t s = 0; s < N; ++s) sc.q[s] = r.Q[s].get_d();
  return sc;
}

}  // namespace kmt::stein
