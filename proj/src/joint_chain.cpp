#include "kmt/errors.hpp"
#include "kmt/stein_markov.hpp"

namespace kmt::stein {

namespace {
Rational positive_part(const Rational& x) { return sgn(x) > 0 ? x : Rational(0); }
}  // namespace

JointChainRates build_joint_chain(const SteinCoefficient& tx, const LatticePMF& px, const SteinCoefficient& ty,
                                  const LatticePMF& py) {
  if (!valid_pair(tx, px) || !valid_pair(ty, py)) throw InvalidParameter("joint chain needs valid Stein pairs");
  JointChainRates r;
  r.nx = px.size();
  r.ny = py.size();
  r.x_offset = px.offset();
  r.y_offset = py.offset();
  r.tx = tx.values();
  r.ty = ty.values();
  r.x_mass = px.masses();
  r.y_mass = py.masses();
  const std::size_t N = r.nx * r.ny;
  for (auto* v : {&r.up_up, &r.down_down, &r.up_stay, &r.down_stay, &r.stay_up, &r.stay_down, &r.A, &r.B, &r.Q})
    v->resize(N);
  for (std::size_t i = 0; i < r.nx; ++i) {
    Rational x = r.x_atom(i);
    Rational lp = r.tx[i] - x, lm = r.tx[i] + x;
    for (std::size_t j = 0; j < r.ny; ++j) {
      Rational y = r.y_atom(j);
      Rational mp = r.ty[j] - y, mm = r.ty[j] + y;
      if (sgn(lp) < 0 || sgn(lm) < 0 || sgn(mp) < 0 || sgn(mm) < 0) throw ModelViolation("negative chain rate");
      const std::size_t s = r.index(i, j);
      r.up_up[s] = lp < mp ? lp : mp;
      r.down_down[s] = lm < mm ? lm : mm;
      r.up_stay[s] = positive_part(lp - mp);
      r.stay_up[s] = positive_part(mp - lp);
      r.down_stay[s] = positive_part(lm - mm);
      r.stay_down[s] = positive_part(mm - lm);
      // half the drift of X - Y, and half the total rate of one-sided moves
      r.A[s] = (r.up_stay[s] - r.down_stay[s] - r.stay_up[s] + r.stay_down[s]) / 2;
      r.B[s] = (r.up_stay[s] + r.down_stay[s] + r.stay_up[s] + r.stay_down[s]) / 2;
      r.Q[s] = abs(r.ty[j] - r.tx[i]);
    }
  }
  return r;
}

}  // namespace kmt::stein
