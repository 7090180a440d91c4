#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "tlc/system.hpp"

namespace tlc {

// Lie-derivative chain for a scalar function h with relative degree m:
// lf[k] evaluates L_f^k h for k = 0..m (lf[0] is h itself), and lglf
// evaluates the control-coefficient row L_g L_f^{m-1} h.
struct LieDerivativeChain {
  int m = 1;
  std::string name;
  std::vector<std::function<double(const Vec&)>> lf;  // size m+1
  std::function<RowVec(const Vec&)> lglf;

  void validate() const {
    if (m < 1) throw std::invalid_argument("chain '" + name + "': m must be >= 1");
    if (static_cast<int>(lf.size()) != m + 1)
      throw std::invalid_argument("chain '" + name + "': expected m+1 lf evaluators");
  }
};

struct ChainEval {
  std::vector<double> lf;  // values lf[0..m]
  RowVec lglf;
};

inline ChainEval eval_chain(const LieDerivativeChain& chain, const Vec& x) {
  ChainEval e;
  e.lf.reserve(chain.lf.size());
  for (const auto& fn : chain.lf) {
    double v = fn(x);
    if (!std::isfinite(v))
      throw std::runtime_error("chain '" + chain.name + "': non-finite Lie derivative");
    e.lf.push_back(v);
  }
  e.lglf = chain.lglf(x);
  if (!e.lglf.allFinite())
    throw std::runtime_error("chain '" + chain.name + "': non-finite lglf");
  return e;
}

// Validates hand-coded Lie derivatives against central finite differences:
// each lf[k+1] against the directional derivative of lf[k] along f, and
// lglf against the u-sensitivity of lf[m-1]. Returns the worst relative
// error, with denominator max(|analytic|, 1) so near-zero entries do not
// blow up the ratio.
inline double finite_diff_chain_check(const ControlAffineSystem& sys,
                                      const LieDerivativeChain& chain, const Vec& x,
                                      const Vec& u, double eps = 1e-4) {
  if (eps <= 0.0) throw std::invalid_argument("finite_diff_chain_check: eps must be positive");
  chain.validate();
  auto rel = [](double got, double want) {
    return std::abs(got - want) / std::max(std::abs(want), 1.0);
  };
  double worst = 0.0;
  const Vec fx = sys.f(x);
  for (int k = 0; k + 1 <= chain.m; ++k) {
    const double plus = chain.lf[k](x + eps * fx);
    const double minus = chain.lf[k](x - eps * fx);
    const double fd = (plus - minus) / (2.0 * eps);
    worst = std::max(worst, rel(fd, chain.lf[k + 1](x)));
  }
  const Vec gu = sys.g(x) * u;
  const double plus = chain.lf[chain.m - 1](x + eps * gu);
  const double minus = chain.lf[chain.m - 1](x - eps * gu);
  const double fd = (plus - minus) / (2.0 * eps);
  const double analytic = (chain.lglf(x) * u).value();
  worst = std::max(worst, rel(fd, analytic));
  return worst;
}

}  // namespace tlc
