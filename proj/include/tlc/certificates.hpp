#pragma once

#include <complex>
#include <stdexcept>
#include <vector>

#include "tlc/lie_chain.hpp"

namespace tlc {

enum class RowSense { GEQ, LEQ };

// affine constraint row: a.u + b {>=,<=} 0, optionally relaxed by slack
// (a.u + b <= delta for slack-coupled LEQ rows)
struct HalfspaceRow {
  RowVec a;
  double b = 0.0;
  RowSense sense = RowSense::GEQ;
  bool slack_coupled = false;
};

struct ComplexRootPair {
  std::complex<double> p1;
  std::complex<double> p2;
};

// linear class-K coefficients, one per order
struct ClassKSpec {
  std::vector<double> p;

  void validate() const {
    if (p.empty()) throw std::invalid_argument("ClassKSpec: needs at least one coefficient");
    for (double v : p)
      if (v <= 0.0) throw std::invalid_argument("ClassKSpec: coefficients must be positive");
  }
};

// [dt^k / k!] for k = 0..m
inline std::vector<double> taylor_coefficients(int m, double dt) {
  if (m < 1) throw std::invalid_argument("taylor_coefficients: m must be >= 1");
  if (dt <= 0.0) throw std::invalid_argument("taylor_coefficients: dt must be positive");
  std::vector<double> c(m + 1);
  c[0] = 1.0;
  for (int k = 1; k <= m; ++k) c[k] = c[k - 1] * dt / k;
  return c;
}

namespace detail {

// row constant term b = sum_k c[k] * lf[k] for ascending coefficients c with c[m] = 1
inline double row_constant(const ChainEval& e, const std::vector<double>& c) {
  double b = 0.0;
  for (size_t k = 0; k < c.size(); ++k) b += c[k] * e.lf[k];
  return b;
}

// ascending coefficients of prod_i (s + p_i)
inline std::vector<double> poly_from_poles(const std::vector<double>& poles) {
  std::vector<double> c{1.0};
  for (double p : poles) {
    std::vector<double> next(c.size() + 1, 0.0);
    for (size_t i = 0; i < c.size(); ++i) {
      next[i] += p * c[i];
      next[i + 1] += c[i];
    }
    c = std::move(next);
  }
  return c;
}

// normalized ZOH Taylor row coefficients: m!/(k! dt^{m-k}) for k = 0..m.
// The raw inequality carries dt^k/k!; multiplying through by m!/dt^m makes
// the u-coefficient exactly lglf and keeps QP scaling uniform across dt.
inline std::vector<double> taylor_row_coefficients(int m, double dt) {
  const auto tc = taylor_coefficients(m, dt);
  std::vector<double> c(m + 1);
  const double norm = 1.0 / tc[m];  // m!/dt^m
  for (int k = 0; k <= m; ++k) c[k] = tc[k] * norm;
  return c;
}

}  // namespace detail

// hard safety row: lglf.u + sum_k (m!/(k! dt^{m-k})) lf_k >= 0
inline HalfspaceRow zoh_tlc_row(const LieDerivativeChain& chain, const Vec& x, double dt) {
  const ChainEval e = eval_chain(chain, x);
  HalfspaceRow row;
  row.a = e.lglf;
  row.b = detail::row_constant(e, detail::taylor_row_coefficients(chain.m, dt));
  row.sense = RowSense::GEQ;
  row.slack_coupled = false;
  return row;
}

// HOCBF row with linear class-K functions: the recursive psi expansion
// collapses to the ascending coefficients of prod_i (s + p_i)
inline HalfspaceRow hocbf_row(const LieDerivativeChain& chain, const Vec& x,
                              const ClassKSpec& spec) {
  spec.validate();
  if (static_cast<int>(spec.p.size()) != chain.m)
    throw std::invalid_argument("hocbf_row: need one class-K coefficient per order");
  const ChainEval e = eval_chain(chain, x);
  HalfspaceRow row;
  row.a = e.lglf;
  row.b = detail::row_constant(e, detail::poly_from_poles(spec.p));
  row.sense = RowSense::GEQ;
  row.slack_coupled = false;
  return row;
}

// slack-relaxed stability row: lglf.u + sum_k (m!/(k! dt^{m-k})) lf_k <= delta
inline HalfspaceRow zoh_tls_row(const LieDerivativeChain& chain, const Vec& x, double dt) {
  HalfspaceRow row = zoh_tlc_row(chain, x, dt);
  row.sense = RowSense::LEQ;
  row.slack_coupled = true;
  return row;
}

// CLF row for m=1 chains: L_gV.u + L_fV + c3 V <= delta; c3 = 1/dt recovers
// the first-order slack row above
inline HalfspaceRow clf_row(const LieDerivativeChain& chain, const Vec& x, double c3) {
  if (chain.m != 1) throw std::invalid_argument("clf_row: chain must have m = 1");
  if (c3 <= 0.0) throw std::invalid_argument("clf_row: c3 must be positive");
  const ChainEval e = eval_chain(chain, x);
  HalfspaceRow row;
  row.a = e.lglf;
  row.b = e.lf[1] + c3 * e.lf[0];
  row.sense = RowSense::LEQ;
  row.slack_coupled = true;
  return row;
}

// characteristic roots of the normalized second-order Taylor row:
// s^2 + (2/dt)s + 2/dt^2 has the conjugate pair (1 -+ i)/dt
inline ComplexRootPair complex_roots(double dt) {
  if (dt <= 0.0) throw std::invalid_argument("complex_roots: dt must be positive");
  return {std::complex<double>(1.0, -1.0) / dt, std::complex<double>(1.0, 1.0) / dt};
}

// complex-plane diagnostic psi_1 = L_f h + p1 h with p1 = (1-i)/dt
inline std::complex<double> psi1_trace(const LieDerivativeChain& chain, const Vec& x,
                                       double dt) {
  if (chain.m < 2) throw std::invalid_argument("psi1_trace: chain must have m >= 2");
  const double h = chain.lf[0](x);
  const double lfh = chain.lf[1](x);
  return std::complex<double>(lfh, 0.0) + complex_roots(dt).p1 * h;
}

// real-pole analogue (p1 = 1/dt): stays on the real axis by construction
inline std::complex<double> psi1_trace_real(const LieDerivativeChain& chain, const Vec& x,
                                            double dt) {
  if (chain.m < 2) throw std::invalid_argument("psi1_trace_real: chain must have m >= 2");
  if (dt <= 0.0) throw std::invalid_argument("psi1_trace_real: dt must be positive");
  const double h = chain.lf[0](x);
  const double lfh = chain.lf[1](x);
  return {lfh + h / dt, 0.0};
}

}  // namespace tlc
