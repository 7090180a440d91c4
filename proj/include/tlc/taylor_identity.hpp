#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace tlc {

namespace detail {

// Fornberg's recurrence: weights of derivatives 0..m at point z over grid
// nodes x (any spacing). Returns (m+1) x x.size() weight table.
inline std::vector<std::vector<double>> fd_weights(double z, const std::vector<double>& x,
                                                   int m) {
  const int n = static_cast<int>(x.size()) - 1;
  std::vector<std::vector<double>> c(m + 1, std::vector<double>(n + 1, 0.0));
  double c1 = 1.0;
  double c4 = x[0] - z;
  c[0][0] = 1.0;
  for (int i = 1; i <= n; ++i) {
    const int mn = std::min(i, m);
    double c2 = 1.0;
    double c5 = c4;
    c4 = x[i] - z;
    for (int j = 0; j <= i - 1; ++j) {
      const double c3 = x[i] - x[j];
      c2 *= c3;
      if (j == i - 1) {
        for (int k = mn; k >= 1; --k)
          c[k][i] = c1 * (k * c[k - 1][i - 1] - c5 * c[k][i - 1]) / c2;
        c[0][i] = -c1 * c5 * c[0][i - 1] / c2;
      }
      for (int k = mn; k >= 1; --k) c[k][j] = (c4 * c[k][j] - k * c[k - 1][j]) / c3;
      c[0][j] = c4 * c[0][j] / c3;
    }
    c1 = c2;
  }
  return c;
}

// order-k derivative of uniformly sampled values at sample index i,
// using a k+3 point stencil clamped to the grid
inline double sampled_derivative(const std::vector<double>& h, double dx, int i, int k) {
  const int n = static_cast<int>(h.size());
  const int npts = std::min(n, k + 3);
  int start = std::clamp(i - npts / 2, 0, n - npts);
  std::vector<double> nodes(npts);
  for (int j = 0; j < npts; ++j) nodes[j] = (start + j - i) * dx;
  const auto w = fd_weights(0.0, nodes, k);
  double d = 0.0;
  for (int j = 0; j < npts; ++j) d += w[k][j] * h[start + j];
  return d;
}

}  // namespace detail

struct TaylorReport {
  double lhs = 0.0;              // h(t)
  double rhs_series_part = 0.0;  // sum_{k<m} h^(k)(t0) (t-t0)^k / k!
  double remainder_exact = 0.0;  // lhs - series
  double remainder_quad = 0.0;   // trapezoid of integral form
  double residual = 0.0;         // |remainder_exact - remainder_quad|
  double xi_lo = 0.0, xi_hi = 0.0;  // bracket for the mean-value point
  bool xi_degenerate = false;       // residual flat: every xi in (t0,t) works
};

// Checks the order-m Taylor expansion with integral remainder against the
// sampled h, and brackets a mean-value point xi where
// h^(m)(xi) (t-t0)^m / m! reproduces the remainder.
inline TaylorReport verify_taylor_identity(const std::vector<double>& samples, double t0,
                                           double t, int m) {
  const int n = static_cast<int>(samples.size());
  if (m < 1) throw std::invalid_argument("verify_taylor_identity: m must be >= 1");
  if (n < m + 2) throw std::invalid_argument("verify_taylor_identity: too few samples");
  if (!(t > t0)) throw std::invalid_argument("verify_taylor_identity: need t > t0");
  const double dx = (t - t0) / (n - 1);

  TaylorReport rep;
  rep.lhs = samples[n - 1];
  double fact = 1.0;
  double pw = 1.0;
  rep.rhs_series_part = samples[0];
  for (int k = 1; k < m; ++k) {
    fact *= k;
    pw *= (t - t0);
    rep.rhs_series_part += detail::sampled_derivative(samples, dx, 0, k) * pw / fact;
  }
  rep.remainder_exact = rep.lhs - rep.rhs_series_part;

  // integral remainder: trapezoid of h^(m)(tau) (t-tau)^(m-1)/(m-1)!
  double factm1 = 1.0;
  for (int k = 2; k < m; ++k) factm1 *= k;
  std::vector<double> hm(n), integrand(n);
  for (int i = 0; i < n; ++i) {
    hm[i] = detail::sampled_derivative(samples, dx, i, m);
    const double tau = t0 + i * dx;
    integrand[i] = hm[i] * std::pow(t - tau, m - 1) / factm1;
  }
  double quad = 0.0;
  for (int i = 0; i + 1 < n; ++i) quad += 0.5 * (integrand[i] + integrand[i + 1]) * dx;
  rep.remainder_quad = quad;
  rep.residual = std::abs(rep.remainder_exact - rep.remainder_quad);

  // xi bracket via sign change of h^(m)(tau) (t-t0)^m/m! - remainder
  double factm = factm1 * (m > 1 ? m : 1);
  const double lead = std::pow(t - t0, m) / factm;
  std::vector<double> psi(n);
  double psi_scale = 0.0;
  for (int i = 0; i < n; ++i) {
    psi[i] = hm[i] * lead - rep.remainder_exact;
    psi_scale = std::max(psi_scale, std::abs(psi[i]));
  }
  const double flat_tol = 1e-9 * std::max(1.0, std::abs(rep.remainder_exact));
  if (psi_scale <= flat_tol) {
    rep.xi_lo = t0;
    rep.xi_hi = t;
    rep.xi_degenerate = true;
    return rep;
  }
  int found = -1;
  for (int i = 0; i + 1 < n; ++i) {
    if (psi[i] == 0.0 || psi[i] * psi[i + 1] < 0.0) {
      found = i;
      break;
    }
  }
  if (found < 0) {
    // no crossing: tightest cell around the smallest |psi|
    int best = 0;
    for (int i = 1; i < n; ++i)
      if (std::abs(psi[i]) < std::abs(psi[best])) best = i;
    found = std::clamp(best - 1, 0, n - 2);
  }
  rep.xi_lo = t0 + found * dx;
  rep.xi_hi = t0 + (found + 1) * dx;
  return rep;
}

}  // namespace tlc
