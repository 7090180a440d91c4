#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "tlc/certificates.hpp"

namespace tlc {

inline constexpr double kQpFeasTol = 1e-8;
inline constexpr double kQpActivityTol = 1e-10;
inline constexpr int kQpMaxIter = 50;

// min 0.5 x'Hx + c'x over rows and box; rows are already lifted to the full
// decision vector (controls plus optional slack)
struct QuadraticProgram {
  Mat hessian;
  Vec linear;
  std::vector<HalfspaceRow> rows;
  Vec lower;  // -inf entries disable
  Vec upper;  // +inf entries disable

  int dim() const { return static_cast<int>(linear.size()); }

  void validate() const {
    const int d = dim();
    if (hessian.rows() != d || hessian.cols() != d)
      throw std::invalid_argument("qp: hessian shape mismatch");
    if (lower.size() != d || upper.size() != d)
      throw std::invalid_argument("qp: box shape mismatch");
    for (const auto& r : rows)
      if (r.a.size() != d) throw std::invalid_argument("qp: row dimension mismatch");
    // the active-set warm start below relies on a diagonal hessian
    for (int i = 0; i < d; ++i) {
      if (hessian(i, i) <= 0.0)
        throw std::invalid_argument("qp: hessian diagonal must be positive");
      for (int j = 0; j < d; ++j)
        if (i != j && hessian(i, j) != 0.0)
          throw std::invalid_argument("qp: hessian must be diagonal");
    }
  }
};

enum class QPStatus { Optimal, Infeasible };

struct QPSolution {
  Vec point;
  double objective = 0.0;
  std::vector<int> active_set;  // indices into QuadraticProgram::rows
  QPStatus status = QPStatus::Infeasible;
  Vec lambda_rows;    // multipliers per general row (0 when inactive)
  Vec lambda_lower;   // per-coordinate box multipliers
  Vec lambda_upper;
  int iterations = 0;
};

namespace detail {

struct CanonicalRow {
  Vec w;        // w.x >= rhs
  double rhs;
  int kind;     // 0 general, 1 lower bound, 2 upper bound
  int ref;      // row index or coordinate
};

inline std::vector<CanonicalRow> canonical_rows(const QuadraticProgram& qp) {
  std::vector<CanonicalRow> rows;
  const int d = qp.dim();
  for (size_t i = 0; i < qp.rows.size(); ++i) {
    const auto& r = qp.rows[i];
    Vec w = r.a.transpose();
    double rhs = -r.b;
    if (r.sense == RowSense::LEQ) {
      w = -w;
      rhs = r.b;
    }
    rows.push_back({std::move(w), rhs, 0, static_cast<int>(i)});
  }
  for (int i = 0; i < d; ++i) {
    if (std::isfinite(qp.lower[i])) {
      Vec e = Vec::Zero(d);
      e[i] = 1.0;
      rows.push_back({std::move(e), qp.lower[i], 1, i});
    }
  }
  for (int i = 0; i < d; ++i) {
    if (std::isfinite(qp.upper[i])) {
      Vec e = Vec::Zero(d);
      e[i] = -1.0;
      rows.push_back({std::move(e), -qp.upper[i], 2, i});
    }
  }
  return rows;
}

}  // namespace detail

// Dual active-set iteration: start at the box-clamped unconstrained minimum
// (an exact KKT point of the box-only problem for a diagonal hessian), then
// repeatedly pull in the lowest-index violated row, dropping blocking
// constraints whose multipliers hit zero. Infeasibility surfaces as an
// unbounded dual step.
inline QPSolution solve(const QuadraticProgram& qp) {
  qp.validate();
  const int d = qp.dim();
  const Vec hd = qp.hessian.diagonal();
  const auto rows = detail::canonical_rows(qp);
  const int m = static_cast<int>(rows.size());

  QPSolution sol;
  sol.lambda_rows = Vec::Zero(static_cast<Eigen::Index>(qp.rows.size()));
  sol.lambda_lower = Vec::Zero(d);
  sol.lambda_upper = Vec::Zero(d);

  Vec x = -qp.linear.cwiseQuotient(hd);
  std::vector<int> W;       // indices into rows
  std::vector<double> lam;  // multipliers parallel to W
  for (int i = 0; i < d; ++i) {
    if (std::isfinite(qp.lower[i]) && x[i] < qp.lower[i]) {
      x[i] = qp.lower[i];
      for (int j = 0; j < m; ++j)
        if (rows[j].kind == 1 && rows[j].ref == i) {
          W.push_back(j);
          lam.push_back(hd[i] * x[i] + qp.linear[i]);
          break;
        }
    } else if (std::isfinite(qp.upper[i]) && x[i] > qp.upper[i]) {
      x[i] = qp.upper[i];
      for (int j = 0; j < m; ++j)
        if (rows[j].kind == 2 && rows[j].ref == i) {
          W.push_back(j);
          lam.push_back(-(hd[i] * x[i] + qp.linear[i]));
          break;
        }
    }
  }

  const double inf = std::numeric_limits<double>::infinity();
  for (int iter = 0; iter < kQpMaxIter; ++iter) {
    sol.iterations = iter;
    int p = -1;
    for (int j = 0; j < m; ++j) {
      if (std::find(W.begin(), W.end(), j) != W.end()) continue;
      if (rows[j].w.dot(x) - rows[j].rhs < -kQpFeasTol) {
        p = j;
        break;
      }
    }
    if (p < 0) {
      // optimal: snap coordinates held by active box rows to their bounds
      for (size_t k = 0; k < W.size(); ++k) {
        const auto& r = rows[W[k]];
        if (r.kind == 1) x[r.ref] = qp.lower[r.ref];
        if (r.kind == 2) x[r.ref] = qp.upper[r.ref];
        if (r.kind == 0)
          sol.lambda_rows[r.ref] = lam[k];
        else if (r.kind == 1)
          sol.lambda_lower[r.ref] = lam[k];
        else
          sol.lambda_upper[r.ref] = lam[k];
        if (r.kind == 0) sol.active_set.push_back(r.ref);
      }
      // roundoff can leave an inactive coordinate a hair outside its bound;
      // callers rely on returned points lying in the box exactly
      for (int i = 0; i < d; ++i) {
        if (std::isfinite(qp.lower[i]) && x[i] < qp.lower[i]) x[i] = qp.lower[i];
        if (std::isfinite(qp.upper[i]) && x[i] > qp.upper[i]) x[i] = qp.upper[i];
      }
      std::sort(sol.active_set.begin(), sol.active_set.end());
      sol.point = x;
      sol.objective = 0.5 * x.dot(qp.hessian * x) + qp.linear.dot(x);
      sol.status = QPStatus::Optimal;
      return sol;
    }

    const Vec& np = rows[p].w;
    double lam_p = 0.0;
    bool added = false;
    for (int guard = 0; guard < kQpMaxIter && !added; ++guard) {
      const int k = static_cast<int>(W.size());
      Vec r_dual(k);
      Vec z(d);
      if (k > 0) {
        Mat N(d, k);
        for (int j = 0; j < k; ++j) N.col(j) = rows[W[j]].w;
        const Mat Ninv = N.array().colwise() / hd.array();  // H^{-1} N
        const Mat M = N.transpose() * Ninv;
        r_dual = M.ldlt().solve(N.transpose() * (np.cwiseQuotient(hd)));
        z = (np - N * r_dual).cwiseQuotient(hd);
      } else {
        z = np.cwiseQuotient(hd);
      }

      double t1 = inf;
      int kdrop = -1;
      for (int j = 0; j < k; ++j) {
        if (r_dual[j] > kQpActivityTol) {
          const double cand = lam[j] / r_dual[j];
          if (cand < t1 - 1e-15) {
            t1 = cand;
            kdrop = j;
          }
        }
      }
      const double zn = np.dot(z);
      const double t2 = (zn > kQpActivityTol) ? (rows[p].rhs - np.dot(x)) / zn : inf;
      if (!std::isfinite(t1) && !std::isfinite(t2)) {
        sol.status = QPStatus::Infeasible;
        sol.point = x;
        return sol;
      }
      const double t = std::min(t1, t2);
      if (std::isfinite(t2)) x += t * z;
      for (int j = 0; j < k; ++j) lam[j] -= t * r_dual[j];
      lam_p += t;
      if (t == t2 && std::isfinite(t2)) {
        W.push_back(p);
        lam.push_back(lam_p);
        added = true;
        continue;
      }
      W.erase(W.begin() + kdrop);
      lam.erase(lam.begin() + kdrop);
    }
    if (!added) throw std::runtime_error("qp solve: inner iteration cap exceeded");
  }
  throw std::runtime_error("qp solve: iteration cap exceeded");
}

// max of stationarity, primal feasibility, multiplier sign, and
// complementary-slackness residuals
inline double kkt_residual(const QuadraticProgram& qp, const QPSolution& sol) {
  if (sol.status != QPStatus::Optimal)
    throw std::invalid_argument("kkt_residual: solution not optimal");
  const auto rows = detail::canonical_rows(qp);
  const Vec& x = sol.point;
  Vec grad = qp.hessian * x + qp.linear;
  double res = 0.0;
  for (const auto& r : rows) {
    double lam = 0.0;
    if (r.kind == 0)
      lam = sol.lambda_rows[r.ref];
    else if (r.kind == 1)
      lam = sol.lambda_lower[r.ref];
    else
      lam = sol.lambda_upper[r.ref];
    const double slackness = r.w.dot(x) - r.rhs;
    res = std::max(res, -slackness);            // primal violation
    res = std::max(res, -lam);                  // sign
    res = std::max(res, std::abs(lam * slackness));
    grad -= lam * r.w;
  }
  res = std::max(res, grad.cwiseAbs().maxCoeff());
  return res;
}

}  // namespace tlc
