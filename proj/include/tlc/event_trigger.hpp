#pragma once

#include <algorithm>
#include <cstdint>
#include <memory>
#include <sstream>
#include <vector>

#include "tlc/controller.hpp"

namespace tlc {

// Axis-aligned closed box around a trigger state. The loop keeps solving
// against bounds that are valid anywhere in the box, so the control can be
// held until the state actually leaves it.
struct StateBox {
  Vec center;
  Vec lower_offsets;
  Vec upper_offsets;

  void validate() const {
    const Eigen::Index n = center.size();
    if (lower_offsets.size() != n || upper_offsets.size() != n)
      throw std::invalid_argument("state box: offset dimensions must match center");
    if ((lower_offsets.array() < 0.0).any() || (upper_offsets.array() < 0.0).any())
      throw std::invalid_argument("state box: offsets must be nonnegative");
  }

  Vec lo() const { return center - lower_offsets; }
  Vec hi() const { return center + upper_offsets; }

  // Closed box: a state exactly on the boundary still counts as inside.
  bool contains(const Vec& x) const {
    if (x.size() != center.size())
      throw std::invalid_argument("state box: state dimension mismatch");
    return (x.array() >= lo().array()).all() && (x.array() <= hi().array()).all();
  }
};

inline bool detect_exit(const Vec& x, const StateBox& box) { return !box.contains(x); }

// Worst-case constraint row over a box: G.u + h_r >= 0 implies the exact
// row holds at every state in the box for sign-consistent u.
struct RobustRow {
  RowVec G;
  double h_r = 0.0;
};

inline int default_grid_per_dim(Eigen::Index n) { return n <= 2 ? 7 : 5; }

namespace detail {

// Golden-section scan for the minimizer of f on [a, b]. The boxes here are
// tiny and the chain members smooth, so a fixed iteration budget gets us to
// roughly sqrt(eps) bracket width, plenty below the 1e-9 acceptance margin.
template <class F>
double golden_section_min(F&& f, double a, double b, int iters = 80) {
  static const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double x1 = b - inv_phi * (b - a);
  double x2 = a + inv_phi * (b - a);
  double f1 = f(x1);
  double f2 = f(x2);
  for (int it = 0; it < iters && b - a > 1e-14 * (1.0 + std::abs(a) + std::abs(b)); ++it) {
    if (f1 <= f2) {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - inv_phi * (b - a);
      f1 = f(x1);
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + inv_phi * (b - a);
      f2 = f(x2);
    }
  }
  return f1 <= f2 ? x1 : x2;
}

// Cyclic coordinate descent from a seed point, staying inside the box.
// Only ever lowers the value, so stacking it on top of the grid minimum
// keeps the bound conservative while catching interior extrema the coarse
// grid straddles.
template <class F>
double coordinate_refine(F&& f, Vec y, const Vec& lo, const Vec& hi, int passes = 3) {
  const Eigen::Index n = y.size();
  double best = f(y);
  for (int pass = 0; pass < passes; ++pass) {
    for (Eigen::Index i = 0; i < n; ++i) {
      if (!(hi[i] > lo[i])) continue;
      auto line = [&](double v) {
        Vec z = y;
        z[i] = v;
        return f(z);
      };
      const double v = golden_section_min(line, lo[i], hi[i]);
      const double fv = line(v);
      if (fv < best) {
        best = fv;
        y[i] = v;
      }
    }
  }
  return best;
}

}  // namespace detail

// Worst-case row coefficients over the box: h_r minimizes the drift side of
// the holdable constraint, and each G_k takes the minimum (u_k >= 0) or
// maximum (u_k < 0) of the input coefficient so that G_k u_k lower-bounds
// the true contribution. Uniform grid with corners, then a deterministic
// coordinate golden-section polish from the best grid points so interior
// extrema cannot slip between grid lines.
inline RobustRow robust_bounds(const LieDerivativeChain& chain, const StateBox& box, double dt,
                               const Vec& u_sign, int grid_per_dim) {
  chain.validate();
  box.validate();
  if (dt <= 0.0) throw std::invalid_argument("robust_bounds: dt must be positive");
  if (grid_per_dim < 2) throw std::invalid_argument("robust_bounds: grid_per_dim must be >= 2");
  const Eigen::Index n = box.center.size();
  const Vec lo = box.lo();
  const Vec hi = box.hi();
  const std::vector<double> coeff = detail::taylor_row_coefficients(chain.m, dt);

  auto drift = [&](const Vec& y) {
    double s = 0.0;
    for (int k = 0; k <= chain.m; ++k) s += coeff[static_cast<size_t>(k)] * chain.lf[static_cast<size_t>(k)](y);
    if (!std::isfinite(s)) throw std::runtime_error("robust_bounds: non-finite chain value");
    return s;
  };

  const Eigen::Index q = chain.lglf(box.center).size();
  if (u_sign.size() != q) throw std::invalid_argument("robust_bounds: u_sign dimension mismatch");

  // Grid sweep. Odometer over grid_per_dim points per axis; endpoints are
  // the box corners by construction.
  std::vector<int> idx(static_cast<size_t>(n), 0);
  Vec y(n);
  double drift_min = std::numeric_limits<double>::infinity();
  Vec drift_arg = box.center;
  Vec g_min = Vec::Constant(q, std::numeric_limits<double>::infinity());
  Vec g_max = Vec::Constant(q, -std::numeric_limits<double>::infinity());
  Mat g_min_arg(n, q), g_max_arg(n, q);
  for (Eigen::Index k = 0; k < q; ++k) {
    g_min_arg.col(k) = box.center;
    g_max_arg.col(k) = box.center;
  }
  bool done = false;
  while (!done) {
    for (Eigen::Index i = 0; i < n; ++i) {
      const double frac = static_cast<double>(idx[static_cast<size_t>(i)]) / (grid_per_dim - 1);
      y[i] = lo[i] + frac * (hi[i] - lo[i]);
    }
    const double d = drift(y);
    if (d < drift_min) {
      drift_min = d;
      drift_arg = y;
    }
    const RowVec gl = chain.lglf(y);
    if (gl.size() != q) throw std::invalid_argument("robust_bounds: lglf dimension changed");
    for (Eigen::Index k = 0; k < q; ++k) {
      if (!std::isfinite(gl[k])) throw std::runtime_error("robust_bounds: non-finite lglf value");
      if (gl[k] < g_min[k]) {
        g_min[k] = gl[k];
        g_min_arg.col(k) = y;
      }
      if (gl[k] > g_max[k]) {
        g_max[k] = gl[k];
        g_max_arg.col(k) = y;
      }
    }
    done = true;
    for (Eigen::Index i = 0; i < n; ++i) {
      auto& d_i = idx[static_cast<size_t>(i)];
      if (++d_i < grid_per_dim) {
        done = false;
        break;
      }
      d_i = 0;
    }
  }

  // Polish each extremum from its grid argmin and the box center.
  auto refine = [&](auto&& f, const Vec& seed, double grid_best) {
    double best = grid_best;
    best = std::min(best, detail::coordinate_refine(f, seed, lo, hi));
    best = std::min(best, detail::coordinate_refine(f, box.center, lo, hi));
    return best;
  };
  RobustRow row;
  row.h_r = refine(drift, drift_arg, drift_min);
  row.G = RowVec::Zero(q);
  for (Eigen::Index k = 0; k < q; ++k) {
    auto gk = [&](const Vec& z) { return chain.lglf(z)[k]; };
    auto neg_gk = [&](const Vec& z) { return -chain.lglf(z)[k]; };
    if (u_sign[k] >= 0.0)
      row.G[k] = refine(gk, g_min_arg.col(k), g_min[k]);
    else
      row.G[k] = -refine(neg_gk, g_max_arg.col(k), -g_max[k]);
  }
  return row;
}

inline HalfspaceRow robust_row_to_halfspace(const RobustRow& r) {
  HalfspaceRow row;
  row.a = r.G;
  row.b = r.h_r;
  row.sense = RowSense::GEQ;
  row.slack_coupled = false;
  return row;
}

// Mutable loop state shared between the policy closure and the caller that
// wants event times and the QP tally afterwards.
struct EventLoopState {
  std::optional<StateBox> box;
  Vec held_u;
  double held_slack = 0.0;
  std::vector<double> event_times;
  long qp_count = 0;
};

// Event-triggered loop body, run at the monitor cadence. Each event costs
// two QP solves: a nominal one at the trigger state to pin the control
// signs, then the robust one whose answer is held until the state leaves
// the box. Zero components of the nominal control count as nonnegative,
// and a nominal solve that comes back infeasible just falls back to
// nonnegative signs; only the robust QP can fault the loop.
inline StepPolicy event_triggered_policy(const ScenarioSpec& spec, const ControllerConfig& cfg,
                                         double monitor_dt, const Vec& lower_offsets,
                                         const Vec& upper_offsets,
                                         std::shared_ptr<EventLoopState> state) {
  cfg.validate();
  if (!(monitor_dt > 0.0) || monitor_dt > cfg.dt)
    throw std::invalid_argument("event loop: monitor_dt must be in (0, dt]");
  if (lower_offsets.size() != spec.system.n || upper_offsets.size() != spec.system.n)
    throw std::invalid_argument("event loop: box offset dimensions must match state");
  const int grid = default_grid_per_dim(spec.system.n);
  return [&spec, cfg, lower_offsets, upper_offsets, grid, state](double t,
                                                                 const Vec& x) -> StepDecision {
    if (state->box && !detect_exit(x, *state->box)) {
      StepDecision hold;
      hold.u = state->held_u;
      hold.slack = state->held_slack;
      return hold;
    }

    // Event: nominal QP for control signs.
    auto nominal_rows = safety_rows(spec, x, cfg);
    auto soft = stability_rows(spec, x, cfg);
    nominal_rows.insert(nominal_rows.end(), soft.begin(), soft.end());
    const QuadraticProgram nominal_qp =
        build_step_qp(nominal_rows, spec.system.control_box, cfg.w, spec.cost_scale, spec.u_ref(x));
    ++state->qp_count;
    const QPSolution nominal = solve(nominal_qp);
    Vec u_sign = Vec::Ones(spec.system.q);
    if (nominal.status == QPStatus::Optimal) {
      for (int k = 0; k < spec.system.q; ++k)
        if (nominal.point[k] < 0.0) u_sign[k] = -1.0;
    }

    StateBox box{x, lower_offsets, upper_offsets};
    std::vector<HalfspaceRow> rows;
    for (const auto& ch : spec.safety)
      rows.push_back(robust_row_to_halfspace(robust_bounds(ch, box, cfg.dt, u_sign, grid)));
    const size_t robust_count = rows.size();
    rows.insert(rows.end(), soft.begin(), soft.end());
    const QuadraticProgram event_qp =
        build_step_qp(rows, spec.system.control_box, cfg.w, spec.cost_scale, spec.u_ref(x));
    ++state->qp_count;
    const QPSolution sol = solve(event_qp);
    if (sol.status != QPStatus::Optimal) {
      StepDecision d;
      d.feasible = false;
      std::ostringstream os;
      os << "event QP infeasible at t = " << t << "\nbox center = [";
      for (Eigen::Index i = 0; i < x.size(); ++i) os << (i ? ", " : "") << x[i];
      os << "]\nrobust rows (first " << robust_count << " rows):\n" << describe_rows(rows);
      d.diagnostic = os.str();
      return d;
    }
    state->box = box;
    state->held_u = sol.point.head(spec.system.q);
    state->held_slack = sol.point[spec.system.q];
    state->event_times.push_back(t);
    StepDecision d;
    d.u = state->held_u;
    d.slack = state->held_slack;
    return d;
  };
}

inline RunResult run_event_triggered(const ScenarioSpec& spec, const ControllerConfig& cfg) {
  cfg.validate();
  RunResult run;
  run.scenario = spec.name;
  run.method = MethodKind::EVENT_TLC;
  run.dt = cfg.dt;
  run.t_end = cfg.t_end;
  run.event_mode = true;
  run.monitor_dt = spec.monitor_dt;
  auto state = std::make_shared<EventLoopState>();
  const StepPolicy policy = event_triggered_policy(spec, cfg, spec.monitor_dt,
                                                   spec.box_lower_offsets, spec.box_upper_offsets,
                                                   state);
  run.log = run_closed_loop(spec.system, spec.x0, policy, cfg.t_end, spec.monitor_dt,
                            cfg.substeps, &run.fault);
  run.log.qp_count = state->qp_count;
  run.log.event_times = state->event_times;
  append_h_and_psi1(run, spec);
  return run;
}

}  // namespace tlc
