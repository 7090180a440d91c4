#pragma once

#include <complex>
#include <memory>
#include <optional>
#include <sstream>

#include "tlc/qp.hpp"
#include "tlc/scenarios.hpp"

namespace tlc {

enum class MethodKind { HOCBF, ZOH_TLC, EVENT_TLC };

inline const char* method_name(MethodKind k) {
  switch (k) {
    case MethodKind::HOCBF: return "hocbf";
    case MethodKind::ZOH_TLC: return "tlc";
    case MethodKind::EVENT_TLC: return "etlc";
  }
  return "?";
}

struct MethodSelector {
  MethodKind kind = MethodKind::ZOH_TLC;
  std::optional<ClassKSpec> hocbf_params;

  void validate() const {
    if ((kind == MethodKind::HOCBF) != hocbf_params.has_value())
      throw std::invalid_argument("method selector: hocbf_params present iff kind is HOCBF");
    if (hocbf_params) hocbf_params->validate();
  }
};

struct ControllerConfig {
  double dt = 0.1;
  double w = 1.0;
  MethodSelector method;
  int substeps = 10;
  double t_end = 40.0;

  void validate() const {
    if (!(dt > 0.0)) throw std::invalid_argument("controller config: dt must be positive");
    if (!(w > 0.0)) throw std::invalid_argument("controller config: w must be positive");
    if (substeps < 1) throw std::invalid_argument("controller config: substeps must be >= 1");
    if (!(t_end > 0.0)) throw std::invalid_argument("controller config: t_end must be positive");
    method.validate();
  }
};

// Constraint rows at state x. First-order chains keep the 1/dt coefficient
// under every method, so compared methods differ only in how the
// second-order constraint is closed.
inline std::vector<HalfspaceRow> safety_rows(const ScenarioSpec& spec, const Vec& x,
                                             const ControllerConfig& cfg) {
  std::vector<HalfspaceRow> rows;
  for (const auto& ch : spec.safety) {
    if (ch.m >= 2 && cfg.method.kind == MethodKind::HOCBF)
      rows.push_back(hocbf_row(ch, x, *cfg.method.hocbf_params));
    else
      rows.push_back(zoh_tlc_row(ch, x, cfg.dt));
  }
  return rows;
}

inline std::vector<HalfspaceRow> stability_rows(const ScenarioSpec& spec, const Vec& x,
                                                const ControllerConfig& cfg) {
  std::vector<HalfspaceRow> rows;
  for (const auto& ch : spec.stability) {
    if (ch.m == 1)
      rows.push_back(clf_row(ch, x, 1.0 / cfg.dt));
    else
      rows.push_back(zoh_tls_row(ch, x, cfg.dt));
  }
  return rows;
}

// Per-step program over the decision vector (u, delta): minimize
// (u - u_ref)'S(u - u_ref) + w delta^2 subject to hard safety rows,
// slack-coupled stability rows, and the control box. With S = I and
// u_ref = 0 this is exactly min ||u||^2 + w delta^2.
inline QuadraticProgram build_step_qp(const std::vector<HalfspaceRow>& rows,
                                      const ControlBox& box, double w,
                                      const Vec& cost_scale, const Vec& u_ref) {
  const int q = static_cast<int>(box.u_min.size());
  if (cost_scale.size() != q || u_ref.size() != q)
    throw std::invalid_argument("build_step_qp: cost dimension mismatch");
  const int dim = q + 1;
  QuadraticProgram qp;
  qp.hessian = Mat::Zero(dim, dim);
  qp.linear = Vec::Zero(dim);
  for (int i = 0; i < q; ++i) {
    qp.hessian(i, i) = 2.0 * cost_scale[i];
    qp.linear[i] = -2.0 * cost_scale[i] * u_ref[i];
  }
  qp.hessian(q, q) = 2.0 * w;
  for (const auto& r : rows) {
    if (r.a.size() != q) throw std::invalid_argument("build_step_qp: row dimension mismatch");
    HalfspaceRow lifted = r;
    lifted.a = RowVec::Zero(dim);
    lifted.a.head(q) = r.a;
    if (r.slack_coupled) lifted.a[q] = -1.0;  // a.u + b <= delta
    qp.rows.push_back(std::move(lifted));
  }
  const double inf = std::numeric_limits<double>::infinity();
  qp.lower = Vec::Constant(dim, -inf);
  qp.upper = Vec::Constant(dim, inf);
  qp.lower.head(q) = box.u_min;
  qp.upper.head(q) = box.u_max;
  return qp;
}

inline std::string describe_rows(const std::vector<HalfspaceRow>& rows) {
  std::ostringstream os;
  for (size_t i = 0; i < rows.size(); ++i) {
    const auto& r = rows[i];
    os << "row " << i << ": a = [";
    for (Eigen::Index j = 0; j < r.a.size(); ++j) os << (j ? ", " : "") << r.a[j];
    os << "], b = " << r.b << (r.sense == RowSense::GEQ ? " (>=0" : " (<=0")
       << (r.slack_coupled ? ", slack)" : ")") << "\n";
  }
  return os.str();
}

// Per-step QP policy for the time-driven loop; counts solves through the
// shared counter so the caller can report qp_count.
inline StepPolicy time_driven_policy(const ScenarioSpec& spec, const ControllerConfig& cfg,
                                     std::shared_ptr<long> qp_counter) {
  cfg.validate();
  return [&spec, cfg, qp_counter](double t, const Vec& x) -> StepDecision {
    auto rows = safety_rows(spec, x, cfg);
    auto soft = stability_rows(spec, x, cfg);
    rows.insert(rows.end(), soft.begin(), soft.end());
    const QuadraticProgram qp =
        build_step_qp(rows, spec.system.control_box, cfg.w, spec.cost_scale, spec.u_ref(x));
    ++(*qp_counter);
    const QPSolution sol = solve(qp);
    StepDecision d;
    if (sol.status != QPStatus::Optimal) {
      d.feasible = false;
      std::ostringstream os;
      os << "per-step QP infeasible at t = " << t << "\n" << describe_rows(rows);
      d.diagnostic = os.str();
      return d;
    }
    d.u = sol.point.head(spec.system.q);
    d.slack = sol.point[spec.system.q];
    return d;
  };
}

struct RunResult {
  std::string scenario;
  MethodKind method = MethodKind::ZOH_TLC;
  double dt = 0.1;
  double t_end = 0.0;
  bool event_mode = false;
  double monitor_dt = 0.0;  // log cadence for event runs, 0 otherwise
  SimulationLog log;
  std::optional<ControllerFault> fault;
  std::vector<std::complex<double>> psi1;  // primary-chain trace per sample
};

inline void append_h_and_psi1(RunResult& run, const ScenarioSpec& spec) {
  run.log.h_values.assign(spec.safety.size(), {});
  for (const auto& x : run.log.states) {
    for (size_t c = 0; c < spec.safety.size(); ++c)
      run.log.h_values[c].push_back(spec.safety[c].lf[0](x));
    if (!spec.safety.empty() && spec.safety[0].m >= 2) {
      run.psi1.push_back(run.method == MethodKind::HOCBF
                             ? psi1_trace_real(spec.safety[0], x, run.dt)
                             : psi1_trace(spec.safety[0], x, run.dt));
    }
  }
}

inline RunResult run_time_driven(const ScenarioSpec& spec, const ControllerConfig& cfg) {
  cfg.validate();
  RunResult run;
  run.scenario = spec.name;
  run.method = cfg.method.kind;
  run.dt = cfg.dt;
  run.t_end = cfg.t_end;
  auto counter = std::make_shared<long>(0);
  const StepPolicy policy = time_driven_policy(spec, cfg, counter);
  run.log = run_closed_loop(spec.system, spec.x0, policy, cfg.t_end, cfg.dt, cfg.substeps,
                            &run.fault);
  run.log.qp_count = *counter;
  append_h_and_psi1(run, spec);
  return run;
}

}  // namespace tlc
