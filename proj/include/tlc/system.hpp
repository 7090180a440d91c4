#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace tlc {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using RowVec = Eigen::RowVectorXd;

struct ControlBox {
  Vec u_min;
  Vec u_max;

  void validate() const {
    if (u_min.size() != u_max.size())
      throw std::invalid_argument("control box dimension mismatch");
    for (Eigen::Index i = 0; i < u_min.size(); ++i)
      if (u_min[i] > u_max[i])
        throw std::invalid_argument("control box: u_min > u_max");
  }

  bool contains(const Vec& u) const {
    for (Eigen::Index i = 0; i < u_min.size(); ++i)
      if (u[i] < u_min[i] || u[i] > u_max[i]) return false;
    return true;
  }
};

// dx/dt = f(x) + g(x) u
struct ControlAffineSystem {
  int n = 0;  // state dimension
  int q = 0;  // control dimension
  std::function<Vec(const Vec&)> f;
  std::function<Mat(const Vec&)> g;
  ControlBox control_box;
};

inline Vec eval_dynamics(const ControlAffineSystem& sys, const Vec& x, const Vec& u) {
  if (x.size() != sys.n || u.size() != sys.q)
    throw std::invalid_argument("eval_dynamics: dimension mismatch");
  Vec dx = sys.f(x) + sys.g(x) * u;
  if (!dx.allFinite())
    throw std::runtime_error("eval_dynamics: non-finite derivative");
  return dx;
}

// classical RK4 under constant u, fixed step dt/substeps
inline Vec integrate_zoh_step(const ControlAffineSystem& sys, Vec x, const Vec& u,
                              double dt, int substeps = 10) {
  if (dt <= 0.0) throw std::invalid_argument("integrate_zoh_step: dt must be positive");
  if (substeps < 1) throw std::invalid_argument("integrate_zoh_step: substeps must be >= 1");
  const double h = dt / substeps;
  for (int s = 0; s < substeps; ++s) {
    Vec k1 = eval_dynamics(sys, x, u);
    Vec k2 = eval_dynamics(sys, x + 0.5 * h * k1, u);
    Vec k3 = eval_dynamics(sys, x + 0.5 * h * k2, u);
    Vec k4 = eval_dynamics(sys, x + h * k3, u);
    x += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    if (!x.allFinite())
      throw std::runtime_error("integrate_zoh_step: state became non-finite at substep " +
                               std::to_string(s));
  }
  return x;
}

struct StepDecision {
  Vec u;
  double slack = 0.0;
  bool feasible = true;
  std::string diagnostic;  // populated when infeasible
};

struct ControllerFault {
  double t = 0.0;
  Vec state;
  std::string reason;
};

struct SimulationLog {
  std::vector<double> times;
  std::vector<Vec> states;
  std::vector<Vec> controls;           // control applied from this instant (last repeats)
  std::vector<double> slack;
  std::vector<std::vector<double>> h_values;  // one series per safety constraint
  std::vector<double> event_times;     // empty for time-driven runs
  long qp_count = 0;
};

using StepPolicy = std::function<StepDecision(double t, const Vec& x)>;

// ZOH closed loop at fixed control interval dt. On an infeasible decision the
// loop halts with a partial log; the fault details land in fault_out.
inline SimulationLog run_closed_loop(const ControlAffineSystem& sys, const Vec& x0,
                                     const StepPolicy& policy, double t_end, double dt,
                                     int substeps = 10,
                                     std::optional<ControllerFault>* fault_out = nullptr) {
  if (t_end <= 0.0) throw std::invalid_argument("run_closed_loop: t_end must be positive");
  if (dt <= 0.0) throw std::invalid_argument("run_closed_loop: dt must be positive");
  SimulationLog log;
  if (fault_out) fault_out->reset();
  Vec x = x0;
  double t = 0.0;
  const int n_steps = static_cast<int>(std::ceil(t_end / dt - 1e-12));
  for (int k = 0; k < n_steps; ++k) {
    StepDecision d = policy(t, x);
    if (!d.feasible) {
      // halt with partial log: the current state is logged with the last control
      log.times.push_back(t);
      log.states.push_back(x);
      log.controls.push_back(log.controls.empty() ? Vec::Zero(sys.q) : log.controls.back());
      log.slack.push_back(log.slack.empty() ? 0.0 : log.slack.back());
      if (fault_out) *fault_out = ControllerFault{t, x, d.diagnostic};
      return log;
    }
    if (!sys.control_box.contains(d.u))
      throw std::logic_error("run_closed_loop: policy returned control outside the box");
    log.times.push_back(t);
    log.states.push_back(x);
    log.controls.push_back(d.u);
    log.slack.push_back(d.slack);
    const double step = std::min(dt, t_end - t);
    x = integrate_zoh_step(sys, x, d.u, step, substeps);
    t = (k + 1 < n_steps) ? (k + 1) * dt : t_end;
  }
  log.times.push_back(t_end);
  log.states.push_back(x);
  log.controls.push_back(log.controls.empty() ? Vec::Zero(sys.q) : log.controls.back());
  log.slack.push_back(log.slack.empty() ? 0.0 : log.slack.back());
  return log;
}

}  // namespace tlc
