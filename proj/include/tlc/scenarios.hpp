#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "tlc/lie_chain.hpp"

namespace tlc {

struct ConfigEntry {
  std::string key;
  std::string value;
  bool invented = false;  // true when the value has no published source
};

// Drawing hints for scenarios that live in a plane: obstacle disc plus the
// destination marker for the xy-path plot.
struct PlanarGeometry {
  double obstacle_x = 0.0;
  double obstacle_y = 0.0;
  double clearance_radius = 0.0;  // the radius the constraint enforces
  double body_radius = 0.0;       // drawn obstacle size, annotation only
  double dest_x = 0.0;
  double dest_y = 0.0;
};

struct ScenarioSpec {
  std::string name;
  ControlAffineSystem system;
  Vec x0;
  std::vector<LieDerivativeChain> safety;     // [0] is the primary chain for psi1 traces
  std::vector<LieDerivativeChain> stability;  // slack-coupled rows
  Vec cost_scale;                             // diagonal S of (u - u_ref)'S(u - u_ref)
  std::function<Vec(const Vec&)> u_ref;
  std::function<double(const Vec&)> tracking_error;  // |v - v_d| or distance to goal
  Vec box_lower_offsets, box_upper_offsets;   // event-trigger state box
  double monitor_dt = 0.03;
  double default_dt = 0.1;
  double default_t_end = 40.0;
  Mat envelope;  // n x 2 operating ranges for randomized chain validation
  std::vector<std::string> state_names;
  std::vector<std::string> control_names;
  std::vector<ConfigEntry> config_echo;
  std::optional<PlanarGeometry> planar;  // set when an xy-path plot makes sense
};

// ----------------------------------------------------------------- ACC ----

struct ACCParams {
  double v0 = 13.89;   // lead speed, m/s
  double v_d = 24.0;   // desired ego speed, m/s
  double M = 1650.0;   // mass, kg
  double f0 = 0.1;     // coulomb friction, N
  double f1 = 5.0;     // N s/m
  double f2 = 0.25;    // N s^2/m^2
  double c = 10.0;     // safe distance, m
  double c_a = 0.4;    // accel fraction of g
  double c_d = 0.7;    // decel fraction of g
  double gravity = 9.81;
  double v_init = 24.0;
  double z_init = 90.0;
  double dt = 0.1;
  double monitor_dt = 0.03;
  double off_v = 0.5;  // event box offsets
  double off_z = 1.0;

  void validate() const {
    auto pos = [](double v, const char* what) {
      if (!(v > 0.0)) throw std::invalid_argument(std::string("acc params: ") + what +
                                                  " must be positive");
    };
    pos(v0, "v0"); pos(v_d, "v_d"); pos(M, "M"); pos(f0, "f0"); pos(f1, "f1");
    pos(f2, "f2"); pos(c, "c"); pos(c_a, "c_a"); pos(c_d, "c_d"); pos(gravity, "g");
    pos(dt, "dt"); pos(monitor_dt, "monitor_dt");
    if (off_v < 0.0 || off_z < 0.0)
      throw std::invalid_argument("acc params: box offsets must be nonnegative");
  }
};

// rolling resistance f0 sgn(v) + f1 v + f2 v^2, exact sign with sgn(0) = 0
inline double acc_friction(const ACCParams& p, double v) {
  const double sgn = (v > 0.0) ? 1.0 : (v < 0.0 ? -1.0 : 0.0);
  return p.f0 * sgn + p.f1 * v + p.f2 * v * v;
}

inline ScenarioSpec make_acc(const ACCParams& p) {
  p.validate();
  ScenarioSpec s;
  s.name = "acc";
  s.system.n = 2;  // state (v, z): ego speed, gap to lead
  s.system.q = 1;
  s.system.f = [p](const Vec& x) {
    Vec dx(2);
    dx[0] = -acc_friction(p, x[0]) / p.M;
    dx[1] = p.v0 - x[0];
    return dx;
  };
  s.system.g = [p](const Vec&) {
    Mat g(2, 1);
    g << 1.0 / p.M, 0.0;
    return g;
  };
  s.system.control_box.u_min = Vec::Constant(1, -p.c_d * p.M * p.gravity);
  s.system.control_box.u_max = Vec::Constant(1, p.c_a * p.M * p.gravity);
  s.x0 = Vec(2);
  s.x0 << p.v_init, p.z_init;

  LieDerivativeChain headway;
  headway.m = 2;
  headway.name = "headway";
  headway.lf = {
      [p](const Vec& x) { return x[1] - p.c; },
      [p](const Vec& x) { return p.v0 - x[0]; },
      [p](const Vec& x) { return acc_friction(p, x[0]) / p.M; },
  };
  headway.lglf = [p](const Vec&) {
    RowVec a(1);
    a << -1.0 / p.M;
    return a;
  };
  s.safety.push_back(std::move(headway));

  LieDerivativeChain tracking;
  tracking.m = 1;
  tracking.name = "speed_tracking";
  tracking.lf = {
      [p](const Vec& x) { const double e = x[0] - p.v_d; return e * e; },
      [p](const Vec& x) {
        return 2.0 * (x[0] - p.v_d) * (-acc_friction(p, x[0]) / p.M);
      },
  };
  tracking.lglf = [p](const Vec& x) {
    RowVec a(1);
    a << 2.0 * (x[0] - p.v_d) / p.M;
    return a;
  };
  s.stability.push_back(std::move(tracking));

  s.cost_scale = Vec::Constant(1, 1.0 / (p.M * p.M));
  s.u_ref = [p](const Vec& x) { return Vec::Constant(1, acc_friction(p, x[0])); };
  s.tracking_error = [p](const Vec& x) { return std::abs(x[0] - p.v_d); };
  s.box_lower_offsets = Vec(2);
  s.box_lower_offsets << p.off_v, p.off_z;
  s.box_upper_offsets = s.box_lower_offsets;
  s.monitor_dt = p.monitor_dt;
  s.default_dt = p.dt;
  s.default_t_end = 40.0;
  s.envelope = Mat(2, 2);
  s.envelope << 10.0, 30.0,   // v
                20.0, 120.0;  // z
  s.state_names = {"v", "z"};
  s.control_names = {"u"};
  s.config_echo = {
      {"scenario", "acc", false},
      {"v0", std::to_string(p.v0), false},
      {"v_d", std::to_string(p.v_d), false},
      {"M", std::to_string(p.M), false},
      {"f0", std::to_string(p.f0), false},
      {"f1", std::to_string(p.f1), false},
      {"f2", std::to_string(p.f2), false},
      {"c", std::to_string(p.c), false},
      {"c_a", std::to_string(p.c_a), false},
      {"c_d", std::to_string(p.c_d), false},
      {"dt", std::to_string(p.dt), false},
      {"monitor_dt", std::to_string(p.monitor_dt), false},
      {"off_v", std::to_string(p.off_v), false},
      {"off_z", std::to_string(p.off_z), false},
      {"t_end", "40", true},
      {"w", "1", true},
      {"substeps", "10", true},
  };
  return s;
}

// --------------------------------------------------------------- robot ----

enum class StabilityMode { TLS_m2, CLF_pair };

struct RobotParams {
  double x_o = 25.0, y_o = 12.5;  // obstacle center
  double r = 7.0;                 // clearance radius (obstacle itself is 6 m)
  double x_d = 50.0, y_d = 15.0;  // destination
  double v_min = 0.0, v_max = 2.0;
  double u1_max = 0.4;            // turn rate bound, rad/s
  double u2_max = 0.8;            // acceleration bound, m/s^2
  double start_x = 0.0, start_y = 10.0, start_theta = 0.0, start_v = 0.5;
  double dt = 0.1;
  double monitor_dt = 0.03;
  double off_x = 0.2, off_y = 0.2, off_theta = 0.1, off_v = 0.1;

  void validate() const {
    if (!(r > 0.0)) throw std::invalid_argument("robot params: r must be positive");
    if (!(v_max > v_min)) throw std::invalid_argument("robot params: v_max must exceed v_min");
    if (!(u1_max > 0.0) || !(u2_max > 0.0))
      throw std::invalid_argument("robot params: control bounds must be positive");
    if (off_x < 0 || off_y < 0 || off_theta < 0 || off_v < 0)
      throw std::invalid_argument("robot params: box offsets must be nonnegative");
    const double dx = start_x - x_o, dy = start_y - y_o;
    if (dx * dx + dy * dy < r * r)
      throw std::invalid_argument("robot params: initial state inside the clearance disc");
  }
};

inline double wrap_angle(double a) {
  constexpr double pi = std::numbers::pi;
  a = std::fmod(a + pi, 2.0 * pi);
  if (a < 0.0) a += 2.0 * pi;
  return a - pi;
}

namespace detail {

// distance-scheduled speed reference for the CLF pair
inline double robot_vd(const RobotParams& p, double x, double y) {
  const double dist = std::hypot(p.x_d - x, p.y_d - y);
  return std::min(p.v_max, 0.1 * dist);
}

// m=2 chain for squared-distance functions (x-cx)^2 + (y-cy)^2 - k
inline LieDerivativeChain squared_distance_chain(std::string name, double cx, double cy,
                                                 double k) {
  LieDerivativeChain ch;
  ch.m = 2;
  ch.name = std::move(name);
  ch.lf = {
      [cx, cy, k](const Vec& s) {
        const double dx = s[0] - cx, dy = s[1] - cy;
        return dx * dx + dy * dy - k;
      },
      [cx, cy](const Vec& s) {
        const double dx = s[0] - cx, dy = s[1] - cy;
        return 2.0 * dx * s[3] * std::cos(s[2]) + 2.0 * dy * s[3] * std::sin(s[2]);
      },
      [](const Vec& s) { return 2.0 * s[3] * s[3]; },
  };
  ch.lglf = [cx, cy](const Vec& s) {
    const double dx = s[0] - cx, dy = s[1] - cy;
    RowVec a(2);
    a << 2.0 * s[3] * (-dx * std::sin(s[2]) + dy * std::cos(s[2])),
        2.0 * (dx * std::cos(s[2]) + dy * std::sin(s[2]));
    return a;
  };
  return ch;
}

}  // namespace detail

inline ScenarioSpec make_robot(const RobotParams& p,
                               StabilityMode mode = StabilityMode::CLF_pair) {
  p.validate();
  ScenarioSpec s;
  s.name = "robot";
  s.system.n = 4;  // state (x, y, theta, v)
  s.system.q = 2;  // controls (u1 turn rate, u2 acceleration)
  s.system.f = [](const Vec& x) {
    Vec dx(4);
    dx << x[3] * std::cos(x[2]), x[3] * std::sin(x[2]), 0.0, 0.0;
    return dx;
  };
  s.system.g = [](const Vec&) {
    Mat g = Mat::Zero(4, 2);
    g(2, 0) = 1.0;
    g(3, 1) = 1.0;
    return g;
  };
  s.system.control_box.u_min = Vec(2);
  s.system.control_box.u_min << -p.u1_max, -p.u2_max;
  s.system.control_box.u_max = -s.system.control_box.u_min;
  s.x0 = Vec(4);
  s.x0 << p.start_x, p.start_y, p.start_theta, p.start_v;

  s.safety.push_back(detail::squared_distance_chain("obstacle", p.x_o, p.y_o, p.r * p.r));

  LieDerivativeChain vmax_ch;
  vmax_ch.m = 1;
  vmax_ch.name = "speed_max";
  vmax_ch.lf = {
      [p](const Vec& x) { return p.v_max - x[3]; },
      [](const Vec&) { return 0.0; },
  };
  vmax_ch.lglf = [](const Vec&) {
    RowVec a(2);
    a << 0.0, -1.0;
    return a;
  };
  s.safety.push_back(std::move(vmax_ch));

  LieDerivativeChain vmin_ch;
  vmin_ch.m = 1;
  vmin_ch.name = "speed_min";
  vmin_ch.lf = {
      [p](const Vec& x) { return x[3] - p.v_min; },
      [](const Vec&) { return 0.0; },
  };
  vmin_ch.lglf = [](const Vec&) {
    RowVec a(2);
    a << 0.0, 1.0;
    return a;
  };
  s.safety.push_back(std::move(vmin_ch));

  if (mode == StabilityMode::TLS_m2) {
    s.stability.push_back(detail::squared_distance_chain("goal", p.x_d, p.y_d, 0.0));
  } else {
    // CLF pair: speed toward a distance-scheduled reference, heading toward
    // the destination bearing
    LieDerivativeChain v_clf;
    v_clf.m = 1;
    v_clf.name = "speed_clf";
    v_clf.lf = {
        [p](const Vec& x) {
          const double e = x[3] - detail::robot_vd(p, x[0], x[1]);
          return e * e;
        },
        [p](const Vec& x) {
          const double X = p.x_d - x[0], Y = p.y_d - x[1];
          const double dist = std::hypot(X, Y);
          const double e = x[3] - detail::robot_vd(p, x[0], x[1]);
          double vd_dot = 0.0;
          if (0.1 * dist < p.v_max && dist > 1e-12) {
            const double dist_dot =
                -(X * x[3] * std::cos(x[2]) + Y * x[3] * std::sin(x[2])) / dist;
            vd_dot = 0.1 * dist_dot;
          }
          return 2.0 * e * (-vd_dot);
        },
    };
    v_clf.lglf = [p](const Vec& x) {
      const double e = x[3] - detail::robot_vd(p, x[0], x[1]);
      RowVec a(2);
      a << 0.0, 2.0 * e;
      return a;
    };
    s.stability.push_back(std::move(v_clf));

    LieDerivativeChain h_clf;
    h_clf.m = 1;
    h_clf.name = "heading_clf";
    h_clf.lf = {
        [p](const Vec& x) {
          const double beta = std::atan2(p.y_d - x[1], p.x_d - x[0]);
          const double e = wrap_angle(x[2] - beta);
          return e * e;
        },
        [p](const Vec& x) {
          const double X = p.x_d - x[0], Y = p.y_d - x[1];
          const double d2 = X * X + Y * Y;
          const double beta = std::atan2(Y, X);
          const double e = wrap_angle(x[2] - beta);
          const double beta_dot = x[3] * (Y * std::cos(x[2]) - X * std::sin(x[2])) / d2;
          return 2.0 * e * (-beta_dot);
        },
    };
    h_clf.lglf = [p](const Vec& x) {
      const double beta = std::atan2(p.y_d - x[1], p.x_d - x[0]);
      const double e = wrap_angle(x[2] - beta);
      RowVec a(2);
      a << 2.0 * e, 0.0;
      return a;
    };
    s.stability.push_back(std::move(h_clf));
  }

  s.cost_scale = Vec::Ones(2);
  s.u_ref = [](const Vec&) { return Vec::Zero(2); };
  s.tracking_error = [p](const Vec& x) {
    return std::hypot(x[0] - p.x_d, x[1] - p.y_d);
  };
  s.planar = PlanarGeometry{p.x_o, p.y_o, p.r, std::min(p.r, 6.0), p.x_d, p.y_d};
  s.box_lower_offsets = Vec(4);
  s.box_lower_offsets << p.off_x, p.off_y, p.off_theta, p.off_v;
  s.box_upper_offsets = s.box_lower_offsets;
  s.monitor_dt = p.monitor_dt;
  s.default_dt = p.dt;
  s.default_t_end = 60.0;
  s.envelope = Mat(4, 2);
  s.envelope << 0.0, 48.0,   // x (keep the bearing well-defined)
                5.0, 20.0,   // y
                -1.0, 1.0,   // theta
                0.2, 2.0;    // v
  s.state_names = {"x", "y", "theta", "v"};
  s.control_names = {"u1", "u2"};
  s.config_echo = {
      {"scenario", "robot", false},
      {"x_o", std::to_string(p.x_o), true},
      {"y_o", std::to_string(p.y_o), true},
      {"r", std::to_string(p.r), false},
      {"x_d", std::to_string(p.x_d), true},
      {"y_d", std::to_string(p.y_d), true},
      {"start", "(" + std::to_string(p.start_x) + ", " + std::to_string(p.start_y) + ", " +
                    std::to_string(p.start_theta) + ", " + std::to_string(p.start_v) + ")",
       true},
      {"v_min", std::to_string(p.v_min), false},
      {"v_max", std::to_string(p.v_max), false},
      {"u1_max", std::to_string(p.u1_max), false},
      {"u2_max", std::to_string(p.u2_max), false},
      {"dt", std::to_string(p.dt), true},
      {"monitor_dt", std::to_string(p.monitor_dt), true},
      {"offsets", "(" + std::to_string(p.off_x) + ", " + std::to_string(p.off_y) + ", " +
                      std::to_string(p.off_theta) + ", " + std::to_string(p.off_v) + ")",
       false},
      {"stability_mode", mode == StabilityMode::TLS_m2 ? "TLS_m2" : "CLF_pair", true},
      {"t_end", "60", true},
      {"w", "1", true},
      {"substeps", "10", true},
  };
  return s;
}

}  // namespace tlc
