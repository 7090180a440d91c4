#pragma once

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "tlc/csv.hpp"
#include "tlc/event_trigger.hpp"
#include "tlc/metrics.hpp"
#include "tlc/svg.hpp"
#include "tlc/taylor_identity.hpp"

namespace tlc {

// Bad user input (unknown keys, malformed values, impossible parameter
// combinations). The CLI maps this to its config-error exit code.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ConfiguredRun {
  ScenarioSpec spec;
  ControllerConfig cfg;
};

namespace detail {

inline double as_number(const nlohmann::json& v, const std::string& key) {
  if (!v.is_number()) throw ConfigError("config key '" + key + "' expects a number");
  return v.get<double>();
}

inline std::vector<double> as_array(const nlohmann::json& v, const std::string& key, size_t n) {
  if (!v.is_array() || v.size() != n)
    throw ConfigError("config key '" + key + "' expects an array of " + std::to_string(n) +
                      " numbers");
  std::vector<double> out;
  for (const auto& e : v) {
    if (!e.is_number()) throw ConfigError("config key '" + key + "' expects numeric entries");
    out.push_back(e.get<double>());
  }
  return out;
}

inline void set_echo(ScenarioSpec& spec, const std::string& key, const std::string& value,
                     bool invented) {
  for (auto& e : spec.config_echo) {
    if (e.key == key) {
      e.value = value;
      e.invented = invented;
      return;
    }
  }
  spec.config_echo.push_back({key, value, invented});
}

inline std::string fmt_short(double v) {
  std::ostringstream os;
  os << v;
  return os.str();
}

}  // namespace detail

// Builds the scenario and controller configuration from a method name and a
// flat JSON override map. Every key must be known; silent typo absorption is
// exactly what a config layer must not do.
inline ConfiguredRun configure_run(const std::string& scenario, const std::string& method,
                                   const nlohmann::json& overrides) {
  if (!overrides.is_object()) throw ConfigError("overrides must be a JSON object");

  MethodSelector sel;
  if (method == "tlc") {
    sel.kind = MethodKind::ZOH_TLC;
  } else if (method == "hocbf") {
    sel.kind = MethodKind::HOCBF;
  } else if (method == "etlc") {
    sel.kind = MethodKind::EVENT_TLC;
  } else {
    throw ConfigError("unknown method '" + method + "' (expected hocbf, tlc, or etlc)");
  }

  double t_end = 0.0, w = 1.0;
  int substeps = 10;
  std::vector<double> poles{1.0, 1.0};
  bool poles_set = false;

  ScenarioSpec spec;
  try {
    if (scenario == "acc") {
      ACCParams p;
      for (const auto& [k, v] : overrides.items()) {
        if (k == "v0") p.v0 = detail::as_number(v, k);
        else if (k == "v_d") p.v_d = detail::as_number(v, k);
        else if (k == "M") p.M = detail::as_number(v, k);
        else if (k == "f0") p.f0 = detail::as_number(v, k);
        else if (k == "f1") p.f1 = detail::as_number(v, k);
        else if (k == "f2") p.f2 = detail::as_number(v, k);
        else if (k == "c") p.c = detail::as_number(v, k);
        else if (k == "c_a") p.c_a = detail::as_number(v, k);
        else if (k == "c_d") p.c_d = detail::as_number(v, k);
        else if (k == "gravity") p.gravity = detail::as_number(v, k);
        else if (k == "x0") {
          const auto a = detail::as_array(v, k, 2);
          p.v_init = a[0];
          p.z_init = a[1];
        } else if (k == "dt") p.dt = detail::as_number(v, k);
        else if (k == "monitor_dt" || k == "d_t") p.monitor_dt = detail::as_number(v, k);
        else if (k == "box_offsets") {
          const auto a = detail::as_array(v, k, 2);
          p.off_v = a[0];
          p.off_z = a[1];
        } else if (k == "t_end") t_end = detail::as_number(v, k);
        else if (k == "w") w = detail::as_number(v, k);
        else if (k == "substeps") substeps = static_cast<int>(detail::as_number(v, k));
        else if (k == "hocbf_poles") {
          poles = detail::as_array(v, k, 2);
          poles_set = true;
        } else throw ConfigError("unknown config key '" + k + "' for scenario acc");
      }
      spec = make_acc(p);
      if (t_end == 0.0) t_end = spec.default_t_end;
    } else if (scenario == "robot") {
      RobotParams p;
      StabilityMode mode = StabilityMode::CLF_pair;
      for (const auto& [k, v] : overrides.items()) {
        if (k == "x_o") p.x_o = detail::as_number(v, k);
        else if (k == "y_o") p.y_o = detail::as_number(v, k);
        else if (k == "r") p.r = detail::as_number(v, k);
        else if (k == "x_d") p.x_d = detail::as_number(v, k);
        else if (k == "y_d") p.y_d = detail::as_number(v, k);
        else if (k == "v_min") p.v_min = detail::as_number(v, k);
        else if (k == "v_max") p.v_max = detail::as_number(v, k);
        else if (k == "u1_max") p.u1_max = detail::as_number(v, k);
        else if (k == "u2_max") p.u2_max = detail::as_number(v, k);
        else if (k == "x0") {
          const auto a = detail::as_array(v, k, 4);
          p.start_x = a[0];
          p.start_y = a[1];
          p.start_theta = a[2];
          p.start_v = a[3];
        } else if (k == "dt") p.dt = detail::as_number(v, k);
        else if (k == "monitor_dt" || k == "d_t") p.monitor_dt = detail::as_number(v, k);
        else if (k == "box_offsets") {
          const auto a = detail::as_array(v, k, 4);
          p.off_x = a[0];
          p.off_y = a[1];
          p.off_theta = a[2];
          p.off_v = a[3];
        } else if (k == "stability_mode") {
          if (!v.is_string()) throw ConfigError("config key 'stability_mode' expects a string");
          const std::string s = v.get<std::string>();
          if (s == "tls_m2") mode = StabilityMode::TLS_m2;
          else if (s == "clf_pair") mode = StabilityMode::CLF_pair;
          else throw ConfigError("stability_mode must be 'tls_m2' or 'clf_pair', got '" + s + "'");
        } else if (k == "t_end") t_end = detail::as_number(v, k);
        else if (k == "w") w = detail::as_number(v, k);
        else if (k == "substeps") substeps = static_cast<int>(detail::as_number(v, k));
        else if (k == "hocbf_poles") {
          poles = detail::as_array(v, k, 2);
          poles_set = true;
        } else throw ConfigError("unknown config key '" + k + "' for scenario robot");
      }
      spec = make_robot(p, mode);
      if (t_end == 0.0) t_end = spec.default_t_end;
    } else {
      throw ConfigError("unknown scenario '" + scenario + "' (expected acc or robot)");
    }
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }

  if (poles_set && sel.kind != MethodKind::HOCBF)
    throw ConfigError("hocbf_poles only applies to --method hocbf");
  if (sel.kind == MethodKind::HOCBF) {
    ClassKSpec ks;
    ks.p = poles;
    for (const auto& ch : spec.safety)
      if (ch.m >= 2 && static_cast<int>(ks.p.size()) != ch.m)
        throw ConfigError("hocbf_poles must list exactly " + std::to_string(ch.m) + " values");
    sel.hocbf_params = ks;
  }

  ControllerConfig cfg;
  cfg.dt = spec.default_dt;
  cfg.w = w;
  cfg.substeps = substeps;
  cfg.t_end = t_end;
  cfg.method = sel;
  try {
    cfg.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }

  detail::set_echo(spec, "method", method, false);
  detail::set_echo(spec, "t_end", detail::fmt_short(cfg.t_end), true);
  detail::set_echo(spec, "w", detail::fmt_short(cfg.w), true);
  detail::set_echo(spec, "substeps", std::to_string(cfg.substeps), true);
  if (sel.kind == MethodKind::HOCBF) {
    std::string ps = "(";
    for (size_t i = 0; i < poles.size(); ++i) ps += (i ? ", " : "") + detail::fmt_short(poles[i]);
    detail::set_echo(spec, "hocbf_poles", ps + ")", false);
  }
  return {std::move(spec), cfg};
}

inline RunResult execute_run(const ScenarioSpec& spec, const ControllerConfig& cfg) {
  return cfg.method.kind == MethodKind::EVENT_TLC ? run_event_triggered(spec, cfg)
                                                  : run_time_driven(spec, cfg);
}

// ------------------------------------------------------------ artifacts ----

inline void write_trajectory_csv(const std::string& path, const ScenarioSpec& spec,
                                 const RunResult& run) {
  std::vector<std::string> header{"t"};
  for (const auto& s : spec.state_names) header.push_back(s);
  for (const auto& c : spec.control_names) header.push_back(c);
  header.push_back("slack");
  for (const auto& ch : spec.safety) header.push_back("h_" + ch.name);
  std::vector<std::vector<double>> rows;
  const auto& log = run.log;
  for (size_t i = 0; i < log.times.size(); ++i) {
    std::vector<double> row{log.times[i]};
    for (Eigen::Index j = 0; j < log.states[i].size(); ++j) row.push_back(log.states[i][j]);
    for (Eigen::Index j = 0; j < log.controls[i].size(); ++j) row.push_back(log.controls[i][j]);
    row.push_back(log.slack[i]);
    for (const auto& hv : log.h_values) row.push_back(hv[i]);
    rows.push_back(std::move(row));
  }
  write_csv(path, header, rows);
}

inline void write_psi1_csv(const std::string& path, const RunResult& run) {
  std::vector<std::vector<double>> rows;
  for (size_t i = 0; i < run.psi1.size(); ++i)
    rows.push_back({run.log.times[i], run.psi1[i].real(), run.psi1[i].imag()});
  write_csv(path, {"t", "psi1_re", "psi1_im"}, rows);
}

inline void write_events_csv(const std::string& path, const RunResult& run) {
  std::vector<std::vector<double>> rows;
  const auto& ev = run.log.event_times;
  for (size_t i = 0; i < ev.size(); ++i)
    rows.push_back({static_cast<double>(i), ev[i], i == 0 ? 0.0 : ev[i] - ev[i - 1]});
  write_csv(path, {"event_index", "t", "inter_event_gap"}, rows);
}

inline void write_config_echo(const std::string& path, const ScenarioSpec& spec) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("config echo: cannot open for writing: " + path);
  for (const auto& e : spec.config_echo)
    out << e.key << " = " << e.value << (e.invented ? "  (default not taken from the source material)" : "") << "\n";
}

inline void write_plots(const std::string& dir, const ScenarioSpec& spec, const RunResult& run) {
  const auto& log = run.log;
  auto component = [&](const std::vector<Vec>& vs, Eigen::Index j) {
    std::vector<double> out;
    out.reserve(vs.size());
    for (const auto& v : vs) out.push_back(v[j]);
    return out;
  };

  {
    std::vector<PlotSeries> series;
    for (size_t j = 0; j < spec.state_names.size(); ++j)
      series.push_back({spec.state_names[j], log.times, component(log.states, static_cast<Eigen::Index>(j))});
    write_plot_svg(dir + "/plot_states.svg", series,
                   {"state vs time", "t [s]", "state", false, false, {}});
  }
  {
    std::vector<PlotSeries> series;
    for (size_t j = 0; j < spec.control_names.size(); ++j)
      series.push_back({spec.control_names[j], log.times, component(log.controls, static_cast<Eigen::Index>(j))});
    write_plot_svg(dir + "/plot_controls.svg", series,
                   {"control vs time", "t [s]", "control", false, false, {}});
  }
  {
    std::vector<PlotSeries> series;
    for (size_t c = 0; c < spec.safety.size(); ++c)
      series.push_back({"h_" + spec.safety[c].name, log.times, log.h_values[c]});
    write_plot_svg(dir + "/plot_h.svg", series,
                   {"safety margin vs time", "t [s]", "h", false, true, {}});
  }
  if (!run.psi1.empty()) {
    PlotSeries s;
    s.label = "psi1";
    for (const auto& z : run.psi1) {
      s.x.push_back(z.real());
      s.y.push_back(z.imag());
    }
    write_plot_svg(dir + "/plot_psi1_plane.svg", {s},
                   {"psi1 in the complex plane", "Re", "Im", true, true, {}});
  }
  if (spec.planar) {
    const auto& g = *spec.planar;
    PlotSeries s{"path", component(log.states, 0), component(log.states, 1)};
    PlotOptions opt{"xy path", "x [m]", "y [m]", true, false, {}};
    opt.circles.push_back({g.obstacle_x, g.obstacle_y, g.clearance_radius, false, true, ""});
    opt.circles.push_back({g.obstacle_x, g.obstacle_y, g.body_radius, true, false, "obstacle"});
    opt.circles.push_back({g.dest_x, g.dest_y, 0.5, true, false, ""});
    write_plot_svg(dir + "/plot_path_xy.svg", {s}, opt);
  }
}

// Writes the full artifact set for one run and returns its metrics.
inline MetricsReport write_run_artifacts(const std::string& dir, const ScenarioSpec& spec,
                                         const RunResult& run) {
  std::filesystem::create_directories(dir);
  write_trajectory_csv(dir + "/trajectory.csv", spec, run);
  write_psi1_csv(dir + "/psi1.csv", run);
  if (run.event_mode) write_events_csv(dir + "/events.csv", run);
  write_config_echo(dir + "/config_echo.txt", spec);
  write_plots(dir, spec, run);
  const MetricsReport m = compute_metrics(spec, run);
  write_metrics_json(dir + "/metrics.json", m);
  return m;
}

// ----------------------------------------------------------- comparison ----

inline std::string comparison_text(const std::vector<std::pair<std::string, MetricsReport>>& entries);

inline void write_comparison(const std::string& dir,
                             const std::vector<std::pair<std::string, MetricsReport>>& entries) {
  if (entries.size() < 2) throw ConfigError("compare needs at least two runs");
  for (const auto& [label, m] : entries)
    if (m.scenario != entries.front().second.scenario)
      throw ConfigError("compare requires all runs on the same scenario");
  std::filesystem::create_directories(dir);

  const double nan = std::numeric_limits<double>::quiet_NaN();
  std::ofstream csv(dir + "/comparison.csv", std::ios::binary);
  if (!csv) throw std::runtime_error("compare: cannot open comparison.csv");
  csv << "label,scenario,method,dt,t_end,completed,fault_time,qp_count,control_effort,"
         "final_tracking_error,violation_duration,event_count,min_event_gap,mean_event_gap";
  for (const auto& [name, v] : entries.front().second.min_h) csv << ",min_h_" << name;
  csv << "\n";
  for (const auto& [label, m] : entries) {
    csv << label << "," << m.scenario << "," << m.method << "," << format_full(m.dt) << ","
        << format_full(m.t_end) << "," << (m.completed ? 1 : 0) << ","
        << format_full(m.fault_time.value_or(nan)) << "," << m.qp_count << ","
        << format_full(m.control_effort) << "," << format_full(m.final_tracking_error) << ","
        << format_full(m.violation_duration) << ","
        << (m.event_count ? std::to_string(*m.event_count) : "nan") << ","
        << format_full(m.min_event_gap.value_or(nan)) << ","
        << format_full(m.mean_event_gap.value_or(nan));
    for (const auto& [name, v] : m.min_h) csv << "," << format_full(v);
    csv << "\n";
  }
  csv.close();

  std::ofstream txt(dir + "/comparison.txt", std::ios::binary);
  if (!txt) throw std::runtime_error("compare: cannot open comparison.txt");
  txt << comparison_text(entries);
}

inline std::string comparison_text(const std::vector<std::pair<std::string, MetricsReport>>& entries) {
  std::ostringstream os;
  os << "scenario: " << entries.front().second.scenario << "\n\n";
  os << std::left << std::setw(14) << "run" << std::setw(8) << "method" << std::setw(8) << "dt"
     << std::setw(11) << "completed" << std::setw(14) << "min h" << std::setw(10) << "qp count"
     << std::setw(16) << "track err [*]" << std::setw(12) << "viol [s]" << "\n";
  for (const auto& [label, m] : entries) {
    double overall = std::numeric_limits<double>::infinity();
    for (const auto& [name, v] : m.min_h) overall = std::min(overall, v);
    std::ostringstream mh, dtv, te, vd;
    mh << std::setprecision(6) << overall;
    dtv << m.dt;
    te << std::setprecision(6) << m.final_tracking_error;
    vd << std::setprecision(4) << m.violation_duration;
    os << std::left << std::setw(14) << label << std::setw(8) << m.method << std::setw(8)
       << dtv.str() << std::setw(11) << (m.completed ? "yes" : "FAULT") << std::setw(14)
       << mh.str() << std::setw(10) << m.qp_count << std::setw(16) << te.str() << std::setw(12)
       << vd.str() << "\n";
  }
  os << "\n[*] tracking error at the end of the logged horizon\n";

  std::vector<std::string> violators;
  for (const auto& [label, m] : entries) {
    double overall = std::numeric_limits<double>::infinity();
    for (const auto& [name, v] : m.min_h) overall = std::min(overall, v);
    if (overall < 0.0 || !m.completed) violators.push_back(label);
  }
  os << "safety violated or faulted: ";
  if (violators.empty()) os << "none";
  for (size_t i = 0; i < violators.size(); ++i) os << (i ? ", " : "") << violators[i];
  os << "\n";

  const auto* best = &entries.front();
  for (const auto& e : entries)
    if (e.second.qp_count < best->second.qp_count) best = &e;
  os << "fewest QP solves: " << best->first << " (" << best->second.qp_count << ")\n";
  return os.str();
}

// ---------------------------------------------------------------- verify ----

struct VerifyCheck {
  std::string name;
  double value = 0.0;  // the measured error or defect, 0 when clean
  double tol = 0.0;
  bool pass = false;
};

namespace detail {

inline void chain_fd_checks(const ScenarioSpec& spec, unsigned seed,
                            std::vector<VerifyCheck>& out) {
  std::mt19937 rng(seed);
  std::vector<LieDerivativeChain> chains = spec.safety;
  chains.insert(chains.end(), spec.stability.begin(), spec.stability.end());
  for (const auto& ch : chains) {
    double worst = 0.0;
    for (int trial = 0; trial < 101; ++trial) {
      Vec x(spec.system.n);
      if (trial == 0) {
        x = spec.x0;
      } else {
        for (int i = 0; i < spec.system.n; ++i) {
          std::uniform_real_distribution<double> d(spec.envelope(i, 0), spec.envelope(i, 1));
          x[i] = d(rng);
        }
      }
      Vec u(spec.system.q);
      for (int i = 0; i < spec.system.q; ++i) {
        std::uniform_real_distribution<double> d(spec.system.control_box.u_min[i],
                                                 spec.system.control_box.u_max[i]);
        u[i] = d(rng);
      }
      worst = std::max(worst, finite_diff_chain_check(spec.system, ch, x, u));
    }
    VerifyCheck c;
    c.name = spec.name + "/" + ch.name + " derivative chain vs finite differences";
    c.value = worst;
    c.tol = 1e-4;
    c.pass = worst <= c.tol;
    out.push_back(c);
  }
}

}  // namespace detail

// Built-in self checks: every shipped derivative chain against numeric
// differentiation, and the integral-remainder identity on analytic signals
// plus a sampled vehicle trajectory.
inline std::vector<VerifyCheck> run_verify_suite(unsigned seed = 12345) {
  std::vector<VerifyCheck> out;

  detail::chain_fd_checks(make_acc(ACCParams{}), seed, out);
  detail::chain_fd_checks(make_robot(RobotParams{}, StabilityMode::CLF_pair), seed + 1, out);
  {
    auto tls = make_robot(RobotParams{}, StabilityMode::TLS_m2);
    ScenarioSpec goal_only = tls;
    goal_only.safety.clear();  // the safety chains were just checked above
    detail::chain_fd_checks(goal_only, seed + 2, out);
  }

  auto sample = [](auto&& f, double a, double b, int n) {
    std::vector<double> s;
    for (int i = 0; i < n; ++i) s.push_back(f(a + (b - a) * i / (n - 1)));
    return s;
  };

  {
    // trapezoid quadrature is second order, so the cubic's remainder integral
    // carries an O(spacing^2) error; 401 samples put it well under 1e-4
    const auto r = verify_taylor_identity(sample([](double t) { return t * t * t; }, 0.0, 1.0, 401),
                                          0.0, 1.0, 2);
    VerifyCheck c{"remainder identity on a cubic signal", std::abs(r.residual), 1e-4, false};
    c.pass = c.value <= c.tol;
    out.push_back(c);
    const double xi = 1.0 / 3.0;  // exact mean-value point for t^3 on [0, 1]
    VerifyCheck b{"mean-value bracket contains the exact point (cubic)",
                  std::max({0.0, r.xi_lo - xi, xi - r.xi_hi}), 1e-12, false};
    b.pass = b.value <= b.tol;
    out.push_back(b);
  }
  {
    const auto r = verify_taylor_identity(sample([](double t) { return t * t; }, 0.0, 1.0, 41),
                                          0.0, 1.0, 2);
    VerifyCheck c{"remainder identity on a quadratic signal", std::abs(r.residual), 1e-9, false};
    c.pass = c.value <= c.tol;
    out.push_back(c);
    VerifyCheck b{"flat remainder reported as degenerate bracket (quadratic)",
                  r.xi_degenerate ? 0.0 : 1.0, 0.5, false};
    b.pass = b.value <= b.tol;
    out.push_back(b);
  }
  {
    // Headway margin along an open-loop braking arc of the vehicle model:
    // constant control keeps the sampled signal smooth between samples.
    const ACCParams p;
    auto spec = make_acc(p);
    const Vec u = Vec::Constant(1, -2000.0);
    const double step = 0.02;
    std::vector<double> h;
    Vec x = spec.x0;
    h.push_back(spec.safety[0].lf[0](x));
    for (int i = 0; i < 100; ++i) {
      x = integrate_zoh_step(spec.system, x, u, step, 10);
      h.push_back(spec.safety[0].lf[0](x));
    }
    const auto r = verify_taylor_identity(h, 0.0, 2.0, 2);
    const double scale = std::max(1.0, std::abs(r.lhs));
    VerifyCheck c{"remainder identity on the sampled braking arc",
                  std::abs(r.residual) / scale, 1e-3, false};
    c.pass = c.value <= c.tol;
    out.push_back(c);
    VerifyCheck b{"mean-value bracket well-formed (braking arc)",
                  (r.xi_lo <= r.xi_hi && r.xi_lo >= 0.0 && r.xi_hi <= 2.0) ? 0.0 : 1.0, 0.5,
                  false};
    b.pass = b.value <= b.tol;
    out.push_back(b);
  }
  return out;
}

inline std::string format_verify_table(const std::vector<VerifyCheck>& checks) {
  std::ostringstream os;
  size_t width = 0;
  for (const auto& c : checks) width = std::max(width, c.name.size());
  for (const auto& c : checks) {
    std::ostringstream val;
    val << std::scientific << std::setprecision(3) << c.value;
    os << std::left << std::setw(static_cast<int>(width) + 2) << c.name << std::setw(12)
       << val.str() << " (tol " << std::scientific << std::setprecision(1) << c.tol << ")  "
       << (c.pass ? "PASS" : "FAIL") << "\n";
  }
  return os.str();
}

}  // namespace tlc
