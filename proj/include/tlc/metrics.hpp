#pragma once

#include <fstream>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "tlc/controller.hpp"

namespace tlc {

struct MetricsReport {
  std::string scenario;
  std::string method;
  double dt = 0.0;
  double t_end = 0.0;
  bool completed = false;
  std::optional<double> fault_time;
  std::optional<std::string> fault_reason;
  std::vector<std::pair<std::string, double>> min_h;  // per safety constraint
  double final_tracking_error = 0.0;
  long qp_count = 0;
  double control_effort = 0.0;  // trapezoid of ||u||^2 over the log
  double violation_duration = 0.0;
  std::optional<long> event_count;
  std::optional<double> min_event_gap;
  std::optional<double> mean_event_gap;
};

inline MetricsReport compute_metrics(const ScenarioSpec& spec, const RunResult& run) {
  MetricsReport m;
  m.scenario = run.scenario;
  m.method = method_name(run.method);
  m.dt = run.dt;
  m.t_end = run.t_end;
  m.completed = !run.fault.has_value();
  if (run.fault) {
    m.fault_time = run.fault->t;
    m.fault_reason = run.fault->reason;
  }

  const auto& log = run.log;
  const size_t nsamp = log.times.size();
  for (size_t c = 0; c < spec.safety.size(); ++c) {
    double lo = std::numeric_limits<double>::infinity();
    for (double v : log.h_values[c]) lo = std::min(lo, v);
    m.min_h.emplace_back(spec.safety[c].name, lo);
  }
  m.final_tracking_error = nsamp ? spec.tracking_error(log.states.back()) : 0.0;
  m.qp_count = log.qp_count;

  for (size_t i = 0; i + 1 < nsamp; ++i) {
    const double dt_i = log.times[i + 1] - log.times[i];
    m.control_effort +=
        0.5 * dt_i * (log.controls[i].squaredNorm() + log.controls[i + 1].squaredNorm());
    bool violated = false;  // left-endpoint rule at log resolution
    for (const auto& hv : log.h_values) violated = violated || hv[i] < 0.0;
    if (violated) m.violation_duration += dt_i;
  }

  if (run.event_mode) {
    m.event_count = static_cast<long>(log.event_times.size());
    if (log.event_times.size() >= 2) {
      double lo = std::numeric_limits<double>::infinity(), sum = 0.0;
      for (size_t i = 0; i + 1 < log.event_times.size(); ++i) {
        const double gap = log.event_times[i + 1] - log.event_times[i];
        lo = std::min(lo, gap);
        sum += gap;
      }
      m.min_event_gap = lo;
      m.mean_event_gap = sum / static_cast<double>(log.event_times.size() - 1);
    }
  }
  return m;
}

// Same keys for every method and scenario; values that do not apply are
// null, never missing.
inline nlohmann::ordered_json metrics_to_json(const MetricsReport& m) {
  nlohmann::ordered_json j;
  j["scenario"] = m.scenario;
  j["method"] = m.method;
  j["dt"] = m.dt;
  j["t_end"] = m.t_end;
  j["completed"] = m.completed;
  j["fault_time"] = m.fault_time ? nlohmann::ordered_json(*m.fault_time) : nullptr;
  j["fault_reason"] = m.fault_reason ? nlohmann::ordered_json(*m.fault_reason) : nullptr;
  nlohmann::ordered_json mh = nlohmann::ordered_json::object();
  for (const auto& [name, v] : m.min_h) mh[name] = v;
  j["min_h"] = mh;
  j["final_tracking_error"] = m.final_tracking_error;
  j["qp_count"] = m.qp_count;
  j["control_effort"] = m.control_effort;
  j["violation_duration"] = m.violation_duration;
  j["event_count"] = m.event_count ? nlohmann::ordered_json(*m.event_count) : nullptr;
  j["min_event_gap"] = m.min_event_gap ? nlohmann::ordered_json(*m.min_event_gap) : nullptr;
  j["mean_event_gap"] = m.mean_event_gap ? nlohmann::ordered_json(*m.mean_event_gap) : nullptr;
  return j;
}

inline void write_metrics_json(const std::string& path, const MetricsReport& m) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("metrics: cannot open for writing: " + path);
  out << metrics_to_json(m).dump(2) << "\n";
  if (!out) throw std::runtime_error("metrics: write failed: " + path);
}

}  // namespace tlc
