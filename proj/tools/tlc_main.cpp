// Command-line front end: run a scenario under one method, compare several
// runs, or execute the built-in self checks.

#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "tlc/runner.hpp"

namespace {

// --set values arrive as text; config files carry typed JSON. Promote text
// to a number or a comma-separated numeric array when it parses as one.
nlohmann::json parse_set_value(const std::string& text) {
  auto as_number = [](const std::string& s, double& out) {
    try {
      size_t used = 0;
      out = std::stod(s, &used);
      return used == s.size();
    } catch (const std::exception&) {
      return false;
    }
  };
  double num = 0.0;
  if (as_number(text, num)) return num;
  if (text.find(',') != std::string::npos) {
    nlohmann::json arr = nlohmann::json::array();
    std::stringstream ss(text);
    std::string part;
    bool all_numeric = true;
    while (std::getline(ss, part, ',')) {
      if (!as_number(part, num)) {
        all_numeric = false;
        break;
      }
      arr.push_back(num);
    }
    if (all_numeric) return arr;
  }
  return text;
}

nlohmann::json load_overrides(const std::string& config_file,
                              const std::vector<std::string>& sets) {
  nlohmann::json overrides = nlohmann::json::object();
  if (!config_file.empty()) {
    std::ifstream in(config_file);
    if (!in) throw tlc::ConfigError("cannot read config file: " + config_file);
    try {
      overrides = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
      throw tlc::ConfigError(std::string("config file is not valid JSON: ") + e.what());
    }
    if (!overrides.is_object())
      throw tlc::ConfigError("config file must contain a JSON object");
  }
  for (const auto& kv : sets) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos || eq == 0)
      throw tlc::ConfigError("--set expects key=value, got '" + kv + "'");
    overrides[kv.substr(0, eq)] = parse_set_value(kv.substr(eq + 1));
  }
  return overrides;
}

void print_run_summary(const tlc::MetricsReport& m, const std::string& out_dir) {
  std::cout << "scenario " << m.scenario << ", method " << m.method << ", dt " << m.dt << "\n";
  if (m.completed) {
    std::cout << "completed horizon t_end = " << m.t_end << " s\n";
  } else {
    std::cout << "CONTROLLER FAULT at t = " << *m.fault_time << " s\n";
    if (m.fault_reason) {
      const std::string& r = *m.fault_reason;
      std::cout << "  " << r.substr(0, r.find('\n')) << "\n";
    }
  }
  for (const auto& [name, v] : m.min_h) std::cout << "min h_" << name << " = " << v << "\n";
  std::cout << "qp solves: " << m.qp_count;
  if (m.event_count) std::cout << " over " << *m.event_count << " events";
  std::cout << "\nwrote " << out_dir << "\n";
}

struct RequestArgs {
  std::string scenario;
  std::string method;
  nlohmann::json overrides;
};

// compare request syntax: scenario:method[:key=value[:key=value...]]
RequestArgs parse_request(const std::string& req) {
  std::vector<std::string> parts;
  std::stringstream ss(req);
  std::string part;
  while (std::getline(ss, part, ':')) parts.push_back(part);
  if (parts.size() < 2)
    throw tlc::ConfigError("request '" + req + "' must look like scenario:method[:key=value...]");
  RequestArgs out;
  out.scenario = parts[0];
  out.method = parts[1];
  out.overrides = nlohmann::json::object();
  for (size_t i = 2; i < parts.size(); ++i) {
    const auto eq = parts[i].find('=');
    if (eq == std::string::npos || eq == 0)
      throw tlc::ConfigError("request option '" + parts[i] + "' must be key=value");
    out.overrides[parts[i].substr(0, eq)] = parse_set_value(parts[i].substr(eq + 1));
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"safety-filter control runs with hold-aware constraint rows"};
  app.require_subcommand(1);

  std::string scenario, method, config_file, out_dir;
  std::vector<std::string> sets;
  unsigned seed = 12345;

  CLI::App* cmd_run = app.add_subcommand("run", "simulate one scenario under one method");
  cmd_run->add_option("--scenario", scenario, "acc or robot")->required();
  cmd_run->add_option("--method", method, "hocbf, tlc, or etlc")->required();
  cmd_run->add_option("--config", config_file, "JSON file with parameter overrides");
  cmd_run->add_option("--set", sets, "key=value override, repeatable");
  cmd_run->add_option("--out", out_dir, "output directory")->required();
  cmd_run->add_option("--seed", seed, "reserved for randomized harnesses; runs are deterministic");

  std::vector<std::string> requests;
  CLI::App* cmd_compare = app.add_subcommand("compare", "run several requests and tabulate them");
  cmd_compare->add_option("--out", out_dir, "output directory")->required();
  cmd_compare->add_option("requests", requests, "scenario:method[:key=value...]")->expected(-1);

  CLI::App* cmd_verify =
      app.add_subcommand("verify", "run the built-in derivative and remainder checks");
  cmd_verify->add_option("--seed", seed, "seed for the randomized state sampling");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help and friends
    app.exit(e);
    return 3;
  }

  try {
    if (cmd_run->parsed()) {
      const nlohmann::json overrides = load_overrides(config_file, sets);
      auto [spec, cfg] = tlc::configure_run(scenario, method, overrides);
      const tlc::RunResult run = tlc::execute_run(spec, cfg);
      const tlc::MetricsReport m = tlc::write_run_artifacts(out_dir, spec, run);
      print_run_summary(m, out_dir);
      return run.fault ? 2 : 0;
    }

    if (cmd_compare->parsed()) {
      if (requests.size() < 2) throw tlc::ConfigError("compare needs at least two requests");
      std::vector<std::pair<std::string, tlc::MetricsReport>> entries;
      for (size_t i = 0; i < requests.size(); ++i) {
        const RequestArgs r = parse_request(requests[i]);
        if (r.scenario != parse_request(requests[0]).scenario)
          throw tlc::ConfigError("compare requires all runs on the same scenario");
        auto [spec, cfg] = tlc::configure_run(r.scenario, r.method, r.overrides);
        const tlc::RunResult run = tlc::execute_run(spec, cfg);
        const std::string label = std::to_string(i + 1) + "_" + r.method;
        entries.emplace_back(label, tlc::write_run_artifacts(out_dir + "/" + label, spec, run));
      }
      tlc::write_comparison(out_dir, entries);
      std::cout << tlc::comparison_text(entries);
      std::cout << "wrote " << out_dir << "\n";
      return 0;
    }

    // verify
    const auto checks = tlc::run_verify_suite(seed);
    std::cout << tlc::format_verify_table(checks);
    bool all = true;
    for (const auto& c : checks) all = all && c.pass;
    std::cout << (all ? "all checks passed" : "CHECKS FAILED") << "\n";
    return all ? 0 : 1;
  } catch (const tlc::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
