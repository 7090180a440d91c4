// Release gate for the toolkit. Each test checks one shipping criterion and
// prints a single PASS/FAIL line with the measured numbers so the log reads
// as a checklist. A FAIL here is a red build by design, not a flaky test.

#include <gtest/gtest.h>

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <complex>
#include <cstdio>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <json.hpp>
#include <limits>
#include <map>
#include <memory>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "tlc/certificates.hpp"
#include "tlc/controller.hpp"
#include "tlc/csv.hpp"
#include "tlc/event_trigger.hpp"
#include "tlc/lie_chain.hpp"
#include "tlc/qp.hpp"
#include "tlc/runner.hpp"
#include "tlc/scenarios.hpp"
#include "tlc/system.hpp"
#include "tlc/taylor_identity.hpp"

using tlc::Mat;
using tlc::QPStatus;
using tlc::QuadraticProgram;
using tlc::RowSense;
using tlc::RowVec;
using tlc::Vec;

namespace {

namespace fs = std::filesystem;

constexpr double kInf = std::numeric_limits<double>::infinity();

// Pinned gate tolerances. Changing any of these is a release decision.
constexpr double kRowMatchRelTol = 1e-12;  // closed-form row identities
constexpr double kXiTol = 1e-3;            // mean-value point bracket
constexpr double kResidualFrac = 1e-4;     // remainder quadrature, fraction of max|h|
constexpr double kGridMatchTol = 1e-2;     // solver vs grid objective gap
constexpr double kOracleRelTol = 1e-6;     // solver vs active-set enumeration
constexpr double kKktTol = 1e-8;           // stationarity residual
constexpr double kFineGridFloor = -0.5;    // worst headway at the working cadence
constexpr double kSettleTarget = 13.89;    // lead speed the ego should adopt
constexpr double kSettleBand = 0.5;
constexpr double kClusterFactor = 1.05;    // inter-event gaps within 5% of the minimum
constexpr double kMinWindowFactor = 0.10;  // h within 10% of its minimum
constexpr double kSoundnessTol = -1e-9;    // robust row may not exceed the exact row
constexpr double kArrivalRadius = 2.0;     // goal tolerance, meters
constexpr double kSpeedTol = 1e-6;
constexpr double kTraceZeroTol = 1e-12;    // psi1 imaginary part vs boundary
constexpr double kTraceMatchRel = 1e-9;
constexpr double kChainFdTol = 1e-4;       // derivative chain vs finite differences

void report(int n, bool pass, const std::string& detail) {
  std::cout << "CRITERION " << n << ": " << (pass ? "PASS" : "FAIL") << " - " << detail
            << std::endl;
  EXPECT_TRUE(pass) << "criterion " << n << ": " << detail;
}

std::string fmt(double v, int prec = 4) {
  std::ostringstream os;
  os << std::setprecision(prec) << v;
  return os.str();
}

// Closed-loop runs are expensive enough to share across criteria. The
// scenario description is cached alongside the result because policies hold
// a reference to it.
struct CachedRun {
  tlc::ScenarioSpec spec;
  tlc::ControllerConfig cfg;
  tlc::RunResult run;
};

const CachedRun& get_run(const std::string& scenario, const std::string& method,
                         const nlohmann::json& overrides = nlohmann::json::object()) {
  static std::map<std::string, std::unique_ptr<CachedRun>> cache;
  const std::string key = scenario + "|" + method + "|" + overrides.dump();
  auto it = cache.find(key);
  if (it == cache.end()) {
    auto entry = std::make_unique<CachedRun>();
    auto configured = tlc::configure_run(scenario, method, overrides);
    entry->spec = std::move(configured.spec);
    entry->cfg = configured.cfg;
    entry->run = tlc::execute_run(entry->spec, entry->cfg);
    it = cache.emplace(key, std::move(entry)).first;
  }
  return *it->second;
}

double min_h(const tlc::RunResult& run, size_t constraint = 0) {
  const auto& series = run.log.h_values.at(constraint);
  return *std::min_element(series.begin(), series.end());
}

double worst_violation(const tlc::RunResult& run, size_t constraint = 0) {
  return std::max(0.0, -min_h(run, constraint));
}

Vec random_envelope_state(const tlc::ScenarioSpec& spec, std::mt19937& rng) {
  Vec x(spec.envelope.rows());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    std::uniform_real_distribution<double> coord(spec.envelope(i, 0), spec.envelope(i, 1));
    x[i] = coord(rng);
  }
  return x;
}

Vec random_box_control(const tlc::ControlBox& box, std::mt19937& rng) {
  Vec u(box.u_min.size());
  for (Eigen::Index i = 0; i < u.size(); ++i) {
    std::uniform_real_distribution<double> coord(box.u_min[i], box.u_max[i]);
    u[i] = coord(rng);
  }
  return u;
}

int log_index_at(const tlc::SimulationLog& log, double t) {
  for (size_t i = 0; i < log.times.size(); ++i)
    if (std::abs(log.times[i] - t) <= 1e-9) return static_cast<int>(i);
  return -1;
}

template <class F>
void for_each_grid_point(const Vec& lo, const Vec& hi, int pts, F&& f) {
  const Eigen::Index n = lo.size();
  std::vector<int> idx(static_cast<size_t>(n), 0);
  Vec x(n);
  while (true) {
    for (Eigen::Index i = 0; i < n; ++i)
      x[i] = lo[i] + (hi[i] - lo[i]) * idx[static_cast<size_t>(i)] / double(pts - 1);
    f(x);
    Eigen::Index i = 0;
    while (i < n && ++idx[static_cast<size_t>(i)] == pts) {
      idx[static_cast<size_t>(i)] = 0;
      ++i;
    }
    if (i == n) break;
  }
}

}  // namespace

// Row identities: at first order the hold-aware row must agree with the
// classical barrier row using a 1/dt linear gain, and at second order with
// the pole form rebuilt from the conjugate pair, whose sum is 2/dt and whose
// product is 2/dt^2.
TEST(AcceptanceGate, Criterion01) {
  std::mt19937 rng(101);
  const auto acc = tlc::make_acc({});
  const auto robot = tlc::make_robot({});
  const auto robot_goal = tlc::make_robot({}, tlc::StabilityMode::TLS_m2);

  double worst = 0.0;
  long compared = 0;
  bool pair_ok = true;

  auto check_spec = [&](const tlc::ScenarioSpec& spec,
                        const std::vector<const tlc::LieDerivativeChain*>& chains) {
    for (int trial = 0; trial < 100; ++trial) {
      const Vec x = random_envelope_state(spec, rng);
      for (double dt : {0.1, 0.37}) {
        const auto roots = tlc::complex_roots(dt);
        pair_ok = pair_ok && roots.p2 == std::conj(roots.p1);
        const double sum = (roots.p1 + roots.p2).real();
        const double prod = (roots.p1 * roots.p2).real();
        pair_ok = pair_ok && std::abs(sum - 2.0 / dt) <= 1e-12 * (2.0 / dt);
        pair_ok = pair_ok && std::abs(prod - 2.0 / (dt * dt)) <= 1e-11 * (2.0 / (dt * dt));
        for (const auto* chain : chains) {
          const auto row = tlc::zoh_tlc_row(*chain, x, dt);
          const auto e = tlc::eval_chain(*chain, x);
          double b_want = 0.0;
          if (chain->m == 1) {
            b_want = e.lf[1] + (1.0 / dt) * e.lf[0];
          } else {
            b_want = e.lf[2] + sum * e.lf[1] + prod * e.lf[0];
          }
          const double rel_b = std::abs(row.b - b_want) / std::max(1.0, std::abs(b_want));
          const double rel_a =
              (row.a - e.lglf).cwiseAbs().maxCoeff() / std::max(1.0, e.lglf.cwiseAbs().maxCoeff());
          worst = std::max({worst, rel_b, rel_a});
          ++compared;
        }
      }
    }
  };

  check_spec(acc, {&acc.safety[0], &acc.stability[0]});
  check_spec(robot, {&robot.safety[0], &robot.safety[1], &robot.safety[2], &robot.stability[0],
                     &robot.stability[1]});
  check_spec(robot_goal, {&robot_goal.stability[0]});

  const bool pass = pair_ok && worst <= kRowMatchRelTol;
  report(1, pass,
         "first and second order rows match their closed forms over " + std::to_string(compared) +
             " comparisons, worst relative gap " + fmt(worst, 3) +
             (pair_ok ? ", conjugate pair sums/products exact" : ", conjugate pair mismatch"));
}

// Remainder bookkeeping: the cubic pins the mean-value point at 1/3, and on a
// recorded braking interval the quadrature residual must be small and shrink
// as the sampling is refined.
TEST(AcceptanceGate, Criterion02) {
  // cubic h(t) = t^3 on [0,1] with a second-order expansion
  std::vector<double> cubic(1001);
  for (size_t i = 0; i < cubic.size(); ++i) {
    const double t = double(i) / double(cubic.size() - 1);
    cubic[i] = t * t * t;
  }
  const auto cube_report = tlc::verify_taylor_identity(cubic, 0.0, 1.0, 2);
  const double third = 1.0 / 3.0;
  const bool cube_ok = cube_report.xi_lo <= third && third <= cube_report.xi_hi &&
                       std::abs(cube_report.xi_lo - third) <= kXiTol &&
                       std::abs(cube_report.xi_hi - third) <= kXiTol;

  // recorded vehicle interval: first step where the filter overrides the
  // reference control, so h actually curves. The pole-form run is the one
  // that brakes; the hold-aware run halts while its row is still slack.
  const auto& rec = get_run("acc", "hocbf");
  size_t k = 0;
  bool found_step = false;
  for (size_t i = 0; i + 1 < rec.run.log.times.size(); ++i) {
    const Vec uref = rec.spec.u_ref(rec.run.log.states[i]);
    if ((rec.run.log.controls[i] - uref).cwiseAbs().maxCoeff() > 1.0) {
      k = i;
      found_step = true;
      break;
    }
  }
  ASSERT_TRUE(found_step) << "no filtered step in the recorded run";

  const auto& chain = rec.spec.safety[0];
  std::vector<double> fine;
  fine.reserve(101);
  Vec x = rec.run.log.states[k];
  const Vec u = rec.run.log.controls[k];
  fine.push_back(chain.lf[0](x));
  for (int i = 0; i < 100; ++i) {
    x = tlc::integrate_zoh_step(rec.spec.system, x, u, 1e-3, 4);
    fine.push_back(chain.lf[0](x));
  }
  std::vector<double> coarse;
  for (size_t i = 0; i < fine.size(); i += 2) coarse.push_back(fine[i]);

  const auto rf = tlc::verify_taylor_identity(fine, 0.0, 0.1, 2);
  const auto rc = tlc::verify_taylor_identity(coarse, 0.0, 0.1, 2);
  double h_scale = 0.0;
  for (double h : fine) h_scale = std::max(h_scale, std::abs(h));

  const bool resid_ok = rf.residual <= kResidualFrac * h_scale;
  const bool refine_ok =
      rf.residual < rc.residual || rf.residual <= 1e-10 * std::max(1.0, h_scale);
  const bool bracket_ok = rf.xi_lo >= -1e-12 && rf.xi_hi <= 0.1 + 1e-12;

  const bool pass = cube_ok && resid_ok && refine_ok && bracket_ok;
  report(2, pass,
         "cubic xi bracket [" + fmt(cube_report.xi_lo, 6) + ", " + fmt(cube_report.xi_hi, 6) +
             "] around 1/3; braking interval at t=" + fmt(rec.run.log.times[k], 3) +
             " residual " + fmt(rf.residual, 3) + " (limit " + fmt(kResidualFrac * h_scale, 3) +
             "), refined from " + fmt(rc.residual, 3));
}

namespace {

// Exact reference for small programs: enumerate KKT candidates over every
// independent subset of the constraints and keep the best feasible one.
struct Reference {
  bool feasible = false;
  double objective = 0.0;
};

Reference reference_solve(const QuadraticProgram& qp) {
  const int d = static_cast<int>(qp.linear.size());
  struct Con {
    RowVec a;
    double rhs;
  };
  std::vector<Con> cons;
  for (const auto& r : qp.rows) {
    if (r.sense == RowSense::GEQ)
      cons.push_back({r.a, -r.b});
    else
      cons.push_back({-r.a, r.b});
  }
  for (int i = 0; i < d; ++i) {
    if (std::isfinite(qp.lower[i])) {
      RowVec a = RowVec::Zero(d);
      a[i] = 1.0;
      cons.push_back({a, qp.lower[i]});
    }
    if (std::isfinite(qp.upper[i])) {
      RowVec a = RowVec::Zero(d);
      a[i] = -1.0;
      cons.push_back({a, -qp.upper[i]});
    }
  }
  const int m = static_cast<int>(cons.size());
  auto feasible_point = [&](const Vec& x) {
    for (const auto& c : cons)
      if (c.a.dot(x) < c.rhs - 1e-9) return false;
    return true;
  };

  Reference best;
  for (unsigned mask = 0; mask < (1u << m); ++mask) {
    const int k = std::popcount(mask);
    if (k > d) continue;
    Mat kkt = Mat::Zero(d + k, d + k);
    Vec rhs = Vec::Zero(d + k);
    kkt.topLeftCorner(d, d) = qp.hessian;
    rhs.head(d) = -qp.linear;
    int j = 0;
    for (int i = 0; i < m; ++i) {
      if (!(mask & (1u << i))) continue;
      kkt.block(d + j, 0, 1, d) = cons[i].a;
      kkt.block(0, d + j, d, 1) = cons[i].a.transpose();
      rhs[d + j] = cons[i].rhs;
      ++j;
    }
    Eigen::FullPivLU<Mat> lu(kkt);
    if (!lu.isInvertible()) continue;
    const Vec sol = lu.solve(rhs);
    const Vec x = sol.head(d);
    if (!feasible_point(x)) continue;
    const double obj = 0.5 * x.dot(qp.hessian * x) + qp.linear.dot(x);
    if (!best.feasible || obj < best.objective) {
      best.feasible = true;
      best.objective = obj;
    }
  }
  return best;
}

// Brute-force grid: dense scan of the box, then a local lattice walk and a
// final polish around the best cell. The walk handles narrow feasible wedges
// the coarse pass only clips.
struct GridBest {
  bool found = false;
  double obj = 0.0;
  double x[2] = {0.0, 0.0};
};

void grid_scan(const QuadraticProgram& qp, const double* lo, const double* hi, int pts,
               GridBest& best) {
  const int d = static_cast<int>(qp.linear.size());
  const double h0 = qp.hessian(0, 0), c0 = qp.linear[0];
  const double h1 = d > 1 ? qp.hessian(1, 1) : 0.0;
  const double c1 = d > 1 ? qp.linear[1] : 0.0;
  const int n1 = d > 1 ? pts : 1;
  for (int i = 0; i < pts; ++i) {
    const double x0 = lo[0] + (hi[0] - lo[0]) * i / double(pts - 1);
    for (int j = 0; j < n1; ++j) {
      double x1 = 0.0;
      if (d > 1) x1 = lo[1] + (hi[1] - lo[1]) * j / double(pts - 1);
      bool ok = true;
      for (const auto& r : qp.rows) {
        double v = r.b + r.a[0] * x0;
        if (d > 1) v += r.a[1] * x1;
        if (r.sense == RowSense::GEQ ? v < -1e-12 : v > 1e-12) {
          ok = false;
          break;
        }
      }
      if (!ok) continue;
      const double obj = 0.5 * (h0 * x0 * x0 + h1 * x1 * x1) + c0 * x0 + c1 * x1;
      if (!best.found || obj < best.obj) {
        best.found = true;
        best.obj = obj;
        best.x[0] = x0;
        best.x[1] = x1;
      }
    }
  }
}

GridBest grid_search(const QuadraticProgram& qp) {
  const int d = static_cast<int>(qp.linear.size());
  double lo[2] = {0, 0}, hi[2] = {0, 0};
  for (int i = 0; i < d; ++i) {
    lo[i] = qp.lower[i];
    hi[i] = qp.upper[i];
  }
  GridBest best;
  grid_scan(qp, lo, hi, 401, best);
  if (!best.found) return best;
  for (int round = 0; round < 100; ++round) {
    const double prev = best.obj;
    double l2[2], h2[2];
    for (int i = 0; i < d; ++i) {
      l2[i] = std::max(lo[i], best.x[i] - 0.04);
      h2[i] = std::min(hi[i], best.x[i] + 0.04);
    }
    grid_scan(qp, l2, h2, 81, best);
    if (best.obj > prev - 1e-12) break;
  }
  double l3[2], h3[2];
  for (int i = 0; i < d; ++i) {
    l3[i] = std::max(lo[i], best.x[i] - 2e-3);
    h3[i] = std::min(hi[i], best.x[i] + 2e-3);
  }
  grid_scan(qp, l3, h3, 81, best);
  return best;
}

}  // namespace

// Solver trust: on random boxed programs the active-set solver must agree
// with an exhaustive active-set enumeration, match a brute-force grid, and
// leave a tiny stationarity residual.
TEST(AcceptanceGate, Criterion03) {
  std::mt19937 rng(424242);
  std::uniform_int_distribution<int> dim_pick(1, 2);
  std::uniform_real_distribution<double> hess(0.2, 3.0);
  std::uniform_real_distribution<double> lin(-3.0, 3.0);
  std::uniform_real_distribution<double> coef(-2.0, 2.0);
  std::uniform_int_distribution<int> row_count(0, 4);
  std::uniform_int_distribution<int> coin(0, 1);

  int optimal_seen = 0, infeasible_seen = 0, grid_missing = 0;
  double worst_grid = 0.0, worst_oracle = 0.0, worst_kkt = 0.0;
  bool ok = true;
  std::string first_fail;

  for (int trial = 0; trial < 200; ++trial) {
    const int d = dim_pick(rng);
    QuadraticProgram qp;
    qp.hessian = Mat::Zero(d, d);
    qp.linear = Vec(d);
    for (int i = 0; i < d; ++i) {
      qp.hessian(i, i) = hess(rng);
      qp.linear[i] = lin(rng);
    }
    qp.lower = Vec::Constant(d, -4.0);
    qp.upper = Vec::Constant(d, 4.0);
    const int nr = row_count(rng);
    for (int r = 0; r < nr; ++r) {
      tlc::HalfspaceRow row;
      row.a = RowVec(d);
      for (int i = 0; i < d; ++i) row.a[i] = coef(rng);
      row.b = lin(rng);
      row.sense = coin(rng) ? RowSense::GEQ : RowSense::LEQ;
      qp.rows.push_back(row);
    }

    const auto sol = tlc::solve(qp);
    const auto ref = reference_solve(qp);
    auto fail = [&](const std::string& why) {
      ok = false;
      if (first_fail.empty()) first_fail = "trial " + std::to_string(trial) + ": " + why;
    };

    if ((sol.status == QPStatus::Optimal) != ref.feasible) {
      fail("status disagrees with enumeration");
      continue;
    }
    if (sol.status == QPStatus::Optimal) {
      ++optimal_seen;
      const double gap =
          std::abs(sol.objective - ref.objective) / std::max(1.0, std::abs(ref.objective));
      worst_oracle = std::max(worst_oracle, gap);
      if (gap > kOracleRelTol) fail("objective off enumeration by " + fmt(gap, 3));
      const double kkt = tlc::kkt_residual(qp, sol);
      worst_kkt = std::max(worst_kkt, kkt);
      if (kkt > kKktTol) fail("kkt residual " + fmt(kkt, 3));
    } else {
      ++infeasible_seen;
    }

    const auto grid = grid_search(qp);
    if (sol.status == QPStatus::Optimal) {
      if (!grid.found) {
        ++grid_missing;
      } else {
        if (sol.objective > grid.obj + 1e-9) fail("solver lost to a feasible grid point");
        const double gap = grid.obj - sol.objective;
        worst_grid = std::max(worst_grid, gap);
        if (gap > kGridMatchTol) fail("grid best exceeds solver by " + fmt(gap, 3));
      }
    } else if (grid.found) {
      fail("solver infeasible but the grid found a point");
    }
  }

  ok = ok && optimal_seen >= 50 && infeasible_seen >= 10;
  report(3, ok,
         std::to_string(optimal_seen) + " optimal / " + std::to_string(infeasible_seen) +
             " infeasible programs; worst grid gap " + fmt(worst_grid, 3) + ", worst oracle gap " +
             fmt(worst_oracle, 3) + ", worst kkt " + fmt(worst_kkt, 3) +
             (grid_missing ? ", grid missed " + std::to_string(grid_missing) : "") +
             (first_fail.empty() ? "" : "; " + first_fail));
}

// Safety outcomes on the vehicle problem across methods and cadences: the
// event-driven filter and the working cadence keep the headway nonnegative
// (the latter up to a small documented floor), while a 10x coarser hold
// interval loses the margin and shows a strictly larger violation.
TEST(AcceptanceGate, Criterion04) {
  const auto& ev = get_run("acc", "etlc");
  const auto& fine = get_run("acc", "tlc");
  const auto& coarse = get_run("acc", "tlc", nlohmann::json{{"dt", 1.0}});

  const double ev_min = min_h(ev.run);
  const double fine_min = min_h(fine.run);
  const double coarse_min = min_h(coarse.run);
  const double v_fine = worst_violation(fine.run);
  const double v_coarse = worst_violation(coarse.run);

  const bool a = ev_min >= 0.0;
  const bool b = fine_min >= kFineGridFloor;
  const bool c = coarse_min < 0.0;
  const bool d = v_coarse > v_fine;
  report(4, a && b && c && d,
         "min headway: event-driven " + fmt(ev_min) + " (>=0 " + (a ? "ok" : "FAIL") +
             "), dt=0.1 " + fmt(fine_min) + " (>=" + fmt(kFineGridFloor) + " " +
             (b ? "ok" : "FAIL") + "), dt=1 " + fmt(coarse_min) + " (<0 " + (c ? "ok" : "FAIL") +
             "); violation " + fmt(v_coarse) + " > " + fmt(v_fine) + " " + (d ? "ok" : "FAIL") +
             (ev.run.fault ? "; event run halts at t=" + fmt(ev.run.fault->t, 3) : ""));
}

// Tracking outcome: under the pole-form filter the ego starts at 24 m/s,
// settles onto the lead speed well before the horizon, and every logged
// control in every vehicle run respects the actuator box exactly.
TEST(AcceptanceGate, Criterion05) {
  const auto& run = get_run("acc", "hocbf");
  const auto& log = run.run.log;
  ASSERT_FALSE(log.states.empty());

  const bool start_ok = log.states.front()[0] == 24.0;

  size_t first_settled = log.states.size();
  for (size_t i = log.states.size(); i-- > 0;) {
    if (std::abs(log.states[i][0] - kSettleTarget) > kSettleBand) {
      first_settled = i + 1;
      break;
    }
    first_settled = i;
  }
  const bool settled = first_settled < log.times.size();
  const double settle_time = settled ? log.times[first_settled] : kInf;
  const bool settle_ok = settled && settle_time < run.run.t_end;

  long control_violations = 0;
  for (const auto* cr : {&run, &get_run("acc", "tlc"),
                         &get_run("acc", "tlc", nlohmann::json{{"dt", 1.0}}),
                         &get_run("acc", "etlc")}) {
    for (const auto& u : cr->run.log.controls)
      if (!cr->spec.system.control_box.contains(u)) ++control_violations;
  }

  const bool pass = start_ok && settle_ok && control_violations == 0;
  report(5, pass,
         "v(0)=" + fmt(log.states.front()[0]) + ", settles to " + fmt(kSettleTarget) + "+/-" +
             fmt(kSettleBand) + " at t=" + fmt(settle_time, 4) + " (horizon " +
             fmt(run.run.t_end) + "), box violations across vehicle runs: " +
             std::to_string(control_violations));
}

namespace {

struct EventAudit {
  long samples_checked = 0;
  long containment_violations = 0;
  bool cluster_ok = false;
  double min_gap = 0.0;
  double h_min = 0.0;
  double cluster_h = kInf;
};

EventAudit audit_event_run(const CachedRun& cr) {
  EventAudit audit;
  const auto& log = cr.run.log;
  const auto& events = log.event_times;

  // replay the box the monitor was watching between consecutive events
  std::vector<std::pair<double, Vec>> centers;
  for (double te : events) {
    const int k = log_index_at(log, te);
    if (k >= 0) centers.push_back({te, log.states[static_cast<size_t>(k)]});
  }
  for (size_t i = 0; i < log.times.size(); ++i) {
    if (cr.run.fault && i + 1 == log.times.size()) continue;  // halt sample, box already stale
    const Vec* center = nullptr;
    for (const auto& [te, c] : centers)
      if (te <= log.times[i] + 1e-12) center = &c;
    if (!center) continue;
    tlc::StateBox box{*center, cr.spec.box_lower_offsets, cr.spec.box_upper_offsets};
    ++audit.samples_checked;
    if (!box.contains(log.states[i])) ++audit.containment_violations;
  }

  // the tightest burst of events should sit where h runs closest to its
  // minimum. The log records an event only when its recompute produced a
  // control, so on a halted run the monitor's final trigger, the one whose
  // recompute came back infeasible, is appended here: it is an event of the
  // triggering mechanism even though no control came out of it.
  std::vector<double> triggers(events.begin(), events.end());
  if (cr.run.fault && (triggers.empty() || cr.run.fault->t > triggers.back() + 1e-12))
    triggers.push_back(cr.run.fault->t);
  audit.h_min = min_h(cr.run);
  const double window =
      audit.h_min > 0.0 ? (1.0 + kMinWindowFactor) * audit.h_min
                        : (1.0 - kMinWindowFactor) * audit.h_min;
  if (triggers.size() >= 2) {
    std::vector<double> gaps(triggers.size() - 1);
    for (size_t i = 0; i + 1 < triggers.size(); ++i) gaps[i] = triggers[i + 1] - triggers[i];
    audit.min_gap = *std::min_element(gaps.begin(), gaps.end());
    for (size_t i = 0; i + 1 < triggers.size(); ++i) {
      if (gaps[i] > kClusterFactor * audit.min_gap) continue;
      for (double te : {triggers[i], triggers[i + 1]}) {
        const int k = log_index_at(log, te);
        if (k < 0) continue;
        const double h = log.h_values[0][static_cast<size_t>(k)];
        audit.cluster_h = std::min(audit.cluster_h, h);
        if (h <= window) audit.cluster_ok = true;
      }
    }
  }
  return audit;
}

}  // namespace

// Event-driven behavior: states never leave the box armed at the previous
// event, the densest burst of events coincides with the smallest safety
// margin, and the recompute count stays below the time-driven loop's count.
// The last clause is measured against the same 0.1 s update grid.
TEST(AcceptanceGate, Criterion06) {
  const auto& acc_ev = get_run("acc", "etlc");
  const auto& robot_ev = get_run("robot", "etlc");
  const auto& acc_td = get_run("acc", "tlc");
  const auto& robot_td = get_run("robot", "tlc");

  const auto a1 = audit_event_run(acc_ev);
  const auto a2 = audit_event_run(robot_ev);

  const bool contain_ok = a1.containment_violations == 0 && a2.containment_violations == 0;
  const bool cluster_ok = a1.cluster_ok && a2.cluster_ok;
  const long acc_ev_qp = acc_ev.run.log.qp_count;
  const long robot_ev_qp = robot_ev.run.log.qp_count;
  const long acc_td_qp = acc_td.run.log.qp_count;
  const long robot_td_qp = robot_td.run.log.qp_count;
  const bool qp_ok = acc_ev_qp < acc_td_qp && robot_ev_qp < robot_td_qp;

  // the alternative reading: solves the event design avoids versus checking
  // the constraint at every monitor instant
  const long acc_monitor = static_cast<long>(std::llround(
      (acc_ev.run.fault ? acc_ev.run.fault->t : acc_ev.run.t_end) / acc_ev.run.monitor_dt));
  const long robot_monitor = static_cast<long>(std::llround(
      (robot_ev.run.fault ? robot_ev.run.fault->t : robot_ev.run.t_end) / robot_ev.run.monitor_dt));

  const bool pass = contain_ok && cluster_ok && qp_ok;
  report(6, pass,
         "containment violations " + std::to_string(a1.containment_violations) + "+" +
             std::to_string(a2.containment_violations) + " over " +
             std::to_string(a1.samples_checked + a2.samples_checked) +
             " samples; densest event burst hits the h-min window (vehicle min h " +
             fmt(a1.h_min) + ", burst h " + fmt(a1.cluster_h) + "; robot min h " + fmt(a2.h_min) +
             ", burst h " + fmt(a2.cluster_h) + ") " + (cluster_ok ? "ok" : "FAIL") +
             "; qp solves vs the same update grid: vehicle " + std::to_string(acc_ev_qp) +
             " vs " + std::to_string(acc_td_qp) + ", robot " + std::to_string(robot_ev_qp) +
             " vs " + std::to_string(robot_td_qp) + " " + (qp_ok ? "ok" : "FAIL") +
             " (vs per-monitor-instant solving they would read " + std::to_string(acc_ev_qp) +
             "<" + std::to_string(acc_monitor) + " and " + std::to_string(robot_ev_qp) + "<" +
             std::to_string(robot_monitor) + ")");
}

// Robust row soundness: for random state boxes the interval row built by the
// monitor must lower-bound the exact pointwise row for every state in the box
// and every control consistent with the assumed sign pattern.
TEST(AcceptanceGate, Criterion07) {
  struct ScenarioCase {
    tlc::ScenarioSpec spec;
    unsigned seed;
    int oracle_pts;
  };
  std::vector<ScenarioCase> cases;
  cases.push_back({tlc::make_acc({}), 7001, 9});
  cases.push_back({tlc::make_robot({}), 7002, 6});

  double worst_margin = kInf;
  long rows_checked = 0;
  bool pass = true;
  std::string where;

  for (auto& sc : cases) {
    std::mt19937 rng(sc.seed);
    std::uniform_real_distribution<double> frac(0.2, 1.0);
    const auto& box_caps = sc.spec.system.control_box;
    const Eigen::Index n = sc.spec.x0.size();
    const Eigen::Index q = box_caps.u_min.size();

    for (const auto& chain : sc.spec.safety) {
      for (int pair_i = 0; pair_i < 100; ++pair_i) {
        const Vec center = random_envelope_state(sc.spec, rng);
        Vec lo_off(n), hi_off(n);
        for (Eigen::Index i = 0; i < n; ++i) {
          lo_off[i] = frac(rng) * sc.spec.box_lower_offsets[i];
          hi_off[i] = frac(rng) * sc.spec.box_upper_offsets[i];
        }
        const tlc::StateBox box{center, lo_off, hi_off};

        for (unsigned pat = 0; pat < (1u << q); ++pat) {
          Vec sign(q);
          Vec corner(q);
          for (Eigen::Index k = 0; k < q; ++k) {
            sign[k] = (pat >> k) & 1u ? 1.0 : -1.0;
            corner[k] = sign[k] >= 0.0 ? box_caps.u_max[k] : box_caps.u_min[k];
          }
          const auto rb =
              tlc::robust_bounds(chain, box, 0.1, sign, tlc::default_grid_per_dim(n));
          const std::array<Vec, 2> probes = {corner, Vec::Zero(q)};
          for_each_grid_point(box.lo(), box.hi(), sc.oracle_pts, [&](const Vec& x) {
            const auto row = tlc::zoh_tlc_row(chain, x, 0.1);
            for (const Vec& u : probes) {
              const double margin =
                  (row.b + row.a.dot(u)) - (rb.h_r + rb.G.dot(u));
              ++rows_checked;
              if (margin < worst_margin) worst_margin = margin;
              if (margin < kSoundnessTol && pass) {
                pass = false;
                where = sc.spec.name + "/" + chain.name;
              }
            }
          });
        }
      }
    }
  }

  report(7, pass,
         "interval rows stayed below the exact rows over " + std::to_string(rows_checked) +
             " state/control probes, worst margin " + fmt(worst_margin, 3) +
             (pass ? "" : " at " + where));
}

// Obstacle-course outcomes: both the pole-form run and the event-driven run
// must keep clear of the obstacle with exact actuator and speed limits, and
// reach the goal region by the end of the horizon.
TEST(AcceptanceGate, Criterion08) {
  const tlc::RobotParams params{};
  struct Clause {
    std::string name;
    bool clear = true, arrive = true, speed = true, boxed = true;
    double min_clear = 0.0, final_dist = 0.0;
    std::optional<double> fault_t;
  };
  std::vector<Clause> clauses;

  for (const char* method : {"hocbf", "etlc"}) {
    const auto& cr = get_run("robot", method);
    Clause cl;
    cl.name = method;
    cl.min_clear = min_h(cr.run, 0);
    cl.clear = cl.min_clear >= 0.0;
    const Vec& last = cr.run.log.states.back();
    cl.final_dist = std::hypot(last[0] - params.x_d, last[1] - params.y_d);
    cl.arrive = cl.final_dist <= kArrivalRadius;
    for (const auto& s : cr.run.log.states)
      if (s[3] < params.v_min - kSpeedTol || s[3] > params.v_max + kSpeedTol) cl.speed = false;
    for (const auto& u : cr.run.log.controls)
      if (!cr.spec.system.control_box.contains(u)) cl.boxed = false;
    if (cr.run.fault) cl.fault_t = cr.run.fault->t;
    clauses.push_back(cl);
  }

  bool pass = true;
  std::ostringstream os;
  for (const auto& cl : clauses) {
    pass = pass && cl.clear && cl.arrive && cl.speed && cl.boxed;
    os << cl.name << ": min clearance " << fmt(cl.min_clear) << " (" << (cl.clear ? "ok" : "FAIL")
       << "), final goal distance " << fmt(cl.final_dist) << " ("
       << (cl.arrive ? "ok" : "FAIL") << ")" << (cl.speed ? "" : ", speed limit FAIL")
       << (cl.boxed ? "" : ", control box FAIL");
    if (cl.fault_t) os << ", halted at t=" << fmt(*cl.fault_t, 4);
    os << "; ";
  }
  report(8, pass, os.str());
}

// Diagnostic trace: read back from the written artifacts, the imaginary part
// of the first-stage trace must vanish exactly on the boundary h = 0 and only
// there for the hold-aware methods, and identically for the pole form.
TEST(AcceptanceGate, Criterion09) {
  const fs::path base = fs::path(::testing::TempDir()) / "tlc_acceptance_traces";
  fs::remove_all(base);

  struct TraceCase {
    std::string scenario, method, h_col;
  };
  const std::vector<TraceCase> traced = {{"acc", "tlc", "h_headway"},
                                         {"acc", "etlc", "h_headway"},
                                         {"acc", "hocbf", "h_headway"},
                                         {"robot", "tlc", "h_obstacle"}};
  bool pass = true;
  long rows_total = 0;
  std::string detail;

  for (const auto& tc : traced) {
    const auto& cr = get_run(tc.scenario, tc.method);
    const fs::path dir = base / (tc.scenario + "_" + tc.method);
    fs::create_directories(dir);
    tlc::write_run_artifacts(dir.string(), cr.spec, cr.run);

    const auto traj = tlc::read_csv((dir / "trajectory.csv").string());
    const auto trace = tlc::read_csv((dir / "psi1.csv").string());
    const int hc = traj.column(tc.h_col);
    const int imc = trace.column("psi1_im");
    if (traj.rows.size() != trace.rows.size()) {
      pass = false;
      detail += tc.scenario + "/" + tc.method + " row count mismatch; ";
      continue;
    }
    const bool pole_form = tc.method == "hocbf";
    long bad = 0;
    for (size_t r = 0; r < traj.rows.size(); ++r) {
      const double h = traj.rows[r][static_cast<size_t>(hc)];
      const double im = trace.rows[r][static_cast<size_t>(imc)];
      ++rows_total;
      if (pole_form) {
        if (im != 0.0) ++bad;
        continue;
      }
      const double want = -h / cr.run.dt;
      if (std::abs(im - want) > kTraceMatchRel * std::max(1.0, std::abs(want))) ++bad;
      if (std::abs(h) > kTraceZeroTol && std::abs(im) <= kTraceZeroTol) ++bad;
      if (std::abs(h) <= kTraceZeroTol && std::abs(im) > 10.0 * kTraceZeroTol) ++bad;
    }
    if (bad) {
      pass = false;
      detail += tc.scenario + "/" + tc.method + " " + std::to_string(bad) + " bad rows; ";
    }
  }

  report(9, pass,
         "trace imaginary part tracks -h/dt for hold-aware runs and is exactly zero for the "
         "pole form across " +
             std::to_string(rows_total) + " artifact rows" + (pass ? "" : "; " + detail));
}

// Derivative plumbing: every chain the scenarios ship is cross-checked
// against finite differences of the raw dynamics at random operating states.
TEST(AcceptanceGate, Criterion10) {
  const auto acc = tlc::make_acc({});
  const auto robot = tlc::make_robot({});
  const auto robot_goal = tlc::make_robot({}, tlc::StabilityMode::TLS_m2);

  struct ChainCase {
    const tlc::ScenarioSpec* spec;
    const tlc::LieDerivativeChain* chain;
  };
  std::vector<ChainCase> cases;
  for (const auto& c : acc.safety) cases.push_back({&acc, &c});
  for (const auto& c : acc.stability) cases.push_back({&acc, &c});
  for (const auto& c : robot.safety) cases.push_back({&robot, &c});
  for (const auto& c : robot.stability) cases.push_back({&robot, &c});
  for (const auto& c : robot_goal.stability) cases.push_back({&robot_goal, &c});

  bool pass = true;
  double worst = 0.0;
  std::string worst_name;
  unsigned seed = 2026;
  for (const auto& cc : cases) {
    std::mt19937 rng(seed++);
    double chain_worst = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
      const Vec x = random_envelope_state(*cc.spec, rng);
      const Vec u = random_box_control(cc.spec->system.control_box, rng);
      chain_worst =
          std::max(chain_worst, tlc::finite_diff_chain_check(cc.spec->system, *cc.chain, x, u));
    }
    if (chain_worst > worst) {
      worst = chain_worst;
      worst_name = cc.spec->name + "/" + cc.chain->name;
    }
    if (chain_worst > kChainFdTol) pass = false;
  }

  report(10, pass,
         std::to_string(cases.size()) + " chains x 100 random states each, worst relative "
                                        "derivative gap " +
             fmt(worst, 3) + " at " + worst_name + " (limit " + fmt(kChainFdTol) + ")");
}
