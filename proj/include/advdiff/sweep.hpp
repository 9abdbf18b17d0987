#pragma once

// Batch driver: expands a flat config into parameter points, runs them on a
// work queue, writes one CSV per experiment (rows in point order), optional
// SVG plots and a manifest. Nothing here is random; rerunning a config
// reproduces the CSVs byte for byte.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "advdiff/adjoint_solver.hpp"
#include "advdiff/carleman_lab.hpp"
#include "advdiff/config.hpp"
#include "advdiff/core_types.hpp"
#include "advdiff/dissipation_lab.hpp"
#include "advdiff/fit.hpp"
#include "advdiff/forward_solver.hpp"
#include "advdiff/fourier_nd.hpp"
#include "advdiff/hum_control.hpp"
#include "advdiff/lower_bound_lab.hpp"
#include "advdiff/parallel.hpp"
#include "advdiff/profiles.hpp"
#include "advdiff/svg_plot.hpp"

namespace advdiff {

inline constexpr const char* kCodeVersion = "advdiff-0.1.0";

enum class Experiment { forward, adjoint, hum, cost_sweep, dissipation, carleman, lowerbound, fourier2d };

inline const std::vector<std::pair<Experiment, std::string>>& experiment_names() {
  static const std::vector<std::pair<Experiment, std::string>> names = {
      {Experiment::forward, "forward"},         {Experiment::adjoint, "adjoint"},
      {Experiment::hum, "hum"},                 {Experiment::cost_sweep, "cost_sweep"},
      {Experiment::dissipation, "dissipation"}, {Experiment::carleman, "carleman"},
      {Experiment::lowerbound, "lowerbound"},   {Experiment::fourier2d, "fourier2d"}};
  return names;
}

inline std::string to_string(Experiment e) {
  for (const auto& [k, v] : experiment_names())
    if (k == e) return v;
  return "?";
}

inline Experiment parse_experiment(const std::string& s) {
  for (const auto& [k, v] : experiment_names())
    if (v == s) return k;
  throw ConfigError("unknown experiment '" + s + "'");
}

/// Shortest round-trip decimal form; stable across runs and platforms.
inline std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

inline int required_n_space(double epsilon) {
  return std::max(201, static_cast<int>(std::ceil(4.0 / epsilon - 1e-9)));
}

struct SweepConfig {
  Experiment experiment = Experiment::forward;
  std::vector<double> epsilons{0.1};
  std::vector<double> as{0.0};
  std::vector<double> horizons{4.0};
  std::vector<double> penalty_deltas{1e-8};
  std::vector<double> bump_deltas{0.1};
  std::vector<double> gaps{2.0, 4.0};
  int n_space = 0;  // 0: smallest size allowed by the resolution policy
  int n_time = 2000;
  double theta = 0.5;
  int workers = 1;
  bool allow_small_epsilon = false;
  bool assertions = true;
  bool plot = false;
  std::string out_dir = "out";
  Boundary variant = Boundary::gamma0;
  double cg_tol = 1e-10;
  int cg_max_iter = 2000;
  double profile_center = -0.5;
  double profile_radius = 0.3;
  int stride = 100;
  double max_relative_residual = 0.0;  // hum: 0 disables the check
  double s0 = 0.0;                     // carleman: 0 calibrates on the reference
  int s_count = 4;
  double width_W = 4.0;
  int n_transverse = 32;
  int mode_cutoff = 8;
  std::map<std::string, std::string> entries;  // resolved key/value view for the manifest

  static SweepConfig from(const KeyValueConfig& kv) {
    SweepConfig c;
    c.experiment = parse_experiment(kv.get_string("experiment", "forward"));
    const bool diss = c.experiment == Experiment::dissipation;
    c.epsilons = kv.get_list("epsilon", {0.1});
    c.as = kv.get_list("a", {0.0});
    const double default_T = c.experiment == Experiment::lowerbound ? 0.5
                             : c.experiment == Experiment::carleman ? 2.0
                                                                    : 4.0;
    c.horizons = kv.get_list("T", {default_T});
    c.penalty_deltas = kv.get_list("penalty_delta", {1e-8});
    c.bump_deltas = kv.get_list("bump_delta", {0.1});
    c.gaps = kv.get_list("gap", {2.0, 4.0});
    c.n_space = kv.get_int("n_space", 0);
    c.n_time = kv.get_int("n_time", 2000);
    c.theta = kv.get_double("theta", 0.5);
    c.workers = kv.get_int("workers", 1);
    c.allow_small_epsilon = kv.get_bool("allow_small_epsilon", false);
    c.assertions = kv.get_bool("assertions", true);
    c.plot = kv.get_bool("plot", false);
    c.out_dir = kv.get_string("out", "out");
    const std::string var = kv.get_string("variant", "gamma0");
    if (var == "gamma0")
      c.variant = Boundary::gamma0;
    else if (var == "gamma1")
      c.variant = Boundary::gamma1;
    else
      throw ConfigError("variant must be gamma0 or gamma1");
    c.cg_tol = kv.get_double("cg_tol", 1e-10);
    c.cg_max_iter = kv.get_int("cg_max_iter", 2000);
    c.profile_center = kv.get_double("profile_center", diss ? -0.3 : -0.5);
    c.profile_radius = kv.get_double("profile_radius", diss ? 0.2 : 0.3);
    c.stride = kv.get_int("stride", 100);
    c.max_relative_residual = kv.get_double("max_relative_residual", 0.0);
    c.s0 = kv.get_double("s0", 0.0);
    c.s_count = kv.get_int("s_count", 4);
    c.width_W = kv.get_double("width_W", 4.0);
    c.n_transverse = kv.get_int("n_transverse", 32);
    c.mode_cutoff = kv.get_int("mode_cutoff", 8);
    if (const auto unused = kv.unused_keys(); !unused.empty())
      throw ConfigError("unknown config key '" + unused.front() + "'");
    c.entries = kv.entries();
    c.validate();
    return c;
  }

  void validate() const {
    auto nonempty = [](const std::vector<double>& v, const char* name) {
      if (v.empty()) throw ConfigError(std::string("parameter grid '") + name + "' is empty");
    };
    nonempty(epsilons, "epsilon");
    nonempty(as, "a");
    nonempty(horizons, "T");
    if (experiment == Experiment::hum || experiment == Experiment::cost_sweep)
      nonempty(penalty_deltas, "penalty_delta");
    if (experiment == Experiment::lowerbound) nonempty(bump_deltas, "bump_delta");
    if (experiment == Experiment::dissipation) nonempty(gaps, "gap");
    for (double e : epsilons) {
      if (!(e > 0.0)) throw ConfigError("epsilon values must be positive");
      if (e < 0.02 && !allow_small_epsilon)
        throw ConfigError("epsilon " + fmt(e) +
                          " is below 0.02; set allow_small_epsilon = true to run it");
      if (n_space > 0 && n_space < required_n_space(e))
        throw ConfigError("resolution policy: epsilon " + fmt(e) + " needs n_space >= " +
                          std::to_string(required_n_space(e)));
    }
    for (double a : as)
      if (!(a >= 0.0)) throw ConfigError("a values must be >= 0");
    for (double T : horizons)
      if (!(T > 0.0)) throw ConfigError("T values must be positive");
    if (n_time < 1) throw ConfigError("n_time must be >= 1");
    if (!(theta >= 0.5 && theta <= 1.0)) throw ConfigError("theta must lie in [0.5, 1]");
    if (stride < 1) throw ConfigError("stride must be >= 1");
    if (s_count < 2) throw ConfigError("s_count must be >= 2");
    if (experiment == Experiment::fourier2d)
      for (double a : as)
        if (a != 0.0) throw ConfigError("fourier2d runs the a = 0 model");
    HumConfig{1e-8, cg_tol, cg_max_iter}.validate();
  }

  int n_space_for(double epsilon) const {
    return n_space > 0 ? n_space : required_n_space(epsilon);
  }
  GridSpec grid_for(double epsilon) const { return GridSpec{n_space_for(epsilon), n_time, theta}; }
};

struct SweepPoint {
  int index = 0;
  double epsilon = 0.0, a = 0.0, T = 0.0;
  double extra = 0.0;  // penalty delta (hum, cost_sweep) or bump delta (lowerbound)
  int n_space = 0;
};

struct PointOutput {
  std::map<std::string, std::vector<std::string>> rows;  // file -> CSV lines
  nlohmann::json info = nlohmann::json::object();
  std::vector<PlotSeries> series;
};

struct PointStatus {
  SweepPoint point;
  bool ok = true;
  std::string error;
  PointOutput out;
};

struct AssertionResult {
  std::string name;
  bool passed = true;
  std::string detail;
};

struct SweepReport {
  std::vector<PointStatus> points;
  std::vector<AssertionResult> assertions;
  std::vector<std::string> files;

  bool all_points_ok() const {
    return std::all_of(points.begin(), points.end(), [](const auto& p) { return p.ok; });
  }
  bool all_assertions_ok() const {
    return std::all_of(assertions.begin(), assertions.end(), [](const auto& a) { return a.passed; });
  }
  int exit_code() const { return all_points_ok() && all_assertions_ok() ? 0 : 1; }
};

namespace sweep_detail {

inline std::string extra_key(Experiment e) {
  switch (e) {
    case Experiment::hum:
    case Experiment::cost_sweep: return "penalty_delta";
    case Experiment::lowerbound: return "bump_delta";
    default: return "";
  }
}

/// Output files and their headers, in write order.
inline std::vector<std::pair<std::string, std::string>> csv_files(Experiment e) {
  switch (e) {
    case Experiment::forward: return {{"forward.csv", "epsilon,a,T,t,x,value"}};
    case Experiment::adjoint: return {{"adjoint.csv", "epsilon,a,T,t,phi_at_0"}};
    case Experiment::hum:
      return {{"hum.csv", "epsilon,a,T,delta,cost_quotient,terminal_residual,iterations,converged"},
              {"hum_controls.csv", "epsilon,a,T,delta,t,value"}};
    case Experiment::cost_sweep:
      return {{"cost_sweep.csv", "epsilon,a,T,delta,cost_quotient"},
              {"cost_sweep_members.csv",
               "epsilon,a,T,delta,member,cost_quotient,terminal_residual,iterations"}};
    case Experiment::dissipation: return {{"dissipation.csv", "epsilon,a,t1,t2,log_ratio"}};
    case Experiment::carleman:
      return {{"carleman.csv", "s,epsilon,a,T,lhs_interior,lhs_boundary,rhs,ratio,member"}};
    case Experiment::lowerbound:
      return {{"lowerbound.csv",
               "epsilon,T,delta,trace_energy,initial_norm,quotient,transport_pairing"}};
    case Experiment::fourier2d:
      return {{"fourier2d.csv", "epsilon,T,t,x_prime,value"},
              {"fourier2d_modes.csv", "epsilon,T,k,xi,a,coefficient_norm,quotient,terminal_residual"}};
  }
  return {};
}

inline std::vector<SweepPoint> enumerate(const SweepConfig& c) {
  std::vector<double> extras{0.0};
  if (c.experiment == Experiment::hum || c.experiment == Experiment::cost_sweep)
    extras = c.penalty_deltas;
  if (c.experiment == Experiment::lowerbound) extras = c.bump_deltas;
  std::vector<double> as = c.as;
  if (c.experiment == Experiment::lowerbound) as = {0.0};
  std::vector<SweepPoint> pts;
  for (double T : c.horizons)
    for (double a : as)
      for (double x : extras)
        for (double e : c.epsilons)
          pts.push_back({static_cast<int>(pts.size()), e, a, T, x, c.n_space_for(e)});
  return pts;
}

inline StateX profile(const SweepConfig& c, const ModelParams& p, const GridSpec& g) {
  return normalized_X(bump(g, c.profile_center, c.profile_radius), p, g);
}

inline std::string prefix(const SweepPoint& pt) { return fmt(pt.epsilon) + "," + fmt(pt.a) + "," + fmt(pt.T); }

inline std::string point_label(const SweepPoint& pt) {
  return "eps=" + fmt(pt.epsilon) + " a=" + fmt(pt.a) + " T=" + fmt(pt.T);
}

struct Shared {
  CarlemanCalibration carleman;
};

inline PointOutput run_point(const SweepConfig& c, const SweepPoint& pt, const Shared& shared) {
  const ModelParams p = ModelParams::make(pt.epsilon, pt.a, pt.T);
  const GridSpec g = c.grid_for(pt.epsilon);
  g.validate();
  PointOutput out;
  const HumConfig hum{pt.extra > 0.0 ? pt.extra : 1e-8, c.cg_tol, c.cg_max_iter};

  switch (c.experiment) {
    case Experiment::forward: {
      const Propagator prop(p, g);
      const Trajectory tr = prop.solve(profile(c, p, g), SourceData::none());
      auto& rows = out.rows["forward.csv"];
      PlotSeries s{point_label(pt), {}, {}};
      double worst = 0.0;
      double prev = prop.norm(tr.states.front());
      for (int k = 0; k <= g.n_time; ++k) {
        const double nk = prop.norm(tr.states[k]);
        worst = std::max(worst, (nk - prev) / std::max(prev, 1e-300));
        prev = nk;
        s.x.push_back(g.t(p, k));
        s.y.push_back(nk);
        if (k % c.stride != 0 && k != g.n_time) continue;
        for (int i = 0; i < g.n_space; ++i)
          rows.push_back(prefix(pt) + "," + fmt(g.t(p, k)) + "," + fmt(g.x(i)) + "," +
                         fmt(tr.states[k][i]));
      }
      out.info["max_relative_norm_increase"] = worst;
      out.info["final_norm"] = prev;
      out.series.push_back(std::move(s));
      break;
    }
    case Experiment::adjoint: {
      const Propagator prop(p, g);
      const AdjointRun run = solve_adjoint(prop, profile(c, p, g), c.variant, true);
      auto& rows = out.rows["adjoint.csv"];
      PlotSeries s{point_label(pt), {}, {}};
      double worst = 0.0;
      for (int k = 0; k <= g.n_time; ++k) {
        rows.push_back(prefix(pt) + "," + fmt(g.t(p, k)) + "," + fmt(run.observation[k]));
        s.x.push_back(g.t(p, k));
        s.y.push_back(run.observation[k]);
        if (k < g.n_time) {
          const double a = prop.norm(run.trajectory.states[k]);
          const double b = prop.norm(run.trajectory.states[k + 1]);
          worst = std::max(worst, (a - b) / std::max(b, 1e-300));
        }
      }
      out.info["max_relative_norm_increase"] = worst;
      out.info["initial_norm"] = prop.norm(run.initial);
      out.series.push_back(std::move(s));
      break;
    }
    case Experiment::hum: {
      const Propagator prop(p, g);
      const StateX u0 = profile(c, p, g);
      const HumResult r = compute_control(prop, u0, hum, c.variant);
      const double rel = r.terminal_residual / prop.norm(u0);
      out.rows["hum.csv"].push_back(prefix(pt) + "," + fmt(pt.extra) + "," + fmt(r.cost_quotient) +
                                    "," + fmt(r.terminal_residual) + "," +
                                    std::to_string(r.cg_iterations) + "," +
                                    (r.converged ? "1" : "0"));
      auto& ctrl = out.rows["hum_controls.csv"];
      PlotSeries s{point_label(pt) + " d=" + fmt(pt.extra), {}, {}};
      for (int k = 0; k <= g.n_time; ++k) {
        ctrl.push_back(prefix(pt) + "," + fmt(pt.extra) + "," + fmt(g.t(p, k)) + "," +
                       fmt(r.control.samples[k]));
        s.x.push_back(g.t(p, k));
        s.y.push_back(r.control.samples[k]);
      }
      out.info = {{"epsilon", pt.epsilon},          {"a", pt.a},
                  {"T", pt.T},                      {"delta", pt.extra},
                  {"cost_quotient", r.cost_quotient}, {"terminal_residual", r.terminal_residual},
                  {"relative_residual", rel},       {"iterations", r.cg_iterations},
                  {"converged", r.converged}};
      out.series.push_back(std::move(s));
      break;
    }
    case Experiment::cost_sweep: {
      const Propagator prop(p, g);
      double best = 0.0;
      std::string worst_member;
      for (const auto& m : default_battery(p, g)) {
        const HumResult r = compute_control(prop, m.state, hum, c.variant);
        out.rows["cost_sweep_members.csv"].push_back(
            prefix(pt) + "," + fmt(pt.extra) + ",\"" + m.name + "\"," + fmt(r.cost_quotient) + "," +
            fmt(r.terminal_residual) + "," + std::to_string(r.cg_iterations));
        if (r.cost_quotient > best) {
          best = r.cost_quotient;
          worst_member = m.name;
        }
      }
      out.rows["cost_sweep.csv"].push_back(prefix(pt) + "," + fmt(pt.extra) + "," + fmt(best));
      out.info = {{"cost_estimate", best}, {"argmax_member", worst_member}};
      break;
    }
    case Experiment::dissipation: {
      const AdjointRun run = solve_adjoint(Propagator(p, g), profile(c, p, g), c.variant, true);
      nlohmann::json samples = nlohmann::json::array();
      for (double gap : c.gaps) {
        if (gap > pt.T) continue;
        const double t2 = pt.T, t1 = pt.T - gap;
        const double lr = std::log(decay_ratio(run, p, g, t1, t2));
        out.rows["dissipation.csv"].push_back(fmt(pt.epsilon) + "," + fmt(pt.a) + "," + fmt(t1) +
                                              "," + fmt(t2) + "," + fmt(lr));
        samples.push_back({{"gap", gap}, {"log_ratio", lr}});
      }
      out.info["samples"] = samples;
      break;
    }
    case Experiment::carleman: {
      const auto runs = family_runs(p, g, c.variant);
      const double lo = s_min(p, shared.carleman.s0);
      double best = -std::numeric_limits<double>::infinity();
      double worst = std::numeric_limits<double>::infinity();
      bool positive = true;
      PlotSeries s{point_label(pt), {}, {}};
      const auto svals = s_range(lo, 4.0 * lo, c.s_count);
      const auto rows = carleman_sweep(runs, svals, c.variant, p, g);
      for (const auto& row : rows) {
        const auto& r = row.report;
        out.rows["carleman.csv"].push_back(
            fmt(row.s) + "," + prefix(pt) + "," + format_from_log(r.log_lhs_interior) + "," +
            format_from_log(r.log_lhs_boundary) + "," + format_from_log(r.log_rhs) + "," +
            format_from_log(r.log_ratio) + ",\"" + row.member + "\"");
        best = std::max(best, r.log_ratio);
        worst = std::min(worst, r.log_ratio);
        if (!(std::isfinite(r.log_lhs_interior) && std::isfinite(r.log_lhs_boundary) &&
              std::isfinite(r.log_rhs)))
          positive = false;
      }
      for (double sv : svals) {
        double m = -std::numeric_limits<double>::infinity();
        for (const auto& row : rows)
          if (row.s == sv) m = std::max(m, row.report.log_ratio);
        s.x.push_back(sv / lo);
        s.y.push_back(m);
      }
      out.info = {{"s_min", lo}, {"max_log_ratio", best}, {"min_log_ratio", worst},
                  {"all_positive", positive}};
      out.series.push_back(std::move(s));
      break;
    }
    case Experiment::lowerbound: {
      const BumpSpec spec{pt.extra};
      const WitnessReport r = witness_quotient(spec, p, g);
      out.rows["lowerbound.csv"].push_back(fmt(pt.epsilon) + "," + fmt(pt.T) + "," + fmt(pt.extra) +
                                           "," + fmt(r.trace_energy) + "," + fmt(r.initial_norm) +
                                           "," + fmt(r.quotient) + "," + fmt(r.transport_pairing));
      out.info = {{"trace_energy", r.trace_energy},   {"initial_norm", r.initial_norm},
                  {"quotient", r.quotient},           {"transport_pairing", r.transport_pairing},
                  {"max_trace_sq", r.max_trace_sq},   {"off_regime", r.off_regime}};
      break;
    }
    case Experiment::fourier2d: {
      const Grid2D g2{c.width_W, c.n_transverse, g};
      const Field2D u0 = demo_field_2d(g2);
      const ModeSet modes = decompose(u0, g2);
      double imag_state = 0.0;
      const Field2D back = recompose_field(modes, g2, &imag_state);
      double roundtrip = 0.0, scale = 0.0;
      for (int j = 0; j < g2.n_transverse; ++j)
        for (int i = 0; i < g.n_space; ++i) {
          roundtrip = std::max(roundtrip, std::abs(back.slices[j][i] - u0.slices[j][i]));
          scale = std::max(scale, std::abs(u0.slices[j][i]));
        }
      const double n2d = norm_2d(u0, p, g2);
      const double parseval = std::abs(n2d * n2d - mode_energy(modes, p, g2)) / (n2d * n2d);
      // Modes run one after another here; sweep points are the parallel axis.
      const ModeControls mc = control_modes(modes, p, g, hum, c.mode_cutoff, 1, c.variant);
      const Recomposition rc = recompose_and_verify(mc, g2, p, n2d);
      auto& rows = out.rows["fourier2d.csv"];
      for (int k = 0; k <= g.n_time; ++k) {
        if (k % c.stride != 0 && k != g.n_time) continue;
        for (int j = 0; j < g2.n_transverse; ++j)
          rows.push_back(fmt(pt.epsilon) + "," + fmt(pt.T) + "," + fmt(g.t(p, k)) + "," +
                         fmt(g2.x_prime(j)) + "," + fmt(rc.control[j][k]));
      }
      nlohmann::json mj = nlohmann::json::array();
      PlotSeries s{point_label(pt), {}, {}};
      bool converged = true;
      for (const auto& m : mc.modes) {
        out.rows["fourier2d_modes.csv"].push_back(
            fmt(pt.epsilon) + "," + fmt(pt.T) + "," + std::to_string(m.index) + "," + fmt(m.xi) +
            "," + fmt(m.a) + "," + fmt(m.coefficient_norm) + "," + fmt(m.quotient) + "," +
            fmt(m.terminal_residual));
        mj.push_back({{"k", m.index},
                      {"xi", m.xi},
                      {"a", m.a},
                      {"coefficient_norm", m.coefficient_norm},
                      {"control_norm", m.control_norm},
                      {"quotient", m.quotient},
                      {"terminal_residual", m.terminal_residual},
                      {"cg_iterations", m.cg_iterations},
                      {"converged", m.converged}});
        converged = converged && m.converged;
        if (m.quotient > 0.0) {
          s.x.push_back(m.xi);
          s.y.push_back(std::log10(m.quotient));
        }
      }
      out.info = {{"roundtrip_error", scale > 0.0 ? roundtrip / scale : roundtrip},
                  {"parseval_defect", parseval},
                  {"hermitian_defect", hermitian_defect(modes)},
                  {"imag_relative", rc.control_scale > 0.0 ? rc.max_imag / rc.control_scale : 0.0},
                  {"cost_2d", rc.cost_2d},
                  {"max_mode_quotient", rc.max_mode_quotient},
                  {"terminal_residual_2d", rc.terminal_residual_2d},
                  {"terminal_residual_direct", rc.terminal_residual_direct},
                  {"tail_energy_fraction", rc.tail_fraction},
                  {"converged", converged},
                  {"modes", mj}};
      out.series.push_back(std::move(s));
      break;
    }
  }
  return out;
}

inline const nlohmann::json* info_of(const PointStatus& s) { return s.ok ? &s.out.info : nullptr; }

/// Points grouped by everything except epsilon, each group sorted by
/// decreasing epsilon (i.e. increasing 1/eps).
inline std::map<std::vector<double>, std::vector<const PointStatus*>> groups_over_epsilon(
    const std::vector<PointStatus>& pts) {
  std::map<std::vector<double>, std::vector<const PointStatus*>> g;
  for (const auto& s : pts) g[{s.point.a, s.point.T, s.point.extra}].push_back(&s);
  for (auto& [k, v] : g)
    std::stable_sort(v.begin(), v.end(), [](auto* x, auto* y) { return x->point.epsilon > y->point.epsilon; });
  return g;
}

inline std::string group_label(const std::vector<double>& key, const std::string& extra_name) {
  std::string s = "a=" + fmt(key[0]) + " T=" + fmt(key[1]);
  if (!extra_name.empty()) s += " " + extra_name + "=" + fmt(key[2]);
  return s;
}

struct Finalized {
  std::vector<AssertionResult> assertions;
  nlohmann::json fits = nlohmann::json::object();
  std::vector<PlotSeries> series;
  PlotSpec plot;
};

/// Trend fit of log(value) on 1/eps with an ordering assertion.
inline void trend_group(const std::vector<const PointStatus*>& grp, const std::string& label,
                        const char* key, bool expect_decrease, double min_r2, Finalized& f) {
  std::vector<ExpPoint> pts;
  for (const auto* s : grp) {
    if (!s->ok) return;
    pts.push_back({1.0 / s->point.epsilon, std::log(s->out.info[key].get<double>())});
  }
  PlotSeries ser{label, {}, {}};
  for (const auto& q : pts) {
    ser.x.push_back(q.inv_epsilon);
    ser.y.push_back(q.log_cost);
  }
  f.series.push_back(ser);
  bool ordered = true;
  for (std::size_t i = 1; i < pts.size(); ++i)
    ordered = ordered && (expect_decrease ? pts[i].log_cost < pts[i - 1].log_cost
                                          : pts[i].log_cost > pts[i - 1].log_cost);
  if (pts.size() >= 2)
    f.assertions.push_back({label + ": " + key + (expect_decrease ? " strictly decreasing" : " strictly increasing") +
                                " as eps decreases",
                            ordered, ""});
  if (pts.size() >= 3) {
    const ExpFit fit = fit_exponential(pts);
    f.fits[label] = {{"slope", fit.slope}, {"intercept", fit.intercept}, {"r_squared", fit.r_squared}};
    const bool sign_ok = expect_decrease ? fit.slope < 0.0 : fit.slope > 0.0;
    f.assertions.push_back({label + ": exponential fit slope " + (expect_decrease ? "< 0" : "> 0") +
                                " with r^2 >= " + fmt(min_r2),
                            sign_ok && fit.r_squared >= min_r2,
                            "slope=" + fmt(fit.slope) + " r2=" + fmt(fit.r_squared)});
  }
}

inline Finalized finalize(const SweepConfig& c, const std::vector<PointStatus>& pts,
                          const Shared& shared) {
  Finalized f;
  f.plot.title = to_string(c.experiment);
  switch (c.experiment) {
    case Experiment::forward:
    case Experiment::adjoint: {
      const bool fwd = c.experiment == Experiment::forward;
      for (const auto& s : pts) {
        if (!s.ok) continue;
        const double w = s.out.info["max_relative_norm_increase"].get<double>();
        f.assertions.push_back({point_label(s.point) + ": X-norm nonincreasing " +
                                    (fwd ? "forward" : "backward") + " in time",
                                w <= 1e-10, "max relative increase " + fmt(w)});
        f.series.push_back(s.out.series.front());
      }
      f.plot.x_label = "t";
      f.plot.y_label = fwd ? "||u(t)||_X" : "phi(t, observed boundary)";
      break;
    }
    case Experiment::hum: {
      nlohmann::json records = nlohmann::json::array();
      for (const auto& s : pts) {
        if (!s.ok) continue;
        const auto& in = s.out.info;
        records.push_back({{"epsilon", in["epsilon"]}, {"a", in["a"]}, {"T", in["T"]},
                           {"delta", in["delta"]}, {"cost_quotient", in["cost_quotient"]},
                           {"terminal_residual", in["terminal_residual"]},
                           {"iterations", in["iterations"]}});
        f.assertions.push_back({point_label(s.point) + " delta=" + fmt(s.point.extra) +
                                    ": CG converged",
                                in["converged"].get<bool>(), ""});
        if (c.max_relative_residual > 0.0) {
          const double rel = in["relative_residual"].get<double>();
          f.assertions.push_back({point_label(s.point) + " delta=" + fmt(s.point.extra) +
                                      ": terminal residual / ||u0|| <= " +
                                      fmt(c.max_relative_residual),
                                  rel <= c.max_relative_residual, "ratio " + fmt(rel)});
        }
        f.series.push_back(s.out.series.front());
      }
      f.fits["records"] = records;
      f.plot.x_label = "t";
      f.plot.y_label = "control v(t)";
      break;
    }
    case Experiment::cost_sweep:
      for (const auto& [key, grp] : groups_over_epsilon(pts))
        trend_group(grp, group_label(key, "delta"), "cost_estimate", true, 0.9, f);
      f.plot.x_label = "1/eps";
      f.plot.y_label = "log cost estimate";
      break;
    case Experiment::dissipation: {
      std::vector<DecaySample> samples;
      PlotSeries ser{"samples", {}, {}};
      for (const auto& s : pts) {
        if (!s.ok) continue;
        for (const auto& js : s.out.info["samples"]) {
          const DecaySample d{s.point.epsilon, s.point.a, js["gap"].get<double>(),
                              js["log_ratio"].get<double>()};
          samples.push_back(d);
          if (d.gap > 1.0) {
            ser.x.push_back(dissipation_model_factor(d.epsilon, d.a, d.gap));
            ser.y.push_back(d.log_ratio);
          }
        }
      }
      f.series.push_back(ser);
      try {
        const DecayFit fit = fit_dissipation_rate(samples);
        f.fits["dissipation"] = {{"fitted_c0", fit.fitted_c0}, {"r_squared", fit.r_squared},
                                 {"residual_rms", fit.residual_rms},
                                 {"samples", fit.samples.size()}, {"excluded", fit.excluded}};
        f.assertions.push_back({"fitted c0 > 0 with r^2 >= 0.8",
                                fit.fitted_c0 > 0.0 && fit.r_squared >= 0.8,
                                "c0=" + fmt(fit.fitted_c0) + " r2=" + fmt(fit.r_squared)});
      } catch (const Error& e) {
        f.assertions.push_back({"dissipation fit", false, e.what()});
      }
      f.plot.x_label = "max(a^1/2, eps^-1/2) eps^-1/2 (gap-1)^2/gap";
      f.plot.y_label = "log ratio";
      break;
    }
    case Experiment::carleman: {
      const double bound = shared.carleman.log_c_ref + std::log(10.0);
      f.fits["calibration"] = {{"s0", shared.carleman.s0},
                               {"log_c_ref", shared.carleman.log_c_ref},
                               {"reference", {{"epsilon", 0.1}, {"a", 0.0}, {"T", 2.0}}}};
      for (const auto& s : pts) {
        if (!s.ok) continue;
        const auto& in = s.out.info;
        const double mx = in["max_log_ratio"].get<double>(), mn = in["min_log_ratio"].get<double>();
        f.assertions.push_back({point_label(s.point) + ": all Carleman integrals positive",
                                in["all_positive"].get<bool>(), ""});
        f.assertions.push_back({point_label(s.point) + ": ratio finite on [s_min, 4 s_min] and <= 10 C_ref",
                                std::isfinite(mx) && std::isfinite(mn) && mx <= bound,
                                "max log ratio " + fmt(mx) + ", bound " + fmt(bound)});
        f.series.push_back(s.out.series.front());
      }
      f.plot.x_label = "s / s_min";
      f.plot.y_label = "log of largest family ratio";
      break;
    }
    case Experiment::lowerbound: {
      for (const auto& [key, grp] : groups_over_epsilon(pts)) {
        const std::string label = "T=" + fmt(key[1]) + " delta=" + fmt(key[2]);
        bool off = false;
        for (const auto* s : grp)
          if (s->ok && s->out.info["off_regime"].get<bool>()) off = true;
        if (off) {
          f.fits[label] = {{"off_regime", true}};
          continue;
        }
        trend_group(grp, label, "quotient", false, 0.9, f);
        std::vector<WitnessPoint> wp;
        for (const auto* s : grp) {
          if (!s->ok) continue;
          const auto& in = s->out.info;
          WitnessReport r;
          r.trace_energy = in["trace_energy"];
          r.initial_norm = in["initial_norm"];
          r.quotient = in["quotient"];
          r.transport_pairing = in["transport_pairing"];
          r.max_trace_sq = in["max_trace_sq"];
          wp.push_back({s->point.epsilon, r});
          f.assertions.push_back({label + " eps=" + fmt(s->point.epsilon) + ": initial_norm >= 0.5",
                                  r.initial_norm >= 0.5, "initial_norm " + fmt(r.initial_norm)});
          f.assertions.push_back({label + " eps=" + fmt(s->point.epsilon) +
                                      ": transport pairing <= initial_norm",
                                  r.transport_pairing <= r.initial_norm * (1.0 + 1e-12), ""});
        }
        if (wp.size() >= 3) {
          const auto tf = fit_trace_smallness(wp, key[2]);
          const auto cf = fit_quasi_conservation(wp);
          f.fits[label]["trace_lambda_hat"] = tf.lambda_hat;
          f.fits[label]["trace_c_hat"] = tf.c_hat;
          f.fits[label]["trace_r_squared"] = tf.r_squared;
          f.fits[label]["conservation_c_hat"] = cf.c_hat;
          f.assertions.push_back({label + ": trace smallness rate lambda_hat > 0", tf.lambda_hat > 0.0,
                                  "lambda_hat=" + fmt(tf.lambda_hat)});
          f.assertions.push_back({label + ": transport pairing <= 1", cf.upper_ok, ""});
        }
      }
      f.plot.x_label = "1/eps";
      f.plot.y_label = "log witness quotient";
      break;
    }
    case Experiment::fourier2d: {
      for (const auto& s : pts) {
        if (!s.ok) continue;
        const auto& in = s.out.info;
        const std::string l = point_label(s.point) + ": ";
        const double rt = in["roundtrip_error"], pv = in["parseval_defect"], im = in["imag_relative"];
        const double cost = in["cost_2d"], mq = in["max_mode_quotient"];
        const double r2 = in["terminal_residual_2d"], rd = in["terminal_residual_direct"];
        f.assertions.push_back({l + "round trip <= 1e-12", rt <= 1e-12, fmt(rt)});
        f.assertions.push_back({l + "Parseval <= 1e-10", pv <= 1e-10, fmt(pv)});
        f.assertions.push_back({l + "recomposed control real to 1e-10", im <= 1e-10, fmt(im)});
        f.assertions.push_back({l + "cost_2d <= max mode quotient", cost <= mq * (1.0 + 1e-12),
                                fmt(cost) + " vs " + fmt(mq)});
        f.assertions.push_back({l + "2D residual matches Parseval combination",
                                std::abs(r2 - rd) <= 1e-10 * std::max({r2, rd, 1e-300}) + 1e-300,
                                fmt(r2) + " vs " + fmt(rd)});
        f.assertions.push_back({l + "all mode CG runs converged", in["converged"].get<bool>(), ""});
        f.series.push_back(s.out.series.front());
      }
      f.plot.x_label = "xi";
      f.plot.y_label = "log10 mode cost quotient";
      break;
    }
  }
  return f;
}

}  // namespace sweep_detail

/// Runs the configured experiment and writes its files into cfg.out_dir.
inline SweepReport run_sweep(const SweepConfig& cfg) {
  using namespace sweep_detail;
  cfg.validate();
  namespace fs = std::filesystem;
  fs::create_directories(cfg.out_dir);

  SweepReport rep;
  Shared shared;
  if (cfg.experiment == Experiment::carleman)
    shared.carleman = calibrate_reference(cfg.variant, cfg.n_time, cfg.s_count, cfg.s0);

  for (const auto& pt : enumerate(cfg)) rep.points.push_back({pt, true, "", {}});
  const auto errors = parallel_for_collect(static_cast<int>(rep.points.size()), cfg.workers, [&](int i) {
    rep.points[i].out = run_point(cfg, rep.points[i].point, shared);
  });
  for (std::size_t i = 0; i < errors.size(); ++i) {
    if (!errors[i]) continue;
    rep.points[i].ok = false;
    rep.points[i].out = PointOutput{};
    try {
      std::rethrow_exception(errors[i]);
    } catch (const std::exception& e) {
      rep.points[i].error = e.what();
    } catch (...) {
      rep.points[i].error = "unknown error";
    }
  }

  for (const auto& [file, header] : csv_files(cfg.experiment)) {
    std::ofstream os(fs::path(cfg.out_dir) / file, std::ios::binary);
    os << header << '\n';
    for (const auto& s : rep.points) {
      const auto it = s.out.rows.find(file);
      if (it == s.out.rows.end()) continue;
      for (const auto& line : it->second) os << line << '\n';
    }
    if (!os) throw Error("failed writing " + file);
    rep.files.push_back(file);
  }

  Finalized fin = finalize(cfg, rep.points, shared);
  if (cfg.assertions) rep.assertions = fin.assertions;

  const std::string name = to_string(cfg.experiment);
  if (!fin.fits.empty()) {
    std::ofstream os(fs::path(cfg.out_dir) / (name + "_fit.json"), std::ios::binary);
    os << fin.fits.dump(2) << '\n';
    rep.files.push_back(name + "_fit.json");
  }
  if (cfg.experiment == Experiment::fourier2d) {
    nlohmann::json modes = nlohmann::json::array();
    for (const auto& s : rep.points)
      if (s.ok)
        modes.push_back({{"epsilon", s.point.epsilon}, {"T", s.point.T}, {"modes", s.out.info["modes"]}});
    std::ofstream os(fs::path(cfg.out_dir) / "fourier2d_modes.json", std::ios::binary);
    os << modes.dump(2) << '\n';
    rep.files.push_back("fourier2d_modes.json");
  }
  if (cfg.plot) {
    std::ofstream os(fs::path(cfg.out_dir) / (name + ".svg"), std::ios::binary);
    os << render_line_chart(fin.plot, fin.series);
    rep.files.push_back(name + ".svg");
  }

  nlohmann::json manifest;
  manifest["code_version"] = kCodeVersion;
  manifest["battery_version"] = kBatteryVersion;
  manifest["carleman_family_version"] = kCarlemanFamilyVersion;
  manifest["experiment"] = name;
  manifest["config"] = cfg.entries;
  manifest["resolved"] = {{"n_time", cfg.n_time}, {"theta", cfg.theta}, {"workers", cfg.workers},
                          {"variant", to_string(cfg.variant)}, {"cg_tol", cfg.cg_tol},
                          {"cg_max_iter", cfg.cg_max_iter}};
  nlohmann::json points = nlohmann::json::array();
  const std::string xk = extra_key(cfg.experiment);
  for (const auto& s : rep.points) {
    nlohmann::json jp = {{"index", s.point.index}, {"epsilon", s.point.epsilon}, {"a", s.point.a},
                         {"T", s.point.T},         {"n_space", s.point.n_space},
                         {"n_time", cfg.n_time},   {"status", s.ok ? "ok" : "failed"}};
    if (!xk.empty()) jp[xk] = s.point.extra;
    if (!s.ok) jp["error"] = s.error;
    points.push_back(jp);
  }
  manifest["points"] = points;
  nlohmann::json asserts = nlohmann::json::array();
  for (const auto& a : rep.assertions)
    asserts.push_back({{"name", a.name}, {"passed", a.passed}, {"detail", a.detail}});
  manifest["assertions"] = asserts;
  manifest["outputs"] = rep.files;
  manifest["exit_code"] = rep.exit_code();
  {
    std::ofstream os(fs::path(cfg.out_dir) / "manifest.json", std::ios::binary);
    os << manifest.dump(2) << '\n';
  }
  return rep;
}

}  // namespace advdiff
