#pragma once

// Command-line front end. run_cli() is the whole program; tools/bpl.cpp only
// forwards argv to it.

#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iostream>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <fmt/format.h>
#include <fmt/ostream.h>

#include "CLI11.hpp"
#include "json.hpp"

#include "bpl/foata.hpp"
#include "bpl/hazardsim.hpp"
#include "bpl/model.hpp"
#include "bpl/pipesim.hpp"
#include "bpl/schedule.hpp"
#include "bpl/sweep.hpp"

namespace bpl::cli {

enum ExitCode : int {
  kOk = 0,
  kArgumentError = 2,
  kPreconditionError = 3,
  kSimulationError = 4,
};

class simulation_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

using json = nlohmann::ordered_json;

struct Common {
  std::int64_t p = 1;
  std::int64_t q = 1;
  std::int64_t n = 1;
  double t_p = 0.0;
  double t_o = 1.0;
  std::optional<double> b;
  bool unit_cycle = false;
  bool as_json = false;

  void normalize() {
    if (unit_cycle) {
      t_p = 0.0;
      t_o = 1.0;
    }
  }
  PipelineConfig config() const { return PipelineConfig{p, q, t_p, t_o}; }
};

inline std::uint64_t default_seed() {
  if (const char* env = std::getenv("BPL_SEED")) {
    try {
      return std::stoull(env);
    } catch (const std::exception&) {
      throw invalid_config(std::string("BPL_SEED is not an unsigned integer: ") + env);
    }
  }
  return 1;
}

inline std::string num(double v) { return bpl::detail::format_number(v); }

inline void add_p(CLI::App* c, Common& a) {
  c->add_option("-p,--p,--depth", a.p, "pipeline depth (stages)")->required();
}
inline void add_q(CLI::App* c, Common& a) {
  c->add_option("-q,--q,--devices", a.q, "number of functional devices")->required();
}
inline void add_n(CLI::App* c, Common& a) {
  c->add_option("-n,--n,--elements", a.n, "number of input elements")->required();
}
inline void add_delays(CLI::App* c, Common& a) {
  c->add_option("--tp", a.t_p, "logical delay t_p")->capture_default_str();
  c->add_option("--to", a.t_o, "latch overhead t_o per stage")->capture_default_str();
  c->add_flag("--unit-cycle", a.unit_cycle, "use t_p = 0, t_o = 1 so that one cycle = 1");
}
inline void add_b(CLI::App* c, Common& a) {
  c->add_option("-b,--b", a.b, "restart probability b");
}

// Parses "lo..hi", "lo:hi", "lo-hi" or a single depth.
inline std::pair<std::int64_t, std::int64_t> parse_range(const std::string& s) {
  for (const std::string sep : {"..", ":", "-"}) {
    auto pos = s.find(sep);
    if (pos == std::string::npos || pos == 0) continue;
    try {
      return {std::stoll(s.substr(0, pos)), std::stoll(s.substr(pos + sep.size()))};
    } catch (const std::exception&) {
      break;
    }
  }
  try {
    std::size_t used = 0;
    auto v = std::stoll(s, &used);
    if (used == s.size()) return {v, v};
  } catch (const std::exception&) {
  }
  throw invalid_config("cannot parse depth range '" + s + "'");
}

inline void emit(std::ostream& out, const json& j) { out << j.dump(2) << '\n'; }

// ---- time ----------------------------------------------------------------

inline int cmd_time(Common a, bool simplified, std::ostream& out) {
  a.normalize();
  const auto cfg = a.config();
  const Workload w{a.n};
  const double h = cycle_time(cfg);
  const double bounded = bounded_time(cfg, w);
  const double simple = simplified_time(cfg, w);
  const double gap = simplified_error_bound(cfg);
  std::optional<double> restart;
  if (a.b) restart = restart_time(cfg, w, RestartModel{*a.b});

  std::string model = "bounded";
  double headline = bounded;
  if (restart) {
    model = "restart";
    headline = *restart;
  } else if (simplified) {
    model = "simplified";
    headline = simple;
  }

  if (a.as_json) {
    json j;
    j["p"] = a.p;
    j["q"] = a.q;
    j["n"] = a.n;
    j["t_p"] = a.t_p;
    j["t_o"] = a.t_o;
    j["cycle_time"] = h;
    j["model"] = model;
    j["time"] = headline;
    j["bounded_time"] = bounded;
    j["simplified_time"] = simple;
    j["gap_bound"] = gap;
    if (restart) {
      j["b"] = *a.b;
      j["restart_time"] = *restart;
    }
    emit(out, j);
    return kOk;
  }
  fmt::print(out, "time: {} ({})\n", num(headline), model);
  fmt::print(out, "cycle_time: {}\n", num(h));
  fmt::print(out, "bounded_time: {}\n", num(bounded));
  fmt::print(out, "simplified_time: {}\n", num(simple));
  fmt::print(out, "gap_bound: {}\n", num(gap));
  if (restart) fmt::print(out, "restart_time: {}\n", num(*restart));
  return kOk;
}

// ---- depth ---------------------------------------------------------------

inline int cmd_depth(Common a, std::string model, std::ostream& out) {
  a.normalize();
  const Workload w{a.n};
  if (model.empty()) model = a.b ? "restart" : "exact";
  DepthRecommendation rec;
  json extra = json::object();
  if (model == "exact") {
    rec = optimal_depth_exact(a.q, w, a.t_p, a.t_o);
    const auto hyp = hyperbola_coeffs(a.q, w, a.t_p, a.t_o);
    extra["p0"] = hyp.constrained.argmin().value_or(0.0);
    extra["p1"] = hyp.unconstrained.argmin().value_or(0.0);
  } else if (model == "simplified") {
    rec = optimal_depth_simplified(a.q, w, a.t_p, a.t_o);
  } else if (model == "restart") {
    if (!a.b) throw invalid_config("--model restart requires --b");
    rec = optimal_depth_restart(a.q, w, a.t_p, a.t_o, RestartModel{*a.b});
  } else {
    throw invalid_config("unknown model '" + model + "'");
  }

  if (a.as_json) {
    json j;
    j["model"] = model;
    j["q"] = a.q;
    j["n"] = a.n;
    j["t_p"] = a.t_p;
    j["t_o"] = a.t_o;
    if (a.b) j["b"] = *a.b;
    j["real_optimum"] = rec.real_optimum;
    j["integer_optimum"] = rec.integer_optimum;
    j["predicted_time"] = rec.predicted_time;
    for (auto& [k, v] : extra.items()) j[k] = v;
    emit(out, j);
    return kOk;
  }
  fmt::print(out, "integer_optimum: {}\n", rec.integer_optimum);
  fmt::print(out, "real_optimum: {}\n", num(rec.real_optimum));
  fmt::print(out, "predicted_time: {}\n", num(rec.predicted_time));
  fmt::print(out, "model: {}\n", model);
  for (auto& [k, v] : extra.items()) fmt::print(out, "{}: {}\n", k, num(v.get<double>()));
  return kOk;
}

// ---- table ---------------------------------------------------------------

inline int cmd_table(const Common& a, const std::string& format, std::ostream& out) {
  const auto fmt_kind = parse_table_format(format);
  const auto table = build_table(a.p, a.q, a.n);
  out << render_table(table, fmt_kind);
  if (fmt_kind == TableFormat::csv) return kOk;
  const auto prof = concurrency_fractions(table);
  fmt::print(out, "completion: {}\n", completion_cycles(table));
  out << "g =";
  for (std::size_t i = 0; i < prof.busy_slots.size(); ++i)
    fmt::print(out, "{} {}/{}", i ? "," : "", prof.busy_slots[i], prof.total_slots);
  out << '\n';
  return kOk;
}

// ---- foata ---------------------------------------------------------------

inline int cmd_foata(const Common& a, bool blocks, std::ostream& out) {
  const auto form = foata_normal_form(pipeline_trace(a.p, a.n), a.q);
  fmt::print(out, "height: {}\n", height(form));
  if (blocks) out << serialize(form);
  return kOk;
}

// ---- simulate ------------------------------------------------------------

struct SimOptions {
  std::string mode = "virtual";
  std::int64_t trials = 10000;
  std::optional<std::uint64_t> seed;
  double scale = 1.0;
  double timeout_s = 120.0;
  std::string timeline_path;
};

inline void write_file(const std::string& path, const std::string& content, std::ostream& out) {
  if (path.empty() || path == "-") {
    out << content;
    return;
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw invalid_config("cannot open '" + path + "' for writing");
  f << content;
  if (!f) throw invalid_config("failed writing '" + path + "'");
}

inline int cmd_simulate(Common a, const SimOptions& o, std::ostream& out) {
  a.normalize();
  const auto cfg = a.config();
  const Workload w{a.n};
  const double h = cycle_time(cfg);
  json j;
  j["mode"] = o.mode;
  j["p"] = a.p;
  j["q"] = a.q;
  j["n"] = a.n;
  j["cycle_time"] = h;
  double simulated = 0.0;
  double model = 0.0;

  if (o.mode == "virtual" || o.mode == "wallclock") {
    SimRun run;
    if (o.mode == "virtual") {
      run = run_virtual(cfg, a.n);
    } else {
      WallclockOptions wo;
      wo.scale_ms = o.scale;
      wo.timeout = std::chrono::milliseconds(static_cast<std::int64_t>(o.timeout_s * 1000));
      run = run_wallclock(cfg, a.n, wo);
      j["scale_ms"] = o.scale;
    }
    if (!o.timeline_path.empty()) write_file(o.timeline_path, timeline_csv(run), out);
    if (!run.completed) throw simulation_error("simulation failed: " + run.diagnostic);
    simulated = run.total_time;
    model = bounded_time(cfg, w);
    j["max_active"] = max_concurrency(run.timeline);
  } else if (o.mode == "montecarlo") {
    const auto seed = o.seed.value_or(default_seed());
    const auto dist = a.b ? restart_distribution(a.p, a.q, RestartModel{*a.b})
                          : simplified_distribution(a.p, a.q);
    const auto st = monte_carlo_mean(a.p, dist, a.n, o.trials, seed);
    simulated = st.mean * h;
    model = a.b ? restart_time(cfg, w, RestartModel{*a.b}) : simplified_time(cfg, w);
    j["trials"] = o.trials;
    j["seed"] = seed;
    j["std_error"] = st.std_error * h;
    j["z_score"] = st.std_error > 0 ? (simulated - model) / (st.std_error * h) : 0.0;
  } else {
    throw invalid_config("unknown simulation mode '" + o.mode + "'");
  }
  j["simulated_time"] = simulated;
  j["model_time"] = model;
  j["difference"] = simulated - model;
  j["relative_difference"] = model != 0 ? (simulated - model) / model : 0.0;

  if (a.as_json) {
    emit(out, j);
    return kOk;
  }
  for (auto& [k, v] : j.items()) {
    if (v.is_number_float())
      fmt::print(out, "{}: {}\n", k, num(v.get<double>()));
    else if (v.is_string())
      fmt::print(out, "{}: {}\n", k, v.get<std::string>());
    else
      fmt::print(out, "{}: {}\n", k, v.dump());
  }
  return kOk;
}

// ---- sweep ---------------------------------------------------------------

struct SweepOptions {
  std::string range = "1..20";
  std::string model = "exact";
  std::string simulate;
  std::string format = "csv";
  std::string output = "-";
  SimOptions sim;
};

inline SweepResult build_sweep(Common a, const SweepOptions& o) {
  a.normalize();
  const auto [lo, hi] = parse_range(o.range);
  if (lo < 1 || hi < lo) throw invalid_config("depth range must be nonempty and start at >= 1");
  std::string model = o.model;
  if (a.b && model == "exact") model = "restart";
  if (model != "exact" && model != "simplified" && model != "restart")
    throw invalid_config("unknown model '" + model + "'");
  if (model == "restart" && !a.b) throw invalid_config("--model restart requires --b");
  if (!o.simulate.empty() && o.simulate != "virtual" && o.simulate != "wallclock" &&
      o.simulate != "montecarlo")
    throw invalid_config("unknown simulation mode '" + o.simulate + "'");

  SweepResult res;
  res.metadata["q"] = a.q;
  res.metadata["n"] = a.n;
  res.metadata["t_p"] = a.t_p;
  res.metadata["t_o"] = a.t_o;
  if (a.b) res.metadata["b"] = *a.b;
  res.metadata["model"] = model;
  res.metadata["p_range"] = {lo, hi};
  if (!o.simulate.empty()) res.metadata["simulate"] = o.simulate;
  const auto seed = o.sim.seed.value_or(default_seed());
  if (o.simulate == "montecarlo") {
    res.metadata["trials"] = o.sim.trials;
    res.metadata["seed"] = seed;
  }
  if (o.simulate == "wallclock") res.metadata["scale_ms"] = o.sim.scale;

  const Workload w{a.n};
  for (auto p = lo; p <= hi; ++p) {
    const PipelineConfig cfg{p, a.q, a.t_p, a.t_o};
    SweepRow row;
    row.depth = p;
    if (model == "exact")
      row.model_time = bounded_time(cfg, w);
    else if (model == "simplified")
      row.model_time = simplified_time(cfg, w);
    else
      row.model_time = restart_time(cfg, w, RestartModel{*a.b});
    row.label = model;
    if (o.simulate == "virtual" || o.simulate == "wallclock") {
      SimRun run;
      if (o.simulate == "virtual") {
        run = run_virtual(cfg, a.n);
      } else {
        WallclockOptions wo;
        wo.scale_ms = o.sim.scale;
        wo.timeout = std::chrono::milliseconds(static_cast<std::int64_t>(o.sim.timeout_s * 1000));
        run = run_wallclock(cfg, a.n, wo);
      }
      if (!run.completed)
        throw simulation_error("simulation at depth " + std::to_string(p) +
                               " failed: " + run.diagnostic);
      row.simulated_time = run.total_time;
    } else if (o.simulate == "montecarlo") {
      const auto dist = a.b ? restart_distribution(p, a.q, RestartModel{*a.b})
                            : simplified_distribution(p, a.q);
      row.simulated_time = monte_carlo_mean(p, dist, a.n, o.sim.trials, seed).mean * cycle_time(cfg);
    }
    if (!o.simulate.empty()) row.label += "/" + o.simulate;
    res.rows.push_back(std::move(row));
  }
  res.validate();
  return res;
}

inline int cmd_sweep(const Common& a, const SweepOptions& o, std::ostream& out) {
  if (o.format != "csv" && o.format != "json" && o.format != "svg")
    throw invalid_config("unknown output format '" + o.format + "'");
  const auto res = build_sweep(a, o);
  std::string body;
  if (o.format == "csv") {
    body = to_csv(res);
  } else if (o.format == "json") {
    body = to_json(res).dump(2) + "\n";
  } else {
    const bool ms = o.simulate == "wallclock" && o.sim.scale == 1.0;
    body = to_svg(res, a.unit_cycle ? "cycles" : ms ? "ms" : "time units");
  }
  write_file(o.output, body, out);
  return kOk;
}

}  // namespace detail

/// Runs one command line; returns the process exit code.
inline int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  using namespace detail;
  CLI::App app{"Bounded pipeline timing models, optimal depths and simulators", "bpl"};
  app.require_subcommand(1);

  Common t_args, d_args, tb_args, f_args, s_args, sw_args;
  bool simplified = false;
  std::string depth_model;
  std::string table_format = "text";
  bool show_blocks = false;
  SimOptions sim;
  SweepOptions sweep;

  auto* time_cmd = app.add_subcommand("time", "processing time of n elements");
  add_p(time_cmd, t_args);
  add_q(time_cmd, t_args);
  add_n(time_cmd, t_args);
  add_delays(time_cmd, t_args);
  add_b(time_cmd, t_args);
  time_cmd->add_flag("--simplified", simplified, "report the simplified-pipeline expectation");
  time_cmd->add_flag("--json", t_args.as_json, "JSON output");

  auto* depth = app.add_subcommand("depth", "optimal pipeline depth");
  add_q(depth, d_args);
  add_n(depth, d_args);
  add_delays(depth, d_args);
  add_b(depth, d_args);
  depth->add_option("--model", depth_model, "exact | simplified | restart")
      ->check(CLI::IsMember({"exact", "simplified", "restart"}));
  depth->add_flag("--json", d_args.as_json, "JSON output");

  auto* table = app.add_subcommand("table", "reservation table and concurrency fractions");
  add_p(table, tb_args);
  add_q(table, tb_args);
  add_n(table, tb_args);
  table->add_option("--format", table_format, "text | csv")->capture_default_str();

  auto* foata = app.add_subcommand("foata", "capped Foata normal form of the pipeline trace");
  add_p(foata, f_args);
  add_q(foata, f_args);
  add_n(foata, f_args);
  foata->add_flag("--blocks", show_blocks, "print the blocks");

  auto* simulate = app.add_subcommand("simulate", "run a simulator against the model");
  add_p(simulate, s_args);
  add_q(simulate, s_args);
  add_n(simulate, s_args);
  add_delays(simulate, s_args);
  add_b(simulate, s_args);
  simulate->add_option("--mode", sim.mode, "virtual | wallclock | montecarlo")
      ->capture_default_str();
  simulate->add_option("--trials", sim.trials, "Monte Carlo replications")->capture_default_str();
  simulate->add_option("--seed", sim.seed, "random seed (default $BPL_SEED or 1)");
  simulate->add_option("--scale", sim.scale, "wall milliseconds per time unit")
      ->capture_default_str();
  simulate->add_option("--timeout", sim.timeout_s, "wallclock timeout in seconds")
      ->capture_default_str();
  simulate->add_option("--timeline", sim.timeline_path, "write the stage timeline CSV here");
  simulate->add_flag("--json", s_args.as_json, "JSON output");

  auto* sw = app.add_subcommand("sweep", "time as a function of depth");
  add_q(sw, sw_args);
  add_n(sw, sw_args);
  add_delays(sw, sw_args);
  add_b(sw, sw_args);
  sw->add_option("--p-range", sweep.range, "depth range lo..hi")->capture_default_str();
  sw->add_option("--model", sweep.model, "exact | simplified | restart")->capture_default_str();
  sw->add_option("--simulate", sweep.simulate, "virtual | wallclock | montecarlo");
  sw->add_option("--out", sweep.format, "csv | json | svg")->capture_default_str();
  sw->add_option("-o,--output", sweep.output, "output path, - for stdout")->capture_default_str();
  sw->add_option("--trials", sweep.sim.trials, "Monte Carlo replications")->capture_default_str();
  sw->add_option("--seed", sweep.sim.seed, "random seed (default $BPL_SEED or 1)");
  sw->add_option("--scale", sweep.sim.scale, "wall milliseconds per time unit")
      ->capture_default_str();
  sw->add_option("--timeout", sweep.sim.timeout_s, "wallclock timeout per run in seconds")
      ->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kArgumentError;
  }

  try {
    if (time_cmd->parsed()) return cmd_time(t_args, simplified, out);
    if (depth->parsed()) return cmd_depth(d_args, depth_model, out);
    if (table->parsed()) return cmd_table(tb_args, table_format, out);
    if (foata->parsed()) return cmd_foata(f_args, show_blocks, out);
    if (simulate->parsed()) return cmd_simulate(s_args, sim, out);
    if (sw->parsed()) return cmd_sweep(sw_args, sweep, out);
  } catch (const precondition_error& e) {
    err << "error: " << e.what() << '\n';
    return kPreconditionError;
  } catch (const invalid_config& e) {
    err << "error: " << e.what() << '\n';
    return kArgumentError;
  } catch (const simulation_error& e) {
    err << "error: " << e.what() << '\n';
    return kSimulationError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kSimulationError;
  }
  return kArgumentError;
}

inline int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  std::vector<const char*> argv;
  argv.reserve(args.size() + 1);
  argv.push_back("bpl");
  for (const auto& a : args) argv.push_back(a.c_str());
  return run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
}

}  // namespace bpl::cli
