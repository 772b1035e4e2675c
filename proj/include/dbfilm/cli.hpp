#ifndef DBFILM_CLI_HPP
#define DBFILM_CLI_HPP

// Command-line front end: run, converge, compare, check, preset.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "dbfilm/config.hpp"
#include "dbfilm/evolution.hpp"
#include "dbfilm/study.hpp"

namespace dbfilm::cli {

namespace fs = std::filesystem;

inline std::string step_tag(long step) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%08ld", step);
  return buf;
}

inline std::string time_tag(double t) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%g", t);
  return buf;
}

inline std::ofstream open_out(const fs::path& p) {
  std::ofstream os(p);
  if (!os) throw ContractViolation("cannot write '" + p.string() + "'");
  return os;
}

inline void write_manifest(const fs::path& dir, const std::string& command, const RunConfig& c,
                           const std::vector<std::string>& extra) {
  auto os = open_out(dir / "manifest.txt");
  os << "# command = " << command << '\n';
  os << serialize_config(c);
  for (const auto& line : extra) os << "# " << line << '\n';
}

inline void write_run(const fs::path& dir, const RunResult& r) {
  fs::create_directories(dir / "snapshots");
  {
    auto os = open_out(dir / "history.csv");
    r.history.write_csv(os);
  }
  {
    auto os = open_out(dir / "events.csv");
    r.history.write_events_csv(os);
  }
  for (const auto& s : r.snapshots)
    for (std::size_t i = 0; i < s.islands.size(); ++i) {
      auto os = open_out(dir / "snapshots" / ("step_" + step_tag(s.step) + "_island_" + std::to_string(s.ids[i]) + ".csv"));
      write_snapshot(os, s.islands[i]);
    }
}

inline int cmd_run(const RunConfig& c, const fs::path& out, std::ostream& log) {
  fs::create_directories(out);
  const auto r = run(Island(build_initial(c)), c.anisotropy_spec(), c.params, c.stepper, c.run_options());
  write_run(out, r);
  const auto& last = r.history.records.back();
  write_manifest(out, "run", c,
                 {"steps = " + std::to_string(r.steps), "final_t = " + format_double(last.t),
                  "islands = " + std::to_string(r.islands.size()),
                  "equilibrium = " + std::string(r.equilibrium ? "true" : "false"),
                  "max_relative_area_drift = " + format_double(r.history.max_relative_area_drift())});
  log << "run: " << r.steps << " steps to t = " << last.t << ", " << r.islands.size() << " island(s), E/E0 = "
      << last.energy_ratio << '\n';
  return 0;
}

inline int cmd_converge(const RunConfig& c, int levels, const std::vector<double>& t_evals, const fs::path& out,
                        std::ostream& log) {
  fs::create_directories(out);
  const auto tables = convergence_study(c, levels, t_evals);
  std::vector<std::string> extra{"levels = " + std::to_string(levels)};
  bool failed = false;
  for (const auto& t : tables) {
    auto os = open_out(out / ("errors_t" + time_tag(t.t_eval) + ".csv"));
    t.write_csv(os);
    log << "t_eval = " << t.t_eval << '\n';
    for (const auto& r : t.rows) log << "  h = " << r.h << "  dt = " << r.dt << "  error = " << r.error << "  order = " << r.order << '\n';
    if (t.failure) {
      extra.push_back("failure = " + *t.failure);
      failed = true;
    }
  }
  write_manifest(out, "converge", c, extra);
  if (failed) throw ContractViolation("convergence study incomplete: " + *tables.front().failure);
  return 0;
}

inline int cmd_compare(const RunConfig& c, const fs::path& out, std::ostream& log) {
  fs::create_directories(out);
  const auto cmp = compare_schemes(c, c.t_max);
  {
    auto os = open_out(out / "sp_history.csv");
    cmp.sp.write_csv(os);
  }
  {
    auto os = open_out(out / "es_history.csv");
    cmp.es.write_csv(os);
  }
  {
    auto os = open_out(out / "summary.txt");
    cmp.write_summary(os);
  }
  write_manifest(out, "compare", c, {});
  cmp.write_summary(log);
  return 0;
}

inline int cmd_check(const RunConfig& c, std::ostream& log) {
  log << stability_check(c.anisotropy_spec()).to_text();
  const auto net = build_initial(c);
  log << "initial network: N = " << net.segments(CurveRole::F1V) << ", " << net.segments(CurveRole::F2V) << ", "
      << net.segments(CurveRole::F1F2) << "; area " << discrete_area(net) << '\n';
  log << "config ok\n";
  return 0;
}

/// Full entry point. Library and config errors become a single
/// `error kind=<kind> message=<text>` line on `err` and exit code 1; usage
/// errors exit with CLI11's code.
inline int main(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"dewetting simulator for double-bubble thin films"};
  app.require_subcommand(1);
  std::string config_path, out_dir = "out";
  long snapshot_every = -1;
  bool seedless = false;
  int levels = 3;
  std::vector<double> t_evals{1.0};
  std::string preset_name;

  auto add_common = [&](CLI::App* s) {
    s->add_option("config", config_path, "config file")->required();
    s->add_option("--out", out_dir, "output directory");
    s->add_flag("--seedless", seedless, "accepted for compatibility; runs are always deterministic");
    s->add_option("--snapshot-every", snapshot_every, "snapshot cadence in steps");
  };
  auto* run_cmd = app.add_subcommand("run", "single simulation");
  add_common(run_cmd);
  auto* conv_cmd = app.add_subcommand("converge", "convergence-order table");
  add_common(conv_cmd);
  conv_cmd->add_option("--levels", levels, "refinement levels")->check(CLI::Range(1, 8));
  conv_cmd->add_option("--t-eval", t_evals, "evaluation times")->expected(1, -1);
  auto* cmp_cmd = app.add_subcommand("compare", "SP against ES");
  add_common(cmp_cmd);
  auto* check_cmd = app.add_subcommand("check", "validate a config and report anisotropy stability");
  add_common(check_cmd);
  auto* preset_cmd = app.add_subcommand("preset", "list or show presets");
  preset_cmd->require_subcommand(1);
  auto* preset_list = preset_cmd->add_subcommand("list", "preset names");
  auto* preset_show = preset_cmd->add_subcommand("show", "preset as a config file");
  preset_show->add_option("name", preset_name)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      out << app.help();
      return 0;
    }
    err << "error kind=usage message=" << e.what() << '\n';
    return e.get_exit_code();
  }

  try {
    if (*preset_list) {
      for (const auto& n : preset_names()) out << n << '\n';
      return 0;
    }
    if (*preset_show) {
      out << serialize_config(preset(preset_name));
      return 0;
    }
    RunConfig c = load_config(config_path);
    if (snapshot_every >= 0) c.snapshot_every = snapshot_every;
    validate_config(c);
    if (*run_cmd) return cmd_run(c, out_dir, out);
    if (*conv_cmd) return cmd_converge(c, levels, t_evals, out_dir, out);
    if (*cmp_cmd) return cmd_compare(c, out_dir, out);
    return cmd_check(c, out);
  } catch (const Error& e) {
    err << "error kind=" << e.kind() << " message=" << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    err << "error kind=internal message=" << e.what() << '\n';
    return 1;
  }
}

}  // namespace dbfilm::cli

#endif
