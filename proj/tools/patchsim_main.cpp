// Command-line front end: run scenario files, verify invariant suites,
// inspect contact-mode sequences and query the reference oracles.
//
// Exit codes: 0 success, 1 input/validation error, 2 solver failure.

#include <atomic>
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <sstream>
#include <thread>

#include <CLI11.hpp>

#include "patchsim/oracles.hpp"
#include "patchsim/scenario.hpp"
#include "patchsim/stepper.hpp"
#include "patchsim/trajectory.hpp"

namespace {

using namespace patchsim;

enum LogLevel { kQuiet = 0, kInfo = 1, kDebug = 2 };

LogLevel log_level() {
  const char* env = std::getenv("PATCHSIM_LOG");
  if (env == nullptr) return kInfo;
  const std::string v = env;
  if (v == "quiet") return kQuiet;
  if (v == "debug") return kDebug;
  return kInfo;
}

struct RunOverrides {
  double h = -1.0;
  double mu = -1.0;
  double duration = -1.0;

  void apply(Scenario& sc) const {
    if (h > 0) sc.h = h;
    if (mu >= 0) sc.friction.mu = mu;
    if (duration > 0) sc.duration = duration;
  }
};

std::string mode_sequence_text(const std::vector<TrajectoryRecord>& records) {
  std::ostringstream out;
  for (const ModeRun& run : mode_runs(records)) {
    out << to_string(run.kind) << " from t=" << run.start_time << " ("
        << run.count << (run.count == 1 ? " step)" : " steps)") << "\n";
  }
  return out.str();
}

int run_one(const std::string& path, const std::string& out_path,
            const RunOverrides& overrides, std::mutex& stdout_mutex) {
  Scenario sc;
  try {
    sc = parse_scenario_file(path);
    overrides.apply(sc);
  } catch (const std::exception& e) {
    std::lock_guard<std::mutex> lock(stdout_mutex);
    std::cerr << path << ": " << e.what() << "\n";
    return 1;
  }

  try {
    const Simulator sim(std::move(sc));
    const auto t0 = std::chrono::steady_clock::now();
    const std::vector<TrajectoryRecord> records = sim.run();
    const auto t1 = std::chrono::steady_clock::now();
    write_trajectory_file(records, out_path);

    RunSummary summary = summarize(records, sim);
    summary.wall_seconds = std::chrono::duration<double>(t1 - t0).count();
    std::lock_guard<std::mutex> lock(stdout_mutex);
    if (log_level() >= kInfo) {
      std::cout << "== " << path << " -> " << out_path << "\n";
      std::cout << format_summary(summary);
      std::cout << "seconds_per_step: "
                << (summary.steps > 0 ? summary.wall_seconds / summary.steps
                                      : 0.0)
                << "\n";
      if (log_level() >= kDebug) {
        std::cout << "mode sequence:\n" << mode_sequence_text(records);
      }
    }
    return 0;
  } catch (const StepFailureError& e) {
    std::lock_guard<std::mutex> lock(stdout_mutex);
    std::cerr << path << ": " << e.what() << "\n" << e.diagnostic() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::lock_guard<std::mutex> lock(stdout_mutex);
    std::cerr << path << ": " << e.what() << "\n";
    return 1;
  }
}

int cmd_run(const std::vector<std::string>& paths, const std::string& out,
            const RunOverrides& overrides, int jobs) {
  namespace fs = std::filesystem;
  std::vector<std::string> out_paths;
  if (paths.size() == 1 && !out.empty() && !fs::is_directory(out)) {
    out_paths.push_back(out);
  } else {
    const fs::path dir = out.empty() ? fs::path(".") : fs::path(out);
    if (!out.empty()) fs::create_directories(dir);
    for (const std::string& p : paths) {
      out_paths.push_back((dir / fs::path(p).stem()).string() + ".csv");
    }
  }

  std::mutex stdout_mutex;
  std::atomic<int> next{0};
  std::atomic<int> worst{0};
  auto worker = [&]() {
    while (true) {
      const int i = next.fetch_add(1);
      if (i >= static_cast<int>(paths.size())) return;
      const int code = run_one(paths[i], out_paths[i], overrides, stdout_mutex);
      int prev = worst.load();
      while (code > prev && !worst.compare_exchange_weak(prev, code)) {
      }
    }
  };
  const int n_threads =
      std::max(1, std::min<int>(jobs, static_cast<int>(paths.size())));
  if (n_threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int i = 0; i < n_threads; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  return worst.load();
}

int cmd_verify(const std::string& path, double pen_tol, double hull_tol,
               double comp_tol, double cone_tol, double quat_tol,
               const RunOverrides& overrides) {
  Scenario sc;
  try {
    sc = parse_scenario_file(path);
    overrides.apply(sc);
  } catch (const std::exception& e) {
    std::cerr << path << ": " << e.what() << "\n";
    return 1;
  }

  try {
    const Simulator sim(std::move(sc));
    const std::vector<TrajectoryRecord> records = sim.run();
    const RunSummary s = summarize(records, sim);

    bool all_pass = true;
    auto check = [&](const std::string& name, double value, double tol) {
      const bool ok = value <= tol;
      all_pass = all_pass && ok;
      std::cout << (ok ? "[PASS] " : "[FAIL] ") << name << ": " << value
                << " (tol " << tol << ")\n";
    };
    check("non-penetration max(-g(a1))", s.max_penetration, pen_tol);
    check("contact-step |g(a1)|", s.max_contact_gap, pen_tol);
    check("ecp-in-hull max f_i(a1)", s.max_hull_violation, hull_tol);
    check("complementarity violation", s.max_complementarity, comp_tol);
    check("friction-cone violation", s.max_cone_violation, cone_tol);
    check("quaternion norm drift", s.max_quaternion_drift, quat_tol);

    const bool any_separated =
        std::any_of(records.begin(), records.end(), [](const auto& r) {
          return r.mode.kind == ContactModeKind::Separated;
        });
    if (sim.scenario().applied.terms.empty() && !any_separated) {
      double worst_gain = 0.0;
      double prev_ke =
          kinetic_energy(sim.scenario().initial, sim.scenario().body.props);
      for (const TrajectoryRecord& rec : records) {
        const double ke = kinetic_energy(rec.state, sim.scenario().body.props);
        worst_gain =
            std::max(worst_gain, (ke - prev_ke) / std::max(1.0, prev_ke));
        prev_ke = ke;
      }
      check("passive energy gain (relative)", worst_gain, 1e-10);
    } else {
      std::cout << "[ n/a ] passive energy gain (applied wrench or separation "
                   "present)\n";
    }

    std::cout << "mode sequence:\n" << mode_sequence_text(records);
    std::cout << format_summary(s);
    return all_pass ? 0 : 1;
  } catch (const StepFailureError& e) {
    std::cerr << path << ": " << e.what() << "\n" << e.diagnostic() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << path << ": " << e.what() << "\n";
    return 1;
  }
}

int cmd_modes(const std::string& path) {
  try {
    const std::vector<TrajectoryRecord> records = read_trajectory_file(path);
    if (records.empty()) {
      std::cerr << path << ": no trajectory rows\n";
      return 1;
    }
    std::cout << mode_sequence_text(records);
    return 0;
  } catch (const std::exception& e) {
    std::cerr << path << ": " << e.what() << "\n";
    return 1;
  }
}

void print_sequence(const std::vector<double>& seq) {
  for (size_t i = 0; i < seq.size(); ++i) {
    std::cout << i << " " << seq[i] << "\n";
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"patchsim: rigid-body simulation with planar patch contact"};
  app.require_subcommand(1);
  // --h is a step-size override on several subcommands, so help loses its
  // short form everywhere.
  app.set_help_flag("--help", "print help");

  // --- run ---
  auto* run_cmd = app.add_subcommand("run", "run scenarios, write trajectory CSV");
  run_cmd->set_help_flag("--help", "print help");
  std::vector<std::string> run_paths;
  std::string run_out;
  RunOverrides overrides;
  int jobs = 1;
  run_cmd->add_option("scenarios", run_paths, "scenario file(s)")->required();
  run_cmd->add_option("--out", run_out,
                      "output CSV (single scenario) or directory");
  run_cmd->add_option("--h", overrides.h, "override step size");
  run_cmd->add_option("--mu", overrides.mu, "override friction coefficient");
  run_cmd->add_option("--duration", overrides.duration, "override duration");
  run_cmd->add_option("--jobs", jobs, "run scenario files concurrently");

  // --- verify ---
  auto* verify_cmd =
      app.add_subcommand("verify", "run a scenario and check the invariant suite");
  verify_cmd->set_help_flag("--help", "print help");
  std::string verify_path;
  double pen_tol = 1e-10, hull_tol = 1e-10, comp_tol = 1e-8, cone_tol = 1e-8,
         quat_tol = 1e-12;
  RunOverrides verify_overrides;
  verify_cmd->add_option("scenario", verify_path, "scenario file")->required();
  verify_cmd->add_option("--pen-tol", pen_tol, "penetration tolerance");
  verify_cmd->add_option("--hull-tol", hull_tol, "ECP-in-hull tolerance");
  verify_cmd->add_option("--comp-tol", comp_tol, "complementarity tolerance");
  verify_cmd->add_option("--cone-tol", cone_tol, "friction cone tolerance");
  verify_cmd->add_option("--quat-tol", quat_tol, "quaternion drift tolerance");
  verify_cmd->add_option("--h", verify_overrides.h, "override step size");
  verify_cmd->add_option("--duration", verify_overrides.duration,
                         "override duration");

  // --- modes ---
  auto* modes_cmd =
      app.add_subcommand("modes", "print the mode sequence of a trajectory CSV");
  modes_cmd->set_help_flag("--help", "print help");
  std::string modes_path;
  modes_cmd->add_option("trajectory", modes_path, "trajectory CSV")->required();

  // --- oracle ---
  auto* oracle_cmd = app.add_subcommand("oracle", "query a reference oracle");
  oracle_cmd->set_help_flag("--help", "print help");
  oracle_cmd->require_subcommand(1);

  auto* slide = oracle_cmd->add_subcommand("sliding-block");
  slide->set_help_flag("--help", "print help");
  double sb_v0 = 1.0, sb_mu = 0.3, sb_g = 9.8, sb_h = 0.01;
  int sb_steps = 100;
  slide->add_option("--v0", sb_v0);
  slide->add_option("--mu", sb_mu);
  slide->add_option("--g", sb_g);
  slide->add_option("--h", sb_h);
  slide->add_option("--steps", sb_steps);

  auto* spin = oracle_cmd->add_subcommand("spinning-patch");
  spin->set_help_flag("--help", "print help");
  double sp_w0 = 1.0, sp_mu = 0.22, sp_er = 0.1, sp_m = 15.0, sp_izz = 1.0,
         sp_g = 9.8, sp_h = 0.01;
  int sp_steps = 100;
  spin->add_option("--w0", sp_w0);
  spin->add_option("--mu", sp_mu);
  spin->add_option("--e-r", sp_er);
  spin->add_option("--m", sp_m);
  spin->add_option("--izz", sp_izz);
  spin->add_option("--g", sp_g);
  spin->add_option("--h", sp_h);
  spin->add_option("--steps", sp_steps);

  auto* closest = oracle_cmd->add_subcommand("closest-point");
  closest->set_help_flag("--help", "print help");
  std::string cp_scenario;
  std::vector<double> cp_pos, cp_quat;
  closest->add_option("--scenario", cp_scenario, "body + plane source")
      ->required();
  closest->add_option("--position", cp_pos, "override position (3 values)")
      ->expected(3);
  closest->add_option("--orientation", cp_quat,
                      "override orientation (w x y z)")
      ->expected(4);

  auto* dissip = oracle_cmd->add_subcommand("dissipation-max");
  dissip->set_help_flag("--help", "print help");
  double dm_vt = 1.0, dm_vo = 0.0, dm_vr = 0.0, dm_mu = 0.22, dm_pn = 1.0,
         dm_et = 1.0, dm_eo = 1.0, dm_er = 0.1;
  int dm_grid = 1000;
  dissip->add_option("--vt", dm_vt);
  dissip->add_option("--vo", dm_vo);
  dissip->add_option("--vr", dm_vr);
  dissip->add_option("--mu", dm_mu);
  dissip->add_option("--pn", dm_pn);
  dissip->add_option("--e-t", dm_et);
  dissip->add_option("--e-o", dm_eo);
  dissip->add_option("--e-r", dm_er);
  dissip->add_option("--grid", dm_grid);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  if (app.got_subcommand(run_cmd)) {
    return cmd_run(run_paths, run_out, overrides, jobs);
  }
  if (app.got_subcommand(verify_cmd)) {
    return cmd_verify(verify_path, pen_tol, hull_tol, comp_tol, cone_tol,
                      quat_tol, verify_overrides);
  }
  if (app.got_subcommand(modes_cmd)) {
    return cmd_modes(modes_path);
  }
  if (app.got_subcommand(oracle_cmd)) {
    try {
      if (oracle_cmd->got_subcommand(slide)) {
        print_sequence(patchsim::oracles::sliding_block_velocity(
            sb_v0, sb_mu, sb_g, sb_h, sb_steps));
        return 0;
      }
      if (oracle_cmd->got_subcommand(spin)) {
        print_sequence(patchsim::oracles::spinning_patch_rate(
            sp_w0, sp_mu, sp_er, sp_m, sp_g, sp_izz, sp_h, sp_steps));
        return 0;
      }
      if (oracle_cmd->got_subcommand(closest)) {
        const Scenario sc = parse_scenario_file(cp_scenario);
        Pose pose = sc.initial.pose();
        if (!cp_pos.empty()) pose.position = Vector3d(cp_pos.data());
        if (!cp_quat.empty()) {
          pose.orientation =
              normalized_quaternion(Vector4d(cp_quat.data()));
        }
        const ConvexPolytope poly = convex_hull(sc.body.vertices);
        const auto cp =
            patchsim::oracles::closest_point_bruteforce(poly, pose, sc.plane);
        std::cout << "a1: " << cp.a1.transpose() << "\n";
        std::cout << "a2: " << cp.a2.transpose() << "\n";
        std::cout << "gap: " << cp.gap << "\n";
        std::cout << "ties:";
        for (int i : cp.tie_set) std::cout << " " << i;
        std::cout << "\n";
        return 0;
      }
      if (oracle_cmd->got_subcommand(dissip)) {
        const Vector3d p = patchsim::oracles::dissipation_grid_max(
            dm_vt, dm_vo, dm_vr, dm_mu, dm_pn, dm_et, dm_eo, dm_er, dm_grid);
        std::cout << "p_t: " << p[0] << "\np_o: " << p[1] << "\np_r: " << p[2]
                  << "\n";
        return 0;
      }
    } catch (const std::exception& e) {
      std::cerr << e.what() << "\n";
      return 1;
    }
  }
  return 1;
}
