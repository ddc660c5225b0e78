#pragma once

#include <optional>
#include <string>
#include <vector>

#include "patchsim/contact_model.hpp"
#include "patchsim/geometry.hpp"
#include "patchsim/mncp.hpp"
#include "patchsim/scenario.hpp"
#include "patchsim/trajectory.hpp"

namespace patchsim {

struct StepperConfig {
  SolverConfig solver;
  double mode_impulse_eps = 1e-9;  // p_n at/below this means separated
  double witness_eps = 1e-7;       // vertex gap for mode witnesses (m)
  double penetration_tol = 1e-10;  // asserted on -g(a1) after every step
  double hull_tol = 1e-10;         // asserted on max_i f_i(a1)
  // Off by default so trajectories stay on the fixed h grid of the
  // scenario; when enabled a failing step is re-solved as 2 (then 4)
  // half-size substeps that land back on the grid.
  bool halve_on_failure = false;
  int max_halvings = 2;
};

/// Thrown when a step cannot be solved or its solution violates the
/// non-penetration / hull invariants; carries a residual dump.
class StepFailureError : public std::runtime_error {
 public:
  StepFailureError(int step_index, double time, const std::string& message,
                   std::string diagnostic)
      : std::runtime_error("step " + std::to_string(step_index) + " (t=" +
                           std::to_string(time) + "): " + message),
        step_index_(step_index),
        time_(time),
        diagnostic_(std::move(diagnostic)) {}
  int step_index() const { return step_index_; }
  double time() const { return time_; }
  const std::string& diagnostic() const { return diagnostic_; }

 private:
  int step_index_;
  double time_;
  std::string diagnostic_;
};

/// Separated when p_n <= impulse_eps; otherwise classified by the hull
/// vertices within witness_eps of the plane: one -> Point, collinear ->
/// Line, spanning an area -> Surface.
ContactMode classify_mode(const ContactVariables& contact,
                          const ConvexPolytope& poly, const SupportPlane& plane,
                          const RigidState& state, double impulse_eps,
                          double witness_eps);

/// Owns the scenario, the hull (built once, in the body frame) and the
/// solver configuration; advances the simulation one MNCP solve per step.
class Simulator {
 public:
  explicit Simulator(Scenario scenario, StepperConfig config = {});

  const Scenario& scenario() const { return scenario_; }
  const ConvexPolytope& polytope() const { return poly_; }
  const ContactFrame& frame() const { return frame_; }
  const StepperConfig& config() const { return config_; }
  int step_count() const;

  /// Facet whose world normal points most against the plane normal at the
  /// given state; held fixed through the step's Newton solve.
  int select_active_facet(const RigidState& state) const;

  StepProblem make_step_problem(const RigidState& state, double t) const;

  /// Warm start carrying the previous solution's contact variables, or the
  /// cold start (zero impulses, closest-vertex geometry) when absent.
  StepUnknowns initial_guess(const StepProblem& problem,
                             const ContactVariables* previous) const;

  /// One step from `state` at time t. Tries the warm start first, retries
  /// once from the cold start, then (optionally) substeps; throws
  /// StepFailureError when everything fails or invariants break.
  TrajectoryRecord step(const RigidState& state, double t,
                        const ContactVariables* previous,
                        int step_index = 0) const;

  std::vector<TrajectoryRecord> run() const;

 private:
  TrajectoryRecord solve_step(const RigidState& state, double t, double h,
                              const ContactVariables* previous,
                              int step_index, int halvings_left) const;

  Scenario scenario_;
  StepperConfig config_;
  ConvexPolytope poly_;
  ContactFrame frame_;
};

/// Per-run invariant aggregates recomputed from the records (pure function
/// of the solved trajectory).
struct RunSummary {
  int steps = 0;
  double max_penetration = 0.0;          // max over steps of -g(a1)
  double max_contact_gap = 0.0;          // max |g(a1)| where p_n > eps
  double max_hull_violation = 0.0;       // max over steps, facets of f_i(a1)
  double max_complementarity = 0.0;      // worst pair violation
  double max_cone_violation = 0.0;       // max(0, -cone_slack)
  double max_quaternion_drift = 0.0;     // | |q| - 1 |
  double mean_iterations = 0.0;
  int max_iterations = 0;
  std::vector<int> iteration_histogram;  // index = iteration count
  double wall_seconds = 0.0;
};

RunSummary summarize(const std::vector<TrajectoryRecord>& records,
                     const Simulator& sim);

/// Plain-text diagnostic block (one "key: value" per line).
std::string format_summary(const RunSummary& summary);

/// Run-length encoding of the mode sequence.
struct ModeRun {
  ContactModeKind kind;
  double start_time;
  int count;
};

std::vector<ModeRun> mode_runs(const std::vector<TrajectoryRecord>& records);

/// 0.5 nu^T M(q) nu at the record's state.
double kinetic_energy(const RigidState& state, const InertialProperties& props);

}  // namespace patchsim
