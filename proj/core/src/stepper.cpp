#include "patchsim/stepper.hpp"

#include <chrono>
#include <cmath>
#include <sstream>

namespace patchsim {

namespace {

std::string residual_dump(const StepProblem& problem,
                          const Eigen::VectorXd& z_best,
                          const SolveReport& report) {
  std::ostringstream out;
  const Eigen::VectorXd f = problem.residual(z_best);
  out << "residual dump: dim=" << f.size()
      << " |F|_inf=" << f.lpNorm<Eigen::Infinity>()
      << " iterations=" << report.iterations
      << " line_search_failures=" << report.line_search_failures << "\n";
  std::vector<int> order(f.size());
  for (int i = 0; i < f.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&f](int a, int b) {
    return std::abs(f[a]) > std::abs(f[b]);
  });
  out << "worst rows:";
  for (int i = 0; i < std::min<int>(5, static_cast<int>(order.size())); ++i) {
    out << " [" << order[i] << "]=" << f[order[i]];
  }
  return out.str();
}

}  // namespace

ContactMode classify_mode(const ContactVariables& contact,
                          const ConvexPolytope& poly, const SupportPlane& plane,
                          const RigidState& state, double impulse_eps,
                          double witness_eps) {
  ContactMode mode;
  if (contact.p_n <= impulse_eps) {
    mode.kind = ContactModeKind::Separated;
    return mode;
  }
  const Matrix3d rot = rotation(state.orientation);
  std::vector<Vector3d> points;
  for (int i = 0; i < poly.vertex_count(); ++i) {
    const Vector3d w = rot * poly.vertices[i] + state.position;
    if (plane.gap(w) <= witness_eps) {
      mode.witnesses.push_back(i);
      points.push_back(w);
    }
  }
  if (mode.witnesses.empty()) {
    // In contact per p_n but no vertex within the witness band; report the
    // nearest vertex as a point contact.
    mode.kind = ContactModeKind::Point;
    mode.witnesses.push_back(min_gap_vertex(poly, state.pose(), plane).vertex_index);
    return mode;
  }
  if (points.size() == 1) {
    mode.kind = ContactModeKind::Point;
    return mode;
  }
  // Farthest pair spans the candidate line; witnesses off it mean surface.
  size_t ia = 0, ib = 1;
  double best = -1.0;
  for (size_t i = 0; i < points.size(); ++i) {
    for (size_t j = i + 1; j < points.size(); ++j) {
      const double d = (points[i] - points[j]).norm();
      if (d > best) {
        best = d;
        ia = i;
        ib = j;
      }
    }
  }
  const Vector3d axis = (points[ib] - points[ia]).normalized();
  bool collinear = true;
  for (const Vector3d& p : points) {
    const Vector3d rel = p - points[ia];
    if ((rel - rel.dot(axis) * axis).norm() > witness_eps) {
      collinear = false;
      break;
    }
  }
  mode.kind = collinear ? ContactModeKind::Line : ContactModeKind::Surface;
  return mode;
}

Simulator::Simulator(Scenario scenario, StepperConfig config)
    : scenario_(std::move(scenario)), config_(config) {
  scenario_.plane.validate();
  scenario_.friction.validate();
  scenario_.body.props.validate();
  poly_ = convex_hull(scenario_.body.vertices);
  frame_ = ContactFrame::from_plane(scenario_.plane);
}

int Simulator::step_count() const {
  return static_cast<int>(std::llround(scenario_.duration / scenario_.h));
}

int Simulator::select_active_facet(const RigidState& state) const {
  const Matrix3d rot = rotation(state.orientation);
  int best = -1;
  double best_dot = std::numeric_limits<double>::infinity();
  for (int i = 0; i < poly_.facet_count(); ++i) {
    const double d = (rot * poly_.facets[i].normal).dot(scenario_.plane.normal);
    if (d < best_dot) {
      best_dot = d;
      best = i;
    }
  }
  return best;
}

StepProblem Simulator::make_step_problem(const RigidState& state,
                                         double t) const {
  const double h = scenario_.h;
  Vector6d applied = wrench_at(scenario_.applied, t);
  applied[2] -= scenario_.gravity * scenario_.body.props.mass;
  return StepProblem(
      poly_, scenario_.plane, frame_, scenario_.friction, scenario_.body.props,
      state, h * applied, h, select_active_facet(state),
      characteristic_impulse(scenario_.body.props.mass, scenario_.gravity, h));
}

StepUnknowns Simulator::initial_guess(const StepProblem& problem,
                                      const ContactVariables* previous) const {
  const RigidState& prev = problem.state_prev();
  const double h = problem.step_size();

  StepUnknowns guess;
  guess.state_next.linear_velocity = prev.linear_velocity;
  guess.state_next.angular_velocity = prev.angular_velocity;
  // Raw Euler prediction; the kinematic rows hold exactly at this guess.
  const Vector7d q_pred = prev.configuration() +
                          h * kinematic_map(prev) * prev.generalized_velocity();
  guess.state_next.position = q_pred.head<3>();
  guess.state_next.orientation = q_pred.tail<4>();

  const int m = problem.facet_count();
  guess.contact.l_hull = Eigen::VectorXd::Zero(m);

  if (previous != nullptr) {
    guess.contact = *previous;
    return guess;
  }

  // Cold start: zero impulses, closest-vertex geometry at the predicted
  // pose (tie centroid, so a flat face starts from its center).
  const Pose pose = guess.state_next.pose();
  const Matrix3d rot = rotation(pose.orientation);
  const std::vector<int> ties =
      min_gap_vertex_ties(poly_, pose, scenario_.plane, 1e-9);
  Vector3d a1 = Vector3d::Zero();
  for (int vi : ties) a1 += rot * poly_.vertices[vi] + pose.position;
  a1 /= static_cast<double>(ties.size());
  guess.contact.a1 = a1;
  guess.contact.a2 = scenario_.plane.project(a1);
  guess.contact.l_hull[problem.active_facet()] =
      std::max(scenario_.plane.gap(a1), 0.0);
  guess.contact.l_plane = 1.0;

  const WrenchBasis basis =
      wrench_basis(frame_, a1, guess.state_next.position);
  const Vector6d nu = guess.state_next.generalized_velocity();
  const FrictionParams& fr = scenario_.friction;
  guess.contact.sigma = std::sqrt(
      std::pow(fr.e_t * basis.w_t.dot(nu), 2) +
      std::pow(fr.e_o * basis.w_o.dot(nu), 2) +
      std::pow(fr.e_r * basis.w_r.dot(nu), 2));
  return guess;
}

TrajectoryRecord Simulator::solve_step(const RigidState& state, double t,
                                       double h,
                                       const ContactVariables* previous,
                                       int step_index,
                                       int halvings_left) const {
  // Rebuild the problem at the possibly halved step size.
  Vector6d applied = wrench_at(scenario_.applied, t);
  applied[2] -= scenario_.gravity * scenario_.body.props.mass;
  const StepProblem problem(
      poly_, scenario_.plane, frame_, scenario_.friction, scenario_.body.props,
      state, h * applied, h, select_active_facet(state),
      characteristic_impulse(scenario_.body.props.mass, scenario_.gravity, h));
  const FbSystem system(problem.mncp_problem());

  std::optional<SolveResult> solution;
  std::string failure;
  Eigen::VectorXd best_z;
  SolveReport best_report;
  for (int attempt = 0; attempt < 2 && !solution; ++attempt) {
    const ContactVariables* warm = attempt == 0 ? previous : nullptr;
    if (attempt == 1 && previous == nullptr) break;  // cold == warm already
    const StepUnknowns guess = initial_guess(problem, warm);
    try {
      solution = solve(system, problem.pack(guess), config_.solver);
    } catch (const SolveFailure& e) {
      failure = e.what();
      best_z = e.best().z;
      best_report = e.best().report;
    }
  }

  if (!solution) {
    if (halvings_left > 0) {
      // Two half steps land back on the caller's grid point.
      const TrajectoryRecord mid = solve_step(state, t, 0.5 * h, previous,
                                              step_index, halvings_left - 1);
      TrajectoryRecord full =
          solve_step(mid.state, t + 0.5 * h, 0.5 * h, &mid.contact, step_index,
                     halvings_left - 1);
      full.time = t + h;
      return full;
    }
    throw StepFailureError(step_index, t, failure,
                           best_z.size() == problem.dimension()
                               ? residual_dump(problem, best_z, best_report)
                               : "no iterate available");
  }

  StepUnknowns solved = problem.unpack(solution->z);
  solved.state_next.orientation =
      normalized_quaternion(solved.state_next.orientation);

  TrajectoryRecord rec;
  rec.time = t + h;
  rec.state = solved.state_next;
  rec.contact = solved.contact;
  rec.solver = solution->report;

  // Empirical non-penetration and ECP-in-hull guarantees.
  const double gap = scenario_.plane.gap(rec.contact.a1);
  if (gap < -config_.penetration_tol) {
    throw StepFailureError(step_index, t,
                           "penetration bound violated: g(a1) = " +
                               std::to_string(gap),
                           residual_dump(problem, solution->z, rec.solver));
  }
  const Matrix3d rot = rotation(rec.state.orientation);
  const Vector3d a1_body =
      rot.transpose() * (rec.contact.a1 - rec.state.position);
  if (poly_.max_facet_value(a1_body) > config_.hull_tol) {
    throw StepFailureError(step_index, t,
                           "ECP left the hull: max f_i(a1) = " +
                               std::to_string(poly_.max_facet_value(a1_body)),
                           residual_dump(problem, solution->z, rec.solver));
  }

  rec.mode = classify_mode(rec.contact, poly_, scenario_.plane, rec.state,
                           config_.mode_impulse_eps, config_.witness_eps);
  return rec;
}

TrajectoryRecord Simulator::step(const RigidState& state, double t,
                                 const ContactVariables* previous,
                                 int step_index) const {
  return solve_step(state, t, scenario_.h, previous, step_index,
                    config_.halve_on_failure ? config_.max_halvings : 0);
}

std::vector<TrajectoryRecord> Simulator::run() const {
  const int n = step_count();
  std::vector<TrajectoryRecord> records;
  records.reserve(static_cast<size_t>(n));
  RigidState state = scenario_.initial;
  const ContactVariables* previous = nullptr;
  for (int i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) * scenario_.h;
    records.push_back(step(state, t, previous, i));
    state = records.back().state;
    previous = &records.back().contact;
  }
  return records;
}

RunSummary summarize(const std::vector<TrajectoryRecord>& records,
                     const Simulator& sim) {
  const ConvexPolytope& poly = sim.polytope();
  const SupportPlane& plane = sim.scenario().plane;
  const FrictionParams& friction = sim.scenario().friction;

  RunSummary s;
  s.steps = static_cast<int>(records.size());
  long long iter_sum = 0;
  for (const TrajectoryRecord& rec : records) {
    const ContactVariables& c = rec.contact;
    const double gap = plane.gap(c.a1);
    s.max_penetration = std::max(s.max_penetration, -gap);
    if (c.p_n > sim.config().mode_impulse_eps) {
      s.max_contact_gap = std::max(s.max_contact_gap, std::abs(gap));
    }

    const Matrix3d rot = rotation(rec.state.orientation);
    const Vector3d a1_body = rot.transpose() * (c.a1 - rec.state.position);
    s.max_hull_violation =
        std::max(s.max_hull_violation, poly.max_facet_value(a1_body));

    auto pair_violation = [](double x, double y) {
      return std::max({0.0, -x, -y, std::min(x, y)});
    };
    for (int i = 0; i < poly.facet_count(); ++i) {
      s.max_complementarity =
          std::max(s.max_complementarity,
                   pair_violation(c.l_hull[i], -poly.facets[i].value(a1_body)));
    }
    s.max_complementarity = std::max(
        s.max_complementarity, pair_violation(c.l_plane, -plane.gap(c.a2)));
    s.max_complementarity =
        std::max(s.max_complementarity, pair_violation(c.p_n, gap));
    const double slack = c.cone_slack(friction);
    s.max_complementarity =
        std::max(s.max_complementarity, pair_violation(c.sigma, slack));
    s.max_cone_violation = std::max(s.max_cone_violation, -slack);

    s.max_quaternion_drift = std::max(
        s.max_quaternion_drift, std::abs(rec.state.orientation.norm() - 1.0));

    iter_sum += rec.solver.iterations;
    s.max_iterations = std::max(s.max_iterations, rec.solver.iterations);
    if (static_cast<int>(s.iteration_histogram.size()) <=
        rec.solver.iterations) {
      s.iteration_histogram.resize(rec.solver.iterations + 1, 0);
    }
    s.iteration_histogram[rec.solver.iterations]++;
  }
  s.max_cone_violation = std::max(s.max_cone_violation, 0.0);
  if (!records.empty()) {
    s.mean_iterations = static_cast<double>(iter_sum) / records.size();
  }
  return s;
}

std::string format_summary(const RunSummary& s) {
  std::ostringstream out;
  out << "steps: " << s.steps << "\n";
  out << "max_penetration: " << s.max_penetration << "\n";
  out << "max_contact_gap: " << s.max_contact_gap << "\n";
  out << "max_hull_violation: " << s.max_hull_violation << "\n";
  out << "max_complementarity: " << s.max_complementarity << "\n";
  out << "max_cone_violation: " << s.max_cone_violation << "\n";
  out << "max_quaternion_drift: " << s.max_quaternion_drift << "\n";
  out << "mean_iterations: " << s.mean_iterations << "\n";
  out << "max_iterations: " << s.max_iterations << "\n";
  out << "iterations_histogram:";
  for (size_t i = 0; i < s.iteration_histogram.size(); ++i) {
    if (s.iteration_histogram[i] > 0) {
      out << " " << i << "x" << s.iteration_histogram[i];
    }
  }
  out << "\n";
  if (s.wall_seconds > 0) {
    out << "wall_seconds: " << s.wall_seconds << "\n";
  }
  return out.str();
}

std::vector<ModeRun> mode_runs(const std::vector<TrajectoryRecord>& records) {
  std::vector<ModeRun> runs;
  for (const TrajectoryRecord& rec : records) {
    if (runs.empty() || runs.back().kind != rec.mode.kind) {
      runs.push_back({rec.mode.kind, rec.time, 1});
    } else {
      runs.back().count++;
    }
  }
  return runs;
}

double kinetic_energy(const RigidState& state,
                      const InertialProperties& props) {
  const Vector6d nu = state.generalized_velocity();
  return 0.5 * nu.dot(mass_matrix(state, props) * nu);
}

}  // namespace patchsim
