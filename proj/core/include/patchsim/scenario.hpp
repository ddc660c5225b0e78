#pragma once

#include <string>
#include <vector>

#include "patchsim/contact_model.hpp"
#include "patchsim/geometry.hpp"
#include "patchsim/se3.hpp"

namespace patchsim {

/// Parse failure with the 1-based line number of the offending input line
/// (or of the section header for missing keys).
class ScenarioParseError : public std::runtime_error {
 public:
  ScenarioParseError(int line, const std::string& message)
      : std::runtime_error("line " + std::to_string(line) + ": " + message),
        line_(line) {}
  int line() const { return line_; }

 private:
  int line_;
};

/// One additive term of the applied wrench. `component` indexes the wrench
/// vector (f_x, f_y, f_z, tau_x, tau_y, tau_z).
struct WrenchTerm {
  enum class Form { Constant, Sinusoid, Table };

  int component = 0;
  Form form = Form::Constant;
  double constant = 0.0;  // Constant
  // Sinusoid: amplitude * sin(2 pi frequency t + phase) + bias
  double amplitude = 0.0;
  double frequency = 0.0;
  double phase = 0.0;
  double bias = 0.0;
  // Table: piecewise constant, value entries[i].second on
  // [entries[i].first, entries[i+1].first); zero before the first
  // breakpoint, last value afterwards. Breakpoints strictly increasing.
  std::vector<std::pair<double, double>> entries;
};

struct WrenchProfile {
  std::vector<WrenchTerm> terms;
};

/// Sum of all terms evaluated at time t, as (force, torque) about the CM.
Vector6d wrench_at(const WrenchProfile& profile, double t);

/// Body description: vertex cloud in the CM frame plus inertial properties.
/// Scenario files may give vertices in a shifted frame via cm_offset (the
/// CM's coordinates in the input frame); stored vertices are input minus
/// offset.
struct BodySpec {
  std::vector<Vector3d> vertices;
  InertialProperties props;
};

struct Scenario {
  std::string name;
  BodySpec body;
  SupportPlane plane;
  FrictionParams friction;
  double gravity = 9.8;  // m/s^2, along -z
  double h = 0.0;        // step size (s)
  double duration = 0.0;
  RigidState initial;
  WrenchProfile applied;
};

/// Parses the key-value scenario format (grammar documented in the README).
/// Unknown sections or keys are rejected; every error carries a line number.
Scenario parse_scenario(const std::string& text);
Scenario parse_scenario_file(const std::string& path);

/// Canonical serialization; parse(write_scenario(s)) reproduces s exactly
/// and re-serializes to the identical string.
std::string write_scenario(const Scenario& scenario);

}  // namespace patchsim
