#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "patchsim/contact_model.hpp"
#include "patchsim/mncp.hpp"
#include "patchsim/se3.hpp"

namespace patchsim {

enum class ContactModeKind { Separated, Point, Line, Surface };

const char* to_string(ContactModeKind kind);
ContactModeKind contact_mode_from_string(const std::string& s);

/// Qualitative classification of the touching set plus the hull vertices
/// witnessing it (empty when separated).
struct ContactMode {
  ContactModeKind kind = ContactModeKind::Separated;
  std::vector<int> witnesses;
};

/// One solved time step.
struct TrajectoryRecord {
  double time = 0.0;
  RigidState state;
  ContactVariables contact;
  ContactMode mode;
  SolveReport solver;
};

/// CSV with one row per record; floats are printed with 17 significant
/// digits so parsing the file back reproduces them exactly. Hull and plane
/// multipliers are not serialized.
/// Header: t,px,py,pz,qw,qx,qy,qz,vx,vy,vz,wx,wy,wz,a1x,a1y,a1z,
///         a2x,a2y,a2z,p_n,p_t,p_o,p_r,sigma,mode,solver_iters,residual
void write_trajectory(const std::vector<TrajectoryRecord>& records,
                      std::ostream& sink);
void write_trajectory_file(const std::vector<TrajectoryRecord>& records,
                           const std::string& path);

/// Parses a trajectory CSV produced by write_trajectory. Throws
/// std::runtime_error on malformed input.
std::vector<TrajectoryRecord> read_trajectory(std::istream& source);
std::vector<TrajectoryRecord> read_trajectory_file(const std::string& path);

}  // namespace patchsim
