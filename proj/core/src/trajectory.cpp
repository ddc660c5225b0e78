#include "patchsim/trajectory.hpp"

#include <cstdio>
#include <fstream>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace patchsim {

namespace {

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

double parse_double(const std::string& field, int line) {
  size_t consumed = 0;
  double v = 0.0;
  try {
    v = std::stod(field, &consumed);
  } catch (const std::exception&) {
    throw std::runtime_error("trajectory csv line " + std::to_string(line) +
                             ": bad number '" + field + "'");
  }
  if (consumed != field.size()) {
    throw std::runtime_error("trajectory csv line " + std::to_string(line) +
                             ": bad number '" + field + "'");
  }
  return v;
}

constexpr const char* kHeader =
    "t,px,py,pz,qw,qx,qy,qz,vx,vy,vz,wx,wy,wz,a1x,a1y,a1z,a2x,a2y,a2z,"
    "p_n,p_t,p_o,p_r,sigma,mode,solver_iters,residual";

}  // namespace

const char* to_string(ContactModeKind kind) {
  switch (kind) {
    case ContactModeKind::Separated: return "Separated";
    case ContactModeKind::Point: return "Point";
    case ContactModeKind::Line: return "Line";
    case ContactModeKind::Surface: return "Surface";
  }
  return "Separated";
}

ContactModeKind contact_mode_from_string(const std::string& s) {
  if (s == "Separated") return ContactModeKind::Separated;
  if (s == "Point") return ContactModeKind::Point;
  if (s == "Line") return ContactModeKind::Line;
  if (s == "Surface") return ContactModeKind::Surface;
  throw std::runtime_error("unknown contact mode '" + s + "'");
}

void write_trajectory(const std::vector<TrajectoryRecord>& records,
                      std::ostream& sink) {
  sink << kHeader << '\n';
  for (const TrajectoryRecord& rec : records) {
    const RigidState& s = rec.state;
    const ContactVariables& c = rec.contact;
    sink << fmt(rec.time);
    for (int i = 0; i < 3; ++i) sink << ',' << fmt(s.position[i]);
    for (int i = 0; i < 4; ++i) sink << ',' << fmt(s.orientation[i]);
    for (int i = 0; i < 3; ++i) sink << ',' << fmt(s.linear_velocity[i]);
    for (int i = 0; i < 3; ++i) sink << ',' << fmt(s.angular_velocity[i]);
    for (int i = 0; i < 3; ++i) sink << ',' << fmt(c.a1[i]);
    for (int i = 0; i < 3; ++i) sink << ',' << fmt(c.a2[i]);
    sink << ',' << fmt(c.p_n) << ',' << fmt(c.p_t) << ',' << fmt(c.p_o) << ','
         << fmt(c.p_r) << ',' << fmt(c.sigma);
    sink << ',' << to_string(rec.mode.kind);
    sink << ',' << rec.solver.iterations;
    sink << ',' << fmt(rec.solver.final_residual);
    sink << '\n';
  }
  if (!sink) {
    throw std::runtime_error("write_trajectory: stream failure");
  }
}

void write_trajectory_file(const std::vector<TrajectoryRecord>& records,
                           const std::string& path) {
  std::ofstream out(path);
  if (!out) {
    throw std::runtime_error("write_trajectory: cannot open '" + path + "'");
  }
  write_trajectory(records, out);
}

std::vector<TrajectoryRecord> read_trajectory(std::istream& source) {
  std::string line;
  if (!std::getline(source, line)) {
    throw std::runtime_error("trajectory csv: empty input");
  }
  if (line != kHeader) {
    throw std::runtime_error("trajectory csv: unexpected header");
  }
  std::vector<TrajectoryRecord> records;
  int line_no = 1;
  while (std::getline(source, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) fields.push_back(field);
    if (fields.size() != 28) {
      throw std::runtime_error("trajectory csv line " +
                               std::to_string(line_no) + ": expected 28 fields");
    }
    TrajectoryRecord rec;
    int k = 0;
    auto next = [&]() { return parse_double(fields[k++], line_no); };
    rec.time = next();
    for (int i = 0; i < 3; ++i) rec.state.position[i] = next();
    for (int i = 0; i < 4; ++i) rec.state.orientation[i] = next();
    for (int i = 0; i < 3; ++i) rec.state.linear_velocity[i] = next();
    for (int i = 0; i < 3; ++i) rec.state.angular_velocity[i] = next();
    for (int i = 0; i < 3; ++i) rec.contact.a1[i] = next();
    for (int i = 0; i < 3; ++i) rec.contact.a2[i] = next();
    rec.contact.p_n = next();
    rec.contact.p_t = next();
    rec.contact.p_o = next();
    rec.contact.p_r = next();
    rec.contact.sigma = next();
    rec.mode.kind = contact_mode_from_string(fields[k++]);
    rec.solver.iterations = static_cast<int>(parse_double(fields[k++], line_no));
    rec.solver.final_residual = next();
    rec.solver.converged = true;
    records.push_back(std::move(rec));
  }
  return records;
}

std::vector<TrajectoryRecord> read_trajectory_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error("read_trajectory: cannot open '" + path + "'");
  }
  return read_trajectory(in);
}

}  // namespace patchsim
