#include "patchsim/scenario.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numbers>
#include <optional>
#include <sstream>

namespace patchsim {

namespace {

const char* const kComponents[6] = {"f_x", "f_y", "f_z",
                                    "tau_x", "tau_y", "tau_z"};

std::string trim(const std::string& s) {
  size_t b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  size_t e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_ws(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string tok;
  while (ss >> tok) out.push_back(tok);
  return out;
}

double to_double(const std::string& tok, int line) {
  size_t consumed = 0;
  double v = 0.0;
  try {
    v = std::stod(tok, &consumed);
  } catch (const std::exception&) {
    throw ScenarioParseError(line, "expected a number, got '" + tok + "'");
  }
  if (consumed != tok.size() || !std::isfinite(v)) {
    throw ScenarioParseError(line, "expected a finite number, got '" + tok + "'");
  }
  return v;
}

std::vector<double> to_doubles(const std::string& value, size_t count,
                               int line) {
  const auto toks = split_ws(value);
  if (toks.size() != count) {
    throw ScenarioParseError(line, "expected " + std::to_string(count) +
                                       " numbers, got " +
                                       std::to_string(toks.size()));
  }
  std::vector<double> out;
  for (const auto& t : toks) out.push_back(to_double(t, line));
  return out;
}

struct KeyValue {
  std::string value;
  int line;
};

// One parsed section: multi-valued keys (vertex, term) keep every
// occurrence, the rest must be unique.
struct Section {
  int header_line = 0;
  bool present = false;
  std::map<std::string, KeyValue> scalars;
  std::vector<KeyValue> vertices;
  std::vector<KeyValue> terms;
};

WrenchTerm parse_term(const std::string& value, int line) {
  const auto toks = split_ws(value);
  if (toks.size() < 2) {
    throw ScenarioParseError(line, "term needs '<component> <form> ...'");
  }
  WrenchTerm term;
  const auto* found = std::find(std::begin(kComponents), std::end(kComponents),
                                toks[0]);
  if (found == std::end(kComponents)) {
    throw ScenarioParseError(line, "unknown wrench component '" + toks[0] +
                                       "' (f_x..f_z, tau_x..tau_z)");
  }
  term.component = static_cast<int>(found - std::begin(kComponents));

  const std::string& form = toks[1];
  if (form == "constant") {
    if (toks.size() != 3) {
      throw ScenarioParseError(line, "constant term needs one value");
    }
    term.form = WrenchTerm::Form::Constant;
    term.constant = to_double(toks[2], line);
  } else if (form == "sinusoid") {
    if (toks.size() != 6) {
      throw ScenarioParseError(
          line, "sinusoid term needs 'A freq phase bias' (A sin(2 pi f t + phase) + bias)");
    }
    term.form = WrenchTerm::Form::Sinusoid;
    term.amplitude = to_double(toks[2], line);
    term.frequency = to_double(toks[3], line);
    term.phase = to_double(toks[4], line);
    term.bias = to_double(toks[5], line);
  } else if (form == "table") {
    if (toks.size() < 3) {
      throw ScenarioParseError(line, "table term needs at least one 't:value'");
    }
    term.form = WrenchTerm::Form::Table;
    for (size_t i = 2; i < toks.size(); ++i) {
      const auto colon = toks[i].find(':');
      if (colon == std::string::npos) {
        throw ScenarioParseError(line, "table entry '" + toks[i] +
                                           "' is not 't:value'");
      }
      const double t = to_double(toks[i].substr(0, colon), line);
      const double v = to_double(toks[i].substr(colon + 1), line);
      if (!term.entries.empty() && t <= term.entries.back().first) {
        throw ScenarioParseError(line,
                                 "table breakpoints must be strictly increasing");
      }
      term.entries.emplace_back(t, v);
    }
  } else {
    throw ScenarioParseError(line, "unknown term form '" + form +
                                       "' (constant, sinusoid, table)");
  }
  return term;
}

class SectionReader {
 public:
  SectionReader(const Section& s, const std::string& name)
      : section_(s), name_(name) {}

  std::optional<KeyValue> get(const std::string& key) {
    used_.push_back(key);
    auto it = section_.scalars.find(key);
    if (it == section_.scalars.end()) return std::nullopt;
    return it->second;
  }

  KeyValue require(const std::string& key) {
    auto v = get(key);
    if (!v) {
      throw ScenarioParseError(section_.header_line,
                               "[" + name_ + "] missing required key '" + key +
                                   "'");
    }
    return *v;
  }

  void reject_unknown() const {
    for (const auto& [key, kv] : section_.scalars) {
      if (std::find(used_.begin(), used_.end(), key) == used_.end()) {
        throw ScenarioParseError(kv.line, "unknown key '" + key + "' in [" +
                                              name_ + "]");
      }
    }
  }

 private:
  const Section& section_;
  std::string name_;
  std::vector<std::string> used_;
};

// Affine rank of the vertex cloud must be 3; catches flat and collinear
// bodies at parse time rather than at hull construction.
void check_vertex_rank(const std::vector<Vector3d>& vertices, int line) {
  Vector3d mean = Vector3d::Zero();
  for (const auto& v : vertices) mean += v;
  mean /= static_cast<double>(vertices.size());
  Eigen::MatrixXd centered(3, vertices.size());
  for (size_t i = 0; i < vertices.size(); ++i) {
    centered.col(static_cast<Eigen::Index>(i)) = vertices[i] - mean;
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(centered);
  const double scale = svd.singularValues()[0];
  if (scale <= 0.0 || svd.singularValues()[2] <= 1e-9 * scale) {
    throw ScenarioParseError(line, "degenerate vertex set (flat or collinear)");
  }
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

Vector6d wrench_at(const WrenchProfile& profile, double t) {
  Vector6d w = Vector6d::Zero();
  for (const WrenchTerm& term : profile.terms) {
    double v = 0.0;
    switch (term.form) {
      case WrenchTerm::Form::Constant:
        v = term.constant;
        break;
      case WrenchTerm::Form::Sinusoid:
        v = term.amplitude *
                std::sin(2.0 * std::numbers::pi * term.frequency * t +
                         term.phase) +
            term.bias;
        break;
      case WrenchTerm::Form::Table: {
        for (const auto& [tk, vk] : term.entries) {
          if (t >= tk) v = vk;
        }
        break;
      }
    }
    w[term.component] += v;
  }
  return w;
}

Scenario parse_scenario(const std::string& text) {
  static const std::vector<std::string> kSections = {
      "body", "plane", "friction", "simulation", "initial", "applied"};

  std::map<std::string, Section> sections;
  Section top;
  top.present = true;
  Section* current = &top;

  std::istringstream in(text);
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string line = raw;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;

    if (line.front() == '[') {
      if (line.back() != ']') {
        throw ScenarioParseError(line_no, "unterminated section header");
      }
      const std::string name = trim(line.substr(1, line.size() - 2));
      if (std::find(kSections.begin(), kSections.end(), name) ==
          kSections.end()) {
        throw ScenarioParseError(line_no, "unknown section [" + name + "]");
      }
      Section& s = sections[name];
      if (s.present) {
        throw ScenarioParseError(line_no, "duplicate section [" + name + "]");
      }
      s.present = true;
      s.header_line = line_no;
      current = &s;
      continue;
    }

    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ScenarioParseError(line_no, "expected 'key = value'");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) {
      throw ScenarioParseError(line_no, "empty key");
    }
    if (key == "vertex") {
      current->vertices.push_back({value, line_no});
    } else if (key == "term") {
      current->terms.push_back({value, line_no});
    } else {
      if (current->scalars.count(key)) {
        throw ScenarioParseError(line_no, "duplicate key '" + key + "'");
      }
      current->scalars[key] = {value, line_no};
    }
  }

  Scenario sc;

  {
    SectionReader r(top, "top level");
    const KeyValue version = r.require("format_version");
    if (trim(version.value) != "1") {
      throw ScenarioParseError(version.line,
                               "unsupported format_version (expected 1)");
    }
    if (auto name = r.get("name")) sc.name = trim(name->value);
    r.reject_unknown();
    if (!top.vertices.empty()) {
      throw ScenarioParseError(top.vertices.front().line,
                               "'vertex' only allowed in [body]");
    }
    if (!top.terms.empty()) {
      throw ScenarioParseError(top.terms.front().line,
                               "'term' only allowed in [applied]");
    }
  }

  for (const auto& required : {"body", "simulation", "initial"}) {
    if (!sections[required].present) {
      throw ScenarioParseError(line_no, std::string("missing section [") +
                                            required + "]");
    }
  }
  for (const auto& [name, s] : sections) {
    if (name != "body" && !s.vertices.empty()) {
      throw ScenarioParseError(s.vertices.front().line,
                               "'vertex' only allowed in [body]");
    }
    if (name != "applied" && !s.terms.empty()) {
      throw ScenarioParseError(s.terms.front().line,
                               "'term' only allowed in [applied]");
    }
  }

  {
    const Section& s = sections["body"];
    SectionReader r(s, "body");
    sc.body.props.mass = to_double(trim(r.require("mass").value),
                                   r.require("mass").line);
    const auto diag = r.get("inertia_diag");
    const auto full = r.get("inertia");
    if (diag && full) {
      throw ScenarioParseError(full->line,
                               "give either inertia_diag or inertia, not both");
    }
    if (diag) {
      const auto v = to_doubles(diag->value, 3, diag->line);
      sc.body.props.body_inertia =
          Eigen::Vector3d(v[0], v[1], v[2]).asDiagonal();
    } else if (full) {
      const auto v = to_doubles(full->value, 6, full->line);
      Matrix3d inertia;
      inertia << v[0], v[1], v[2], v[1], v[3], v[4], v[2], v[4], v[5];
      sc.body.props.body_inertia = inertia;
    } else {
      throw ScenarioParseError(s.header_line,
                               "[body] missing inertia_diag or inertia");
    }
    Vector3d cm_offset = Vector3d::Zero();
    if (auto off = r.get("cm_offset")) {
      const auto v = to_doubles(off->value, 3, off->line);
      cm_offset = Vector3d(v[0], v[1], v[2]);
    }
    r.reject_unknown();

    if (s.vertices.size() < 4) {
      throw ScenarioParseError(s.header_line,
                               "[body] needs at least 4 'vertex' lines");
    }
    for (const KeyValue& kv : s.vertices) {
      const auto v = to_doubles(kv.value, 3, kv.line);
      sc.body.vertices.push_back(Vector3d(v[0], v[1], v[2]) - cm_offset);
    }
    try {
      sc.body.props.validate();
    } catch (const std::invalid_argument& e) {
      throw ScenarioParseError(s.header_line, e.what());
    }
    check_vertex_rank(sc.body.vertices, s.header_line);
  }

  if (sections["plane"].present) {
    const Section& s = sections["plane"];
    SectionReader r(s, "plane");
    if (auto normal = r.get("normal")) {
      const auto v = to_doubles(normal->value, 3, normal->line);
      Vector3d n(v[0], v[1], v[2]);
      if (std::abs(n.norm() - 1.0) > 1e-6) {
        throw ScenarioParseError(normal->line, "plane normal must be unit length");
      }
      sc.plane.normal = n.normalized();
    }
    if (auto offset = r.get("offset")) {
      sc.plane.offset = to_double(trim(offset->value), offset->line);
    }
    r.reject_unknown();
  }

  if (sections["friction"].present) {
    const Section& s = sections["friction"];
    SectionReader r(s, "friction");
    const KeyValue mu = r.require("mu");
    sc.friction.mu = to_double(trim(mu.value), mu.line);
    if (auto v = r.get("e_t")) sc.friction.e_t = to_double(trim(v->value), v->line);
    if (auto v = r.get("e_o")) sc.friction.e_o = to_double(trim(v->value), v->line);
    if (auto v = r.get("e_r")) sc.friction.e_r = to_double(trim(v->value), v->line);
    r.reject_unknown();
    try {
      sc.friction.validate();
    } catch (const std::invalid_argument& e) {
      throw ScenarioParseError(s.header_line, e.what());
    }
  } else {
    sc.friction.mu = 0.0;
  }

  {
    const Section& s = sections["simulation"];
    SectionReader r(s, "simulation");
    if (auto g = r.get("gravity")) {
      sc.gravity = to_double(trim(g->value), g->line);
      if (sc.gravity < 0) {
        throw ScenarioParseError(g->line, "gravity must be >= 0 (magnitude)");
      }
    }
    const KeyValue h = r.require("h");
    sc.h = to_double(trim(h.value), h.line);
    if (!(sc.h > 0)) {
      throw ScenarioParseError(h.line, "h must be positive");
    }
    const KeyValue duration = r.require("duration");
    sc.duration = to_double(trim(duration.value), duration.line);
    if (!(sc.duration >= sc.h)) {
      throw ScenarioParseError(duration.line, "duration must be >= h");
    }
    r.reject_unknown();
  }

  {
    const Section& s = sections["initial"];
    SectionReader r(s, "initial");
    const KeyValue pos = r.require("position");
    const auto p = to_doubles(pos.value, 3, pos.line);
    sc.initial.position = Vector3d(p[0], p[1], p[2]);
    if (auto q = r.get("orientation")) {
      const auto v = to_doubles(q->value, 4, q->line);
      Vector4d quat(v[0], v[1], v[2], v[3]);
      if (std::abs(quat.norm() - 1.0) > 1e-6) {
        throw ScenarioParseError(q->line,
                                 "orientation quaternion must be unit length");
      }
      sc.initial.orientation = quat / quat.norm();
    }
    if (auto v = r.get("linear_velocity")) {
      const auto x = to_doubles(v->value, 3, v->line);
      sc.initial.linear_velocity = Vector3d(x[0], x[1], x[2]);
    }
    if (auto v = r.get("angular_velocity")) {
      const auto x = to_doubles(v->value, 3, v->line);
      sc.initial.angular_velocity = Vector3d(x[0], x[1], x[2]);
    }
    r.reject_unknown();
  }

  if (sections["applied"].present) {
    const Section& s = sections["applied"];
    SectionReader r(s, "applied");
    r.reject_unknown();
    for (const KeyValue& kv : s.terms) {
      sc.applied.terms.push_back(parse_term(kv.value, kv.line));
    }
  }

  return sc;
}

Scenario parse_scenario_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error("cannot open scenario file '" + path + "'");
  }
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_scenario(buffer.str());
}

std::string write_scenario(const Scenario& sc) {
  std::ostringstream out;
  out << "format_version = 1\n";
  if (!sc.name.empty()) out << "name = " << sc.name << "\n";

  out << "\n[body]\n";
  out << "mass = " << fmt(sc.body.props.mass) << "\n";
  const Matrix3d& inertia = sc.body.props.body_inertia;
  out << "inertia = " << fmt(inertia(0, 0)) << ' ' << fmt(inertia(0, 1)) << ' '
      << fmt(inertia(0, 2)) << ' ' << fmt(inertia(1, 1)) << ' '
      << fmt(inertia(1, 2)) << ' ' << fmt(inertia(2, 2)) << "\n";
  for (const Vector3d& v : sc.body.vertices) {
    out << "vertex = " << fmt(v.x()) << ' ' << fmt(v.y()) << ' ' << fmt(v.z())
        << "\n";
  }

  out << "\n[plane]\n";
  out << "normal = " << fmt(sc.plane.normal.x()) << ' '
      << fmt(sc.plane.normal.y()) << ' ' << fmt(sc.plane.normal.z()) << "\n";
  out << "offset = " << fmt(sc.plane.offset) << "\n";

  out << "\n[friction]\n";
  out << "mu = " << fmt(sc.friction.mu) << "\n";
  out << "e_t = " << fmt(sc.friction.e_t) << "\n";
  out << "e_o = " << fmt(sc.friction.e_o) << "\n";
  out << "e_r = " << fmt(sc.friction.e_r) << "\n";

  out << "\n[simulation]\n";
  out << "gravity = " << fmt(sc.gravity) << "\n";
  out << "h = " << fmt(sc.h) << "\n";
  out << "duration = " << fmt(sc.duration) << "\n";

  out << "\n[initial]\n";
  out << "position = " << fmt(sc.initial.position.x()) << ' '
      << fmt(sc.initial.position.y()) << ' ' << fmt(sc.initial.position.z())
      << "\n";
  out << "orientation = " << fmt(sc.initial.orientation[0]) << ' '
      << fmt(sc.initial.orientation[1]) << ' ' << fmt(sc.initial.orientation[2])
      << ' ' << fmt(sc.initial.orientation[3]) << "\n";
  out << "linear_velocity = " << fmt(sc.initial.linear_velocity.x()) << ' '
      << fmt(sc.initial.linear_velocity.y()) << ' '
      << fmt(sc.initial.linear_velocity.z()) << "\n";
  out << "angular_velocity = " << fmt(sc.initial.angular_velocity.x()) << ' '
      << fmt(sc.initial.angular_velocity.y()) << ' '
      << fmt(sc.initial.angular_velocity.z()) << "\n";

  out << "\n[applied]\n";
  for (const WrenchTerm& term : sc.applied.terms) {
    out << "term = " << kComponents[term.component] << ' ';
    switch (term.form) {
      case WrenchTerm::Form::Constant:
        out << "constant " << fmt(term.constant);
        break;
      case WrenchTerm::Form::Sinusoid:
        out << "sinusoid " << fmt(term.amplitude) << ' ' << fmt(term.frequency)
            << ' ' << fmt(term.phase) << ' ' << fmt(term.bias);
        break;
      case WrenchTerm::Form::Table:
        out << "table";
        for (const auto& [t, v] : term.entries) {
          out << ' ' << fmt(t) << ':' << fmt(v);
        }
        break;
    }
    out << "\n";
  }
  return out.str();
}

}  // namespace patchsim
