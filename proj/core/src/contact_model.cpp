#include "patchsim/contact_model.hpp"

#include <cmath>

namespace patchsim {

namespace {

Matrix3d skew(const Vector3d& v) {
  Matrix3d s;
  s << 0, -v.z(), v.y(), v.z(), 0, -v.x(), -v.y(), v.x(), 0;
  return s;
}

}  // namespace

void FrictionParams::validate() const {
  if (!(mu >= 0) || !(e_t > 0) || !(e_o > 0) || !(e_r > 0)) {
    throw std::invalid_argument(
        "FrictionParams: require mu >= 0 and e_t, e_o, e_r > 0");
  }
}

double ContactVariables::cone_slack(const FrictionParams& params) const {
  return params.mu * params.mu * p_n * p_n - p_t * p_t / (params.e_t * params.e_t) -
         p_o * p_o / (params.e_o * params.e_o) -
         p_r * p_r / (params.e_r * params.e_r);
}

WrenchBasis wrench_basis(const ContactFrame& frame, const Vector3d& a1,
                         const Vector3d& center_of_mass) {
  const Vector3d r = a1 - center_of_mass;
  WrenchBasis b;
  b.w_n << frame.n, r.cross(frame.n);
  b.w_t << frame.t, r.cross(frame.t);
  b.w_o << frame.o, r.cross(frame.o);
  b.w_r << Vector3d::Zero(), frame.n;
  return b;
}

EcpResidual ecp_residual(const StepUnknowns& unknowns,
                         const ConvexPolytope& poly, const SupportPlane& plane,
                         int active_facet) {
  const int m = poly.facet_count();
  if (active_facet < 0 || active_facet >= m) {
    throw std::invalid_argument("ecp_residual: no valid active facet selected");
  }
  if (unknowns.contact.l_hull.size() != m) {
    throw std::invalid_argument("ecp_residual: multiplier count != facets");
  }

  const ContactVariables& c = unknowns.contact;
  const Matrix3d r = rotation(unknowns.state_next.orientation);
  const Vector3d& pos = unknowns.state_next.position;

  // grad C in the body frame: n_k + sum_{i != k} l_i n_i, rotated to world.
  Vector3d grad_c_body = poly.facets[active_facet].normal;
  for (int i = 0; i < m; ++i) {
    if (i == active_facet) continue;
    grad_c_body += c.l_hull[i] * poly.facets[i].normal;
  }
  const Vector3d grad_c = r * grad_c_body;
  const double l_k = c.l_hull[active_facet];

  EcpResidual out;
  out.closeness = c.a1 - c.a2 + l_k * grad_c;
  out.alignment = grad_c + c.l_plane * plane.gap_gradient();
  out.hull_pair_values.resize(m);
  const Vector3d a1_body = r.transpose() * (c.a1 - pos);
  for (int i = 0; i < m; ++i) {
    out.hull_pair_values[i] = -poly.facets[i].value(a1_body);
  }
  out.plane_pair_value = -plane.gap(c.a2);
  out.penetration_pair_value = plane.gap(c.a1);
  return out;
}

FrictionResidual friction_residual(const StepUnknowns& unknowns,
                                   const FrictionParams& params,
                                   const WrenchBasis& basis) {
  const ContactVariables& c = unknowns.contact;
  const Vector6d nu = unknowns.state_next.generalized_velocity();
  const double mu_pn = params.mu * c.p_n;

  FrictionResidual out;
  out.equations[0] =
      params.e_t * params.e_t * mu_pn * basis.w_t.dot(nu) + c.p_t * c.sigma;
  out.equations[1] =
      params.e_o * params.e_o * mu_pn * basis.w_o.dot(nu) + c.p_o * c.sigma;
  out.equations[2] =
      params.e_r * params.e_r * mu_pn * basis.w_r.dot(nu) + c.p_r * c.sigma;
  out.cone_pair_value = c.cone_slack(params);
  return out;
}

DynamicsResidual dynamics_residual(const StepUnknowns& unknowns,
                                   const RigidState& state_prev,
                                   const InertialProperties& props,
                                   const Vector6d& applied_impulse,
                                   const Vector6d& vp_impulse, double h,
                                   const ContactFrame& frame) {
  const RigidState& next = unknowns.state_next;
  const ContactVariables& c = unknowns.contact;
  const Vector6d nu_next = next.generalized_velocity();
  const Vector6d nu_prev = state_prev.generalized_velocity();

  const WrenchBasis basis = wrench_basis(frame, c.a1, next.position);
  const Vector6d contact_impulse = basis.w_n * c.p_n + basis.w_t * c.p_t +
                                   basis.w_o * c.p_o + basis.w_r * c.p_r;
  const Matrix6d mass = mass_matrix(next.orientation, props);

  DynamicsResidual out;
  out.newton_euler =
      -mass * (nu_next - nu_prev) + contact_impulse + applied_impulse + vp_impulse;
  out.kinematic = -next.configuration() + state_prev.configuration() +
                  h * kinematic_map(state_prev) * nu_next;
  return out;
}

double characteristic_impulse(double mass, double gravity, double h) {
  const double s = mass * std::abs(gravity) * h;
  return s > 0.0 ? s : mass * h;
}

StepProblem::StepProblem(const ConvexPolytope& poly, SupportPlane plane,
                         ContactFrame frame, FrictionParams friction,
                         InertialProperties props, RigidState state_prev,
                         Vector6d applied_impulse, double h, int active_facet,
                         double momentum_row_scale)
    : poly_(&poly),
      plane_(std::move(plane)),
      frame_(frame),
      friction_(friction),
      props_(std::move(props)),
      state_prev_(std::move(state_prev)),
      applied_impulse_(std::move(applied_impulse)),
      h_(h),
      active_facet_(active_facet),
      row_scale_(momentum_row_scale) {
  if (active_facet_ < 0 || active_facet_ >= poly_->facet_count()) {
    throw std::invalid_argument("StepProblem: no valid active facet selected");
  }
  if (!(row_scale_ > 0)) {
    throw std::invalid_argument("StepProblem: momentum row scale must be > 0");
  }
  friction_.validate();
  props_.validate();
  plane_.validate();
  vp_impulse_ = velocity_product_impulse(state_prev_, props_, h_);
  kinematic_map_prev_ = kinematic_map(state_prev_);
}

Eigen::VectorXd StepProblem::pack(const StepUnknowns& u) const {
  const int m = facet_count();
  if (u.contact.l_hull.size() != m) {
    throw std::invalid_argument("pack: multiplier count != facets");
  }
  Eigen::VectorXd z(dimension());
  z.segment<3>(0) = u.state_next.linear_velocity;
  z.segment<3>(3) = u.state_next.angular_velocity;
  z.segment<3>(6) = u.state_next.position;
  z.segment<4>(9) = u.state_next.orientation;
  z.segment<3>(13) = u.contact.a1;
  z.segment<3>(16) = u.contact.a2;
  z[19] = u.contact.p_n;
  z[20] = u.contact.p_t;
  z[21] = u.contact.p_o;
  z[22] = u.contact.p_r;
  z[23] = u.contact.sigma;
  z.segment(24, m) = u.contact.l_hull;
  z[24 + m] = u.contact.l_plane;
  return z;
}

StepUnknowns StepProblem::unpack(const Eigen::VectorXd& z) const {
  const int m = facet_count();
  if (z.size() != dimension()) {
    throw std::invalid_argument("unpack: wrong dimension");
  }
  StepUnknowns u;
  u.state_next.linear_velocity = z.segment<3>(0);
  u.state_next.angular_velocity = z.segment<3>(3);
  u.state_next.position = z.segment<3>(6);
  u.state_next.orientation = z.segment<4>(9);
  u.contact.a1 = z.segment<3>(13);
  u.contact.a2 = z.segment<3>(16);
  u.contact.p_n = z[19];
  u.contact.p_t = z[20];
  u.contact.p_o = z[21];
  u.contact.p_r = z[22];
  u.contact.sigma = z[23];
  u.contact.l_hull = z.segment(24, m);
  u.contact.l_plane = z[24 + m];
  return u;
}

std::vector<PairIndex> StepProblem::pairs() const {
  const int m = facet_count();
  std::vector<PairIndex> p;
  p.reserve(m + 3);
  for (int i = 0; i < m; ++i) {
    p.push_back({hull_multiplier_index() + i, hull_pair_row() + i});
  }
  p.push_back({plane_multiplier_index(), plane_pair_row()});
  p.push_back({impulse_index(), penetration_pair_row()});
  p.push_back({sigma_index(), cone_pair_row()});
  return p;
}

Eigen::VectorXd StepProblem::residual(const Eigen::VectorXd& z) const {
  Eigen::VectorXd f(dimension());
  eval(z, f, nullptr);
  return f;
}

void StepProblem::eval(const Eigen::VectorXd& z, Eigen::VectorXd& f,
                       Eigen::MatrixXd* jac) const {
  const int m = facet_count();
  const int n = dimension();
  const StepUnknowns u = unpack(z);
  const ContactVariables& c = u.contact;
  const Vector4d& quat = u.state_next.orientation;
  const Vector3d& pos = u.state_next.position;

  f.resize(n);
  const WrenchBasis basis = wrench_basis(frame_, c.a1, pos);
  const DynamicsResidual dyn = dynamics_residual(
      u, state_prev_, props_, applied_impulse_, vp_impulse_, h_, frame_);
  const EcpResidual ecp = ecp_residual(u, *poly_, plane_, active_facet_);
  const FrictionResidual fric = friction_residual(u, friction_, basis);

  f.segment<6>(momentum_row()) = dyn.newton_euler / row_scale_;
  f.segment<7>(kinematic_row()) = dyn.kinematic;
  f.segment<3>(closeness_row()) = ecp.closeness;
  f.segment<3>(alignment_row()) = ecp.alignment;
  f.segment<3>(friction_row()) = fric.equations;
  f.segment(hull_pair_row(), m) = ecp.hull_pair_values;
  f[plane_pair_row()] = ecp.plane_pair_value;
  f[penetration_pair_row()] = ecp.penetration_pair_value;
  f[cone_pair_row()] = fric.cone_pair_value;

  if (jac == nullptr) return;

  Eigen::MatrixXd& J = *jac;
  J.setZero(n, n);

  const Matrix3d rot = rotation(quat);
  const auto drot = rotation_derivatives(quat);
  const Vector6d nu = u.state_next.generalized_velocity();
  const Vector3d omega = u.state_next.angular_velocity;
  const Vector3d rel = c.a1 - pos;  // r in the wrench maps

  // --- momentum rows -------------------------------------------------
  {
    const double inv = 1.0 / row_scale_;
    const Matrix6d mass = mass_matrix(quat, props_);
    J.block<6, 6>(momentum_row(), velocity_index()) = -mass * inv;

    const Vector3d domega = omega - state_prev_.angular_velocity;
    for (int j = 0; j < 4; ++j) {
      const Matrix3d dI = drot[j] * props_.body_inertia * rot.transpose() +
                          rot * props_.body_inertia * drot[j].transpose();
      J.block<3, 1>(momentum_row() + 3, quaternion_index() + j) =
          -(dI * domega) * inv;
    }

    // Moment arm: d(r x s)/dr = -skew(s), with r = a1 - position.
    const Vector3d s =
        c.p_n * frame_.n + c.p_t * frame_.t + c.p_o * frame_.o;
    J.block<3, 3>(momentum_row() + 3, a1_index()) = -skew(s) * inv;
    J.block<3, 3>(momentum_row() + 3, position_index()) = skew(s) * inv;

    J.block<6, 1>(momentum_row(), impulse_index() + 0) = basis.w_n * inv;
    J.block<6, 1>(momentum_row(), impulse_index() + 1) = basis.w_t * inv;
    J.block<6, 1>(momentum_row(), impulse_index() + 2) = basis.w_o * inv;
    J.block<6, 1>(momentum_row(), impulse_index() + 3) = basis.w_r * inv;
  }

  // --- kinematic rows (linear) ---------------------------------------
  J.block<7, 7>(kinematic_row(), position_index()) =
      -Eigen::Matrix<double, 7, 7>::Identity();
  J.block<7, 6>(kinematic_row(), velocity_index()) = h_ * kinematic_map_prev_;

  // --- closest-point rows ---------------------------------------------
  {
    Vector3d grad_c_body = poly_->facets[active_facet_].normal;
    for (int i = 0; i < m; ++i) {
      if (i == active_facet_) continue;
      grad_c_body += c.l_hull[i] * poly_->facets[i].normal;
    }
    const Vector3d grad_c = rot * grad_c_body;
    const double l_k = c.l_hull[active_facet_];

    J.block<3, 3>(closeness_row(), a1_index()) = Matrix3d::Identity();
    J.block<3, 3>(closeness_row(), a2_index()) = -Matrix3d::Identity();
    for (int j = 0; j < 4; ++j) {
      J.block<3, 1>(closeness_row(), quaternion_index() + j) =
          l_k * (drot[j] * grad_c_body);
      J.block<3, 1>(alignment_row(), quaternion_index() + j) =
          drot[j] * grad_c_body;
    }
    for (int i = 0; i < m; ++i) {
      const int col = hull_multiplier_index() + i;
      if (i == active_facet_) {
        J.block<3, 1>(closeness_row(), col) = grad_c;
      } else {
        J.block<3, 1>(closeness_row(), col) =
            l_k * (rot * poly_->facets[i].normal);
        J.block<3, 1>(alignment_row(), col) = rot * poly_->facets[i].normal;
      }
    }
    J.block<3, 1>(alignment_row(), plane_multiplier_index()) =
        plane_.gap_gradient();
  }

  // --- friction rows ---------------------------------------------------
  {
    const double mu = friction_.mu;
    const double et2 = friction_.e_t * friction_.e_t;
    const double eo2 = friction_.e_o * friction_.e_o;
    const double er2 = friction_.e_r * friction_.e_r;
    const double wt_nu = basis.w_t.dot(nu);
    const double wo_nu = basis.w_o.dot(nu);
    const double wr_nu = basis.w_r.dot(nu);

    J.block<1, 6>(friction_row() + 0, velocity_index()) =
        et2 * mu * c.p_n * basis.w_t.transpose();
    J.block<1, 6>(friction_row() + 1, velocity_index()) =
        eo2 * mu * c.p_n * basis.w_o.transpose();
    J.block<1, 6>(friction_row() + 2, velocity_index()) =
        er2 * mu * c.p_n * basis.w_r.transpose();

    // d[(r x t).omega]/da1 = t x omega, and the negative of it for position.
    const Vector3d t_cross = frame_.t.cross(omega);
    const Vector3d o_cross = frame_.o.cross(omega);
    J.block<1, 3>(friction_row() + 0, a1_index()) =
        et2 * mu * c.p_n * t_cross.transpose();
    J.block<1, 3>(friction_row() + 0, position_index()) =
        -et2 * mu * c.p_n * t_cross.transpose();
    J.block<1, 3>(friction_row() + 1, a1_index()) =
        eo2 * mu * c.p_n * o_cross.transpose();
    J.block<1, 3>(friction_row() + 1, position_index()) =
        -eo2 * mu * c.p_n * o_cross.transpose();

    J(friction_row() + 0, impulse_index() + 0) = et2 * mu * wt_nu;
    J(friction_row() + 1, impulse_index() + 0) = eo2 * mu * wo_nu;
    J(friction_row() + 2, impulse_index() + 0) = er2 * mu * wr_nu;
    J(friction_row() + 0, impulse_index() + 1) = c.sigma;
    J(friction_row() + 1, impulse_index() + 2) = c.sigma;
    J(friction_row() + 2, impulse_index() + 3) = c.sigma;
    J(friction_row() + 0, sigma_index()) = c.p_t;
    J(friction_row() + 1, sigma_index()) = c.p_o;
    J(friction_row() + 2, sigma_index()) = c.p_r;
  }

  // --- complementarity function rows -----------------------------------
  for (int i = 0; i < m; ++i) {
    const int row = hull_pair_row() + i;
    const Vector3d& n_body = poly_->facets[i].normal;
    const Vector3d n_world = rot * n_body;
    J.block<1, 3>(row, a1_index()) = -n_world.transpose();
    J.block<1, 3>(row, position_index()) = n_world.transpose();
    for (int j = 0; j < 4; ++j) {
      J(row, quaternion_index() + j) = -(drot[j] * n_body).dot(rel);
    }
  }
  J.block<1, 3>(plane_pair_row(), a2_index()) =
      -plane_.gap_gradient().transpose();
  J.block<1, 3>(penetration_pair_row(), a1_index()) =
      plane_.gap_gradient().transpose();
  {
    const double mu = friction_.mu;
    J(cone_pair_row(), impulse_index() + 0) = 2.0 * mu * mu * c.p_n;
    J(cone_pair_row(), impulse_index() + 1) =
        -2.0 * c.p_t / (friction_.e_t * friction_.e_t);
    J(cone_pair_row(), impulse_index() + 2) =
        -2.0 * c.p_o / (friction_.e_o * friction_.e_o);
    J(cone_pair_row(), impulse_index() + 3) =
        -2.0 * c.p_r / (friction_.e_r * friction_.e_r);
  }
}

MncpProblem StepProblem::mncp_problem() const {
  MncpProblem p;
  p.dimension = dimension();
  p.pairs = pairs();
  p.eval = [this](const Eigen::VectorXd& z, Eigen::VectorXd& f,
                  Eigen::MatrixXd* jac) { eval(z, f, jac); };
  return p;
}

}  // namespace patchsim
