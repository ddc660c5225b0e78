#include "patchsim/mncp.hpp"

#include <cmath>
#include <sstream>

namespace patchsim {

double fb(double a, double b) { return std::sqrt(a * a + b * b) - a - b; }

FbGradient fb_gradient(double a, double b) {
  const double r = std::sqrt(a * a + b * b);
  if (r == 0.0) {
    const double g = 1.0 / std::sqrt(2.0) - 1.0;
    return {g, g};
  }
  return {a / r - 1.0, b / r - 1.0};
}

FbSystem::FbSystem(MncpProblem problem) : problem_(std::move(problem)) {
  for (const PairIndex& p : problem_.pairs) {
    if (p.variable < 0 || p.variable >= problem_.dimension || p.row < 0 ||
        p.row >= problem_.dimension) {
      throw std::invalid_argument("FbSystem: pair index out of range");
    }
  }
}

void FbSystem::eval(const Eigen::VectorXd& z, Eigen::VectorXd& phi,
                    Eigen::MatrixXd* jac) const {
  problem_.eval(z, phi, jac);
  for (const PairIndex& p : problem_.pairs) {
    const double a = z[p.variable];
    const double b = phi[p.row];
    if (jac != nullptr) {
      const FbGradient g = fb_gradient(a, b);
      jac->row(p.row) *= g.db;
      (*jac)(p.row, p.variable) += g.da;
    }
    phi[p.row] = fb(a, b);
  }
}

void SolverConfig::validate() const {
  if (!(residual_tol > 0) || max_iters <= 0 || !(armijo_c > 0) ||
      !(backtrack_factor > 0) || !(backtrack_factor < 1) || !(min_step > 0) ||
      !(regularization > 0)) {
    throw std::invalid_argument("SolverConfig: parameters out of range");
  }
}

namespace {

double merit(const Eigen::VectorXd& phi) { return 0.5 * phi.squaredNorm(); }

// Newton direction via LU when the Jacobian is usable, otherwise a
// Levenberg-Marquardt step (J^T J + lambda I) d = -J^T phi.
Eigen::VectorXd direction(const Eigen::MatrixXd& jac,
                          const Eigen::VectorXd& phi, double regularization) {
  Eigen::FullPivLU<Eigen::MatrixXd> lu(jac);
  if (lu.isInvertible()) {
    Eigen::VectorXd d = lu.solve(-phi);
    if (d.allFinite()) return d;
  }
  const int n = static_cast<int>(jac.cols());
  double lambda = regularization;
  for (int attempt = 0; attempt < 8; ++attempt) {
    Eigen::MatrixXd h = jac.transpose() * jac;
    h.diagonal().array() += lambda;
    Eigen::LDLT<Eigen::MatrixXd> ldlt(h);
    if (ldlt.info() == Eigen::Success) {
      Eigen::VectorXd d = ldlt.solve(-jac.transpose() * phi);
      if (d.allFinite()) return d;
    }
    lambda *= 100.0;
  }
  return Eigen::VectorXd::Zero(n);
}

}  // namespace

SolveResult solve(const FbSystem& system, const Eigen::VectorXd& z0,
                  const SolverConfig& config) {
  config.validate();
  const int n = system.dimension();
  if (z0.size() != n) {
    throw std::invalid_argument("solve: initial guess has wrong dimension");
  }
  if (!z0.allFinite()) {
    throw std::invalid_argument("solve: initial guess not finite");
  }

  Eigen::VectorXd z = z0;
  Eigen::VectorXd phi(n);
  Eigen::MatrixXd jac(n, n);
  system.eval(z, phi, &jac);

  SolveResult best{z, {}};
  double best_merit = merit(phi);
  SolveReport report;
  report.final_residual = phi.lpNorm<Eigen::Infinity>();

  auto record_best = [&](const Eigen::VectorXd& zc, double m, double rinf) {
    if (m < best_merit) {
      best_merit = m;
      best.z = zc;
      best.report = report;
      best.report.final_residual = rinf;
    }
  };
  record_best(z, best_merit, report.final_residual);

  for (int iter = 0; iter < config.max_iters; ++iter) {
    const double residual_inf = phi.lpNorm<Eigen::Infinity>();
    if (residual_inf <= config.residual_tol) {
      report.converged = true;
      report.iterations = iter;
      report.final_residual = residual_inf;
      return {z, report};
    }

    const Eigen::VectorXd d = direction(jac, phi, config.regularization);
    const double slope = (jac.transpose() * phi).dot(d);
    if (!(slope < 0) || d.lpNorm<Eigen::Infinity>() == 0.0) {
      report.iterations = iter;
      report.final_residual = residual_inf;
      best.report.converged = false;
      std::ostringstream msg;
      msg << "mncp solve: no descent direction at iteration " << iter
          << " (residual " << residual_inf << ")";
      throw SolveFailure(msg.str(), best);
    }

    const double theta0 = merit(phi);
    double step = 1.0;
    double accepted_merit = -1.0;
    Eigen::VectorXd z_trial(n), phi_trial(n);
    bool accepted = false;
    double best_trial_step = -1.0, best_trial_merit = theta0;
    while (step >= config.min_step) {
      z_trial = z + step * d;
      system.eval(z_trial, phi_trial, nullptr);
      const double theta = merit(phi_trial);
      if (theta <= theta0 + config.armijo_c * step * slope) {
        accepted = true;
        accepted_merit = theta;
        break;
      }
      if (theta < best_trial_merit) {
        best_trial_merit = theta;
        best_trial_step = step;
      }
      step *= config.backtrack_factor;
    }
    if (!accepted) {
      ++report.line_search_failures;
      if (best_trial_step > 0.0) {
        // Armijo unmet but the merit still drops: take the best step seen.
        step = best_trial_step;
        z_trial = z + step * d;
        system.eval(z_trial, phi_trial, nullptr);
        accepted_merit = merit(phi_trial);
      } else {
        report.iterations = iter;
        report.final_residual = residual_inf;
        std::ostringstream msg;
        msg << "mncp solve: line search stagnated at iteration " << iter
            << " (residual " << residual_inf << ")";
        throw SolveFailure(msg.str(), best);
      }
    }

    z = z_trial;
    system.eval(z, phi, &jac);
    record_best(z, accepted_merit, phi.lpNorm<Eigen::Infinity>());
  }

  report.iterations = config.max_iters;
  report.final_residual = phi.lpNorm<Eigen::Infinity>();
  if (report.final_residual <= config.residual_tol) {
    report.converged = true;
    return {z, report};
  }
  std::ostringstream msg;
  msg << "mncp solve: no convergence after " << config.max_iters
      << " iterations (residual " << report.final_residual << ")";
  best.report.iterations = config.max_iters;
  throw SolveFailure(msg.str(), best);
}

}  // namespace patchsim
