#pragma once

#include <Eigen/Dense>
#include <functional>
#include <stdexcept>
#include <vector>

namespace patchsim {

/// Fischer-Burmeister function: sqrt(a^2+b^2) - a - b.
/// Zero iff a >= 0, b >= 0 and a*b = 0.
double fb(double a, double b);

/// Partial derivatives of fb. At the kink (0,0) the fixed subgradient
/// (1/sqrt(2)-1, 1/sqrt(2)-1) is used so runs are deterministic.
struct FbGradient {
  double da;
  double db;
};
FbGradient fb_gradient(double a, double b);

/// A complementarity pair 0 <= z[variable] perp F[row] >= 0: the row of the
/// raw residual holds the function side, the variable index names the
/// nonnegative unknown side.
struct PairIndex {
  int variable;
  int row;
};

/// Square mixed nonlinear complementarity problem: F(z) = 0 for equation
/// rows, 0 <= z[v] perp F[r] >= 0 for every pair (v, r). eval fills the
/// residual and, when the matrix pointer is non-null, the dense Jacobian.
struct MncpProblem {
  int dimension = 0;
  std::vector<PairIndex> pairs;
  std::function<void(const Eigen::VectorXd& z, Eigen::VectorXd& f,
                     Eigen::MatrixXd* jac)>
      eval;
};

/// Semismooth reformulation Phi(z): equation rows pass through, each pair
/// row r with variable v becomes fb(z[v], F_r(z)).
class FbSystem {
 public:
  explicit FbSystem(MncpProblem problem);

  int dimension() const { return problem_.dimension; }
  const MncpProblem& problem() const { return problem_; }

  void eval(const Eigen::VectorXd& z, Eigen::VectorXd& phi,
            Eigen::MatrixXd* jac) const;

 private:
  MncpProblem problem_;
};

struct SolverConfig {
  double residual_tol = 1e-10;  // infinity norm of Phi
  int max_iters = 200;
  double armijo_c = 1e-4;
  double backtrack_factor = 0.5;
  double min_step = 1e-12;
  double regularization = 1e-10;  // added to J^T J diagonal on singular systems

  void validate() const;
};

struct SolveReport {
  bool converged = false;
  int iterations = 0;
  double final_residual = std::numeric_limits<double>::infinity();
  int line_search_failures = 0;
};

struct SolveResult {
  Eigen::VectorXd z;
  SolveReport report;
};

/// Thrown when the Newton iteration exhausts max_iters or stagnates; carries
/// the best iterate found so the caller can retry or dump diagnostics.
class SolveFailure : public std::runtime_error {
 public:
  SolveFailure(std::string message, SolveResult best)
      : std::runtime_error(std::move(message)), best_(std::move(best)) {}
  const SolveResult& best() const { return best_; }

 private:
  SolveResult best_;
};

/// Damped Newton on Phi with Armijo backtracking on |Phi|^2; singular
/// Jacobians fall back to a Levenberg-Marquardt step. Throws SolveFailure on
/// non-convergence.
SolveResult solve(const FbSystem& system, const Eigen::VectorXd& z0,
                  const SolverConfig& config);

}  // namespace patchsim
