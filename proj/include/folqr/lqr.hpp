#pragma once

#include <Eigen/Dense>
#include <optional>
#include <vector>

#include "folqr/common.hpp"
#include "folqr/model.hpp"

namespace folqr::lqr {

// Diagonal weighting choice: Q = diag(q_diag) (positive semi-definite),
// R = diag(r_diag) (positive definite; one entry for single-input systems).
struct WeightSpec {
  Eigen::VectorXd q_diag;
  Eigen::VectorXd r_diag;

  void validate(Eigen::Index n_states, Eigen::Index n_inputs) const;
};

// Stabilizing Riccati solution and the gains derived from it.
struct LqrSolution {
  Eigen::MatrixXd p;       // symmetric positive semi-definite
  Eigen::RowVectorXd k;    // R^{-1} B^T P (single-input row)
  double nbar = 1.0;       // unity-DC feedforward
  double residual = 0.0;   // Frobenius norm of the Riccati residual
};

// Solves A^T P + P A - P B R^{-1} B^T P + Q = 0 for the unique stabilizing
// symmetric PSD solution by Newton iteration on the gain, starting from an
// eigenvalue-shift (Lyapunov-based) stabilizing gain; inner Lyapunov equations
// are solved as dense N^2 x N^2 linear systems.
// Throws std::runtime_error when no stabilizing initial gain can be built
// (non-stabilizable pair) or when the iteration stagnates above tolerance.
Eigen::MatrixXd solve_care(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B,
                           const Eigen::VectorXd& q_diag, const Eigen::VectorXd& r_diag);
Eigen::MatrixXd solve_care(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B,
                           const Eigen::VectorXd& q_diag, double r);

// k = R^{-1} B^T P (general input count; single-input callers take row 0).
Eigen::MatrixXd lqr_gain(const Eigen::MatrixXd& p, const Eigen::MatrixXd& B,
                         const Eigen::VectorXd& r_diag);

// nbar = 1 / (C (-(A - B k))^{-1} B); guarantees closed-loop DC gain one.
// Throws SingularMatrixError when the closed loop is singular at DC.
double feedforward_gain(const model::PseudoStateSpace& ss, const Eigen::RowVectorXd& k);

// Convenience: full design pass (solve, gain, feedforward, residual).
LqrSolution design(const model::PseudoStateSpace& ss, const Eigen::VectorXd& q_diag,
                   double r);

// Frobenius norm of A^T P + P A - P B R^{-1} B^T P + Q.
double care_residual(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B,
                     const Eigen::MatrixXd& P, const Eigen::VectorXd& q_diag,
                     const Eigen::VectorXd& r_diag);

// Commensurate-order eigenvalue stability verdict.
struct StabilityVerdict {
  bool stable = false;
  double margin = 0.0;      // min over eigenvalues of |arg(lambda)| - q*pi/2, radians
  bool conservative = false;  // true when the sufficient max-order test was used
};

// stable iff every eigenvalue lambda of A_closed satisfies
// |arg(lambda)| > q*pi/2. When base_order is absent the test runs at
// q = max(orders), which is sufficient but conservative for mixed orders.
StabilityVerdict fractional_stability(const Eigen::MatrixXd& A_closed,
                                      const std::optional<Rational>& base_order,
                                      const std::vector<double>& orders);

}  // namespace folqr::lqr
