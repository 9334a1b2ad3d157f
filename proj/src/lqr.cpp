#include "folqr/lqr.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace folqr::lqr {
namespace {

constexpr double kResidualTol = 1e-10;
constexpr int kMaxNewtonIterations = 50;

double max_real_eigenvalue(const Eigen::MatrixXd& M) {
  const Eigen::EigenSolver<Eigen::MatrixXd> es(M, /*computeEigenvectors=*/false);
  return es.eigenvalues().real().maxCoeff();
}

bool is_hurwitz(const Eigen::MatrixXd& M, double margin = 1e-12) {
  return max_real_eigenvalue(M) < -margin;
}

// Solves X S + S^T X = -W for X via the Kronecker-product linear system
// (dense, fine for the small dimensions used here). S is the closed-loop
// matrix; the equation is the standard stable Lyapunov form S^T X + X S = -W.
Eigen::MatrixXd solve_lyapunov(const Eigen::MatrixXd& S, const Eigen::MatrixXd& W) {
  const Eigen::Index n = S.rows();
  Eigen::MatrixXd M = Eigen::MatrixXd::Zero(n * n, n * n);
  // vec(S^T X) = (I kron S^T) vec(X); vec(X S) = (S^T kron I) vec(X).
  for (Eigen::Index bi = 0; bi < n; ++bi)
    M.block(bi * n, bi * n, n, n) += S.transpose();
  for (Eigen::Index bi = 0; bi < n; ++bi)
    for (Eigen::Index bj = 0; bj < n; ++bj)
      for (Eigen::Index d = 0; d < n; ++d)
        M(bi * n + d, bj * n + d) += S(bj, bi);
  const Eigen::VectorXd rhs = -Eigen::Map<const Eigen::VectorXd>(W.data(), n * n);
  const Eigen::VectorXd x = M.fullPivLu().solve(rhs);
  Eigen::MatrixXd X = Eigen::Map<const Eigen::MatrixXd>(x.data(), n, n);
  return 0.5 * (X + X.transpose());
}

// Eigenvalue-shift construction of an initial stabilizing gain: pick a shift
// beta making A + beta*I anti-stable, solve
//   (A + beta I) W + W (A + beta I)^T = 2 B B^T
// and use K0 = B^T W^+; A - B K0 is Hurwitz for stabilizable pairs.
Eigen::MatrixXd initial_stabilizing_gain(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B) {
  const Eigen::Index n = A.rows();
  const Eigen::Index m = B.cols();
  if (is_hurwitz(A)) return Eigen::MatrixXd::Zero(m, n);

  const Eigen::EigenSolver<Eigen::MatrixXd> es(A, false);
  const double min_real = es.eigenvalues().real().minCoeff();
  double beta = 1.0 + std::max(0.0, -min_real) * 1.05;
  for (int attempt = 0; attempt < 6; ++attempt, beta *= 4.0) {
    const Eigen::MatrixXd shifted = A + beta * Eigen::MatrixXd::Identity(n, n);
    // Anti-stable Lyapunov equation, solved via the stable form for -shifted.
    const Eigen::MatrixXd W =
        solve_lyapunov((-shifted).transpose(), 2.0 * B * B.transpose());
    const Eigen::MatrixXd K0 =
        B.transpose() * W.completeOrthogonalDecomposition().pseudoInverse();
    if (K0.allFinite() && is_hurwitz(A - B * K0)) return K0;
  }
  throw std::runtime_error("no stabilizing initial gain found; the pair (A, B) "
                           "appears non-stabilizable");
}

}  // namespace

void WeightSpec::validate(Eigen::Index n_states, Eigen::Index n_inputs) const {
  if (q_diag.size() != n_states)
    throw std::invalid_argument("q_diag length must equal the state dimension");
  if (r_diag.size() != n_inputs)
    throw std::invalid_argument("r_diag length must equal the input dimension");
  if ((q_diag.array() < 0.0).any())
    throw std::invalid_argument("Q diagonal entries must be non-negative");
  if ((r_diag.array() <= 0.0).any())
    throw std::invalid_argument("R diagonal entries must be positive");
}

double care_residual(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B,
                     const Eigen::MatrixXd& P, const Eigen::VectorXd& q_diag,
                     const Eigen::VectorXd& r_diag) {
  const Eigen::MatrixXd rinvbt = r_diag.cwiseInverse().asDiagonal() * B.transpose();
  const Eigen::MatrixXd res = A.transpose() * P + P * A - P * B * rinvbt * P +
                              Eigen::MatrixXd(q_diag.asDiagonal());
  return res.norm();
}

Eigen::MatrixXd solve_care(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B,
                           const Eigen::VectorXd& q_diag, const Eigen::VectorXd& r_diag) {
  const Eigen::Index n = A.rows();
  WeightSpec{q_diag, r_diag}.validate(n, B.cols());

  const Eigen::MatrixXd rinv = r_diag.cwiseInverse().asDiagonal();
  const Eigen::MatrixXd Q = q_diag.asDiagonal();

  Eigen::MatrixXd K = initial_stabilizing_gain(A, B);
  Eigen::MatrixXd P;
  double residual = std::numeric_limits<double>::infinity();
  for (int iter = 0; iter < kMaxNewtonIterations; ++iter) {
    const Eigen::MatrixXd Acl = A - B * K;
    P = solve_lyapunov(Acl, Q + K.transpose() * Eigen::MatrixXd(r_diag.asDiagonal()) * K);
    K = rinv * B.transpose() * P;
    residual = care_residual(A, B, P, q_diag, r_diag);
    if (residual <= kResidualTol * (1.0 + P.norm())) break;
  }
  if (residual > 1e-8 * (1.0 + P.norm()))
    throw std::runtime_error("Riccati iteration stagnated at residual " +
                             std::to_string(residual));
  P = 0.5 * (P + P.transpose());
  return P;
}

Eigen::MatrixXd solve_care(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B,
                           const Eigen::VectorXd& q_diag, double r) {
  return solve_care(A, B, q_diag, Eigen::VectorXd::Constant(B.cols(), r));
}

Eigen::MatrixXd lqr_gain(const Eigen::MatrixXd& p, const Eigen::MatrixXd& B,
                         const Eigen::VectorXd& r_diag) {
  return r_diag.cwiseInverse().asDiagonal() * B.transpose() * p;
}

double feedforward_gain(const model::PseudoStateSpace& ss, const Eigen::RowVectorXd& k) {
  const Eigen::MatrixXd Acl = ss.A - ss.B * k;
  Eigen::FullPivLU<Eigen::MatrixXd> lu(-Acl);
  if (!lu.isInvertible())
    throw SingularMatrixError("closed loop is singular at DC; no feedforward exists");
  const double dc = (ss.C * lu.solve(ss.B))(0, 0);
  if (dc == 0.0)
    throw SingularMatrixError("closed-loop DC gain is zero; no feedforward exists");
  return 1.0 / dc;
}

LqrSolution design(const model::PseudoStateSpace& ss, const Eigen::VectorXd& q_diag,
                   double r) {
  LqrSolution sol;
  const Eigen::VectorXd r_diag = Eigen::VectorXd::Constant(ss.B.cols(), r);
  sol.p = solve_care(ss.A, ss.B, q_diag, r_diag);
  sol.k = lqr_gain(sol.p, ss.B, r_diag).row(0);
  sol.nbar = feedforward_gain(ss, sol.k);
  sol.residual = care_residual(ss.A, ss.B, sol.p, q_diag, r_diag);
  return sol;
}

StabilityVerdict fractional_stability(const Eigen::MatrixXd& A_closed,
                                      const std::optional<Rational>& base_order,
                                      const std::vector<double>& orders) {
  StabilityVerdict out;
  double q;
  if (base_order) {
    q = base_order->value();
  } else {
    if (orders.empty()) throw std::invalid_argument("orders required when base order is absent");
    q = *std::max_element(orders.begin(), orders.end());
    out.conservative = true;
  }
  const Eigen::EigenSolver<Eigen::MatrixXd> es(A_closed, false);
  double min_angle = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i)
    min_angle = std::min(min_angle, std::abs(std::arg(es.eigenvalues()[i])));
  out.margin = min_angle - q * std::numbers::pi / 2.0;
  out.stable = out.margin > 0.0;
  return out;
}

}  // namespace folqr::lqr
