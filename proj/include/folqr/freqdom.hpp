#pragma once

#include <Eigen/Dense>
#include <complex>
#include <vector>

#include "folqr/model.hpp"
#include "folqr/perturbation.hpp"

namespace folqr::freqdom {

// Strictly increasing positive evaluation frequencies (rad/s).
struct FrequencyGrid {
  std::vector<double> omegas;

  // k2 log-spaced points on [lo, hi]; the module default is 100 points on
  // [1e-3, 1e3], bracketing both built-in systems by two decades each side.
  static FrequencyGrid log_spaced(double lo = 1e-3, double hi = 1e3, std::size_t k2 = 100);

  std::size_t size() const { return omegas.size(); }
};

// Singular values of a complex matrix, descending.
std::vector<double> singular_values(const Eigen::MatrixXcd& M);

// H(jw) = diag(sqrt(q_i)) * (resolvent)^{-1} * B.
Eigen::MatrixXcd h_matrix(const model::PseudoStateSpace& ss, const Eigen::VectorXd& q_diag,
                          double omega, model::ResolventMode mode);

// Return-difference singular-value bound, summed over the grid:
//   J2 = sum_j sum_{i=1..k1} sqrt( [sigma_min^2(R^0.5) + sigma_i^2(H(jw_j))]
//                                   / sigma_max^2(R^0.5) )
// with k1 = min(inputs, outputs) and the sigma_i taken in ascending order.
// For single-input systems this reduces to sqrt(1 + |H|^2 / r) per frequency,
// so every term is >= 1 and J2 >= grid size. Larger is better; the optimizer
// negates it.
double objective_j2(const model::PseudoStateSpace& ss, const Eigen::VectorXd& q_diag,
                    const Eigen::VectorXd& r_diag, const FrequencyGrid& grid,
                    model::ResolventMode mode);

// Loop transfer (return ratio) at the plant input: K * (resolvent)^{-1} * B,
// an m x m complex matrix (1 x 1 for single-input systems).
Eigen::MatrixXcd loop_transfer(const model::PseudoStateSpace& ss, const Eigen::RowVectorXd& k,
                               double omega, model::ResolventMode mode);

// Perturbation singular-value index over the grid:
//   J3 = sum_j sigma_max[ (I - L(jw_j)) L(jw_j)^{-1} ]   (|1-L|/|L| for SISO).
// L comes from the perturbation spec: return_ratio recomputes the loop
// transfer from (ss, k); external_tf evaluates the stored transfer function
// directly (making J3 independent of the design). Grid points where L is
// numerically singular (|L| < 1e-12) contribute `penalty` instead.
double objective_j3(const model::PseudoStateSpace& ss, const Eigen::RowVectorXd& k,
                    const PerturbationSpec& spec, const FrequencyGrid& grid,
                    model::ResolventMode mode, double penalty = 1e6);

}  // namespace folqr::freqdom
