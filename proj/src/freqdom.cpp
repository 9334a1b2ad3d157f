#include "folqr/freqdom.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace folqr::freqdom {

FrequencyGrid FrequencyGrid::log_spaced(double lo, double hi, std::size_t k2) {
  if (!(lo > 0.0) || !(hi > lo)) throw std::invalid_argument("need 0 < lo < hi");
  if (k2 < 2) throw std::invalid_argument("grid needs at least two points");
  FrequencyGrid grid;
  grid.omegas.resize(k2);
  const double llo = std::log10(lo);
  const double lhi = std::log10(hi);
  for (std::size_t i = 0; i < k2; ++i)
    grid.omegas[i] =
        std::pow(10.0, llo + (lhi - llo) * static_cast<double>(i) / static_cast<double>(k2 - 1));
  return grid;
}

std::vector<double> singular_values(const Eigen::MatrixXcd& M) {
  if (!M.allFinite()) throw std::invalid_argument("singular_values: non-finite entries");
  Eigen::JacobiSVD<Eigen::MatrixXcd> svd(M);
  const Eigen::VectorXd& s = svd.singularValues();
  return {s.data(), s.data() + s.size()};  // Eigen returns them descending
}

Eigen::MatrixXcd h_matrix(const model::PseudoStateSpace& ss, const Eigen::VectorXd& q_diag,
                          double omega, model::ResolventMode mode) {
  if (q_diag.size() != ss.state_count())
    throw std::invalid_argument("q_diag length must equal the state dimension");
  if ((q_diag.array() < 0.0).any())
    throw std::invalid_argument("Q diagonal entries must be non-negative");
  const Eigen::MatrixXcd x =
      model::resolvent_solve(ss, omega, mode, ss.B.cast<std::complex<double>>());
  return q_diag.cwiseSqrt().cast<std::complex<double>>().asDiagonal() * x;
}

double objective_j2(const model::PseudoStateSpace& ss, const Eigen::VectorXd& q_diag,
                    const Eigen::VectorXd& r_diag, const FrequencyGrid& grid,
                    model::ResolventMode mode) {
  if ((r_diag.array() <= 0.0).any())
    throw std::invalid_argument("R diagonal entries must be positive");
  // Singular values of R^{1/2} are just the square roots of the diagonal.
  const double r_min = r_diag.minCoeff();
  const double r_max = r_diag.maxCoeff();
  const auto k1 = static_cast<std::size_t>(std::min(ss.input_count(), ss.output_count()));

  double j2 = 0.0;
  for (double omega : grid.omegas) {
    std::vector<double> sv = singular_values(h_matrix(ss, q_diag, omega, mode));
    std::sort(sv.begin(), sv.end());  // ascending pairing for the inner sum
    for (std::size_t i = 0; i < k1; ++i) {
      const double sigma = i < sv.size() ? sv[i] : 0.0;
      j2 += std::sqrt((r_min + sigma * sigma) / r_max);
    }
  }
  return j2;
}

Eigen::MatrixXcd loop_transfer(const model::PseudoStateSpace& ss, const Eigen::RowVectorXd& k,
                               double omega, model::ResolventMode mode) {
  if (k.cols() != ss.state_count())
    throw std::invalid_argument("gain length must equal the state dimension");
  const Eigen::MatrixXcd x =
      model::resolvent_solve(ss, omega, mode, ss.B.cast<std::complex<double>>());
  return k.cast<std::complex<double>>() * x;
}

double objective_j3(const model::PseudoStateSpace& ss, const Eigen::RowVectorXd& k,
                    const PerturbationSpec& spec, const FrequencyGrid& grid,
                    model::ResolventMode mode, double penalty) {
  constexpr double kSingularFloor = 1e-12;
  double j3 = 0.0;
  for (double omega : grid.omegas) {
    Eigen::MatrixXcd L;
    if (spec.kind == PerturbationKind::return_ratio) {
      L = loop_transfer(ss, k, omega, mode);
    } else {
      if (!spec.tf) throw std::invalid_argument("external_tf perturbation without a tf");
      L = Eigen::MatrixXcd::Constant(1, 1, spec.tf->evaluate(std::complex<double>(0.0, omega)));
    }
    if (L.rows() == 1 && L.cols() == 1) {
      const double mag = std::abs(L(0, 0));
      j3 += mag < kSingularFloor ? penalty : std::abs(1.0 - L(0, 0)) / mag;
      continue;
    }
    const Eigen::FullPivLU<Eigen::MatrixXcd> lu(L);
    const std::vector<double> sv = singular_values(L);
    if (!lu.isInvertible() || sv.back() < kSingularFloor) {
      j3 += penalty;
      continue;
    }
    const Eigen::MatrixXcd M =
        (Eigen::MatrixXcd::Identity(L.rows(), L.cols()) - L) * lu.inverse();
    j3 += singular_values(M).front();
  }
  return j3;
}

}  // namespace folqr::freqdom
