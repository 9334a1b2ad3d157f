#pragma once

#include <Eigen/Dense>
#include <complex>
#include <optional>
#include <string>
#include <vector>

#include "folqr/common.hpp"

namespace folqr::model {

// One coefficient*s^exponent term of a fractional-order polynomial.
struct Term {
  double coefficient = 0.0;
  double exponent = 0.0;
};

// Sparse sum-of-powers transfer function with real exponents, terms in strictly
// descending exponent order. Strictly proper: the highest denominator exponent
// exceeds the highest numerator exponent.
struct FractionalTransferFunction {
  std::vector<Term> numerator;
  std::vector<Term> denominator;

  // Throws std::invalid_argument when a type invariant is violated.
  void validate() const;

  double numerator_degree() const;
  double denominator_degree() const;

  // Direct scalar evaluation at a complex point (principal-branch powers).
  std::complex<double> evaluate(std::complex<double> s) const;
};

// State-space-like realization where state i is differentiated to fractional
// order n_i. base_order is set when all orders are integer multiples of a
// common rational base q.
struct PseudoStateSpace {
  Eigen::MatrixXd A;  // N x N
  Eigen::MatrixXd B;  // N x m (m = 1 for every built-in system)
  Eigen::MatrixXd C;  // p x N
  std::vector<double> orders;          // n_i, each in (0, 1]
  std::optional<Rational> base_order;  // q with n_i = k_i * q when commensurate

  Eigen::Index state_count() const { return A.rows(); }
  Eigen::Index input_count() const { return B.cols(); }
  Eigen::Index output_count() const { return C.rows(); }
};

enum class CompanionForm { bottom_row, top_row };

enum class ResolventMode {
  fractional,  // Lambda(jw) = diag((jw)^{n_i})
  literal      // jw * I
};

// Parses "poly / poly" where poly is a sum of `coeff ['*'] 's' ['^' exponent]`
// terms, whitespace-insensitive, with optional parentheses around each poly.
// Throws ParseError (position-reported) on syntax errors and
// std::invalid_argument on semantic violations (duplicate exponent, improper TF).
FractionalTransferFunction parse_fractional_tf(const std::string& text);

// Largest rational q = a/b with b <= max_denominator such that every exponent
// is within `tolerance` of an integer multiple of q; std::nullopt when no such
// base exists. Tolerance is on the exponent value itself (|e - k*q| <= tol*...),
// checked as |e*b - round(e*b)| <= tolerance * b.
std::optional<Rational> commensurate_base_order(const std::vector<double>& exponents,
                                                std::int64_t max_denominator = 1000,
                                                double tolerance = 1e-9);

// Companion-form realization per the implicit-order construction. Monic
// normalization divides every coefficient by the leading denominator
// coefficient; the normalized numerator coefficients are carried in C and B is
// a raw unit vector (last column of I for bottom_row, first for top_row).
// When a commensurate base q <= 1 exists (and force_chain is false), the
// realization has (highest exponent)/q states of uniform order q; otherwise
// states follow the chain n_1 = m_1, n_i = m_i - m_{i-1} over the positive
// denominator exponents m_1 < ... < m_N.
// Throws std::invalid_argument when a chain order falls outside (0, 1] or a
// numerator exponent is not representable on the state ladder.
PseudoStateSpace to_pseudo_state_space(const FractionalTransferFunction& tf,
                                       CompanionForm form, bool force_chain = false);

// Built-in example systems, stored digit-for-digit. Known names:
// "example1_eq7" (3 states, incommensurate) and "example2_eq9"
// (6 states, commensurate base 0.32). Throws std::invalid_argument otherwise.
PseudoStateSpace preset(const std::string& name);

// C * (resolvent(j*omega) - A)^{-1} * B as a p x m complex matrix. Accepts
// omega >= 0; omega == 0 evaluates the DC limit C*(-A)^{-1}*B in fractional
// mode. Throws SingularMatrixError when the resolvent is singular.
Eigen::MatrixXcd frequency_response(const PseudoStateSpace& ss, double omega,
                                    ResolventMode mode);

// The complex resolvent matrix (Lambda(j*omega) - A) itself; shared by the
// frequency-domain objective evaluations.
Eigen::MatrixXcd resolvent_matrix(const PseudoStateSpace& ss, double omega,
                                  ResolventMode mode);

// Solves (Lambda(j*omega) - A) X = RHS, throwing SingularMatrixError with the
// frequency when the resolvent is not invertible.
Eigen::MatrixXcd resolvent_solve(const PseudoStateSpace& ss, double omega,
                                 ResolventMode mode, const Eigen::MatrixXcd& rhs);

}  // namespace folqr::model
