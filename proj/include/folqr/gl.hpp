#pragma once

#include <cstddef>
#include <memory>
#include <vector>

namespace folqr::simulate {

// Binomial weight table for the backward fractional-difference scheme:
// w_0 = 1, w_j = w_{j-1} * (1 - (alpha + 1)/j), equivalently
// (-1)^j * binomial(alpha, j).
struct GlWeightTable {
  double alpha = 1.0;
  double step = 0.0;  // h in seconds; carried for context, weights do not depend on it
  std::vector<double> weights;
};

// Weights w_0 ... w_count for a derivative of order alpha in (0, 1].
// Throws std::invalid_argument when alpha is outside (0, 1].
std::vector<double> gl_weights(double alpha, std::size_t count);

// Cached variant sharing tables across concurrent simulations. The returned
// vector has at least count+1 entries (a longer cached table may be reused);
// the pointee is immutable.
std::shared_ptr<const std::vector<double>> gl_weights_cached(double alpha, std::size_t count);

inline GlWeightTable make_gl_table(double alpha, double step, std::size_t count) {
  return GlWeightTable{alpha, step, gl_weights(alpha, count)};
}

}  // namespace folqr::simulate
