#include "folqr/simulate.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace folqr::simulate {
namespace {

// Splits a proper transfer function into feedthrough + strictly proper part:
// L = d0 + remainder/den. d0 is zero when L is already strictly proper.
struct ProperSplit {
  double d0 = 0.0;
  std::optional<model::FractionalTransferFunction> strict;  // absent for a pure gain
};

ProperSplit split_proper(const model::FractionalTransferFunction& tf) {
  ProperSplit out;
  if (tf.denominator.empty() || tf.numerator.empty())
    throw std::invalid_argument("perturbation transfer function is empty");
  const double num_deg = tf.numerator.front().exponent;
  const double den_deg = tf.denominator.front().exponent;
  if (num_deg > den_deg + 1e-12)
    throw std::invalid_argument("perturbation transfer function is improper");
  if (std::abs(num_deg - den_deg) > 1e-12) {
    out.strict = tf;
    return out;
  }
  // Equal leading exponents: subtract d0 * den from the numerator.
  out.d0 = tf.numerator.front().coefficient / tf.denominator.front().coefficient;
  model::FractionalTransferFunction rem;
  rem.denominator = tf.denominator;
  rem.numerator = tf.numerator;
  for (const model::Term& dt : tf.denominator) {
    bool merged = false;
    for (model::Term& nt : rem.numerator) {
      if (std::abs(nt.exponent - dt.exponent) <= 1e-12) {
        nt.coefficient -= out.d0 * dt.coefficient;
        merged = true;
        break;
      }
    }
    if (!merged) rem.numerator.push_back({-out.d0 * dt.coefficient, dt.exponent});
  }
  std::sort(rem.numerator.begin(), rem.numerator.end(),
            [](const model::Term& a, const model::Term& b) { return a.exponent > b.exponent; });
  rem.numerator.erase(
      std::remove_if(rem.numerator.begin(), rem.numerator.end(),
                     [](const model::Term& t) { return std::abs(t.coefficient) < 1e-300; }),
      rem.numerator.end());
  if (!rem.numerator.empty()) out.strict = rem;
  return out;
}

// The augmented system actually stepped: dynamics matrix, constant input
// vector (scaled by nbar*r at use), output row, per-state orders. The plant
// states occupy the leading block, so the gain keeps acting on them directly.
struct LoopRealization {
  Eigen::MatrixXd A;
  Eigen::VectorXd b;  // multiplies nbar*r
  Eigen::RowVectorXd c;
  std::vector<double> orders;
};

LoopRealization build_loop(const model::PseudoStateSpace& ss, const Eigen::RowVectorXd& K,
                           const std::optional<freqdom::PerturbationSpec>& perturbation) {
  const Eigen::Index n = ss.state_count();
  if (ss.B.cols() != 1 || ss.C.rows() != 1)
    throw std::invalid_argument("time-domain simulation supports single-input single-output loops");

  LoopRealization out;
  if (!perturbation) {
    out.A = ss.A - ss.B * K;
    out.b = ss.B.col(0);
    out.c = ss.C.row(0);
    out.orders = ss.orders;
    return out;
  }
  if (perturbation->kind == freqdom::PerturbationKind::return_ratio)
    throw std::invalid_argument(
        "a return_ratio perturbation has no standalone realization to co-integrate; "
        "use an external transfer function for time-domain runs");

  const ProperSplit split = split_proper(*perturbation->tf);
  model::PseudoStateSpace lss;
  Eigen::Index nl = 0;
  if (split.strict) {
    lss = model::to_pseudo_state_space(*split.strict, model::CompanionForm::bottom_row);
    nl = lss.state_count();
  }
  const Eigen::Index nt = n + nl;
  out.A = Eigen::MatrixXd::Zero(nt, nt);
  out.b = Eigen::VectorXd::Zero(nt);
  out.c = Eigen::RowVectorXd::Zero(nt);
  out.orders = ss.orders;
  for (Eigen::Index i = 0; i < nl; ++i) out.orders.push_back(lss.orders[static_cast<std::size_t>(i)]);

  if (!perturbation->at_output) {
    // Series block between the commanded input w = nbar*r - K*x and the plant.
    out.A.topLeftCorner(n, n) = ss.A - split.d0 * ss.B * K;
    if (nl > 0) {
      out.A.topRightCorner(n, nl) = ss.B * lss.C;
      out.A.bottomLeftCorner(nl, n) = -lss.B * K;
      out.A.bottomRightCorner(nl, nl) = lss.A;
      out.b.tail(nl) = lss.B.col(0);
    }
    out.b.head(n) = split.d0 * ss.B.col(0);
    out.c.head(n) = ss.C.row(0);
  } else {
    // Series block after the plant output; feedback still uses plant states.
    out.A.topLeftCorner(n, n) = ss.A - ss.B * K;
    if (nl > 0) {
      out.A.bottomLeftCorner(nl, n) = lss.B * ss.C;
      out.A.bottomRightCorner(nl, nl) = lss.A;
      out.c.tail(nl) = lss.C.row(0);
    }
    out.b.head(n) = ss.B.col(0);
    out.c.head(n) = split.d0 * ss.C.row(0);
  }
  return out;
}

}  // namespace

SimulationRecord simulate_closed_loop(const model::PseudoStateSpace& ss,
                                      const std::optional<Eigen::RowVectorXd>& K,
                                      double nbar, double r, double h, double horizon,
                                      std::optional<std::size_t> memory,
                                      const std::optional<freqdom::PerturbationSpec>& perturbation,
                                      bool keep_states) {
  if (!(h > 0.0)) throw std::invalid_argument("step size must be positive");
  if (horizon < 10.0 * h) throw std::invalid_argument("horizon must be at least 10*h");
  const Eigen::Index n = ss.state_count();
  if (static_cast<Eigen::Index>(ss.orders.size()) != n)
    throw std::invalid_argument("orders length must match the state dimension");
  for (double ni : ss.orders)
    if (!(ni > 0.0) || ni > 1.0) throw std::invalid_argument("state orders must lie in (0, 1]");

  const Eigen::RowVectorXd gain =
      K ? *K : Eigen::RowVectorXd::Zero(n).eval();
  if (gain.cols() != n) throw std::invalid_argument("gain length must match the state dimension");

  const LoopRealization loop = build_loop(ss, gain, perturbation);
  const auto nt = loop.A.rows();
  const auto steps = static_cast<std::size_t>(std::llround(horizon / h));
  const std::size_t mem = memory.value_or(std::numeric_limits<std::size_t>::max());
  const std::size_t table_len = std::min(steps, mem);

  // Per-state weight tables (shared across states with equal orders).
  std::vector<std::shared_ptr<const std::vector<double>>> tables(static_cast<std::size_t>(nt));
  for (Eigen::Index i = 0; i < nt; ++i)
    tables[static_cast<std::size_t>(i)] =
        gl_weights_cached(loop.orders[static_cast<std::size_t>(i)], table_len);

  Eigen::VectorXd dh(nt);
  for (Eigen::Index i = 0; i < nt; ++i)
    dh[i] = std::pow(h, loop.orders[static_cast<std::size_t>(i)]);

  const Eigen::MatrixXd step_matrix =
      Eigen::MatrixXd::Identity(nt, nt) - dh.asDiagonal() * loop.A;
  Eigen::FullPivLU<Eigen::MatrixXd> lu(step_matrix);
  if (!lu.isInvertible()) throw SingularMatrixError("singular per-step matrix");

  const Eigen::VectorXd rhs_const = dh.asDiagonal() * (loop.b * (nbar * r));

  SimulationRecord rec;
  rec.reference = r;
  rec.times.resize(steps + 1);
  rec.y.resize(steps + 1);
  rec.u.resize(steps + 1);
  rec.e.resize(steps + 1);
  if (keep_states) rec.states = Eigen::MatrixXd::Zero(nt, static_cast<Eigen::Index>(steps + 1));

  // Per-state history in contiguous storage for the convolution sums.
  std::vector<std::vector<double>> hist(static_cast<std::size_t>(nt));
  for (auto& hvec : hist) {
    hvec.reserve(steps + 1);
    hvec.push_back(0.0);
  }

  rec.times[0] = 0.0;
  rec.y[0] = 0.0;
  rec.u[0] = nbar * r;
  rec.e[0] = r;

  Eigen::VectorXd rhs(nt);
  Eigen::VectorXd x(nt);
  for (std::size_t k = 1; k <= steps; ++k) {
    const std::size_t jmax = std::min(k, mem);
    for (Eigen::Index i = 0; i < nt; ++i) {
      const double* w = tables[static_cast<std::size_t>(i)]->data();
      const double* xs = hist[static_cast<std::size_t>(i)].data();
      double acc = 0.0;
      for (std::size_t j = 1; j <= jmax; ++j) acc += w[j] * xs[k - j];
      rhs[i] = rhs_const[i] - acc;
    }
    x = lu.solve(rhs);
    if (!x.allFinite())
      throw DivergenceError("state diverged to a non-finite value", k);
    for (Eigen::Index i = 0; i < nt; ++i) hist[static_cast<std::size_t>(i)].push_back(x[i]);
    if (keep_states) rec.states->col(static_cast<Eigen::Index>(k)) = x;

    rec.times[k] = static_cast<double>(k) * h;
    rec.y[k] = loop.c.dot(x);
    rec.u[k] = nbar * r - gain.dot(x.head(n));
    rec.e[k] = r - rec.y[k];
  }
  return rec;
}

StepMetrics step_metrics(const SimulationRecord& rec, double band_fraction, double s1,
                         double s2, bool use_time_weight) {
  const std::size_t len = rec.times.size();
  if (len == 0 || rec.y.size() != len || rec.u.size() != len || rec.e.size() != len)
    throw std::invalid_argument("step_metrics: record is empty or inconsistent");
  if (!(band_fraction > 0.0) || band_fraction > 0.2)
    throw std::invalid_argument("band_fraction must lie in (0, 0.2]");

  StepMetrics m;
  auto trapezoid = [&](auto&& f) {
    double acc = 0.0;
    for (std::size_t k = 0; k + 1 < len; ++k) {
      const double dt = rec.times[k + 1] - rec.times[k];
      acc += 0.5 * (f(k) + f(k + 1)) * dt;
    }
    return acc;
  };
  m.itae = trapezoid([&](std::size_t k) { return rec.times[k] * std::abs(rec.e[k]); });
  m.iae = trapezoid([&](std::size_t k) { return std::abs(rec.e[k]); });
  m.isco = trapezoid([&](std::size_t k) { return rec.u[k] * rec.u[k]; });
  m.j1 = s1 * (use_time_weight ? m.itae : m.iae) + s2 * m.isco;

  const double r = rec.reference;
  const double band = band_fraction * std::abs(r);
  std::ptrdiff_t last_violation = -1;
  for (std::size_t k = 0; k < len; ++k)
    if (std::abs(rec.y[k] - r) > band) last_violation = static_cast<std::ptrdiff_t>(k);
  if (last_violation < 0) {
    m.settling_time = 0.0;
  } else if (last_violation + 1 < static_cast<std::ptrdiff_t>(len)) {
    m.settling_time = rec.times[static_cast<std::size_t>(last_violation + 1)];
  }  // else: still violating at the horizon end -> absent

  if (r > 0.0) {
    const double peak = *std::max_element(rec.y.begin(), rec.y.end());
    m.overshoot_percent = std::max(0.0, (peak - r) / std::abs(r) * 100.0);
  } else if (r < 0.0) {
    const double trough = *std::min_element(rec.y.begin(), rec.y.end());
    m.overshoot_percent = std::max(0.0, (r - trough) / std::abs(r) * 100.0);
  }
  return m;
}

double objective_j1(const model::PseudoStateSpace& ss, const Eigen::RowVectorXd& K,
                    double nbar, const J1Config& cfg) {
  try {
    const SimulationRecord rec =
        simulate_closed_loop(ss, K, nbar, cfg.reference, cfg.h, cfg.horizon, cfg.memory,
                             cfg.perturbation);
    const StepMetrics m =
        step_metrics(rec, cfg.band_fraction, cfg.s1, cfg.s2, cfg.use_time_weight);
    return std::isfinite(m.j1) ? m.j1 : cfg.sentinel;
  } catch (const DivergenceError&) {
    return cfg.sentinel;
  } catch (const SingularMatrixError&) {
    return cfg.sentinel;
  }
}

SettlingMeasurement measure_settling_time(const model::PseudoStateSpace& ss,
                                          const std::optional<Eigen::RowVectorXd>& K,
                                          double nbar, double r, double h, double band_fraction,
                                          double initial_horizon, double max_horizon,
                                          double extended_h) {
  SettlingMeasurement out;
  double horizon = initial_horizon;
  for (;;) {
    const double step = horizon > initial_horizon ? extended_h : h;
    const SimulationRecord rec =
        simulate_closed_loop(ss, K, nbar, r, step, horizon, std::nullopt);
    const StepMetrics m = step_metrics(rec, band_fraction, 1.0, 1.0);
    out.horizon_used = horizon;
    out.final_output = rec.y.back();
    if (m.settling_time) {
      out.settling_time = m.settling_time;
      return out;
    }
    if (horizon >= max_horizon) return out;
    horizon = std::min(2.0 * horizon, max_horizon);
  }
}

}  // namespace folqr::simulate
