#pragma once

#include <Eigen/Dense>
#include <optional>
#include <vector>

#include "folqr/gl.hpp"
#include "folqr/model.hpp"
#include "folqr/perturbation.hpp"

namespace folqr::simulate {

// Uniformly sampled closed-loop trajectories. All series share one length;
// times[k] = k*h starting at 0.
struct SimulationRecord {
  std::vector<double> times;
  std::vector<double> y;  // plant (or perturbed) output
  std::vector<double> u;  // commanded input nbar*r - K*x
  std::vector<double> e;  // r - y
  std::optional<Eigen::MatrixXd> states;  // rows = states, cols = time steps
  double reference = 0.0;
};

// Step-response quality indices. settling_time is absent iff the response
// never stays inside the band through the horizon end.
struct StepMetrics {
  double itae = 0.0;
  double iae = 0.0;
  double isco = 0.0;
  std::optional<double> settling_time;
  double overshoot_percent = 0.0;
  double j1 = 0.0;
};

// Steps the implicit backward fractional-difference scheme
//   (I - diag(h^{n_i})*(A - B*K)) x_k = diag(h^{n_i})*B*nbar*r - history_k
// where history_k,i = sum_{j=1..min(k,memory)} w_j^{(n_i)} x_i(t_{k-j}).
// K absent means open loop (u = nbar*r). memory absent means unbounded
// history. An external-TF perturbation is realized in state space, inserted in
// series at the plant input (or output when its flag says so) and
// co-integrated; a return_ratio perturbation has no standalone realization and
// is rejected with std::invalid_argument.
// Throws SingularMatrixError when the per-step matrix is singular and
// DivergenceError (with the step index) when the state leaves finite range.
SimulationRecord simulate_closed_loop(
    const model::PseudoStateSpace& ss, const std::optional<Eigen::RowVectorXd>& K,
    double nbar, double r, double h, double horizon,
    std::optional<std::size_t> memory = std::nullopt,
    const std::optional<freqdom::PerturbationSpec>& perturbation = std::nullopt,
    bool keep_states = false);

// Trapezoidal integrals of the record plus band-based settling and overshoot.
// j1 = s1*(itae when use_time_weight else iae) + s2*isco.
StepMetrics step_metrics(const SimulationRecord& rec, double band_fraction, double s1,
                         double s2, bool use_time_weight = true);

// Configuration for the scalar time-domain objective.
struct J1Config {
  double s1 = 1.0;  // the error and input weights default to the same value
  double s2 = 1.0;
  double h = 1e-3;
  double horizon = 20.0;
  double reference = 1.0;
  double band_fraction = 0.02;
  bool use_time_weight = true;  // integrate t*|e| (default) or plain |e|
  std::optional<std::size_t> memory;
  std::optional<freqdom::PerturbationSpec> perturbation;  // nominal when absent
  double sentinel = 1e12;  // returned when the simulation diverges
};

// Composes simulate_closed_loop + step_metrics and returns j1; divergence and
// singular-step failures yield cfg.sentinel instead of an exception so
// optimization loops stay total.
double objective_j1(const model::PseudoStateSpace& ss, const Eigen::RowVectorXd& K,
                    double nbar, const J1Config& cfg);

// Result of a settling-time measurement that may extend the horizon.
struct SettlingMeasurement {
  std::optional<double> settling_time;
  double horizon_used = 0.0;  // horizon of the last simulation run
  double final_output = 0.0;  // y at the end of that run
};

// Measures the band settling time at the given step size. When the response
// has not settled by initial_horizon, the horizon is doubled (up to
// max_horizon) and the run repeated at the coarser extended_h step. Every run
// keeps the full history: truncating it biases the late-time plateau of a
// fractional response enough to flip a band verdict, so the extended legs
// trade step resolution for a sound memory model instead.
SettlingMeasurement measure_settling_time(
    const model::PseudoStateSpace& ss, const std::optional<Eigen::RowVectorXd>& K,
    double nbar, double r, double h, double band_fraction, double initial_horizon = 20.0,
    double max_horizon = 160.0, double extended_h = 1e-2);

}  // namespace folqr::simulate
