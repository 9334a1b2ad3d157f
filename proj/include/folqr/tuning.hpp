#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "folqr/freqdom.hpp"
#include "folqr/lqr.hpp"
#include "folqr/model.hpp"
#include "folqr/perturbation.hpp"
#include "folqr/pesa2.hpp"
#include "folqr/simulate.hpp"

namespace folqr::tuning {

// The three design criteria. j1: time-domain ITAE + control effort
// (minimized). j2: return-difference singular-value bound (maximized, so it
// enters the optimizer negated). j3: perturbation singular-value index
// (minimized).
enum class Objective { j1, j2, j3 };

// "j1,j2" / "J1,J3" / "j1,j2,j3" -> objective list. Requires two or three
// distinct entries; throws std::invalid_argument otherwise.
std::vector<Objective> parse_objectives(const std::string& text);

std::string objective_label(Objective objective);

// "J1-J2" style label for a whole subset.
std::string subset_label(const std::vector<Objective>& objectives);

// Everything needed to score one (Q, R) candidate on the selected objectives.
struct TuningSetup {
  model::PseudoStateSpace plant;
  std::vector<Objective> objectives{Objective::j1, Objective::j2, Objective::j3};
  simulate::J1Config time_domain;  // reporting-grade step by default
  freqdom::FrequencyGrid grid = freqdom::FrequencyGrid::log_spaced();
  model::ResolventMode mode = model::ResolventMode::fractional;
  freqdom::PerturbationSpec perturbation = freqdom::PerturbationSpec::return_ratio();
  double sentinel = 1e12;

  // One gene per diagonal Q entry plus one for the scalar R.
  std::size_t gene_count() const { return static_cast<std::size_t>(plant.state_count()) + 1; }
};

// Genes live in log10 space: weights = 10^gene, so the default [-4, 3] bounds
// span weights 1e-4 .. 1e3.
struct Decoded {
  Eigen::VectorXd q_diag;
  double r = 1.0;
};

Decoded decode_genes(const std::vector<double>& genes);
std::vector<double> encode_weights(const Eigen::VectorXd& q_diag, double r);

// Scores a candidate: LQR design followed by the selected objectives, in
// minimization orientation (j2 negated). Any failure — Riccati breakdown,
// singular resolvent, divergent simulation, non-finite value — maps the whole
// vector to the sentinel so partial scores never enter the archive.
std::vector<double> evaluate_candidate(const TuningSetup& setup,
                                       const std::vector<double>& genes);

// Physical (reported) values for the same candidate: the j2 entry is restored
// to its positive maximization orientation. Ordering matches setup.objectives.
std::vector<double> physical_values(const std::vector<Objective>& objectives,
                                    const std::vector<double>& oriented);

// Binds the setup into a self-contained optimization problem.
pesa2::Problem make_problem(const TuningSetup& setup);

}  // namespace folqr::tuning
