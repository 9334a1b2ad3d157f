#include "folqr/tuning.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace folqr::tuning {

std::vector<Objective> parse_objectives(const std::string& text) {
  std::vector<Objective> result;
  std::stringstream stream(text);
  std::string token;
  while (std::getline(stream, token, ',')) {
    std::string lowered;
    for (const char c : token)
      if (!std::isspace(static_cast<unsigned char>(c)))
        lowered.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    if (lowered == "j1")
      result.push_back(Objective::j1);
    else if (lowered == "j2")
      result.push_back(Objective::j2);
    else if (lowered == "j3")
      result.push_back(Objective::j3);
    else if (!lowered.empty())
      throw std::invalid_argument("unknown objective '" + token + "' (expected j1, j2, j3)");
  }
  if (result.size() < 2 || result.size() > 3)
    throw std::invalid_argument("select two or three objectives, e.g. \"j1,j2\"");
  for (std::size_t i = 0; i < result.size(); ++i)
    for (std::size_t j = i + 1; j < result.size(); ++j)
      if (result[i] == result[j]) throw std::invalid_argument("duplicate objective in list");
  return result;
}

std::string objective_label(Objective objective) {
  switch (objective) {
    case Objective::j1: return "J1";
    case Objective::j2: return "J2";
    case Objective::j3: return "J3";
  }
  throw std::invalid_argument("unknown objective");
}

std::string subset_label(const std::vector<Objective>& objectives) {
  std::string label;
  for (const auto objective : objectives) {
    if (!label.empty()) label += "-";
    label += objective_label(objective);
  }
  return label;
}

Decoded decode_genes(const std::vector<double>& genes) {
  if (genes.size() < 2)
    throw std::invalid_argument("need at least one state weight gene plus the input weight gene");
  Decoded decoded;
  decoded.q_diag.resize(static_cast<Eigen::Index>(genes.size()) - 1);
  for (Eigen::Index i = 0; i < decoded.q_diag.size(); ++i)
    decoded.q_diag[i] = std::pow(10.0, genes[static_cast<std::size_t>(i)]);
  decoded.r = std::pow(10.0, genes.back());
  return decoded;
}

std::vector<double> encode_weights(const Eigen::VectorXd& q_diag, double r) {
  if (r <= 0.0) throw std::invalid_argument("input weight must be positive");
  std::vector<double> genes(static_cast<std::size_t>(q_diag.size()) + 1);
  for (Eigen::Index i = 0; i < q_diag.size(); ++i) {
    if (q_diag[i] <= 0.0)
      throw std::invalid_argument("state weights must be positive to encode in log space");
    genes[static_cast<std::size_t>(i)] = std::log10(q_diag[i]);
  }
  genes.back() = std::log10(r);
  return genes;
}

std::vector<double> evaluate_candidate(const TuningSetup& setup,
                                       const std::vector<double>& genes) {
  std::vector<double> scores(setup.objectives.size(), setup.sentinel);
  if (genes.size() != setup.gene_count()) return scores;
  try {
    const Decoded decoded = decode_genes(genes);
    const lqr::LqrSolution solution = lqr::design(setup.plant, decoded.q_diag, decoded.r);
    Eigen::VectorXd r_diag(1);
    r_diag[0] = decoded.r;

    for (std::size_t i = 0; i < setup.objectives.size(); ++i) {
      switch (setup.objectives[i]) {
        case Objective::j1: {
          simulate::J1Config cfg = setup.time_domain;
          cfg.sentinel = setup.sentinel;
          scores[i] = simulate::objective_j1(setup.plant, solution.k, solution.nbar, cfg);
          break;
        }
        case Objective::j2:
          scores[i] =
              -freqdom::objective_j2(setup.plant, decoded.q_diag, r_diag, setup.grid, setup.mode);
          break;
        case Objective::j3:
          scores[i] = freqdom::objective_j3(setup.plant, solution.k, setup.perturbation,
                                            setup.grid, setup.mode);
          break;
      }
    }
    // All objectives finite or all sentinel — never a mixed vector.
    for (const double v : scores) {
      if (!std::isfinite(v) || std::abs(v) >= setup.sentinel)
        return std::vector<double>(setup.objectives.size(), setup.sentinel);
    }
    return scores;
  } catch (const std::exception&) {
    return std::vector<double>(setup.objectives.size(), setup.sentinel);
  }
}

std::vector<double> physical_values(const std::vector<Objective>& objectives,
                                    const std::vector<double>& oriented) {
  if (objectives.size() != oriented.size())
    throw std::invalid_argument("objective list and value vector differ in length");
  std::vector<double> physical = oriented;
  for (std::size_t i = 0; i < objectives.size(); ++i)
    if (objectives[i] == Objective::j2) physical[i] = -physical[i];
  return physical;
}

pesa2::Problem make_problem(const TuningSetup& setup) {
  pesa2::Problem problem;
  problem.gene_count = setup.gene_count();
  problem.sentinel = setup.sentinel;
  problem.evaluate = [setup](const std::vector<double>& genes) {
    return evaluate_candidate(setup, genes);
  };
  return problem;
}

}  // namespace folqr::tuning
