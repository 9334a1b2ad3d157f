#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "folqr/lqr.hpp"
#include "folqr/model.hpp"
#include "folqr/pesa2.hpp"
#include "folqr/simulate.hpp"
#include "folqr/tuning.hpp"

namespace folqr::io {

// Field order in emitted JSON is fixed (insertion order), which together with
// shortest round-trip double formatting makes equal runs byte-identical.
using Json = nlohmann::ordered_json;

// Shortest decimal string that parses back to exactly the same double.
std::string format_double(double value);

Json matrix_json(const Eigen::MatrixXd& m);
Json vector_json(const Eigen::VectorXd& v);
Json system_json(const model::PseudoStateSpace& ss);
Json metrics_json(const simulate::StepMetrics& metrics);
Json lqr_json(const lqr::LqrSolution& solution, const lqr::StabilityVerdict& verdict);

void write_text_file(const std::filesystem::path& path, const std::string& content);

// Step-response trace with the fixed header `t,y,u,e`.
std::string step_csv(const simulate::SimulationRecord& record);

// Archive exports. Members are sorted by oriented objectives (then genes) so
// equal archives serialize identically regardless of internal history.
Json front_document(const std::string& system, const std::vector<tuning::Objective>& objectives,
                    std::uint64_t seed, const pesa2::ParetoArchive& archive);

// Linear-space weights plus physical objective values, one row per member:
// header q1..qN,r,<labels>.
std::string front_csv(const std::vector<tuning::Objective>& objectives,
                      const pesa2::ParetoArchive& archive);

// Per-objective min-max normalized physical values for plotting: header
// <label>_norm columns, rows aligned with front_csv.
std::string front_plot_csv(const std::vector<tuning::Objective>& objectives,
                           const pesa2::ParetoArchive& archive);

Json best_document(const std::string& system, const std::vector<tuning::Objective>& objectives,
                   std::uint64_t seed, const pesa2::Individual& best,
                   const simulate::SettlingMeasurement& settling);

// Minimal numeric CSV reader (used by the round-trip tests): first line is the
// header, every further line a row of doubles.
std::vector<std::vector<double>> read_csv(const std::filesystem::path& path,
                                          std::vector<std::string>* header = nullptr);

}  // namespace folqr::io
