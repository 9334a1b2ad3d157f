#include "folqr/io.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace folqr::io {

namespace {

// Collapse negative zero so serialized documents never distinguish -0.0 from 0.0.
double canonical(double value) { return value == 0.0 ? 0.0 : value; }

}  // namespace

std::string format_double(double value) {
  char buffer[64];
  const auto result = std::to_chars(buffer, buffer + sizeof(buffer), canonical(value));
  return std::string(buffer, result.ptr);
}

Json matrix_json(const Eigen::MatrixXd& m) {
  Json rows = Json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    Json row = Json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(canonical(m(i, j)));
    rows.push_back(std::move(row));
  }
  return rows;
}

Json vector_json(const Eigen::VectorXd& v) {
  Json values = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) values.push_back(canonical(v[i]));
  return values;
}

Json system_json(const model::PseudoStateSpace& ss) {
  Json doc;
  doc["A"] = matrix_json(ss.A);
  doc["B"] = matrix_json(ss.B);
  doc["C"] = matrix_json(ss.C);
  doc["orders"] = ss.orders;
  if (ss.base_order) {
    doc["base_order"] = {{"numerator", ss.base_order->num},
                         {"denominator", ss.base_order->den},
                         {"value", ss.base_order->value()}};
  } else {
    doc["base_order"] = nullptr;
  }
  return doc;
}

Json metrics_json(const simulate::StepMetrics& metrics) {
  Json doc;
  doc["itae"] = metrics.itae;
  doc["iae"] = metrics.iae;
  doc["isco"] = metrics.isco;
  doc["j1"] = metrics.j1;
  if (metrics.settling_time)
    doc["settling_time"] = *metrics.settling_time;
  else
    doc["settling_time"] = nullptr;
  doc["overshoot_percent"] = metrics.overshoot_percent;
  return doc;
}

Json lqr_json(const lqr::LqrSolution& solution, const lqr::StabilityVerdict& verdict) {
  Json doc;
  doc["p"] = matrix_json(solution.p);
  doc["k"] = vector_json(solution.k.transpose());
  doc["nbar"] = solution.nbar;
  doc["residual"] = solution.residual;
  doc["stability"] = {{"stable", verdict.stable},
                      {"margin_radians", verdict.margin},
                      {"conservative", verdict.conservative}};
  return doc;
}

void write_text_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out << content;
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

std::string step_csv(const simulate::SimulationRecord& record) {
  std::string csv = "t,y,u,e\n";
  for (std::size_t k = 0; k < record.times.size(); ++k) {
    csv += format_double(record.times[k]);
    csv += ',';
    csv += format_double(record.y[k]);
    csv += ',';
    csv += format_double(record.u[k]);
    csv += ',';
    csv += format_double(record.e[k]);
    csv += '\n';
  }
  return csv;
}

namespace {

// Members ordered by oriented objectives, then genes: a canonical order so
// identical archives always serialize identically.
std::vector<const pesa2::Individual*> sorted_members(const pesa2::ParetoArchive& archive) {
  std::vector<const pesa2::Individual*> members;
  members.reserve(archive.members().size());
  for (const auto& m : archive.members()) members.push_back(&m);
  std::sort(members.begin(), members.end(),
            [](const pesa2::Individual* a, const pesa2::Individual* b) {
              if (a->objectives != b->objectives) return a->objectives < b->objectives;
              return a->genes < b->genes;
            });
  return members;
}

Json objective_labels(const std::vector<tuning::Objective>& objectives) {
  Json labels = Json::array();
  for (const auto objective : objectives) labels.push_back(tuning::objective_label(objective));
  return labels;
}

}  // namespace

Json front_document(const std::string& system, const std::vector<tuning::Objective>& objectives,
                    std::uint64_t seed, const pesa2::ParetoArchive& archive) {
  Json doc;
  doc["system"] = system;
  doc["objectives"] = objective_labels(objectives);
  Json orientation;
  for (const auto objective : objectives)
    orientation[tuning::objective_label(objective)] =
        objective == tuning::Objective::j2 ? "max" : "min";
  doc["orientation"] = std::move(orientation);
  doc["seed"] = seed;

  Json members = Json::array();
  for (const auto* m : sorted_members(archive)) {
    const auto decoded = tuning::decode_genes(m->genes);
    const auto physical = tuning::physical_values(objectives, m->objectives);
    Json entry;
    entry["genes"] = m->genes;
    entry["q_diag"] = vector_json(decoded.q_diag);
    entry["r"] = decoded.r;
    Json values;
    for (std::size_t i = 0; i < objectives.size(); ++i)
      values[tuning::objective_label(objectives[i])] = physical[i];
    entry["values"] = std::move(values);
    entry["score"] = m->objectives;
    members.push_back(std::move(entry));
  }
  doc["members"] = std::move(members);
  return doc;
}

std::string front_csv(const std::vector<tuning::Objective>& objectives,
                      const pesa2::ParetoArchive& archive) {
  const auto members = sorted_members(archive);
  std::string csv;
  const std::size_t states = members.empty() ? 0 : members.front()->genes.size() - 1;
  for (std::size_t i = 1; i <= states; ++i) csv += "q" + std::to_string(i) + ",";
  csv += "r";
  for (const auto objective : objectives) csv += "," + tuning::objective_label(objective);
  csv += '\n';
  for (const auto* m : members) {
    const auto decoded = tuning::decode_genes(m->genes);
    for (Eigen::Index i = 0; i < decoded.q_diag.size(); ++i)
      csv += format_double(decoded.q_diag[i]) + ",";
    csv += format_double(decoded.r);
    for (const double v : tuning::physical_values(objectives, m->objectives))
      csv += "," + format_double(v);
    csv += '\n';
  }
  return csv;
}

std::string front_plot_csv(const std::vector<tuning::Objective>& objectives,
                           const pesa2::ParetoArchive& archive) {
  const auto members = sorted_members(archive);
  std::vector<std::vector<double>> physical;
  physical.reserve(members.size());
  for (const auto* m : members)
    physical.push_back(tuning::physical_values(objectives, m->objectives));

  std::vector<double> lo(objectives.size(), 0.0);
  std::vector<double> hi(objectives.size(), 0.0);
  for (std::size_t d = 0; d < objectives.size(); ++d) {
    for (std::size_t i = 0; i < physical.size(); ++i) {
      if (i == 0 || physical[i][d] < lo[d]) lo[d] = physical[i][d];
      if (i == 0 || physical[i][d] > hi[d]) hi[d] = physical[i][d];
    }
  }

  std::string csv;
  for (std::size_t d = 0; d < objectives.size(); ++d) {
    if (d) csv += ",";
    csv += tuning::objective_label(objectives[d]) + "_norm";
  }
  csv += '\n';
  for (const auto& row : physical) {
    for (std::size_t d = 0; d < objectives.size(); ++d) {
      const double span = hi[d] - lo[d];
      const double z = span > 0.0 ? (row[d] - lo[d]) / span : 0.0;
      if (d) csv += ",";
      csv += format_double(z);
    }
    csv += '\n';
  }
  return csv;
}

Json best_document(const std::string& system, const std::vector<tuning::Objective>& objectives,
                   std::uint64_t seed, const pesa2::Individual& best,
                   const simulate::SettlingMeasurement& settling) {
  Json doc;
  doc["system"] = system;
  doc["objectives"] = objective_labels(objectives);
  doc["seed"] = seed;
  doc["genes"] = best.genes;
  const auto decoded = tuning::decode_genes(best.genes);
  doc["q_diag"] = vector_json(decoded.q_diag);
  doc["r"] = decoded.r;
  Json values;
  const auto physical = tuning::physical_values(objectives, best.objectives);
  for (std::size_t i = 0; i < objectives.size(); ++i)
    values[tuning::objective_label(objectives[i])] = physical[i];
  doc["values"] = std::move(values);
  if (settling.settling_time)
    doc["settling_time"] = *settling.settling_time;
  else
    doc["settling_time"] = nullptr;
  doc["settling_horizon_used"] = settling.horizon_used;
  doc["final_output"] = settling.final_output;
  return doc;
}

std::vector<std::vector<double>> read_csv(const std::filesystem::path& path,
                                          std::vector<std::string>* header) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("empty CSV " + path.string());
  if (header) {
    header->clear();
    std::stringstream hs(line);
    std::string field;
    while (std::getline(hs, field, ',')) header->push_back(field);
  }
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    std::stringstream ls(line);
    std::string field;
    while (std::getline(ls, field, ',')) row.push_back(std::stod(field));
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace folqr::io
