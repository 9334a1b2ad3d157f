#include "folqr/reproduce.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "folqr/io.hpp"
#include "folqr/lqr.hpp"

namespace folqr::reproduce {

namespace {

using tuning::Objective;

Eigen::VectorXd make_vector(std::initializer_list<double> values) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(values.size()));
  Eigen::Index i = 0;
  for (const double x : values) v[i++] = x;
  return v;
}

ReferenceCase make_case_1() {
  ReferenceCase c;
  c.example = 1;
  c.preset_name = "example1_eq7";
  c.baseline_settling = 8.16;
  c.columns = {
      {"J1-J2", {Objective::j1, Objective::j2}, make_vector({0.5, 0.0001, 227.405}), 0.001, 3.72},
      {"J2-J3", {Objective::j2, Objective::j3}, make_vector({0.531, 0.0071, 267.037}), 0.00033,
       3.57},
      {"J1-J3", {Objective::j1, Objective::j3}, make_vector({0.500115, 0.0001006, 299.6071}),
       0.000301, 3.38},
      {"J1-J2-J3",
       {Objective::j1, Objective::j2, Objective::j3},
       make_vector({0.5, 0.01, 269.2675}),
       0.0001,
       3.71},
  };
  return c;
}

ReferenceCase make_case_2() {
  ReferenceCase c;
  c.example = 2;
  c.preset_name = "example2_eq9";
  c.baseline_settling = 9.22;
  c.columns = {
      {"J1-J2",
       {Objective::j1, Objective::j2},
       make_vector({1.001, 1.00056, 0.02999, 3.5011, 5.7959, 4.0}),
       0.002,
       3.72},
      {"J2-J3",
       {Objective::j2, Objective::j3},
       make_vector({1.0038, 1.00067, 0.02665, 4.0, 5.71401, 4.09789}),
       0.002,
       5.63},
      {"J1-J3",
       {Objective::j1, Objective::j3},
       make_vector({1.00106, 1.000571, 0.0292, 3.5989, 5.9993, 4.2492}),
       0.001431,
       5.58},
      {"J1-J2-J3",
       {Objective::j1, Objective::j2, Objective::j3},
       make_vector({1.004, 1.0007, 0.03, 3.5, 5.898, 4.25}),
       0.002,
       5.55},
  };
  return c;
}

std::string format_settling(const std::optional<double>& settling, double horizon_used) {
  if (settling) {
    std::ostringstream s;
    s << std::fixed << std::setprecision(3) << *settling;
    return s.str();
  }
  std::ostringstream s;
  s << ">" << std::fixed << std::setprecision(0) << horizon_used << " (cap)";
  return s.str();
}

}  // namespace

const ReferenceCase& reference_case(int example) {
  static const ReferenceCase case_1 = make_case_1();
  static const ReferenceCase case_2 = make_case_2();
  if (example == 1) return case_1;
  if (example == 2) return case_2;
  throw std::invalid_argument("example must be 1 or 2");
}

model::PseudoStateSpace integer_order_counterpart(const model::PseudoStateSpace& ss) {
  model::PseudoStateSpace counterpart = ss;
  std::fill(counterpart.orders.begin(), counterpart.orders.end(), 1.0);
  counterpart.base_order = Rational{1, 1};
  return counterpart;
}

simulate::SettlingMeasurement measure_design(const model::PseudoStateSpace& plant,
                                             const Eigen::VectorXd& q_diag, double r,
                                             const HarnessConfig& cfg) {
  const auto solution = lqr::design(plant, q_diag, r);
  return simulate::measure_settling_time(plant, solution.k, solution.nbar, 1.0, cfg.h, cfg.band,
                                         cfg.initial_horizon, cfg.max_horizon, cfg.extended_h);
}

OptimizationOutcome run_optimization(const model::PseudoStateSpace& plant,
                                     const std::vector<tuning::Objective>& objectives,
                                     const HarnessConfig& cfg) {
  tuning::TuningSetup setup;
  setup.plant = plant;
  setup.objectives = objectives;
  setup.time_domain.h = cfg.optimizer_h;
  setup.time_domain.band_fraction = cfg.band;
  setup.time_domain.memory =
      static_cast<std::size_t>(std::llround(cfg.optimizer_memory_seconds / cfg.optimizer_h));

  pesa2::PesaConfig pesa;
  pesa.internal_population = cfg.effective_population();
  pesa.generations = cfg.effective_generations();
  pesa.archive_capacity = cfg.archive_capacity;
  pesa.bounds.assign(setup.gene_count(), pesa2::GeneBounds{});
  pesa.seed = cfg.seed;
  pesa.threads = cfg.threads;

  OptimizationOutcome outcome;
  outcome.archive = pesa2::optimize(tuning::make_problem(setup), pesa);
  outcome.best = pesa2::best_compromise(outcome.archive);

  const auto decoded = tuning::decode_genes(outcome.best.genes);
  outcome.settling = measure_design(plant, decoded.q_diag, decoded.r, cfg);
  return outcome;
}

HarnessResult run_example(int example, const HarnessConfig& cfg, bool run_phase_b,
                          const ProgressFn& progress) {
  const auto& reference = reference_case(example);
  const auto plant = model::preset(reference.preset_name);
  const auto counterpart = integer_order_counterpart(plant);
  const auto report = [&](const std::string& line) {
    if (progress) progress(line);
  };

  HarnessResult result;
  result.example = example;

  // Baseline: identity weights.
  const Eigen::VectorXd q_identity = Eigen::VectorXd::Ones(plant.state_count());
  report("measuring baseline (Q=I, R=I) ...");
  const auto baseline_meas = measure_design(plant, q_identity, 1.0, cfg);
  const auto baseline_int = measure_design(counterpart, q_identity, 1.0, cfg);

  result.baseline.phase = "baseline";
  result.baseline.label = "Q=I,R=I";
  result.baseline.q_diag = q_identity;
  result.baseline.r = 1.0;
  result.baseline.reference_settling = reference.baseline_settling;
  result.baseline.measured_settling = baseline_meas.settling_time;
  result.baseline.horizon_used = baseline_meas.horizon_used;
  result.baseline.final_output = baseline_meas.final_output;
  result.baseline.integer_order_settling = baseline_int.settling_time;
  result.baseline.within_tolerance =
      baseline_meas.settling_time &&
      std::abs(*baseline_meas.settling_time - reference.baseline_settling) <=
          0.15 * reference.baseline_settling;
  result.baseline_pass = result.baseline.within_tolerance;

  if (baseline_meas.settling_time) {
    result.baseline_effective = *baseline_meas.settling_time;
  } else {
    // Conservative stand-in: the true settling time is at least the cap, so
    // any "below X% of baseline" verdict built on it remains sound.
    result.baseline_effective = baseline_meas.horizon_used;
    result.baseline_is_lower_bound = true;
    result.baseline.note = "never settled within the horizon cap; cap used as lower bound";
  }
  report("baseline measured: fractional " +
         format_settling(baseline_meas.settling_time, baseline_meas.horizon_used) +
         " s, integer-order counterpart " +
         format_settling(baseline_int.settling_time, baseline_int.horizon_used) + " s");

  // Phase A: tabled designs through the evaluator.
  for (const auto& column : reference.columns) {
    report("phase A: evaluating reference design " + column.label + " ...");
    RowResult row;
    row.phase = "A";
    row.label = column.label;
    row.q_diag = column.q_diag;
    row.r = column.r;
    row.reference_settling = column.reference_settling;
    try {
      const auto meas = measure_design(plant, column.q_diag, column.r, cfg);
      const auto meas_int = measure_design(counterpart, column.q_diag, column.r, cfg);
      row.measured_settling = meas.settling_time;
      row.horizon_used = meas.horizon_used;
      row.final_output = meas.final_output;
      row.integer_order_settling = meas_int.settling_time;
      row.within_tolerance =
          meas.settling_time && std::abs(*meas.settling_time - column.reference_settling) <=
                                    0.20 * column.reference_settling;
      row.below_fraction =
          meas.settling_time && *meas.settling_time < 0.60 * result.baseline_effective;
    } catch (const std::exception& error) {
      row.note = error.what();
    }
    result.phase_a.push_back(std::move(row));
  }

  const bool all_within = std::all_of(result.phase_a.begin(), result.phase_a.end(),
                                      [](const RowResult& r) { return r.within_tolerance; });
  const bool all_below = std::all_of(result.phase_a.begin(), result.phase_a.end(),
                                     [](const RowResult& r) { return r.below_fraction; });
  result.phase_a_pass = all_within || all_below;
  result.phase_a_path = all_within ? "tolerance" : (all_below ? "fallback" : "failed");

  // Phase B: fresh optimization runs per objective subset.
  if (run_phase_b) {
    for (const auto& column : reference.columns) {
      report("phase B: optimizing subset " + column.label + " (population " +
             std::to_string(cfg.effective_population()) + ", generations " +
             std::to_string(cfg.effective_generations()) + ") ...");
      RowResult row;
      row.phase = "B";
      row.label = column.label;
      row.reference_settling = column.reference_settling;
      try {
        const auto outcome = run_optimization(plant, column.objectives, cfg);
        const auto decoded = tuning::decode_genes(outcome.best.genes);
        row.q_diag = decoded.q_diag;
        row.r = decoded.r;
        row.measured_settling = outcome.settling.settling_time;
        row.horizon_used = outcome.settling.horizon_used;
        row.final_output = outcome.settling.final_output;
        row.within_tolerance =
            outcome.settling.settling_time &&
            std::abs(*outcome.settling.settling_time - column.reference_settling) <=
                0.20 * column.reference_settling;
        row.below_fraction = outcome.settling.settling_time &&
                             *outcome.settling.settling_time <= 0.55 * result.baseline_effective;
      } catch (const std::exception& error) {
        row.note = error.what();
      }
      report("phase B: " + row.label + " best compromise settles at " +
             format_settling(row.measured_settling, row.horizon_used) + " s");
      result.phase_b.push_back(std::move(row));
    }
    result.phase_b_pass = !result.phase_b.empty() &&
                          std::all_of(result.phase_b.begin(), result.phase_b.end(),
                                      [](const RowResult& r) { return r.below_fraction; });
  }
  return result;
}

namespace {

void append_row_text(std::ostringstream& out, const RowResult& row, double baseline_effective,
                     const char* fraction_label) {
  out << "  " << std::left << std::setw(10) << row.label << std::right << std::setw(10)
      << std::fixed << std::setprecision(2) << row.reference_settling << std::setw(16)
      << format_settling(row.measured_settling, row.horizon_used);
  if (row.integer_order_settling)
    out << std::setw(14) << std::fixed << std::setprecision(3) << *row.integer_order_settling;
  else
    out << std::setw(14) << "-";
  if (row.measured_settling && baseline_effective > 0.0)
    out << std::setw(12) << std::fixed << std::setprecision(3)
        << (*row.measured_settling / baseline_effective);
  else
    out << std::setw(12) << "-";
  out << std::setw(8) << (row.within_tolerance ? "yes" : "no") << std::setw(10)
      << (row.below_fraction ? "yes" : "no") << "  " << fraction_label;
  if (!row.note.empty()) out << "  [" << row.note << "]";
  out << '\n';
}

}  // namespace

std::string render_text(const HarnessResult& result) {
  std::ostringstream out;
  out << "=== Example " << result.example << " ===\n";
  out << "Baseline Q=I, R=I: reference " << std::fixed << std::setprecision(2)
      << result.baseline.reference_settling << " s, measured "
      << format_settling(result.baseline.measured_settling, result.baseline.horizon_used)
      << " s (fractional simulation; final output " << std::setprecision(4)
      << result.baseline.final_output << ")";
  if (result.baseline.integer_order_settling)
    out << ", integer-order counterpart " << std::setprecision(3)
        << *result.baseline.integer_order_settling << " s";
  out << "\n  within +-15%: " << (result.baseline_pass ? "yes" : "NO");
  if (result.baseline_is_lower_bound)
    out << "  (never settled within " << std::setprecision(0) << result.baseline.horizon_used
        << " s; that cap serves as a lower bound for the ratios below)";
  out << "\n\n";

  out << "Phase A (tabled designs):\n";
  out << "  " << std::left << std::setw(10) << "subset" << std::right << std::setw(10) << "ref(s)"
      << std::setw(16) << "measured(s)" << std::setw(14) << "integer(s)" << std::setw(12)
      << "ratio" << std::setw(8) << "+-20%" << std::setw(10) << "<60%" << '\n';
  for (const auto& row : result.phase_a)
    append_row_text(out, row, result.baseline_effective, "");
  out << "  phase A verdict: " << (result.phase_a_pass ? "PASS" : "FAIL") << " (path: "
      << result.phase_a_path << ")\n";

  if (!result.phase_b.empty()) {
    out << "\nPhase B (fresh optimization runs):\n";
    out << "  " << std::left << std::setw(10) << "subset" << std::right << std::setw(10)
        << "ref(s)" << std::setw(16) << "measured(s)" << std::setw(14) << "integer(s)"
        << std::setw(12) << "ratio" << std::setw(8) << "+-20%" << std::setw(10) << "<=55%"
        << '\n';
    for (const auto& row : result.phase_b)
      append_row_text(out, row, result.baseline_effective, "");
    out << "  phase B verdict: " << (result.phase_b_pass ? "PASS" : "FAIL") << '\n';
  }
  return out.str();
}

std::string render_csv(const HarnessResult& result) {
  std::string csv =
      "phase,label,reference_s,measured_s,horizon_used_s,final_output,integer_order_s,"
      "ratio_to_baseline,within_tolerance,below_fraction\n";
  const auto append = [&](const RowResult& row) {
    csv += row.phase + "," + row.label + ",";
    csv += io::format_double(row.reference_settling) + ",";
    csv += io::format_double(row.measured_settling ? *row.measured_settling
                                                   : std::numeric_limits<double>::quiet_NaN()) +
           ",";
    csv += io::format_double(row.horizon_used) + ",";
    csv += io::format_double(row.final_output) + ",";
    csv += io::format_double(row.integer_order_settling
                                 ? *row.integer_order_settling
                                 : std::numeric_limits<double>::quiet_NaN()) +
           ",";
    csv += io::format_double(row.measured_settling && result.baseline_effective > 0.0
                                 ? *row.measured_settling / result.baseline_effective
                                 : std::numeric_limits<double>::quiet_NaN()) +
           ",";
    csv += std::string(row.within_tolerance ? "1" : "0") + ",";
    csv += std::string(row.below_fraction ? "1" : "0") + "\n";
  };
  append(result.baseline);
  for (const auto& row : result.phase_a) append(row);
  for (const auto& row : result.phase_b) append(row);
  return csv;
}

}  // namespace folqr::reproduce
