// Command-line front end: convert transfer functions, simulate closed loops,
// design LQR gains, evaluate the three objectives, run the multi-objective
// optimizer, and verify the built-in reference designs.

#include <atomic>
#include <csignal>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "folqr/io.hpp"
#include "folqr/lqr.hpp"
#include "folqr/model.hpp"
#include "folqr/pesa2.hpp"
#include "folqr/reproduce.hpp"
#include "folqr/simulate.hpp"
#include "folqr/tuning.hpp"

namespace {

namespace fs = std::filesystem;
using folqr::io::Json;

std::atomic<bool> g_interrupted{false};

void handle_interrupt(int) { g_interrupted.store(true); }

// Everything every subcommand might need; flags and the JSON config document
// both write into this one structure (explicit flags win).
struct Options {
  std::string system = "example1_eq7";  // preset name or transfer-function text
  std::string form = "bottom_row";
  bool force_chain = false;

  std::string objectives = "j1,j2,j3";
  std::vector<double> q_diag;
  double r = 1.0;
  bool open_loop = false;

  double h = 1e-3;
  double horizon = 20.0;
  double band = 0.02;
  double s1 = 1.0;
  double s2 = 1.0;
  bool itae = true;
  std::optional<std::size_t> memory;
  std::string perturb_tf;  // series perturbation for time-domain runs
  bool perturb_at_output = false;

  double omega_min = 1e-3;
  double omega_max = 1e3;
  std::size_t omega_points = 100;
  std::string mode = "fractional";
  std::string l_source = "return_ratio";  // or a transfer-function text
  bool l_at_output = false;

  std::size_t population = 200;
  std::size_t generations = 250;
  std::size_t capacity = 100;
  std::size_t divisions = 10;
  double crossover = 0.7;
  double mutation_scale = 0.1;
  double gene_lo = -4.0;
  double gene_hi = 3.0;
  std::size_t threads = 0;
  double optimizer_h = 1e-2;
  double optimizer_memory_seconds = 10.0;
  double max_horizon = 160.0;
  double extended_h = 1e-2;

  std::string output_dir;
  std::uint64_t seed = 1;
  bool ci = false;
  int example = 1;
  std::string phase = "both";
  std::string step_csv = "step_response.csv";
};

fs::path resolve_output_dir(const Options& opt) {
  if (!opt.output_dir.empty()) return opt.output_dir;
  if (const char* env = std::getenv("FOLQR_OUTPUT_DIR"); env && *env) return env;
  return ".";
}

folqr::model::PseudoStateSpace load_system(const Options& opt) {
  // Preset names win; anything else is parsed as a transfer function.
  try {
    return folqr::model::preset(opt.system);
  } catch (const std::invalid_argument&) {
  }
  const auto tf = folqr::model::parse_fractional_tf(opt.system);
  const auto form = opt.form == "top_row" ? folqr::model::CompanionForm::top_row
                                          : folqr::model::CompanionForm::bottom_row;
  return folqr::model::to_pseudo_state_space(tf, form, opt.force_chain);
}

folqr::model::ResolventMode resolve_mode(const Options& opt) {
  if (opt.mode == "fractional") return folqr::model::ResolventMode::fractional;
  if (opt.mode == "literal") return folqr::model::ResolventMode::literal;
  throw std::invalid_argument("mode must be 'fractional' or 'literal'");
}

folqr::freqdom::PerturbationSpec resolve_l_source(const Options& opt) {
  if (opt.l_source == "return_ratio") return folqr::freqdom::PerturbationSpec::return_ratio();
  return folqr::freqdom::PerturbationSpec::external(
      folqr::model::parse_fractional_tf(opt.l_source), opt.l_at_output);
}

Eigen::VectorXd resolve_q(const Options& opt, Eigen::Index states) {
  if (opt.q_diag.empty()) return Eigen::VectorXd::Ones(states);
  if (static_cast<Eigen::Index>(opt.q_diag.size()) != states)
    throw std::invalid_argument("--q needs exactly " + std::to_string(states) + " entries");
  return Eigen::Map<const Eigen::VectorXd>(opt.q_diag.data(),
                                           static_cast<Eigen::Index>(opt.q_diag.size()));
}

folqr::simulate::J1Config j1_config(const Options& opt) {
  folqr::simulate::J1Config cfg;
  cfg.s1 = opt.s1;
  cfg.s2 = opt.s2;
  cfg.h = opt.h;
  cfg.horizon = opt.horizon;
  cfg.band_fraction = opt.band;
  cfg.use_time_weight = opt.itae;
  cfg.memory = opt.memory;
  if (!opt.perturb_tf.empty())
    cfg.perturbation = folqr::freqdom::PerturbationSpec::external(
        folqr::model::parse_fractional_tf(opt.perturb_tf), opt.perturb_at_output);
  return cfg;
}

folqr::reproduce::HarnessConfig harness_config(const Options& opt) {
  folqr::reproduce::HarnessConfig cfg;
  cfg.h = opt.h;
  cfg.band = opt.band;
  cfg.initial_horizon = opt.horizon;
  cfg.max_horizon = opt.max_horizon;
  cfg.extended_h = opt.extended_h;
  cfg.optimizer_h = opt.optimizer_h;
  cfg.optimizer_memory_seconds = opt.optimizer_memory_seconds;
  cfg.population = opt.population;
  cfg.generations = opt.generations;
  cfg.archive_capacity = opt.capacity;
  cfg.seed = opt.seed;
  cfg.threads = opt.threads;
  cfg.ci_scale = opt.ci;
  return cfg;
}

void print_json(const Json& doc) { std::cout << doc.dump(2) << '\n'; }

int run_convert(const Options& opt) {
  const auto ss = load_system(opt);
  print_json(folqr::io::system_json(ss));
  return 0;
}

int run_lqr(const Options& opt) {
  const auto ss = load_system(opt);
  const auto q = resolve_q(opt, ss.state_count());
  const auto solution = folqr::lqr::design(ss, q, opt.r);
  const Eigen::MatrixXd a_closed = ss.A - ss.B * solution.k;
  const auto verdict = folqr::lqr::fractional_stability(a_closed, ss.base_order, ss.orders);
  print_json(folqr::io::lqr_json(solution, verdict));
  return 0;
}

int run_simulate(const Options& opt) {
  const auto ss = load_system(opt);
  std::optional<Eigen::RowVectorXd> gain;
  double nbar = 1.0;
  if (!opt.open_loop) {
    const auto q = resolve_q(opt, ss.state_count());
    const auto solution = folqr::lqr::design(ss, q, opt.r);
    gain = solution.k;
    nbar = solution.nbar;
  }
  const auto cfg = j1_config(opt);
  const auto record = folqr::simulate::simulate_closed_loop(
      ss, gain, nbar, 1.0, cfg.h, cfg.horizon, cfg.memory, cfg.perturbation);
  const auto metrics =
      folqr::simulate::step_metrics(record, cfg.band_fraction, cfg.s1, cfg.s2, cfg.use_time_weight);

  const fs::path dir = resolve_output_dir(opt);
  fs::create_directories(dir);
  const fs::path csv_path = dir / opt.step_csv;
  folqr::io::write_text_file(csv_path, folqr::io::step_csv(record));

  Json doc = folqr::io::metrics_json(metrics);
  doc["step_csv"] = csv_path.string();
  doc["samples"] = record.times.size();
  print_json(doc);
  return 0;
}

int run_objectives(const Options& opt) {
  const auto ss = load_system(opt);
  const auto q = resolve_q(opt, ss.state_count());
  const auto solution = folqr::lqr::design(ss, q, opt.r);
  const auto mode = resolve_mode(opt);
  const auto grid =
      folqr::freqdom::FrequencyGrid::log_spaced(opt.omega_min, opt.omega_max, opt.omega_points);
  const auto cfg = j1_config(opt);

  const auto record = folqr::simulate::simulate_closed_loop(
      ss, solution.k, solution.nbar, 1.0, cfg.h, cfg.horizon, cfg.memory, cfg.perturbation);
  const auto metrics =
      folqr::simulate::step_metrics(record, cfg.band_fraction, cfg.s1, cfg.s2, cfg.use_time_weight);

  Eigen::VectorXd r_diag(1);
  r_diag[0] = opt.r;
  const double j2 = folqr::freqdom::objective_j2(ss, q, r_diag, grid, mode);
  const double j3 =
      folqr::freqdom::objective_j3(ss, solution.k, resolve_l_source(opt), grid, mode);

  // The configured horizon may be too short for slow fractional tails; report
  // the extended-horizon measurement alongside the plain-window one.
  const auto extended = folqr::simulate::measure_settling_time(
      ss, solution.k, solution.nbar, 1.0, opt.h, opt.band, opt.horizon, opt.max_horizon,
      opt.extended_h);

  const fs::path dir = resolve_output_dir(opt);
  fs::create_directories(dir);
  const fs::path csv_path = dir / opt.step_csv;
  folqr::io::write_text_file(csv_path, folqr::io::step_csv(record));

  Json doc;
  doc["J1"] = metrics.j1;
  doc["J2"] = j2;
  doc["J3"] = j3;
  doc["itae"] = metrics.itae;
  doc["isco"] = metrics.isco;
  if (metrics.settling_time)
    doc["settling_time"] = *metrics.settling_time;
  else
    doc["settling_time"] = nullptr;
  if (extended.settling_time)
    doc["settling_time_extended"] = *extended.settling_time;
  else
    doc["settling_time_extended"] = nullptr;
  doc["settling_horizon_extended"] = extended.horizon_used;
  doc["overshoot_percent"] = metrics.overshoot_percent;
  doc["grid"] = {{"omega_min", opt.omega_min},
                 {"omega_max", opt.omega_max},
                 {"points", opt.omega_points}};
  doc["mode"] = opt.mode;
  doc["step_csv"] = csv_path.string();
  print_json(doc);
  return 0;
}

int run_optimize(const Options& opt) {
  const auto ss = load_system(opt);
  const auto objectives = folqr::tuning::parse_objectives(opt.objectives);
  const auto mode = resolve_mode(opt);

  folqr::tuning::TuningSetup setup;
  setup.plant = ss;
  setup.objectives = objectives;
  setup.time_domain = j1_config(opt);
  setup.time_domain.h = opt.optimizer_h;
  if (!setup.time_domain.memory && opt.optimizer_memory_seconds > 0.0)
    setup.time_domain.memory =
        static_cast<std::size_t>(std::llround(opt.optimizer_memory_seconds / opt.optimizer_h));
  setup.grid =
      folqr::freqdom::FrequencyGrid::log_spaced(opt.omega_min, opt.omega_max, opt.omega_points);
  setup.mode = mode;
  setup.perturbation = resolve_l_source(opt);

  folqr::pesa2::PesaConfig pesa;
  pesa.internal_population = opt.ci ? 60 : opt.population;
  pesa.generations = opt.ci ? 80 : opt.generations;
  pesa.archive_capacity = opt.capacity;
  pesa.grid_divisions = opt.divisions;
  pesa.crossover_probability = opt.crossover;
  pesa.mutation_scale = opt.mutation_scale;
  pesa.bounds.assign(setup.gene_count(), {opt.gene_lo, opt.gene_hi});
  pesa.seed = opt.seed;
  pesa.threads = opt.threads;

  const fs::path dir = resolve_output_dir(opt);
  fs::create_directories(dir);

  const auto write_front = [&](const folqr::pesa2::ParetoArchive& archive) {
    folqr::io::write_text_file(
        dir / "front.json",
        folqr::io::front_document(opt.system, objectives, opt.seed, archive).dump(2) + "\n");
    folqr::io::write_text_file(dir / "front.csv", folqr::io::front_csv(objectives, archive));
    folqr::io::write_text_file(dir / "front_plot.csv",
                               folqr::io::front_plot_csv(objectives, archive));
  };

  std::signal(SIGINT, handle_interrupt);
  std::cerr << "optimizing " << opt.system << " over " << folqr::tuning::subset_label(objectives)
            << " (population " << pesa.internal_population << ", generations "
            << pesa.generations << ", seed " << opt.seed << ") ...\n";

  const auto archive = folqr::pesa2::optimize(
      folqr::tuning::make_problem(setup), pesa,
      [&](std::size_t generation, const folqr::pesa2::ParetoArchive& current) {
        if (g_interrupted.load()) {
          // Flush whatever the archive holds so an aborted run is not lost.
          write_front(current);
          std::cerr << "interrupted at generation " << generation
                    << "; partial archive flushed to " << dir.string() << '\n';
          std::exit(130);
        }
      });

  write_front(archive);

  const auto& best = folqr::pesa2::best_compromise(archive);
  const auto decoded = folqr::tuning::decode_genes(best.genes);
  const auto solution = folqr::lqr::design(ss, decoded.q_diag, decoded.r);
  const auto settling = folqr::simulate::measure_settling_time(
      ss, solution.k, solution.nbar, 1.0, opt.h, opt.band, opt.horizon, opt.max_horizon,
      opt.extended_h);
  const auto best_doc = folqr::io::best_document(opt.system, objectives, opt.seed, best, settling);
  folqr::io::write_text_file(dir / "best.json", best_doc.dump(2) + "\n");

  Json summary = best_doc;
  summary["archive_size"] = archive.members().size();
  summary["outputs"] = {(dir / "front.json").string(), (dir / "front.csv").string(),
                        (dir / "front_plot.csv").string(), (dir / "best.json").string()};
  print_json(summary);
  return 0;
}

int run_reproduce(const Options& opt) {
  const bool phase_b = opt.phase == "b" || opt.phase == "both";
  const bool phase_a_only_requested = opt.phase == "a";
  if (!phase_b && !phase_a_only_requested && opt.phase != "both")
    throw std::invalid_argument("--phase must be a, b, or both");

  const auto cfg = harness_config(opt);
  const auto result = folqr::reproduce::run_example(
      opt.example, cfg, phase_b, [](const std::string& line) { std::cerr << line << '\n'; });

  const std::string text = folqr::reproduce::render_text(result);
  std::cout << text;

  const fs::path dir = resolve_output_dir(opt);
  fs::create_directories(dir);
  const fs::path csv_path =
      dir / ("reproduce_example" + std::to_string(opt.example) + ".csv");
  folqr::io::write_text_file(csv_path, folqr::reproduce::render_csv(result));
  std::cout << "CSV written to " << csv_path.string() << '\n';

  bool pass = result.baseline_pass && result.phase_a_pass;
  if (phase_b) pass = pass && result.phase_b_pass;
  return pass ? 0 : 1;
}

void apply_config_file(const CLI::App& app, Options& opt, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file " + path);
  Json doc = Json::parse(in);

  // A flag given on the command line always beats the config document.
  const auto overridden = [&](const std::string& flag) {
    const auto* option = app.get_option_no_throw(flag);
    return option != nullptr && option->count() > 0;
  };
  const auto load = [&](const char* key, const char* flag, auto& field) {
    if (doc.contains(key) && !overridden(flag)) field = doc.at(key).get<std::decay_t<decltype(field)>>();
  };

  load("system", "--system", opt.system);
  load("form", "--form", opt.form);
  load("force_chain", "--force-chain", opt.force_chain);
  load("objectives", "--objectives", opt.objectives);
  load("q", "--q", opt.q_diag);
  load("r", "--r", opt.r);
  load("h", "--step", opt.h);
  load("horizon", "--horizon", opt.horizon);
  load("band", "--band", opt.band);
  load("s1", "--s1", opt.s1);
  load("s2", "--s2", opt.s2);
  load("itae", "--itae", opt.itae);
  load("perturb_tf", "--perturb-tf", opt.perturb_tf);
  load("perturb_at_output", "--perturb-at-output", opt.perturb_at_output);
  load("omega_min", "--omega-min", opt.omega_min);
  load("omega_max", "--omega-max", opt.omega_max);
  load("omega_points", "--omega-points", opt.omega_points);
  load("mode", "--mode", opt.mode);
  load("l_source", "--l-source", opt.l_source);
  load("l_at_output", "--l-at-output", opt.l_at_output);
  load("population", "--population", opt.population);
  load("generations", "--generations", opt.generations);
  load("capacity", "--capacity", opt.capacity);
  load("divisions", "--divisions", opt.divisions);
  load("crossover", "--crossover", opt.crossover);
  load("mutation_scale", "--mutation-scale", opt.mutation_scale);
  load("gene_lo", "--gene-lo", opt.gene_lo);
  load("gene_hi", "--gene-hi", opt.gene_hi);
  load("threads", "--threads", opt.threads);
  load("optimizer_h", "--optimizer-h", opt.optimizer_h);
  load("optimizer_memory_seconds", "--optimizer-memory", opt.optimizer_memory_seconds);
  load("max_horizon", "--max-horizon", opt.max_horizon);
  load("extended_step", "--extended-step", opt.extended_h);
  load("output_dir", "--out-dir", opt.output_dir);
  load("seed", "--seed", opt.seed);
  load("ci", "--ci", opt.ci);
  load("example", "--example", opt.example);
  load("phase", "--phase", opt.phase);
  load("step_csv", "--step-csv", opt.step_csv);
  if (doc.contains("memory") && !overridden("--memory")) {
    if (doc.at("memory").is_null())
      opt.memory.reset();
    else
      opt.memory = doc.at("memory").get<std::size_t>();
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"LQR design for fractional-order systems with multi-objective weight selection"};
  app.require_subcommand(1);

  Options opt;
  std::string config_path;
  std::size_t memory_flag = 0;

  const auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "JSON configuration file");
    sub->add_option("--system", opt.system, "preset name or transfer-function text");
    sub->add_option("--out-dir", opt.output_dir,
                    "output directory (default $FOLQR_OUTPUT_DIR or '.')");
    sub->add_option("--seed", opt.seed, "random seed");
  };
  const auto add_sim = [&](CLI::App* sub) {
    sub->add_option("--step", opt.h, "simulation step (s)");
    sub->add_option("--horizon", opt.horizon, "simulation horizon (s)");
    sub->add_option("--band", opt.band, "settling band fraction");
    sub->add_option("--s1", opt.s1, "error-index weight");
    sub->add_option("--s2", opt.s2, "control-effort weight");
    sub->add_option("--itae", opt.itae, "time-weighted error index (true) or plain IAE");
    sub->add_option("--memory", memory_flag, "history truncation (samples, 0 = unbounded)")
        ->expected(1);
    sub->add_option("--perturb-tf", opt.perturb_tf, "series perturbation transfer function");
    sub->add_flag("--perturb-at-output", opt.perturb_at_output,
                  "insert the perturbation at the plant output");
    sub->add_option("--max-horizon", opt.max_horizon, "settling-search horizon cap (s)");
    sub->add_option("--extended-step", opt.extended_h,
                    "step size (s) for extended settling runs");
    sub->add_option("--step-csv", opt.step_csv, "step-response CSV file name");
  };
  const auto add_freq = [&](CLI::App* sub) {
    sub->add_option("--omega-min", opt.omega_min, "frequency grid lower bound (rad/s)");
    sub->add_option("--omega-max", opt.omega_max, "frequency grid upper bound (rad/s)");
    sub->add_option("--omega-points", opt.omega_points, "frequency grid size");
    sub->add_option("--mode", opt.mode, "resolvent mode: fractional or literal");
    sub->add_option("--l-source", opt.l_source,
                    "perturbation source: return_ratio or a transfer-function text");
    sub->add_flag("--l-at-output", opt.l_at_output, "external perturbation at the plant output");
  };
  const auto add_weights = [&](CLI::App* sub) {
    sub->add_option("--q", opt.q_diag, "state weight diagonal, comma separated (defaults to identity)")
        ->delimiter(',');
    sub->add_option("--r", opt.r, "input weight (scalar)");
  };

  auto* convert = app.add_subcommand("convert", "realize a transfer function in companion form");
  convert->add_option("--form", opt.form, "companion form: bottom_row or top_row");
  convert->add_flag("--force-chain", opt.force_chain,
                    "skip commensurate detection and use the implicit-order chain");
  add_common(convert);

  auto* simulate = app.add_subcommand("simulate", "step-response simulation, CSV + metrics");
  add_common(simulate);
  add_weights(simulate);
  add_sim(simulate);
  simulate->add_flag("--open-loop", opt.open_loop, "simulate without state feedback");

  auto* lqr_cmd = app.add_subcommand("lqr", "Riccati solve: prints P, K, nbar, stability");
  add_common(lqr_cmd);
  add_weights(lqr_cmd);

  auto* objectives = app.add_subcommand("objectives", "evaluate J1, J2, J3 for given weights");
  objectives->alias("evaluate");
  add_common(objectives);
  add_weights(objectives);
  add_sim(objectives);
  add_freq(objectives);

  auto* optimize = app.add_subcommand("optimize", "PESA-II search over Q and R");
  add_common(optimize);
  add_sim(optimize);
  add_freq(optimize);
  optimize->add_option("--objectives", opt.objectives, "objective subset, e.g. j1,j2,j3");
  optimize->add_option("--population", opt.population, "internal population");
  optimize->add_option("--generations", opt.generations, "generation count");
  optimize->add_option("--capacity", opt.capacity, "archive capacity");
  optimize->add_option("--divisions", opt.divisions, "hypergrid divisions per objective");
  optimize->add_option("--crossover", opt.crossover, "crossover probability");
  optimize->add_option("--mutation-scale", opt.mutation_scale, "mutation sigma (decades)");
  optimize->add_option("--gene-lo", opt.gene_lo, "lower gene bound (log10)");
  optimize->add_option("--gene-hi", opt.gene_hi, "upper gene bound (log10)");
  optimize->add_option("--threads", opt.threads, "evaluation threads (0 = hardware)");
  optimize->add_option("--optimizer-h", opt.optimizer_h, "J1 step inside the optimizer (s)");
  optimize->add_option("--optimizer-memory", opt.optimizer_memory_seconds,
                       "J1 history window inside the optimizer (s)");
  optimize->add_flag("--ci", opt.ci, "reduced scale: population 60, generations 80");

  auto* reproduce = app.add_subcommand("reproduce", "verify the built-in reference designs");
  add_common(reproduce);
  reproduce->add_option("--example", opt.example, "reference case: 1 or 2");
  reproduce->add_option("--phase", opt.phase, "a (tabled designs), b (optimization), or both");
  reproduce->add_option("--step", opt.h, "simulation step (s)");
  reproduce->add_option("--band", opt.band, "settling band fraction");
  reproduce->add_option("--horizon", opt.horizon, "initial settling horizon (s)");
  reproduce->add_option("--max-horizon", opt.max_horizon, "settling-search horizon cap (s)");
  reproduce->add_option("--population", opt.population, "internal population (phase b)");
  reproduce->add_option("--generations", opt.generations, "generation count (phase b)");
  reproduce->add_option("--optimizer-h", opt.optimizer_h, "J1 step inside the optimizer (s)");
  reproduce->add_flag("--ci", opt.ci, "reduced scale: population 60, generations 80");

  CLI11_PARSE(app, argc, argv);

  try {
    CLI::App* sub = app.get_subcommands().front();
    const auto given = [&](const std::string& flag) {
      const auto* option = sub->get_option_no_throw(flag);
      return option != nullptr && option->count() > 0;
    };
    if (given("--config")) apply_config_file(*sub, opt, config_path);
    if (given("--memory")) {
      if (memory_flag == 0)
        opt.memory.reset();
      else
        opt.memory = memory_flag;
    }

    if (sub == convert) return run_convert(opt);
    if (sub == simulate) return run_simulate(opt);
    if (sub == lqr_cmd) return run_lqr(opt);
    if (sub == objectives) return run_objectives(opt);
    if (sub == optimize) return run_optimize(opt);
    if (sub == reproduce) return run_reproduce(opt);
    throw std::logic_error("unhandled subcommand");
  } catch (const folqr::ParseError& error) {
    std::cerr << "parse error: " << error.what() << '\n';
    return 1;
  } catch (const std::exception& error) {
    std::cerr << "error: " << error.what() << '\n';
    return 1;
  }
}
