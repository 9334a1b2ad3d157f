#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <random>
#include <vector>

namespace folqr::pesa2 {

// Deterministic random helpers layered over a fixed-width engine. All
// distributions are hand-rolled from the raw 64-bit stream so that a given
// seed yields the same candidate sequence on every platform.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  // Uniform integer in [0, n); n must be positive.
  std::size_t uniform_index(std::size_t n) {
    const auto i = static_cast<std::size_t>(uniform01() * static_cast<double>(n));
    return i < n ? i : n - 1;
  }

  bool coin(double p_true) { return uniform01() < p_true; }

  // Standard normal via the Box-Muller transform (pairs cached).
  double gaussian();

 private:
  std::mt19937_64 engine_;
  std::optional<double> cached_;
};

// One candidate: genes in log10 space, objectives in minimization orientation.
struct Individual {
  std::vector<double> genes;
  std::vector<double> objectives;
};

struct GeneBounds {
  double lo = -4.0;
  double hi = 3.0;
};

struct PesaConfig {
  std::size_t internal_population = 200;
  std::size_t archive_capacity = 100;
  std::size_t generations = 250;
  double crossover_probability = 0.7;  // k: crossover vs single-parent mutation
  std::size_t grid_divisions = 10;     // per objective dimension
  std::vector<GeneBounds> bounds;      // per gene; resized to the problem when empty
  double mutation_scale = 0.1;         // Gaussian sigma in gene (decade) units
  std::uint64_t seed = 1;
  std::size_t threads = 0;             // 0 = hardware concurrency

  void validate() const;
};

// true iff a <= b componentwise with strict improvement somewhere (minimization).
bool dominates(const std::vector<double>& a, const std::vector<double>& b);

// Adaptive hypergrid over objective space: bounds are the current archive
// min/max per dimension, recomputed on every archive change.
struct HyperGrid {
  std::vector<double> lo;
  std::vector<double> hi;
  std::size_t divisions = 10;

  // Per-dimension cell index floor(divisions*(v-lo)/(hi-lo)), clamped to
  // [0, divisions-1]; a degenerate dimension (hi == lo) maps to cell 0.
  std::vector<int> cell(const std::vector<double>& objectives) const;
};

// Bounded archive of mutually non-dominated individuals.
class ParetoArchive {
 public:
  ParetoArchive(std::size_t capacity, std::size_t grid_divisions)
      : capacity_(capacity) {
    grid_.divisions = grid_divisions;
  }

  const std::vector<Individual>& members() const { return members_; }
  const HyperGrid& grid() const { return grid_; }
  std::size_t capacity() const { return capacity_; }

  // Number of members sharing the cell of members()[index], itself included.
  int squeeze_factor(std::size_t index) const;

  // Occupied cells in deterministic (lexicographic) order.
  std::map<std::vector<int>, std::vector<std::size_t>> occupied_cells() const;

  // Archive admission: reject when dominated by any member; otherwise insert,
  // drop every member the candidate dominates, and when over capacity evict a
  // random member of a maximal-squeeze cell. Grid bounds are recomputed after
  // every change. Returns true when the candidate was inserted (it may still
  // have been evicted again by the capacity rule).
  bool update(const Individual& candidate, Rng& rng);

 private:
  void recompute_bounds();

  std::vector<Individual> members_;
  HyperGrid grid_;
  std::size_t capacity_;
};

// Binary tournament over occupied cells: the cell with the smaller squeeze
// factor wins (tie decided by coin), then a uniform member of the winning cell
// is returned. Throws std::invalid_argument on an empty archive.
const Individual& select_parent(const ParetoArchive& archive, Rng& rng);

// Child generation. Two parents: per-gene blend sampled uniformly on the
// parent interval extended by 50% each side, then per-gene mutation with
// probability 1/genes. One parent: Gaussian mutation on every gene
// (sigma = mutation_scale). Children are clamped to bounds.
std::vector<double> vary(const std::vector<const Individual*>& parents,
                         const std::vector<GeneBounds>& bounds, double mutation_scale,
                         Rng& rng);

// The optimization problem: gene count plus an evaluation function returning
// objectives in minimization orientation. evaluate must be pure and
// thread-safe; failures are expected to surface as sentinel-valued objectives.
struct Problem {
  std::size_t gene_count = 0;
  std::function<std::vector<double>(const std::vector<double>&)> evaluate;
  double sentinel = 1e12;
};

using GenerationCallback = std::function<void(std::size_t generation, const ParetoArchive&)>;

// Full PESA-II run: seeded initial population, then per generation C_I
// children built by select_parent + vary, evaluated concurrently and folded
// into the archive serially in index order (fully deterministic per seed).
// The callback, when set, fires after the initial fold (generation 0) and
// after each generation.
ParetoArchive optimize(const Problem& problem, const PesaConfig& cfg,
                       const GenerationCallback& on_generation = {});

// Archive member closest (after per-objective min-max normalization) to the
// ideal point; ties broken by lexicographically smallest gene vector.
const Individual& best_compromise(const ParetoArchive& archive);

// Dominated hypervolume of a 2-D point set w.r.t. a reference point
// (minimization; points outside the reference box contribute nothing).
// Diagnostic helper used by the convergence tests.
double hypervolume_2d(const std::vector<std::vector<double>>& points,
                      const std::vector<double>& reference);

}  // namespace folqr::pesa2
