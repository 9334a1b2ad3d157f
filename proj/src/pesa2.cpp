#include "folqr/pesa2.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <limits>
#include <mutex>
#include <stdexcept>
#include <thread>

namespace folqr::pesa2 {

double Rng::gaussian() {
  if (cached_) {
    const double z = *cached_;
    cached_.reset();
    return z;
  }
  double u1 = uniform01();
  if (u1 <= 0.0) u1 = 0x1.0p-53;  // avoid log(0)
  const double u2 = uniform01();
  const double radius = std::sqrt(-2.0 * std::log(u1));
  constexpr double two_pi = 6.283185307179586476925286766559;
  cached_ = radius * std::sin(two_pi * u2);
  return radius * std::cos(two_pi * u2);
}

void PesaConfig::validate() const {
  if (internal_population == 0) throw std::invalid_argument("internal population must be positive");
  if (archive_capacity == 0) throw std::invalid_argument("archive capacity must be positive");
  if (grid_divisions == 0) throw std::invalid_argument("grid divisions must be positive");
  if (crossover_probability < 0.0 || crossover_probability > 1.0)
    throw std::invalid_argument("crossover probability must lie in [0, 1]");
  if (mutation_scale < 0.0) throw std::invalid_argument("mutation scale must be non-negative");
  for (const auto& b : bounds)
    if (!(b.lo < b.hi)) throw std::invalid_argument("gene bounds must satisfy lo < hi");
}

bool dominates(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size())
    throw std::invalid_argument("objective vectors must have equal length");
  bool strictly_better = false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i] > b[i]) return false;
    if (a[i] < b[i]) strictly_better = true;
  }
  return strictly_better;
}

std::vector<int> HyperGrid::cell(const std::vector<double>& objectives) const {
  if (objectives.size() != lo.size())
    throw std::invalid_argument("objective dimension does not match grid");
  std::vector<int> index(objectives.size(), 0);
  for (std::size_t d = 0; d < objectives.size(); ++d) {
    const double span = hi[d] - lo[d];
    if (span <= 0.0) continue;  // degenerate dimension collapses to cell 0
    auto c = static_cast<long>(std::floor(static_cast<double>(divisions) *
                                          (objectives[d] - lo[d]) / span));
    c = std::clamp(c, 0L, static_cast<long>(divisions) - 1);
    index[d] = static_cast<int>(c);
  }
  return index;
}

void ParetoArchive::recompute_bounds() {
  if (members_.empty()) {
    grid_.lo.clear();
    grid_.hi.clear();
    return;
  }
  const std::size_t dims = members_.front().objectives.size();
  grid_.lo.assign(dims, std::numeric_limits<double>::infinity());
  grid_.hi.assign(dims, -std::numeric_limits<double>::infinity());
  for (const auto& m : members_) {
    for (std::size_t d = 0; d < dims; ++d) {
      grid_.lo[d] = std::min(grid_.lo[d], m.objectives[d]);
      grid_.hi[d] = std::max(grid_.hi[d], m.objectives[d]);
    }
  }
}

std::map<std::vector<int>, std::vector<std::size_t>> ParetoArchive::occupied_cells() const {
  std::map<std::vector<int>, std::vector<std::size_t>> cells;
  for (std::size_t i = 0; i < members_.size(); ++i)
    cells[grid_.cell(members_[i].objectives)].push_back(i);
  return cells;
}

int ParetoArchive::squeeze_factor(std::size_t index) const {
  if (index >= members_.size()) throw std::out_of_range("archive index out of range");
  const auto cell = grid_.cell(members_[index].objectives);
  int count = 0;
  for (const auto& m : members_)
    if (grid_.cell(m.objectives) == cell) ++count;
  return count;
}

bool ParetoArchive::update(const Individual& candidate, Rng& rng) {
  for (const auto& m : members_)
    if (dominates(m.objectives, candidate.objectives)) return false;

  std::erase_if(members_, [&](const Individual& m) {
    return dominates(candidate.objectives, m.objectives);
  });
  members_.push_back(candidate);
  recompute_bounds();

  if (members_.size() > capacity_) {
    const auto cells = occupied_cells();
    const std::vector<std::size_t>* crowded = nullptr;
    for (const auto& [cell, indices] : cells) {
      if (!crowded || indices.size() > crowded->size()) crowded = &indices;
    }
    const std::size_t victim = (*crowded)[rng.uniform_index(crowded->size())];
    members_.erase(members_.begin() + static_cast<std::ptrdiff_t>(victim));
    recompute_bounds();
  }
  return true;
}

const Individual& select_parent(const ParetoArchive& archive, Rng& rng) {
  const auto& members = archive.members();
  if (members.empty()) throw std::invalid_argument("cannot select from an empty archive");

  const auto cell_map = archive.occupied_cells();
  std::vector<const std::vector<std::size_t>*> cells;
  cells.reserve(cell_map.size());
  for (const auto& [cell, indices] : cell_map) cells.push_back(&indices);

  const auto* first = cells[rng.uniform_index(cells.size())];
  const auto* second = cells[rng.uniform_index(cells.size())];
  const auto* winner = first;
  if (second->size() < first->size())
    winner = second;
  else if (second->size() == first->size() && !rng.coin(0.5))
    winner = second;
  return members[(*winner)[rng.uniform_index(winner->size())]];
}

std::vector<double> vary(const std::vector<const Individual*>& parents,
                         const std::vector<GeneBounds>& bounds, double mutation_scale,
                         Rng& rng) {
  if (parents.empty() || parents.size() > 2)
    throw std::invalid_argument("vary requires one or two parents");
  const std::size_t genes = parents.front()->genes.size();
  if (bounds.size() != genes)
    throw std::invalid_argument("bounds must match the gene count");

  std::vector<double> child(genes);
  if (parents.size() == 2) {
    // Blend crossover with 50% extension, then sparse per-gene mutation.
    for (std::size_t g = 0; g < genes; ++g) {
      const double a = parents[0]->genes[g];
      const double b = parents[1]->genes[g];
      const double lo = std::min(a, b);
      const double hi = std::max(a, b);
      const double d = hi - lo;
      child[g] = rng.uniform(lo - 0.5 * d, hi + 0.5 * d);
    }
    const double per_gene = 1.0 / static_cast<double>(genes);
    for (std::size_t g = 0; g < genes; ++g)
      if (rng.coin(per_gene)) child[g] += mutation_scale * rng.gaussian();
  } else {
    for (std::size_t g = 0; g < genes; ++g)
      child[g] = parents[0]->genes[g] + mutation_scale * rng.gaussian();
  }
  for (std::size_t g = 0; g < genes; ++g)
    child[g] = std::clamp(child[g], bounds[g].lo, bounds[g].hi);
  return child;
}

namespace {

// Runs fn(0..count-1) across a small thread pool; work is claimed through an
// atomic counter so slot writes stay deterministic while costs balance.
void parallel_for(std::size_t count, std::size_t threads,
                  const std::function<void(std::size_t)>& fn) {
  if (count == 0) return;
  std::size_t workers = threads != 0 ? threads : std::thread::hardware_concurrency();
  if (workers == 0) workers = 1;
  workers = std::min(workers, count);
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (;;) {
        const std::size_t i = next.fetch_add(1);
        if (i >= count) return;
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

// Enforces the all-finite-or-all-sentinel invariant on raw evaluator output.
std::vector<double> sanitize(std::vector<double> objectives, double sentinel) {
  bool poisoned = false;
  for (const double v : objectives)
    if (!std::isfinite(v) || v >= sentinel) poisoned = true;
  if (poisoned) std::fill(objectives.begin(), objectives.end(), sentinel);
  return objectives;
}

}  // namespace

ParetoArchive optimize(const Problem& problem, const PesaConfig& cfg,
                       const GenerationCallback& on_generation) {
  cfg.validate();
  if (problem.gene_count == 0) throw std::invalid_argument("problem needs at least one gene");
  if (!problem.evaluate) throw std::invalid_argument("problem evaluation function is empty");
  std::vector<GeneBounds> bounds = cfg.bounds;
  if (bounds.empty()) bounds.resize(problem.gene_count);
  if (bounds.size() != problem.gene_count)
    throw std::invalid_argument("bounds must match the gene count");

  Rng rng(cfg.seed);

  // Random initial population (genes drawn individual-major, gene-minor).
  std::vector<Individual> population(cfg.internal_population);
  for (auto& ind : population) {
    ind.genes.resize(problem.gene_count);
    for (std::size_t g = 0; g < problem.gene_count; ++g)
      ind.genes[g] = rng.uniform(bounds[g].lo, bounds[g].hi);
  }
  parallel_for(population.size(), cfg.threads, [&](std::size_t i) {
    population[i].objectives = sanitize(problem.evaluate(population[i].genes), problem.sentinel);
  });

  const std::size_t dims = population.front().objectives.size();
  for (const auto& ind : population)
    if (ind.objectives.size() != dims)
      throw std::runtime_error("evaluator returned inconsistent objective dimensions");

  ParetoArchive archive(cfg.archive_capacity, cfg.grid_divisions);
  for (const auto& ind : population) archive.update(ind, rng);
  if (on_generation) on_generation(0, archive);

  std::vector<Individual> children(cfg.internal_population);
  for (std::size_t gen = 1; gen <= cfg.generations; ++gen) {
    // Serial child construction keeps the RNG stream strictly ordered.
    for (auto& child : children) {
      std::vector<const Individual*> parents;
      if (rng.coin(cfg.crossover_probability)) {
        parents = {&select_parent(archive, rng), &select_parent(archive, rng)};
      } else {
        parents = {&select_parent(archive, rng)};
      }
      child.genes = vary(parents, bounds, cfg.mutation_scale, rng);
      child.objectives.clear();
    }
    parallel_for(children.size(), cfg.threads, [&](std::size_t i) {
      children[i].objectives = sanitize(problem.evaluate(children[i].genes), problem.sentinel);
    });
    for (const auto& child : children) {
      if (child.objectives.size() != dims)
        throw std::runtime_error("evaluator returned inconsistent objective dimensions");
      archive.update(child, rng);
    }
    if (on_generation) on_generation(gen, archive);
  }
  return archive;
}

const Individual& best_compromise(const ParetoArchive& archive) {
  const auto& members = archive.members();
  if (members.empty()) throw std::invalid_argument("archive is empty");
  const std::size_t dims = members.front().objectives.size();

  std::vector<double> lo(dims, std::numeric_limits<double>::infinity());
  std::vector<double> hi(dims, -std::numeric_limits<double>::infinity());
  for (const auto& m : members) {
    for (std::size_t d = 0; d < dims; ++d) {
      lo[d] = std::min(lo[d], m.objectives[d]);
      hi[d] = std::max(hi[d], m.objectives[d]);
    }
  }

  const Individual* best = nullptr;
  double best_distance = std::numeric_limits<double>::infinity();
  for (const auto& m : members) {
    double d2 = 0.0;
    for (std::size_t d = 0; d < dims; ++d) {
      const double span = hi[d] - lo[d];
      const double z = span > 0.0 ? (m.objectives[d] - lo[d]) / span : 0.0;
      d2 += z * z;
    }
    if (!best || d2 < best_distance ||
        (d2 == best_distance && m.genes < best->genes)) {
      best = &m;
      best_distance = d2;
    }
  }
  return *best;
}

double hypervolume_2d(const std::vector<std::vector<double>>& points,
                      const std::vector<double>& reference) {
  if (reference.size() != 2) throw std::invalid_argument("reference point must be 2-D");
  std::vector<std::pair<double, double>> inside;
  for (const auto& p : points) {
    if (p.size() != 2) throw std::invalid_argument("points must be 2-D");
    if (p[0] < reference[0] && p[1] < reference[1]) inside.emplace_back(p[0], p[1]);
  }
  if (inside.empty()) return 0.0;
  std::sort(inside.begin(), inside.end());

  // Staircase sweep over the non-dominated subset (x ascending, y descending).
  double volume = 0.0;
  double previous_y = reference[1];
  for (const auto& [x, y] : inside) {
    if (y >= previous_y) continue;  // dominated by an earlier point
    volume += (reference[0] - x) * (previous_y - y);
    previous_y = y;
  }
  return volume;
}

}  // namespace folqr::pesa2
