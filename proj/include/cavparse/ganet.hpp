#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <vector>

#include "cavparse/random.hpp"

namespace cavparse::ganet {

struct GaConfig {
  int generations = 1000;
  int population = 8;
  int mating_pool = 4;
  double crossover_prob = 0.9;
  double mutation_prob = 0.9;
  double mutation_fraction = 0.10;  // share of genes resampled per mutation event
  double init_low = -1.0;
  double init_high = 1.0;
  bool elitism = true;
  std::uint64_t seed = 0;
  unsigned workers = 1;  // fitness evaluation threads
  // Replace the first members of the random initial population (warm start).
  std::vector<std::vector<double>> initial_genomes;
};

void validate(const GaConfig& cfg);

struct Chromosome {
  std::vector<double> genome;
  double fitness = std::numeric_limits<double>::quiet_NaN();

  bool evaluated() const { return fitness == fitness; }
};

using Population = std::vector<Chromosome>;
using FitnessFn = std::function<double(std::span<const double>)>;

struct GenerationStats {
  int generation = 0;  // 1-based
  double best = 0;
  double mean = 0;
};

struct GaResult {
  Chromosome best;
  std::vector<GenerationStats> history;  // one entry per generation
};

Population init_population(const GaConfig& cfg, std::size_t genome_len, Rng& rng);

// Fitness-proportional draws with replacement; uniform when all fitness is 0.
std::vector<std::size_t> roulette_select(const Population& population, std::size_t pool_size, Rng& rng);

// Single-point crossover with probability p_c. `crossed` reports whether a
// cut happened. cut_override in [1, len) forces the cut point (tests).
std::pair<Chromosome, Chromosome> crossover(const Chromosome& a, const Chromosome& b, double p_c, Rng& rng,
                                            bool* crossed = nullptr, std::size_t cut_override = 0);

// Number of genes resampled per mutation event: ceil(fraction * len).
std::size_t mutation_gene_count(double fraction, std::size_t len);

// With probability p_m resamples mutation_gene_count distinct genes from
// [low, high]; the fitness is reset when the genome changes.
Chromosome mutate(const Chromosome& c, double p_m, double fraction, double low, double high, Rng& rng);

// Evaluates every unevaluated chromosome; results are independent of the
// worker count.
void evaluate(Population& population, const FitnessFn& fitness, unsigned workers);

// Keeps the top n by fitness; equal fitness keeps the earlier chromosome.
Population truncate(Population candidates, std::size_t n);

GaResult run(const GaConfig& cfg, std::size_t genome_len, const FitnessFn& fitness);

// Uniform random sampling baseline with the same evaluation budget shape.
Chromosome random_search(std::size_t genome_len, std::size_t evaluations, double low, double high,
                         std::uint64_t seed, const FitnessFn& fitness);

}  // namespace cavparse::ganet
