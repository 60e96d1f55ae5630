#include "cavparse/ganet.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "cavparse/error.hpp"
#include "cavparse/parallel.hpp"

namespace cavparse::ganet {
namespace {

double checked_fitness(double value) {
  if (!(value >= 0.0 && value <= 1.0)) {
    throw ContractViolation("fitness " + std::to_string(value) + " outside [0, 1]");
  }
  return value;
}

}  // namespace

void validate(const GaConfig& cfg) {
  auto prob = [](double p) { return p >= 0.0 && p <= 1.0; };
  if (cfg.generations < 1) throw InvalidInput("GA: generations must be >= 1");
  if (cfg.population < 2) throw InvalidInput("GA: population must be >= 2");
  if (cfg.mating_pool < 1) throw InvalidInput("GA: mating pool must be >= 1");
  if (!prob(cfg.crossover_prob) || !prob(cfg.mutation_prob) || !prob(cfg.mutation_fraction)) {
    throw InvalidInput("GA: probabilities and mutation fraction must lie in [0, 1]");
  }
  if (!std::isfinite(cfg.init_low) || !std::isfinite(cfg.init_high) || cfg.init_low > cfg.init_high) {
    throw InvalidInput("GA: init range must be a finite interval with low <= high");
  }
  if (cfg.initial_genomes.size() > static_cast<std::size_t>(cfg.population)) {
    throw InvalidInput("GA: more initial genomes than population members");
  }
}

Population init_population(const GaConfig& cfg, std::size_t genome_len, Rng& rng) {
  if (genome_len == 0) throw InvalidInput("GA: genome length must be >= 1");
  Population pop(cfg.population);
  for (auto& c : pop) {
    c.genome.resize(genome_len);
    for (double& g : c.genome) g = uniform_real(rng, cfg.init_low, cfg.init_high);
  }
  for (std::size_t i = 0; i < cfg.initial_genomes.size() && i < pop.size(); ++i) {
    if (cfg.initial_genomes[i].size() != genome_len) throw InvalidInput("GA: initial genome has the wrong length");
    pop[i].genome = cfg.initial_genomes[i];
  }
  return pop;
}

std::vector<std::size_t> roulette_select(const Population& population, std::size_t pool_size, Rng& rng) {
  if (population.empty()) throw ContractViolation("roulette_select: empty population");
  std::vector<double> cumulative(population.size());
  double total = 0;
  for (std::size_t i = 0; i < population.size(); ++i) {
    const auto& c = population[i];
    if (!c.evaluated()) throw ContractViolation("roulette_select: unevaluated chromosome");
    if (c.fitness < 0) throw ContractViolation("roulette_select: negative fitness");
    total += c.fitness;
    cumulative[i] = total;
  }
  std::vector<std::size_t> picks(pool_size);
  for (auto& pick : picks) {
    if (total <= 0) {
      pick = uniform_index(rng, population.size());
      continue;
    }
    const double r = uniform01(rng) * total;
    const auto it = std::upper_bound(cumulative.begin(), cumulative.end(), r);
    pick = std::min<std::size_t>(static_cast<std::size_t>(it - cumulative.begin()), population.size() - 1);
  }
  return picks;
}

std::pair<Chromosome, Chromosome> crossover(const Chromosome& a, const Chromosome& b, double p_c, Rng& rng,
                                            bool* crossed, std::size_t cut_override) {
  if (a.genome.size() != b.genome.size()) throw InvalidInput("crossover: genome lengths differ");
  if (crossed) *crossed = false;
  const std::size_t len = a.genome.size();
  if (len < 2 || p_c <= 0.0) return {a, b};
  if (uniform01(rng) >= p_c) return {a, b};
  const std::size_t cut = (cut_override >= 1 && cut_override < len)
                              ? cut_override
                              : 1 + static_cast<std::size_t>(uniform_index(rng, len - 1));
  Chromosome c1, c2;
  c1.genome.assign(a.genome.begin(), a.genome.begin() + static_cast<std::ptrdiff_t>(cut));
  c1.genome.insert(c1.genome.end(), b.genome.begin() + static_cast<std::ptrdiff_t>(cut), b.genome.end());
  c2.genome.assign(b.genome.begin(), b.genome.begin() + static_cast<std::ptrdiff_t>(cut));
  c2.genome.insert(c2.genome.end(), a.genome.begin() + static_cast<std::ptrdiff_t>(cut), a.genome.end());
  if (crossed) *crossed = true;
  return {std::move(c1), std::move(c2)};
}

std::size_t mutation_gene_count(double fraction, std::size_t len) {
  if (fraction <= 0.0 || len == 0) return 0;
  // The epsilon absorbs representation error, e.g. 0.1 * 30 = 3.0000000000000004.
  const double raw = fraction * static_cast<double>(len);
  const auto count = static_cast<std::size_t>(std::ceil(raw - 1e-9 * std::max(1.0, raw)));
  return std::clamp<std::size_t>(count, 1, len);
}

Chromosome mutate(const Chromosome& c, double p_m, double fraction, double low, double high, Rng& rng) {
  if (p_m <= 0.0 || uniform01(rng) >= p_m) return c;
  const std::size_t len = c.genome.size();
  const std::size_t genes = mutation_gene_count(fraction, len);
  if (genes == 0) return c;
  std::vector<std::size_t> index(len);
  std::iota(index.begin(), index.end(), 0);
  Chromosome out = c;
  for (std::size_t i = 0; i < genes; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(uniform_index(rng, len - i));
    std::swap(index[i], index[j]);
    out.genome[index[i]] = uniform_real(rng, low, high);
  }
  if (out.genome != c.genome) out.fitness = std::numeric_limits<double>::quiet_NaN();
  return out;
}

void evaluate(Population& population, const FitnessFn& fitness, unsigned workers) {
  std::vector<std::size_t> todo;
  for (std::size_t i = 0; i < population.size(); ++i) {
    if (!population[i].evaluated()) todo.push_back(i);
  }
  parallel_for(todo.size(), workers, [&](std::size_t t) {
    auto& c = population[todo[t]];
    c.fitness = checked_fitness(fitness(c.genome));
  });
}

Population truncate(Population candidates, std::size_t n) {
  std::stable_sort(candidates.begin(), candidates.end(),
                   [](const Chromosome& x, const Chromosome& y) { return x.fitness > y.fitness; });
  if (candidates.size() > n) candidates.resize(n);
  return candidates;
}

GaResult run(const GaConfig& cfg, std::size_t genome_len, const FitnessFn& fitness) {
  validate(cfg);
  Rng rng(cfg.seed);
  Population population = init_population(cfg, genome_len, rng);
  evaluate(population, fitness, cfg.workers);

  GaResult result;
  result.best = truncate(population, 1).front();
  result.history.reserve(static_cast<std::size_t>(cfg.generations));
  const std::size_t n = static_cast<std::size_t>(cfg.population);
  const std::size_t offspring_count = cfg.elitism ? static_cast<std::size_t>(cfg.mating_pool) : n;

  for (int gen = 1; gen <= cfg.generations; ++gen) {
    const std::vector<std::size_t> pool = roulette_select(population, offspring_count, rng);
    Population offspring;
    offspring.reserve(pool.size());
    for (std::size_t i = 0; i + 1 < pool.size(); i += 2) {
      bool crossed = false;
      auto [c1, c2] = crossover(population[pool[i]], population[pool[i + 1]], cfg.crossover_prob, rng, &crossed);
      if (crossed) {
        offspring.push_back(std::move(c1));
        offspring.push_back(std::move(c2));
      } else {
        offspring.push_back(mutate(c1, cfg.mutation_prob, cfg.mutation_fraction, cfg.init_low, cfg.init_high, rng));
        offspring.push_back(mutate(c2, cfg.mutation_prob, cfg.mutation_fraction, cfg.init_low, cfg.init_high, rng));
      }
    }
    if (pool.size() % 2 == 1) {
      offspring.push_back(mutate(population[pool.back()], cfg.mutation_prob, cfg.mutation_fraction,
                                 cfg.init_low, cfg.init_high, rng));
    }
    evaluate(offspring, fitness, cfg.workers);

    if (cfg.elitism) {
      Population merged = std::move(population);
      merged.insert(merged.end(), std::make_move_iterator(offspring.begin()),
                    std::make_move_iterator(offspring.end()));
      population = truncate(std::move(merged), n);
    } else {
      population = std::move(offspring);
    }

    double best = population.front().fitness;
    double sum = 0;
    std::size_t best_index = 0;
    for (std::size_t i = 0; i < population.size(); ++i) {
      sum += population[i].fitness;
      if (population[i].fitness > best) {
        best = population[i].fitness;
        best_index = i;
      }
    }
    if (best > result.best.fitness) result.best = population[best_index];
    result.history.push_back({gen, best, sum / static_cast<double>(population.size())});
  }
  return result;
}

Chromosome random_search(std::size_t genome_len, std::size_t evaluations, double low, double high,
                         std::uint64_t seed, const FitnessFn& fitness) {
  if (genome_len == 0) throw InvalidInput("random_search: genome length must be >= 1");
  Rng rng(seed);
  Chromosome best;
  best.fitness = -1;
  Chromosome candidate;
  candidate.genome.resize(genome_len);
  for (std::size_t e = 0; e < evaluations; ++e) {
    for (double& g : candidate.genome) g = uniform_real(rng, low, high);
    candidate.fitness = checked_fitness(fitness(candidate.genome));
    if (candidate.fitness > best.fitness) best = candidate;
  }
  return best;
}

}  // namespace cavparse::ganet
