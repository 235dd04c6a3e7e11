#pragma once

#include "evospring/lattice.hpp"
#include "evospring/learning.hpp"
#include "evospring/rng.hpp"
#include "evospring/simulator.hpp"
#include "evospring/terrain.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace evospring {

struct Individual {
    Genome genome;
    double fitness = 0.0;             // meaningful only when valid
    double initial_performance = 0.0; // displacement before any learning
    bool valid = false;
    int birth_generation = 0;
    int birth_slot = 0;
    int size_springs = 0;   // expressed spring count, the robot-size measure
    int active_springs = 0; // expressed springs wired to the controller
    std::vector<double> losses;
};

enum class CrossoverMethod { Distinct, Joint };

struct EvolutionConfig {
    int pop_size = 32;
    int generations = 30;
    bool crossover_enabled = false;
    double crossover_probability = 0.8;
    CrossoverMethod crossover_method = CrossoverMethod::Distinct;
    double distinct_zero_frac = 0.35;
    double joint_zero_frac = 0.25;
    double loss_delta_threshold = 1.0; // meters, consecutive-iteration loss jump
    std::uint64_t seed = 0;

    friend bool operator==(const EvolutionConfig&, const EvolutionConfig&) = default;
};

// One bit-flip pass with probability p per bit; flip count reported for rate
// checks.
GeometryMask flip_bits(const GeometryMask& mask, double p, Rng& rng, int* flips = nullptr);
SpringVector flip_bits(const SpringVector& vec, double p, Rng& rng, int* flips = nullptr);

// Flips bits with p = 1/(a*b), doubling p (capped at 1) until the expressed
// morphology differs from the parent; empty masks are resampled.
GeometryMask mutate_geometry(const GeometryMask& mask, const LatticeIndex& index, Rng& rng);

// Same flip probability, single pass, no change requirement; all-zero results
// are resampled.
SpringVector mutate_springs(const SpringVector& vec, LatticeDims dims, Rng& rng);

// Uniform per-position inheritance, drawn independently for each child;
// all-zero children are resampled.
std::pair<SpringVector, SpringVector> crossover_springs(const SpringVector& va,
                                                        const SpringVector& vb, Rng& rng);

// Expressed cells of each parent are aligned (the narrower bounding box is
// shifted uniformly at random inside the wider one, per axis), randomly
// thinned, unioned, and reduced to the filled LCC. Performed twice for two
// offspring; a child that stays empty after bounded retries comes back empty
// and the caller falls back to mutation only.
std::pair<std::optional<GeometryMask>, std::optional<GeometryMask>>
align_and_cross_geometry(const GeometryMask& ma, const GeometryMask& mb,
                         const LatticeIndex& index, Rng& rng, CrossoverMethod method,
                         double distinct_zero_frac, double joint_zero_frac);

// Clears each set cell with probability frac.
GeometryMask zero_cells(const GeometryMask& mask, double frac, Rng& rng);

// Valid iff every loss is finite and no consecutive losses jump by more than
// the threshold.
bool validity_filter(const std::vector<double>& losses, double threshold);

// Truncation selection over the merged pool: fitness descending, invalid last,
// ties broken by older birth generation then lower slot. Keeps pop_size
// survivors, or every valid individual when fewer exist.
std::vector<Individual> select(std::vector<Individual> pool, int pop_size);

struct GenerationStats {
    int generation = 0;
    double best_trained = 0.0;
    double best_initial = 0.0;
    double mean_trained = 0.0;
    double sd_trained = 0.0;
    double mean_initial = 0.0;
    double sd_initial = 0.0;
    double mean_size = 0.0;
    double sd_size = 0.0;
    int best_size = 0;
    int largest_size = 0;
    double mean_active_frac = 0.0;
    double best_active_frac = 0.0;
    double largest_active_frac = 0.0;
    int invalid_count = 0;
};

// Aggregates are over valid members; invalid_count counts the rest. "Best" is
// the fittest individual, "Largest" the one with the most springs.
GenerationStats generation_stats(const std::vector<Individual>& individuals, int generation);

struct RunLog {
    std::string config_hash;
    std::vector<GenerationStats> stats; // index = generation; 0 is the initial cohort
    std::vector<Individual> final_population;
};

struct Checkpoint {
    std::string config_hash;
    std::uint64_t seed = 0;
    int generation = 0;
    int pop_size = 0;
    std::vector<GenerationStats> stats; // generations 0..generation
    std::vector<Individual> population;
};

struct EvolveSetup {
    LatticeDims dims;
    EvolutionConfig evo;
    SimConfig sim;
    LearnConfig learn;
    Terrain terrain;
    FrictionMode friction = FrictionMode::NoSlip;
    int workers = 1;
    std::string config_hash;
    std::string checkpoint_dir;   // empty disables checkpointing
    int checkpoint_every_gens = 1;
};

// Seeds pop_size random genomes, trains every design once, then runs
// generations of variation, parallel training, filtering, and selection.
// Deterministic for a fixed seed regardless of worker count.
RunLog evolve(const EvolveSetup& setup);

// Continues a checkpointed run; the resulting log is identical to the
// uninterrupted run with the same setup.
RunLog evolve_resume(const EvolveSetup& setup, const Checkpoint& checkpoint);

} // namespace evospring
