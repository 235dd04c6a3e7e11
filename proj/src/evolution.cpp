#include "evospring/evolution.hpp"

#include "evospring/errors.hpp"
#include "evospring/io.hpp"
#include "evospring/threading.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace evospring {

namespace {

constexpr int kMaxAttempts = 256; // termination guard for degenerate lattices
constexpr int kCrossRetries = 10;

struct CellBox {
    int r0 = 0, r1 = -1, c0 = 0, c1 = -1;
    int width() const { return c1 - c0 + 1; }
    int height() const { return r1 - r0 + 1; }
};

CellBox bounding_box(const GeometryMask& mask) {
    CellBox box{mask.rows, -1, mask.cols, -1};
    for (int r = 0; r < mask.rows; ++r) {
        for (int c = 0; c < mask.cols; ++c) {
            if (!mask.at(r, c)) continue;
            box.r0 = std::min(box.r0, r);
            box.r1 = std::max(box.r1, r);
            box.c0 = std::min(box.c0, c);
            box.c1 = std::max(box.c1, c);
        }
    }
    return box;
}

GeometryMask shifted(const GeometryMask& mask, int dr, int dc) {
    GeometryMask out(mask.rows, mask.cols);
    for (int r = 0; r < mask.rows; ++r)
        for (int c = 0; c < mask.cols; ++c)
            if (mask.at(r, c)) out.set(r + dr, c + dc, true);
    return out;
}

GeometryMask mask_union(const GeometryMask& a, const GeometryMask& b) {
    GeometryMask out = a;
    for (std::size_t i = 0; i < out.bits.size(); ++i) out.bits[i] |= b.bits[i];
    return out;
}

double mean_of(const std::vector<double>& xs) {
    double total = 0.0;
    for (double x : xs) total += x;
    return total / static_cast<double>(xs.size());
}

double population_sd(const std::vector<double>& xs, double mean) {
    double total = 0.0;
    for (double x : xs) total += (x - mean) * (x - mean);
    return std::sqrt(total / static_cast<double>(xs.size()));
}

Genome mutate_genome(const Genome& parent, const LatticeIndex& index, Rng& rng) {
    Genome child;
    child.dims = parent.dims;
    child.geometry = mutate_geometry(parent.geometry, index, rng);
    child.springs = mutate_springs(parent.springs, parent.dims, rng);
    return child;
}

Individual evaluate_design(const Genome& genome, const LatticeIndex& index,
                           const EvolveSetup& setup, int generation, int slot) {
    Individual ind;
    ind.genome = genome;
    ind.birth_generation = generation;
    ind.birth_slot = slot;
    const Morphology morph = decode(genome, index);
    ind.size_springs = morph.spring_count();
    ind.active_springs = morph.active_spring_count;
    Rng rng = Rng::stream(setup.evo.seed, {rng_tag::train,
                                           static_cast<std::uint64_t>(generation),
                                           static_cast<std::uint64_t>(slot)});
    TrainResult trained = train(morph, setup.terrain, setup.sim, setup.learn, setup.friction, rng);
    ind.losses = std::move(trained.losses);
    ind.fitness = trained.fitness;
    ind.initial_performance = trained.initial_performance;
    ind.valid = trained.valid && validity_filter(ind.losses, setup.evo.loss_delta_threshold);
    return ind;
}

void maybe_checkpoint(const EvolveSetup& setup, int generation,
                      const std::vector<GenerationStats>& stats,
                      const std::vector<Individual>& population) {
    if (setup.checkpoint_dir.empty()) return;
    const int cadence = std::max(1, setup.checkpoint_every_gens);
    if (generation % cadence != 0 && generation != setup.evo.generations) return;
    Checkpoint ckpt;
    ckpt.config_hash = setup.config_hash;
    ckpt.seed = setup.evo.seed;
    ckpt.generation = generation;
    ckpt.pop_size = setup.evo.pop_size;
    ckpt.stats = stats;
    ckpt.population = population;
    write_checkpoint(checkpoint_path(setup.checkpoint_dir, generation), ckpt);
}

// Produces and evaluates one offspring cohort, then merges and selects.
void run_generation(const EvolveSetup& setup, const LatticeIndex& index, int generation,
                    std::vector<Individual>& population, std::vector<GenerationStats>& stats) {
    const int pop_size = setup.evo.pop_size;
    if (population.empty())
        throw std::runtime_error("population extinct: every design was filtered as invalid");
    Rng var_rng = Rng::stream(setup.evo.seed,
                              {rng_tag::variation, static_cast<std::uint64_t>(generation)});

    // Variation runs single-threaded in slot order so the RNG stream is
    // consumed identically regardless of worker count. A crossover event fills
    // the leading slot and the next unfilled slot with its two children.
    std::vector<Genome> offspring(static_cast<std::size_t>(pop_size));
    std::vector<std::uint8_t> filled(static_cast<std::size_t>(pop_size), 0);
    const int parents = static_cast<int>(population.size());
    for (int i = 0; i < pop_size; ++i) {
        if (filled[static_cast<std::size_t>(i)]) continue;
        const Genome& parent = population[static_cast<std::size_t>(i % parents)].genome;
        const bool do_cross = setup.evo.crossover_enabled && parents > 1 &&
                              var_rng.uniform() < setup.evo.crossover_probability;
        if (!do_cross) {
            offspring[static_cast<std::size_t>(i)] = mutate_genome(parent, index, var_rng);
            filled[static_cast<std::size_t>(i)] = 1;
            continue;
        }
        const int self = i % parents;
        const std::uint64_t draw = var_rng.uniform_int(static_cast<std::uint64_t>(parents - 1));
        const int partner = static_cast<int>(draw) + (static_cast<int>(draw) >= self ? 1 : 0);
        const Genome& other = population[static_cast<std::size_t>(partner)].genome;

        auto [geom_a, geom_b] =
            align_and_cross_geometry(parent.geometry, other.geometry, index, var_rng,
                                     setup.evo.crossover_method, setup.evo.distinct_zero_frac,
                                     setup.evo.joint_zero_frac);
        auto [springs_a, springs_b] = crossover_springs(parent.springs, other.springs, var_rng);

        int second = -1;
        for (int j = i + 1; j < pop_size; ++j) {
            if (!filled[static_cast<std::size_t>(j)]) {
                second = j;
                break;
            }
        }

        if (geom_a.has_value()) {
            Genome child{parent.dims, std::move(*geom_a), std::move(springs_a)};
            child.geometry = mutate_geometry(child.geometry, index, var_rng);
            child.springs = mutate_springs(child.springs, parent.dims, var_rng);
            offspring[static_cast<std::size_t>(i)] = std::move(child);
        } else {
            offspring[static_cast<std::size_t>(i)] = mutate_genome(parent, index, var_rng);
        }
        filled[static_cast<std::size_t>(i)] = 1;

        if (second >= 0) {
            if (geom_b.has_value()) {
                Genome child{parent.dims, std::move(*geom_b), std::move(springs_b)};
                child.geometry = mutate_geometry(child.geometry, index, var_rng);
                child.springs = mutate_springs(child.springs, parent.dims, var_rng);
                offspring[static_cast<std::size_t>(second)] = std::move(child);
            } else {
                const Genome& fallback =
                    population[static_cast<std::size_t>(second % parents)].genome;
                offspring[static_cast<std::size_t>(second)] = mutate_genome(fallback, index, var_rng);
            }
            filled[static_cast<std::size_t>(second)] = 1;
        }
    }

    std::vector<Individual> cohort(static_cast<std::size_t>(pop_size));
    parallel_for(pop_size, setup.workers, [&](int slot) {
        cohort[static_cast<std::size_t>(slot)] =
            evaluate_design(offspring[static_cast<std::size_t>(slot)], index, setup, generation,
                            slot);
    });

    int cohort_invalid = 0;
    for (const auto& ind : cohort) cohort_invalid += ind.valid ? 0 : 1;

    std::vector<Individual> merged = std::move(population);
    merged.insert(merged.end(), std::make_move_iterator(cohort.begin()),
                  std::make_move_iterator(cohort.end()));
    population = select(std::move(merged), pop_size);

    GenerationStats row = generation_stats(population, generation);
    row.invalid_count = cohort_invalid;
    stats.push_back(row);
    maybe_checkpoint(setup, generation, stats, population);
}

RunLog run_from(const EvolveSetup& setup, std::vector<Individual> population,
                std::vector<GenerationStats> stats, int next_generation) {
    const LatticeIndex index = build_lattice_index(setup.dims);
    for (int g = next_generation; g <= setup.evo.generations; ++g)
        run_generation(setup, index, g, population, stats);
    RunLog log;
    log.config_hash = setup.config_hash;
    log.stats = std::move(stats);
    log.final_population = std::move(population);
    return log;
}

} // namespace

GeometryMask flip_bits(const GeometryMask& mask, double p, Rng& rng, int* flips) {
    GeometryMask out = mask;
    int count = 0;
    for (auto& bit : out.bits) {
        if (rng.bernoulli(p)) {
            bit ^= 1;
            ++count;
        }
    }
    if (flips) *flips = count;
    return out;
}

SpringVector flip_bits(const SpringVector& vec, double p, Rng& rng, int* flips) {
    SpringVector out = vec;
    int count = 0;
    for (auto& bit : out.bits) {
        if (rng.bernoulli(p)) {
            bit ^= 1;
            ++count;
        }
    }
    if (flips) *flips = count;
    return out;
}

GeometryMask mutate_geometry(const GeometryMask& mask, const LatticeIndex& index, Rng& rng) {
    const GeometryMask parent_expressed = expressed_cells(mask, index);
    double p = 1.0 / static_cast<double>(index.cell_count());
    for (int attempt = 0; attempt < kMaxAttempts; ++attempt) {
        const GeometryMask candidate = flip_bits(mask, p, rng);
        if (!candidate.any()) continue; // resample
        if (expressed_cells(candidate, index) == parent_expressed) {
            p = std::min(2.0 * p, 1.0);
            continue;
        }
        return candidate;
    }
    return mask; // unreachable except on degenerate one-cell lattices
}

SpringVector mutate_springs(const SpringVector& vec, LatticeDims dims, Rng& rng) {
    const double p = 1.0 / static_cast<double>(dims.a * dims.b);
    for (int attempt = 0; attempt < kMaxAttempts; ++attempt) {
        SpringVector candidate = flip_bits(vec, p, rng);
        if (candidate.any()) return candidate;
    }
    return vec;
}

std::pair<SpringVector, SpringVector> crossover_springs(const SpringVector& va,
                                                        const SpringVector& vb, Rng& rng) {
    auto one_child = [&](const SpringVector& fallback) {
        SpringVector child;
        child.bits.resize(va.bits.size());
        for (int attempt = 0; attempt < kMaxAttempts; ++attempt) {
            for (std::size_t k = 0; k < va.bits.size(); ++k)
                child.bits[k] = rng.bernoulli(0.5) ? va.bits[k] : vb.bits[k];
            if (child.any()) return child;
        }
        return fallback;
    };
    SpringVector first = one_child(va);
    SpringVector second = one_child(vb);
    return {std::move(first), std::move(second)};
}

GeometryMask zero_cells(const GeometryMask& mask, double frac, Rng& rng) {
    GeometryMask out = mask;
    for (auto& bit : out.bits)
        if (bit && rng.bernoulli(frac)) bit = 0;
    return out;
}

std::pair<std::optional<GeometryMask>, std::optional<GeometryMask>>
align_and_cross_geometry(const GeometryMask& ma, const GeometryMask& mb,
                         const LatticeIndex& index, Rng& rng, CrossoverMethod method,
                         double distinct_zero_frac, double joint_zero_frac) {
    const GeometryMask lcc_a = expressed_cells(ma, index);
    const GeometryMask lcc_b = expressed_cells(mb, index);
    const CellBox box_a = bounding_box(lcc_a);
    const CellBox box_b = bounding_box(lcc_b);

    auto one_child = [&]() -> std::optional<GeometryMask> {
        for (int attempt = 0; attempt < kCrossRetries; ++attempt) {
            // Shift the narrower box inside the wider one per axis; ties shift
            // the second parent onto the first.
            int da_c = 0, db_c = 0, da_r = 0, db_r = 0;
            if (box_a.width() < box_b.width()) {
                const int lo = box_b.c0, hi = box_b.c1 - box_a.width() + 1;
                da_c = lo + static_cast<int>(rng.uniform_int(
                                static_cast<std::uint64_t>(hi - lo + 1))) -
                       box_a.c0;
            } else {
                const int lo = box_a.c0, hi = box_a.c1 - box_b.width() + 1;
                db_c = lo + static_cast<int>(rng.uniform_int(
                                static_cast<std::uint64_t>(hi - lo + 1))) -
                       box_b.c0;
            }
            if (box_a.height() < box_b.height()) {
                const int lo = box_b.r0, hi = box_b.r1 - box_a.height() + 1;
                da_r = lo + static_cast<int>(rng.uniform_int(
                                static_cast<std::uint64_t>(hi - lo + 1))) -
                       box_a.r0;
            } else {
                const int lo = box_a.r0, hi = box_a.r1 - box_b.height() + 1;
                db_r = lo + static_cast<int>(rng.uniform_int(
                                static_cast<std::uint64_t>(hi - lo + 1))) -
                       box_b.r0;
            }
            const GeometryMask aligned_a = shifted(lcc_a, da_r, da_c);
            const GeometryMask aligned_b = shifted(lcc_b, db_r, db_c);

            GeometryMask fused(ma.rows, ma.cols);
            if (method == CrossoverMethod::Distinct) {
                fused = mask_union(zero_cells(aligned_a, distinct_zero_frac, rng),
                                   zero_cells(aligned_b, distinct_zero_frac, rng));
            } else {
                fused = zero_cells(mask_union(aligned_a, aligned_b), joint_zero_frac, rng);
            }
            const GeometryMask child = expressed_cells(fused, index);
            if (child.any()) return child;
        }
        return std::nullopt;
    };

    auto first = one_child();
    auto second = one_child();
    return {std::move(first), std::move(second)};
}

bool validity_filter(const std::vector<double>& losses, double threshold) {
    for (std::size_t i = 0; i < losses.size(); ++i) {
        if (!std::isfinite(losses[i])) return false;
        if (i > 0 && std::fabs(losses[i] - losses[i - 1]) > threshold) return false;
    }
    return true;
}

std::vector<Individual> select(std::vector<Individual> pool, int pop_size) {
    auto key = [](const Individual& ind) {
        return ind.valid ? ind.fitness : -std::numeric_limits<double>::infinity();
    };
    std::sort(pool.begin(), pool.end(), [&](const Individual& a, const Individual& b) {
        const double fa = key(a), fb = key(b);
        if (fa != fb) return fa > fb;
        if (a.birth_generation != b.birth_generation)
            return a.birth_generation < b.birth_generation;
        return a.birth_slot < b.birth_slot;
    });
    int valid_count = 0;
    for (const auto& ind : pool) valid_count += ind.valid ? 1 : 0;
    const int keep = std::min(pop_size, valid_count);
    pool.resize(static_cast<std::size_t>(keep));
    return pool;
}

GenerationStats generation_stats(const std::vector<Individual>& individuals, int generation) {
    GenerationStats stats;
    stats.generation = generation;
    std::vector<double> trained, initial, sizes;
    const Individual* best = nullptr;
    const Individual* largest = nullptr;
    for (const auto& ind : individuals) {
        if (!ind.valid) {
            ++stats.invalid_count;
            continue;
        }
        trained.push_back(ind.fitness);
        initial.push_back(ind.initial_performance);
        sizes.push_back(static_cast<double>(ind.size_springs));
        if (!best || ind.fitness > best->fitness) best = &ind;
        if (!largest || ind.size_springs > largest->size_springs) largest = &ind;
    }
    if (trained.empty()) return stats;

    stats.best_trained = best->fitness;
    stats.best_initial = best->initial_performance;
    stats.mean_trained = mean_of(trained);
    stats.sd_trained = population_sd(trained, stats.mean_trained);
    stats.mean_initial = mean_of(initial);
    stats.sd_initial = population_sd(initial, stats.mean_initial);
    stats.mean_size = mean_of(sizes);
    stats.sd_size = population_sd(sizes, stats.mean_size);
    stats.best_size = best->size_springs;
    stats.largest_size = largest->size_springs;
    auto frac = [](const Individual& ind) {
        return ind.size_springs > 0
                   ? static_cast<double>(ind.active_springs) / ind.size_springs
                   : 0.0;
    };
    double frac_total = 0.0;
    for (const auto& ind : individuals)
        if (ind.valid) frac_total += frac(ind);
    stats.mean_active_frac = frac_total / static_cast<double>(trained.size());
    stats.best_active_frac = frac(*best);
    stats.largest_active_frac = frac(*largest);
    return stats;
}

RunLog evolve(const EvolveSetup& setup) {
    const LatticeIndex index = build_lattice_index(setup.dims);
    const int pop_size = setup.evo.pop_size;

    std::vector<Genome> genomes(static_cast<std::size_t>(pop_size));
    for (int slot = 0; slot < pop_size; ++slot) {
        Rng rng = Rng::stream(setup.evo.seed, {rng_tag::genome, static_cast<std::uint64_t>(slot)});
        genomes[static_cast<std::size_t>(slot)] = random_genome(rng, setup.dims);
    }
    std::vector<Individual> population(static_cast<std::size_t>(pop_size));
    parallel_for(pop_size, setup.workers, [&](int slot) {
        population[static_cast<std::size_t>(slot)] =
            evaluate_design(genomes[static_cast<std::size_t>(slot)], index, setup, 0, slot);
    });

    std::vector<GenerationStats> stats;
    stats.push_back(generation_stats(population, 0));
    maybe_checkpoint(setup, 0, stats, population);
    return run_from(setup, std::move(population), std::move(stats), 1);
}

RunLog evolve_resume(const EvolveSetup& setup, const Checkpoint& checkpoint) {
    if (checkpoint.config_hash != setup.config_hash)
        throw ConfigError("checkpoint config hash " + checkpoint.config_hash +
                          " does not match run config " + setup.config_hash);
    return run_from(setup, checkpoint.population, checkpoint.stats, checkpoint.generation + 1);
}

} // namespace evospring
