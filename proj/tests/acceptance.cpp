// Acceptance suite: one pass/fail line per criterion, nonzero exit when any
// fails. Criteria can be selected by number on the command line.

#include "evospring/analysis.hpp"
#include "evospring/evolution.hpp"
#include "evospring/io.hpp"
#include "evospring/lattice.hpp"
#include "evospring/learning.hpp"
#include "evospring/rng.hpp"
#include "evospring/simulator.hpp"
#include "evospring/terrain.hpp"
#include "oracles.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <numeric>
#include <set>
#include <string>
#include <thread>
#include <vector>

using namespace evospring;

namespace {

int g_failures = 0;

class Timer {
public:
    Timer() : start_(std::chrono::steady_clock::now()) {}
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }

private:
    std::chrono::steady_clock::time_point start_;
};

void report(int criterion, bool pass, const std::string& name, const std::string& detail,
            double seconds) {
    std::printf("[%s] criterion %d: %s — %s (%.1f s)\n", pass ? "PASS" : "FAIL", criterion,
                name.c_str(), detail.c_str(), seconds);
    std::fflush(stdout);
    if (!pass) ++g_failures;
}

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.3g", v);
    return buf;
}

int hw_workers() {
    const unsigned n = std::thread::hardware_concurrency();
    return n == 0 ? 2 : static_cast<int>(n);
}

// ---------------------------------------------------------------- criterion 1

void criterion_lattice() {
    Timer timer;
    bool pass = true;
    std::string detail;

    const auto full = build_lattice_index({22, 13});
    if (full.mass_count() != 168 || full.spring_count() != 453) {
        pass = false;
        detail = "(22,13) gave " + std::to_string(full.mass_count()) + " masses / " +
                 std::to_string(full.spring_count()) + " springs";
    }
    for (int a = 2; a <= 24 && pass; a += 2) {
        for (int b = 1; b <= 14 && pass; ++b) {
            const auto index = build_lattice_index({a, b});
            const auto oracle = oracles::enumerate_lattice(a, b);
            const int masses_closed = (b + 1) * (a / 2 + 1);
            const int springs_closed = (b + 1) * (a / 2) + b * (a + 1);
            if (index.mass_count() != oracle.masses || index.spring_count() != oracle.springs ||
                index.mass_count() != masses_closed || index.spring_count() != springs_closed) {
                pass = false;
                detail = "mismatch at a=" + std::to_string(a) + " b=" + std::to_string(b);
            }
        }
    }
    const double elapsed = timer.seconds();
    if (pass && elapsed >= 1.0) {
        pass = false;
        detail = "runtime bound exceeded";
    }
    if (pass)
        detail = "(22,13) -> 168 masses, 453 springs; closed forms match brute force on 168 grids";
    report(1, pass, "lattice law", detail, elapsed);
}

// ---------------------------------------------------------------- criterion 2

struct Direction {
    std::vector<double> w1, b1, w2, b2;
};

Direction random_direction(const ControllerParams& params, std::uint64_t seed) {
    Rng rng(seed);
    Direction dir;
    auto fill = [&](std::vector<double>& out, std::size_t n) {
        out.resize(n);
        for (auto& v : out) v = rng.normal();
    };
    fill(dir.w1, params.w1.size());
    fill(dir.b1, params.b1.size());
    fill(dir.w2, params.w2.size());
    fill(dir.b2, params.b2.size());
    double norm = 0.0;
    for (const auto* vec : {&dir.w1, &dir.b1, &dir.w2, &dir.b2})
        for (double v : *vec) norm += v * v;
    norm = std::sqrt(norm);
    for (auto* vec : {&dir.w1, &dir.b1, &dir.w2, &dir.b2})
        for (auto& v : *vec) v /= norm;
    return dir;
}

ControllerParams displaced(const ControllerParams& params, const Direction& dir, double h) {
    ControllerParams out = params;
    for (std::size_t i = 0; i < out.w1.size(); ++i) out.w1[i] += h * dir.w1[i];
    for (std::size_t i = 0; i < out.b1.size(); ++i) out.b1[i] += h * dir.b1[i];
    for (std::size_t i = 0; i < out.w2.size(); ++i) out.w2[i] += h * dir.w2[i];
    for (std::size_t i = 0; i < out.b2.size(); ++i) out.b2[i] += h * dir.b2[i];
    return out;
}

double directional(const GradientVector& grads, const Direction& dir) {
    double total = 0.0;
    for (std::size_t i = 0; i < grads.w1.size(); ++i) total += grads.w1[i] * dir.w1[i];
    for (std::size_t i = 0; i < grads.b1.size(); ++i) total += grads.b1[i] * dir.b1[i];
    for (std::size_t i = 0; i < grads.w2.size(); ++i) total += grads.w2[i] * dir.w2[i];
    for (std::size_t i = 0; i < grads.b2.size(); ++i) total += grads.b2[i] * dir.b2[i];
    return total;
}

double rel_err(double a, double b) {
    return std::fabs(a - b) / std::max({std::fabs(a), std::fabs(b), 1e-300});
}

void criterion_gradient_fidelity() {
    Timer timer;
    bool pass = true;
    std::string detail;
    const double h = 1e-5;
    double worst_free = 0.0, worst_contact = 0.0;
    int contact_checked = 0;

    SimConfig config;
    config.steps = 50;

    for (std::uint64_t robot = 1; robot <= 10 && pass; ++robot) {
        Rng genome_rng(robot);
        const Morphology base = decode(random_genome(genome_rng, {4, 3}));
        Rng params_rng(1000 + robot);
        const ControllerParams params = init_params(
            params_rng, sensor_count(base.mass_count()), base.active_spring_count, 1.0);

        // Contact-free: horizontal momentum conservation makes the
        // displacement loss exactly flat in the parameters, so the reverse
        // pass is probed with a random linear functional of the final state.
        Morphology airborne = base;
        for (auto& p : airborne.masses) p.y += 10.0;
        AdjointSeed probe;
        Rng probe_rng(2000 + robot);
        probe.dpos.resize(static_cast<std::size_t>(base.mass_count()));
        probe.dvel.resize(static_cast<std::size_t>(base.mass_count()));
        for (auto& v : probe.dpos) v = Vec2{probe_rng.normal(), probe_rng.normal()};
        for (auto& v : probe.dvel) v = Vec2{probe_rng.normal(), probe_rng.normal()};
        const Direction dir = random_direction(params, 3000 + robot);

        const GradientResult analytic = rollout_adjoint(airborne, params, flat_terrain(), config,
                                                        FrictionMode::NoSlip, 0, probe);
        const RolloutResult plus = rollout(airborne, displaced(params, dir, h), flat_terrain(),
                                           config, FrictionMode::NoSlip);
        const RolloutResult minus = rollout(airborne, displaced(params, dir, -h), flat_terrain(),
                                            config, FrictionMode::NoSlip);
        if (analytic.unstable || plus.unstable || minus.unstable) {
            pass = false;
            detail = "airborne rollout unstable for robot " + std::to_string(robot);
            break;
        }
        auto probe_value = [&](const SimState& s) {
            double total = 0.0;
            for (std::size_t i = 0; i < s.positions.size(); ++i)
                total += dot(s.positions[i], probe.dpos[i]) + dot(s.velocities[i], probe.dvel[i]);
            return total;
        };
        const double fd =
            (probe_value(plus.final_state) - probe_value(minus.final_state)) / (2.0 * h);
        const double err = rel_err(directional(analytic.grads, dir), fd);
        worst_free = std::max(worst_free, err);
        if (err >= 1e-4) {
            pass = false;
            detail = "contact-free rel err " + fmt(err) + " for robot " + std::to_string(robot);
            break;
        }

        // Across one no-slip landing, loss gradient vs finite differences,
        // guarded so both evaluations stay on the branches of the base run.
        Morphology dropped = base;
        for (auto& p : dropped.masses) p.y += 0.05;
        bool contact_done = false;
        for (std::uint64_t attempt = 0; attempt < 6 && !contact_done; ++attempt) {
            const Direction cdir = random_direction(params, 4000 + 10 * robot + attempt);
            BranchTrace base_trace, plus_trace, minus_trace;
            const RolloutResult cbase =
                rollout(dropped, params, flat_terrain(), config, FrictionMode::NoSlip,
                        &base_trace);
            const RolloutResult cplus = rollout(dropped, displaced(params, cdir, h),
                                                flat_terrain(), config, FrictionMode::NoSlip,
                                                &plus_trace);
            const RolloutResult cminus = rollout(dropped, displaced(params, cdir, -h),
                                                 flat_terrain(), config, FrictionMode::NoSlip,
                                                 &minus_trace);
            if (cbase.unstable || cplus.unstable || cminus.unstable) break;
            bool contacted = false;
            for (auto flags : base_trace) contacted |= (flags & 1) != 0;
            if (!contacted || plus_trace != base_trace || minus_trace != base_trace) continue;

            const GradientResult canalytic =
                gradient(dropped, params, flat_terrain(), config, FrictionMode::NoSlip);
            const double cfd = (cplus.loss - cminus.loss) / (2.0 * h);
            const double cerr = rel_err(directional(canalytic.grads, cdir), cfd);
            worst_contact = std::max(worst_contact, cerr);
            if (cerr >= 1e-2) {
                pass = false;
                detail = "contact rel err " + fmt(cerr) + " for robot " + std::to_string(robot);
            }
            contact_done = true;
            ++contact_checked;
        }
        if (!pass) break;
    }

    if (pass && contact_checked < 8) {
        pass = false;
        detail = "only " + std::to_string(contact_checked) + " branch-consistent contact checks";
    }
    const double elapsed = timer.seconds();
    if (pass && elapsed >= 120.0) {
        pass = false;
        detail = "runtime bound exceeded";
    }
    if (pass)
        detail = "10 robots: contact-free worst rel err " + fmt(worst_free) + " (< 1e-4), contact worst " +
                 fmt(worst_contact) + " (< 1e-2, " + std::to_string(contact_checked) + " checks)";
    report(2, pass, "gradient fidelity", detail, elapsed);
}

// ---------------------------------------------------------------- criterion 3

void criterion_conservation() {
    Timer timer;
    bool pass = true;
    std::string detail;
    double worst = 0.0;

    SimConfig config;
    config.gravity = 0.0;
    config.damping = 0.0;
    config.steps = 1000;

    for (std::uint64_t seed = 1; seed <= 20 && pass; ++seed) {
        Rng genome_rng(seed);
        Morphology morph = decode(random_genome(genome_rng, {4, 2}));
        for (auto& p : morph.masses) p.y += 1000.0; // no ground interaction
        Rng params_rng(500 + seed);
        const ControllerParams params = init_params(
            params_rng, sensor_count(morph.mass_count()), morph.active_spring_count, 1.0);
        const RolloutResult result =
            rollout(morph, params, flat_terrain(), config, FrictionMode::NoSlip);
        if (result.unstable) {
            pass = false;
            detail = "unstable rollout for seed " + std::to_string(seed);
            break;
        }
        const Vec2 start = result.com_trace.front();
        for (const auto& com : result.com_trace) {
            worst = std::max({worst, std::fabs(com.x - start.x), std::fabs(com.y - start.y)});
        }
        if (worst >= 1e-9) {
            pass = false;
            detail = "CoM drift " + fmt(worst) + " for seed " + std::to_string(seed);
        }
    }
    const double elapsed = timer.seconds();
    if (pass && elapsed >= 30.0) {
        pass = false;
        detail = "runtime bound exceeded";
    }
    if (pass) detail = "20 seeds, 1000 steps: max CoM drift " + fmt(worst) + " (< 1e-9)";
    report(3, pass, "momentum conservation", detail, elapsed);
}

// ---------------------------------------------------------------- criterion 4

void criterion_non_penetration() {
    Timer timer;
    bool pass = true;
    std::string detail;
    double worst_gap = 0.0;

    SimConfig config;
    config.steps = 1000;

    for (std::uint64_t seed = 1; seed <= 100 && pass; ++seed) {
        Rng terrain_rng(seed);
        const Terrain terrain = generate_rugged(terrain_rng, {-0.3, 0.3}, {0.1, 0.3});
        Rng genome_rng(10000 + seed);
        const Morphology morph = decode(random_genome(genome_rng, {5, 3}));
        Rng params_rng(20000 + seed);
        const ControllerParams params = init_params(
            params_rng, sensor_count(morph.mass_count()), morph.active_spring_count, 1.0);

        const SimState initial = make_initial_state(morph, terrain);
        SimState state = initial;
        SimState next;
        for (int t = 0; t < config.steps; ++t) {
            const bool ok = detail::step_once(state, morph, params, terrain, config,
                                              FrictionMode::MinNormTangent, initial, next,
                                              nullptr);
            std::swap(state, next);
            if (!ok) break; // unstable rollouts are filtered elsewhere
            for (const auto& p : state.positions) {
                const double gap = terrain.height(p.x) - p.y;
                worst_gap = std::max(worst_gap, gap);
                if (gap > 1e-9) {
                    pass = false;
                    detail = "mass " + fmt(gap) + " below ground, seed " + std::to_string(seed);
                    break;
                }
            }
            if (!pass) break;
        }
    }
    const double elapsed = timer.seconds();
    if (pass)
        detail = "100 rugged rollouts, 1000 steps: worst penetration " + fmt(worst_gap) +
                 " (<= 1e-9)";
    report(4, pass, "ground non-penetration", detail, elapsed);
}

// ------------------------------------------------------- criteria 5 and 8

RunLog desk_scale_run() {
    EvolveSetup setup;
    setup.dims = {5, 8};
    setup.evo.pop_size = 32;
    setup.evo.generations = 30;
    setup.evo.crossover_enabled = false;
    setup.evo.seed = 1;
    setup.terrain = flat_terrain();
    setup.friction = FrictionMode::NoSlip;
    setup.workers = hw_workers();
    setup.config_hash = "acceptance5";
    return evolve(setup);
}

void criterion_evolution_trend(const RunLog& log) {
    Timer timer;
    bool pass = true;
    std::string detail;

    if (log.stats.size() != 31) {
        pass = false;
        detail = "expected 31 stats rows, got " + std::to_string(log.stats.size());
    }
    for (std::size_t g = 1; g < log.stats.size() && pass; ++g) {
        if (log.stats[g].best_trained < log.stats[g - 1].best_trained) {
            pass = false;
            detail = "best fitness dropped at generation " + std::to_string(g);
        }
    }
    double final_best = 0.0, final_initial = 0.0;
    if (pass) {
        final_best = log.stats.back().best_trained;
        final_initial = log.stats.back().best_initial;
        if (final_best < 2.0 * final_initial) {
            pass = false;
            detail = "final best " + fmt(final_best) + " < 2x its initial " + fmt(final_initial);
        }
    }
    if (pass)
        detail = "best fitness non-decreasing over 30 generations; final best " + fmt(final_best) +
                 " >= 2x its iteration-0 displacement " + fmt(final_initial);
    report(5, pass, "desk-scale evolution trend", detail, timer.seconds());
}

void criterion_filter(const RunLog& flat_log) {
    Timer timer;
    bool pass = true;
    std::string detail;

    long invalid = 0, evaluated = 0;
    for (const auto& row : flat_log.stats) {
        invalid += row.invalid_count;
        evaluated += 32;
    }

    // second desk-scale run over rugged terrain with the modified friction
    EvolveSetup setup;
    setup.dims = {5, 3};
    setup.evo.pop_size = 8;
    setup.evo.generations = 4;
    setup.evo.seed = 3;
    Rng terrain_rng(9);
    setup.terrain = generate_rugged(terrain_rng, {-0.3, 0.3}, {0.1, 0.3});
    setup.friction = FrictionMode::MinNormTangent;
    setup.workers = hw_workers();
    setup.config_hash = "acceptance8";
    const RunLog rugged_log = evolve(setup);
    for (const auto& row : rugged_log.stats) {
        invalid += row.invalid_count;
        evaluated += 8;
    }

    const double fraction = static_cast<double>(invalid) / static_cast<double>(evaluated);
    if (fraction >= 0.05) {
        pass = false;
        detail = "invalid fraction " + fmt(fraction) + " >= 5%";
    } else {
        detail = std::to_string(invalid) + "/" + std::to_string(evaluated) +
                 " designs filtered (" + fmt(100.0 * fraction) + "%, < 5%)";
    }
    report(8, pass, "instability filter rate", detail, timer.seconds());
}

// ---------------------------------------------------------------- criterion 6

void criterion_mutation_rate() {
    Timer timer;
    GeometryMask mask(13, 22);
    Rng fill_rng(4);
    for (auto& bit : mask.bits) bit = fill_rng.bernoulli(0.5) ? 1 : 0;

    Rng rng(42);
    const double p = 1.0 / (22.0 * 13.0);
    long total = 0;
    const int trials = 100000;
    for (int i = 0; i < trials; ++i) {
        int flips = 0;
        flip_bits(mask, p, rng, &flips);
        total += flips;
    }
    const double mean = static_cast<double>(total) / trials;
    const bool pass = mean >= 0.97 && mean <= 1.03;
    report(6, pass, "mutation rate",
           "mean first-attempt flips " + fmt(mean) + " over 1e5 trials (target [0.97, 1.03])",
           timer.seconds());
}

// ---------------------------------------------------------------- criterion 7

void criterion_crossover_masking() {
    Timer timer;
    bool pass = true;
    std::string detail;

    const LatticeDims dims{8, 5};
    const auto index = build_lattice_index(dims);
    Rng rng(11);
    for (int trial = 0; trial < 50 && pass; ++trial) {
        const Genome parent = random_genome(rng, dims);
        const GeometryMask expr = expressed_cells(parent.geometry, index);
        for (auto method : {CrossoverMethod::Distinct, CrossoverMethod::Joint}) {
            const auto [a, b] = align_and_cross_geometry(parent.geometry, parent.geometry, index,
                                                         rng, method, 0.0, 0.0);
            if (!a.has_value() || !b.has_value() || *a != expr || *b != expr) {
                pass = false;
                detail = "identical parents with zero fractions did not return the parent LCC";
            }
        }
    }

    double frac35 = 0.0, frac25 = 0.0;
    if (pass) {
        GeometryMask cells(100, 100);
        std::fill(cells.bits.begin(), cells.bits.end(), 1);
        Rng mc(12);
        long zeroed35 = 0, zeroed25 = 0, total = 0;
        for (int trial = 0; trial < 100; ++trial) { // 1e6 cells per fraction
            zeroed35 += cells.count() - zero_cells(cells, 0.35, mc).count();
            zeroed25 += cells.count() - zero_cells(cells, 0.25, mc).count();
            total += cells.count();
        }
        frac35 = static_cast<double>(zeroed35) / total;
        frac25 = static_cast<double>(zeroed25) / total;
        if (std::fabs(frac35 - 0.35) > 0.01 * 0.35 || std::fabs(frac25 - 0.25) > 0.01 * 0.25) {
            pass = false;
            detail = "zeroing fractions " + fmt(frac35) + " / " + fmt(frac25) + " off target";
        }
    }
    if (pass)
        detail = "identical parents reproduce the parent LCC; zeroing fractions " + fmt(frac35) +
                 " / " + fmt(frac25) + " within 1% of 0.35 / 0.25";
    report(7, pass, "crossover masking", detail, timer.seconds());
}

// ---------------------------------------------------------------- criterion 9

void criterion_spearman() {
    Timer timer;
    bool pass = true;
    std::string detail;
    double worst = 0.0;
    long cases = 0;

    for (int n = 2; n <= 8 && pass; ++n) {
        std::vector<double> xs(static_cast<std::size_t>(n));
        std::iota(xs.begin(), xs.end(), 1.0);
        std::vector<double> ys = xs;
        do {
            const double mine = spearman(xs, ys);
            const double oracle = oracles::spearman_oracle(xs, ys);
            worst = std::max(worst, std::fabs(mine - oracle));
            ++cases;
            if (worst > 1e-12) {
                pass = false;
                detail = "oracle disagreement " + fmt(worst);
                break;
            }
        } while (std::next_permutation(ys.begin(), ys.end()));
    }
    if (pass) {
        const std::vector<double> xs{1, 2, 3, 4};
        const std::vector<double> ys{2, 1, 4, 3};
        const double rho = spearman(xs, ys);
        if (std::fabs(rho - 0.6) > 1e-12) {
            pass = false;
            detail = "worked example gave " + fmt(rho);
        } else {
            detail = std::to_string(cases) +
                     " permutations match the rank-Pearson oracle; worked example = 0.6";
        }
    }
    report(9, pass, "spearman correlation", detail, timer.seconds());
}

// --------------------------------------------------------------- criterion 10

void criterion_determinism_resume() {
    Timer timer;
    bool pass = true;
    std::string detail;

    namespace fs = std::filesystem;
    const fs::path dir = fs::temp_directory_path() / "evospring_acceptance10";
    fs::remove_all(dir);
    fs::create_directories(dir);

    EvolveSetup setup;
    setup.dims = {4, 3};
    setup.evo.pop_size = 8;
    setup.evo.generations = 3;
    setup.evo.seed = 7;
    setup.sim.steps = 250;
    setup.learn.iterations = 8;
    setup.terrain = flat_terrain();
    setup.config_hash = "acceptance10csv0";

    auto run_csv = [&](int workers, const std::string& name, bool checkpoints) {
        EvolveSetup s = setup;
        s.workers = workers;
        if (checkpoints) s.checkpoint_dir = (dir / name).string();
        const RunLog log = evolve(s);
        const std::string path = (dir / (name + ".csv")).string();
        export_run_csv(log, path);
        return read_text_file(path);
    };

    const std::string serial = run_csv(1, "serial", true);
    const std::string parallel = run_csv(8, "parallel", false);
    if (serial != parallel) {
        pass = false;
        detail = "worker counts 1 and 8 produced different run CSVs";
    }

    if (pass) {
        const Checkpoint mid = read_checkpoint(checkpoint_path((dir / "serial").string(), 1));
        const RunLog resumed = evolve_resume(setup, mid);
        const std::string resumed_path = (dir / "resumed.csv").string();
        export_run_csv(resumed, resumed_path);
        if (read_text_file(resumed_path) != serial) {
            pass = false;
            detail = "resumed run CSV differs from the uninterrupted run";
        }
    }
    fs::remove_all(dir);
    if (pass) detail = "run CSVs byte-identical across workers 1/8 and across resume";
    report(10, pass, "determinism and resume", detail, timer.seconds());
}

} // namespace

int main(int argc, char** argv) {
    std::set<int> selected;
    for (int i = 1; i < argc; ++i) selected.insert(std::atoi(argv[i]));
    auto wanted = [&](int c) { return selected.empty() || selected.count(c) > 0; };

    if (wanted(1)) criterion_lattice();
    if (wanted(2)) criterion_gradient_fidelity();
    if (wanted(3)) criterion_conservation();
    if (wanted(4)) criterion_non_penetration();
    if (wanted(6)) criterion_mutation_rate();
    if (wanted(7)) criterion_crossover_masking();
    if (wanted(9)) criterion_spearman();
    if (wanted(10)) criterion_determinism_resume();

    if (wanted(5) || wanted(8)) {
        Timer timer;
        const RunLog log = desk_scale_run();
        std::printf("       desk-scale run: pop 32, 30 generations, %.1f s\n", timer.seconds());
        std::fflush(stdout);
        if (wanted(5)) criterion_evolution_trend(log);
        if (wanted(8)) criterion_filter(log);
    }

    if (g_failures == 0) {
        std::printf("all selected acceptance criteria passed\n");
        return 0;
    }
    std::printf("%d criterion(s) failed\n", g_failures);
    return 1;
}
