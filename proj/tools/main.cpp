// evospring command line: evolve | train | simulate | terrain | stats
//
// Exit codes: 0 success, 1 usage/config error, 2 runtime instability
// (including empty morphologies), 3 I/O failure.

#include "evospring/analysis.hpp"
#include "evospring/config.hpp"
#include "evospring/errors.hpp"
#include "evospring/evolution.hpp"
#include "evospring/io.hpp"
#include "evospring/learning.hpp"
#include "evospring/simulator.hpp"

#include "CLI11.hpp"

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

namespace {

using namespace evospring;

struct CommonFlags {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<int> workers;
    std::optional<std::string> output_dir;
};

void add_common(CLI::App* cmd, CommonFlags& flags) {
    cmd->add_option("--config", flags.config_path, "run configuration file");
    cmd->add_option("--seed", flags.seed, "override run.seed");
    cmd->add_option("--workers", flags.workers, "override run.workers");
    cmd->add_option("--out", flags.output_dir, "override run.output_dir");
}

RunConfig resolve_config(const CommonFlags& flags) {
    RunConfig cfg =
        flags.config_path.empty() ? RunConfig{} : load_config_file(flags.config_path);
    if (flags.seed) {
        cfg.seed = *flags.seed;
        cfg.evo.seed = *flags.seed;
    }
    if (flags.workers) cfg.workers = *flags.workers;
    if (flags.output_dir) cfg.output_dir = *flags.output_dir;
    // Environment override applies to the output directory only.
    if (const char* env = std::getenv("EVOSPRING_OUT")) cfg.output_dir = env;
    return cfg;
}

std::string join(const std::string& dir, const std::string& name) {
    return (std::filesystem::path(dir) / name).string();
}

EvolveSetup make_setup(const RunConfig& cfg, const Terrain& terrain, bool with_checkpoints) {
    EvolveSetup setup;
    setup.dims = cfg.dims;
    setup.evo = cfg.evo;
    setup.sim = cfg.sim;
    setup.learn = cfg.learn;
    setup.terrain = terrain;
    setup.friction = resolve_friction(cfg, terrain);
    setup.workers = cfg.workers;
    setup.config_hash = config_hash(cfg);
    setup.checkpoint_every_gens = cfg.checkpoint_every_gens;
    if (with_checkpoints) setup.checkpoint_dir = cfg.output_dir;
    return setup;
}

int cmd_evolve(const CommonFlags& flags, const std::string& resume_path) {
    const RunConfig cfg = resolve_config(flags);
    const Terrain terrain = resolve_terrain(cfg);
    const EvolveSetup setup = make_setup(cfg, terrain, true);

    write_text_file(join(cfg.output_dir, "config.txt"),
                    "# config_hash=" + setup.config_hash + "\n" + emit_config_text(cfg));
    if (terrain.kind == Terrain::Kind::Rugged)
        write_terrain_file(join(cfg.output_dir, "terrain.txt"), terrain, setup.config_hash);

    RunLog log;
    if (resume_path.empty()) {
        log = evolve(setup);
    } else {
        const Checkpoint ckpt = read_checkpoint(resume_path);
        log = evolve_resume(setup, ckpt);
    }
    export_run_csv(log, join(cfg.output_dir, "run.csv"));

    const auto& last = log.stats.back();
    std::cout << "generations: " << last.generation << "\n"
              << "best trained fitness: " << format_double(last.best_trained) << "\n"
              << "best initial performance: " << format_double(last.best_initial) << "\n"
              << "run directory: " << cfg.output_dir << "\n";
    return 0;
}

int cmd_train(const CommonFlags& flags, const std::string& genome_path, bool random_genome_flag) {
    const RunConfig cfg = resolve_config(flags);
    const Terrain terrain = resolve_terrain(cfg);
    const std::string hash = config_hash(cfg);

    Genome genome;
    if (random_genome_flag) {
        Rng rng = Rng::stream(cfg.seed, {rng_tag::genome, 0});
        genome = evospring::random_genome(rng, cfg.dims);
        write_genome_file(join(cfg.output_dir, "genome.txt"), genome, hash);
    } else {
        genome = read_genome_file(genome_path);
    }

    const Morphology morph = decode(genome);
    Rng rng = Rng::stream(cfg.seed, {rng_tag::train, 0, 0});
    const TrainResult result =
        train(morph, terrain, cfg.sim, cfg.learn, resolve_friction(cfg, terrain), rng);

    std::string csv = "# config_hash=" + hash + "\niteration,loss,lr,grad_norm\n";
    for (std::size_t it = 0; it < result.losses.size(); ++it) {
        csv += std::to_string(it) + "," + format_double(result.losses[it]) + "," +
               format_double(result.lrs[it]) + "," + format_double(result.grad_norms[it]) + "\n";
    }
    write_text_file(join(cfg.output_dir, "train_log.csv"), csv);
    write_params_file(join(cfg.output_dir, "params.txt"), result.best_params, hash);

    std::cout << "fitness: " << format_double(result.fitness) << "\n"
              << "initial performance: " << format_double(result.initial_performance) << "\n"
              << "valid: " << (result.valid ? "true" : "false") << "\n";
    if (!result.valid) {
        std::cerr << "training went unstable; see train_log.csv\n";
        return 2;
    }
    return 0;
}

int cmd_simulate(const CommonFlags& flags, const std::string& genome_path,
                 const std::string& params_path, bool trace_masses) {
    const RunConfig cfg = resolve_config(flags);
    const Terrain terrain = resolve_terrain(cfg);
    const std::string hash = config_hash(cfg);

    const Genome genome = read_genome_file(genome_path);
    const Morphology morph = decode(genome);
    ControllerParams params;
    if (params_path.empty()) {
        // zero controller: pure passive dynamics
        params.n_in = sensor_count(morph.mass_count());
        params.n_out = morph.active_spring_count;
        params.w1.assign(static_cast<std::size_t>(params.n_hidden) * params.n_in, 0.0);
        params.b1.assign(static_cast<std::size_t>(params.n_hidden), 0.0);
        params.w2.assign(static_cast<std::size_t>(params.n_out) * params.n_hidden, 0.0);
        params.b2.assign(static_cast<std::size_t>(params.n_out), 0.0);
    } else {
        params = read_params_file(params_path);
    }
    if (params.n_in != sensor_count(morph.mass_count()) ||
        params.n_out != morph.active_spring_count)
        throw ShapeMismatch("params expect " + std::to_string(params.n_in) + " inputs / " +
                            std::to_string(params.n_out) + " outputs but the genome decodes to " +
                            std::to_string(sensor_count(morph.mass_count())) + " / " +
                            std::to_string(morph.active_spring_count));

    // Re-simulate step by step so per-mass traces can be captured.
    const FrictionMode mode = resolve_friction(cfg, terrain);
    const SimState initial = make_initial_state(morph, terrain);
    SimState state = initial;

    std::string csv = "# config_hash=" + hash + "\nstep,com_x,com_y";
    if (trace_masses)
        for (int i = 0; i < morph.mass_count(); ++i)
            csv += ",m" + std::to_string(i) + "_x,m" + std::to_string(i) + "_y";
    csv += "\n";
    auto emit_row = [&](int step, const SimState& s) {
        const Vec2 com = center_of_mass(s);
        csv += std::to_string(step) + "," + format_double(com.x) + "," + format_double(com.y);
        if (trace_masses)
            for (const auto& p : s.positions)
                csv += "," + format_double(p.x) + "," + format_double(p.y);
        csv += "\n";
    };
    emit_row(0, state);

    bool unstable = false;
    SimState next;
    for (int t = 0; t < cfg.sim.steps && !unstable; ++t) {
        if (!detail::step_once(state, morph, params, terrain, cfg.sim, mode, initial, next,
                               nullptr))
            unstable = true;
        std::swap(state, next);
        for (const auto& p : state.positions)
            if (!std::isfinite(p.x) || !std::isfinite(p.y)) unstable = true;
        if (!unstable) emit_row(t + 1, state);
    }
    write_text_file(join(cfg.output_dir, "trajectory.csv"), csv);
    if (unstable) {
        std::cerr << "simulation went unstable; partial trace written\n";
        return 2;
    }
    const double loss = -(center_of_mass(state).x - center_of_mass(initial).x);
    std::cout << "loss: " << format_double(loss) << "\n"
              << "displacement: " << format_double(-loss) << "\n";
    return 0;
}

int cmd_terrain(const CommonFlags& flags, const std::string& output_path) {
    RunConfig cfg = resolve_config(flags);
    if (cfg.terrain.kind == TerrainKind::Flat) cfg.terrain.kind = TerrainKind::Rugged;
    const Terrain terrain = resolve_terrain(cfg);
    const std::string path =
        output_path.empty() ? join(cfg.output_dir, "terrain.txt") : output_path;
    write_terrain_file(path, terrain, config_hash(cfg));
    std::cout << "segments: " << terrain.segments.size() << "\n"
              << "span: " << format_double(terrain.span_end() - terrain.span_start()) << "\n"
              << "file: " << path << "\n";
    return 0;
}

int cmd_stats(const std::string& run_dir, const std::string& output_path,
              const std::string& best_genome_path) {
    namespace fs = std::filesystem;
    int latest = -1;
    for (const auto& entry : fs::directory_iterator(run_dir)) {
        const std::string name = entry.path().filename().string();
        if (name.rfind("checkpoint_", 0) == 0 && name.size() >= 20) {
            const int gen = std::stoi(name.substr(11, 5));
            latest = std::max(latest, gen);
        }
    }
    if (latest < 0) throw IoError("no checkpoints found in " + run_dir);
    const Checkpoint ckpt = read_checkpoint(checkpoint_path(run_dir, latest));

    std::string csv = "# config_hash=" + ckpt.config_hash + "\n" + run_csv_header() + "\n";
    for (const auto& row : ckpt.stats) csv += run_csv_row(row) + "\n";
    if (output_path.empty())
        std::cout << csv;
    else
        write_text_file(output_path, csv);

    if (!best_genome_path.empty()) {
        const Individual* best = nullptr;
        for (const auto& ind : ckpt.population)
            if (ind.valid && (!best || ind.fitness > best->fitness)) best = &ind;
        if (!best) throw IoError("checkpointed population has no valid individual");
        write_genome_file(best_genome_path, best->genome, ckpt.config_hash);
        std::cout << "best genome (fitness " << format_double(best->fitness) << ") written to "
                  << best_genome_path << "\n";
    }

    const Checkpoint first = read_checkpoint(checkpoint_path(run_dir, 0));
    try {
        const double rho = size_fitness_correlation(first.population);
        std::cout << "gen-0 size/fitness spearman: " << format_double(rho) << "\n";
    } catch (const ZeroVariance&) {
        std::cout << "gen-0 size/fitness spearman: undefined (zero variance)\n";
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"body-plan evolution with differentiable spring-mass training"};
    app.require_subcommand(1);

    CommonFlags evolve_flags, train_flags, sim_flags, terrain_flags;
    std::string resume_path, genome_path, params_path, terrain_out, run_dir, stats_out;
    std::string best_genome_out;
    bool random_genome_flag = false, trace_masses = false;

    auto* evolve_cmd = app.add_subcommand("evolve", "run the evolutionary loop");
    add_common(evolve_cmd, evolve_flags);
    evolve_cmd->add_option("--resume", resume_path, "continue from a checkpoint file");

    auto* train_cmd = app.add_subcommand("train", "train one genome with gradient descent");
    add_common(train_cmd, train_flags);
    train_cmd->add_option("--genome", genome_path, "genome file");
    train_cmd->add_flag("--random", random_genome_flag, "train a random genome instead");

    auto* sim_cmd = app.add_subcommand("simulate", "roll out a genome and export its trajectory");
    add_common(sim_cmd, sim_flags);
    sim_cmd->add_option("--genome", genome_path, "genome file")->required();
    sim_cmd->add_option("--params", params_path, "controller params file (zero controller if omitted)");
    sim_cmd->add_flag("--trace-masses", trace_masses, "include per-mass columns");

    auto* terrain_cmd = app.add_subcommand("terrain", "generate a rugged terrain file");
    add_common(terrain_cmd, terrain_flags);
    terrain_cmd->add_option("--output", terrain_out, "terrain file path");

    auto* stats_cmd = app.add_subcommand("stats", "recompute statistics from checkpoints");
    stats_cmd->add_option("--run-dir", run_dir, "run directory with checkpoints")->required();
    stats_cmd->add_option("--output", stats_out, "write the CSV here instead of stdout");
    stats_cmd->add_option("--best-genome", best_genome_out,
                          "export the fittest surviving genome to this file");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    }

    try {
        if (app.got_subcommand(evolve_cmd)) return cmd_evolve(evolve_flags, resume_path);
        if (app.got_subcommand(train_cmd)) {
            if (genome_path.empty() && !random_genome_flag) {
                std::cerr << "train needs --genome FILE or --random\n";
                return 1;
            }
            return cmd_train(train_flags, genome_path, random_genome_flag);
        }
        if (app.got_subcommand(sim_cmd))
            return cmd_simulate(sim_flags, genome_path, params_path, trace_masses);
        if (app.got_subcommand(terrain_cmd)) return cmd_terrain(terrain_flags, terrain_out);
        if (app.got_subcommand(stats_cmd)) return cmd_stats(run_dir, stats_out, best_genome_out);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    } catch (const ShapeMismatch& e) {
        std::cerr << "shape mismatch: " << e.what() << "\n";
        return 1;
    } catch (const EmptyMorphology& e) {
        std::cerr << "empty morphology: " << e.what() << "\n";
        return 2;
    } catch (const IoError& e) {
        std::cerr << "i/o error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 1;
}
