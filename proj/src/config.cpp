#include "evospring/config.hpp"

#include "evospring/errors.hpp"
#include "evospring/io.hpp"

#include <algorithm>
#include <cctype>
#include <sstream>

namespace evospring {

namespace {

std::string trim(const std::string& s) {
    std::size_t lo = 0, hi = s.size();
    while (lo < hi && std::isspace(static_cast<unsigned char>(s[lo]))) ++lo;
    while (hi > lo && std::isspace(static_cast<unsigned char>(s[hi - 1]))) --hi;
    return s.substr(lo, hi - lo);
}

struct Field {
    std::string section;
    std::string key;
    std::string value;
    int line = 0;
};

std::vector<Field> tokenize(const std::string& text, const std::string& filename) {
    std::vector<Field> fields;
    std::istringstream stream(text);
    std::string line;
    std::string section;
    int line_no = 0;
    while (std::getline(stream, line)) {
        ++line_no;
        const std::string stripped = trim(line);
        if (stripped.empty() || stripped[0] == '#') continue;
        if (stripped.front() == '[') {
            if (stripped.back() != ']')
                throw ConfigError(filename + ":" + std::to_string(line_no) +
                                  ": malformed section header '" + stripped + "'");
            section = trim(stripped.substr(1, stripped.size() - 2));
            continue;
        }
        const auto eq = stripped.find('=');
        if (eq == std::string::npos)
            throw ConfigError(filename + ":" + std::to_string(line_no) +
                              ": expected 'key = value', got '" + stripped + "'");
        Field field;
        field.section = section;
        field.key = trim(stripped.substr(0, eq));
        std::string value = stripped.substr(eq + 1);
        // inline comments: a '#' preceded by whitespace starts one
        for (std::size_t i = 1; i < value.size(); ++i) {
            if (value[i] == '#' && std::isspace(static_cast<unsigned char>(value[i - 1]))) {
                value.resize(i);
                break;
            }
        }
        field.value = trim(value);
        field.line = line_no;
        fields.push_back(field);
    }
    return fields;
}

[[noreturn]] void bad_field(const Field& f, const std::string& filename, const std::string& why) {
    throw ConfigError(filename + ":" + std::to_string(f.line) + ": field '" + f.section + "." +
                      f.key + "': " + why);
}

double as_double(const Field& f, const std::string& filename) {
    try {
        std::size_t used = 0;
        const double v = std::stod(f.value, &used);
        if (used != f.value.size()) throw std::invalid_argument("trailing characters");
        return v;
    } catch (const std::exception& e) {
        bad_field(f, filename, std::string("bad number '") + f.value + "' (" + e.what() + ")");
    }
}

int as_int(const Field& f, const std::string& filename) {
    try {
        std::size_t used = 0;
        const int v = std::stoi(f.value, &used);
        if (used != f.value.size()) throw std::invalid_argument("trailing characters");
        return v;
    } catch (const std::exception& e) {
        bad_field(f, filename, std::string("bad integer '") + f.value + "' (" + e.what() + ")");
    }
}

std::uint64_t as_u64(const Field& f, const std::string& filename) {
    try {
        std::size_t used = 0;
        const std::uint64_t v = std::stoull(f.value, &used);
        if (used != f.value.size()) throw std::invalid_argument("trailing characters");
        return v;
    } catch (const std::exception& e) {
        bad_field(f, filename, std::string("bad unsigned '") + f.value + "' (" + e.what() + ")");
    }
}

bool as_bool(const Field& f, const std::string& filename) {
    if (f.value == "true" || f.value == "1") return true;
    if (f.value == "false" || f.value == "0") return false;
    bad_field(f, filename, "expected true/false");
}

} // namespace

RunConfig parse_config_text(const std::string& text, const std::string& filename) {
    RunConfig cfg;
    for (const Field& f : tokenize(text, filename)) {
        const std::string id = f.section + "." + f.key;
        if (id == "lattice.a") cfg.dims.a = as_int(f, filename);
        else if (id == "lattice.b") cfg.dims.b = as_int(f, filename);
        else if (id == "sim.dt") cfg.sim.dt = as_double(f, filename);
        else if (id == "sim.steps") cfg.sim.steps = as_int(f, filename);
        else if (id == "sim.stiffness") cfg.sim.stiffness = as_double(f, filename);
        else if (id == "sim.gravity") cfg.sim.gravity = as_double(f, filename);
        else if (id == "sim.damping") cfg.sim.damping = as_double(f, filename);
        else if (id == "sim.act_amplitude") cfg.sim.act_amplitude = as_double(f, filename);
        else if (id == "sim.mass") cfg.sim.mass = as_double(f, filename);
        else if (id == "learn.iterations") cfg.learn.iterations = as_int(f, filename);
        else if (id == "learn.lr_constant") cfg.learn.lr_constant = as_double(f, filename);
        else if (id == "learn.lr_eps") cfg.learn.lr_eps = as_double(f, filename);
        else if (id == "learn.max_lr") cfg.learn.max_lr = as_double(f, filename);
        else if (id == "learn.xavier_gain") cfg.learn.xavier_gain = as_double(f, filename);
        else if (id == "learn.checkpoint_every") cfg.learn.checkpoint_every = as_int(f, filename);
        else if (id == "evolution.pop_size") cfg.evo.pop_size = as_int(f, filename);
        else if (id == "evolution.generations") cfg.evo.generations = as_int(f, filename);
        else if (id == "evolution.crossover_enabled")
            cfg.evo.crossover_enabled = as_bool(f, filename);
        else if (id == "evolution.crossover_probability")
            cfg.evo.crossover_probability = as_double(f, filename);
        else if (id == "evolution.crossover_method") {
            if (f.value == "distinct") cfg.evo.crossover_method = CrossoverMethod::Distinct;
            else if (f.value == "joint") cfg.evo.crossover_method = CrossoverMethod::Joint;
            else bad_field(f, filename, "expected distinct|joint");
        } else if (id == "evolution.distinct_zero_frac")
            cfg.evo.distinct_zero_frac = as_double(f, filename);
        else if (id == "evolution.joint_zero_frac")
            cfg.evo.joint_zero_frac = as_double(f, filename);
        else if (id == "evolution.loss_delta_threshold")
            cfg.evo.loss_delta_threshold = as_double(f, filename);
        else if (id == "terrain.kind") {
            if (f.value == "flat") cfg.terrain.kind = TerrainKind::Flat;
            else if (f.value == "rugged") cfg.terrain.kind = TerrainKind::Rugged;
            else if (f.value == "file") cfg.terrain.kind = TerrainKind::File;
            else bad_field(f, filename, "expected flat|rugged|file");
        } else if (id == "terrain.seed") cfg.terrain.seed = as_u64(f, filename);
        else if (id == "terrain.slope_min") cfg.terrain.slope_min = as_double(f, filename);
        else if (id == "terrain.slope_max") cfg.terrain.slope_max = as_double(f, filename);
        else if (id == "terrain.length_min") cfg.terrain.length_min = as_double(f, filename);
        else if (id == "terrain.length_max") cfg.terrain.length_max = as_double(f, filename);
        else if (id == "terrain.max_extent") cfg.terrain.max_extent = as_double(f, filename);
        else if (id == "terrain.file") cfg.terrain.file = f.value;
        else if (id == "run.friction") {
            if (f.value == "auto") cfg.friction = FrictionChoice::Auto;
            else if (f.value == "noslip") cfg.friction = FrictionChoice::NoSlip;
            else if (f.value == "min_nt") cfg.friction = FrictionChoice::MinNormTangent;
            else bad_field(f, filename, "expected auto|noslip|min_nt");
        } else if (id == "run.seed") cfg.seed = as_u64(f, filename);
        else if (id == "run.workers") cfg.workers = as_int(f, filename);
        else if (id == "run.output_dir") cfg.output_dir = f.value;
        else if (id == "run.checkpoint_every_gens")
            cfg.checkpoint_every_gens = as_int(f, filename);
        else bad_field(f, filename, "unknown key");
    }

    if (cfg.dims.a < 1 || cfg.dims.b < 1)
        throw ConfigError(filename + ": lattice dims must be >= 1");
    if (cfg.sim.dt <= 0 || cfg.sim.steps < 1 || cfg.sim.stiffness <= 0)
        throw ConfigError(filename + ": sim.dt, sim.steps, sim.stiffness must be positive");
    if (cfg.sim.act_amplitude < 0 || cfg.sim.act_amplitude >= 1)
        throw ConfigError(filename + ": sim.act_amplitude must lie in [0, 1)");
    if (cfg.evo.pop_size < 2)
        throw ConfigError(filename + ": evolution.pop_size must be >= 2");
    if (cfg.evo.crossover_probability < 0 || cfg.evo.crossover_probability > 1 ||
        cfg.evo.distinct_zero_frac < 0 || cfg.evo.distinct_zero_frac > 1 ||
        cfg.evo.joint_zero_frac < 0 || cfg.evo.joint_zero_frac > 1)
        throw ConfigError(filename + ": evolution probabilities must lie in [0, 1]");
    if (cfg.learn.iterations < 1)
        throw ConfigError(filename + ": learn.iterations must be >= 1");
    if (cfg.terrain.kind == TerrainKind::Rugged &&
        (cfg.terrain.slope_min > cfg.terrain.slope_max ||
         cfg.terrain.length_min > cfg.terrain.length_max || cfg.terrain.length_min <= 0))
        throw ConfigError(filename + ": terrain ranges are invalid");
    if (cfg.terrain.kind == TerrainKind::File && cfg.terrain.file.empty())
        throw ConfigError(filename + ": terrain.kind=file needs terrain.file");
    cfg.evo.seed = cfg.seed;
    return cfg;
}

RunConfig load_config_file(const std::string& path) {
    return parse_config_text(read_text_file(path), path);
}

std::string canonical_config_text(const RunConfig& cfg) {
    std::string text;
    auto kv = [&](const std::string& key, const std::string& value) {
        text += key + " = " + value + "\n";
    };
    kv("lattice.a", std::to_string(cfg.dims.a));
    kv("lattice.b", std::to_string(cfg.dims.b));
    kv("sim.dt", format_double(cfg.sim.dt));
    kv("sim.steps", std::to_string(cfg.sim.steps));
    kv("sim.stiffness", format_double(cfg.sim.stiffness));
    kv("sim.gravity", format_double(cfg.sim.gravity));
    kv("sim.damping", format_double(cfg.sim.damping));
    kv("sim.act_amplitude", format_double(cfg.sim.act_amplitude));
    kv("sim.mass", format_double(cfg.sim.mass));
    kv("learn.iterations", std::to_string(cfg.learn.iterations));
    kv("learn.lr_constant", format_double(cfg.learn.lr_constant));
    kv("learn.lr_eps", format_double(cfg.learn.lr_eps));
    kv("learn.max_lr", format_double(cfg.learn.max_lr));
    kv("learn.xavier_gain", format_double(cfg.learn.xavier_gain));
    kv("learn.checkpoint_every", std::to_string(cfg.learn.checkpoint_every));
    kv("evolution.pop_size", std::to_string(cfg.evo.pop_size));
    kv("evolution.generations", std::to_string(cfg.evo.generations));
    kv("evolution.crossover_enabled", cfg.evo.crossover_enabled ? "true" : "false");
    kv("evolution.crossover_probability", format_double(cfg.evo.crossover_probability));
    kv("evolution.crossover_method",
       cfg.evo.crossover_method == CrossoverMethod::Distinct ? "distinct" : "joint");
    kv("evolution.distinct_zero_frac", format_double(cfg.evo.distinct_zero_frac));
    kv("evolution.joint_zero_frac", format_double(cfg.evo.joint_zero_frac));
    kv("evolution.loss_delta_threshold", format_double(cfg.evo.loss_delta_threshold));
    switch (cfg.terrain.kind) {
    case TerrainKind::Flat:
        kv("terrain.kind", "flat");
        break;
    case TerrainKind::Rugged:
        kv("terrain.kind", "rugged");
        kv("terrain.seed", format_u64(cfg.terrain.seed));
        kv("terrain.slope_min", format_double(cfg.terrain.slope_min));
        kv("terrain.slope_max", format_double(cfg.terrain.slope_max));
        kv("terrain.length_min", format_double(cfg.terrain.length_min));
        kv("terrain.length_max", format_double(cfg.terrain.length_max));
        kv("terrain.max_extent", format_double(cfg.terrain.max_extent));
        break;
    case TerrainKind::File: {
        // Hash the resolved segments so the hash tracks terrain content, not
        // the path it was loaded from.
        const Terrain terrain = read_terrain_file(cfg.terrain.file);
        kv("terrain.kind", "file");
        for (const auto& seg : terrain.segments)
            kv("terrain.segment", format_double(seg.start_x) + " " + format_double(seg.start_y) +
                                      " " + format_double(seg.slope) + " " +
                                      format_double(seg.length_x));
        break;
    }
    }
    switch (cfg.friction) {
    case FrictionChoice::Auto: kv("run.friction", "auto"); break;
    case FrictionChoice::NoSlip: kv("run.friction", "noslip"); break;
    case FrictionChoice::MinNormTangent: kv("run.friction", "min_nt"); break;
    }
    kv("run.seed", format_u64(cfg.seed));
    return text;
}

std::string config_hash(const RunConfig& cfg) {
    return fnv1a_hex(canonical_config_text(cfg));
}

std::string emit_config_text(const RunConfig& cfg) {
    std::string text = "[lattice]\n";
    text += "a = " + std::to_string(cfg.dims.a) + "\n";
    text += "b = " + std::to_string(cfg.dims.b) + "\n";
    text += "\n[sim]\n";
    text += "dt = " + format_double(cfg.sim.dt) + "\n";
    text += "steps = " + std::to_string(cfg.sim.steps) + "\n";
    text += "stiffness = " + format_double(cfg.sim.stiffness) + "\n";
    text += "gravity = " + format_double(cfg.sim.gravity) + "\n";
    text += "damping = " + format_double(cfg.sim.damping) + "\n";
    text += "act_amplitude = " + format_double(cfg.sim.act_amplitude) + "\n";
    text += "mass = " + format_double(cfg.sim.mass) + "\n";
    text += "\n[learn]\n";
    text += "iterations = " + std::to_string(cfg.learn.iterations) + "\n";
    text += "lr_constant = " + format_double(cfg.learn.lr_constant) + "\n";
    text += "lr_eps = " + format_double(cfg.learn.lr_eps) + "\n";
    text += "max_lr = " + format_double(cfg.learn.max_lr) + "\n";
    text += "xavier_gain = " + format_double(cfg.learn.xavier_gain) + "\n";
    text += "checkpoint_every = " + std::to_string(cfg.learn.checkpoint_every) + "\n";
    text += "\n[evolution]\n";
    text += "pop_size = " + std::to_string(cfg.evo.pop_size) + "\n";
    text += "generations = " + std::to_string(cfg.evo.generations) + "\n";
    text += std::string("crossover_enabled = ") +
            (cfg.evo.crossover_enabled ? "true" : "false") + "\n";
    text += "crossover_probability = " + format_double(cfg.evo.crossover_probability) + "\n";
    text += std::string("crossover_method = ") +
            (cfg.evo.crossover_method == CrossoverMethod::Distinct ? "distinct" : "joint") + "\n";
    text += "distinct_zero_frac = " + format_double(cfg.evo.distinct_zero_frac) + "\n";
    text += "joint_zero_frac = " + format_double(cfg.evo.joint_zero_frac) + "\n";
    text += "loss_delta_threshold = " + format_double(cfg.evo.loss_delta_threshold) + "\n";
    text += "\n[terrain]\n";
    switch (cfg.terrain.kind) {
    case TerrainKind::Flat: text += "kind = flat\n"; break;
    case TerrainKind::Rugged: text += "kind = rugged\n"; break;
    case TerrainKind::File: text += "kind = file\n"; break;
    }
    text += "seed = " + format_u64(cfg.terrain.seed) + "\n";
    text += "slope_min = " + format_double(cfg.terrain.slope_min) + "\n";
    text += "slope_max = " + format_double(cfg.terrain.slope_max) + "\n";
    text += "length_min = " + format_double(cfg.terrain.length_min) + "\n";
    text += "length_max = " + format_double(cfg.terrain.length_max) + "\n";
    text += "max_extent = " + format_double(cfg.terrain.max_extent) + "\n";
    if (!cfg.terrain.file.empty()) text += "file = " + cfg.terrain.file + "\n";
    text += "\n[run]\n";
    switch (cfg.friction) {
    case FrictionChoice::Auto: text += "friction = auto\n"; break;
    case FrictionChoice::NoSlip: text += "friction = noslip\n"; break;
    case FrictionChoice::MinNormTangent: text += "friction = min_nt\n"; break;
    }
    text += "seed = " + format_u64(cfg.seed) + "\n";
    text += "workers = " + std::to_string(cfg.workers) + "\n";
    text += "output_dir = " + cfg.output_dir + "\n";
    text += "checkpoint_every_gens = " + std::to_string(cfg.checkpoint_every_gens) + "\n";
    return text;
}

Terrain resolve_terrain(const RunConfig& cfg) {
    switch (cfg.terrain.kind) {
    case TerrainKind::Flat:
        return flat_terrain();
    case TerrainKind::Rugged: {
        Rng rng = Rng::stream(cfg.terrain.seed, {rng_tag::terrain});
        return generate_rugged(rng, {cfg.terrain.slope_min, cfg.terrain.slope_max},
                               {cfg.terrain.length_min, cfg.terrain.length_max},
                               cfg.terrain.max_extent);
    }
    case TerrainKind::File:
        return read_terrain_file(cfg.terrain.file);
    }
    return flat_terrain();
}

FrictionMode resolve_friction(const RunConfig& cfg, const Terrain& terrain) {
    switch (cfg.friction) {
    case FrictionChoice::NoSlip: return FrictionMode::NoSlip;
    case FrictionChoice::MinNormTangent: return FrictionMode::MinNormTangent;
    case FrictionChoice::Auto: break;
    }
    return terrain.kind == Terrain::Kind::Flat ? FrictionMode::NoSlip
                                               : FrictionMode::MinNormTangent;
}

} // namespace evospring
