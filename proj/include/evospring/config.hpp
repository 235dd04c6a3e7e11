#pragma once

#include "evospring/evolution.hpp"
#include "evospring/learning.hpp"
#include "evospring/simulator.hpp"
#include "evospring/terrain.hpp"

#include <cstdint>
#include <string>

namespace evospring {

enum class TerrainKind { Flat, Rugged, File };
enum class FrictionChoice { Auto, NoSlip, MinNormTangent };

struct TerrainConfig {
    TerrainKind kind = TerrainKind::Flat;
    std::uint64_t seed = 0;
    double slope_min = -0.3;
    double slope_max = 0.3;
    double length_min = 0.1;
    double length_max = 0.3;
    double max_extent = 1.25;
    std::string file;
};

// Everything a run needs, parseable from a flat `key = value` file with
// [section] headers. Execution-only fields (workers, output_dir, checkpoint
// cadence) do not change results and stay out of the config hash.
struct RunConfig {
    LatticeDims dims{8, 5};
    SimConfig sim;
    LearnConfig learn;
    EvolutionConfig evo;
    TerrainConfig terrain;
    FrictionChoice friction = FrictionChoice::Auto;
    std::uint64_t seed = 0;
    int workers = 1;
    std::string output_dir = "out";
    int checkpoint_every_gens = 1;
};

// Parses a config file; unknown keys and malformed values are reported with
// file/line/field diagnostics.
RunConfig parse_config_text(const std::string& text, const std::string& filename);
RunConfig load_config_file(const std::string& path);

// Canonical text of the experiment-defining fields; its FNV-1a hash is the
// config hash embedded in every output file.
std::string canonical_config_text(const RunConfig& config);
std::string config_hash(const RunConfig& config);

// Full round-trippable config text, including execution fields.
std::string emit_config_text(const RunConfig& config);

// Builds the terrain the config describes (generating or loading segments).
Terrain resolve_terrain(const RunConfig& config);

// Auto resolves to NoSlip on flat terrain and MinNormTangent otherwise.
FrictionMode resolve_friction(const RunConfig& config, const Terrain& terrain);

} // namespace evospring
