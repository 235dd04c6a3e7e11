#pragma once

#include "evospring/controller.hpp"
#include "evospring/evolution.hpp"
#include "evospring/lattice.hpp"
#include "evospring/terrain.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace evospring {

// All file formats are plain text. Floats are written with std::to_chars
// (shortest round-trip form), so parse(write(x)) restores x bit-exactly and
// repeated runs produce byte-identical files.

std::string format_double(double value);
double parse_double(const std::string& token);
std::string format_u64(std::uint64_t value);

// 64-bit FNV-1a, printed as 16 hex digits; used for config hashes.
std::string fnv1a_hex(const std::string& text);

// Genome record: `a b <geometry hex> <springs hex>` on one line. Bits are
// packed row-major, four per hex digit, first bit in the high bit of digit 0.
std::string genome_to_record(const Genome& genome);
Genome genome_from_record(const std::string& record);

void write_genome_file(const std::string& path, const Genome& genome,
                       const std::string& config_hash);
Genome read_genome_file(const std::string& path);

// Controller export: dimensions line `n_in n_active`, then w1, b1, w2, b2 in
// row-major order, one row per line.
void write_params_file(const std::string& path, const ControllerParams& params,
                       const std::string& config_hash);
ControllerParams read_params_file(const std::string& path);

// Terrain file: one `start_x start_y slope length_x` line per segment.
void write_terrain_file(const std::string& path, const Terrain& terrain,
                        const std::string& config_hash);
Terrain read_terrain_file(const std::string& path);

std::string checkpoint_path(const std::string& dir, int generation);
void write_checkpoint(const std::string& path, const Checkpoint& checkpoint);
Checkpoint read_checkpoint(const std::string& path);

// Slurps a whole file; throws IoError when unreadable.
std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);

} // namespace evospring
