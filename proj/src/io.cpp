#include "evospring/io.hpp"

#include "evospring/errors.hpp"

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <system_error>

namespace evospring {

namespace {

constexpr char kHexDigits[] = "0123456789abcdef";

// Row-major bits, four per hex digit, first bit in the high bit of digit 0.
std::string bits_to_hex(const std::vector<std::uint8_t>& bits) {
    std::string hex;
    hex.reserve((bits.size() + 3) / 4);
    for (std::size_t i = 0; i < bits.size(); i += 4) {
        int digit = 0;
        for (std::size_t k = 0; k < 4 && i + k < bits.size(); ++k)
            if (bits[i + k]) digit |= 8 >> k;
        hex.push_back(kHexDigits[digit]);
    }
    return hex;
}

std::vector<std::uint8_t> hex_to_bits(const std::string& hex, std::size_t n_bits) {
    std::vector<std::uint8_t> bits(n_bits, 0);
    if (hex.size() != (n_bits + 3) / 4)
        throw IoError("hex field length " + std::to_string(hex.size()) +
                      " does not match bit count " + std::to_string(n_bits));
    for (std::size_t i = 0; i < n_bits; ++i) {
        const char c = hex[i / 4];
        int digit = 0;
        if (c >= '0' && c <= '9')
            digit = c - '0';
        else if (c >= 'a' && c <= 'f')
            digit = c - 'a' + 10;
        else
            throw IoError(std::string("bad hex digit '") + c + "'");
        bits[i] = (digit & (8 >> (i % 4))) ? 1 : 0;
    }
    return bits;
}

std::vector<std::string> split_ws(const std::string& line) {
    std::vector<std::string> tokens;
    std::istringstream stream(line);
    std::string token;
    while (stream >> token) tokens.push_back(token);
    return tokens;
}

// First line that is neither blank nor a comment.
std::string first_payload_line(const std::string& text) {
    std::istringstream stream(text);
    std::string line;
    while (std::getline(stream, line)) {
        if (!line.empty() && line[0] != '#') return line;
    }
    throw IoError("file has no payload line");
}

} // namespace

std::string format_double(double value) {
    char buffer[64];
    const auto res = std::to_chars(buffer, buffer + sizeof(buffer), value);
    return std::string(buffer, res.ptr);
}

double parse_double(const std::string& token) {
    double value = 0.0;
    const auto res = std::from_chars(token.data(), token.data() + token.size(), value);
    if (res.ec != std::errc{} || res.ptr != token.data() + token.size())
        throw IoError("bad float token '" + token + "'");
    return value;
}

std::string format_u64(std::uint64_t value) {
    return std::to_string(value);
}

std::string fnv1a_hex(const std::string& text) {
    std::uint64_t hash = 0xcbf29ce484222325ULL;
    for (unsigned char c : text) {
        hash ^= c;
        hash *= 0x100000001b3ULL;
    }
    char buffer[17];
    std::snprintf(buffer, sizeof(buffer), "%016llx", static_cast<unsigned long long>(hash));
    return std::string(buffer, 16);
}

std::string genome_to_record(const Genome& genome) {
    return std::to_string(genome.dims.a) + " " + std::to_string(genome.dims.b) + " " +
           bits_to_hex(genome.geometry.bits) + " " + bits_to_hex(genome.springs.bits);
}

Genome genome_from_record(const std::string& record) {
    const auto tokens = split_ws(record);
    if (tokens.size() != 4) throw IoError("genome record needs 4 fields: " + record);
    Genome genome;
    genome.dims.a = std::stoi(tokens[0]);
    genome.dims.b = std::stoi(tokens[1]);
    if (genome.dims.a < 1 || genome.dims.b < 1)
        throw IoError("genome dims must be positive");
    const LatticeIndex index = build_lattice_index(genome.dims);
    genome.geometry.rows = genome.dims.b;
    genome.geometry.cols = genome.dims.a;
    genome.geometry.bits =
        hex_to_bits(tokens[2], static_cast<std::size_t>(genome.dims.a) * genome.dims.b);
    genome.springs.bits =
        hex_to_bits(tokens[3], static_cast<std::size_t>(index.spring_count()));
    return genome;
}

void write_genome_file(const std::string& path, const Genome& genome,
                       const std::string& config_hash) {
    write_text_file(path, "# config_hash=" + config_hash + "\n" + genome_to_record(genome) + "\n");
}

Genome read_genome_file(const std::string& path) {
    return genome_from_record(first_payload_line(read_text_file(path)));
}

void write_params_file(const std::string& path, const ControllerParams& params,
                       const std::string& config_hash) {
    std::string text = "# config_hash=" + config_hash + "\n";
    text += std::to_string(params.n_in) + " " + std::to_string(params.n_out) + "\n";
    auto emit_matrix = [&](const std::vector<double>& values, int rows, int cols) {
        for (int r = 0; r < rows; ++r) {
            for (int c = 0; c < cols; ++c) {
                if (c) text += ' ';
                text += format_double(values[static_cast<std::size_t>(r) * cols + c]);
            }
            text += '\n';
        }
    };
    emit_matrix(params.w1, params.n_hidden, params.n_in);
    emit_matrix(params.b1, 1, params.n_hidden);
    emit_matrix(params.w2, params.n_out, params.n_hidden);
    emit_matrix(params.b2, 1, params.n_out);
    write_text_file(path, text);
}

ControllerParams read_params_file(const std::string& path) {
    const std::string text = read_text_file(path);
    std::istringstream stream(text);
    std::string line;
    std::vector<std::string> payload;
    while (std::getline(stream, line)) {
        if (!line.empty() && line[0] != '#') payload.push_back(line);
    }
    if (payload.empty()) throw IoError("params file has no payload: " + path);
    const auto dims = split_ws(payload[0]);
    if (dims.size() != 2) throw IoError("params dimension line needs two fields");

    ControllerParams params;
    params.n_in = std::stoi(dims[0]);
    params.n_out = std::stoi(dims[1]);
    std::vector<double> values;
    for (std::size_t i = 1; i < payload.size(); ++i)
        for (const auto& token : split_ws(payload[i])) values.push_back(parse_double(token));

    const std::size_t expected = static_cast<std::size_t>(params.n_hidden) * params.n_in +
                                 static_cast<std::size_t>(params.n_hidden) +
                                 static_cast<std::size_t>(params.n_out) * params.n_hidden +
                                 static_cast<std::size_t>(params.n_out);
    if (values.size() != expected)
        throw IoError("params file holds " + std::to_string(values.size()) + " floats, expected " +
                      std::to_string(expected));
    auto it = values.begin();
    params.w1.assign(it, it + static_cast<std::ptrdiff_t>(params.n_hidden * params.n_in));
    it += static_cast<std::ptrdiff_t>(params.n_hidden * params.n_in);
    params.b1.assign(it, it + params.n_hidden);
    it += params.n_hidden;
    params.w2.assign(it, it + static_cast<std::ptrdiff_t>(params.n_out * params.n_hidden));
    it += static_cast<std::ptrdiff_t>(params.n_out * params.n_hidden);
    params.b2.assign(it, it + params.n_out);
    return params;
}

void write_terrain_file(const std::string& path, const Terrain& terrain,
                        const std::string& config_hash) {
    std::string text = "# config_hash=" + config_hash + "\n";
    text += std::string("# kind=") + (terrain.kind == Terrain::Kind::Flat ? "flat" : "rugged") +
            "\n";
    for (const auto& seg : terrain.segments) {
        text += format_double(seg.start_x) + " " + format_double(seg.start_y) + " " +
                format_double(seg.slope) + " " + format_double(seg.length_x) + "\n";
    }
    write_text_file(path, text);
}

Terrain read_terrain_file(const std::string& path) {
    const std::string text = read_text_file(path);
    Terrain terrain;
    terrain.kind = Terrain::Kind::Rugged;
    std::istringstream stream(text);
    std::string line;
    while (std::getline(stream, line)) {
        if (line.empty()) continue;
        if (line[0] == '#') {
            if (line == "# kind=flat") terrain.kind = Terrain::Kind::Flat;
            continue;
        }
        const auto tokens = split_ws(line);
        if (tokens.size() != 4) throw IoError("terrain segment needs 4 fields: " + line);
        TerrainSegment seg;
        seg.start_x = parse_double(tokens[0]);
        seg.start_y = parse_double(tokens[1]);
        seg.slope = parse_double(tokens[2]);
        seg.length_x = parse_double(tokens[3]);
        terrain.segments.push_back(seg);
    }
    if (terrain.segments.empty()) terrain.kind = Terrain::Kind::Flat;
    return terrain;
}

std::string checkpoint_path(const std::string& dir, int generation) {
    char name[32];
    std::snprintf(name, sizeof(name), "checkpoint_%05d.txt", generation);
    return (std::filesystem::path(dir) / name).string();
}

void write_checkpoint(const std::string& path, const Checkpoint& checkpoint) {
    std::string text;
    text += "# evospring checkpoint\n";
    text += "config_hash " + checkpoint.config_hash + "\n";
    text += "seed " + format_u64(checkpoint.seed) + "\n";
    text += "generation " + std::to_string(checkpoint.generation) + "\n";
    text += "pop_size " + std::to_string(checkpoint.pop_size) + "\n";
    for (const auto& row : checkpoint.stats) {
        text += "stats " + std::to_string(row.generation);
        for (double v : {row.best_trained, row.best_initial, row.mean_trained, row.sd_trained,
                         row.mean_initial, row.sd_initial, row.mean_size, row.sd_size})
            text += " " + format_double(v);
        text += " " + std::to_string(row.best_size) + " " + std::to_string(row.largest_size);
        for (double v : {row.mean_active_frac, row.best_active_frac, row.largest_active_frac})
            text += " " + format_double(v);
        text += " " + std::to_string(row.invalid_count) + "\n";
    }
    for (const auto& ind : checkpoint.population) {
        text += "individual " + std::to_string(ind.birth_generation) + " " +
                std::to_string(ind.birth_slot) + " " + (ind.valid ? "1" : "0") + " " +
                format_double(ind.fitness) + " " + format_double(ind.initial_performance) + " " +
                std::to_string(ind.size_springs) + " " + std::to_string(ind.active_springs) +
                " " + genome_to_record(ind.genome) + "\n";
    }
    write_text_file(path, text);
}

Checkpoint read_checkpoint(const std::string& path) {
    const std::string text = read_text_file(path);
    Checkpoint ckpt;
    std::istringstream stream(text);
    std::string line;
    while (std::getline(stream, line)) {
        if (line.empty() || line[0] == '#') continue;
        const auto tokens = split_ws(line);
        if (tokens[0] == "config_hash" && tokens.size() == 2) {
            ckpt.config_hash = tokens[1];
        } else if (tokens[0] == "seed" && tokens.size() == 2) {
            ckpt.seed = std::stoull(tokens[1]);
        } else if (tokens[0] == "generation" && tokens.size() == 2) {
            ckpt.generation = std::stoi(tokens[1]);
        } else if (tokens[0] == "pop_size" && tokens.size() == 2) {
            ckpt.pop_size = std::stoi(tokens[1]);
        } else if (tokens[0] == "stats" && tokens.size() == 16) {
            GenerationStats row;
            row.generation = std::stoi(tokens[1]);
            row.best_trained = parse_double(tokens[2]);
            row.best_initial = parse_double(tokens[3]);
            row.mean_trained = parse_double(tokens[4]);
            row.sd_trained = parse_double(tokens[5]);
            row.mean_initial = parse_double(tokens[6]);
            row.sd_initial = parse_double(tokens[7]);
            row.mean_size = parse_double(tokens[8]);
            row.sd_size = parse_double(tokens[9]);
            row.best_size = std::stoi(tokens[10]);
            row.largest_size = std::stoi(tokens[11]);
            row.mean_active_frac = parse_double(tokens[12]);
            row.best_active_frac = parse_double(tokens[13]);
            row.largest_active_frac = parse_double(tokens[14]);
            row.invalid_count = std::stoi(tokens[15]);
            ckpt.stats.push_back(row);
        } else if (tokens[0] == "individual" && tokens.size() == 12) {
            Individual ind;
            ind.birth_generation = std::stoi(tokens[1]);
            ind.birth_slot = std::stoi(tokens[2]);
            ind.valid = tokens[3] == "1";
            ind.fitness = parse_double(tokens[4]);
            ind.initial_performance = parse_double(tokens[5]);
            ind.size_springs = std::stoi(tokens[6]);
            ind.active_springs = std::stoi(tokens[7]);
            ind.genome = genome_from_record(tokens[8] + " " + tokens[9] + " " + tokens[10] + " " +
                                            tokens[11]);
            ckpt.population.push_back(ind);
        } else {
            throw IoError("unrecognized checkpoint line: " + line);
        }
    }
    return ckpt;
}

std::string read_text_file(const std::string& path) {
    std::ifstream file(path, std::ios::binary);
    if (!file) throw IoError("cannot open for reading: " + path);
    std::ostringstream buffer;
    buffer << file.rdbuf();
    if (!file.good() && !file.eof()) throw IoError("read failed: " + path);
    return buffer.str();
}

void write_text_file(const std::string& path, const std::string& content) {
    const auto parent = std::filesystem::path(path).parent_path();
    if (!parent.empty()) {
        std::error_code ec;
        std::filesystem::create_directories(parent, ec);
        if (ec) throw IoError("cannot create directory " + parent.string() + ": " + ec.message());
    }
    std::ofstream file(path, std::ios::binary | std::ios::trunc);
    if (!file) throw IoError("cannot open for writing: " + path);
    file << content;
    file.flush();
    if (!file.good()) throw IoError("write failed: " + path);
}

} // namespace evospring
