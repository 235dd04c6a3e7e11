#include "evospring/analysis.hpp"

#include "evospring/errors.hpp"
#include "evospring/io.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace evospring {

namespace {

// Average ranks for ties, 1-based.
std::vector<double> ranks_of(std::span<const double> xs) {
    const std::size_t n = xs.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return xs[a] < xs[b]; });
    std::vector<double> ranks(n);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && xs[order[j + 1]] == xs[order[i]]) ++j;
        const double avg = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
        for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = avg;
        i = j + 1;
    }
    return ranks;
}

} // namespace

double spearman(std::span<const double> xs, std::span<const double> ys) {
    if (xs.size() != ys.size() || xs.size() < 2)
        throw ZeroVariance("spearman needs two sequences of equal length >= 2");
    const auto rx = ranks_of(xs);
    const auto ry = ranks_of(ys);

    const double n = static_cast<double>(rx.size());
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < rx.size(); ++i) {
        mx += rx[i];
        my += ry[i];
    }
    mx /= n;
    my /= n;
    double sxy = 0, sxx = 0, syy = 0;
    for (std::size_t i = 0; i < rx.size(); ++i) {
        sxy += (rx[i] - mx) * (ry[i] - my);
        sxx += (rx[i] - mx) * (rx[i] - mx);
        syy += (ry[i] - my) * (ry[i] - my);
    }
    if (sxx == 0.0 || syy == 0.0)
        throw ZeroVariance("spearman undefined for a constant rank vector");
    return sxy / std::sqrt(sxx * syy);
}

double size_fitness_correlation(const std::vector<Individual>& individuals) {
    std::vector<double> sizes, fitnesses;
    for (const auto& ind : individuals) {
        if (!ind.valid) continue;
        sizes.push_back(static_cast<double>(ind.size_springs));
        fitnesses.push_back(ind.fitness);
    }
    return spearman(sizes, fitnesses);
}

std::string run_csv_header() {
    return "generation,best_trained,best_initial,mean_trained,sd_trained,mean_initial,"
           "sd_initial,mean_size,sd_size,best_size,largest_size,mean_active_frac,"
           "best_active_frac,largest_active_frac,invalid_count";
}

std::string run_csv_row(const GenerationStats& row) {
    std::string out;
    out += std::to_string(row.generation);
    for (double value : {row.best_trained, row.best_initial, row.mean_trained, row.sd_trained,
                         row.mean_initial, row.sd_initial, row.mean_size, row.sd_size}) {
        out += ',';
        out += format_double(value);
    }
    out += ',' + std::to_string(row.best_size);
    out += ',' + std::to_string(row.largest_size);
    for (double value : {row.mean_active_frac, row.best_active_frac, row.largest_active_frac}) {
        out += ',';
        out += format_double(value);
    }
    out += ',' + std::to_string(row.invalid_count);
    return out;
}

void export_run_csv(const RunLog& log, const std::string& path) {
    std::string text = "# config_hash=" + log.config_hash + "\n" + run_csv_header() + "\n";
    for (const auto& row : log.stats) {
        if (row.generation == 0) continue; // initial cohort lives in checkpoint 0
        text += run_csv_row(row) + "\n";
    }
    write_text_file(path, text);
}

std::vector<GenerationStats> parse_run_csv(const std::string& path) {
    const std::string text = read_text_file(path);
    std::vector<GenerationStats> rows;
    std::istringstream stream(text);
    std::string line;
    bool header_seen = false;
    while (std::getline(stream, line)) {
        if (line.empty() || line[0] == '#') continue;
        if (!header_seen) {
            if (line != run_csv_header())
                throw IoError("unexpected run csv header: " + line);
            header_seen = true;
            continue;
        }
        std::vector<std::string> fields;
        std::string field;
        std::istringstream ls(line);
        while (std::getline(ls, field, ',')) fields.push_back(field);
        if (fields.size() != 15) throw IoError("malformed run csv row: " + line);
        GenerationStats row;
        row.generation = std::stoi(fields[0]);
        row.best_trained = parse_double(fields[1]);
        row.best_initial = parse_double(fields[2]);
        row.mean_trained = parse_double(fields[3]);
        row.sd_trained = parse_double(fields[4]);
        row.mean_initial = parse_double(fields[5]);
        row.sd_initial = parse_double(fields[6]);
        row.mean_size = parse_double(fields[7]);
        row.sd_size = parse_double(fields[8]);
        row.best_size = std::stoi(fields[9]);
        row.largest_size = std::stoi(fields[10]);
        row.mean_active_frac = parse_double(fields[11]);
        row.best_active_frac = parse_double(fields[12]);
        row.largest_active_frac = parse_double(fields[13]);
        row.invalid_count = std::stoi(fields[14]);
        rows.push_back(row);
    }
    return rows;
}

} // namespace evospring
