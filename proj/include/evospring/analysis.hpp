#pragma once

#include "evospring/evolution.hpp"

#include <span>
#include <string>
#include <vector>

namespace evospring {

// Spearman rank correlation with average ranks for ties: Pearson correlation
// of the two rank vectors. Throws ZeroVariance when a rank vector is constant.
double spearman(std::span<const double> xs, std::span<const double> ys);

// Spearman correlation between robot size (expressed spring count) and
// fitness across a cohort; only valid individuals contribute.
double size_fitness_correlation(const std::vector<Individual>& individuals);

// One row per generation in stats order; columns are fixed and documented in
// the README. Generation 0 (the unselected initial cohort) stays in
// checkpoints and is not part of the run CSV.
void export_run_csv(const RunLog& log, const std::string& path);
std::vector<GenerationStats> parse_run_csv(const std::string& path);

std::string run_csv_header();
std::string run_csv_row(const GenerationStats& row);

} // namespace evospring
