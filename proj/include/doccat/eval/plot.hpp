#pragma once

#include <filesystem>
#include <span>
#include <string>

#include "doccat/eval/epoch_stats.hpp"

namespace doccat::eval {

/// Two stacked SVG panels: loss and val_loss per epoch on top, f1_macro and
/// f1_micro per epoch below.
std::string render_stats_svg(std::span<const EpochStats> stats, const std::string& title = "");

void plot_stats(const std::filesystem::path& stats_csv, const std::filesystem::path& out_svg);

}  // namespace doccat::eval
