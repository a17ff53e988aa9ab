#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace doccat::eval {

struct EpochStats {
  std::size_t epoch = 0;
  double loss = 0;
  double val_loss = 0;
  double f1_macro = 0;
  double f1_micro = 0;
  double seconds = 0;

  friend bool operator==(const EpochStats&, const EpochStats&) = default;
};

inline constexpr const char* kEpochStatsHeader = "epoch,loss,val_loss,f1_macro,f1_micro,seconds";

/// Shortest round-trip decimal formatting, so equal values give equal bytes.
std::string format_stats_row(const EpochStats& s);

void write_stats_csv(std::ostream& out, std::span<const EpochStats> stats);
void write_stats_csv(const std::filesystem::path& path, std::span<const EpochStats> stats);
/// Appends one row, writing the header first when the file is new or empty.
void append_stats_csv(const std::filesystem::path& path, const EpochStats& s);

/// Throws FormatError on a wrong header or malformed row.
std::vector<EpochStats> read_stats_csv(std::istream& in);
std::vector<EpochStats> read_stats_csv(const std::filesystem::path& path);

/// First epoch of a run of `patience` consecutive epochs in which the
/// training loss falls while the validation loss rises, if any.
std::optional<std::size_t> detect_overfitting(std::span<const EpochStats> stats, std::size_t patience = 3);

}  // namespace doccat::eval
