#include "doccat/eval/epoch_stats.hpp"

#include <fmt/format.h>

#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>

#include "doccat/common/error.hpp"

namespace doccat::eval {

std::string format_stats_row(const EpochStats& s) {
  return fmt::format("{},{},{},{},{},{}", s.epoch, s.loss, s.val_loss, s.f1_macro, s.f1_micro, s.seconds);
}

void write_stats_csv(std::ostream& out, std::span<const EpochStats> stats) {
  out << kEpochStatsHeader << '\n';
  for (const auto& s : stats) out << format_stats_row(s) << '\n';
}

void write_stats_csv(const std::filesystem::path& path, std::span<const EpochStats> stats) {
  std::ofstream out(path);
  if (!out) throw StorageError("cannot write " + path.string());
  write_stats_csv(out, stats);
}

void append_stats_csv(const std::filesystem::path& path, const EpochStats& s) {
  std::error_code ec;
  const bool fresh = !std::filesystem::exists(path, ec) || std::filesystem::file_size(path, ec) == 0;
  std::ofstream out(path, std::ios::app);
  if (!out) throw StorageError("cannot append to " + path.string());
  if (fresh) out << kEpochStatsHeader << '\n';
  out << format_stats_row(s) << '\n';
}

namespace {

template <typename T>
T parse_field(std::string_view field, std::size_t line) {
  T value{};
  const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
  if (ec != std::errc{} || ptr != field.data() + field.size()) {
    throw FormatError(fmt::format("stats line {}: bad value '{}'", line, field));
  }
  return value;
}

}  // namespace

std::vector<EpochStats> read_stats_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw FormatError("stats file is empty");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kEpochStatsHeader) throw FormatError("unexpected stats header '" + line + "'");
  std::vector<EpochStats> rows;
  for (std::size_t number = 2; std::getline(in, line); ++number) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string_view> fields;
    std::string_view rest = line;
    for (auto pos = rest.find(','); pos != std::string_view::npos; pos = rest.find(',')) {
      fields.push_back(rest.substr(0, pos));
      rest.remove_prefix(pos + 1);
    }
    fields.push_back(rest);
    if (fields.size() != 6) throw FormatError(fmt::format("stats line {}: expected 6 fields", number));
    rows.push_back({parse_field<std::size_t>(fields[0], number), parse_field<double>(fields[1], number),
                    parse_field<double>(fields[2], number), parse_field<double>(fields[3], number),
                    parse_field<double>(fields[4], number), parse_field<double>(fields[5], number)});
  }
  return rows;
}

std::vector<EpochStats> read_stats_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open " + path.string());
  return read_stats_csv(in);
}

std::optional<std::size_t> detect_overfitting(std::span<const EpochStats> stats, std::size_t patience) {
  if (patience == 0) throw InvalidArgument("patience must be positive");
  std::size_t run = 0;
  for (std::size_t i = 1; i < stats.size(); ++i) {
    const bool diverging = stats[i].loss < stats[i - 1].loss && stats[i].val_loss > stats[i - 1].val_loss;
    run = diverging ? run + 1 : 0;
    if (run == patience) return stats[i + 1 - patience].epoch;
  }
  return std::nullopt;
}

}  // namespace doccat::eval
