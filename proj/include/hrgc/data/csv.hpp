#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "hrgc/data/preprocess.hpp"
#include "hrgc/data/scene.hpp"

namespace hrgc {

// 17 significant digits, enough to round-trip any double.
std::string format_real(double v);

struct CsvRow {
  std::size_t line = 0;
  std::vector<std::string> cells;
};

/// A parsed comma-separated file: leading "# key: value" lines, one header
/// line and data rows of the header's width.
struct CsvDocument {
  std::string path;
  std::vector<std::pair<std::string, std::string>> metadata;
  std::size_t header_line = 0;
  std::vector<std::string> header;
  std::vector<CsvRow> rows;

  std::optional<std::size_t> find_column(const std::string& name) const;
  // ParseError at the header line naming the column.
  std::size_t require_column(const std::string& name) const;
  std::optional<std::string> meta(const std::string& key) const;
  // ParseError with the row's line number for an empty or non-numeric cell.
  double number(const CsvRow& row, std::size_t column) const;
};

CsvDocument parse_csv(std::istream& in, const std::string& path);
// IoError if the file cannot be opened.
CsvDocument read_csv(const std::filesystem::path& path);

// Writes to a temporary sibling and renames it into place.
void write_text_file(const std::filesystem::path& path, const std::string& contents);

/// Raw record files:
///
///   # crossing_id: HRGC-0001
///   # collection_speed_kmh: 18.5
///   # sampling_interval_m: 0.05
///   position_m,accel_x,accel_y,accel_z,roll,pitch,speed,gps_altitude,wp_profile
///
/// The sensor columns and wp_profile may end at different rows; cells past
/// the end of a column are empty. Columns are matched by name, so any order
/// is accepted. speed_kmh, roll_deg and pitch_deg may replace speed, roll and
/// pitch and are converted to m/s and radians.
std::string export_raw_record(const RawCrossingRecord& record);
void export_raw_record(const RawCrossingRecord& record, const std::filesystem::path& path);
RawCrossingRecord ingest_raw_record(const CsvDocument& doc);
RawCrossingRecord ingest_raw_record(const std::filesystem::path& path);

/// Sequence files carry one aligned sequence with header
/// position_m,accel_x,accel_y,accel_z,roll,pitch,speed,gps_profile,wp_profile.
/// wp_profile is optional on input; without it the target column is zero
/// and `has_target` is false.
struct SequenceFile {
  AlignedSequence sequence;
  bool has_target = true;
};
std::string export_sequence(const AlignedSequence& seq);
void export_sequence(const AlignedSequence& seq, const std::filesystem::path& path);
SequenceFile ingest_sequence(const std::filesystem::path& path);

// Column names of the eight aligned channels.
const std::vector<std::string>& sequence_column_names();

}  // namespace hrgc
