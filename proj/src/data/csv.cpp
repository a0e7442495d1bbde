#include "hrgc/data/csv.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <sstream>

#include "hrgc/errors.hpp"

namespace hrgc {

namespace {

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t");
  if (begin == std::string::npos) return {};
  const auto end = s.find_last_not_of(" \t");
  return s.substr(begin, end - begin + 1);
}

std::vector<std::string> split_cells(const std::string& line) {
  std::vector<std::string> cells;
  std::size_t start = 0;
  for (;;) {
    const auto comma = line.find(',', start);
    cells.push_back(trim(line.substr(start, comma == std::string::npos ? std::string::npos : comma - start)));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return cells;
}

std::optional<double> parse_double(const std::string& text) {
  if (text.empty()) return std::nullopt;
  double v = 0.0;
  const char* first = text.data();
  const char* last = text.data() + text.size();
  if (*first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last) return std::nullopt;
  return v;
}

std::string join(const std::vector<std::string>& parts) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i > 0) out += ',';
    out += parts[i];
  }
  return out;
}

// Number of leading rows in which `column` is non-empty. Cells after the
// first empty one must stay empty.
std::size_t column_extent(const CsvDocument& doc, std::size_t column) {
  std::size_t extent = 0;
  bool ended = false;
  for (const CsvRow& row : doc.rows) {
    const bool empty = row.cells[column].empty();
    if (!empty && ended) {
      throw ParseError(doc.path, row.line, "column '" + doc.header[column] + "' resumes after an empty cell");
    }
    if (empty) ended = true;
    else ++extent;
  }
  return extent;
}

struct ChannelSource {
  std::size_t column;
  double factor;
};

// First present alternative among (name, conversion factor) pairs.
ChannelSource require_any(const CsvDocument& doc, std::initializer_list<std::pair<const char*, double>> names) {
  for (const auto& [name, factor] : names) {
    if (auto c = doc.find_column(name)) return {*c, factor};
  }
  return {doc.require_column(names.begin()->first), 1.0};
}

std::string stem_of(const std::string& path) { return std::filesystem::path(path).stem().string(); }

std::size_t parse_size(const CsvDocument& doc, const std::string& key, const std::string& text) {
  std::size_t v = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw ParseError(doc.path, doc.header_line, "metadata '" + key + "' is not a non-negative integer");
  }
  return v;
}

double meta_number(const CsvDocument& doc, const std::string& key, const std::string& text) {
  const auto v = parse_double(text);
  if (!v) throw ParseError(doc.path, doc.header_line, "metadata '" + key + "' is not a number");
  return *v;
}

double interval_from(const CsvDocument& doc, std::size_t rows) {
  if (auto meta = doc.meta("sampling_interval_m")) return meta_number(doc, "sampling_interval_m", *meta);
  const auto pos = doc.find_column("position_m");
  if (!pos || rows < 2) {
    throw ParseError(doc.path, doc.header_line, "cannot determine the sampling interval (no metadata, no position_m)");
  }
  return doc.number(doc.rows[1], *pos) - doc.number(doc.rows[0], *pos);
}

}  // namespace

std::string format_real(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::optional<std::size_t> CsvDocument::find_column(const std::string& name) const {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == name) return i;
  }
  return std::nullopt;
}

std::size_t CsvDocument::require_column(const std::string& name) const {
  if (auto c = find_column(name)) return *c;
  throw ParseError(path, header_line, "missing column '" + name + "'");
}

std::optional<std::string> CsvDocument::meta(const std::string& key) const {
  for (const auto& [k, v] : metadata) {
    if (k == key) return v;
  }
  return std::nullopt;
}

double CsvDocument::number(const CsvRow& row, std::size_t column) const {
  const std::string& cell = row.cells.at(column);
  if (cell.empty()) throw ParseError(path, row.line, "empty cell in column '" + header[column] + "'");
  const auto v = parse_double(cell);
  if (!v) throw ParseError(path, row.line, "non-numeric value '" + cell + "' in column '" + header[column] + "'");
  return *v;
}

CsvDocument parse_csv(std::istream& in, const std::string& path) {
  CsvDocument doc;
  doc.path = path;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    if (line[0] == '#') {
      if (doc.header.empty()) {
        const std::string body = trim(line.substr(1));
        const auto colon = body.find(':');
        if (colon != std::string::npos) doc.metadata.emplace_back(trim(body.substr(0, colon)), trim(body.substr(colon + 1)));
      }
      continue;
    }
    std::vector<std::string> cells = split_cells(line);
    if (doc.header.empty()) {
      doc.header = std::move(cells);
      doc.header_line = line_no;
      for (std::size_t i = 0; i < doc.header.size(); ++i) {
        if (doc.header[i].empty()) throw ParseError(path, line_no, "empty column name at position " + std::to_string(i + 1));
        for (std::size_t j = 0; j < i; ++j) {
          if (doc.header[j] == doc.header[i]) throw ParseError(path, line_no, "duplicate column '" + doc.header[i] + "'");
        }
      }
      continue;
    }
    if (cells.size() != doc.header.size()) {
      throw ParseError(path, line_no, "expected " + std::to_string(doc.header.size()) + " cells, found " +
                                          std::to_string(cells.size()));
    }
    doc.rows.push_back({line_no, std::move(cells)});
  }
  if (doc.header.empty()) throw ParseError(path, line_no, "missing header line");
  return doc;
}

CsvDocument read_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  return parse_csv(in, path.string());
}

void write_text_file(const std::filesystem::path& path, const std::string& contents) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + path.string());
    out << contents;
    if (!out.flush()) throw IoError("write failed for " + path.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw IoError("cannot write " + path.string());
  }
}

std::string export_raw_record(const RawCrossingRecord& record) {
  if (record.imu_gps.cols() != kRawChannelCount) {
    throw ShapeError("export_raw_record: expected 7 sensor channels, got " + std::to_string(record.imu_gps.cols()));
  }
  std::string out;
  out += "# crossing_id: " + record.crossing_id + "\n";
  out += "# collection_speed_kmh: " + format_real(record.collection_speed_kmh) + "\n";
  out += "# sampling_interval_m: " + format_real(record.sampling_interval_m) + "\n";
  out += "position_m,accel_x,accel_y,accel_z,roll,pitch,speed,gps_altitude,wp_profile\n";
  const std::size_t n = record.imu_gps.rows();
  const std::size_t m = record.profiler.size();
  for (std::size_t i = 0; i < std::max(n, m); ++i) {
    out += format_real(static_cast<double>(i) * record.sampling_interval_m);
    for (std::size_t c = 0; c < kRawChannelCount; ++c) {
      out += ',';
      if (i < n) out += format_real(record.imu_gps(i, c));
    }
    out += ',';
    if (i < m) out += format_real(record.profiler[i]);
    out += '\n';
  }
  return out;
}

void export_raw_record(const RawCrossingRecord& record, const std::filesystem::path& path) {
  write_text_file(path, export_raw_record(record));
}

RawCrossingRecord ingest_raw_record(const CsvDocument& doc) {
  const double deg = std::numbers::pi / 180.0;
  const ChannelSource sources[kRawChannelCount] = {
      require_any(doc, {{"accel_x", 1.0}}),
      require_any(doc, {{"accel_y", 1.0}}),
      require_any(doc, {{"accel_z", 1.0}}),
      require_any(doc, {{"roll", 1.0}, {"roll_deg", deg}}),
      require_any(doc, {{"pitch", 1.0}, {"pitch_deg", deg}}),
      require_any(doc, {{"speed", 1.0}, {"speed_kmh", 1.0 / 3.6}}),
      require_any(doc, {{"gps_altitude", 1.0}}),
  };
  const std::size_t wp_col = doc.require_column("wp_profile");

  const std::size_t n = column_extent(doc, sources[0].column);
  for (const ChannelSource& s : sources) {
    if (column_extent(doc, s.column) != n) {
      throw ParseError(doc.path, doc.header_line, "sensor column '" + doc.header[s.column] + "' has " +
                                                      std::to_string(column_extent(doc, s.column)) + " values, expected " +
                                                      std::to_string(n));
    }
  }
  const std::size_t m = column_extent(doc, wp_col);
  if (n == 0) throw ParseError(doc.path, doc.header_line, "no sensor rows");
  if (m == 0) throw ParseError(doc.path, doc.header_line, "no profiler rows");

  RawCrossingRecord rec;
  rec.imu_gps = Matrix(n, kRawChannelCount);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t c = 0; c < kRawChannelCount; ++c) {
      const double v = doc.number(doc.rows[i], sources[c].column);
      rec.imu_gps(i, c) = sources[c].factor == 1.0 ? v : v * sources[c].factor;
    }
    if (!(rec.imu_gps(i, kSpeed) > 0.0)) throw ParseError(doc.path, doc.rows[i].line, "speed must be positive");
  }
  rec.profiler.resize(m);
  for (std::size_t i = 0; i < m; ++i) rec.profiler[i] = doc.number(doc.rows[i], wp_col);

  rec.crossing_id = doc.meta("crossing_id").value_or(stem_of(doc.path));
  rec.sampling_interval_m = interval_from(doc, std::max(n, m));
  if (!(rec.sampling_interval_m > 0.0)) throw ParseError(doc.path, doc.header_line, "sampling interval must be positive");
  if (auto meta = doc.meta("collection_speed_kmh")) {
    rec.collection_speed_kmh = meta_number(doc, "collection_speed_kmh", *meta);
  } else {
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) total += rec.imu_gps(i, kSpeed);
    rec.collection_speed_kmh = total / static_cast<double>(n) * 3.6;
  }
  return rec;
}

RawCrossingRecord ingest_raw_record(const std::filesystem::path& path) { return ingest_raw_record(read_csv(path)); }

const std::vector<std::string>& sequence_column_names() {
  static const std::vector<std::string> names = {"accel_x", "accel_y", "accel_z",     "roll",
                                                 "pitch",   "speed",   "gps_profile", "wp_profile"};
  return names;
}

std::string export_sequence(const AlignedSequence& seq) {
  if (seq.data.cols() != kSequenceColumns) {
    throw ShapeError("export_sequence: expected 8 columns, got " + std::to_string(seq.data.cols()));
  }
  std::string out;
  out += "# source_id: " + seq.source_id + "\n";
  out += "# peak_index: " + std::to_string(seq.peak_index) + "\n";
  out += "# sampling_interval_m: " + format_real(seq.sampling_interval_m) + "\n";
  out += "position_m," + join(sequence_column_names()) + "\n";
  for (std::size_t i = 0; i < seq.length(); ++i) {
    out += format_real(static_cast<double>(i) * seq.sampling_interval_m);
    for (double v : seq.data.row(i)) {
      out += ',';
      out += format_real(v);
    }
    out += '\n';
  }
  return out;
}

void export_sequence(const AlignedSequence& seq, const std::filesystem::path& path) {
  write_text_file(path, export_sequence(seq));
}

SequenceFile ingest_sequence(const std::filesystem::path& path) {
  const CsvDocument doc = read_csv(path);
  const auto& names = sequence_column_names();
  std::vector<std::size_t> cols;
  for (std::size_t c = 0; c < kInputChannels; ++c) cols.push_back(doc.require_column(names[c]));
  const auto target = doc.find_column(names[kTargetColumn]);
  const std::size_t n = doc.rows.size();
  if (n == 0) throw ParseError(doc.path, doc.header_line, "no data rows");

  SequenceFile file;
  file.has_target = target.has_value();
  AlignedSequence& seq = file.sequence;
  seq.data = Matrix(n, kSequenceColumns);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t c = 0; c < kInputChannels; ++c) seq.data(i, c) = doc.number(doc.rows[i], cols[c]);
    if (target) seq.data(i, kTargetColumn) = doc.number(doc.rows[i], *target);
  }
  seq.source_id = doc.meta("source_id").value_or(stem_of(doc.path));
  seq.sampling_interval_m = interval_from(doc, n);
  if (auto meta = doc.meta("peak_index")) {
    seq.peak_index = parse_size(doc, "peak_index", *meta);
    if (seq.peak_index >= n) throw ParseError(doc.path, doc.header_line, "peak_index beyond the last row");
  } else {
    seq.peak_index = argmax_first(seq.data.column(file.has_target ? kTargetColumn : kGpsProfileColumn));
  }
  return file;
}

}  // namespace hrgc
