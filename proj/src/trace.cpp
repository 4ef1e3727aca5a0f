#include "flipbench/trace.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "flipbench/error.hpp"

namespace flipbench {

namespace {

template <typename T>
T parse_number(std::string_view field, const std::string& source, std::size_t line_no,
               const char* name) {
  T value{};
  auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
  if (field.empty() || ec != std::errc() || ptr != field.data() + field.size()) {
    throw ParseError(source, line_no, std::string("bad ") + name + " '" + std::string(field) + "'");
  }
  return value;
}

std::vector<std::string_view> expect_fields(std::string_view line, std::size_t count,
                                            const std::string& source, std::size_t line_no) {
  auto fields = split_fields(line);
  if (fields.size() != count) {
    throw ParseError(source, line_no,
                     "expected " + std::to_string(count) + " fields, got " +
                         std::to_string(fields.size()));
  }
  return fields;
}

template <typename Row, typename Parser>
std::vector<Row> read_csv(const std::filesystem::path& path, std::string_view header,
                          Parser parse) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path.string());
  const std::string source = path.string();
  std::string line;
  if (!std::getline(in, line)) throw ParseError(source, 1, "missing header");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != header) throw ParseError(source, 1, "unexpected header '" + line + "'");
  std::vector<Row> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    rows.push_back(parse(line, source, line_no));
  }
  return rows;
}

template <typename Row>
void write_csv(const std::filesystem::path& path, std::string_view header,
               const std::vector<Row>& rows) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  out << header << '\n';
  for (const auto& r : rows) out << to_csv_row(r) << '\n';
  if (!out) throw Error("write failed for " + path.string());
}

}  // namespace

RunArtifacts RunArtifacts::in(const std::filesystem::path& dir) {
  return {dir / kDurationsFile, dir / kFreqFile, dir / kMetadataFile};
}

std::string format_real(double v) {
  char buf[32];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, end);
}

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t pos = 0;
  while (true) {
    const auto comma = line.find(',', pos);
    if (comma == std::string_view::npos) {
      fields.push_back(line.substr(pos));
      return fields;
    }
    fields.push_back(line.substr(pos, comma - pos));
    pos = comma + 1;
  }
}

std::string to_csv_row(const DurationSample& s) {
  std::ostringstream os;
  os << s.node << ',' << s.core << ',' << s.call_index << ',' << s.scheme << ',';
  if (s.mask_bits) os << *s.mask_bits;
  os << ',' << s.seed << ',' << s.matrix_order << ',' << s.kernel << ',' << s.start_ns << ','
     << s.duration_ns;
  return os.str();
}

std::string to_csv_row(const FreqSample& s) {
  return std::to_string(s.timestamp_ns) + ',' + std::to_string(s.core) + ',' +
         std::to_string(s.frequency_khz);
}

std::string to_csv_row(const SummaryRow& r) {
  std::string out = r.node + ',' + r.group_core + ',' + r.scheme + ',' + r.mask_bits + ',' +
                    std::to_string(r.n);
  for (double v : {r.min_ns, r.q1_ns, r.median_ns, r.q3_ns, r.max_ns, r.mean_ns}) {
    out += ',';
    out += format_real(v);
  }
  out += ',';
  if (r.freq_median_khz) out += format_real(*r.freq_median_khz);
  return out;
}

DurationSample parse_duration_row(std::string_view line, const std::string& source,
                                  std::size_t line_no) {
  const auto f = expect_fields(line, 10, source, line_no);
  DurationSample s;
  s.node = std::string(f[0]);
  s.core = parse_number<int>(f[1], source, line_no, "core");
  s.call_index = parse_number<std::uint64_t>(f[2], source, line_no, "call_index");
  s.scheme = std::string(f[3]);
  if (s.scheme.empty()) throw ParseError(source, line_no, "empty scheme");
  if (!f[4].empty()) s.mask_bits = parse_number<int>(f[4], source, line_no, "mask_bits");
  s.seed = parse_number<std::uint64_t>(f[5], source, line_no, "seed");
  s.matrix_order = parse_number<std::uint64_t>(f[6], source, line_no, "matrix_order");
  s.kernel = std::string(f[7]);
  s.start_ns = parse_number<std::int64_t>(f[8], source, line_no, "start_ns");
  s.duration_ns = parse_number<std::int64_t>(f[9], source, line_no, "duration_ns");
  if (s.duration_ns <= 0) throw ParseError(source, line_no, "duration_ns must be positive");
  return s;
}

FreqSample parse_freq_row(std::string_view line, const std::string& source, std::size_t line_no) {
  const auto f = expect_fields(line, 3, source, line_no);
  FreqSample s;
  s.timestamp_ns = parse_number<std::int64_t>(f[0], source, line_no, "timestamp_ns");
  s.core = parse_number<int>(f[1], source, line_no, "core");
  s.frequency_khz = parse_number<std::uint64_t>(f[2], source, line_no, "frequency_khz");
  if (s.frequency_khz == 0) throw ParseError(source, line_no, "frequency_khz must be positive");
  return s;
}

SummaryRow parse_summary_row(std::string_view line, const std::string& source,
                             std::size_t line_no) {
  const auto f = expect_fields(line, 12, source, line_no);
  SummaryRow r;
  r.node = std::string(f[0]);
  r.group_core = std::string(f[1]);
  r.scheme = std::string(f[2]);
  r.mask_bits = std::string(f[3]);
  r.n = parse_number<std::uint64_t>(f[4], source, line_no, "n");
  r.min_ns = parse_number<double>(f[5], source, line_no, "min_ns");
  r.q1_ns = parse_number<double>(f[6], source, line_no, "q1_ns");
  r.median_ns = parse_number<double>(f[7], source, line_no, "median_ns");
  r.q3_ns = parse_number<double>(f[8], source, line_no, "q3_ns");
  r.max_ns = parse_number<double>(f[9], source, line_no, "max_ns");
  r.mean_ns = parse_number<double>(f[10], source, line_no, "mean_ns");
  if (!f[11].empty()) r.freq_median_khz = parse_number<double>(f[11], source, line_no, "freq");
  return r;
}

std::vector<DurationSample> read_durations(const std::filesystem::path& path) {
  return read_csv<DurationSample>(path, kDurationsHeader, parse_duration_row);
}

std::vector<FreqSample> read_freq(const std::filesystem::path& path) {
  return read_csv<FreqSample>(path, kFreqHeader, parse_freq_row);
}

std::vector<SummaryRow> read_summary(const std::filesystem::path& path) {
  return read_csv<SummaryRow>(path, kSummaryHeader, parse_summary_row);
}

void write_durations(const std::filesystem::path& path, const std::vector<DurationSample>& rows) {
  write_csv(path, kDurationsHeader, rows);
}

void write_freq(const std::filesystem::path& path, const std::vector<FreqSample>& rows) {
  write_csv(path, kFreqHeader, rows);
}

void write_summary(const std::filesystem::path& path, const std::vector<SummaryRow>& rows) {
  write_csv(path, kSummaryHeader, rows);
}

void Metadata::set(const std::string& key, const std::string& value) {
  if (key.find('=') != std::string::npos || key.find('\n') != std::string::npos ||
      value.find('\n') != std::string::npos) {
    throw std::invalid_argument("metadata key/value may not contain '=' in key or newlines");
  }
  for (auto& [k, v] : entries_) {
    if (k == key) {
      v = value;
      return;
    }
  }
  entries_.emplace_back(key, value);
}

std::optional<std::string> Metadata::get(const std::string& key) const {
  for (const auto& [k, v] : entries_) {
    if (k == key) return v;
  }
  return std::nullopt;
}

void Metadata::write(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  for (const auto& [k, v] : entries_) out << k << '=' << v << '\n';
}

Metadata Metadata::read(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path.string());
  Metadata md;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos || eq == 0) {
      throw ParseError(path.string(), line_no, "expected key=value");
    }
    md.set(line.substr(0, eq), line.substr(eq + 1));
  }
  return md;
}

}  // namespace flipbench
