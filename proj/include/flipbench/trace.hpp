#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace flipbench {

// One timed kernel call. `scheme` holds the canonical InitSpec text.
struct DurationSample {
  std::string node;
  int core = 0;
  std::uint64_t call_index = 0;
  std::string scheme;
  std::optional<int> mask_bits;
  std::uint64_t seed = 0;
  std::uint64_t matrix_order = 0;
  std::string kernel;
  std::int64_t start_ns = 0;
  std::int64_t duration_ns = 0;

  friend bool operator==(const DurationSample&, const DurationSample&) = default;
};

// One per-core frequency reading.
struct FreqSample {
  std::int64_t timestamp_ns = 0;
  int core = 0;
  std::uint64_t frequency_khz = 0;

  friend bool operator==(const FreqSample&, const FreqSample&) = default;
};

// Distribution of durations for one group. Ungrouped keys are written as "*".
struct SummaryRow {
  std::string node = "*";
  std::string group_core = "*";
  std::string scheme = "*";
  std::string mask_bits = "*";
  std::uint64_t n = 0;
  double min_ns = 0, q1_ns = 0, median_ns = 0, q3_ns = 0, max_ns = 0, mean_ns = 0;
  std::optional<double> freq_median_khz;

  friend bool operator==(const SummaryRow&, const SummaryRow&) = default;
};

inline constexpr std::string_view kDurationsHeader =
    "node,core,call_index,scheme,mask_bits,seed,matrix_order,kernel,start_ns,duration_ns";
inline constexpr std::string_view kFreqHeader = "timestamp_ns,core,frequency_khz";
inline constexpr std::string_view kSummaryHeader =
    "node,group_core,scheme,mask_bits,n,min_ns,q1_ns,median_ns,q3_ns,max_ns,mean_ns,"
    "freq_median_khz";

// Fixed file names inside a run directory.
inline constexpr const char* kDurationsFile = "durations.csv";
inline constexpr const char* kFreqFile = "freq.csv";
inline constexpr const char* kMetadataFile = "metadata.txt";
inline constexpr const char* kSummaryFile = "summary.csv";
inline constexpr const char* kVerdictsFile = "verdicts.txt";

struct RunArtifacts {
  std::filesystem::path durations_path;
  std::filesystem::path freq_path;
  std::filesystem::path metadata_path;

  static RunArtifacts in(const std::filesystem::path& dir);
};

// Shortest decimal text that parses back to the same double.
std::string format_real(double v);

std::string to_csv_row(const DurationSample& s);
std::string to_csv_row(const FreqSample& s);
std::string to_csv_row(const SummaryRow& r);

DurationSample parse_duration_row(std::string_view line, const std::string& source = "<row>",
                                  std::size_t line_no = 1);
FreqSample parse_freq_row(std::string_view line, const std::string& source = "<row>",
                          std::size_t line_no = 1);
SummaryRow parse_summary_row(std::string_view line, const std::string& source = "<row>",
                             std::size_t line_no = 1);

// Whole-file readers. Header is mandatory; errors carry the line number.
std::vector<DurationSample> read_durations(const std::filesystem::path& path);
std::vector<FreqSample> read_freq(const std::filesystem::path& path);
std::vector<SummaryRow> read_summary(const std::filesystem::path& path);

void write_durations(const std::filesystem::path& path, const std::vector<DurationSample>& rows);
void write_freq(const std::filesystem::path& path, const std::vector<FreqSample>& rows);
void write_summary(const std::filesystem::path& path, const std::vector<SummaryRow>& rows);

// Ordered key=value metadata. Keys keep insertion order on write.
class Metadata {
 public:
  void set(const std::string& key, const std::string& value);
  void set(const std::string& key, const char* value) { set(key, std::string(value)); }
  template <typename T>
  void set(const std::string& key, const T& value) {
    set(key, std::to_string(value));
  }
  std::optional<std::string> get(const std::string& key) const;
  const std::vector<std::pair<std::string, std::string>>& entries() const { return entries_; }

  void write(const std::filesystem::path& path) const;
  static Metadata read(const std::filesystem::path& path);

 private:
  std::vector<std::pair<std::string, std::string>> entries_;
};

// Splits one CSV line on commas. Fields never contain commas or quotes.
std::vector<std::string_view> split_fields(std::string_view line);

}  // namespace flipbench
