#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "flipbench/trace.hpp"

namespace flipbench {

enum class GroupKey { Node, Core, Scheme, MaskBits };

// Parses "node,core,scheme,mask_bits" style lists. Throws InputError.
std::vector<GroupKey> parse_group_keys(const std::string& text);

// Linear-interpolation quantile (R type 7) over an ascending-sorted sample.
double quantile_linear(std::span<const double> sorted, double p);

// A duration row joined with the frequency samples taken during the call.
struct JoinedRow {
  DurationSample sample;
  std::optional<double> freq_mean_khz;
  bool nearest_fallback = false;  // window was empty; nearest sample used
  bool no_frequency = false;      // the core has no samples at all
};

// freq_mean_khz is the mean of the core's samples with timestamp in
// [start_ns, start_ns + duration_ns]. Rows are never dropped.
std::vector<JoinedRow> join_freq_durations(const std::vector<DurationSample>& durations,
                                           const std::vector<FreqSample>& freqs);

// One SummaryRow per distinct key tuple, ordered by key (numeric keys
// numerically). When `joined` is given (parallel to `durations`), each row
// also carries the median of freq_mean_khz over its group.
std::vector<SummaryRow> summarize(const std::vector<DurationSample>& durations,
                                  std::span<const GroupKey> keys,
                                  const std::vector<JoinedRow>* joined = nullptr);
std::vector<SummaryRow> summarize(const std::filesystem::path& durations_file,
                                  std::span<const GroupKey> keys);

// Average ranks, 1-based; ties share the mean of their positions.
std::vector<double> average_ranks(std::span<const double> values);

// Spearman rank correlation with average-rank ties. Throws
// std::invalid_argument on length mismatch, fewer than 3 points, or a
// constant input.
double spearman(std::span<const double> x, std::span<const double> y);

struct Verdict {
  std::string name;
  bool pass = false;
  double statistic = 0.0;
  std::string statistic_name;
  std::string detail;
};

// "name: PASS (stat=value)"
std::string format_verdict(const Verdict& v);

// Strict median ordering constant < sequential < random. With several
// constant rows, the slowest constant is used. Statistic: smallest gap.
Verdict ordering_check(const std::vector<SummaryRow>& by_scheme);

inline constexpr double kMonotonicityThreshold = -0.9;

// Spearman(mask_bits, median) over the masked rows must be <= -0.9.
Verdict monotonicity_check(const std::vector<SummaryRow>& by_mask);

// Spearman(per-call mean frequency, duration) over joined rows that carry a
// frequency must be <= threshold.
Verdict correlation_check(const std::vector<JoinedRow>& joined, double threshold);

struct AnalyzeOptions {
  std::vector<GroupKey> group_by{GroupKey::Node, GroupKey::Scheme, GroupKey::MaskBits};
  double correlation_threshold = kMonotonicityThreshold;
};

struct AnalysisOutcome {
  std::vector<SummaryRow> summary;
  std::vector<Verdict> verdicts;
  std::vector<std::string> notes;
  int exit_code = 0;  // 0 all verdicts pass, 1 some verdict failed
};

// Reads a run directory, writes summary.csv and verdicts.txt into
// `output_dir`. Verdicts are only attempted when the run contains the data
// they need (three scheme families, three masks, frequency samples).
AnalysisOutcome analyze_run(const std::filesystem::path& run_dir,
                            const std::filesystem::path& output_dir,
                            const AnalyzeOptions& options = {});

}  // namespace flipbench
