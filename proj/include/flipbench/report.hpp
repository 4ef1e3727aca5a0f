#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "flipbench/analysis.hpp"
#include "flipbench/trace.hpp"

namespace flipbench {

enum class PlotKind { DurationTimeline, DurationBox, FreqTimeline, FreqDensity };
enum class SeriesKey { Scheme, MaskBits };

inline constexpr PlotKind kAllPlotKinds[] = {PlotKind::DurationTimeline, PlotKind::DurationBox,
                                             PlotKind::FreqTimeline, PlotKind::FreqDensity};

// File-name stem: duration_timeline, duration_box, freq_timeline, freq_density.
std::string plot_kind_name(PlotKind kind);
PlotKind parse_plot_kind(const std::string& name);

// One figure. Panels are laid out with one row per node and, when
// GroupKey::Core is among the facets, one column per core.
struct PlotSpec {
  PlotKind kind = PlotKind::DurationBox;
  std::vector<GroupKey> facets{GroupKey::Node};
  SeriesKey series = SeriesKey::Scheme;
  std::filesystem::path durations_path;
  std::filesystem::path freq_path;
  std::filesystem::path output_path;
  std::string title;
};

// SVG text for in-memory traces. Throws InputError on an empty selection.
// The output depends only on the inputs (no timestamps, fixed number format).
std::string render_svg(const PlotSpec& spec, const std::vector<DurationSample>& durations,
                       const std::vector<FreqSample>& freqs);

// Reads the PlotSpec inputs and writes the SVG. Nothing is written on error.
void render(const PlotSpec& spec);

// Fixed-width summary table followed by one line per verdict.
std::string text_report(const std::vector<SummaryRow>& summaries,
                        const std::vector<Verdict>& verdicts, const std::string& run_id = "");

struct ReportOutputs {
  std::vector<std::filesystem::path> plots;
  std::filesystem::path report;
  std::vector<std::string> skipped;
};

// Every plot kind the run has data for, plus report_{runid}.txt.
ReportOutputs render_run(const std::filesystem::path& run_dir,
                         const std::filesystem::path& output_dir,
                         const AnalyzeOptions& options = {});

}  // namespace flipbench
