#include "flipbench/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "flipbench/error.hpp"

namespace flipbench {

namespace {

constexpr double kPanelW = 420.0;
constexpr double kPanelH = 260.0;
constexpr double kPlotLeft = 70.0;
constexpr double kPlotRight = 20.0;
constexpr double kPlotTop = 34.0;
constexpr double kPlotBottom = 46.0;
constexpr double kHeader = 36.0;
constexpr double kLegendW = 170.0;

constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd",
                                    "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.3f", v);
  return buf;
}

std::string tick_label(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4g", v);
  return buf;
}

std::string xml_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

// constant < sequential < random < masked, then by numeric parameter.
struct SeriesOrder {
  static std::pair<int, double> rank(const std::string& label) {
    auto param = [&](std::size_t from) {
      try {
        return std::stod(label.substr(from));
      } catch (...) {
        return 0.0;
      }
    };
    if (label.rfind("constant:", 0) == 0) return {0, param(9)};
    if (label == "sequential") return {1, 0.0};
    if (label == "random" || label == "unmasked") return {2, 0.0};
    if (label.rfind("masked:", 0) == 0) return {3, param(7)};
    if (label.rfind("mask=", 0) == 0) return {3, param(5)};
    return {4, 0.0};
  }
  bool operator()(const std::string& a, const std::string& b) const {
    const auto ra = rank(a), rb = rank(b);
    if (ra != rb) return ra < rb;
    return a < b;
  }
};

std::string series_label(const DurationSample& d, SeriesKey key) {
  if (key == SeriesKey::Scheme) return d.scheme;
  return d.mask_bits ? "mask=" + std::to_string(*d.mask_bits) : "unmasked";
}

struct FacetKey {
  std::string node;
  int core = -1;
  auto operator<=>(const FacetKey&) const = default;
};

struct Range {
  double lo = 0.0, hi = 1.0;

  void include(double v) {
    if (empty) {
      lo = hi = v;
      empty = false;
    } else {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  }
  void pad() {
    if (empty) {
      lo = 0.0;
      hi = 1.0;
    } else if (hi == lo) {
      const double d = lo == 0.0 ? 1.0 : std::abs(lo) * 0.05;
      lo -= d;
      hi += d;
    } else {
      const double d = (hi - lo) * 0.05;
      lo -= d;
      hi += d;
    }
  }
  bool empty = true;
};

// Maps data coordinates into one panel's plotting area (SVG y grows down).
struct PanelFrame {
  double x0, y0;  // top-left of the panel
  Range xr, yr;

  double px(double x) const {
    return x0 + kPlotLeft + (x - xr.lo) / (xr.hi - xr.lo) * (kPanelW - kPlotLeft - kPlotRight);
  }
  double py(double y) const {
    const double h = kPanelH - kPlotTop - kPlotBottom;
    return y0 + kPlotTop + (1.0 - (y - yr.lo) / (yr.hi - yr.lo)) * h;
  }
};

class Figure {
 public:
  Figure(std::vector<FacetKey> facets, bool by_core, std::vector<std::string> series,
         std::string title)
      : facets_(std::move(facets)), series_(std::move(series)), title_(std::move(title)) {
    std::set<std::string> nodes;
    std::set<int> cores;
    for (const auto& f : facets_) {
      nodes.insert(f.node);
      cores.insert(f.core);
    }
    nodes_.assign(nodes.begin(), nodes.end());
    cores_.assign(cores.begin(), cores.end());
    if (!by_core) cores_ = {-1};
  }

  const std::vector<std::string>& series() const { return series_; }

  std::string color(const std::string& series) const {
    const auto it = std::find(series_.begin(), series_.end(), series);
    const auto idx = static_cast<std::size_t>(it - series_.begin());
    return kPalette[idx % std::size(kPalette)];
  }

  double width() const { return static_cast<double>(cores_.size()) * kPanelW + kLegendW; }
  double height() const { return kHeader + static_cast<double>(nodes_.size()) * kPanelH; }

  std::pair<double, double> origin(const FacetKey& f) const {
    const auto r = std::find(nodes_.begin(), nodes_.end(), f.node) - nodes_.begin();
    const auto c = std::find(cores_.begin(), cores_.end(), f.core) - cores_.begin();
    return {static_cast<double>(c) * kPanelW, kHeader + static_cast<double>(r) * kPanelH};
  }

  void begin(std::ostringstream& os) const {
    os << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
       << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << num(width()) << "\" height=\""
       << num(height()) << "\" viewBox=\"0 0 " << num(width()) << ' ' << num(height())
       << "\" font-family=\"sans-serif\" font-size=\"11\">\n"
       << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
       << "<text x=\"" << num(width() / 2) << "\" y=\"22\" text-anchor=\"middle\" "
       << "font-size=\"14\">" << xml_escape(title_) << "</text>\n";
  }

  void legend(std::ostringstream& os) const {
    const double x = width() - kLegendW + 10.0;
    double y = kHeader + 20.0;
    os << "<g class=\"legend\">\n";
    for (const auto& s : series_) {
      os << "  <rect x=\"" << num(x) << "\" y=\"" << num(y - 9) << "\" width=\"10\" "
         << "height=\"10\" fill=\"" << color(s) << "\"/>\n"
         << "  <text x=\"" << num(x + 16) << "\" y=\"" << num(y) << "\">" << xml_escape(s)
         << "</text>\n";
      y += 16.0;
    }
    os << "</g>\n";
  }

  static void end(std::ostringstream& os) { os << "</svg>\n"; }

  static std::string panel_title(const FacetKey& f) {
    std::string t = f.node == "*" ? std::string("all nodes") : f.node;
    if (f.core >= 0) t += " / core " + std::to_string(f.core);
    return t;
  }

  // Frame, ticks and axis titles for one panel.
  static void axes(std::ostringstream& os, const PanelFrame& pf, const FacetKey& f,
                   const std::string& xlabel, const std::string& ylabel, bool x_ticks = true) {
    const double left = pf.x0 + kPlotLeft;
    const double right = pf.x0 + kPanelW - kPlotRight;
    const double top = pf.y0 + kPlotTop;
    const double bottom = pf.y0 + kPanelH - kPlotBottom;
    os << "<g class=\"panel\" data-node=\"" << xml_escape(f.node) << "\" data-core=\"" << f.core
       << "\">\n"
       << "  <text x=\"" << num((left + right) / 2) << "\" y=\"" << num(pf.y0 + 20)
       << "\" text-anchor=\"middle\">" << xml_escape(panel_title(f)) << "</text>\n"
       << "  <rect x=\"" << num(left) << "\" y=\"" << num(top) << "\" width=\""
       << num(right - left) << "\" height=\"" << num(bottom - top)
       << "\" fill=\"none\" stroke=\"#333\"/>\n";
    for (int i = 0; i <= 4; ++i) {
      const double yv = pf.yr.lo + (pf.yr.hi - pf.yr.lo) * i / 4.0;
      const double y = pf.py(yv);
      os << "  <line x1=\"" << num(left - 4) << "\" y1=\"" << num(y) << "\" x2=\"" << num(left)
         << "\" y2=\"" << num(y) << "\" stroke=\"#333\"/>\n"
         << "  <text x=\"" << num(left - 6) << "\" y=\"" << num(y + 4)
         << "\" text-anchor=\"end\">" << tick_label(yv) << "</text>\n";
      if (x_ticks) {
        const double xv = pf.xr.lo + (pf.xr.hi - pf.xr.lo) * i / 4.0;
        const double x = pf.px(xv);
        os << "  <line x1=\"" << num(x) << "\" y1=\"" << num(bottom) << "\" x2=\"" << num(x)
           << "\" y2=\"" << num(bottom + 4) << "\" stroke=\"#333\"/>\n"
           << "  <text x=\"" << num(x) << "\" y=\"" << num(bottom + 16)
           << "\" text-anchor=\"middle\">" << tick_label(xv) << "</text>\n";
      }
    }
    os << "  <text x=\"" << num((left + right) / 2) << "\" y=\"" << num(bottom + 34)
       << "\" text-anchor=\"middle\">" << xml_escape(xlabel) << "</text>\n"
       << "  <text transform=\"translate(" << num(pf.x0 + 16) << ',' << num((top + bottom) / 2)
       << ") rotate(-90)\" text-anchor=\"middle\">" << xml_escape(ylabel) << "</text>\n";
  }

 private:
  std::vector<FacetKey> facets_;
  std::vector<std::string> nodes_;
  std::vector<int> cores_;
  std::vector<std::string> series_;
  std::string title_;
};

bool has_key(const std::vector<GroupKey>& keys, GroupKey k) {
  return std::find(keys.begin(), keys.end(), k) != keys.end();
}

FacetKey facet_of(const DurationSample& d, const PlotSpec& spec) {
  return {has_key(spec.facets, GroupKey::Node) ? d.node : "*",
          has_key(spec.facets, GroupKey::Core) ? d.core : -1};
}

// A frequency sample tagged with the call it was taken during (or nearest to).
struct TaggedFreq {
  FreqSample sample;
  FacetKey facet;
  std::string series;
};

std::vector<TaggedFreq> tag_freqs(const PlotSpec& spec,
                                  const std::vector<DurationSample>& durations,
                                  const std::vector<FreqSample>& freqs) {
  std::map<int, std::vector<const DurationSample*>> by_core;
  for (const auto& d : durations) by_core[d.core].push_back(&d);
  for (auto& [core, rows] : by_core) {
    std::stable_sort(rows.begin(), rows.end(), [](const auto* a, const auto* b) {
      return a->start_ns < b->start_ns;
    });
  }
  std::vector<TaggedFreq> out;
  for (const auto& f : freqs) {
    auto it = by_core.find(f.core);
    if (it == by_core.end()) continue;
    const auto& rows = it->second;
    auto pos = std::upper_bound(rows.begin(), rows.end(), f.timestamp_ns,
                                [](std::int64_t t, const auto* d) { return t < d->start_ns; });
    const DurationSample* owner = pos == rows.begin() ? rows.front() : *std::prev(pos);
    out.push_back({f, facet_of(*owner, spec), series_label(*owner, spec.series)});
  }
  return out;
}

std::vector<std::string> ordered(const std::set<std::string>& labels) {
  std::vector<std::string> v(labels.begin(), labels.end());
  std::sort(v.begin(), v.end(), SeriesOrder{});
  return v;
}

std::string render_duration_timeline(const PlotSpec& spec,
                                     const std::vector<DurationSample>& durations) {
  std::map<FacetKey, std::vector<const DurationSample*>> panels;
  std::set<std::string> labels;
  std::int64_t t0 = durations.front().start_ns;
  for (const auto& d : durations) {
    panels[facet_of(d, spec)].push_back(&d);
    labels.insert(series_label(d, spec.series));
    t0 = std::min(t0, d.start_ns);
  }
  std::vector<FacetKey> facets;
  for (const auto& [f, rows] : panels) facets.push_back(f);
  Figure fig(facets, has_key(spec.facets, GroupKey::Core), ordered(labels),
             spec.title.empty() ? "kernel call durations over time" : spec.title);

  std::ostringstream os;
  fig.begin(os);
  for (const auto& [facet, rows] : panels) {
    auto [x0, y0] = fig.origin(facet);
    PanelFrame pf{x0, y0, {}, {}};
    for (const auto* d : rows) {
      pf.xr.include(static_cast<double>(d->start_ns - t0) * 1e-9);
      pf.yr.include(static_cast<double>(d->duration_ns) * 1e-9);
    }
    pf.xr.pad();
    pf.yr.pad();
    Figure::axes(os, pf, facet, "time (s)", "duration (s)");
    for (const auto& s : fig.series()) {
      os << "  <g class=\"series\" data-series=\"" << xml_escape(s) << "\" fill=\""
         << fig.color(s) << "\">\n";
      for (const auto* d : rows) {
        if (series_label(*d, spec.series) != s) continue;
        os << "    <circle cx=\"" << num(pf.px(static_cast<double>(d->start_ns - t0) * 1e-9))
           << "\" cy=\"" << num(pf.py(static_cast<double>(d->duration_ns) * 1e-9))
           << "\" r=\"1.5\"/>\n";
      }
      os << "  </g>\n";
    }
    os << "</g>\n";
  }
  fig.legend(os);
  Figure::end(os);
  return os.str();
}

std::string render_duration_box(const PlotSpec& spec,
                                 const std::vector<DurationSample>& durations) {
  std::map<FacetKey, std::vector<DurationSample>> panels;
  std::set<std::string> labels;
  for (const auto& d : durations) {
    panels[facet_of(d, spec)].push_back(d);
    labels.insert(series_label(d, spec.series));
  }
  std::vector<FacetKey> facets;
  for (const auto& [f, rows] : panels) facets.push_back(f);
  Figure fig(facets, has_key(spec.facets, GroupKey::Core), ordered(labels),
             spec.title.empty() ? "kernel call duration distributions" : spec.title);
  const GroupKey series_key =
      spec.series == SeriesKey::Scheme ? GroupKey::Scheme : GroupKey::MaskBits;
  const GroupKey keys[] = {series_key};

  std::ostringstream os;
  fig.begin(os);
  for (const auto& [facet, rows] : panels) {
    const auto summary = summarize(rows, keys);
    auto [x0, y0] = fig.origin(facet);
    PanelFrame pf{x0, y0, {}, {}};
    pf.xr.lo = -0.5;
    pf.xr.hi = static_cast<double>(fig.series().size()) - 0.5;
    pf.xr.empty = false;
    for (const auto& r : summary) {
      pf.yr.include(r.min_ns * 1e-9);
      pf.yr.include(r.max_ns * 1e-9);
    }
    pf.yr.pad();
    Figure::axes(os, pf, facet, "", "duration (s)", false);
    for (const auto& r : summary) {
      const std::string label =
          spec.series == SeriesKey::Scheme
              ? r.scheme
              : (r.mask_bits.empty() ? std::string("unmasked") : "mask=" + r.mask_bits);
      const auto idx = static_cast<double>(
          std::find(fig.series().begin(), fig.series().end(), label) - fig.series().begin());
      const double cx = pf.px(idx);
      const double half = 0.3 * (pf.px(1.0) - pf.px(0.0));
      const double yq1 = pf.py(r.q1_ns * 1e-9), yq3 = pf.py(r.q3_ns * 1e-9);
      os << "  <g class=\"box\" data-series=\"" << xml_escape(label) << "\" data-n=\"" << r.n
         << "\" data-min=\"" << format_real(r.min_ns) << "\" data-q1=\""
         << format_real(r.q1_ns) << "\" data-median=\"" << format_real(r.median_ns)
         << "\" data-q3=\"" << format_real(r.q3_ns) << "\" data-max=\"" << format_real(r.max_ns)
         << "\" stroke=\"" << fig.color(label) << "\">\n"
         << "    <line x1=\"" << num(cx) << "\" y1=\"" << num(pf.py(r.min_ns * 1e-9))
         << "\" x2=\"" << num(cx) << "\" y2=\"" << num(pf.py(r.max_ns * 1e-9)) << "\"/>\n"
         << "    <rect x=\"" << num(cx - half) << "\" y=\"" << num(yq3) << "\" width=\""
         << num(2 * half) << "\" height=\"" << num(yq1 - yq3) << "\" fill=\"white\"/>\n"
         << "    <line x1=\"" << num(cx - half) << "\" y1=\"" << num(pf.py(r.median_ns * 1e-9))
         << "\" x2=\"" << num(cx + half) << "\" y2=\"" << num(pf.py(r.median_ns * 1e-9))
         << "\" stroke-width=\"2\"/>\n"
         << "    <text x=\"" << num(cx) << "\" y=\"" << num(pf.y0 + kPanelH - kPlotBottom + 16)
         << "\" text-anchor=\"middle\" stroke=\"none\">" << xml_escape(label) << "</text>\n"
         << "  </g>\n";
    }
    os << "</g>\n";
  }
  fig.legend(os);
  Figure::end(os);
  return os.str();
}

std::string render_freq_timeline(const PlotSpec& spec,
                                 const std::vector<DurationSample>& durations,
                                 const std::vector<FreqSample>& freqs) {
  const auto tagged = tag_freqs(spec, durations, freqs);
  if (tagged.empty()) throw InputError("no frequency samples match the duration trace");
  std::map<FacetKey, std::vector<const TaggedFreq*>> panels;
  std::set<std::string> labels;
  std::int64_t t0 = tagged.front().sample.timestamp_ns;
  for (const auto& t : tagged) {
    panels[t.facet].push_back(&t);
    labels.insert(t.series);
    t0 = std::min(t0, t.sample.timestamp_ns);
  }
  std::vector<FacetKey> facets;
  for (const auto& [f, rows] : panels) facets.push_back(f);
  Figure fig(facets, has_key(spec.facets, GroupKey::Core), ordered(labels),
             spec.title.empty() ? "core frequencies over time" : spec.title);

  std::ostringstream os;
  fig.begin(os);
  for (const auto& [facet, rows] : panels) {
    auto [x0, y0] = fig.origin(facet);
    PanelFrame pf{x0, y0, {}, {}};
    // One line per (core, series) segment, in time order.
    std::map<std::pair<int, std::string>, std::vector<const FreqSample*>> lines;
    for (const auto* t : rows) {
      pf.xr.include(static_cast<double>(t->sample.timestamp_ns - t0) * 1e-9);
      pf.yr.include(static_cast<double>(t->sample.frequency_khz) * 1e-6);
      lines[{t->sample.core, t->series}].push_back(&t->sample);
    }
    pf.xr.pad();
    pf.yr.pad();
    Figure::axes(os, pf, facet, "time (s)", "frequency (GHz)");
    for (auto& [key, pts] : lines) {
      std::stable_sort(pts.begin(), pts.end(), [](const auto* a, const auto* b) {
        return a->timestamp_ns < b->timestamp_ns;
      });
      std::uint64_t lo = pts.front()->frequency_khz, hi = lo;
      for (const auto* p : pts) {
        lo = std::min(lo, p->frequency_khz);
        hi = std::max(hi, p->frequency_khz);
      }
      os << "  <polyline class=\"freq\" data-core=\"" << key.first << "\" data-series=\""
         << xml_escape(key.second) << "\" data-khz-min=\"" << lo << "\" data-khz-max=\"" << hi
         << "\" fill=\"none\" stroke=\"" << fig.color(key.second) << "\" points=\"";
      bool first = true;
      for (const auto* p : pts) {
        os << (first ? "" : " ") << num(pf.px(static_cast<double>(p->timestamp_ns - t0) * 1e-9))
           << ',' << num(pf.py(static_cast<double>(p->frequency_khz) * 1e-6));
        first = false;
      }
      os << "\"/>\n";
    }
    os << "</g>\n";
  }
  fig.legend(os);
  Figure::end(os);
  return os.str();
}

std::string render_freq_density(const PlotSpec& spec,
                                const std::vector<DurationSample>& durations,
                                const std::vector<FreqSample>& freqs) {
  const auto tagged = tag_freqs(spec, durations, freqs);
  if (tagged.empty()) throw InputError("no frequency samples match the duration trace");
  constexpr double kBinGhz = 0.1;
  std::map<FacetKey, std::map<std::string, std::vector<double>>> panels;
  std::set<std::string> labels;
  for (const auto& t : tagged) {
    panels[t.facet][t.series].push_back(static_cast<double>(t.sample.frequency_khz) * 1e-6);
    labels.insert(t.series);
  }
  std::vector<FacetKey> facets;
  for (const auto& [f, rows] : panels) facets.push_back(f);
  Figure fig(facets, has_key(spec.facets, GroupKey::Core), ordered(labels),
             spec.title.empty() ? "core frequency distributions" : spec.title);

  std::ostringstream os;
  fig.begin(os);
  for (const auto& [facet, by_series] : panels) {
    auto [x0, y0] = fig.origin(facet);
    PanelFrame pf{x0, y0, {}, {}};
    std::map<std::string, std::map<long long, double>> hist;
    for (const auto& [s, values] : by_series) {
      for (double v : values) {
        const auto bin = static_cast<long long>(std::floor(v / kBinGhz + 0.5));
        hist[s][bin] += 1.0 / (static_cast<double>(values.size()) * kBinGhz);
      }
    }
    pf.yr.include(0.0);
    for (const auto& [s, bins] : hist) {
      for (const auto& [bin, density] : bins) {
        pf.xr.include((static_cast<double>(bin) - 0.5) * kBinGhz);
        pf.xr.include((static_cast<double>(bin) + 0.5) * kBinGhz);
        pf.yr.include(density);
      }
    }
    pf.xr.pad();
    pf.yr.pad();
    pf.yr.lo = 0.0;
    Figure::axes(os, pf, facet, "frequency (GHz)", "density (1/GHz)");
    for (const auto& s : fig.series()) {
      auto it = hist.find(s);
      if (it == hist.end()) continue;
      os << "  <g class=\"density\" data-series=\"" << xml_escape(s) << "\" data-n=\""
         << by_series.at(s).size() << "\" fill=\"" << fig.color(s)
         << "\" fill-opacity=\"0.5\" stroke=\"" << fig.color(s) << "\">\n";
      for (const auto& [bin, density] : it->second) {
        const double left = pf.px((static_cast<double>(bin) - 0.5) * kBinGhz);
        const double right = pf.px((static_cast<double>(bin) + 0.5) * kBinGhz);
        const double top = pf.py(density);
        os << "    <rect x=\"" << num(left) << "\" y=\"" << num(top) << "\" width=\""
           << num(right - left) << "\" height=\"" << num(pf.py(0.0) - top) << "\"/>\n";
      }
      os << "  </g>\n";
    }
    os << "</g>\n";
  }
  fig.legend(os);
  Figure::end(os);
  return os.str();
}

std::string pad_right(const std::string& s, std::size_t width) {
  return s.size() >= width ? s + " " : s + std::string(width - s.size(), ' ');
}

}  // namespace

std::string plot_kind_name(PlotKind kind) {
  switch (kind) {
    case PlotKind::DurationTimeline: return "duration_timeline";
    case PlotKind::DurationBox: return "duration_box";
    case PlotKind::FreqTimeline: return "freq_timeline";
    case PlotKind::FreqDensity: return "freq_density";
  }
  return "?";
}

PlotKind parse_plot_kind(const std::string& name) {
  for (auto kind : kAllPlotKinds) {
    if (plot_kind_name(kind) == name) return kind;
  }
  throw InputError("unknown plot kind '" + name + "'");
}

std::string render_svg(const PlotSpec& spec, const std::vector<DurationSample>& durations,
                       const std::vector<FreqSample>& freqs) {
  if (durations.empty()) throw InputError("nothing to plot: the duration trace is empty");
  switch (spec.kind) {
    case PlotKind::DurationTimeline:
      return render_duration_timeline(spec, durations);
    case PlotKind::DurationBox:
      return render_duration_box(spec, durations);
    case PlotKind::FreqTimeline:
      if (freqs.empty()) throw InputError("nothing to plot: the freq trace is empty");
      return render_freq_timeline(spec, durations, freqs);
    case PlotKind::FreqDensity:
      if (freqs.empty()) throw InputError("nothing to plot: the freq trace is empty");
      return render_freq_density(spec, durations, freqs);
  }
  throw InputError("unknown plot kind");
}

void render(const PlotSpec& spec) {
  const auto durations = read_durations(spec.durations_path);
  std::vector<FreqSample> freqs;
  if (spec.kind == PlotKind::FreqTimeline || spec.kind == PlotKind::FreqDensity) {
    freqs = read_freq(spec.freq_path);
  }
  const std::string svg = render_svg(spec, durations, freqs);
  std::ofstream out(spec.output_path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + spec.output_path.string());
  out << svg;
}

std::string text_report(const std::vector<SummaryRow>& summaries,
                        const std::vector<Verdict>& verdicts, const std::string& run_id) {
  constexpr std::size_t kKeyW = 16;
  constexpr std::size_t kNumW = 22;
  std::ostringstream os;
  os << "flipbench report";
  if (!run_id.empty()) os << "  run_id=" << run_id;
  os << '\n';
  os << pad_right("node", kKeyW) << pad_right("core", kKeyW) << pad_right("scheme", kKeyW)
     << pad_right("mask_bits", kKeyW) << pad_right("n", kKeyW);
  for (const char* h : {"min_ns", "q1_ns", "median_ns", "q3_ns", "max_ns", "mean_ns",
                        "freq_median_khz"}) {
    os << pad_right(h, kNumW);
  }
  os << '\n';
  for (const auto& r : summaries) {
    os << pad_right(r.node, kKeyW) << pad_right(r.group_core, kKeyW)
       << pad_right(r.scheme, kKeyW) << pad_right(r.mask_bits.empty() ? "-" : r.mask_bits, kKeyW)
       << pad_right(std::to_string(r.n), kKeyW);
    for (double v : {r.min_ns, r.q1_ns, r.median_ns, r.q3_ns, r.max_ns, r.mean_ns}) {
      os << pad_right(format_real(v), kNumW);
    }
    os << pad_right(r.freq_median_khz ? format_real(*r.freq_median_khz) : "-", kNumW) << '\n';
  }
  if (!verdicts.empty()) os << '\n';
  for (const auto& v : verdicts) os << format_verdict(v) << '\n';
  return os.str();
}

ReportOutputs render_run(const std::filesystem::path& run_dir,
                         const std::filesystem::path& output_dir,
                         const AnalyzeOptions& options) {
  const auto artifacts = RunArtifacts::in(run_dir);
  const auto durations = read_durations(artifacts.durations_path);
  std::vector<FreqSample> freqs;
  if (std::filesystem::exists(artifacts.freq_path)) freqs = read_freq(artifacts.freq_path);
  std::string run_id = "run";
  if (std::filesystem::exists(artifacts.metadata_path)) {
    run_id = Metadata::read(artifacts.metadata_path).get("run_id").value_or(run_id);
  }

  std::filesystem::create_directories(output_dir);
  ReportOutputs out;
  for (auto kind : kAllPlotKinds) {
    PlotSpec spec;
    spec.kind = kind;
    try {
      const auto svg = render_svg(spec, durations, freqs);
      const auto path = output_dir / (plot_kind_name(kind) + "_" + run_id + ".svg");
      std::ofstream f(path, std::ios::binary | std::ios::trunc);
      if (!f) throw Error("cannot write " + path.string());
      f << svg;
      out.plots.push_back(path);
    } catch (const InputError& e) {
      out.skipped.push_back(plot_kind_name(kind) + ": " + e.what());
    }
  }

  // Same summary and verdicts as `analyze`, recomputed from the traces.
  const auto analysis = analyze_run(run_dir, output_dir, options);
  out.report = output_dir / ("report_" + run_id + ".txt");
  std::ofstream rf(out.report, std::ios::binary | std::ios::trunc);
  if (!rf) throw Error("cannot write " + out.report.string());
  rf << text_report(analysis.summary, analysis.verdicts, run_id);
  return out;
}

}  // namespace flipbench
