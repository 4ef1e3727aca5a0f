#include "flipbench/analysis.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <stdexcept>
#include <tuple>

#include "flipbench/error.hpp"

namespace flipbench {

namespace {

// Sort key: strings compare lexically, numeric fields numerically, and the
// wildcard sorts first.
using RowKey = std::tuple<std::string, long long, std::string, long long, std::string>;

std::optional<int> parse_int(std::string_view s) {
  int v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

double median_of(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  return quantile_linear(v, 0.5);
}

bool starts_with(const std::string& s, std::string_view prefix) {
  return s.rfind(prefix, 0) == 0;
}

}  // namespace

std::vector<GroupKey> parse_group_keys(const std::string& text) {
  std::vector<GroupKey> keys;
  for (auto field : split_fields(text)) {
    if (field == "node") {
      keys.push_back(GroupKey::Node);
    } else if (field == "core") {
      keys.push_back(GroupKey::Core);
    } else if (field == "scheme") {
      keys.push_back(GroupKey::Scheme);
    } else if (field == "mask_bits") {
      keys.push_back(GroupKey::MaskBits);
    } else {
      throw InputError("unknown group key '" + std::string(field) +
                       "' (expected node, core, scheme, mask_bits)");
    }
  }
  return keys;
}

double quantile_linear(std::span<const double> sorted, double p) {
  if (sorted.empty()) throw std::invalid_argument("quantile of an empty sample");
  if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("quantile p must be in [0, 1]");
  const double h = static_cast<double>(sorted.size() - 1) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

std::vector<JoinedRow> join_freq_durations(const std::vector<DurationSample>& durations,
                                           const std::vector<FreqSample>& freqs) {
  std::map<int, std::vector<std::pair<std::int64_t, double>>> by_core;
  for (const auto& f : freqs) {
    by_core[f.core].emplace_back(f.timestamp_ns, static_cast<double>(f.frequency_khz));
  }
  for (auto& [core, samples] : by_core) std::stable_sort(samples.begin(), samples.end());

  std::vector<JoinedRow> joined;
  joined.reserve(durations.size());
  for (const auto& d : durations) {
    JoinedRow row{d, std::nullopt, false, false};
    auto it = by_core.find(d.core);
    if (it == by_core.end() || it->second.empty()) {
      row.no_frequency = true;
      joined.push_back(std::move(row));
      continue;
    }
    const auto& samples = it->second;
    const std::int64_t begin = d.start_ns;
    const std::int64_t end = d.start_ns + d.duration_ns;
    auto first = std::lower_bound(samples.begin(), samples.end(), begin,
                                  [](const auto& s, std::int64_t t) { return s.first < t; });
    auto last = std::upper_bound(samples.begin(), samples.end(), end,
                                 [](std::int64_t t, const auto& s) { return t < s.first; });
    if (first < last) {
      double sum = 0.0;
      for (auto s = first; s != last; ++s) sum += s->second;
      row.freq_mean_khz = sum / static_cast<double>(last - first);
    } else {
      // Empty window: `first` is the first sample after the window.
      row.nearest_fallback = true;
      if (first == samples.begin()) {
        row.freq_mean_khz = first->second;
      } else if (first == samples.end()) {
        row.freq_mean_khz = std::prev(first)->second;
      } else {
        const auto before = std::prev(first);
        const auto gap_before = begin - before->first;
        const auto gap_after = first->first - end;
        row.freq_mean_khz = gap_before <= gap_after ? before->second : first->second;
      }
    }
    joined.push_back(std::move(row));
  }
  return joined;
}

std::vector<SummaryRow> summarize(const std::vector<DurationSample>& durations,
                                  std::span<const GroupKey> keys,
                                  const std::vector<JoinedRow>* joined) {
  if (durations.empty()) throw InputError("no duration rows to summarize");
  if (joined && joined->size() != durations.size()) {
    throw std::invalid_argument("joined table does not match the durations");
  }
  auto has = [&](GroupKey k) { return std::find(keys.begin(), keys.end(), k) != keys.end(); };

  struct Group {
    SummaryRow row;
    std::vector<double> values;
    std::vector<double> freqs;
  };
  std::map<RowKey, Group> groups;
  for (std::size_t i = 0; i < durations.size(); ++i) {
    const auto& d = durations[i];
    SummaryRow proto;
    long long core_key = -1;
    long long mask_key = -2;
    if (has(GroupKey::Node)) proto.node = d.node;
    if (has(GroupKey::Core)) {
      proto.group_core = std::to_string(d.core);
      core_key = d.core;
    }
    if (has(GroupKey::Scheme)) proto.scheme = d.scheme;
    if (has(GroupKey::MaskBits)) {
      proto.mask_bits = d.mask_bits ? std::to_string(*d.mask_bits) : std::string();
      mask_key = d.mask_bits ? *d.mask_bits : -1;
    }
    RowKey key{proto.node, core_key, proto.scheme, mask_key, proto.mask_bits};
    auto& g = groups[key];
    if (g.values.empty()) g.row = proto;
    g.values.push_back(static_cast<double>(d.duration_ns));
    if (joined && (*joined)[i].freq_mean_khz) g.freqs.push_back(*(*joined)[i].freq_mean_khz);
  }

  std::vector<SummaryRow> rows;
  rows.reserve(groups.size());
  for (auto& [key, g] : groups) {
    auto& v = g.values;
    std::sort(v.begin(), v.end());
    SummaryRow r = g.row;
    r.n = v.size();
    r.min_ns = v.front();
    r.q1_ns = quantile_linear(v, 0.25);
    r.median_ns = quantile_linear(v, 0.5);
    r.q3_ns = quantile_linear(v, 0.75);
    r.max_ns = v.back();
    r.mean_ns = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
    if (!g.freqs.empty()) r.freq_median_khz = median_of(g.freqs);
    rows.push_back(std::move(r));
  }
  return rows;
}

std::vector<SummaryRow> summarize(const std::filesystem::path& durations_file,
                                  std::span<const GroupKey> keys) {
  return summarize(read_durations(durations_file), keys);
}

std::vector<double> average_ranks(std::span<const double> values) {
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(values.size());
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j + 1 < order.size() && values[order[j + 1]] == values[order[i]]) ++j;
    const double rank = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = rank;
    i = j + 1;
  }
  return ranks;
}

double spearman(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw std::invalid_argument("spearman inputs differ in length");
  if (x.size() < 3) throw std::invalid_argument("spearman needs at least 3 points");
  const auto rx = average_ranks(x);
  const auto ry = average_ranks(y);
  const double n = static_cast<double>(rx.size());
  const double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / n;
  const double my = std::accumulate(ry.begin(), ry.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    const double dx = rx[i] - mx;
    const double dy = ry[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) {
    throw std::invalid_argument("spearman undefined for a constant input");
  }
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

std::string format_verdict(const Verdict& v) {
  return v.name + ": " + (v.pass ? "PASS" : "FAIL") + " (" + v.statistic_name + "=" +
         format_real(v.statistic) + ")";
}

Verdict ordering_check(const std::vector<SummaryRow>& by_scheme) {
  std::optional<double> constant, sequential, random;
  for (const auto& r : by_scheme) {
    auto take = [&](std::optional<double>& slot, const char* name) {
      if (slot) throw InputError(std::string("summary has several rows for ") + name +
                                 "; group by scheme only");
      slot = r.median_ns;
    };
    if (starts_with(r.scheme, "constant:")) {
      constant = constant ? std::max(*constant, r.median_ns) : r.median_ns;
    } else if (r.scheme == "sequential") {
      take(sequential, "sequential");
    } else if (r.scheme == "random") {
      take(random, "random");
    }
  }
  if (!constant || !sequential || !random) {
    throw InputError("ordering check needs constant, sequential and random schemes");
  }
  Verdict v;
  v.name = "ordering_check";
  v.statistic_name = "gap";
  v.statistic = std::min(*sequential - *constant, *random - *sequential);
  v.pass = *constant < *sequential && *sequential < *random;
  v.detail = "median constant=" + format_real(*constant) + " sequential=" +
             format_real(*sequential) + " random=" + format_real(*random) + " ns";
  return v;
}

Verdict monotonicity_check(const std::vector<SummaryRow>& by_mask) {
  std::map<int, double> medians;
  for (const auto& r : by_mask) {
    std::optional<int> mask;
    if (starts_with(r.scheme, "masked:")) {
      mask = parse_int(std::string_view(r.scheme).substr(7));
    } else if (r.scheme == "*") {
      mask = parse_int(r.mask_bits);
    }
    if (!mask) continue;
    if (!medians.emplace(*mask, r.median_ns).second) {
      throw InputError("summary has several rows for mask " + std::to_string(*mask));
    }
  }
  if (medians.size() < 3) throw InputError("monotonicity check needs at least 3 mask sizes");

  std::vector<double> masks, values;
  std::string detail = "median by mask:";
  for (const auto& [k, m] : medians) {
    masks.push_back(k);
    values.push_back(m);
    detail += " " + std::to_string(k) + "=" + format_real(m);
  }
  Verdict v;
  v.name = "monotonicity_check";
  v.statistic_name = "rho";
  v.detail = detail;
  try {
    v.statistic = spearman(masks, values);
    v.pass = v.statistic <= kMonotonicityThreshold;
  } catch (const std::invalid_argument&) {
    v.statistic = 0.0;
    v.pass = false;
    v.detail += " (medians constant)";
  }
  return v;
}

Verdict correlation_check(const std::vector<JoinedRow>& joined, double threshold) {
  std::vector<double> freq, duration;
  for (const auto& r : joined) {
    if (!r.freq_mean_khz) continue;
    freq.push_back(*r.freq_mean_khz);
    duration.push_back(static_cast<double>(r.sample.duration_ns));
  }
  Verdict v;
  v.name = "correlation_check";
  v.statistic_name = "rho";
  v.statistic = spearman(freq, duration);
  v.pass = v.statistic <= threshold;
  v.detail = std::to_string(freq.size()) + " calls with frequency data, threshold " +
             format_real(threshold);
  return v;
}

AnalysisOutcome analyze_run(const std::filesystem::path& run_dir,
                            const std::filesystem::path& output_dir,
                            const AnalyzeOptions& options) {
  const auto artifacts = RunArtifacts::in(run_dir);
  const auto durations = read_durations(artifacts.durations_path);
  std::vector<FreqSample> freqs;
  if (std::filesystem::exists(artifacts.freq_path)) freqs = read_freq(artifacts.freq_path);
  if (!freqs.empty() && std::filesystem::exists(artifacts.metadata_path)) {
    const auto clock = Metadata::read(artifacts.metadata_path).get("clock");
    if (!clock || (*clock != "steady_clock" && *clock != "simulated")) {
      throw InputError("metadata does not declare a shared monotonic clock");
    }
  }
  const auto joined = join_freq_durations(durations, freqs);

  AnalysisOutcome out;
  out.summary = summarize(durations, options.group_by, &joined);

  const GroupKey scheme_keys[] = {GroupKey::Scheme, GroupKey::MaskBits};
  const auto by_scheme = summarize(durations, scheme_keys);
  bool has_const = false, has_seq = false, has_rand = false;
  std::size_t masks = 0;
  for (const auto& r : by_scheme) {
    has_const |= starts_with(r.scheme, "constant:");
    has_seq |= r.scheme == "sequential";
    has_rand |= r.scheme == "random";
    masks += starts_with(r.scheme, "masked:") ? 1 : 0;
  }
  if (has_const && has_seq && has_rand) {
    out.verdicts.push_back(ordering_check(by_scheme));
  } else {
    out.notes.push_back("ordering_check skipped: needs constant, sequential and random");
  }
  if (masks >= 3) {
    out.verdicts.push_back(monotonicity_check(by_scheme));
  } else {
    out.notes.push_back("monotonicity_check skipped: needs at least 3 mask sizes");
  }
  try {
    out.verdicts.push_back(correlation_check(joined, options.correlation_threshold));
  } catch (const std::invalid_argument& e) {
    out.notes.push_back(std::string("correlation_check skipped: ") + e.what());
  }

  out.exit_code = std::all_of(out.verdicts.begin(), out.verdicts.end(),
                              [](const Verdict& v) { return v.pass; })
                      ? 0
                      : 1;

  std::filesystem::create_directories(output_dir);
  write_summary(output_dir / kSummaryFile, out.summary);
  std::ofstream vf(output_dir / kVerdictsFile, std::ios::binary | std::ios::trunc);
  if (!vf) throw Error("cannot write " + (output_dir / kVerdictsFile).string());
  for (const auto& v : out.verdicts) {
    vf << format_verdict(v) << '\n';
    if (!v.detail.empty()) vf << "  " << v.detail << '\n';
  }
  for (const auto& n : out.notes) vf << "# " << n << '\n';
  return out;
}

}  // namespace flipbench
