#include "flipbench/flipmodel.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <limits>
#include <stdexcept>

#include "flipbench/error.hpp"
#include "flipbench/kernels.hpp"
#include "flipbench/prng.hpp"

namespace flipbench {

namespace {

constexpr double kKhzPerGhz = 1e6;
constexpr std::int64_t kSimEpochNs = 1'000'000'000;
constexpr std::int64_t kSegmentGapNs = 1'000'000;

double ghz(std::uint64_t khz) { return static_cast<double>(khz) / kKhzPerGhz; }

std::string join_ladder(const std::vector<std::uint64_t>& ladder) {
  std::string out;
  for (auto f : ladder) {
    if (!out.empty()) out += ';';
    out += std::to_string(f);
  }
  return out;
}

}  // namespace

std::vector<std::uint64_t> make_ladder(std::uint64_t min_khz, std::uint64_t max_khz,
                                       std::uint64_t step_khz) {
  if (min_khz == 0 || step_khz == 0 || max_khz < min_khz) {
    throw std::invalid_argument("ladder needs 0 < min <= max and step > 0");
  }
  std::vector<std::uint64_t> ladder;
  for (std::uint64_t f = min_khz; f <= max_khz; f += step_khz) ladder.push_back(f);
  return ladder;
}

void PowerModel::validate() const {
  if (freq_ladder_khz.empty()) throw std::invalid_argument("frequency ladder is empty");
  for (std::size_t i = 0; i < freq_ladder_khz.size(); ++i) {
    if (freq_ladder_khz[i] == 0) throw std::invalid_argument("ladder frequencies must be > 0");
    if (i > 0 && freq_ladder_khz[i] <= freq_ladder_khz[i - 1]) {
      throw std::invalid_argument("ladder must be strictly increasing");
    }
    if (voltage(freq_ladder_khz[i]) <= 0.0) {
      throw std::invalid_argument("voltage curve must be positive on the ladder");
    }
  }
  if (!(c_dyn >= 0.0) || !(p_static_w >= 0.0) || !(power_cap_w > 0.0)) {
    throw std::invalid_argument("c_dyn, p_static_w must be >= 0 and power_cap_w > 0");
  }
  if (flops_per_cycle < 1) throw std::invalid_argument("flops_per_cycle must be >= 1");
  if (!(alpha_floor >= 0.0 && alpha_floor < 1.0)) {
    throw std::invalid_argument("alpha_floor must be in [0, 1)");
  }
  if (!(activity_scale > 0.0)) throw std::invalid_argument("activity_scale must be > 0");
  if (!(efficiency > 0.0 && efficiency <= 1.0)) {
    throw std::invalid_argument("efficiency must be in (0, 1]");
  }
}

double PowerModel::voltage(std::uint64_t khz) const { return v0 + v1 * ghz(khz); }

double PowerModel::power_w(double alpha, int active_cores, std::uint64_t khz) const {
  const double v = voltage(khz);
  return p_static_w + static_cast<double>(active_cores) * alpha * c_dyn * ghz(khz) * v * v;
}

double activity_factor(const PowerModel& model, const Matrix& a, const Matrix& b,
                       const Matrix& c) {
  if (a.rows() != b.rows() || a.rows() != c.rows() || a.cols() != b.cols() ||
      a.cols() != c.cols()) {
    throw std::invalid_argument("activity_factor needs operands of one order");
  }
  const double mean_bits =
      (mean_adjacent_hamming(a) + mean_adjacent_hamming(b) + mean_adjacent_hamming(c)) / 3.0;
  return std::clamp(model.activity_scale * mean_bits / 64.0, model.alpha_floor, 1.0);
}

double activity_factor(const PowerModel& model, const OperandSet& ops) {
  return activity_factor(model, ops.a, ops.b, ops.c);
}

OperatingPoint steady_state_frequency(const PowerModel& model, double alpha, int active_cores) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw std::invalid_argument("alpha must be in [0, 1]");
  if (active_cores < 1) throw std::invalid_argument("active_cores must be >= 1");
  const auto& ladder = model.freq_ladder_khz;
  for (auto it = ladder.rbegin(); it != ladder.rend(); ++it) {
    if (model.power_w(alpha, active_cores, *it) <= model.power_cap_w) return {*it, false};
  }
  return {model.min_khz(), true};
}

double duration_at(const PowerModel& model, std::uint64_t order, std::uint64_t khz,
                   double efficiency) {
  if (order < 2) throw std::invalid_argument("order must be >= 2");
  if (!(efficiency > 0.0 && efficiency <= 1.0)) {
    throw std::invalid_argument("efficiency must be in (0, 1]");
  }
  const double hz = static_cast<double>(khz) * 1e3;
  return static_cast<double>(flop_count(order)) /
         (hz * static_cast<double>(model.flops_per_cycle) * efficiency);
}

double predict_duration(const PowerModel& model, double alpha, std::uint64_t order,
                        int active_cores, double efficiency) {
  const auto point = steady_state_frequency(model, alpha, active_cores);
  return duration_at(model, order, point.frequency_khz, efficiency);
}

std::vector<CalibrationAnchor> default_anchors(const PowerModel& model) {
  return {{model.alpha_floor, 1, 3'700'000}, {1.0, 16, 2'400'000}};
}

CapacitanceFit fit_dynamic_capacitance(const PowerModel& model,
                                       std::span<const CalibrationAnchor> anchors) {
  const double budget = model.power_cap_w - model.p_static_w;
  if (!(budget > 0.0)) throw std::invalid_argument("power cap must exceed static power");

  // Dynamic power per unit c_dyn at frequency f.
  auto load = [&](const CalibrationAnchor& a, std::uint64_t khz) {
    const double v = model.voltage(khz);
    return static_cast<double>(a.active_cores) * a.alpha * ghz(khz) * v * v;
  };

  double lower = 0.0;
  double upper = std::numeric_limits<double>::infinity();
  const auto& ladder = model.freq_ladder_khz;
  for (const auto& a : anchors) {
    auto it = std::find(ladder.begin(), ladder.end(), a.target_khz);
    if (it == ladder.end()) throw std::invalid_argument("anchor target is not a ladder step");
    if (a.alpha <= 0.0 || a.active_cores < 1) {
      throw std::invalid_argument("anchor needs alpha > 0 and at least one core");
    }
    upper = std::min(upper, budget / load(a, *it));
    if (std::next(it) != ladder.end()) {
      lower = std::max(lower, budget / load(a, *std::next(it)));
    }
  }
  if (!(lower < upper)) throw std::invalid_argument("calibration anchors are incompatible");
  const double mid = std::isfinite(upper) ? 0.5 * (lower + upper) : 2.0 * lower;
  return {lower, upper, mid};
}

void SimConfig::validate() const {
  model.validate();
  if (active_cores < 1) throw std::invalid_argument("active_cores must be >= 1");
  if (schemes.empty()) throw std::invalid_argument("at least one scheme is required");
  for (const auto& s : schemes) s.validate();
  if (calls < 1) throw std::invalid_argument("calls must be >= 1");
  if (matrix_order < 2) throw std::invalid_argument("matrix_order must be >= 2");
  if (!(noise_rel >= 0.0 && noise_rel < 0.2)) {
    throw std::invalid_argument("noise_rel must be in [0, 0.2)");
  }
}

SimulationResult simulate_experiment(const SimConfig& cfg,
                                     const std::filesystem::path& output_dir) {
  cfg.validate();
  std::error_code ec;
  std::filesystem::create_directories(output_dir, ec);
  if (ec) throw Error("cannot create " + output_dir.string() + ": " + ec.message());

  SimulationResult result;
  result.artifacts = RunArtifacts::in(output_dir);
  result.run_id = "sim-" + std::to_string(cfg.seed);

  for (const auto& spec : cfg.schemes) {
    SimulatedScheme s;
    s.spec = spec;
    s.alpha = activity_factor(cfg.model, generate_operands(cfg.matrix_order, spec));
    s.point = steady_state_frequency(cfg.model, s.alpha, cfg.active_cores);
    s.predicted_seconds =
        duration_at(cfg.model, cfg.matrix_order, s.point.frequency_khz, cfg.model.efficiency);
    result.schemes.push_back(s);
  }

  Xoshiro256 noise(cfg.seed ^ 0x6e6f697365ULL);
  std::vector<DurationSample> durations;
  std::vector<FreqSample> freqs;
  durations.reserve(cfg.schemes.size() * cfg.calls * static_cast<std::size_t>(cfg.active_cores));

  std::int64_t segment_start = kSimEpochNs;
  for (const auto& s : result.schemes) {
    std::int64_t segment_end = segment_start;
    const std::string scheme_text = s.spec.to_string();
    for (int core = 0; core < cfg.active_cores; ++core) {
      std::int64_t t = segment_start;
      for (std::uint64_t call = 0; call < cfg.calls; ++call) {
        const double factor = 1.0 + cfg.noise_rel * (2.0 * noise.uniform01() - 1.0);
        const auto ns = std::max<std::int64_t>(
            1, std::llround(s.predicted_seconds * 1e9 * factor));
        DurationSample d;
        d.node = cfg.node;
        d.core = core;
        d.call_index = call;
        d.scheme = scheme_text;
        d.mask_bits = s.spec.mask();
        d.seed = s.spec.uses_seed() ? s.spec.seed : cfg.seed;
        d.matrix_order = cfg.matrix_order;
        d.kernel = "model";
        d.start_ns = t;
        d.duration_ns = ns;
        durations.push_back(d);
        // One sampler tick in the middle of every call.
        freqs.push_back({t + ns / 2, core, s.point.frequency_khz});
        t += ns;
      }
      segment_end = std::max(segment_end, t);
    }
    segment_start = segment_end + kSegmentGapNs;
  }
  std::stable_sort(freqs.begin(), freqs.end(), [](const FreqSample& a, const FreqSample& b) {
    return a.timestamp_ns != b.timestamp_ns ? a.timestamp_ns < b.timestamp_ns : a.core < b.core;
  });

  write_durations(result.artifacts.durations_path, durations);
  write_freq(result.artifacts.freq_path, freqs);

  Metadata md;
  md.set("run_id", result.run_id);
  md.set("source", "simulator");
  md.set("clock", "simulated");
  md.set("generator", Xoshiro256::kAlgorithm);
  md.set("kernel", "model");
  md.set("node", cfg.node);
  md.set("matrix_order", cfg.matrix_order);
  md.set("calls", cfg.calls);
  md.set("active_cores", cfg.active_cores);
  md.set("noise_rel", format_real(cfg.noise_rel));
  md.set("seed", cfg.seed);
  std::string schemes;
  for (const auto& s : cfg.schemes) schemes += (schemes.empty() ? "" : ";") + s.to_string();
  md.set("schemes", schemes);
  md.set("model.freq_ladder_khz", join_ladder(cfg.model.freq_ladder_khz));
  md.set("model.v0", format_real(cfg.model.v0));
  md.set("model.v1", format_real(cfg.model.v1));
  md.set("model.c_dyn", format_real(cfg.model.c_dyn));
  md.set("model.p_static_w", format_real(cfg.model.p_static_w));
  md.set("model.power_cap_w", format_real(cfg.model.power_cap_w));
  md.set("model.flops_per_cycle", cfg.model.flops_per_cycle);
  md.set("model.alpha_floor", format_real(cfg.model.alpha_floor));
  md.set("model.activity_scale", format_real(cfg.model.activity_scale));
  md.set("model.efficiency", format_real(cfg.model.efficiency));
  for (const auto& s : result.schemes) {
    const std::string key = "scheme." + s.spec.to_string();
    md.set(key + ".alpha", format_real(s.alpha));
    md.set(key + ".frequency_khz", s.point.frequency_khz);
    md.set(key + ".power_limited", s.point.power_limited ? "true" : "false");
    md.set(key + ".predicted_ns", format_real(s.predicted_seconds * 1e9));
  }
  md.set("status", "complete");
  md.write(result.artifacts.metadata_path);
  return result;
}

}  // namespace flipbench
