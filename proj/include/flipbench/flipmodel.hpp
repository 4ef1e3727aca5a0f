#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "flipbench/datagen.hpp"
#include "flipbench/matrix.hpp"
#include "flipbench/trace.hpp"

namespace flipbench {

std::vector<std::uint64_t> make_ladder(std::uint64_t min_khz, std::uint64_t max_khz,
                                       std::uint64_t step_khz);

// Switching-activity power model with a package power cap.
//
//   V(f)  = v0 + v1 * f                       (f in GHz)
//   P     = p_static + cores * alpha * c_dyn * f * V(f)^2
//
// c_dyn is in nJ per cycle per V^2, so the product with f in GHz is watts.
// The committed defaults satisfy both calibration anchors (see
// default_anchors()); fit_dynamic_capacitance() reproduces the fit.
struct PowerModel {
  std::vector<std::uint64_t> freq_ladder_khz = make_ladder(1'000'000, 3'700'000, 100'000);
  double v0 = 0.6;
  double v1 = 0.12;
  double c_dyn = 3.35;
  double p_static_w = 20.0;
  double power_cap_w = 125.0;
  int flops_per_cycle = 32;
  double alpha_floor = 0.05;
  // Scale w in alpha = w * mean_adjacent_hamming / 64.
  double activity_scale = 2.0;
  double efficiency = 0.85;

  void validate() const;
  double voltage(std::uint64_t khz) const;
  double power_w(double alpha, int active_cores, std::uint64_t khz) const;
  std::uint64_t min_khz() const { return freq_ladder_khz.front(); }
  std::uint64_t max_khz() const { return freq_ladder_khz.back(); }
};

// Operand switching activity in [alpha_floor, 1], from the bit entropy of the
// three operands.
double activity_factor(const PowerModel& model, const Matrix& a, const Matrix& b, const Matrix& c);
double activity_factor(const PowerModel& model, const OperandSet& ops);

struct OperatingPoint {
  std::uint64_t frequency_khz = 0;
  bool power_limited = false;  // no ladder step fits under the cap
};

// Highest ladder frequency whose power stays under the cap.
OperatingPoint steady_state_frequency(const PowerModel& model, double alpha, int active_cores);

// Seconds for one order-N call at frequency `khz`.
double duration_at(const PowerModel& model, std::uint64_t order, std::uint64_t khz,
                   double efficiency);
double predict_duration(const PowerModel& model, double alpha, std::uint64_t order,
                        int active_cores, double efficiency);

struct CalibrationAnchor {
  double alpha = 1.0;
  int active_cores = 1;
  std::uint64_t target_khz = 0;
};

// Idle-activity single core reaches the turbo ceiling; full activity on 16
// cores settles at 2.4 GHz.
std::vector<CalibrationAnchor> default_anchors(const PowerModel& model);

struct CapacitanceFit {
  double lower = 0.0;   // exclusive
  double upper = 0.0;   // inclusive
  double c_dyn = 0.0;   // midpoint
};

// Range of c_dyn for which every anchor lands exactly on its target step,
// with the other model parameters held fixed. Throws std::invalid_argument
// when the anchors are incompatible.
CapacitanceFit fit_dynamic_capacitance(const PowerModel& model,
                                       std::span<const CalibrationAnchor> anchors);

struct SimConfig {
  PowerModel model;
  // Cores drawing from the modelled power budget. Scheme and mask ordering
  // stays strict for every order from 32 to 2048 only with 63..73 cores;
  // below that the low-entropy schemes share the ladder ceiling.
  int active_cores = 68;
  std::vector<InitSpec> schemes;
  std::uint64_t calls = 50;
  std::uint64_t matrix_order = 2048;
  double noise_rel = 0.0;
  std::uint64_t seed = 1;
  std::string node = "sim";

  void validate() const;
};

struct SimulatedScheme {
  InitSpec spec;
  double alpha = 0.0;
  OperatingPoint point;
  double predicted_seconds = 0.0;
};

struct SimulationResult {
  RunArtifacts artifacts;
  std::string run_id;
  std::vector<SimulatedScheme> schemes;
};

// Writes synthetic durations/freq/metadata files with the harness schemas.
// Output is a pure function of the config.
SimulationResult simulate_experiment(const SimConfig& cfg, const std::filesystem::path& output_dir);

}  // namespace flipbench
