#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "flipbench/datagen.hpp"
#include "flipbench/freqmon.hpp"
#include "flipbench/trace.hpp"

namespace flipbench {

struct ExperimentConfig {
  std::string node_label = "localhost";
  std::vector<int> cores{0};
  std::uint64_t matrix_order = 2048;
  std::uint64_t calls_per_core = 50;
  InitSpec init = InitSpec::random(1);
  std::string kernel = "blocked";
  std::size_t block = 64;
  std::uint64_t warmup_seconds = 600;
  int monitor_interval_ms = kDefaultMonitorIntervalMs;
  std::filesystem::path output_dir = "flipbench-out";
  std::uint64_t seed = 1;
  // When set, warm-up runs this shell command instead of the native busy loop.
  std::string stress_command;
  std::size_t queue_capacity = 1 << 16;
  // Fully resolved CLI/config settings, echoed into the metadata file.
  std::vector<std::pair<std::string, std::string>> config_echo;

  void validate() const;
};

struct WarmupReport {
  double elapsed_seconds = 0.0;
  std::vector<std::uint64_t> loop_counts;  // one per core, in `cores` order
};

// Full-occupancy arithmetic busy loop on every listed core for `seconds`.
WarmupReport warmup(std::uint64_t seconds, std::span<const int> cores);

struct PinResult {
  bool pinned = false;
  std::string warning;  // set when the platform cannot pin
};

// Restricts the calling thread to `core`. Throws PinError for a core that
// does not exist or cannot be selected.
PinResult pin_worker(int core);

// Cores in the calling thread's affinity mask.
std::vector<int> current_affinity();

int configured_core_count();

struct CalibrationResult {
  RunArtifacts artifacts;
  std::string run_id;
  bool complete = false;
  std::uint64_t rows = 0;
  MonitorStats monitor;
};

// Warm-up, then `calls_per_core` timed kernel calls on every listed core,
// each worker pinned, with the frequency monitor running alongside. Only the
// kernel call sits inside the timed region; C is regenerated before each
// call. `provider` defaults to the OS cpufreq files.
CalibrationResult run_calibration(const ExperimentConfig& config,
                                  FrequencyProvider* provider = nullptr);

}  // namespace flipbench
