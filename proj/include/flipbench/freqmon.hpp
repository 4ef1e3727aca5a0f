#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <span>
#include <stop_token>
#include <string>
#include <vector>

#include "flipbench/flipmodel.hpp"
#include "flipbench/trace.hpp"

namespace flipbench {

enum class ProviderKind { OsFiles, Simulated, Replay };

const char* to_string(ProviderKind kind);

// Source of instantaneous per-core frequencies. Implementations must be safe
// to call from the sampler thread while measurement workers run.
class FrequencyProvider {
 public:
  virtual ~FrequencyProvider() = default;
  virtual ProviderKind kind() const = 0;
  // Frequency in kHz (> 0). Throws FrequencyReadError on failure.
  virtual std::uint64_t read_khz(int core) = 0;
};

// Reads <base>/cpu<N>/cpufreq/scaling_cur_freq (ASCII decimal kHz).
class OsFileProvider final : public FrequencyProvider {
 public:
  explicit OsFileProvider(std::filesystem::path base = "/sys/devices/system/cpu");
  ProviderKind kind() const override { return ProviderKind::OsFiles; }
  std::uint64_t read_khz(int core) override;

  std::filesystem::path path_for(int core) const;

 private:
  std::filesystem::path base_;
};

// Steady-state frequency of the power model at the current activity.
class SimulatedProvider final : public FrequencyProvider {
 public:
  SimulatedProvider(PowerModel model, double alpha, int active_cores);
  ProviderKind kind() const override { return ProviderKind::Simulated; }
  std::uint64_t read_khz(int core) override;

  void set_alpha(double alpha);

 private:
  PowerModel model_;
  std::atomic<double> alpha_;
  int active_cores_;
};

// Plays back a recorded freq trace, per core, in recorded order.
class ReplayProvider final : public FrequencyProvider {
 public:
  explicit ReplayProvider(const std::vector<FreqSample>& trace);
  static std::unique_ptr<ReplayProvider> from_file(const std::filesystem::path& path);

  ProviderKind kind() const override { return ProviderKind::Replay; }
  std::uint64_t read_khz(int core) override;

 private:
  std::mutex mu_;
  std::map<int, std::vector<std::uint64_t>> values_;
  std::map<int, std::size_t> cursor_;
};

std::uint64_t read_core_frequency(FrequencyProvider& provider, int core);

struct MonitorStats {
  std::uint64_t ticks = 0;
  std::uint64_t samples = 0;
  std::uint64_t gaps = 0;            // failed provider reads
  std::uint64_t missed_deadlines = 0;  // ticks skipped because the sampler fell behind
};

inline constexpr int kMinMonitorIntervalMs = 10;
inline constexpr int kDefaultMonitorIntervalMs = 1000;

// Samples every core once per tick until `stop` is requested. Ticks are laid
// on the steady clock starting one interval after the call; a late tick is
// taken immediately and the ticks it overran are dropped, not back-filled.
MonitorStats monitor(FrequencyProvider& provider, std::span<const int> cores,
                     std::chrono::milliseconds interval, std::stop_token stop,
                     const std::function<void(const FreqSample&)>& sink);

// Nanoseconds on the monotonic clock shared by durations and freq samples.
std::int64_t monotonic_now_ns();

// Runs monitor() on its own thread, streaming rows into a freq file.
class FrequencyRecorder {
 public:
  FrequencyRecorder(FrequencyProvider& provider, std::vector<int> cores,
                    std::chrono::milliseconds interval, const std::filesystem::path& out);
  ~FrequencyRecorder();

  FrequencyRecorder(const FrequencyRecorder&) = delete;
  FrequencyRecorder& operator=(const FrequencyRecorder&) = delete;

  // Stops the sampler, flushes the file and returns the counters.
  MonitorStats stop();

 private:
  struct State;
  std::unique_ptr<State> state_;
};

}  // namespace flipbench
