#include "flipbench/harness.hpp"

#include <algorithm>
#include <chrono>
#include <condition_variable>
#include <cstdlib>
#include <deque>
#include <fstream>
#include <mutex>
#include <optional>
#include <set>
#include <thread>

#include "flipbench/error.hpp"
#include "flipbench/kernels.hpp"
#include "flipbench/prng.hpp"

#if defined(__linux__)
#include <sched.h>
#include <sys/sysinfo.h>
#include <unistd.h>
#endif

namespace flipbench {

namespace {

// Multi-producer queue with a hard capacity. Producers never block: a full
// queue rejects the record and the caller flags the overflow.
template <typename T>
class BoundedQueue {
 public:
  explicit BoundedQueue(std::size_t capacity) : capacity_(capacity) {}

  bool try_push(T value) {
    {
      std::lock_guard lock(mu_);
      if (items_.size() >= capacity_) return false;
      items_.push_back(std::move(value));
    }
    cv_.notify_one();
    return true;
  }

  std::optional<T> pop() {
    std::unique_lock lock(mu_);
    cv_.wait(lock, [&] { return closed_ || !items_.empty(); });
    if (items_.empty()) return std::nullopt;
    T value = std::move(items_.front());
    items_.pop_front();
    return value;
  }

  void close() {
    {
      std::lock_guard lock(mu_);
      closed_ = true;
    }
    cv_.notify_all();
  }

 private:
  std::mutex mu_;
  std::condition_variable cv_;
  std::deque<T> items_;
  std::size_t capacity_;
  bool closed_ = false;
};

std::string wall_clock_iso() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string join_cores(const std::vector<int>& cores) {
  std::string out;
  for (int c : cores) out += (out.empty() ? "" : ";") + std::to_string(c);
  return out;
}

}  // namespace

void ExperimentConfig::validate() const {
  if (cores.empty()) throw InputError("at least one core is required");
  if (std::set<int>(cores.begin(), cores.end()).size() != cores.size()) {
    throw InputError("cores must be distinct");
  }
  if (calls_per_core < 1) throw InputError("calls per core must be >= 1");
  if (matrix_order < 2) throw InputError("matrix order must be >= 2");
  if (block < 1) throw InputError("block must be >= 1");
  if (monitor_interval_ms < kMinMonitorIntervalMs) {
    throw InputError("monitor interval must be >= 10 ms");
  }
  if (queue_capacity < 1) throw InputError("queue capacity must be >= 1");
  try {
    init.validate();
  } catch (const std::invalid_argument& e) {
    throw InputError(e.what());
  }
  find_kernel(kernel);
}

int configured_core_count() {
#if defined(__linux__)
  return get_nprocs_conf();
#else
  return static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
#endif
}

PinResult pin_worker(int core) {
  if (core < 0 || core >= configured_core_count()) {
    throw PinError("core " + std::to_string(core) + " does not exist");
  }
#if defined(__linux__)
  if (core >= CPU_SETSIZE) throw PinError("core " + std::to_string(core) + " exceeds CPU_SETSIZE");
  cpu_set_t set;
  CPU_ZERO(&set);
  CPU_SET(core, &set);
  if (sched_setaffinity(0, sizeof(set), &set) != 0) {
    throw PinError("cannot pin to core " + std::to_string(core));
  }
  return {true, {}};
#else
  return {false, "thread pinning unsupported on this platform"};
#endif
}

std::vector<int> current_affinity() {
  std::vector<int> cores;
#if defined(__linux__)
  cpu_set_t set;
  CPU_ZERO(&set);
  if (sched_getaffinity(0, sizeof(set), &set) == 0) {
    for (int c = 0; c < CPU_SETSIZE; ++c) {
      if (CPU_ISSET(c, &set)) cores.push_back(c);
    }
  }
#endif
  return cores;
}

WarmupReport warmup(std::uint64_t seconds, std::span<const int> cores) {
  WarmupReport report;
  report.loop_counts.assign(cores.size(), 0);
  if (seconds == 0) return report;

  const auto begin = std::chrono::steady_clock::now();
  const auto deadline = begin + std::chrono::seconds(seconds);
  {
    std::vector<std::jthread> workers;
    for (std::size_t w = 0; w < cores.size(); ++w) {
      workers.emplace_back([&, w] {
        try {
          pin_worker(cores[w]);
        } catch (const PinError&) {
          // Unpinned warm-up still loads the machine.
        }
        double x = 1.0 + static_cast<double>(w);
        double y = 0.999999;
        std::uint64_t loops = 0;
        while (std::chrono::steady_clock::now() < deadline) {
          for (int i = 0; i < 4096; ++i) x = x * y + 1e-9;
          ++loops;
        }
        report.loop_counts[w] = loops + (x == 0.0 ? 1 : 0);
      });
    }
  }
  report.elapsed_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - begin).count();
  return report;
}

CalibrationResult run_calibration(const ExperimentConfig& config, FrequencyProvider* provider) {
  config.validate();
  for (int core : config.cores) {
    if (core < 0 || core >= configured_core_count()) {
      throw PinError("core " + std::to_string(core) + " does not exist");
    }
  }
  const KernelDescriptor kernel = find_kernel(config.kernel);

  std::error_code ec;
  std::filesystem::create_directories(config.output_dir, ec);
  if (ec) throw Error("cannot create " + config.output_dir.string() + ": " + ec.message());

  CalibrationResult result;
  result.artifacts = RunArtifacts::in(config.output_dir);
  result.run_id = "run-" + config.node_label + "-" + std::to_string(config.seed) + "-" +
                  std::to_string(std::chrono::duration_cast<std::chrono::seconds>(
                                     std::chrono::system_clock::now().time_since_epoch())
                                     .count());

  Metadata md;
  md.set("run_id", result.run_id);
  md.set("source", "harness");
  md.set("clock", "steady_clock");
  md.set("wall_clock_start", wall_clock_iso());
  md.set("monotonic_start_ns", monotonic_now_ns());
  md.set("generator", Xoshiro256::kAlgorithm);
  md.set("kernel", kernel.name);
  md.set("block", config.block);
  md.set("node", config.node_label);
  md.set("cores", join_cores(config.cores));
  md.set("matrix_order", config.matrix_order);
  md.set("calls_per_core", config.calls_per_core);
  md.set("scheme", config.init.to_string());
  md.set("seed", config.seed);
  md.set("c_refresh", "per_call_untimed");
  md.set("warmup_seconds", config.warmup_seconds);
  md.set("warmup_mode", config.stress_command.empty() ? "native" : "external");
  md.set("monitor_interval_ms", config.monitor_interval_ms);
  for (const auto& [k, v] : config.config_echo) md.set("config." + k, v);

  // Durations file is opened first so an unwritable directory fails early.
  std::ofstream durations(result.artifacts.durations_path, std::ios::binary | std::ios::trunc);
  if (!durations) throw Error("cannot write " + result.artifacts.durations_path.string());
  durations << kDurationsHeader << '\n';

  if (!config.stress_command.empty()) {
    const int rc = std::system(config.stress_command.c_str());
    md.set("warmup_exit_code", rc);
  } else {
    const auto report = warmup(config.warmup_seconds, config.cores);
    md.set("warmup_elapsed_s", format_real(report.elapsed_seconds));
  }

  OsFileProvider os_provider;
  FrequencyProvider& freq = provider ? *provider : os_provider;
  md.set("frequency_provider", to_string(freq.kind()));
  FrequencyRecorder recorder(freq, config.cores,
                             std::chrono::milliseconds(config.monitor_interval_ms),
                             result.artifacts.freq_path);

  BoundedQueue<DurationSample> queue(config.queue_capacity);
  std::atomic<bool> overflow{false};
  std::atomic<bool> failed{false};
  std::mutex warn_mu;
  std::vector<std::string> warnings;
  std::uint64_t written = 0;

  std::jthread writer([&] {
    while (auto s = queue.pop()) {
      durations << to_csv_row(*s) << '\n';
      ++written;
    }
  });

  {
    std::vector<std::jthread> workers;
    for (int core : config.cores) {
      workers.emplace_back([&, core] {
        try {
          const auto pin = pin_worker(core);
          if (!pin.warning.empty()) {
            std::lock_guard lock(warn_mu);
            warnings.push_back("core " + std::to_string(core) + ": " + pin.warning);
          }
          // Buffers are allocated once; the timed region only runs the kernel.
          Matrix a = generate(config.matrix_order, config.init, Operand::A);
          Matrix b = generate(config.matrix_order, config.init, Operand::B);
          Matrix c = generate(config.matrix_order, config.init, Operand::C);
          const std::string scheme = config.init.to_string();
          for (std::uint64_t call = 0; call < config.calls_per_core && !failed; ++call) {
            fill(c, config.matrix_order, config.init, Operand::C);
            const auto t0 = std::chrono::steady_clock::now();
            kernel.run(1.0, a, b, 1.0, c, config.block);
            const auto t1 = std::chrono::steady_clock::now();
            DurationSample s;
            s.node = config.node_label;
            s.core = core;
            s.call_index = call;
            s.scheme = scheme;
            s.mask_bits = config.init.mask();
            s.seed = config.seed;
            s.matrix_order = config.matrix_order;
            s.kernel = kernel.name;
            s.start_ns = std::chrono::duration_cast<std::chrono::nanoseconds>(
                             t0.time_since_epoch())
                             .count();
            s.duration_ns = std::max<std::int64_t>(
                1, std::chrono::duration_cast<std::chrono::nanoseconds>(t1 - t0).count());
            if (!queue.try_push(std::move(s))) overflow = true;
          }
        } catch (const std::exception& e) {
          failed = true;
          std::lock_guard lock(warn_mu);
          warnings.push_back("core " + std::to_string(core) + ": " + e.what());
        }
      });
    }
  }
  queue.close();
  writer.join();
  durations.flush();
  result.monitor = recorder.stop();

  result.rows = written;
  result.complete = !failed && !overflow &&
                    written == config.cores.size() * config.calls_per_core;
  md.set("rows", written);
  md.set("queue_overflow", overflow ? "true" : "false");
  md.set("monitor_ticks", result.monitor.ticks);
  md.set("monitor_samples", result.monitor.samples);
  md.set("monitor_gaps", result.monitor.gaps);
  md.set("monitor_missed_deadlines", result.monitor.missed_deadlines);
  for (std::size_t i = 0; i < warnings.size(); ++i) {
    md.set("warning." + std::to_string(i), warnings[i]);
  }
  md.set("status", result.complete ? "complete" : "partial");
  md.write(result.artifacts.metadata_path);
  return result;
}

}  // namespace flipbench
