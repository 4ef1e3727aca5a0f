#include "flipbench/freqmon.hpp"

#include <charconv>
#include <condition_variable>
#include <fstream>
#include <thread>

#include "flipbench/error.hpp"

namespace flipbench {

const char* to_string(ProviderKind kind) {
  switch (kind) {
    case ProviderKind::OsFiles:
      return "os";
    case ProviderKind::Simulated:
      return "simulated";
    case ProviderKind::Replay:
      return "replay";
  }
  return "?";
}

OsFileProvider::OsFileProvider(std::filesystem::path base) : base_(std::move(base)) {}

std::filesystem::path OsFileProvider::path_for(int core) const {
  return base_ / ("cpu" + std::to_string(core)) / "cpufreq" / "scaling_cur_freq";
}

std::uint64_t OsFileProvider::read_khz(int core) {
  if (core < 0) throw FrequencyReadError("negative core id " + std::to_string(core));
  const auto path = path_for(core);
  std::ifstream in(path);
  if (!in) throw FrequencyReadError("cannot read " + path.string());
  std::string text;
  std::getline(in, text);
  while (!text.empty() && (text.back() == '\n' || text.back() == ' ' || text.back() == '\r')) {
    text.pop_back();
  }
  std::uint64_t khz = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), khz);
  if (text.empty() || ec != std::errc() || ptr != text.data() + text.size() || khz == 0) {
    throw FrequencyReadError("malformed frequency '" + text + "' in " + path.string());
  }
  return khz;
}

SimulatedProvider::SimulatedProvider(PowerModel model, double alpha, int active_cores)
    : model_(std::move(model)), alpha_(alpha), active_cores_(active_cores) {
  model_.validate();
  steady_state_frequency(model_, alpha, active_cores);  // validates alpha/cores
}

std::uint64_t SimulatedProvider::read_khz(int core) {
  if (core < 0 || core >= active_cores_) {
    throw FrequencyReadError("simulated provider has no core " + std::to_string(core));
  }
  return steady_state_frequency(model_, alpha_.load(), active_cores_).frequency_khz;
}

void SimulatedProvider::set_alpha(double alpha) {
  steady_state_frequency(model_, alpha, active_cores_);
  alpha_.store(alpha);
}

ReplayProvider::ReplayProvider(const std::vector<FreqSample>& trace) {
  for (const auto& s : trace) values_[s.core].push_back(s.frequency_khz);
}

std::unique_ptr<ReplayProvider> ReplayProvider::from_file(const std::filesystem::path& path) {
  return std::make_unique<ReplayProvider>(read_freq(path));
}

std::uint64_t ReplayProvider::read_khz(int core) {
  std::lock_guard lock(mu_);
  auto it = values_.find(core);
  if (it == values_.end()) {
    throw FrequencyReadError("replay trace has no core " + std::to_string(core));
  }
  auto& pos = cursor_[core];
  if (pos >= it->second.size()) {
    throw FrequencyReadError("replay trace exhausted for core " + std::to_string(core));
  }
  return it->second[pos++];
}

std::uint64_t read_core_frequency(FrequencyProvider& provider, int core) {
  return provider.read_khz(core);
}

std::int64_t monotonic_now_ns() {
  return std::chrono::duration_cast<std::chrono::nanoseconds>(
             std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

MonitorStats monitor(FrequencyProvider& provider, std::span<const int> cores,
                     std::chrono::milliseconds interval, std::stop_token stop,
                     const std::function<void(const FreqSample&)>& sink) {
  if (interval.count() < kMinMonitorIntervalMs) {
    throw std::invalid_argument("monitor interval must be at least 10 ms");
  }
  MonitorStats stats;
  std::mutex mu;
  std::condition_variable_any cv;
  auto next = std::chrono::steady_clock::now() + interval;
  while (true) {
    {
      std::unique_lock lock(mu);
      cv.wait_until(lock, stop, next, [] { return false; });
    }
    if (stop.stop_requested()) break;

    ++stats.ticks;
    for (int core : cores) {
      try {
        const auto khz = provider.read_khz(core);
        sink(FreqSample{monotonic_now_ns(), core, khz});
        ++stats.samples;
      } catch (const FrequencyReadError&) {
        ++stats.gaps;
      }
    }

    next += interval;
    const auto now = std::chrono::steady_clock::now();
    if (now > next) {
      const auto behind = (now - next) / interval;
      stats.missed_deadlines += static_cast<std::uint64_t>(behind) + 1;
      next += interval * (behind + 1);
    }
  }
  return stats;
}

struct FrequencyRecorder::State {
  std::ofstream out;
  MonitorStats stats;
  std::jthread thread;
  bool stopped = false;
};

FrequencyRecorder::FrequencyRecorder(FrequencyProvider& provider, std::vector<int> cores,
                                     std::chrono::milliseconds interval,
                                     const std::filesystem::path& out)
    : state_(std::make_unique<State>()) {
  if (interval.count() < kMinMonitorIntervalMs) {
    throw std::invalid_argument("monitor interval must be at least 10 ms");
  }
  state_->out.open(out, std::ios::binary | std::ios::trunc);
  if (!state_->out) throw Error("cannot write " + out.string());
  state_->out << kFreqHeader << '\n';
  state_->out.flush();
  State* st = state_.get();
  state_->thread = std::jthread([st, &provider, cores = std::move(cores),
                                 interval](std::stop_token token) {
    st->stats = monitor(provider, cores, interval, token,
                        [st](const FreqSample& s) { st->out << to_csv_row(s) << '\n'; });
  });
}

FrequencyRecorder::~FrequencyRecorder() {
  if (state_ && !state_->stopped) stop();
}

MonitorStats FrequencyRecorder::stop() {
  if (!state_->stopped) {
    state_->thread.request_stop();
    if (state_->thread.joinable()) state_->thread.join();
    state_->out.flush();
    state_->stopped = true;
  }
  return state_->stats;
}

}  // namespace flipbench
