#include <doctest.h>

#include <thread>

#include "flipbench/error.hpp"
#include "flipbench/freqmon.hpp"
#include "test_util.hpp"

using namespace flipbench;
using namespace std::chrono_literals;
using flipbench::testing::slurp;
using flipbench::testing::spit;
using flipbench::testing::TempDir;

namespace {

void fake_core(const TempDir& dir, int core, const std::string& content) {
  const auto p = dir.path() / ("cpu" + std::to_string(core)) / "cpufreq";
  std::filesystem::create_directories(p);
  spit(p / "scaling_cur_freq", content);
}

}  // namespace

TEST_CASE("os provider reads per-core cpufreq files") {
  TempDir dir("sysfs");
  fake_core(dir, 0, "2400000\n");
  fake_core(dir, 3, "3700000");
  fake_core(dir, 4, "fast\n");
  fake_core(dir, 5, "0\n");
  OsFileProvider p(dir.path());
  CHECK(p.kind() == ProviderKind::OsFiles);
  CHECK(read_core_frequency(p, 0) == 2'400'000);
  CHECK(read_core_frequency(p, 3) == 3'700'000);
  CHECK_THROWS_AS(p.read_khz(1), FrequencyReadError);
  CHECK_THROWS_AS(p.read_khz(4), FrequencyReadError);
  CHECK_THROWS_AS(p.read_khz(5), FrequencyReadError);
  CHECK_THROWS_AS(p.read_khz(-1), FrequencyReadError);
}

TEST_CASE("simulated provider follows the model") {
  PowerModel model;
  SimulatedProvider idle(model, model.alpha_floor, 1);
  CHECK(idle.read_khz(0) == 3'700'000);
  CHECK_THROWS_AS(idle.read_khz(1), FrequencyReadError);

  SimulatedProvider busy(model, 1.0, 16);
  CHECK(busy.read_khz(15) == 2'400'000);
  busy.set_alpha(model.alpha_floor);
  CHECK(busy.read_khz(0) == steady_state_frequency(model, model.alpha_floor, 16).frequency_khz);
  CHECK(std::string(to_string(busy.kind())) == "simulated");
}

TEST_CASE("replay provider plays back per core then runs dry") {
  ReplayProvider p({{1, 0, 100}, {2, 1, 500}, {3, 0, 200}});
  CHECK(p.read_khz(0) == 100);
  CHECK(p.read_khz(1) == 500);
  CHECK(p.read_khz(0) == 200);
  CHECK_THROWS_AS(p.read_khz(0), FrequencyReadError);
  CHECK_THROWS_AS(p.read_khz(7), FrequencyReadError);

  TempDir dir("replay");
  write_freq(dir / "f.csv", {{1, 2, 42}});
  auto from_file = ReplayProvider::from_file(dir / "f.csv");
  CHECK(from_file->read_khz(2) == 42);
}

TEST_CASE("monitor samples each core once per tick") {
  PowerModel model;
  SimulatedProvider p(model, 1.0, 2);
  const int cores[] = {0, 1};
  std::vector<FreqSample> got;
  std::stop_source src;
  std::jthread stopper([&] {
    std::this_thread::sleep_for(1050ms);
    src.request_stop();
  });
  const auto stats =
      monitor(p, cores, 100ms, src.get_token(), [&](const FreqSample& s) { got.push_back(s); });
  stopper.join();
  CHECK(got.size() >= 18);
  CHECK(got.size() <= 22);
  CHECK(stats.samples == got.size());
  CHECK(stats.gaps == 0);
  for (std::size_t i = 1; i < got.size(); ++i) CHECK(got[i].timestamp_ns >= got[i - 1].timestamp_ns);
  const auto expected = steady_state_frequency(model, 1.0, 2).frequency_khz;
  for (const auto& s : got) CHECK(s.frequency_khz == expected);
}

TEST_CASE("monitor records read failures as gaps") {
  ReplayProvider p({{1, 0, 100}});
  const int cores[] = {0, 9};
  std::stop_source src;
  std::size_t seen = 0;
  std::jthread stopper([&] {
    std::this_thread::sleep_for(75ms);
    src.request_stop();
  });
  const auto stats = monitor(p, cores, 20ms, src.get_token(), [&](const FreqSample&) { ++seen; });
  CHECK(stats.ticks >= 2);
  CHECK(seen == 1);
  CHECK(stats.gaps == 2 * stats.ticks - 1);
}

TEST_CASE("monitor rejects intervals below the floor") {
  ReplayProvider p({});
  const int cores[] = {0};
  CHECK_THROWS_AS(monitor(p, cores, 5ms, std::stop_token{}, [](const FreqSample&) {}),
                  std::invalid_argument);
}

TEST_CASE("recorder stopped before the first tick leaves a header-only file") {
  TempDir dir("rec");
  PowerModel model;
  SimulatedProvider p(model, 1.0, 1);
  FrequencyRecorder rec(p, {0}, 1000ms, dir / "freq.csv");
  const auto stats = rec.stop();
  CHECK(stats.samples == 0);
  CHECK(slurp(dir / "freq.csv") == std::string(kFreqHeader) + "\n");
}

TEST_CASE("recorder streams parseable rows") {
  TempDir dir("rec");
  PowerModel model;
  SimulatedProvider p(model, 1.0, 1);
  FrequencyRecorder rec(p, {0}, 20ms, dir / "freq.csv");
  std::this_thread::sleep_for(110ms);
  const auto stats = rec.stop();
  const auto rows = read_freq(dir / "freq.csv");
  CHECK(rows.size() == stats.samples);
  CHECK(rows.size() >= 3);
}
