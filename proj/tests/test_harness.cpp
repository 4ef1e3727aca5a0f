#include <doctest.h>

#include <thread>

#include "flipbench/error.hpp"
#include "flipbench/harness.hpp"
#include "test_util.hpp"

using namespace flipbench;
using flipbench::testing::slurp;
using flipbench::testing::spit;
using flipbench::testing::TempDir;

namespace {

ExperimentConfig small_config(const std::filesystem::path& out) {
  ExperimentConfig cfg;
  cfg.node_label = "testnode";
  cfg.cores = {0};
  cfg.matrix_order = 32;
  cfg.calls_per_core = 10;
  cfg.init = InitSpec::masked(5, 26);
  cfg.block = 8;
  cfg.warmup_seconds = 0;
  cfg.monitor_interval_ms = 10;
  cfg.output_dir = out;
  cfg.seed = 5;
  return cfg;
}

}  // namespace

TEST_CASE("warmup of zero seconds returns immediately") {
  const int cores[] = {0};
  const auto r = warmup(0, cores);
  CHECK(r.elapsed_seconds == 0.0);
  CHECK(r.loop_counts == std::vector<std::uint64_t>{0});
}

TEST_CASE("warmup runs for the requested time") {
  const int cores[] = {0};
  const auto r = warmup(2, cores);
  CHECK(r.elapsed_seconds >= 2.0);
  CHECK(r.elapsed_seconds <= 2.5);
  CHECK(r.loop_counts.at(0) > 0);
}

TEST_CASE("pinning restricts the thread affinity") {
  std::vector<int> after;
  std::thread t([&] {
    pin_worker(0);
    after = current_affinity();
  });
  t.join();
  CHECK(after == std::vector<int>{0});

  std::thread bad([] {
    CHECK_THROWS_AS(pin_worker(1'000'000), PinError);
    CHECK_THROWS_AS(pin_worker(-1), PinError);
  });
  bad.join();
  CHECK(configured_core_count() >= 1);
}

TEST_CASE("config validation") {
  ExperimentConfig cfg;
  cfg.cores = {};
  CHECK_THROWS_AS(cfg.validate(), InputError);
  cfg.cores = {0, 0};
  CHECK_THROWS_AS(cfg.validate(), InputError);
  cfg.cores = {0};
  cfg.kernel = "mystery";
  CHECK_THROWS_AS(cfg.validate(), InputError);
  cfg.kernel = "naive";
  cfg.monitor_interval_ms = 5;
  CHECK_THROWS_AS(cfg.validate(), InputError);
  cfg.monitor_interval_ms = 1000;
  cfg.init.scheme = Scheme::MaskedRandom;
  cfg.init.mask_bits = 60;
  CHECK_THROWS_AS(cfg.validate(), InputError);
}

TEST_CASE("calibration run writes one row per call") {
  TempDir dir("harness");
  const auto cfg = small_config(dir / "run");
  PowerModel model;
  SimulatedProvider freq(model, 1.0, 1);
  const auto res = run_calibration(cfg, &freq);
  CHECK(res.complete);
  CHECK(res.rows == 10);

  const auto rows = read_durations(res.artifacts.durations_path);
  REQUIRE(rows.size() == 10);
  for (std::uint64_t i = 0; i < rows.size(); ++i) {
    CHECK(rows[i].call_index == i);
    CHECK(rows[i].core == 0);
    CHECK(rows[i].node == "testnode");
    CHECK(rows[i].scheme == "masked:26");
    CHECK(rows[i].mask_bits == 26);
    CHECK(rows[i].matrix_order == 32);
    CHECK(rows[i].kernel == "blocked");
    CHECK(rows[i].duration_ns > 0);
    if (i > 0) CHECK(rows[i].start_ns >= rows[i - 1].start_ns + rows[i - 1].duration_ns);
  }

  const auto md = Metadata::read(res.artifacts.metadata_path);
  CHECK(md.get("status") == "complete");
  CHECK(md.get("clock") == "steady_clock");
  CHECK(md.get("c_refresh") == "per_call_untimed");
  CHECK(md.get("frequency_provider") == "simulated");
  CHECK(md.get("run_id") == res.run_id);

  for (const auto& f : read_freq(res.artifacts.freq_path)) CHECK(f.frequency_khz == 3'700'000);
}

TEST_CASE("calibration rows are the same shape across runs") {
  TempDir dir("harness");
  auto cfg = small_config(dir / "a");
  ReplayProvider none({});
  const auto a = run_calibration(cfg, &none);
  cfg.output_dir = dir / "b";
  const auto b = run_calibration(cfg, &none);
  const auto ra = read_durations(a.artifacts.durations_path);
  const auto rb = read_durations(b.artifacts.durations_path);
  REQUIRE(ra.size() == rb.size());
  for (std::size_t i = 0; i < ra.size(); ++i) {
    CHECK(ra[i].call_index == rb[i].call_index);
    CHECK(ra[i].scheme == rb[i].scheme);
    CHECK(ra[i].seed == rb[i].seed);
  }
  CHECK(a.monitor.samples == 0);
}

TEST_CASE("calibration errors") {
  TempDir dir("harness");
  spit(dir / "file", "x");
  auto cfg = small_config(dir / "file" / "sub");
  CHECK_THROWS_AS(run_calibration(cfg), Error);

  cfg = small_config(dir / "ok");
  cfg.cores = {1'000'000};
  CHECK_THROWS_AS(run_calibration(cfg), PinError);
}
