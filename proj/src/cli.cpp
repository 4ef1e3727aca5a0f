#include "flipbench/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cstdlib>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <thread>

#include "flipbench/analysis.hpp"
#include "flipbench/config.hpp"
#include "flipbench/datagen.hpp"
#include "flipbench/error.hpp"
#include "flipbench/flipmodel.hpp"
#include "flipbench/freqmon.hpp"
#include "flipbench/harness.hpp"
#include "flipbench/prng.hpp"
#include "flipbench/report.hpp"

namespace flipbench {

namespace {

// One configurable setting. `flag` is empty for config-only settings; every
// flag has a config key in `section`.
struct Setting {
  const char* section;
  const char* key;
  const char* flag;
  const char* fallback;
  const char* help;
  std::vector<std::string> commands;
};

const std::vector<Setting>& settings_table() {
  static const std::vector<Setting> table = {
      {"run", "order", "--order", "2048", "Matrix order N", {"generate", "run", "simulate"}},
      {"run", "calls", "--calls", "50", "Kernel calls per core", {"run", "simulate"}},
      {"run", "cores", "--cores", "0", "Comma-separated core ids", {"run", "monitor"}},
      {"run", "scheme", "--scheme,--schemes", "",
       "Init scheme: constant:<x> | sequential | random | masked:<0..53>; simulate takes a "
       "comma-separated list",
       {"generate", "run", "simulate"}},
      {"run", "seed", "--seed", "1", "Seed for random schemes and noise",
       {"generate", "run", "simulate"}},
      {"run", "kernel", "--kernel", "blocked", "Kernel: naive | blocked", {"run"}},
      {"run", "block", "--block", "64", "Block size of the blocked kernel", {"run"}},
      {"run", "warmup_seconds", "--warmup-seconds", "600", "Warm-up duration before timing",
       {"run"}},
      {"run", "monitor_interval", "--monitor-interval", "1000",
       "Frequency sampling interval in ms", {"run", "monitor"}},
      {"run", "noise", "--noise", "0", "Relative duration noise of the simulator",
       {"simulate"}},
      {"run", "output", "--output", "", "Output directory (default $FLIPBENCH_OUTPUT)",
       {"run", "monitor", "simulate", "analyze", "report"}},
      {"run", "node", "--node", "", "Node label written into traces", {"run", "simulate"}},
      {"run", "provider", "--provider", "os", "Frequency provider: os | simulated | replay",
       {"run", "monitor"}},
      {"run", "seconds", "--seconds", "10", "Monitor duration in seconds", {"monitor"}},
      {"run", "active_cores", "--active-cores", "68",
       "Cores sharing the modelled power budget", {"simulate"}},
      {"run", "pairs", "--pairs", "100000", "Sampled pairs for the pairwise Hamming statistic",
       {"generate"}},
      {"run", "stress_command", "--stress-command", "",
       "External warm-up command replacing the native busy loop", {"run"}},
      {"model", "ladder_min_khz", "", "1000000", "", {}},
      {"model", "ladder_max_khz", "", "3700000", "", {}},
      {"model", "ladder_step_khz", "", "100000", "", {}},
      {"model", "v0", "", "0.6", "", {}},
      {"model", "v1", "", "0.12", "", {}},
      {"model", "c_dyn", "", "3.35", "", {}},
      {"model", "p_static_w", "", "20", "", {}},
      {"model", "power_cap_w", "", "125", "", {}},
      {"model", "flops_per_cycle", "", "32", "", {}},
      {"model", "alpha_floor", "", "0.05", "", {}},
      {"model", "activity_scale", "", "2", "", {}},
      {"model", "efficiency", "", "0.85", "", {}},
      {"analyze", "input", "--input", "",
       "Run directory to read (replay: freq trace file); default is --output",
       {"monitor", "analyze", "report"}},
      {"analyze", "group_by", "--group-by", "node,scheme,mask_bits",
       "Summary grouping keys: node, core, scheme, mask_bits", {"analyze", "report"}},
      {"analyze", "correlation_threshold", "--correlation-threshold", "-0.9",
       "Frequency/duration Spearman threshold", {"analyze", "report"}},
  };
  return table;
}

ConfigFile::Schema config_schema() {
  ConfigFile::Schema schema;
  for (const auto& s : settings_table()) schema[s.section].insert(s.key);
  return schema;
}

std::string qualified(const Setting& s) { return std::string(s.section) + "." + s.key; }

// Resolved settings: fallback < environment < config file < flags.
class Values {
 public:
  std::string& slot(const std::string& name) { return values_[name]; }
  const std::string& str(const std::string& name) const { return values_.at(name); }

  template <typename T>
  T number(const std::string& name) const {
    const auto& text = str(name);
    T v{};
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (text.empty() || ec != std::errc() || ptr != text.data() + text.size()) {
      throw InputError("invalid value '" + text + "' for " + name);
    }
    return v;
  }

  const std::map<std::string, std::string>& all() const { return values_; }

  void mark_explicit(const std::string& name) { explicit_.insert(name); }
  bool is_explicit(const std::string& name) const { return explicit_.contains(name); }

 private:
  std::map<std::string, std::string> values_;
  std::set<std::string> explicit_;
};

std::optional<std::string> find_config_arg(const std::vector<std::string>& args) {
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) return args[i + 1];
    if (args[i].rfind("--config=", 0) == 0) return args[i].substr(9);
  }
  return std::nullopt;
}

std::vector<int> parse_cores(const std::string& text) {
  std::vector<int> cores;
  for (auto f : split_fields(text)) {
    int c = 0;
    auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), c);
    if (f.empty() || ec != std::errc() || ptr != f.data() + f.size() || c < 0) {
      throw InputError("invalid core id '" + std::string(f) + "'");
    }
    cores.push_back(c);
  }
  return cores;
}

InitSpec parse_scheme(const std::string& text, std::uint64_t seed) {
  return InitSpec::parse(text, seed);
}

PowerModel model_from(const Values& v) {
  PowerModel m;
  m.freq_ladder_khz = make_ladder(v.number<std::uint64_t>("model.ladder_min_khz"),
                                  v.number<std::uint64_t>("model.ladder_max_khz"),
                                  v.number<std::uint64_t>("model.ladder_step_khz"));
  m.v0 = v.number<double>("model.v0");
  m.v1 = v.number<double>("model.v1");
  m.c_dyn = v.number<double>("model.c_dyn");
  m.p_static_w = v.number<double>("model.p_static_w");
  m.power_cap_w = v.number<double>("model.power_cap_w");
  m.flops_per_cycle = v.number<int>("model.flops_per_cycle");
  m.alpha_floor = v.number<double>("model.alpha_floor");
  m.activity_scale = v.number<double>("model.activity_scale");
  m.efficiency = v.number<double>("model.efficiency");
  m.validate();
  return m;
}

std::filesystem::path input_dir(const Values& v) {
  const auto& in = v.str("analyze.input");
  return in.empty() ? std::filesystem::path(v.str("run.output")) : std::filesystem::path(in);
}

// Results land next to the input unless an output directory was given.
std::filesystem::path output_dir_for(const Values& v, const std::filesystem::path& in) {
  return v.is_explicit("run.output") ? std::filesystem::path(v.str("run.output")) : in;
}

std::string node_label(const Values& v, const char* fallback) {
  const auto& n = v.str("run.node");
  return n.empty() ? fallback : n;
}

int cmd_generate(const Values& v, std::ostream& out) {
  const auto seed = v.number<std::uint64_t>("run.seed");
  const auto spec = parse_scheme(v.str("run.scheme").empty() ? "random" : v.str("run.scheme"),
                                 seed);
  const auto order = v.number<std::size_t>("run.order");
  const auto pairs = v.number<std::uint64_t>("run.pairs");
  const Matrix m = generate(order, spec);
  out << "# scheme=" << spec.to_string() << " order=" << order << " seed=" << seed
      << " generator=" << Xoshiro256::kAlgorithm << '\n';
  if (m.size() >= 2) {
    const auto stats = entropy_stats(m, pairs, seed);
    out << "# mean_adjacent_hamming=" << format_real(stats.mean_adjacent_hamming) << '\n'
        << "# mean_sampled_pairwise_hamming=" << format_real(stats.mean_sampled_pairwise_hamming)
        << " pairs=" << stats.sample_pairs << '\n';
  }
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      out << (j ? "," : "") << format_real(m(i, j));
    }
    out << '\n';
  }
  return kExitPass;
}

int cmd_run(const Values& v, std::ostream& out) {
  ExperimentConfig cfg;
  cfg.seed = v.number<std::uint64_t>("run.seed");
  cfg.node_label = node_label(v, "localhost");
  cfg.cores = parse_cores(v.str("run.cores"));
  cfg.matrix_order = v.number<std::uint64_t>("run.order");
  cfg.calls_per_core = v.number<std::uint64_t>("run.calls");
  cfg.init = parse_scheme(v.str("run.scheme").empty() ? "random" : v.str("run.scheme"), cfg.seed);
  cfg.kernel = v.str("run.kernel");
  cfg.block = v.number<std::size_t>("run.block");
  cfg.warmup_seconds = v.number<std::uint64_t>("run.warmup_seconds");
  cfg.monitor_interval_ms = v.number<int>("run.monitor_interval");
  cfg.output_dir = v.str("run.output");
  cfg.stress_command = v.str("run.stress_command");
  for (const auto& [k, val] : v.all()) cfg.config_echo.emplace_back(k, val);

  std::unique_ptr<FrequencyProvider> provider;
  const auto& kind = v.str("run.provider");
  if (kind == "simulated") {
    const auto model = model_from(v);
    const auto alpha = activity_factor(model, generate_operands(cfg.matrix_order, cfg.init));
    int max_core = 0;
    for (int c : cfg.cores) max_core = std::max(max_core, c);
    provider = std::make_unique<SimulatedProvider>(model, alpha, max_core + 1);
  } else if (kind != "os") {
    throw InputError("run supports --provider os|simulated");
  }

  const auto result = run_calibration(cfg, provider.get());
  out << "run " << result.run_id << ": " << result.rows << " calls written to "
      << result.artifacts.durations_path.string() << " ("
      << (result.complete ? "complete" : "partial") << ")\n";
  return result.complete ? kExitPass : kExitFail;
}

int cmd_monitor(const Values& v, std::ostream& out) {
  const auto cores = parse_cores(v.str("run.cores"));
  const auto interval = v.number<int>("run.monitor_interval");
  const auto seconds = v.number<double>("run.seconds");
  if (interval < kMinMonitorIntervalMs) throw InputError("monitor interval must be >= 10 ms");
  if (!(seconds >= 0.0)) throw InputError("--seconds must be >= 0");

  std::unique_ptr<FrequencyProvider> provider;
  const auto& kind = v.str("run.provider");
  if (kind == "os") {
    provider = std::make_unique<OsFileProvider>();
  } else if (kind == "simulated") {
    int max_core = 0;
    for (int c : cores) max_core = std::max(max_core, c);
    provider = std::make_unique<SimulatedProvider>(model_from(v), model_from(v).alpha_floor,
                                                   max_core + 1);
  } else if (kind == "replay") {
    if (v.str("analyze.input").empty()) throw InputError("replay needs --input <freq.csv>");
    provider = ReplayProvider::from_file(v.str("analyze.input"));
  } else {
    throw InputError("unknown provider '" + kind + "'");
  }

  const std::filesystem::path dir = v.str("run.output");
  std::filesystem::create_directories(dir);
  FrequencyRecorder recorder(*provider, cores, std::chrono::milliseconds(interval),
                             dir / kFreqFile);
  std::this_thread::sleep_for(std::chrono::duration<double>(seconds));
  const auto stats = recorder.stop();
  out << "monitor: " << stats.samples << " samples, " << stats.gaps << " gaps, "
      << stats.missed_deadlines << " missed deadlines -> " << (dir / kFreqFile).string() << '\n';
  return kExitPass;
}

int cmd_simulate(const Values& v, std::ostream& out) {
  SimConfig cfg;
  cfg.model = model_from(v);
  cfg.seed = v.number<std::uint64_t>("run.seed");
  cfg.active_cores = v.number<int>("run.active_cores");
  cfg.calls = v.number<std::uint64_t>("run.calls");
  cfg.matrix_order = v.number<std::uint64_t>("run.order");
  cfg.noise_rel = v.number<double>("run.noise");
  cfg.node = node_label(v, "sim");
  const std::string schemes =
      v.str("run.scheme").empty() ? "constant:1,sequential,random" : v.str("run.scheme");
  for (auto s : split_fields(schemes)) cfg.schemes.push_back(parse_scheme(std::string(s), cfg.seed));
  try {
    cfg.validate();
  } catch (const std::invalid_argument& e) {
    throw InputError(e.what());
  }
  const auto result = simulate_experiment(cfg, v.str("run.output"));
  for (const auto& s : result.schemes) {
    out << s.spec.to_string() << ": alpha=" << format_real(s.alpha)
        << " frequency_khz=" << s.point.frequency_khz
        << " predicted_ns=" << format_real(s.predicted_seconds * 1e9) << '\n';
  }
  out << "simulate " << result.run_id << " -> " << result.artifacts.durations_path.parent_path().string()
      << '\n';
  return kExitPass;
}

AnalyzeOptions analyze_options(const Values& v) {
  AnalyzeOptions o;
  o.group_by = parse_group_keys(v.str("analyze.group_by"));
  o.correlation_threshold = v.number<double>("analyze.correlation_threshold");
  return o;
}

int cmd_analyze(const Values& v, std::ostream& out) {
  const auto in = input_dir(v);
  const auto dest = output_dir_for(v, in);
  const auto outcome = analyze_run(in, dest, analyze_options(v));
  for (const auto& verdict : outcome.verdicts) out << format_verdict(verdict) << '\n';
  for (const auto& note : outcome.notes) out << "# " << note << '\n';
  return outcome.exit_code;
}

int cmd_report(const Values& v, std::ostream& out) {
  const auto in = input_dir(v);
  const auto dest = output_dir_for(v, in);
  const auto outputs = render_run(in, dest, analyze_options(v));
  for (const auto& p : outputs.plots) out << p.string() << '\n';
  for (const auto& s : outputs.skipped) out << "# skipped " << s << '\n';
  out << outputs.report.string() << '\n';
  return kExitPass;
}

int cmd_calibrate(const Values& v, std::ostream& out) {
  const auto model = model_from(v);
  const auto anchors = default_anchors(model);
  const auto fit = fit_dynamic_capacitance(model, anchors);
  out << "c_dyn fit: (" << format_real(fit.lower) << ", " << format_real(fit.upper)
      << "] midpoint " << format_real(fit.c_dyn) << '\n'
      << "configured c_dyn: " << format_real(model.c_dyn) << '\n';
  bool ok = model.c_dyn > fit.lower && model.c_dyn <= fit.upper;
  for (const auto& a : anchors) {
    const auto point = steady_state_frequency(model, a.alpha, a.active_cores);
    out << "anchor alpha=" << format_real(a.alpha) << " cores=" << a.active_cores
        << " target_khz=" << a.target_khz << " model_khz=" << point.frequency_khz << '\n';
    ok = ok && point.frequency_khz == a.target_khz;
  }
  return ok ? kExitPass : kExitFail;
}

}  // namespace

int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"flipbench: data-dependent dgemm performance toolkit", "flipbench"};
  app.require_subcommand(1, 1);
  std::string config_path;

  struct Command {
    const char* name;
    const char* help;
    int (*run)(const Values&, std::ostream&);
  };
  const Command commands[] = {
      {"generate", "Emit one matrix and its bit-entropy statistics", cmd_generate},
      {"run", "Timed kernel calls on pinned cores with frequency monitoring", cmd_run},
      {"monitor", "Sample core frequencies into a freq trace", cmd_monitor},
      {"simulate", "Synthetic traces from the switching-activity power model", cmd_simulate},
      {"analyze", "Summaries and verdicts for a run directory", cmd_analyze},
      {"report", "SVG plots and a text report for a run directory", cmd_report},
      {"calibrate", "Check the power model against its calibration anchors", cmd_calibrate},
  };

  Values values;
  for (const auto& s : settings_table()) values.slot(qualified(s)) = s.fallback;
  if (const char* env = std::getenv("FLIPBENCH_OUTPUT"); env && *env) {
    values.slot("run.output") = env;
  }
  if (values.str("run.output").empty()) values.slot("run.output") = "flipbench-out";

  try {
    if (auto path = find_config_arg(args)) {
      const auto cfg = ConfigFile::load(*path, config_schema());
      for (const auto& [section, entries] : cfg.sections()) {
        for (const auto& [key, value] : entries) {
          values.slot(section + "." + key) = value;
          values.mark_explicit(section + "." + key);
        }
      }
    }
  } catch (const InputError& e) {
    err << "error: " << e.what() << '\n';
    return kExitInputError;
  }

  std::map<std::string, CLI::App*> subs;
  std::vector<std::pair<CLI::Option*, std::string>> flag_options;
  for (const auto& c : commands) {
    auto* sub = app.add_subcommand(c.name, c.help);
    sub->add_option("--config", config_path, "Config file with [run], [model], [analyze]");
    for (const auto& s : settings_table()) {
      if (!*s.flag) continue;
      if (std::find(s.commands.begin(), s.commands.end(), c.name) == s.commands.end()) continue;
      auto* opt = sub->add_option(s.flag, values.slot(qualified(s)), s.help);
      opt->capture_default_str();
      flag_options.emplace_back(opt, qualified(s));
    }
    subs[c.name] = sub;
  }

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::Success& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help("", CLI::AppFormatMode::All);
    return kExitInputError;
  }

  for (const auto& [opt, name] : flag_options) {
    if (opt->count() > 0) values.mark_explicit(name);
  }

  for (const auto& c : commands) {
    if (!subs[c.name]->parsed()) continue;
    try {
      return c.run(values, out);
    } catch (const InputError& e) {
      err << "error: " << e.what() << '\n';
      return kExitInputError;
    } catch (const std::invalid_argument& e) {
      err << "error: " << e.what() << '\n';
      return kExitInputError;
    } catch (const PinError& e) {
      err << "error: " << e.what() << '\n';
      return kExitInputError;
    } catch (const std::exception& e) {
      err << "error: " << e.what() << '\n';
      return kExitFail;
    }
  }
  return kExitInputError;
}

}  // namespace flipbench
