// iontest: plan, simulate, diagnose and sweep class-test diagnosis of MS couplings.

#include <CLI11.hpp>

#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "iontest/errors.hpp"
#include "iontest/executors.hpp"
#include "iontest/io.hpp"
#include "iontest/protocol.hpp"
#include "iontest/replay.hpp"
#include "iontest/speedup.hpp"
#include "iontest/sweeps.hpp"

namespace {

using namespace iontest;

constexpr int kOk = 0;
constexpr int kMissingRecord = 2;
constexpr int kTooManyFaults = 3;
constexpr int kConfigError = 4;

struct Globals {
  std::optional<std::uint64_t> seed;
  std::string config;
  std::string out = "-";
};

void emit(const Globals& g, const std::string& text) {
  if (g.out == "-") {
    std::cout << text;
  } else {
    write_text_file(g.out, text);
  }
}

RunConfig load_config(const Globals& g) {
  RunConfig c = g.config.empty() ? RunConfig{} : config_from_json(read_text_file(g.config));
  if (g.seed) c.seed = *g.seed;
  return c;
}

ProtocolConfig protocol_config(const RunConfig& c) {
  ProtocolConfig p;
  p.repetitions = c.repetitions;
  p.shots = c.shots;
  p.ladder = c.ladder;
  p.canaryRepetitions = c.canaryRepetitions;
  p.threshold = c.threshold_policy();
  p.verify = c.verify;
  p.maxFaults = c.maxFaults;
  return p;
}

CouplingSet relevant_set(const RunConfig& c) {
  if (!c.relevant) return all_couplings(c.qubits);
  return {c.relevant->begin(), c.relevant->end()};
}

DeviceModel load_device(const RunConfig& c, const std::string& path) {
  if (!path.empty()) {
    auto d = device_from_json(read_text_file(path));
    if (d.qubits != c.qubits) throw ConfigError("device N differs from the configured qubit count");
    return d;
  }
  if (c.device) return *c.device;
  throw ConfigError("no device given; use --device or a 'device' block in --config");
}

std::vector<int> parse_ints(const std::string& text) {
  std::vector<int> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      out.push_back(std::stoi(item));
    } catch (const std::exception&) {
      throw ConfigError("not an integer list: " + text);
    }
  }
  if (out.empty()) throw ConfigError("empty list");
  return out;
}

std::vector<double> parse_doubles(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      out.push_back(std::stod(item));
    } catch (const std::exception&) {
      throw ConfigError("not a number list: " + text);
    }
  }
  if (out.empty()) throw ConfigError("empty list");
  return out;
}

Diagnosis as_diagnosis(const SingleFaultOutcome& o, int repetitions) {
  return {{{o.fault, repetitions}}, o.ledger, o.log};
}

// Runs the chosen flow; on missing replay records writes the needed specs as a
// plan to `needed` (or --out) so the next lab session can record them.
int run_diagnosis(const Globals& g, const RunConfig& c, TestExecutor& exec, bool single,
                  const std::string& needed) {
  const int n = pad_to_power_of_two(c.qubits).n;
  const auto relevant = relevant_set(c);
  const auto cfg = protocol_config(c);
  try {
    const Diagnosis d = single ? as_diagnosis(run_single_fault_protocol(exec, n, c.qubits, relevant, cfg), c.repetitions)
                               : run_multi_fault_protocol(exec, n, c.qubits, relevant, cfg);
    emit(g, diagnosis_to_json(d, c.qubits));
    return kOk;
  } catch (const MissingRecord& e) {
    const auto* replay = dynamic_cast<ReplayExecutor*>(&exec);
    if (replay) {
      TestPlan plan{n, c.qubits, replay->missing_specs()};
      const std::string text = plan_to_json(plan);
      if (!needed.empty()) {
        write_text_file(needed, text);
      } else {
        emit(g, text);
      }
    }
    std::cerr << "missing record: " << e.what() << '\n';
    return kMissingRecord;
  } catch (const IncompleteDiagnosis& e) {
    emit(g, diagnosis_to_json(e.partial(), c.qubits));
    std::cerr << "too many faults: " << e.what() << '\n';
    return kTooManyFaults;
  } catch (const TooManyFaults& e) {
    std::cerr << "too many faults: " << e.what() << '\n';
    return kTooManyFaults;
  } catch (const MultiFaultError& e) {
    std::cerr << "too many faults: " << e.what() << '\n';
    return kTooManyFaults;
  } catch (const DecodeFailure& e) {
    std::cerr << "too many faults: " << e.what() << '\n';
    return kTooManyFaults;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Class-test diagnosis of miscalibrated two-qubit couplings"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_option("--seed", g.seed, "Master seed (overrides the config)");
  app.add_option("--config", g.config, "RunConfig JSON");
  app.add_option("--out", g.out, "Output file, '-' for stdout");

  // gen-plan
  auto* genPlan = app.add_subcommand("gen-plan", "Write the stage-1 plan JSON");
  std::optional<int> planQubits;
  std::optional<int> planReps;
  genPlan->add_option("--qubits", planQubits, "Number of qubits N");
  genPlan->add_option("--repetitions", planReps, "Gate repetitions per coupling");

  // simulate
  auto* simulate = app.add_subcommand("simulate", "Run a plan on a simulated device; writes JSONL counts");
  std::string simPlan;
  std::string simDevice;
  simulate->add_option("--plan", simPlan, "Plan JSON")->required();
  simulate->add_option("--device", simDevice, "Device JSON (default: config 'device')");

  // diagnose
  auto* diagnose = app.add_subcommand("diagnose", "Diagnose a simulated device or recorded counts");
  std::string diagDevice;
  std::string diagRecords;
  std::string diagNeeded;
  bool diagSingle = false;
  diagnose->add_option("--device", diagDevice, "Device JSON (default: config 'device')");
  diagnose->add_option("--records", diagRecords, "Replay JSONL instead of simulating");
  diagnose->add_option("--needed", diagNeeded, "Where to write specs missing from --records");
  diagnose->add_flag("--single", diagSingle, "Single-fault flow instead of the multi-fault loop");

  // replay
  auto* replay = app.add_subcommand("replay", "Single-fault diagnosis from recorded counts");
  std::string repRecords;
  std::string repNeeded;
  bool repMulti = false;
  replay->add_option("--records", repRecords, "Replay JSONL")->required();
  replay->add_option("--needed", repNeeded, "Where to write specs missing from --records");
  replay->add_flag("--multi", repMulti, "Multi-fault loop instead of the single-fault flow");

  // sweep
  auto* sweep = app.add_subcommand("sweep", "Monte Carlo experiments; CSV output");
  sweep->require_subcommand(1);
  sweep->fallthrough();
  std::optional<long> trials;
  std::string qubitList;
  sweep->add_option("--trials", trials, "Trials per grid point");
  sweep->add_option("--qubits", qubitList, "Comma-separated qubit counts");

  auto* table1 = sweep->add_subcommand(
      "table1", "Columns: N,k,method,trials,successes,rate,stderr,strict_rate,reference");
  std::string faultList;
  bool noStrict = false;
  table1->add_option("--faults", faultList, "Comma-separated fault counts");
  table1->add_flag("--no-strict", noStrict, "Skip the unique-decodability column");

  auto* threshold = sweep->add_subcommand(
      "threshold",
      "Rows kind=minimum|point|threshold; columns: kind,N,repetitions,under_rotation,trials,successes,rate,reference");
  std::string thReps;
  std::string thGrid;
  double thNoise = 0.10;
  bool thGaussian = false;
  threshold->add_option("--repetitions", thReps, "Comma-separated repetition counts");
  threshold->add_option("--grid", thGrid, "Comma-separated coarse under-rotation grid");
  threshold->add_option("--noise", thNoise, "Amplitude noise half-width (or std with --gaussian)");
  threshold->add_flag("--gaussian", thGaussian, "Gaussian amplitude noise");
  bool thFixed = false;
  threshold->add_flag("--fixed-thresholds", thFixed, "Use the config thresholds instead of calibrating");

  auto* spread = sweep->add_subcommand("spread", "Columns: sigma,repetitions,trials,success_1,success_2,success_3");
  std::string sigmaList;
  std::string spReps;
  spread->add_option("--sigmas", sigmaList, "Comma-separated spreads");
  spread->add_option("--repetitions", spReps, "Comma-separated repetition counts");

  // speedup
  auto* speedup = app.add_subcommand(
      "speedup",
      "Columns: N,point_check_s,non_adaptive_s,adaptive_s,non_adaptive_speedup,adaptive_speedup,count_ratio");
  TimingModel tm;
  int nMax = 1024;
  bool everyN = false;
  speedup->add_option("--nmax", nMax, "Largest N");
  speedup->add_flag("--every-n", everyN, "Every N instead of powers of two");
  speedup->add_option("--gate-time", tm.gateTimeAt8, "Gate time at N=8 [s]");
  speedup->add_option("--gate-scaling", tm.gateTimeScaling, "Gate time exponent in N");
  speedup->add_option("--init-readout", tm.initReadoutTime, "Per-shot initialisation and readout [s]");
  speedup->add_option("--shots", tm.shots, "Shots per test");
  speedup->add_option("--repetitions", tm.repetitions, "Gate repetitions per coupling");
  speedup->add_option("--latency-base", tm.latencyBase, "Adaptation latency offset [s]");
  speedup->add_option("--latency-per-coupling", tm.latencyPerCoupling, "Adaptation latency per coupling [s]");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfigError;
  }

  try {
    RunConfig c = load_config(g);
    if (*genPlan) {
      if (planQubits) c.qubits = *planQubits;
      if (planReps) c.repetitions = *planReps;
      c.validate();
      const int n = pad_to_power_of_two(c.qubits).n;
      TestSpec probe;
      probe.repetitions = c.repetitions;
      const double t = c.threshold_policy()(probe);
      emit(g, plan_to_json(build_stage1_plan(n, c.qubits, relevant_set(c), c.repetitions, c.shots, t)));
      return kOk;
    }
    if (*simulate) {
      const auto plan = plan_from_json(read_text_file(simPlan));
      c.qubits = plan.qubits;
      if (c.device && c.device->qubits != c.qubits) throw ConfigError("device N differs from plan N");
      SimulatorExecutor exec(load_device(c, simDevice), c.seed);
      std::string text;
      for (const auto& r : exec.run_batch(plan.tests)) {
        if (!r.counts.empty()) text += result_to_jsonl(r) + "\n";
      }
      emit(g, text);
      return kOk;
    }
    if (*diagnose) {
      if (!diagRecords.empty()) {
        auto exec = ReplayExecutor::from_file(diagRecords);
        return run_diagnosis(g, c, exec, diagSingle, diagNeeded);
      }
      SimulatorExecutor exec(load_device(c, diagDevice), c.seed);
      return run_diagnosis(g, c, exec, diagSingle, diagNeeded);
    }
    if (*replay) {
      auto exec = ReplayExecutor::from_file(repRecords);
      return run_diagnosis(g, c, exec, !repMulti, repNeeded);
    }
    if (*sweep) {
      if (*table1) {
        Table1Config t;
        t.seed = c.seed;
        if (trials) t.trials = *trials;
        if (c.trials > 0 && !trials) t.trials = c.trials;
        if (!qubitList.empty()) t.qubitCounts = parse_ints(qubitList);
        if (!faultList.empty()) t.faultCounts = parse_ints(faultList);
        t.strict = !noStrict;
        if (t.trials < 1000) throw ConfigError("table1 needs at least 1000 trials");
        emit(g, table1_csv(run_table1_sweep(t)));
      } else if (*threshold) {
        ThresholdSweepConfig t;
        t.seed = c.seed;
        t.shots = c.shots;
        if (trials) t.trials = *trials;
        if (c.trials > 0 && !trials) t.trials = c.trials;
        if (!qubitList.empty()) t.qubitCounts = parse_ints(qubitList);
        if (!thReps.empty()) t.repetitions = parse_ints(thReps);
        if (!thGrid.empty()) t.grid = parse_doubles(thGrid);
        t.noise.amplitudeLaw = thGaussian ? AmplitudeLaw::Gaussian : AmplitudeLaw::Uniform;
        t.noise.amplitude = thNoise;
        if (thFixed) t.fixedThresholds = c.thresholds;
        if (t.trials < 200) throw ConfigError("threshold sweep needs at least 200 trials per point");
        emit(g, threshold_csv(run_threshold_sweep(t)));
      } else if (*spread) {
        SpreadSweepConfig t;
        t.seed = c.seed;
        t.shots = c.shots;
        t.qubits = c.qubits;
        t.thresholds = c.thresholds;
        if (trials) t.trials = *trials;
        if (c.trials > 0 && !trials) t.trials = c.trials;
        if (!qubitList.empty()) {
          const auto qs = parse_ints(qubitList);
          if (qs.size() != 1) throw ConfigError("spread sweep takes one qubit count");
          t.qubits = qs.front();
        }
        if (!sigmaList.empty()) t.sigmas = parse_doubles(sigmaList);
        if (!spReps.empty()) t.repetitions = parse_ints(spReps);
        if (c.device) t.noise = c.device->noise;
        emit(g, spread_csv(run_spread_sweep(t)));
      }
      return kOk;
    }
    if (*speedup) {
      const auto rows = speedup_model(tm, nMax, everyN);
      emit(g, speedup_csv(rows, fit_n2_over_log(rows)));
      return kOk;
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const ValidationError& e) {
    std::cerr << "invalid input: " << e.what() << '\n';
    return kConfigError;
  } catch (const InvalidArgument& e) {
    std::cerr << "invalid argument: " << e.what() << '\n';
    return kConfigError;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return kOk;
}
