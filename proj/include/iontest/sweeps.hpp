#pragma once

// Monte Carlo experiment runners. Every trial draws from its own seed derived
// from (masterSeed, experiment tag, grid point, trial index), so results do not
// depend on execution order.

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "iontest/protocol.hpp"
#include "iontest/simulator.hpp"

namespace iontest {

std::uint64_t trial_seed(std::uint64_t masterSeed, const std::string& tag, std::uint64_t a,
                         std::uint64_t b, std::uint64_t trial);

// ---------------------------------------------------------------------------
// Identification probability with k simultaneous faults.

struct Table1Config {
  std::vector<int> qubitCounts{8, 16, 32};
  std::vector<int> faultCounts{1, 2, 3};
  long trials = 5000;
  std::uint64_t seed = 1;
  /// Also enumerate every k-subset when there are at most this many.
  long exhaustiveLimit = 5000;
  /// Strict unique-decodability column; costly for large N and k.
  bool strict = true;
};

struct Table1Row {
  int qubits = 0;
  int faults = 0;
  bool exhaustive = false;
  long trials = 0;
  /// Noiseless single-fault flow returns one of the injected faults.
  long successes = 0;
  /// Union syndrome over stage-1 and adaptive tests singles out the fault set
  /// among all sets of at most k couplings.
  long strictSuccesses = 0;
  double rate() const { return trials ? static_cast<double>(successes) / trials : 0.0; }
  double strict_rate() const { return trials ? static_cast<double>(strictSuccesses) / trials : 0.0; }
  double standard_error() const;
  std::optional<double> reference;
};

/// One trial outcome for a fixed fault set.
bool first_fault_identified(int qubits, const CouplingSet& faults);
bool union_syndrome_unique(int qubits, const CouplingSet& faults);

std::vector<Table1Row> run_table1_sweep(const Table1Config& config);
Table1Row table1_exhaustive(int qubits, int faults, bool strict);
std::optional<double> table1_reference(int qubits, int faults);
std::string table1_csv(const std::vector<Table1Row>& rows);

// ---------------------------------------------------------------------------
// Minimal detectable under-rotation.

/// Thresholds at a low quantile of clean-device fidelities, per (class size,
/// repetitions). Class tests are cliques, so member count fixes the circuit.
class CalibratedThresholds {
 public:
  CalibratedThresholds(NoiseModel noise, int shots, int samples, double quantile,
                       std::uint64_t seed);
  double operator()(const TestSpec& spec);
  double for_clique(int members, int repetitions);
  const std::map<std::pair<int, int>, double>& table() const noexcept { return cache_; }

 private:
  NoiseModel noise_;
  int shots_;
  int samples_;
  double quantile_;
  std::uint64_t seed_;
  std::map<std::pair<int, int>, double> cache_;
};

struct ThresholdSweepConfig {
  std::vector<int> qubitCounts{8, 16, 32};
  std::vector<int> repetitions{2, 4};
  int shots = 300;
  NoiseModel noise{AmplitudeLaw::Uniform, 0.10, 0.0, std::nullopt, 0.0};
  long trials = 200;
  double successTarget = 0.95;
  std::vector<double> grid{0.05, 0.10, 0.15, 0.20, 0.25, 0.30, 0.35, 0.40, 0.45, 0.50, 0.55, 0.60};
  double refineStep = 0.01;
  /// Empty: calibrate thresholds from clean-device quantiles.
  std::map<int, double> fixedThresholds;
  int calibrationSamples = 4000;
  double calibrationQuantile = 0.001;
  std::uint64_t seed = 1;
};

struct ThresholdPoint {
  int qubits = 0;
  int repetitions = 0;
  double underRotation = 0.0;
  long trials = 0;
  long successes = 0;
  double rate() const { return trials ? static_cast<double>(successes) / trials : 0.0; }
};

struct ThresholdMinimum {
  int qubits = 0;
  int repetitions = 0;
  std::optional<double> underRotation;
  std::optional<double> reference;
};

struct ThresholdSweepResult {
  std::vector<ThresholdPoint> points;
  std::vector<ThresholdMinimum> minima;
  /// (qubits, members, repetitions) -> threshold used.
  std::map<std::tuple<int, int, int>, double> thresholds;
};

/// Fraction of trials in which the single-fault flow isolates one random
/// coupling under-rotated by `u`.
ThresholdPoint threshold_trials(int qubits, int repetitions, double u, const ThresholdSweepConfig& config,
                                const ThresholdPolicy& policy);
ThresholdSweepResult run_threshold_sweep(const ThresholdSweepConfig& config);
std::optional<double> threshold_reference(int qubits, int repetitions);
std::string threshold_csv(const ThresholdSweepResult& result);

/// Smallest under-rotation whose isolated-pair fidelity cos^2(r pi u / 4)
/// drops below `threshold`.
double noiseless_crossing(int repetitions, double threshold);

// ---------------------------------------------------------------------------
// Success versus spread of the composite fault distribution.

struct SpreadSweepConfig {
  int qubits = 8;
  std::vector<double> sigmas{0.0, 0.025, 0.05, 0.075, 0.10, 0.125, 0.15, 0.20};
  std::vector<int> repetitions{2, 4};
  int shots = 300;
  NoiseModel noise = NoiseModel::noiseless();
  std::map<int, double> thresholds = default_thresholds();
  double cutoff = 0.06;
  long trials = 200;
  std::uint64_t seed = 1;
};

struct SpreadRow {
  double sigma = 0.0;
  int repetitions = 0;
  long trials = 0;
  /// Index j-1: the first j diagnosed faults are exactly the j largest errors.
  std::vector<long> successes{0, 0, 0};
  double rate(int j) const { return trials ? static_cast<double>(successes[j - 1]) / trials : 0.0; }
};

std::vector<SpreadRow> run_spread_sweep(const SpreadSweepConfig& config);
std::string spread_csv(const std::vector<SpreadRow>& rows);

// ---------------------------------------------------------------------------
// Class-test separation on a fixed faulty device.

struct SeparationConfig {
  DeviceModel device;
  std::vector<int> repetitions{2, 4};
  std::map<int, double> thresholds = default_thresholds();
  int shots = 300;
  long trials = 500;
  std::uint64_t seed = 1;
};

struct SeparationRow {
  int repetitions = 0;
  double threshold = 0.0;
  long trials = 0;
  long separated = 0;
  double meanFaulty = 0.0;
  double meanClean = 0.0;
  double maxFaulty = 0.0;
  double minClean = 1.0;
  double rate() const { return trials ? static_cast<double>(separated) / trials : 0.0; }
};

/// Default: 8 qubits, -47% on {0,4}, -22% on {0,7}, uniform 10% amplitude noise.
SeparationConfig default_separation_config();
std::vector<SeparationRow> run_class_separation(const SeparationConfig& config);

}  // namespace iontest
