#pragma once

// Wall-clock model comparing point checks of every coupling with the
// class-test protocols.

#include <string>
#include <vector>

namespace iontest {

struct TimingModel {
  double gateTimeAt8 = 2.0e-4;
  double gateTimeScaling = -2.0;
  /// Cooling, state preparation and readout per shot.
  double initReadoutTime = 0.01;
  int shots = 300;
  int repetitions = 2;
  /// Adaptation latency = latencyBase + latencyPerCoupling * C(N,2).
  double latencyBase = 0.1;
  double latencyPerCoupling = 3.0e-3;

  double gate_time(int qubits) const;
  double adaptation_latency(int qubits) const;
  void validate() const;
};

struct SpeedupRow {
  int qubits = 0;
  double pointCheckTime = 0.0;
  double nonAdaptiveTime = 0.0;
  double adaptiveTime = 0.0;
  double nonAdaptiveSpeedup() const { return pointCheckTime / nonAdaptiveTime; }
  double adaptiveSpeedup() const { return pointCheckTime / adaptiveTime; }
};

/// Class-test count ratio C(N,2) / 2n, ignoring timing.
double count_ratio(int qubits);

SpeedupRow speedup_at(const TimingModel& tm, int qubits);

/// Powers of two from 8 up to nMax, or every N in [8, nMax] when `everyN`.
std::vector<SpeedupRow> speedup_model(const TimingModel& tm, int nMax, bool everyN = false);

struct SpeedupFit {
  double c = 0.0;
  /// max |S - c N^2/ln N| / S over the rows.
  double maxRelativeResidual = 0.0;
  double rmsRelativeResidual = 0.0;
};

/// Relative least squares of the non-adaptive speed-up against c N^2 / ln N.
SpeedupFit fit_n2_over_log(const std::vector<SpeedupRow>& rows);

/// Limit of the adaptive speed-up once latency dominates:
/// shots (initReadout + r t_g) / latencyPerCoupling with t_g -> 0.
double adaptive_asymptote(const TimingModel& tm);

struct PlateauCheck {
  double last = 0.0;
  double asymptote = 0.0;
  /// S(Nmax) / S(Nmax / 2).
  double lastDoublingRatio = 0.0;
  bool plateaued = false;
};

/// Plateau: last value within 10% of the asymptote and the last doubling
/// gains less than 20%.
PlateauCheck adaptive_plateau(const TimingModel& tm, const std::vector<SpeedupRow>& rows);

std::string speedup_csv(const std::vector<SpeedupRow>& rows, const SpeedupFit& fit);

}  // namespace iontest
