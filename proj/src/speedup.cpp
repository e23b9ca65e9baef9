#include "iontest/speedup.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <sstream>

#include "iontest/bitclasses.hpp"
#include "iontest/errors.hpp"

namespace iontest {

namespace {

double pairs(double m) { return m * (m - 1) / 2; }

}  // namespace

double TimingModel::gate_time(int qubits) const {
  return gateTimeAt8 * std::pow(qubits / 8.0, gateTimeScaling);
}

double TimingModel::adaptation_latency(int qubits) const {
  return latencyBase + latencyPerCoupling * pairs(qubits);
}

void TimingModel::validate() const {
  if (!(gateTimeAt8 > 0 && initReadoutTime > 0 && shots > 0 && repetitions > 0 && latencyBase >= 0 &&
        latencyPerCoupling >= 0)) {
    throw ConfigError("timing model values must be positive");
  }
}

double count_ratio(int qubits) {
  return pairs(qubits) / (2.0 * pad_to_power_of_two(qubits).n);
}

SpeedupRow speedup_at(const TimingModel& tm, int qubits) {
  tm.validate();
  if (qubits < 2) throw InvalidArgument("speed-up needs at least two qubits");
  const int n = pad_to_power_of_two(qubits).n;
  const double tg = tm.gate_time(qubits);
  const double shot = tm.initReadoutTime;
  const double r = tm.repetitions;
  SpeedupRow row;
  row.qubits = qubits;
  row.pointCheckTime = tm.shots * pairs(qubits) * (shot + r * tg);
  // stage-1 classes hold ceil(N/2) qubits
  const double classTest = tm.shots * (shot + r * pairs(std::ceil(qubits / 2.0)) * tg);
  row.nonAdaptiveTime = 2 * n * classTest;
  // one adaptive round of n-1 restricted tests, at most a quarter of the qubits each
  const double restricted = tm.shots * (shot + r * pairs(std::ceil(qubits / 4.0)) * tg);
  row.adaptiveTime = row.nonAdaptiveTime + tm.adaptation_latency(qubits) + (n - 1) * restricted;
  return row;
}

std::vector<SpeedupRow> speedup_model(const TimingModel& tm, int nMax, bool everyN) {
  if (nMax < 8) throw InvalidArgument("nMax must be at least 8");
  std::vector<SpeedupRow> rows;
  if (everyN) {
    for (int q = 8; q <= nMax; ++q) rows.push_back(speedup_at(tm, q));
  } else {
    for (int q = 8; q <= nMax; q *= 2) rows.push_back(speedup_at(tm, q));
  }
  return rows;
}

SpeedupFit fit_n2_over_log(const std::vector<SpeedupRow>& rows) {
  if (rows.empty()) throw InvalidArgument("nothing to fit");
  double num = 0.0;
  double den = 0.0;
  for (const auto& r : rows) {
    const double x = r.qubits * static_cast<double>(r.qubits) / std::log(r.qubits);
    const double s = r.nonAdaptiveSpeedup();
    num += x / s;
    den += x * x / (s * s);
  }
  SpeedupFit fit;
  fit.c = num / den;
  double sq = 0.0;
  for (const auto& r : rows) {
    const double x = r.qubits * static_cast<double>(r.qubits) / std::log(r.qubits);
    const double rel = std::abs(r.nonAdaptiveSpeedup() - fit.c * x) / r.nonAdaptiveSpeedup();
    fit.maxRelativeResidual = std::max(fit.maxRelativeResidual, rel);
    sq += rel * rel;
  }
  fit.rmsRelativeResidual = std::sqrt(sq / static_cast<double>(rows.size()));
  return fit;
}

double adaptive_asymptote(const TimingModel& tm) {
  if (tm.latencyPerCoupling <= 0) return std::numeric_limits<double>::infinity();
  return tm.shots * tm.initReadoutTime / tm.latencyPerCoupling;
}

PlateauCheck adaptive_plateau(const TimingModel& tm, const std::vector<SpeedupRow>& rows) {
  if (rows.size() < 2) throw InvalidArgument("plateau check needs two rows");
  PlateauCheck p;
  p.asymptote = adaptive_asymptote(tm);
  p.last = rows.back().adaptiveSpeedup();
  const int half = rows.back().qubits / 2;
  const auto prev = speedup_at(tm, half).adaptiveSpeedup();
  p.lastDoublingRatio = p.last / prev;
  p.plateaued = p.last >= 0.9 * p.asymptote && p.lastDoublingRatio < 1.2;
  return p;
}

std::string speedup_csv(const std::vector<SpeedupRow>& rows, const SpeedupFit& fit) {
  std::ostringstream out;
  out << std::setprecision(8);
  out << "# non-adaptive fit: c*N^2/ln(N) with c=" << fit.c << ", max relative residual "
      << fit.maxRelativeResidual << '\n';
  out << "N,point_check_s,non_adaptive_s,adaptive_s,non_adaptive_speedup,adaptive_speedup,count_ratio\n";
  for (const auto& r : rows) {
    out << r.qubits << ',' << r.pointCheckTime << ',' << r.nonAdaptiveTime << ',' << r.adaptiveTime << ','
        << r.nonAdaptiveSpeedup() << ',' << r.adaptiveSpeedup() << ',' << count_ratio(r.qubits) << '\n';
  }
  return out.str();
}

}  // namespace iontest
