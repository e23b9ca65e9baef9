#include "iontest/sweeps.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <memory>
#include <numbers>
#include <random>
#include <set>
#include <sstream>
#include <tuple>

#include "iontest/errors.hpp"
#include "iontest/executors.hpp"

namespace iontest {

std::uint64_t trial_seed(std::uint64_t masterSeed, const std::string& tag, std::uint64_t a,
                         std::uint64_t b, std::uint64_t trial) {
  const std::uint64_t h = fnv1a(tag);
  std::seed_seq seq{static_cast<std::uint32_t>(masterSeed), static_cast<std::uint32_t>(masterSeed >> 32),
                    static_cast<std::uint32_t>(h), static_cast<std::uint32_t>(h >> 32),
                    static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(b),
                    static_cast<std::uint32_t>(trial), static_cast<std::uint32_t>(trial >> 32)};
  std::mt19937_64 rng(seq);
  return rng();
}

namespace {

std::string fmt(double v) {
  std::ostringstream ss;
  ss << std::setprecision(6) << v;
  return ss.str();
}

std::string fmt(const std::optional<double>& v) { return v ? fmt(*v) : std::string(); }

int padded_bits(int qubits) { return pad_to_power_of_two(qubits).n; }

std::vector<Coupling> coupling_list(int qubits) {
  const auto all = all_couplings(qubits);
  return {all.begin(), all.end()};
}

// Bit t of the mask is set when the coupling lies inside test t.
std::uint64_t signature(const std::vector<std::vector<bool>>& inTest, const Coupling& c) {
  std::uint64_t s = 0;
  for (std::size_t t = 0; t < inTest.size(); ++t) {
    if (inTest[t][c.a] && inTest[t][c.b]) s |= std::uint64_t{1} << t;
  }
  return s;
}

std::vector<bool> membership(const std::vector<Qubit>& members, int qubits) {
  std::vector<bool> in(static_cast<std::size_t>(qubits), false);
  for (Qubit q : members) {
    if (q < static_cast<Qubit>(qubits)) in[q] = true;
  }
  return in;
}

// Counts sets of at most k candidates whose union equals target, stopping at 2.
int count_covers(const std::vector<std::uint64_t>& cand, std::uint64_t target, int k,
                 std::size_t start = 0, std::uint64_t acc = 0) {
  int found = 0;
  for (std::size_t i = start; i < cand.size() && found < 2; ++i) {
    const std::uint64_t next = acc | cand[i];
    if (next == target) ++found;
    if (k > 1) found += count_covers(cand, target, k - 1, i + 1, next);
  }
  return found;
}

}  // namespace

double Table1Row::standard_error() const {
  if (trials == 0) return 0.0;
  const double p = rate();
  return std::sqrt(p * (1 - p) / static_cast<double>(trials));
}

bool first_fault_identified(int qubits, const CouplingSet& faults) {
  OracleExecutor oracle(faults);
  ProtocolConfig cfg;
  cfg.verify = false;
  cfg.retryWithDoubledShots = false;
  try {
    const auto out = run_single_fault_protocol(oracle, padded_bits(qubits), qubits, all_couplings(qubits), cfg);
    return faults.contains(out.fault);
  } catch (const Error&) {
    return false;
  }
}

bool union_syndrome_unique(int qubits, const CouplingSet& faults) {
  const int n = padded_bits(qubits);
  std::vector<std::vector<bool>> tests;
  std::vector<BitClass> labels;
  for (int i = 0; i < n; ++i) {
    for (int b = 0; b < 2; ++b) {
      labels.push_back({i, b});
      tests.push_back(membership(class_members(n, BitClass{i, b}, static_cast<Qubit>(qubits)), qubits));
    }
  }
  std::uint64_t stage1 = 0;
  for (const auto& f : faults) stage1 |= signature(tests, f);
  std::vector<BitClass> failing;
  for (std::size_t t = 0; t < labels.size(); ++t) {
    if (stage1 >> t & 1U) failing.push_back(labels[t]);
  }
  const auto syn = make_syndrome(failing);
  if (!syn.conflict) {
    const auto freeList = free_bits(n, syn);
    if (freeList.size() >= 2) {
      for (const auto& rc : restricted_eq_classes(n, freeList, syn.fixedBits, static_cast<Qubit>(qubits))) {
        tests.push_back(membership(rc.members, qubits));
      }
    }
  }
  std::uint64_t target = 0;
  for (const auto& f : faults) target |= signature(tests, f);
  std::vector<std::uint64_t> cand;
  for (const auto& c : coupling_list(qubits)) {
    const auto s = signature(tests, c);
    if ((s | target) == target) cand.push_back(s);
  }
  return count_covers(cand, target, static_cast<int>(faults.size())) == 1;
}

std::optional<double> table1_reference(int qubits, int faults) {
  static const std::map<std::pair<int, int>, double> ref{
      {{8, 1}, 1.0},   {{8, 2}, 0.47},  {{8, 3}, 0.22},  {{16, 1}, 1.0}, {{16, 2}, 0.23},
      {{16, 3}, 0.05}, {{32, 1}, 1.0},  {{32, 2}, 0.12}, {{32, 3}, 0.01}};
  const auto it = ref.find({qubits, faults});
  if (it == ref.end()) return std::nullopt;
  return it->second;
}

Table1Row table1_exhaustive(int qubits, int faults, bool strict) {
  const auto pairs = coupling_list(qubits);
  Table1Row row{qubits, faults, true, 0, 0, 0, table1_reference(qubits, faults)};
  std::vector<std::size_t> idx(static_cast<std::size_t>(faults));
  for (int i = 0; i < faults; ++i) idx[i] = static_cast<std::size_t>(i);
  if (static_cast<std::size_t>(faults) > pairs.size()) return row;
  while (true) {
    CouplingSet set;
    for (auto i : idx) set.insert(pairs[i]);
    ++row.trials;
    row.successes += first_fault_identified(qubits, set);
    if (strict) row.strictSuccesses += union_syndrome_unique(qubits, set);
    int pos = faults - 1;
    while (pos >= 0 && idx[pos] == pairs.size() - static_cast<std::size_t>(faults - pos)) --pos;
    if (pos < 0) break;
    ++idx[pos];
    for (int j = pos + 1; j < faults; ++j) idx[j] = idx[j - 1] + 1;
  }
  return row;
}

std::vector<Table1Row> run_table1_sweep(const Table1Config& config) {
  if (config.trials < 1) throw InvalidArgument("table sweep needs trials");
  std::vector<Table1Row> rows;
  for (int qubits : config.qubitCounts) {
    const auto pairs = coupling_list(qubits);
    for (int k : config.faultCounts) {
      if (k < 1 || static_cast<std::size_t>(k) > pairs.size()) throw InvalidArgument("bad fault count");
      Table1Row row{qubits, k, false, 0, 0, 0, table1_reference(qubits, k)};
      for (long t = 0; t < config.trials; ++t) {
        std::mt19937_64 rng(trial_seed(config.seed, "table1", qubits, k, t));
        std::vector<Coupling> pick;
        std::sample(pairs.begin(), pairs.end(), std::back_inserter(pick), k, rng);
        const CouplingSet set(pick.begin(), pick.end());
        ++row.trials;
        row.successes += first_fault_identified(qubits, set);
        if (config.strict) row.strictSuccesses += union_syndrome_unique(qubits, set);
      }
      rows.push_back(row);
      // binomial coefficient small enough to enumerate
      double subsets = 1.0;
      for (int i = 0; i < k; ++i) subsets = subsets * static_cast<double>(pairs.size() - i) / (i + 1);
      if (subsets <= static_cast<double>(config.exhaustiveLimit)) {
        rows.push_back(table1_exhaustive(qubits, k, config.strict));
      }
    }
  }
  return rows;
}

std::string table1_csv(const std::vector<Table1Row>& rows) {
  std::ostringstream out;
  out << "# success: noiseless single-fault flow (stage 1, one adaptive round) returns one of the "
         "injected faults\n"
      << "# strict_rate: union syndrome over stage-1 and adaptive tests is produced by exactly one "
         "set of at most k couplings\n"
      << "N,k,method,trials,successes,rate,stderr,strict_rate,reference\n";
  for (const auto& r : rows) {
    out << r.qubits << ',' << r.faults << ',' << (r.exhaustive ? "exhaustive" : "monte_carlo") << ','
        << r.trials << ',' << r.successes << ',' << fmt(r.rate()) << ',' << fmt(r.standard_error()) << ','
        << fmt(r.strict_rate()) << ',' << fmt(r.reference) << '\n';
  }
  return out.str();
}

// ---------------------------------------------------------------------------

CalibratedThresholds::CalibratedThresholds(NoiseModel noise, int shots, int samples, double quantile,
                                           std::uint64_t seed)
    : noise_(std::move(noise)), shots_(shots), samples_(samples), quantile_(quantile), seed_(seed) {
  if (samples < 1 || !(quantile >= 0.0 && quantile < 1.0)) {
    throw InvalidArgument("calibration needs samples and a quantile in [0,1)");
  }
}

double CalibratedThresholds::for_clique(int members, int repetitions) {
  const auto key = std::make_pair(members, repetitions);
  if (const auto it = cache_.find(key); it != cache_.end()) return it->second;
  DeviceModel clean;
  clean.qubits = members;
  clean.noise = noise_;
  TestSpec spec;
  spec.id = "calibration";
  spec.repetitions = repetitions;
  spec.shots = shots_;
  for (Qubit a = 0; a < static_cast<Qubit>(members); ++a)
    for (Qubit b = a + 1; b < static_cast<Qubit>(members); ++b) spec.couplings.emplace_back(a, b);
  spec.target = target_bitstring(members, spec.couplings, repetitions);
  SimulationOptions options;
  options.sampleMode = SampleMode::TargetOnly;
  std::vector<double> f(static_cast<std::size_t>(samples_));
  for (int s = 0; s < samples_; ++s) {
    f[s] = simulate_test(clean, spec, trial_seed(seed_, "calibration", key.first, key.second, s), options)
               .fidelity;
  }
  std::sort(f.begin(), f.end());
  const auto at = static_cast<std::size_t>(std::floor(quantile_ * samples_));
  return cache_[key] = f[std::min(at, f.size() - 1)];
}

double CalibratedThresholds::operator()(const TestSpec& spec) {
  std::set<Qubit> members;
  for (const auto& c : spec.couplings) {
    members.insert(c.a);
    members.insert(c.b);
  }
  if (members.empty()) return 0.5;
  return for_clique(static_cast<int>(members.size()), spec.repetitions);
}

std::optional<double> threshold_reference(int qubits, int repetitions) {
  static const std::map<std::pair<int, int>, double> ref{{{8, 2}, 0.25},  {{16, 2}, 0.30},
                                                         {{32, 2}, 0.35}, {{8, 4}, 0.20},
                                                         {{16, 4}, 0.25}, {{32, 4}, 0.30}};
  const auto it = ref.find({qubits, repetitions});
  if (it == ref.end()) return std::nullopt;
  return it->second;
}

double noiseless_crossing(int repetitions, double threshold) {
  if (!(threshold > 0.0 && threshold < 1.0)) throw InvalidArgument("threshold outside (0,1)");
  return 4.0 / (repetitions * std::numbers::pi) * std::acos(std::sqrt(threshold));
}

ThresholdPoint threshold_trials(int qubits, int repetitions, double u, const ThresholdSweepConfig& config,
                                const ThresholdPolicy& policy) {
  const auto pairs = coupling_list(qubits);
  const int n = padded_bits(qubits);
  ThresholdPoint point{qubits, repetitions, u, 0, 0};
  ProtocolConfig cfg;
  cfg.repetitions = repetitions;
  cfg.shots = config.shots;
  cfg.threshold = policy;
  cfg.verify = false;
  SimulationOptions options;
  options.sampleMode = SampleMode::TargetOnly;
  const auto grid = static_cast<std::uint64_t>(std::llround(u * 1e6));
  for (long t = 0; t < config.trials; ++t) {
    const std::uint64_t seed = trial_seed(config.seed, "threshold", qubits * 1000ULL + repetitions, grid, t);
    std::mt19937_64 rng(seed);
    const Coupling fault = pairs[std::uniform_int_distribution<std::size_t>(0, pairs.size() - 1)(rng)];
    DeviceModel device;
    device.qubits = qubits;
    device.noise = config.noise;
    device.couplingError[fault] = -u;
    SimulatorExecutor exec(device, rng(), options);
    ++point.trials;
    try {
      point.successes += run_single_fault_protocol(exec, n, qubits, all_couplings(qubits), cfg).fault == fault;
    } catch (const Error&) {
    }
  }
  return point;
}

ThresholdSweepResult run_threshold_sweep(const ThresholdSweepConfig& config) {
  if (config.trials < 1 || config.grid.empty()) throw InvalidArgument("threshold sweep needs trials and a grid");
  ThresholdSweepResult result;
  for (int qubits : config.qubitCounts) {
    for (int reps : config.repetitions) {
      ThresholdPolicy policy;
      std::shared_ptr<CalibratedThresholds> calibrated;
      if (config.fixedThresholds.empty()) {
        calibrated = std::make_shared<CalibratedThresholds>(config.noise, config.shots, config.calibrationSamples,
                                                            config.calibrationQuantile, config.seed);
        policy = [calibrated](const TestSpec& s) { return (*calibrated)(s); };
      } else {
        policy = threshold_by_repetitions(config.fixedThresholds, 0.25);
      }
      ThresholdMinimum minimum{qubits, reps, std::nullopt, threshold_reference(qubits, reps)};
      double previous = 0.0;
      for (double u : config.grid) {
        const auto p = threshold_trials(qubits, reps, u, config, policy);
        result.points.push_back(p);
        if (p.rate() >= config.successTarget) {
          minimum.underRotation = u;
          for (double v = previous + config.refineStep; v < u - 1e-9; v += config.refineStep) {
            const auto q = threshold_trials(qubits, reps, v, config, policy);
            result.points.push_back(q);
            if (q.rate() >= config.successTarget) {
              minimum.underRotation = v;
              break;
            }
          }
          break;
        }
        previous = u;
      }
      result.minima.push_back(minimum);
      if (calibrated) {
        for (const auto& [key, t] : calibrated->table()) result.thresholds[{qubits, key.first, key.second}] = t;
      }
    }
  }
  return result;
}

std::string threshold_csv(const ThresholdSweepResult& result) {
  std::ostringstream out;
  out << "# success: single-fault flow isolates one random coupling under-rotated by u\n"
      << "kind,N,repetitions,under_rotation,trials,successes,rate,reference\n";
  for (const auto& m : result.minima) {
    out << "minimum," << m.qubits << ',' << m.repetitions << ',' << fmt(m.underRotation) << ",,,,"
        << fmt(m.reference) << '\n';
  }
  for (const auto& p : result.points) {
    out << "point," << p.qubits << ',' << p.repetitions << ',' << fmt(p.underRotation) << ',' << p.trials << ','
        << p.successes << ',' << fmt(p.rate()) << ",\n";
  }
  for (const auto& [key, t] : result.thresholds) {
    const auto& [qubits, members, reps] = key;
    out << "threshold," << qubits << ',' << reps << ',' << members << ",,,," << fmt(t) << '\n';
  }
  return out.str();
}

// ---------------------------------------------------------------------------

std::vector<SpreadRow> run_spread_sweep(const SpreadSweepConfig& config) {
  if (config.trials < 1) throw InvalidArgument("spread sweep needs trials");
  const auto pairs = coupling_list(config.qubits);
  const int n = padded_bits(config.qubits);
  std::vector<SpreadRow> rows;
  for (std::size_t si = 0; si < config.sigmas.size(); ++si) {
    const double sigma = config.sigmas[si];
    const FaultDistribution dist(sigma, config.cutoff);
    for (int reps : config.repetitions) {
      SpreadRow row{sigma, reps, 0, {0, 0, 0}};
      ProtocolConfig cfg;
      cfg.shots = config.shots;
      cfg.ladder = {reps};
      cfg.canaryRepetitions = reps;
      cfg.threshold = threshold_by_repetitions(config.thresholds, 0.25);
      cfg.verify = false;
      cfg.maxFaults = 3;
      for (long t = 0; t < config.trials; ++t) {
        std::mt19937_64 rng(trial_seed(config.seed, "spread", si, reps, t));
        DeviceModel device;
        device.qubits = config.qubits;
        device.noise = config.noise;
        std::vector<std::pair<double, Coupling>> ranked;
        for (const auto& c : pairs) {
          // the tail is truncated at a full under-rotation
          double u = dist.sample(rng);
          while (u >= 1.0) u = dist.sample(rng);
          if (u > 0.0) device.couplingError[c] = -u;
          ranked.emplace_back(u, c);
        }
        std::sort(ranked.begin(), ranked.end(), [](const auto& x, const auto& y) { return x.first > y.first; });
        SimulatorExecutor exec(device, rng());
        std::vector<DiagnosedFault> found;
        try {
          found = run_multi_fault_protocol(exec, n, config.qubits, all_couplings(config.qubits), cfg).faults;
        } catch (const IncompleteDiagnosis& e) {
          found = e.partial().faults;
        } catch (const Error&) {
        }
        ++row.trials;
        for (int j = 1; j <= 3; ++j) {
          if (static_cast<int>(found.size()) < j) break;
          CouplingSet top, got;
          for (int i = 0; i < j; ++i) {
            top.insert(ranked[i].second);
            got.insert(found[i].coupling);
          }
          row.successes[j - 1] += top == got;
        }
      }
      rows.push_back(row);
    }
  }
  return rows;
}

std::string spread_csv(const std::vector<SpreadRow>& rows) {
  std::ostringstream out;
  out << "# success_j: the first j diagnosed faults are exactly the j largest under-rotations\n"
      << "sigma,repetitions,trials,success_1,success_2,success_3\n";
  for (const auto& r : rows) {
    out << fmt(r.sigma) << ',' << r.repetitions << ',' << r.trials << ',' << fmt(r.rate(1)) << ','
        << fmt(r.rate(2)) << ',' << fmt(r.rate(3)) << '\n';
  }
  return out.str();
}

// ---------------------------------------------------------------------------

SeparationConfig default_separation_config() {
  SeparationConfig c;
  c.device.qubits = 8;
  c.device.couplingError[Coupling(0, 4)] = -0.47;
  c.device.couplingError[Coupling(0, 7)] = -0.22;
  return c;
}

std::vector<SeparationRow> run_class_separation(const SeparationConfig& config) {
  config.device.validate();
  const int qubits = config.device.qubits;
  const int n = padded_bits(qubits);
  std::vector<SeparationRow> rows;
  for (int reps : config.repetitions) {
    TestSpec probe;
    probe.repetitions = reps;
    const double threshold = threshold_by_repetitions(config.thresholds, 0.25)(probe);
    SeparationRow row{reps, threshold, 0, 0, 0.0, 0.0, 0.0, 1.0};
    const auto plan = build_stage1_plan(n, qubits, all_couplings(qubits), reps, config.shots, threshold);
    long faultyTests = 0;
    long cleanTests = 0;
    for (long t = 0; t < config.trials; ++t) {
      SimulatorExecutor exec(config.device, trial_seed(config.seed, "separation", reps, 0, t));
      bool separated = true;
      for (const auto& spec : plan.tests) {
        if (spec.trivial) continue;
        const auto r = exec.run(spec);
        const bool faulty = std::any_of(spec.couplings.begin(), spec.couplings.end(),
                                        [&](const Coupling& c) { return config.device.error_of(c) != 0.0; });
        if (faulty) {
          ++faultyTests;
          row.meanFaulty += r.fidelity;
          row.maxFaulty = std::max(row.maxFaulty, r.fidelity);
          separated = separated && !r.passed;
        } else {
          ++cleanTests;
          row.meanClean += r.fidelity;
          row.minClean = std::min(row.minClean, r.fidelity);
          separated = separated && r.passed;
        }
      }
      ++row.trials;
      row.separated += separated;
    }
    if (faultyTests) row.meanFaulty /= static_cast<double>(faultyTests);
    if (cleanTests) row.meanClean /= static_cast<double>(cleanTests);
    rows.push_back(row);
  }
  return rows;
}

}  // namespace iontest
