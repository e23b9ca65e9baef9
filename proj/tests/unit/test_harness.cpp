#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>

#include "iontest/errors.hpp"
#include "iontest/speedup.hpp"
#include "iontest/sweeps.hpp"

using namespace iontest;

namespace {

// Independent re-derivation of the first-fault outcome on 2^n qubits, using
// only bit arithmetic: stage-1 syndrome, then equal/unequal checks on
// consecutive free bits, then anchor reconstruction.
bool oracle_first_fault(int n, const std::vector<std::pair<unsigned, unsigned>>& faults) {
  const auto inside = [&](auto member) {
    return std::any_of(faults.begin(), faults.end(), [&](const auto& f) { return member(f.first) && member(f.second); });
  };
  std::map<int, int> fixed;
  for (int i = 0; i < n; ++i) {
    for (int b = 0; b < 2; ++b) {
      if (inside([&](unsigned x) { return static_cast<int>((x >> i) & 1U) == b; })) {
        if (fixed.contains(i)) return false;
        fixed[i] = b;
      }
    }
  }
  std::vector<int> freeBits;
  for (int i = 0; i < n; ++i)
    if (!fixed.contains(i)) freeBits.push_back(i);
  if (freeBits.empty()) return false;
  const auto matchesFixed = [&](unsigned x) {
    return std::all_of(fixed.begin(), fixed.end(), [&](const auto& kv) { return static_cast<int>((x >> kv.first) & 1U) == kv.second; });
  };
  std::map<int, int> value{{freeBits.back(), 0}};
  for (std::size_t j = freeBits.size() - 1; j > 0; --j) {
    const int p = freeBits[j - 1];
    const int q = freeBits[j];
    const bool failed = inside([&](unsigned x) { return matchesFixed(x) && ((x >> p) & 1U) == ((x >> q) & 1U); });
    value[p] = failed ? value[q] : 1 - value[q];
  }
  unsigned a = 0;
  for (const auto& [i, b] : fixed) a |= static_cast<unsigned>(b) << i;
  unsigned mask = 0;
  for (const auto& [i, b] : value) {
    a |= static_cast<unsigned>(b) << i;
    mask |= 1U << i;
  }
  const unsigned b = a ^ mask;
  const auto pair = std::make_pair(std::min(a, b), std::max(a, b));
  return std::find(faults.begin(), faults.end(), pair) != faults.end();
}

long oracle_exhaustive_successes(int k) {
  std::vector<std::pair<unsigned, unsigned>> pairs;
  for (unsigned a = 0; a < 8; ++a)
    for (unsigned b = a + 1; b < 8; ++b) pairs.emplace_back(a, b);
  long ok = 0;
  std::vector<bool> pick(pairs.size(), false);
  std::fill(pick.begin(), pick.begin() + k, true);
  do {
    std::vector<std::pair<unsigned, unsigned>> fs;
    for (std::size_t i = 0; i < pairs.size(); ++i)
      if (pick[i]) fs.push_back(pairs[i]);
    ok += oracle_first_fault(3, fs);
  } while (std::prev_permutation(pick.begin(), pick.end()));
  return ok;
}

}  // namespace

TEST(Table1, ExhaustiveMatchesIndependentOracle) {
  EXPECT_EQ(oracle_exhaustive_successes(1), 28);
  EXPECT_EQ(oracle_exhaustive_successes(2), 155);
  EXPECT_EQ(oracle_exhaustive_successes(3), 435);
  const auto k2 = table1_exhaustive(8, 2, true);
  EXPECT_EQ(k2.trials, 378);
  EXPECT_EQ(k2.successes, 155);
  const auto k3 = table1_exhaustive(8, 3, false);
  EXPECT_EQ(k3.trials, 3276);
  EXPECT_EQ(k3.successes, 435);
}

TEST(Table1, StrictDecodability) {
  for (int q : {8, 16}) {
    const auto pairs = all_couplings(q);
    for (const auto& c : pairs) EXPECT_TRUE(union_syndrome_unique(q, CouplingSet{c})) << to_string(c);
  }
  // With the adaptive tests chosen from the union syndrome, two faults always
  // admit a second explanation of at most two couplings.
  EXPECT_EQ(table1_exhaustive(8, 2, true).strictSuccesses, 0);
}

TEST(Table1, SingleFaultAlwaysFound) {
  Table1Config cfg;
  cfg.qubitCounts = {8, 16, 32, 11};
  cfg.faultCounts = {1};
  cfg.trials = 200;
  cfg.strict = false;
  for (const auto& row : run_table1_sweep(cfg)) EXPECT_EQ(row.successes, row.trials) << row.qubits;
}

TEST(Table1, MonteCarloAgreesWithEnumeration) {
  Table1Config cfg;
  cfg.qubitCounts = {8};
  cfg.faultCounts = {2, 3};
  cfg.trials = 5000;
  cfg.strict = false;
  const auto rows = run_table1_sweep(cfg);
  ASSERT_EQ(rows.size(), 4U);
  for (std::size_t i = 0; i < rows.size(); i += 2) {
    const auto& mc = rows[i];
    const auto& ex = rows[i + 1];
    ASSERT_FALSE(mc.exhaustive);
    ASSERT_TRUE(ex.exhaustive);
    const double se = std::sqrt(ex.rate() * (1 - ex.rate()) / mc.trials);
    EXPECT_LE(std::abs(mc.rate() - ex.rate()), 3 * se) << mc.faults;
  }
}

TEST(Table1, CsvDeterministic) {
  Table1Config cfg;
  cfg.qubitCounts = {16};
  cfg.faultCounts = {2};
  cfg.trials = 300;
  const auto a = table1_csv(run_table1_sweep(cfg));
  EXPECT_EQ(a, table1_csv(run_table1_sweep(cfg)));
  cfg.seed = 2;
  EXPECT_NE(a, table1_csv(run_table1_sweep(cfg)));
  EXPECT_NE(a.find("N,k,method,trials,successes,rate,stderr,strict_rate,reference"), std::string::npos);
}

TEST(ThresholdSweep, NoiselessCrossing) {
  EXPECT_NEAR(noiseless_crossing(4, 0.25), 1.0 / 3.0, 1e-12);
  EXPECT_NEAR(noiseless_crossing(2, 0.5), 0.5, 1e-12);
  EXPECT_THROW(noiseless_crossing(2, 1.0), InvalidArgument);

  ThresholdSweepConfig cfg;
  cfg.qubitCounts = {8};
  cfg.repetitions = {4};
  cfg.noise = NoiseModel::noiseless();
  cfg.fixedThresholds = {{4, 0.25}};
  cfg.trials = 60;
  cfg.grid = {0.2, 0.3, 0.4, 0.5};
  const auto result = run_threshold_sweep(cfg);
  ASSERT_EQ(result.minima.size(), 1U);
  ASSERT_TRUE(result.minima[0].underRotation.has_value());
  const double u = *result.minima[0].underRotation;
  EXPECT_GE(u, noiseless_crossing(4, 0.25));
  EXPECT_LE(u, noiseless_crossing(4, 0.25) + 0.05);
  EXPECT_EQ(result.minima[0].reference, 0.20);
}

TEST(ThresholdSweep, CalibratedThresholds) {
  CalibratedThresholds quiet(NoiseModel::noiseless(), 300, 50, 0.01, 1);
  EXPECT_DOUBLE_EQ(quiet.for_clique(4, 2), 1.0);
  NoiseModel noisy{AmplitudeLaw::Uniform, 0.10, 0.0, std::nullopt, 0.0};
  CalibratedThresholds a(noisy, 300, 400, 0.01, 3);
  CalibratedThresholds b(noisy, 300, 400, 0.01, 3);
  EXPECT_DOUBLE_EQ(a.for_clique(4, 2), b.for_clique(4, 2));
  EXPECT_LT(a.for_clique(4, 2), 1.0);
  EXPECT_GT(a.for_clique(4, 2), 0.5);
  // larger classes accumulate more amplitude error
  EXPECT_LT(a.for_clique(8, 2), a.for_clique(4, 2));
}

TEST(ThresholdSweep, DetectionImprovesWithUnderRotation) {
  ThresholdSweepConfig cfg;
  cfg.trials = 100;
  cfg.calibrationSamples = 2000;
  CalibratedThresholds th(cfg.noise, cfg.shots, cfg.calibrationSamples, cfg.calibrationQuantile, cfg.seed);
  const ThresholdPolicy policy = [&](const TestSpec& s) { return th(s); };
  const auto low = threshold_trials(8, 4, 0.05, cfg, policy);
  const auto high = threshold_trials(8, 4, 0.45, cfg, policy);
  EXPECT_LT(low.rate(), 0.5);
  EXPECT_GT(high.rate(), 0.95);
}

TEST(SpreadSweep, MoreSpreadHelps) {
  SpreadSweepConfig cfg;
  cfg.sigmas = {0.0, 0.05, 0.15};
  cfg.repetitions = {4};
  cfg.trials = 150;
  const auto rows = run_spread_sweep(cfg);
  ASSERT_EQ(rows.size(), 3U);
  EXPECT_LT(rows[0].rate(1), 0.2);
  EXPECT_GT(rows[2].rate(1), rows[1].rate(1));
  EXPECT_EQ(spread_csv(rows), spread_csv(run_spread_sweep(cfg)));
}

TEST(Separation, NoiselessDevice) {
  auto cfg = default_separation_config();
  cfg.device.noise = NoiseModel::noiseless();
  cfg.trials = 20;
  const auto rows = run_class_separation(cfg);
  ASSERT_EQ(rows.size(), 2U);
  // an isolated -47% pair keeps cos^2(0.235 pi) = 0.547 of the target after two gates
  EXPECT_NEAR(rows[0].meanFaulty, std::pow(std::cos(0.235 * std::numbers::pi), 2), 0.05);
  EXPECT_EQ(rows[0].separated, 0);
  EXPECT_EQ(rows[1].separated, rows[1].trials);
  EXPECT_DOUBLE_EQ(rows[1].meanClean, 1.0);
}

TEST(Speedup, CountRatio) {
  EXPECT_NEAR(count_ratio(8), 28.0 / 6.0, 1e-12);
  EXPECT_NEAR(count_ratio(11), 55.0 / 8.0, 1e-12);
}

TEST(Speedup, ClosedFormAtEight) {
  TimingModel tm;
  const auto r = speedup_at(tm, 8);
  const double shot = tm.initReadoutTime;
  const double tg = 2e-4;
  EXPECT_NEAR(r.pointCheckTime, 300 * 28 * (shot + 2 * tg), 1e-9);
  EXPECT_NEAR(r.nonAdaptiveTime, 300 * 6 * (shot + 2 * 6 * tg), 1e-9);
  EXPECT_NEAR(r.adaptiveTime, r.nonAdaptiveTime + 0.1 + 3e-3 * 28 + 2 * 300 * (shot + 2 * tg), 1e-9);
  tm.initReadoutTime = 0;
  EXPECT_THROW(speedup_at(tm, 8), ConfigError);
}

TEST(Speedup, ShapeUnderDefaults) {
  const TimingModel tm;
  const auto rows = speedup_model(tm, 1024);
  ASSERT_EQ(rows.size(), 8U);
  for (std::size_t i = 1; i < rows.size(); ++i) {
    EXPECT_GT(rows[i].nonAdaptiveSpeedup(), rows[i - 1].nonAdaptiveSpeedup());
  }
  const auto fit = fit_n2_over_log(rows);
  EXPECT_LT(fit.maxRelativeResidual, 0.05);
  const auto plateau = adaptive_plateau(tm, rows);
  EXPECT_TRUE(plateau.plateaued) << plateau.last << " " << plateau.asymptote << " " << plateau.lastDoublingRatio;
  EXPECT_NEAR(plateau.asymptote, 1000.0, 1e-9);
  for (const auto& r : rows) EXPECT_LT(r.adaptiveSpeedup(), r.nonAdaptiveSpeedup());
}

TEST(Speedup, NoLatencyNoPlateau) {
  TimingModel tm;
  tm.latencyBase = 0;
  tm.latencyPerCoupling = 0;
  const auto rows = speedup_model(tm, 1024);
  EXPECT_FALSE(adaptive_plateau(tm, rows).plateaued);
  const auto every = speedup_model(tm, 64, true);
  EXPECT_EQ(every.size(), 57U);
}
