// Acceptance checks. Prints one PASS/FAIL line per criterion; exits non-zero
// when any selected criterion fails.
//
//   acceptance            run all criteria
//   acceptance --only N   run criterion N

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <iostream>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "iontest/analysis.hpp"
#include "iontest/bitclasses.hpp"
#include "iontest/errors.hpp"
#include "iontest/executors.hpp"
#include "iontest/protocol.hpp"
#include "iontest/simulator.hpp"
#include "iontest/speedup.hpp"
#include "iontest/sweeps.hpp"

using namespace iontest;

namespace {

constexpr double kPi = std::numbers::pi;

struct Verdict {
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << " [fail: " << what << ']';
    }
  }
};

ProtocolConfig flat_config(double threshold) {
  ProtocolConfig c;
  c.verify = false;
  c.retryWithDoubledShots = false;
  c.threshold = [threshold](const TestSpec&) { return threshold; };
  return c;
}

// Runs the single-fault flow for fault f and checks identification and cost.
void check_single(Verdict& v, TestExecutor& exec, int n, int N, const CouplingSet& rel,
                  const Coupling& f, const ProtocolConfig& cfg, long& checked) {
  ++checked;
  try {
    const auto out = run_single_fault_protocol(exec, n, N, rel, cfg);
    if (out.fault != f || out.testsRun > 3 * n - 1 || out.ledger.adaptations != 1) {
      v.require(false, "fault " + to_string(f) + " -> " + to_string(out.fault) + ", tests " +
                           std::to_string(out.testsRun) + ", adaptations " +
                           std::to_string(out.ledger.adaptations));
    }
  } catch (const Error& e) {
    v.require(false, "fault " + to_string(f) + ": " + e.what());
  }
}

Verdict criterion1() {
  Verdict v;
  long checked = 0;
  for (int n = 3; n <= 5; ++n) {
    const int N = 1 << n;
    const auto rel = all_couplings(N);
    ProtocolConfig cfg = flat_config(0.25);
    cfg.repetitions = 4;
    for (const auto& f : rel) {
      OracleExecutor oracle({f});
      check_single(v, oracle, n, N, rel, f, cfg, checked);
      DeviceModel d;
      d.qubits = N;
      d.noise = NoiseModel::noiseless();
      SimulatorExecutor sim(inject_faults(d, {{f, 0.47}}), 1);
      check_single(v, sim, n, N, rel, f, cfg, checked);
    }
  }
  v.detail << " runs=" << checked << " (oracle and noiseless simulator, N=8,16,32)";
  return v;
}

Verdict criterion2() {
  Verdict v;
  long checked = 0;
  std::mt19937_64 rng(2);
  for (int n = 3; n <= 5; ++n) {
    const int N = 1 << n;
    const auto all = all_couplings(N);
    std::vector<Coupling> pool(all.begin(), all.end());
    for (int trial = 0; trial < 100; ++trial) {
      std::shuffle(pool.begin(), pool.end(), rng);
      const std::size_t size = 1 + rng() % pool.size();
      const CouplingSet rel(pool.begin(), pool.begin() + static_cast<long>(size));
      for (const auto& f : rel) {
        OracleExecutor oracle({f});
        check_single(v, oracle, n, N, rel, f, flat_config(0.5), checked);
      }
    }
  }
  v.detail << " runs=" << checked << " (every fault of 100 random subsets per n)";
  return v;
}

Verdict criterion3() {
  Verdict v;
  Table1Config cfg;
  cfg.faultCounts = {2, 3};
  cfg.trials = 5000;
  cfg.strict = false;
  const auto rows = run_table1_sweep(cfg);
  std::optional<Table1Row> exhaustive;
  for (const auto& r : rows) {
    if (r.exhaustive && r.qubits == 8) exhaustive = r;
  }
  for (const auto& r : rows) {
    v.detail << " N" << r.qubits << "k" << r.faults << (r.exhaustive ? "(exh)" : "") << '='
             << std::round(r.rate() * 1000) / 1000;
    if (r.reference) {
      v.detail << "/ref " << *r.reference;
      v.require(std::abs(r.rate() - *r.reference) <= 0.10, "outside 10pp");
    }
    if (!r.exhaustive && r.qubits == 8) {
      for (const auto& e : rows) {
        if (e.exhaustive && e.qubits == 8 && e.faults == r.faults) {
          v.require(std::abs(r.rate() - e.rate()) <= 3 * r.standard_error(), "MC vs exhaustive");
        }
      }
    }
  }
  v.require(exhaustive.has_value(), "no exhaustive N=8 row");
  return v;
}

Verdict criterion4() {
  Verdict v;
  const auto rows = run_class_separation(default_separation_config());
  for (const auto& r : rows) {
    v.detail << " reps" << r.repetitions << "@" << r.threshold << ": separated " << r.rate()
             << " (faulty mean " << r.meanFaulty << " max " << r.maxFaulty << ", clean mean "
             << r.meanClean << " min " << r.minClean << ')';
    v.require(r.rate() >= 0.95, std::to_string(r.repetitions) + "-MS below 95%");
  }
  return v;
}

Verdict criterion5() {
  Verdict v;
  const auto result = run_threshold_sweep(ThresholdSweepConfig{});
  for (const auto& m : result.minima) {
    v.detail << " N" << m.qubits << " " << m.repetitions << "-MS=";
    if (m.underRotation) {
      v.detail << *m.underRotation;
    } else {
      v.detail << "none";
    }
    if (m.reference) v.detail << "/ref " << *m.reference;
    v.require(m.underRotation && m.reference && std::abs(*m.underRotation - *m.reference) <= 0.05 + 1e-9,
              "N" + std::to_string(m.qubits) + " " + std::to_string(m.repetitions) + "-MS");
  }
  return v;
}

Verdict criterion6() {
  Verdict v;
  std::mt19937_64 rng(6);
  double worstProb = 0.0;
  double worstState = 0.0;
  for (int trial = 0; trial < 200; ++trial) {
    const int m = 2 + static_cast<int>(rng() % 11);
    DeviceModel d;
    d.qubits = m;
    d.noise = NoiseModel::noiseless();
    d.noise.amplitude = 0.10;
    std::uniform_real_distribution<double> err(-0.5, 0.5);
    std::vector<Coupling> couplings;
    for (const auto& c : all_couplings(m)) {
      if (rng() % 2) couplings.push_back(c);
      if (rng() % 3 == 0) d.couplingError[c] = err(rng);
    }
    if (couplings.empty()) couplings.emplace_back(0, 1);
    TestSpec spec;
    spec.id = "t" + std::to_string(trial);
    spec.couplings = couplings;
    spec.repetitions = 1 + static_cast<int>(rng() % 8);
    spec.target = std::string(static_cast<std::size_t>(m), '0');
    for (int q = 0; q < m; ++q) {
      if (rng() % 2) spec.target[static_cast<std::size_t>(q)] = '1';
    }
    const std::uint64_t seed = rng();
    std::mt19937_64 a(seed);
    std::mt19937_64 b(seed);
    worstProb = std::max(worstProb, std::abs(target_probability_diagonal(d, spec, a) -
                                             target_probability_statevector(d, spec, b)));
    std::mt19937_64 c(seed);
    const auto circuit = realize_circuit(d, spec, c);
    const auto sv = run_statevector(circuit);
    const auto diag = xx_output_state(static_cast<int>(circuit.involved.size()), diagonal_terms(circuit));
    worstState = std::max(worstState, (sv.amplitudes() - diag).cwiseAbs().maxCoeff());
  }
  v.detail << " max |dP|=" << worstProb << " max |d amplitude|=" << worstState << " over 200 circuits";
  v.require(worstProb <= 1e-10 && worstState <= 1e-10, "backends disagree");
  return v;
}

Verdict criterion7() {
  Verdict v;
  const auto phis = default_phi_grid(16);
  double worst = 0.0;
  for (double eps : {0.0, 0.05, 0.1, 0.2}) {
    worst = std::max(worst, std::abs(contrast_fit(simulate_contrast_scan(eps, phis)) - std::cos(eps)));
  }
  v.detail << " max |Pi - cos eps|=" << worst;
  v.require(worst <= 1e-3, "contrast fit");

  ModeCouplings mc;
  mc.eta[{0, 0}] = 0.1;
  mc.eta[{0, 1}] = 0.1;
  mc.alpha[0] = {0.3, 0.4};
  v.require(std::abs(ms_fidelity_from_displacement(mc, 0, 1) - 0.996) < 1e-15, "displacement 0.996");
  ModeCouplings closed;
  closed.eta[{0, 0}] = 0.1;
  closed.eta[{0, 1}] = 0.1;
  v.require(ms_fidelity_from_displacement(closed, 0, 1) == 1.0, "closed loops give 1");
  v.require(ms_fidelity_from_parity(0.5, 0.5, 1.0) == 1.0, "parity 1.0");
  v.require(std::abs(ms_fidelity_from_parity(0.45, 0.45, 0.9) - 0.9) < 1e-15, "parity 0.9");
  bool threw = false;
  try {
    ms_fidelity_from_parity(0.5, 0.5, 1.2);
  } catch (const InvalidArgument&) {
    threw = true;
  }
  v.require(threw, "contrast above 1 rejected");
  return v;
}

Verdict criterion8() {
  Verdict v;
  // Halving sizes so each fault first shows at its own rung (2, 8, 16).
  const std::vector<Coupling> faults{{0, 7}, {1, 6}, {2, 5}};
  const std::vector<double> sizes{0.6, 0.3, 0.15};
  const int n = 3;
  for (int k = 1; k <= 3; ++k) {
    DeviceModel d;
    d.qubits = 8;
    d.noise = NoiseModel::noiseless();
    for (int i = 0; i < k; ++i) d.couplingError[faults[static_cast<std::size_t>(i)]] = -sizes[static_cast<std::size_t>(i)];
    SimulatorExecutor exec(d, 8);
    ProtocolConfig cfg;
    cfg.verify = true;
    const long s = cfg.shots;
    const long R = static_cast<long>(cfg.ladder.size());
    try {
      const auto diag = run_multi_fault_protocol(exec, n, 8, all_couplings(8), cfg);
      CouplingSet found;
      for (const auto& f : diag.faults) found.insert(f.coupling);
      v.detail << " k=" << k << ": adaptations " << diag.ledger.adaptations << ", runs "
               << diag.ledger.circuitRuns;
      v.require(found == CouplingSet(faults.begin(), faults.begin() + k), "wrong faults");
      v.require(diag.ledger.adaptations == 4 * k + 1, "adaptations != 4k+1");
      v.require(diag.ledger.circuitRuns == k * s * (3 * n + R), "circuitRuns != k s (3n+R)");
    } catch (const Error& e) {
      v.require(false, std::string("k=") + std::to_string(k) + ": " + e.what());
    }
  }
  return v;
}

Verdict criterion9() {
  Verdict v;
  std::vector<int> counts;
  for (int m = 2; m <= 40; m += 2) counts.push_back(m);
  DeviceModel quiet;
  quiet.qubits = 2;
  quiet.noise = NoiseModel::noiseless();
  const Coupling pair(0, 1);
  for (const auto& p : concatenated_ms_sequence(quiet, pair, counts, true, 0, 1)) {
    v.require(p.infidelity == 0.0, "noiseless echo at m=" + std::to_string(p.gates));
  }
  int compared = 0;
  for (double e : {-0.2, -0.1, -0.05, -0.01, 0.01, 0.05, 0.1, 0.2}) {
    auto d = quiet;
    d.couplingError[pair] = e;
    const auto echo = concatenated_ms_sequence(d, pair, counts, true, 0, 1);
    const auto plain = concatenated_ms_sequence(d, pair, counts, false, 0, 1);
    for (std::size_t i = 0; i < counts.size(); ++i) {
      ++compared;
      v.require(echo[i].infidelity <= plain[i].infidelity + 1e-12,
                "echo worse at eps=" + std::to_string(e) + " m=" + std::to_string(counts[i]));
    }
  }
  v.detail << " " << compared << " (error, gate count) pairs, m=2..40";
  return v;
}

Verdict criterion10() {
  Verdict v;
  const TimingModel tm;
  const auto rows = speedup_model(tm, 1024);
  for (std::size_t i = 1; i < rows.size(); ++i) {
    v.require(rows[i].nonAdaptiveSpeedup() > rows[i - 1].nonAdaptiveSpeedup(),
              "non-adaptive not monotone at N=" + std::to_string(rows[i].qubits));
  }
  const auto fit = fit_n2_over_log(rows);
  const auto plateau = adaptive_plateau(tm, rows);
  v.detail << " fit c=" << fit.c << " max residual " << fit.maxRelativeResidual << "; adaptive "
           << plateau.last << " of asymptote " << plateau.asymptote << ", last doubling x"
           << plateau.lastDoublingRatio;
  v.require(fit.maxRelativeResidual < 0.05, "fit residual");
  v.require(plateau.plateaued, "no plateau");
  return v;
}

}  // namespace

int main(int argc, char** argv) {
  int only = 0;
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    if (arg == "--only" && i + 1 < argc) {
      only = std::atoi(argv[++i]);
    } else {
      std::cerr << "usage: acceptance [--only N]\n";
      return 2;
    }
  }
  const std::vector<std::function<Verdict()>> criteria{criterion1, criterion2, criterion3, criterion4,
                                                       criterion5, criterion6, criterion7, criterion8,
                                                       criterion9, criterion10};
  if (only < 0 || only > static_cast<int>(criteria.size())) {
    std::cerr << "no criterion " << only << '\n';
    return 2;
  }
  bool all = true;
  for (int c = 1; c <= static_cast<int>(criteria.size()); ++c) {
    if (only && c != only) continue;
    const auto start = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = criteria[static_cast<std::size_t>(c - 1)]();
    } catch (const std::exception& e) {
      v.require(false, std::string("exception: ") + e.what());
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("criterion %d: %s%s (%.1fs)\n", c, v.pass ? "PASS" : "FAIL", v.detail.str().c_str(), secs);
    std::fflush(stdout);
    all = all && v.pass;
  }
  return all ? 0 : 1;
}
