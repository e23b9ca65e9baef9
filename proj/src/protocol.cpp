#include "iontest/protocol.hpp"

#include <algorithm>
#include <cstdio>
#include <unordered_map>

#include "iontest/errors.hpp"

namespace iontest {

CouplingSet all_couplings(int qubits) {
  CouplingSet out;
  for (Qubit a = 0; a < static_cast<Qubit>(qubits); ++a) {
    for (Qubit b = a + 1; b < static_cast<Qubit>(qubits); ++b) out.emplace(a, b);
  }
  return out;
}

std::vector<GateOp> TestSpec::gates() const {
  if (!circuit.empty()) return circuit;
  std::vector<GateOp> out;
  out.reserve(couplings.size() * static_cast<std::size_t>(std::max(repetitions, 0)));
  for (const auto& c : couplings) {
    for (int r = 0; r < repetitions; ++r) out.push_back({GateOp::Kind::Ms, c});
  }
  return out;
}

TestResult make_result(const TestSpec& spec, std::map<std::string, long> counts, long shots) {
  if (shots <= 0) throw ValidationError("result for " + spec.id + " has no shots");
  TestResult r;
  r.testId = spec.id;
  const auto it = counts.find(spec.target);
  const long hits = it == counts.end() ? 0 : it->second;
  r.counts = std::move(counts);
  r.shots = shots;
  r.fidelity = static_cast<double>(hits) / static_cast<double>(shots);
  r.passed = r.fidelity >= spec.threshold;
  return r;
}

TestResult trivial_result(const TestSpec& spec) {
  TestResult r;
  r.testId = spec.id;
  r.fidelity = 1.0;
  r.passed = true;
  return r;
}

std::vector<TestResult> TestExecutor::run_batch(std::span<const TestSpec> specs) {
  std::vector<TestResult> out;
  out.reserve(specs.size());
  for (const auto& s : specs) out.push_back(run(s));
  return out;
}

ThresholdPolicy threshold_by_repetitions(std::map<int, double> table, double fallback) {
  return [table = std::move(table), fallback](const TestSpec& spec) {
    const auto it = table.find(spec.repetitions);
    return it == table.end() ? fallback : it->second;
  };
}

std::map<int, double> default_thresholds() { return {{2, 0.45}, {4, 0.25}}; }

namespace {

void check_repetitions(int repetitions) {
  if (repetitions < 2 || repetitions % 2 != 0) {
    throw InvalidArgument("unsupported repetition count " + std::to_string(repetitions) +
                          "; single-output tests need an even count >= 2");
  }
}

void check_endpoints(int qubits, const Coupling& c) {
  if (c.b >= static_cast<Qubit>(qubits)) {
    throw InvalidArgument("coupling " + to_string(c) + " outside a " + std::to_string(qubits) +
                          "-qubit device");
  }
}

BitClass parse_bit_class(const std::string& label) {
  int bit = -1;
  int value = -1;
  if (std::sscanf(label.c_str(), "(%d,%d)", &bit, &value) != 2 || (value != 0 && value != 1)) {
    throw InvalidArgument("not a stage-1 class label: " + label);
  }
  return {bit, value};
}

std::unordered_map<std::string, const TestResult*> index_results(
    std::span<const TestResult> results) {
  std::unordered_map<std::string, const TestResult*> byId;
  for (const auto& r : results) byId.emplace(r.testId, &r);
  return byId;
}

bool observed_pass(const TestSpec& spec,
                   const std::unordered_map<std::string, const TestResult*>& byId) {
  if (spec.trivial) return true;
  const auto it = byId.find(spec.id);
  if (it == byId.end()) throw IncompletePlan("no result for test " + spec.id);
  return it->second->passed;
}

}  // namespace

std::string target_bitstring(int qubits, std::span<const Coupling> couplings, int repetitions) {
  check_repetitions(repetitions);
  std::string out(static_cast<std::size_t>(qubits), '0');
  if ((repetitions / 2) % 2 == 0) {
    for (const auto& c : couplings) check_endpoints(qubits, c);
    return out;
  }
  std::vector<int> degree(static_cast<std::size_t>(qubits), 0);
  for (const auto& c : couplings) {
    check_endpoints(qubits, c);
    ++degree[c.a];
    ++degree[c.b];
  }
  for (int q = 0; q < qubits; ++q) {
    if (degree[q] % 2 == 1) out[q] = '1';
  }
  return out;
}

std::string target_bitstring(int qubits, std::span<const GateOp> circuit) {
  // logicalAt[p] is the logical qubit currently held by physical qubit p.
  std::vector<Qubit> logicalAt(static_cast<std::size_t>(qubits));
  for (int q = 0; q < qubits; ++q) logicalAt[q] = static_cast<Qubit>(q);
  std::map<Coupling, int> gateCount;
  for (const auto& op : circuit) {
    check_endpoints(qubits, op.pair);
    if (op.kind == GateOp::Kind::Swap) {
      std::swap(logicalAt[op.pair.a], logicalAt[op.pair.b]);
    } else {
      ++gateCount[Coupling(logicalAt[op.pair.a], logicalAt[op.pair.b])];
    }
  }
  std::vector<int> flipped(static_cast<std::size_t>(qubits), 0);
  for (const auto& [pair, count] : gateCount) {
    if (count % 2 != 0) {
      throw InvalidArgument("logical pair " + to_string(pair) +
                            " receives an odd number of MS gates; output is entangled");
    }
    if ((count / 2) % 2 == 1) {
      flipped[pair.a] ^= 1;
      flipped[pair.b] ^= 1;
    }
  }
  std::string out(static_cast<std::size_t>(qubits), '0');
  for (int p = 0; p < qubits; ++p) {
    if (flipped[logicalAt[p]]) out[p] = '1';
  }
  return out;
}

std::vector<Coupling> couplings_within(std::span<const Qubit> members,
                                       const CouplingSet& relevant) {
  std::vector<Coupling> out;
  for (std::size_t i = 0; i < members.size(); ++i) {
    for (std::size_t j = i + 1; j < members.size(); ++j) {
      Coupling c(members[i], members[j]);
      if (relevant.contains(c)) out.push_back(c);
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

TestPlan build_stage1_plan(int n, int qubits, const CouplingSet& relevant, int repetitions,
                           int shots, double threshold, const std::string& idPrefix) {
  check_repetitions(repetitions);
  for (const auto& c : relevant) check_endpoints(qubits, c);
  TestPlan plan{n, qubits, {}};
  for (int i = 0; i < n; ++i) {
    for (int b = 0; b < 2; ++b) {
      const BitClass label{i, b};
      const auto members = class_members(n, label, static_cast<Qubit>(qubits));
      TestSpec spec;
      spec.label = to_string(label);
      spec.id = idPrefix + "stage1/" + spec.label;
      spec.couplings = couplings_within(members, relevant);
      spec.repetitions = repetitions;
      spec.shots = shots;
      spec.threshold = threshold;
      spec.trivial = spec.couplings.empty();
      spec.target = target_bitstring(qubits, spec.couplings, repetitions);
      plan.tests.push_back(std::move(spec));
    }
  }
  return plan;
}

Syndrome decode_stage1(std::span<const TestResult> results, const TestPlan& plan) {
  const auto byId = index_results(results);
  std::vector<BitClass> failing;
  for (const auto& spec : plan.tests) {
    if (!observed_pass(spec, byId)) failing.push_back(parse_bit_class(spec.label));
  }
  return make_syndrome(std::move(failing));
}

TestPlan build_adaptive_plan(int n, int qubits, const Syndrome& s, const CouplingSet& relevant,
                             int repetitions, int shots, double threshold,
                             const std::string& idPrefix) {
  if (s.conflict) throw MultiFaultError("cannot plan adaptive tests for a conflicting syndrome");
  check_repetitions(repetitions);
  TestPlan plan{n, qubits, {}};
  const auto freeList = free_bits(n, s);
  if (freeList.size() < 2) return plan;
  for (auto& rc : restricted_eq_classes(n, freeList, s.fixedBits, static_cast<Qubit>(qubits))) {
    TestSpec spec;
    spec.label = to_string(rc);
    spec.id = idPrefix + "adaptive/" + spec.label;
    spec.couplings = couplings_within(rc.members, relevant);
    spec.repetitions = repetitions;
    spec.shots = shots;
    spec.threshold = threshold;
    spec.trivial = spec.couplings.empty();
    spec.target = target_bitstring(qubits, spec.couplings, repetitions);
    plan.tests.push_back(std::move(spec));
  }
  return plan;
}

Coupling identify_single_fault(int n, const Syndrome& s, const TestPlan& adaptivePlan,
                               std::span<const TestResult> adaptiveResults) {
  if (s.conflict) throw MultiFaultError("conflicting syndrome");
  const auto freeList = free_bits(n, s);
  if (freeList.empty()) throw DecodeFailure("syndrome fixes every bit");
  const std::size_t k = freeList.size();
  if (adaptivePlan.tests.size() != k - 1) {
    throw IncompletePlan("adaptive plan has " + std::to_string(adaptivePlan.tests.size()) +
                         " tests, syndrome needs " + std::to_string(k - 1));
  }
  const auto byId = index_results(adaptiveResults);
  Qubit a = 0;
  for (const auto& [bit, value] : s.fixedBits) {
    if (value) a |= Qubit{1} << bit;
  }
  Qubit freeMask = 0;
  for (int b : freeList) freeMask |= Qubit{1} << b;
  int value = 0;  // anchor: highest free bit is 0
  for (std::size_t j = k - 1; j > 0; --j) {
    const bool equal = !observed_pass(adaptivePlan.tests[j - 1], byId);
    if (!equal) value ^= 1;
    if (value) a |= Qubit{1} << freeList[j - 1];
  }
  const Coupling c(a, a ^ freeMask);
  if (adaptivePlan.qubits > 0 && c.b >= static_cast<Qubit>(adaptivePlan.qubits)) {
    throw DecodeFailure("decoded pair " + to_string(c) + " touches a padding qubit");
  }
  return c;
}

bool expected_pass(const TestSpec& test, const CouplingSet& faults) {
  if (faults.empty()) return true;
  for (const auto& op : test.gates()) {
    if (op.kind == GateOp::Kind::Ms && faults.contains(op.pair)) return false;
  }
  return true;
}

namespace {

/// Runs batches against an executor while keeping the ledger and log.
class Session {
 public:
  Session(TestExecutor& executor, const ThresholdPolicy& policy)
      : executor_(executor), policy_(policy) {}

  enum class Charge { Diagnosis, Canary };

  std::vector<TestResult> run(std::vector<TestSpec>& specs, Charge charge,
                              double thresholdScale = 1.0) {
    std::vector<TestSpec> live;
    for (auto& s : specs) {
      s.threshold = policy_(s) * thresholdScale;
      if (!s.trivial) live.push_back(s);
    }
    auto ran = executor_.run_batch(live);
    std::vector<TestResult> out;
    std::size_t k = 0;
    for (const auto& s : specs) {
      TestResult r = s.trivial ? trivial_result(s) : ran.at(k++);
      if (!s.trivial) {
        ledger.shotsTotal += s.shots;
        if (charge == Charge::Diagnosis) ledger.circuitRuns += s.shots;
        else ++ledger.canaryRuns;
        ++testsRun;
      }
      log.push_back({s, r});
      out.push_back(std::move(r));
    }
    return out;
  }

  /// Recharges already-logged canary runs as diagnosis runs.
  void recharge_as_diagnosis(const std::vector<TestSpec>& specs) {
    for (const auto& s : specs) {
      if (s.trivial) continue;
      --ledger.canaryRuns;
      ledger.circuitRuns += s.shots;
    }
  }

  const ThresholdPolicy& policy() const { return policy_; }

  CostLedger ledger;
  std::vector<LogEntry> log;
  int testsRun = 0;

 private:
  TestExecutor& executor_;
  const ThresholdPolicy& policy_;
};

TestSpec make_point_spec(int qubits, const Coupling& c, int repetitions, int shots,
                         const std::string& id) {
  TestSpec spec;
  spec.id = id;
  spec.label = "point" + to_string(c);
  spec.couplings = {c};
  spec.repetitions = repetitions;
  spec.shots = shots;
  spec.target = target_bitstring(qubits, spec.couplings, repetitions);
  return spec;
}

void check_consistent(const Coupling& c, const std::vector<LogEntry>& entries,
                      std::size_t firstEntry) {
  const CouplingSet hypothesis{c};
  for (std::size_t i = firstEntry; i < entries.size(); ++i) {
    const auto& e = entries[i];
    if (expected_pass(e.spec, hypothesis) != e.result.passed) {
      throw DecodeFailure("decoded pair " + to_string(c) + " disagrees with test " + e.spec.id);
    }
  }
}

/// Contrast adjustment for a conflicting stage-1 syndrome: lower the
/// threshold until, for every conflicting bit, only the worse of (i,0)/(i,1)
/// fails. Returns the new threshold or nothing when no such level exists.
std::optional<double> separating_threshold(const TestPlan& plan,
                                           std::span<const TestResult> results) {
  std::map<int, std::pair<double, double>> byBit;  // bit -> (fid b=0, fid b=1)
  for (std::size_t i = 0; i < plan.tests.size(); ++i) {
    const auto label = parse_bit_class(plan.tests[i].label);
    auto& slot = byBit[label.bit];
    (label.value == 0 ? slot.first : slot.second) = results[i].fidelity;
  }
  double maxLower = -1.0;
  double minHigher = 2.0;
  bool any = false;
  for (std::size_t i = 0; i < plan.tests.size(); i += 2) {
    if (results[i].passed || results[i + 1].passed) continue;
    any = true;
    const auto [f0, f1] = byBit[parse_bit_class(plan.tests[i].label).bit];
    maxLower = std::max(maxLower, std::min(f0, f1));
    minHigher = std::min(minHigher, std::max(f0, f1));
  }
  if (!any || !(maxLower < minHigher)) return std::nullopt;
  return minHigher;
}

struct RoundResult {
  Coupling fault;
  Syndrome syndrome;
};

/// Stage 1, decode, adaptive round, identification and optional verification
/// at one repetition count.
RoundResult diagnose_at(Session& session, int n, int qubits, const CouplingSet& relevant,
                        int repetitions, int shots, bool verify, bool adjustOnConflict,
                        const std::string& prefix) {
  const std::size_t firstEntry = session.log.size();
  auto plan1 = build_stage1_plan(n, qubits, relevant, repetitions, shots, 0.0, prefix);
  auto results1 = session.run(plan1.tests, Session::Charge::Diagnosis);
  Syndrome syndrome = decode_stage1(results1, plan1);
  double scale = 1.0;
  if (syndrome.conflict && adjustOnConflict) {
    const auto level = separating_threshold(plan1, results1);
    const double base = plan1.tests.empty() ? 0.0 : plan1.tests.front().threshold;
    if (!level || base <= 0.0) throw MultiFaultError("conflicting syndrome at " + prefix);
    scale = *level / base;
    for (std::size_t i = 0; i < plan1.tests.size(); ++i) {
      auto& spec = plan1.tests[i];
      if (spec.trivial) continue;
      spec.threshold *= scale;
      results1[i].passed = results1[i].fidelity >= spec.threshold;
      session.log[firstEntry + i] = {spec, results1[i]};
    }
    syndrome = decode_stage1(results1, plan1);
  }
  if (syndrome.conflict) throw MultiFaultError("conflicting syndrome at " + prefix);

  ++session.ledger.adaptations;  // decode round
  auto plan2 = build_adaptive_plan(n, qubits, syndrome, relevant, repetitions, shots, 0.0, prefix);
  const auto results2 = session.run(plan2.tests, Session::Charge::Diagnosis, scale);
  const Coupling fault = identify_single_fault(n, syndrome, plan2, results2);
  if (!relevant.contains(fault)) {
    throw DecodeFailure("decoded pair " + to_string(fault) + " is not in the relevant set");
  }
  check_consistent(fault, session.log, firstEntry);

  if (verify) {
    ++session.ledger.adaptations;
    std::vector<TestSpec> point{
        make_point_spec(qubits, fault, repetitions, shots, prefix + "verify" + to_string(fault))};
    const auto r = session.run(point, Session::Charge::Diagnosis, scale);
    if (r.front().passed) {
      throw DecodeFailure("verification test on " + to_string(fault) + " passed");
    }
  }
  return {fault, syndrome};
}

}  // namespace

SingleFaultOutcome run_single_fault_protocol(TestExecutor& executor, int n, int qubits,
                                             const CouplingSet& relevant,
                                             const ProtocolConfig& config) {
  if (relevant.empty()) throw InvalidArgument("relevant coupling set is empty");
  Session session(executor, config.threshold);
  RoundResult round;
  try {
    round = diagnose_at(session, n, qubits, relevant, config.repetitions, config.shots,
                        config.verify, false, config.idPrefix);
  } catch (const DecodeFailure&) {
    if (!config.retryWithDoubledShots) throw;
    round = diagnose_at(session, n, qubits, relevant, config.repetitions, 2 * config.shots,
                        config.verify, false, config.idPrefix + "retry/");
  }
  return {round.fault, round.syndrome, session.testsRun, session.ledger, std::move(session.log)};
}

TestSpec make_canary_spec(int qubits, const CouplingSet& relevant, int repetitions, int shots,
                          const ThresholdPolicy& threshold, const std::string& id) {
  TestSpec spec;
  spec.id = id;
  spec.label = "canary";
  spec.couplings.assign(relevant.begin(), relevant.end());
  spec.repetitions = repetitions;
  spec.shots = shots;
  spec.trivial = spec.couplings.empty();
  spec.target = target_bitstring(qubits, spec.couplings, repetitions);
  spec.threshold = threshold(spec);
  return spec;
}

bool canary_test(TestExecutor& executor, int qubits, const CouplingSet& relevant, int repetitions,
                 int shots, const ThresholdPolicy& threshold) {
  const auto spec =
      make_canary_spec(qubits, relevant, repetitions, shots, threshold,
                       "canary/r" + std::to_string(repetitions));
  if (spec.trivial) return true;
  return executor.run(spec).passed;
}

namespace {

std::vector<TestSpec> search_specs(int qubits, std::span<const int> ladder,
                                   const CouplingSet& relevant, int shots,
                                   const ThresholdPolicy& threshold, const std::string& prefix) {
  if (!std::is_sorted(ladder.begin(), ladder.end())) {
    throw InvalidArgument("repetition ladder must be ascending");
  }
  std::vector<TestSpec> specs;
  for (int reps : ladder) {
    specs.push_back(make_canary_spec(qubits, relevant, reps, shots, threshold,
                                     prefix + "/r" + std::to_string(reps)));
  }
  return specs;
}

std::optional<int> smallest_failing(const std::vector<TestSpec>& specs,
                                    const std::vector<TestResult>& results) {
  for (std::size_t i = 0; i < specs.size(); ++i) {
    if (!results[i].passed) return specs[i].repetitions;
  }
  return std::nullopt;
}

}  // namespace

RepetitionSearch repetition_search(TestExecutor& executor, int qubits,
                                   std::span<const int> ladder, const CouplingSet& relevant,
                                   int shots, const ThresholdPolicy& threshold,
                                   const std::string& idPrefix) {
  Session session(executor, threshold);
  auto specs = search_specs(qubits, ladder, relevant, shots, threshold, idPrefix);
  const auto results = session.run(specs, Session::Charge::Canary);
  return {smallest_failing(specs, results), std::move(session.log)};
}

Diagnosis run_multi_fault_protocol(TestExecutor& executor, int n, int qubits,
                                   const CouplingSet& relevant, const ProtocolConfig& config) {
  if (config.ladder.empty()) throw InvalidArgument("empty repetition ladder");
  Session session(executor, config.threshold);
  CouplingSet live = relevant;
  Diagnosis diagnosis;

  std::vector<TestSpec> canary{make_canary_spec(qubits, live, config.canaryRepetitions,
                                                config.shots, config.threshold,
                                                config.idPrefix + "canary")};
  session.run(canary, Session::Charge::Canary);

  const auto give_up = [&](const std::string& why) {
    diagnosis.ledger = session.ledger;
    diagnosis.log = session.log;
    throw IncompleteDiagnosis(why, diagnosis);
  };
  bool clean = false;
  for (int round = 1; round <= config.maxRounds; ++round) {
    if (config.maxFaults > 0 && static_cast<int>(diagnosis.faults.size()) >= config.maxFaults) {
      clean = true;
      break;
    }
    const std::string prefix = config.idPrefix + "round" + std::to_string(round) + "/";
    ++session.ledger.adaptations;  // magnitude search
    auto specs = search_specs(qubits, config.ladder, live, config.shots, config.threshold,
                              prefix + "search");
    const auto results = session.run(specs, Session::Charge::Canary);
    const auto found = smallest_failing(specs, results);
    if (!found || live.empty()) {
      clean = true;
      break;
    }
    session.recharge_as_diagnosis(specs);

    auto rung = static_cast<int>(std::find(config.ladder.begin(), config.ladder.end(), *found) -
                                 config.ladder.begin());
    std::optional<RoundResult> outcome;
    bool retried = false;
    while (!outcome) {
      const int reps = config.ladder[rung];
      const int shots = retried ? 2 * config.shots : config.shots;
      const std::string attempt =
          prefix + "r" + std::to_string(reps) + (retried ? "-retry/" : "/");
      try {
        ++session.ledger.adaptations;  // stage-1 batch chosen by the search
        outcome = diagnose_at(session, n, qubits, live, reps, shots, config.verify, true, attempt);
      } catch (const DecodeFailure&) {
        if (config.retryWithDoubledShots && !retried) {
          retried = true;
          continue;
        }
        retried = false;
        if (--rung < 0) give_up("no repetition count isolates a single fault");
      } catch (const MultiFaultError&) {
        retried = false;
        if (--rung < 0) give_up("syndrome conflict persists at every repetition count");
      }
    }
    diagnosis.faults.push_back({outcome->fault, config.ladder[rung]});
    live.erase(outcome->fault);
  }
  if (!clean) give_up("diagnosis did not terminate within the round budget");

  diagnosis.ledger = session.ledger;
  diagnosis.log = std::move(session.log);
  return diagnosis;
}

TestSpec swap_insertion_variant(const TestSpec& test, const Coupling& c, Qubit spare, int qubits) {
  if (c.contains(spare)) throw InvalidArgument("spare qubit belongs to the coupling under test");
  if (spare >= static_cast<Qubit>(qubits)) throw InvalidArgument("spare qubit outside device");
  if (std::find(test.couplings.begin(), test.couplings.end(), c) == test.couplings.end()) {
    throw InvalidArgument("coupling " + to_string(c) + " is not part of test " + test.id);
  }
  check_repetitions(test.repetitions);
  TestSpec out = test;
  out.id = test.id + "/swap" + std::to_string(spare);
  out.label = test.label + "+swap";
  out.circuit.clear();
  for (const auto& d : test.couplings) {
    if (d == c) continue;
    for (int r = 0; r < test.repetitions; ++r) out.circuit.push_back({GateOp::Kind::Ms, d});
  }
  const Coupling direct = c;
  const Coupling detour(c.a, spare);
  const Coupling exchange(c.b, spare);
  for (int r = 0; r < test.repetitions; ++r) {
    if (r > 0) out.circuit.push_back({GateOp::Kind::Swap, exchange});
    out.circuit.push_back({GateOp::Kind::Ms, r % 2 == 0 ? direct : detour});
  }
  if (std::find(out.couplings.begin(), out.couplings.end(), detour) == out.couplings.end()) {
    out.couplings.push_back(detour);
    std::sort(out.couplings.begin(), out.couplings.end());
  }
  out.target = target_bitstring(qubits, out.circuit);
  out.trivial = false;
  return out;
}

}  // namespace iontest
