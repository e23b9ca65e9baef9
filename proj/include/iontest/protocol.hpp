#pragma once

// Test-plan generation, syndrome decoding and the single- and multi-fault
// diagnosis flows.

#include <functional>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "iontest/bitclasses.hpp"
#include "iontest/errors.hpp"

namespace iontest {

using CouplingSet = std::set<Coupling>;

/// All C(N,2) couplings of an N-qubit device.
CouplingSet all_couplings(int qubits);

/// One element of an explicit test circuit. Ms is a nominal XX(pi/2) gate on a
/// physical coupling; Swap is an ideal swap of two physical qubits.
struct GateOp {
  enum class Kind { Ms, Swap };
  Kind kind = Kind::Ms;
  Coupling pair;
  bool operator==(const GateOp&) const = default;
};

/// One runnable single-output circuit.
struct TestSpec {
  std::string id;
  std::string label;
  std::vector<Coupling> couplings;
  int repetitions = 2;
  int shots = 300;
  std::string target;
  double threshold = 0.5;
  /// No coupling survived relevance filtering; recorded as passing, never run.
  bool trivial = false;
  /// Explicit gate order. Empty means `repetitions` MS gates per coupling in
  /// canonical coupling order.
  std::vector<GateOp> circuit;

  /// The gate sequence this test executes.
  std::vector<GateOp> gates() const;
  bool operator==(const TestSpec&) const = default;
};

struct TestPlan {
  int n = 0;
  int qubits = 0;
  std::vector<TestSpec> tests;
  bool operator==(const TestPlan&) const = default;
};

struct TestResult {
  std::string testId;
  /// Bitstring (qubit 0 first) -> occurrences. Executors running in
  /// target-only mode report just the target entry.
  std::map<std::string, long> counts;
  long shots = 0;
  double fidelity = 0.0;
  bool passed = false;
};

/// Fills fidelity and verdict from counts against the spec's target and threshold.
TestResult make_result(const TestSpec& spec, std::map<std::string, long> counts, long shots);

/// Result recorded for a trivially passing (empty) test.
TestResult trivial_result(const TestSpec& spec);

class TestExecutor {
 public:
  virtual ~TestExecutor() = default;
  virtual TestResult run(const TestSpec& spec) = 0;
  /// Runs a non-adaptive batch. Results come back in spec order and must not
  /// depend on execution order.
  virtual std::vector<TestResult> run_batch(std::span<const TestSpec> specs);
};

/// Threshold applied to a spec about to run.
using ThresholdPolicy = std::function<double(const TestSpec&)>;

/// Threshold looked up by repetition count, with a fallback for unlisted counts.
ThresholdPolicy threshold_by_repetitions(std::map<int, double> table, double fallback);

/// Per-repetition thresholds used when nothing else is configured (2-MS 0.45, 4-MS 0.25).
std::map<int, double> default_thresholds();

/// Cost accounting for a diagnosis session.
///
/// adaptations counts rounds whose content depends on earlier results: each
/// magnitude search, each stage-1 batch issued after a search, each decode
/// round after stage 1 (even when its follow-up batch is empty), and each
/// verification. circuitRuns counts shots spent in diagnosis rounds;
/// canaryRuns counts canary circuits (the trigger canary and the final search
/// that finds nothing); shotsTotal counts every shot.
struct CostLedger {
  long adaptations = 0;
  long circuitRuns = 0;
  long shotsTotal = 0;
  long canaryRuns = 0;
  bool operator==(const CostLedger&) const = default;
};

struct LogEntry {
  TestSpec spec;
  TestResult result;
};

struct DiagnosedFault {
  Coupling coupling;
  int repetitions = 0;
};

struct Diagnosis {
  std::vector<DiagnosedFault> faults;
  CostLedger ledger;
  std::vector<LogEntry> log;
};

/// TooManyFaults raised mid-diagnosis; carries the faults isolated so far.
class IncompleteDiagnosis : public TooManyFaults {
 public:
  IncompleteDiagnosis(const std::string& what, Diagnosis partial)
      : TooManyFaults(what), partial_(std::move(partial)) {}
  const Diagnosis& partial() const noexcept { return partial_; }

 private:
  Diagnosis partial_;
};

struct ProtocolConfig {
  /// Repetitions for the standalone single-fault protocol.
  int repetitions = 4;
  int shots = 300;
  std::vector<int> ladder{2, 4, 8, 16, 32};
  int canaryRepetitions = 4;
  ThresholdPolicy threshold = threshold_by_repetitions(default_thresholds(), 0.25);
  /// Point test on the identified coupling; one extra adaptation.
  bool verify = false;
  /// On a decode failure, rerun stage 1 and the adaptive round once with doubled shots.
  bool retryWithDoubledShots = true;
  /// Stop the multi-fault flow after this many faults (0 = until the search is clean).
  int maxFaults = 0;
  /// Upper bound on diagnosis rounds in the multi-fault flow.
  int maxRounds = 64;
  /// Prefix for generated spec ids.
  std::string idPrefix;
};

/// Bit q is 1 iff repetitions/2 is odd and q has odd degree in `couplings`.
std::string target_bitstring(int qubits, std::span<const Coupling> couplings, int repetitions);

/// Ideal output of an explicit MS/swap circuit. Throws when some logical pair
/// receives an odd number of MS gates.
std::string target_bitstring(int qubits, std::span<const GateOp> circuit);

/// Couplings of `relevant` with both endpoints in `members`.
std::vector<Coupling> couplings_within(std::span<const Qubit> members, const CouplingSet& relevant);

TestPlan build_stage1_plan(int n, int qubits, const CouplingSet& relevant, int repetitions,
                           int shots, double threshold, const std::string& idPrefix = "");

/// Failing (i,b) tests of a stage-1 plan. Throws IncompletePlan when a
/// non-trivial test has no result.
Syndrome decode_stage1(std::span<const TestResult> results, const TestPlan& plan);

/// Restricted [i,=] tests over the bits the syndrome leaves free; empty when
/// the syndrome already pins a single candidate.
TestPlan build_adaptive_plan(int n, int qubits, const Syndrome& s, const CouplingSet& relevant,
                             int repetitions, int shots, double threshold,
                             const std::string& idPrefix = "");

/// Reconstructs the faulty pair from the syndrome and the adaptive verdicts: a
/// failing restricted test means equal bits at its two positions. The
/// endpoint whose highest free bit is 0 anchors the reconstruction.
Coupling identify_single_fault(int n, const Syndrome& s, const TestPlan& adaptivePlan,
                               std::span<const TestResult> adaptiveResults);

/// Noiseless oracle: a test fails iff it contains a hypothesized fault.
bool expected_pass(const TestSpec& test, const CouplingSet& faults);

struct SingleFaultOutcome {
  Coupling fault;
  Syndrome syndrome;
  int testsRun = 0;
  CostLedger ledger;
  std::vector<LogEntry> log;
};

SingleFaultOutcome run_single_fault_protocol(TestExecutor& executor, int n, int qubits,
                                             const CouplingSet& relevant,
                                             const ProtocolConfig& config);

TestSpec make_canary_spec(int qubits, const CouplingSet& relevant, int repetitions, int shots,
                          const ThresholdPolicy& threshold, const std::string& id);

/// True when the canary passes.
bool canary_test(TestExecutor& executor, int qubits, const CouplingSet& relevant, int repetitions,
                 int shots, const ThresholdPolicy& threshold);

struct RepetitionSearch {
  std::optional<int> repetitions;
  std::vector<LogEntry> log;
};

/// Runs one canary per ladder entry as a single batch and reports the
/// smallest failing repetition count.
RepetitionSearch repetition_search(TestExecutor& executor, int qubits,
                                   std::span<const int> ladder, const CouplingSet& relevant,
                                   int shots, const ThresholdPolicy& threshold,
                                   const std::string& idPrefix = "search");

Diagnosis run_multi_fault_protocol(TestExecutor& executor, int n, int qubits,
                                   const CouplingSet& relevant, const ProtocolConfig& config);

/// Rewrites the repeated gates on `c` as gate{a,b}, swap{b,spare}, gate{a,spare}, ...
/// so that a fault cancelling under repetition stays visible.
TestSpec swap_insertion_variant(const TestSpec& test, const Coupling& c, Qubit spare, int qubits);

}  // namespace iontest
