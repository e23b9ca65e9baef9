#include "iontest/executors.hpp"

namespace iontest {

SimulatorExecutor::SimulatorExecutor(DeviceModel device, std::uint64_t masterSeed,
                                     SimulationOptions options)
    : device_(std::move(device)), seed_(masterSeed), options_(options) {
  device_.validate();
}

TestResult SimulatorExecutor::run(const TestSpec& spec) {
  if (spec.trivial) return trivial_result(spec);
  ++executed_;
  return simulate_test(device_, spec, test_seed(seed_, spec), options_);
}

TestResult OracleExecutor::run(const TestSpec& spec) {
  if (spec.trivial) return trivial_result(spec);
  ++executed_;
  std::map<std::string, long> counts;
  if (expected_pass(spec, faults_)) {
    counts[spec.target] = spec.shots;
  } else {
    std::string other = spec.target;
    for (auto& ch : other) ch = ch == '1' ? '0' : '1';
    counts[other] = spec.shots;
  }
  return make_result(spec, std::move(counts), spec.shots);
}

}  // namespace iontest
