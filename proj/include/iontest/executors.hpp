#pragma once

#include <cstdint>

#include "iontest/protocol.hpp"
#include "iontest/simulator.hpp"

namespace iontest {

/// Runs tests on a simulated device. Each test draws from its own RNG stream
/// seeded by (masterSeed, id, shots), so batch order never changes results.
class SimulatorExecutor : public TestExecutor {
 public:
  SimulatorExecutor(DeviceModel device, std::uint64_t masterSeed, SimulationOptions options = {});

  TestResult run(const TestSpec& spec) override;

  const DeviceModel& device() const noexcept { return device_; }
  long executed() const noexcept { return executed_; }

 private:
  DeviceModel device_;
  std::uint64_t seed_;
  SimulationOptions options_;
  long executed_ = 0;
};

/// Noiseless oracle: every shot lands on the target unless the test touches a fault.
class OracleExecutor : public TestExecutor {
 public:
  explicit OracleExecutor(CouplingSet faults) : faults_(std::move(faults)) {}

  TestResult run(const TestSpec& spec) override;

  long executed() const noexcept { return executed_; }

 private:
  CouplingSet faults_;
  long executed_ = 0;
};

}  // namespace iontest
