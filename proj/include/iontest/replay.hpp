#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "iontest/io.hpp"
#include "iontest/protocol.hpp"

namespace iontest {

/// Serves recorded hardware counts by test id; verdicts are recomputed from
/// each spec's target and threshold.
class ReplayExecutor : public TestExecutor {
 public:
  explicit ReplayExecutor(const std::vector<ReplayRecord>& records);
  static ReplayExecutor from_file(const std::filesystem::path& path);

  TestResult run(const TestSpec& spec) override;
  /// Checks the whole batch first and reports every missing id at once.
  std::vector<TestResult> run_batch(std::span<const TestSpec> specs) override;

  /// Specs requested without a matching record in the last failed call.
  const std::vector<TestSpec>& missing_specs() const noexcept { return missing_; }

 private:
  std::map<std::string, ReplayRecord> records_;
  std::vector<TestSpec> missing_;
};

}  // namespace iontest
