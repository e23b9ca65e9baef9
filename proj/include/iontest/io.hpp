#pragma once

// JSON / JSON-lines persistence for plans, devices, results and diagnoses.

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "iontest/protocol.hpp"
#include "iontest/simulator.hpp"

namespace iontest {

std::string plan_to_json(const TestPlan& plan);
TestPlan plan_from_json(const std::string& text);

std::string device_to_json(const DeviceModel& device);
DeviceModel device_from_json(const std::string& text);

/// One JSON-lines record: {"testId": ..., "counts": {...}}.
std::string result_to_jsonl(const TestResult& result);

std::string diagnosis_to_json(const Diagnosis& diagnosis, int qubits);

/// Observed counts for one test id, as read from a replay file.
struct ReplayRecord {
  std::string testId;
  std::map<std::string, long> counts;
  std::optional<long> shots;
};

/// Parses JSON-lines records; blank lines are skipped. Throws ValidationError
/// on malformed lines, negative counts, empty records or a declared shot count
/// that differs from the counts total.
std::vector<ReplayRecord> records_from_jsonl(const std::string& text);

/// Settings shared by the CLI subcommands; every field can come from --config.
struct RunConfig {
  int qubits = 8;
  int shots = 300;
  int repetitions = 4;
  std::vector<int> ladder{2, 4, 8, 16, 32};
  int canaryRepetitions = 4;
  std::map<int, double> thresholds = default_thresholds();
  double thresholdFallback = 0.25;
  bool verify = true;
  int maxFaults = 0;
  std::uint64_t seed = 1;
  int trials = 0;
  std::optional<std::vector<Coupling>> relevant;
  std::optional<DeviceModel> device;

  ThresholdPolicy threshold_policy() const {
    return threshold_by_repetitions(thresholds, thresholdFallback);
  }
  void validate() const;
};

/// Throws ConfigError on unknown keys or invalid values.
RunConfig config_from_json(const std::string& text);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& text);

}  // namespace iontest
