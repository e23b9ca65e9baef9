#include "iontest/replay.hpp"

#include "iontest/errors.hpp"

namespace iontest {

ReplayExecutor::ReplayExecutor(const std::vector<ReplayRecord>& records) {
  for (const auto& r : records) {
    if (!records_.emplace(r.testId, r).second) {
      throw ValidationError("duplicate record for test " + r.testId);
    }
  }
}

ReplayExecutor ReplayExecutor::from_file(const std::filesystem::path& path) {
  return ReplayExecutor(records_from_jsonl(read_text_file(path)));
}

TestResult ReplayExecutor::run(const TestSpec& spec) {
  return run_batch(std::span<const TestSpec>(&spec, 1)).front();
}

std::vector<TestResult> ReplayExecutor::run_batch(std::span<const TestSpec> specs) {
  missing_.clear();
  for (const auto& s : specs) {
    if (!s.trivial && !records_.contains(s.id)) missing_.push_back(s);
  }
  if (!missing_.empty()) {
    std::vector<std::string> ids;
    std::string list;
    for (const auto& s : missing_) {
      ids.push_back(s.id);
      list += (list.empty() ? "" : ", ") + s.id;
    }
    throw MissingRecord("no replay record for: " + list, std::move(ids));
  }
  std::vector<TestResult> out;
  out.reserve(specs.size());
  for (const auto& s : specs) {
    if (s.trivial) {
      out.push_back(trivial_result(s));
      continue;
    }
    const auto& rec = records_.at(s.id);
    long total = 0;
    for (const auto& [bits, n] : rec.counts) {
      if (bits.size() != s.target.size()) {
        throw ValidationError("record " + s.id + " has bitstring '" + bits + "' of the wrong length");
      }
      total += n;
    }
    out.push_back(make_result(s, rec.counts, total));
  }
  return out;
}

}  // namespace iontest
