#include <gtest/gtest.h>

#include <filesystem>

#include "iontest/errors.hpp"
#include "iontest/executors.hpp"
#include "iontest/io.hpp"
#include "iontest/replay.hpp"

using namespace iontest;

namespace {

std::string jsonl(const std::vector<TestResult>& results) {
  std::string out;
  for (const auto& r : results) out += result_to_jsonl(r) + "\n";
  return out;
}

// Answers every requested spec from the oracle, the way a lab would fill in
// a replay file from the plan written on a missing-record exit.
void record_missing(const ReplayExecutor& replay, OracleExecutor& lab, std::vector<ReplayRecord>& records) {
  for (const auto& s : replay.missing_specs()) {
    const auto r = lab.run(s);
    records.push_back({r.testId, r.counts, std::nullopt});
  }
}

}  // namespace

TEST(PlanJson, RoundTrip) {
  auto plan = build_stage1_plan(4, 11, all_couplings(11), 4, 300, 0.25);
  plan.tests.push_back(swap_insertion_variant(plan.tests[1], plan.tests[1].couplings.front(), 10, 11));
  const auto back = plan_from_json(plan_to_json(plan));
  EXPECT_EQ(back.n, 4);
  EXPECT_EQ(back.qubits, 11);
  ASSERT_EQ(back.tests.size(), plan.tests.size());
  for (std::size_t i = 0; i < plan.tests.size(); ++i) {
    const auto& a = plan.tests[i];
    const auto& b = back.tests[i];
    EXPECT_EQ(a.id, b.id);
    EXPECT_EQ(a.label, b.label);
    EXPECT_EQ(a.couplings, b.couplings);
    EXPECT_EQ(a.repetitions, b.repetitions);
    EXPECT_EQ(a.shots, b.shots);
    EXPECT_EQ(a.target, b.target);
    EXPECT_EQ(a.threshold, b.threshold);
    EXPECT_EQ(a.trivial, b.trivial);
    EXPECT_EQ(a.circuit.size(), b.circuit.size());
  }
  EXPECT_NE(plan_to_json(plan).find("\"virtualQubits\""), std::string::npos);
}

TEST(PlanJson, Rejects) {
  EXPECT_THROW(plan_from_json("{"), ValidationError);
  EXPECT_THROW(plan_from_json(R"({"n":3,"N":8})"), ValidationError);
  EXPECT_THROW(plan_from_json(
                   R"({"n":3,"N":8,"tests":[{"id":"x","couplings":[[1,1]],"repetitions":2,"shots":10,"target":"00000000","threshold":0.5}]})"),
               ValidationError);
  EXPECT_THROW(plan_from_json(
                   R"({"n":3,"N":8,"tests":[{"id":"x","couplings":[[0,1]],"repetitions":2,"shots":0,"target":"00000000","threshold":0.5}]})"),
               ValidationError);
}

TEST(DeviceJson, RoundTripAndStrictness) {
  DeviceModel d;
  d.qubits = 8;
  d.couplingError[Coupling(3, 4)] = -0.15;
  d.noise.amplitudeLaw = AmplitudeLaw::Gaussian;
  d.noise.amplitude = 0.1;
  d.noise.phaseNoise = PhaseNoise{};
  d.noise.readoutFlip = 0.01;
  const auto back = device_from_json(device_to_json(d));
  EXPECT_EQ(back.qubits, 8);
  EXPECT_DOUBLE_EQ(back.error_of(Coupling(3, 4)), -0.15);
  EXPECT_EQ(back.noise.amplitudeLaw, AmplitudeLaw::Gaussian);
  EXPECT_DOUBLE_EQ(back.noise.amplitude, 0.1);
  ASSERT_TRUE(back.noise.phaseNoise.has_value());
  EXPECT_DOUBLE_EQ(back.noise.readoutFlip, 0.01);

  const auto minimal = device_from_json(R"({"N":4,"couplingErrors":[[0,1,0.1]],
      "noise":{"amplitudeStd":0.05,"residualOddPop":0.0,"readoutFlip":0.0}})");
  EXPECT_EQ(minimal.noise.amplitudeLaw, AmplitudeLaw::Gaussian);
  EXPECT_FALSE(minimal.noise.phaseNoise.has_value());

  EXPECT_THROW(device_from_json(R"({"N":4,"bogus":1})"), ConfigError);
  EXPECT_THROW(device_from_json(R"({"N":4,"couplingErrors":[[0,9,0.1]]})"), ConfigError);
  EXPECT_THROW(device_from_json(R"({"N":4,"couplingErrors":[[0,1]]})"), ConfigError);
  EXPECT_THROW(device_from_json(R"({"N":4,"noise":{"amplitudeStd":0.1,"amplitudeHalfWidth":0.1}})"),
               ConfigError);
  EXPECT_THROW(device_from_json("not json"), ConfigError);
}

TEST(RunConfigJson, ParsesAndValidates) {
  const auto c = config_from_json(R"({"qubits":8,"shots":500,"ladder":[2,4,8],
      "thresholds":{"2":0.5,"8":0.3},"seed":9,"relevant":[[0,1],[2,3]]})");
  EXPECT_EQ(c.shots, 500);
  EXPECT_EQ(c.ladder, (std::vector<int>{2, 4, 8}));
  EXPECT_EQ(c.seed, 9U);
  ASSERT_TRUE(c.relevant.has_value());
  EXPECT_EQ(c.relevant->size(), 2U);
  TestSpec t;
  t.repetitions = 8;
  EXPECT_DOUBLE_EQ(c.threshold_policy()(t), 0.3);
  t.repetitions = 4;
  EXPECT_DOUBLE_EQ(c.threshold_policy()(t), c.thresholdFallback);

  const auto withDevice = config_from_json(R"({"device":{"N":16}})");
  EXPECT_EQ(withDevice.qubits, 16);

  for (const char* bad : {R"({"shots":0})", R"({"repetitions":3})", R"({"ladder":[4,2]})",
                          R"({"thresholds":{"2":1.5}})", R"({"unknown":1})", R"({"relevant":[[0,12]]})",
                          R"({"qubits":8,"device":{"N":16}})", "[1,2]"}) {
    EXPECT_THROW(config_from_json(bad), ConfigError) << bad;
  }
}

TEST(Jsonl, RecordsValidation) {
  const auto recs = records_from_jsonl(
      "{\"testId\":\"a\",\"counts\":{\"0101\":3,\"0000\":1}}\n\n{\"testId\":\"b\",\"counts\":{\"11\":2},\"shots\":2}\n");
  ASSERT_EQ(recs.size(), 2U);
  EXPECT_EQ(recs[0].counts.at("0101"), 3);
  EXPECT_EQ(recs[1].shots, 2);
  EXPECT_THROW(records_from_jsonl(R"({"testId":"a","counts":{"01":-1,"00":3}})"), ValidationError);
  EXPECT_THROW(records_from_jsonl(R"({"testId":"a","counts":{"0x":1}})"), ValidationError);
  EXPECT_THROW(records_from_jsonl(R"({"testId":"a","counts":{}})"), ValidationError);
  EXPECT_THROW(records_from_jsonl(R"({"testId":"a","counts":{"01":1},"shots":5})"), ValidationError);
  EXPECT_THROW(records_from_jsonl(R"({"counts":{"01":1}})"), ValidationError);
}

TEST(Jsonl, ResultRoundTrip) {
  TestResult r{"stage1/(0,0)", {{"01010101", 290}, {"01010100", 10}}, 300, 0, false};
  const auto recs = records_from_jsonl(jsonl({r}));
  ASSERT_EQ(recs.size(), 1U);
  EXPECT_EQ(recs[0].testId, r.testId);
  EXPECT_EQ(recs[0].counts, r.counts);
}

TEST(Replay, MissingRecordsListedTogether) {
  const auto plan = build_stage1_plan(3, 8, all_couplings(8), 4, 300, 0.25);
  ReplayExecutor replay({{plan.tests[0].id, {{plan.tests[0].target, 300}}, std::nullopt}});
  try {
    replay.run_batch(plan.tests);
    FAIL() << "expected MissingRecord";
  } catch (const MissingRecord& e) {
    EXPECT_EQ(e.missing().size(), plan.tests.size() - 1);
  }
  EXPECT_EQ(replay.missing_specs().size(), plan.tests.size() - 1);
  EXPECT_THROW(ReplayExecutor({{"a", {{"0", 1}}, std::nullopt}, {"a", {{"0", 1}}, std::nullopt}}),
               ValidationError);
}

TEST(Replay, VerdictsRecomputedFromSpec) {
  const auto plan = build_stage1_plan(3, 8, all_couplings(8), 4, 300, 0.25);
  const auto& t = plan.tests[2];
  ReplayExecutor replay({{t.id, {{t.target, 60}, {"11111111", 240}}, std::nullopt}});
  const auto r = replay.run(t);
  EXPECT_DOUBLE_EQ(r.fidelity, 0.2);
  EXPECT_FALSE(r.passed);
  EXPECT_EQ(r.shots, 300);
  ReplayExecutor shortBits({{t.id, {{"0101", 10}}, std::nullopt}});
  EXPECT_THROW(shortBits.run(t), ValidationError);
}

TEST(Replay, EmptySyndromeSessionCompletesIncrementally) {
  OracleExecutor lab(CouplingSet{{3, 4}});
  std::vector<ReplayRecord> records;
  ProtocolConfig cfg;
  cfg.verify = false;
  int rounds = 0;
  for (;; ++rounds) {
    ASSERT_LT(rounds, 5);
    ReplayExecutor replay(records);
    try {
      const auto out = run_single_fault_protocol(replay, 3, 8, all_couplings(8), cfg);
      EXPECT_EQ(out.fault, Coupling(3, 4));
      EXPECT_EQ(out.syndrome.length, 0);
      break;
    } catch (const MissingRecord&) {
      record_missing(replay, lab, records);
    }
  }
  // stage 1, then the two restricted tests
  EXPECT_EQ(rounds, 2);
  EXPECT_EQ(records.size(), 8U);

  // the same records written to disk replay identically
  const auto dir = std::filesystem::temp_directory_path() / "iontest_io_test";
  std::filesystem::create_directories(dir);
  std::string text;
  for (const auto& r : records) {
    TestResult tr{r.testId, r.counts, 0, 0, false};
    text += result_to_jsonl(tr) + "\n";
  }
  write_text_file(dir / "replay.jsonl", text);
  auto fromDisk = ReplayExecutor::from_file(dir / "replay.jsonl");
  EXPECT_EQ(run_single_fault_protocol(fromDisk, 3, 8, all_couplings(8), cfg).fault, Coupling(3, 4));
  std::filesystem::remove_all(dir);
  EXPECT_THROW(read_text_file(dir / "missing.jsonl"), ConfigError);
}

TEST(DiagnosisJson, ContainsLedger) {
  OracleExecutor lab(CouplingSet{{2, 6}});
  ProtocolConfig cfg;
  const auto d = run_multi_fault_protocol(lab, 3, 8, all_couplings(8), cfg);
  const auto text = diagnosis_to_json(d, 8);
  EXPECT_NE(text.find("\"adaptations\""), std::string::npos);
  EXPECT_NE(text.find("[\n        2,\n        6\n      ]"), std::string::npos);
}
