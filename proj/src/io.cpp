#include "iontest/io.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "iontest/errors.hpp"

namespace iontest {

using nlohmann::json;

namespace {

json coupling_json(const Coupling& c) { return json::array({c.a, c.b}); }

Coupling coupling_from(const json& j) {
  if (!j.is_array() || j.size() < 2) throw ValidationError("coupling must be [a, b]");
  return Coupling(j.at(0).get<Qubit>(), j.at(1).get<Qubit>());
}

json spec_json(const TestSpec& t) {
  json j{{"id", t.id},
         {"classLabel", t.label},
         {"couplings", json::array()},
         {"repetitions", t.repetitions},
         {"shots", t.shots},
         {"target", t.target},
         {"threshold", t.threshold}};
  for (const auto& c : t.couplings) j["couplings"].push_back(coupling_json(c));
  if (t.trivial) j["trivial"] = true;
  if (!t.circuit.empty()) {
    json ops = json::array();
    for (const auto& op : t.circuit) {
      ops.push_back({op.kind == GateOp::Kind::Ms ? "ms" : "swap", op.pair.a, op.pair.b});
    }
    j["circuit"] = ops;
  }
  return j;
}

TestSpec spec_from(const json& j) {
  TestSpec t;
  t.id = j.at("id").get<std::string>();
  t.label = j.value("classLabel", "");
  for (const auto& c : j.at("couplings")) t.couplings.push_back(coupling_from(c));
  t.repetitions = j.at("repetitions").get<int>();
  t.shots = j.at("shots").get<int>();
  t.target = j.at("target").get<std::string>();
  t.threshold = j.at("threshold").get<double>();
  t.trivial = j.value("trivial", false);
  if (j.contains("circuit")) {
    for (const auto& op : j.at("circuit")) {
      const auto kind = op.at(0).get<std::string>();
      if (kind != "ms" && kind != "swap") throw ValidationError("unknown circuit op " + kind);
      t.circuit.push_back({kind == "ms" ? GateOp::Kind::Ms : GateOp::Kind::Swap,
                           Coupling(op.at(1).get<Qubit>(), op.at(2).get<Qubit>())});
    }
  }
  if (t.shots <= 0) throw ValidationError("test " + t.id + " needs positive shots");
  if (t.threshold < 0.0 || t.threshold > 1.0) throw ValidationError("threshold outside [0,1]");
  return t;
}

json result_json(const TestResult& r) {
  json counts = json::object();
  for (const auto& [bits, n] : r.counts) counts[bits] = n;
  return {{"testId", r.testId}, {"counts", counts}};
}

json noise_json(const NoiseModel& n) {
  json j;
  if (n.amplitudeLaw == AmplitudeLaw::Gaussian) {
    j["amplitudeStd"] = n.amplitude;
  } else {
    j["amplitudeHalfWidth"] = n.amplitude;
  }
  j["residualOddPop"] = n.residualOddPopulation;
  j["readoutFlip"] = n.readoutFlip;
  if (n.phaseNoise) {
    const auto& p = *n.phaseNoise;
    j["phaseNoise"] = {{"rms", p.rms},
                       {"fMin", p.fMin},
                       {"fMax", p.fMax},
                       {"components", p.components},
                       {"gateTime", p.gateTime}};
  }
  return j;
}

void check_keys(const json& j, const std::set<std::string>& allowed, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + " must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    if (!allowed.contains(key)) throw ConfigError("unknown key '" + key + "' in " + where);
  }
}

NoiseModel noise_from(const json& j) {
  check_keys(j, {"amplitudeStd", "amplitudeHalfWidth", "residualOddPop", "phaseNoise", "readoutFlip"},
             "noise");
  NoiseModel n;
  if (j.contains("amplitudeStd") && j.contains("amplitudeHalfWidth")) {
    throw ConfigError("give either amplitudeStd or amplitudeHalfWidth, not both");
  }
  if (j.contains("amplitudeStd")) {
    n.amplitudeLaw = AmplitudeLaw::Gaussian;
    n.amplitude = j.at("amplitudeStd").get<double>();
  } else if (j.contains("amplitudeHalfWidth")) {
    n.amplitudeLaw = AmplitudeLaw::Uniform;
    n.amplitude = j.at("amplitudeHalfWidth").get<double>();
  }
  n.residualOddPopulation = j.value("residualOddPop", n.residualOddPopulation);
  n.readoutFlip = j.value("readoutFlip", n.readoutFlip);
  if (j.contains("phaseNoise") && !j.at("phaseNoise").is_null()) {
    const auto& p = j.at("phaseNoise");
    check_keys(p, {"rms", "fMin", "fMax", "components", "gateTime"}, "phaseNoise");
    PhaseNoise pn;
    pn.rms = p.value("rms", pn.rms);
    pn.fMin = p.value("fMin", pn.fMin);
    pn.fMax = p.value("fMax", pn.fMax);
    pn.components = p.value("components", pn.components);
    pn.gateTime = p.value("gateTime", pn.gateTime);
    n.phaseNoise = pn;
  }
  return n;
}

DeviceModel device_from(const json& j) {
  check_keys(j, {"N", "couplingErrors", "noise"}, "device");
  DeviceModel d;
  d.qubits = j.at("N").get<int>();
  if (j.contains("couplingErrors")) {
    for (const auto& e : j.at("couplingErrors")) {
      if (!e.is_array() || e.size() != 3) throw ConfigError("coupling error must be [a, b, epsRel]");
      d.couplingError[Coupling(e.at(0).get<Qubit>(), e.at(1).get<Qubit>())] = e.at(2).get<double>();
    }
  }
  if (j.contains("noise")) d.noise = noise_from(j.at("noise"));
  d.validate();
  return d;
}

template <typename F>
auto config_guard(F&& f) {
  try {
    return f();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed configuration: ") + e.what());
  } catch (const InvalidArgument& e) {
    throw ConfigError(e.what());
  } catch (const ValidationError& e) {
    throw ConfigError(e.what());
  }
}

template <typename F>
auto validation_guard(F&& f) {
  try {
    return f();
  } catch (const json::exception& e) {
    throw ValidationError(std::string("malformed document: ") + e.what());
  } catch (const InvalidArgument& e) {
    throw ValidationError(e.what());
  }
}

}  // namespace

std::string plan_to_json(const TestPlan& plan) {
  json j{{"n", plan.n}, {"N", plan.qubits}, {"tests", json::array()}};
  json virt = json::array();
  for (Qubit q = static_cast<Qubit>(plan.qubits); q < (Qubit{1} << plan.n); ++q) virt.push_back(q);
  j["virtualQubits"] = virt;
  for (const auto& t : plan.tests) j["tests"].push_back(spec_json(t));
  return j.dump(2) + "\n";
}

TestPlan plan_from_json(const std::string& text) {
  return validation_guard([&] {
    const auto j = json::parse(text);
    TestPlan plan;
    plan.n = j.at("n").get<int>();
    plan.qubits = j.at("N").get<int>();
    for (const auto& t : j.at("tests")) plan.tests.push_back(spec_from(t));
    return plan;
  });
}

std::string device_to_json(const DeviceModel& device) {
  json errors = json::array();
  for (const auto& [c, eps] : device.couplingError) errors.push_back({c.a, c.b, eps});
  json j{{"N", device.qubits}, {"couplingErrors", errors}, {"noise", noise_json(device.noise)}};
  return j.dump(2) + "\n";
}

DeviceModel device_from_json(const std::string& text) {
  return config_guard([&] { return device_from(json::parse(text)); });
}

std::string result_to_jsonl(const TestResult& result) { return result_json(result).dump(); }

std::string diagnosis_to_json(const Diagnosis& diagnosis, int qubits) {
  json faults = json::array();
  for (const auto& f : diagnosis.faults) {
    faults.push_back({{"coupling", coupling_json(f.coupling)}, {"repetitions", f.repetitions}});
  }
  json log = json::array();
  for (const auto& e : diagnosis.log) {
    json r = result_json(e.result);
    r["shots"] = e.result.shots;
    r["fidelity"] = e.result.fidelity;
    r["passed"] = e.result.passed;
    log.push_back({{"test", spec_json(e.spec)}, {"result", r}});
  }
  const auto& l = diagnosis.ledger;
  json j{{"N", qubits},
         {"faults", faults},
         {"ledger",
          {{"adaptations", l.adaptations},
           {"circuitRuns", l.circuitRuns},
           {"shotsTotal", l.shotsTotal},
           {"canaryRuns", l.canaryRuns}}},
         {"log", log}};
  return j.dump(2) + "\n";
}

std::vector<ReplayRecord> records_from_jsonl(const std::string& text) {
  std::vector<ReplayRecord> out;
  std::istringstream in(text);
  std::string line;
  int lineNo = 0;
  while (std::getline(in, line)) {
    ++lineNo;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = "record on line " + std::to_string(lineNo);
    ReplayRecord rec;
    try {
      const auto j = json::parse(line);
      rec.testId = j.at("testId").get<std::string>();
      for (const auto& [bits, n] : j.at("counts").items()) rec.counts[bits] = n.get<long>();
      if (j.contains("shots")) rec.shots = j.at("shots").get<long>();
    } catch (const json::exception& e) {
      throw ValidationError(where + ": " + e.what());
    }
    long total = 0;
    for (const auto& [bits, n] : rec.counts) {
      if (n < 0) throw ValidationError(where + ": negative count");
      if (bits.find_first_not_of("01") != std::string::npos) {
        throw ValidationError(where + ": bitstring '" + bits + "' is not binary");
      }
      total += n;
    }
    if (total <= 0) throw ValidationError(where + ": no shots recorded for " + rec.testId);
    if (rec.shots && *rec.shots != total) {
      throw ValidationError(where + ": counts sum to " + std::to_string(total) + " but " +
                            std::to_string(*rec.shots) + " shots are declared");
    }
    out.push_back(std::move(rec));
  }
  return out;
}

void RunConfig::validate() const {
  if (qubits < 2) throw ConfigError("qubits must be at least 2");
  if (shots <= 0) throw ConfigError("shots must be positive");
  if (trials < 0) throw ConfigError("trials must be non-negative");
  const auto even = [](int r) { return r >= 2 && r % 2 == 0; };
  if (!even(repetitions) || !even(canaryRepetitions)) throw ConfigError("repetitions must be even and >= 2");
  if (ladder.empty() || !std::is_sorted(ladder.begin(), ladder.end())) {
    throw ConfigError("ladder must be a non-empty ascending list");
  }
  for (int r : ladder) {
    if (!even(r)) throw ConfigError("ladder entries must be even and >= 2");
  }
  for (const auto& [r, t] : thresholds) {
    if (!(t > 0.0 && t < 1.0)) throw ConfigError("thresholds must lie in (0, 1)");
  }
  if (!(thresholdFallback > 0.0 && thresholdFallback < 1.0)) {
    throw ConfigError("thresholdFallback must lie in (0, 1)");
  }
  if (maxFaults < 0) throw ConfigError("maxFaults must be non-negative");
  if (relevant) {
    for (const auto& c : *relevant) {
      if (c.b >= static_cast<Qubit>(qubits)) throw ConfigError("relevant coupling outside device");
    }
  }
  if (device && device->qubits != qubits) throw ConfigError("device N differs from qubits");
}

RunConfig config_from_json(const std::string& text) {
  return config_guard([&] {
    const auto j = json::parse(text);
    check_keys(j,
               {"qubits", "shots", "repetitions", "ladder", "canaryRepetitions", "thresholds",
                "thresholdFallback", "verify", "maxFaults", "seed", "trials", "relevant", "device"},
               "config");
    RunConfig c;
    c.qubits = j.value("qubits", c.qubits);
    c.shots = j.value("shots", c.shots);
    c.repetitions = j.value("repetitions", c.repetitions);
    if (j.contains("ladder")) c.ladder = j.at("ladder").get<std::vector<int>>();
    c.canaryRepetitions = j.value("canaryRepetitions", c.canaryRepetitions);
    if (j.contains("thresholds")) {
      c.thresholds.clear();
      for (const auto& [key, value] : j.at("thresholds").items()) {
        c.thresholds[std::stoi(key)] = value.get<double>();
      }
    }
    c.thresholdFallback = j.value("thresholdFallback", c.thresholdFallback);
    c.verify = j.value("verify", c.verify);
    c.maxFaults = j.value("maxFaults", c.maxFaults);
    c.seed = j.value("seed", c.seed);
    c.trials = j.value("trials", c.trials);
    if (j.contains("relevant")) {
      std::vector<Coupling> rel;
      for (const auto& e : j.at("relevant")) rel.push_back(coupling_from(e));
      c.relevant = rel;
    }
    if (j.contains("device")) {
      c.device = device_from(j.at("device"));
      if (!j.contains("qubits")) c.qubits = c.device->qubits;
    }
    c.validate();
    return c;
  });
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << text;
  if (!out) throw ConfigError("write failed for " + path.string());
}

}  // namespace iontest
