#include "iontest/simulator.hpp"

#include <algorithm>
#include <bit>
#include <iostream>
#include <mutex>
#include <set>

namespace iontest {

namespace {

constexpr double kPi = std::numbers::pi;

struct DiagonalWalk {
  int m;
  Eigen::MatrixXd coupling;  // symmetric, zero diagonal
  double constant = 0.0;     // terms on a repeated local index collapse to a phase

  DiagonalWalk(int m_, std::span<const XXTerm> terms) : m(m_), coupling(Eigen::MatrixXd::Zero(m_, m_)) {
    for (const auto& t : terms) {
      if (t.a < 0 || t.b < 0 || t.a >= m || t.b >= m) throw InvalidArgument("XX term outside register");
      if (t.a == t.b) {
        constant += t.theta;
      } else {
        coupling(t.a, t.b) += t.theta;
        coupling(t.b, t.a) += t.theta;
      }
    }
  }

  /// Phi(x) = sum theta sigma_a sigma_b over the low `bits` bits of x, other bits 0.
  double phase_of(std::uint64_t x, Eigen::VectorXd& sigma, Eigen::VectorXd& field) const {
    for (int j = 0; j < m; ++j) sigma(j) = ((x >> j) & 1U) ? -1.0 : 1.0;
    field.noalias() = coupling * sigma;
    return constant + 0.5 * sigma.dot(field);
  }

  /// Calls visit(x, Phi(x)) for every x < 2^bits in Gray-code order.
  template <typename Visit>
  void walk(int bits, Visit&& visit) const {
    Eigen::VectorXd sigma(m);
    Eigen::VectorXd field(m);
    std::uint64_t x = 0;
    double phi = phase_of(x, sigma, field);
    const std::uint64_t count = std::uint64_t{1} << bits;
    for (std::uint64_t step = 0;; ) {
      visit(x, phi);
      if (++step == count) break;
      const int j = std::countr_zero(step);
      x ^= std::uint64_t{1} << j;
      if ((step & 255U) == 0) {
        phi = phase_of(x, sigma, field);  // resynchronize accumulated rounding
        continue;
      }
      phi -= 2.0 * sigma(j) * field(j);
      sigma(j) = -sigma(j);
      field.noalias() += (2.0 * sigma(j)) * coupling.col(j);
    }
  }
};

std::mutex& residual_mutex() {
  static std::mutex mu;
  return mu;
}

double residual_angle_cached(double p) {
  static std::map<double, double> cache;
  std::lock_guard<std::mutex> lock(residual_mutex());
  const auto it = cache.find(p);
  if (it != cache.end()) return it->second;
  const double theta = calibrate_residual_angle(p);
  cache.emplace(p, theta);
  return theta;
}

double draw_amplitude(const NoiseModel& noise, std::mt19937_64& rng) {
  if (noise.amplitude <= 0.0) return 0.0;
  if (noise.amplitudeLaw == AmplitudeLaw::Gaussian) {
    return std::normal_distribution<double>(0.0, noise.amplitude)(rng);
  }
  return std::uniform_real_distribution<double>(-noise.amplitude, noise.amplitude)(rng);
}

/// Phase offsets for `gates` consecutive gates from one draw of the 1/f process.
std::vector<double> phase_offsets(const std::optional<PhaseNoise>& pn, std::size_t gates,
                                  std::mt19937_64& rng) {
  std::vector<double> out(gates, 0.0);
  if (!pn || pn->rms <= 0.0 || pn->components <= 0) return out;
  const int k = pn->components;
  const double amp = pn->rms * std::sqrt(2.0 / k);
  std::uniform_real_distribution<double> phase(0.0, 2 * kPi);
  for (int c = 0; c < k; ++c) {
    const double f = k == 1 ? pn->fMin
                            : pn->fMin * std::pow(pn->fMax / pn->fMin, static_cast<double>(c) / (k - 1));
    const double psi = phase(rng);
    for (std::size_t g = 0; g < gates; ++g) {
      out[g] += amp * std::sin(2 * kPi * f * static_cast<double>(g) * pn->gateTime + psi);
    }
  }
  return out;
}

std::uint64_t target_mask(const std::string& target, const std::vector<Qubit>& involved,
                          bool& reachable) {
  reachable = true;
  std::uint64_t mask = 0;
  for (std::size_t q = 0; q < target.size(); ++q) {
    if (target[q] != '1') continue;
    const auto it = std::find(involved.begin(), involved.end(), static_cast<Qubit>(q));
    if (it == involved.end()) {
      reachable = false;
      return 0;
    }
    mask |= std::uint64_t{1} << (it - involved.begin());
  }
  return mask;
}

Eigen::VectorXd output_probabilities(const RealizedCircuit& circuit, Backend backend) {
  if (backend == Backend::Diagonal) {
    const auto terms = diagonal_terms(circuit);
    return xx_output_state(static_cast<int>(circuit.involved.size()), terms).cwiseAbs2();
  }
  return run_statevector(circuit).probabilities();
}

double target_probability(const RealizedCircuit& circuit, Backend backend,
                          const std::string& target) {
  bool reachable = true;
  const auto mask = target_mask(target, circuit.involved, reachable);
  if (!reachable) return 0.0;
  if (backend == Backend::Diagonal) {
    const auto terms = diagonal_terms(circuit);
    return xx_target_probability(static_cast<int>(circuit.involved.size()), terms, mask);
  }
  const auto state = run_statevector(circuit);
  return std::norm(state.amplitudes()(static_cast<Eigen::Index>(mask)));
}

Backend choose_backend(const RealizedCircuit& circuit, const SimulationOptions& options) {
  const int m = static_cast<int>(circuit.involved.size());
  switch (options.backend) {
    case Backend::Diagonal:
      if (!circuit.xxOnly) {
        throw UnsupportedBackend(
            "diagonal backend needs an XX-only circuit (no swaps, phase noise, residual kicks or "
            "unitary errors)");
      }
      return Backend::Diagonal;
    case Backend::StateVector:
      if (m > options.stateVectorCap) {
        throw UnsupportedBackend("test involves " + std::to_string(m) +
                                 " qubits, above the state-vector cap of " +
                                 std::to_string(options.stateVectorCap) +
                                 "; use the diagonal backend");
      }
      return Backend::StateVector;
    case Backend::Auto:
      if (circuit.xxOnly) return Backend::Diagonal;
      if (m > options.stateVectorCap) {
        throw UnsupportedBackend("test involves " + std::to_string(m) +
                                 " qubits, above the state-vector cap, and is not XX-only");
      }
      return Backend::StateVector;
  }
  return Backend::StateVector;
}

}  // namespace

std::complex<double> xx_target_amplitude(int m, std::span<const XXTerm> terms,
                                         std::uint64_t targetMask) {
  if (m < 0 || m > 40) throw InvalidArgument("diagonal register size out of range");
  if (m == 0) {
    double constant = 0.0;
    for (const auto& t : terms) constant += t.theta;
    return targetMask == 0 ? std::polar(1.0, -constant / 2) : std::complex<double>(0.0);
  }
  if (targetMask >> m) return 0.0;
  const DiagonalWalk walk(m, terms);
  // Phi(x) = Phi(~x): sum over x with the top bit clear and weight the mirror.
  const bool oddTarget = std::popcount(targetMask) % 2 == 1;
  if (oddTarget) return 0.0;
  std::complex<double> sum = 0.0;
  walk.walk(m - 1, [&](std::uint64_t x, double phi) {
    const double sign = std::popcount(x & targetMask) % 2 ? -1.0 : 1.0;
    sum += sign * std::polar(1.0, -phi / 2);
  });
  return 2.0 * sum / std::ldexp(1.0, m);
}

double xx_target_probability(int m, std::span<const XXTerm> terms, std::uint64_t targetMask) {
  return std::norm(xx_target_amplitude(m, terms, targetMask));
}

VectorXc<double> xx_output_state(int m, std::span<const XXTerm> terms) {
  if (m < 0 || m > 26) throw InvalidArgument("diagonal register size out of range");
  const DiagonalWalk walk(m, terms);
  const Eigen::Index size = Eigen::Index{1} << m;
  VectorXc<double> v(size);
  walk.walk(m, [&](std::uint64_t x, double phi) {
    v(static_cast<Eigen::Index>(x)) = std::polar(1.0, -phi / 2);
  });
  // Walsh-Hadamard transform back to the computational basis.
  for (Eigen::Index h = 1; h < size; h <<= 1) {
    for (Eigen::Index i = 0; i < size; i += 2 * h) {
      for (Eigen::Index j = i; j < i + h; ++j) {
        const auto u = v(j);
        const auto w = v(j + h);
        v(j) = u + w;
        v(j + h) = u - w;
      }
    }
  }
  return v / static_cast<double>(size);
}

void DeviceModel::validate() const {
  if (qubits < 2) throw ConfigError("device needs at least two qubits");
  for (const auto& [c, eps] : couplingError) {
    if (c.b >= static_cast<Qubit>(qubits)) throw ConfigError("coupling " + to_string(c) + " outside device");
    if (!(std::abs(eps) < 1.0)) throw ConfigError("coupling error must satisfy |eps| < 1");
  }
  for (const auto& [c, e] : unitaryError) {
    if (c.b >= static_cast<Qubit>(qubits)) throw ConfigError("coupling " + to_string(c) + " outside device");
  }
  const auto prob = [](double p) { return p >= 0.0 && p < 1.0; };
  if (!prob(noise.residualOddPopulation) || noise.residualOddPopulation >= 0.5) {
    throw ConfigError("residual odd population must lie in [0, 0.5)");
  }
  if (!prob(noise.readoutFlip)) throw ConfigError("readout flip probability must lie in [0, 1)");
  if (noise.amplitude < 0.0) throw ConfigError("amplitude noise must be non-negative");
  if (noise.phaseNoise) {
    const auto& pn = *noise.phaseNoise;
    if (pn.rms < 0.0 || pn.fMin <= 0.0 || pn.fMax < pn.fMin || pn.gateTime <= 0.0) {
      throw ConfigError("invalid phase-noise parameters");
    }
  }
}

DeviceModel inject_faults(DeviceModel device,
                          const std::vector<std::pair<Coupling, double>>& faults) {
  std::set<Coupling> seen;
  for (const auto& [c, u] : faults) {
    if (c.b >= static_cast<Qubit>(device.qubits)) {
      throw InvalidArgument("fault on " + to_string(c) + " outside device");
    }
    if (!seen.insert(c).second) {
      std::clog << "warning: fault on " << to_string(c) << " given twice; keeping the last value\n";
    }
    if (u == 0.0) {
      device.couplingError.erase(c);
    } else {
      device.couplingError[c] = -u;
    }
  }
  return device;
}

double residual_odd_population(double theta, int phaseGrid) {
  if (phaseGrid < 1) throw InvalidArgument("phase grid must be positive");
  StateVector<double> bell({0, 1});
  bell.apply_two_qubit(0, 1, ms_matrix(kPi / 2, 0.0, 0.0));
  double total = 0.0;
  for (int i = 0; i < phaseGrid; ++i) {
    for (int j = 0; j < phaseGrid; ++j) {
      StateVector<double> s = bell;
      s.apply_single_qubit(0, r_matrix(theta, 2 * kPi * i / phaseGrid));
      s.apply_single_qubit(1, r_matrix(theta, 2 * kPi * j / phaseGrid));
      const auto p = s.probabilities();
      total += p(1) + p(2);
    }
  }
  return total / (phaseGrid * phaseGrid);
}

double calibrate_residual_angle(double oddPopulation) {
  if (!(oddPopulation >= 0.0 && oddPopulation < 0.5)) {
    throw InvalidArgument("odd population must lie in [0, 0.5)");
  }
  if (oddPopulation == 0.0) return 0.0;
  double lo = 0.0;
  double hi = kPi / 2;
  for (int it = 0; it < 60; ++it) {
    const double mid = 0.5 * (lo + hi);
    (residual_odd_population(mid, 8) < oddPopulation ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

RealizedCircuit realize_circuit(const DeviceModel& device, const TestSpec& spec,
                                std::mt19937_64& rng) {
  RealizedCircuit out;
  out.qubits = device.qubits;
  const auto ops = spec.gates();
  std::set<Qubit> involved;
  std::set<Coupling> msCouplings;
  for (const auto& op : ops) {
    if (op.pair.b >= static_cast<Qubit>(device.qubits)) {
      throw InvalidArgument("test " + spec.id + " uses " + to_string(op.pair) + " outside device");
    }
    involved.insert(op.pair.a);
    involved.insert(op.pair.b);
    if (op.kind == GateOp::Kind::Ms) msCouplings.insert(op.pair);
  }
  out.involved.assign(involved.begin(), involved.end());

  std::map<Coupling, double> delta;
  for (const auto& c : msCouplings) delta[c] = draw_amplitude(device.noise, rng);
  const auto offsets = phase_offsets(device.noise.phaseNoise, ops.size(), rng);
  const double residual = device.noise.residualOddPopulation > 0.0
                              ? residual_angle_cached(device.noise.residualOddPopulation)
                              : 0.0;
  std::uniform_real_distribution<double> kickPhase(0.0, 2 * kPi);

  for (std::size_t g = 0; g < ops.size(); ++g) {
    const auto& op = ops[g];
    if (op.kind == GateOp::Kind::Swap) {
      out.gates.push_back({RealizedGate::Kind::Swap, op.pair.a, op.pair.b, 0, 0, 0, nullptr});
      out.xxOnly = false;
      continue;
    }
    RealizedGate gate{RealizedGate::Kind::Ms, op.pair.a, op.pair.b, 0, offsets[g], 0, nullptr};
    gate.theta = kPi / 2 * (1.0 + device.error_of(op.pair)) * (1.0 + delta[op.pair]);
    if (const auto it = device.unitaryError.find(op.pair); it != device.unitaryError.end()) {
      gate.error = &it->second;
      out.xxOnly = false;
    }
    if (gate.phi1 != 0.0) out.xxOnly = false;
    out.gates.push_back(gate);
    if (residual > 0.0) {
      for (Qubit q : {op.pair.a, op.pair.b}) {
        out.gates.push_back({RealizedGate::Kind::Single, q, q, residual, kickPhase(rng), 0, nullptr});
      }
      out.xxOnly = false;
    }
  }
  return out;
}

StateVector<double> run_statevector(const RealizedCircuit& circuit) {
  StateVector<double> state(circuit.involved);
  for (const auto& g : circuit.gates) {
    switch (g.kind) {
      case RealizedGate::Kind::Swap:
        state.apply_swap(g.a, g.b);
        break;
      case RealizedGate::Kind::Single:
        state.apply_single_qubit(g.a, r_matrix(g.theta, g.phi1));
        break;
      case RealizedGate::Kind::Ms:
        state.apply_two_qubit(g.a, g.b, ms_matrix(g.theta, g.phi1, g.phi2));
        if (g.error) state.apply_two_qubit(g.a, g.b, *g.error);
        break;
    }
  }
  return state;
}

std::vector<XXTerm> diagonal_terms(const RealizedCircuit& circuit) {
  if (!circuit.xxOnly) throw UnsupportedBackend("circuit is not XX-only");
  std::map<Qubit, int> local;
  for (std::size_t k = 0; k < circuit.involved.size(); ++k) local[circuit.involved[k]] = static_cast<int>(k);
  std::map<std::pair<int, int>, double> total;
  for (const auto& g : circuit.gates) {
    if (g.kind != RealizedGate::Kind::Ms || g.error || g.phi1 != 0.0 || g.phi2 != 0.0) {
      throw UnsupportedBackend("circuit is not XX-only");
    }
    total[{local.at(g.a), local.at(g.b)}] += g.theta;
  }
  std::vector<XXTerm> out;
  out.reserve(total.size());
  for (const auto& [pair, theta] : total) out.push_back({pair.first, pair.second, theta});
  return out;
}

TestResult simulate_test(const DeviceModel& device, const TestSpec& spec, std::uint64_t seed,
                         const SimulationOptions& options) {
  std::mt19937_64 rng(seed);
  const auto circuit = realize_circuit(device, spec, rng);
  const Backend backend = choose_backend(circuit, options);
  const double flip = device.noise.readoutFlip;

  if (options.sampleMode == SampleMode::TargetOnly && flip == 0.0) {
    const double p = target_probability(circuit, backend, spec.target);
    const auto shots = sample_shots(p, spec.shots, rng);
    std::map<std::string, long> counts;
    if (shots.hits > 0) counts[spec.target] = shots.hits;
    return make_result(spec, std::move(counts), spec.shots);
  }

  const Eigen::VectorXd probs = output_probabilities(circuit, backend);
  std::discrete_distribution<Eigen::Index> pick(probs.data(), probs.data() + probs.size());
  const StateVector<double> labels(circuit.involved);
  std::map<Eigen::Index, long> byIndex;
  std::map<std::string, long> counts;
  std::bernoulli_distribution flipBit(flip);
  for (int s = 0; s < spec.shots; ++s) {
    const Eigen::Index idx = pick(rng);
    if (flip == 0.0) {
      ++byIndex[idx];
      continue;
    }
    std::string bits = labels.bitstring(idx, device.qubits);
    for (auto& ch : bits) {
      if (flipBit(rng)) ch = ch == '1' ? '0' : '1';
    }
    ++counts[bits];
  }
  for (const auto& [idx, n] : byIndex) counts[labels.bitstring(idx, device.qubits)] += n;
  return make_result(spec, std::move(counts), spec.shots);
}

TestResult simulate_test_statevector(const DeviceModel& device, const TestSpec& spec,
                                     std::uint64_t seed, int cap) {
  SimulationOptions options;
  options.backend = Backend::StateVector;
  options.stateVectorCap = cap;
  return simulate_test(device, spec, seed, options);
}

double target_probability_diagonal(const DeviceModel& device, const TestSpec& spec,
                                   std::mt19937_64& rng) {
  const auto circuit = realize_circuit(device, spec, rng);
  if (!circuit.xxOnly) throw UnsupportedBackend("diagonal backend needs an XX-only circuit");
  return target_probability(circuit, Backend::Diagonal, spec.target);
}

double target_probability_statevector(const DeviceModel& device, const TestSpec& spec,
                                      std::mt19937_64& rng) {
  const auto circuit = realize_circuit(device, spec, rng);
  return target_probability(circuit, Backend::StateVector, spec.target);
}

ShotCounts sample_shots(double p, long shots, std::mt19937_64& rng) {
  if (shots < 0) throw InvalidArgument("negative shot count");
  if (!(p >= -1e-12 && p <= 1.0 + 1e-12)) throw InvalidArgument("probability out of range");
  p = std::clamp(p, 0.0, 1.0);
  const long hits = std::binomial_distribution<long>(shots, p)(rng);
  return {hits, shots - hits};
}

ShotCounts sample_shots(double p, long shots, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  return sample_shots(p, shots, rng);
}

FaultDistribution::FaultDistribution(double sigma, double cutoff)
    : sigma_(sigma), cutoff_(cutoff), a_(0.0) {
  if (!(sigma >= 0.0) || !(cutoff > 0.0)) throw InvalidArgument("invalid fault distribution");
  a_ = 1.0 / (cutoff + sigma * std::sqrt(kPi / 2));
}

double FaultDistribution::density(double u) const {
  if (u < 0.0) return 0.0;
  if (u <= cutoff_) return a_;
  if (sigma_ == 0.0) return 0.0;
  const double z = (u - cutoff_) / sigma_;
  return a_ * std::exp(-0.5 * z * z);
}

double FaultDistribution::cdf(double u) const {
  if (u <= 0.0) return 0.0;
  if (u <= cutoff_) return a_ * u;
  if (sigma_ == 0.0) return 1.0;
  return a_ * cutoff_ +
         a_ * sigma_ * std::sqrt(kPi / 2) * std::erf((u - cutoff_) / (sigma_ * std::sqrt(2.0)));
}

double FaultDistribution::sample(std::mt19937_64& rng) const {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double uniformMass = a_ * cutoff_;
  if (unit(rng) < uniformMass) return cutoff_ * unit(rng);
  return cutoff_ + std::abs(std::normal_distribution<double>(0.0, sigma_)(rng));
}

std::vector<double> sample_fault_distribution(double sigma, std::size_t count, std::uint64_t seed) {
  const FaultDistribution dist(sigma);
  std::mt19937_64 rng(seed);
  std::vector<double> out(count);
  for (auto& u : out) u = dist.sample(rng);
  return out;
}

std::vector<SequencePoint> concatenated_ms_sequence(const DeviceModel& device,
                                                    const Coupling& pair,
                                                    std::span<const int> gateCounts, bool echo,
                                                    long shots, std::uint64_t seed) {
  if (pair.b >= static_cast<Qubit>(device.qubits)) throw InvalidArgument("pair outside device");
  std::mt19937_64 rng(seed);
  const double residual = device.noise.residualOddPopulation > 0.0
                              ? residual_angle_cached(device.noise.residualOddPopulation)
                              : 0.0;
  std::uniform_real_distribution<double> kickPhase(0.0, 2 * kPi);
  const Matrix4c<double>* error = nullptr;
  if (const auto it = device.unitaryError.find(pair); it != device.unitaryError.end()) error = &it->second;

  std::vector<SequencePoint> out;
  for (int m : gateCounts) {
    if (m < 0 || m % 2 != 0) throw InvalidArgument("gate counts must be even and non-negative");
    const double delta = draw_amplitude(device.noise, rng);
    const auto offsets = phase_offsets(device.noise.phaseNoise, static_cast<std::size_t>(m), rng);
    const double theta = kPi / 2 * (1.0 + device.error_of(pair)) * (1.0 + delta);
    StateVector<double> state({pair.a, pair.b});
    for (int g = 0; g < m; ++g) {
      const double phi1 = (echo && g % 2 == 1 ? kPi : 0.0) + offsets[g];
      state.apply_two_qubit(pair.a, pair.b, ms_matrix(theta, phi1, 0.0));
      if (error) state.apply_two_qubit(pair.a, pair.b, *error);
      if (residual > 0.0) {
        state.apply_single_qubit(pair.a, r_matrix(residual, kickPhase(rng)));
        state.apply_single_qubit(pair.b, r_matrix(residual, kickPhase(rng)));
      }
    }
    const Eigen::Index target = (!echo && m % 4 == 2) ? 3 : 0;
    const double p = std::norm(state.amplitudes()(target));
    SequencePoint point{m, std::max(0.0, 1.0 - p), 0.0};
    if (shots > 0) {
      const auto counts = sample_shots(std::min(p, 1.0), shots, rng);
      point.sampledInfidelity = static_cast<double>(counts.misses) / static_cast<double>(shots);
    } else {
      point.sampledInfidelity = point.infidelity;
    }
    out.push_back(point);
  }
  return out;
}

std::uint64_t fnv1a(const std::string& text) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  return h;
}

std::uint64_t test_seed(std::uint64_t masterSeed, const TestSpec& spec) {
  const std::uint64_t id = fnv1a(spec.id);
  std::seed_seq seq{static_cast<std::uint32_t>(masterSeed), static_cast<std::uint32_t>(masterSeed >> 32),
                    static_cast<std::uint32_t>(id), static_cast<std::uint32_t>(id >> 32),
                    static_cast<std::uint32_t>(spec.shots)};
  std::uint32_t words[2];
  seq.generate(words, words + 2);
  return (static_cast<std::uint64_t>(words[0]) << 32) | words[1];
}

}  // namespace iontest
