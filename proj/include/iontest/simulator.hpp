#pragma once

// Unitary-error simulation of single-output MS test circuits.

#include <Eigen/Dense>
#include <cmath>
#include <complex>
#include <cstdint>
#include <map>
#include <numbers>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "iontest/errors.hpp"
#include "iontest/protocol.hpp"

namespace iontest {

template <typename Scalar>
using Matrix2c = Eigen::Matrix<std::complex<Scalar>, 2, 2>;
template <typename Scalar>
using Matrix4c = Eigen::Matrix<std::complex<Scalar>, 4, 4>;
template <typename Scalar>
using VectorXc = Eigen::Matrix<std::complex<Scalar>, Eigen::Dynamic, 1>;

/// R(theta, phi): rotation by theta about cos(phi) X + sin(phi) Y.
template <typename Scalar = double>
Matrix2c<Scalar> r_matrix(Scalar theta, Scalar phi) {
  using C = std::complex<Scalar>;
  const Scalar c = std::cos(theta / 2);
  const Scalar s = std::sin(theta / 2);
  const C mi(0, -1);
  Matrix2c<Scalar> m;
  m << C(c), mi * std::exp(C(0, -phi)) * s,
       mi * std::exp(C(0, phi)) * s, C(c);
  return m;
}

/// M(theta, phi1, phi2). Basis index is 2*bit(first ion) + bit(second ion).
template <typename Scalar = double>
Matrix4c<Scalar> ms_matrix(Scalar theta, Scalar phi1, Scalar phi2) {
  using C = std::complex<Scalar>;
  const Scalar c = std::cos(theta / 2);
  const Scalar s = std::sin(theta / 2);
  const C mi(0, -1);
  Matrix4c<Scalar> m = Matrix4c<Scalar>::Zero();
  m.diagonal().setConstant(C(c));
  m(0, 3) = mi * std::exp(C(0, -(phi1 + phi2))) * s;
  m(1, 2) = mi * std::exp(C(0, -(phi1 - phi2))) * s;
  m(2, 1) = mi * std::exp(C(0, phi1 - phi2)) * s;
  m(3, 0) = mi * std::exp(C(0, phi1 + phi2)) * s;
  return m;
}

/// exp(-i theta X(x)X / 2), built from the Pauli product rather than M.
template <typename Scalar = double>
Matrix4c<Scalar> xx_matrix(Scalar theta) {
  using C = std::complex<Scalar>;
  Matrix2c<Scalar> x;
  x << C(0), C(1), C(1), C(0);
  Matrix4c<Scalar> xx;
  for (int r = 0; r < 2; ++r)
    for (int c = 0; c < 2; ++c) xx.template block<2, 2>(2 * r, 2 * c) = x(r, c) * x;
  return std::cos(theta / 2) * Matrix4c<Scalar>::Identity() -
         C(0, 1) * std::sin(theta / 2) * xx;
}

struct SingleQubitGate {
  double theta = 0.0;
  double phi = 0.0;
  Matrix2c<double> matrix() const { return r_matrix(theta, phi); }
};

struct MSGate {
  double theta = std::numbers::pi / 2;
  double phi1 = 0.0;
  double phi2 = 0.0;
  Matrix4c<double> matrix() const { return ms_matrix(theta, phi1, phi2); }
};

/// Amplitudes over the involved qubits only; local bit k of an index holds
/// qubit involved()[k]. Uninvolved qubits stay in |0>.
template <typename Scalar = double>
class StateVector {
 public:
  explicit StateVector(std::vector<Qubit> involved) : qubits_(std::move(involved)) {
    if (qubits_.size() > 30) throw InvalidArgument("state vector too large");
    for (std::size_t k = 0; k < qubits_.size(); ++k) {
      if (!local_.emplace(qubits_[k], static_cast<int>(k)).second) {
        throw InvalidArgument("qubit listed twice: " + std::to_string(qubits_[k]));
      }
    }
    amps_ = VectorXc<Scalar>::Zero(Eigen::Index{1} << qubits_.size());
    amps_(0) = 1;
  }

  int size() const noexcept { return static_cast<int>(qubits_.size()); }
  const std::vector<Qubit>& involved() const noexcept { return qubits_; }
  const VectorXc<Scalar>& amplitudes() const noexcept { return amps_; }
  VectorXc<Scalar>& amplitudes() noexcept { return amps_; }

  int local(Qubit q) const {
    const auto it = local_.find(q);
    if (it == local_.end()) throw InvalidArgument("qubit " + std::to_string(q) + " not simulated");
    return it->second;
  }

  void apply_single_qubit(Qubit q, const Matrix2c<Scalar>& u) {
    const Eigen::Index bit = Eigen::Index{1} << local(q);
    for (Eigen::Index i = 0; i < amps_.size(); ++i) {
      if (i & bit) continue;
      const auto a0 = amps_(i);
      const auto a1 = amps_(i | bit);
      amps_(i) = u(0, 0) * a0 + u(0, 1) * a1;
      amps_(i | bit) = u(1, 0) * a0 + u(1, 1) * a1;
    }
  }

  void apply_two_qubit(Qubit a, Qubit b, const Matrix4c<Scalar>& u) {
    const Eigen::Index ba = Eigen::Index{1} << local(a);
    const Eigen::Index bb = Eigen::Index{1} << local(b);
    if (ba == bb) throw InvalidArgument("two-qubit gate needs distinct qubits");
    Eigen::Matrix<std::complex<Scalar>, 4, 1> v;
    for (Eigen::Index i = 0; i < amps_.size(); ++i) {
      if ((i & ba) || (i & bb)) continue;
      const Eigen::Index idx[4] = {i, i | bb, i | ba, i | ba | bb};
      for (int k = 0; k < 4; ++k) v(k) = amps_(idx[k]);
      v = (u * v).eval();
      for (int k = 0; k < 4; ++k) amps_(idx[k]) = v(k);
    }
  }

  void apply_swap(Qubit a, Qubit b) {
    const Eigen::Index ba = Eigen::Index{1} << local(a);
    const Eigen::Index bb = Eigen::Index{1} << local(b);
    for (Eigen::Index i = 0; i < amps_.size(); ++i) {
      if ((i & ba) && !(i & bb)) std::swap(amps_(i), amps_(i ^ ba ^ bb));
    }
  }

  Scalar norm() const { return amps_.norm(); }

  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> probabilities() const {
    return amps_.cwiseAbs2();
  }

  /// Local index of a full-device bitstring; nullopt when an uninvolved qubit reads 1.
  std::optional<Eigen::Index> index_of(const std::string& bits) const {
    Eigen::Index idx = 0;
    for (std::size_t q = 0; q < bits.size(); ++q) {
      if (bits[q] != '1') continue;
      const auto it = local_.find(static_cast<Qubit>(q));
      if (it == local_.end()) return std::nullopt;
      idx |= Eigen::Index{1} << it->second;
    }
    return idx;
  }

  std::string bitstring(Eigen::Index index, int qubits) const {
    std::string out(static_cast<std::size_t>(qubits), '0');
    for (std::size_t k = 0; k < qubits_.size(); ++k) {
      if ((index >> k) & 1) out[qubits_[k]] = '1';
    }
    return out;
  }

 private:
  std::vector<Qubit> qubits_;
  std::map<Qubit, int> local_;
  VectorXc<Scalar> amps_;
};

template <typename Scalar>
void apply_single_qubit(StateVector<Scalar>& state, Qubit q, const SingleQubitGate& g) {
  state.apply_single_qubit(q, r_matrix<Scalar>(g.theta, g.phi));
}

template <typename Scalar>
void apply_ms(StateVector<Scalar>& state, Qubit a, Qubit b, const MSGate& g) {
  state.apply_two_qubit(a, b, ms_matrix<Scalar>(g.theta, g.phi1, g.phi2));
}

/// One XX(theta) term of a diagonal circuit, on local qubit indices.
struct XXTerm {
  int a = 0;
  int b = 1;
  double theta = 0.0;
};

/// Target amplitude of prod XX(theta) |0..0> evaluated in the X eigenbasis.
std::complex<double> xx_target_amplitude(int m, std::span<const XXTerm> terms,
                                         std::uint64_t targetMask);

/// |xx_target_amplitude|^2.
double xx_target_probability(int m, std::span<const XXTerm> terms, std::uint64_t targetMask);

/// Full output state of an XX-only circuit on |0..0>.
VectorXc<double> xx_output_state(int m, std::span<const XXTerm> terms);

enum class AmplitudeLaw { Gaussian, Uniform };

/// 1/f phase process sampled as a sum of sinusoids with log-spaced frequencies
/// (equal power per octave) and random phases drawn per circuit.
struct PhaseNoise {
  double rms = 0.05;
  double fMin = 1.0;
  double fMax = 1.0e3;
  int components = 16;
  double gateTime = 2.0e-4;
  bool operator==(const PhaseNoise&) const = default;
};

struct NoiseModel {
  AmplitudeLaw amplitudeLaw = AmplitudeLaw::Uniform;
  /// Standard deviation (Gaussian) or half-width (Uniform) of the relative
  /// amplitude error, drawn once per coupling per circuit.
  double amplitude = 0.10;
  double residualOddPopulation = 0.01;
  std::optional<PhaseNoise> phaseNoise;
  double readoutFlip = 0.0;
  bool operator==(const NoiseModel&) const = default;

  static NoiseModel noiseless() { return {AmplitudeLaw::Uniform, 0.0, 0.0, std::nullopt, 0.0}; }
};

struct DeviceModel {
  int qubits = 8;
  /// Applied MS angle = nominal * (1 + couplingError).
  std::map<Coupling, double> couplingError;
  NoiseModel noise;
  /// Extra two-qubit unitary applied after every MS gate on a coupling.
  std::map<Coupling, Matrix4c<double>> unitaryError;

  double error_of(const Coupling& c) const {
    const auto it = couplingError.find(c);
    return it == couplingError.end() ? 0.0 : it->second;
  }
  void validate() const;
};

/// Sets couplingError[c] = -underRotation; a repeated coupling keeps its last value.
DeviceModel inject_faults(DeviceModel device,
                          const std::vector<std::pair<Coupling, double>>& faults);

/// Angle of the residual single-qubit kick whose mean odd population after
/// one kick on each ion of a Bell pair equals `oddPopulation`; found by
/// bisection against the state-vector evaluation.
double calibrate_residual_angle(double oddPopulation);

/// Mean odd population from residual kicks of angle theta, averaged over a
/// uniform grid of kick phases.
double residual_odd_population(double theta, int phaseGrid = 32);

/// A circuit with noise parameters drawn.
struct RealizedGate {
  enum class Kind { Ms, Swap, Single };
  Kind kind = Kind::Ms;
  Qubit a = 0;
  Qubit b = 0;
  double theta = 0.0;
  double phi1 = 0.0;
  double phi2 = 0.0;
  const Matrix4c<double>* error = nullptr;
};

struct RealizedCircuit {
  int qubits = 0;
  std::vector<Qubit> involved;
  std::vector<RealizedGate> gates;
  /// True when every gate is an XX rotation, so the diagonal backend applies.
  bool xxOnly = true;
};

RealizedCircuit realize_circuit(const DeviceModel& device, const TestSpec& spec,
                                std::mt19937_64& rng);

StateVector<double> run_statevector(const RealizedCircuit& circuit);

/// Throws UnsupportedBackend when the circuit is not XX-only.
std::vector<XXTerm> diagonal_terms(const RealizedCircuit& circuit);

enum class Backend { Auto, StateVector, Diagonal };
enum class SampleMode { Full, TargetOnly };

struct SimulationOptions {
  Backend backend = Backend::Auto;
  SampleMode sampleMode = SampleMode::Full;
  int stateVectorCap = 20;
};

/// Samples `shots` outcomes of one test. Deterministic in `seed`.
TestResult simulate_test(const DeviceModel& device, const TestSpec& spec, std::uint64_t seed,
                         const SimulationOptions& options = {});

TestResult simulate_test_statevector(const DeviceModel& device, const TestSpec& spec,
                                     std::uint64_t seed, int cap = 20);

/// Exact target probability of one noise realization on the diagonal backend.
double target_probability_diagonal(const DeviceModel& device, const TestSpec& spec,
                                   std::mt19937_64& rng);

/// Exact target probability of one noise realization on the state-vector backend.
double target_probability_statevector(const DeviceModel& device, const TestSpec& spec,
                                      std::mt19937_64& rng);

struct ShotCounts {
  long hits = 0;
  long misses = 0;
};

ShotCounts sample_shots(double p, long shots, std::mt19937_64& rng);
ShotCounts sample_shots(double p, long shots, std::uint64_t seed);

/// Uniform density a(sigma) on [0, cutoff], half-Gaussian tail of width sigma beyond.
class FaultDistribution {
 public:
  explicit FaultDistribution(double sigma, double cutoff = 0.06);
  double sigma() const noexcept { return sigma_; }
  double cutoff() const noexcept { return cutoff_; }
  double normalization() const noexcept { return a_; }
  double density(double u) const;
  double cdf(double u) const;
  double sample(std::mt19937_64& rng) const;

 private:
  double sigma_;
  double cutoff_;
  double a_;
};

std::vector<double> sample_fault_distribution(double sigma, std::size_t count, std::uint64_t seed);

struct SequencePoint {
  int gates = 0;
  double infidelity = 0.0;
  /// From `shots` samples; equals `infidelity` when shots is 0.
  double sampledInfidelity = 0.0;
};

/// m MS gates on one pair for each m in gateCounts. Echo advances phi1 by pi
/// on every gate so consecutive gates alternate the rotation sign; the echoed
/// target is |00>, the plain target |00> or |11> by m mod 4.
std::vector<SequencePoint> concatenated_ms_sequence(const DeviceModel& device,
                                                    const Coupling& pair,
                                                    std::span<const int> gateCounts, bool echo,
                                                    long shots, std::uint64_t seed);

/// Per-test RNG seed derived from the master seed, the test id and its shot count.
std::uint64_t test_seed(std::uint64_t masterSeed, const TestSpec& spec);

std::uint64_t fnv1a(const std::string& text);

}  // namespace iontest
