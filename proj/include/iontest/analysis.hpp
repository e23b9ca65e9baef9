#pragma once

// Fidelity estimators for single-output tests and MS gates.

#include <complex>
#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

namespace iontest {

/// counts[target] / total. Throws UndefinedFidelity on zero total.
double target_state_fidelity(const std::map<std::string, long>& counts, const std::string& target);

/// Parity P00 + P11 - P01 - P10 sampled at analysis phases phi.
struct ContrastScan {
  std::vector<double> phis;
  std::vector<double> signal;
};

struct ModeCouplings {
  /// (mode p, ion i) -> Lamb-Dicke parameter.
  std::map<std::pair<int, int>, double> eta;
  /// mode p -> residual displacement alpha_p.
  std::map<int, std::complex<double>> alpha;
};

/// 1 - 4/5 sum_p (eta_{p,i}^2 + eta_{p,j}^2) |alpha_p|^2.
double ms_fidelity_from_displacement(const ModeCouplings& mc, int i, int j);

/// Least-squares coefficient of signal ~ Pi sin(2 phi), unclamped.
double contrast_fit_raw(const ContrastScan& scan);

/// contrast_fit_raw clamped to [0, 1].
double contrast_fit(const ContrastScan& scan);

/// (P00* + P11* + Pi) / 2.
double ms_fidelity_from_parity(double p00, double p11, double contrast);

inline bool threshold_classifier(double fidelity, double threshold) { return fidelity >= threshold; }

/// `points` evenly spaced phases in [0, pi).
std::vector<double> default_phi_grid(int points = 16);

/// Parity scan after XX(pi/2 + epsilon) on |00> followed by R(pi/2, phi) on
/// both ions. shots == 0 gives exact expectation values.
ContrastScan simulate_contrast_scan(double epsilon, const std::vector<double>& phis, long shots = 0,
                                    std::uint64_t seed = 0);

/// P00 and P11 after XX(pi/2 + epsilon) on |00>.
std::pair<double, double> simulate_populations(double epsilon);

}  // namespace iontest
