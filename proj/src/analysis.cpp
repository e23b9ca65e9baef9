#include "iontest/analysis.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "iontest/errors.hpp"
#include "iontest/simulator.hpp"

namespace iontest {

double target_state_fidelity(const std::map<std::string, long>& counts, const std::string& target) {
  long total = 0;
  for (const auto& [bits, n] : counts) {
    if (n < 0) throw ValidationError("negative count for " + bits);
    total += n;
  }
  if (total == 0) throw UndefinedFidelity("no shots recorded");
  const auto it = counts.find(target);
  return it == counts.end() ? 0.0 : static_cast<double>(it->second) / static_cast<double>(total);
}

double ms_fidelity_from_displacement(const ModeCouplings& mc, int i, int j) {
  double sum = 0.0;
  for (const auto& [p, alpha] : mc.alpha) {
    const auto ei = mc.eta.find({p, i});
    const auto ej = mc.eta.find({p, j});
    if (ei == mc.eta.end() || ej == mc.eta.end()) {
      throw IncompleteModel("no Lamb-Dicke parameter for mode " + std::to_string(p));
    }
    sum += (ei->second * ei->second + ej->second * ej->second) * std::norm(alpha);
  }
  return 1.0 - 0.8 * sum;
}

double contrast_fit_raw(const ContrastScan& scan) {
  if (scan.phis.size() != scan.signal.size()) throw InvalidArgument("scan lengths differ");
  if (scan.phis.size() < 4) throw InvalidArgument("contrast scan needs at least 4 points");
  const auto n = static_cast<Eigen::Index>(scan.phis.size());
  const Eigen::Map<const Eigen::VectorXd> phi(scan.phis.data(), n);
  const Eigen::Map<const Eigen::VectorXd> y(scan.signal.data(), n);
  const Eigen::VectorXd s = (2.0 * phi).array().sin().matrix();
  const double ss = s.squaredNorm();
  if (ss < 1e-12) throw Unfittable("sin(2 phi) vanishes on every scan point");
  return s.dot(y) / ss;
}

double contrast_fit(const ContrastScan& scan) {
  return std::clamp(contrast_fit_raw(scan), 0.0, 1.0);
}

double ms_fidelity_from_parity(double p00, double p11, double contrast) {
  for (double v : {p00, p11, contrast}) {
    if (!(v >= 0.0 && v <= 1.0)) throw InvalidArgument("populations and contrast must lie in [0, 1]");
  }
  return (p00 + p11 + contrast) / 2.0;
}

std::vector<double> default_phi_grid(int points) {
  if (points < 1) throw InvalidArgument("phase grid needs points");
  std::vector<double> out(static_cast<std::size_t>(points));
  for (int k = 0; k < points; ++k) out[k] = std::numbers::pi * k / points;
  return out;
}

namespace {

StateVector<double> bell_with_error(double epsilon) {
  StateVector<double> s({0, 1});
  s.apply_two_qubit(0, 1, ms_matrix(std::numbers::pi / 2 + epsilon, 0.0, 0.0));
  return s;
}

}  // namespace

ContrastScan simulate_contrast_scan(double epsilon, const std::vector<double>& phis, long shots,
                                    std::uint64_t seed) {
  if (shots < 0) throw InvalidArgument("negative shot count");
  const auto bell = bell_with_error(epsilon);
  std::mt19937_64 rng(seed);
  ContrastScan scan{phis, {}};
  for (double phi : phis) {
    auto s = bell;
    const auto r = r_matrix(std::numbers::pi / 2, phi);
    s.apply_single_qubit(0, r);
    s.apply_single_qubit(1, r);
    Eigen::Vector4d p = s.probabilities();
    if (shots > 0) {
      std::discrete_distribution<int> pick(p.data(), p.data() + 4);
      Eigen::Vector4d hist = Eigen::Vector4d::Zero();
      for (long k = 0; k < shots; ++k) hist(pick(rng)) += 1.0;
      p = hist / static_cast<double>(shots);
    }
    scan.signal.push_back(p(0) + p(3) - p(1) - p(2));
  }
  return scan;
}

std::pair<double, double> simulate_populations(double epsilon) {
  const auto p = bell_with_error(epsilon).probabilities();
  return {p(0), p(3)};
}

}  // namespace iontest
