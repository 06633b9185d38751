#pragma once

#include <array>
#include <cmath>
#include <vector>

#include "kamest/analytic_model.hpp"

namespace kamest {

/// Phase point (p, q) stored contiguously; q is lifted (not reduced mod 2 pi).
struct PhaseState {
  std::array<double, 2 * kMaxDimension> y{};
  int n = 0;
  double* p() { return y.data(); }
  double* q() { return y.data() + n; }
  const double* p() const { return y.data(); }
  const double* q() const { return y.data() + n; }
};

/// Classical fixed-step RK4 for Hamilton's equations.  `slope` receives the
/// first stage (the vector field at the start of the step).
class Rk4 {
 public:
  explicit Rk4(const AnalyticModel& model) : model_(model), n_(model.n()) {}

  void step(PhaseState& s, double dt, double* slope = nullptr) const {
    const int m = 2 * n_;
    std::array<double, 2 * kMaxDimension> k1{}, k2{}, k3{}, k4{}, tmp{};
    field(s.y.data(), k1.data());
    for (int i = 0; i < m; ++i) tmp[i] = s.y[i] + 0.5 * dt * k1[i];
    field(tmp.data(), k2.data());
    for (int i = 0; i < m; ++i) tmp[i] = s.y[i] + 0.5 * dt * k2[i];
    field(tmp.data(), k3.data());
    for (int i = 0; i < m; ++i) tmp[i] = s.y[i] + dt * k3[i];
    field(tmp.data(), k4.data());
    for (int i = 0; i < m; ++i) s.y[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    if (slope != nullptr)
      for (int i = 0; i < m; ++i) slope[i] = k1[i];
  }

  double energy(const PhaseState& s) const { return model_.energy(s.p(), s.q()); }

 private:
  void field(const double* y, double* dy) const { model_.vector_field(y, y + n_, dy, dy + n_); }

  const AnalyticModel& model_;
  int n_;
};

/// Weight exp(-1 / (x (1 - x))) on (0, 1) for weighted Birkhoff averages.
inline double bump_weight(double x) {
  if (x <= 0.0 || x >= 1.0) return 0.0;
  return std::exp(-1.0 / (x * (1.0 - x)));
}

/// Weighted Birkhoff average of equally spaced samples.
inline double weighted_average(const std::vector<double>& samples) {
  const std::size_t N = samples.size();
  double num = 0.0;
  double den = 0.0;
  for (std::size_t j = 0; j < N; ++j) {
    const double w = bump_weight((static_cast<double>(j) + 0.5) / static_cast<double>(N));
    num += w * samples[j];
    den += w;
  }
  return den > 0.0 ? num / den : 0.0;
}

}  // namespace kamest
