#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <vector>

#include "kamest/analytic_model.hpp"
#include "kamest/error.hpp"

namespace kamest {

/// Nonzero k with |k|_1 <= K, one of each pair {k, -k} (first nonzero entry
/// positive), ordered by shell.  Stores |k|_1^tau alongside.
class HalfLattice {
 public:
  HalfLattice(int n, int K, double tau) : n_(n), K_(K), tau_(tau) {
    if (n < 1) throw DimensionError("lattice dimension must be positive");
    if (K < 1) throw Error("lattice cutoff K must be at least 1");
    std::vector<int> k(static_cast<std::size_t>(n));
    for (int m = 1; m <= K; ++m) enumerate(k, 0, m, m, false);
  }

  int n() const { return n_; }
  int K() const { return K_; }
  double tau() const { return tau_; }
  std::size_t size() const { return weights_.size(); }
  const int* k(std::size_t i) const { return &ks_[i * static_cast<std::size_t>(n_)]; }
  std::vector<int> k_vector(std::size_t i) const { return {k(i), k(i) + n_}; }
  int l1(std::size_t i) const { return l1_[i]; }
  /// |k|_1^tau
  double weight(std::size_t i) const { return weights_[i]; }

 private:
  void enumerate(std::vector<int>& k, int pos, int remaining, int shell, bool signed_before) {
    if (pos == n_) {
      if (remaining != 0) return;
      ks_.insert(ks_.end(), k.begin(), k.end());
      l1_.push_back(shell);
      weights_.push_back(std::pow(static_cast<double>(shell), tau_));
      return;
    }
    const auto up = static_cast<std::size_t>(pos);
    if (pos == n_ - 1) {
      // The last entry is forced to +-remaining.
      k[up] = remaining;
      enumerate(k, pos + 1, 0, shell, true);
      if (remaining != 0 && signed_before) {
        k[up] = -remaining;
        enumerate(k, pos + 1, 0, shell, true);
      }
      return;
    }
    for (int a = 0; a <= remaining; ++a) {
      k[up] = a;
      enumerate(k, pos + 1, remaining - a, shell, signed_before || a != 0);
      if (a != 0 && signed_before) {
        k[up] = -a;
        enumerate(k, pos + 1, remaining - a, shell, true);
      }
    }
  }

  int n_;
  int K_;
  double tau_;
  std::vector<int> ks_;
  std::vector<int> l1_;
  std::vector<double> weights_;
};

struct DiophantineResult {
  bool diophantine = true;
  std::vector<int> worst_k;  ///< argmin of |omega.k| |k|_1^tau
  double worst_value = std::numeric_limits<double>::infinity();
  int K = 0;
};

inline double dot_k(const int* k, const double* w, int n) {
  double s = 0.0;
  for (int i = 0; i < n; ++i) s += k[i] * w[i];
  return s;
}

/// min over the lattice of |omega.k| |k|_1^tau and its minimiser.
inline DiophantineResult worst_resonance(const RVec& omega, const HalfLattice& lat) {
  if (omega.size() != lat.n()) throw DimensionError("frequency and lattice dimensions differ");
  DiophantineResult r;
  r.K = lat.K();
  std::size_t arg = 0;
  for (std::size_t i = 0; i < lat.size(); ++i) {
    const double v = std::abs(dot_k(lat.k(i), omega.data(), lat.n())) * lat.weight(i);
    if (v < r.worst_value) {
      r.worst_value = v;
      arg = i;
    }
  }
  r.worst_k = lat.k_vector(arg);
  return r;
}

/// |omega.k| >= alpha / |k|_1^tau for all 0 < |k|_1 <= K (equality counts).
inline DiophantineResult is_diophantine_upto(const RVec& omega, double alpha, const HalfLattice& lat) {
  if (!(alpha > 0.0)) throw Error("Diophantine constant alpha must be positive");
  DiophantineResult r = worst_resonance(omega, lat);
  r.diophantine = r.worst_value >= alpha;
  return r;
}

inline DiophantineResult is_diophantine_upto(const RVec& omega, double alpha, double tau, int K) {
  return is_diophantine_upto(omega, alpha, HalfLattice(static_cast<int>(omega.size()), K, tau));
}

/// alpha_K = min_{0 < |k|_1 <= K} |omega.k| |k|_1^tau.
inline double best_alpha(const RVec& omega, double tau, int K) {
  return worst_resonance(omega, HalfLattice(static_cast<int>(omega.size()), K, tau)).worst_value;
}

/// Uniform double in [0, 1) from the top 53 bits (portable across standard libraries).
inline double unit_uniform(std::mt19937_64& gen) { return static_cast<double>(gen() >> 11) * 0x1.0p-53; }

struct MeasureEstimate {
  double fraction = 0.0;
  double measure = 0.0;
  double stderr_measure = 0.0;  ///< binomial standard error, scaled to measure
  std::size_t samples = 0;
  std::size_t hits = 0;
  int K = 0;
};

/// Monte Carlo measure of the omega in the sup-norm ball B_R(0) of R^n that
/// fail the (alpha, tau) condition up to |k|_1 <= K.
inline MeasureEstimate resonant_measure(int n, double R, double alpha, double tau, int K, std::size_t n_samples,
                                        std::uint64_t seed) {
  if (!(R > 0.0)) throw Error("radius R must be positive");
  if (!(alpha >= 0.0)) throw Error("alpha must be non-negative");
  if (n_samples == 0) throw Error("need at least one sample");
  const HalfLattice lat(n, K, tau);
  std::mt19937_64 gen(seed);
  RVec w(n);
  MeasureEstimate est;
  est.samples = n_samples;
  est.K = K;
  for (std::size_t a = 0; a < n_samples; ++a) {
    for (int i = 0; i < n; ++i) w(i) = R * (2.0 * unit_uniform(gen) - 1.0);
    if (alpha > 0.0 && !is_diophantine_upto(w, alpha, lat).diophantine) ++est.hits;
  }
  const double vol = std::pow(2.0 * R, n);
  est.fraction = static_cast<double>(est.hits) / static_cast<double>(n_samples);
  est.measure = est.fraction * vol;
  est.stderr_measure = std::sqrt(est.fraction * (1.0 - est.fraction) / static_cast<double>(n_samples)) * vol;
  return est;
}

}  // namespace kamest
