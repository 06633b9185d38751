#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "kamest/analytic_model.hpp"
#include "kamest/error.hpp"
#include "kamest/frequency_map.hpp"
#include "kamest/norm_estimator.hpp"

namespace kamest {

struct LatticeSum {
  double value = 0.0;
  double error_bound = 0.0;
  long cutoff = 0;  ///< shells |k|_1 <= cutoff summed explicitly
  bool converged = false;
};

/// #{k in Z^n : |k|_1 = m} = sum_j 2^j C(n, j) C(m-1, j-1).
inline double shell_count(int n, long m) {
  if (m == 0) return 1.0;
  double total = 0.0;
  for (int j = 1; j <= n && j <= m; ++j) {
    double binom_nj = 1.0;
    for (int t = 1; t <= j; ++t) binom_nj = binom_nj * (n - j + t) / t;
    double binom_m = 1.0;
    for (int t = 1; t <= j - 1; ++t) binom_m = binom_m * static_cast<double>(m - j + t) / t;
    total += std::ldexp(binom_nj * binom_m, j);
  }
  return total;
}

namespace detail {

/// Coefficients a_i of the shell count as a polynomial in m (valid for m >= 1).
inline std::vector<double> shell_polynomial(int n) {
  std::vector<double> total(static_cast<std::size_t>(n), 0.0);
  for (int j = 1; j <= n; ++j) {
    double binom_nj = 1.0;
    for (int t = 1; t <= j; ++t) binom_nj = binom_nj * (n - j + t) / t;
    // C(m-1, j-1) = prod_{t=1}^{j-1} (m - t) / t
    std::vector<double> poly{1.0};
    for (int t = 1; t <= j - 1; ++t) {
      std::vector<double> next(poly.size() + 1, 0.0);
      for (std::size_t i = 0; i < poly.size(); ++i) {
        next[i + 1] += poly[i] / t;
        next[i] -= poly[i];
      }
      poly = std::move(next);
    }
    for (std::size_t i = 0; i < poly.size(); ++i) total[i] += std::ldexp(binom_nj, j) * poly[i];
  }
  return total;
}

/// Euler-Maclaurin tail sum_{m > K} m^{-sigma} (sigma > 1) and a bound on its error.
inline std::pair<double, double> power_tail(double K, double sigma) {
  const double f = std::pow(K, -sigma);
  double value = K * f / (sigma - 1.0) - 0.5 * f + sigma * f / (12.0 * K);
  value -= sigma * (sigma + 1.0) * (sigma + 2.0) * f / (720.0 * K * K * K);
  const double next = sigma * (sigma + 1.0) * (sigma + 2.0) * (sigma + 3.0) * (sigma + 4.0) * f / (30240.0 * std::pow(K, 5));
  return {value, 2.0 * next};
}

}  // namespace detail

/// S(n, tau) = sum_{k != 0} |k|_1^{-(tau+1)}: explicit shells up to a cutoff
/// plus an Euler-Maclaurin tail, doubling the cutoff until the error bound
/// falls below tol.
inline LatticeSum lattice_sum(int n, double tau, double tol = 1e-13) {
  if (n < 1) throw DimensionError("lattice_sum needs n >= 1");
  if (!(tau > n - 1)) throw Error("lattice_sum diverges unless tau > n - 1");
  const double nu = tau + 1.0;
  const auto poly = detail::shell_polynomial(n);
  LatticeSum out;
  double partial = 0.0;
  long done = 0;
  constexpr long kCap = 1L << 22;
  for (long K = 64;; K *= 2) {
    for (long m = done + 1; m <= K; ++m) partial += shell_count(n, m) * std::pow(static_cast<double>(m), -nu);
    done = K;
    double tail = 0.0;
    double err = 0.0;
    for (std::size_t i = 0; i < poly.size(); ++i) {
      if (poly[i] == 0.0) continue;
      const auto [t, e] = detail::power_tail(static_cast<double>(K), nu - static_cast<double>(i));
      tail += poly[i] * t;
      err += std::abs(poly[i]) * e;
    }
    err += 4.0 * std::numeric_limits<double>::epsilon() * (partial + std::abs(tail));
    out = {partial + tail, err, K, err <= tol};
    if (out.converged || K >= kCap) return out;
  }
}

/// Constraint 0 < c* < c*hat / (4 n!) < 1 / (8 n!).
inline void check_kam_constants(int n, double cstar, double chat_star) {
  const double nf = detail::factorial(n);
  if (!(cstar > 0.0)) throw ConstraintError("constraint violated: 0 < c_star");
  if (!(cstar < chat_star / (4.0 * nf))) throw ConstraintError("constraint violated: c_star < c_star_hat / (4 n!)");
  if (!(chat_star / (4.0 * nf) < 1.0 / (8.0 * nf))) throw ConstraintError("constraint violated: c_star_hat / (4 n!) < 1 / (8 n!)");
}

inline double default_cstar(int n) { return 1e-2 / (8.0 * detail::factorial(n)); }
inline constexpr double kDefaultChatStar = 0.25;

struct StructuralConstants {
  int n = 0;
  double tau = 0.0;
  double nu = 0.0;
  double c0 = 0.0;
  double c0hat = 0.0;
  double cstar = 0.0;
  double chat_star = 0.0;
  double c = 0.0;
  double chat = 0.0;
  double ccheck = 0.0;
  double S = 0.0;
  double S_error = 0.0;
  double kappa1 = 0.0;
  double kappa2 = 0.0;
  double kappa3p = 0.0;
  double kappa3pp = 0.0;
  double kappa3 = 0.0;
  double kappa = 0.0;
};

inline StructuralConstants structural(int n, double tau, double cstar, double chat_star) {
  if (n < 2 || n > kMaxDimension) throw DimensionError("structural constants need 2 <= n <= 6");
  if (!(tau > n - 1)) throw Error("tau must exceed n - 1");
  check_kam_constants(n, cstar, chat_star);
  StructuralConstants sc;
  const double nf = detail::factorial(n);
  sc.n = n;
  sc.tau = tau;
  sc.nu = tau + 1.0;
  sc.cstar = cstar;
  sc.chat_star = chat_star;
  sc.c0 = c0_of(n);
  sc.c0hat = c0hat_of(n);
  // c = c*^2 / (2^17 n^2 (n!)^6), kept factored.
  sc.c = (cstar / nf) * (cstar / nf) / (std::ldexp(1.0, 17) * n * n * std::pow(nf, 4));
  sc.chat = cstar / 16.0;
  sc.ccheck = chat_star / (64.0 * nf);
  const LatticeSum ls = lattice_sum(n, tau);
  sc.S = ls.value;
  sc.S_error = ls.error_bound;
  const double c0_pow = std::pow(sc.c0, n - 1);
  sc.kappa1 = std::pow(2.0 * M_PI, n) * n * c0_pow / (2.0 * sc.ccheck);
  sc.kappa2 = std::pow(2.5 * M_PI, n);
  sc.kappa3p = 2.0 * std::pow(static_cast<double>(n), 0.5 * (n - 1)) * sc.S * c0_pow / sc.chat;
  sc.kappa3pp = 2.0 * n * c0_pow / sc.chat;
  sc.kappa3 = sc.kappa3p + sc.kappa3pp;
  sc.kappa = std::pow(4.0 / sc.c0, n) * (sc.kappa1 + sc.kappa2 * sc.kappa3);
  return sc;
}

inline StructuralConstants structural(int n, double tau) { return structural(n, tau, default_cstar(n), kDefaultChatStar); }

struct Certificate {
  NormBundle bundle;
  StructuralConstants sc;
  double r0 = 0.0;
  double s = 0.0;
  double diam = 0.0;

  double threshold = 0.0;
  bool pass = false;
  double alpha = 0.0;
  double r_star = 0.0;
  double rho_star = 0.0;
  double theta_param = 0.0;
  double r_hat = 0.0;
  double r = 0.0;
  double r_eps = 0.0;
  double beta = 0.0;
  double C = 0.0;
  double measure_bound = 0.0;
  double N_bound = 0.0;

  /// log-contribution of each factor to eps_hat / threshold; the largest
  /// positive one is reported as dominating a failure.
  std::map<std::string, double> failure_factors;
  std::string dominant_failure;
};

/// Evaluate the smallness condition and every derived quantity (also on failure).
inline Certificate certify(const NormBundle& b, const DomainSpec& D, const StructuralConstants& sc) {
  if (b.n != sc.n) throw DimensionError("bundle and structural constants disagree on n");
  if (std::abs(D.tau - sc.tau) > 1e-15 * std::max(1.0, sc.tau)) throw Error("domain tau differs from the structural tau");
  Certificate c;
  c.bundle = b;
  c.sc = sc;
  c.r0 = D.r0;
  c.s = D.s;
  c.diam = D.diam();
  const int n = sc.n;
  const double nu = sc.nu;
  const double mu = b.mu;
  const double lam = b.lambda;
  const double sq = std::sqrt(b.eps_hat);
  const double s_nu = std::pow(D.s, nu);

  c.threshold = sc.c * std::pow(mu, 6) / (lam * lam) * s_nu * s_nu * s_nu * s_nu;
  c.pass = b.eps_hat <= c.threshold;
  c.alpha = lam / (sc.chat * mu * s_nu * s_nu * s_nu) * b.M * D.r0 * sq;
  c.r_star = sc.c0hat * mu * D.r0;
  c.rho_star = sc.c0 * mu * mu * b.M * D.r0;
  c.theta_param = c.rho_star / 4.0;
  c.r_hat = 0.5 * sc.c0 * mu * mu * D.r0;
  c.r = sq * D.r0;
  c.r_eps = lam / sc.cstar * sq * D.r0;
  c.beta = lam / (sc.ccheck * mu * s_nu);
  const double X = std::max(mu * mu * D.r0, c.diam);
  c.C = sc.kappa * std::pow(X, n) * std::pow(lam, n + 2) / (mu * mu * mu * s_nu * s_nu * s_nu);
  c.measure_bound = c.C * sq;
  c.N_bound = std::pow(std::floor(c.diam / c.r_hat) + 1.0, n);

  c.failure_factors = {
      {"eps_hat", b.eps_hat > 0.0 ? std::log(b.eps_hat / sc.c) : -INFINITY},
      {"mu", -6.0 * std::log(mu)},
      {"lambda", 2.0 * std::log(lam)},
      {"s", -4.0 * nu * std::log(D.s)},
  };
  if (!c.pass) {
    auto it = std::max_element(c.failure_factors.begin(), c.failure_factors.end(),
                               [](const auto& a, const auto& z) { return a.second < z.second; });
    c.dominant_failure = it->first;
  }
  return c;
}

/// Per-ball measure bounds of the three pieces of the non-torus set.
struct MeasureBreakdown {
  double B1 = 0.0;  ///< kappa1 lambda mu^{2n-3} r0^n sqrt(eps_hat)
  double B2 = 0.0;  ///< kappa2 L^n B3
  double B3 = 0.0;  ///< kappa3 mu^{2n-3} lambda^2 s^{-3 nu} (M r0)^n sqrt(eps_hat)
  double per_ball = 0.0;    ///< B1 + B2
  double all_balls = 0.0;   ///< N_bound (B1 + B2), never above C sqrt(eps_hat)
};

inline MeasureBreakdown measure_breakdown(const Certificate& cert) {
  const auto& sc = cert.sc;
  const auto& b = cert.bundle;
  const int n = sc.n;
  const double sq = std::sqrt(b.eps_hat);
  const double mu_pow = std::pow(b.mu, 2 * n - 3);
  MeasureBreakdown out;
  out.B1 = sc.kappa1 * b.lambda * mu_pow * std::pow(cert.r0, n) * sq;
  out.B3 = sc.kappa3 * mu_pow * b.lambda * b.lambda * std::pow(cert.s, -3.0 * sc.nu) * std::pow(b.M * cert.r0, n) * sq;
  out.B2 = sc.kappa2 * std::pow(b.L, n) * out.B3;
  out.per_ball = out.B1 + out.B2;
  out.all_balls = cert.N_bound * out.per_ball;
  return out;
}

}  // namespace kamest
