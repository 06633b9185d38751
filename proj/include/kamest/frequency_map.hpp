#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "kamest/analytic_model.hpp"
#include "kamest/error.hpp"
#include "kamest/norm_estimator.hpp"

namespace kamest {

enum class InversionMethod { contraction, newton };

inline constexpr int kMaxInversionIterations = 200;
inline constexpr double kInversionTolerance = 1e-12;

/// Local inverse of the frequency map p -> h_p(p) around p0.
struct InverseBranch {
  CVec p0;
  CVec omega0;
  double r = 0.0;      ///< action radius of the branch
  double delta = 0.0;  ///< sampled sup ||I - T h_pp(p)|| over B_r(p0)
  double rho = 0.0;    ///< guaranteed frequency radius (1 - delta) r / ||T||
  CMat T;              ///< h_pp(p0)^{-1}
  double T_norm = 0.0;
  double L_local = 0.0;  ///< ||T|| / (1 - delta), bounds ||p_omega|| on B_rho(omega0)
};

struct InversionResult {
  CVec p;
  int iterations = 0;
  double residual = 0.0;
};

namespace detail {

inline double sup_dist(const CVec& a, const CVec& b) { return (a - b).cwiseAbs().maxCoeff(); }

/// Sample points of the complex sup-norm ball B_r(c): distinguished-boundary
/// directions (8 angles per coordinate for n <= 3, 4 otherwise) plus a real grid.
inline std::vector<CVec> complex_ball_samples(const CVec& c, double r, int G = 7) {
  const int n = static_cast<int>(c.size());
  const int nang = n <= 3 ? 8 : 4;
  std::vector<CVec> out;
  std::vector<int> idx(static_cast<std::size_t>(n), 0);
  while (true) {
    CVec z(n);
    for (int i = 0; i < n; ++i) z(i) = c(i) + r * std::polar(1.0, 2.0 * M_PI * idx[static_cast<std::size_t>(i)] / nang);
    out.push_back(z);
    int d = 0;
    while (d < n && ++idx[static_cast<std::size_t>(d)] == nang) idx[static_cast<std::size_t>(d++)] = 0;
    if (d == n) break;
  }
  const RVec re = c.real();
  const RVec im = c.imag();
  for (const RVec& x : DomainSpec::box_grid(re.array() - r, re.array() + r, G)) {
    CVec z(n);
    for (int i = 0; i < n; ++i) z(i) = cplx(x(i), im(i));
    out.push_back(z);
  }
  return out;
}

inline CMat checked_inverse(const CMat& A, const char* what) {
  const double scale = std::pow(row_sum_norm(A), static_cast<double>(A.rows()));
  const double det = std::abs(A.determinant());
  if (!(det > 1e-12 * scale) || !(scale > 0.0))
    throw NondegeneracyError(std::string(what) + ": h_pp is singular (|det| below 1e-12 of scale)");
  return A.inverse();
}

}  // namespace detail

/// delta = sampled sup of ||I - T h_pp(p)|| over B_r(p0), T = h_pp(p0)^{-1}.
/// Exactly zero for a constant Hessian.
inline double delta_check(const AnalyticModel& model, const CVec& p0, double r) {
  if (p0.size() != model.n()) throw DimensionError("p0 has the wrong length");
  if (!(r > 0.0)) throw Error("inversion radius must be positive");
  const CMat T = detail::checked_inverse(model.hessian(p0), "delta_check");
  if (model.constant_hessian()) return 0.0;
  const CMat I = CMat::Identity(model.n(), model.n());
  double delta = 0.0;
  for (const CVec& p : detail::complex_ball_samples(p0, r))
    delta = std::max(delta, detail::row_sum_norm(I - T * model.hessian(p)));
  return delta;
}

inline InverseBranch make_branch(const AnalyticModel& model, const CVec& p0, double r) {
  InverseBranch b;
  b.p0 = p0;
  b.r = r;
  b.delta = delta_check(model, p0, r);
  if (!(b.delta < 1.0)) throw ConvergenceError("no contraction on B_r(p0): delta = " + std::to_string(b.delta) + " >= 1");
  b.omega0 = model.frequency(p0);
  b.T = detail::checked_inverse(model.hessian(p0), "make_branch");
  b.T_norm = detail::row_sum_norm(b.T);
  b.rho = (1.0 - b.delta) * r / b.T_norm;
  b.L_local = b.T_norm / (1.0 - b.delta);
  return b;
}

inline InverseBranch make_branch(const AnalyticModel& model, const RVec& p0, double r) {
  return make_branch(model, CVec(p0.cast<cplx>()), r);
}

/// Solve h_p(p) = omega inside the branch.  The contraction map
/// p -> p - T (h_p(p) - omega) is the certified iteration; Newton is an
/// accelerated alternative.
inline InversionResult invert(const AnalyticModel& model, const InverseBranch& branch, const CVec& omega,
                              InversionMethod method = InversionMethod::contraction) {
  if (omega.size() != model.n()) throw DimensionError("target frequency has the wrong length");
  const double dist = detail::sup_dist(omega, branch.omega0);
  if (dist > branch.rho * (1.0 + 1e-12))
    throw OutOfRangeError("target frequency outside the guaranteed ball: |omega - omega0| = " + std::to_string(dist) +
                          " > rho = " + std::to_string(branch.rho));
  const double tol = kInversionTolerance * std::max(1.0, omega.cwiseAbs().maxCoeff());
  InversionResult res;
  res.p = branch.p0;
  CVec defect = model.frequency(res.p) - omega;
  res.residual = defect.cwiseAbs().maxCoeff();
  while (res.residual > tol) {
    if (res.iterations == kMaxInversionIterations)
      throw ConvergenceError("frequency inversion did not converge in 200 iterations");
    if (method == InversionMethod::contraction)
      res.p -= branch.T * defect;
    else
      res.p -= model.hessian(res.p).partialPivLu().solve(defect);
    ++res.iterations;
    defect = model.frequency(res.p) - omega;
    res.residual = defect.cwiseAbs().maxCoeff();
    if (!std::isfinite(res.residual)) throw ConvergenceError("frequency inversion diverged");
  }
  if (detail::sup_dist(res.p, branch.p0) > branch.r * (1.0 + 1e-9))
    throw ConvergenceError("inverse left the action ball B_r(p0)");
  return res;
}

inline InversionResult invert(const AnalyticModel& model, const InverseBranch& branch, const RVec& omega,
                              InversionMethod method = InversionMethod::contraction) {
  return invert(model, branch, CVec(omega.cast<cplx>()), method);
}

/// Radii of the local frequency-map lemma.
struct LocalRadii {
  double r_star = 0.0;    ///< c0hat mu r0
  double rho_star = 0.0;  ///< c0 mu^2 M r0
};

inline double c0_of(int n) { return 1.0 / (8.0 * n * detail::factorial(n) * detail::factorial(n)); }
inline double c0hat_of(int n) { return 1.0 / (4.0 * n * detail::factorial(n)); }

inline LocalRadii local_radii(int n, double mu, double M, double r0) {
  return {c0hat_of(n) * mu * r0, c0_of(n) * mu * mu * M * r0};
}

struct LipschitzEstimate {
  double L = 0.0;                      ///< sup ||h_pp^{-1}|| over the r_star balls
  double second_derivative_sup = 0.0;  ///< sup ||p_omega omega|| over the 3/4 rho_star balls
  double hinv_sup_on_D = 0.0;          ///< sup ||h_pp^{-1}|| on the centres themselves
  double bound_hinv = 0.0;             ///< n! / (mu M)
  double bound_L = 0.0;                ///< 1 / (2 n c0hat mu M)
  double bound_second = 0.0;           ///< L / ((c0/4) mu^2 M r0)
  double max_delta = 0.0;

  bool within_bounds() const {
    const double slack = 1.0 + 1e-12;
    return hinv_sup_on_D <= bound_hinv * slack && L <= bound_L * slack && second_derivative_sup <= bound_second * slack;
  }
};

/// L and sup ||p_omega omega|| for the local inverses at the given centres.
/// p_omega = h_pp^{-1} at the inverse point, so L is sampled from h_pp^{-1}
/// over B_{r_star}(p0); the second derivative uses central differences of
/// p_omega at samples of B_{3/4 rho_star}(omega0).
inline LipschitzEstimate lipschitz_constants(const AnalyticModel& model, const std::vector<RVec>& centers, double mu,
                                             double M, double r0) {
  if (centers.empty()) throw Error("lipschitz_constants needs at least one centre");
  const int n = model.n();
  const LocalRadii radii = local_radii(n, mu, M, r0);
  LipschitzEstimate est;
  est.bound_hinv = detail::factorial(n) / (mu * M);
  est.bound_L = 1.0 / (2.0 * n * c0hat_of(n) * mu * M);
  for (const RVec& c : centers) {
    const CVec c0 = c.cast<cplx>();
    est.hinv_sup_on_D = std::max(est.hinv_sup_on_D, detail::row_sum_norm(detail::checked_inverse(model.hessian(c0), "lipschitz_constants")));
    for (const CVec& p : detail::complex_ball_samples(c0, radii.r_star))
      est.L = std::max(est.L, detail::row_sum_norm(detail::checked_inverse(model.hessian(p), "lipschitz_constants")));
  }
  est.bound_second = est.L / ((c0_of(n) / 4.0) * mu * mu * M * r0);
  if (model.constant_hessian()) return est;

  const double w = 0.75 * radii.rho_star;
  const double h = 1e-3 * w;
  for (const RVec& c : centers) {
    const InverseBranch br = make_branch(model, c, radii.r_star);
    est.max_delta = std::max(est.max_delta, br.delta);
    if (br.rho < w + h) throw ConsistencyError("inverse branch radius rho is smaller than 3/4 rho_star");
    auto p_omega = [&](const CVec& om) {
      const InversionResult inv = invert(model, br, om);
      return CMat(model.hessian(inv.p).inverse());
    };
    std::vector<CVec> samples = detail::complex_ball_samples(br.omega0, w, 3);
    samples.push_back(br.omega0);
    for (const CVec& om : samples) {
      // B(i, j, k) = d p_omega(i, j) / d omega_k
      std::vector<double> row(static_cast<std::size_t>(n), 0.0);
      for (int k = 0; k < n; ++k) {
        CVec plus = om;
        CVec minus = om;
        plus(k) += h;
        minus(k) -= h;
        const CMat dB = (p_omega(plus) - p_omega(minus)) / (2.0 * h);
        for (int i = 0; i < n; ++i) row[static_cast<std::size_t>(i)] += dB.row(i).cwiseAbs().sum();
      }
      est.second_derivative_sup = std::max(est.second_derivative_sup, *std::max_element(row.begin(), row.end()));
    }
  }
  return est;
}

}  // namespace kamest
