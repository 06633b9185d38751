#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "kamest/analytic_model.hpp"
#include "kamest/error.hpp"

namespace kamest {

enum class NormMode { rigorous, sampled };

inline const char* to_string(NormMode m) { return m == NormMode::rigorous ? "rigorous" : "sampled"; }

inline NormMode parse_norm_mode(const std::string& s) {
  if (s == "rigorous") return NormMode::rigorous;
  if (s == "sampled") return NormMode::sampled;
  throw Error("unknown norm mode '" + s + "' (expected rigorous or sampled)");
}

struct NormOptions {
  NormMode mode = NormMode::rigorous;
  /// Points per dimension of the sampling grids.
  int grid = 24;
  /// Grid doubling stops once the relative change drops below this.
  double refine_tol = 1e-3;
  /// Cap on (action sample x angle sample) pairs in the sampled sup of f.
  std::size_t budget = 40'000'000;
};

/// Measured analytic quantities of (h, f) over D and the derived
/// dimensionless parameters.
struct NormBundle {
  int n = 0;
  double M = 0.0;        ///< sup of ||h_pp|| over the complex r0-neighbourhood of D
  double eps = 0.0;      ///< ||f|| over that neighbourhood times the s-strip
  double d = 0.0;        ///< inf over D of |det h_pp|
  double mu = 0.0;       ///< d / M^n
  double L = 0.0;        ///< Lipschitz constant of the local inverse frequency maps
  double lambda = 0.0;   ///< L M
  double eps_hat = 0.0;  ///< eps / (M r0^2)
  NormMode mode = NormMode::rigorous;
  std::string eps_source = "rigorous";
};

namespace detail {

inline double factorial(int n) {
  double f = 1.0;
  for (int i = 2; i <= n; ++i) f *= i;
  return f;
}

/// Max absolute row sum: the operator norm induced by the sup-norm.
template <class Mat>
double row_sum_norm(const Mat& A) {
  return A.cwiseAbs().rowwise().sum().maxCoeff();
}

/// All vectors in {+1, -1, +i, -i}^n.
inline std::vector<CVec> polydisc_directions(int n) {
  static const cplx dirs[4] = {{1, 0}, {-1, 0}, {0, 1}, {0, -1}};
  std::vector<CVec> out;
  std::vector<int> idx(static_cast<std::size_t>(n), 0);
  while (true) {
    CVec z(n);
    for (int i = 0; i < n; ++i) z(i) = dirs[idx[static_cast<std::size_t>(i)]];
    out.push_back(z);
    int d = 0;
    while (d < n && ++idx[static_cast<std::size_t>(d)] == 4) idx[static_cast<std::size_t>(d++)] = 0;
    if (d == n) break;
  }
  return out;
}

/// Corners of the bounding box of D (or the points of a point list).
inline std::vector<RVec> domain_corners(const DomainSpec& D) {
  if (!D.is_box()) return D.points;
  return DomainSpec::box_grid(D.lower(), D.upper(), 2);
}

inline double sampled_sup_f(const AnalyticModel& model, const DomainSpec& D, int g) {
  const int n = model.n();
  const auto& modes = model.modes();
  const auto dirs = polydisc_directions(n);
  // Angle samples: real grid with imaginary parts +-s per coordinate.
  std::vector<CVec> qs;
  {
    std::vector<int> ii(static_cast<std::size_t>(2 * n), 0);
    while (true) {
      CVec q(n);
      for (int j = 0; j < n; ++j)
        q(j) = cplx(2.0 * M_PI * ii[static_cast<std::size_t>(j)] / g, ii[static_cast<std::size_t>(n + j)] ? -D.s : D.s);
      qs.push_back(q);
      int d = 0;
      while (d < 2 * n) {
        const int lim = d < n ? g : 2;
        if (++ii[static_cast<std::size_t>(d)] < lim) break;
        ii[static_cast<std::size_t>(d++)] = 0;
      }
      if (d == 2 * n) break;
    }
  }
  std::vector<cplx> phases(qs.size() * modes.size());
  for (std::size_t a = 0; a < qs.size(); ++a)
    for (std::size_t m = 0; m < modes.size(); ++m) {
      cplx arg(0.0);
      for (int j = 0; j < n; ++j) arg += static_cast<double>(modes[m].k[static_cast<std::size_t>(j)]) * qs[a](j);
      phases[a * modes.size() + m] = std::exp(cplx(0.0, 1.0) * arg);
    }
  double best = 0.0;
  std::vector<cplx> coeff(modes.size());
  for (const RVec& c : D.grid(g)) {
    for (const CVec& z : dirs) {
      CVec p = c.cast<cplx>() + D.r0 * z;
      for (std::size_t m = 0; m < modes.size(); ++m) coeff[m] = modes[m].coeff.eval(p.data());
      for (std::size_t a = 0; a < qs.size(); ++a) {
        cplx acc(0.0);
        const cplx* ph = &phases[a * modes.size()];
        for (std::size_t m = 0; m < modes.size(); ++m) acc += coeff[m] * ph[m];
        best = std::max(best, std::abs(acc));
      }
    }
  }
  return best;
}

inline std::size_t sampled_f_cost(const AnalyticModel& model, const DomainSpec& D, int g) {
  const int n = model.n();
  const double centers = D.is_box() ? std::pow(static_cast<double>(g), n) : static_cast<double>(D.points.size());
  const double cost = centers * std::pow(4.0, n) * std::pow(2.0 * g, n);
  return static_cast<std::size_t>(std::min(cost, 1e18));
}

}  // namespace detail

/// eps = ||f|| over the complex r0-neighbourhood of D times the strip |Im q| < s.
/// Rigorous: sum_k (coefficient majorant of f_k at boxed radii) e^{|k|_1 s}.
/// Sampled: max |f| over grids on the distinguished boundary (a lower estimate).
inline double sup_norm_f(const AnalyticModel& model, const DomainSpec& D, const NormOptions& opt = {}) {
  D.validate(model.n());
  if (!model.has_perturbation()) return 0.0;
  if (opt.mode == NormMode::rigorous) {
    const auto R = D.boxed_radii(D.r0);
    double acc = 0.0;
    for (const auto& mode : model.modes()) {
      int l1 = 0;
      for (int v : mode.k) l1 += std::abs(v);
      acc += mode.coeff.majorant(R) * std::exp(l1 * D.s);
    }
    return acc;
  }
  int g = std::max(2, opt.grid);
  while (g > 2 && detail::sampled_f_cost(model, D, g) > opt.budget) --g;
  double value = detail::sampled_sup_f(model, D, g);
  while (detail::sampled_f_cost(model, D, 2 * g) <= opt.budget) {
    g *= 2;
    const double next = std::max(value, detail::sampled_sup_f(model, D, g));
    const bool settled = next - value <= opt.refine_tol * std::max(next, 1e-300);
    value = next;
    if (settled) break;
  }
  return value;
}

/// M = sup ||h_pp|| (max row sum) over the complex r0-neighbourhood of D.
inline double hess_norm(const AnalyticModel& model, const DomainSpec& D, const NormOptions& opt = {}) {
  D.validate(model.n());
  const int n = model.n();
  double M = 0.0;
  if (opt.mode == NormMode::rigorous) {
    const auto R = D.boxed_radii(D.r0);
    for (int i = 0; i < n; ++i) {
      double row = 0.0;
      for (int j = 0; j < n; ++j) row += model.h_hess_poly(i, j).majorant(R);
      M = std::max(M, row);
    }
  } else {
    const RVec lo = D.lower().array() - D.r0;
    const RVec hi = D.upper().array() + D.r0;
    for (const RVec& p : DomainSpec::box_grid(lo, hi, std::max(2, opt.grid)))
      M = std::max(M, detail::row_sum_norm(model.hessian(p.data())));
    for (const RVec& p : D.grid(std::max(2, opt.grid))) M = std::max(M, detail::row_sum_norm(model.hessian(p.data())));
    const auto dirs = detail::polydisc_directions(n);
    for (const RVec& c : detail::domain_corners(D))
      for (const CVec& z : dirs) {
        CVec p = c.cast<cplx>() + D.r0 * z;
        M = std::max(M, detail::row_sum_norm(model.hessian(p.data())));
      }
  }
  if (!(M > 0.0)) throw NondegeneracyError("h_pp vanishes identically (M = 0): degenerate integrable part");
  return M;
}

/// det h_pp as a polynomial in p (Leibniz expansion).
inline Polynomial hessian_determinant(const AnalyticModel& model) {
  const int n = model.n();
  std::vector<int> perm(static_cast<std::size_t>(n));
  std::iota(perm.begin(), perm.end(), 0);
  Polynomial det(n);
  do {
    int inversions = 0;
    for (int a = 0; a < n; ++a)
      for (int b = a + 1; b < n; ++b)
        if (perm[static_cast<std::size_t>(a)] > perm[static_cast<std::size_t>(b)]) ++inversions;
    Polynomial term = Polynomial::constant(n, inversions % 2 ? -1.0 : 1.0);
    for (int i = 0; i < n; ++i) term = term * model.h_hess_poly(i, perm[static_cast<std::size_t>(i)]);
    det += term;
  } while (std::next_permutation(perm.begin(), perm.end()));
  return det;
}

/// d = inf over (real) D of |det h_pp|.
///
/// Sampled: minimum over the grid of D plus `extra` points.  Rigorous: exact
/// when h_pp is constant or D is a point list; otherwise the grid minimum minus
/// a majorant of |grad det| times the half grid spacing (refined up to 4x).
inline double det_inf(const AnalyticModel& model, const DomainSpec& D, const NormOptions& opt = {},
                      const std::vector<RVec>& extra = {}) {
  D.validate(model.n());
  const int n = model.n();
  auto abs_det = [&](const RVec& p) { return std::abs(model.hessian(p.data()).determinant()); };
  double scale = 0.0;
  double d = 0.0;
  if (opt.mode == NormMode::rigorous && model.constant_hessian()) {
    d = abs_det(D.lower());
    scale = std::pow(detail::row_sum_norm(model.hessian(D.lower().data())), n);
  } else {
    auto grid_min = [&](int g) {
      double m = std::numeric_limits<double>::infinity();
      for (const RVec& p : D.grid(g)) {
        m = std::min(m, abs_det(p));
        scale = std::max(scale, std::pow(detail::row_sum_norm(model.hessian(p.data())), n));
      }
      for (const RVec& p : extra) m = std::min(m, abs_det(p));
      return m;
    };
    const int g0 = std::max(2, opt.grid);
    d = grid_min(g0);
    if (opt.mode == NormMode::rigorous && D.is_box()) {
      const Polynomial det = hessian_determinant(model);
      const auto R = D.boxed_radii(0.0);
      std::vector<double> grad_bound(static_cast<std::size_t>(n));
      for (int i = 0; i < n; ++i) grad_bound[static_cast<std::size_t>(i)] = det.derivative(i).majorant(R);
      const RVec width = D.upper() - D.lower();
      double lower_bound = -1.0;
      for (int g = g0; g <= 4 * g0; g *= 2) {
        const double m = grid_min(g);
        double slack = 0.0;
        for (int i = 0; i < n; ++i) slack += grad_bound[static_cast<std::size_t>(i)] * 0.5 * width(i) / (g - 1);
        lower_bound = std::max(lower_bound, m - slack);
        if (lower_bound > 0.0) break;
      }
      d = lower_bound;
    }
  }
  if (!(d > 1e-12 * std::max(scale, 1e-300)))
    throw NondegeneracyError("nondegeneracy violated: inf |det h_pp| over D is not positive (d = " + std::to_string(d) + ")");
  return d;
}

/// mu = d / M^n, with the 0 < mu <= 1 invariant enforced.
inline double torsion_parameter(double d, double M, int n) {
  const double mu = d / std::pow(M, n);
  if (!(mu > 0.0)) throw NondegeneracyError("mu = d / M^n must be positive");
  if (mu > 1.0 + 1e-12) throw ConsistencyError("mu = d / M^n exceeds 1: M underestimated");
  return std::min(mu, 1.0);
}

/// Assemble the bundle from measured M, d and eps once L is known.
inline NormBundle assemble_bundle(int n, double M, double d, double eps, double L, double r0, NormMode mode,
                                  std::string eps_source) {
  NormBundle b;
  b.n = n;
  b.mode = mode;
  b.M = M;
  b.d = d;
  b.mu = torsion_parameter(d, M, n);
  if (!(eps >= 0.0)) throw Error("eps must be non-negative");
  b.eps = eps;
  b.eps_source = std::move(eps_source);
  b.L = L;
  b.lambda = L * M;
  b.eps_hat = eps / (M * r0 * r0);
  if (b.lambda < 1.0 - 1e-12) throw ConsistencyError("lambda = L M < 1: inconsistent L and M estimates");
  if (b.lambda > 2.0 * detail::factorial(n) / b.mu * (1.0 + 1e-12))
    throw ConsistencyError("lambda exceeds 2 n!/mu: L overestimated");
  return b;
}

/// Assemble the bundle once L is known (from the frequency map module).
/// `eps_override` replaces the measured eps by a user-asserted bound.
inline NormBundle bundle(const AnalyticModel& model, const DomainSpec& D, double L, const NormOptions& opt = {},
                         std::optional<double> eps_override = std::nullopt, const std::vector<RVec>& extra_points = {}) {
  const double M = hess_norm(model, D, opt);
  const double d = det_inf(model, D, opt, extra_points);
  if (eps_override) return assemble_bundle(model.n(), M, d, *eps_override, L, D.r0, opt.mode, "user");
  return assemble_bundle(model.n(), M, d, sup_norm_f(model, D, opt), L, D.r0, opt.mode, to_string(opt.mode));
}

}  // namespace kamest
