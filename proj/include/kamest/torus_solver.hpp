#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "kamest/analytic_model.hpp"
#include "kamest/diophantine.hpp"
#include "kamest/error.hpp"
#include "kamest/fourier.hpp"
#include "kamest/frequency_map.hpp"
#include "kamest/integrator.hpp"
#include "kamest/kam_constants.hpp"

namespace kamest {

/// Graph torus theta -> (P(theta), theta + U(theta)) with prescribed frequency.
/// P_hat[i], U_hat[i] are the Fourier coefficients of the components; U has
/// zero mean.  p0 is the unperturbed action with h_p(p0) = omega, i.e. the
/// trivial embedding theta -> (p0, theta).
struct TorusEmbedding {
  int n = 0;
  int N = 0;
  RVec omega;
  RVec p0;
  std::vector<Coeffs> P_hat;
  std::vector<Coeffs> U_hat;
  double residual = 0.0;
  int newton_steps = 0;
  std::vector<double> residual_history;

  /// Embedding at a real angle; q is returned lifted (theta + U(theta)).
  void eval(const double* theta, double* p, double* q) const {
    std::vector<std::vector<cplx>> tables(static_cast<std::size_t>(n), std::vector<cplx>(static_cast<std::size_t>(N)));
    for (int d = 0; d < n; ++d)
      for (int j = 0; j < N; ++j) {
        const int k = j < N / 2 ? j : j - N;
        tables[static_cast<std::size_t>(d)][static_cast<std::size_t>(j)] = std::polar(1.0, k * theta[d]);
      }
    for (int i = 0; i < n; ++i) {
      p[i] = 0.0;
      q[i] = theta[i];
    }
    const std::size_t size = P_hat.front().size();
    for (std::size_t idx = 0; idx < size; ++idx) {
      bool any = false;
      for (int i = 0; i < n && !any; ++i)
        any = P_hat[static_cast<std::size_t>(i)][idx] != cplx(0.0) || U_hat[static_cast<std::size_t>(i)][idx] != cplx(0.0);
      if (!any) continue;
      std::size_t rest = idx;
      cplx e(1.0);
      for (int d = n - 1; d >= 0; --d) {
        e *= tables[static_cast<std::size_t>(d)][rest % static_cast<std::size_t>(N)];
        rest /= static_cast<std::size_t>(N);
      }
      for (int i = 0; i < n; ++i) {
        p[i] += (P_hat[static_cast<std::size_t>(i)][idx] * e).real();
        q[i] += (U_hat[static_cast<std::size_t>(i)][idx] * e).real();
      }
    }
  }
};

struct TorusOptions {
  int N_F = 32;
  double tol = 1e-10;
  int max_newton = 12;
};

/// Real action p with h_p(p) = omega by Newton's method from a guess.
inline RVec solve_frequency(const AnalyticModel& model, const RVec& omega, const RVec& guess) {
  RVec p = guess;
  const double tol = 1e-14 * std::max(1.0, omega.cwiseAbs().maxCoeff());
  for (int it = 0; it < 100; ++it) {
    const RVec defect = model.frequency(p.data()).real() - omega;
    if (defect.cwiseAbs().maxCoeff() <= tol) return p;
    const RMat H = model.hessian(p.data()).real();
    p -= detail::checked_inverse(H.cast<cplx>(), "solve_frequency").real() * defect;
  }
  const RVec defect = model.frequency(p.data()).real() - omega;
  if (defect.cwiseAbs().maxCoeff() <= 1e3 * tol) return p;
  throw ConvergenceError("could not find the action with the prescribed frequency");
}

namespace detail {

/// Grid data of one Newton step.
struct TorusGrid {
  std::vector<RVec> theta;
  std::vector<RMat> DP, DU, S;
  std::vector<RVec> p, q, E;
  double residual = 0.0;
};

inline TorusGrid evaluate_torus(const AnalyticModel& model, Spectral& sp, const TorusEmbedding& T, int M,
                                bool keep_hessian) {
  const int n = T.n;
  TorusGrid g;
  g.theta = sp.grid_points(M);
  const std::size_t G = g.theta.size();
  std::vector<std::vector<double>> Pg(static_cast<std::size_t>(n)), Ug(static_cast<std::size_t>(n));
  std::vector<std::vector<std::vector<double>>> DPg(static_cast<std::size_t>(n)), DUg(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const auto ui = static_cast<std::size_t>(i);
    Pg[ui] = sp.to_grid(T.P_hat[ui], M);
    Ug[ui] = sp.to_grid(T.U_hat[ui], M);
    for (int j = 0; j < n; ++j) {
      DPg[ui].push_back(sp.to_grid(sp.derivative(T.P_hat[ui], j), M));
      DUg[ui].push_back(sp.to_grid(sp.derivative(T.U_hat[ui], j), M));
    }
  }
  g.DP.assign(G, RMat(n, n));
  g.DU.assign(G, RMat(n, n));
  g.p.assign(G, RVec(n));
  g.q.assign(G, RVec(n));
  g.E.assign(G, RVec(2 * n));
  if (keep_hessian) g.S.assign(G, RMat(2 * n, 2 * n));
  std::vector<double> grad(static_cast<std::size_t>(2 * n));
  RMat S(2 * n, 2 * n);
  for (std::size_t a = 0; a < G; ++a) {
    for (int i = 0; i < n; ++i) {
      const auto ui = static_cast<std::size_t>(i);
      g.p[a](i) = Pg[ui][a];
      g.q[a](i) = g.theta[a](i) + Ug[ui][a];
      for (int j = 0; j < n; ++j) {
        g.DP[a](i, j) = DPg[ui][static_cast<std::size_t>(j)][a];
        g.DU[a](i, j) = DUg[ui][static_cast<std::size_t>(j)][a];
      }
    }
    model.phase_derivatives(g.p[a].data(), g.q[a].data(), grad.data(), S);
    const RVec dPw = g.DP[a] * T.omega;
    const RVec dUw = g.DU[a] * T.omega;
    for (int i = 0; i < n; ++i) {
      g.E[a](i) = -grad[static_cast<std::size_t>(n + i)] - dPw(i);
      g.E[a](n + i) = grad[static_cast<std::size_t>(i)] - T.omega(i) - dUw(i);
    }
    g.residual = std::max(g.residual, g.E[a].cwiseAbs().maxCoeff());
    if (keep_hessian) g.S[a] = S;
  }
  return g;
}

inline std::vector<double> component(const std::vector<RVec>& v, int i) {
  std::vector<double> out(v.size());
  for (std::size_t a = 0; a < v.size(); ++a) out[a] = v[a](i);
  return out;
}

inline std::string format_k(const std::vector<int>& k) {
  std::string s = "(";
  for (std::size_t i = 0; i < k.size(); ++i) s += (i ? "," : "") + std::to_string(k[i]);
  return s + ")";
}

}  // namespace detail

/// Sup of the invariance defect X_H(K) - DK omega over an M^n angle grid.
inline double invariance_defect(const AnalyticModel& model, const TorusEmbedding& T, int M) {
  Spectral sp(T.n, T.N);
  return detail::evaluate_torus(model, sp, T, M, false).residual;
}

/// Newton iteration on the invariance equation X_H(K) = DK omega.
///
/// The correction is written in the frame M = [L N] with L = DK and
/// N = J L (L^T L)^{-1}; in this frame the linearised equation is upper
/// triangular up to terms quadratic in the defect:
///   omega.grad xi1 + T xi2 = eta1,  omega.grad xi2 = eta2,  eta = M^{-1} E,
/// T the torsion block.  The mean of xi2 is fixed by the averaged torsion,
/// the mean of xi1 by keeping U zero-mean.
inline TorusEmbedding construct_torus(const AnalyticModel& model, const RVec& omega, const RVec& p_guess,
                                      const TorusOptions& opt = {}) {
  const int n = model.n();
  if (omega.size() != n || p_guess.size() != n) throw DimensionError("frequency or base point has the wrong length");
  Spectral sp(n, opt.N_F);
  if (auto k = sp.zero_divisor(omega)) throw ResonanceError("resonant frequency: omega.k = 0 for k = " + detail::format_k(*k));

  TorusEmbedding T;
  T.n = n;
  T.N = opt.N_F;
  T.omega = omega;
  T.p0 = solve_frequency(model, omega, p_guess);
  T.P_hat.assign(static_cast<std::size_t>(n), sp.zeros());
  T.U_hat.assign(static_cast<std::size_t>(n), sp.zeros());
  for (int i = 0; i < n; ++i) T.P_hat[static_cast<std::size_t>(i)][0] = T.p0(i);

  const int M = sp.padded();
  const std::size_t G = [&] {
    std::size_t g = 1;
    for (int i = 0; i < n; ++i) g *= static_cast<std::size_t>(M);
    return g;
  }();
  RMat J = RMat::Zero(2 * n, 2 * n);
  J.topRightCorner(n, n) = -RMat::Identity(n, n);
  J.bottomLeftCorner(n, n) = RMat::Identity(n, n);
  const RMat I = RMat::Identity(n, n);

  while (true) {
    detail::TorusGrid g = detail::evaluate_torus(model, sp, T, M, true);
    T.residual_history.push_back(g.residual);
    if (g.residual <= opt.tol) break;
    if (T.newton_steps == opt.max_newton)
      throw ConvergenceError("torus Newton iteration did not reach tol in " + std::to_string(opt.max_newton) +
                             " steps (residual " + std::to_string(g.residual) + ")");
    if (T.residual_history.size() > 1 && g.residual > 10.0 * T.residual_history[T.residual_history.size() - 2])
      throw ConvergenceError("torus Newton iteration diverged");

    // Frame and its omega-derivative.
    std::vector<RMat> L(G), Nf(G);
    for (std::size_t a = 0; a < G; ++a) {
      L[a].resize(2 * n, n);
      L[a] << g.DP[a], I + g.DU[a];
      RMat JL(2 * n, n);
      JL << -(I + g.DU[a]), g.DP[a];
      Nf[a] = JL * (L[a].transpose() * L[a]).inverse();
    }
    std::vector<RMat> dN(G, RMat(2 * n, n));
    for (int r = 0; r < 2 * n; ++r)
      for (int c = 0; c < n; ++c) {
        std::vector<double> f(G);
        for (std::size_t a = 0; a < G; ++a) f[a] = Nf[a](r, c);
        const auto d = sp.to_grid(sp.directional(sp.from_grid(f, M), omega), M);
        for (std::size_t a = 0; a < G; ++a) dN[a](r, c) = d[a];
      }

    std::vector<RMat> Tor(G);
    std::vector<RVec> eta(G);
    std::vector<Eigen::PartialPivLU<RMat>> lu;
    lu.reserve(G);
    RMat Tavg = RMat::Zero(n, n);
    for (std::size_t a = 0; a < G; ++a) {
      RMat Mf(2 * n, 2 * n);
      Mf << L[a], Nf[a];
      lu.emplace_back(Mf);
      Tor[a] = lu.back().solve(dN[a] - J * g.S[a] * Nf[a]).topRows(n);
      eta[a] = lu.back().solve(g.E[a]);
      Tavg += Tor[a];
    }
    Tavg /= static_cast<double>(G);
    Eigen::FullPivLU<RMat> Tlu(Tavg);
    if (!Tlu.isInvertible() || std::abs(Tavg.determinant()) < 1e-12 * std::pow(Tavg.cwiseAbs().maxCoeff(), n))
      throw NondegeneracyError("averaged torsion matrix is singular");

    // xi2
    std::vector<RVec> xi2(G, RVec::Zero(n));
    RVec eta1_mean(n);
    for (int i = 0; i < n; ++i) {
      Coeffs e2 = sp.from_grid(detail::component(eta, n + i), M);
      e2[0] = 0.0;
      const auto x = sp.to_grid(solve_cohomological(sp, e2, omega), M);
      for (std::size_t a = 0; a < G; ++a) xi2[a](i) = x[a];
      eta1_mean(i) = Spectral::mean(sp.from_grid(detail::component(eta, i), M));
    }
    RVec Txi_mean = RVec::Zero(n);
    for (std::size_t a = 0; a < G; ++a) Txi_mean += Tor[a] * xi2[a];
    Txi_mean /= static_cast<double>(G);
    const RVec xi2_mean = Tlu.solve(eta1_mean - Txi_mean);
    for (auto& x : xi2) x += xi2_mean;

    // xi1
    std::vector<RVec> rhs(G);
    for (std::size_t a = 0; a < G; ++a) rhs[a] = eta[a].head(n) - Tor[a] * xi2[a];
    std::vector<RVec> xi1(G, RVec::Zero(n));
    for (int i = 0; i < n; ++i) {
      Coeffs r1 = sp.from_grid(detail::component(rhs, i), M);
      r1[0] = 0.0;
      const auto x = sp.to_grid(solve_cohomological(sp, r1, omega), M);
      for (std::size_t a = 0; a < G; ++a) xi1[a](i) = x[a];
    }
    RVec dU_mean = RVec::Zero(n);
    RMat Lq_mean = RMat::Zero(n, n);
    for (std::size_t a = 0; a < G; ++a) {
      dU_mean += L[a].bottomRows(n) * xi1[a] + Nf[a].bottomRows(n) * xi2[a];
      Lq_mean += L[a].bottomRows(n);
    }
    dU_mean /= static_cast<double>(G);
    Lq_mean /= static_cast<double>(G);
    const RVec xi1_mean = -Lq_mean.partialPivLu().solve(dU_mean);

    std::vector<RVec> dK(G);
    for (std::size_t a = 0; a < G; ++a) dK[a] = L[a] * (xi1[a] + xi1_mean) + Nf[a] * xi2[a];
    for (int i = 0; i < n; ++i) {
      const auto ui = static_cast<std::size_t>(i);
      const Coeffs dP = sp.from_grid(detail::component(dK, i), M);
      const Coeffs dU = sp.from_grid(detail::component(dK, n + i), M);
      for (std::size_t idx = 0; idx < sp.size(); ++idx) {
        T.P_hat[ui][idx] += dP[idx];
        T.U_hat[ui][idx] += dU[idx];
      }
      T.U_hat[ui][0] = 0.0;
      T.P_hat[ui][0] = T.P_hat[ui][0].real();
    }
    ++T.newton_steps;
  }
  T.residual = invariance_defect(model, T, 2 * T.N);
  return T;
}

struct ConjugacyReport {
  double max_deviation = 0.0;
  std::vector<double> deviation_per_start;  ///< first entry is theta0 = 0
  double max_energy_drift = 0.0;            ///< relative
  double dt = 0.0;
  RVec frequency;  ///< least-squares slope of the lifted angles (theta0 = 0 orbit)
  double frequency_error = 0.0;
};

/// Integrate from K(theta0) over [0, t_max] and compare with K(theta0 + omega t).
/// A relative energy drift above 1e-6 rejects the step size: dt is halved
/// (at most four times).
inline ConjugacyReport verify_conjugacy(const AnalyticModel& model, const TorusEmbedding& T, double t_max, double dt,
                                        int n_starts = 4) {
  if (!(t_max > 0.0) || !(dt > 0.0)) throw Error("t_max and dt must be positive");
  const int n = T.n;
  for (int attempt = 0; attempt < 5; ++attempt, dt *= 0.5) {
    ConjugacyReport rep;
    rep.dt = dt;
    const Rk4 rk(model);
    const long steps = static_cast<long>(std::ceil(t_max / dt - 1e-9));
    const double h = t_max / static_cast<double>(steps);
    rep.dt = h;
    const long every = std::max(1L, static_cast<long>(std::lround(0.1 / h)));
    bool rejected = false;
    for (int s = 0; s < n_starts && !rejected; ++s) {
      RVec theta0(n);
      for (int d = 0; d < n; ++d) {
        const double a = std::sqrt(static_cast<double>(2 + d)) - 1.0;
        theta0(d) = 2.0 * M_PI * (s * a - std::floor(s * a));
      }
      PhaseState st;
      st.n = n;
      T.eval(theta0.data(), st.p(), st.q());
      const double E0 = rk.energy(st);
      const double escale = std::max(std::abs(E0), 1e-300);
      double dev = 0.0;
      std::vector<double> ts;
      std::vector<RVec> qs;
      RVec th(n), pk(n), qk(n);
      for (long k = 1; k <= steps; ++k) {
        rk.step(st, h);
        if (k % every != 0 && k != steps) continue;
        const double t = static_cast<double>(k) * h;
        th = theta0 + T.omega * t;
        T.eval(th.data(), pk.data(), qk.data());
        for (int i = 0; i < n; ++i) {
          dev = std::max(dev, std::abs(st.p()[i] - pk(i)));
          dev = std::max(dev, std::abs(st.q()[i] - qk(i)));
        }
        const double drift = std::abs(rk.energy(st) - E0) / escale;
        rep.max_energy_drift = std::max(rep.max_energy_drift, drift);
        if (drift > 1e-6) {
          rejected = true;
          break;
        }
        if (s == 0) {
          ts.push_back(t);
          qs.push_back(Eigen::Map<const RVec>(st.q(), n));
        }
      }
      rep.deviation_per_start.push_back(dev);
      rep.max_deviation = std::max(rep.max_deviation, dev);
      if (s == 0 && !rejected) {
        rep.frequency.resize(n);
        const double tm = std::accumulate(ts.begin(), ts.end(), 0.0) / static_cast<double>(ts.size());
        for (int i = 0; i < n; ++i) {
          double qm = 0.0;
          for (const auto& q : qs) qm += q(i);
          qm /= static_cast<double>(qs.size());
          double num = 0.0, den = 0.0;
          for (std::size_t a = 0; a < ts.size(); ++a) {
            num += (ts[a] - tm) * (qs[a](i) - qm);
            den += (ts[a] - tm) * (ts[a] - tm);
          }
          rep.frequency(i) = num / den;
        }
        rep.frequency_error = (rep.frequency - T.omega).cwiseAbs().maxCoeff();
      }
    }
    if (!rejected) return rep;
  }
  throw ConvergenceError("energy drift above 1e-6 even after step-size reduction");
}

struct GeometryReport {
  double distance = 0.0;            ///< sup_theta |P(theta) - p0|
  double r_eps = 0.0;
  bool within_r_eps = false;
  double margin = 0.0;              ///< r_eps - distance
  double inclusion_radius = 0.0;    ///< r_hat + r_eps
  double distance_to_center = 0.0;  ///< sup_theta |P(theta) - p_i|
  bool inclusion_ok = false;
  bool falsification_candidate = false;
  // Membership in the certified family: omega (alpha, tau)-Diophantine up to
  // K and at distance >= alpha from the boundary of h_p(B_r_hat(p_i)).
  bool diophantine_upto_K = false;
  double boundary_distance_lower = 0.0;
  bool certified_family_member = false;
};

/// Compare the constructed torus with the closeness and inclusion bounds of a
/// passing certificate.  `center` is the covering centre p_i (default p0);
/// `K` is the lattice cutoff of the membership test.
inline GeometryReport check_paper_geometry(const TorusEmbedding& T, const Certificate& cert,
                                           std::optional<RVec> center = std::nullopt, int K = 50) {
  if (!cert.pass) throw Error("geometry check needs a passing certificate");
  const RVec c = center.value_or(T.p0);
  GeometryReport rep;
  rep.r_eps = cert.r_eps;
  rep.inclusion_radius = cert.r_hat + cert.r_eps;
  Spectral sp(T.n, T.N);
  const int M = 2 * T.N;
  std::vector<RVec> P(sp.grid_points(M).size(), RVec(T.n));
  for (int i = 0; i < T.n; ++i) {
    const auto v = sp.to_grid(T.P_hat[static_cast<std::size_t>(i)], M);
    for (std::size_t a = 0; a < v.size(); ++a) P[a](i) = v[a];
  }
  for (const RVec& p : P) {
    rep.distance = std::max(rep.distance, (p - T.p0).cwiseAbs().maxCoeff());
    rep.distance_to_center = std::max(rep.distance_to_center, (p - c).cwiseAbs().maxCoeff());
  }
  rep.within_r_eps = rep.distance <= rep.r_eps;
  rep.margin = rep.r_eps - rep.distance;
  rep.inclusion_ok = rep.distance_to_center <= rep.inclusion_radius;
  rep.falsification_candidate = !rep.within_r_eps || !rep.inclusion_ok;
  if (cert.alpha > 0.0) {
    rep.diophantine_upto_K = is_diophantine_upto(T.omega, cert.alpha, cert.sc.tau, K).diophantine;
    rep.boundary_distance_lower = std::max(0.0, cert.r_hat - (T.p0 - c).cwiseAbs().maxCoeff()) / cert.bundle.L;
    rep.certified_family_member = rep.diophantine_upto_K && rep.boundary_distance_lower >= cert.alpha;
  }
  return rep;
}

/// Local normal form around the trivial torus at the action p(omega):
/// H(p(omega) + I, theta) = e(omega) + omega.I + P(I, theta, omega).
class LocalNormalForm {
 public:
  LocalNormalForm(const AnalyticModel& model, const RVec& p0, const Certificate& cert)
      : model_(model),
        branch_(make_branch(model, p0, cert.r_star)),
        r_(cert.r),
        theta_param_(cert.theta_param) {
    if (theta_param_ > branch_.rho) throw ConsistencyError("parameter ball exceeds the inverse branch radius");
  }

  const InverseBranch& branch() const { return branch_; }
  double r() const { return r_; }
  double theta_param() const { return theta_param_; }

  CVec action(const CVec& omega) const { return invert(model_, branch_, omega).p; }
  cplx e(const CVec& omega) const {
    const CVec p = action(omega);
    return model_.eval_h(p.data());
  }
  cplx N(const CVec& I, const CVec& omega) const { return e(omega) + omega.cwiseProduct(I).sum(); }

  /// Integral form: int_0^1 (1-t) h_pp(p + t I) I.I dt + f(p + I, theta),
  /// three-point Gauss-Legendre (exact for h of degree <= 4).
  cplx P(const CVec& I, const CVec& theta, const CVec& omega) const { return P_at(action(omega), I, theta); }

  /// Same remainder written as H(p + I, theta) - h(p) - h_p(p).I.
  cplx P_direct(const CVec& I, const CVec& theta, const CVec& omega) const {
    const CVec p = action(omega);
    const CVec pI = p + I;
    const CVec w = model_.frequency(p);
    return model_.evaluate(pI, theta) - model_.eval_h(p.data()) - (w.transpose() * I)(0);
  }

  cplx P_at(const CVec& p, const CVec& I, const CVec& theta) const {
    static const double nodes[3] = {0.5 - 0.5 * std::sqrt(0.6), 0.5, 0.5 + 0.5 * std::sqrt(0.6)};
    static const double weights[3] = {5.0 / 18.0, 8.0 / 18.0, 5.0 / 18.0};
    cplx acc(0.0);
    for (int j = 0; j < 3; ++j) {
      const CVec x = p + nodes[j] * I;
      const CMat H = model_.hessian(x);
      acc += weights[j] * (1.0 - nodes[j]) * (I.transpose() * H * I)(0);
    }
    const CVec pI = p + I;
    return acc + model_.eval_f(pI.data(), theta.data());
  }

 private:
  const AnalyticModel& model_;
  InverseBranch branch_;
  double r_;
  double theta_param_;
};

struct NormalFormCheck {
  double sup_P = 0.0;
  double eps = 0.0;
  bool within_2eps = false;
  double ratio = 0.0;              ///< 2 eps / (c* alpha r s^nu) from the certificate values
  double ratio_closed_form = 0.0;  ///< (2 chat / c*) (mu s^{2 nu} / lambda)
  bool ratio_ok = true;            ///< ratio <= 1/8 (checked when the certificate passes)
  double identity_error = 0.0;     ///< max |N + P - H| relative to max(1, |H|)
  double route_difference = 0.0;   ///< max |P - (H - e - omega.I)|, quadrature vs direct
};

struct NormalFormOptions {
  std::optional<double> I_radius;  ///< replaces r = sqrt(eps_hat) r0
  int theta_grid = 6;
};

/// Sample |P| on |I| = r, |Im theta| = s, omega in the parameter ball.
inline NormalFormCheck local_normal_form_check(const AnalyticModel& model, const RVec& p0, const Certificate& cert,
                                               const NormalFormOptions& opt = {}) {
  const int n = model.n();
  const LocalNormalForm lnf(model, p0, cert);
  const double r = opt.I_radius.value_or(cert.r);
  NormalFormCheck out;
  out.eps = cert.bundle.eps;
  const auto& sc = cert.sc;
  const double s_nu = std::pow(cert.s, sc.nu);
  out.ratio_closed_form = (2.0 * sc.chat / sc.cstar) * (cert.bundle.mu * s_nu * s_nu / cert.bundle.lambda);
  const double denom = sc.cstar * cert.alpha * cert.r * s_nu;
  out.ratio = denom > 0.0 ? 2.0 * out.eps / denom : out.ratio_closed_form;
  out.ratio_ok = !cert.pass || out.ratio <= 0.125 * (1.0 + 1e-12);

  const auto dirs = detail::polydisc_directions(n);
  std::vector<CVec> omegas{lnf.branch().omega0};
  for (const CVec& z : dirs) omegas.push_back(lnf.branch().omega0 + lnf.theta_param() * z);
  std::vector<CVec> thetas;
  for (const RVec& x : DomainSpec::box_grid(RVec::Zero(n), RVec::Constant(n, 2.0 * M_PI * (1.0 - 1.0 / opt.theta_grid)),
                                            opt.theta_grid))
    for (int mask = 0; mask < (1 << n); ++mask) {
      CVec th(n);
      for (int d = 0; d < n; ++d) th(d) = cplx(x(d), (mask >> d) & 1 ? -cert.s : cert.s);
      thetas.push_back(th);
    }
  for (const CVec& om : omegas) {
    const CVec p = lnf.action(om);
    const cplx e = model.eval_h(p.data());
    for (const CVec& z : dirs) {
      const CVec I = r * z;
      const cplx lin = e + (om.transpose() * I)(0);
      for (const CVec& th : thetas) {
        const cplx P = lnf.P_at(p, I, th);
        out.sup_P = std::max(out.sup_P, std::abs(P));
        const CVec pI = p + I;
        const cplx H = model.evaluate(pI, th);
        out.route_difference = std::max(out.route_difference, std::abs(P - (H - lin)));
        out.identity_error = std::max(out.identity_error, std::abs(lin + P - H) / std::max(1.0, std::abs(H)));
      }
    }
  }
  out.within_2eps = out.sup_P <= 2.0 * out.eps * (1.0 + 1e-12) + 1e-300;
  return out;
}

/// Plain-text torus file: header lines then one line per nonzero mode
///   k_1 .. k_n  Re P_1 Im P_1 .. Re P_n Im P_n  Re U_1 Im U_1 .. Re U_n Im U_n
inline void save_torus(const TorusEmbedding& T, std::ostream& out) {
  out << "# kamest torus v1 (text, decimal, 17 significant digits)\n";
  out << std::setprecision(17);
  out << "n " << T.n << "\nN_F " << T.N << "\nomega";
  for (int i = 0; i < T.n; ++i) out << ' ' << T.omega(i);
  out << "\np0";
  for (int i = 0; i < T.n; ++i) out << ' ' << T.p0(i);
  out << "\nresidual " << T.residual << "\nnewton_steps " << T.newton_steps << "\ncoefficients\n";
  Spectral sp(T.n, T.N);
  for (std::size_t idx = 0; idx < sp.size(); ++idx) {
    bool any = false;
    for (int i = 0; i < T.n; ++i)
      any = any || T.P_hat[static_cast<std::size_t>(i)][idx] != cplx(0.0) || T.U_hat[static_cast<std::size_t>(i)][idx] != cplx(0.0);
    if (!any) continue;
    for (int d = 0; d < T.n; ++d) out << sp.k(idx)[d] << ' ';
    for (const auto* part : {&T.P_hat, &T.U_hat})
      for (int i = 0; i < T.n; ++i) {
        const cplx c = (*part)[static_cast<std::size_t>(i)][idx];
        out << ' ' << c.real() << ' ' << c.imag();
      }
    out << '\n';
  }
}

inline TorusEmbedding load_torus(std::istream& in) {
  TorusEmbedding T;
  std::string line, key;
  auto expect = [&](const std::string& want) {
    while (std::getline(in, line))
      if (!line.empty() && line[0] != '#') break;
    std::istringstream ls(line);
    ls >> key;
    if (key != want) throw ParseError("torus file: expected '" + want + "', found '" + key + "'");
    return ls.str().substr(key.size());
  };
  {
    std::istringstream ls(expect("n"));
    ls >> T.n;
  }
  {
    std::istringstream ls(expect("N_F"));
    ls >> T.N;
  }
  if (T.n < 1 || T.n > kMaxDimension) throw ParseError("torus file: bad n");
  Spectral sp(T.n, T.N);
  T.omega.resize(T.n);
  T.p0.resize(T.n);
  {
    std::istringstream ls(expect("omega"));
    for (int i = 0; i < T.n; ++i) ls >> T.omega(i);
  }
  {
    std::istringstream ls(expect("p0"));
    for (int i = 0; i < T.n; ++i) ls >> T.p0(i);
  }
  {
    std::istringstream ls(expect("residual"));
    ls >> T.residual;
  }
  {
    std::istringstream ls(expect("newton_steps"));
    ls >> T.newton_steps;
  }
  expect("coefficients");
  T.P_hat.assign(static_cast<std::size_t>(T.n), sp.zeros());
  T.U_hat.assign(static_cast<std::size_t>(T.n), sp.zeros());
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    std::size_t idx = 0;
    for (int d = 0; d < T.n; ++d) {
      int k = 0;
      if (!(ls >> k) || std::abs(k) >= T.N / 2) throw ParseError("torus file: bad wavenumber");
      idx = idx * static_cast<std::size_t>(T.N) + static_cast<std::size_t>(k >= 0 ? k : k + T.N);
    }
    for (auto* part : {&T.P_hat, &T.U_hat})
      for (int i = 0; i < T.n; ++i) {
        double re = 0.0, im = 0.0;
        if (!(ls >> re >> im)) throw ParseError("torus file: truncated coefficient line");
        (*part)[static_cast<std::size_t>(i)][idx] = cplx(re, im);
      }
  }
  return T;
}

inline void save_torus(const TorusEmbedding& T, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write '" + path + "'");
  save_torus(T, out);
}

inline TorusEmbedding load_torus(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open '" + path + "'");
  return load_torus(in);
}

}  // namespace kamest
