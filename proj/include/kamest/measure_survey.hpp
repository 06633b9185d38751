#pragma once

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/tools/minima.hpp>
#include <boost/math/tools/roots.hpp>

#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <ostream>
#include <random>
#include <string>
#include <vector>

#include "kamest/diophantine.hpp"
#include "kamest/integrator.hpp"
#include "kamest/pipeline.hpp"
#include "kamest/stats.hpp"
#include "kamest/torus_solver.hpp"

namespace kamest {

enum class PointClass { torus_like, resonant_or_chaotic };

inline const char* to_string(PointClass c) { return c == PointClass::torus_like ? "torus_like" : "resonant_or_chaotic"; }

struct ClassifyOptions {
  double t_max = 1000.0;
  double dt = 0.05;
  double tol_freq = 1e-5;
  double window_alpha = 0.0;  ///< w_res = window_alpha / |k|_1^tau; 0 disables the window
  double tau = 1.5;
  int K_res = 10;
  double drift_tol = 1e-8;
  int max_dt_halvings = 3;
};

struct Classification {
  PointClass cls = PointClass::resonant_or_chaotic;
  RVec omega_a;  ///< first half-window
  RVec omega_b;  ///< second half-window
  RVec omega;    ///< mean of the two
  double disagreement = 0.0;
  bool in_window = false;
  std::vector<int> window_k;
  bool drift_flag = false;
  double energy_drift = 0.0;
  double dt_used = 0.0;
};

namespace detail {

struct OrbitAverages {
  RVec a, b;
  double drift = 0.0;
};

inline OrbitAverages orbit_averages(const AnalyticModel& model, const RVec& p0, const RVec& q0, double t_max, double dt) {
  const int n = model.n();
  const Rk4 rk(model);
  PhaseState s;
  s.n = n;
  for (int i = 0; i < n; ++i) {
    s.p()[i] = p0(i);
    s.q()[i] = q0(i);
  }
  const double E0 = rk.energy(s);
  const auto steps = static_cast<std::size_t>(std::llround(t_max / dt));
  const std::size_t W = std::max<std::size_t>(steps / 2, 1);
  std::array<double, 2 * kMaxDimension> slope{};
  OrbitAverages out;
  out.a = RVec::Zero(n);
  out.b = RVec::Zero(n);
  double wa = 0.0, wb = 0.0;
  for (std::size_t j = 0; j < 2 * W; ++j) {
    rk.step(s, dt, slope.data());
    const bool first = j < W;
    const double w = bump_weight((static_cast<double>(first ? j : j - W) + 0.5) / static_cast<double>(W));
    RVec& acc = first ? out.a : out.b;
    for (int i = 0; i < n; ++i) acc(i) += w * slope[static_cast<std::size_t>(n + i)];
    (first ? wa : wb) += w;
    if (j % 64 == 63) out.drift = std::max(out.drift, std::abs(rk.energy(s) - E0));
  }
  out.drift = std::max(out.drift, std::abs(rk.energy(s) - E0));
  out.drift /= std::max(1.0, std::abs(E0));
  out.a /= wa;
  out.b /= wb;
  return out;
}

}  // namespace detail

/// Two-window rotation-vector test plus the resonance window.
inline Classification classify_point(const AnalyticModel& model, const RVec& p0, const RVec& q0, const ClassifyOptions& opt,
                                     const HalfLattice* lattice = nullptr) {
  const int n = model.n();
  if (p0.size() != n || q0.size() != n) throw DimensionError("phase point has the wrong length");
  if (!(opt.dt > 0.0) || !(opt.t_max > 2.0 * opt.dt)) throw Error("need dt > 0 and t_max > 2 dt");
  Classification c;
  double dt = opt.dt;
  detail::OrbitAverages avg;
  for (int attempt = 0;; ++attempt) {
    avg = detail::orbit_averages(model, p0, q0, opt.t_max, dt);
    if (avg.drift <= opt.drift_tol || attempt == opt.max_dt_halvings) break;
    dt *= 0.5;
  }
  c.dt_used = dt;
  c.energy_drift = avg.drift;
  c.omega_a = avg.a;
  c.omega_b = avg.b;
  c.omega = 0.5 * (avg.a + avg.b);
  c.disagreement = (avg.a - avg.b).cwiseAbs().maxCoeff();
  if (!std::isfinite(c.disagreement) || avg.drift > opt.drift_tol) {
    c.drift_flag = true;
    return c;
  }
  if (opt.window_alpha > 0.0) {
    std::optional<HalfLattice> own;
    if (lattice == nullptr) lattice = &own.emplace(n, opt.K_res, opt.tau);
    const DiophantineResult dr = is_diophantine_upto(c.omega, opt.window_alpha, *lattice);
    c.in_window = !dr.diophantine;
    if (c.in_window) c.window_k = dr.worst_k;
  }
  if (c.disagreement <= opt.tol_freq && !c.in_window) c.cls = PointClass::torus_like;
  return c;
}

/// Slow classification: a torus must exist at the estimated frequency.
inline PointClass classify_by_torus(const AnalyticModel& model, const RVec& p0, const Classification& fast,
                                    int N_F = 16) {
  if (fast.drift_flag || fast.in_window) return PointClass::resonant_or_chaotic;
  try {
    TorusOptions topt;
    topt.N_F = N_F;
    topt.tol = 1e-9;
    topt.max_newton = 10;
    construct_torus(model, fast.omega, p0, topt);
    return PointClass::torus_like;
  } catch (const Error&) {
    return PointClass::resonant_or_chaotic;
  }
}

/// Per-index phase point, uniform on D x T^n, independent of how many
/// samples are drawn.
inline std::pair<RVec, RVec> survey_sample(const DomainSpec& D, std::uint64_t seed, std::uint64_t index) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  z ^= z >> 31;
  std::mt19937_64 gen(z);
  const int n = D.dim();
  const RVec lo = D.lower(), hi = D.upper();
  RVec p(n), q(n);
  for (int i = 0; i < n; ++i) p(i) = lo(i) + (hi(i) - lo(i)) * unit_uniform(gen);
  for (int i = 0; i < n; ++i) q(i) = 2.0 * M_PI * unit_uniform(gen);
  return {p, q};
}

struct SurveyOptions {
  std::vector<double> eps_grid;
  std::size_t samples = 2000;
  std::uint64_t seed = 0;
  ClassifyOptions classify;  ///< window_alpha is set per eps
  double a_res = 0.5;        ///< window_alpha = a_res * M r0 sqrt(eps_hat)
  bool slow_recheck = false;
  std::size_t slow_stride = 100;
  bool certify = true;
  PipelineOptions pipeline;
};

struct SurveyRow {
  double eps = 0.0;  ///< family parameter
  double eps_hat = 0.0;
  double window_alpha = 0.0;
  std::size_t samples = 0;
  std::size_t nontorus = 0;
  double fraction = 0.0;
  double measure = 0.0;
  double stderr_measure = 0.0;
  std::size_t drift_flags = 0;
  bool certified = false;  ///< certificate computed
  bool pass = false;
  std::optional<double> bound;  ///< C sqrt(eps_hat) when pass
  std::size_t slow_checked = 0;
  std::size_t slow_agree = 0;
};

struct SurveyResult {
  std::string family;
  std::map<std::string, double> params;
  DomainSpec D;
  std::uint64_t seed = 0;
  double total_measure = 0.0;  ///< meas(D x T^n)
  std::vector<SurveyRow> rows;
  std::optional<LineFit> fit;
  bool monotone = true;  ///< fraction non-decreasing in eps within 2 sigma
  std::vector<std::string> warnings;
};

using ModelFactory = std::function<AnalyticModel(double eps)>;

inline SurveyResult survey(const ModelFactory& make_model, const std::string& family,
                           const std::map<std::string, double>& params, const DomainSpec& D, const SurveyOptions& opt) {
  if (!D.is_box()) throw Error("survey needs a box domain");
  if (opt.samples == 0) throw Error("survey needs at least one sample per eps");
  if (opt.eps_grid.empty()) throw Error("survey needs a non-empty eps grid");
  SurveyResult res;
  res.family = family;
  res.params = params;
  res.D = D;
  res.seed = opt.seed;
  const int n = D.dim();
  res.total_measure = D.measure() * std::pow(2.0 * M_PI, n);
  const HalfLattice lat(n, opt.classify.K_res, D.tau);

  for (double eps : opt.eps_grid) {
    const AnalyticModel model = make_model(eps);
    D.validate(model.n());
    SurveyRow row;
    row.eps = eps;
    NormOptions nopt = opt.pipeline.norms;
    const double M = hess_norm(model, D, nopt);
    const double epsf = sup_norm_f(model, D, nopt);
    row.eps_hat = epsf / (M * D.r0 * D.r0);
    row.window_alpha = opt.a_res * M * D.r0 * std::sqrt(row.eps_hat);
    if (opt.certify) {
      try {
        const PipelineResult pr = certify_model(model, D, opt.pipeline);
        row.certified = true;
        row.pass = pr.cert.pass;
        if (row.pass) row.bound = pr.cert.measure_bound;
      } catch (const Error& e) {
        res.warnings.push_back("eps " + std::to_string(eps) + ": certificate unavailable: " + e.what());
      }
    }
    ClassifyOptions copt = opt.classify;
    copt.window_alpha = row.window_alpha;
    copt.tau = D.tau;
    row.samples = opt.samples;
    for (std::size_t i = 0; i < opt.samples; ++i) {
      const auto [p, q] = survey_sample(D, opt.seed, i);
      const Classification c = classify_point(model, p, q, copt, &lat);
      if (c.cls == PointClass::resonant_or_chaotic) ++row.nontorus;
      if (c.drift_flag) ++row.drift_flags;
      if (opt.slow_recheck && i % opt.slow_stride == 0) {
        ++row.slow_checked;
        if (classify_by_torus(model, p, c) == c.cls) ++row.slow_agree;
      }
    }
    row.fraction = static_cast<double>(row.nontorus) / static_cast<double>(row.samples);
    row.measure = row.fraction * res.total_measure;
    row.stderr_measure =
        std::sqrt(row.fraction * (1.0 - row.fraction) / static_cast<double>(row.samples)) * res.total_measure;
    res.rows.push_back(row);
  }

  for (std::size_t i = 1; i < res.rows.size(); ++i) {
    const SurveyRow& a = res.rows[i - 1];
    const SurveyRow& b = res.rows[i];
    if (b.eps < a.eps) continue;
    if (b.measure < a.measure - 2.0 * std::hypot(a.stderr_measure, b.stderr_measure)) res.monotone = false;
  }

  std::vector<double> x, y;
  for (const SurveyRow& r : res.rows)
    if (r.measure > 0.0 && r.eps > 0.0) {
      x.push_back(std::log(r.eps));
      y.push_back(std::log(r.measure));
    }
  if (x.size() >= 4) {
    res.fit = fit_line(x, y);
    if (!res.fit->valid) res.fit.reset();
  }
  if (!res.fit) res.warnings.push_back("fewer than 4 eps values with positive measure: no fit");
  return res;
}

/// Built-in families; `eps` is ignored by free_rotors.
inline SurveyResult survey(const std::string& family, const std::map<std::string, double>& params, const DomainSpec& D,
                           const SurveyOptions& opt, const ModelTables* tables = nullptr) {
  const bool has_eps = family != "free_rotors" && family != "user_spec";
  auto make = [&](double eps) {
    std::map<std::string, double> p = params;
    if (has_eps) p["eps"] = eps;
    return builtin(family, p, tables);
  };
  return survey(make, family, params, D, opt);
}

struct ComparisonRow {
  double eps = 0.0;
  double measured = 0.0;
  double stderr_measure = 0.0;
  std::optional<double> bound;  ///< empty: certificate did not pass
  std::optional<double> ratio;  ///< bound / measured
  bool violation = false;       ///< measured - 2 sigma > bound
};

inline std::vector<ComparisonRow> compare_with_certificate(const SurveyResult& s, const std::vector<Certificate>& certs) {
  if (certs.size() != s.rows.size()) throw DimensionError("one certificate per survey row is required");
  std::vector<ComparisonRow> out;
  for (std::size_t i = 0; i < certs.size(); ++i) {
    const SurveyRow& r = s.rows[i];
    ComparisonRow c;
    c.eps = r.eps;
    c.measured = r.measure;
    c.stderr_measure = r.stderr_measure;
    if (certs[i].pass) {
      c.bound = certs[i].measure_bound;
      if (r.measure > 0.0) c.ratio = *c.bound / r.measure;
      c.violation = r.measure - 2.0 * r.stderr_measure > *c.bound;
    }
    out.push_back(c);
  }
  return out;
}

/// Same comparison using the certificates computed during the survey.
inline std::vector<ComparisonRow> compare_with_certificate(const SurveyResult& s) {
  std::vector<ComparisonRow> out;
  for (const SurveyRow& r : s.rows) {
    ComparisonRow c;
    c.eps = r.eps;
    c.measured = r.measure;
    c.stderr_measure = r.stderr_measure;
    if (r.pass && r.bound) {
      c.bound = r.bound;
      if (r.measure > 0.0) c.ratio = *r.bound / r.measure;
      c.violation = r.measure - 2.0 * r.stderr_measure > *r.bound;
    }
    out.push_back(c);
  }
  return out;
}

inline void write_survey_csv(const SurveyResult& s, std::ostream& out) {
  out.precision(12);
  out << "eps,samples,nontorus_fraction,measure,stderr,bound_C_sqrt_eps,pass\n";
  for (const SurveyRow& r : s.rows) {
    out << r.eps << ',' << r.samples << ',' << r.fraction << ',' << r.measure << ',' << r.stderr_measure << ',';
    if (r.bound)
      out << *r.bound;
    else
      out << "n/a";
    out << ',' << (r.pass ? "true" : "false") << '\n';
  }
}

/// log-log points and the fitted line for plotting.
inline void write_plot_csv(const SurveyResult& s, std::ostream& out) {
  out.precision(12);
  out << "log_eps,log_measure,log_stderr_rel,log_fit\n";
  for (const SurveyRow& r : s.rows) {
    if (!(r.measure > 0.0)) continue;
    const double le = std::log(r.eps);
    out << le << ',' << std::log(r.measure) << ',' << r.stderr_measure / r.measure << ',';
    if (s.fit)
      out << s.fit->slope * le + s.fit->intercept;
    else
      out << "n/a";
    out << '\n';
  }
}

struct LobeArea {
  double area = 0.0;
  double q_saddle = 0.0;
  double energy_saddle = 0.0;
  double quadrature_error = 0.0;
};

/// Area of the region inside the separatrix of the (1, 0, ...) resonance on
/// the section p_j = 0, q_j = 0 (j > 0): the saddle is the maximum of the
/// energy over q_1 at p = 0, and the width at each q_1 is found by bracketing
/// the two roots of energy = saddle energy in p_1.
inline LobeArea separatrix_lobe_area(const AnalyticModel& model) {
  const int n = model.n();
  std::vector<double> p(static_cast<std::size_t>(n), 0.0), q(static_cast<std::size_t>(n), 0.0);
  auto energy = [&](double p1, double q1) {
    p[0] = p1;
    q[0] = q1;
    return model.energy(p.data(), q.data());
  };
  LobeArea out;
  // Saddle: maximise energy(0, q) by a coarse scan and Brent refinement.
  int best = 0;
  double bestE = -INFINITY;
  const int scan = 256;
  for (int j = 0; j < scan; ++j) {
    const double e = energy(0.0, 2.0 * M_PI * j / scan);
    if (e > bestE) {
      bestE = e;
      best = j;
    }
  }
  const double step = 2.0 * M_PI / scan;
  const auto mx = boost::math::tools::brent_find_minima([&](double x) { return -energy(0.0, x); },
                                                        (best - 1) * step, (best + 1) * step, 52);
  out.q_saddle = mx.first;
  out.energy_saddle = -mx.second;
  const double Es = out.energy_saddle;

  auto root = [&](double q1, double sign) {
    const auto g = [&](double t) { return energy(sign * t, q1) - Es; };
    if (g(0.0) >= 0.0) return 0.0;
    double hi = 1e-3;
    while (g(hi) < 0.0) {
      hi *= 2.0;
      if (hi > 1e6) throw ConvergenceError("separatrix width is unbounded");
    }
    std::uintmax_t iters = 200;
    const auto r = boost::math::tools::toms748_solve(g, 0.0, hi, boost::math::tools::eps_tolerance<double>(50), iters);
    return 0.5 * (r.first + r.second);
  };
  auto width = [&](double q1) { return root(q1, 1.0) + root(q1, -1.0); };
  double err = 0.0;
  out.area = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(width, out.q_saddle, out.q_saddle + 2.0 * M_PI,
                                                                            10, 1e-12, &err);
  out.quadrature_error = err;
  return out;
}

}  // namespace kamest
