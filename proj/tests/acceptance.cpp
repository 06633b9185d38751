// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include <boost/math/special_functions/zeta.hpp>

#include <chrono>
#include <cstdio>
#include <functional>
#include <random>
#include <string>

#include "kamest/covering.hpp"
#include "kamest/measure_survey.hpp"
#include "kamest/pipeline.hpp"
#include "kamest/torus_solver.hpp"

using namespace kamest;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

template <class... A>
std::string fmt(const char* f, A... a) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, a...);
  return buf;
}

double rel(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

double fact(int n) {
  double f = 1.0;
  for (int i = 2; i <= n; ++i) f *= i;
  return f;
}

// Random h = p.A p / 2 + small cubic, A positive definite.
AnalyticModel random_model(std::mt19937_64& gen, int n, double cubic = 0.05) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Eigen::MatrixXd B(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) B(i, j) = 0.5 * u(gen);
  const Eigen::MatrixXd A = B * B.transpose() + 0.6 * Eigen::MatrixXd::Identity(n, n);
  Polynomial h(n);
  std::vector<int> e(static_cast<std::size_t>(n), 0);
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j) {
      std::fill(e.begin(), e.end(), 0);
      ++e[static_cast<std::size_t>(i)];
      ++e[static_cast<std::size_t>(j)];
      h.add_term(e, i == j ? 0.5 * A(i, i) : A(i, j));
    }
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      std::fill(e.begin(), e.end(), 0);
      e[static_cast<std::size_t>(i)] += 2;
      ++e[static_cast<std::size_t>(j)];
      h.add_term(e, cubic * u(gen));
    }
  return AnalyticModel(n, h, {});
}

DomainSpec random_box(std::mt19937_64& gen, int n, double r0, double s, double tau) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<Interval> iv;
  for (int i = 0; i < n; ++i) {
    const double lo = u(gen) - 0.5;
    iv.push_back({lo, lo + 0.1 + 0.4 * u(gen)});
  }
  return DomainSpec::make_box(std::move(iv), r0, s, tau);
}

// 1. constants against the formulas written out directly
Outcome constants_table() {
  double worst = 0.0;
  for (int n : {2, 3}) {
    const double tau = n - 0.5;
    const double nf = fact(n);
    const double cstar = 1e-2 / (8.0 * nf), chat_star = 0.25;
    const double c0 = 1.0 / (8.0 * n * nf * nf);
    const double c0hat = 1.0 / (4.0 * n * nf);
    const double c = cstar * cstar / (std::pow(2.0, 17) * n * n * std::pow(nf, 6));
    const double chat = cstar / 16.0;
    const double ccheck = chat_star / (64.0 * nf);
    // S via zeta: shells 4m (n = 2), 4m^2 + 2 (n = 3)
    const double nu = tau + 1.0;
    const double S = n == 2 ? 4.0 * boost::math::zeta(nu - 1.0)
                            : 4.0 * boost::math::zeta(nu - 2.0) + 2.0 * boost::math::zeta(nu);
    const double k1 = std::pow(2.0 * M_PI, n) * n * std::pow(c0, n - 1) / (2.0 * ccheck);
    const double k2 = std::pow(2.5 * M_PI, n);
    const double k3 = 2.0 * std::pow(n, 0.5 * (n - 1)) * S * std::pow(c0, n - 1) / chat + 2.0 * n * std::pow(c0, n - 1) / chat;
    const double k = std::pow(2.0, 2 * n) / std::pow(c0, n) * (k1 + k2 * k3);
    const auto sc = structural(n, tau);
    for (auto [got, want] : {std::pair{sc.c0, c0}, {sc.c0hat, c0hat}, {sc.kappa2, k2}, {sc.c, c}, {sc.chat, chat},
                             {sc.ccheck, ccheck}, {sc.kappa1, k1}, {sc.kappa3, k3}, {sc.kappa, k}, {sc.S, S}})
      worst = std::max(worst, rel(got, want));
  }
  return {worst <= 1e-12, fmt("max relative deviation %.2e (tol 1e-12)", worst)};
}

// 2. S(2, 1.5) against a 10^6-term direct sum
Outcome lattice_sum_check() {
  const long N = 1000000;
  double direct = 0.0;
  for (long m = N; m >= 1; --m) direct += 4.0 * m * std::pow(static_cast<double>(m), -2.5);
  // tail sum_{m > N} 4 m^{-3/2} lies between the integrals from N+1 and N
  const double lo = 8.0 / std::sqrt(static_cast<double>(N + 1));
  const double hi = 8.0 / std::sqrt(static_cast<double>(N));
  const double ref = direct + 0.5 * (lo + hi);
  const double tail_err = 0.5 * (hi - lo);
  const double S = lattice_sum(2, 1.5).value;
  const double dev = std::abs(S - ref);
  const double zdev = std::abs(S - 4.0 * boost::math::zeta(1.5));
  return {dev <= 1e-6 && tail_err < 1e-6,
          fmt("S = %.12f, direct+tail %.12f (|diff| %.2e, tail bracket %.1e), |S - 4 zeta(1.5)| %.1e", S, ref, dev, tail_err,
              zdev)};
}

// 3. a-priori bounds on h_pp^-1, L and p_omega omega
Outcome bound_chain() {
  std::mt19937_64 gen(2024);
  int violations = 0, models = 0;
  std::string first;
  auto check = [&](const AnalyticModel& m, const DomainSpec& D, const std::string& name) {
    ++models;
    const double M = hess_norm(m, D);
    const double mu = torsion_parameter(det_inf(m, D), M, m.n());
    const auto est = lipschitz_constants(m, lipschitz_centers(D, 3), mu, M, D.r0);
    if (!est.within_bounds()) {
      ++violations;
      if (first.empty())
        first = fmt(" first: %s hinv %.3g/%.3g L %.3g/%.3g second %.3g/%.3g", name.c_str(), est.hinv_sup_on_D,
                    est.bound_hinv, est.L, est.bound_L, est.second_derivative_sup, est.bound_second);
    }
  };
  const auto box = DomainSpec::make_box({{0.2, 1.2}, {0.2, 1.2}}, 1.0, 1.0, 1.5);
  check(builtin("free_rotors"), box, "free_rotors");
  check(builtin("forced_pendulum"), box, "forced_pendulum");
  check(builtin("coupled_rotors"), box, "coupled_rotors");
  for (int i = 0; i < 100; ++i) {
    const int n = 2 + i % 2;
    try {
      check(random_model(gen, n), random_box(gen, n, 0.2, 1.0, n - 0.5), "random #" + std::to_string(i));
    } catch (const Error& e) {
      ++violations;
      if (first.empty()) first = fmt(" first: random #%d threw: %s", i, e.what());
    }
  }
  return {violations == 0, fmt("%d models, %d violations%s", models, violations, first.c_str())};
}

// 4. invert round trips inside the guaranteed radius
Outcome inverse_round_trip() {
  std::mt19937_64 gen(77);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  int failures = 0, tested = 0;
  double worst = 0.0;
  for (int b = 0; b < 100; ++b) {
    const int n = 2 + b % 2;
    const auto m = random_model(gen, n, 0.1);
    RVec p0(n);
    for (int i = 0; i < n; ++i) p0(i) = 0.5 * u(gen);
    const double r = 0.05 + 0.25 * (0.5 * (u(gen) + 1.0));
    InverseBranch br;
    try {
      br = make_branch(m, p0, r);
    } catch (const Error&) {
      --b;  // no contraction at this radius: draw another branch
      continue;
    }
    for (int t = 0; t < 100; ++t) {
      CVec w = br.omega0;
      // complex targets, a quarter of them on the boundary of the guaranteed ball
      const double scale = t % 4 == 0 ? 0.999999 : 0.5 * (u(gen) + 1.0);
      for (int i = 0; i < n; ++i) {
        const double a = u(gen) * M_PI;
        w(i) += (i == 0 || t % 4 != 0 ? scale : scale * 0.5 * (u(gen) + 1.0)) * br.rho * std::polar(1.0, a);
      }
      ++tested;
      try {
        const auto res = invert(m, br, w);
        const double err = (m.frequency(res.p) - w).cwiseAbs().maxCoeff() / std::max(1.0, w.cwiseAbs().maxCoeff());
        worst = std::max(worst, err);
        if (err > 1e-12) ++failures;
      } catch (const Error&) {
        ++failures;
      }
    }
  }
  return {failures == 0, fmt("%d targets over 100 branches, %d failures, worst relative residual %.2e", tested, failures, worst)};
}

// 5. coverings of random clouds and boxes
Outcome covering_check() {
  std::mt19937_64 gen(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  int violations = 0;
  long checked = 0;
  for (int trial = 0; trial < 50; ++trial) {
    const int n = 1 + trial % 3;
    const double side = 0.5 + 1.5 * u(gen);
    RVec lo(n);
    for (int i = 0; i < n; ++i) lo(i) = u(gen) - 0.5;
    const double r = side * (0.15 + 0.35 * u(gen));
    std::vector<RVec> samples;
    Covering cov;
    if (trial % 2 == 0) {
      cov = cover_box(lo, lo.array() + side, r);
      for (int a = 0; a < 100000; ++a) {
        RVec x(n);
        for (int i = 0; i < n; ++i) x(i) = lo(i) + side * u(gen);
        samples.push_back(std::move(x));
      }
    } else {
      // rejection samples of an annulus in the cube; the cloud itself is the covered set
      const RVec c = lo.array() + 0.5 * side;
      while (samples.size() < 100000) {
        RVec x(n);
        for (int i = 0; i < n; ++i) x(i) = lo(i) + side * u(gen);
        const double d = (x - c).norm();
        if (d < 0.5 * side && d > 0.25 * side) samples.push_back(std::move(x));
      }
      cov = cover_points(samples, r);
    }
    if (static_cast<double>(cov.N()) > cov.cardinality_bound()) ++violations;
    for (const RVec& x : samples) {
      ++checked;
      if (!cov.covers(x)) ++violations;
    }
  }
  return {violations == 0, fmt("50 sets, %ld sample checks, %d violations", checked, violations)};
}

// 6. measure of the non-Diophantine set is linear in alpha
Outcome diophantine_law() {
  std::vector<double> alphas{1e-3, 2e-3, 4e-3}, meas;
  std::string pts;
  for (double a : alphas) {
    const auto est = resonant_measure(2, 1.0, a, 1.5, 30, 100000, 11);
    meas.push_back(est.measure);
    pts += fmt(" %.0e:%.4f", a, est.measure);
  }
  const auto fit = fit_through_origin(alphas, meas);
  return {fit.valid && fit.r2 >= 0.95, fmt("slope %.2f, R2 %.4f (min 0.95);%s", fit.slope, fit.r2, pts.c_str())};
}

// 7. pendulum torus and its conjugacy check
Outcome torus_check() {
  const auto m = builtin("forced_pendulum", {{"eps", 1e-3}});
  RVec w(2);
  w << 0.77, 0.77 / (0.5 * (std::sqrt(5.0) - 1.0));
  TorusOptions o;
  o.N_F = 32;
  o.tol = 1e-10;
  const auto T = construct_torus(m, w, w, o);
  const auto rep = verify_conjugacy(m, T, 1000.0, 1e-3);
  const bool ok = T.residual <= 1e-10 && rep.max_deviation <= 1e-6 && rep.frequency_error <= 1e-6;
  return {ok, fmt("residual %.2e (<= 1e-10) in %d steps, deviation %.2e (<= 1e-6), frequency error %.2e (<= 1e-6)",
                  T.residual, T.newton_steps, rep.max_deviation, rep.frequency_error)};
}

// 8. normal-form remainder on certified configurations
Outcome normal_form_check() {
  std::mt19937_64 gen(8);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  int violations = 0, done = 0, attempts = 0;
  double worst_ratio = 0.0, worst_P = 0.0;
  std::string first;
  while (done < 20 && attempts < 200) {
    ++attempts;
    auto h = random_model(gen, 2, 0.0);
    const double r0 = 0.3 + 0.7 * u(gen);
    const double s = 0.5 + 0.5 * u(gen);
    const auto D = random_box(gen, 2, r0, s, 1.5);
    PipelineOptions po;
    po.cstar = 0.01;
    po.chat_star = 0.4;
    // unit-amplitude perturbation first, then rescale below the threshold
    const int k1 = 1 + done % 2, k2 = done % 3 - 1;
    std::vector<FourierMode> modes{{{k1, k2}, Polynomial::constant(2, 0.5)}, {{-k1, -k2}, Polynomial::constant(2, 0.5)}};
    const AnalyticModel unit(2, h.h(), modes);
    const auto probe = certify_model(unit, D, po);
    const double scale = 0.5 * probe.cert.threshold / probe.cert.bundle.eps_hat;
    for (auto& md : modes) md.coeff = Polynomial::constant(2, 0.5 * scale);
    const AnalyticModel m(2, h.h(), modes);
    const auto r = certify_model(m, D, po);
    if (!r.cert.pass) continue;
    ++done;
    const auto nf = local_normal_form_check(m, D.lower(), r.cert);
    worst_P = std::max(worst_P, nf.sup_P / (2.0 * nf.eps));
    const double dr = rel(nf.ratio, nf.ratio_closed_form);
    worst_ratio = std::max(worst_ratio, dr);
    if (!nf.within_2eps || dr > 1e-12 || !nf.ratio_ok) {
      ++violations;
      if (first.empty()) first = fmt(" first: sup|P|/2eps %.3g ratio %.6g closed %.6g", nf.sup_P / (2 * nf.eps), nf.ratio, nf.ratio_closed_form);
    }
  }
  return {done == 20 && violations == 0,
          fmt("%d certified configurations, %d violations, max sup|P|/(2 eps) %.3f, max ratio deviation %.1e%s", done,
              violations, worst_P, worst_ratio, first.c_str())};
}

// 9. pendulum survey exponent and lobe area
Outcome scaling_law() {
  SurveyOptions o;
  o.eps_grid = {1e-4, 3e-4, 1e-3, 3e-3, 1e-2};
  o.samples = 2000;
  o.seed = 0;
  const auto D = DomainSpec::make_box({{0.2, 1.2}, {0.2, 1.2}}, 1.0, 1.0, 1.5);
  const auto s = survey("forced_pendulum", {}, D, o);
  std::string rows;
  for (const auto& r : s.rows) rows += fmt(" %.0e:%zu", r.eps, r.nontorus);
  double worst_lobe = 0.0;
  for (double e : {1e-5, 1e-4, 1e-3}) {
    const auto lobe = separatrix_lobe_area(builtin("forced_pendulum", {{"eps", e}}));
    worst_lobe = std::max(worst_lobe, std::abs(lobe.area / (16.0 * std::sqrt(e)) - 1.0));
  }
  if (!s.fit) return {false, "no fit:" + rows};
  const bool ok = s.fit->slope >= 0.4 && s.fit->slope <= 0.6 && s.fit->r2 >= 0.9 && worst_lobe <= 0.05;
  return {ok, fmt("slope %.3f (in [0.4, 0.6]) ci95 [%.3f, %.3f], R2 %.4f (>= 0.9), max |lobe ratio - 1| %.1e; nontorus counts",
                  s.fit->slope, s.fit->slope_ci_lo, s.fit->slope_ci_hi, s.fit->r2, worst_lobe) +
              rows};
}

// 10. derived inequalities of passing certificates
Outcome certificate_consistency() {
  std::mt19937_64 gen(10);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  int violations = 0, passing = 0;
  while (passing < 1000) {
    const int n = 2 + static_cast<int>(u(gen) * 3.0);
    const double nf = fact(n);
    const double chat_star = 0.5 * (0.05 + 0.9 * u(gen));
    const double cstar = chat_star / (4.0 * nf) * (0.01 + 0.98 * u(gen));
    const double tau = n - 1.0 + 0.1 + 2.0 * u(gen);
    const auto sc = structural(n, tau, cstar, chat_star);
    const double M = 0.1 + 10.0 * u(gen);
    const double mu = 0.05 + 0.95 * u(gen);
    const double d = mu * std::pow(M, n);
    const double lambda = 1.0 + (2.0 * nf / mu - 1.0) * u(gen);
    const double r0 = 0.01 + 2.0 * u(gen);
    const double s = 0.05 + 0.95 * u(gen);
    std::vector<Interval> iv;
    for (int i = 0; i < n; ++i) iv.push_back({0.0, 0.01 + u(gen)});
    const auto D = DomainSpec::make_box(iv, r0, s, tau);
    const auto probe = certify(assemble_bundle(n, M, d, 0.0, lambda / M, r0, NormMode::rigorous, "user"), D, sc);
    const double eps_hat = probe.threshold * u(gen);
    const auto c = certify(assemble_bundle(n, M, d, eps_hat * M * r0 * r0, lambda / M, r0, NormMode::rigorous, "user"), D, sc);
    if (!c.pass) continue;
    ++passing;
    const double s_nu = std::pow(s, sc.nu);
    const double tol = 1.0 + 1e-12;
    if (!(c.r_hat <= r0 / 128.0 * tol) || !(c.r_eps <= c.r_hat * tol) || !(c.beta > 1.0) ||
        !(4.0 * c.alpha * s_nu < sc.c0 * mu * mu * M * r0))
      ++violations;
  }
  return {violations == 0, fmt("%d passing configurations, %d violations", passing, violations)};
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
      {"constants table", constants_table},
      {"lattice sum", lattice_sum_check},
      {"a-priori bound chain", bound_chain},
      {"inverse round trip", inverse_round_trip},
      {"covering", covering_check},
      {"Diophantine linear law", diophantine_law},
      {"torus construction", torus_check},
      {"normal-form bound", normal_form_check},
      {"scaling law", scaling_law},
      {"certificate consistency", certificate_consistency},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("criterion %zu (%s): %s  %s  [%.1f s]\n", i + 1, criteria[i].first, o.pass ? "PASS" : "FAIL",
                o.detail.c_str(), secs);
    std::fflush(stdout);
    if (!o.pass) ++failed;
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
