#pragma once

#include <json.hpp>

#include <string>
#include <vector>

#include "kamest/covering.hpp"
#include "kamest/measure_survey.hpp"
#include "kamest/pipeline.hpp"
#include "kamest/torus_solver.hpp"

namespace kamest {

inline constexpr const char* kToolVersion = "kamest 0.1.0";

using json = nlohmann::ordered_json;

namespace detail {

inline json tagged(double value, const char* eq) { return json{{"value", value}, {"eq", eq}}; }

inline json vec_json(const RVec& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

inline json domain_json(const DomainSpec& D) {
  json j;
  if (D.is_box()) {
    json b = json::array();
    for (const auto& iv : D.box) b.push_back({iv.lo, iv.hi});
    j["box"] = b;
  } else {
    json p = json::array();
    for (const auto& x : D.points) p.push_back(vec_json(x));
    j["points"] = p;
  }
  j["r0"] = D.r0;
  j["s"] = D.s;
  j["tau"] = D.tau;
  j["diam"] = D.diam();
  return j;
}

}  // namespace detail

inline json constants_json(const StructuralConstants& sc) {
  using detail::tagged;
  json j;
  j["n"] = sc.n;
  j["tau"] = sc.tau;
  j["nu"] = tagged(sc.nu, "nu = tau + 1");
  j["c0"] = tagged(sc.c0, "c0 = 1/(8 n (n!)^2)");
  j["c0hat"] = tagged(sc.c0hat, "c0hat = 1/(4 n n!)");
  j["cstar"] = tagged(sc.cstar, "input; default 1e-2/(8 n!)");
  j["chat_star"] = tagged(sc.chat_star, "input; default 1/4");
  j["c"] = tagged(sc.c, "c = cstar^2/(2^17 n^2 (n!)^6)");
  j["chat"] = tagged(sc.chat, "chat = cstar/2^4");
  j["ccheck"] = tagged(sc.ccheck, "ccheck = chat_star/(2^6 n!)");
  j["S"] = tagged(sc.S, "S = sum_{k != 0} |k|_1^-(tau+1)");
  j["S_error_bound"] = sc.S_error;
  j["kappa1"] = tagged(sc.kappa1, "kappa1 = (2 pi)^n n c0^(n-1)/(2 ccheck)");
  j["kappa2"] = tagged(sc.kappa2, "kappa2 = (5 pi/2)^n");
  j["kappa3p"] = tagged(sc.kappa3p, "kappa3' = 2 n^((n-1)/2) S c0^(n-1)/chat");
  j["kappa3pp"] = tagged(sc.kappa3pp, "kappa3'' = 2 n c0^(n-1)/chat");
  j["kappa3"] = tagged(sc.kappa3, "kappa3 = kappa3' + kappa3''");
  j["kappa"] = tagged(sc.kappa, "kappa = (2^(2n)/c0^n)(kappa1 + kappa2 kappa3)");
  return j;
}

inline json bundle_json(const NormBundle& b) {
  using detail::tagged;
  json j;
  j["mode"] = to_string(b.mode);
  j["eps_source"] = b.eps_source;
  j["M"] = tagged(b.M, "M = sup ||h_pp|| over D_r0");
  j["eps"] = tagged(b.eps, "eps = ||f|| over D_r0 x T^n_s");
  j["d"] = tagged(b.d, "d = inf_D |det h_pp|");
  j["mu"] = tagged(b.mu, "mu = d/M^n");
  j["L"] = tagged(b.L, "L = sup ||p_omega|| of the local inverses");
  j["lambda"] = tagged(b.lambda, "lambda = L M");
  j["eps_hat"] = tagged(b.eps_hat, "eps_hat = eps/(M r0^2)");
  return j;
}

inline json breakdown_json(const MeasureBreakdown& m) {
  using detail::tagged;
  json j;
  j["B1"] = tagged(m.B1, "B1 = kappa1 lambda mu^(2n-3) r0^n sqrt(eps_hat)");
  j["B2"] = tagged(m.B2, "B2 = kappa2 L^n B3");
  j["B3"] = tagged(m.B3, "B3 = kappa3 mu^(2n-3) lambda^2 s^(-3 nu) (M r0)^n sqrt(eps_hat)");
  j["per_ball"] = m.per_ball;
  j["all_balls"] = m.all_balls;
  j["notes"] = {"B1 carries the factor lambda (the larger of the two forms, lambda >= 1)",
                "B2 applies kappa2 L^n to B3 without an extra 1/M^n"};
  return j;
}

inline json certificate_json(const Certificate& c, const DomainSpec& D) {
  using detail::tagged;
  json j;
  j["tool_version"] = kToolVersion;
  j["pass"] = c.pass;
  j["domain"] = detail::domain_json(D);
  j["norms"] = bundle_json(c.bundle);
  j["constants"] = constants_json(c.sc);
  j["threshold"] = tagged(c.threshold, "threshold = c mu^6 lambda^-2 s^(4 nu); pass iff eps_hat <= threshold");
  j["alpha"] = tagged(c.alpha, "alpha = lambda/(chat mu s^(3 nu)) M r0 sqrt(eps_hat)");
  j["r_star"] = tagged(c.r_star, "r_star = c0hat mu r0");
  j["rho_star"] = tagged(c.rho_star, "rho_star = c0 mu^2 M r0");
  j["theta_param"] = tagged(c.theta_param, "theta = rho_star/4");
  j["r_hat"] = tagged(c.r_hat, "r_hat = (c0/2) mu^2 r0");
  j["r"] = tagged(c.r, "r = sqrt(eps_hat) r0");
  j["r_eps"] = tagged(c.r_eps, "r_eps = (lambda/cstar) sqrt(eps_hat) r0");
  j["beta"] = tagged(c.beta, "beta = lambda/(ccheck mu s^nu)");
  j["C"] = tagged(c.C, "C = kappa max(mu^2 r0, diam D)^n lambda^(n+2)/(mu^3 s^(3 nu))");
  j["measure_bound"] = tagged(c.measure_bound, "measure_bound = C sqrt(eps_hat)");
  j["N_bound"] = tagged(c.N_bound, "N_bound = ([diam D/r_hat] + 1)^n");
  j["breakdown"] = breakdown_json(measure_breakdown(c));
  json f;
  for (const auto& [k, v] : c.failure_factors) f[k] = std::isfinite(v) ? json(v) : json(nullptr);
  j["failure_factors_log"] = f;
  if (!c.pass) j["dominant_failure"] = c.dominant_failure;
  return j;
}

inline json certificate_json(const PipelineResult& r, const DomainSpec& D) {
  json j = certificate_json(r.cert, D);
  const LipschitzEstimate& l = r.lipschitz;
  json lj;
  lj["L_sampled"] = l.L;
  lj["hinv_sup_on_D"] = l.hinv_sup_on_D;
  lj["bound_hinv"] = detail::tagged(l.bound_hinv, "n!/(mu M)");
  lj["bound_L"] = detail::tagged(l.bound_L, "1/(2 n c0hat mu M)");
  lj["second_derivative_sup"] = l.second_derivative_sup;
  lj["bound_second"] = detail::tagged(l.bound_second, "L/((c0/4) mu^2 M r0)");
  lj["max_delta"] = l.max_delta;
  lj["within_bounds"] = l.within_bounds();
  lj["caveat"] = "L and delta are sampled suprema over complex balls (not interval enclosures)";
  j["frequency_map"] = lj;
  return j;
}

inline json covering_json(const Covering& c, const DomainSpec& D) {
  json j;
  j["tool_version"] = kToolVersion;
  j["domain"] = detail::domain_json(D);
  j["radius"] = c.radius;
  j["cube_edge"] = c.edge;
  j["N"] = c.N();
  j["cardinality_bound"] = c.cardinality_bound();
  json centers = json::array();
  for (const RVec& x : c.centers) centers.push_back(detail::vec_json(x));
  j["centers"] = centers;
  return j;
}

inline json torus_json(const TorusEmbedding& T, const ConjugacyReport& rep) {
  json j;
  j["tool_version"] = kToolVersion;
  j["n"] = T.n;
  j["N_F"] = T.N;
  j["omega"] = detail::vec_json(T.omega);
  j["p0"] = detail::vec_json(T.p0);
  j["residual"] = T.residual;
  j["newton_steps"] = T.newton_steps;
  j["residual_history"] = T.residual_history;
  json c;
  c["max_deviation"] = rep.max_deviation;
  c["deviation_per_start"] = rep.deviation_per_start;
  c["max_energy_drift"] = rep.max_energy_drift;
  c["dt"] = rep.dt;
  c["frequency"] = detail::vec_json(rep.frequency);
  c["frequency_error"] = rep.frequency_error;
  j["conjugacy"] = c;
  return j;
}

inline json geometry_json(const GeometryReport& g) {
  json j;
  j["distance"] = g.distance;
  j["r_eps"] = g.r_eps;
  j["within_r_eps"] = g.within_r_eps;
  j["margin"] = g.margin;
  j["inclusion_radius"] = g.inclusion_radius;
  j["distance_to_center"] = g.distance_to_center;
  j["inclusion_ok"] = g.inclusion_ok;
  j["falsification_candidate"] = g.falsification_candidate;
  j["diophantine_upto_K"] = g.diophantine_upto_K;
  j["boundary_distance_lower"] = g.boundary_distance_lower;
  j["certified_family_member"] = g.certified_family_member;
  return j;
}

inline json survey_json(const SurveyResult& s, const std::vector<ComparisonRow>& cmp) {
  json j;
  j["tool_version"] = kToolVersion;
  j["family"] = s.family;
  j["params"] = s.params;
  j["domain"] = detail::domain_json(s.D);
  j["seed"] = s.seed;
  j["total_measure"] = s.total_measure;
  json rows = json::array();
  for (std::size_t i = 0; i < s.rows.size(); ++i) {
    const SurveyRow& r = s.rows[i];
    json x;
    x["eps"] = r.eps;
    x["eps_hat"] = r.eps_hat;
    x["window_alpha"] = r.window_alpha;
    x["samples"] = r.samples;
    x["nontorus"] = r.nontorus;
    x["fraction"] = r.fraction;
    x["measure"] = r.measure;
    x["stderr"] = r.stderr_measure;
    x["drift_flags"] = r.drift_flags;
    x["pass"] = r.pass;
    x["bound_C_sqrt_eps"] = r.bound ? json(*r.bound) : json("n/a");
    if (i < cmp.size()) {
      x["ratio_bound_over_measured"] = cmp[i].ratio ? json(*cmp[i].ratio) : json("n/a");
      x["violation_2sigma"] = cmp[i].violation;
    }
    if (r.slow_checked > 0) {
      x["slow_checked"] = r.slow_checked;
      x["slow_agree"] = r.slow_agree;
    }
    rows.push_back(x);
  }
  j["rows"] = rows;
  if (s.fit) {
    j["fit"] = {{"slope", s.fit->slope},         {"intercept", s.fit->intercept},
                {"slope_stderr", s.fit->slope_stderr}, {"slope_ci95", {s.fit->slope_ci_lo, s.fit->slope_ci_hi}},
                {"r2", s.fit->r2},               {"points", s.fit->points}};
  } else {
    j["fit"] = nullptr;
  }
  j["monotone_2sigma"] = s.monotone;
  j["warnings"] = s.warnings;
  return j;
}

}  // namespace kamest
