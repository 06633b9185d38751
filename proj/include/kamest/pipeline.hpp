#pragma once

#include <optional>
#include <vector>

#include "kamest/frequency_map.hpp"
#include "kamest/kam_constants.hpp"
#include "kamest/norm_estimator.hpp"

namespace kamest {

struct PipelineOptions {
  NormOptions norms;
  double cstar = 0.0;  ///< 0 selects default_cstar(n)
  double chat_star = kDefaultChatStar;
  std::optional<double> eps_override;
  int lipschitz_grid = 3;  ///< centres per dimension for L on a box
};

struct PipelineResult {
  Certificate cert;
  LipschitzEstimate lipschitz;
};

/// Centres at which the local inverses (and hence L) are sampled.
inline std::vector<RVec> lipschitz_centers(const DomainSpec& D, int G) {
  if (!D.is_box()) return D.points;
  return D.grid(G);
}

/// norms -> local inverses (for L) -> smallness condition.
inline PipelineResult certify_model(const AnalyticModel& model, const DomainSpec& D, const PipelineOptions& opt = {}) {
  D.validate(model.n());
  const int n = model.n();
  const double cstar = opt.cstar > 0.0 ? opt.cstar : default_cstar(n);
  const StructuralConstants sc = structural(n, D.tau, cstar, opt.chat_star);

  const double M = hess_norm(model, D, opt.norms);
  const double d = det_inf(model, D, opt.norms);
  const double mu = torsion_parameter(d, M, n);
  PipelineResult out;
  out.lipschitz = lipschitz_constants(model, lipschitz_centers(D, opt.lipschitz_grid), mu, M, D.r0);
  // L M >= 1 always holds for the true sup; guard sampled underestimates.
  const double L = std::max(out.lipschitz.L, 1.0 / M);
  const NormBundle b =
      opt.eps_override
          ? assemble_bundle(n, M, d, *opt.eps_override, L, D.r0, opt.norms.mode, "user")
          : assemble_bundle(n, M, d, sup_norm_f(model, D, opt.norms), L, D.r0, opt.norms.mode, to_string(opt.norms.mode));
  out.cert = certify(b, D, sc);
  return out;
}

}  // namespace kamest
