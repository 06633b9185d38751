#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <vector>

#include "kamest/analytic_model.hpp"
#include "kamest/error.hpp"
#include "kamest/kam_constants.hpp"

namespace kamest {

/// Sup-norm balls B_r(c_i), centres taken from the covered set.
struct Covering {
  std::vector<RVec> centers;
  double radius = 0.0;
  double edge = 0.0;  ///< edge r' < r of the cube grid
  long cubes_per_side = 0;
  double diam = 0.0;

  std::size_t N() const { return centers.size(); }

  /// ([diam/r] + 1)^n
  double cardinality_bound() const {
    const int n = centers.empty() ? 0 : static_cast<int>(centers.front().size());
    return std::pow(std::floor(diam / radius) + 1.0, n);
  }

  bool covers(const RVec& x) const {
    for (const RVec& c : centers)
      if ((x - c).cwiseAbs().maxCoeff() < radius) return true;
    return false;
  }
};

namespace detail {

/// Edge r' < r with ceil(diam / r') = floor(diam / r) + 1.
inline double cube_edge(double diam, double r, long& per_side) {
  per_side = static_cast<long>(std::floor(diam / r)) + 1;
  if (diam == 0.0) return r * (1.0 - std::ldexp(1.0, -20));
  double edge = r * (1.0 - std::ldexp(1.0, -20));
  for (int it = 0; it < 200 && static_cast<long>(std::ceil(diam / edge)) > per_side; ++it) edge = 0.5 * (edge + r);
  const double lower = diam / static_cast<double>(per_side);
  if (static_cast<long>(std::ceil(diam / edge)) != per_side) edge = std::nextafter(r, 0.0);
  if (edge < lower || edge >= r) throw ConsistencyError("no admissible cube edge below the covering radius");
  return edge;
}

inline void check_radius(double r) {
  if (!(r > 0.0) || !std::isfinite(r)) throw Error("covering radius must be positive");
}

}  // namespace detail

/// Cover the box [lo, hi]: one centre per cube of the grid anchored at lo,
/// placed at the cube centre clipped into the box.
inline Covering cover_box(const RVec& lo, const RVec& hi, double r) {
  detail::check_radius(r);
  const int n = static_cast<int>(lo.size());
  Covering cov;
  cov.radius = r;
  cov.diam = (hi - lo).maxCoeff();
  cov.edge = detail::cube_edge(cov.diam, r, cov.cubes_per_side);
  std::vector<long> count(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    // Cubes whose lower face lies beyond hi_i are empty.
    long c = 0;
    while (c < cov.cubes_per_side && lo(i) + c * cov.edge <= hi(i)) ++c;
    count[static_cast<std::size_t>(i)] = std::max(1L, c);
  }
  std::vector<long> idx(static_cast<std::size_t>(n), 0);
  while (true) {
    RVec c(n);
    for (int i = 0; i < n; ++i) {
      const double mid = lo(i) + (idx[static_cast<std::size_t>(i)] + 0.5) * cov.edge;
      c(i) = std::clamp(mid, lo(i), hi(i));
    }
    cov.centers.push_back(std::move(c));
    int d = n - 1;
    while (d >= 0 && ++idx[static_cast<std::size_t>(d)] == count[static_cast<std::size_t>(d)]) idx[static_cast<std::size_t>(d--)] = 0;
    if (d < 0) break;
  }
  return cov;
}

/// Cover a finite point set: the first point (input order) of each
/// non-empty cube is its representative; cubes in lexicographic order.
inline Covering cover_points(const std::vector<RVec>& pts, double r) {
  detail::check_radius(r);
  if (pts.empty()) throw Error("cannot cover an empty set");
  const int n = static_cast<int>(pts.front().size());
  RVec lo = pts.front();
  RVec hi = pts.front();
  for (const RVec& p : pts) {
    if (p.size() != n) throw DimensionError("points of different dimension");
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  Covering cov;
  cov.radius = r;
  cov.diam = (hi - lo).maxCoeff();
  cov.edge = detail::cube_edge(cov.diam, r, cov.cubes_per_side);
  std::map<std::vector<long>, std::size_t> first;
  for (std::size_t a = 0; a < pts.size(); ++a) {
    std::vector<long> key(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
      const long k = static_cast<long>(std::floor((pts[a](i) - lo(i)) / cov.edge));
      key[static_cast<std::size_t>(i)] = std::clamp(k, 0L, cov.cubes_per_side - 1);
    }
    first.try_emplace(std::move(key), a);
  }
  for (const auto& [key, a] : first) cov.centers.push_back(pts[a]);
  return cov;
}

inline Covering cover(const DomainSpec& D, double r) {
  if (D.is_box()) return cover_box(D.lower(), D.upper(), r);
  return cover_points(D.points, r);
}

/// Covering of D by balls of radius r_hat.
inline Covering cover_for_certificate(const DomainSpec& D, const Certificate& cert) {
  Covering cov = cover(D, cert.r_hat);
  if (static_cast<double>(cov.N()) > cert.N_bound) throw ConsistencyError("covering exceeds the certificate's N bound");
  return cov;
}

}  // namespace kamest
