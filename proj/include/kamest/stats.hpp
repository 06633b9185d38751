#pragma once

#include <boost/math/distributions/students_t.hpp>
#include <cmath>
#include <span>
#include <stdexcept>
#include <vector>

#include "kamest/error.hpp"

namespace kamest {

struct LineFit {
  bool valid = false;
  double slope = 0.0;
  double intercept = 0.0;
  double slope_stderr = 0.0;
  double slope_ci_lo = 0.0;  ///< 95% interval
  double slope_ci_hi = 0.0;
  double r2 = 0.0;
  std::size_t points = 0;
};

/// Ordinary least squares y = a x + b.
inline LineFit fit_line(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw DimensionError("fit: x and y differ in length");
  LineFit f;
  f.points = x.size();
  if (x.size() < 2) return f;
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0.0) return f;
  f.valid = true;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  double sse = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double r = y[i] - f.slope * x[i] - f.intercept;
    sse += r * r;
  }
  f.r2 = syy > 0.0 ? 1.0 - sse / syy : 1.0;
  if (x.size() > 2) {
    f.slope_stderr = std::sqrt(sse / (n - 2.0) / sxx);
    const boost::math::students_t dist(n - 2.0);
    const double t = boost::math::quantile(boost::math::complement(dist, 0.025));
    f.slope_ci_lo = f.slope - t * f.slope_stderr;
    f.slope_ci_hi = f.slope + t * f.slope_stderr;
  } else {
    f.slope_ci_lo = f.slope_ci_hi = f.slope;
  }
  return f;
}

/// Least squares y = a x through the origin.  R^2 uses the centred total sum
/// of squares, the stricter of the two conventions.
inline LineFit fit_through_origin(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw DimensionError("fit: x and y differ in length");
  LineFit f;
  f.points = x.size();
  double sxx = 0.0, sxy = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
    my += y[i];
  }
  if (x.empty() || sxx == 0.0) return f;
  my /= static_cast<double>(x.size());
  f.valid = true;
  f.slope = sxy / sxx;
  double sse = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sse += (y[i] - f.slope * x[i]) * (y[i] - f.slope * x[i]);
    syy += (y[i] - my) * (y[i] - my);
  }
  f.r2 = syy > 0.0 ? 1.0 - sse / syy : (sse == 0.0 ? 1.0 : 0.0);
  if (x.size() > 1) f.slope_stderr = std::sqrt(sse / (static_cast<double>(x.size()) - 1.0) / sxx);
  f.slope_ci_lo = f.slope - 1.96 * f.slope_stderr;
  f.slope_ci_hi = f.slope + 1.96 * f.slope_stderr;
  return f;
}

}  // namespace kamest
