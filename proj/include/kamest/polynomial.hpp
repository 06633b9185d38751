#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <span>
#include <vector>

#include "kamest/error.hpp"

namespace kamest {

using cplx = std::complex<double>;
using MultiIndex = std::vector<int>;

/// Multivariate polynomial with complex coefficients, stored as a sorted list
/// of (exponent multi-index, coefficient) terms.  Like terms are merged and
/// zero coefficients are dropped.
class Polynomial {
 public:
  Polynomial() = default;
  explicit Polynomial(int nvars) : nvars_(nvars) {
    if (nvars < 1) throw DimensionError("polynomial needs at least one variable");
  }

  static Polynomial constant(int nvars, cplx c) {
    Polynomial p(nvars);
    p.add_term(MultiIndex(static_cast<std::size_t>(nvars), 0), c);
    return p;
  }

  int nvars() const { return nvars_; }
  std::size_t size() const { return coeffs_.size(); }
  bool is_zero() const { return coeffs_.empty(); }

  std::span<const int> exponents(std::size_t term) const {
    return {exps_.data() + term * static_cast<std::size_t>(nvars_), static_cast<std::size_t>(nvars_)};
  }
  cplx coeff(std::size_t term) const { return coeffs_[term]; }

  void add_term(std::span<const int> exps, cplx c) {
    if (static_cast<int>(exps.size()) != nvars_) throw DimensionError("monomial arity mismatch");
    for (int e : exps)
      if (e < 0) throw Error("negative exponent in polynomial term");
    // Find insertion point keeping lexicographic order.
    std::size_t lo = 0;
    std::size_t hi = size();
    while (lo < hi) {
      std::size_t mid = (lo + hi) / 2;
      auto cur = exponents(mid);
      if (std::lexicographical_compare(cur.begin(), cur.end(), exps.begin(), exps.end()))
        lo = mid + 1;
      else
        hi = mid;
    }
    if (lo < size() && std::equal(exps.begin(), exps.end(), exponents(lo).begin())) {
      coeffs_[lo] += c;
      if (coeffs_[lo] == cplx(0.0)) erase(lo);
      return;
    }
    if (c == cplx(0.0)) return;
    exps_.insert(exps_.begin() + static_cast<std::ptrdiff_t>(lo) * nvars_, exps.begin(), exps.end());
    coeffs_.insert(coeffs_.begin() + static_cast<std::ptrdiff_t>(lo), c);
  }

  void add_term(std::initializer_list<int> exps, cplx c) {
    add_term(std::span<const int>(exps.begin(), exps.size()), c);
  }

  int degree() const {
    int d = 0;
    for (std::size_t t = 0; t < size(); ++t) {
      int s = 0;
      for (int e : exponents(t)) s += e;
      d = std::max(d, s);
    }
    return d;
  }

  /// Evaluate at x (length nvars).  T is double or std::complex<double>.
  template <class T>
  cplx eval(const T* x) const {
    cplx acc(0.0);
    for (std::size_t t = 0; t < size(); ++t) {
      const int* e = exps_.data() + t * static_cast<std::size_t>(nvars_);
      T mono(1.0);
      for (int i = 0; i < nvars_; ++i)
        for (int k = 0; k < e[i]; ++k) mono *= x[i];
      acc += coeffs_[t] * mono;
    }
    return acc;
  }

  /// Real part of the value at a real point; exact when all coefficients are real.
  double eval_real(const double* x) const {
    double acc = 0.0;
    for (std::size_t t = 0; t < size(); ++t) {
      const int* e = exps_.data() + t * static_cast<std::size_t>(nvars_);
      double mono = 1.0;
      for (int i = 0; i < nvars_; ++i)
        for (int k = 0; k < e[i]; ++k) mono *= x[i];
      acc += coeffs_[t].real() * mono;
    }
    return acc;
  }

  Polynomial derivative(int var) const {
    if (var < 0 || var >= nvars_) throw DimensionError("derivative variable out of range");
    Polynomial d(nvars_);
    MultiIndex e(static_cast<std::size_t>(nvars_));
    for (std::size_t t = 0; t < size(); ++t) {
      auto src = exponents(t);
      if (src[static_cast<std::size_t>(var)] == 0) continue;
      std::copy(src.begin(), src.end(), e.begin());
      double factor = e[static_cast<std::size_t>(var)]--;
      d.add_term(e, coeffs_[t] * factor);
    }
    return d;
  }

  /// Upper bound of |p| on the complex polydisc |x_i| <= radii[i]:
  /// sum of |coefficient| times the monomial evaluated at the radii.
  double majorant(std::span<const double> radii) const {
    double acc = 0.0;
    for (std::size_t t = 0; t < size(); ++t) {
      double mono = 1.0;
      auto e = exponents(t);
      for (int i = 0; i < nvars_; ++i) mono *= std::pow(radii[static_cast<std::size_t>(i)], e[static_cast<std::size_t>(i)]);
      acc += std::abs(coeffs_[t]) * mono;
    }
    return acc;
  }

  bool has_real_coefficients() const {
    return std::all_of(coeffs_.begin(), coeffs_.end(), [](cplx c) { return c.imag() == 0.0; });
  }

  double max_abs_coeff() const {
    double m = 0.0;
    for (cplx c : coeffs_) m = std::max(m, std::abs(c));
    return m;
  }

  Polynomial conj() const {
    Polynomial r = *this;
    for (cplx& c : r.coeffs_) c = std::conj(c);
    return r;
  }

  Polynomial& operator+=(const Polynomial& o) {
    check_same(o);
    for (std::size_t t = 0; t < o.size(); ++t) add_term(o.exponents(t), o.coeff(t));
    return *this;
  }
  Polynomial& operator-=(const Polynomial& o) {
    check_same(o);
    for (std::size_t t = 0; t < o.size(); ++t) add_term(o.exponents(t), -o.coeff(t));
    return *this;
  }
  Polynomial& operator*=(cplx c) {
    if (c == cplx(0.0)) {
      exps_.clear();
      coeffs_.clear();
      return *this;
    }
    for (cplx& x : coeffs_) x *= c;
    return *this;
  }

  friend Polynomial operator+(Polynomial a, const Polynomial& b) { return a += b; }
  friend Polynomial operator-(Polynomial a, const Polynomial& b) { return a -= b; }
  friend Polynomial operator*(Polynomial a, cplx c) { return a *= c; }
  friend Polynomial operator*(const Polynomial& a, const Polynomial& b) {
    a.check_same(b);
    Polynomial r(a.nvars_);
    MultiIndex e(static_cast<std::size_t>(a.nvars_));
    for (std::size_t i = 0; i < a.size(); ++i)
      for (std::size_t j = 0; j < b.size(); ++j) {
        auto ea = a.exponents(i);
        auto eb = b.exponents(j);
        for (std::size_t v = 0; v < e.size(); ++v) e[v] = ea[v] + eb[v];
        r.add_term(e, a.coeff(i) * b.coeff(j));
      }
    return r;
  }

  /// Maximum deviation between coefficient tables (terms missing on one side count fully).
  friend double coefficient_distance(const Polynomial& a, const Polynomial& b) {
    Polynomial d = a - b;
    return d.max_abs_coeff();
  }

 private:
  void erase(std::size_t t) {
    exps_.erase(exps_.begin() + static_cast<std::ptrdiff_t>(t) * nvars_,
                exps_.begin() + static_cast<std::ptrdiff_t>(t + 1) * nvars_);
    coeffs_.erase(coeffs_.begin() + static_cast<std::ptrdiff_t>(t));
  }
  void check_same(const Polynomial& o) const {
    if (o.nvars_ != nvars_) throw DimensionError("polynomial arity mismatch");
  }

  int nvars_ = 0;
  std::vector<int> exps_;
  std::vector<cplx> coeffs_;
};

}  // namespace kamest
