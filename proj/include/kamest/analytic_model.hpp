#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <complex>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <type_traits>
#include <utility>
#include <vector>

#include "kamest/error.hpp"
#include "kamest/polynomial.hpp"

namespace kamest {

using RVec = Eigen::VectorXd;
using CVec = Eigen::VectorXcd;
using RMat = Eigen::MatrixXd;
using CMat = Eigen::MatrixXcd;

inline constexpr int kMaxDimension = 6;
inline constexpr int kMaxHDegree = 4;

/// One term f_k(p) e^{i k.q} of the perturbation.
struct FourierMode {
  std::vector<int> k;
  Polynomial coeff;
};

/// H(p,q) = h(p) + sum_k f_k(p) e^{i k.q}: polynomial integrable part plus a
/// finite trigonometric polynomial perturbation with polynomial coefficients.
///
/// Immutable after construction; all evaluation members are const and
/// thread-safe.
class AnalyticModel {
 public:
  AnalyticModel(int n, Polynomial h, std::vector<FourierMode> modes, std::string family = "user_spec",
                std::map<std::string, double> params = {})
      : n_(n), h_(std::move(h)), modes_(std::move(modes)), family_(std::move(family)), params_(std::move(params)) {
    validate();
    precompute();
  }

  int n() const { return n_; }
  const Polynomial& h() const { return h_; }
  const std::vector<FourierMode>& modes() const { return modes_; }
  const std::string& family() const { return family_; }
  const std::map<std::string, double>& params() const { return params_; }
  bool has_perturbation() const { return !modes_.empty(); }
  /// True when h is at most quadratic, i.e. h_pp does not depend on p.
  bool constant_hessian() const { return h_.degree() <= 2; }

  const Polynomial& h_grad_poly(int i) const { return h_grad_[static_cast<std::size_t>(i)]; }
  const Polynomial& h_hess_poly(int i, int j) const { return h_hess_[index(i, j)]; }

  /// Largest |k|_1 over stored modes.
  int max_mode_order() const {
    int m = 0;
    for (const auto& mode : modes_) m = std::max(m, l1(mode.k));
    return m;
  }

  template <class T>
  cplx eval_h(const T* p) const {
    return h_.eval(p);
  }

  template <class T, class U>
  cplx eval_f(const T* p, const U* q) const {
    cplx acc(0.0);
    for (const auto& mode : modes_) acc += mode.coeff.eval(p) * phase(mode.k, q);
    return acc;
  }

  cplx evaluate(const CVec& p, const CVec& q) const {
    check_dim(p.size());
    check_dim(q.size());
    return eval_h(p.data()) + eval_f(p.data(), q.data());
  }

  /// Frequency map h_p(p).
  template <class T>
  CVec frequency(const T* p) const {
    CVec w(n_);
    for (int i = 0; i < n_; ++i) w(i) = h_grad_[static_cast<std::size_t>(i)].eval(p);
    return w;
  }
  CVec frequency(const CVec& p) const {
    check_dim(p.size());
    return frequency(p.data());
  }

  template <class T>
  CMat hessian(const T* p) const {
    CMat m(n_, n_);
    for (int i = 0; i < n_; ++i)
      for (int j = 0; j < n_; ++j) m(i, j) = h_hess_[index(i, j)].eval(p);
    return m;
  }
  CMat hessian(const CVec& p) const {
    check_dim(p.size());
    return hessian(p.data());
  }

  /// Third derivatives d^3 h / dp_i dp_j dp_k at p, laid out as n blocks of n x n.
  std::vector<CMat> third_derivatives(const CVec& p) const {
    check_dim(p.size());
    std::vector<CMat> out(static_cast<std::size_t>(n_), CMat(n_, n_));
    for (int i = 0; i < n_; ++i)
      for (int j = 0; j < n_; ++j)
        for (int k = 0; k < n_; ++k) out[static_cast<std::size_t>(k)](i, j) = h_third_[index3(i, j, k)].eval(p.data());
    return out;
  }

  /// Real energy at a real phase point.
  double energy(const double* p, const double* q) const {
    double e = h_.eval_real(p);
    for (const auto& mode : modes_) e += (mode.coeff.eval(p) * phase(mode.k, q)).real();
    return e;
  }

  /// Hamiltonian vector field at a real point: pdot = -H_q, qdot = H_p.
  void vector_field(const double* p, const double* q, double* pdot, double* qdot) const {
    for (int i = 0; i < n_; ++i) {
      qdot[i] = h_grad_[static_cast<std::size_t>(i)].eval_real(p);
      pdot[i] = 0.0;
    }
    for (std::size_t m = 0; m < modes_.size(); ++m) {
      const auto& mode = modes_[m];
      const cplx e = phase(mode.k, q);
      const cplx c = mode.coeff.eval(p);
      const cplx ce = c * e;
      // d/dq_j (c e^{ik.q}) = i k_j c e^{ik.q}; real part is -k_j Im(c e).
      for (int j = 0; j < n_; ++j) pdot[j] += static_cast<double>(mode.k[static_cast<std::size_t>(j)]) * ce.imag();
      for (int i = 0; i < n_; ++i) {
        const auto& d = mode_grad_[m][static_cast<std::size_t>(i)];
        if (!d.is_zero()) qdot[i] += (d.eval(p) * e).real();
      }
    }
  }

  /// Gradient (H_p, H_q) and full phase-space Hessian [[H_pp, H_pq], [H_qp, H_qq]]
  /// at a real point.  grad has length 2n, hess is 2n x 2n.
  void phase_derivatives(const double* p, const double* q, double* grad, RMat& hess) const {
    const int n = n_;
    hess.setZero(2 * n, 2 * n);
    for (int i = 0; i < n; ++i) {
      grad[i] = h_grad_[static_cast<std::size_t>(i)].eval_real(p);
      grad[n + i] = 0.0;
      for (int j = 0; j < n; ++j) hess(i, j) = h_hess_[index(i, j)].eval_real(p);
    }
    for (std::size_t m = 0; m < modes_.size(); ++m) {
      const auto& mode = modes_[m];
      const cplx e = phase(mode.k, q);
      const cplx c = mode.coeff.eval(p);
      const cplx ik(0.0, 1.0);
      std::vector<cplx> cp(static_cast<std::size_t>(n));
      for (int i = 0; i < n; ++i) {
        const auto& d = mode_grad_[m][static_cast<std::size_t>(i)];
        cp[static_cast<std::size_t>(i)] = d.is_zero() ? cplx(0.0) : d.eval(p);
      }
      for (int i = 0; i < n; ++i) {
        const double ki = mode.k[static_cast<std::size_t>(i)];
        grad[i] += (cp[static_cast<std::size_t>(i)] * e).real();
        grad[n + i] += (ik * ki * c * e).real();
        for (int j = 0; j < n; ++j) {
          const double kj = mode.k[static_cast<std::size_t>(j)];
          const auto& d2 = mode_hess_[m][index(i, j)];
          if (!d2.is_zero()) hess(i, j) += (d2.eval(p) * e).real();
          // H_{p_i q_j} = i k_j d_i f_k e
          const double hpq = (ik * kj * cp[static_cast<std::size_t>(i)] * e).real();
          hess(i, n + j) += hpq;
          hess(n + j, i) += hpq;
          hess(n + i, n + j) += (-ki * kj * c * e).real();
        }
      }
    }
  }

 private:
  static int l1(const std::vector<int>& k) {
    int s = 0;
    for (int v : k) s += std::abs(v);
    return s;
  }

  template <class U>
  static cplx phase(const std::vector<int>& k, const U* q) {
    U arg(0.0);
    for (std::size_t j = 0; j < k.size(); ++j) arg += static_cast<double>(k[j]) * q[j];
    if constexpr (std::is_same_v<U, double>) {
      return {std::cos(arg), std::sin(arg)};
    } else {
      return std::exp(cplx(0.0, 1.0) * arg);
    }
  }

  std::size_t index(int i, int j) const { return static_cast<std::size_t>(i * n_ + j); }
  std::size_t index3(int i, int j, int k) const { return static_cast<std::size_t>((i * n_ + j) * n_ + k); }

  void check_dim(Eigen::Index size) const {
    if (size != n_) throw DimensionError("vector length " + std::to_string(size) + " does not match n = " + std::to_string(n_));
  }

  void validate() const {
    if (n_ < 2) throw DimensionError("models need n >= 2 degrees of freedom");
    if (n_ > kMaxDimension) throw DimensionError("n > 6 is not supported");
    if (h_.nvars() != n_) throw DimensionError("h has the wrong number of variables");
    if (h_.degree() > kMaxHDegree) throw Error("h must be a polynomial of degree <= 4");
    if (!h_.has_real_coefficients()) throw Error("h must have real coefficients");
    for (const auto& mode : modes_) {
      if (static_cast<int>(mode.k.size()) != n_) throw DimensionError("mode vector has the wrong length");
      if (mode.coeff.nvars() != n_) throw DimensionError("mode coefficient has the wrong number of variables");
    }
    // Reality: f_{-k} = conj(f_k) coefficient-wise.
    for (std::size_t a = 0; a < modes_.size(); ++a) {
      std::vector<int> neg = modes_[a].k;
      for (int& v : neg) v = -v;
      const FourierMode* partner = nullptr;
      int count = 0;
      for (const auto& other : modes_)
        if (other.k == neg) {
          partner = &other;
          ++count;
        }
      for (std::size_t b = a + 1; b < modes_.size(); ++b)
        if (modes_[b].k == modes_[a].k) throw Error("duplicate Fourier mode");
      if (count != 1) throw Error("reality condition violated: mode without conjugate partner");
      const double scale = std::max(1.0, modes_[a].coeff.max_abs_coeff());
      if (coefficient_distance(partner->coeff, modes_[a].coeff.conj()) > 1e-15 * scale)
        throw Error("reality condition violated: f_{-k} != conj(f_k)");
    }
  }

  void precompute() {
    const auto un = static_cast<std::size_t>(n_);
    h_grad_.reserve(un);
    for (int i = 0; i < n_; ++i) h_grad_.push_back(h_.derivative(i));
    h_hess_.resize(un * un);
    h_third_.resize(un * un * un);
    for (int i = 0; i < n_; ++i)
      for (int j = 0; j < n_; ++j) {
        h_hess_[index(i, j)] = h_grad_[static_cast<std::size_t>(i)].derivative(j);
        for (int k = 0; k < n_; ++k) h_third_[index3(i, j, k)] = h_hess_[index(i, j)].derivative(k);
      }
    for (const auto& mode : modes_) {
      std::vector<Polynomial> g;
      std::vector<Polynomial> hh(un * un);
      for (int i = 0; i < n_; ++i) g.push_back(mode.coeff.derivative(i));
      for (int i = 0; i < n_; ++i)
        for (int j = 0; j < n_; ++j) hh[index(i, j)] = g[static_cast<std::size_t>(i)].derivative(j);
      mode_grad_.push_back(std::move(g));
      mode_hess_.push_back(std::move(hh));
    }
  }

  int n_;
  Polynomial h_;
  std::vector<FourierMode> modes_;
  std::string family_;
  std::map<std::string, double> params_;

  std::vector<Polynomial> h_grad_;
  std::vector<Polynomial> h_hess_;
  std::vector<Polynomial> h_third_;
  std::vector<std::vector<Polynomial>> mode_grad_;
  std::vector<std::vector<Polynomial>> mode_hess_;
};

/// Explicit coefficient tables for the user_spec family.
struct ModelTables {
  int n = 2;
  std::vector<std::pair<MultiIndex, double>> h_terms;
  /// (k, exponent multi-index, coefficient) triples.
  struct FTerm {
    std::vector<int> k;
    MultiIndex exps;
    cplx coeff;
  };
  std::vector<FTerm> f_terms;
};

inline AnalyticModel model_from_tables(const ModelTables& t, std::string family = "user_spec",
                                       std::map<std::string, double> params = {}) {
  if (t.n < 2 || t.n > kMaxDimension) throw DimensionError("n must lie in [2, 6]");
  Polynomial h(t.n);
  for (const auto& [e, c] : t.h_terms) h.add_term(e, c);
  std::vector<FourierMode> modes;
  for (const auto& ft : t.f_terms) {
    auto it = std::find_if(modes.begin(), modes.end(), [&](const FourierMode& m) { return m.k == ft.k; });
    if (it == modes.end()) {
      modes.push_back({ft.k, Polynomial(t.n)});
      it = modes.end() - 1;
    }
    it->coeff.add_term(ft.exps, ft.coeff);
  }
  std::erase_if(modes, [](const FourierMode& m) { return m.coeff.is_zero(); });
  return AnalyticModel(t.n, std::move(h), std::move(modes), std::move(family), std::move(params));
}

namespace detail {
inline Polynomial half_square_norm(int n) {
  Polynomial h(n);
  for (int i = 0; i < n; ++i) {
    MultiIndex e(static_cast<std::size_t>(n), 0);
    e[static_cast<std::size_t>(i)] = 2;
    h.add_term(e, 0.5);
  }
  return h;
}

inline void add_cosine(std::vector<FourierMode>& modes, int n, std::vector<int> k, double amplitude) {
  std::vector<int> neg = k;
  for (int& v : neg) v = -v;
  modes.push_back({std::move(k), Polynomial::constant(n, amplitude / 2.0)});
  modes.push_back({std::move(neg), Polynomial::constant(n, amplitude / 2.0)});
}

inline double param(const std::map<std::string, double>& params, const std::string& key, double fallback) {
  auto it = params.find(key);
  return it == params.end() ? fallback : it->second;
}

inline void check_keys(const std::map<std::string, double>& params, std::initializer_list<std::string> allowed) {
  for (const auto& [key, value] : params)
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end())
      throw Error("unknown parameter '" + key + "' for this model family");
}
}  // namespace detail

/// Built-in model families:
///   free_rotors      h = |p|^2/2, f = 0                     params: n
///   forced_pendulum  h = |p|^2/2, f = eps cos q1   (n = 2)  params: eps
///   coupled_rotors   f = eps (cos q1 + a cos(q1+q2)) (n=2)  params: eps, a
///   user_spec        explicit coefficient tables
inline AnalyticModel builtin(const std::string& family, const std::map<std::string, double>& params = {},
                             const ModelTables* tables = nullptr) {
  using detail::param;
  if (family == "free_rotors") {
    detail::check_keys(params, {"n"});
    const double nd = param(params, "n", 2.0);
    const int n = static_cast<int>(nd);
    if (n != nd) throw Error("free_rotors: n must be an integer");
    return AnalyticModel(n, detail::half_square_norm(n), {}, family, params);
  }
  if (family == "forced_pendulum") {
    detail::check_keys(params, {"eps"});
    const double eps = param(params, "eps", 1e-3);
    std::vector<FourierMode> modes;
    if (eps != 0.0) detail::add_cosine(modes, 2, {1, 0}, eps);
    return AnalyticModel(2, detail::half_square_norm(2), std::move(modes), family, params);
  }
  if (family == "coupled_rotors") {
    detail::check_keys(params, {"eps", "a"});
    const double eps = param(params, "eps", 1e-2);
    const double a = param(params, "a", 0.5);
    std::vector<FourierMode> modes;
    if (eps != 0.0) {
      detail::add_cosine(modes, 2, {1, 0}, eps);
      if (a != 0.0) detail::add_cosine(modes, 2, {1, 1}, eps * a);
    }
    return AnalyticModel(2, detail::half_square_norm(2), std::move(modes), family, params);
  }
  if (family == "user_spec") {
    if (tables == nullptr) throw Error("user_spec needs explicit coefficient tables");
    return model_from_tables(*tables, family, params);
  }
  throw Error("unknown model family '" + family + "'");
}

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
};

/// Action domain D (box or finite point list) together with the analyticity
/// radii r0, s and the Diophantine exponent tau.
struct DomainSpec {
  std::vector<Interval> box;
  std::vector<RVec> points;
  double r0 = 0.1;
  double s = 1.0;
  double tau = 1.5;

  static DomainSpec make_box(std::vector<Interval> b, double r0, double s, double tau) {
    DomainSpec d;
    d.box = std::move(b);
    d.r0 = r0;
    d.s = s;
    d.tau = tau;
    return d;
  }
  static DomainSpec make_points(std::vector<RVec> pts, double r0, double s, double tau) {
    DomainSpec d;
    d.points = std::move(pts);
    d.r0 = r0;
    d.s = s;
    d.tau = tau;
    return d;
  }

  bool is_box() const { return !box.empty(); }
  double nu() const { return tau + 1.0; }
  int dim() const { return is_box() ? static_cast<int>(box.size()) : (points.empty() ? 0 : static_cast<int>(points.front().size())); }

  void validate(int n) const {
    if (is_box() == !points.empty()) throw Error("domain must be either a box or a non-empty point list");
    if (dim() != n) throw DimensionError("domain dimension does not match the model");
    for (const auto& iv : box)
      if (!(iv.lo <= iv.hi) || !std::isfinite(iv.lo) || !std::isfinite(iv.hi)) throw Error("invalid box interval");
    for (const auto& p : points) {
      if (p.size() != n) throw DimensionError("domain point has the wrong length");
      if (!p.allFinite()) throw Error("domain point is not finite");
    }
    if (!(r0 > 0.0)) throw Error("r0 must be positive");
    if (!(s > 0.0 && s <= 1.0)) throw Error("s must lie in (0, 1]");
    if (!(tau > n - 1)) throw Error("tau must exceed n - 1");
  }

  RVec lower() const {
    const int n = dim();
    RVec lo(n);
    if (is_box()) {
      for (int i = 0; i < n; ++i) lo(i) = box[static_cast<std::size_t>(i)].lo;
    } else {
      lo = points.front();
      for (const auto& p : points) lo = lo.cwiseMin(p);
    }
    return lo;
  }
  RVec upper() const {
    const int n = dim();
    RVec hi(n);
    if (is_box()) {
      for (int i = 0; i < n; ++i) hi(i) = box[static_cast<std::size_t>(i)].hi;
    } else {
      hi = points.front();
      for (const auto& p : points) hi = hi.cwiseMax(p);
    }
    return hi;
  }

  /// Sup-norm diameter.
  double diam() const {
    if (is_box()) return (upper() - lower()).maxCoeff();
    double d = 0.0;
    for (std::size_t a = 0; a < points.size(); ++a)
      for (std::size_t b = a + 1; b < points.size(); ++b) d = std::max(d, (points[a] - points[b]).cwiseAbs().maxCoeff());
    return d;
  }

  /// Lebesgue measure of D (zero for point lists).
  double measure() const {
    if (!is_box()) return 0.0;
    double m = 1.0;
    for (const auto& iv : box) m *= iv.hi - iv.lo;
    return m;
  }

  /// Per-coordinate bound max |p_i| over the complex r-neighbourhood of D.
  std::vector<double> boxed_radii(double r) const {
    RVec lo = lower();
    RVec hi = upper();
    std::vector<double> R(static_cast<std::size_t>(dim()));
    for (int i = 0; i < dim(); ++i) R[static_cast<std::size_t>(i)] = std::max(std::abs(lo(i)), std::abs(hi(i))) + r;
    return R;
  }

  /// Deterministic sample set of D: G points per dimension (endpoints included)
  /// for boxes, the points themselves for point lists.
  std::vector<RVec> grid(int G) const {
    if (!is_box()) return points;
    return box_grid(lower(), upper(), G);
  }

  static std::vector<RVec> box_grid(const RVec& lo, const RVec& hi, int G) {
    const int n = static_cast<int>(lo.size());
    std::vector<RVec> out;
    std::vector<int> idx(static_cast<std::size_t>(n), 0);
    while (true) {
      RVec p(n);
      for (int i = 0; i < n; ++i) {
        const bool flat = hi(i) == lo(i) || G <= 1;
        p(i) = flat ? 0.5 * (lo(i) + hi(i)) : lo(i) + (hi(i) - lo(i)) * idx[static_cast<std::size_t>(i)] / (G - 1);
      }
      out.push_back(p);
      int d = 0;
      while (d < n) {
        const bool flat = hi(d) == lo(d) || G <= 1;
        if (!flat && ++idx[static_cast<std::size_t>(d)] < G) break;
        idx[static_cast<std::size_t>(d)] = 0;
        ++d;
      }
      if (d == n) break;
    }
    return out;
  }
};

}  // namespace kamest
