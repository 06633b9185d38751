#pragma once

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "kamest/analytic_model.hpp"
#include "kamest/error.hpp"

namespace kamest {

/// Fourier coefficients of a real function on T^n, N modes per dimension in
/// FFT order (index j <-> wavenumber j for j < N/2, j - N otherwise), flattened
/// row-major with the first angle slowest.  The Nyquist index is kept at zero.
using Coeffs = std::vector<cplx>;

namespace detail {

struct FftwPlanDeleter {
  void operator()(fftw_plan_s* p) const {
    if (p != nullptr) fftw_destroy_plan(p);
  }
};
struct FftwBufferDeleter {
  void operator()(fftw_complex* p) const { fftw_free(p); }
};

/// In-place n-dimensional complex transform pair of size M^n.
class FftwPair {
 public:
  FftwPair(int n, int M) : size_(1) {
    std::vector<int> dims(static_cast<std::size_t>(n), M);
    for (int i = 0; i < n; ++i) size_ *= static_cast<std::size_t>(M);
    buffer_.reset(static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * size_)));
    if (!buffer_) throw std::bad_alloc();
    forward_.reset(fftw_plan_dft(n, dims.data(), buffer_.get(), buffer_.get(), FFTW_FORWARD, FFTW_ESTIMATE));
    backward_.reset(fftw_plan_dft(n, dims.data(), buffer_.get(), buffer_.get(), FFTW_BACKWARD, FFTW_ESTIMATE));
    if (!forward_ || !backward_) throw Error("FFTW planning failed");
  }

  std::size_t size() const { return size_; }
  cplx* data() { return reinterpret_cast<cplx*>(buffer_.get()); }
  void forward() { fftw_execute(forward_.get()); }
  void backward() { fftw_execute(backward_.get()); }

 private:
  std::size_t size_;
  std::unique_ptr<fftw_complex, FftwBufferDeleter> buffer_;
  std::unique_ptr<fftw_plan_s, FftwPlanDeleter> forward_;
  std::unique_ptr<fftw_plan_s, FftwPlanDeleter> backward_;
};

}  // namespace detail

/// Spectral toolkit for N modes per dimension: evaluation on (padded) grids,
/// projection back to N modes, derivatives and the cohomological solve.
class Spectral {
 public:
  Spectral(int n, int N) : n_(n), N_(N) {
    if (n < 1 || n > kMaxDimension) throw DimensionError("spectral dimension out of range");
    if (N < 4 || (N & (N - 1)) != 0) throw Error("number of Fourier modes must be a power of two >= 4");
    size_ = 1;
    for (int i = 0; i < n; ++i) size_ *= static_cast<std::size_t>(N);
    wavenumbers_.resize(size_ * static_cast<std::size_t>(n));
    for (std::size_t idx = 0; idx < size_; ++idx) {
      std::size_t rest = idx;
      for (int d = n - 1; d >= 0; --d) {
        const int j = static_cast<int>(rest % static_cast<std::size_t>(N));
        rest /= static_cast<std::size_t>(N);
        wavenumbers_[idx * static_cast<std::size_t>(n) + static_cast<std::size_t>(d)] = j < N / 2 ? j : j - N;
      }
    }
  }

  int n() const { return n_; }
  int N() const { return N_; }
  std::size_t size() const { return size_; }
  /// Recommended de-aliasing grid size (3/2 rule).
  int padded() const { return 3 * N_ / 2; }

  const int* k(std::size_t idx) const { return &wavenumbers_[idx * static_cast<std::size_t>(n_)]; }
  bool retained(std::size_t idx) const {
    for (int d = 0; d < n_; ++d)
      if (std::abs(k(idx)[d]) >= N_ / 2) return false;
    return true;
  }
  Coeffs zeros() const { return Coeffs(size_, cplx(0.0)); }

  /// Grid angles of a grid of M points per dimension, flattened like the data.
  std::vector<RVec> grid_points(int M) const {
    std::size_t total = 1;
    for (int i = 0; i < n_; ++i) total *= static_cast<std::size_t>(M);
    std::vector<RVec> out(total, RVec(n_));
    for (std::size_t idx = 0; idx < total; ++idx) {
      std::size_t rest = idx;
      for (int d = n_ - 1; d >= 0; --d) {
        out[idx](d) = 2.0 * M_PI * static_cast<double>(rest % static_cast<std::size_t>(M)) / M;
        rest /= static_cast<std::size_t>(M);
      }
    }
    return out;
  }

  /// Values on the M^n grid (M >= N).
  std::vector<double> to_grid(const Coeffs& c, int M) {
    auto& fft = plan(M);
    cplx* buf = fft.data();
    std::fill(buf, buf + fft.size(), cplx(0.0));
    for (std::size_t idx = 0; idx < size_; ++idx) {
      if (c[idx] == cplx(0.0)) continue;
      buf[wrap(idx, M)] = c[idx];
    }
    fft.backward();
    std::vector<double> v(fft.size());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = buf[i].real();
    return v;
  }

  /// Coefficients (truncated to the retained N modes) of grid values on M^n.
  Coeffs from_grid(const std::vector<double>& values, int M) {
    auto& fft = plan(M);
    if (values.size() != fft.size()) throw DimensionError("grid data has the wrong size");
    cplx* buf = fft.data();
    for (std::size_t i = 0; i < values.size(); ++i) buf[i] = values[i];
    fft.forward();
    const double scale = 1.0 / static_cast<double>(fft.size());
    Coeffs c(size_, cplx(0.0));
    for (std::size_t idx = 0; idx < size_; ++idx)
      if (retained(idx)) c[idx] = buf[wrap(idx, M)] * scale;
    return c;
  }

  Coeffs derivative(const Coeffs& c, int d) const {
    Coeffs out(c.size());
    for (std::size_t idx = 0; idx < size_; ++idx) out[idx] = c[idx] * cplx(0.0, static_cast<double>(k(idx)[d]));
    return out;
  }

  double divisor(std::size_t idx, const RVec& omega) const {
    double s = 0.0;
    for (int d = 0; d < n_; ++d) s += k(idx)[d] * omega(d);
    return s;
  }

  /// omega . grad
  Coeffs directional(const Coeffs& c, const RVec& omega) const {
    Coeffs out(c.size());
    for (std::size_t idx = 0; idx < size_; ++idx) out[idx] = c[idx] * cplx(0.0, divisor(idx, omega));
    return out;
  }

  /// Retained mode whose small divisor omega.k vanishes (to rounding), if any.
  std::optional<std::vector<int>> zero_divisor(const RVec& omega) const {
    const double scale = omega.cwiseAbs().maxCoeff();
    for (std::size_t idx = 1; idx < size_; ++idx) {
      if (!retained(idx)) continue;
      int l1 = 0;
      for (int d = 0; d < n_; ++d) l1 += std::abs(k(idx)[d]);
      if (std::abs(divisor(idx, omega)) <= 1e-14 * scale * l1) return std::vector<int>(k(idx), k(idx) + n_);
    }
    return std::nullopt;
  }

  /// Mean value (the zero mode) of a real field.
  static double mean(const Coeffs& c) { return c.front().real(); }

 private:
  std::size_t wrap(std::size_t idx, int M) const {
    std::size_t out = 0;
    for (int d = 0; d < n_; ++d) {
      const int kk = k(idx)[d];
      out = out * static_cast<std::size_t>(M) + static_cast<std::size_t>(kk >= 0 ? kk : kk + M);
    }
    return out;
  }

  detail::FftwPair& plan(int M) {
    if (M < N_) throw Error("grid must have at least N points per dimension");
    auto it = plans_.find(M);
    if (it == plans_.end()) it = plans_.emplace(M, std::make_unique<detail::FftwPair>(n_, M)).first;
    return *it->second;
  }

  int n_;
  int N_;
  std::size_t size_;
  std::vector<int> wavenumbers_;
  std::map<int, std::unique_ptr<detail::FftwPair>> plans_;
};

/// u with omega . grad u = v on the retained modes (u_0 = 0).
inline Coeffs solve_cohomological(const Spectral& sp, const Coeffs& v, const RVec& omega) {
  if (v.size() != sp.size()) throw DimensionError("coefficient array has the wrong size");
  double vmax = 0.0;
  for (const cplx& c : v) vmax = std::max(vmax, std::abs(c));
  if (std::abs(v.front()) > 1e-12 * std::max(1.0, vmax)) throw Error("cohomological equation needs zero-mean data");
  if (auto k = sp.zero_divisor(omega)) {
    std::string s = "(";
    for (std::size_t i = 0; i < k->size(); ++i) s += (i ? "," : "") + std::to_string((*k)[i]);
    throw ResonanceError("zero small divisor omega.k for retained mode k = " + s + ")");
  }
  Coeffs u(v.size(), cplx(0.0));
  for (std::size_t idx = 1; idx < sp.size(); ++idx) {
    if (!sp.retained(idx) || v[idx] == cplx(0.0)) continue;
    u[idx] = v[idx] / cplx(0.0, sp.divisor(idx, omega));
  }
  return u;
}

}  // namespace kamest
