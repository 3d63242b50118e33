#pragma once

#include <Eigen/Dense>
#include <complex>
#include <unsupported/Eigen/FFT>
#include <vector>

#include "qns/grid.hpp"

namespace qns {
namespace fft {

// Transform conventions used throughout:
//   forward:  fhat(k) = sum_x f(x) exp(-i xi_k . x)        (unnormalized)
//   inverse:  f(x) = (1/N) sum_k fhat(k) exp(+i xi_k . x)  (N = n^dim)
// Multi-dimensional transforms are composed from 1D passes along each axis.
// The backend is Eigen's bundled FFT (Unscaled flag: no implicit 1/n), so the
// single 1/N normalization below is the only scaling anywhere.

template <typename Scalar>
Eigen::FFT<Scalar>& engine() {
  // Eigen::FFT caches per-length plans internally. One engine per scalar type;
  // the library runs transforms on a single thread (see README on determinism).
  static Eigen::FFT<Scalar> fft(typename Eigen::FFT<Scalar>::impl_type(),
                                Eigen::FFT<Scalar>::Unscaled);
  return fft;
}

// One 1D pass over every line of the flattened array along the axis with the
// given stride. `data` holds grid.total_modes() complex entries.
template <typename Scalar>
void axis_pass(std::complex<Scalar>* data, Eigen::Index total, Eigen::Index n,
               Eigen::Index stride, bool forward) {
  using C = std::complex<Scalar>;
  std::vector<C> in(n), out(n);
  const Eigen::Index block = stride * n;
  for (Eigen::Index base = 0; base < total; base += block) {
    for (Eigen::Index inner = 0; inner < stride; ++inner) {
      C* line = data + base + inner;
      for (Eigen::Index k = 0; k < n; ++k) in[k] = line[k * stride];
      if (forward)
        engine<Scalar>().fwd(out.data(), in.data(), static_cast<int>(n));
      else
        engine<Scalar>().inv(out.data(), in.data(), static_cast<int>(n));
      for (Eigen::Index k = 0; k < n; ++k) line[k * stride] = out[k];
    }
  }
}

template <typename Scalar>
void transform(const Grid<Scalar>& grid, std::complex<Scalar>* data, bool forward) {
  Eigen::Index stride = 1;
  for (int axis = 0; axis < grid.dim(); ++axis) {
    axis_pass<Scalar>(data, grid.total_modes(), grid.n(), stride, forward);
    stride *= grid.n();
  }
  if (!forward) {
    const Scalar norm = Scalar(1) / Scalar(grid.total_modes());
    for (Eigen::Index i = 0; i < grid.total_modes(); ++i) data[i] *= norm;
  }
}

// Forward transform of one real component.
template <typename Scalar>
Eigen::Array<std::complex<Scalar>, Eigen::Dynamic, 1> forward(
    const Grid<Scalar>& grid, const Eigen::Array<Scalar, Eigen::Dynamic, 1>& values) {
  Eigen::Array<std::complex<Scalar>, Eigen::Dynamic, 1> out(grid.total_modes());
  for (Eigen::Index i = 0; i < grid.total_modes(); ++i)
    out[i] = std::complex<Scalar>(values[i], Scalar(0));
  transform(grid, out.data(), /*forward=*/true);
  return out;
}

// Inverse transform to complex samples (callers take the real part when the
// coefficients are conjugate-symmetric).
template <typename Scalar>
Eigen::Array<std::complex<Scalar>, Eigen::Dynamic, 1> inverse(
    const Grid<Scalar>& grid,
    Eigen::Array<std::complex<Scalar>, Eigen::Dynamic, 1> coeffs) {
  transform(grid, coeffs.data(), /*forward=*/false);
  return coeffs;
}

}  // namespace fft
}  // namespace qns
