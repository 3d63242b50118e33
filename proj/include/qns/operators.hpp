#pragma once

#include <Eigen/Dense>
#include <array>
#include <cmath>
#include <complex>
#include <functional>
#include <utility>

#include "qns/field.hpp"

namespace qns {

// ---------------------------------------------------------------------------
// Fourier multipliers
// ---------------------------------------------------------------------------

// Zero-mode handling for multipliers that are singular (or just undefined)
// at xi = 0: either a prescribed value or annihilation of the mode.
template <typename Scalar = double>
struct ZeroMode {
  enum class Kind { Unspecified, Value, Annihilate };
  Kind kind = Kind::Unspecified;
  std::complex<Scalar> value{0, 0};

  static ZeroMode unspecified() { return {}; }
  static ZeroMode annihilate() { return {Kind::Annihilate, {0, 0}}; }
  static ZeroMode with_value(std::complex<Scalar> v) { return {Kind::Value, v}; }
};

// Applies a scalar Fourier multiplier m(xi) to every component.
// The multiplier is evaluated once per mode with the wavevector components.
// The zero-mode policy overrides m(0): Annihilate sets it to 0, Value uses the
// prescribed multiplier value. If m(0) is non-finite and no policy was given,
// throws MultiplierPolicyError.
template <typename Scalar, typename Multiplier>
SpectralField<Scalar> apply_multiplier(const SpectralField<Scalar>& f, Multiplier m,
                                       ZeroMode<Scalar> zero = ZeroMode<Scalar>::unspecified()) {
  const auto& g = f.grid();
  typename SpectralField<Scalar>::Spectral out(g.total_modes(), f.components());
  for (Eigen::Index flat = 0; flat < g.total_modes(); ++flat) {
    std::array<Scalar, 3> xi = {g.xi(flat, 0), g.xi(flat, 1), g.xi(flat, 2)};
    std::complex<Scalar> mv = m(xi);
    if (flat == 0) {
      using K = typename ZeroMode<Scalar>::Kind;
      if (zero.kind == K::Annihilate) {
        mv = std::complex<Scalar>(0, 0);
      } else if (zero.kind == K::Value) {
        mv = zero.value;
      } else if (!std::isfinite(mv.real()) || !std::isfinite(mv.imag())) {
        throw MultiplierPolicyError(
            "multiplier singular at xi = 0 and no zero-mode policy given");
      }
    }
    out.row(flat) = f.coeffs().row(flat) * mv;
  }
  return SpectralField<Scalar>::from_spectral(g, std::move(out));
}

// ---------------------------------------------------------------------------
// Differential operators (exact on the trigonometric interpolant)
// ---------------------------------------------------------------------------

// d^order/dx_axis^order: multiplier (i xi_axis)^order.
template <typename Scalar>
SpectralField<Scalar> derivative(const SpectralField<Scalar>& f, int axis, int order = 1) {
  if (axis < 0 || axis >= f.grid().dim())
    throw DomainError("derivative axis out of range for dim=" +
                      std::to_string(f.grid().dim()));
  return apply_multiplier<Scalar>(f, [axis, order](const std::array<Scalar, 3>& xi) {
    return std::pow(std::complex<Scalar>(0, xi[size_t(axis)]), order);
  });
}

// Gradient. Scalar input -> dim components; C-component input -> C*dim
// components laid out as [d_a f_c] with component index c*dim + a.
template <typename Scalar>
SpectralField<Scalar> gradient(const SpectralField<Scalar>& f) {
  const auto& g = f.grid();
  const int dim = g.dim();
  typename SpectralField<Scalar>::Spectral out(g.total_modes(), f.components() * dim);
  for (Eigen::Index c = 0; c < f.components(); ++c)
    for (int a = 0; a < dim; ++a) {
      for (Eigen::Index flat = 0; flat < g.total_modes(); ++flat)
        out(flat, c * dim + a) =
            std::complex<Scalar>(0, g.xi(flat, a)) * f.coeffs()(flat, c);
    }
  return SpectralField<Scalar>::from_spectral(g, std::move(out));
}

// Divergence of a dim-component vector field.
template <typename Scalar>
SpectralField<Scalar> divergence(const SpectralField<Scalar>& v) {
  const auto& g = v.grid();
  if (v.components() != g.dim())
    throw ShapeError("divergence expects a dim-component vector field, got " +
                     v.shape_string());
  typename SpectralField<Scalar>::Spectral out =
      SpectralField<Scalar>::Spectral::Zero(g.total_modes(), 1);
  for (int a = 0; a < g.dim(); ++a)
    for (Eigen::Index flat = 0; flat < g.total_modes(); ++flat)
      out(flat, 0) += std::complex<Scalar>(0, g.xi(flat, a)) * v.coeffs()(flat, a);
  return SpectralField<Scalar>::from_spectral(g, std::move(out));
}

// Row-wise divergence of a dim*dim matrix field laid out as component i*dim+j:
// (div M)_i = sum_j d_j M_ij.
template <typename Scalar>
SpectralField<Scalar> matrix_divergence(const SpectralField<Scalar>& M) {
  const auto& g = M.grid();
  const int dim = g.dim();
  if (M.components() != dim * dim)
    throw ShapeError("matrix divergence expects dim^2 components, got " +
                     M.shape_string());
  typename SpectralField<Scalar>::Spectral out =
      SpectralField<Scalar>::Spectral::Zero(g.total_modes(), dim);
  for (int i = 0; i < dim; ++i)
    for (int j = 0; j < dim; ++j)
      for (Eigen::Index flat = 0; flat < g.total_modes(); ++flat)
        out(flat, i) += std::complex<Scalar>(0, g.xi(flat, j)) * M.coeffs()(flat, i * dim + j);
  return SpectralField<Scalar>::from_spectral(g, std::move(out));
}

template <typename Scalar>
SpectralField<Scalar> laplacian(const SpectralField<Scalar>& f) {
  const auto& g = f.grid();
  typename SpectralField<Scalar>::Spectral out = f.coeffs();
  for (Eigen::Index flat = 0; flat < g.total_modes(); ++flat)
    out.row(flat) *= -g.xi_squared(flat);
  return SpectralField<Scalar>::from_spectral(g, std::move(out));
}

// grad(div v) for a vector field.
template <typename Scalar>
SpectralField<Scalar> grad_div(const SpectralField<Scalar>& v) {
  return gradient(divergence(v));
}

// ---------------------------------------------------------------------------
// Helmholtz / Leray decomposition
// ---------------------------------------------------------------------------

// Splits v = solenoidal + potential_gradient per mode:
//   potential part  = xi (xi . vhat) / |xi|^2,
//   solenoidal part = the rest.
// The zero mode is assigned entirely to the solenoidal part.
template <typename Scalar>
std::pair<SpectralField<Scalar>, SpectralField<Scalar>> leray_decompose(
    const SpectralField<Scalar>& v) {
  const auto& g = v.grid();
  if (v.components() != g.dim())
    throw ShapeError("Leray decomposition expects a dim-component vector field, got " +
                     v.shape_string());
  typename SpectralField<Scalar>::Spectral pot =
      SpectralField<Scalar>::Spectral::Zero(g.total_modes(), g.dim());
  typename SpectralField<Scalar>::Spectral sol = v.coeffs();
  for (Eigen::Index flat = 1; flat < g.total_modes(); ++flat) {
    const Scalar xi2 = g.xi_squared(flat);
    std::complex<Scalar> proj(0, 0);
    for (int a = 0; a < g.dim(); ++a)
      proj += g.xi(flat, a) * v.coeffs()(flat, a);
    proj /= xi2;
    for (int a = 0; a < g.dim(); ++a) {
      pot(flat, a) = g.xi(flat, a) * proj;
      sol(flat, a) -= pot(flat, a);
    }
  }
  return {SpectralField<Scalar>::from_spectral(g, std::move(sol)),
          SpectralField<Scalar>::from_spectral(g, std::move(pot))};
}

// ---------------------------------------------------------------------------
// Dealiasing and pointwise (pseudo-spectral) algebra
// ---------------------------------------------------------------------------

// 2/3-rule truncation: zero every mode with any |freq_axis| > floor(n/3).
template <typename Scalar>
SpectralField<Scalar> dealias(SpectralField<Scalar> f) {
  const auto& keep = f.grid().dealias_mask();
  for (Eigen::Index flat = 0; flat < f.grid().total_modes(); ++flat)
    if (!keep[flat]) f.coeffs().row(flat).setZero();
  return f;
}

// Builds a field from real-space samples and immediately applies the 2/3-rule;
// the canonical way to return from a pointwise nonlinear evaluation.
template <typename Scalar>
SpectralField<Scalar> from_real_dealiased(
    const Grid<Scalar>& grid, const typename SpectralField<Scalar>::Real& values) {
  return dealias(SpectralField<Scalar>::from_real(grid, values));
}

// Pointwise product of a scalar field with every component of b, dealiased.
template <typename Scalar>
SpectralField<Scalar> multiply(const SpectralField<Scalar>& scalar_field,
                               const SpectralField<Scalar>& b) {
  if (scalar_field.grid() != b.grid())
    throw ShapeError("product grid mismatch: " + scalar_field.shape_string() + " vs " +
                     b.shape_string());
  if (scalar_field.components() != 1)
    throw ShapeError("multiply expects a scalar first factor, got " +
                     scalar_field.shape_string());
  auto sa = scalar_field.to_real();
  auto sb = b.to_real();
  typename SpectralField<Scalar>::Real out(sb.rows(), sb.cols());
  for (Eigen::Index c = 0; c < sb.cols(); ++c) out.col(c) = sa.col(0) * sb.col(c);
  return from_real_dealiased(scalar_field.grid(), out);
}

// Pointwise dot product of two equally-shaped vector fields, dealiased.
template <typename Scalar>
SpectralField<Scalar> dot(const SpectralField<Scalar>& a, const SpectralField<Scalar>& b) {
  a.require_same_shape(b);
  auto ra = a.to_real();
  auto rb = b.to_real();
  typename SpectralField<Scalar>::Real out =
      SpectralField<Scalar>::Real::Zero(ra.rows(), 1);
  for (Eigen::Index c = 0; c < ra.cols(); ++c) out.col(0) += ra.col(c) * rb.col(c);
  return from_real_dealiased(a.grid(), out);
}

// Subtracts the mean (zero mode) of every component.
template <typename Scalar>
SpectralField<Scalar> mean_zero(SpectralField<Scalar> f) {
  f.coeffs().row(0).setZero();
  return f;
}

// ---------------------------------------------------------------------------
// Parseval norms (measure (L/n)^dim; see fft.hpp for transform scaling)
// ---------------------------------------------------------------------------

// ||f||_{L2}^2 over the box, summed over components, computed spectrally:
// (L^dim / N^2) * sum_k |fhat|^2.
template <typename Scalar>
Scalar l2_norm_squared(const SpectralField<Scalar>& f) {
  const auto& g = f.grid();
  const Scalar scale = g.volume() / (Scalar(g.total_modes()) * Scalar(g.total_modes()));
  Scalar sum = 0;
  for (Eigen::Index c = 0; c < f.components(); ++c)
    for (Eigen::Index flat = 0; flat < g.total_modes(); ++flat)
      sum += std::norm(f.coeffs()(flat, c));
  return scale * sum;
}

template <typename Scalar>
Scalar l2_norm(const SpectralField<Scalar>& f) {
  return std::sqrt(l2_norm_squared(f));
}

// L2 inner product <a, b> = sum_c integral a_c b_c dx (real fields).
template <typename Scalar>
Scalar inner_product(const SpectralField<Scalar>& a, const SpectralField<Scalar>& b) {
  a.require_same_shape(b);
  const auto& g = a.grid();
  const Scalar scale = g.volume() / (Scalar(g.total_modes()) * Scalar(g.total_modes()));
  Scalar sum = 0;
  for (Eigen::Index c = 0; c < a.components(); ++c)
    for (Eigen::Index flat = 0; flat < g.total_modes(); ++flat)
      sum += (std::conj(a.coeffs()(flat, c)) * b.coeffs()(flat, c)).real();
  return scale * sum;
}

}  // namespace qns
