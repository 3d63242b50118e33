#pragma once

#include <Eigen/Dense>
#include <complex>
#include <string>
#include <utility>

#include "qns/fft.hpp"
#include "qns/grid.hpp"

namespace qns {

// A scalar / vector / tensor-component field on a periodic grid, stored as
// complex Fourier coefficients (one column per component, one row per mode).
// The real-space view is obtained by inverse transform; fields built from
// real samples are conjugate-symmetric by construction and stay that way
// under the linear operators in operators.hpp.
template <typename Scalar = double>
class SpectralField {
 public:
  using Complex = std::complex<Scalar>;
  using Spectral = Eigen::Array<Complex, Eigen::Dynamic, Eigen::Dynamic>;
  using Real = Eigen::Array<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using Index = Eigen::Index;

  SpectralField() = default;

  // Zero field with the given number of components.
  SpectralField(const Grid<Scalar>& grid, Index components)
      : grid_(grid), coeffs_(Spectral::Zero(grid.total_modes(), components)) {}

  static SpectralField from_spectral(const Grid<Scalar>& grid, Spectral coeffs) {
    if (coeffs.rows() != grid.total_modes())
      throw ShapeError("spectral data rows (" + std::to_string(coeffs.rows()) +
                       ") do not match grid modes (" +
                       std::to_string(grid.total_modes()) + ")");
    SpectralField f;
    f.grid_ = grid;
    f.coeffs_ = std::move(coeffs);
    return f;
  }

  static SpectralField from_real(const Grid<Scalar>& grid, const Real& values) {
    if (values.rows() != grid.total_modes())
      throw ShapeError("real data rows (" + std::to_string(values.rows()) +
                       ") do not match grid points (" +
                       std::to_string(grid.total_modes()) + ")");
    SpectralField f;
    f.grid_ = grid;
    f.coeffs_.resize(values.rows(), values.cols());
    for (Index c = 0; c < values.cols(); ++c)
      f.coeffs_.col(c) = fft::forward<Scalar>(grid, values.col(c));
    return f;
  }

  const Grid<Scalar>& grid() const { return grid_; }
  Index components() const { return coeffs_.cols(); }
  const Spectral& coeffs() const { return coeffs_; }
  Spectral& coeffs() { return coeffs_; }

  Real to_real() const {
    Real out(coeffs_.rows(), coeffs_.cols());
    for (Index c = 0; c < coeffs_.cols(); ++c)
      out.col(c) = fft::inverse<Scalar>(grid_, coeffs_.col(c)).real();
    return out;
  }

  SpectralField component(Index c) const {
    SpectralField f;
    f.grid_ = grid_;
    f.coeffs_ = coeffs_.col(c);
    return f;
  }

  Complex zero_mode(Index c = 0) const { return coeffs_(0, c); }
  // Mean value over the box of component c (real part of the zero mode / N).
  Scalar mean(Index c = 0) const {
    return coeffs_(0, c).real() / Scalar(grid_.total_modes());
  }

  SpectralField& operator+=(const SpectralField& o) {
    require_same_shape(o);
    coeffs_ += o.coeffs_;
    return *this;
  }
  SpectralField& operator-=(const SpectralField& o) {
    require_same_shape(o);
    coeffs_ -= o.coeffs_;
    return *this;
  }
  SpectralField& operator*=(Scalar s) {
    coeffs_ *= s;
    return *this;
  }

  friend SpectralField operator+(SpectralField a, const SpectralField& b) { return a += b; }
  friend SpectralField operator-(SpectralField a, const SpectralField& b) { return a -= b; }
  friend SpectralField operator*(Scalar s, SpectralField f) { return f *= s; }
  friend SpectralField operator*(SpectralField f, Scalar s) { return f *= s; }
  friend SpectralField operator-(SpectralField f) {
    f.coeffs_ = -f.coeffs_;
    return f;
  }

  void require_same_shape(const SpectralField& o) const {
    if (grid_ != o.grid_ || coeffs_.cols() != o.coeffs_.cols())
      throw ShapeError("field shape mismatch: " + shape_string() + " vs " +
                       o.shape_string());
  }

  std::string shape_string() const {
    return "(dim=" + std::to_string(grid_.dim()) + ", n=" + std::to_string(grid_.n()) +
           ", components=" + std::to_string(coeffs_.cols()) + ")";
  }

 private:
  Grid<Scalar> grid_;
  Spectral coeffs_;
};

using Field = SpectralField<double>;

// Largest |imag| of the inverse transform relative to the field scale; a
// conjugate-symmetry diagnostic (should be at roundoff for real-data fields).
template <typename Scalar>
Scalar imaginary_residue(const SpectralField<Scalar>& f) {
  Scalar worst = 0, scale = 0;
  for (Eigen::Index c = 0; c < f.components(); ++c) {
    auto samples = fft::inverse<Scalar>(f.grid(), f.coeffs().col(c));
    for (Eigen::Index i = 0; i < samples.size(); ++i) {
      worst = std::max(worst, std::abs(samples[i].imag()));
      scale = std::max(scale, std::abs(samples[i].real()));
    }
  }
  return scale > 0 ? worst / scale : worst;
}

}  // namespace qns
