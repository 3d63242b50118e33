#pragma once

#include <Eigen/Dense>
#include <array>
#include <cmath>
#include <memory>
#include <string>

#include "qns/errors.hpp"

namespace qns {

namespace detail {
inline bool is_power_of_two(Eigen::Index n) { return n > 0 && (n & (n - 1)) == 0; }
}  // namespace detail

// Uniform periodic grid on [0, L)^dim with n points per axis.
//
// Flattening convention (shared by real-space samples and Fourier
// coefficients): flat = i0 + n*(i1 + n*i2), axis 0 fastest.
// Integer frequencies per axis run {0, 1, ..., n/2-1, -n/2, ..., -1};
// the wavevector component is xi_a = (2*pi/L) * freq_a, so |xi_a| <= pi*n/L.
//
// Grids are cheap values: derived tables (wavevectors, |xi|^2, dealias mask)
// are shared between copies.
template <typename Scalar = double>
class Grid {
 public:
  using Index = Eigen::Index;

  Grid() = default;

  Grid(int dim, Index n, Scalar box_length) {
    if (dim < 1 || dim > 3)
      throw DomainError("grid dimension must be 1, 2, or 3; got " + std::to_string(dim));
    if (n < 8 || !detail::is_power_of_two(n))
      throw DomainError("grid points per axis must be a power of two >= 8; got " +
                        std::to_string(n));
    if (!(box_length > Scalar(0)))
      throw DomainError("box length must be positive");
    tables_ = std::make_shared<const Tables>(dim, n, box_length);
  }

  int dim() const { return tables_->dim; }
  Index n() const { return tables_->n; }
  Scalar box_length() const { return tables_->box_length; }
  Scalar spacing() const { return tables_->box_length / Scalar(tables_->n); }
  Index total_modes() const { return tables_->total; }
  // Quadrature weight of one grid cell, (L/n)^dim.
  Scalar cell_volume() const { return tables_->cell_volume; }
  Scalar volume() const { return tables_->volume; }

  bool operator==(const Grid& other) const {
    return tables_ == other.tables_ ||
           (tables_ && other.tables_ && tables_->dim == other.tables_->dim &&
            tables_->n == other.tables_->n &&
            tables_->box_length == other.tables_->box_length);
  }
  bool operator!=(const Grid& other) const { return !(*this == other); }

  // Integer frequency for a single-axis index in [0, n).
  Index freq(Index k) const { return k < tables_->n / 2 ? k : k - tables_->n; }

  void unflatten(Index flat, std::array<Index, 3>& idx) const {
    const Index n = tables_->n;
    idx[0] = flat % n;
    idx[1] = (flat / n) % n;
    idx[2] = tables_->dim > 2 ? flat / (n * n) : 0;
  }

  // Wavevector component along `axis` at flat mode index.
  Scalar xi(Index flat, int axis) const { return tables_->xi[axis][axis_index(flat, axis)]; }
  Scalar xi_squared(Index flat) const { return tables_->xi2[flat]; }
  bool is_zero_mode(Index flat) const { return flat == 0; }
  // True when the mode survives the 2/3-rule (|freq_a| <= floor(n/3) on every axis).
  bool dealias_keep(Index flat) const { return tables_->keep[flat]; }

  // Real-space coordinate along `axis` of a flat sample index.
  Scalar coord(Index flat, int axis) const {
    return Scalar(axis_index(flat, axis)) * spacing();
  }

  const Eigen::Array<Scalar, Eigen::Dynamic, 1>& xi_squared_table() const {
    return tables_->xi2;
  }
  const Eigen::Array<bool, Eigen::Dynamic, 1>& dealias_mask() const { return tables_->keep; }

 private:
  struct Tables {
    int dim;
    Index n;
    Scalar box_length;
    Index total;
    Scalar cell_volume;
    Scalar volume;
    std::array<Eigen::Array<Scalar, Eigen::Dynamic, 1>, 3> xi;  // per axis, indexed 0..n-1
    Eigen::Array<Scalar, Eigen::Dynamic, 1> xi2;                // per flat mode
    Eigen::Array<bool, Eigen::Dynamic, 1> keep;                 // 2/3-rule survivors

    Tables(int d, Index nn, Scalar L) : dim(d), n(nn), box_length(L) {
      total = 1;
      for (int a = 0; a < dim; ++a) total *= n;
      cell_volume = std::pow(L / Scalar(n), Scalar(dim));
      volume = std::pow(L, Scalar(dim));
      const Scalar dk = Scalar(2) * Scalar(EIGEN_PI) / L;
      for (int a = 0; a < 3; ++a) {
        xi[a].resize(n);
        for (Index k = 0; k < n; ++k) {
          const Index f = k < n / 2 ? k : k - n;
          xi[a][k] = a < dim ? dk * Scalar(f) : Scalar(0);
        }
      }
      const Index cutoff = n / 3;  // keep |freq| <= floor(n/3)
      xi2.resize(total);
      keep.resize(total);
      for (Index flat = 0; flat < total; ++flat) {
        Scalar s2 = 0;
        bool k = true;
        Index rem = flat;
        for (int a = 0; a < dim; ++a) {
          const Index ka = rem % n;
          rem /= n;
          const Scalar x = xi[a][ka];
          s2 += x * x;
          const Index f = ka < n / 2 ? ka : ka - n;
          if (f > cutoff || -f > cutoff) k = false;
        }
        xi2[flat] = s2;
        keep[flat] = k;
      }
    }
  };

  Index axis_index(Index flat, int axis) const {
    const Index n = tables_->n;
    switch (axis) {
      case 0: return flat % n;
      case 1: return (flat / n) % n;
      default: return flat / (n * n);
    }
  }

  std::shared_ptr<const Tables> tables_;
};

}  // namespace qns
