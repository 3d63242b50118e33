// Shared helpers for the test executables: relative errors, manufactured
// smooth fields, and node sampling onto coarse difference meshes.
#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <vector>

#include "doctest.h"
#include "qns/field.hpp"
#include "qns/grid.hpp"
#include "qns/norms.hpp"
#include "qns/operators.hpp"
#include "qns/random_fields.hpp"

namespace qnstest {

inline double rel_err(double got, double want) {
  const double scale = std::max(std::abs(want), 1e-300);
  return std::abs(got - want) / scale;
}

// Relative H^k distance between two fields, scaled by the reference.
inline double rel_sobolev_err(const qns::Field& got, const qns::Field& want, int k) {
  const double ref = qns::sobolev_norm(want, k);
  return qns::sobolev_norm(got - want, k) / std::max(ref, 1e-300);
}

// A smooth band-limited scalar or vector field with a deterministic seed;
// sup-norm scaled to `amplitude`.
inline qns::Field smooth_field(const qns::Grid<double>& g, std::uint64_t seed, int components,
                               double amplitude, Eigen::Index band = 3) {
  return qns::random_band_field(g, seed, components, amplitude, band);
}

// Samples a spectral field at the nodes of a coarser conforming mesh with
// n_coarse points per axis (grid n must be a multiple). Node k of the coarse
// axis coincides with node k * (n/n_coarse) of the fine axis, so sampling is
// a stride copy of the collocation values.
inline Eigen::ArrayXXd sample_at_coarse_nodes(const qns::Field& f, Eigen::Index n_coarse) {
  const auto& g = f.grid();
  const Eigen::Index n = g.n();
  REQUIRE(n % n_coarse == 0);
  const Eigen::Index stride = n / n_coarse;
  const Eigen::ArrayXXd fine = f.to_real();

  Eigen::Index coarse_total = 1;
  for (int a = 0; a < g.dim(); ++a) coarse_total *= n_coarse;
  Eigen::ArrayXXd out(coarse_total, f.components());
  std::array<Eigen::Index, 3> idx{0, 0, 0};
  for (Eigen::Index flat = 0; flat < coarse_total; ++flat) {
    Eigen::Index rem = flat;
    for (int a = 0; a < g.dim(); ++a) {
      idx[size_t(a)] = rem % n_coarse;
      rem /= n_coarse;
    }
    Eigen::Index fine_flat = 0;
    for (int a = g.dim() - 1; a >= 0; --a)
      fine_flat = fine_flat * n + idx[size_t(a)] * stride;
    out.row(flat) = fine.row(fine_flat);
  }
  return out;
}

// Max-norm of the row-wise difference between two node-sample arrays.
inline double node_sup_diff(const Eigen::ArrayXXd& a, const Eigen::ArrayXXd& b) {
  REQUIRE(a.rows() == b.rows());
  REQUIRE(a.cols() == b.cols());
  return (a - b).abs().maxCoeff();
}

}  // namespace qnstest
