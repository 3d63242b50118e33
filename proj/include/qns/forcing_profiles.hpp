#pragma once

#include <array>
#include <cmath>
#include <string>

#include "qns/model.hpp"

namespace qns {

// ---------------------------------------------------------------------------
// Configurable forcing generators
//
// All profiles produce smooth, band-limited fields centered at `center`
// (default: box center). Means are removed: a mass source must integrate to
// zero on the torus for a stationary balance to exist, and a mean body force
// has no stationary response either. The subtracted constants are
// exponentially small for bumps narrow against the box.
// ---------------------------------------------------------------------------

struct ForcingProfile {
  enum class Kind { GaussianBump, DipoleDivergence, CustomTable };

  Kind kind = Kind::GaussianBump;
  double amplitude_g = 0.0;  // mass-source strength
  double amplitude_f = 0.0;  // body-force strength
  double width = 1.0;        // gaussian width w in exp(-|x-c|^2 / (2 w^2))
  std::array<double, 3> center = {std::nan(""), 0, 0};  // NaN -> box center
  int axis = 0;  // bump force direction / dipole derivative axis

  // custom-table samples (used programmatically; ignored by other kinds)
  Field::Real table_g;
  Field::Real table_f;

  static Kind parse_kind(const std::string& s) {
    if (s == "gaussian-bump") return Kind::GaussianBump;
    if (s == "dipole-divergence") return Kind::DipoleDivergence;
    if (s == "custom-table") return Kind::CustomTable;
    throw ConfigError("unknown forcing kind '" + s + "'");
  }
};

namespace detail {

inline Eigen::ArrayXd gaussian_samples(const Grid<double>& g,
                                       const std::array<double, 3>& center, double width) {
  Eigen::ArrayXd phi(g.total_modes());
  for (Eigen::Index i = 0; i < g.total_modes(); ++i) {
    double r2 = 0;
    for (int a = 0; a < g.dim(); ++a) {
      const double d = g.coord(i, a) - center[size_t(a)];
      r2 += d * d;
    }
    phi[i] = std::exp(-r2 / (2 * width * width));
  }
  return phi;
}

}  // namespace detail

inline Forcing make_forcing(const Grid<double>& g, const ForcingProfile& profile) {
  if (!(profile.width > 0)) throw DomainError("forcing width must be positive");
  if (profile.axis < 0 || profile.axis >= g.dim())
    throw DomainError("forcing axis out of range for this grid");
  std::array<double, 3> center = profile.center;
  if (std::isnan(center[0])) center = box_center(g);

  Forcing out;
  const int dim = g.dim();

  switch (profile.kind) {
    case ForcingProfile::Kind::GaussianBump: {
      const auto phi = detail::gaussian_samples(g, center, profile.width);
      if (profile.amplitude_g != 0) {
        Field::Real gs(g.total_modes(), 1);
        gs.col(0) = profile.amplitude_g * phi;
        out.G = mean_zero(from_real_dealiased(g, gs));
      }
      if (profile.amplitude_f != 0) {
        Field::Real fs = Field::Real::Zero(g.total_modes(), dim);
        fs.col(profile.axis) = profile.amplitude_f * phi;
        out.F = mean_zero(from_real_dealiased(g, fs));
      }
      break;
    }
    case ForcingProfile::Kind::DipoleDivergence: {
      Field::Real phi_s(g.total_modes(), 1);
      phi_s.col(0) = detail::gaussian_samples(g, center, profile.width);
      const Field phi = from_real_dealiased(g, phi_s);
      if (profile.amplitude_g != 0)
        out.G = profile.amplitude_g * derivative(phi, profile.axis);
      if (profile.amplitude_f != 0) out.F = profile.amplitude_f * gradient(phi);
      break;
    }
    case ForcingProfile::Kind::CustomTable: {
      if (profile.table_g.size() > 0) {
        if (profile.table_g.rows() != g.total_modes() || profile.table_g.cols() != 1)
          throw ShapeError("custom forcing table for G has wrong shape");
        out.G = from_real_dealiased(g, profile.table_g);
      }
      if (profile.table_f.size() > 0) {
        if (profile.table_f.rows() != g.total_modes() || profile.table_f.cols() != dim)
          throw ShapeError("custom forcing table for F has wrong shape");
        out.F = from_real_dealiased(g, profile.table_f);
      }
      break;
    }
  }
  if (out.F) attach_divergence_split(out);
  out.validate(g);
  return out;
}

}  // namespace qns
