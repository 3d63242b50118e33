#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <random>

#include "qns/field.hpp"
#include "qns/grid.hpp"

// ---------------------------------------------------------------------------
// Seeded band-limited random fields.
//
// Used by the property-check suite and the randomized test sweeps, so the
// construction must be bitwise deterministic for a fixed seed on any
// platform: modes are visited in flat order, and uniform doubles are built
// directly from mt19937_64 output bits (the standard distribution adaptors
// are implementation-defined and would break cross-platform determinism).
// Coefficients fill |freq| <= band with a Gaussian spectral envelope, the
// zero mode is dropped (mean-zero fields), realness is enforced by an
// inverse/forward transform round trip, and the result is scaled to the
// requested sup-norm amplitude.
// ---------------------------------------------------------------------------

namespace qns {

inline Field random_band_field(const Grid<double>& g, std::uint64_t seed, int components,
                               double amplitude = 1.0, Eigen::Index band = 0) {
  if (band <= 0) band = std::max<Eigen::Index>(2, g.n() / 4);
  std::mt19937_64 rng(seed);
  const auto unit = [&rng]() { return 2.0 * (double(rng() >> 11) * 0x1.0p-53) - 1.0; };

  Field::Spectral coeffs = Field::Spectral::Zero(g.total_modes(), components);
  std::array<Eigen::Index, 3> idx{};
  for (Eigen::Index flat = 0; flat < g.total_modes(); ++flat) {
    if (g.is_zero_mode(flat)) continue;
    g.unflatten(flat, idx);
    double k2 = 0;
    bool inside = true;
    for (int a = 0; a < g.dim(); ++a) {
      const double f = double(g.freq(idx[size_t(a)]));
      if (std::abs(f) > double(band)) inside = false;
      k2 += f * f;
    }
    if (!inside) continue;
    const double envelope = std::exp(-2.0 * k2 / double(band * band));
    for (int c = 0; c < components; ++c)
      coeffs(flat, c) = std::complex<double>(unit(), unit()) * envelope;
  }

  // Round trip through real samples to enforce conjugate symmetry exactly.
  const Field::Real samples = Field::from_spectral(g, coeffs).to_real();
  const double peak = samples.abs().maxCoeff();
  if (peak == 0) return Field::from_real(g, samples);
  return Field::from_real(g, Field::Real(samples * (amplitude / peak)));
}

}  // namespace qns
