#pragma once

#include <cmath>

#include "qns/norms.hpp"
#include "qns/quadrature.hpp"

namespace qns {

// ---------------------------------------------------------------------------
// Gagliardo-Nirenberg interpolation probe (3-D scaling relation)
// ---------------------------------------------------------------------------

template <typename Scalar>
struct GnProbe {
  Scalar lhs = 0;    // ||grad^a f||_{Lp}
  Scalar rhs = 0;    // ||grad^m f||^{1-theta} * ||grad^l f||^theta  (L2 factors)
  Scalar theta = 0;  // interpolation exponent from the scaling identity
  Scalar ratio = 0;  // lhs / rhs = observed constant
};

// theta solves 1/p - a/3 = (1/2 - m/3)(1-theta) + (1/2 - l/3) theta.
template <typename Scalar>
GnProbe<Scalar> gn_probe(const SpectralField<Scalar>& f, int a, int m, int l, Scalar p) {
  if (f.grid().dim() != 3) throw DomainError("the interpolation scaling relation is 3-D");
  const Scalar A = Scalar(1) / p - Scalar(a) / Scalar(3);
  const Scalar B = Scalar(0.5) - Scalar(m) / Scalar(3);
  const Scalar C = Scalar(0.5) - Scalar(l) / Scalar(3);
  if (std::abs(C - B) < Scalar(1e-14))
    throw DomainError("interpolation endpoints coincide; exponent undetermined");
  GnProbe<Scalar> out;
  out.theta = (A - B) / (C - B);
  if (out.theta < -Scalar(1e-12) || out.theta > Scalar(1) + Scalar(1e-12))
    throw DomainError("interpolation exponent " + std::to_string(double(out.theta)) +
                      " falls outside [0,1]");
  if (a > 0) {
    // full derivative tensor magnitude in L^p
    auto t2 = derivative_tensor_squared(f, a);
    if (std::isinf(p)) {
      out.lhs = t2.sqrt().maxCoeff();
    } else {
      out.lhs = std::pow(
          f.grid().cell_volume() * pairwise_sum(t2.pow(p / Scalar(2)).eval()), Scalar(1) / p);
    }
  } else {
    out.lhs = lp_norm(f, p);
  }
  out.rhs = std::pow(homogeneous_norm(f, m), Scalar(1) - out.theta) *
            std::pow(homogeneous_norm(f, l), out.theta);
  out.ratio = out.rhs > 0 ? out.lhs / out.rhs : Scalar(0);
  return out;
}

// ---------------------------------------------------------------------------
// Convolution (Duhamel-tail) inequality probe
// ---------------------------------------------------------------------------

template <typename Scalar>
struct ConvProbe {
  Scalar integral = 0;  // int_0^t (1+t-s)^{-r1} (1+s)^{-r2} ds
  Scalar bound = 0;     // 2^{r2+1}/(r1-1) * (1+t)^{-r2}
};

// Verifies the workhorse tail estimate used to close decay bootstraps:
// for r1 > 1 and 0 <= r2 <= r1 the convolution of the two power tails decays
// no slower than (1+t)^{-r2}, with the explicit constant 2^{r2+1}/(r1-1).
template <typename Scalar>
ConvProbe<Scalar> conv_ineq_probe(Scalar r1, Scalar r2, Scalar t) {
  if (!(r1 > Scalar(1))) throw DomainError("convolution probe needs r1 > 1");
  if (!(r2 >= Scalar(0) && r2 <= r1))
    throw DomainError("convolution probe needs 0 <= r2 <= r1");
  if (!(t >= Scalar(0))) throw DomainError("convolution probe needs t >= 0");
  ConvProbe<Scalar> out;
  out.integral = integrate<Scalar>(
      [r1, r2, t](Scalar s) {
        return std::pow(Scalar(1) + t - s, -r1) * std::pow(Scalar(1) + s, -r2);
      },
      Scalar(0), t, Scalar(1e-12));
  out.bound = std::pow(Scalar(2), r2 + Scalar(1)) / (r1 - Scalar(1)) *
              std::pow(Scalar(1) + t, -r2);
  return out;
}

// ---------------------------------------------------------------------------
// Negative-order Riesz smoothing probe
// ---------------------------------------------------------------------------

// |xi|^{-s} multiplier with the zero mode annihilated (field must be
// mean-zero, else the removed mode would change the function).
template <typename Scalar>
SpectralField<Scalar> riesz_negative(const SpectralField<Scalar>& f, Scalar s) {
  if (!(s > Scalar(0))) throw DomainError("riesz_negative needs s > 0");
  Scalar scale = std::sqrt(l2_norm_squared(f));
  for (Eigen::Index c = 0; c < f.components(); ++c)
    if (std::abs(f.zero_mode(c)) >
        Scalar(1e-12) * Scalar(f.grid().total_modes()) * std::max(scale, Scalar(1e-300)))
      throw CompatibilityError("riesz_negative requires a mean-zero field");
  return apply_multiplier<Scalar>(
      f,
      [s](const std::array<Scalar, 3>& xi) {
        const Scalar r2 = xi[0] * xi[0] + xi[1] * xi[1] + xi[2] * xi[2];
        return std::complex<Scalar>(std::pow(r2, -s / Scalar(2)), 0);
      },
      ZeroMode<Scalar>::annihilate());
}

// Observed constant in ||Lambda^{-s} f||_{Lq} <= C ||f||_{Lp} at the scaling-
// critical pairing 1/q = 1/p - s/3.
template <typename Scalar>
Scalar riesz_constant(const SpectralField<Scalar>& f, Scalar s, Scalar p, Scalar q) {
  const Scalar lhs_pair = Scalar(1) / q;
  const Scalar rhs_pair = Scalar(1) / p - s / Scalar(3);
  if (std::abs(lhs_pair - rhs_pair) > Scalar(1e-12))
    throw DomainError("Riesz probe exponents must satisfy 1/q = 1/p - s/3");
  const Scalar denom = lp_norm(f, p);
  if (!(denom > 0)) throw DomainError("Riesz probe needs a nonzero field");
  return lp_norm(riesz_negative(f, s), q) / denom;
}

// ---------------------------------------------------------------------------
// Derivative / negative-order interpolation identity
// ---------------------------------------------------------------------------

template <typename Scalar>
struct InterpolationCheck {
  Scalar lhs = 0;  // ||grad^l f||
  Scalar rhs = 0;  // ||grad^{l+1} f||^{1-theta} ||f||_{H^{-s}}^theta
  Scalar theta = 0;
};

// ||grad^l f|| <= ||grad^{l+1} f||^{1-theta} ||f||_{H^{-s}}^theta with
// theta = 1/(l+s+1). Holds exactly (Hoelder) on the discrete spectral sums,
// so any violation beyond roundoff flags an implementation bug.
template <typename Scalar>
InterpolationCheck<Scalar> interpolation_check(const SpectralField<Scalar>& f, int l,
                                               Scalar s) {
  InterpolationCheck<Scalar> out;
  out.theta = Scalar(1) / (Scalar(l) + s + Scalar(1));
  out.lhs = homogeneous_norm(f, l);
  out.rhs = std::pow(homogeneous_norm(f, l + 1), Scalar(1) - out.theta) *
            std::pow(neg_sobolev_norm(f, s), out.theta);
  return out;
}

}  // namespace qns
