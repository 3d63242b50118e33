#pragma once

#include <array>
#include <cmath>
#include <optional>
#include <vector>

#include "qns/model.hpp"
#include "qns/norms.hpp"

namespace qns {

// ---------------------------------------------------------------------------
// Quadratic energy machinery for the perturbation (r, w) = (rho - rho*, u - u*)
//
// Building block ("bracket"):
//   [r, w] = ||r||^2 + <A_hat grad r, grad r> + <A_tilde w, w>,
// with A_hat, A_tilde evaluated at the instantaneous density. Level-nu
// brackets apply this to the full derivative tensors (grad^nu r, grad^nu w).
//
// The two composite functionals are
//   N = sum_{nu=0..3} a_nu [grad^nu r, grad^nu w]
//       + sum_{nu=0..3} b_nu <grad^nu w, grad^{nu+1} r>,
//   E = the same sums restricted to nu = 1..3 (coefficients alpha = a,
//       beta = b), the Lyapunov candidate for the derivative part.
//
// Coefficient rule: a_nu = 2^{-nu}, b_nu = a_nu * min(B0, 1) / 8, where
// [B0, B1] bounds A_hat, A_tilde, and 1 over the density window
// [rho_bar/2, 3 rho_bar/2]. Any rule with b_nu <= a_nu min(B0,1)/4 yields an
// equivalent norm; this one is fixed so tests are deterministic. It implies
// the two-sided equivalence
//   (a3/4) B0 ||(r,w)||_{4,3}^2 <= N <= 2 a0 B1 ||(r,w)||_{4,3}^2.
// ---------------------------------------------------------------------------

struct EnergyCoefficients {
  std::array<double, 4> a{};
  std::array<double, 4> b{};
  double B0 = 0;
  double B1 = 0;

  static EnergyCoefficients standard(const ModelParams& p) {
    EnergyCoefficients c;
    // extrema of A_hat, A_tilde over the window, by dense deterministic scan
    const int scan = 4096;
    double lo = 1.0, hi = 1.0;
    for (int i = 0; i <= scan; ++i) {
      const double s = p.rho_bar / 2 + (double(i) / scan) * p.rho_bar;
      const double ahat = s / p.p_prime(s);
      const double atil = s * s / p.p_prime(s);
      lo = std::min({lo, ahat, atil});
      hi = std::max({hi, ahat, atil});
    }
    c.B0 = lo;
    c.B1 = hi;
    for (int nu = 0; nu < 4; ++nu) {
      c.a[size_t(nu)] = std::pow(2.0, -nu);
      c.b[size_t(nu)] = c.a[size_t(nu)] * std::min(c.B0, 1.0) / 8;
    }
    return c;
  }
};

// Reference dissipation constants of the derivative-level estimates,
// evaluated from their defining minimizations over the density window;
// reported alongside energies for context (not asserted on trajectories).
inline double dissipation_reference_d1(const ModelParams& p) {
  const int scan = 4096;
  double d1 = std::numeric_limits<double>::infinity();
  for (int i = 0; i <= scan; ++i) {
    const double s = p.rho_bar / 2 + (double(i) / scan) * p.rho_bar;
    d1 = std::min(d1, 4 * p.mu * s * s / (5 * p.rho_bar * p.p_prime(s)));
  }
  return d1;
}

inline double dissipation_reference_d2(const ModelParams& p) {
  const int scan = 4096;
  double d2 = std::numeric_limits<double>::infinity();
  for (int i = 0; i <= scan; ++i) {
    const double s = p.rho_bar / 2 + (double(i) / scan) * p.rho_bar;
    d2 = std::min(d2, p.p_prime(s) / s);
  }
  return d2;
}

namespace detail {

// <W grad^nu f, grad^nu f> = integral of W(x) |grad^nu f|^2(x) dx
inline double weighted_tensor_energy(const Field& f, int nu, const RealSamples& w) {
  if (nu == 0) {
    const auto samples = f.to_real();
    RealSamples acc = RealSamples::Zero(f.grid().total_modes());
    for (Eigen::Index c = 0; c < samples.cols(); ++c) acc += samples.col(c).array().square();
    return f.grid().cell_volume() * pairwise_sum((w * acc).eval());
  }
  const auto t2 = derivative_tensor_squared(f, nu);
  return f.grid().cell_volume() * pairwise_sum((w * t2).eval());
}

}  // namespace detail

// <grad^nu w, grad^{nu+1} r> with the full-tensor contraction
// sum_alpha (nu!/alpha!) sum_i <d^alpha w_i, d^alpha d_i r>; constant
// coefficients make it purely spectral:
//   sum_xi |xi|^{2 nu} Re( sum_i conj(w_i-hat) * i xi_i * r-hat ).
inline double energy_cross_term(const Field& r, const Field& w, int nu) {
  if (r.components() != 1) throw ShapeError("cross term expects scalar first argument");
  if (w.components() != r.grid().dim())
    throw ShapeError("cross term expects a velocity-shaped second argument");
  const auto& g = r.grid();
  const double measure = g.volume() / (double(g.total_modes()) * double(g.total_modes()));
  double sum = 0;
  for (Eigen::Index flat = 0; flat < g.total_modes(); ++flat) {
    const double weight = nu == 0 ? 1.0 : std::pow(g.xi_squared(flat), double(nu));
    std::complex<double> inner(0, 0);
    for (int i = 0; i < g.dim(); ++i) {
      const std::complex<double> ixi(0.0, g.xi(flat, i));
      inner += std::conj(w.coeffs()(flat, i)) * ixi * r.coeffs()(flat, 0);
    }
    sum += weight * inner.real();
  }
  return measure * sum;
}

// Level-nu bracket [grad^nu r, grad^nu w] at a given evaluation density.
inline double energy_bracket_level(const Field& r, const Field& w, int nu,
                                   const RealSamples& density, const ModelParams& params) {
  const RealSamples ahat = coefficient_A_hat(density, params);
  const RealSamples atil = coefficient_A_tilde(density, params);
  const RealSamples ones = RealSamples::Ones(r.grid().total_modes());
  return detail::weighted_tensor_energy(r, nu, ones) +
         detail::weighted_tensor_energy(r, nu + 1, ahat) +
         detail::weighted_tensor_energy(w, nu, atil);
}

// [r, w] at level 0. By default coefficients are evaluated at rho_bar + r;
// callers tracking a non-constant background pass the full density.
inline double energy_bracket(const Field& r, const Field& w, const ModelParams& params,
                             const std::optional<RealSamples>& density = std::nullopt) {
  const RealSamples rho = density ? *density
                                  : RealSamples(r.to_real().col(0) + params.rho_bar);
  return energy_bracket_level(r, w, 0, rho, params);
}

inline double energy_N(const Field& r, const Field& w, const ModelParams& params,
                       const std::optional<RealSamples>& density = std::nullopt,
                       const std::optional<EnergyCoefficients>& coeffs = std::nullopt) {
  const RealSamples rho = density ? *density
                                  : RealSamples(r.to_real().col(0) + params.rho_bar);
  const EnergyCoefficients c = coeffs ? *coeffs : EnergyCoefficients::standard(params);
  double total = 0;
  for (int nu = 0; nu <= 3; ++nu) {
    total += c.a[size_t(nu)] * energy_bracket_level(r, w, nu, rho, params);
    total += c.b[size_t(nu)] * energy_cross_term(r, w, nu);
  }
  return total;
}

inline double energy_E(const Field& r, const Field& w, const ModelParams& params,
                       const std::optional<RealSamples>& density = std::nullopt,
                       const std::optional<EnergyCoefficients>& coeffs = std::nullopt) {
  const RealSamples rho = density ? *density
                                  : RealSamples(r.to_real().col(0) + params.rho_bar);
  const EnergyCoefficients c = coeffs ? *coeffs : EnergyCoefficients::standard(params);
  double total = 0;
  for (int nu = 1; nu <= 3; ++nu) {
    total += c.a[size_t(nu)] * energy_bracket_level(r, w, nu, rho, params);
    total += c.b[size_t(nu)] * energy_cross_term(r, w, nu);
  }
  return total;
}

// ---------------------------------------------------------------------------
// Lyapunov-trend feasibility probe
//
// Along a recorded trajectory, tests whether constants C1, C > 0 exist with
//   E(t_{i+1}) - E(t_i) + C1 * int ||grad(r,w)||_{3,2}^2 dt
//                       - C  * int ||grad(r,w)||^2 dt       <= 0  for all i.
// For each candidate C on a log grid (capped at 1e3 so the test cannot be
// satisfied vacuously), the best C1 is min_i (C b_i - dE_i)/a_i; feasibility
// means that minimum is positive.
// ---------------------------------------------------------------------------

struct LyapunovProbe {
  bool feasible = false;
  double C = 0;   // chosen multiplier of the low-order dissipation
  double C1 = 0;  // certified coefficient of the high-order dissipation
};

inline LyapunovProbe lyapunov_probe(const std::vector<double>& delta_E,
                                    const std::vector<double>& diss_high,
                                    const std::vector<double>& diss_low) {
  if (delta_E.size() != diss_high.size() || delta_E.size() != diss_low.size())
    throw ShapeError("lyapunov_probe needs equally long interval series");
  if (delta_E.empty()) throw DomainError("lyapunov_probe needs at least one interval");
  LyapunovProbe best;
  for (double logC = -3; logC <= 3 + 1e-12; logC += 0.125) {
    const double C = std::pow(10.0, logC);
    double c1 = std::numeric_limits<double>::infinity();
    bool ok = true;
    for (std::size_t i = 0; i < delta_E.size(); ++i) {
      if (!(diss_high[i] > 0)) {
        ok = false;
        break;
      }
      c1 = std::min(c1, (C * diss_low[i] - delta_E[i]) / diss_high[i]);
    }
    if (ok && c1 > 0 && (!best.feasible || c1 > best.C1)) {
      best.feasible = true;
      best.C = C;
      best.C1 = c1;
    }
  }
  return best;
}

}  // namespace qns
