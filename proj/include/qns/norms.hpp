#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <vector>

#include "qns/operators.hpp"
#include "qns/quadrature.hpp"

namespace qns {

// ---------------------------------------------------------------------------
// Sobolev norms via Plancherel
// ---------------------------------------------------------------------------

// ||grad^j f||_{L2}: homogeneous derivative norm, |xi|^{2j}-weighted sum.
// For multi-component f the squares over components add.
template <typename Scalar>
Scalar homogeneous_norm_squared(const SpectralField<Scalar>& f, int j) {
  if (j < 0) throw DomainError("derivative order must be >= 0");
  const auto& g = f.grid();
  const Scalar scale = g.volume() / (Scalar(g.total_modes()) * Scalar(g.total_modes()));
  Scalar sum = 0;
  for (Eigen::Index flat = 0; flat < g.total_modes(); ++flat) {
    const Scalar w = j == 0 ? Scalar(1) : std::pow(g.xi_squared(flat), Scalar(j));
    Scalar row = 0;
    for (Eigen::Index c = 0; c < f.components(); ++c) row += std::norm(f.coeffs()(flat, c));
    sum += w * row;
  }
  return scale * sum;
}

template <typename Scalar>
Scalar homogeneous_norm(const SpectralField<Scalar>& f, int j) {
  return std::sqrt(homogeneous_norm_squared(f, j));
}

// Inhomogeneous H^k norm: sum over 0 <= j <= k of the squared derivative norms.
// (The binomial-weighted (1+|xi|^2)^k convention is equivalent; the derivative
// sum is what the energy-equivalence constants in energy.hpp are pinned to.)
template <typename Scalar>
Scalar sobolev_norm_squared(const SpectralField<Scalar>& f, int k) {
  if (k < 0) throw DomainError("Sobolev index must be >= 0");
  const auto& g = f.grid();
  const Scalar scale = g.volume() / (Scalar(g.total_modes()) * Scalar(g.total_modes()));
  Scalar sum = 0;
  for (Eigen::Index flat = 0; flat < g.total_modes(); ++flat) {
    const Scalar x2 = g.xi_squared(flat);
    Scalar w = 1, wj = 1;
    for (int j = 1; j <= k; ++j) {
      wj *= x2;
      w += wj;
    }
    Scalar row = 0;
    for (Eigen::Index c = 0; c < f.components(); ++c) row += std::norm(f.coeffs()(flat, c));
    sum += w * row;
  }
  return scale * sum;
}

template <typename Scalar>
Scalar sobolev_norm(const SpectralField<Scalar>& f, int k) {
  return std::sqrt(sobolev_norm_squared(f, k));
}

// Negative-order homogeneous norm on the torus: |xi|^{-2s}-weighted Plancherel
// sum with the zero mode excluded. The field must be mean-zero; the multiplier
// |xi|^{-s} is the standard realization of the negative-order operator (the
// paper's two displays of it disagree in the exponent sign; the norm
// definition ||g||_{H^s} = |||xi|^s g|| is the one implemented).
template <typename Scalar>
Scalar neg_sobolev_norm(const SpectralField<Scalar>& f, Scalar s) {
  if (!(s >= Scalar(0)) || !(s < Scalar(1.5)))
    throw DomainError("negative Sobolev order must satisfy 0 <= s < 3/2; got " +
                      std::to_string(double(s)));
  const auto& g = f.grid();
  Scalar scale = std::sqrt(l2_norm_squared(f));
  for (Eigen::Index c = 0; c < f.components(); ++c)
    if (std::abs(f.zero_mode(c)) >
        Scalar(1e-12) * Scalar(g.total_modes()) * std::max(scale, Scalar(1e-300)))
      throw CompatibilityError("negative-order norm requires a mean-zero field");
  const Scalar measure = g.volume() / (Scalar(g.total_modes()) * Scalar(g.total_modes()));
  Scalar sum = 0;
  for (Eigen::Index flat = 1; flat < g.total_modes(); ++flat) {
    const Scalar w = std::pow(g.xi_squared(flat), -s);
    for (Eigen::Index c = 0; c < f.components(); ++c)
      sum += w * std::norm(f.coeffs()(flat, c));
  }
  return std::sqrt(measure * sum);
}

// ||sigma||_{H^4} + ||u||_{H^3}: the perturbation norm used by the stability
// statements and their acceptance thresholds.
template <typename Scalar>
Scalar norm_43(const SpectralField<Scalar>& sigma, const SpectralField<Scalar>& u) {
  return sobolev_norm(sigma, 4) + sobolev_norm(u, 3);
}

// ---------------------------------------------------------------------------
// Grid (real-space) L^p norms
// ---------------------------------------------------------------------------

// Pointwise Euclidean magnitude across components.
template <typename Scalar>
Eigen::Array<Scalar, Eigen::Dynamic, 1> magnitude(
    const typename SpectralField<Scalar>::Real& values) {
  Eigen::Array<Scalar, Eigen::Dynamic, 1> out =
      Eigen::Array<Scalar, Eigen::Dynamic, 1>::Zero(values.rows());
  for (Eigen::Index c = 0; c < values.cols(); ++c) out += values.col(c).square();
  return out.sqrt();
}

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

// L^p norm by grid quadrature (Riemann product rule); p = infinity -> sup.
template <typename Scalar>
Scalar lp_norm(const SpectralField<Scalar>& f, Scalar p) {
  auto mag = magnitude<Scalar>(f.to_real());
  if (std::isinf(p)) return mag.maxCoeff();
  if (!(p >= Scalar(1))) throw DomainError("L^p norm needs p >= 1");
  const Scalar sum = pairwise_sum(Eigen::Array<Scalar, Eigen::Dynamic, 1>(mag.pow(p)));
  return std::pow(f.grid().cell_volume() * sum, Scalar(1) / p);
}

// ---------------------------------------------------------------------------
// Spatial weights (1 + |x - center|)^nu and weighted norms
// ---------------------------------------------------------------------------

// Weight samples on the grid. |x - center| is the plain Euclidean distance
// inside the box (no periodic wrap): forcing bumps are centered, so the weight
// mimics the whole-space (1+|x|) factor within the box.
template <typename Scalar>
Eigen::Array<Scalar, Eigen::Dynamic, 1> weight_samples(const Grid<Scalar>& g,
                                                       const std::array<Scalar, 3>& center,
                                                       Scalar nu) {
  Eigen::Array<Scalar, Eigen::Dynamic, 1> w(g.total_modes());
  for (Eigen::Index i = 0; i < g.total_modes(); ++i) {
    Scalar r2 = 0;
    for (int a = 0; a < g.dim(); ++a) {
      const Scalar d = g.coord(i, a) - center[size_t(a)];
      r2 += d * d;
    }
    w[i] = std::pow(Scalar(1) + std::sqrt(r2), nu);
  }
  return w;
}

template <typename Scalar>
std::array<Scalar, 3> box_center(const Grid<Scalar>& g) {
  std::array<Scalar, 3> c = {0, 0, 0};
  for (int a = 0; a < g.dim(); ++a) c[size_t(a)] = g.box_length() / Scalar(2);
  return c;
}

template <typename Scalar>
struct WeightedNorms {
  Scalar l2 = 0;
  Scalar linf = 0;
};

// ||(1+|x-c|)^nu f||_{L2} and sup |(1+|x-c|)^nu f| by grid quadrature.
template <typename Scalar>
WeightedNorms<Scalar> weighted_norms(const SpectralField<Scalar>& f,
                                     const std::array<Scalar, 3>& center, Scalar nu) {
  const auto w = weight_samples(f.grid(), center, nu);
  const auto mag = magnitude<Scalar>(f.to_real());
  WeightedNorms<Scalar> out;
  Eigen::Array<Scalar, Eigen::Dynamic, 1> weighted = w * mag;
  out.linf = weighted.maxCoeff();
  out.l2 = std::sqrt(f.grid().cell_volume() * pairwise_sum(weighted.square().eval()));
  return out;
}

// ||(1+|x-c|)^nu f||_{L1}.
template <typename Scalar>
Scalar weighted_l1(const SpectralField<Scalar>& f, const std::array<Scalar, 3>& center,
                   Scalar nu) {
  const auto w = weight_samples(f.grid(), center, nu);
  const auto mag = magnitude<Scalar>(f.to_real());
  return f.grid().cell_volume() * pairwise_sum((w * mag).eval());
}

// ---------------------------------------------------------------------------
// Full derivative tensors grad^o f (all multi-indices, multinomial weights)
// ---------------------------------------------------------------------------

struct MultiIndex {
  std::array<int, 3> alpha{0, 0, 0};
  double coeff = 1;  // multinomial |alpha|! / alpha!
};

inline std::vector<MultiIndex> multi_indices(int dim, int order) {
  std::vector<MultiIndex> out;
  auto factorial = [](int n) {
    double f = 1;
    for (int i = 2; i <= n; ++i) f *= i;
    return f;
  };
  std::array<int, 3> alpha{0, 0, 0};
  std::function<void(int, int)> rec = [&](int axis, int remaining) {
    if (axis == dim - 1) {
      alpha[size_t(axis)] = remaining;
      MultiIndex mi;
      mi.alpha = alpha;
      mi.coeff = factorial(order);
      for (int a = 0; a < dim; ++a) mi.coeff /= factorial(alpha[size_t(a)]);
      out.push_back(mi);
      return;
    }
    for (int k = 0; k <= remaining; ++k) {
      alpha[size_t(axis)] = k;
      rec(axis + 1, remaining - k);
    }
  };
  rec(0, order);
  return out;
}

// Real-space samples of one partial derivative d^alpha applied to every
// component of f (componentwise multiplier (i xi)^alpha).
template <typename Scalar>
typename SpectralField<Scalar>::Real partial_derivative_samples(
    const SpectralField<Scalar>& f, const std::array<int, 3>& alpha) {
  auto d = apply_multiplier<Scalar>(f, [&alpha](const std::array<Scalar, 3>& xi) {
    std::complex<Scalar> m(1, 0);
    for (int a = 0; a < 3; ++a)
      for (int k = 0; k < alpha[size_t(a)]; ++k) m *= std::complex<Scalar>(0, xi[size_t(a)]);
    return m;
  });
  return d.to_real();
}

// Pointwise squared magnitude of the full order-o derivative tensor of f,
// summed over components and multi-indices with multinomial weights:
// |grad^o f|^2(x) = sum_{|alpha|=o} (o!/alpha!) sum_c |d^alpha f_c(x)|^2.
template <typename Scalar>
Eigen::Array<Scalar, Eigen::Dynamic, 1> derivative_tensor_squared(
    const SpectralField<Scalar>& f, int order) {
  Eigen::Array<Scalar, Eigen::Dynamic, 1> acc =
      Eigen::Array<Scalar, Eigen::Dynamic, 1>::Zero(f.grid().total_modes());
  for (const auto& mi : multi_indices(f.grid().dim(), order)) {
    auto samples = partial_derivative_samples(f, mi.alpha);
    for (Eigen::Index c = 0; c < samples.cols(); ++c)
      acc += Scalar(mi.coeff) * samples.col(c).square();
  }
  return acc;
}

// ||(1+|x-c|)^w grad^o f||_{L2} over the full derivative tensor.
template <typename Scalar>
Scalar weighted_tensor_l2(const SpectralField<Scalar>& f, int order,
                          const std::array<Scalar, 3>& center, Scalar w) {
  const auto w2 = weight_samples(f.grid(), center, w).square().eval();
  const auto t2 = order == 0
                      ? Eigen::Array<Scalar, Eigen::Dynamic, 1>(
                            magnitude<Scalar>(f.to_real()).square())
                      : derivative_tensor_squared(f, order);
  return std::sqrt(f.grid().cell_volume() * pairwise_sum((w2 * t2).eval()));
}

// sup over the grid of (1+|x-c|)^w |grad^o f|.
template <typename Scalar>
Scalar weighted_tensor_linf(const SpectralField<Scalar>& f, int order,
                            const std::array<Scalar, 3>& center, Scalar w) {
  const auto ws = weight_samples(f.grid(), center, w);
  const auto t2 = order == 0
                      ? Eigen::Array<Scalar, Eigen::Dynamic, 1>(
                            magnitude<Scalar>(f.to_real()).square())
                      : derivative_tensor_squared(f, order);
  return (ws * t2.sqrt()).maxCoeff();
}

// Fraction of the order-o derivative energy carried by the top octave of kept
// modes; the resolution trust diagnostic for high-order weighted functionals.
template <typename Scalar>
Scalar top_octave_fraction(const SpectralField<Scalar>& f, int order) {
  const auto& g = f.grid();
  const Scalar cutoff = Scalar(2) * Scalar(EIGEN_PI) / g.box_length() *
                        Scalar(g.n() / 3);  // dealias band edge
  const Scalar half = cutoff / Scalar(2);
  Scalar total = 0, top = 0;
  for (Eigen::Index flat = 1; flat < g.total_modes(); ++flat) {
    const Scalar x2 = g.xi_squared(flat);
    Scalar row = 0;
    for (Eigen::Index c = 0; c < f.components(); ++c) row += std::norm(f.coeffs()(flat, c));
    const Scalar e = std::pow(x2, Scalar(order)) * row;
    total += e;
    if (x2 >= half * half) top += e;
  }
  return total > 0 ? top / total : Scalar(0);
}

// ---------------------------------------------------------------------------
// Weighted aggregate functionals of the stationary theory
// ---------------------------------------------------------------------------

template <typename Scalar>
struct WeightedFunctional {
  Scalar value = 0;
  bool resolution_warning = false;  // top spectral octave carries > 1% of the
                                    // highest-order derivative energy
};

// ||sigma||_{I^4} = ||sigma||_{L6}
//   + sum_{nu=1..4} ||(1+|x|)^nu (grad^nu, grad^{nu+1}, grad^{nu+2}) sigma||
//   + ||(1+|x|)^2 sigma||_{Linf} + ||(1+|x|)^2 grad sigma||_{Linf}.
template <typename Scalar>
WeightedFunctional<Scalar> i_norm(const SpectralField<Scalar>& sigma,
                                  const std::array<Scalar, 3>& center) {
  if (sigma.components() != 1)
    throw ShapeError("i_norm expects a scalar field, got " + sigma.shape_string());
  const auto& g = sigma.grid();
  WeightedFunctional<Scalar> out;
  out.value = lp_norm(sigma, Scalar(6));
  std::map<int, Eigen::Array<Scalar, Eigen::Dynamic, 1>> tensor2;
  for (int o = 1; o <= 6; ++o) tensor2[o] = derivative_tensor_squared(sigma, o);
  for (int nu = 1; nu <= 4; ++nu) {
    const auto w2 = weight_samples(g, center, Scalar(nu)).square().eval();
    Scalar stacked = 0;
    for (int o = nu; o <= nu + 2; ++o)
      stacked += g.cell_volume() * pairwise_sum((w2 * tensor2[o]).eval());
    out.value += std::sqrt(stacked);
  }
  const auto w2samples = weight_samples(g, center, Scalar(2));
  out.value += (w2samples * magnitude<Scalar>(sigma.to_real())).maxCoeff();
  out.value += (w2samples * tensor2[1].sqrt()).maxCoeff();
  out.resolution_warning = top_octave_fraction(sigma, 6) > Scalar(0.01);
  return out;
}

// ||u||_{J^5} = ||u||_{L6} + sum_{nu=1..5} ||(1+|x|)^{nu-1} grad^nu u||
//   + sum_{nu=0..1} ||(1+|x|)^{nu+1} grad^nu u||_{Linf}
//   + ||(1+|x|)^2 grad^2 u||_{Linf}.
template <typename Scalar>
WeightedFunctional<Scalar> j_norm(const SpectralField<Scalar>& u,
                                  const std::array<Scalar, 3>& center) {
  const auto& g = u.grid();
  WeightedFunctional<Scalar> out;
  out.value = lp_norm(u, Scalar(6));
  std::map<int, Eigen::Array<Scalar, Eigen::Dynamic, 1>> tensor2;
  for (int o = 1; o <= 5; ++o) tensor2[o] = derivative_tensor_squared(u, o);
  for (int nu = 1; nu <= 5; ++nu) {
    const auto w2 = weight_samples(g, center, Scalar(nu - 1)).square().eval();
    out.value += std::sqrt(g.cell_volume() * pairwise_sum((w2 * tensor2[nu]).eval()));
  }
  const auto w1 = weight_samples(g, center, Scalar(1));
  const auto w2s = weight_samples(g, center, Scalar(2));
  out.value += (w1 * magnitude<Scalar>(u.to_real())).maxCoeff();
  out.value += (w2s * tensor2[1].sqrt()).maxCoeff();
  out.value += (w2s * tensor2[2].sqrt()).maxCoeff();
  out.resolution_warning = top_octave_fraction(u, 5) > Scalar(0.01);
  return out;
}

}  // namespace qns
