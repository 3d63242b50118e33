// Periodic-grid spectral infrastructure: transforms, multiplier calculus,
// and the Helmholtz splitting.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "common.hpp"

#include <cmath>
#include <complex>

#include "qns/errors.hpp"
#include "qns/fft.hpp"

using namespace qns;
using qnstest::rel_err;

namespace {

// Real samples of an analytic function of node coordinates.
template <typename F>
Field field_of(const Grid<double>& g, int components, F&& fn) {
  Field::Real samples(g.total_modes(), components);
  for (Eigen::Index flat = 0; flat < g.total_modes(); ++flat)
    for (int c = 0; c < components; ++c) samples(flat, c) = fn(flat, c);
  return Field::from_real(g, samples);
}

double l2(const Field& f) { return l2_norm(f); }

}  // namespace

TEST_CASE("grid validates shape and exposes Nyquist-bounded wavevectors") {
  CHECK_THROWS_AS(Grid<double>(0, 16, 1.0), DomainError);
  CHECK_THROWS_AS(Grid<double>(4, 16, 1.0), DomainError);
  CHECK_THROWS_AS(Grid<double>(2, 12, 1.0), DomainError);
  CHECK_THROWS_AS(Grid<double>(2, 4, 1.0), DomainError);
  CHECK_THROWS_AS(Grid<double>(2, 16, 0.0), DomainError);

  const Grid<double> g(3, 16, 5.0);
  double max_component = 0;
  for (Eigen::Index flat = 0; flat < g.total_modes(); ++flat)
    for (int a = 0; a < 3; ++a)
      max_component = std::max(max_component, std::abs(g.xi(flat, a)));
  CHECK(max_component <= M_PI * 16 / 5.0 + 1e-12);
  CHECK(g.xi(0, 0) == 0.0);
  CHECK(g.xi(0, 1) == 0.0);
  CHECK(g.xi(0, 2) == 0.0);
}

TEST_CASE("transform round trip reproduces real data") {
  for (int dim : {1, 2, 3}) {
    const Grid<double> g(dim, 16, 2 * M_PI);
    const Field f = qnstest::smooth_field(g, 11 + std::uint64_t(dim), dim, 1.0, 5);
    const Field back = Field::from_real(g, f.to_real());
    CHECK(qnstest::rel_sobolev_err(back, f, 0) <= 1e-12);
  }
}

TEST_CASE("coefficients of real data are conjugate symmetric") {
  const Grid<double> g(2, 16, 2 * M_PI);
  const Field f = qnstest::smooth_field(g, 3, 1, 1.0, 6);
  std::array<Eigen::Index, 3> idx{0, 0, 0};
  const Eigen::Index n = g.n();
  for (Eigen::Index flat = 0; flat < g.total_modes(); ++flat) {
    g.unflatten(flat, idx);
    const Eigen::Index ix = (n - idx[0]) % n, iy = (n - idx[1]) % n;
    const Eigen::Index mirror = ix + n * iy;
    const std::complex<double> a = f.coeffs()(flat, 0);
    const std::complex<double> b = std::conj(f.coeffs()(mirror, 0));
    CHECK(std::abs(a - b) <= 1e-9 * std::max(1.0, std::abs(a)));
  }
}

TEST_CASE("gradient of a constant vanishes") {
  const Grid<double> g(2, 16, 3.0);
  const Field f = field_of(g, 1, [](Eigen::Index, int) { return 4.25; });
  const Field grad = gradient(f);
  CHECK(l2(grad) <= 1e-12);
}

TEST_CASE("gradient of a single-mode sine matches the analytic derivative") {
  for (int dim : {1, 2, 3}) {
    const double L = 5.0;
    const Grid<double> g(dim, 32, L);
    const double k = 2 * M_PI / L;
    const Field f =
        field_of(g, 1, [&](Eigen::Index flat, int) { return std::sin(k * g.coord(flat, 0)); });
    const Field grad = gradient(f);
    const Field::Real got = grad.to_real();
    for (Eigen::Index flat = 0; flat < g.total_modes(); ++flat) {
      CHECK(std::abs(got(flat, 0) - k * std::cos(k * g.coord(flat, 0))) <= 1e-12 * k);
      for (int a = 1; a < dim; ++a) CHECK(std::abs(got(flat, a)) <= 1e-12 * k);
    }
  }
}

TEST_CASE("gradient of a vector field is its flattened Jacobian") {
  // Column layout: entry (c, a) of the Jacobian lands in column c * dim + a.
  const Grid<double> g(2, 32, 2 * M_PI);
  Field v(g, 2);
  const Field::Real x0 = Field::Real::NullaryExpr(
      g.total_modes(), 2, [&](Eigen::Index flat, Eigen::Index c) {
        return c == 0 ? std::sin(g.coord(flat, 0)) : std::cos(g.coord(flat, 1));
      });
  v = Field::from_real(g, x0);
  const Field jac = gradient(v);
  REQUIRE(jac.components() == 4);
  const Field::Real got = jac.to_real();
  for (Eigen::Index flat = 0; flat < g.total_modes(); ++flat) {
    CHECK(std::abs(got(flat, 0) - std::cos(g.coord(flat, 0))) <= 1e-12);  // d v0 / d x0
    CHECK(std::abs(got(flat, 1)) <= 1e-12);                               // d v0 / d x1
    CHECK(std::abs(got(flat, 2)) <= 1e-12);                               // d v1 / d x0
    CHECK(std::abs(got(flat, 3) + std::sin(g.coord(flat, 1))) <= 1e-12);  // d v1 / d x1
  }
}

TEST_CASE("divergence of a curl-type field vanishes") {
  const Grid<double> g(2, 32, 2 * M_PI);
  const Field psi = qnstest::smooth_field(g, 21, 1, 1.0, 6);
  const Field grad_psi = gradient(psi);
  Field v(g, 2);
  v.coeffs().col(0) = grad_psi.coeffs().col(1);
  v.coeffs().col(1) = -grad_psi.coeffs().col(0);
  CHECK(l2(divergence(v)) <= 1e-12 * std::max(1.0, l2(v)));
}

TEST_CASE("laplacian of a single-mode sine matches the analytic value") {
  const double L = 2 * M_PI;
  const Grid<double> g(1, 64, L);
  const double k = 2 * M_PI / L;
  const Field f =
      field_of(g, 1, [&](Eigen::Index flat, int) { return std::sin(k * g.coord(flat, 0)); });
  const Field lap = laplacian(f);
  const Field::Real got = lap.to_real();
  for (Eigen::Index flat = 0; flat < g.total_modes(); ++flat)
    CHECK(std::abs(got(flat, 0) + k * k * std::sin(k * g.coord(flat, 0))) <= 1e-12 * k * k);
}

TEST_CASE("divergence of gradient equals laplacian") {
  for (int dim : {1, 2, 3}) {
    const Grid<double> g(dim, 16, 3.7);
    const Field f = qnstest::smooth_field(g, 31 + std::uint64_t(dim), 1, 2.0, 5);
    const Field a = divergence(gradient(f));
    const Field b = laplacian(f);
    CHECK(qnstest::rel_sobolev_err(a, b, 0) <= 1e-12);
  }
}

TEST_CASE("pure gradients have no solenoidal part") {
  const Grid<double> g(3, 16, 2 * M_PI);
  Field phi = qnstest::smooth_field(g, 41, 1, 1.0, 5);
  phi.coeffs().row(0).setZero();
  const Field v = gradient(phi);
  const auto [sol, pot] = leray_decompose(v);
  CHECK(l2(sol) <= 1e-12 * std::max(1.0, l2(v)));
  CHECK(qnstest::rel_sobolev_err(pot, v, 0) <= 1e-12);
}

TEST_CASE("divergence-free fields have no potential part") {
  const Grid<double> g(2, 32, 2 * M_PI);
  const Field psi = qnstest::smooth_field(g, 43, 1, 1.0, 6);
  const Field grad_psi = gradient(psi);
  Field v(g, 2);
  v.coeffs().col(0) = grad_psi.coeffs().col(1);
  v.coeffs().col(1) = -grad_psi.coeffs().col(0);
  const auto [sol, pot] = leray_decompose(v);
  CHECK(l2(pot) <= 1e-12 * std::max(1.0, l2(v)));
  CHECK(qnstest::rel_sobolev_err(sol, v, 0) <= 1e-12);
}

TEST_CASE("Helmholtz splitting reassembles and produces a solenoidal part") {
  const Grid<double> g(3, 16, 4.0);
  const Field v = qnstest::smooth_field(g, 47, 3, 1.5, 6);
  const auto [sol, pot] = leray_decompose(v);
  CHECK(qnstest::rel_sobolev_err(sol + pot, v, 0) <= 1e-12);
  CHECK(l2(divergence(sol)) <= 1e-12 * l2(v));
  // The mean flow belongs to the solenoidal part.
  CHECK(std::abs(pot.zero_mode(0)) <= 1e-15);
}

TEST_CASE("Helmholtz splitting is idempotent on the solenoidal part") {
  const Grid<double> g(3, 16, 2 * M_PI);
  const Field v = qnstest::smooth_field(g, 53, 3, 1.0, 5);
  const auto [sol, pot] = leray_decompose(v);
  const auto [sol2, pot2] = leray_decompose(sol);
  CHECK(qnstest::rel_sobolev_err(sol2, sol, 0) <= 1e-12);
  CHECK(l2(pot2) <= 1e-12 * std::max(1.0, l2(sol)));
  (void)pot;
}

TEST_CASE("identity multiplier returns the field unchanged") {
  const Grid<double> g(2, 16, 1.0);
  const Field f = qnstest::smooth_field(g, 61, 1, 1.0, 5);
  const Field out = apply_multiplier(
      f, [](const std::array<double, 3>&) { return std::complex<double>(1, 0); });
  CHECK(qnstest::rel_sobolev_err(out, f, 0) <= 1e-15);
}

TEST_CASE("dispersive smoothing multiplier halves a unit-wavenumber coefficient") {
  // 1/(1 + hbar^2 |xi|^2 / 4) at hbar = 2 and |xi| = 1 equals 1/2.
  const double hbar = 2.0;
  const Grid<double> g(1, 16, 2 * M_PI);  // xi = integer frequencies
  Field f(g, 1);
  f.coeffs()(1, 0) = std::complex<double>(8, 0);  // mode with |xi| = 1
  f.coeffs()(g.n() - 1, 0) = std::complex<double>(8, 0);
  const Field out = apply_multiplier(f, [&](const std::array<double, 3>& xi) {
    const double xi2 = xi[0] * xi[0] + xi[1] * xi[1] + xi[2] * xi[2];
    return std::complex<double>(1.0 / (1.0 + hbar * hbar * xi2 / 4.0), 0);
  });
  CHECK(rel_err(out.coeffs()(1, 0).real(), 4.0) <= 1e-15);
  CHECK(rel_err(out.coeffs()(g.n() - 1, 0).real(), 4.0) <= 1e-15);
}

TEST_CASE("inverse-laplacian multiplier solves the Poisson equation with zero mean") {
  const Grid<double> g(3, 16, 2 * M_PI);
  Field f = qnstest::smooth_field(g, 67, 1, 1.0, 5);
  f.coeffs().row(0).setZero();  // compatible right-hand side
  const Field p = apply_multiplier(
      f,
      [](const std::array<double, 3>& xi) {
        const double xi2 = xi[0] * xi[0] + xi[1] * xi[1] + xi[2] * xi[2];
        return std::complex<double>(-1.0 / xi2, 0);
      },
      ZeroMode<double>::annihilate());
  CHECK(std::abs(p.zero_mode(0)) <= 1e-15);
  CHECK(qnstest::rel_sobolev_err(laplacian(p), f, 0) <= 1e-12);
}

TEST_CASE("singular multiplier without a zero-mode policy is rejected") {
  const Grid<double> g(1, 16, 2 * M_PI);
  const Field f = qnstest::smooth_field(g, 71, 1, 1.0, 4);
  CHECK_THROWS_AS(apply_multiplier(f,
                                   [](const std::array<double, 3>& xi) {
                                     const double xi2 =
                                         xi[0] * xi[0] + xi[1] * xi[1] + xi[2] * xi[2];
                                     return std::complex<double>(1.0 / xi2, 0);
                                   }),
                  MultiplierPolicyError);
}

TEST_CASE("real-space and coefficient-space norms agree") {
  for (int dim : {1, 2, 3}) {
    const Grid<double> g(dim, 16, 3.0);
    const Field f = qnstest::smooth_field(g, 73 + std::uint64_t(dim), 1, 2.0, 5);
    const Field::Real samples = f.to_real();
    double sum = 0;
    for (Eigen::Index i = 0; i < samples.rows(); ++i) sum += samples(i, 0) * samples(i, 0);
    const double real_space = g.cell_volume() * sum;
    CHECK(rel_err(real_space, l2_norm_squared(f)) <= 1e-12);
  }
}

TEST_CASE("multiplier operators commute on band-limited fields") {
  const Grid<double> g(2, 32, 2 * M_PI);
  const Field f = qnstest::smooth_field(g, 79, 1, 1.0, 8);
  const Field a = laplacian(derivative(f, 0, 1));
  const Field b = derivative(laplacian(f), 0, 1);
  CHECK(qnstest::rel_sobolev_err(a, b, 0) <= 1e-12);

  const Field c = divergence(gradient(derivative(f, 1, 2)));
  const Field d = derivative(divergence(gradient(f)), 1, 2);
  CHECK(qnstest::rel_sobolev_err(c, d, 0) <= 1e-12);
}

TEST_CASE("dealiased products of band-limited data keep retained modes exact") {
  // With band |k| <= n/8, the true product lives inside the retained band
  // |k| < n/3, so the dealiased pseudo-spectral product is the exact
  // convolution there.
  const Grid<double> g(1, 64, 2 * M_PI);
  Field a(g, 1), b(g, 1);
  const double N = double(g.total_modes());
  a.coeffs()(2, 0) = N / 2;  // cos(2x)
  a.coeffs()(g.n() - 2, 0) = N / 2;
  b.coeffs()(3, 0) = N / 2;  // cos(3x)
  b.coeffs()(g.n() - 3, 0) = N / 2;
  const Field prod = multiply(a, b);
  // cos(2x)cos(3x) = (cos(5x) + cos(x)) / 2.
  const Field expected = field_of(
      g, 1, [&](Eigen::Index flat, int) {
        const double x = g.coord(flat, 0);
        return 0.5 * (std::cos(5 * x) + std::cos(x));
      });
  CHECK(qnstest::rel_sobolev_err(prod, expected, 0) <= 1e-12);
}
