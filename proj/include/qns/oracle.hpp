#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <complex>
#include <limits>
#include <string>
#include <vector>

#include "qns/errors.hpp"
#include "qns/model.hpp"

// ---------------------------------------------------------------------------
// Brute-force references, independent of the spectral solvers.
//
// Two families live here:
//   * a dense second-order finite-difference discretization of the linearized
//     stationary system (periodic, 1D/2D, small grids), solved directly by a
//     rank-revealing QR factorization; and
//   * a 2x2 matrix exponential built from a library eigendecomposition with a
//     Jordan-series fallback.
// Neither shares operator code with the spectral path: derivatives are
// difference matrices instead of Fourier multipliers, the solve is a single
// stacked least-squares problem instead of a Helmholtz split with an inner
// Picard loop, and the exponential never touches the dispersion relation.
// Everything is single-threaded and sized for test use only.
// ---------------------------------------------------------------------------

namespace qns::oracle {

// Upper bound on sigma+velocity unknowns: keeps every assembly dense-friendly.
inline constexpr Eigen::Index kMaxDenseUnknowns = 4096;

// Centered first-derivative matrix on a periodic axis: second order.
inline Eigen::MatrixXd d1_matrix(Eigen::Index n, double h) {
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    d(i, (i + 1) % n) = 1.0 / (2 * h);
    d(i, (i + n - 1) % n) = -1.0 / (2 * h);
  }
  return d;
}

// Centered second-derivative matrix on a periodic axis: second order.
inline Eigen::MatrixXd d2_matrix(Eigen::Index n, double h) {
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    d(i, i) = -2.0 / (h * h);
    d(i, (i + 1) % n) = 1.0 / (h * h);
    d(i, (i + n - 1) % n) = 1.0 / (h * h);
  }
  return d;
}

namespace detail {
// kron(a, b) for dense matrices; row/col index = iA*rowsB + iB.
inline Eigen::MatrixXd kron(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  Eigen::MatrixXd out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}
}  // namespace detail

// Uniform periodic difference mesh on [0, L)^dim, dim in {1, 2}. Nodes are
// flattened as flat = ix + n*iy (axis 0 fastest), matching the sample layout
// of the spectral fields so solutions can be compared point by point.
class FdMesh {
 public:
  FdMesh(int dim, Eigen::Index n, double box_length)
      : dim_(dim), n_(n), box_length_(box_length) {
    if (dim != 1 && dim != 2)
      throw DomainError("dense reference meshes support dim 1 or 2, got " + std::to_string(dim));
    if (n < 4) throw DomainError("dense reference mesh needs n >= 4");
    if (!(box_length > 0)) throw DomainError("dense reference mesh needs box_length > 0");
    if ((dim + 1) * points() > kMaxDenseUnknowns)
      throw DomainError("dense reference system would have " +
                        std::to_string((dim + 1) * points()) + " unknowns (cap " +
                        std::to_string(kMaxDenseUnknowns) + ")");
  }

  int dim() const { return dim_; }
  Eigen::Index n() const { return n_; }
  double box_length() const { return box_length_; }
  double spacing() const { return box_length_ / double(n_); }
  Eigen::Index points() const { return dim_ == 1 ? n_ : n_ * n_; }

  // Coordinate of flat node i along `axis`.
  double coord(Eigen::Index flat, int axis) const {
    const Eigen::Index idx = axis == 0 ? flat % n_ : flat / n_;
    return spacing() * double(idx);
  }

  // First/second derivative along `axis`, promoted to the full mesh.
  Eigen::MatrixXd d1(int axis) const { return promote(d1_matrix(n_, spacing()), axis); }
  Eigen::MatrixXd d2(int axis) const { return promote(d2_matrix(n_, spacing()), axis); }

  Eigen::MatrixXd laplacian() const {
    Eigen::MatrixXd lap = d2(0);
    for (int a = 1; a < dim_; ++a) lap += d2(a);
    return lap;
  }

 private:
  Eigen::MatrixXd promote(const Eigen::MatrixXd& line, int axis) const {
    if (axis < 0 || axis >= dim_) throw DomainError("mesh axis out of range");
    if (dim_ == 1) return line;
    const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(n_, n_);
    return axis == 0 ? detail::kron(eye, line) : detail::kron(line, eye);
  }

  int dim_;
  Eigen::Index n_;
  double box_length_;
};

// Assembled discrete problem. Unknown layout: [sigma; u_0; ...; u_{d-1}; m]
// where m is a single scalar absorbing the divergence-equation mean defect
// (the spectral path projects that mean out of R each sweep; here it becomes
// an explicit unknown so one direct solve suffices). The final dim+1 rows pin
// the node means of sigma and each velocity component to zero, matching the
// spectral solver's zero-mode convention.
struct DenseSystem {
  Eigen::Index dimension = 0;  // sigma + velocity unknowns (excludes m)
  Eigen::MatrixXd matrix;
  Eigen::VectorXd rhs;
};

struct DenseSolution {
  Eigen::ArrayXd sigma;           // node samples, mean pinned to zero
  Eigen::ArrayXXd u;              // node samples, points x dim
  double residual = 0;            // l2 residual of the stacked least-squares solve
  double rhs_norm = 0;
  double condition_estimate = 0;  // |max pivot| / |min pivot| from column-pivoted QR
  double compat_shift = 0;        // constant absorbed by the divergence equation
};

namespace detail {

inline void require_node_samples(const FdMesh& mesh, const Eigen::ArrayXd& scalar,
                                 const Eigen::ArrayXXd& vector, const char* who) {
  if (scalar.size() != mesh.points())
    throw ShapeError(std::string(who) + ": scalar samples do not match the mesh");
  if (vector.rows() != mesh.points() || vector.cols() != mesh.dim())
    throw ShapeError(std::string(who) + ": vector samples do not match the mesh");
  if (!scalar.isFinite().all() || !vector.isFinite().all())
    throw DomainError(std::string(who) + ": non-finite samples");
}

}  // namespace detail

// Discrete form of the frozen-coefficient system
//   div u + (u_tilde/rho_tilde).grad sigma + m = g
//   -mu lap u - (mu+lambda) grad div u + P'(rho_bar) grad sigma
//     - (hbar^2/4) grad lap sigma = f - mean(f)
// with second-order centered differences throughout.
inline DenseSystem assemble_linearized_system(const FdMesh& mesh,
                                              const Eigen::ArrayXd& sigma_tilde,
                                              const Eigen::ArrayXXd& u_tilde,
                                              const Eigen::ArrayXd& g_samples,
                                              const Eigen::ArrayXXd& f_samples,
                                              const ModelParams& params) {
  params.validate();
  detail::require_node_samples(mesh, sigma_tilde, u_tilde, "frozen state");
  detail::require_node_samples(mesh, g_samples, f_samples, "linearized data");

  const Eigen::Index p = mesh.points();
  const int dim = mesh.dim();
  const Eigen::ArrayXd rho_tilde = sigma_tilde + params.rho_bar;
  if ((rho_tilde <= params.rho_bar / 2).any())
    throw DomainError("frozen density leaves the contraction window rho > rho_bar/2");

  DenseSystem sys;
  sys.dimension = (dim + 1) * p;
  const Eigen::Index rows = sys.dimension + (dim + 1);
  sys.matrix = Eigen::MatrixXd::Zero(rows, sys.dimension + 1);
  sys.rhs = Eigen::VectorXd::Zero(rows);

  std::vector<Eigen::MatrixXd> d1(dim);
  for (int a = 0; a < dim; ++a) d1[a] = mesh.d1(a);
  const Eigen::MatrixXd lap = mesh.laplacian();

  // Divergence/transport block (rows 0..p-1).
  for (int a = 0; a < dim; ++a) {
    const Eigen::ArrayXd advect = u_tilde.col(a) / rho_tilde;
    sys.matrix.block(0, 0, p, p) += advect.matrix().asDiagonal() * d1[a];
    sys.matrix.block(0, (1 + a) * p, p, p) = d1[a];
  }
  sys.matrix.block(0, sys.dimension, p, 1).setOnes();
  sys.rhs.segment(0, p) = g_samples.matrix();

  // Momentum blocks (rows (1+i)*p .. ), one per velocity component.
  for (int i = 0; i < dim; ++i) {
    const Eigen::Index r0 = (1 + i) * p;
    sys.matrix.block(r0, 0, p, p) =
        params.p_prime_bar() * d1[i] -
        (params.hbar * params.hbar / 4) * (d1[i] * lap);
    for (int a = 0; a < dim; ++a)
      sys.matrix.block(r0, (1 + a) * p, p, p) -=
          (params.mu + params.lambda) * (d1[i] * d1[a]);
    sys.matrix.block(r0, (1 + i) * p, p, p) -= params.mu * lap;
    sys.rhs.segment(r0, p) = (f_samples.col(i) - f_samples.col(i).mean()).matrix();
  }

  // Mean pins for sigma and each velocity component.
  for (int c = 0; c <= dim; ++c)
    sys.matrix.block(sys.dimension + c, c * p, 1, p).setOnes();

  if (!sys.matrix.allFinite())
    throw DomainError("dense reference assembly produced non-finite entries");
  return sys;
}

// Direct least-squares solve of the assembled system. The residual gate and
// the condition estimate are the solvability contract: a healthy assembly
// solves to round-off because the only incompatible directions (field means
// and the divergence defect) are pinned or absorbed by construction.
inline DenseSolution dense_linearized_solve(const FdMesh& mesh,
                                            const Eigen::ArrayXd& sigma_tilde,
                                            const Eigen::ArrayXXd& u_tilde,
                                            const Eigen::ArrayXd& g_samples,
                                            const Eigen::ArrayXXd& f_samples,
                                            const ModelParams& params) {
  const DenseSystem sys =
      assemble_linearized_system(mesh, sigma_tilde, u_tilde, g_samples, f_samples, params);

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(sys.matrix);
  const Eigen::VectorXd diag = qr.matrixR().diagonal().cwiseAbs();
  const double pivot_max = diag.maxCoeff();
  const double pivot_min = diag.minCoeff();
  DenseSolution out;
  out.condition_estimate = pivot_min > 0 ? pivot_max / pivot_min
                                         : std::numeric_limits<double>::infinity();
  if (!(out.condition_estimate <= 1e12))
    throw ConditioningError("dense reference system is near-singular (pivot ratio " +
                            std::to_string(out.condition_estimate) + " > 1e12)");

  const Eigen::VectorXd x = qr.solve(sys.rhs);
  out.residual = (sys.matrix * x - sys.rhs).norm();
  out.rhs_norm = sys.rhs.norm();
  if (out.residual > 1e-10 * std::max(out.rhs_norm, 1e-300))
    throw ConditioningError("dense reference solve left residual " +
                            std::to_string(out.residual) + " (limit 1e-10 * rhs norm " +
                            std::to_string(out.rhs_norm) + ")");

  const Eigen::Index p = mesh.points();
  out.sigma = x.segment(0, p).array();
  out.u.resize(p, mesh.dim());
  for (int a = 0; a < mesh.dim(); ++a) out.u.col(a) = x.segment((1 + a) * p, p).array();
  out.compat_shift = x(sys.dimension);
  return out;
}

// Full reference path: assemble the linearized data (g, f) from forcing
// samples and the frozen state using the same difference matrices, then
// solve. Mirrors the continuous assembly of the spectral solver --
//   g   = G / rho_tilde
//   f_i = -rho_tilde (u_tilde . grad) u_tilde_i + rho_tilde F_i - u_tilde_i G
//         - (P'(rho_tilde) - P'(rho_bar)) d_i sigma_tilde
//         + (hbar^2/4) [ |grad s|^2 d_i s / rho_tilde^2
//                        - d_i s lap s / rho_tilde
//                        - (hess s . grad s)_i / rho_tilde ]    (s = sigma_tilde)
// -- but every derivative is a difference quotient.
inline DenseSolution dense_stationary_solve(const FdMesh& mesh,
                                            const Eigen::ArrayXd& sigma_tilde,
                                            const Eigen::ArrayXXd& u_tilde,
                                            const Eigen::ArrayXd& g_force,
                                            const Eigen::ArrayXXd& f_force,
                                            const ModelParams& params) {
  params.validate();
  detail::require_node_samples(mesh, sigma_tilde, u_tilde, "frozen state");
  detail::require_node_samples(mesh, g_force, f_force, "forcing samples");

  const Eigen::Index p = mesh.points();
  const int dim = mesh.dim();
  const Eigen::ArrayXd rho_tilde = sigma_tilde + params.rho_bar;
  if ((rho_tilde <= params.rho_bar / 2).any())
    throw DomainError("frozen density leaves the contraction window rho > rho_bar/2");

  std::vector<Eigen::MatrixXd> d1(dim);
  for (int a = 0; a < dim; ++a) d1[a] = mesh.d1(a);
  const Eigen::MatrixXd lap = mesh.laplacian();

  const Eigen::ArrayXd g_samples = g_force / rho_tilde;

  Eigen::ArrayXXd grad_s(p, dim);
  for (int a = 0; a < dim; ++a) grad_s.col(a) = (d1[a] * sigma_tilde.matrix()).array();
  const Eigen::ArrayXd lap_s = (lap * sigma_tilde.matrix()).array();
  Eigen::ArrayXd grad_s2 = Eigen::ArrayXd::Zero(p);
  for (int a = 0; a < dim; ++a) grad_s2 += grad_s.col(a).square();

  const Eigen::ArrayXd dp =
      rho_tilde.unaryExpr([&params](double r) { return params.p_prime(r); }) -
      params.p_prime_bar();
  const double qc = params.hbar * params.hbar / 4;

  Eigen::ArrayXXd f_samples(p, dim);
  for (int i = 0; i < dim; ++i) {
    Eigen::ArrayXd advect = Eigen::ArrayXd::Zero(p);
    for (int a = 0; a < dim; ++a)
      advect += u_tilde.col(a) * (d1[a] * u_tilde.col(i).matrix()).array();

    Eigen::ArrayXd hess_dot = Eigen::ArrayXd::Zero(p);
    for (int a = 0; a < dim; ++a) {
      Eigen::ArrayXd hess_ia;
      if (a == i)
        hess_ia = (mesh.d2(i) * sigma_tilde.matrix()).array();
      else
        hess_ia = (d1[a] * grad_s.col(i).matrix()).array();
      hess_dot += hess_ia * grad_s.col(a);
    }

    f_samples.col(i) = -rho_tilde * advect + f_force.col(i) * rho_tilde -
                       u_tilde.col(i) * g_force - dp * grad_s.col(i) +
                       qc * (grad_s2 * grad_s.col(i) / rho_tilde.square() -
                             grad_s.col(i) * lap_s / rho_tilde - hess_dot / rho_tilde);
  }

  return dense_linearized_solve(mesh, sigma_tilde, u_tilde, g_samples, f_samples, params);
}

// ---------------------------------------------------------------------------
// 2x2 matrix exponential reference
// ---------------------------------------------------------------------------

// exp(block * t) from a library eigendecomposition. When the eigenvalues are
// too close for the eigenvector basis to be trustworthy, falls back to the
// Jordan-style series around the mean eigenvalue: with N = block - mean*I,
// Cayley-Hamilton gives N^2 = delta^2 I (delta = eigenvalue half-gap), so
//   exp(N t) = ch I + sh t N,  ch = sum z^j/(2j)!,  sh = sum z^j/(2j+1)!,
// with z = (delta t)^2; the series is exact (and one term) for defective
// blocks. Only small |delta t| reaches the fallback in practice; it refuses
// arguments it cannot certify.
inline Eigen::Matrix2cd expm_2x2(const Eigen::Matrix2cd& block, double t) {
  if (!(t >= 0)) throw DomainError("matrix exponential reference needs t >= 0");
  if (!block.allFinite()) throw DomainError("matrix exponential reference: non-finite block");
  if (t == 0) return Eigen::Matrix2cd::Identity();

  using C = std::complex<double>;
  const C mean = block.trace() / 2.0;
  const C delta2 = mean * mean - block.determinant();
  const C delta = std::sqrt(delta2);
  const double scale = std::max({std::abs(mean + delta), std::abs(mean - delta), 1e-300});

  if (std::abs(delta) > 1e-8 * scale) {
    Eigen::ComplexEigenSolver<Eigen::Matrix2cd> es(block);
    if (es.info() == Eigen::Success) {
      const Eigen::Matrix2cd v = es.eigenvectors();
      if (std::abs(v.determinant()) > 1e-3) {
        Eigen::Vector2cd ev;
        ev << std::exp(es.eigenvalues()(0) * t), std::exp(es.eigenvalues()(1) * t);
        return v * ev.asDiagonal() * v.inverse();
      }
    }
  }

  const C zt = delta * t;
  if (std::abs(zt) > 50)
    throw DomainError("matrix exponential reference: eigenvalue gap series out of range");
  const C z = zt * zt;
  C ch = 1, sh = 1, term_c = 1, term_s = 1;
  for (int j = 1; j <= 200; ++j) {
    term_c *= z / double((2 * j - 1) * (2 * j));
    term_s *= z / double((2 * j) * (2 * j + 1));
    ch += term_c;
    sh += term_s;
    if (std::abs(term_c) + std::abs(term_s) < 1e-20 * (std::abs(ch) + std::abs(sh))) break;
  }
  const Eigen::Matrix2cd n = block - mean * Eigen::Matrix2cd::Identity();
  return std::exp(mean * t) * (ch * Eigen::Matrix2cd::Identity() + sh * t * n);
}

}  // namespace qns::oracle
