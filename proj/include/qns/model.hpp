#pragma once

#include <array>
#include <cmath>
#include <optional>
#include <string>

#include "qns/norms.hpp"
#include "qns/operators.hpp"

namespace qns {

// ---------------------------------------------------------------------------
// Parameters of the viscous quantum fluid model
//
//   rho_t + div m = G
//   m_t + div(m (x) m / rho) + grad P(rho)
//       = mu Lap(m/rho) + (mu+lambda) grad div(m/rho)
//         + (hbar^2/2) rho grad( Lap(sqrt rho)/sqrt rho ) + rho F
//
// with the barotropic pressure P(rho) = rho^gamma.
// ---------------------------------------------------------------------------

struct ModelParams {
  double mu = 1.0;       // shear viscosity, > 0
  double lambda = 0.0;   // second viscosity, 3*lambda + 2*mu >= 0
  double hbar = 2.0;     // dispersion constant, > 0
  double gamma = 1.0;    // pressure exponent, >= 1
  double rho_bar = 1.0;  // background density, > 0
  double rho_floor = -1.0;  // positivity guard; < 0 selects the default rho_bar/4

  void validate() const {
    if (!(mu > 0)) throw DomainError("viscosity mu must be positive");
    if (!(3 * lambda + 2 * mu >= 0)) throw DomainError("need 3*lambda + 2*mu >= 0");
    if (!(hbar > 0)) throw DomainError("dispersion constant hbar must be positive");
    if (!(gamma >= 1)) throw DomainError("pressure exponent gamma must be >= 1");
    if (!(rho_bar > 0)) throw DomainError("background density must be positive");
  }

  double floor_value() const { return rho_floor < 0 ? rho_bar / 4 : rho_floor; }

  double pressure(double rho) const { return std::pow(rho, gamma); }
  double p_prime(double rho) const { return gamma * std::pow(rho, gamma - 1); }
  double p_prime_bar() const { return p_prime(rho_bar); }
  double sound_speed() const { return std::sqrt(p_prime_bar()); }
};

using RealSamples = Eigen::ArrayXd;

namespace detail {

inline void require_density_window(const RealSamples& rho, const ModelParams& p,
                                   const char* who) {
  const double lo = rho.minCoeff(), hi = rho.maxCoeff();
  if (lo < p.rho_bar / 2 || hi > 3 * p.rho_bar / 2)
    throw DomainError(std::string(who) + ": density range [" + std::to_string(lo) + ", " +
                      std::to_string(hi) + "] leaves the window [rho_bar/2, 3*rho_bar/2] = [" +
                      std::to_string(p.rho_bar / 2) + ", " + std::to_string(3 * p.rho_bar / 2) +
                      "]");
}

inline void require_floor(const RealSamples& rho, const ModelParams& p, const char* who) {
  const double lo = rho.minCoeff();
  if (lo < p.floor_value())
    throw PositivityError(std::string(who) + ": min density " + std::to_string(lo) +
                          " fell below the floor " + std::to_string(p.floor_value()));
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Enthalpy-type coefficients evaluated pointwise at a density sample array.
// The linearized-energy machinery is only valid on the a-priori density
// window [rho_bar/2, 3*rho_bar/2]; evaluation outside it throws.
// ---------------------------------------------------------------------------

inline RealSamples coefficient_A(const RealSamples& rho, const ModelParams& p) {
  detail::require_density_window(rho, p, "coefficient_A");
  return rho.unaryExpr([&p](double r) { return p.p_prime(r) / r; });
}

inline RealSamples coefficient_A_hat(const RealSamples& rho, const ModelParams& p) {
  detail::require_density_window(rho, p, "coefficient_A_hat");
  return rho.unaryExpr([&p](double r) { return r / p.p_prime(r); });
}

inline RealSamples coefficient_A_tilde(const RealSamples& rho, const ModelParams& p) {
  detail::require_density_window(rho, p, "coefficient_A_tilde");
  return rho.unaryExpr([&p](double r) { return r * r / p.p_prime(r); });
}

// ---------------------------------------------------------------------------
// Bohm quantum force
// ---------------------------------------------------------------------------

enum class BohmPath {
  Expanded,    // (hbar^2/4)[Lap grad rho + |grad rho|^2 grad rho / rho^2
               //            - grad rho Lap rho / rho - (grad^2 rho) grad rho / rho]
  SquareRoot,  // (hbar^2/2) rho grad( Lap sqrt(rho) / sqrt(rho) ), cross-check path
};

// Quantum (Bohm) force of the momentum equation. The expanded identity is the
// production path: it avoids the square root near the positivity floor.
// Quotients are not band-limited, so the result is truncated to the dealias
// band like every other nonlinear product.
inline Field bohm_force(const Field& rho, const ModelParams& params,
                        BohmPath path = BohmPath::Expanded) {
  if (rho.components() != 1)
    throw ShapeError("bohm_force expects a scalar density, got " + rho.shape_string());
  const auto& g = rho.grid();
  const int dim = g.dim();
  const RealSamples rho_r = rho.to_real().col(0);
  detail::require_floor(rho_r, params, "bohm_force");
  const double q = params.hbar * params.hbar;

  if (path == BohmPath::SquareRoot) {
    Field::Real sqrt_r(g.total_modes(), 1);
    sqrt_r.col(0) = rho_r.sqrt();
    const Field sqrt_rho = Field::from_real(g, sqrt_r);
    const RealSamples lap_sqrt = laplacian(sqrt_rho).to_real().col(0);
    Field::Real quot(g.total_modes(), 1);
    quot.col(0) = lap_sqrt / rho_r.sqrt();
    const Field grad_quot = gradient(from_real_dealiased(g, quot));
    Field::Real out(g.total_modes(), dim);
    const auto grad_r = grad_quot.to_real();
    for (int a = 0; a < dim; ++a) out.col(a) = 0.5 * q * rho_r * grad_r.col(a);
    return from_real_dealiased(g, out);
  }

  const Field grad_rho = gradient(rho);
  const RealSamples lap_r = laplacian(rho).to_real().col(0);
  const Field::Real gr = grad_rho.to_real();
  const Field::Real hess = gradient(grad_rho).to_real();  // column i*dim+a = d_a d_i rho
  RealSamples grad_sq = RealSamples::Zero(g.total_modes());
  for (int a = 0; a < dim; ++a) grad_sq += gr.col(a).array().square();

  Field::Real nonlinear(g.total_modes(), dim);
  for (int i = 0; i < dim; ++i) {
    RealSamples hess_dot = RealSamples::Zero(g.total_modes());
    for (int a = 0; a < dim; ++a)
      hess_dot += hess.col(i * dim + a).array() * gr.col(a).array();
    nonlinear.col(i) = grad_sq * gr.col(i).array() / rho_r.square() -
                       gr.col(i).array() * lap_r / rho_r - hess_dot / rho_r;
  }
  Field out = from_real_dealiased(g, nonlinear);
  out += laplacian(grad_rho);  // Lap grad rho, exact in the spectral basis
  return 0.25 * q * out;
}

// ---------------------------------------------------------------------------
// Forcing
// ---------------------------------------------------------------------------

// Mass source G and body force F, optionally with a divergence split
// F = div F1 + F2 (F1 matrix-valued, column i*dim+j = (F1)_{ij}; F2 vector).
struct Forcing {
  std::optional<Field> G;
  std::optional<Field> F;
  std::optional<Field> F1;
  std::optional<Field> F2;

  static Forcing none() { return Forcing{}; }

  void validate(const Grid<double>& g) const {
    if (G && G->components() != 1) throw ShapeError("forcing G must be scalar");
    if (F && F->components() != g.dim()) throw ShapeError("forcing F must have dim components");
    if (F1 || F2) {
      if (!(F1 && F2 && F))
        throw ShapeError("the divergence split needs F, F1, and F2 together");
      if (F1->components() != g.dim() * g.dim() || F2->components() != g.dim())
        throw ShapeError("divergence split has wrong component counts");
      Field recomposed = matrix_divergence(*F1) + *F2;
      const double err = l2_norm(recomposed - *F);
      if (err > 1e-10 * (1 + l2_norm(*F)))
        throw CompatibilityError("F != div F1 + F2; defect " + std::to_string(err));
    }
  }
};

// Canonical divergence split of a body force on the torus: F1 recovers the
// mean-free part through the inverse Laplacian, F2 carries the mean.
//   (F1)_{ij} = d_j Lap^{-1} (F_i - mean F_i),  F2 = mean F.
inline void attach_divergence_split(Forcing& forcing) {
  if (!forcing.F) throw ShapeError("divergence split needs F");
  const Field& F = *forcing.F;
  const auto& g = F.grid();
  const int dim = g.dim();
  Field F1(g, Eigen::Index(dim) * dim);
  Field F2(g, dim);
  for (int i = 0; i < dim; ++i) {
    F2.coeffs()(0, i) = F.coeffs()(0, i);  // mean component
    for (int j = 0; j < dim; ++j) {
      for (Eigen::Index flat = 1; flat < g.total_modes(); ++flat) {
        const std::complex<double> ixi_j(0.0, g.xi(flat, j));
        F1.coeffs()(flat, i * dim + j) = ixi_j / (-g.xi_squared(flat)) * F.coeffs()(flat, i);
      }
    }
  }
  forcing.F1 = std::move(F1);
  forcing.F2 = std::move(F2);
}

// ---------------------------------------------------------------------------
// Dynamic state (density, momentum)
// ---------------------------------------------------------------------------

struct State {
  Field rho;
  Field m;
  double time = 0;

  State(Field rho_, Field m_, double t = 0) : rho(std::move(rho_)), m(std::move(m_)), time(t) {
    if (rho.components() != 1) throw ShapeError("State density must be scalar");
    if (m.components() != rho.grid().dim()) throw ShapeError("State momentum needs dim components");
  }

  static State uniform(const Grid<double>& g, const ModelParams& p) {
    Field rho(g, 1);
    rho.coeffs()(0, 0) = std::complex<double>(p.rho_bar * double(g.total_modes()), 0);
    return State(std::move(rho), Field(g, g.dim()));
  }

  double min_density() const { return rho.to_real().col(0).minCoeff(); }

  void require_positive(const ModelParams& p, const char* who) const {
    detail::require_floor(rho.to_real().col(0), p, who);
  }

  // Velocity u = m / rho, formed pointwise and truncated to the dealias band.
  Field velocity() const {
    const auto& g = rho.grid();
    const RealSamples rho_r = rho.to_real().col(0);
    Field::Real u = m.to_real();
    for (Eigen::Index c = 0; c < u.cols(); ++c) u.col(c) = u.col(c).array() / rho_r;
    return from_real_dealiased(g, u);
  }
};

// ---------------------------------------------------------------------------
// Full nonlinear right-hand side of the model
// ---------------------------------------------------------------------------

struct Rhs {
  Field drho_dt;
  Field dm_dt;
};

inline Rhs nonlinear_rhs(const State& state, const Forcing& forcing,
                         const ModelParams& params) {
  params.validate();
  state.require_positive(params, "nonlinear_rhs");
  const auto& g = state.rho.grid();
  const int dim = g.dim();
  const RealSamples rho_r = state.rho.to_real().col(0);
  const Field::Real m_r = state.m.to_real();

  // mass: rho_t = G - div m
  Field drho = -divergence(state.m);
  if (forcing.G) drho += *forcing.G;

  // velocity and convection tensor m_i m_j / rho
  Field::Real u_r(g.total_modes(), dim);
  for (int a = 0; a < dim; ++a) u_r.col(a) = m_r.col(a).array() / rho_r;
  const Field velocity = from_real_dealiased(g, u_r);

  Field::Real conv(g.total_modes(), Eigen::Index(dim) * dim);
  for (int i = 0; i < dim; ++i)
    for (int j = 0; j < dim; ++j)
      conv.col(i * dim + j) = m_r.col(i).array() * u_r.col(j).array();
  Field dm = -matrix_divergence(from_real_dealiased(g, conv));

  dm += params.mu * laplacian(velocity);
  dm += (params.mu + params.lambda) * grad_div(velocity);

  Field::Real pressure(g.total_modes(), 1);
  pressure.col(0) = rho_r.unaryExpr([&params](double r) { return params.pressure(r); });
  dm -= gradient(from_real_dealiased(g, pressure));

  dm += bohm_force(state.rho, params);

  if (forcing.F) {
    Field::Real body = forcing.F->to_real();
    for (int a = 0; a < dim; ++a) body.col(a) = body.col(a).array() * rho_r;
    dm += from_real_dealiased(g, body);
  }
  return Rhs{std::move(drho), std::move(dm)};
}

// ---------------------------------------------------------------------------
// Exact perturbation nonlinearity Q about a stored state (rho*, m*)
// ---------------------------------------------------------------------------

// The momentum perturbation equation reads
//   M_t - mu Lap M - (mu+lambda) grad div M + P'(rho_bar) grad r
//       - (hbar^2/4) grad Lap r = Q(r, M),
// and Q below is its full defining expression (not the structural bound):
// convection difference, viscous quotient differences, pressure remainders,
// and the quantum remainder. When (rho*, m*) is exactly stationary under its
// own forcing, Q equals the full momentum right-hand side minus the linear
// part; that identity is the cross-check in the tests.
inline Field compute_Q(const Field& r, const Field& M, const Field& rho_star,
                       const Field& m_star, const Forcing& forcing,
                       const ModelParams& params) {
  const auto& g = r.grid();
  const int dim = g.dim();
  if (r.components() != 1 || rho_star.components() != 1)
    throw ShapeError("compute_Q densities must be scalar");
  if (M.components() != dim || m_star.components() != dim)
    throw ShapeError("compute_Q momenta need dim components");

  const RealSamples r_r = r.to_real().col(0);
  const RealSamples rs_r = rho_star.to_real().col(0);
  const RealSamples rho_r = r_r + rs_r;  // full density
  detail::require_floor(rho_r, params, "compute_Q");
  detail::require_floor(rs_r, params, "compute_Q (stored state)");

  const Field::Real M_r = M.to_real();
  const Field::Real ms_r = m_star.to_real();

  Field Q(g, dim);

  // F * r  (body force times density perturbation)
  if (forcing.F) {
    Field::Real fr = forcing.F->to_real();
    for (int a = 0; a < dim; ++a) fr.col(a) = fr.col(a).array() * r_r;
    Q += from_real_dealiased(g, fr);
  }

  // - div( (M+m*) (x) (M+m*) / (r+rho*) - m* (x) m* / rho* )
  Field::Real conv(g.total_modes(), Eigen::Index(dim) * dim);
  for (int i = 0; i < dim; ++i)
    for (int j = 0; j < dim; ++j) {
      const RealSamples mi = M_r.col(i).array() + ms_r.col(i).array();
      const RealSamples mj = M_r.col(j).array() + ms_r.col(j).array();
      conv.col(i * dim + j) = mi * mj / rho_r -
                              ms_r.col(i).array() * ms_r.col(j).array() / rs_r;
    }
  Q -= matrix_divergence(from_real_dealiased(g, conv));

  // viscous quotient differences
  Field::Real visc1(g.total_modes(), dim);  // M - M/(r+rho*)
  Field::Real visc2(g.total_modes(), dim);  // m*/rho* - m*/(r+rho*)
  for (int a = 0; a < dim; ++a) {
    visc1.col(a) = M_r.col(a).array() - M_r.col(a).array() / rho_r;
    visc2.col(a) = ms_r.col(a).array() / rs_r - ms_r.col(a).array() / rho_r;
  }
  const Field v1 = from_real_dealiased(g, visc1);
  const Field v2 = from_real_dealiased(g, visc2);
  Q -= params.mu * (laplacian(v1) + laplacian(v2));
  Q -= (params.mu + params.lambda) * (grad_div(v1) + grad_div(v2));

  // pressure remainders: -(P'(rho)-P'(rho_bar)) grad r - (P'(rho)-P'(rho*)) grad rho*
  const Field grad_r_f = gradient(r);
  const Field grad_rs_f = gradient(rho_star);
  const Field::Real gr = grad_r_f.to_real();
  const Field::Real grs = grad_rs_f.to_real();
  const RealSamples pp = rho_r.unaryExpr([&params](double x) { return params.p_prime(x); });
  const RealSamples pps = rs_r.unaryExpr([&params](double x) { return params.p_prime(x); });
  const double ppbar = params.p_prime_bar();
  Field::Real press(g.total_modes(), dim);
  for (int a = 0; a < dim; ++a)
    press.col(a) = -(pp - ppbar) * gr.col(a).array() - (pp - pps) * grs.col(a).array();
  Q += from_real_dealiased(g, press);

  // quantum remainder: + (hbar^2/4) [ (|grad rho|^2/rho^2 - |grad rho*|^2/rho*^2) grad rho*
  //   + (|grad rho|^2/rho^2) grad r
  //   - (grad rho/rho - grad rho*/rho*) Lap rho* - (grad rho/rho) Lap r
  //   - (grad rho/rho - grad rho*/rho*) . grad^2 rho* - (grad rho/rho) . grad^2 r ]
  const RealSamples lap_r = laplacian(r).to_real().col(0);
  const RealSamples lap_rs = laplacian(rho_star).to_real().col(0);
  const Field::Real hess_r = gradient(grad_r_f).to_real();     // col i*dim+a = d_a d_i r
  const Field::Real hess_rs = gradient(grad_rs_f).to_real();
  Field::Real grho(g.total_modes(), dim);
  for (int a = 0; a < dim; ++a) grho.col(a) = gr.col(a) + grs.col(a);
  RealSamples gsq = RealSamples::Zero(g.total_modes());
  RealSamples gsq_s = RealSamples::Zero(g.total_modes());
  for (int a = 0; a < dim; ++a) {
    gsq += grho.col(a).array().square();
    gsq_s += grs.col(a).array().square();
  }
  const RealSamples wfull = gsq / rho_r.square();
  const RealSamples wstar = gsq_s / rs_r.square();
  Field::Real quantum(g.total_modes(), dim);
  for (int i = 0; i < dim; ++i) {
    RealSamples dot_rs = RealSamples::Zero(g.total_modes());  // (grad rho/rho - ...) . hess rho*
    RealSamples dot_r = RealSamples::Zero(g.total_modes());   // (grad rho/rho) . hess r
    for (int a = 0; a < dim; ++a) {
      const RealSamples diff = grho.col(a).array() / rho_r - grs.col(a).array() / rs_r;
      dot_rs += diff * hess_rs.col(i * dim + a).array();
      dot_r += (grho.col(a).array() / rho_r) * hess_r.col(i * dim + a).array();
    }
    quantum.col(i) = (wfull - wstar) * grs.col(i).array() + wfull * gr.col(i).array() -
                     (grho.col(i).array() / rho_r - grs.col(i).array() / rs_r) * lap_rs -
                     (grho.col(i).array() / rho_r) * lap_r - dot_rs - dot_r;
  }
  Q += (params.hbar * params.hbar / 4) * from_real_dealiased(g, quantum);
  return Q;
}

}  // namespace qns
