#pragma once

#include <functional>
#include <optional>
#include <utility>
#include <vector>

#include "qns/model.hpp"
#include "qns/norms.hpp"
#include "qns/operators.hpp"

namespace qns {

// ---------------------------------------------------------------------------
// Stationary solutions by contraction mapping
//
// The iteration system, given a frozen pair (st, ut) ("tilde" state):
//   div u + (ut / rt) . grad s = g,
//   -(mu Lap u + (mu+lambda) grad div u) + P'(rho_bar) grad s
//        - (hbar^2/4) grad Lap s = f,
// with rt = rho_bar + st and the data assembled from the physical forcing:
//   g = G / rt,
//   f = -rt ut.grad ut + rt F - ut G - (P'(rt) - P'(rho_bar)) grad st
//       + (hbar^2/4) ( |grad st|^2 grad st / rt^2 - grad st Lap st / rt
//                      - grad st . (grad^2 st) / rt ).
// (The quantum remainder enters with a plus sign: expanding the quantum
// force of the momentum equation with the log-Hessian identity and moving
// only its linear part to the left-hand side leaves + (hbar^2/4)(...) on the
// right. With a minus sign the fixed point would not solve the stationary
// problem, which is the criterion used here.)
//
// Per Fourier mode the solve is exact:
//   omega-hat = (I - xi xi^T/|xi|^2) f-hat / (mu |xi|^2)     (solenoidal part)
//   Psi-hat   = -(i xi . f-hat) / |xi|^2
//   inner Picard on the transport coupling:
//     R = -(ut / rt) . grad s^k + g,  mean projected out (compatibility defect)
//     s^{k+1}-hat = (Psi-hat + (2mu+lambda) R-hat) / (P'(rho_bar) + hbar^2|xi|^2/4)
//   p-hat = -R-hat / |xi|^2,  u = omega + grad p.
// ---------------------------------------------------------------------------

struct StationaryOptions {
  double inner_tol = 1e-10;   // relative to the first inner iterate, H2 metric
  double outer_tol = 1e-10;   // relative to the first outer difference, H2 metric
  double residual_target = 0; // absolute L2 residual of the stationary problem
                              // at which the outer loop may stop early (0 = off)
  int max_inner = 200;
  int max_outer = 100;
  double compat_tol = 1e-2;   // |mean R| / ||R|| (and same for f) above which
                              // the data is declared incompatible with the torus
  double epsilon_threshold = 0.1;  // smallness gate for hypothesis_report
  std::array<double, 3> weight_center = {std::nan(""), 0, 0};  // NaN -> box center
};

struct LinearizedSolve {
  Field sigma;
  Field u;
  int inner_iterations = 0;
  double compat_defect_R = 0;  // |mean R| / max(||R||, eps)
  double compat_defect_f = 0;  // |mean f| / max(||f||, eps)
};

struct OuterIterationRecord {
  int iteration = 0;
  double diff_h2 = 0;          // ||s^{n+1}-s^n||_{H2} + ||u^{n+1}-u^n||_{H2}
  double ratio = 0;            // diff_n / diff_{n-1} (0 on the first)
  double residual_continuity = 0;
  double residual_momentum = 0;
  double sigma_h2 = 0;
  double u_h2 = 0;
  double compat_defect_R = 0;
  double compat_defect_f = 0;
  int inner_iterations = 0;
};

using IterationSink = std::function<void(const OuterIterationRecord&)>;

struct HypothesisReport {
  double K0 = 0;
  double K = 0;
  double L1_weighted_G = 0;   // ||(1+|x-c|)^{-1} G||_{L1}
  double epsilon_estimate = 0;  // K + L1_weighted_G
  bool small = false;         // epsilon_estimate <= threshold
  bool complete = true;       // false if K addends had to be omitted (no F1/F2)
};

struct NormReport {
  double I4 = 0;
  double J5 = 0;
  bool I4_resolution_warning = false;
  bool J5_resolution_warning = false;
  double V1_weighted_linf = 0;  // ||(1+|x-c|)^3 V1||_Linf, V1 = -(u/rho) sigma
  double V2_weighted_l1 = 0;    // ||(1+|x-c|)^{-1} V2||_L1,
                                // V2 = div(u/rho) sigma + G/rho
  HypothesisReport hypothesis;
};

struct StationarySolution {
  Field sigma_star;
  Field u_star;
  int iterations = 0;
  std::vector<double> contraction_ratios;
  double residual_continuity = 0;
  double residual_momentum = 0;
  NormReport norm_report;
};

namespace detail {

inline std::array<double, 3> resolve_center(const Grid<double>& g,
                                            const std::array<double, 3>& c) {
  return std::isnan(c[0]) ? box_center(g) : c;
}

// -(rho_bar + st) ut.grad ut + (rho_bar + st) F - ut G
//   - (P'(rho_bar+st) - P'(rho_bar)) grad st + (hbar^2/4)(quantum remainder)
inline Field assemble_momentum_data(const Field& sigma_tilde, const Field& u_tilde,
                                    const Forcing& forcing, const ModelParams& params) {
  const auto& g = sigma_tilde.grid();
  const int dim = g.dim();
  const RealSamples st = sigma_tilde.to_real().col(0);
  const RealSamples rt = st + params.rho_bar;
  const Field::Real ut = u_tilde.to_real();

  // convection: rt * (ut . grad) ut
  const Field grad_u = gradient(u_tilde);  // column i*dim+a = d_a u_i
  const Field::Real gu = grad_u.to_real();
  Field::Real data(g.total_modes(), dim);
  for (int i = 0; i < dim; ++i) {
    RealSamples adv = RealSamples::Zero(g.total_modes());
    for (int a = 0; a < dim; ++a) adv += ut.col(a).array() * gu.col(i * dim + a).array();
    data.col(i) = -rt * adv;
  }

  if (forcing.F) {
    const Field::Real F = forcing.F->to_real();
    for (int i = 0; i < dim; ++i) data.col(i) += rt * F.col(i).array();
  }
  if (forcing.G) {
    const RealSamples G = forcing.G->to_real().col(0);
    for (int i = 0; i < dim; ++i) data.col(i) -= ut.col(i).array() * G;
  }

  const Field grad_s = gradient(sigma_tilde);
  const Field::Real gs = grad_s.to_real();
  const RealSamples dp =
      rt.unaryExpr([&params](double r) { return params.p_prime(r); }) - params.p_prime_bar();
  for (int i = 0; i < dim; ++i) data.col(i) -= dp * gs.col(i).array();

  // quantum remainder
  const RealSamples lap_s = laplacian(sigma_tilde).to_real().col(0);
  const Field::Real hess = gradient(grad_s).to_real();
  RealSamples gs2 = RealSamples::Zero(g.total_modes());
  for (int a = 0; a < dim; ++a) gs2 += gs.col(a).array().square();
  const double qc = params.hbar * params.hbar / 4;
  for (int i = 0; i < dim; ++i) {
    RealSamples hdot = RealSamples::Zero(g.total_modes());
    for (int a = 0; a < dim; ++a) hdot += gs.col(a).array() * hess.col(i * dim + a).array();
    data.col(i) += qc * (gs2 * gs.col(i).array() / rt.square() -
                         gs.col(i).array() * lap_s / rt - hdot / rt);
  }
  return from_real_dealiased(g, data);
}

}  // namespace detail

// Exact per-mode solve of the linearized system for explicitly given data
// (g, f). The inner Picard loop resolves the transport coupling through sigma.
inline LinearizedSolve solve_linearized_system(const Field& sigma_tilde, const Field& u_tilde,
                                               const Field& g_data, const Field& f_data,
                                               const ModelParams& params,
                                               const StationaryOptions& opts = {}) {
  params.validate();
  const auto& g = sigma_tilde.grid();
  const int dim = g.dim();
  if (sigma_tilde.components() != 1 || g_data.components() != 1)
    throw ShapeError("solve_linearized_system: sigma_tilde and g must be scalar");
  if (u_tilde.components() != dim || f_data.components() != dim)
    throw ShapeError("solve_linearized_system: u_tilde and f need dim components");

  const RealSamples st = sigma_tilde.to_real().col(0);
  if (st.abs().maxCoeff() >= params.rho_bar / 2)
    throw DomainError("solve_linearized_system: ||sigma_tilde||_Linf = " +
                      std::to_string(st.abs().maxCoeff()) + " >= rho_bar/2");
  const RealSamples rt = st + params.rho_bar;

  // momentum data: project out the zero mode (torus solvability), record defect
  Field f = f_data;
  double f_mean_sq = 0;
  for (int i = 0; i < dim; ++i) {
    f_mean_sq += std::norm(f.coeffs()(0, i) / double(g.total_modes()));
    f.coeffs()(0, i) = 0;
  }
  const double f_norm = l2_norm(f);
  LinearizedSolve out{Field(g, 1), Field(g, dim)};
  out.compat_defect_f =
      std::sqrt(f_mean_sq * g.volume()) / std::max(f_norm, 1e-300);

  // solenoidal part: omega-hat = (I - xi xi^T/|xi|^2) f-hat / (mu |xi|^2)
  Field omega(g, dim);
  Field psi(g, 1);
  for (Eigen::Index flat = 1; flat < g.total_modes(); ++flat) {
    const double xi2 = g.xi_squared(flat);
    std::complex<double> xi_dot_f(0, 0);
    for (int a = 0; a < dim; ++a)
      xi_dot_f += g.xi(flat, a) * f.coeffs()(flat, a);
    for (int i = 0; i < dim; ++i)
      omega.coeffs()(flat, i) =
          (f.coeffs()(flat, i) - g.xi(flat, i) * xi_dot_f / xi2) / (params.mu * xi2);
    psi.coeffs()(flat, 0) = -std::complex<double>(0, 1) * xi_dot_f / xi2;
  }

  // precompute transport velocity ut / rt
  Field::Real transport = u_tilde.to_real();
  for (int a = 0; a < dim; ++a) transport.col(a) = transport.col(a).array() / rt;
  const Field transport_field = from_real_dealiased(g, transport);

  const double two_mu_lambda = 2 * params.mu + params.lambda;
  const double ppbar = params.p_prime_bar();
  const double h24 = params.hbar * params.hbar / 4;

  Field sigma = sigma_tilde;  // warm start for the Picard loop
  Field R(g, 1);
  double scale = -1, last_diff = 0;
  int k = 0;
  for (; k < opts.max_inner; ++k) {
    R = g_data - dot(transport_field, gradient(sigma));
    const double r_norm = l2_norm(R);
    out.compat_defect_R = std::abs(R.coeffs()(0, 0) / double(g.total_modes())) *
                          std::sqrt(g.volume()) / std::max(r_norm, 1e-300);
    R.coeffs()(0, 0) = 0;

    Field next(g, 1);
    for (Eigen::Index flat = 1; flat < g.total_modes(); ++flat)
      next.coeffs()(flat, 0) =
          (psi.coeffs()(flat, 0) + two_mu_lambda * R.coeffs()(flat, 0)) /
          (ppbar + h24 * g.xi_squared(flat));

    const double diff = sobolev_norm(next - sigma, 2);
    sigma = std::move(next);
    if (scale < 0) scale = std::max(sobolev_norm(sigma, 2), 1e-300);
    if (diff <= opts.inner_tol * scale) {
      ++k;
      break;
    }
    last_diff = diff;
  }
  if (k >= opts.max_inner)
    throw ConvergenceError("inner transport iteration did not converge",
                           last_diff / std::max(scale, 1e-300));

  // final transport data with the converged sigma, then velocity assembly
  R = g_data - dot(transport_field, gradient(sigma));
  out.compat_defect_R = std::abs(R.coeffs()(0, 0) / double(g.total_modes())) *
                        std::sqrt(g.volume()) / std::max(l2_norm(R), 1e-300);
  R.coeffs()(0, 0) = 0;
  Field u = omega;
  for (Eigen::Index flat = 1; flat < g.total_modes(); ++flat) {
    const std::complex<double> p_hat = -R.coeffs()(flat, 0) / g.xi_squared(flat);
    for (int i = 0; i < dim; ++i)
      u.coeffs()(flat, i) += std::complex<double>(0, g.xi(flat, i)) * p_hat;
  }

  if (out.compat_defect_R > opts.compat_tol || out.compat_defect_f > opts.compat_tol)
    throw CompatibilityError(
        "forcing incompatible with the torus: relative mean defects R=" +
        std::to_string(out.compat_defect_R) + ", f=" + std::to_string(out.compat_defect_f));

  out.sigma = std::move(sigma);
  out.u = std::move(u);
  out.inner_iterations = k;
  return out;
}

// Assembles (g, f) from the physical forcing around the frozen tilde state
// and calls the per-mode solver.
inline LinearizedSolve solve_linearized(const Field& sigma_tilde, const Field& u_tilde,
                                        const Forcing& forcing, const ModelParams& params,
                                        const StationaryOptions& opts = {}) {
  const auto& g = sigma_tilde.grid();
  Field g_data(g, 1);
  if (forcing.G) {
    const RealSamples st = sigma_tilde.to_real().col(0);
    Field::Real gs(g.total_modes(), 1);
    gs.col(0) = forcing.G->to_real().col(0).array() / (st + params.rho_bar);
    g_data = from_real_dealiased(g, gs);
  }
  const Field f_data = detail::assemble_momentum_data(sigma_tilde, u_tilde, forcing, params);
  return solve_linearized_system(sigma_tilde, u_tilde, g_data, f_data, params, opts);
}

// L2 residuals of the full stationary problem at (sigma, u): continuity
// div(rho u) - G and the complete momentum balance, both evaluated through
// the time-dependent right-hand side (an assembly independent of the solver).
//
// The norms are taken in the mean-zero quotient, where the periodic problem
// is posed: on the box the net momentum input integral(rho F - u G - ...) need
// not vanish, so the momentum balance is solvable only up to a spatial
// constant. That solvability defect is quadratic in the data and is reported
// separately (LinearizedSolve::compat_defect_f); including it here would
// drown the actual distance to stationarity under an obstruction no periodic
// state can remove.
inline std::pair<double, double> stationary_residual(const Field& sigma, const Field& u,
                                                     const Forcing& forcing,
                                                     const ModelParams& params) {
  const auto& g = sigma.grid();
  const RealSamples rho_r = sigma.to_real().col(0) + params.rho_bar;
  Field rho(g, 1);
  {
    Field::Real rr(g.total_modes(), 1);
    rr.col(0) = rho_r;
    rho = Field::from_real(g, rr);
  }
  Field::Real m(g.total_modes(), g.dim());
  const Field::Real u_r = u.to_real();
  for (int a = 0; a < g.dim(); ++a) m.col(a) = u_r.col(a).array() * rho_r;
  const State state(rho, from_real_dealiased(g, m));
  Rhs rhs = nonlinear_rhs(state, forcing, params);
  rhs.drho_dt.coeffs().row(0).setZero();
  rhs.dm_dt.coeffs().row(0).setZero();
  return {l2_norm(rhs.drho_dt), l2_norm(rhs.dm_dt)};
}

// Hypothesis functionals of the stationary existence theorem, by grid
// quadrature with weights centered at the forcing bump:
//   K0 = ||(1+|x|) G|| + sum_{nu=0..3} ||(1+|x|)^{nu+1} grad^nu F||
//        + sum_{nu=1..4} ||(1+|x|)^nu grad^nu G||,
//   K  = K0 + ||(1+|x|)^3 (F, G, grad F, grad G)||_Linf
//        + ||(1+|x|)^2 F1||_Linf + ||F2||_L1 + ||(1+|x|)^3 grad^2 G||_Linf,
//   epsilon_estimate = K + ||(1+|x|)^{-1} G||_L1.
inline HypothesisReport hypothesis_report(const Forcing& forcing, const Grid<double>& g,
                                          const StationaryOptions& opts = {}) {
  const auto center = detail::resolve_center(g, opts.weight_center);
  HypothesisReport rep;
  if (forcing.G) {
    rep.K0 += weighted_tensor_l2(*forcing.G, 0, center, 1.0);
    for (int nu = 1; nu <= 4; ++nu)
      rep.K0 += weighted_tensor_l2(*forcing.G, nu, center, double(nu));
  }
  if (forcing.F)
    for (int nu = 0; nu <= 3; ++nu)
      rep.K0 += weighted_tensor_l2(*forcing.F, nu, center, double(nu + 1));

  rep.K = rep.K0;
  {  // sup of (1+|x|)^3 * pointwise magnitude of the stacked (F, G, grad F, grad G)
    RealSamples stack2 = RealSamples::Zero(g.total_modes());
    if (forcing.G) {
      stack2 += magnitude<double>(forcing.G->to_real()).square();
      stack2 += derivative_tensor_squared(*forcing.G, 1);
    }
    if (forcing.F) {
      stack2 += magnitude<double>(forcing.F->to_real()).square();
      stack2 += derivative_tensor_squared(*forcing.F, 1);
    }
    const auto w3 = weight_samples(g, center, 3.0);
    rep.K += (w3 * stack2.sqrt()).maxCoeff();
  }
  if (forcing.G) rep.K += weighted_tensor_linf(*forcing.G, 2, center, 3.0);
  if (forcing.F) {
    if (forcing.F1 && forcing.F2) {
      rep.K += weighted_tensor_linf(*forcing.F1, 0, center, 2.0);
      rep.K += lp_norm(*forcing.F2, 1.0);
    } else {
      rep.complete = false;
    }
  }
  if (forcing.G) rep.L1_weighted_G = weighted_l1(*forcing.G, center, -1.0);
  rep.epsilon_estimate = rep.K + rep.L1_weighted_G;
  rep.small = rep.epsilon_estimate <= opts.epsilon_threshold;
  return rep;
}

namespace detail {

inline NormReport make_norm_report(const Field& sigma, const Field& u, const Forcing& forcing,
                                   const ModelParams& params, const StationaryOptions& opts) {
  const auto& g = sigma.grid();
  const auto center = resolve_center(g, opts.weight_center);
  NormReport rep;
  const auto i4 = i_norm(sigma, center);
  const auto j5 = j_norm(u, center);
  rep.I4 = i4.value;
  rep.J5 = j5.value;
  rep.I4_resolution_warning = i4.resolution_warning;
  rep.J5_resolution_warning = j5.resolution_warning;

  // diagnostics of the divergence structure: V1 = -(u/rho) sigma,
  // V2 = div(u/rho) sigma + G/rho
  const RealSamples rho_r = sigma.to_real().col(0) + params.rho_bar;
  Field::Real u_over_rho = u.to_real();
  for (int a = 0; a < g.dim(); ++a) u_over_rho.col(a) = u_over_rho.col(a).array() / rho_r;
  const Field u_rho = from_real_dealiased(g, u_over_rho);
  const RealSamples s_r = sigma.to_real().col(0);
  Field::Real v1(g.total_modes(), g.dim());
  for (int a = 0; a < g.dim(); ++a) v1.col(a) = -(u_over_rho.col(a).array() * s_r);
  const RealSamples div_ur = divergence(u_rho).to_real().col(0);
  Field::Real v2(g.total_modes(), 1);
  v2.col(0) = div_ur * s_r;
  if (forcing.G) v2.col(0) += forcing.G->to_real().col(0).array() / rho_r;
  rep.V1_weighted_linf = weighted_norms(from_real_dealiased(g, v1), center, 3.0).linf;
  rep.V2_weighted_l1 = weighted_l1(from_real_dealiased(g, v2), center, -1.0);
  rep.hypothesis = hypothesis_report(forcing, g, opts);
  return rep;
}

}  // namespace detail

// Outer contraction iteration from (0,0) (or a caller-provided small guess,
// used by the uniqueness probe).
inline StationarySolution fixed_point(const Grid<double>& grid, const Forcing& forcing,
                                      const ModelParams& params,
                                      const StationaryOptions& opts = {},
                                      const IterationSink& sink = {},
                                      std::optional<std::pair<Field, Field>> initial =
                                          std::nullopt) {
  params.validate();
  forcing.validate(grid);
  Field sigma = initial ? std::move(initial->first) : Field(grid, 1);
  Field u = initial ? std::move(initial->second) : Field(grid, grid.dim());

  StationarySolution sol{Field(grid, 1), Field(grid, grid.dim()), 0, {}, 0, 0, {}};
  double scale = -1, prev_diff = -1;
  int consecutive_growth = 0;

  for (int n = 1; n <= opts.max_outer; ++n) {
    const LinearizedSolve step = solve_linearized(sigma, u, forcing, params, opts);
    const double diff = sobolev_norm(step.sigma - sigma, 2) + sobolev_norm(step.u - u, 2);
    sigma = step.sigma;
    u = step.u;

    OuterIterationRecord rec;
    rec.iteration = n;
    rec.diff_h2 = diff;
    rec.sigma_h2 = sobolev_norm(sigma, 2);
    rec.u_h2 = sobolev_norm(u, 2);
    rec.compat_defect_R = step.compat_defect_R;
    rec.compat_defect_f = step.compat_defect_f;
    rec.inner_iterations = step.inner_iterations;
    const auto res = stationary_residual(sigma, u, forcing, params);
    rec.residual_continuity = res.first;
    rec.residual_momentum = res.second;
    if (prev_diff > 0) {
      rec.ratio = diff / prev_diff;
      sol.contraction_ratios.push_back(rec.ratio);
      consecutive_growth = rec.ratio > 1 ? consecutive_growth + 1 : 0;
      if (consecutive_growth >= 3)
        throw ContractionError("outer iteration diverging", rec.ratio);
    }
    if (sink) sink(rec);

    sol.iterations = n;
    sol.residual_continuity = res.first;
    sol.residual_momentum = res.second;
    if (scale < 0) scale = std::max(diff, 1e-300);
    prev_diff = std::max(diff, 1e-300);

    const bool diff_ok = diff <= opts.outer_tol * scale;
    const bool res_ok =
        opts.residual_target > 0 && res.first + res.second <= opts.residual_target;
    if (diff_ok || res_ok) break;
    if (n == opts.max_outer)
      throw ConvergenceError("outer fixed point did not converge",
                             sol.contraction_ratios.empty() ? 0.0
                                                            : sol.contraction_ratios.back());
  }

  sol.sigma_star = std::move(sigma);
  sol.u_star = std::move(u);
  sol.norm_report =
      detail::make_norm_report(sol.sigma_star, sol.u_star, forcing, params, opts);
  return sol;
}

}  // namespace qns
