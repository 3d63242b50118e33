#pragma once

#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "qns/energy.hpp"
#include "qns/model.hpp"
#include "qns/norms.hpp"
#include "qns/series.hpp"

namespace qns {

// ---------------------------------------------------------------------------
// Nonlinear time integration in perturbation form
//
// The state is evolved as (r, M) = (rho - rho*, m - m*) about a stored
// background (rho*, m*). The constant-coefficient linear part
//   r_t = -div M
//   M_t = mu Lap M + (mu+lambda) grad div M - P'(rho_bar) grad r
//         + (hbar^2/4) grad Lap r
// is treated implicitly with exact per-mode block solves (2x2 along the
// wavevector, scalar on the orthogonal complement); the nonlinear remainder
// Q(r, M) plus the background's own dynamics (nonzero when the stored state is
// only numerically stationary) is explicit. Reassembling rho = rho* + r,
// m = m* + M reproduces the raw dynamics exactly, so stepping about the
// uniform background IS raw-variable stepping; the tests cross-check the two.
// ---------------------------------------------------------------------------

enum class Scheme { ImexEuler, ImexRk2 };

inline Scheme parse_scheme(const std::string& s) {
  if (s == "imex-euler") return Scheme::ImexEuler;
  if (s == "imex-rk2") return Scheme::ImexRk2;
  throw ConfigError("unknown scheme '" + s + "' (expected imex-euler or imex-rk2)");
}

inline const char* scheme_name(Scheme s) {
  return s == Scheme::ImexEuler ? "imex-euler" : "imex-rk2";
}

struct TimeStepperConfig {
  double dt = 1e-2;
  double t_end = 1.0;
  Scheme scheme = Scheme::ImexRk2;
  double cfl_safety = 0.9;  // in (0, 1]
  int output_stride = 1;    // steps between recorded snapshots
  bool include_background_residual = true;  // add the stored state's own rhs
  bool include_nonlinearity = true;         // false = pure linear propagation
  double max_initial_norm = 0;  // gate on ||(r,w)(0)||_{4,3}; 0 disables
  double min_dt = 1e-10;        // halving floor before the driver gives up

  void validate() const {
    if (!(dt > 0)) throw ConfigError("time step dt must be positive");
    if (!(t_end > 0)) throw ConfigError("t_end must be positive");
    if (!(cfl_safety > 0 && cfl_safety <= 1))
      throw ConfigError("cfl_safety must lie in (0, 1]");
    if (output_stride < 1) throw ConfigError("output_stride must be >= 1");
    if (!(min_dt > 0)) throw ConfigError("min_dt must be positive");
    if (max_initial_norm < 0) throw ConfigError("max_initial_norm must be >= 0");
  }
};

// The state the perturbation is measured against: a computed stationary pair
// or the uniform rest state.
struct Background {
  Field rho;
  Field m;
};

inline Background uniform_background(const Grid<double>& g, const ModelParams& params) {
  return Background{State::uniform(g, params).rho, Field(g, g.dim())};
}

// rho* = rho_bar + sigma*, m* = rho* u* (pointwise product, dealias band).
inline Background background_from_stationary(const Field& sigma_star, const Field& u_star,
                                             const ModelParams& params) {
  const auto& g = sigma_star.grid();
  if (sigma_star.components() != 1 || u_star.components() != g.dim())
    throw ShapeError("background_from_stationary expects (scalar sigma, dim-vector u)");
  const RealSamples rho_r = sigma_star.to_real().col(0) + params.rho_bar;
  Field rho = sigma_star;
  rho.coeffs()(0, 0) += std::complex<double>(params.rho_bar * double(g.total_modes()), 0);
  Field::Real m(g.total_modes(), g.dim());
  const Field::Real u_r = u_star.to_real();
  for (int a = 0; a < g.dim(); ++a) m.col(a) = u_r.col(a).array() * rho_r;
  return Background{std::move(rho), from_real_dealiased(g, m)};
}

struct PerturbationState {
  Field r;  // density perturbation
  Field M;  // momentum perturbation
  double time = 0;
};

namespace detail {

struct LinearCoeffs {
  double mu = 0;
  double two_mu_lambda = 0;
  double c2 = 0;   // P'(rho_bar)
  double h24 = 0;  // hbar^2 / 4
};

// (L r, L M) of the constant-coefficient linear part, exact per mode.
inline std::pair<Field, Field> apply_linear(const Field& r, const Field& M,
                                            const LinearCoeffs& lc) {
  const auto& g = r.grid();
  const int dim = g.dim();
  Field lr(g, 1);
  Field lm(g, dim);
  for (Eigen::Index flat = 1; flat < g.total_modes(); ++flat) {
    const double xi2 = g.xi_squared(flat);
    std::complex<double> xi_dot_m(0, 0);
    for (int a = 0; a < dim; ++a) xi_dot_m += g.xi(flat, a) * M.coeffs()(flat, a);
    lr.coeffs()(flat, 0) = std::complex<double>(0, -1) * xi_dot_m;
    const std::complex<double> grad_part =
        std::complex<double>(0, 1) * (lc.c2 + lc.h24 * xi2) * r.coeffs()(flat, 0);
    for (int i = 0; i < dim; ++i)
      lm.coeffs()(flat, i) = -lc.mu * xi2 * M.coeffs()(flat, i) -
                             (lc.two_mu_lambda - lc.mu) * g.xi(flat, i) * xi_dot_m -
                             g.xi(flat, i) * grad_part;
  }
  return {std::move(lr), std::move(lm)};
}

// Solves (I - a L) (r, M) = (r, M) in place, exactly per mode. Along the
// wavevector the density couples to the longitudinal momentum through a 2x2
// block; transverse momentum components decouple into scalar solves. The zero
// mode is untouched (L annihilates it).
inline void implicit_solve(Field& r, Field& M, const LinearCoeffs& lc, double a) {
  const auto& g = r.grid();
  const int dim = g.dim();
  for (Eigen::Index flat = 1; flat < g.total_modes(); ++flat) {
    const double xi2 = g.xi_squared(flat);
    const double xin = std::sqrt(xi2);
    std::array<double, 3> e = {0, 0, 0};
    for (int i = 0; i < dim; ++i) e[size_t(i)] = g.xi(flat, i) / xin;

    std::complex<double> mpar(0, 0);
    for (int i = 0; i < dim; ++i) mpar += e[size_t(i)] * M.coeffs()(flat, i);

    const double k2 = lc.c2 + lc.h24 * xi2;
    const double a22 = 1 + a * lc.two_mu_lambda * xi2;
    const double det = a22 + a * a * xi2 * k2;
    const std::complex<double> rhs_r = r.coeffs()(flat, 0);
    const std::complex<double> rhs_p = mpar;
    const std::complex<double> i_axin(0, a * xin);
    const std::complex<double> rn = (a22 * rhs_r - i_axin * rhs_p) / det;
    const std::complex<double> pn = (rhs_p - i_axin * k2 * rhs_r) / det;

    r.coeffs()(flat, 0) = rn;
    const double dperp = 1 + a * lc.mu * xi2;
    for (int i = 0; i < dim; ++i) {
      const std::complex<double> perp = M.coeffs()(flat, i) - mpar * e[size_t(i)];
      M.coeffs()(flat, i) = perp / dperp + pn * e[size_t(i)];
    }
  }
}

}  // namespace detail

class PerturbationStepper {
 public:
  PerturbationStepper(Background background, Forcing forcing, ModelParams params,
                      bool include_background_residual = true,
                      bool include_nonlinearity = true)
      : bg_(std::move(background)),
        forcing_(std::move(forcing)),
        params_(params),
        include_nonlinearity_(include_nonlinearity) {
    params_.validate();
    const auto& g = bg_.rho.grid();
    if (bg_.rho.components() != 1 || bg_.m.components() != g.dim())
      throw ShapeError("background needs (scalar rho, dim-vector m)");
    forcing_.validate(g);
    bg_rho_r_ = bg_.rho.to_real().col(0);
    detail::require_floor(bg_rho_r_, params_, "PerturbationStepper background");
    bg_m_r_ = bg_.m.to_real();
    bg_u_r_.resize(g.total_modes(), g.dim());
    for (int a = 0; a < g.dim(); ++a) bg_u_r_.col(a) = bg_m_r_.col(a).array() / bg_rho_r_;

    lc_.mu = params_.mu;
    lc_.two_mu_lambda = 2 * params_.mu + params_.lambda;
    lc_.c2 = params_.p_prime_bar();
    lc_.h24 = params_.hbar * params_.hbar / 4;

    if (include_nonlinearity_ && include_background_residual) {
      const Rhs rhs = nonlinear_rhs(State(bg_.rho, bg_.m), forcing_, params_);
      residual_ = Rhs{rhs.drho_dt, rhs.dm_dt};
    }
  }

  const Background& background() const { return bg_; }
  const ModelParams& params() const { return params_; }
  const Grid<double>& grid() const { return bg_.rho.grid(); }

  PerturbationState perturbation_of(const State& full) const {
    if (full.rho.grid() != grid()) throw ShapeError("state grid mismatch with background");
    return PerturbationState{full.rho - bg_.rho, full.m - bg_.m, full.time};
  }

  State full_state(const PerturbationState& u) const {
    return State(u.r + bg_.rho, u.M + bg_.m, u.time);
  }

  // Velocity perturbation w = (M+m*)/(r+rho*) - m*/rho*, pointwise.
  Field velocity_perturbation(const PerturbationState& u) const {
    const auto& g = grid();
    const RealSamples rho = bg_rho_r_ + u.r.to_real().col(0);
    detail::require_floor(rho, params_, "velocity_perturbation");
    Field::Real w = u.M.to_real();
    for (int a = 0; a < g.dim(); ++a)
      w.col(a) = (w.col(a).array() + bg_m_r_.col(a).array()) / rho - bg_u_r_.col(a).array();
    return from_real_dealiased(g, w);
  }

  // Largest stable explicit step: safety * dx / max(|u| + c_s).
  double cfl_limit(const PerturbationState& u, double safety) const {
    const auto& g = grid();
    const RealSamples rho = bg_rho_r_ + u.r.to_real().col(0);
    detail::require_floor(rho, params_, "cfl_limit");
    const Field::Real m_r = u.M.to_real();
    RealSamples speed2 = RealSamples::Zero(g.total_modes());
    for (int a = 0; a < g.dim(); ++a)
      speed2 += ((m_r.col(a).array() + bg_m_r_.col(a).array()) / rho).square();
    const double vmax = std::sqrt(speed2.maxCoeff()) + params_.sound_speed();
    return safety * g.spacing() / vmax;
  }

  // One IMEX step. Throws CflError (state untouched) when dt exceeds the
  // advective bound, PositivityError (with time stamp) when the density falls
  // below the floor during or after the step.
  void step(PerturbationState& u, double dt, Scheme scheme, double cfl_safety = 1.0) const {
    if (!(dt > 0)) throw DomainError("step needs dt > 0");
    try {
      const double limit = cfl_limit(u, cfl_safety);
      if (dt > limit)
        throw CflError("dt " + std::to_string(dt) + " exceeds the advective bound " +
                           std::to_string(limit) + " at t = " + std::to_string(u.time),
                       limit);
      if (scheme == Scheme::ImexEuler) {
        const Rhs n0 = nonlinearity(u);
        u.r += dt * n0.drho_dt;
        u.M += dt * n0.dm_dt;
        detail::implicit_solve(u.r, u.M, lc_, dt);
      } else {
        // Two-stage second-order split: gamma = 1 - 1/sqrt(2) makes the
        // implicit one-step map match the exponential to O(dt^3); the
        // explicit weights (delta, 1-delta) restore second order overall.
        const double gamma = 1 - 1 / std::sqrt(2.0);
        const double delta = 1 - 1 / (2 * gamma);
        const Rhs n0 = nonlinearity(u);
        PerturbationState s1{u.r + (dt * gamma) * n0.drho_dt,
                             u.M + (dt * gamma) * n0.dm_dt, u.time};
        detail::implicit_solve(s1.r, s1.M, lc_, dt * gamma);
        const Rhs n1 = nonlinearity(s1);
        const auto l1 = detail::apply_linear(s1.r, s1.M, lc_);
        u.r += dt * (delta * n0.drho_dt + (1 - delta) * n1.drho_dt) +
               (dt * (1 - gamma)) * l1.first;
        u.M += dt * (delta * n0.dm_dt + (1 - delta) * n1.dm_dt) +
               (dt * (1 - gamma)) * l1.second;
        detail::implicit_solve(u.r, u.M, lc_, dt * gamma);
      }
    } catch (const CflError&) {
      throw;
    } catch (const PositivityError& e) {
      throw PositivityError(std::string("t = ") + std::to_string(u.time) + ": " + e.what());
    }
    u.time += dt;
    const RealSamples rho = bg_rho_r_ + u.r.to_real().col(0);
    if (rho.minCoeff() < params_.floor_value())
      throw PositivityError("t = " + std::to_string(u.time) + ": min density " +
                            std::to_string(rho.minCoeff()) + " fell below the floor " +
                            std::to_string(params_.floor_value()));
  }

  // Explicit part of the split: the perturbation nonlinearity plus (when the
  // background is only approximately stationary) its residual dynamics.
  Rhs nonlinearity(const PerturbationState& u) const {
    const auto& g = grid();
    Rhs n{Field(g, 1), Field(g, g.dim())};
    if (!include_nonlinearity_) return n;
    n.dm_dt = compute_Q(u.r, u.M, bg_.rho, bg_.m, forcing_, params_);
    if (residual_) {
      n.drho_dt += residual_->drho_dt;
      n.dm_dt += residual_->dm_dt;
    }
    return n;
  }

 private:
  Background bg_;
  Forcing forcing_;
  ModelParams params_;
  bool include_nonlinearity_;
  detail::LinearCoeffs lc_;
  RealSamples bg_rho_r_;
  Field::Real bg_m_r_;
  Field::Real bg_u_r_;
  std::optional<Rhs> residual_;
};

// ---------------------------------------------------------------------------
// Trajectory recording
// ---------------------------------------------------------------------------

inline const std::vector<std::string>& trajectory_channels() {
  static const std::vector<std::string> names = {
      "rho_H0",   "rho_H1",   "rho_H2",   "rho_H3",        "rho_H4",
      "omega_H0", "omega_H1", "omega_H2", "omega_H3",      "energy_N",
      "energy_E", "min_density", "dissipation_43"};
  return names;
}

enum class RunStatus {
  Completed,
  AbortedPositivity,    // density fell below the floor
  AbortedStep,          // CFL halving hit the min_dt floor
  AbortedEnergyWindow,  // density left [rho_bar/2, 3 rho_bar/2], where the
                        // energy functionals are defined
};

inline const char* run_status_name(RunStatus s) {
  switch (s) {
    case RunStatus::Completed: return "completed";
    case RunStatus::AbortedPositivity: return "aborted-positivity";
    case RunStatus::AbortedStep: return "aborted-step";
    default: return "aborted-energy-window";
  }
}

struct TrajectoryRecord {
  NormSeries norms{trajectory_channels()};
  // Cumulative dissipation integrals at snapshot times (trapezoid in t):
  //   high: ||grad r||_{H3}^2 + ||grad w||_{H2}^2,  low: ||grad(r,w)||_{L2}^2.
  std::vector<double> diss_grad32_cumulative;
  std::vector<double> diss_grad_l2_cumulative;
  RunStatus status = RunStatus::Completed;
  std::string abort_message;
  double final_dt = 0;
  long steps_taken = 0;
  double initial_norm_43 = 0;  // ||r(0)||_{H4} + ||w(0)||_{H3}
  double sup_norm_43 = 0;      // sup over snapshots
};

// Optional per-snapshot callback with the assembled full state and the
// perturbation pair (density, velocity).
using SnapshotSink =
    std::function<void(const State&, const Field& r, const Field& w)>;

struct LyapunovInputs {
  std::vector<double> delta_E;    // E(t_{i+1}) - E(t_i)
  std::vector<double> diss_high;  // int ||grad(r,w)||_{3,2}^2 dt per interval
  std::vector<double> diss_low;   // int ||grad(r,w)||_{L2}^2 dt per interval
};

inline LyapunovInputs lyapunov_inputs(const TrajectoryRecord& rec) {
  LyapunovInputs in;
  const auto energy = rec.norms.column("energy_E");
  if (energy.size() < 2)
    throw DomainError("lyapunov_inputs needs at least two snapshots");
  for (std::size_t i = 0; i + 1 < energy.size(); ++i) {
    in.delta_E.push_back(energy[i + 1] - energy[i]);
    in.diss_high.push_back(rec.diss_grad32_cumulative[i + 1] -
                           rec.diss_grad32_cumulative[i]);
    in.diss_low.push_back(rec.diss_grad_l2_cumulative[i + 1] -
                          rec.diss_grad_l2_cumulative[i]);
  }
  return in;
}

namespace detail {

struct DissipationRates {
  double grad43 = 0;   // ||grad r||_{H4}^2 + ||grad w||_{H3}^2
  double grad32 = 0;   // ||grad r||_{H3}^2 + ||grad w||_{H2}^2
  double grad_l2 = 0;  // ||grad r||^2 + ||grad w||^2
};

inline DissipationRates dissipation_rates(const Field& r, const Field& w) {
  DissipationRates d;
  for (int j = 1; j <= 5; ++j) {
    const double hr = homogeneous_norm_squared(r, j);
    if (j <= 4) d.grad32 += hr;
    if (j == 1) d.grad_l2 += hr;
    d.grad43 += hr;
  }
  for (int j = 1; j <= 4; ++j) {
    const double hw = homogeneous_norm_squared(w, j);
    if (j <= 3) d.grad32 += hw;
    if (j == 1) d.grad_l2 += hw;
    d.grad43 += hw;
  }
  return d;
}

}  // namespace detail

// Runs the IMEX integrator to t_end, recording norm snapshots every
// output_stride steps (plus the initial and final states). Abort conditions
// from the stepper end the run early with a partial record. On a CFL
// rejection the driver halves dt and retries (dt stays halved).
inline TrajectoryRecord evolve(const State& initial, const Background& background,
                               const Forcing& forcing, const ModelParams& params,
                               const TimeStepperConfig& cfg,
                               const SnapshotSink& sink = {}) {
  cfg.validate();
  const PerturbationStepper stepper(background, forcing, params,
                                    cfg.include_background_residual,
                                    cfg.include_nonlinearity);
  PerturbationState u = stepper.perturbation_of(initial);

  TrajectoryRecord rec;
  double diss43 = 0, diss32 = 0, dissl2 = 0;
  detail::DissipationRates prev_rates;
  const double window_lo = params.rho_bar / 2, window_hi = 3 * params.rho_bar / 2;

  // Snapshot at the current state; returns false when the density has left
  // the window on which the energy functionals are defined.
  auto snapshot = [&](const PerturbationState& s) -> bool {
    const Field w = stepper.velocity_perturbation(s);
    const State full = stepper.full_state(s);
    const RealSamples rho = full.rho.to_real().col(0);
    const double rho_min = rho.minCoeff(), rho_max = rho.maxCoeff();
    if (rho_min < window_lo || rho_max > window_hi) {
      rec.status = RunStatus::AbortedEnergyWindow;
      rec.abort_message = "t = " + std::to_string(s.time) + ": density range [" +
                          std::to_string(rho_min) + ", " + std::to_string(rho_max) +
                          "] left the energy window [" + std::to_string(window_lo) +
                          ", " + std::to_string(window_hi) + "]";
      return false;
    }
    std::vector<double> row;
    row.reserve(trajectory_channels().size());
    for (int k = 0; k <= 4; ++k) row.push_back(sobolev_norm(s.r, k));
    for (int k = 0; k <= 3; ++k) row.push_back(sobolev_norm(w, k));
    row.push_back(energy_N(s.r, w, params, rho));
    row.push_back(energy_E(s.r, w, params, rho));
    row.push_back(rho_min);
    row.push_back(diss43);
    rec.norms.add_row(s.time, row);
    rec.diss_grad32_cumulative.push_back(diss32);
    rec.diss_grad_l2_cumulative.push_back(dissl2);
    const double n43 = norm_43(s.r, w);
    rec.sup_norm_43 = std::max(rec.sup_norm_43, n43);
    if (rec.norms.size() == 1) {
      rec.initial_norm_43 = n43;
      prev_rates = detail::dissipation_rates(s.r, w);
    }
    if (sink) sink(full, s.r, w);
    return true;
  };

  if (cfg.max_initial_norm > 0) {
    const double n0 = norm_43(u.r, stepper.velocity_perturbation(u));
    if (n0 > cfg.max_initial_norm)
      throw DomainError("initial perturbation norm " + std::to_string(n0) +
                        " exceeds the configured gate " +
                        std::to_string(cfg.max_initial_norm));
  }

  if (!snapshot(u)) {
    rec.final_dt = cfg.dt;
    return rec;
  }

  double dt = cfg.dt;
  const double t_eps = 1e-12 * cfg.t_end;
  long since_snapshot = 0;
  while (u.time < cfg.t_end - t_eps) {
    const double dt_step = std::min(dt, cfg.t_end - u.time);
    try {
      stepper.step(u, dt_step, cfg.scheme, cfg.cfl_safety);
    } catch (const CflError& e) {
      dt /= 2;
      if (dt < cfg.min_dt) {
        rec.status = RunStatus::AbortedStep;
        rec.abort_message = std::string("dt halving reached the floor: ") + e.what();
        break;
      }
      continue;
    } catch (const PositivityError& e) {
      rec.status = RunStatus::AbortedPositivity;
      rec.abort_message = e.what();
      break;
    }
    ++rec.steps_taken;
    ++since_snapshot;

    const detail::DissipationRates rates =
        detail::dissipation_rates(u.r, stepper.velocity_perturbation(u));
    diss43 += dt_step / 2 * (prev_rates.grad43 + rates.grad43);
    diss32 += dt_step / 2 * (prev_rates.grad32 + rates.grad32);
    dissl2 += dt_step / 2 * (prev_rates.grad_l2 + rates.grad_l2);
    prev_rates = rates;

    const bool final_step = !(u.time < cfg.t_end - t_eps);
    if (since_snapshot >= cfg.output_stride || final_step) {
      since_snapshot = 0;
      if (!snapshot(u)) break;
    }
  }
  rec.final_dt = dt;
  return rec;
}

}  // namespace qns
