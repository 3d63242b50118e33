// Acceptance gate for the laboratory: eight end-to-end criteria, each printed
// as a single PASS/FAIL line with the measured quantities and runtime. The
// binary exits 0 only when every criterion passes.
//
// Usage: acceptance --cli <path-to-qns-binary> --configs <config-directory>
//
// The tolerances are pinned here, next to the checks that use them, so the
// gate cannot drift silently.

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <complex>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <sys/wait.h>

#include <Eigen/Dense>

#include "qns/config.hpp"
#include "qns/energy.hpp"
#include "qns/evolution.hpp"
#include "qns/field.hpp"
#include "qns/forcing_profiles.hpp"
#include "qns/grid.hpp"
#include "qns/model.hpp"
#include "qns/norms.hpp"
#include "qns/operators.hpp"
#include "qns/oracle.hpp"
#include "qns/probes.hpp"
#include "qns/random_fields.hpp"
#include "qns/semigroup.hpp"
#include "qns/series.hpp"
#include "qns/stationary.hpp"

namespace fs = std::filesystem;
using namespace qns;

namespace {

// ---------------------------------------------------------------------------
// Pinned tolerances and budgets.
// ---------------------------------------------------------------------------
constexpr double kRecoveryRelH2 = 1e-8;         // criterion 1: solve accuracy
constexpr double kRecoveryBudgetSec = 60.0;     // criterion 1: total runtime
constexpr double kSmallAmpRatioCap = 0.6;       // criterion 2: contraction
constexpr double kResidualPerAmplitude = 1e-7;  // criterion 2: residual
constexpr double kStabilityCap = 5.0;           // criterion 3: sup / initial
constexpr double kHalvingWindow = 0.2;          // criterion 3: linearity
constexpr double kStabilityBudgetSec = 600.0;   // criterion 3: total runtime
constexpr double kSlopeTol = 0.07;              // criterion 4: decay slopes
constexpr double kDecayBudgetSec = 60.0;        // criterion 4: per exponent
constexpr double kLpSlopeTol = 0.05;            // criterion 5: proxy slopes
constexpr double kOracleAgreement = 5e-2;       // criterion 6: dense vs spectral
constexpr double kSpatialOrderFloor = 1.8;      // criterion 6: mesh refinement
constexpr double kTemporalOrderSlack = 0.2;     // criterion 6: time stepping
constexpr double kMonotoneSlack = 1e-6;         // criteria 4, 7: slack factor
constexpr double kExactTol = 1e-12;             // criterion 7: closed forms

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

double rel_h_err(const Field& got, const Field& want, int k) {
  return sobolev_norm(Field(got - want), k) / std::max(sobolev_norm(want, k), 1e-300);
}

Field mean_zero_band(const Grid<double>& g, std::uint64_t seed, int components,
                     double amplitude, Eigen::Index band) {
  Field f = random_band_field(g, seed, components, amplitude, band);
  f.coeffs().row(0).setZero();
  return f;
}

template <typename Fn>
Field field_from_fn(const Grid<double>& g, Eigen::Index components, Fn&& fn) {
  Field::Real samples(g.total_modes(), components);
  for (Eigen::Index flat = 0; flat < g.total_modes(); ++flat) {
    std::array<double, 3> x{0, 0, 0};
    for (int a = 0; a < g.dim(); ++a) x[size_t(a)] = g.coord(flat, a);
    for (Eigen::Index c = 0; c < components; ++c) fn(x, c, samples(flat, c));
  }
  return Field::from_real(g, samples);
}

ForcingProfile bump_profile(double amplitude) {
  ForcingProfile profile;
  profile.kind = ForcingProfile::Kind::GaussianBump;
  profile.amplitude_g = amplitude;
  profile.amplitude_f = amplitude;
  profile.width = 1.0;
  return profile;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// ---------------------------------------------------------------------------
// 1. Manufactured solutions are recovered by the frozen-coefficient solve.
// ---------------------------------------------------------------------------
Outcome criterion_manufactured_recovery() {
  const auto t0 = std::chrono::steady_clock::now();
  const ModelParams p;
  StationaryOptions opts;
  opts.inner_tol = 1e-12;

  double worst = 0.0;
  int solves = 0;
  for (const auto& [dim, n] : {std::pair{1, 64}, std::pair{3, 32}}) {
    const Grid<double> g(dim, n, 2 * double(EIGEN_PI));
    for (int k = 0; k < 3; ++k) {
      const std::uint64_t base = 100 * std::uint64_t(dim) + 10 * std::uint64_t(k);
      const Field sigma_star = mean_zero_band(g, base + 1, 1, 0.1, 4);
      const Field u_star = mean_zero_band(g, base + 2, dim, 0.1, 4);
      const Field sigma_tilde = mean_zero_band(g, base + 3, 1, 0.2, 3);
      const Field u_tilde = mean_zero_band(g, base + 4, dim, 0.2, 3);

      // Transport velocity formed exactly as the solver forms it, so the
      // manufactured data puts (sigma_star, u_star) on the discrete solution.
      const RealSamples rt = sigma_tilde.to_real().col(0) + p.rho_bar;
      Field::Real tr = u_tilde.to_real();
      for (int a = 0; a < g.dim(); ++a) tr.col(a) = tr.col(a).array() / rt;
      const Field transport = from_real_dealiased(g, tr);

      const Field g_data = divergence(u_star) + dot(transport, gradient(sigma_star));
      const Field f_data = (-p.mu) * laplacian(u_star) -
                           (p.mu + p.lambda) * gradient(divergence(u_star)) +
                           p.p_prime_bar() * gradient(sigma_star) -
                           (p.hbar * p.hbar / 4.0) * gradient(laplacian(sigma_star));

      const LinearizedSolve out =
          solve_linearized_system(sigma_tilde, u_tilde, g_data, f_data, p, opts);
      worst = std::max({worst, rel_h_err(out.sigma, sigma_star, 2),
                        rel_h_err(out.u, u_star, 2)});
      ++solves;
    }
  }

  const double elapsed = seconds_since(t0);
  Outcome o;
  o.pass = worst <= kRecoveryRelH2 && elapsed <= kRecoveryBudgetSec;
  o.detail = "worst rel H2 err " + num(worst) + " over " + std::to_string(solves) +
             " solves, budget " + num(kRecoveryBudgetSec) + " s";
  return o;
}

// ---------------------------------------------------------------------------
// 2. The outer iteration contracts and lands on a tiny residual.
// ---------------------------------------------------------------------------
Outcome criterion_contraction() {
  const ModelParams p;
  const Grid<double> g(2, 32, 2 * double(EIGEN_PI));
  StationaryOptions opts;
  opts.inner_tol = 1e-12;
  opts.outer_tol = 1e-9;

  bool pass = true;
  std::ostringstream d;
  const std::array<double, 2> amps{1e-3, 1e-4};
  for (std::size_t i = 0; i < amps.size(); ++i) {
    const double amp = amps[i];
    const Forcing forcing = make_forcing(g, bump_profile(amp));
    const StationarySolution sol = fixed_point(g, forcing, p, opts);

    double worst_ratio = 0.0;
    for (double r : sol.contraction_ratios) worst_ratio = std::max(worst_ratio, r);
    pass = pass && !sol.contraction_ratios.empty() && worst_ratio < 1.0;
    if (i == 1) pass = pass && worst_ratio <= kSmallAmpRatioCap;

    const auto [res_c, res_m] = stationary_residual(sol.sigma_star, sol.u_star, forcing, p);
    pass = pass && res_c <= kResidualPerAmplitude * amp && res_m <= kResidualPerAmplitude * amp;
    if (i) d << "; ";
    d << "amp " << num(amp) << ": max ratio " << num(worst_ratio) << ", residual ("
      << num(res_c) << ", " << num(res_m) << ")";
  }

  Outcome o;
  o.pass = pass;
  o.detail = d.str();
  return o;
}

// ---------------------------------------------------------------------------
// 3. Perturbed steady states stay bounded and scale linearly with the
//    perturbation size.
// ---------------------------------------------------------------------------
Outcome criterion_stability() {
  const auto t0 = std::chrono::steady_clock::now();
  const ModelParams p;
  const Grid<double> g(3, 32, 2 * double(EIGEN_PI));

  const Forcing forcing = make_forcing(g, bump_profile(1e-3));
  const StationarySolution sol = fixed_point(g, forcing, p);
  const Background bg = background_from_stationary(sol.sigma_star, sol.u_star, p);

  // One seeded shape, scaled to each requested size, so halving the size
  // halves the initial data exactly.
  const Field r_shape = random_band_field(g, 8, 1, 1.0, 3);
  const Field w_shape = random_band_field(g, 9, 3, 1.0, 3);
  const double n0 = norm_43(r_shape, w_shape);

  TimeStepperConfig cfg;
  cfg.dt = 0.05;
  cfg.t_end = 50.0;
  cfg.scheme = Scheme::ImexRk2;
  cfg.output_stride = 10;

  const RealSamples bg_rho = bg.rho.to_real().col(0);
  const Field::Real u_bg = bg.m.to_real();

  bool pass = true;
  std::ostringstream d;
  const std::array<double, 2> deltas{1e-3, 5e-4};
  std::array<double, 2> sups{0.0, 0.0};
  for (std::size_t i = 0; i < deltas.size(); ++i) {
    const double delta = deltas[i];
    const Field r = Field((delta / n0) * r_shape);
    const Field w = Field((delta / n0) * w_shape);

    // Perturb density and momentum consistently: m = rho (u* + w).
    const RealSamples rho_r = bg_rho + r.to_real().col(0);
    const Field::Real w_r = w.to_real();
    Field::Real m_r(g.total_modes(), g.dim());
    for (int a = 0; a < g.dim(); ++a)
      m_r.col(a) = rho_r * (u_bg.col(a).array() / bg_rho + w_r.col(a).array());
    const State initial(Field(bg.rho + r), from_real_dealiased(g, m_r), 0.0);

    const TrajectoryRecord rec = evolve(initial, bg, forcing, p, cfg);
    pass = pass && rec.status == RunStatus::Completed;
    sups[i] = rec.sup_norm_43;
    pass = pass && rec.sup_norm_43 <= kStabilityCap * rec.initial_norm_43;
    if (i) d << "; ";
    d << "delta " << num(delta) << ": sup/initial "
      << num(rec.initial_norm_43 > 0 ? rec.sup_norm_43 / rec.initial_norm_43 : 0.0);
  }

  const double halving = sups[0] > 0 ? sups[1] / sups[0] : 0.0;
  pass = pass && halving >= 0.5 * (1 - kHalvingWindow) && halving <= 0.5 * (1 + kHalvingWindow);
  const double elapsed = seconds_since(t0);
  pass = pass && elapsed <= kStabilityBudgetSec;

  Outcome o;
  o.pass = pass;
  d << "; halving ratio " << num(halving) << ", budget " << num(kStabilityBudgetSec) << " s";
  o.detail = d.str();
  return o;
}

// ---------------------------------------------------------------------------
// 4. Negative-order data decays at the predicted rates and the negative-order
//    channel never increases.
// ---------------------------------------------------------------------------
Outcome criterion_decay_exponents() {
  const ModelParams p;
  const std::vector<double> grid = default_time_grid(1e-2, 1000.0, 161);

  bool pass = true;
  std::ostringstream d;
  bool first = true;
  for (double s : {0.0, 0.5, 1.0, 1.4}) {
    const auto t0 = std::chrono::steady_clock::now();
    const HsDecayRun run = hs_negative_decay_run(s, p, grid);
    const DecayFit fit_grad = fit_decay(run.series, "grad_L2", 10.0, 1000.0, -(1.0 + s) / 2);
    const DecayFit fit_l2 = fit_decay(run.series, "L2", 10.0, 1000.0, -s / 2);
    const double elapsed = seconds_since(t0);

    const bool ok = std::abs(fit_grad.slope + (1.0 + s) / 2) <= kSlopeTol &&
                    std::abs(fit_l2.slope + s / 2) <= kSlopeTol && run.hneg_monotone &&
                    run.hneg_worst_ratio <= 1.0 + kMonotoneSlack &&
                    elapsed <= kDecayBudgetSec;
    pass = pass && ok;
    if (!first) d << "; ";
    first = false;
    d << "s=" << num(s) << ": slopes (" << num(fit_l2.slope) << ", " << num(fit_grad.slope)
      << ") want (" << num(-s / 2) << ", " << num(-(1.0 + s) / 2) << ")";
  }

  Outcome o;
  o.pass = pass;
  o.detail = d.str();
  return o;
}

// ---------------------------------------------------------------------------
// 5. The integrable-data proxy class decays at the predicted rate, and one
//    extra derivative costs an extra half power of time.
// ---------------------------------------------------------------------------
Outcome criterion_integrable_proxy() {
  const ModelParams p;
  const std::vector<double> grid = default_time_grid(1e-2, 1000.0, 161);

  const LpDecayCheck base = lp_lq_decay_check(flat_class(), 1.0, 2.0, 0, grid, p);
  const LpDecayCheck grad = lp_lq_decay_check(flat_class(), 1.0, 2.0, 1, grid, p);
  const double offset = grad.slope - base.slope;

  Outcome o;
  o.pass = std::abs(base.slope + 0.75) <= kLpSlopeTol && std::abs(offset + 0.5) <= kLpSlopeTol;
  o.detail = "base slope " + num(base.slope) + " want -0.75, derivative offset " + num(offset) +
             " want -0.5";
  return o;
}

// ---------------------------------------------------------------------------
// 6. Independent oracles agree with the solvers: the dense difference-quotient
//    solve matches the collocation solve at its discretization order, and the
//    time stepper matches the per-mode matrix exponential and Duhamel
//    integral at the scheme order.
// ---------------------------------------------------------------------------
double dense_vs_spectral_diff(Eigen::Index n, const ModelParams& p) {
  const Grid<double> g(1, n, 2 * double(EIGEN_PI));
  const Field st = field_from_fn(g, 1, [](const std::array<double, 3>& x, Eigen::Index, double& v) {
    v = 0.05 * (std::cos(x[0]) + 0.2 * std::sin(2 * x[0]));
  });
  const Field ut = field_from_fn(g, 1, [](const std::array<double, 3>& x, Eigen::Index, double& v) {
    v = 0.05 * (std::sin(x[0]) + 0.2 * std::cos(2 * x[0]));
  });
  const Field gforce = field_from_fn(g, 1, [](const std::array<double, 3>& x, Eigen::Index, double& v) {
    v = 1e-3 * (std::cos(x[0]) + 0.3 * std::sin(2 * x[0]));
  });
  const Field fforce = field_from_fn(g, 1, [](const std::array<double, 3>& x, Eigen::Index, double& v) {
    v = 1e-3 * (std::sin(x[0]) - 0.2 * std::cos(2 * x[0]));
  });

  Forcing forcing = Forcing::none();
  forcing.G = gforce;
  forcing.F = fforce;
  forcing.validate(g);

  StationaryOptions opts;
  opts.inner_tol = 1e-12;
  const LinearizedSolve spectral = solve_linearized(st, ut, forcing, p, opts);

  const oracle::FdMesh mesh(1, n, 2 * double(EIGEN_PI));
  const oracle::DenseSolution dense = oracle::dense_stationary_solve(
      mesh, st.to_real().col(0), ut.to_real(), gforce.to_real().col(0), fforce.to_real(), p);

  const Eigen::ArrayXd sigma_ref = spectral.sigma.to_real().col(0);
  const Eigen::ArrayXXd u_ref = spectral.u.to_real();
  double nume = (dense.sigma - sigma_ref).square().sum() + (dense.u - u_ref).square().sum();
  double deno = sigma_ref.square().sum() + u_ref.square().sum();
  return std::sqrt(nume / deno);
}

Outcome criterion_oracle_equivalence() {
  const ModelParams p;
  bool pass = true;
  std::ostringstream d;

  // (a) Spatial: dense vs collocation on the physical-forcing route.
  const double diff16 = dense_vs_spectral_diff(16, p);
  const double diff32 = dense_vs_spectral_diff(32, p);
  const double space_order = std::log2(diff16 / diff32);
  pass = pass && diff16 <= kOracleAgreement && space_order >= kSpatialOrderFloor;
  d << "dense diff " << num(diff16) << " at n=16, refinement order " << num(space_order);

  // (b) Temporal, free evolution: one spectral mode against the matrix
  // exponential of its coupled block.
  {
    const Grid<double> g(1, 16, 2 * double(EIGEN_PI));
    const Background bg = uniform_background(g, p);
    const double amp = 1e-3, t_final = 0.5;
    const double N = double(g.total_modes());

    State initial(bg.rho, bg.m, 0.0);
    initial.rho.coeffs()(1, 0) += amp * N / 2;
    initial.rho.coeffs()(g.n() - 1, 0) += amp * N / 2;
    initial.m.coeffs()(1, 0) = std::complex<double>(0, -amp * N / 2);
    initial.m.coeffs()(g.n() - 1, 0) = std::complex<double>(0, amp * N / 2);

    const ModeSystem sys(g.xi(1, 0), p);
    const Eigen::Matrix2cd exact = oracle::expm_2x2(sys.parallel_block(), t_final);
    const Eigen::Vector2cd u0(initial.rho.coeffs()(1, 0) - bg.rho.coeffs()(1, 0),
                              initial.m.coeffs()(1, 0));
    const Eigen::Vector2cd u_exact = exact * u0;

    const auto endpoint_error = [&](Scheme scheme, double dt) {
      TimeStepperConfig cfg;
      cfg.dt = dt;
      cfg.t_end = t_final;
      cfg.scheme = scheme;
      cfg.include_background_residual = false;
      cfg.include_nonlinearity = false;
      cfg.output_stride = 1 << 20;
      Field r_final(g, 1);
      const TrajectoryRecord rec = evolve(initial, bg, Forcing::none(), p, cfg,
                                          [&](const State&, const Field& r, const Field&) {
                                            r_final = r;
                                          });
      if (rec.status != RunStatus::Completed) return std::nan("");
      return std::abs(r_final.coeffs()(1, 0) - u_exact(0));
    };

    for (auto [scheme, formal] :
         {std::pair{Scheme::ImexEuler, 1.0}, std::pair{Scheme::ImexRk2, 2.0}}) {
      const double e1 = endpoint_error(scheme, 0.05);
      const double e2 = endpoint_error(scheme, 0.025);
      const double order = std::log2(e1 / e2);
      pass = pass && std::isfinite(order) && order >= formal - kTemporalOrderSlack;
      d << "; " << scheme_name(scheme) << " order " << num(order) << " want >= "
        << num(formal - kTemporalOrderSlack);
    }
  }

  // (c) Temporal, forced evolution: one forced mode against a densely sampled
  // Duhamel integral of the same coupled block.
  {
    const Grid<double> g(1, 16, 2 * double(EIGEN_PI));
    const Background bg = uniform_background(g, p);
    const double amp = 1e-6, t_end = 0.5;
    const double half = amp * double(g.total_modes()) / 2;

    Forcing forcing = Forcing::none();
    Field f(g, 1);
    f.coeffs()(1, 0) = std::complex<double>(half, 0);
    f.coeffs()(g.n() - 1, 0) = std::complex<double>(half, 0);
    forcing.F = f;
    forcing.validate(g);

    const ModeSystem sys(g.xi(1, 0), p);
    const std::complex<double> qpar(p.rho_bar * half, 0.0);
    const int ref_steps = 4000;
    std::vector<ModeForcingSample> history;
    history.reserve(ref_steps + 1);
    for (int j = 0; j <= ref_steps; ++j)
      history.push_back({t_end * double(j) / ref_steps, qpar, {0, 0}});
    const ModeState ref = duhamel_step(sys, ModeState{}, history, t_end);

    const auto endpoint_error = [&](double dt) {
      PerturbationStepper stepper(bg, forcing, p);
      PerturbationState u{Field(g, 1), Field(g, 1), 0.0};
      const int steps = int(std::lround(t_end / dt));
      for (int s = 0; s < steps; ++s) stepper.step(u, dt, Scheme::ImexRk2);
      return std::sqrt(std::norm(u.r.coeffs()(1, 0) - ref.rho) +
                       std::norm(u.M.coeffs()(1, 0) - ref.mpar));
    };

    const double e1 = endpoint_error(0.01);
    const double e2 = endpoint_error(0.005);
    const double order = std::log2(e1 / e2);
    pass = pass && order >= 2.0 - kTemporalOrderSlack;
    d << "; forced-mode order " << num(order);
  }

  Outcome o;
  o.pass = pass;
  o.detail = d.str();
  return o;
}

// ---------------------------------------------------------------------------
// 7. Inequality probes hold with their closed-form constants: the convolution
//    bound on a parameter lattice, the energy-equivalence constants on seeded
//    states, and the interpolation inequality on every propagated profile.
// ---------------------------------------------------------------------------
Outcome criterion_inequality_probes() {
  const ModelParams p;
  bool pass = true;
  std::ostringstream d;

  // (a) Convolution-type bound on a 20-point lattice, constant recomputed here.
  int lattice = 0;
  double worst_margin = 0.0;
  for (double r1 : {1.25, 1.5, 2.0, 3.0, 4.0})
    for (double frac : {0.0, 0.5})
      for (double t : {5.0, 500.0}) {
        const double r2 = frac * r1;
        const ConvProbe probe = conv_ineq_probe(r1, r2, t);
        const double closed = std::pow(2.0, r2 + 1) / (r1 - 1) * std::pow(1.0 + t, -r2);
        pass = pass && std::abs(probe.bound - closed) <= kExactTol * closed &&
               probe.integral <= probe.bound * (1 + kExactTol);
        worst_margin = std::max(worst_margin, probe.integral / probe.bound);
        ++lattice;
      }
  pass = pass && lattice == 20;
  d << lattice << " lattice points, worst integral/bound " << num(worst_margin);

  // (b) Energy-equivalence constants on seeded random states.
  {
    const Grid<double> g(2, 16, 2 * double(EIGEN_PI));
    const EnergyCoefficients c = EnergyCoefficients::standard(p);
    pass = pass && c.B0 == 0.25 && c.B1 == 2.25;
    int inside = 0;
    for (int seed = 0; seed < 100; ++seed) {
      const Field r = random_band_field(g, 1000 + std::uint64_t(seed), 1, 0.05, 4);
      const Field w = random_band_field(g, 2000 + std::uint64_t(seed), 2, 0.05, 4);
      const double N = energy_N(r, w, p);
      const double X = sobolev_norm_squared(r, 4) + sobolev_norm_squared(w, 3);
      if (N >= (c.a[3] / 4) * c.B0 * X * (1 - 1e-9) && N <= 2 * c.a[0] * c.B1 * X * (1 + 1e-9))
        ++inside;
    }
    pass = pass && inside == 100;
    d << "; equivalence held on " << inside << "/100 states";
  }

  // (c) Interpolation inequality on every propagated borderline profile.
  {
    const std::vector<double> times = default_time_grid(1e-2, 1000.0, 41);
    int checked = 0, held = 0;
    for (double s : {0.0, 0.5, 1.0, 1.4}) {
      const ProfileClass data = borderline_class(s);
      const RadialGrid grid = profile_grid(data, 1e-6, 1e3, 2049);
      const RadialSolution u0 = initial_solution(sample_profile(data, grid));
      for (double t : times) {
        const RadialSolution ut = t > 0 ? propagate_radial(u0, p, t) : u0;
        for (int l : {0, 1}) {
          const RadialInterpolation chk = radial_interpolation_check(ut, l, s, kMonotoneSlack);
          ++checked;
          if (chk.ok) ++held;
        }
      }
    }
    pass = pass && checked > 0 && held == checked;
    d << "; interpolation held on " << held << "/" << checked << " snapshots";
  }

  Outcome o;
  o.pass = pass;
  o.detail = d.str();
  return o;
}

// ---------------------------------------------------------------------------
// 8. Seeded runs reproduce bitwise-identical artifacts, and the executable
//    honors its exit-code contract.
// ---------------------------------------------------------------------------
int run_cli(const std::string& command) {
  const int rc = std::system(command.c_str());
  if (rc == -1) return -1;
  if (WIFEXITED(rc)) return WEXITSTATUS(rc);
  return -2;
}

std::map<std::string, std::string> dir_contents(const fs::path& root) {
  std::map<std::string, std::string> out;
  for (const auto& entry : fs::recursive_directory_iterator(root)) {
    if (!entry.is_regular_file()) continue;
    std::ifstream in(entry.path(), std::ios::binary);
    std::ostringstream bytes;
    bytes << in.rdbuf();
    out[fs::relative(entry.path(), root).generic_string()] = bytes.str();
  }
  return out;
}

Outcome criterion_determinism(const fs::path& cli, const fs::path& configs) {
  const fs::path scratch = fs::temp_directory_path() / "qns-acceptance";
  std::error_code ec;
  fs::remove_all(scratch, ec);
  fs::create_directories(scratch);

  std::vector<fs::path> cfgs;
  for (const auto& entry : fs::directory_iterator(configs))
    if (entry.path().extension() == ".cfg") cfgs.push_back(entry.path());
  std::sort(cfgs.begin(), cfgs.end());

  bool pass = !cfgs.empty();
  std::ostringstream d;
  int identical = 0;
  for (const auto& cfg : cfgs) {
    const std::string kind = Config::load(cfg).get_string("run.kind");
    std::array<fs::path, 2> outs;
    bool ran = true;
    for (int i = 0; i < 2; ++i) {
      outs[size_t(i)] = scratch / (cfg.stem().string() + (i ? "-b" : "-a"));
      const std::string log = outs[size_t(i)].string() + ".log";
      const std::string cmd = "\"" + cli.string() + "\" " + kind + " --config \"" +
                              cfg.string() + "\" --out-dir \"" + outs[size_t(i)].string() +
                              "\" --threads 1 > \"" + log + "\" 2>&1";
      const int code = run_cli(cmd);
      if (code != 0) {
        pass = false;
        ran = false;
        d << cfg.stem().string() << " exited " << code << "; ";
      }
    }
    if (!ran) continue;
    const auto a = dir_contents(outs[0]);
    const auto b = dir_contents(outs[1]);
    if (!a.empty() && a == b) {
      ++identical;
    } else {
      pass = false;
      d << cfg.stem().string() << " artifacts differ; ";
    }
  }
  d << identical << "/" << cfgs.size() << " configs bitwise-identical";

  // Exit-code contract: bad config -> 2, injected check failure -> 1,
  // solver abort -> 3.
  {
    const std::string missing = (configs / "does-not-exist.cfg").string();
    const int code = run_cli("\"" + cli.string() + "\" stationary --config \"" + missing +
                             "\" --out-dir \"" + (scratch / "missing").string() +
                             "\" > /dev/null 2>&1");
    pass = pass && code == 2;
    d << "; missing config -> " << code;
  }
  {
    const fs::path cfg = scratch / "fault.cfg";
    std::ofstream(cfg) << "[check]\ninject_fault = true\n[run]\nseed = 1\nthreads = 1\n";
    const int code = run_cli("\"" + cli.string() + "\" check --config \"" + cfg.string() +
                             "\" --out-dir \"" + (scratch / "fault").string() +
                             "\" > /dev/null 2>&1");
    pass = pass && code == 1;
    d << ", injected fault -> " << code;
  }
  {
    const fs::path cfg = scratch / "abort.cfg";
    std::ofstream(cfg) << "[grid]\ndim = 2\nn = 16\nbox_length = 6.283185307179586\n"
                          "[forcing]\nkind = none\n"
                          "[evolve]\ndt = 0.01\nt_end = 1.0\ndelta = 50.0\nband = 2\n"
                          "[run]\nseed = 3\nthreads = 1\n";
    const int code = run_cli("\"" + cli.string() + "\" evolve --config \"" + cfg.string() +
                             "\" --out-dir \"" + (scratch / "abort").string() +
                             "\" > /dev/null 2>&1");
    pass = pass && code == 3;
    d << ", huge perturbation -> " << code;
  }

  Outcome o;
  o.pass = pass;
  o.detail = d.str();
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  fs::path cli, configs;
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    if (arg == "--cli" && i + 1 < argc) {
      cli = argv[++i];
    } else if (arg == "--configs" && i + 1 < argc) {
      configs = argv[++i];
    } else {
      std::fprintf(stderr, "usage: acceptance --cli <binary> --configs <dir>\n");
      return 2;
    }
  }
  if (cli.empty() || configs.empty() || !fs::exists(cli) || !fs::is_directory(configs)) {
    std::fprintf(stderr, "usage: acceptance --cli <binary> --configs <dir>\n");
    return 2;
  }

  struct Criterion {
    int number;
    const char* label;
    std::function<Outcome()> fn;
  };
  const std::vector<Criterion> criteria{
      {1, "manufactured solutions recovered to 1e-8 in H2", criterion_manufactured_recovery},
      {2, "outer iteration contracts onto a tiny-residual steady state", criterion_contraction},
      {3, "perturbed steady states stay bounded and scale linearly", criterion_stability},
      {4, "negative-order data decays at the predicted rates", criterion_decay_exponents},
      {5, "integrable-data proxy decays at the predicted rates", criterion_integrable_proxy},
      {6, "independent oracles agree with the solvers at their orders",
       criterion_oracle_equivalence},
      {7, "inequality probes hold with their closed-form constants",
       criterion_inequality_probes},
      {8, "seeded runs reproduce bitwise-identical artifacts",
       [&] { return criterion_determinism(cli, configs); }},
  };

  bool all = true;
  for (const auto& c : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.fn();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("exception: ") + e.what();
    }
    const double secs = seconds_since(t0);
    std::printf("[%s] %d. %s (%s; %.1f s)\n", o.pass ? "PASS" : "FAIL", c.number, c.label,
                o.detail.c_str(), secs);
    std::fflush(stdout);
    all = all && o.pass;
  }
  return all ? 0 : 1;
}
