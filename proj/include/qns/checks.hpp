#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "qns/config.hpp"
#include "qns/energy.hpp"
#include "qns/evolution.hpp"
#include "qns/forcing_profiles.hpp"
#include "qns/model.hpp"
#include "qns/norms.hpp"
#include "qns/operators.hpp"
#include "qns/oracle.hpp"
#include "qns/probes.hpp"
#include "qns/random_fields.hpp"
#include "qns/semigroup.hpp"
#include "qns/stationary.hpp"

// ---------------------------------------------------------------------------
// Seeded property-check suite.
//
// One registry backs both the `check` run kind and the test binaries: each
// check regenerates its data from the given seed and throws (with a message)
// on violation. Checks are chosen to be fast (< a second each) mirrors of
// the module-level invariants; the heavyweight studies live in the tests.
// ---------------------------------------------------------------------------

namespace qns::checks {

struct CheckFailure : Error {
  using Error::Error;
};

inline void require(bool ok, const std::string& message) {
  if (!ok) throw CheckFailure(message);
}

struct Check {
  std::string name;
  std::function<void(std::uint64_t)> run;
};

struct CheckResult {
  std::string name;
  bool passed = false;
  std::string detail;  // failure message, empty on pass
};

class Suite {
 public:
  void add(std::string name, std::function<void(std::uint64_t)> run) {
    checks_.push_back(Check{std::move(name), std::move(run)});
  }
  const std::vector<Check>& all() const { return checks_; }

 private:
  std::vector<Check> checks_;
};

// Runs every check whose name contains `filter` (empty = all).
inline std::vector<CheckResult> run_suite(const Suite& suite, std::uint64_t seed,
                                          const std::string& filter = "") {
  std::vector<CheckResult> results;
  for (const auto& c : suite.all()) {
    if (!filter.empty() && c.name.find(filter) == std::string::npos) continue;
    CheckResult r;
    r.name = c.name;
    try {
      c.run(seed);
      r.passed = true;
    } catch (const std::exception& e) {
      r.passed = false;
      r.detail = e.what();
    }
    results.push_back(std::move(r));
  }
  return results;
}

namespace detail {

inline double rel_diff(double a, double b) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-300});
}

inline double rel_field_diff(const Field& a, const Field& b) {
  return l2_norm(a - b) / std::max(l2_norm(b), 1e-300);
}

inline Field constant_field(const Grid<double>& g, double value) {
  Field f(g, 1);
  f.coeffs()(0, 0) = std::complex<double>(value * double(g.total_modes()), 0);
  return f;
}

}  // namespace detail

// The standard registry. `inject_fault` appends a deliberately failing check
// so the error path of the runner stays exercised end to end.
inline Suite default_suite(bool inject_fault = false) {
  Suite s;

  // --- transform layer -----------------------------------------------------
  s.add("spectral.roundtrip", [](std::uint64_t seed) {
    const Grid<double> g(2, 16, 2 * M_PI);
    const Field f = random_band_field(g, seed + 1, 2);
    const Field back = Field::from_real(g, f.to_real());
    require(detail::rel_field_diff(back, f) < 1e-12, "real/spectral round trip drifted");
  });

  s.add("spectral.parseval", [](std::uint64_t seed) {
    const Grid<double> g(2, 16, 5.0);
    const Field f = random_band_field(g, seed + 2, 1);
    const double real_side = g.cell_volume() * f.to_real().col(0).square().sum();
    const double fourier_side = l2_norm_squared(f);
    require(detail::rel_diff(real_side, fourier_side) < 1e-12,
            "Parseval identity violated: " + std::to_string(real_side) + " vs " +
                std::to_string(fourier_side));
  });

  s.add("spectral.multipliers_commute", [](std::uint64_t seed) {
    const Grid<double> g(2, 16, 3.0);
    const Field f = random_band_field(g, seed + 3, 1);
    const Field ab = derivative(derivative(f, 0, 1), 1, 1);
    const Field ba = derivative(derivative(f, 1, 1), 0, 1);
    require(l2_norm(ab - ba) <= 1e-12 * std::max(l2_norm(ab), 1e-300),
            "derivative multipliers do not commute");
    const Field al = derivative(laplacian(f), 0, 1);
    const Field la = laplacian(derivative(f, 0, 1));
    require(l2_norm(al - la) <= 1e-12 * std::max(l2_norm(al), 1e-300),
            "laplacian and derivative do not commute");
  });

  s.add("spectral.leray_idempotent", [](std::uint64_t seed) {
    const Grid<double> g(2, 16, 2 * M_PI);
    const Field v = random_band_field(g, seed + 4, 2);
    const auto [sol, pot] = leray_decompose(v);
    const auto [sol2, pot2] = leray_decompose(sol);
    require(detail::rel_field_diff(sol2, sol) < 1e-12, "Leray projector is not idempotent");
    require(l2_norm(pot2) <= 1e-12 * std::max(l2_norm(v), 1e-300),
            "solenoidal part still carries a gradient component");
    require(std::abs(inner_product(sol, pot)) <=
                1e-12 * std::max(l2_norm_squared(v), 1e-300),
            "Leray parts are not orthogonal");
  });

  // --- model ----------------------------------------------------------------
  s.add("model.mass_conservation", [](std::uint64_t seed) {
    const Grid<double> g(2, 16, 2 * M_PI);
    const ModelParams params;
    const Field dr = random_band_field(g, seed + 5, 1, 0.2);
    const State st{dr + detail::constant_field(g, params.rho_bar),
                   random_band_field(g, seed + 6, 2, 0.1), 0.0};
    const Rhs rhs = nonlinear_rhs(st, Forcing::none(), params);
    const double mass_rate = std::abs(rhs.drho_dt.mean(0)) * g.volume();
    require(mass_rate <= 1e-12 * std::max(1.0, l2_norm(rhs.drho_dt)),
            "mass is not conserved with zero source: rate " + std::to_string(mass_rate));
  });

  s.add("model.bohm_constant_zero", [](std::uint64_t) {
    const Grid<double> g(2, 16, 2 * M_PI);
    const ModelParams params;
    const Field rho = detail::constant_field(g, params.rho_bar);
    require(l2_norm(bohm_force(rho, params)) <= 1e-14,
            "quantum force of a constant density is nonzero");
  });

  s.add("model.bohm_paths_agree", [](std::uint64_t seed) {
    const Grid<double> g(2, 32, 2 * M_PI);
    const ModelParams params;
    const Field rho = random_band_field(g, seed + 7, 1, 0.2, 4) +
                      detail::constant_field(g, params.rho_bar);
    const Field a = bohm_force(rho, params, BohmPath::Expanded);
    const Field b = bohm_force(rho, params, BohmPath::SquareRoot);
    require(detail::rel_field_diff(a, b) < 1e-7,
            "expanded and square-root quantum-force routes disagree");
  });

  // --- stationary -----------------------------------------------------------
  s.add("stationary.zero_forcing_trivial", [](std::uint64_t) {
    const Grid<double> g(2, 16, 2 * M_PI);
    const StationarySolution sol = fixed_point(g, Forcing::none(), ModelParams{});
    require(sol.iterations == 1, "zero forcing should converge immediately");
    require(l2_norm(sol.sigma_star) + l2_norm(sol.u_star) <= 1e-14,
            "zero forcing produced a nontrivial state");
  });

  s.add("stationary.small_bump_contracts", [](std::uint64_t) {
    const Grid<double> g(2, 32, 2 * M_PI);
    ForcingProfile profile;
    profile.amplitude_g = 1e-3;
    profile.amplitude_f = 1e-3;
    const Forcing forcing = make_forcing(g, profile);
    const StationarySolution sol = fixed_point(g, forcing, ModelParams{});
    for (size_t i = 1; i < sol.contraction_ratios.size(); ++i)
      require(sol.contraction_ratios[i] < 1.0, "contraction ratio reached 1");
    require(sol.residual_continuity + sol.residual_momentum <= 1e-7 * 1e-3,
            "stationary residuals exceed the amplitude-scaled budget");
  });

  // --- evolution ------------------------------------------------------------
  s.add("evolution.mass_per_step", [](std::uint64_t seed) {
    const Grid<double> g(2, 16, 2 * M_PI);
    const ModelParams params;
    const PerturbationStepper stepper(uniform_background(g, params), Forcing::none(),
                                      params);
    PerturbationState u{random_band_field(g, seed + 8, 1, 1e-3),
                        random_band_field(g, seed + 9, 2, 1e-3), 0.0};
    const auto mass0 = u.r.zero_mode(0);
    for (int k = 0; k < 5; ++k) stepper.step(u, 1e-2, Scheme::ImexRk2);
    require(std::abs(u.r.zero_mode(0) - mass0) <=
                1e-12 * std::max(std::abs(mass0), 1.0),
            "zero mode of the density perturbation moved across steps");
  });

  s.add("evolution.linear_mode_order", [](std::uint64_t) {
    const Grid<double> g(1, 16, 2 * M_PI);
    const ModelParams params;
    const PerturbationStepper stepper(uniform_background(g, params), Forcing::none(),
                                      params, false, false);
    const double amp = 1e-3, t_end = 0.5;
    Field::Spectral rc = Field::Spectral::Zero(g.total_modes(), 1);
    Field::Spectral mc = Field::Spectral::Zero(g.total_modes(), 1);
    const double half = amp * double(g.total_modes()) / 2;
    rc(1, 0) = half;
    rc(g.total_modes() - 1, 0) = half;
    mc(1, 0) = std::complex<double>(0, half);
    mc(g.total_modes() - 1, 0) = std::complex<double>(0, -half);
    const Field r0 = Field::from_spectral(g, rc), m0 = Field::from_spectral(g, mc);

    const ModeSystem sys(g.xi(1, 0), params);
    const Eigen::Matrix2cd exact_p = oracle::expm_2x2(sys.parallel_block(), t_end);
    const Eigen::Vector2cd exact =
        exact_p * Eigen::Vector2cd(rc(1, 0), mc(1, 0));

    const auto run_error = [&](double dt) {
      PerturbationState u{r0, m0, 0.0};
      const int steps = int(std::lround(t_end / dt));
      for (int k = 0; k < steps; ++k) stepper.step(u, dt, Scheme::ImexRk2);
      return std::abs(u.r.coeffs()(1, 0) - exact(0)) +
             std::abs(u.M.coeffs()(1, 0) - exact(1));
    };
    const double e1 = run_error(0.05), e2 = run_error(0.025);
    const double order = std::log2(e1 / e2);
    require(order >= 1.7, "two-stage stepper order " + std::to_string(order) + " < 1.7");
  });

  // --- semigroup ------------------------------------------------------------
  s.add("semigroup.propagator_group", [](std::uint64_t) {
    const ModeSystem sys(1.3, ModelParams{});
    const Eigen::Matrix2cd a = sys.propagator(0.7) * sys.propagator(0.4);
    const Eigen::Matrix2cd b = sys.propagator(1.1);
    require((a - b).norm() <= 1e-12 * std::max(b.norm(), 1e-300),
            "semigroup property E(t+s) = E(t)E(s) violated");
  });

  s.add("semigroup.quadrature_certified", [](std::uint64_t) {
    const RadialGrid grid(1e-6, 1e3, 4097);  // certifies on construction
    const double r0 = 2.0;
    Eigen::ArrayXd samples(grid.nodes());
    for (Eigen::Index i = 0; i < grid.nodes(); ++i) {
      const double r = grid.r(i);
      samples(i) = 4 * M_PI * r * r * std::exp(-(r * r) / (r0 * r0));
    }
    const double exact = std::pow(M_PI, 1.5) * r0 * r0 * r0;
    require(detail::rel_diff(grid.integrate(samples), exact) < 1e-8,
            "radial quadrature missed a Gaussian integral");
  });

  s.add("semigroup.interpolation_inequality", [](std::uint64_t) {
    const ModelParams params;
    const double s_reg = 0.5;
    const auto cls = borderline_class(s_reg);
    const RadialGrid grid = profile_grid(cls);
    const auto u0 = initial_solution(sample_profile(cls, grid));
    for (double t : {0.0, 1.0, 10.0}) {
      const auto ut = propagate_radial(u0, params, t);
      const auto check = radial_interpolation_check(ut, 0, s_reg);
      require(check.ok, "derivative interpolation inequality failed at t = " +
                            std::to_string(t));
    }
  });

  // --- norm / energy machinery ----------------------------------------------
  s.add("analysis.sobolev_monotone_k", [](std::uint64_t seed) {
    const Grid<double> g(2, 16, 2 * M_PI);
    const Field f = random_band_field(g, seed + 10, 1);
    for (int k = 1; k <= 4; ++k)
      require(sobolev_norm(f, k) >= sobolev_norm(f, k - 1) * (1 - 1e-12),
              "H^k norm decreased in k");
  });

  s.add("analysis.hneg_monotone_s", [](std::uint64_t seed) {
    const Grid<double> g(2, 16, 2 * M_PI);  // L = 2 pi: every nonzero mode has |xi| >= 1
    const Field f = random_band_field(g, seed + 11, 1);
    double prev = neg_sobolev_norm(f, 0.0);
    for (double s_reg : {0.5, 1.0, 1.4}) {
      const double cur = neg_sobolev_norm(f, s_reg);
      require(cur <= prev * (1 + 1e-12), "H^{-s} norm increased in s");
      prev = cur;
    }
  });

  s.add("analysis.energy_equivalence", [](std::uint64_t seed) {
    const Grid<double> g(2, 16, 2 * M_PI);
    const ModelParams params;
    const EnergyCoefficients c = EnergyCoefficients::standard(params);
    for (int rep = 0; rep < 5; ++rep) {
      const Field r = random_band_field(g, seed + 100 + std::uint64_t(rep), 1, 0.2);
      const Field w = random_band_field(g, seed + 200 + std::uint64_t(rep), 2, 0.2);
      const double n = energy_N(r, w, params);
      const double norm2 = sobolev_norm_squared(r, 4) + sobolev_norm_squared(w, 3);
      require(n >= c.a[3] / 4 * c.B0 * norm2 * (1 - 1e-10),
              "energy functional fell below its equivalence floor");
      require(n <= 2 * c.a[0] * c.B1 * norm2 * (1 + 1e-10),
              "energy functional exceeded its equivalence ceiling");
    }
  });

  s.add("analysis.interpolation_identity", [](std::uint64_t seed) {
    const Grid<double> g(2, 16, 2 * M_PI);
    const Field f = random_band_field(g, seed + 12, 1);
    for (double s_reg : {0.5, 1.0}) {
      const auto chk = interpolation_check(f, 1, s_reg);
      require(chk.lhs <= chk.rhs * (1 + 1e-6), "derivative interpolation bound violated");
    }
  });

  s.add("analysis.fit_rescale_invariant", [](std::uint64_t) {
    NormSeries a(std::vector<std::string>{"v"}), b(std::vector<std::string>{"v"});
    for (int i = 0; i <= 40; ++i) {
      const double t = 0.5 * i;
      const double v = 3.0 * std::pow(1 + t, -0.75);
      a.add_row(t, {v});
      b.add_row(t, {v * 17.0});
    }
    const DecayFit fa = fit_decay(a, "v", 1.0, 20.0, -0.75);
    const DecayFit fb = fit_decay(b, "v", 1.0, 20.0, -0.75);
    require(std::abs(fa.slope - fb.slope) < 1e-12, "decay slope changed under rescaling");
  });

  // --- references -----------------------------------------------------------
  s.add("oracle.expm_matches_closed_form", [](std::uint64_t seed) {
    std::mt19937_64 rng(seed + 13);
    const auto unit = [&rng]() { return 2.0 * (double(rng() >> 11) * 0x1.0p-53) - 1.0; };
    for (int rep = 0; rep < 10; ++rep) {
      const ModeSystem sys(0.3 + std::abs(unit()) * 3.0, ModelParams{});
      const double t = std::abs(unit()) * 5.0;
      const Eigen::Matrix2cd a = oracle::expm_2x2(sys.parallel_block(), t);
      const Eigen::Matrix2cd b = sys.propagator(t);
      require((a - b).norm() <= 1e-10 * std::max(b.norm(), 1e-300),
              "matrix exponential reference disagrees with the closed form");
    }
  });

  // --- io -------------------------------------------------------------------
  s.add("io.config_hash_canonical", [](std::uint64_t) {
    const Config a = Config::parse("[grid]\nn = 16\ndim = 2\n");
    const Config b = Config::parse("[grid]\n# comment\ndim = 2\nn = 16\n");
    const Config c = Config::parse("[grid]\nn = 32\ndim = 2\n");
    require(a.hash() == b.hash(), "config hash depends on formatting");
    require(a.hash() != c.hash(), "config hash missed a value change");
  });

  if (inject_fault)
    s.add("fault.injected", [](std::uint64_t) {
      throw CheckFailure("deliberate failure requested by configuration");
    });

  return s;
}

}  // namespace qns::checks
