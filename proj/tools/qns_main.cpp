// Command-line driver: four run kinds (stationary | evolve | decay | check)
// turning a flat config file into deterministic artifacts in an output
// directory. Exit codes: 0 success, 1 check/verdict failure, 2 usage or
// configuration error, 3 solver abort.

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "qns/checks.hpp"
#include "qns/config.hpp"
#include "qns/energy.hpp"
#include "qns/evolution.hpp"
#include "qns/forcing_profiles.hpp"
#include "qns/io.hpp"
#include "qns/model.hpp"
#include "qns/oracle.hpp"
#include "qns/random_fields.hpp"
#include "qns/semigroup.hpp"
#include "qns/stationary.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

using namespace qns;

// Values rejected by the library while building objects straight from the
// config are configuration errors (exit 2), not solver aborts.
template <typename Fn>
auto config_guard(const char* what, Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const DomainError& e) {
    throw ConfigError(std::string(what) + ": " + e.what());
  }
}

Grid<double> grid_from(const Config& cfg) {
  return config_guard("[grid]", [&] {
    return Grid<double>(int(cfg.get_int("grid.dim", 2)),
                        Eigen::Index(cfg.get_int("grid.n", 32)),
                        cfg.get_double("grid.box_length", 2 * M_PI));
  });
}

ModelParams params_from(const Config& cfg) {
  ModelParams p;
  p.mu = cfg.get_double("model.mu", p.mu);
  p.lambda = cfg.get_double("model.lambda", p.lambda);
  p.hbar = cfg.get_double("model.hbar", p.hbar);
  p.gamma = cfg.get_double("model.gamma", p.gamma);
  p.rho_bar = cfg.get_double("model.rho_bar", p.rho_bar);
  p.rho_floor = cfg.get_double("model.rho_floor", p.rho_floor);
  config_guard("[model]", [&] {
    p.validate();
    return 0;
  });
  return p;
}

Forcing forcing_from(const Config& cfg, const Grid<double>& g) {
  const std::string kind = cfg.get_string("forcing.kind", "none");
  if (kind == "none") return Forcing::none();
  ForcingProfile profile;
  profile.kind = ForcingProfile::parse_kind(kind);
  profile.amplitude_g = cfg.get_double("forcing.amplitude_g", 0.0);
  profile.amplitude_f = cfg.get_double("forcing.amplitude_f", 0.0);
  profile.width = cfg.get_double("forcing.width", 1.0);
  profile.axis = int(cfg.get_int("forcing.axis", 0));
  profile.center[0] = cfg.get_double("forcing.center_x", std::nan(""));
  profile.center[1] = cfg.get_double("forcing.center_y", 0.0);
  profile.center[2] = cfg.get_double("forcing.center_z", 0.0);
  return config_guard("[forcing]", [&] { return make_forcing(g, profile); });
}

StationaryOptions stationary_options_from(const Config& cfg) {
  StationaryOptions o;
  o.inner_tol = cfg.get_double("stationary.inner_tol", o.inner_tol);
  o.outer_tol = cfg.get_double("stationary.outer_tol", o.outer_tol);
  o.residual_target = cfg.get_double("stationary.residual_target", o.residual_target);
  o.max_inner = int(cfg.get_int("stationary.max_inner", o.max_inner));
  o.max_outer = int(cfg.get_int("stationary.max_outer", o.max_outer));
  o.compat_tol = cfg.get_double("stationary.compat_tol", o.compat_tol);
  o.epsilon_threshold = cfg.get_double("stationary.epsilon_threshold", o.epsilon_threshold);
  return o;
}

json fit_to_json(const DecayFit& f) {
  return json{{"slope", f.slope},
              {"intercept", f.intercept},
              {"rms", f.rms},
              {"samples", f.samples},
              {"bootstrap_ratio", f.bootstrap_ratio},
              {"bootstrap_monotone", f.bootstrap_monotone}};
}

json hypothesis_to_json(const HypothesisReport& h) {
  return json{{"K0", h.K0},
              {"K", h.K},
              {"L1_weighted_G", h.L1_weighted_G},
              {"epsilon_estimate", h.epsilon_estimate},
              {"small", h.small},
              {"complete", h.complete}};
}

// ---------------------------------------------------------------------------

int run_stationary(const Config& cfg, const fs::path& out, std::uint64_t) {
  const Grid<double> g = grid_from(cfg);
  const ModelParams params = params_from(cfg);
  const Forcing forcing = forcing_from(cfg, g);
  const StationaryOptions opts = stationary_options_from(cfg);
  const std::string hash = cfg.hash_hex();

  NdjsonWriter log(out / "iterations.ndjson", hash);
  const IterationSink sink = [&log](const OuterIterationRecord& rec) {
    log.record(json{{"iteration", rec.iteration},
                    {"diff_h2", rec.diff_h2},
                    {"ratio", rec.ratio},
                    {"residual_continuity", rec.residual_continuity},
                    {"residual_momentum", rec.residual_momentum},
                    {"sigma_h2", rec.sigma_h2},
                    {"u_h2", rec.u_h2},
                    {"compat_defect_R", rec.compat_defect_R},
                    {"compat_defect_f", rec.compat_defect_f},
                    {"inner_iterations", rec.inner_iterations}});
  };

  const StationarySolution sol = fixed_point(g, forcing, params, opts, sink);
  log.flush();

  write_snapshot(out / "sigma_star", sol.sigma_star, hash);
  write_snapshot(out / "u_star", sol.u_star, hash);
  write_json(out / "hypothesis.json", hypothesis_to_json(sol.norm_report.hypothesis), hash);

  json summary;
  summary["iterations"] = sol.iterations;
  summary["contraction_ratios"] = sol.contraction_ratios;
  summary["residual_continuity"] = sol.residual_continuity;
  summary["residual_momentum"] = sol.residual_momentum;
  summary["sigma_h2"] = sobolev_norm(sol.sigma_star, 2);
  summary["u_h2"] = sobolev_norm(sol.u_star, 2);
  summary["norm_report"] = json{{"I4", sol.norm_report.I4},
                                {"J5", sol.norm_report.J5},
                                {"I4_resolution_warning", sol.norm_report.I4_resolution_warning},
                                {"J5_resolution_warning", sol.norm_report.J5_resolution_warning},
                                {"V1_weighted_linf", sol.norm_report.V1_weighted_linf},
                                {"V2_weighted_l1", sol.norm_report.V2_weighted_l1}};
  write_json(out / "summary.json", summary, hash);
  return 0;
}

// ---------------------------------------------------------------------------

int run_evolve(const Config& cfg, const fs::path& out, std::uint64_t seed) {
  const Grid<double> g = grid_from(cfg);
  const ModelParams params = params_from(cfg);
  const Forcing forcing = forcing_from(cfg, g);
  const std::string hash = cfg.hash_hex();

  // Background: a stationary snapshot pair (written by the stationary run
  // kind) or the uniform rest state.
  Background bg = uniform_background(g, params);
  if (cfg.has("evolve.snapshot_stem")) {
    const std::string stem = cfg.get_string("evolve.snapshot_stem");
    Field sigma_star = Field(g, 1), u_star = Field(g, g.dim());
    try {
      sigma_star = read_snapshot(fs::path(stem + "_sigma"));
      u_star = read_snapshot(fs::path(stem + "_u"));
    } catch (const IoError& e) {
      throw ConfigError(std::string("evolve.snapshot_stem: ") + e.what());
    }
    if (!(sigma_star.grid() == g) || !(u_star.grid() == g))
      throw ConfigError("stationary snapshot grid does not match [grid]");
    bg = background_from_stationary(sigma_star, u_star, params);
  }

  TimeStepperConfig tcfg;
  tcfg.dt = cfg.get_double("evolve.dt", tcfg.dt);
  tcfg.t_end = cfg.get_double("evolve.t_end", tcfg.t_end);
  tcfg.scheme = parse_scheme(cfg.get_string("evolve.scheme", "imex-rk2"));
  tcfg.cfl_safety = cfg.get_double("evolve.cfl_safety", tcfg.cfl_safety);
  tcfg.output_stride = int(cfg.get_int("evolve.output_stride", tcfg.output_stride));
  tcfg.include_background_residual =
      cfg.get_bool("evolve.include_background_residual", tcfg.include_background_residual);
  tcfg.include_nonlinearity =
      cfg.get_bool("evolve.include_nonlinearity", tcfg.include_nonlinearity);
  tcfg.max_initial_norm = cfg.get_double("evolve.max_initial_norm", tcfg.max_initial_norm);
  tcfg.min_dt = cfg.get_double("evolve.min_dt", tcfg.min_dt);

  // Initial data: background plus a seeded band-limited perturbation scaled
  // to the requested size in the working norm (delta = 0: rest exactly).
  const double delta = cfg.get_double("evolve.delta", 0.0);
  State initial{bg.rho, bg.m, 0.0};
  if (delta > 0) {
    const auto band = Eigen::Index(cfg.get_int("evolve.band", 3));
    Field r = random_band_field(g, seed + 1, 1, 1.0, band);
    Field w = random_band_field(g, seed + 2, g.dim(), 1.0, band);
    const double n0 = norm_43(r, w);
    if (n0 <= 0) throw ConfigError("evolve.delta > 0 needs a nonzero perturbation band");
    r = (delta / n0) * r;
    w = (delta / n0) * w;
    // Perturb density and momentum consistently: m = rho * (u* + w).
    const RealSamples rho_r = bg.rho.to_real().col(0) + r.to_real().col(0);
    Field::Real m_r(g.total_modes(), g.dim());
    const Field::Real u_bg = bg.m.to_real();
    const Field::Real w_r = w.to_real();
    const RealSamples bg_rho_r = bg.rho.to_real().col(0);
    for (int a = 0; a < g.dim(); ++a)
      m_r.col(a) = rho_r * (u_bg.col(a).array() / bg_rho_r + w_r.col(a).array());
    initial.rho = bg.rho + r;
    initial.m = from_real_dealiased(g, m_r);
  }

  CsvWriter csv(out / "trajectory.csv",
                [] {
                  std::vector<std::string> cols{"t"};
                  for (const auto& c : trajectory_channels()) cols.push_back(c);
                  return cols;
                }(),
                hash);

  const TrajectoryRecord rec = evolve(initial, bg, forcing, params, tcfg);
  const std::vector<std::string> channels = trajectory_channels();
  for (std::size_t i = 0; i < rec.norms.size(); ++i) {
    std::vector<double> row{rec.norms.times()[i]};
    for (std::size_t c = 0; c < channels.size(); ++c) row.push_back(rec.norms.value(i, c));
    csv.row(row);
  }
  csv.flush();

  json summary;
  summary["status"] = run_status_name(rec.status);
  summary["abort_message"] = rec.abort_message;
  summary["steps_taken"] = rec.steps_taken;
  summary["final_dt"] = rec.final_dt;
  summary["initial_norm_43"] = rec.initial_norm_43;
  summary["sup_norm_43"] = rec.sup_norm_43;
  summary["C_emp"] =
      rec.initial_norm_43 > 0 ? rec.sup_norm_43 / rec.initial_norm_43 : 0.0;
  summary["dissipation_integral_43"] =
      rec.norms.size() > 0 ? rec.norms.value(rec.norms.size() - 1,
                                             rec.norms.channel_index("dissipation_43"))
                           : 0.0;
  if (rec.status == RunStatus::Completed && rec.norms.size() >= 2) {
    const LyapunovInputs li = lyapunov_inputs(rec);
    const LyapunovProbe probe = lyapunov_probe(li.delta_E, li.diss_high, li.diss_low);
    summary["lyapunov"] = json{{"feasible", probe.feasible}, {"C", probe.C}, {"C1", probe.C1}};
  }
  write_json(out / "stability.json", summary, hash);

  if (rec.status != RunStatus::Completed) {
    std::cerr << "evolve aborted: " << rec.abort_message << "\n";
    return 3;
  }
  return 0;
}

// ---------------------------------------------------------------------------

int run_decay(const Config& cfg, const fs::path& out, std::uint64_t) {
  const ModelParams params = params_from(cfg);
  const std::string hash = cfg.hash_hex();
  const double s = cfg.get_double("decay.s");
  if (!(s >= 0 && s < 1.5))
    throw ConfigError("decay.s must lie in [0, 1.5), got " + std::to_string(s));

  const PropagatorKind kind = cfg.get_string("decay.kind", "full") == "heat"
                                  ? PropagatorKind::HeatKernel
                                  : PropagatorKind::FullSystem;
  const std::vector<double> t_grid =
      default_time_grid(cfg.get_double("decay.t_min", 1e-2),
                        cfg.get_double("decay.t_max", 1e3),
                        int(cfg.get_int("decay.points", 161)));
  const double r_min = cfg.get_double("decay.r_min", 1e-6);
  const auto nodes = Eigen::Index(cfg.get_int("decay.nodes", 4097));
  const double slope_tol = cfg.get_double("decay.slope_tol", 0.07);

  const HsDecayRun run = hs_negative_decay_run(s, params, t_grid, kind, r_min, nodes);

  CsvWriter csv(out / "decay.csv", {"t", "L2", "grad_L2", "Hminus_s"}, hash);
  for (std::size_t i = 0; i < run.series.size(); ++i)
    csv.row({run.series.times()[i], run.series.value(i, 0), run.series.value(i, 1),
             run.series.value(i, 2)});
  csv.flush();

  json summary;
  summary["s"] = s;
  summary["slope_L2"] = run.slope_L2;
  summary["slope_grad"] = run.slope_grad;
  summary["theory_L2"] = -s / 2;
  summary["theory_grad"] = -(1 + s) / 2;
  summary["fit_L2"] = fit_to_json(run.fit_L2);
  summary["fit_grad"] = fit_to_json(run.fit_grad);
  summary["hneg_monotone"] = run.hneg_monotone;
  summary["hneg_worst_ratio"] = run.hneg_worst_ratio;
  const bool l2_ok = std::abs(run.slope_L2 - (-s / 2)) <= slope_tol;
  const bool grad_ok = std::abs(run.slope_grad - (-(1 + s) / 2)) <= slope_tol;
  summary["verdict_L2"] = l2_ok;
  summary["verdict_grad"] = grad_ok;
  summary["verdict_hneg"] = run.hneg_monotone;
  bool all_ok = l2_ok && grad_ok && run.hneg_monotone;

  if (cfg.has("decay.p")) {
    const double p = cfg.get_double("decay.p");
    const int k = int(cfg.get_int("decay.k", 0));
    const double lp_tol = cfg.get_double("decay.lp_slope_tol", 0.05);
    const LpDecayCheck lp =
        lp_lq_decay_check(flat_class(), p, 2.0, k, t_grid, params, kind, r_min, nodes);
    const bool lp_ok = std::abs(lp.slope - lp.theory) <= lp_tol;
    summary["lp"] = json{{"p", p},
                         {"k", k},
                         {"slope", lp.slope},
                         {"refined_slope", lp.refined_slope},
                         {"theory", lp.theory},
                         {"fit", fit_to_json(lp.fit)},
                         {"verdict", lp_ok}};
    all_ok = all_ok && lp_ok;
  }

  summary["verdict"] = all_ok;
  write_json(out / "decay.json", summary, hash);
  return all_ok ? 0 : 1;
}

// ---------------------------------------------------------------------------

int run_check(const Config& cfg, const fs::path& out, std::uint64_t seed) {
  const std::string hash = cfg.hash_hex();
  const bool inject = cfg.get_bool("check.inject_fault", false);
  const std::string filter = cfg.get_string("check.filter", "");

  const checks::Suite suite = checks::default_suite(inject);
  const std::vector<checks::CheckResult> results = checks::run_suite(suite, seed, filter);

  json summary;
  summary["seed"] = seed;
  summary["filter"] = filter;
  summary["total"] = results.size();
  int failed = 0;
  json items = json::array();
  for (const auto& r : results) {
    if (!r.passed) ++failed;
    items.push_back(json{{"name", r.name}, {"passed", r.passed}, {"detail", r.detail}});
  }
  summary["failed"] = failed;
  summary["results"] = items;
  if (results.empty()) {
    summary["warning"] = "no checks matched the filter";
    std::cerr << "warning: no checks matched the filter '" << filter << "'\n";
  }
  write_json(out / "check_report.json", summary, hash);

  for (const auto& r : results)
    if (!r.passed) std::cerr << "FAIL " << r.name << ": " << r.detail << "\n";
  return failed == 0 ? 0 : 1;
}

// ---------------------------------------------------------------------------

struct CliOptions {
  std::string config_path;
  std::string out_dir;
  std::optional<std::uint64_t> seed;
  std::optional<long long> threads;
};

void write_error_artifact(const fs::path& out, const std::string& type,
                          const std::string& message, const std::string& hash) {
  try {
    write_json(out / "error.json", json{{"error_type", type}, {"message", message}}, hash);
  } catch (...) {
    // If even the error artifact cannot be written, stderr must do.
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"spectral laboratory for a viscous quantum gas on a periodic box"};
  app.require_subcommand(1);

  CliOptions opt;
  const auto add_common = [&opt](CLI::App* sub, bool config_required) {
    auto* c = sub->add_option("--config", opt.config_path, "configuration file");
    if (config_required) c->required();
    sub->add_option("--out-dir", opt.out_dir, "artifact directory");
    sub->add_option("--seed", opt.seed, "seed for randomized sweeps");
    sub->add_option("--threads", opt.threads, "worker threads (default 1)");
  };
  CLI::App* sub_stationary = app.add_subcommand("stationary", "solve for a steady state");
  CLI::App* sub_evolve = app.add_subcommand("evolve", "integrate a perturbed state in time");
  CLI::App* sub_decay = app.add_subcommand("decay", "measure semigroup decay exponents");
  CLI::App* sub_check = app.add_subcommand("check", "run the seeded property suite");
  add_common(sub_stationary, true);
  add_common(sub_evolve, true);
  add_common(sub_decay, true);
  add_common(sub_check, false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  Config cfg;
  fs::path out;
  std::string hash = Config().hash_hex();
  try {
    if (!opt.config_path.empty()) cfg = Config::load(opt.config_path);
    hash = cfg.hash_hex();

    std::string out_dir = opt.out_dir;
    if (out_dir.empty()) out_dir = cfg.get_string("run.out_dir", "");
    if (out_dir.empty())
      if (const char* env = std::getenv("QNS_OUT_DIR")) out_dir = env;
    if (out_dir.empty()) out_dir = "qns-out";
    out = fs::path(out_dir);
    ensure_directory(out);

    const std::uint64_t seed = opt.seed ? *opt.seed : cfg.get_uint("run.seed", 0);
    const long long threads = opt.threads ? *opt.threads : cfg.get_int("run.threads", 1);
    if (threads < 1) throw ConfigError("--threads must be >= 1");
    Eigen::setNbThreads(int(threads));

    if (sub_stationary->parsed()) return run_stationary(cfg, out, seed);
    if (sub_evolve->parsed()) return run_evolve(cfg, out, seed);
    if (sub_decay->parsed()) return run_decay(cfg, out, seed);
    return run_check(cfg, out, seed);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    if (!out.empty()) write_error_artifact(out, "ConfigError", e.what(), hash);
    return 2;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    if (!out.empty()) write_error_artifact(out, "SolverError", e.what(), hash);
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    if (!out.empty()) write_error_artifact(out, "InternalError", e.what(), hash);
    return 3;
  }
}
