// Command-line front end: batch runs, manufactured-solution studies,
// stability experiments, free-boundary evolution and compatibility checks.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "cpesim/config.hpp"
#include "cpesim/diagnostics.hpp"
#include "cpesim/free_boundary.hpp"
#include "cpesim/io.hpp"
#include "cpesim/stepper.hpp"
#include "cpesim/verification.hpp"

namespace fs = std::filesystem;
using namespace cpesim;

namespace {

int usage(std::ostream& out) {
  out << "usage: cpesim <run|mms|stability|fb|check> --config PATH [options]\n"
         "options:\n"
         "  --config PATH     configuration file (required)\n"
         "  --steps N         override the configured step count\n"
         "  --out DIR         override the configured output directory\n"
         "  --resume SNAPSHOT resume from a snapshot file\n"
         "environment: CPESIM_THREADS sets the worker count (default 1)\n";
  return 1;
}

struct CliArgs {
  std::string subcommand;
  std::string config_path;
  std::optional<int> steps;
  std::optional<std::string> out_dir;
  std::optional<std::string> resume;
};

std::optional<CliArgs> parse_args(int argc, char** argv) {
  if (argc < 2) return std::nullopt;
  CliArgs args;
  args.subcommand = argv[1];
  if (args.subcommand != "run" && args.subcommand != "mms" &&
      args.subcommand != "stability" && args.subcommand != "fb" &&
      args.subcommand != "check")
    return std::nullopt;
  for (int i = 2; i < argc; ++i) {
    const std::string flag = argv[i];
    auto value = [&]() -> std::optional<std::string> {
      if (i + 1 >= argc) return std::nullopt;
      return std::string(argv[++i]);
    };
    if (flag == "--config") {
      auto v = value();
      if (!v) return std::nullopt;
      args.config_path = *v;
    } else if (flag == "--steps") {
      auto v = value();
      if (!v) return std::nullopt;
      args.steps = std::stoi(*v);
    } else if (flag == "--out") {
      auto v = value();
      if (!v) return std::nullopt;
      args.out_dir = *v;
    } else if (flag == "--resume") {
      auto v = value();
      if (!v) return std::nullopt;
      args.resume = *v;
    } else {
      return std::nullopt;
    }
  }
  if (args.config_path.empty()) return std::nullopt;
  return args;
}

RunConfig load_config(const CliArgs& args) {
  std::ifstream in(args.config_path);
  if (!in) throw IoError("cannot open config: " + args.config_path);
  std::stringstream buf;
  buf << in.rdbuf();
  RunConfig config = parse_config(buf.str());
  if (args.steps) config.steps = *args.steps;
  if (args.out_dir) config.out_dir = *args.out_dir;
  if (config.mode != args.subcommand && config.mode != "run" && args.subcommand != "run")
    throw SimError(ErrorKind::Config, "config mode '" + config.mode +
                                          "' conflicts with subcommand '" +
                                          args.subcommand + "'");
  return config;
}

std::string snapshot_name(const std::string& dir, long step) {
  std::ostringstream out;
  out << dir << "/snap_" << std::setfill('0') << std::setw(6) << step << ".bin";
  return out.str();
}

int cmd_run(const CliArgs& args) {
  RunConfig config = load_config(args);
  if (config.params.regime == Regime::FreeBoundary)
    throw SimError(ErrorKind::Config, "use the fb subcommand for the free boundary");
  const Grid grid = make_grid(config.nx, config.ny, config.nz);
  const SpectralPlan plan(grid);
  fs::create_directories(config.out_dir);

  PrimState state;
  if (args.resume) {
    state = snapshot_to_state(read_snapshot(*args.resume), grid, config.params);
  } else {
    state = make_initial_state(grid, config);
  }

  std::vector<DiagnosticsRecord> records;
  DiagnosticsRecord first = diagnostics_record(plan, grid, state, config.params);
  records.push_back(first);

  long step_index = std::lround(state.time / config.params.dt);
  for (int step = 0; step < config.steps; ++step) {
    const PicardReport report = picard_advance(plan, grid, state, config.params);
    DiagnosticsRecord rec = diagnostics_record(plan, grid, state, config.params);
    rec.picard_iters = report.iterations;
    records.push_back(rec);
    ++step_index;
    if (config.snapshot_every > 0 && (step + 1) % config.snapshot_every == 0)
      write_snapshot(snapshot_name(config.out_dir, step_index), state,
                     config.params.regime);
  }
  write_snapshot(config.out_dir + "/final.bin", state, config.params.regime);
  export_diagnostics(records, config.out_dir + "/diagnostics.csv");
  const auto residuals = energy_balance_residual(records);
  std::cout << "run complete: t = " << state.time << ", mass = " << records.back().mass
            << ", energy = " << records.back().energy;
  if (!residuals.empty()) std::cout << ", energy residual = " << residuals.back();
  std::cout << "\n";
  return 0;
}

int cmd_check(const CliArgs& args) {
  RunConfig config = load_config(args);
  const Grid grid = make_grid(config.nx, config.ny, config.nz);
  const SpectralPlan plan(grid);
  const PrimState state = make_initial_state(grid, config);
  const CompatibilityReport rep = check_compatibility(plan, grid, state, config.params);
  const char* name =
      config.params.regime == Regime::GravityGamma2 ? "V1" : "h1";
  std::cout << "compatibility residual ||" << name << "||_L2 = " << rep.residual_l2
            << "\nboundary residual max|d_z v0| at z=0,1 = " << rep.boundary_residual
            << "\n";
  return 0;
}

int cmd_stability(const CliArgs& args) {
  RunConfig config = load_config(args);
  const Grid grid = make_grid(config.nx, config.ny, config.nz);
  const SpectralPlan plan(grid);
  fs::create_directories(config.out_dir);

  const PrimState base = make_initial_state(grid, config);
  const PrimState pert = perturbed_state(grid, config, config.stability_scale);
  const StabilitySeries series =
      stability_experiment(plan, grid, base, pert, config.params, config.steps);

  std::ofstream out(config.out_dir + "/stability.csv");
  if (!out) throw IoError("cannot open stability.csv");
  out << "time,surface_dist,v_dist_weighted_a,v_dist_weighted_b,v_dist,grad_dist_cum\n";
  char buf[256];
  for (size_t i = 0; i < series.time.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n",
                  series.time[i], series.surface_dist[i], series.v_dist_weighted_a[i],
                  series.v_dist_weighted_b[i], series.v_dist[i],
                  series.grad_dist_cum[i]);
    out << buf;
  }
  std::cout << "stability experiment: growth rate = " << series.growth_rate
            << ", final distance = "
            << series.surface_dist.back() + series.v_dist_weighted_a.back() +
                   series.grad_dist_cum.back()
            << "\n";
  return 0;
}

int cmd_fb(const CliArgs& args) {
  RunConfig config = load_config(args);
  if (config.params.regime != Regime::FreeBoundary)
    throw SimError(ErrorKind::Config, "fb subcommand requires regime = free_boundary");
  const Grid grid = make_grid(config.nx, config.ny, config.nz);
  const SpectralPlan plan(grid);
  fs::create_directories(config.out_dir);

  FbState state;
  if (args.resume) {
    state = snapshot_to_fb_state(read_snapshot(*args.resume), grid, config.params);
  } else {
    state = make_initial_fb_state(grid, config);
  }

  std::ofstream out(config.out_dir + "/fb_diagnostics.csv");
  if (!out) throw IoError("cannot open fb_diagnostics.csv");
  out << "time,column_mass,min_z,w_endpoint_residual,v_l2\n";
  char buf[256];
  auto emit = [&](const FbState& st) {
    const Field3 w = fb_recover_W(plan, grid, st.Z, st.v, config.params);
    const double endpoint = std::max(w.level(0).abs().maxCoeff(),
                                     w.level(grid.nz - 1).abs().maxCoeff());
    std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%.17g,%.17g,%.17g\n", st.time,
                  fb_column_mass(st.Z, config.params), st.Z.minCoeff(), endpoint,
                  norm3(grid, st.v));
    out << buf;
  };
  emit(state);
  for (int step = 0; step < config.steps; ++step) {
    state = fb_advance(plan, grid, state, config.params, config.params.dt);
    emit(state);
  }
  write_snapshot(config.out_dir + "/final.bin", state);
  std::cout << "fb run complete: t = " << state.time
            << ", column mass = " << fb_column_mass(state.Z, config.params) << "\n";
  return 0;
}

int cmd_mms(const CliArgs& args) {
  RunConfig config = load_config(args);
  const SimParams params = config.params;
  if (params.regime == Regime::FreeBoundary)
    throw SimError(ErrorKind::Config, "mms covers the channel regimes");
  fs::create_directories(config.out_dir);

  // manufactured solution: smooth, periodic, Neumann-compatible
  MmsSpec spec;
  {
    TrigAtom base; base.coeff = 1.0;
    TrigAtom s; s.coeff = 0.05; s.kx = 1; s.wt = 1.0;
    spec.surface = SymField::atom(base) + SymField::atom(s);
    TrigAtom vx; vx.coeff = 0.05; vx.ky = 1; vx.sin_y = true; vx.mz = 1; vx.wt = 1.0;
    vx.sin_t = true;
    spec.vx = SymField::atom(vx);
    TrigAtom vy; vy.coeff = 0.03; vy.kx = 1; vy.sin_x = true; vy.mz = 2; vy.wt = 0.7;
    spec.vy = SymField::atom(vy);
  }

  std::ofstream table(config.out_dir + "/mms_convergence.csv");
  if (!table) throw IoError("cannot open mms_convergence.csv");
  table << "family,scale,error\n";

  // vertical diffusion order: refine nz at small fixed dt
  std::vector<double> hs, errs;
  for (const int nz : {9, 17, 33}) {
    const Grid grid = make_grid(8, 8, nz);
    const SpectralPlan plan(grid);
    SimParams p = params;
    p.dt = 2.5e-5;
    const StepForcing forcing = make_mms_source(grid, spec, p);
    PrimState state = make_state(grid, p, spec.surface.eval_surface(grid, 0.0),
                                 {spec.vx.eval_grid(grid, 0.0),
                                  spec.vy.eval_grid(grid, 0.0)});
    const int n_steps = 400;
    state = run(plan, grid, state, p, n_steps, {}, &forcing);
    const double t = state.time;
    const VecField3 exact = {spec.vx.eval_grid(grid, t), spec.vy.eval_grid(grid, t)};
    errs.push_back(norm3(grid, state.v - exact));
    hs.push_back(grid.hz);
    table << "vertical," << grid.hz << "," << errs.back() << "\n";
  }
  const ConvergenceReport vert = convergence_order(hs, errs);

  // temporal order: z-independent spec resolved exactly in space
  MmsSpec tspec = spec;
  {
    TrigAtom vx; vx.coeff = 0.05; vx.ky = 1; vx.sin_y = true; vx.wt = 1.0; vx.sin_t = true;
    tspec.vx = SymField::atom(vx);
    TrigAtom vy; vy.coeff = 0.03; vy.kx = 1; vy.sin_x = true; vy.wt = 0.7;
    tspec.vy = SymField::atom(vy);
  }
  const Grid tgrid = make_grid(16, 16, 9);
  const SpectralPlan tplan(tgrid);
  std::vector<double> dts, terrs;
  for (const double dt : {4e-3, 2e-3, 1e-3}) {
    SimParams p = params;
    p.dt = dt;
    const StepForcing forcing = make_mms_source(tgrid, tspec, p);
    PrimState state = make_state(tgrid, p, tspec.surface.eval_surface(tgrid, 0.0),
                                 {tspec.vx.eval_grid(tgrid, 0.0),
                                  tspec.vy.eval_grid(tgrid, 0.0)});
    const int n_steps = static_cast<int>(std::lround(0.2 / dt));
    state = run(tplan, tgrid, state, p, n_steps, {}, &forcing);
    const VecField3 exact = {tspec.vx.eval_grid(tgrid, state.time),
                             tspec.vy.eval_grid(tgrid, state.time)};
    const Field2 exact_s = tspec.surface.eval_surface(tgrid, state.time);
    terrs.push_back(std::hypot(norm3(tgrid, state.v - exact),
                               norm2((state.surface_var - exact_s).eval())));
    dts.push_back(dt);
    table << "temporal," << dt << "," << terrs.back() << "\n";
  }
  const ConvergenceReport temp = convergence_order(dts, terrs);

  // horizontal spectral exactness on a band-limited field
  const Grid hgrid = make_grid(16, 16, 5);
  const SpectralPlan hplan(hgrid);
  SymField f = spec.surface * spec.surface;  // modes up to 2 on a 16-grid
  const Field2 sampled = f.eval_surface(hgrid, 0.3);
  const Field2 dx_exact = f.dx().eval_surface(hgrid, 0.3);
  const VecField2 g = hplan.grad(sampled);
  const double herr = (g.x - dx_exact).abs().maxCoeff();
  table << "horizontal," << 1.0 / hgrid.nx << "," << herr << "\n";

  std::cout << "mms: vertical order = " << vert.min_order
            << ", temporal order = " << temp.min_order
            << ", horizontal max error = " << herr << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  const char* env_threads = std::getenv("CPESIM_THREADS");
  if (env_threads) set_thread_count(std::atoi(env_threads));

  const auto args = parse_args(argc, argv);
  if (!args) return usage(std::cerr);
  try {
    if (args->subcommand == "run") return cmd_run(*args);
    if (args->subcommand == "check") return cmd_check(*args);
    if (args->subcommand == "stability") return cmd_stability(*args);
    if (args->subcommand == "fb") return cmd_fb(*args);
    if (args->subcommand == "mms") return cmd_mms(*args);
    return usage(std::cerr);
  } catch (const IoError& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return 3;
  } catch (const SimError& e) {
    if (e.kind() == ErrorKind::Config || e.kind() == ErrorKind::Shape) {
      std::cerr << "error: " << e.what() << "\n";
      return 1;
    }
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
