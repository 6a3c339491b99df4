#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "qsi/errors.hpp"
#include "qsi/io.hpp"
#include "qsi/pipeline.hpp"
#include "qsi/random.hpp"
#include "qsi/svg.hpp"

namespace fs = std::filesystem;
using namespace qsi;

namespace {

struct GlobalOpts {
  std::string out_dir;
  std::string config_path;
  std::optional<std::uint64_t> seed;
  bool quiet = false;
};

double parse_angle(const std::string& text) {
  std::string s = text;
  bool degrees = false;
  if (s.size() > 3 && s.substr(s.size() - 3) == "deg") {
    degrees = true;
    s = s.substr(0, s.size() - 3);
  }
  size_t pos = 0;
  const double value = std::stod(s, &pos);
  if (pos != s.size()) throw CLI::ValidationError("angle", "cannot parse angle: " + text);
  return degrees ? value * kPi / 180.0 : value;
}

InterferometerConfig resolve_config(const GlobalOpts& g) {
  InterferometerConfig cfg;
  std::string path = g.config_path;
  if (path.empty()) {
    if (const char* env = std::getenv("QSI_DEFAULT_CONFIG")) path = env;
  }
  if (!path.empty()) cfg = io::load_config(path);
  if (g.seed) cfg.rng_seed = *g.seed;
  return cfg;
}

fs::path ensure_out_dir(const GlobalOpts& g) {
  if (g.out_dir.empty()) throw CLI::ValidationError("--out", "output directory required");
  fs::path dir(g.out_dir);
  fs::create_directories(dir);
  return dir;
}

void write_manifest(const fs::path& dir, const std::string& command,
                    const std::vector<std::string>& args, const InterferometerConfig& cfg) {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::ostringstream stamp;
  stamp << std::put_time(std::gmtime(&t), "%Y-%m-%dT%H:%M:%SZ");
  io::json manifest{{"command", command},
                    {"args", args},
                    {"out_dir", dir.string()},
                    {"seed", cfg.rng_seed},
                    {"config", io::config_to_json(cfg)},
                    {"tool_version", QSI_VERSION},
                    {"timestamp", stamp.str()}};
  io::write_json(dir / "manifest.json", manifest);
}

std::string image_name(int index) {
  std::ostringstream ss;
  ss << "image_" << std::setw(3) << std::setfill('0') << index;
  return ss.str();
}

int cmd_simulate(const GlobalOpts& g, const std::vector<std::string>& raw_args,
                 std::optional<std::string> theta, std::optional<std::string> phi,
                 double mu, std::optional<std::string> alpha,
                 std::optional<std::string> beta, bool no_qwp,
                 const std::string& qudit_file, int subspace) {
  const fs::path dir = ensure_out_dir(g);
  InterferometerConfig cfg = resolve_config(g);

  const int specs = (theta.has_value() ? 1 : 0) + (alpha.has_value() ? 1 : 0) +
                    (qudit_file.empty() ? 0 : 1);
  if (specs != 1)
    throw CLI::ValidationError("state", "give exactly one of --theta, --alpha, --qudit-file");

  std::vector<Interferogram> images;
  if (!qudit_file.empty()) {
    const QuditPureState state = io::load_qudit(qudit_file);
    if (subspace < 1 || subspace > state.dim - 1)
      throw CLI::ValidationError("--subspace", "subspace index outside 1..d-1");
    images = synthesize_set(state, subspace, cfg);
  } else if (alpha.has_value()) {
    const PreparationSetting setting(parse_angle(*alpha),
                                     beta ? parse_angle(*beta) : 0.0, !no_qwp);
    const QubitState state = prepare_qubit(setting);
    images = synthesize_set(state, cfg);
    for (auto& img : images) {
      SourceTag tag;
      tag.kind = SourceTag::Kind::Preparation;
      tag.preparation = setting;
      img.source = tag;
    }
  } else {
    const QubitState state(parse_angle(*theta), phi ? parse_angle(*phi) : 0.0, mu);
    images = synthesize_set(state, cfg);
  }

  for (size_t i = 0; i < images.size(); ++i) {
    const std::string stem = image_name(static_cast<int>(i));
    io::write_pgm(dir / (stem + ".pgm"), images[i]);
    io::write_sidecar(dir / (stem + ".json"), images[i]);
  }
  write_manifest(dir, "simulate", raw_args, cfg);
  if (!g.quiet)
    std::cout << "wrote " << images.size() << " images to " << dir.string() << "\n";
  return 0;
}

int cmd_fit(const GlobalOpts& g, const std::vector<std::string>& raw_args,
            const std::string& input_dir, std::vector<std::string> image_paths,
            std::optional<double> norm_ref, std::optional<double> phase_zero) {
  const fs::path dir = ensure_out_dir(g);
  if (!input_dir.empty()) {
    for (const auto& entry : fs::directory_iterator(input_dir)) {
      const auto ext = entry.path().extension().string();
      if (ext == ".pgm" || ext == ".csv") image_paths.push_back(entry.path().string());
    }
    std::sort(image_paths.begin(), image_paths.end());
  }
  if (image_paths.empty())
    throw CLI::ValidationError("--input", "no input images given");

  std::vector<Interferogram> images;
  images.reserve(image_paths.size());
  for (const auto& p : image_paths) images.push_back(io::read_image(p));

  const std::vector<SliceFit> fits = fit_images(images);
  FringeEstimate est =
      norm_ref ? aggregate(fits, *norm_ref) : aggregate_unnormalized(fits);
  if (phase_zero) est.phase_shift = wrap_angle(est.phase_shift - *phase_zero);
  if (!norm_ref && !g.quiet)
    std::cerr << "warning: no --norm-ref given, average intensity left unnormalized\n";

  io::write_slice_table(dir / "slices.csv", fits);
  io::write_estimate(dir / "estimate.json", est);
  write_manifest(dir, "fit", raw_args, resolve_config(g));
  if (!g.quiet) std::cout << "wrote " << (dir / "estimate.json").string() << "\n";
  return 0;
}

int cmd_reconstruct(const GlobalOpts& g, const std::vector<std::string>& raw_args,
                    const std::string& estimate_path, std::vector<std::string> estimate_paths,
                    bool assume_pure, const std::string& target_path) {
  const fs::path dir = ensure_out_dir(g);
  if (!estimate_path.empty()) estimate_paths.insert(estimate_paths.begin(), estimate_path);
  if (estimate_paths.empty())
    throw CLI::ValidationError("--estimate", "no estimate file given");

  ReconstructionResult result;
  if (estimate_paths.size() == 1) {
    const FringeEstimate est = io::load_estimate(estimate_paths.front());
    result = assume_pure ? reconstruct_pure_assumed(est) : invert_qubit(est);
  } else {
    if (assume_pure)
      throw CLI::ValidationError("--assume-pure", "not applicable to qudit estimates");
    std::vector<FringeEstimate> ests;
    ests.reserve(estimate_paths.size());
    for (const auto& p : estimate_paths) ests.push_back(io::load_estimate(p));
    result = invert_qudit(ests);
  }

  io::json j = io::reconstruction_to_json(result);
  if (!target_path.empty()) {
    const io::json tj = io::load_json(target_path);
    double f = 0.0;
    if (tj.contains("re")) {
      f = fidelity(result.density(), DensityMatrix(io::density_from_json(tj)));
    } else if (tj.contains("thetas")) {
      f = fidelity(result.density(), qudit_amplitudes(io::qudit_from_json(tj)));
    } else {
      f = fidelity(result.density(), density_matrix(io::qubit_from_json(tj)));
    }
    j["fidelity_vs_target"] = f;
  }
  io::write_json(dir / "result.json", j);
  write_manifest(dir, "reconstruct", raw_args, resolve_config(g));
  if (!g.quiet) std::cout << "wrote " << (dir / "result.json").string() << "\n";
  return 0;
}

int cmd_sweep(const GlobalOpts& g, const std::vector<std::string>& raw_args,
              const std::string& alpha_step, const std::string& beta_step,
              const std::string& cal_step) {
  const fs::path dir = ensure_out_dir(g);
  const InterferometerConfig cfg = resolve_config(g);
  SweepOptions opts;
  opts.alpha_step = parse_angle(alpha_step);
  opts.beta_step = parse_angle(beta_step);
  opts.calibration_step = parse_angle(cal_step);
  opts.seed = cfg.rng_seed;

  const SweepResult result = run_sweep(cfg, opts);
  io::write_text(dir / "sweep.csv", sweep_to_csv(result));
  write_sweep_plots(dir, result);
  io::json summary{{"cells", result.cells.size()},
                   {"norm_reference", result.calibration.norm_reference},
                   {"phase_zero", result.calibration.phase_zero},
                   {"mean_fidelity_pure", result.mean_fidelity_pure},
                   {"mean_fidelity_mixed", result.mean_fidelity_mixed}};
  io::write_json(dir / "summary.json", summary);
  write_manifest(dir, "sweep", raw_args, cfg);
  if (!g.quiet)
    std::cout << "grid mean fidelity (pure assumption): " << result.mean_fidelity_pure
              << "\n";
  return 0;
}

int cmd_bench(const GlobalOpts& g, const std::vector<std::string>& raw_args, long shots,
              int reps, int n_states, int max_dim) {
  const fs::path dir = ensure_out_dir(g);
  InterferometerConfig cfg = resolve_config(g);

  std::vector<QubitState> states;
  Rng rng(cfg.rng_seed ^ 0xbe9cULL);
  for (int i = 0; i < n_states; ++i) {
    const double theta = std::acos(rng.uniform(-0.95, 0.95));
    states.emplace_back(theta, rng.uniform(-kPi, kPi), rng.uniform(0.0, 1.0));
  }

  const ShotBudget budget(shots, 3);
  const ComparisonTable table = compare(states, budget, cfg, reps, cfg.rng_seed, max_dim);
  io::write_text(dir / "bench.csv", comparison_to_csv(table));

  io::json rows = io::json::array();
  for (const auto& r : table.rows)
    rows.push_back({{"theta", r.state.theta},
                    {"phi", r.state.phi},
                    {"mu", r.state.mu},
                    {"method", r.method},
                    {"shots", r.shots},
                    {"settings", r.settings},
                    {"fidelity_mean", r.fidelity_mean},
                    {"fidelity_std", r.fidelity_std}});
  io::json scaling = io::json::array();
  for (const auto& s : table.scaling)
    scaling.push_back({{"dim", s.dim},
                       {"qsi_settings", s.qsi_settings},
                       {"qst_settings", s.qst_settings},
                       {"qst_pure_settings", s.qst_pure_settings}});
  io::write_json(dir / "summary.json", io::json{{"rows", rows}, {"scaling", scaling}});
  write_manifest(dir, "bench", raw_args, cfg);
  if (!g.quiet) std::cout << "wrote " << (dir / "bench.csv").string() << "\n";
  return 0;
}

int cmd_qudit_demo(const GlobalOpts& g, const std::vector<std::string>& raw_args, int dim,
                   const std::string& qudit_file) {
  const fs::path dir = ensure_out_dir(g);
  InterferometerConfig cfg = resolve_config(g);

  QuditPureState state;
  if (!qudit_file.empty()) {
    state = io::load_qudit(qudit_file);
  } else {
    if (dim < 2) throw CLI::ValidationError("--dim", "dim must be at least 2");
    Rng rng(cfg.rng_seed ^ 0xd17ULL);
    std::vector<double> thetas(dim - 1), phis(dim - 1);
    for (int i = 0; i < dim - 1; ++i) {
      thetas[i] = rng.uniform(0.1, kPi - 0.1);
      phis[i] = rng.uniform(-kPi, kPi);
    }
    state = QuditPureState(dim, thetas, phis);
  }

  const std::vector<FringeEstimate> ests = acquire_qudit_estimates(state, cfg);
  const ReconstructionResult result = invert_qudit(ests);
  const double f = fidelity(qudit_amplitudes(result.qudit), qudit_amplitudes(state));

  io::json j{{"true_state", io::qudit_to_json(state)},
             {"reconstruction", io::reconstruction_to_json(result)},
             {"fidelity", f}};
  io::json est_list = io::json::array();
  for (const auto& e : ests) est_list.push_back(io::estimate_to_json(e));
  j["estimates"] = std::move(est_list);
  io::write_json(dir / "demo.json", j);
  write_manifest(dir, "qudit-demo", raw_args, cfg);
  if (!g.quiet) std::cout << "qudit fidelity: " << f << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Two-path interferogram simulator and quantum state estimator"};
  app.require_subcommand(1);

  GlobalOpts g;
  app.add_option("--out", g.out_dir, "output directory")->envname("QSI_OUT");
  app.add_option("--config", g.config_path, "acquisition config JSON");
  std::uint64_t seed_value = 0;
  auto* seed_opt = app.add_option("--seed", seed_value, "random seed");
  app.add_flag("--quiet", g.quiet, "suppress progress output");

  auto* sim = app.add_subcommand("simulate", "synthesize interferogram images");
  std::optional<std::string> theta, phi;
  double mu = 1.0;
  std::optional<std::string> alpha, beta;
  bool no_qwp = false;
  std::string qudit_file;
  int subspace = 1;
  sim->add_option("--theta", theta, "polar angle (rad or Ndeg)");
  sim->add_option("--phi", phi, "azimuthal angle (rad or Ndeg)");
  sim->add_option("--mu", mu, "coherence parameter in [0,1]");
  sim->add_option("--alpha", alpha, "half-wave plate angle (rad or Ndeg)");
  sim->add_option("--beta", beta, "quarter-wave plate angle (rad or Ndeg)");
  sim->add_flag("--no-qwp", no_qwp, "omit the quarter-wave plate");
  sim->add_option("--qudit-file", qudit_file, "qudit state JSON");
  sim->add_option("--subspace", subspace, "qudit subspace index k (1-based)");

  auto* fit = app.add_subcommand("fit", "fit fringe slices and aggregate");
  std::string input_dir;
  std::vector<std::string> image_paths;
  std::optional<double> norm_ref, phase_zero;
  fit->add_option("--input", input_dir, "directory of .pgm/.csv images");
  fit->add_option("--images", image_paths, "explicit image paths");
  fit->add_option("--norm-ref", norm_ref, "calibration level for the average intensity");
  fit->add_option("--phase-zero", phase_zero, "phase reference to subtract, radians");

  auto* rec = app.add_subcommand("reconstruct", "invert a fringe estimate into a state");
  std::string estimate_path, target_path;
  std::vector<std::string> estimate_paths;
  bool assume_pure = false;
  rec->add_option("--estimate", estimate_path, "estimate JSON (qubit)");
  rec->add_option("--estimates", estimate_paths, "ordered subspace estimates (qudit)");
  rec->add_flag("--assume-pure", assume_pure, "force a pure-state inversion");
  rec->add_option("--target", target_path, "state JSON to report fidelity against");

  auto* sweep = app.add_subcommand("sweep", "waveplate grid: simulate, fit, reconstruct");
  std::string alpha_step = "10deg", beta_step = "10deg", cal_step = "5deg";
  sweep->add_option("--alpha-step", alpha_step, "half-wave plate grid step");
  sweep->add_option("--beta-step", beta_step, "quarter-wave plate grid step");
  sweep->add_option("--cal-step", cal_step, "calibration sweep step");

  auto* bench = app.add_subcommand("bench", "compare against the tomography baseline");
  long shots = 300000;
  int reps = 10, n_states = 5, max_dim = 6;
  bench->add_option("--shots", shots, "total photon budget per method");
  bench->add_option("--reps", reps, "repetitions per state");
  bench->add_option("--states", n_states, "number of random states");
  bench->add_option("--max-dim", max_dim, "largest dimension in the scaling table");

  auto* demo = app.add_subcommand("qudit-demo", "end-to-end qudit reconstruction");
  int dim = 3;
  std::string demo_file;
  demo->add_option("--dim", dim, "qudit dimension (random state)");
  demo->add_option("--qudit-file", demo_file, "qudit state JSON");

  std::vector<std::string> raw_args(argv + 1, argv + argc);
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  if (seed_opt->count() > 0) g.seed = seed_value;

  try {
    if (sim->parsed())
      return cmd_simulate(g, raw_args, theta, phi, mu, alpha, beta, no_qwp, qudit_file,
                          subspace);
    if (fit->parsed())
      return cmd_fit(g, raw_args, input_dir, image_paths, norm_ref, phase_zero);
    if (rec->parsed())
      return cmd_reconstruct(g, raw_args, estimate_path, estimate_paths, assume_pure,
                             target_path);
    if (sweep->parsed()) return cmd_sweep(g, raw_args, alpha_step, beta_step, cal_step);
    if (bench->parsed()) return cmd_bench(g, raw_args, shots, reps, n_states, max_dim);
    if (demo->parsed()) return cmd_qudit_demo(g, raw_args, dim, demo_file);
  } catch (const CLI::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const FormatError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const FitError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  } catch (const ReconstructionError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 5;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
