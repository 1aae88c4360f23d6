// Command-line front end: simulate | fit | mcmc | analyze | compare.
// Exit codes: 0 success, 2 validation error, 3 numeric failure, 4 time cap.

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "rcmap/analysis.hpp"
#include "rcmap/avba.hpp"
#include "rcmap/config.hpp"
#include "rcmap/io.hpp"
#include "rcmap/mcmc.hpp"

namespace fs = std::filesystem;
using namespace rcmap;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 2;
constexpr int kExitNumeric = 3;
constexpr int kExitTimeCap = 4;

struct CliError {
  int code;
  std::string message;
};

[[noreturn]] void fail(int code, const std::string& message) {
  throw CliError{code, message};
}

void write_samples_bin(const Eigen::MatrixXd& samples, const fs::path& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) fail(kExitValidation, "cannot open " + path.string());
  const char magic[8] = {'r', 'c', 's', 'm', '1', 0, 0, 0};
  os.write(magic, 8);
  std::int64_t rows = samples.rows(), cols = samples.cols();
  os.write(reinterpret_cast<const char*>(&rows), 8);
  os.write(reinterpret_cast<const char*>(&cols), 8);
  os.write(reinterpret_cast<const char*>(samples.data()),
           static_cast<std::streamsize>(samples.size() * 8));
}

Eigen::MatrixXd read_samples_bin(const fs::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) fail(kExitValidation, "cannot open " + path.string());
  char magic[8];
  is.read(magic, 8);
  if (std::string(magic, 5) != "rcsm1")
    fail(kExitValidation, path.string() + ": not a sample file");
  std::int64_t rows = 0, cols = 0;
  is.read(reinterpret_cast<char*>(&rows), 8);
  is.read(reinterpret_cast<char*>(&cols), 8);
  Eigen::MatrixXd m(rows, cols);
  is.read(reinterpret_cast<char*>(m.data()),
          static_cast<std::streamsize>(m.size() * 8));
  if (!is) fail(kExitValidation, path.string() + ": truncated sample file");
  return m;
}

RunConfig load_config_checked(const std::string& path) {
  try {
    return load_run_config(path);
  } catch (const std::exception& e) {
    fail(kExitValidation, e.what());
  }
}

SensorgramFile load_data_checked(const std::string& path) {
  try {
    return read_sensorgram_csv(path);
  } catch (const std::exception& e) {
    fail(kExitValidation, e.what());
  }
}

std::shared_ptr<const TriMesh> initial_mesh(const RunConfig& cfg) {
  return std::make_shared<TriMesh>(
      uniform_initial_mesh(cfg.domain.rect(), cfg.mesh_nx, cfg.mesh_ny));
}

AvbaConfig avba_config(const RunConfig& cfg, const std::string& artifact_dir) {
  AvbaConfig a = cfg.avba;
  a.seed = cfg.seeds.vb;
  a.artifact_dir = artifact_dir;
  return a;
}

void emit_analysis(const RunConfig& cfg, const RateConstantMap& mean,
                   const Eigen::MatrixXd& samples, const fs::path& dir) {
  InteractionReport report = tcm(mean, cfg.analysis.nu);
  write_report_json(report, cfg.domain, (dir / "report.json").string());

  for (double p : cfg.analysis.moments) {
    RateConstantMap mm = moment_map(mean.mesh, samples, p);
    std::string tag = format_g17(p);
    for (auto& ch : tag)
      if (ch == '.') ch = '_';
    write_nodal_map_csv(*mean.mesh, mm.values,
                        (dir / ("moment_p" + tag + ".csv")).string());
  }

  Eigen::MatrixXd img = intensity_map(mean, cfg.analysis.raster);
  std::ofstream os(dir / "intensity.csv");
  if (!os) fail(kExitValidation, "cannot open intensity.csv");
  for (Eigen::Index r = 0; r < img.rows(); ++r) {
    for (Eigen::Index c = 0; c < img.cols(); ++c)
      os << format_g17(img(r, c)) << (c + 1 == img.cols() ? "" : ",");
    os << "\n";
  }

  auto segments = threshold_contour_segments(mean, report.threshold);
  std::ofstream cs(dir / "contours.csv");
  if (!cs) fail(kExitValidation, "cannot open contours.csv");
  cs << "x0,y0,x1,y1\n";
  for (const auto& s : segments)
    cs << format_g17(s[0]) << "," << format_g17(s[1]) << ","
       << format_g17(s[2]) << "," << format_g17(s[3]) << "\n";
}

int cmd_simulate(const RunConfig& cfg) {
  fs::path dir = cfg.output_dir;
  fs::create_directories(dir);

  InjectionGrid grid = cfg.grid.make();
  SyntheticOptions opt = cfg.synthetic;
  opt.seed = cfg.seeds.data;
  SensorgramSet data;
  try {
    data = generate_synthetic(cfg.make_exact_map(), grid, cfg.kinetics,
                              cfg.domain, opt);
  } catch (const std::exception& e) {
    fail(kExitNumeric, e.what());
  }

  write_sensorgram_csv(data, (dir / "sensorgram.csv").string());
  write_sensorgram_sidecar(grid, cfg.kinetics, cfg.domain,
                           (dir / "sensorgram.csv.meta.json").string());

  // ground truth interpolated on the initial mesh, for later error metrics
  auto mesh = initial_mesh(cfg);
  AnalyticMap f = cfg.make_exact_map();
  Eigen::VectorXd exact(mesh->num_nodes());
  for (int i = 0; i < mesh->num_nodes(); ++i)
    exact[i] = f(mesh->nodes()[i].x(), mesh->nodes()[i].y());
  write_mesh_file(*mesh, (dir / "mesh.txt").string());
  write_nodal_map_csv(*mesh, exact, (dir / "exact_map.csv").string());

  write_manifest(cfg, "simulate", dir.string());
  std::cout << "wrote " << (dir / "sensorgram.csv").string() << " ("
            << grid.nt() << " x " << grid.nc() << ")\n";
  return kExitOk;
}

int cmd_fit(const RunConfig& cfg, const std::string& data_path) {
  SensorgramFile file = load_data_checked(data_path);
  fs::path dir = cfg.output_dir;
  fs::create_directories(dir);

  auto t0 = std::chrono::steady_clock::now();
  AvbaResult result;
  try {
    result = run_avba(initial_mesh(cfg), file.data.grid, file.kp, cfg.domain,
                      file.data, cfg.hyperpriors,
                      avba_config(cfg, (dir / "iterations").string()));
  } catch (const std::exception& e) {
    fail(kExitNumeric, e.what());
  }
  double wall = std::chrono::duration<double>(
                    std::chrono::steady_clock::now() - t0)
                    .count();

  write_mesh_file(*result.mesh, (dir / "mesh.txt").string());
  write_nodal_map_csv(*result.mesh, result.mean.values,
                      (dir / "mean.csv").string());
  write_nodal_map_csv(*result.mesh, result.lower.values,
                      (dir / "lower.csv").string());
  write_nodal_map_csv(*result.mesh, result.upper.values,
                      (dir / "upper.csv").string());
  write_delta_history_csv(result.final_state, (dir / "deltas.csv").string());
  write_samples_bin(result.final_state.posterior.samples,
                    dir / "samples.bin");
  emit_analysis(cfg, result.mean, result.final_state.posterior.samples, dir);

  SensorgramSet fitted;
  double overlap = 0;
  try {
    fitted = forward_response(result.mean, file.data.grid, file.kp,
                              cfg.domain, cfg.avba.quad_order);
    overlap = data_overlap(file.data, fitted);
  } catch (const std::exception& e) {
    fail(kExitNumeric, e.what());
  }

  nlohmann::json summary;
  summary["wall_seconds"] = wall;
  summary["converged"] = result.converged;
  summary["data_overlap_percent"] = overlap;
  summary["iterations"] = nlohmann::json::array();
  for (const auto& it : result.iterations)
    summary["iterations"].push_back({{"nodes", it.nodes},
                                     {"triangles", it.triangles},
                                     {"vb_iterations", it.vb_iterations},
                                     {"delta1", it.delta1},
                                     {"delta2", it.delta2},
                                     {"outer_delta", it.outer_delta},
                                     {"residual_norm", it.residual_norm},
                                     {"marked", it.marked}});
  std::ofstream os(dir / "summary.json");
  if (!os) fail(kExitValidation, "cannot open summary.json");
  os << summary.dump(2) << "\n";

  write_manifest(cfg, "fit", dir.string());
  std::cout << "fit: " << result.iterations.size() << " outer iterations, "
            << result.mesh->num_nodes() << " nodes, overlap " << overlap
            << "%, " << wall << " s\n";
  return kExitOk;
}

int cmd_mcmc(const RunConfig& cfg, const std::string& data_path,
             const std::string& vb_run) {
  SensorgramFile file = load_data_checked(data_path);
  fs::path dir = cfg.output_dir;
  fs::create_directories(dir);

  auto mesh = initial_mesh(cfg);
  McmcChain chain;
  DesignSystem design;
  auto t0 = std::chrono::steady_clock::now();
  try {
    design = assemble_design(*mesh, file.data.grid, file.kp, cfg.domain,
                             cfg.avba.quad_order, cfg.avba.reg,
                             cfg.avba.reg_eps);
    McmcConfig mc = cfg.mcmc;
    mc.seed = cfg.seeds.mcmc;
    chain = run_mcmc(design, file.data, cfg.hyperpriors, mc);
  } catch (const std::exception& e) {
    fail(kExitNumeric, e.what());
  }
  double wall = std::chrono::duration<double>(
                    std::chrono::steady_clock::now() - t0)
                    .count();

  write_mesh_file(*mesh, (dir / "mesh.txt").string());
  Eigen::VectorXd mean = chain.c_samples.rowwise().mean();
  write_nodal_map_csv(*mesh, mean, (dir / "mean.csv").string());
  write_samples_bin(chain.c_samples, dir / "samples.bin");

  FactorCorrelations rho = factor_correlations(chain);
  nlohmann::json summary;
  summary["wall_seconds"] = wall;
  summary["kept_samples"] = chain.c_samples.cols();
  summary["hit_time_cap"] = chain.hit_time_cap;
  summary["max_abs_rho_c_sigma_j"] = rho.max_c_sigma_j;
  summary["max_abs_rho_c_sigma_c"] = rho.max_c_sigma_c;
  summary["max_abs_rho_sigma_j_sigma_c"] = rho.max_sigma_j_sigma_c;
  summary["zero_variance_flag"] = rho.zero_variance_flag;

  if (!vb_run.empty()) {
    Eigen::MatrixXd vb_samples = read_samples_bin(fs::path(vb_run) /
                                                  "samples.bin");
    if (vb_samples.rows() != chain.c_samples.rows())
      fail(kExitValidation,
           "VB run has a different coordinate count; use a fixed mesh "
           "(avba.max_outer = 1) for comparison");
    Eigen::VectorXd w = relative_wasserstein(vb_samples, chain.c_samples);
    std::ofstream ws(dir / "wasserstein.csv");
    if (!ws) fail(kExitValidation, "cannot open wasserstein.csv");
    ws << "coordinate,w\n";
    for (Eigen::Index i = 0; i < w.size(); ++i)
      ws << i << "," << format_g17(w[i]) << "\n";
    std::vector<double> wv(w.begin(), w.end());
    summary["median_wasserstein"] = quantile(wv, 0.5);
  }

  std::ofstream os(dir / "summary.json");
  if (!os) fail(kExitValidation, "cannot open summary.json");
  os << summary.dump(2) << "\n";

  write_manifest(cfg, "mcmc", dir.string());
  std::cout << "mcmc: " << chain.c_samples.cols() << " kept samples, "
            << wall << " s\n";
  return chain.hit_time_cap ? kExitTimeCap : kExitOk;
}

int cmd_analyze(const RunConfig& cfg, const std::string& run_dir) {
  fs::path dir = run_dir;
  RateConstantMap mean;
  Eigen::MatrixXd samples;
  try {
    mean.mesh = std::make_shared<TriMesh>(
        read_mesh_file((dir / "mesh.txt").string()));
    mean.values = read_nodal_map_csv((dir / "mean.csv").string());
    samples = read_samples_bin(dir / "samples.bin");
  } catch (const CliError&) {
    throw;
  } catch (const std::exception& e) {
    fail(kExitValidation, e.what());
  }
  if (mean.values.size() != mean.mesh->num_nodes() ||
      samples.rows() != mean.mesh->num_nodes())
    fail(kExitValidation, run_dir + ": inconsistent run directory");
  emit_analysis(cfg, mean, samples, dir);
  std::cout << "analyzed " << run_dir << "\n";
  return kExitOk;
}

int cmd_compare(const std::string& run_a, const std::string& run_b,
                const std::string& out_csv) {
  Eigen::MatrixXd a = read_samples_bin(fs::path(run_a) / "samples.bin");
  Eigen::MatrixXd b = read_samples_bin(fs::path(run_b) / "samples.bin");
  if (a.rows() != b.rows())
    fail(kExitValidation, "sample sets have different coordinate counts");
  Eigen::VectorXd w = relative_wasserstein(a, b);
  if (!out_csv.empty()) {
    std::ofstream os(out_csv);
    if (!os) fail(kExitValidation, "cannot open " + out_csv);
    os << "coordinate,w\n";
    for (Eigen::Index i = 0; i < w.size(); ++i)
      os << i << "," << format_g17(w[i]) << "\n";
  }
  std::vector<double> wv(w.begin(), w.end());
  std::cout << "median_wasserstein " << format_g17(quantile(wv, 0.5)) << "\n"
            << "max_wasserstein " << format_g17(w.maxCoeff()) << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Rate-constant map estimation from biosensor sensorgrams"};
  app.require_subcommand(1);

  std::string config_path, data_path, out_dir, run_dir;
  std::string run_a, run_b, out_csv, vb_run;

  auto add_config = [&](CLI::App* sub, bool required = true) {
    auto* opt = sub->add_option("-c,--config", config_path,
                                "run configuration (JSON; a manifest works)");
    if (required) opt->required();
  };

  auto* sim = app.add_subcommand("simulate", "generate synthetic sensorgrams");
  add_config(sim);
  sim->add_option("-o,--out", out_dir, "override output directory");

  auto* fit = app.add_subcommand("fit", "adaptive variational fit");
  add_config(fit);
  fit->add_option("-d,--data", data_path, "sensorgram CSV")->required();
  fit->add_option("-o,--out", out_dir, "override output directory");

  auto* mcmc = app.add_subcommand("mcmc", "Gibbs sampler baseline");
  add_config(mcmc);
  mcmc->add_option("-d,--data", data_path, "sensorgram CSV")->required();
  mcmc->add_option("-o,--out", out_dir, "override output directory");
  mcmc->add_option("--vb-run", vb_run,
                   "fit run directory for a posterior comparison");

  auto* analyze = app.add_subcommand("analyze",
                                     "re-run analysis on a fit run directory");
  add_config(analyze);
  analyze->add_option("-r,--run", run_dir, "run directory")->required();

  auto* compare = app.add_subcommand("compare",
                                     "coordinatewise posterior distance");
  compare->add_option("-a,--run-a", run_a, "sample run directory")->required();
  compare->add_option("-b,--run-b", run_b, "reference run directory")
      ->required();
  compare->add_option("-o,--out", out_csv, "per-coordinate distance CSV");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitValidation;
  }

  try {
    if (compare->parsed()) return cmd_compare(run_a, run_b, out_csv);
    RunConfig cfg = load_config_checked(config_path);
    if (!out_dir.empty()) cfg.output_dir = out_dir;
    if (sim->parsed()) return cmd_simulate(cfg);
    if (fit->parsed()) return cmd_fit(cfg, data_path);
    if (mcmc->parsed()) return cmd_mcmc(cfg, data_path, vb_run);
    if (analyze->parsed()) return cmd_analyze(cfg, run_dir);
  } catch (const CliError& e) {
    std::cerr << "error: " << e.message << "\n";
    return e.code;
  } catch (const std::domain_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNumeric;
  }
  return kExitValidation;
}
