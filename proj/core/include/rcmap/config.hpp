#ifndef RCMAP_CONFIG_HPP
#define RCMAP_CONFIG_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "rcmap/avba.hpp"
#include "rcmap/kinetics.hpp"
#include "rcmap/mcmc.hpp"

namespace rcmap {

/// Isotropic Gaussian bump amp * exp(-decay * ((x-x0)^2 + (y-y0)^2)).
struct GaussianBump {
  double amplitude = 1, x0 = 0, y0 = 0, decay = 1;
};

struct GridSpec {
  double t_begin = 0, t_end = 1;
  int nt = 2;
  double c_lo = 1, c_hi = 1;
  int nc = 1;
  InjectionGrid make() const;
};

struct AnalysisConfig {
  double nu = 5;
  int raster = 128;
  std::vector<double> moments = {0.5, 1, 2, 3, 4};
};

struct Seeds {
  std::uint64_t data = 1, vb = 2, mcmc = 3;
};

struct RunConfig {
  DomainSpec domain;
  GridSpec grid;
  KineticsParams kinetics;
  std::vector<GaussianBump> exact_map;
  SyntheticOptions synthetic;
  int mesh_nx = 10, mesh_ny = 10;
  HyperPriors hyperpriors;
  AvbaConfig avba;
  McmcConfig mcmc;
  AnalysisConfig analysis;
  Seeds seeds;
  std::string output_dir = "run";

  void validate() const;
  AnalyticMap make_exact_map() const;
};

RunConfig load_run_config(const std::string& path);
/// Writes the fully resolved configuration (defaults filled in).
void save_run_config(const RunConfig& cfg, const std::string& path);
std::string run_config_json(const RunConfig& cfg);
/// FNV-1a hash of the canonical JSON form.
std::uint64_t run_config_hash(const RunConfig& cfg);

void write_manifest(const RunConfig& cfg, const std::string& subcommand,
                    const std::string& dir);

}  // namespace rcmap

#endif
