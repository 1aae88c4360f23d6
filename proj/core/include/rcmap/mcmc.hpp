#ifndef RCMAP_MCMC_HPP
#define RCMAP_MCMC_HPP

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "rcmap/vb.hpp"

namespace rcmap {

struct McmcConfig {
  int chain_length = 50000;
  int burn_in = 5000;
  int thinning = 1;
  std::uint64_t seed = 1;
  double t_max_seconds = 0;  // wall-clock cap; 0 disables
  double lambda0 = 1e-5;     // ridge parameter of the initial state

  void validate() const;
};

struct McmcState {
  Eigen::VectorXd c;
  Eigen::VectorXd sigma2_j;  // per sensorgram
  double sigma2_c = 1;
};

/// Post-burn-in Gibbs samples of (c, sigma^2_j, sigma^2_c).
struct McmcChain {
  Eigen::MatrixXd c_samples;        // n x kept
  Eigen::MatrixXd sigma2_j_samples; // nc x kept
  Eigen::VectorXd sigma2_c_samples; // kept
  bool hit_time_cap = false;
  double wall_seconds = 0;
};

/// One full Gibbs sweep: coordinatewise scan of c | rest from the
/// positive-orthant truncated normal, then conjugate inverse-gamma draws
/// of sigma^2_j | rest and sigma^2_c | rest.
void gibbs_step(McmcState& state, const DesignSystem& design,
                const SensorgramSet& data, const DesignCache& cache,
                const HyperPriors& hp, std::mt19937_64& rng);

McmcChain run_mcmc(const DesignSystem& design, const SensorgramSet& data,
                   const HyperPriors& hp, const McmcConfig& cfg);

struct FactorCorrelations {
  Eigen::MatrixXd rho_c_sigma_j;   // n x nc
  Eigen::VectorXd rho_c_sigma_c;   // n
  Eigen::VectorXd rho_sigma_j_sigma_c;  // nc
  double max_c_sigma_j = 0;
  double max_c_sigma_c = 0;
  double max_sigma_j_sigma_c = 0;
  bool zero_variance_flag = false;
};

/// Pearson coefficients between the chain components; zero-variance
/// streams report rho = 0 with a flag.
FactorCorrelations factor_correlations(const McmcChain& chain);

/// Lag-k autocorrelation of one monitored coordinate.
Eigen::VectorXd autocorrelation(const Eigen::VectorXd& trace, int max_lag);

void save_chain(const McmcChain& chain, const std::string& dir);

}  // namespace rcmap

#endif
