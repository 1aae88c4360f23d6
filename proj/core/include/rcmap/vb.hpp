#ifndef RCMAP_VB_HPP
#define RCMAP_VB_HPP

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "rcmap/operators.hpp"
#include "rcmap/truncnorm.hpp"

namespace rcmap {

struct HyperPriors {
  double alpha_j = 1, beta_j = 1;  // per-sensorgram inverse-gamma
  double alpha_c = 1, beta_c = 1;  // map-level inverse-gamma
  void validate() const;
};

struct InverseGamma {
  double shape = 1, scale = 1;
  /// E[1/x] for x ~ IG(shape, scale).
  double mean_inv() const { return shape / scale; }
};

/// Nonnegatively truncated Gaussian factor q(c) with drawn samples and
/// sample summaries.
struct TruncatedNormalPosterior {
  Eigen::VectorXd center;   // untruncated mean parameter c*
  Eigen::MatrixXd cov;      // SPD
  Eigen::MatrixXd samples;  // n x N, coordinatewise >= 0
  Eigen::VectorXd mean;     // sample mean
  Eigen::VectorXd lower;    // per-coordinate 2.5% quantile
  Eigen::VectorXd upper;    // per-coordinate 97.5% quantile
  double hn0 = 0;           // estimated truncation mass HN(0)
  /// Sample covariance, kept only when hn0 is large enough that the analytic
  /// Gaussian moments are not a valid substitute (empty otherwise).
  Eigen::MatrixXd sample_cov;
};

struct VBState {
  TruncatedNormalPosterior posterior;
  std::vector<InverseGamma> q_sigma_j;  // per sensorgram
  InverseGamma q_sigma_c;
  int iteration = 0;
  std::vector<double> delta1_history;
  std::vector<double> delta2_history;
  std::mt19937_64 rng;
};

struct VBOptions {
  double lambda0 = 1e-5;   // ridge parameter of the initial mean
  double kappa0 = 1e-2;    // initial covariance scale
  double tol = 1e-4;
  int max_iter = 60;
  int sample_count = 2000;
  int burn_in = 50;
  std::uint64_t seed = 1;
  /// Switch to the analytic trace expectations when hn0 falls below this.
  double analytic_threshold = 1e-6;
};

/// Per-design precomputation shared by the update formulas.
struct DesignCache {
  Eigen::MatrixXd LtL;
  std::vector<Eigen::MatrixXd> gram;   // (K^j)^T K^j
  std::vector<Eigen::VectorXd> ktr;    // (K^j)^T R^j
  std::vector<double> rtr;             // (R^j)^T R^j
  std::vector<double> gram_trace;

  DesignCache(const DesignSystem& design, const SensorgramSet& data);
};

/// Initial Gaussian factor: mean (K^T K + lambda0 I)^{-1} K^T R,
/// covariance kappa0 I; hyperfactors at their prior parameters.
VBState init_state(const DesignSystem& design, const SensorgramSet& data,
                   const HyperPriors& hp, double lambda0, double kappa0,
                   std::uint64_t seed = 1);

/// One coordinate update of q(c): solves the penalized normal equations
/// with the current inverse-gamma means, then redraws N samples.
void update_c(VBState& state, const DesignSystem& design,
              const SensorgramSet& data, const DesignCache& cache,
              const VBOptions& opt);

/// IG(alpha_j + N_T/2, beta_j + E[(R^j - K^j c)^T (R^j - K^j c)]/2) with
/// the expectation taken over the stored samples.
InverseGamma update_sigma_j(const VBState& state, const DesignSystem& design,
                            const SensorgramSet& data, const DesignCache& cache,
                            int j, const HyperPriors& hp,
                            double analytic_threshold = 1e-6);

InverseGamma update_sigma_c(const VBState& state, const DesignSystem& design,
                            const DesignCache& cache, const HyperPriors& hp,
                            double analytic_threshold = 1e-6);

struct VBRunResult {
  VBState state;
  bool converged = false;
};

/// Mean-field coordinate ascent with the Delta1/Delta2 stopping rule.
/// `init_mean` overrides the ridge initial mean (warm starts).
VBRunResult run_vb(const DesignSystem& design, const SensorgramSet& data,
                   const HyperPriors& hp, const VBOptions& opt,
                   const Eigen::VectorXd* init_mean = nullptr);

void save_vb_state(const VBState& state, const std::string& path);
VBState load_vb_state(const std::string& path);

void write_delta_history_csv(const VBState& state, const std::string& path);

}  // namespace rcmap

#endif
