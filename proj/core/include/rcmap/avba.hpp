#ifndef RCMAP_AVBA_HPP
#define RCMAP_AVBA_HPP

#include <memory>
#include <string>
#include <vector>

#include "rcmap/vb.hpp"

namespace rcmap {

struct AvbaConfig {
  double tau = 0.5;              // marking fraction in (0,1)
  double eps = 1e-4;             // tolerance
  int max_outer = 5;             // K_max
  int sample_count = 2000;       // N
  double refine_budget = 2.0;    // max triangle growth factor per iteration
  int quad_order = 7;
  RegKind reg = RegKind::graph_laplacian_shifted;
  double reg_eps = 1e-6;
  double lambda0 = 1e-5;
  double kappa0 = 1e-2;
  double vb_tol = 1e-4;
  int vb_max_iter = 60;
  int vb_burn_in = 50;
  std::uint64_t seed = 1;
  /// Optional run directory for per-iteration artifacts; empty disables.
  std::string artifact_dir;

  void validate() const;
};

struct AvbaIterationSummary {
  int nodes = 0, triangles = 0;
  int vb_iterations = 0;
  double delta1 = 0, delta2 = 0;
  double outer_delta = 0;     // relative mean-map change vs previous mesh
  double residual_norm = 0;   // ||R - K c_hat||
  int marked = 0;
};

struct AvbaResult {
  std::shared_ptr<const TriMesh> mesh;
  RateConstantMap mean, lower, upper;
  VBState final_state;
  std::vector<AvbaIterationSummary> iterations;
  bool converged = false;
};

/// (1/3) sum over ordered nodal pairs of |c_i - c_j| on one triangle.
double triangle_variation(const Eigen::VectorXd& nodal, const TriMesh& mesh,
                          int tri);

/// Per-triangle max of the mean/lower/upper variations.
Eigen::VectorXd refinement_indicator(const Eigen::VectorXd& mean,
                                     const Eigen::VectorXd& lower,
                                     const Eigen::VectorXd& upper,
                                     const TriMesh& mesh);

/// Triangles with V >= tau * max(V), sorted by descending indicator.
/// Empty when the indicator vanishes identically.
std::vector<int> mark(const Eigen::VectorXd& indicator, double tau);

/// Linear interpolation of nodal values onto a (nested or not) mesh.
Eigen::VectorXd prolong(const TriMesh& from, const Eigen::VectorXd& values,
                        const TriMesh& to);

/// Outer adaptive loop: VB solve, indicator, mark, refine, reassemble,
/// warm start from the interpolated posterior center.
AvbaResult run_avba(std::shared_ptr<const TriMesh> initial_mesh,
                    const InjectionGrid& grid, const KineticsParams& kp,
                    const DomainSpec& domain, const SensorgramSet& data,
                    const HyperPriors& hp, const AvbaConfig& cfg);

}  // namespace rcmap

#endif
