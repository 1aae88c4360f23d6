#ifndef RCMAP_ANALYSIS_HPP
#define RCMAP_ANALYSIS_HPP

#include <string>
#include <vector>

#include "rcmap/kinetics.hpp"

namespace rcmap {

/// L2(Omega)-relative error against an analytic exact map,
/// per-triangle quadrature of the quotient integrands.
double l2_relative_error(const RateConstantMap& estimate,
                         const AnalyticMap& exact);

/// Same metric for a nodal exact map on the same mesh (mass-matrix exact).
double l2_relative_error(const RateConstantMap& estimate,
                         const RateConstantMap& exact);

/// Empirical p-quantile (linear interpolation of the order statistics).
double quantile(std::vector<double> sorted_or_not, double p);

/// W = (1/100) sum_i |qa_i - qb_i| / (qb_i + 1) over the i% quantiles,
/// i = 1..100, with b the reference side.
double relative_wasserstein(const std::vector<double>& samples_a,
                            const std::vector<double>& samples_b);

/// Per-coordinate distances between two sample matrices (n x N).
Eigen::VectorXd relative_wasserstein(const Eigen::MatrixXd& samples_a,
                                     const Eigen::MatrixXd& samples_b);

struct InteractionRegion {
  int peak_node = -1;
  double peak_x = 0, peak_y = 0;  // mesh coordinates (k_a axis, k_d axis)
  double peak_value = 0;
  std::vector<int> nodes;
};

struct InteractionReport {
  double nu = 5;
  double threshold = 0;  // (1 - nu/100) * max
  std::vector<InteractionRegion> regions;
};

/// nu-thresholding contour method: keep nodes >= (1 - nu/100) * max,
/// connected components on the mesh edge graph, one peak per component.
InteractionReport tcm(const RateConstantMap& map, double nu);

/// Nodal p-th raw moment of posterior samples (p may be fractional).
RateConstantMap moment_map(std::shared_ptr<const TriMesh> mesh,
                           const Eigen::MatrixXd& samples, double p);

/// Piecewise-linear rasterization onto a regular grid over the domain.
Eigen::MatrixXd intensity_map(const RateConstantMap& map, int raster);

/// 100 * (1 - ||observed - fitted|| / ||observed||), clipped to [0, 100].
double data_overlap(const SensorgramSet& observed,
                    const SensorgramSet& fitted);

/// Contour polylines of the TCM threshold level set, as segment lists.
std::vector<std::array<double, 4>> threshold_contour_segments(
    const RateConstantMap& map, double level);

void write_report_json(const InteractionReport& report,
                       const DomainSpec& domain, const std::string& path);

}  // namespace rcmap

#endif
