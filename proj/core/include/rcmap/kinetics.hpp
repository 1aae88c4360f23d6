#ifndef RCMAP_KINETICS_HPP
#define RCMAP_KINETICS_HPP

#include <cstdint>
#include <functional>
#include <memory>

#include <Eigen/Dense>

#include "rcmap/mesh.hpp"

namespace rcmap {

/// Injection timing of a sensorgram experiment.
struct KineticsParams {
  double t0 = 0;        // injection start (s)
  double t_inj = 1;     // injection duration (s)
  double dt_delay = 0;  // detector delay (s)

  void validate() const;
};

/// One axis of the rate-constant domain. When log10 is set, mesh
/// coordinates along this axis are log10 of the rate constant.
struct DomainAxis {
  double lo = 0, hi = 1;
  bool log10 = false;
};

/// Rate-constant domain. Mesh x-axis carries k_a, y-axis carries k_d.
struct DomainSpec {
  DomainAxis ka;
  DomainAxis kd;

  Rect rect() const { return {ka.lo, ka.hi, kd.lo, kd.hi}; }

  /// De-log a mesh point into raw (k_a, k_d).
  Eigen::Vector2d rates_at(const Eigen::Vector2d& p) const;
};

/// Raw-scale rate-constant pair.
struct RatePoint {
  double ka = 0;  // 1/(M s)
  double kd = 0;  // 1/s
};

/// Time grid and analyte concentration ladder shared by a sensorgram set.
struct InjectionGrid {
  Eigen::VectorXd times;           // strictly increasing, length N_T >= 2
  Eigen::VectorXd concentrations;  // strictly increasing, > 0, length N_C >= 1

  int nt() const { return static_cast<int>(times.size()); }
  int nc() const { return static_cast<int>(concentrations.size()); }
  void validate() const;

  static InjectionGrid uniform(double t_begin, double t_end, int nt,
                               double c_lo, double c_hi, int nc);
};

/// Observed or simulated responses; column per concentration.
struct SensorgramSet {
  InjectionGrid grid;
  Eigen::MatrixXd values;  // nt x nc

  /// Stacked vector [R^1; ...; R^{N_C}] in concentration-block order.
  Eigen::VectorXd stacked() const;
  static SensorgramSet from_stacked(const InjectionGrid& grid,
                                    const Eigen::VectorXd& stacked);
};

/// Nodal scalar field over a TriMesh.
enum class MapKind { mean, lower, upper, moment, exact_interpolant };

struct RateConstantMap {
  std::shared_ptr<const TriMesh> mesh;
  Eigen::VectorXd values;
  MapKind kind = MapKind::mean;
  double moment_order = 0;
};

/// Three-branch interaction kernel. Result lies in
/// [0, ka*C/(kd + ka*C)) for valid inputs.
double kernel_value(const RatePoint& p, double t, double C,
                    const KineticsParams& kp);

/// Forward model K*c of a nodal map (triangle-wise Gaussian quadrature).
SensorgramSet forward_response(const RateConstantMap& map,
                               const InjectionGrid& grid,
                               const KineticsParams& kp,
                               const DomainSpec& domain, int quad_order = 7);

using AnalyticMap = std::function<double(double x, double y)>;

struct SyntheticOptions {
  double delta = 0;        // noise level
  std::uint64_t seed = 0;
  int ref_nx = 0, ref_ny = 0;  // reference quadrature mesh; 0 = 4x a 10x10
  bool per_point_noise = false;  // non-default per-time-point variant
};

/// Noise-free responses by high-resolution quadrature of the integral
/// against an analytic map, plus the nonnegative per-sensorgram noise
/// term max{0, max_p Rbar_{p,q} * delta * omega_q}, omega_q ~ N(0, q).
SensorgramSet generate_synthetic(const AnalyticMap& exact_map,
                                 const InjectionGrid& grid,
                                 const KineticsParams& kp,
                                 const DomainSpec& domain,
                                 const SyntheticOptions& opt);

}  // namespace rcmap

#endif
