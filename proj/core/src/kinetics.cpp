#include "rcmap/kinetics.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

#include "rcmap/operators.hpp"

namespace rcmap {

void KineticsParams::validate() const {
  if (!(t_inj > 0)) throw std::domain_error("kinetics: t_inj must be > 0");
  if (!(dt_delay >= 0)) throw std::domain_error("kinetics: dt_delay must be >= 0");
  if (!(t0 >= 0)) throw std::domain_error("kinetics: t0 must be >= 0");
}

Eigen::Vector2d DomainSpec::rates_at(const Eigen::Vector2d& p) const {
  double va = ka.log10 ? std::pow(10.0, p.x()) : p.x();
  double vd = kd.log10 ? std::pow(10.0, p.y()) : p.y();
  return {va, vd};
}

void InjectionGrid::validate() const {
  if (nt() < 2) throw std::domain_error("grid: need at least 2 time points");
  if (nc() < 1) throw std::domain_error("grid: need at least 1 concentration");
  for (int i = 1; i < nt(); ++i)
    if (!(times[i] > times[i - 1]))
      throw std::domain_error("grid: times must be strictly increasing");
  for (int j = 0; j < nc(); ++j) {
    if (!(concentrations[j] > 0))
      throw std::domain_error("grid: concentrations must be > 0");
    if (j > 0 && !(concentrations[j] > concentrations[j - 1]))
      throw std::domain_error("grid: concentrations must be strictly increasing");
  }
}

InjectionGrid InjectionGrid::uniform(double t_begin, double t_end, int nt,
                                     double c_lo, double c_hi, int nc) {
  InjectionGrid g;
  g.times = Eigen::VectorXd::LinSpaced(nt, t_begin, t_end);
  g.concentrations = Eigen::VectorXd::LinSpaced(nc, c_lo, c_hi);
  g.validate();
  return g;
}

Eigen::VectorXd SensorgramSet::stacked() const {
  Eigen::VectorXd out(values.size());
  for (int j = 0; j < values.cols(); ++j)
    out.segment(j * values.rows(), values.rows()) = values.col(j);
  return out;
}

SensorgramSet SensorgramSet::from_stacked(const InjectionGrid& grid,
                                          const Eigen::VectorXd& stacked) {
  if (stacked.size() != static_cast<Eigen::Index>(grid.nt()) * grid.nc())
    throw std::invalid_argument("from_stacked: dimension mismatch");
  SensorgramSet s{grid, Eigen::MatrixXd(grid.nt(), grid.nc())};
  for (int j = 0; j < grid.nc(); ++j)
    s.values.col(j) = stacked.segment(j * grid.nt(), grid.nt());
  return s;
}

double kernel_value(const RatePoint& p, double t, double C,
                    const KineticsParams& kp) {
  if (!std::isfinite(p.ka) || !std::isfinite(p.kd) || !std::isfinite(t) ||
      !std::isfinite(C))
    throw std::domain_error("kernel_value: non-finite input");
  if (!(C > 0)) throw std::domain_error("kernel_value: concentration must be > 0");
  if (!(p.ka > 0) || !(p.kd >= 0))
    throw std::domain_error("kernel_value: invalid rate constants");
  if (t <= kp.t0 + kp.dt_delay) return 0.0;
  const double r = p.kd + p.ka * C;
  const double sat = p.ka * C / r;
  if (t <= kp.t0 + kp.t_inj + kp.dt_delay)
    return sat * (1.0 - std::exp(-r * (t - kp.t0)));
  return sat * (1.0 - std::exp(-r * kp.t_inj)) *
         std::exp(-p.kd * (t - kp.t0 - kp.t_inj));
}

SensorgramSet forward_response(const RateConstantMap& map,
                               const InjectionGrid& grid,
                               const KineticsParams& kp,
                               const DomainSpec& domain, int quad_order) {
  if (!map.mesh || map.values.size() != map.mesh->num_nodes())
    throw std::invalid_argument("forward_response: map/mesh mismatch");
  Eigen::MatrixXd K =
      assemble_design_matrix(*map.mesh, grid, kp, domain, quad_order);
  Eigen::VectorXd stacked = K * map.values;
  return SensorgramSet::from_stacked(grid, stacked);
}

SensorgramSet generate_synthetic(const AnalyticMap& exact_map,
                                 const InjectionGrid& grid,
                                 const KineticsParams& kp,
                                 const DomainSpec& domain,
                                 const SyntheticOptions& opt) {
  grid.validate();
  kp.validate();
  if (!(opt.delta >= 0))
    throw std::domain_error("generate_synthetic: delta must be >= 0");

  int ref_nx = opt.ref_nx > 0 ? opt.ref_nx : 40;
  int ref_ny = opt.ref_ny > 0 ? opt.ref_ny : 40;
  TriMesh ref = uniform_initial_mesh(domain.rect(), ref_nx, ref_ny);

  // quadrature points of kernel * exact map over the reference mesh
  struct QP {
    RatePoint rate;
    double wf;  // quadrature weight * exact_map value
  };
  std::vector<QP> qps;
  const auto& rule = quad_rule(7);
  qps.reserve(ref.num_triangles() * rule.size());
  for (int t = 0; t < ref.num_triangles(); ++t) {
    const auto& tv = ref.triangles()[t].v;
    double a2 = 2.0 * ref.area(t);
    for (const auto& q : rule) {
      Eigen::Vector2d p = q.l0 * ref.nodes()[tv[0]] +
                          q.l1 * ref.nodes()[tv[1]] +
                          q.l2 * ref.nodes()[tv[2]];
      Eigen::Vector2d rates = domain.rates_at(p);
      qps.push_back({{rates.x(), rates.y()},
                     q.w * 0.5 * a2 * exact_map(p.x(), p.y())});
    }
  }

  const int nt = grid.nt(), nc = grid.nc();
  Eigen::MatrixXd bar = Eigen::MatrixXd::Zero(nt, nc);
  for (const auto& qp : qps) {
    for (int j = 0; j < nc; ++j) {
      double C = grid.concentrations[j];
      for (int i = 0; i < nt; ++i)
        bar(i, j) += qp.wf * kernel_value(qp.rate, grid.times[i], C, kp);
    }
  }

  std::mt19937_64 rng(opt.seed);
  std::normal_distribution<double> unit(0.0, 1.0);
  SensorgramSet out{grid, bar};
  for (int j = 0; j < nc; ++j) {
    // omega_q has standard deviation sqrt(q), q the 1-based column index
    double omega = unit(rng) * std::sqrt(static_cast<double>(j + 1));
    double peak = bar.col(j).maxCoeff();
    if (opt.per_point_noise) {
      for (int i = 0; i < nt; ++i) {
        double omega_p = unit(rng) * std::sqrt(static_cast<double>(j + 1));
        out.values(i, j) += std::max(0.0, peak * opt.delta * omega_p);
      }
    } else {
      out.values.col(j).array() += std::max(0.0, peak * opt.delta * omega);
    }
  }
  return out;
}

}  // namespace rcmap
