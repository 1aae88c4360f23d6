#include "rcmap/analysis.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include "rcmap/operators.hpp"

namespace rcmap {

namespace {

std::shared_ptr<const TriMesh> require_mesh(const RateConstantMap& map) {
  if (!map.mesh) throw std::invalid_argument("map has no mesh");
  if (map.values.size() != map.mesh->num_nodes())
    throw std::invalid_argument("map nodal vector size mismatch");
  return map.mesh;
}

}  // namespace

double l2_relative_error(const RateConstantMap& estimate,
                         const AnalyticMap& exact) {
  auto mesh = require_mesh(estimate);
  const auto rule = quad_rule(7);
  double num = 0, den = 0;
  for (int t = 0; t < mesh->num_triangles(); ++t) {
    const auto& tv = mesh->triangles()[t].v;
    const Eigen::Vector2d& p0 = mesh->nodes()[tv[0]];
    const Eigen::Vector2d& p1 = mesh->nodes()[tv[1]];
    const Eigen::Vector2d& p2 = mesh->nodes()[tv[2]];
    double area = mesh->area(t);
    for (const auto& q : rule) {
      Eigen::Vector2d p = q.l0 * p0 + q.l1 * p1 + q.l2 * p2;
      double u = q.l0 * estimate.values[tv[0]] +
                 q.l1 * estimate.values[tv[1]] +
                 q.l2 * estimate.values[tv[2]];
      double f = exact(p.x(), p.y());
      num += q.w * area * (u - f) * (u - f);
      den += q.w * area * f * f;
    }
  }
  if (den <= 0)
    throw std::domain_error("l2_relative_error: exact map has zero norm");
  return std::sqrt(num / den);
}

double l2_relative_error(const RateConstantMap& estimate,
                         const RateConstantMap& exact) {
  auto mesh = require_mesh(estimate);
  require_mesh(exact);
  if (exact.mesh.get() != mesh.get() &&
      exact.mesh->num_nodes() != mesh->num_nodes())
    throw std::invalid_argument("l2_relative_error: meshes differ");
  Eigen::MatrixXd M = assemble_mass(*mesh);
  Eigen::VectorXd e = estimate.values - exact.values;
  double num = e.dot(M * e);
  double den = exact.values.dot(M * exact.values);
  if (den <= 0)
    throw std::domain_error("l2_relative_error: exact map has zero norm");
  return std::sqrt(num / den);
}

double quantile(std::vector<double> v, double p) {
  if (v.empty()) throw std::invalid_argument("quantile: empty sample");
  if (p < 0 || p > 1) throw std::invalid_argument("quantile: p outside [0,1]");
  std::sort(v.begin(), v.end());
  double pos = p * (static_cast<double>(v.size()) - 1);
  std::size_t lo = static_cast<std::size_t>(pos);
  std::size_t hi = std::min(lo + 1, v.size() - 1);
  double frac = pos - static_cast<double>(lo);
  return v[lo] * (1 - frac) + v[hi] * frac;
}

double relative_wasserstein(const std::vector<double>& samples_a,
                            const std::vector<double>& samples_b) {
  std::vector<double> a = samples_a, b = samples_b;
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  auto pick = [](const std::vector<double>& s, double p) {
    double pos = p * (static_cast<double>(s.size()) - 1);
    std::size_t lo = static_cast<std::size_t>(pos);
    std::size_t hi = std::min(lo + 1, s.size() - 1);
    double frac = pos - static_cast<double>(lo);
    return s[lo] * (1 - frac) + s[hi] * frac;
  };
  double w = 0;
  for (int i = 1; i <= 100; ++i) {
    double qa = pick(a, i / 100.0);
    double qb = pick(b, i / 100.0);
    w += std::abs(qa - qb) / (qb + 1.0);
  }
  return w / 100.0;
}

Eigen::VectorXd relative_wasserstein(const Eigen::MatrixXd& samples_a,
                                     const Eigen::MatrixXd& samples_b) {
  if (samples_a.rows() != samples_b.rows())
    throw std::invalid_argument("relative_wasserstein: row count mismatch");
  Eigen::VectorXd w(samples_a.rows());
  std::vector<double> a, b;
  for (Eigen::Index i = 0; i < samples_a.rows(); ++i) {
    a.assign(samples_a.row(i).begin(), samples_a.row(i).end());
    b.assign(samples_b.row(i).begin(), samples_b.row(i).end());
    w[i] = relative_wasserstein(a, b);
  }
  return w;
}

InteractionReport tcm(const RateConstantMap& map, double nu) {
  if (!(nu > 0 && nu < 100))
    throw std::domain_error("tcm: nu must lie in (0, 100)");
  auto mesh = require_mesh(map);
  const int n = mesh->num_nodes();

  InteractionReport report;
  report.nu = nu;
  double vmax = map.values.maxCoeff();
  report.threshold = (1 - nu / 100.0) * vmax;
  if (vmax <= 0) return report;

  std::vector<char> above(n, 0);
  for (int i = 0; i < n; ++i) above[i] = map.values[i] >= report.threshold;

  // connected components of the above-threshold node set on the edge graph
  std::vector<int> label(n, -1);
  const auto& adj = mesh->node_adjacency();
  for (int seed = 0; seed < n; ++seed) {
    if (!above[seed] || label[seed] >= 0) continue;
    InteractionRegion region;
    std::vector<int> stack = {seed};
    label[seed] = static_cast<int>(report.regions.size());
    while (!stack.empty()) {
      int u = stack.back();
      stack.pop_back();
      region.nodes.push_back(u);
      if (region.peak_node < 0 || map.values[u] > region.peak_value) {
        region.peak_node = u;
        region.peak_value = map.values[u];
      }
      for (int v : adj[u]) {
        if (above[v] && label[v] < 0) {
          label[v] = label[seed];
          stack.push_back(v);
        }
      }
    }
    std::sort(region.nodes.begin(), region.nodes.end());
    region.peak_x = mesh->nodes()[region.peak_node].x();
    region.peak_y = mesh->nodes()[region.peak_node].y();
    report.regions.push_back(std::move(region));
  }
  std::sort(report.regions.begin(), report.regions.end(),
            [](const InteractionRegion& a, const InteractionRegion& b) {
              return a.peak_value > b.peak_value;
            });
  return report;
}

RateConstantMap moment_map(std::shared_ptr<const TriMesh> mesh,
                           const Eigen::MatrixXd& samples, double p) {
  if (!mesh) throw std::invalid_argument("moment_map: null mesh");
  if (samples.rows() != mesh->num_nodes())
    throw std::invalid_argument("moment_map: sample rows != node count");
  if (!(p > 0)) throw std::domain_error("moment_map: p must be > 0");
  RateConstantMap out;
  out.mesh = std::move(mesh);
  out.kind = MapKind::moment;
  out.moment_order = p;
  out.values = samples.array()
                   .max(0.0)
                   .pow(p)
                   .rowwise()
                   .mean();
  return out;
}

Eigen::MatrixXd intensity_map(const RateConstantMap& map, int raster) {
  if (raster < 2) throw std::invalid_argument("intensity_map: raster < 2");
  auto mesh = require_mesh(map);
  NodalBasis basis(mesh);
  Rect r = mesh->bounds();
  Eigen::MatrixXd img(raster, raster);
  for (int iy = 0; iy < raster; ++iy) {
    double y = r.y0 + (r.y1 - r.y0) * iy / (raster - 1);
    for (int ix = 0; ix < raster; ++ix) {
      double x = r.x0 + (r.x1 - r.x0) * ix / (raster - 1);
      img(iy, ix) = basis.interpolate(map.values, {x, y});
    }
  }
  return img;
}

double data_overlap(const SensorgramSet& observed,
                    const SensorgramSet& fitted) {
  if (observed.values.rows() != fitted.values.rows() ||
      observed.values.cols() != fitted.values.cols())
    throw std::invalid_argument("data_overlap: shape mismatch");
  double den = observed.values.norm();
  if (den <= 0) throw std::domain_error("data_overlap: zero observed norm");
  double ratio = (observed.values - fitted.values).norm() / den;
  return std::clamp(100.0 * (1.0 - ratio), 0.0, 100.0);
}

std::vector<std::array<double, 4>> threshold_contour_segments(
    const RateConstantMap& map, double level) {
  auto mesh = require_mesh(map);
  std::vector<std::array<double, 4>> segments;
  for (int t = 0; t < mesh->num_triangles(); ++t) {
    const auto& tv = mesh->triangles()[t].v;
    // edge crossings of the linear interpolant at `level`
    std::vector<Eigen::Vector2d> pts;
    for (int e = 0; e < 3; ++e) {
      int a = tv[e], b = tv[(e + 1) % 3];
      double va = map.values[a] - level, vb = map.values[b] - level;
      if ((va > 0) == (vb > 0)) continue;
      if (va == vb) continue;
      double s = va / (va - vb);
      Eigen::Vector2d p =
          mesh->nodes()[a] + s * (mesh->nodes()[b] - mesh->nodes()[a]);
      pts.push_back(p);
    }
    if (pts.size() == 2)
      segments.push_back({pts[0].x(), pts[0].y(), pts[1].x(), pts[1].y()});
  }
  return segments;
}

void write_report_json(const InteractionReport& report,
                       const DomainSpec& domain, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("write_report_json: cannot open " + path);
  os.precision(17);
  os << "{\n  \"nu\": " << report.nu
     << ",\n  \"threshold\": " << report.threshold
     << ",\n  \"regions\": [\n";
  for (std::size_t r = 0; r < report.regions.size(); ++r) {
    const auto& region = report.regions[r];
    Eigen::Vector2d rates =
        domain.rates_at({region.peak_x, region.peak_y});
    os << "    {\n      \"peak_node\": " << region.peak_node
       << ",\n      \"peak_coord\": [" << region.peak_x << ", "
       << region.peak_y << "]"
       << ",\n      \"peak_ka\": " << rates.x()
       << ",\n      \"peak_kd\": " << rates.y()
       << ",\n      \"peak_value\": " << region.peak_value
       << ",\n      \"node_count\": " << region.nodes.size() << "\n    }"
       << (r + 1 == report.regions.size() ? "\n" : ",\n");
  }
  os << "  ]\n}\n";
}

}  // namespace rcmap
