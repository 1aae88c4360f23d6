#include "rcmap/operators.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include <Eigen/Cholesky>

namespace rcmap {

const std::vector<TriQuadPoint>& quad_rule(int order) {
  static const std::vector<TriQuadPoint> rule1 = {
      {1.0 / 3, 1.0 / 3, 1.0 / 3, 1.0}};
  static const std::vector<TriQuadPoint> rule3 = {
      {2.0 / 3, 1.0 / 6, 1.0 / 6, 1.0 / 3},
      {1.0 / 6, 2.0 / 3, 1.0 / 6, 1.0 / 3},
      {1.0 / 6, 1.0 / 6, 2.0 / 3, 1.0 / 3}};
  static const std::vector<TriQuadPoint> rule7 = [] {
    std::vector<TriQuadPoint> r;
    r.push_back({1.0 / 3, 1.0 / 3, 1.0 / 3, 9.0 / 40});
    const double a1 = 0.47014206410511508, w1 = 0.13239415278850616;
    const double a2 = 0.10128650732345634, w2 = 0.12593918054482717;
    for (auto [a, w] : {std::pair{a1, w1}, std::pair{a2, w2}}) {
      double b = 1.0 - 2.0 * a;
      r.push_back({b, a, a, w});
      r.push_back({a, b, a, w});
      r.push_back({a, a, b, w});
    }
    return r;
  }();
  switch (order) {
    case 1: return rule1;
    case 3: return rule3;
    case 7: return rule7;
    default:
      throw std::invalid_argument("quad_rule: order must be 1, 3 or 7");
  }
}

Eigen::MatrixXd assemble_design_matrix(const TriMesh& mesh,
                                       const InjectionGrid& grid,
                                       const KineticsParams& kp,
                                       const DomainSpec& domain,
                                       int quad_order,
                                       const KernelFn* kernel_override) {
  grid.validate();
  kp.validate();
  const auto& rule = quad_rule(quad_order);
  const int nt = grid.nt(), nc = grid.nc(), n = mesh.num_nodes();
  Eigen::MatrixXd K = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(nt) * nc, n);

  Eigen::VectorXd kcol(static_cast<Eigen::Index>(nt) * nc);
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    const auto& tv = mesh.triangles()[t].v;
    double area = mesh.area(t);
    for (const auto& q : rule) {
      Eigen::Vector2d p = q.l0 * mesh.nodes()[tv[0]] +
                          q.l1 * mesh.nodes()[tv[1]] +
                          q.l2 * mesh.nodes()[tv[2]];
      Eigen::Vector2d rates = domain.rates_at(p);
      RatePoint rp{rates.x(), rates.y()};
      for (int j = 0; j < nc; ++j) {
        double C = grid.concentrations[j];
        for (int i = 0; i < nt; ++i) {
          double v = kernel_override
                         ? (*kernel_override)(rp, grid.times[i], C)
                         : kernel_value(rp, grid.times[i], C, kp);
          kcol[static_cast<Eigen::Index>(j) * nt + i] = v;
        }
      }
      const double wa = q.w * area;
      K.col(tv[0]) += (wa * q.l0) * kcol;
      K.col(tv[1]) += (wa * q.l1) * kcol;
      K.col(tv[2]) += (wa * q.l2) * kcol;
    }
  }
  return K;
}

Eigen::MatrixXd assemble_regularizer(const TriMesh& mesh, RegKind kind,
                                     double eps) {
  const int n = mesh.num_nodes();
  if (kind == RegKind::identity) return Eigen::MatrixXd::Identity(n, n);
  if (!(eps > 0))
    throw std::domain_error(
        "assemble_regularizer: shift eps must be > 0 (unshifted graph "
        "Laplacian is rank-deficient)");
  Eigen::MatrixXd L = Eigen::MatrixXd::Zero(n, n);
  const auto& adj = mesh.node_adjacency();
  for (int i = 0; i < n; ++i) {
    L(i, i) = static_cast<double>(adj[i].size()) + eps;
    for (int j : adj[i]) L(i, j) = -1.0;
  }
  return L;
}

Eigen::MatrixXd assemble_mass(const TriMesh& mesh) {
  const int n = mesh.num_nodes();
  Eigen::MatrixXd M = Eigen::MatrixXd::Zero(n, n);
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    const auto& tv = mesh.triangles()[t].v;
    double s = mesh.area(t) / 12.0;
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b)
        M(tv[a], tv[b]) += (a == b) ? 2.0 * s : s;
  }
  return M;
}

DesignSystem assemble_design(const TriMesh& mesh, const InjectionGrid& grid,
                             const KineticsParams& kp,
                             const DomainSpec& domain, int quad_order,
                             RegKind reg, double reg_eps) {
  DesignSystem sys;
  sys.nt = grid.nt();
  sys.nc = grid.nc();
  sys.n = mesh.num_nodes();
  sys.K = assemble_design_matrix(mesh, grid, kp, domain, quad_order);
  sys.L = assemble_regularizer(mesh, reg, reg_eps);
  sys.M = assemble_mass(mesh);

  // full-rank check on L via L^T L, SPD check on M
  Eigen::LLT<Eigen::MatrixXd> lltL(sys.L.transpose() * sys.L);
  if (lltL.info() != Eigen::Success)
    throw std::runtime_error("assemble_design: regularizer is rank-deficient");
  Eigen::LLT<Eigen::MatrixXd> lltM(sys.M);
  if (lltM.info() != Eigen::Success)
    throw std::runtime_error("assemble_design: mass matrix not SPD");
  return sys;
}

namespace {

std::uint64_t fnv1a(const void* data, std::size_t len, std::uint64_t h) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < len; ++i) {
    h ^= p[i];
    h *= 1099511628211ull;
  }
  return h;
}

template <typename T>
std::uint64_t fnv1a_pod(const T& v, std::uint64_t h) {
  return fnv1a(&v, sizeof(T), h);
}

}  // namespace

std::uint64_t design_cache_key(const TriMesh& mesh, const InjectionGrid& grid,
                               const KineticsParams& kp,
                               const DomainSpec& domain, int quad_order,
                               RegKind reg, double reg_eps) {
  std::uint64_t h = 1469598103934665603ull;
  for (const auto& p : mesh.nodes()) {
    h = fnv1a_pod(p.x(), h);
    h = fnv1a_pod(p.y(), h);
  }
  for (const auto& t : mesh.triangles()) h = fnv1a(t.v.data(), sizeof(t.v), h);
  h = fnv1a(grid.times.data(), grid.times.size() * 8, h);
  h = fnv1a(grid.concentrations.data(), grid.concentrations.size() * 8, h);
  h = fnv1a_pod(kp, h);
  h = fnv1a_pod(domain.ka.lo, h);
  h = fnv1a_pod(domain.ka.hi, h);
  h = fnv1a_pod(domain.ka.log10, h);
  h = fnv1a_pod(domain.kd.lo, h);
  h = fnv1a_pod(domain.kd.hi, h);
  h = fnv1a_pod(domain.kd.log10, h);
  h = fnv1a_pod(quad_order, h);
  h = fnv1a_pod(reg, h);
  h = fnv1a_pod(reg_eps, h);
  return h;
}

namespace {

void write_matrix(std::ofstream& os, const Eigen::MatrixXd& m) {
  std::int64_t r = m.rows(), c = m.cols();
  os.write(reinterpret_cast<const char*>(&r), 8);
  os.write(reinterpret_cast<const char*>(&c), 8);
  os.write(reinterpret_cast<const char*>(m.data()),
           static_cast<std::streamsize>(m.size() * 8));
}

bool read_matrix(std::ifstream& is, Eigen::MatrixXd& m) {
  std::int64_t r = 0, c = 0;
  is.read(reinterpret_cast<char*>(&r), 8);
  is.read(reinterpret_cast<char*>(&c), 8);
  if (!is || r < 0 || c < 0) return false;
  m.resize(r, c);
  is.read(reinterpret_cast<char*>(m.data()),
          static_cast<std::streamsize>(m.size() * 8));
  return static_cast<bool>(is);
}

}  // namespace

void save_design(const DesignSystem& sys, const std::string& path,
                 std::uint64_t key) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("save_design: cannot open " + path);
  const char magic[8] = {'r', 'c', 'd', 's', '1', 0, 0, 0};
  os.write(magic, 8);
  os.write(reinterpret_cast<const char*>(&key), 8);
  std::int32_t dims[3] = {sys.nt, sys.nc, sys.n};
  os.write(reinterpret_cast<const char*>(dims), sizeof(dims));
  write_matrix(os, sys.K);
  write_matrix(os, sys.L);
  write_matrix(os, sys.M);
}

bool load_design(DesignSystem& sys, const std::string& path,
                 std::uint64_t key) {
  std::ifstream is(path, std::ios::binary);
  if (!is) return false;
  char magic[8];
  std::uint64_t file_key = 0;
  is.read(magic, 8);
  is.read(reinterpret_cast<char*>(&file_key), 8);
  if (!is || std::memcmp(magic, "rcds1\0\0\0", 8) != 0 || file_key != key)
    return false;
  std::int32_t dims[3];
  is.read(reinterpret_cast<char*>(dims), sizeof(dims));
  if (!is) return false;
  sys.nt = dims[0];
  sys.nc = dims[1];
  sys.n = dims[2];
  return read_matrix(is, sys.K) && read_matrix(is, sys.L) &&
         read_matrix(is, sys.M);
}

}  // namespace rcmap
