#ifndef RCMAP_OPERATORS_HPP
#define RCMAP_OPERATORS_HPP

#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "rcmap/kinetics.hpp"
#include "rcmap/mesh.hpp"

namespace rcmap {

enum class RegKind { identity, graph_laplacian_shifted };

/// Symmetric Gaussian quadrature point in barycentric coordinates;
/// weights sum to 1 (integral = area * sum w_i f(p_i)).
struct TriQuadPoint {
  double l0, l1, l2, w;
};

/// Rules with 1 (degree 1), 3 (degree 2) or 7 (degree 5) points.
const std::vector<TriQuadPoint>& quad_rule(int order);

/// Assembled discrete system: design matrix K in sensorgram block order,
/// full-rank regularization operator L, linear-element mass matrix M.
struct DesignSystem {
  Eigen::MatrixXd K;  // (nt*nc) x n
  Eigen::MatrixXd L;  // n x n
  Eigen::MatrixXd M;  // n x n, SPD
  int nt = 0, nc = 0, n = 0;

  Eigen::Block<const Eigen::MatrixXd> block(int j) const {
    return K.middleRows(j * nt, nt);
  }
};

/// Test hook: replaces the interaction kernel during assembly.
using KernelFn =
    std::function<double(const RatePoint&, double t, double C)>;

/// Triangle-wise Gaussian quadrature of kernel x hat function.
/// quad_order must be 1, 3 or 7 (points per triangle).
Eigen::MatrixXd assemble_design_matrix(const TriMesh& mesh,
                                       const InjectionGrid& grid,
                                       const KineticsParams& kp,
                                       const DomainSpec& domain,
                                       int quad_order = 7,
                                       const KernelFn* kernel_override = nullptr);

/// identity -> I_n; graph_laplacian_shifted -> (D - A) + eps*I on the
/// mesh node-adjacency graph. eps must be > 0 for the shifted kind.
Eigen::MatrixXd assemble_regularizer(const TriMesh& mesh, RegKind kind,
                                     double eps = 1e-6);

/// Exact linear-element mass matrix.
Eigen::MatrixXd assemble_mass(const TriMesh& mesh);

/// Full system assembly; verifies L is full rank and M is SPD.
DesignSystem assemble_design(const TriMesh& mesh, const InjectionGrid& grid,
                             const KineticsParams& kp,
                             const DomainSpec& domain, int quad_order = 7,
                             RegKind reg = RegKind::graph_laplacian_shifted,
                             double reg_eps = 1e-6);

/// Cache key for binary K/L/M reuse across runs.
std::uint64_t design_cache_key(const TriMesh& mesh, const InjectionGrid& grid,
                               const KineticsParams& kp,
                               const DomainSpec& domain, int quad_order,
                               RegKind reg, double reg_eps);

void save_design(const DesignSystem& sys, const std::string& path,
                 std::uint64_t key);
/// Returns false when the file is absent or the key does not match.
bool load_design(DesignSystem& sys, const std::string& path,
                 std::uint64_t key);

}  // namespace rcmap

#endif
