#include "rcmap/avba.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <numeric>
#include <stdexcept>

#include "rcmap/io.hpp"

namespace rcmap {

void AvbaConfig::validate() const {
  if (!(tau > 0 && tau < 1))
    throw std::domain_error("avba: tau must lie in (0,1)");
  if (!(eps > 0)) throw std::domain_error("avba: eps must be > 0");
  if (max_outer < 1) throw std::domain_error("avba: max_outer must be >= 1");
  if (sample_count < 2)
    throw std::domain_error("avba: sample_count must be >= 2");
  if (!(refine_budget >= 1))
    throw std::domain_error("avba: refine_budget must be >= 1");
}

double triangle_variation(const Eigen::VectorXd& nodal, const TriMesh& mesh,
                          int tri) {
  const auto& tv = mesh.triangles()[tri].v;
  double a = nodal[tv[0]], b = nodal[tv[1]], c = nodal[tv[2]];
  // i != j sum counts each unordered pair twice
  return 2.0 * (std::abs(a - b) + std::abs(a - c) + std::abs(b - c)) / 3.0;
}

Eigen::VectorXd refinement_indicator(const Eigen::VectorXd& mean,
                                     const Eigen::VectorXd& lower,
                                     const Eigen::VectorXd& upper,
                                     const TriMesh& mesh) {
  const int nt = static_cast<int>(mesh.triangles().size());
  Eigen::VectorXd v(nt);
  for (int t = 0; t < nt; ++t)
    v[t] = std::max({triangle_variation(mean, mesh, t),
                     triangle_variation(lower, mesh, t),
                     triangle_variation(upper, mesh, t)});
  return v;
}

std::vector<int> mark(const Eigen::VectorXd& indicator, double tau) {
  double vmax = indicator.size() ? indicator.maxCoeff() : 0.0;
  std::vector<int> marked;
  if (vmax <= 0) return marked;
  double cut = tau * vmax;
  for (int t = 0; t < indicator.size(); ++t)
    if (indicator[t] >= cut) marked.push_back(t);
  std::sort(marked.begin(), marked.end(), [&](int a, int b) {
    if (indicator[a] != indicator[b]) return indicator[a] > indicator[b];
    return a < b;
  });
  return marked;
}

Eigen::VectorXd prolong(const TriMesh& from, const Eigen::VectorXd& values,
                        const TriMesh& to) {
  if (values.size() != static_cast<Eigen::Index>(from.nodes().size()))
    throw std::invalid_argument("prolong: nodal vector size mismatch");
  // non-owning handle: `from` outlives the basis in this scope
  NodalBasis basis(
      std::shared_ptr<const TriMesh>(std::shared_ptr<const TriMesh>(), &from));
  Eigen::VectorXd out(to.nodes().size());
  for (std::size_t i = 0; i < to.nodes().size(); ++i)
    out[static_cast<Eigen::Index>(i)] = basis.interpolate(values, to.nodes()[i]);
  return out;
}

namespace {

RateConstantMap make_map(std::shared_ptr<const TriMesh> mesh,
                         Eigen::VectorXd values, MapKind kind) {
  RateConstantMap m;
  m.mesh = std::move(mesh);
  m.values = std::move(values);
  m.kind = kind;
  return m;
}

}  // namespace

AvbaResult run_avba(std::shared_ptr<const TriMesh> initial_mesh,
                    const InjectionGrid& grid, const KineticsParams& kp,
                    const DomainSpec& domain, const SensorgramSet& data,
                    const HyperPriors& hp, const AvbaConfig& cfg) {
  cfg.validate();
  hp.validate();
  if (!initial_mesh) throw std::invalid_argument("run_avba: null mesh");

  namespace fs = std::filesystem;
  const bool artifacts = !cfg.artifact_dir.empty();
  if (artifacts) fs::create_directories(cfg.artifact_dir);

  AvbaResult result;
  std::shared_ptr<const TriMesh> mesh = std::move(initial_mesh);
  Eigen::VectorXd warm;           // prolonged posterior center
  Eigen::VectorXd prev_mean;      // previous mean prolonged onto current mesh
  bool have_warm = false;

  for (int outer = 1; outer <= cfg.max_outer; ++outer) {
    DesignSystem design = assemble_design(*mesh, grid, kp, domain,
                                          cfg.quad_order, cfg.reg, cfg.reg_eps);

    VBOptions vopt;
    vopt.lambda0 = cfg.lambda0;
    vopt.kappa0 = cfg.kappa0;
    vopt.tol = cfg.vb_tol;
    vopt.max_iter = cfg.vb_max_iter;
    vopt.sample_count = cfg.sample_count;
    vopt.burn_in = cfg.vb_burn_in;
    vopt.seed = cfg.seed + static_cast<std::uint64_t>(outer);

    VBRunResult vb =
        run_vb(design, data, hp, vopt, have_warm ? &warm : nullptr);
    const VBState& st = vb.state;

    AvbaIterationSummary summary;
    summary.nodes = static_cast<int>(mesh->nodes().size());
    summary.triangles = static_cast<int>(mesh->triangles().size());
    summary.vb_iterations = st.iteration;
    summary.delta1 = st.delta1_history.empty() ? 0 : st.delta1_history.back();
    summary.delta2 = st.delta2_history.empty() ? 0 : st.delta2_history.back();
    summary.residual_norm =
        (data.stacked() - design.K * st.posterior.mean).norm();

    double outer_delta = std::numeric_limits<double>::infinity();
    if (prev_mean.size() == st.posterior.mean.size()) {
      double denom = prev_mean.norm();
      outer_delta = denom > 0 ? (st.posterior.mean - prev_mean).norm() / denom
                              : st.posterior.mean.norm();
    }
    summary.outer_delta = outer_delta;

    Eigen::VectorXd indicator = refinement_indicator(
        st.posterior.mean, st.posterior.lower, st.posterior.upper, *mesh);
    std::vector<int> marked = mark(indicator, cfg.tau);
    summary.marked = static_cast<int>(marked.size());
    result.iterations.push_back(summary);

    if (artifacts) {
      fs::path dir = fs::path(cfg.artifact_dir) /
                     ("iteration_" + std::to_string(outer));
      fs::create_directories(dir);
      write_mesh_file(*mesh, (dir / "mesh.txt").string());
      write_nodal_map_csv(*mesh, st.posterior.mean,
                          (dir / "mean.csv").string());
      write_nodal_map_csv(*mesh, st.posterior.lower,
                          (dir / "lower.csv").string());
      write_nodal_map_csv(*mesh, st.posterior.upper,
                          (dir / "upper.csv").string());
      write_delta_history_csv(st, (dir / "deltas.csv").string());
    }

    bool done = outer == cfg.max_outer || marked.empty() ||
                outer_delta <= cfg.eps;
    if (done) {
      result.mesh = mesh;
      result.mean = make_map(mesh, st.posterior.mean, MapKind::mean);
      result.lower = make_map(mesh, st.posterior.lower, MapKind::lower);
      result.upper = make_map(mesh, st.posterior.upper, MapKind::upper);
      result.final_state = std::move(vb.state);
      result.converged = marked.empty() || outer_delta <= cfg.eps;
      return result;
    }

    std::size_t budget = static_cast<std::size_t>(
        cfg.refine_budget * static_cast<double>(mesh->triangles().size()));
    auto refined = std::make_shared<TriMesh>(refine(*mesh, marked, budget));
    warm = prolong(*mesh, st.posterior.center, *refined);
    prev_mean = prolong(*mesh, st.posterior.mean, *refined);
    have_warm = true;
    mesh = std::move(refined);
  }
  throw std::logic_error("run_avba: unreachable");
}

}  // namespace rcmap
