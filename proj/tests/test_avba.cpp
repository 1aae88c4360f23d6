#include <doctest.h>

#include <random>

#include "rcmap/avba.hpp"

using namespace rcmap;

namespace {

DomainSpec raw_domain() {
  DomainSpec d;
  d.ka = {1, 7, false};
  d.kd = {0, 3, false};
  return d;
}

}  // namespace

TEST_CASE("triangle variation: ordered-pair convention") {
  std::vector<Eigen::Vector2d> nodes = {{0, 0}, {1, 0}, {0, 1}};
  std::vector<TriMesh::Tri> tris = {{{0, 1, 2}}};
  TriMesh mesh(std::move(nodes), std::move(tris));
  Eigen::Vector3d vals(0.0, 1.0, 2.0);
  CHECK(triangle_variation(vals, mesh, 0) ==
        doctest::Approx(8.0 / 3.0).epsilon(1e-15));
  // homogeneity
  CHECK(triangle_variation(3.0 * vals, mesh, 0) ==
        doctest::Approx(8.0).epsilon(1e-15));
  CHECK(triangle_variation(Eigen::Vector3d::Constant(4.0), mesh, 0) == 0.0);
}

TEST_CASE("refinement indicator is the max of the three variations") {
  auto mesh = uniform_initial_mesh({0, 1, 0, 1}, 4, 4);
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> u(0, 1);
  Eigen::VectorXd mean(mesh.num_nodes()), lo(mesh.num_nodes()),
      hi(mesh.num_nodes());
  for (int i = 0; i < mesh.num_nodes(); ++i) {
    mean[i] = u(rng);
    lo[i] = u(rng);
    hi[i] = u(rng);
  }
  auto v = refinement_indicator(mean, lo, hi, mesh);
  REQUIRE(v.size() == mesh.num_triangles());
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    double expect = std::max({triangle_variation(mean, mesh, t),
                              triangle_variation(lo, mesh, t),
                              triangle_variation(hi, mesh, t)});
    CHECK(v[t] == expect);
  }
  auto same = refinement_indicator(mean, mean, mean, mesh);
  for (int t = 0; t < mesh.num_triangles(); ++t)
    CHECK(same[t] == triangle_variation(mean, mesh, t));
}

TEST_CASE("marking selects the threshold set, argmax always included") {
  Eigen::VectorXd ind(5);
  ind << 0.1, 0.9, 0.5, 0.45, 0.0;
  auto marked = mark(ind, 0.5);  // cut = 0.45
  REQUIRE(marked.size() == 3);
  CHECK(marked[0] == 1);  // sorted by descending indicator
  CHECK(marked[1] == 2);
  CHECK(marked[2] == 3);

  auto top = mark(ind, 0.999);
  REQUIRE(top.size() == 1);
  CHECK(top[0] == 1);

  CHECK(mark(Eigen::VectorXd::Zero(4), 0.5).empty());

  // scale invariance of the selection
  auto scaled = mark(10.0 * ind, 0.5);
  CHECK(scaled == marked);
}

TEST_CASE("prolongation is exact for piecewise-linear data") {
  auto coarse = uniform_initial_mesh({1, 7, 0, 3}, 4, 4);
  Eigen::VectorXd nodal(coarse.num_nodes());
  for (int i = 0; i < coarse.num_nodes(); ++i)
    nodal[i] = 0.7 * coarse.nodes()[i].x() - 0.2 * coarse.nodes()[i].y();
  auto fine = refine(coarse, {0, 2, 5, 9});
  auto out = prolong(coarse, nodal, fine);
  REQUIRE(out.size() == fine.num_nodes());
  for (int i = 0; i < fine.num_nodes(); ++i)
    CHECK(out[i] == doctest::Approx(0.7 * fine.nodes()[i].x() -
                                    0.2 * fine.nodes()[i].y())
                        .epsilon(1e-12));
  // same-mesh prolongation is the identity
  auto self = prolong(coarse, nodal, coarse);
  CHECK((self - nodal).norm() <= 1e-12);
}

TEST_CASE("config validation") {
  AvbaConfig cfg;
  cfg.tau = 1.0;
  CHECK_THROWS_AS(cfg.validate(), std::domain_error);
  cfg = {};
  cfg.max_outer = 0;
  CHECK_THROWS_AS(cfg.validate(), std::domain_error);
}

TEST_CASE("adaptive loop refines toward the peak and keeps map ordering") {
  auto dom = raw_domain();
  auto grid = InjectionGrid::uniform(0, 4, 30, 0.05, 2.0, 6);
  KineticsParams kp{0, 2, 0};
  AnalyticMap f = [](double x, double y) {
    return std::exp(-1.5 * ((x - 4) * (x - 4) + (y - 1.5) * (y - 1.5)));
  };
  SyntheticOptions so;
  so.delta = 0.005;
  so.seed = 31;
  auto data = generate_synthetic(f, grid, kp, dom, so);

  auto mesh = std::make_shared<TriMesh>(
      uniform_initial_mesh(dom.rect(), 6, 5));
  AvbaConfig cfg;
  cfg.max_outer = 3;
  cfg.sample_count = 300;
  cfg.vb_max_iter = 15;
  cfg.seed = 32;
  // weak hyperpriors: at this desk scale the default beta would floor the
  // noise variance and flatten the map
  auto result = run_avba(mesh, grid, kp, dom, data,
                         {1e-3, 1e-8, 1e-3, 1e-8}, cfg);

  REQUIRE(!result.iterations.empty());
  CHECK(result.iterations.size() <= 3);
  for (std::size_t k = 1; k < result.iterations.size(); ++k)
    CHECK(result.iterations[k].triangles >=
          result.iterations[k - 1].triangles);
  CHECK(result.mesh->is_conforming());
  for (int i = 0; i < result.mesh->num_nodes(); ++i) {
    CHECK(result.lower.values[i] <= result.mean.values[i] + 1e-12);
    CHECK(result.mean.values[i] <= result.upper.values[i] + 1e-12);
  }
  // the peak of the mean map sits near the true bump
  int argmax = 0;
  result.mean.values.maxCoeff(&argmax);
  Eigen::Vector2d peak = result.mesh->nodes()[argmax];
  CHECK((peak - Eigen::Vector2d(4.0, 1.5)).norm() <= 1.5);
}

TEST_CASE("single outer iteration means no refinement") {
  auto dom = raw_domain();
  auto grid = InjectionGrid::uniform(0, 4, 15, 0.1, 2.0, 3);
  KineticsParams kp{0, 2, 0};
  AnalyticMap f = [](double x, double y) {
    return std::exp(-0.5 * ((x - 4) * (x - 4) + (y - 1.5) * (y - 1.5)));
  };
  SyntheticOptions so;
  so.delta = 0.01;
  so.seed = 41;
  auto data = generate_synthetic(f, grid, kp, dom, so);
  auto mesh = std::make_shared<TriMesh>(
      uniform_initial_mesh(dom.rect(), 5, 4));
  AvbaConfig cfg;
  cfg.max_outer = 1;
  cfg.sample_count = 200;
  cfg.vb_max_iter = 10;
  auto result = run_avba(mesh, grid, kp, dom, data, {}, cfg);
  CHECK(result.mesh->num_triangles() == mesh->num_triangles());
  CHECK(result.iterations.size() == 1);
}
