#include <doctest.h>

#include <cstdio>
#include <random>

#include "rcmap/vb.hpp"

using namespace rcmap;

namespace {

DomainSpec raw_domain() {
  DomainSpec d;
  d.ka = {1, 7, false};
  d.kd = {0, 3, false};
  return d;
}

/// Small assembled fixture with data generated from a known nodal map.
struct Fixture {
  DesignSystem design;
  SensorgramSet data;
  Eigen::VectorXd truth;
};

Fixture make_fixture(double noise_sd, std::uint64_t seed) {
  auto mesh = uniform_initial_mesh({1, 7, 0, 3}, 4, 4);
  auto grid = InjectionGrid::uniform(0, 4, 20, 0.1, 2.0, 4);
  KineticsParams kp{0, 2, 0};
  Fixture f;
  f.design = assemble_design(mesh, grid, kp, raw_domain());
  f.truth = Eigen::VectorXd::Zero(f.design.n);
  for (int i = 0; i < f.design.n; ++i) {
    double x = mesh.nodes()[i].x(), y = mesh.nodes()[i].y();
    // bounded away from zero so the truncation stays inactive at the truth
    f.truth[i] =
        0.5 + std::exp(-0.3 * ((x - 4) * (x - 4) + (y - 1.5) * (y - 1.5)));
  }
  Eigen::VectorXd stacked = f.design.K * f.truth;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0, noise_sd);
  if (noise_sd > 0)
    for (Eigen::Index i = 0; i < stacked.size(); ++i) stacked[i] += g(rng);
  f.data = SensorgramSet::from_stacked(grid, stacked);
  return f;
}

}  // namespace

TEST_CASE("hyperprior validation") {
  HyperPriors hp;
  hp.beta_c = 0;
  CHECK_THROWS_AS(hp.validate(), std::domain_error);
}

TEST_CASE("initial state: ridge mean and prior hyperfactors") {
  auto f = make_fixture(1e-4, 1);
  HyperPriors hp;
  auto st = init_state(f.design, f.data, hp, 1e-5, 1e-2, 42);
  // the ridge system reproduces (K^T K + lambda I) c0 = K^T R
  Eigen::MatrixXd A = f.design.K.transpose() * f.design.K;
  A.diagonal().array() += 1e-5;
  CHECK((A * st.posterior.center - f.design.K.transpose() * f.data.stacked())
            .norm() <= 1e-8);
  CHECK(st.q_sigma_c.shape == hp.alpha_c);
  CHECK(st.q_sigma_c.scale == hp.beta_c);
  CHECK(st.posterior.cov(0, 0) == 1e-2);

  SensorgramSet zero = f.data;
  zero.values.setZero();
  auto st0 = init_state(f.design, zero, hp, 1e-5, 1e-2, 42);
  CHECK(st0.posterior.center.norm() == 0.0);

  CHECK_THROWS_AS(init_state(f.design, f.data, hp, 0.0, 1e-2, 1),
                  std::domain_error);
}

TEST_CASE("inverse-gamma shape parameters are exact after any update") {
  auto f = make_fixture(1e-3, 2);
  HyperPriors hp;
  hp.alpha_j = 1.25;
  hp.alpha_c = 0.75;
  DesignCache cache(f.design, f.data);
  VBOptions opt;
  opt.sample_count = 50;
  auto st = init_state(f.design, f.data, hp, 1e-5, 1e-2, 3);
  update_c(st, f.design, f.data, cache, opt);
  for (int j = 0; j < f.design.nc; ++j) {
    auto ig = update_sigma_j(st, f.design, f.data, cache, j, hp);
    CHECK(ig.shape == hp.alpha_j + f.design.nt / 2.0);  // bit-exact
  }
  auto igc = update_sigma_c(st, f.design, cache, hp);
  CHECK(igc.shape == hp.alpha_c + f.design.n / 2.0);
}

TEST_CASE("degenerate single-sample scales reduce to plain residuals") {
  auto f = make_fixture(0.0, 3);
  HyperPriors hp;
  DesignCache cache(f.design, f.data);
  VBState st = init_state(f.design, f.data, hp, 1e-5, 1e-2, 4);
  // stage a posterior holding exactly one sample c0 with zero spread
  Eigen::VectorXd c0 = Eigen::VectorXd::Constant(f.design.n, 0.3);
  st.posterior.center = c0;
  st.posterior.mean = c0;
  st.posterior.samples = c0;
  st.posterior.sample_cov = Eigen::MatrixXd::Zero(f.design.n, f.design.n);
  st.posterior.hn0 = 1.0;  // force the Monte Carlo path
  for (int j = 0; j < f.design.nc; ++j) {
    auto ig = update_sigma_j(st, f.design, f.data, cache, j, hp);
    double resid =
        (f.data.values.col(j) - f.design.block(j) * c0).squaredNorm();
    CHECK(ig.scale == doctest::Approx(hp.beta_j + 0.5 * resid).epsilon(1e-12));
  }
  auto igc = update_sigma_c(st, f.design, cache, hp);
  double quad = (f.design.L * c0).squaredNorm();
  CHECK(igc.scale == doctest::Approx(hp.beta_c + 0.5 * quad).epsilon(1e-12));
}

TEST_CASE("data-free limit: zero design gives the prior-driven covariance") {
  const int n = 6, nt = 4, nc = 2;
  DesignSystem design;
  design.K = Eigen::MatrixXd::Zero(nt * nc, n);
  design.L = Eigen::MatrixXd::Identity(n, n) * 2.0;
  design.M = Eigen::MatrixXd::Identity(n, n);
  design.nt = nt;
  design.nc = nc;
  design.n = n;
  SensorgramSet data;
  data.grid = InjectionGrid::uniform(0, 1, nt, 0.5, 1.0, nc);
  data.values = Eigen::MatrixXd::Zero(nt, nc);
  DesignCache cache(design, data);
  HyperPriors hp;
  VBOptions opt;
  opt.sample_count = 100;
  auto st = init_state(design, data, hp, 1e-5, 1e-2, 5);
  st.q_sigma_c = {3.0, 1.5};  // E[1/sigma_c^2] = 2
  update_c(st, design, data, cache, opt);
  CHECK(st.posterior.center.norm() == 0.0);
  // cov = sigma_c^2 (L^T L)^{-1} with the IG mean-inverse plugged in
  Eigen::MatrixXd expect =
      (2.0 * design.L.transpose() * design.L).inverse();
  CHECK((st.posterior.cov - expect).norm() <= 1e-12);
}

TEST_CASE("hyperfactor mean-inverse bound") {
  auto f = make_fixture(1e-3, 6);
  HyperPriors hp;
  VBOptions opt;
  opt.sample_count = 200;
  opt.max_iter = 5;
  auto run = run_vb(f.design, f.data, hp, opt);
  double bound = (hp.alpha_c + f.design.n / 2.0) / hp.beta_c;
  CHECK(run.state.q_sigma_c.mean_inv() >= 0.0);
  CHECK(run.state.q_sigma_c.mean_inv() <= bound);
}

TEST_CASE("posterior invariants hold at every recorded state") {
  auto f = make_fixture(1e-3, 7);
  HyperPriors hp;
  VBOptions opt;
  opt.sample_count = 300;
  opt.max_iter = 8;
  auto run = run_vb(f.design, f.data, hp, opt);
  const auto& post = run.state.posterior;
  CHECK(post.samples.minCoeff() >= 0.0);
  for (int i = 0; i < f.design.n; ++i) {
    CHECK(post.lower[i] <= post.mean[i] + 1e-12);
    CHECK(post.mean[i] <= post.upper[i] + 1e-12);
  }
  CHECK((post.cov - post.cov.transpose()).norm() <= 1e-12 * post.cov.norm());
  Eigen::LLT<Eigen::MatrixXd> llt(post.cov);
  CHECK(llt.info() == Eigen::Success);
}

TEST_CASE("a warm start at the truth converges and stays there") {
  auto f = make_fixture(1e-8, 8);
  HyperPriors hp{1e-3, 1e-8, 1e-3, 1e-8};
  VBOptions opt;
  opt.sample_count = 400;
  opt.tol = 1e-3;
  opt.kappa0 = 1e-10;
  auto run = run_vb(f.design, f.data, hp, opt, &f.truth);
  CHECK(run.converged);
  CHECK(run.state.delta1_history.back() <= opt.tol);
  CHECK(run.state.delta2_history.back() <= opt.tol);
  double rel = (run.state.posterior.mean - f.truth).norm() / f.truth.norm();
  CHECK(rel <= 0.02);
}

TEST_CASE("VB recovers the truth on clean data") {
  auto f = make_fixture(1e-6, 9);
  // weak hyperpriors: the noise scale is learned from the data instead of
  // being floored at beta / (alpha + N_T/2)
  HyperPriors hp{1e-3, 1e-8, 1e-3, 1e-8};
  VBOptions opt;
  opt.sample_count = 500;
  opt.max_iter = 60;
  auto run = run_vb(f.design, f.data, hp, opt);
  CHECK(run.converged);
  double rel = (run.state.posterior.mean - f.truth).norm() / f.truth.norm();
  CHECK(rel <= 0.05);
}

TEST_CASE("state checkpoint round-trip") {
  auto f = make_fixture(1e-3, 10);
  HyperPriors hp;
  VBOptions opt;
  opt.sample_count = 100;
  opt.max_iter = 3;
  auto run = run_vb(f.design, f.data, hp, opt);
  std::string path = "vb_state_test.bin";
  save_vb_state(run.state, path);
  auto back = load_vb_state(path);
  CHECK(back.iteration == run.state.iteration);
  CHECK((back.posterior.center - run.state.posterior.center).norm() == 0.0);
  CHECK((back.posterior.cov - run.state.posterior.cov).norm() == 0.0);
  REQUIRE(back.q_sigma_j.size() == run.state.q_sigma_j.size());
  for (std::size_t j = 0; j < back.q_sigma_j.size(); ++j) {
    CHECK(back.q_sigma_j[j].shape == run.state.q_sigma_j[j].shape);
    CHECK(back.q_sigma_j[j].scale == run.state.q_sigma_j[j].scale);
  }
  // the restored generator continues the exact same stream
  std::mt19937_64 a = run.state.rng, b = back.rng;
  for (int k = 0; k < 100; ++k) CHECK(a() == b());
  std::remove(path.c_str());
}
