#include <doctest.h>

#include <random>

#include "rcmap/mcmc.hpp"

using namespace rcmap;

namespace {

DomainSpec raw_domain() {
  DomainSpec d;
  d.ka = {1, 7, false};
  d.kd = {0, 3, false};
  return d;
}

struct Fixture {
  DesignSystem design;
  SensorgramSet data;
  Eigen::VectorXd truth;
};

Fixture make_fixture(double noise_sd, std::uint64_t seed) {
  auto mesh = uniform_initial_mesh({1, 7, 0, 3}, 4, 4);
  auto grid = InjectionGrid::uniform(0, 4, 20, 0.1, 2.0, 4);
  Fixture f;
  f.design = assemble_design(mesh, grid, {0, 2, 0}, raw_domain());
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
  for (Eigen::Index i = 0; i < stacked.size(); ++i) stacked[i] += g(rng);
  f.data = SensorgramSet::from_stacked(grid, stacked);
  return f;
}

}  // namespace

TEST_CASE("config validation") {
  McmcConfig cfg;
  cfg.burn_in = cfg.chain_length;
  CHECK_THROWS_AS(cfg.validate(), std::domain_error);
  cfg = {};
  cfg.thinning = 0;
  CHECK_THROWS_AS(cfg.validate(), std::domain_error);
}

TEST_CASE("chain samples stay in the positive orthant") {
  auto f = make_fixture(1e-3, 1);
  McmcConfig cfg;
  cfg.chain_length = 400;
  cfg.burn_in = 100;
  cfg.seed = 2;
  auto chain = run_mcmc(f.design, f.data, {}, cfg);
  CHECK(chain.c_samples.cols() == 300);
  CHECK(chain.c_samples.minCoeff() >= 0.0);
  CHECK(chain.sigma2_j_samples.minCoeff() > 0.0);
  CHECK(chain.sigma2_c_samples.minCoeff() > 0.0);
}

TEST_CASE("same seed replays the chain bit-exactly, thinning subsamples") {
  auto f = make_fixture(1e-3, 3);
  McmcConfig cfg;
  cfg.chain_length = 300;
  cfg.burn_in = 50;
  cfg.seed = 7;
  auto a = run_mcmc(f.design, f.data, {}, cfg);
  auto b = run_mcmc(f.design, f.data, {}, cfg);
  CHECK((a.c_samples - b.c_samples).norm() == 0.0);
  CHECK((a.sigma2_c_samples - b.sigma2_c_samples).norm() == 0.0);

  cfg.seed = 8;
  auto c = run_mcmc(f.design, f.data, {}, cfg);
  CHECK((a.c_samples - c.c_samples).norm() > 0.0);

  cfg.seed = 7;
  cfg.thinning = 5;
  auto thin = run_mcmc(f.design, f.data, {}, cfg);
  CHECK(thin.c_samples.cols() == 50);
  // thinning keeps every 5th post-burn-in state of the same trajectory
  CHECK((thin.c_samples.col(0) - a.c_samples.col(0)).norm() == 0.0);
  CHECK((thin.c_samples.col(1) - a.c_samples.col(5)).norm() == 0.0);
}

TEST_CASE("posterior mean tracks the truth on low-noise data") {
  auto f = make_fixture(1e-4, 4);
  McmcConfig cfg;
  cfg.chain_length = 3000;
  cfg.burn_in = 500;
  cfg.seed = 5;
  // weak hyperpriors keep the noise scale data-driven at this small N_T
  auto chain = run_mcmc(f.design, f.data, {1e-3, 1e-8, 1e-3, 1e-8}, cfg);
  Eigen::VectorXd mean = chain.c_samples.rowwise().mean();
  // the data determine K c to noise level; the map itself only up to the
  // likelihood-flat directions, hence the looser nodal bound
  Eigen::VectorXd fitted = f.design.K * mean;
  Eigen::VectorXd observed = f.data.stacked();
  CHECK((fitted - observed).norm() / observed.norm() <= 1e-3);
  CHECK((mean - f.truth).norm() / f.truth.norm() <= 0.3);
}

TEST_CASE("time cap truncates the chain and flags it") {
  auto f = make_fixture(1e-3, 5);
  McmcConfig cfg;
  cfg.chain_length = 2000000;
  cfg.burn_in = 0;
  cfg.t_max_seconds = 0.05;
  auto chain = run_mcmc(f.design, f.data, {}, cfg);
  CHECK(chain.hit_time_cap);
  CHECK(chain.c_samples.cols() < 2000000);
}

TEST_CASE("factor correlations: bounds, degenerate streams flagged") {
  McmcChain chain;
  const int kept = 4000;
  std::mt19937_64 rng(6);
  std::normal_distribution<double> g;
  chain.c_samples.resize(3, kept);
  chain.sigma2_j_samples.resize(2, kept);
  chain.sigma2_c_samples.resize(kept);
  for (int s = 0; s < kept; ++s) {
    for (int i = 0; i < 3; ++i) chain.c_samples(i, s) = g(rng);
    for (int j = 0; j < 2; ++j) chain.sigma2_j_samples(j, s) = 1 + 0.1 * g(rng);
    chain.sigma2_c_samples[s] = 2 + 0.1 * g(rng);
  }
  auto rho = factor_correlations(chain);
  CHECK_FALSE(rho.zero_variance_flag);
  // independent streams: all correlations near zero
  CHECK(rho.max_c_sigma_j <= 0.05);
  CHECK(rho.max_c_sigma_c <= 0.05);
  CHECK(rho.max_sigma_j_sigma_c <= 0.05);

  // perfectly coupled pair is detected
  chain.sigma2_c_samples = chain.c_samples.row(0).transpose();
  rho = factor_correlations(chain);
  CHECK(rho.max_c_sigma_c == doctest::Approx(1.0).epsilon(1e-12));

  // constant stream reports zero with the degeneracy flag
  chain.sigma2_c_samples.setConstant(3.0);
  rho = factor_correlations(chain);
  CHECK(rho.zero_variance_flag);
  CHECK(rho.max_c_sigma_c == 0.0);
}

TEST_CASE("autocorrelation: unit lag zero, white noise decays") {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> g;
  Eigen::VectorXd trace(20000);
  for (Eigen::Index i = 0; i < trace.size(); ++i) trace[i] = g(rng);
  auto acf = autocorrelation(trace, 10);
  CHECK(acf[0] == doctest::Approx(1.0).epsilon(1e-12));
  for (int lag = 1; lag <= 10; ++lag) CHECK(std::abs(acf[lag]) <= 0.05);
}

TEST_CASE("Gibbs conditional for sigma^2 matches the conjugate closed form") {
  // sigma2_j | c ~ IG(alpha + nt/2, beta + r_j(c)/2), so
  // (1/sigma2_j) * scale_j(c) / shape has conditional expectation 1.
  auto f = make_fixture(1e-2, 8);
  HyperPriors hp;
  DesignCache cache(f.design, f.data);
  McmcState st;
  st.c = f.truth;
  st.sigma2_j = Eigen::VectorXd::Ones(f.design.nc);
  st.sigma2_c = 1;
  std::mt19937_64 rng(9);
  const int sweeps = 8000;
  double shape = hp.alpha_j + f.design.nt / 2.0;
  double zsum = 0, z2sum = 0;
  long count = 0;
  for (int k = 0; k < sweeps; ++k) {
    McmcState s = st;
    gibbs_step(s, f.design, f.data, cache, hp, rng);
    for (int j = 0; j < f.design.nc; ++j) {
      double resid = (f.data.values.col(j) - f.design.block(j) * s.c)
                         .squaredNorm();
      double scale = hp.beta_j + 0.5 * resid;
      double z = scale / (shape * s.sigma2_j[j]);
      zsum += z;
      z2sum += z * z;
      ++count;
    }
  }
  double mean = zsum / count;
  double sd = std::sqrt(z2sum / count - mean * mean);
  CHECK(std::abs(mean - 1.0) <= 4.0 * sd / std::sqrt(double(count)));
}
