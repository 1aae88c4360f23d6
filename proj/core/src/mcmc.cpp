#include "rcmap/mcmc.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include <Eigen/Cholesky>

namespace rcmap {

void McmcConfig::validate() const {
  if (chain_length < 1)
    throw std::domain_error("mcmc: chain_length must be >= 1");
  if (burn_in < 0 || burn_in >= chain_length)
    throw std::domain_error("mcmc: burn_in must lie in [0, chain_length)");
  if (thinning < 1) throw std::domain_error("mcmc: thinning must be >= 1");
  if (t_max_seconds < 0)
    throw std::domain_error("mcmc: t_max_seconds must be >= 0");
}

namespace {

double draw_inverse_gamma(double shape, double scale, std::mt19937_64& rng) {
  std::gamma_distribution<double> g(shape, 1.0 / scale);
  double x = g(rng);
  if (x <= 0) x = std::numeric_limits<double>::min();
  return 1.0 / x;
}

}  // namespace

void gibbs_step(McmcState& state, const DesignSystem& design,
                const SensorgramSet& data, const DesignCache& cache,
                const HyperPriors& hp, std::mt19937_64& rng) {
  const int n = design.n;
  const int nc = design.nc;

  Eigen::MatrixXd P = (1.0 / state.sigma2_c) * cache.LtL;
  Eigen::VectorXd b = Eigen::VectorXd::Zero(n);
  for (int j = 0; j < nc; ++j) {
    double w = 1.0 / state.sigma2_j[j];
    P += w * cache.gram[j];
    b += w * cache.ktr[j];
  }

  // coordinatewise scan with the running product g = P c
  Eigen::VectorXd g = P * state.c;
  for (int i = 0; i < n; ++i) {
    double pii = P(i, i);
    double mean = state.c[i] + (b[i] - g[i]) / pii;
    double x = sample_lower_truncated_normal(mean, 1.0 / std::sqrt(pii), 0.0,
                                             rng);
    double dx = x - state.c[i];
    if (dx != 0) g += dx * P.col(i);
    state.c[i] = x;
  }

  for (int j = 0; j < nc; ++j) {
    double resid = cache.rtr[j] - 2.0 * cache.ktr[j].dot(state.c) +
                   state.c.dot(cache.gram[j] * state.c);
    state.sigma2_j[j] = draw_inverse_gamma(
        hp.alpha_j + design.nt / 2.0,
        hp.beta_j + 0.5 * std::max(resid, 0.0), rng);
  }
  double quad = state.c.dot(cache.LtL * state.c);
  state.sigma2_c = draw_inverse_gamma(
      hp.alpha_c + n / 2.0, hp.beta_c + 0.5 * std::max(quad, 0.0), rng);
}

McmcChain run_mcmc(const DesignSystem& design, const SensorgramSet& data,
                   const HyperPriors& hp, const McmcConfig& cfg) {
  cfg.validate();
  hp.validate();
  DesignCache cache(design, data);
  const int n = design.n;
  const int nc = design.nc;

  McmcState state;
  {
    Eigen::MatrixXd A = design.K.transpose() * design.K;
    A.diagonal().array() += cfg.lambda0;
    Eigen::LLT<Eigen::MatrixXd> llt(A);
    if (llt.info() != Eigen::Success)
      throw std::runtime_error("run_mcmc: ridge system not SPD");
    state.c = llt.solve(design.K.transpose() * data.stacked()).cwiseMax(0.0);
  }
  state.sigma2_j = Eigen::VectorXd::Ones(nc);
  state.sigma2_c = 1;

  std::mt19937_64 rng(cfg.seed);
  const int kept_max = (cfg.chain_length - cfg.burn_in + cfg.thinning - 1) /
                       cfg.thinning;
  McmcChain chain;
  chain.c_samples.resize(n, kept_max);
  chain.sigma2_j_samples.resize(nc, kept_max);
  chain.sigma2_c_samples.resize(kept_max);

  auto start = std::chrono::steady_clock::now();
  int kept = 0;
  for (int k = 0; k < cfg.chain_length; ++k) {
    gibbs_step(state, design, data, cache, hp, rng);
    if (k >= cfg.burn_in && (k - cfg.burn_in) % cfg.thinning == 0) {
      chain.c_samples.col(kept) = state.c;
      chain.sigma2_j_samples.col(kept) = state.sigma2_j;
      chain.sigma2_c_samples[kept] = state.sigma2_c;
      ++kept;
    }
    if (cfg.t_max_seconds > 0 && (k & 63) == 0) {
      double elapsed = std::chrono::duration<double>(
                           std::chrono::steady_clock::now() - start)
                           .count();
      if (elapsed > cfg.t_max_seconds) {
        chain.hit_time_cap = true;
        break;
      }
    }
  }
  chain.wall_seconds = std::chrono::duration<double>(
                           std::chrono::steady_clock::now() - start)
                           .count();
  chain.c_samples.conservativeResize(n, kept);
  chain.sigma2_j_samples.conservativeResize(nc, kept);
  chain.sigma2_c_samples.conservativeResize(kept);
  return chain;
}

namespace {

/// Pearson coefficient; zero-variance inputs report 0 and set the flag.
double pearson(const Eigen::VectorXd& a, const Eigen::VectorXd& b,
               bool& degenerate) {
  const double n = static_cast<double>(a.size());
  double ma = a.mean(), mb = b.mean();
  Eigen::VectorXd da = a.array() - ma, db = b.array() - mb;
  double va = da.squaredNorm(), vb = db.squaredNorm();
  if (va <= 0 || vb <= 0) {
    degenerate = true;
    return 0;
  }
  (void)n;
  return da.dot(db) / std::sqrt(va * vb);
}

}  // namespace

FactorCorrelations factor_correlations(const McmcChain& chain) {
  const int n = static_cast<int>(chain.c_samples.rows());
  const int nc = static_cast<int>(chain.sigma2_j_samples.rows());
  const int kept = static_cast<int>(chain.c_samples.cols());
  if (kept < 2)
    throw std::invalid_argument("factor_correlations: need >= 2 samples");

  FactorCorrelations out;
  out.rho_c_sigma_j.resize(n, nc);
  out.rho_c_sigma_c.resize(n);
  out.rho_sigma_j_sigma_c.resize(nc);

  for (int i = 0; i < n; ++i) {
    Eigen::VectorXd ci = chain.c_samples.row(i).transpose();
    for (int j = 0; j < nc; ++j)
      out.rho_c_sigma_j(i, j) =
          pearson(ci, chain.sigma2_j_samples.row(j).transpose(),
                  out.zero_variance_flag);
    out.rho_c_sigma_c[i] =
        pearson(ci, chain.sigma2_c_samples, out.zero_variance_flag);
  }
  for (int j = 0; j < nc; ++j)
    out.rho_sigma_j_sigma_c[j] =
        pearson(chain.sigma2_j_samples.row(j).transpose(),
                chain.sigma2_c_samples, out.zero_variance_flag);
  out.max_c_sigma_j = out.rho_c_sigma_j.cwiseAbs().maxCoeff();
  out.max_c_sigma_c = out.rho_c_sigma_c.cwiseAbs().maxCoeff();
  out.max_sigma_j_sigma_c = out.rho_sigma_j_sigma_c.cwiseAbs().maxCoeff();
  return out;
}

Eigen::VectorXd autocorrelation(const Eigen::VectorXd& trace, int max_lag) {
  const int n = static_cast<int>(trace.size());
  if (max_lag < 0 || max_lag >= n)
    throw std::invalid_argument("autocorrelation: bad max_lag");
  double mean = trace.mean();
  Eigen::VectorXd d = trace.array() - mean;
  double var = d.squaredNorm();
  Eigen::VectorXd acf(max_lag + 1);
  if (var <= 0) {
    acf.setZero();
    acf[0] = 1;
    return acf;
  }
  for (int lag = 0; lag <= max_lag; ++lag)
    acf[lag] = d.head(n - lag).dot(d.tail(n - lag)) / var;
  return acf;
}

void save_chain(const McmcChain& chain, const std::string& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  auto write_matrix = [](const Eigen::MatrixXd& m, const fs::path& path) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("save_chain: cannot open " +
                                      path.string());
    os.precision(17);
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      for (Eigen::Index c = 0; c < m.cols(); ++c)
        os << m(r, c) << (c + 1 == m.cols() ? "" : ",");
      os << "\n";
    }
  };
  write_matrix(chain.c_samples, fs::path(dir) / "c_samples.csv");
  write_matrix(chain.sigma2_j_samples, fs::path(dir) / "sigma2_j_samples.csv");
  write_matrix(chain.sigma2_c_samples, fs::path(dir) / "sigma2_c_samples.csv");
}

}  // namespace rcmap
