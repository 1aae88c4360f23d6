#include "rcmap/vb.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

namespace rcmap {

void HyperPriors::validate() const {
  if (!(alpha_j > 0 && beta_j > 0 && alpha_c > 0 && beta_c > 0))
    throw std::domain_error("hyperpriors: all parameters must be > 0");
}

DesignCache::DesignCache(const DesignSystem& design,
                         const SensorgramSet& data) {
  if (data.values.rows() != design.nt || data.values.cols() != design.nc)
    throw std::invalid_argument("DesignCache: data/design dimension mismatch");
  LtL = design.L.transpose() * design.L;
  gram.reserve(design.nc);
  ktr.reserve(design.nc);
  for (int j = 0; j < design.nc; ++j) {
    auto Kj = design.block(j);
    gram.emplace_back(Kj.transpose() * Kj);
    ktr.emplace_back(Kj.transpose() * data.values.col(j));
    rtr.push_back(data.values.col(j).squaredNorm());
    gram_trace.push_back(gram.back().trace());
  }
}

VBState init_state(const DesignSystem& design, const SensorgramSet& data,
                   const HyperPriors& hp, double lambda0, double kappa0,
                   std::uint64_t seed) {
  hp.validate();
  if (!(lambda0 > 0)) throw std::domain_error("init_state: lambda0 must be > 0");
  if (!(kappa0 > 0)) throw std::domain_error("init_state: kappa0 must be > 0");
  const int n = design.n;

  Eigen::MatrixXd A = design.K.transpose() * design.K;
  A.diagonal().array() += lambda0;
  Eigen::LLT<Eigen::MatrixXd> llt(A);
  if (llt.info() != Eigen::Success)
    throw std::runtime_error("init_state: ridge system not SPD");
  Eigen::VectorXd mean = llt.solve(design.K.transpose() * data.stacked());

  VBState state;
  state.posterior.center = mean;
  state.posterior.cov = kappa0 * Eigen::MatrixXd::Identity(n, n);
  state.posterior.mean = mean;
  state.posterior.lower = mean;
  state.posterior.upper = mean;
  state.posterior.hn0 = 0;
  state.q_sigma_j.assign(design.nc, InverseGamma{hp.alpha_j, hp.beta_j});
  state.q_sigma_c = InverseGamma{hp.alpha_c, hp.beta_c};
  state.rng.seed(seed);
  return state;
}

namespace {

void sample_summaries(TruncatedNormalPosterior& post, double analytic_threshold) {
  const int n = static_cast<int>(post.samples.rows());
  const int N = static_cast<int>(post.samples.cols());
  post.mean = post.samples.rowwise().mean();
  post.lower.resize(n);
  post.upper.resize(n);
  std::vector<double> row(N);
  for (int i = 0; i < n; ++i) {
    for (int s = 0; s < N; ++s) row[s] = post.samples(i, s);
    std::sort(row.begin(), row.end());
    auto pick = [&](double p) {
      double pos = p * (N - 1);
      int lo = static_cast<int>(pos);
      int hi = std::min(lo + 1, N - 1);
      double frac = pos - lo;
      return row[lo] * (1 - frac) + row[hi] * frac;
    };
    post.lower[i] = pick(0.025);
    post.upper[i] = pick(0.975);
  }
  if (post.hn0 >= analytic_threshold) {
    Eigen::MatrixXd centered = post.samples.colwise() - post.mean;
    post.sample_cov = (centered * centered.transpose()) / N;
  } else {
    post.sample_cov.resize(0, 0);
  }
}

}  // namespace

void update_c(VBState& state, const DesignSystem& design,
              const SensorgramSet& data, const DesignCache& cache,
              const VBOptions& opt) {
  const int n = design.n;
  Eigen::MatrixXd P = state.q_sigma_c.mean_inv() * cache.LtL;
  Eigen::VectorXd b = Eigen::VectorXd::Zero(n);
  for (int j = 0; j < design.nc; ++j) {
    double w = state.q_sigma_j[j].mean_inv();
    P += w * cache.gram[j];
    b += w * cache.ktr[j];
  }

  Eigen::LLT<Eigen::MatrixXd> llt(P);
  if (llt.info() != Eigen::Success) {
    double jitter = 1e-10 * P.trace() / n;
    P.diagonal().array() += jitter;
    llt.compute(P);
    if (llt.info() != Eigen::Success) {
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(P);
      std::ostringstream msg;
      msg << "update_c: system matrix not SPD even after jitter " << jitter
          << "; eigenvalue range [" << es.eigenvalues().minCoeff() << ", "
          << es.eigenvalues().maxCoeff() << "]";
      throw std::runtime_error(msg.str());
    }
  }

  TruncatedNormalPosterior post;
  post.cov = llt.solve(Eigen::MatrixXd::Identity(n, n));
  post.center = llt.solve(b);

  TruncNormOptions tnopt;
  tnopt.burn_in = opt.burn_in;
  auto draw = sample_truncated_normal_both(post.center, post.cov, P,
                                           opt.sample_count, tnopt, state.rng);
  post.samples = std::move(draw.samples);
  post.hn0 = draw.hn0;
  sample_summaries(post, opt.analytic_threshold);
  state.posterior = std::move(post);
}

namespace {

/// E[c^T A c - 2 b^T c] + const form of the residual quadratic, using the
/// analytic Gaussian moments or the stored sample moments.
double expected_quadratic(const TruncatedNormalPosterior& post,
                          const Eigen::MatrixXd& A, double analytic_threshold,
                          const Eigen::VectorXd* linear, double constant) {
  bool analytic = post.hn0 < analytic_threshold || post.sample_cov.size() == 0;
  const Eigen::VectorXd& m = analytic ? post.center : post.mean;
  double quad = m.dot(A * m);
  quad += analytic ? A.cwiseProduct(post.cov).sum()
                   : A.cwiseProduct(post.sample_cov).sum();
  if (linear) quad -= 2.0 * linear->dot(m);
  return quad + constant;
}

}  // namespace

InverseGamma update_sigma_j(const VBState& state, const DesignSystem& design,
                            const SensorgramSet& data, const DesignCache& cache,
                            int j, const HyperPriors& hp,
                            double analytic_threshold) {
  double resid = expected_quadratic(state.posterior, cache.gram[j],
                                    analytic_threshold, &cache.ktr[j],
                                    cache.rtr[j]);
  return {hp.alpha_j + design.nt / 2.0, hp.beta_j + 0.5 * std::max(resid, 0.0)};
}

InverseGamma update_sigma_c(const VBState& state, const DesignSystem& design,
                            const DesignCache& cache, const HyperPriors& hp,
                            double analytic_threshold) {
  double quad = expected_quadratic(state.posterior, cache.LtL,
                                   analytic_threshold, nullptr, 0.0);
  return {hp.alpha_c + design.n / 2.0, hp.beta_c + 0.5 * std::max(quad, 0.0)};
}

VBRunResult run_vb(const DesignSystem& design, const SensorgramSet& data,
                   const HyperPriors& hp, const VBOptions& opt,
                   const Eigen::VectorXd* init_mean) {
  if (!(opt.tol > 0)) throw std::domain_error("run_vb: tol must be > 0");
  DesignCache cache(design, data);
  VBState state =
      init_state(design, data, hp, opt.lambda0, opt.kappa0, opt.seed);
  if (init_mean) {
    if (init_mean->size() != design.n)
      throw std::invalid_argument("run_vb: init mean dimension mismatch");
    state.posterior.center = *init_mean;
    state.posterior.mean = *init_mean;
  }

  // first hyperfactor half-step from the initial Gaussian factor
  // q0(c) = N(c0, kappa0 I)
  {
    const Eigen::VectorXd& c0 = state.posterior.center;
    for (int j = 0; j < design.nc; ++j) {
      double resid = cache.rtr[j] - 2.0 * cache.ktr[j].dot(c0) +
                     c0.dot(cache.gram[j] * c0) +
                     opt.kappa0 * cache.gram_trace[j];
      state.q_sigma_j[j] = {hp.alpha_j + design.nt / 2.0,
                            hp.beta_j + 0.5 * std::max(resid, 0.0)};
    }
    double quad = c0.dot(cache.LtL * c0) + opt.kappa0 * cache.LtL.trace();
    state.q_sigma_c = {hp.alpha_c + design.n / 2.0,
                       hp.beta_c + 0.5 * std::max(quad, 0.0)};
  }

  Eigen::VectorXd prev_c = state.posterior.center;
  Eigen::MatrixXd prev_cov = state.posterior.cov;
  bool converged = false;
  for (int k = 1; k <= opt.max_iter; ++k) {
    update_c(state, design, data, cache, opt);
    for (int j = 0; j < design.nc; ++j)
      state.q_sigma_j[j] = update_sigma_j(state, design, data, cache, j, hp,
                                          opt.analytic_threshold);
    state.q_sigma_c =
        update_sigma_c(state, design, cache, hp, opt.analytic_threshold);
    state.iteration = k;

    double denom1 = prev_c.norm();
    double d1 = denom1 > 0 ? (state.posterior.center - prev_c).norm() / denom1
                           : state.posterior.center.norm();
    double denom2 = prev_cov.norm();
    double d2 = denom2 > 0 ? (state.posterior.cov - prev_cov).norm() / denom2
                           : state.posterior.cov.norm();
    state.delta1_history.push_back(d1);
    state.delta2_history.push_back(d2);

    const auto& h = state.delta1_history;
    if (h.size() >= 6 && h.back() > 10.0 * h[h.size() - 6] && h.back() > 10.0) {
      std::ostringstream msg;
      msg << "run_vb: divergence detected at iteration " << k
          << " (Delta1 grew from " << h[h.size() - 6] << " to " << h.back()
          << " over 5 iterations)";
      throw std::runtime_error(msg.str());
    }

    if (d1 <= opt.tol && d2 <= opt.tol) {
      converged = true;
      break;
    }
    prev_c = state.posterior.center;
    prev_cov = state.posterior.cov;
  }
  return {std::move(state), converged};
}

namespace {

void write_vec(std::ofstream& os, const Eigen::VectorXd& v) {
  std::int64_t nn = v.size();
  os.write(reinterpret_cast<const char*>(&nn), 8);
  os.write(reinterpret_cast<const char*>(v.data()),
           static_cast<std::streamsize>(v.size() * 8));
}

Eigen::VectorXd read_vec(std::ifstream& is) {
  std::int64_t nn = 0;
  is.read(reinterpret_cast<char*>(&nn), 8);
  Eigen::VectorXd v(nn);
  is.read(reinterpret_cast<char*>(v.data()),
          static_cast<std::streamsize>(nn * 8));
  if (!is) throw std::runtime_error("vb checkpoint: truncated file");
  return v;
}

}  // namespace

void save_vb_state(const VBState& state, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("save_vb_state: cannot open " + path);
  const char magic[8] = {'r', 'c', 'v', 'b', '1', 0, 0, 0};
  os.write(magic, 8);
  std::int64_t it = state.iteration;
  os.write(reinterpret_cast<const char*>(&it), 8);
  write_vec(os, state.posterior.center);
  std::int64_t n = state.posterior.cov.rows();
  os.write(reinterpret_cast<const char*>(&n), 8);
  os.write(reinterpret_cast<const char*>(state.posterior.cov.data()),
           static_cast<std::streamsize>(state.posterior.cov.size() * 8));
  std::int64_t nc = static_cast<std::int64_t>(state.q_sigma_j.size());
  os.write(reinterpret_cast<const char*>(&nc), 8);
  for (const auto& ig : state.q_sigma_j) {
    os.write(reinterpret_cast<const char*>(&ig.shape), 8);
    os.write(reinterpret_cast<const char*>(&ig.scale), 8);
  }
  os.write(reinterpret_cast<const char*>(&state.q_sigma_c.shape), 8);
  os.write(reinterpret_cast<const char*>(&state.q_sigma_c.scale), 8);
  std::ostringstream rngss;
  rngss << state.rng;
  std::string rngs = rngss.str();
  std::int64_t len = static_cast<std::int64_t>(rngs.size());
  os.write(reinterpret_cast<const char*>(&len), 8);
  os.write(rngs.data(), len);
}

VBState load_vb_state(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("load_vb_state: cannot open " + path);
  char magic[8];
  is.read(magic, 8);
  if (std::string(magic, 5) != "rcvb1")
    throw std::runtime_error("load_vb_state: bad magic");
  VBState state;
  std::int64_t it = 0;
  is.read(reinterpret_cast<char*>(&it), 8);
  state.iteration = static_cast<int>(it);
  state.posterior.center = read_vec(is);
  std::int64_t n = 0;
  is.read(reinterpret_cast<char*>(&n), 8);
  state.posterior.cov.resize(n, n);
  is.read(reinterpret_cast<char*>(state.posterior.cov.data()),
          static_cast<std::streamsize>(n * n * 8));
  std::int64_t nc = 0;
  is.read(reinterpret_cast<char*>(&nc), 8);
  state.q_sigma_j.resize(nc);
  for (auto& ig : state.q_sigma_j) {
    is.read(reinterpret_cast<char*>(&ig.shape), 8);
    is.read(reinterpret_cast<char*>(&ig.scale), 8);
  }
  is.read(reinterpret_cast<char*>(&state.q_sigma_c.shape), 8);
  is.read(reinterpret_cast<char*>(&state.q_sigma_c.scale), 8);
  std::int64_t len = 0;
  is.read(reinterpret_cast<char*>(&len), 8);
  std::string rngs(len, '\0');
  is.read(rngs.data(), len);
  if (!is) throw std::runtime_error("load_vb_state: truncated file");
  std::istringstream rngss(rngs);
  rngss >> state.rng;
  state.posterior.mean = state.posterior.center;
  state.posterior.lower = state.posterior.center;
  state.posterior.upper = state.posterior.center;
  return state;
}

void write_delta_history_csv(const VBState& state, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("write_delta_history_csv: cannot open " + path);
  os << "iteration,delta1,delta2\n";
  os.precision(17);
  for (std::size_t k = 0; k < state.delta1_history.size(); ++k)
    os << (k + 1) << "," << state.delta1_history[k] << ","
       << state.delta2_history[k] << "\n";
}

}  // namespace rcmap
