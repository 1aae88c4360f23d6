#include "rcmap/truncnorm.hpp"

#include <cmath>
#include <stdexcept>

#include <Eigen/Cholesky>

namespace rcmap {

double norm_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

double sample_lower_truncated_normal(double mean, double sd, double lower,
                                     std::mt19937_64& rng) {
  const double a = (lower - mean) / sd;  // standardized truncation point
  std::normal_distribution<double> unit(0.0, 1.0);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  if (a < 0.5) {
    // plain rejection: acceptance probability >= 1 - Phi(0.5) ~ 0.31
    for (;;) {
      double z = unit(rng);
      if (z >= a) return mean + sd * z;
    }
  }
  // Robert's translated-exponential rejection for far-tail truncation
  const double alpha = 0.5 * (a + std::sqrt(a * a + 4.0));
  for (;;) {
    double z = a - std::log(1.0 - u01(rng)) / alpha;
    double rho = std::exp(-0.5 * (z - alpha) * (z - alpha));
    if (u01(rng) <= rho) return mean + sd * z;
  }
}

namespace {

TruncNormResult sample_impl(const Eigen::VectorXd& center,
                            const Eigen::MatrixXd& cov,
                            const Eigen::MatrixXd* precision, int count,
                            const TruncNormOptions& opt,
                            std::mt19937_64& rng) {
  const int n = static_cast<int>(center.size());
  if (count < 1)
    throw std::invalid_argument("sample_truncated_normal: count must be >= 1");

  Eigen::VectorXd marg_sd = cov.diagonal().cwiseSqrt();
  double union_bound = 0;  // upper bound on the removed mass
  double min_keep = 1.0;   // smallest per-coordinate P(x_i >= 0)
  for (int i = 0; i < n; ++i) {
    double keep = norm_cdf(center[i] / marg_sd[i]);
    union_bound += 1.0 - keep;
    min_keep = std::min(min_keep, keep);
  }
  if (min_keep < 1e-12)
    throw std::runtime_error(
        "sample_truncated_normal: truncation mass below 1e-12; the center is "
        "far outside the nonnegative orthant -- inspect the data fit and "
        "regularization before sampling");

  TruncNormResult out;
  Eigen::LLT<Eigen::MatrixXd> llt(cov);
  if (llt.info() != Eigen::Success)
    throw std::runtime_error("sample_truncated_normal: covariance not SPD");
  Eigen::MatrixXd chol = llt.matrixL();
  std::normal_distribution<double> unit(0.0, 1.0);

  if (union_bound < 1e-6) {
    // truncation negligible: direct Gaussian draws, rare negatives redrawn
    out.hn0 = union_bound;
    out.samples.resize(n, count);
    Eigen::VectorXd z(n);
    for (int s = 0; s < count; ++s) {
      for (int attempt = 0;; ++attempt) {
        for (int i = 0; i < n; ++i) z[i] = unit(rng);
        Eigen::VectorXd x = center + chol * z;
        if (x.minCoeff() >= 0 || attempt > 1000) {
          out.samples.col(s) = x.cwiseMax(0.0);
          break;
        }
      }
    }
    return out;
  }

  // HN(0) from untruncated proposals (blocked for the gemm)
  {
    int accepted = 0;
    const int block = 512;
    Eigen::MatrixXd Z(n, block);
    for (int done = 0; done < opt.hn0_prepass; done += block) {
      int b = std::min(block, opt.hn0_prepass - done);
      for (int s = 0; s < b; ++s)
        for (int i = 0; i < n; ++i) Z(i, s) = unit(rng);
      Eigen::MatrixXd X = (chol * Z.leftCols(b)).colwise() + center;
      for (int s = 0; s < b; ++s)
        if (X.col(s).minCoeff() >= 0) ++accepted;
    }
    out.hn0 = 1.0 - static_cast<double>(accepted) / opt.hn0_prepass;
  }

  // coordinatewise Gibbs scans on the precision form
  Eigen::MatrixXd prec_local;
  const Eigen::MatrixXd* P = precision;
  if (!P) {
    prec_local = llt.solve(Eigen::MatrixXd::Identity(n, n));
    P = &prec_local;
  }
  Eigen::VectorXd cond_sd(n);
  for (int i = 0; i < n; ++i) cond_sd[i] = 1.0 / std::sqrt((*P)(i, i));

  Eigen::VectorXd x = center.cwiseMax(0.0);
  Eigen::VectorXd g = (*P) * (x - center);  // maintained incrementally
  out.samples.resize(n, count);
  const int total = opt.burn_in + count;
  for (int scan = 0; scan < total; ++scan) {
    for (int i = 0; i < n; ++i) {
      double gi = g[i] - (*P)(i, i) * (x[i] - center[i]);
      double mean_i = center[i] - gi / (*P)(i, i);
      double xnew =
          sample_lower_truncated_normal(mean_i, cond_sd[i], 0.0, rng);
      double dx = xnew - x[i];
      if (dx != 0.0) {
        g += dx * P->col(i);
        x[i] = xnew;
      }
    }
    if (scan >= opt.burn_in) out.samples.col(scan - opt.burn_in) = x;
  }
  return out;
}

}  // namespace

TruncNormResult sample_truncated_normal_prec(const Eigen::VectorXd& center,
                                             const Eigen::MatrixXd& precision,
                                             int count,
                                             const TruncNormOptions& opt,
                                             std::mt19937_64& rng) {
  Eigen::LLT<Eigen::MatrixXd> llt(precision);
  if (llt.info() != Eigen::Success)
    throw std::runtime_error("sample_truncated_normal: precision not SPD");
  Eigen::MatrixXd cov = llt.solve(
      Eigen::MatrixXd::Identity(precision.rows(), precision.cols()));
  return sample_impl(center, cov, &precision, count, opt, rng);
}

TruncNormResult sample_truncated_normal_both(const Eigen::VectorXd& center,
                                             const Eigen::MatrixXd& cov,
                                             const Eigen::MatrixXd& precision,
                                             int count,
                                             const TruncNormOptions& opt,
                                             std::mt19937_64& rng) {
  return sample_impl(center, cov, &precision, count, opt, rng);
}

TruncNormResult sample_truncated_normal(const Eigen::VectorXd& center,
                                        const Eigen::MatrixXd& cov, int count,
                                        const TruncNormOptions& opt,
                                        std::mt19937_64& rng) {
  return sample_impl(center, cov, nullptr, count, opt, rng);
}

}  // namespace rcmap
