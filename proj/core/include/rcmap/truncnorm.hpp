#ifndef RCMAP_TRUNCNORM_HPP
#define RCMAP_TRUNCNORM_HPP

#include <random>

#include <Eigen/Dense>

namespace rcmap {

/// Standard normal CDF.
double norm_cdf(double x);

/// Draw from N(mean, sd^2) truncated to [lower, inf). Uses inverse-CDF
/// style rejection with an exponential proposal when the truncation
/// point sits far in the upper tail (Robert's method).
double sample_lower_truncated_normal(double mean, double sd, double lower,
                                     std::mt19937_64& rng);

struct TruncNormOptions {
  int burn_in = 50;        // Gibbs scans discarded before recording
  int hn0_prepass = 10000; // untruncated proposals for the HN(0) estimate
};

struct TruncNormResult {
  Eigen::MatrixXd samples;  // n x count, coordinatewise >= 0
  double hn0 = 0;           // estimated mass of the removed region
};

/// Positive-orthant truncated multivariate normal via coordinatewise
/// Gibbs scans. `precision` is the inverse covariance. Throws when the
/// truncation mass is estimated below 1e-12.
TruncNormResult sample_truncated_normal_prec(const Eigen::VectorXd& center,
                                             const Eigen::MatrixXd& precision,
                                             int count,
                                             const TruncNormOptions& opt,
                                             std::mt19937_64& rng);

/// Overload for callers that already hold both forms.
TruncNormResult sample_truncated_normal_both(const Eigen::VectorXd& center,
                                             const Eigen::MatrixXd& cov,
                                             const Eigen::MatrixXd& precision,
                                             int count,
                                             const TruncNormOptions& opt,
                                             std::mt19937_64& rng);

/// Convenience overload taking the covariance.
TruncNormResult sample_truncated_normal(const Eigen::VectorXd& center,
                                        const Eigen::MatrixXd& cov, int count,
                                        const TruncNormOptions& opt,
                                        std::mt19937_64& rng);

}  // namespace rcmap

#endif
