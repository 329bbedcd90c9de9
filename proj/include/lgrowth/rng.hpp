#pragma once

#include <cstdint>
#include <random>

#include <Eigen/Dense>

namespace lgrowth {

// Deterministic random source. All variate transforms are implemented here
// (inverse-CDF normal, Marsaglia-Tsang gamma) so that a seed fully fixes the
// draw stream independent of standard-library distribution internals.
class Rng {
 public:
  explicit Rng(std::uint64_t seed, std::uint64_t stream = 0);

  // Uniform on the open interval (0, 1).
  double uniform();
  double normal();
  double normal(double mean, double sd) { return mean + sd * normal(); }
  // Gamma(shape, scale) with mean shape*scale; shape > 0, scale > 0.
  double gamma(double shape, double scale);
  // InvGamma(shape, scale) with density ~ x^{-shape-1} exp(-scale/x).
  double inv_gamma(double shape, double scale);
  double chi_squared(double df) { return gamma(0.5 * df, 2.0); }

  std::uint64_t raw() { return engine_(); }

 private:
  std::mt19937_64 engine_;
};

// Draw from N(mean, sd^2) restricted to the half-open interval (lo, hi].
// Either bound may be infinite. Uses the inverse-CDF with mirrored tail
// handling; if the interval mass underflows entirely, returns the endpoint
// nearest the mean.
double sample_truncated_normal(Rng& rng, double mean, double sd, double lo,
                               double hi);

// Mean-plus-Cholesky multivariate normal draw; requires SPD covariance.
Eigen::VectorXd sample_mvn(Rng& rng, const Eigen::VectorXd& mean,
                           const Eigen::MatrixXd& cov);

// Positive-semidefinite variant (eigendecomposition with clamped roots),
// for simulation configs with degenerate covariances.
Eigen::VectorXd sample_mvn_psd(Rng& rng, const Eigen::VectorXd& mean,
                               const Eigen::MatrixXd& cov);

}  // namespace lgrowth
