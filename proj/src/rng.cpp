#include "lgrowth/rng.hpp"

#include <cmath>
#include <limits>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include "lgrowth/errors.hpp"
#include "lgrowth/normal.hpp"

namespace lgrowth {

namespace {
constexpr double kTiny = 1e-300;  // floor before reciprocals
}

Rng::Rng(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed),
                    static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream),
                    static_cast<std::uint32_t>(stream >> 32)};
  engine_.seed(seq);
}

double Rng::uniform() {
  // 53-bit mantissa, offset to bucket centers so 0 and 1 are unreachable.
  return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
}

double Rng::normal() { return inverse_normal_cdf(uniform()); }

double Rng::gamma(double shape, double scale) {
  if (!(shape > 0.0) || !(scale > 0.0))
    throw NumericalError("Rng::gamma: non-positive shape or scale");
  if (shape < 1.0) {
    // Boost to shape+1 and rescale by u^{1/shape}.
    const double u = uniform();
    return gamma(shape + 1.0, scale) * std::pow(u, 1.0 / shape);
  }
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double x;
    double v;
    do {
      x = normal();
      v = 1.0 + c * x;
    } while (v <= 0.0);
    v = v * v * v;
    const double u = uniform();
    const double x2 = x * x;
    if (u < 1.0 - 0.0331 * x2 * x2) return scale * d * v;
    if (std::log(u) < 0.5 * x2 + d * (1.0 - v + std::log(v)))
      return scale * d * v;
  }
}

double Rng::inv_gamma(double shape, double scale) {
  const double g = gamma(shape, 1.0 / std::max(scale, kTiny));
  return 1.0 / std::max(g, kTiny);
}

double sample_truncated_normal(Rng& rng, double mean, double sd, double lo,
                               double hi) {
  if (!(sd > 0.0))
    throw NumericalError("sample_truncated_normal: non-positive sd");
  if (!(lo < hi)) throw NumericalError("sample_truncated_normal: empty interval");
  const double a = (lo - mean) / sd;
  const double b = (hi - mean) / sd;
  const double u = rng.uniform();
  double z;
  if (a >= 0.0) {
    // Entire interval in the upper tail; work with complementary CDFs,
    // which stay accurate far out (Phi_c(z) = Phi(-z)).
    const double pa = normal_ccdf(a);
    const double pb = normal_ccdf(b);
    if (pa <= pb) return std::min(std::max(lo, mean), hi);  // underflowed mass
    const double pz = pb + u * (pa - pb);
    z = -inverse_normal_cdf(pz);
  } else if (b <= 0.0) {
    const double pa = normal_cdf(a);
    const double pb = normal_cdf(b);
    if (pb <= pa) return std::max(std::min(hi, mean), lo);
    const double pz = pa + u * (pb - pa);
    z = inverse_normal_cdf(pz);
  } else {
    const double pa = normal_cdf(a);
    const double pb = normal_cdf(b);
    const double pz = pa + u * (pb - pa);
    z = inverse_normal_cdf(pz);
  }
  double x = mean + sd * z;
  // Guard rounding at the closed right end / open left end.
  if (!(x <= hi)) x = hi;
  if (!(x > lo)) x = std::nextafter(lo, hi);
  return x;
}

Eigen::VectorXd sample_mvn(Rng& rng, const Eigen::VectorXd& mean,
                           const Eigen::MatrixXd& cov) {
  Eigen::LLT<Eigen::MatrixXd> llt(cov);
  if (llt.info() != Eigen::Success)
    throw NumericalError("sample_mvn: covariance not SPD");
  Eigen::VectorXd z(mean.size());
  for (Eigen::Index i = 0; i < z.size(); ++i) z[i] = rng.normal();
  return mean + llt.matrixL() * z;
}

Eigen::VectorXd sample_mvn_psd(Rng& rng, const Eigen::VectorXd& mean,
                               const Eigen::MatrixXd& cov) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov);
  if (es.info() != Eigen::Success)
    throw NumericalError("sample_mvn_psd: eigendecomposition failed");
  Eigen::VectorXd root = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  Eigen::VectorXd z(mean.size());
  for (Eigen::Index i = 0; i < z.size(); ++i) z[i] = rng.normal();
  return mean + es.eigenvectors() * root.asDiagonal() * z;
}

}  // namespace lgrowth
