#pragma once

#include <cmath>
#include <string>

#include <Eigen/Dense>

#include "lgrowth/errors.hpp"

namespace lgrowth::spline {

template <typename Scalar>
inline Scalar positive_part(Scalar a) {
  return a > Scalar(0) ? a : Scalar(0);
}

// Ordered vector of knot ages; strictly increasing, strictly positive, finite.
class KnotVector {
 public:
  explicit KnotVector(Eigen::VectorXd xi) : xi_(std::move(xi)) {
    if (xi_.size() < 1) throw ValidationError("knots: need at least one knot");
    for (Eigen::Index k = 0; k < xi_.size(); ++k) {
      if (!std::isfinite(xi_[k]) || xi_[k] <= 0.0)
        throw ValidationError("knots: knot " + std::to_string(k + 1) +
                              " must be positive and finite");
      if (k > 0 && !(xi_[k] > xi_[k - 1]))
        throw ValidationError("knots: not strictly increasing at position " +
                              std::to_string(k + 1));
    }
  }

  int count() const { return static_cast<int>(xi_.size()); }
  double operator[](int k) const { return xi_[k]; }
  const Eigen::VectorXd& values() const { return xi_; }

 private:
  Eigen::VectorXd xi_;
};

// Piecewise-linear basis at one age: b_0 = w - (w - xi_1)_+,
// b_k = (w - xi_k)_+ - (w - xi_{k+1})_+ for 1 <= k <= K-1, b_K = (w - xi_K)_+.
// The components telescope to w, so slopes dotted with the basis give the
// broken-stick trajectory.
template <typename Scalar, typename DerivedKnots, typename DerivedOut>
inline void basis_vector_into(Scalar age,
                              const Eigen::MatrixBase<DerivedKnots>& knots,
                              Eigen::MatrixBase<DerivedOut> const& out_) {
  auto& out = const_cast<Eigen::MatrixBase<DerivedOut>&>(out_);
  const Eigen::Index K = knots.size();
  out(0) = age - positive_part(age - knots(0));
  for (Eigen::Index k = 1; k < K; ++k)
    out(k) = positive_part(age - knots(k - 1)) - positive_part(age - knots(k));
  out(K) = positive_part(age - knots(K - 1));
}

inline Eigen::VectorXd basis_vector(double age, const KnotVector& knots) {
  if (!std::isfinite(age) || age <= 0.0)
    throw ValidationError("basis_vector: age must be positive and finite");
  Eigen::VectorXd b(knots.count() + 1);
  basis_vector_into(age, knots.values(), b);
  return b;
}

// Latent trajectory zeta(w) = b(w) . slopes at each requested age.
inline Eigen::VectorXd eval_trajectory(
    const Eigen::Ref<const Eigen::VectorXd>& slopes, const KnotVector& knots,
    const Eigen::Ref<const Eigen::VectorXd>& ages) {
  if (slopes.size() != knots.count() + 1)
    throw ValidationError("eval_trajectory: slope count " +
                          std::to_string(slopes.size()) +
                          " does not match K+1 = " +
                          std::to_string(knots.count() + 1));
  Eigen::VectorXd zeta(ages.size());
  Eigen::VectorXd b(knots.count() + 1);
  for (Eigen::Index i = 0; i < ages.size(); ++i) {
    if (!std::isfinite(ages[i]) || ages[i] <= 0.0)
      throw ValidationError("eval_trajectory: age must be positive and finite");
    basis_vector_into(ages[i], knots.values(), b);
    zeta[i] = b.dot(slopes);
  }
  return zeta;
}

inline double eval_trajectory_at(const Eigen::Ref<const Eigen::VectorXd>& slopes,
                                 const KnotVector& knots, double age) {
  Eigen::VectorXd w(1);
  w[0] = age;
  return eval_trajectory(slopes, knots, w)[0];
}

}  // namespace lgrowth::spline
