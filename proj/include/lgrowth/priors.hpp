#pragma once

#include <vector>

#include <Eigen/Dense>

#include "lgrowth/rng.hpp"

namespace lgrowth::priors {

struct InvGammaParams {
  double shape = 0;
  double scale = 0;
};

// Auxiliary-variable horseshoe state for one coefficient block: the prior on
// coefficient j is N(0, tau2 * lambda2_j), with inverse-gamma auxiliaries
// nu_j and xi making every conditional inverse-gamma.
struct HorseshoeState {
  Eigen::VectorXd lambda2;
  Eigen::VectorXd nu;
  double tau2 = 1.0;
  double xi = 1.0;

  static HorseshoeState identity(int dim);
  int dim() const { return static_cast<int>(lambda2.size()); }
  Eigen::VectorXd scales() const { return tau2 * lambda2; }
  void validate() const;
};

struct HorseshoeConditionals {
  std::vector<InvGammaParams> lambda2;
  std::vector<InvGammaParams> nu;
  InvGammaParams tau2;
  InvGammaParams xi;
};

// Full-conditional inverse-gamma parameters for every horseshoe auxiliary,
// given the current coefficient block. Deterministic; no sampling.
HorseshoeConditionals horseshoe_conditional_params(
    const Eigen::Ref<const Eigen::VectorXd>& coeffs, const HorseshoeState& state);

// Draws all auxiliaries from their conditionals, in place.
void refresh_horseshoe(HorseshoeState& state,
                       const Eigen::Ref<const Eigen::VectorXd>& coeffs, Rng& rng);

// Hierarchical inverse-Wishart (half-t marginal construction): with
// auxiliaries a_j ~ InvGamma(1/2, 1/A^2) and
// Sigma | a ~ InvWishart(df + p - 1, 2 df diag(1/a)), the marginal prior on
// sqrt(Sigma_jj) is half-t with `df` degrees of freedom and scale A.
struct HierIWConfig {
  double df = 2.0;
  double scale = 25.0;  // A
};

struct HierIWState {
  Eigen::VectorXd a;

  static HierIWState identity(int dim);
  int dim() const { return static_cast<int>(a.size()); }
  void validate() const;
};

struct InvWishartParams {
  double df = 0;
  Eigen::MatrixXd scale;
};

// Conditional for Sigma given auxiliaries and an n-observation scatter
// matrix: InvWishart(df + p - 1 + n, 2 df diag(1/a) + scatter).
// Rejects scatter matrices that are not symmetric PSD (eigenvalue
// tolerance 1e-10 relative).
InvWishartParams hier_iw_conditional(const Eigen::Ref<const Eigen::MatrixXd>& scatter,
                                     double n, const HierIWState& state,
                                     const HierIWConfig& cfg);

// Conditional for each auxiliary given Sigma:
// a_j ~ InvGamma((df + p)/2, df (Sigma^{-1})_jj + 1/A^2).
std::vector<InvGammaParams> hier_iw_aux_conditional(
    const Eigen::Ref<const Eigen::MatrixXd>& sigma, const HierIWConfig& cfg);

// Bartlett-decomposition inverse-Wishart draw; requires df > p - 1 and SPD
// scale. Result is exactly symmetric and positive definite.
Eigen::MatrixXd sample_inverse_wishart(double df,
                                       const Eigen::Ref<const Eigen::MatrixXd>& scale,
                                       Rng& rng);

// One Gibbs refresh of (Sigma, a) given scatter and n: Sigma from its
// conditional, then a from its conditional given the new Sigma.
void refresh_hier_iw(Eigen::MatrixXd& sigma, HierIWState& state,
                     const Eigen::Ref<const Eigen::MatrixXd>& scatter, double n,
                     const HierIWConfig& cfg, Rng& rng);

// Prior draw of (a, Sigma) for a p-dimensional covariance.
Eigen::MatrixXd sample_hier_iw_prior(HierIWState& state, int p,
                                     const HierIWConfig& cfg, Rng& rng);

// Prior draw of the horseshoe auxiliaries (lambda_j and tau half-Cauchy).
HorseshoeState sample_horseshoe_prior(int dim, Rng& rng);

}  // namespace lgrowth::priors
