#pragma once

// Brute-force oracles used only by tests: quadrature posteriors on tiny
// models and closed-form truncated-normal moments. Kept independent of the
// sampler code paths (basis vectors and marginal likelihoods are assembled
// here from scratch).

#include <functional>
#include <utility>

#include <Eigen/Dense>

#include "lgrowth/config.hpp"
#include "lgrowth/data.hpp"
#include "lgrowth/gibbs.hpp"

namespace oracle {

// Closed-form mean and variance of N(m, v) truncated to (lo, hi].
std::pair<double, double> truncated_normal_moments(double m, double v,
                                                   double lo, double hi);

struct GridResult {
  Eigen::VectorXd mean;
  Eigen::VectorXd sd;
};

// Trapezoid-quadrature posterior moments of a 1- or 2-dimensional density
// exp(logpost) over the box [lo, hi], n points per dimension.
GridResult grid_moments(const std::function<double(const Eigen::VectorXd&)>& logpost,
                        const Eigen::VectorXd& lo, const Eigen::VectorXd& hi,
                        int points_per_dim);

// Two-outcome, two-facet, three-subject model with everything fixed except
// one population slope component and one intercept; random effects are
// marginalized in closed form so the posterior is exactly two-dimensional.
struct TinyModel {
  lgrowth::ModelConfig config;   // K=1, two outcomes, both loadings fixed
  lgrowth::Dataset data;
  Eigen::VectorXd mu_fixed;      // pinned values; free component overridden
  int free_mu_index = 0;
  double alpha2_fixed = 1.0;
  double mu_prior_sd = 5.0;
  double alpha_prior_var = 1e3;
  Eigen::MatrixXd sigma_beta;    // known
  Eigen::MatrixXd sigma_eps;     // known

  TinyModel();
};

// Posterior moments of (mu_free, alpha_1) by quadrature over +-8 prior sds.
GridResult tiny_grid_posterior(const TinyModel& tiny, int points_per_dim);

// Engine-side setup for the same model: update policy pinning everything
// except the two free scalars, and the matching initial state.
lgrowth::gibbs::UpdatePolicy tiny_policy(const TinyModel& tiny);
lgrowth::gibbs::ParameterState tiny_initial_state(
    const TinyModel& tiny, const lgrowth::gibbs::Panel& panel);

}  // namespace oracle
