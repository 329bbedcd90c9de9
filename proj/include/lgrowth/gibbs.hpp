#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "lgrowth/config.hpp"
#include "lgrowth/data.hpp"
#include "lgrowth/priors.hpp"
#include "lgrowth/rng.hpp"

namespace lgrowth::gibbs {

// Flattened panel with the design pieces the sampler touches every sweep:
// covariates, spline basis per occasion, observation mask, and index lists
// for the augmented count cells and missing cells.
struct Panel {
  int n_subjects = 0;
  int n_outcomes = 0;
  int n_facets = 0;
  int seg = 0;  // K + 1 slopes per facet

  Eigen::VectorXd age;    // N
  Eigen::MatrixXd X;      // 4 x N
  Eigen::MatrixXd B;      // seg x N
  Eigen::MatrixXd yobs;   // D x N, zero where missing
  Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> observed;  // D x N

  std::vector<int> subj_of;                      // N
  std::vector<std::pair<int, int>> occ_range;    // per subject [begin, end)
  std::vector<std::string> subject_ids;

  std::vector<int> facet_of;        // D, zero-based facet index
  std::vector<bool> is_count;       // D
  std::vector<bool> loading_fixed;  // D

  struct Cell {
    int d;
    int occ;
  };
  std::vector<Cell> count_cells;    // observed count cells
  std::vector<Cell> missing_cells;  // unobserved cells
  std::vector<int> missing_per_occ;

  Eigen::MatrixXd ZZt;  // sum over occasions of [1; x][1; x]^T (5 x 5)

  int total_occasions() const { return static_cast<int>(age.size()); }
  int state_dim() const { return n_facets * seg; }
};

Panel build_panel(const Dataset& data, const ModelConfig& config);

// One full MCMC state. `complete` is the complete-data matrix: observed
// continuous values, latent y* for observed counts, imputed values for
// missing cells.
struct ParameterState {
  Eigen::MatrixXd beta;        // q x n_subjects
  Eigen::VectorXd mu_beta;     // q
  Eigen::MatrixXd sigma_beta;  // q x q
  Eigen::VectorXd alpha;       // D
  Eigen::MatrixXd gamma;       // 4 x D
  Eigen::VectorXd loading;     // D, constrained entries exactly one
  Eigen::MatrixXd sigma_eps;   // D x D
  Eigen::MatrixXd complete;    // D x N

  priors::HorseshoeState hs_mu;
  std::vector<priors::HorseshoeState> hs_gamma;  // one block per outcome
  priors::HierIWState iw_beta;
  priors::HierIWState iw_eps;
};

// Which blocks a sweep updates. Component masks (empty = all free) let
// calibration harnesses pin individual coordinates at their current values;
// pinned coordinates condition the draw of the free ones.
struct UpdatePolicy {
  bool augment = true;
  bool impute = true;
  bool beta = true;
  bool mu_beta = true;
  bool sigma_beta = true;
  bool regression = true;
  bool loadings = true;
  bool sigma_eps = true;
  bool horseshoe = true;

  std::vector<bool> mu_beta_mask;                  // size q when present
  std::vector<std::vector<bool>> regression_mask;  // per outcome, size 5
};

// Deterministic initialization: observed means and variances, zero slopes,
// prior-mean loadings, bucket-midpoint latents, outcome-mean imputations.
ParameterState initial_state(const Panel& panel, const ModelConfig& config);

// Draw every parameter from its prior (used by prior-predictive harnesses).
// `complete` is left zero; pair with a forward response simulation.
ParameterState prior_state(const Panel& panel, const ModelConfig& config,
                           Rng& rng);

// Rounding kernel for count outcomes: 0 for y* <= 0, else ceil(y*).
int round_count(double ystar);
std::pair<double, double> count_bucket(int count);  // h(y*)=count iff y* in (lo,hi]

// Measurement mean for subject i, occasion t (zero-based within subject):
// m_d = alpha_d + x'gamma_d + c_d * b(age)'beta_{i,facet(d)}.
Eigen::VectorXd residual_mean(const ParameterState& state, const Panel& panel,
                              int subject, int t);

// Component updates, exposed for unit tests. `omega` is sigma_eps^{-1}.
void augment_counts(ParameterState& state, const Panel& panel,
                    const Eigen::MatrixXd& omega, Rng& rng);
void impute_missing(ParameterState& state, const Panel& panel, Rng& rng);
void update_beta(ParameterState& state, const Panel& panel,
                 const Eigen::MatrixXd& omega, Rng& rng);
void update_population(ParameterState& state, const Panel& panel,
                       const ModelConfig& config, const UpdatePolicy& policy,
                       Rng& rng);
void update_regression(ParameterState& state, const Panel& panel,
                       const ModelConfig& config, const UpdatePolicy& policy,
                       const Eigen::MatrixXd& omega, Rng& rng);
void update_loadings(ParameterState& state, const Panel& panel,
                     const ModelConfig& config, const Eigen::MatrixXd& omega,
                     Rng& rng);
void update_sigma_eps(ParameterState& state, const Panel& panel,
                      const ModelConfig& config, Rng& rng);

// One full sweep in the fixed order: augment, impute, subject slopes,
// population, regression, loadings, residual covariance, shrinkage refresh.
void sweep(ParameterState& state, const Panel& panel, const ModelConfig& config,
           const UpdatePolicy& policy, Rng& rng);

// Complete-data log joint density (likelihood of the complete panel plus
// every proper prior term), used by drift diagnostics.
double log_joint(const ParameterState& state, const Panel& panel,
                 const ModelConfig& config);

struct Draw {
  Eigen::VectorXd mu_beta;
  Eigen::MatrixXd sigma_beta;
  Eigen::VectorXd alpha;
  Eigen::MatrixXd gamma;
  Eigen::VectorXd loading;
  Eigen::MatrixXd sigma_eps;
  Eigen::MatrixXd beta;
  Eigen::VectorXd count_latent;  // complete values at panel.count_cells
  Eigen::VectorXd imputed;       // complete values at panel.missing_cells
  Eigen::VectorXd hs_tau2;       // mu block then one per outcome (empty if off)
  double log_joint = 0;
};

struct ChainOutput {
  int chain_id = 0;
  long iterations = 0;
  long burnin = 0;
  long thin = 0;
  std::uint64_t seed = 0;
  std::vector<Draw> draws;
};

ChainOutput run_chain(const Panel& panel, const ModelConfig& config,
                      const MCMCSettings& settings, int chain_id,
                      const UpdatePolicy& policy = {},
                      const ParameterState* init = nullptr);

// All chains from the config, run concurrently up to the thread budget;
// chain k is seeded with (seed, k) so results do not depend on scheduling.
std::vector<ChainOutput> run_fit(const Dataset& data, const ModelConfig& config,
                                 const UpdatePolicy& policy = {});

}  // namespace lgrowth::gibbs
