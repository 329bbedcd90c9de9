#pragma once

#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "lgrowth/config.hpp"
#include "lgrowth/data.hpp"
#include "lgrowth/gibbs.hpp"
#include "lgrowth/spline.hpp"

namespace lgrowth::diag {

// Shortest contiguous window over the sorted draws containing
// ceil(level * n) draws; ties broken by the earliest window.
std::pair<double, double> hpd_interval(std::vector<double> draws, double level);

struct ConvergenceStat {
  double ess = 0;
  double rhat = 0;
  bool rhat_defined = true;
};

// Split-chain potential scale reduction and autocorrelation ESS (Geyer
// initial-monotone truncation on chain-averaged autocorrelations).
ConvergenceStat convergence(const std::vector<std::vector<double>>& chains);

struct ParameterSummary {
  std::string name;
  double mean = 0;
  double sd = 0;
  double hpd_lo = 0;
  double hpd_hi = 0;
  double ess = 0;
  double rhat = 0;
  bool rhat_defined = true;
};

// Named scalar views over stored draws: population parameters, regression
// blocks, free loadings, covariance entries (lower triangle), shrinkage
// globals. Subject slopes are excluded here and summarized on demand.
// Setters exist so persisted draws can be read back into Draw objects.
struct ScalarView {
  std::string name;
  std::function<double(const gibbs::Draw&)> get;
  std::function<void(gibbs::Draw&, double)> set;
};
std::vector<ScalarView> scalar_views(const ModelConfig& config);

// A Draw with every summarized field sized for `config` (covariances filled
// symmetrically by the setters; fixed loadings preset to one).
gibbs::Draw empty_draw(const ModelConfig& config);

std::vector<ParameterSummary> summarize_chains(
    const std::vector<gibbs::ChainOutput>& chains, const ModelConfig& config,
    double level = 0.95);

struct TrajectoryBand {
  Eigen::VectorXd ages;
  Eigen::VectorXd mean;
  Eigen::VectorXd lo;
  Eigen::VectorXd hi;
};

// Pointwise posterior band of the population trajectory b(age)'mu_beta for
// one facet (1-based), over a grid inside the modeled age range [10, 21].
TrajectoryBand trajectory_band(const std::vector<Eigen::VectorXd>& mu_draws,
                               const spline::KnotVector& knots,
                               const Eigen::VectorXd& age_grid, int facet,
                               int n_facets, double level = 0.95);

Eigen::VectorXd default_age_grid();

struct CovariateCell {
  double mean = 0;
  double hpd_lo = 0;
  double hpd_hi = 0;
  bool excludes_zero = false;
};

struct CovariateRow {
  std::string outcome;
  CovariateCell intercept;
  CovariateCell cells[kCovariateCount];
};

std::vector<CovariateRow> covariate_table(
    const std::vector<gibbs::ChainOutput>& chains, const ModelConfig& config,
    double level = 0.95);

// Spearman rank correlations over pairwise-complete observations, optionally
// restricted to one session label; entries with fewer than three complete
// pairs are marked unavailable.
struct SpearmanResult {
  Eigen::MatrixXd rho;
  Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> available;
};

SpearmanResult spearman_matrix(const Dataset& data,
                               const std::string& session_filter = "");

}  // namespace lgrowth::diag
