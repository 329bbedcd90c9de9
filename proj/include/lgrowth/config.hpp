#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "lgrowth/data.hpp"
#include "lgrowth/priors.hpp"
#include "lgrowth/spline.hpp"

namespace lgrowth {

struct PriorConfig {
  priors::HierIWConfig covariance;   // df 2, scale 25 on both covariances
  double alpha_var = 1e3;            // vague intercept prior variance
  double loading_var = 0.25;         // prior variance of free loadings
  double loading_mean_accuracy = 0.5;
  double loading_mean_speed = -0.5;
  bool horseshoe = true;             // shrinkage on mu_beta and each gamma_d
  double fixed_coef_sd = 5.0;        // Gaussian prior sd when horseshoe is off
};

struct MCMCSettings {
  long iterations = 20000;
  long burnin = 10000;
  long thin = 10;
  int chains = 4;
  std::uint64_t seed = 1;
  int threads = 0;  // 0 = one per chain, capped at hardware concurrency

  long stored_draws() const { return (iterations - burnin) / thin; }
  void validate() const;
};

struct ModelConfig {
  spline::KnotVector knots{(Eigen::VectorXd(3) << 12.0, 15.0, 18.0).finished()};
  std::vector<OutcomeSpec> outcomes = default_outcomes();
  PriorConfig prior;
  MCMCSettings mcmc;
  std::vector<std::string> report_subjects;  // per-subject trajectory export

  int n_outcomes() const { return static_cast<int>(outcomes.size()); }
  int n_facets() const { return facet_count(outcomes); }
  int segment_count() const { return knots.count() + 1; }
  // Dimension of the stacked random-slope vector (facet blocks of K+1).
  int state_dim() const { return n_facets() * segment_count(); }
  int facet_block_start(int facet) const { return (facet - 1) * segment_count(); }

  void validate() const;
};

std::string to_json(const ModelConfig& config);
ModelConfig model_config_from_json(const std::string& text);
ModelConfig load_model_config(const std::string& path);
void save_model_config(const ModelConfig& config, const std::string& path);

// FNV-1a hash of the canonical JSON form; recorded in run manifests.
std::string config_hash(const ModelConfig& config);

}  // namespace lgrowth
