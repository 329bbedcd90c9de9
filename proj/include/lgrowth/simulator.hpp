#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "lgrowth/config.hpp"
#include "lgrowth/data.hpp"
#include "lgrowth/rng.hpp"

namespace lgrowth::sim {

// Generative parameter values (same parameterization the sampler estimates).
struct GenerativeParams {
  Eigen::VectorXd mu_beta;
  Eigen::MatrixXd sigma_beta;
  Eigen::VectorXd alpha;
  Eigen::MatrixXd gamma;  // 4 x D
  Eigen::VectorXd loading;
  Eigen::MatrixXd sigma_eps;
};

// Cohort layout: per-subject base age, semiannual sessions alternating
// pre/post season, dropout between sessions, positional mix.
struct CohortDesign {
  int n_subjects = 304;
  double base_age_min = 10.0;
  double base_age_max = 18.5;
  int max_sessions = 6;
  double session_gap = 0.5;
  double dropout = 0.1;
  double max_age = 21.0;
  Eigen::Vector4d position_probs{0.2, 0.3, 0.3, 0.2};  // fwd, mid, def, gk
};

struct SimulationTruth {
  ModelConfig model;
  GenerativeParams params;
  Eigen::VectorXd missing_prob;  // per outcome, in [0, 1)
  CohortDesign design;
  std::uint64_t seed = 1;

  void validate() const;
};

// Default calibration: a 304-subject cohort with the reference slope
// means, regression coefficients, and per-outcome missingness rates baked
// into this module; the covariance magnitudes are free simulation knobs
// set to diagonal matrices at plausible scales.
SimulationTruth default_truth();

struct DesignOccasion {
  int subject = 0;
  std::string session;
  double age = 0;
  bool post_season = false;
};

struct PanelDesign {
  std::vector<std::string> subject_ids;
  std::vector<Position> positions;       // per subject
  std::vector<DesignOccasion> occasions; // subject-major order
  Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> missing;  // D x n_occ
};

PanelDesign gen_design(const SimulationTruth& truth, Rng& rng);

// Hidden generative record kept for oracle checks: subject slopes and the
// continuous pre-rounding responses at every retained occasion.
struct LatentRecord {
  Eigen::MatrixXd beta;   // q x n_subjects
  Eigen::MatrixXd ystar;  // D x n_occ
};

std::pair<Dataset, LatentRecord> simulate_responses(
    const PanelDesign& design, const GenerativeParams& params,
    const ModelConfig& model, Rng& rng);

std::pair<Dataset, LatentRecord> simulate_responses_given_beta(
    const PanelDesign& design, const GenerativeParams& params,
    const Eigen::MatrixXd& beta, const ModelConfig& model, Rng& rng);

std::pair<Dataset, LatentRecord> gen_cohort(const SimulationTruth& truth,
                                            Rng& rng);

std::string to_json(const SimulationTruth& truth);
SimulationTruth truth_from_json(const std::string& text);
SimulationTruth load_truth(const std::string& path);
void save_truth(const SimulationTruth& truth, const std::string& path);

}  // namespace lgrowth::sim
