#pragma once

#include <string>
#include <vector>

#include "lgrowth/diagnostics.hpp"
#include "lgrowth/gibbs.hpp"
#include "lgrowth/simulator.hpp"

namespace lgrowth::report {

// Recovery scoring of a fit against the generating truth: one row per
// scalar truth parameter with its posterior location and HPD coverage flag.
struct ScoreRow {
  std::string name;
  double truth = 0;
  double mean = 0;
  double sd = 0;
  double abs_z = 0;
  double hpd_lo = 0;
  double hpd_hi = 0;
  bool covered = false;
};

std::vector<ScoreRow> recovery_scorecard(
    const std::vector<diag::ParameterSummary>& summaries,
    const sim::SimulationTruth& truth);

void write_scorecard_csv(const std::vector<ScoreRow>& rows,
                         const std::string& path);

// Draws persistence: one CSV per chain, rows `chain,draw,parameter,value`,
// covering every scalar_views parameter.
void write_draws_csv(const gibbs::ChainOutput& chain, const ModelConfig& config,
                     const std::string& path);

// Reconstructs chains (summary fields only) from persisted draws files.
std::vector<gibbs::ChainOutput> read_draws_csv(
    const std::vector<std::string>& paths, const ModelConfig& config);

// Per-subject slope draws for the subjects selected for trajectory export.
struct SubjectDraws {
  std::string id;
  std::vector<Eigen::VectorXd> draws;  // stacked facet blocks, pooled chains
};

std::vector<SubjectDraws> collect_subject_draws(
    const std::vector<gibbs::ChainOutput>& chains, const gibbs::Panel& panel,
    const std::vector<std::string>& subject_ids);

void write_subject_effects_csv(const std::vector<SubjectDraws>& subjects,
                               const std::string& path);
std::vector<SubjectDraws> read_subject_effects_csv(const std::string& path);

void write_summary_csv(const std::vector<diag::ParameterSummary>& summaries,
                       const std::string& path);

void write_trajectory_csv(const diag::TrajectoryBand& band,
                          const std::string& path);
void write_trajectory_svg(const diag::TrajectoryBand& band,
                          const std::string& title, const std::string& path);

void write_covariates_csv(const std::vector<diag::CovariateRow>& rows,
                          const std::string& path);

void write_spearman_csv(const diag::SpearmanResult& rho,
                        const std::vector<OutcomeSpec>& outcomes,
                        const std::string& path);

// Posterior mean and HPD band of each listed subject's latent trajectory,
// per facet, over the age grid.
void write_subject_trajectories_csv(const std::vector<SubjectDraws>& subjects,
                                    const ModelConfig& config,
                                    const Eigen::VectorXd& age_grid,
                                    const std::string& path);

}  // namespace lgrowth::report
