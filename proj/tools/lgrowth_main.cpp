// Command-line front end: simulate / fit / recover / report / summarize.
// Exit codes: 0 success, 2 validation error, 3 numerical failure, 4 I/O error.

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <optional>
#include <sstream>

#include <CLI11.hpp>

#include "lgrowth/config.hpp"
#include "lgrowth/dataset_io.hpp"
#include "lgrowth/diagnostics.hpp"
#include "lgrowth/errors.hpp"
#include "lgrowth/gibbs.hpp"
#include "lgrowth/manifest.hpp"
#include "lgrowth/report.hpp"
#include "lgrowth/simulator.hpp"

namespace fs = std::filesystem;
using namespace lgrowth;

namespace {

struct CommonFlags {
  std::string config_path;
  std::string out_dir;
  bool force = false;
  std::optional<std::uint64_t> seed;
  std::optional<int> chains;
  std::optional<long> iterations;
  std::optional<long> burnin;
  std::optional<long> thin;
  std::optional<int> threads;
};

void add_common_flags(CLI::App* cmd, CommonFlags& flags, bool with_mcmc) {
  cmd->add_option("--config", flags.config_path, "configuration file (JSON)")
      ->envname("LGROWTH_CONFIG");
  cmd->add_option("--out", flags.out_dir, "output directory")
      ->envname("LGROWTH_OUT");
  cmd->add_flag("--force", flags.force, "allow writing into a non-empty directory");
  cmd->add_option("--seed", flags.seed, "random seed")->envname("LGROWTH_SEED");
  if (with_mcmc) {
    cmd->add_option("--chains", flags.chains, "number of chains")
        ->envname("LGROWTH_CHAINS");
    cmd->add_option("--iterations", flags.iterations, "iterations per chain")
        ->envname("LGROWTH_ITERATIONS");
    cmd->add_option("--burnin", flags.burnin, "burn-in iterations")
        ->envname("LGROWTH_BURNIN");
    cmd->add_option("--thin", flags.thin, "thinning interval")
        ->envname("LGROWTH_THIN");
    cmd->add_option("--threads", flags.threads, "concurrent chains")
        ->envname("LGROWTH_THREADS");
  }
}

void apply_mcmc_overrides(const CommonFlags& flags, MCMCSettings& mcmc) {
  if (flags.seed) mcmc.seed = *flags.seed;
  if (flags.chains) mcmc.chains = *flags.chains;
  if (flags.iterations) mcmc.iterations = *flags.iterations;
  if (flags.burnin) mcmc.burnin = *flags.burnin;
  if (flags.thin) mcmc.thin = *flags.thin;
  if (flags.threads) mcmc.threads = *flags.threads;
  mcmc.validate();
}

fs::path prepare_out_dir(const CommonFlags& flags) {
  if (flags.out_dir.empty())
    throw ValidationError("--out directory is required");
  fs::path dir(flags.out_dir);
  std::error_code ec;
  if (fs::exists(dir)) {
    if (!fs::is_directory(dir))
      throw IoError("output path exists and is not a directory: " + dir.string());
    if (!fs::is_empty(dir) && !flags.force)
      throw IoError("output directory " + dir.string() +
                    " is not empty; pass --force to write into it");
  } else if (!fs::create_directories(dir, ec)) {
    throw IoError("cannot create output directory " + dir.string() + ": " +
                  ec.message());
  }
  return dir;
}

struct ArtifactSet {
  fs::path dir;
  std::vector<ManifestEntry> entries;

  std::string path(const std::string& name) const { return (dir / name).string(); }
  void note(const std::string& name) {
    entries.push_back({name, fnv1a_file_hex(path(name))});
  }
};

void finalize_manifest(const std::string& command, const std::string& hash,
                       std::uint64_t seed, const std::vector<std::string>& inputs,
                       ArtifactSet& artifacts) {
  RunManifest m;
  m.command = command;
  m.config_hash = hash;
  m.seed = seed;
  m.inputs = inputs;
  m.artifacts = artifacts.entries;
  m.created_utc = utc_timestamp();
  write_manifest(m, artifacts.dir.string());
}

std::vector<std::string> default_report_subjects(const Dataset& data) {
  std::vector<std::string> ids;
  for (int i = 0; i < std::min(4, data.n_subjects()); ++i)
    ids.push_back(data.subject(i).id);
  return ids;
}

std::string facet_title(int facet, int n_facets) {
  if (n_facets == 2)
    return facet == 1 ? "Domain-generic latent trajectory"
                      : "Domain-specific latent trajectory";
  return "Facet " + std::to_string(facet) + " latent trajectory";
}

void emit_fit_artifacts(const std::vector<gibbs::ChainOutput>& chains,
                        const gibbs::Panel& panel, const ModelConfig& config,
                        const Dataset& data, ArtifactSet& out) {
  for (const auto& chain : chains) {
    const std::string name =
        "draws_chain" + std::to_string(chain.chain_id + 1) + ".csv";
    report::write_draws_csv(chain, config, out.path(name));
    out.note(name);
  }

  const auto summaries = diag::summarize_chains(chains, config);
  report::write_summary_csv(summaries, out.path("summary.csv"));
  out.note("summary.csv");

  std::vector<Eigen::VectorXd> mu_draws;
  for (const auto& chain : chains)
    for (const auto& draw : chain.draws) mu_draws.push_back(draw.mu_beta);
  const Eigen::VectorXd grid = diag::default_age_grid();
  for (int facet = 1; facet <= config.n_facets(); ++facet) {
    const auto band = diag::trajectory_band(mu_draws, config.knots, grid, facet,
                                            config.n_facets());
    const std::string base = "trajectory_" + std::to_string(facet);
    report::write_trajectory_csv(band, out.path(base + ".csv"));
    out.note(base + ".csv");
    report::write_trajectory_svg(band, facet_title(facet, config.n_facets()),
                                 out.path(base + ".svg"));
    out.note(base + ".svg");
  }

  const auto table = diag::covariate_table(chains, config);
  report::write_covariates_csv(table, out.path("covariates.csv"));
  out.note("covariates.csv");

  const auto rho = diag::spearman_matrix(data);
  report::write_spearman_csv(rho, config.outcomes, out.path("spearman.csv"));
  out.note("spearman.csv");

  const auto subject_ids = config.report_subjects.empty()
                               ? default_report_subjects(data)
                               : config.report_subjects;
  const auto subject_draws =
      report::collect_subject_draws(chains, panel, subject_ids);
  report::write_subject_effects_csv(subject_draws,
                                    out.path("subject_effects.csv"));
  out.note("subject_effects.csv");
  report::write_subject_trajectories_csv(subject_draws, config, grid,
                                         out.path("subject_trajectories.csv"));
  out.note("subject_trajectories.csv");
}

int cmd_simulate(const CommonFlags& flags) {
  sim::SimulationTruth truth = flags.config_path.empty()
                                   ? sim::default_truth()
                                   : sim::load_truth(flags.config_path);
  if (flags.seed) truth.seed = *flags.seed;
  truth.validate();

  ArtifactSet out{prepare_out_dir(flags), {}};
  Rng rng(truth.seed, 0);
  const auto [data, latent] = sim::gen_cohort(truth, rng);
  (void)latent;

  write_dataset_csv_file(data, out.path("dataset.csv"));
  out.note("dataset.csv");
  sim::save_truth(truth, out.path("truth.json"));
  out.note("truth.json");
  finalize_manifest("simulate", fnv1a_hex(sim::to_json(truth)), truth.seed,
                    flags.config_path.empty()
                        ? std::vector<std::string>{}
                        : std::vector<std::string>{flags.config_path},
                    out);
  std::cout << "simulated " << data.n_subjects() << " subjects, "
            << data.total_occasions() << " occasions -> " << out.dir.string()
            << "\n";
  return 0;
}

int cmd_fit(const std::string& data_path, const CommonFlags& flags) {
  ModelConfig config = flags.config_path.empty()
                           ? ModelConfig{}
                           : load_model_config(flags.config_path);
  apply_mcmc_overrides(flags, config.mcmc);
  config.validate();

  const Dataset data = read_dataset_csv_file(data_path, &config.outcomes);
  ArtifactSet out{prepare_out_dir(flags), {}};

  const auto chains = gibbs::run_fit(data, config);
  const gibbs::Panel panel = gibbs::build_panel(data, config);

  save_model_config(config, out.path("fit_config.json"));
  out.note("fit_config.json");
  write_dataset_csv_file(data, out.path("dataset.csv"));
  out.note("dataset.csv");
  emit_fit_artifacts(chains, panel, config, data, out);
  finalize_manifest("fit", config_hash(config), config.mcmc.seed, {data_path},
                    out);
  std::cout << "fit complete: " << chains.size() << " chains x "
            << (chains.empty() ? 0 : chains[0].draws.size())
            << " stored draws -> " << out.dir.string() << "\n";
  return 0;
}

int cmd_recover(const CommonFlags& flags) {
  sim::SimulationTruth truth = flags.config_path.empty()
                                   ? sim::default_truth()
                                   : sim::load_truth(flags.config_path);
  if (flags.seed) truth.seed = *flags.seed;
  apply_mcmc_overrides(flags, truth.model.mcmc);
  truth.validate();

  ArtifactSet out{prepare_out_dir(flags), {}};
  Rng rng(truth.seed, 0);
  const auto [data, latent] = sim::gen_cohort(truth, rng);
  (void)latent;
  write_dataset_csv_file(data, out.path("dataset.csv"));
  out.note("dataset.csv");
  sim::save_truth(truth, out.path("truth.json"));
  out.note("truth.json");

  const auto chains = gibbs::run_fit(data, truth.model);
  const auto summaries = diag::summarize_chains(chains, truth.model);
  const auto rows = report::recovery_scorecard(summaries, truth);
  report::write_scorecard_csv(rows, out.path("scorecard.csv"));
  out.note("scorecard.csv");

  long covered = 0;
  for (const auto& r : rows) covered += r.covered ? 1 : 0;
  finalize_manifest("recover", fnv1a_hex(sim::to_json(truth)), truth.seed, {},
                    out);
  std::cout << "recovery coverage: " << covered << "/" << rows.size() << " ("
            << format_double(100.0 * covered / rows.size())
            << "% of 95% HPD intervals cover truth) -> " << out.dir.string()
            << "\n";
  return 0;
}

int cmd_report(const std::string& fit_dir, const CommonFlags& flags) {
  const RunManifest manifest = read_manifest(fit_dir);
  verify_manifest(manifest, fit_dir);

  const ModelConfig config = load_model_config(fit_dir + "/fit_config.json");
  const Dataset data =
      read_dataset_csv_file(fit_dir + "/dataset.csv", &config.outcomes);
  std::vector<std::string> draw_files;
  for (const auto& a : manifest.artifacts)
    if (a.name.rfind("draws_chain", 0) == 0)
      draw_files.push_back(fit_dir + "/" + a.name);
  std::sort(draw_files.begin(), draw_files.end());
  if (draw_files.empty())
    throw IoError("fit directory has no draws files listed in its manifest");
  const auto chains = report::read_draws_csv(draw_files, config);

  CommonFlags out_flags = flags;
  if (out_flags.out_dir.empty()) out_flags.out_dir = fit_dir + "/report";
  ArtifactSet out{prepare_out_dir(out_flags), {}};

  const auto summaries = diag::summarize_chains(chains, config);
  report::write_summary_csv(summaries, out.path("summary.csv"));
  out.note("summary.csv");

  std::vector<Eigen::VectorXd> mu_draws;
  for (const auto& chain : chains)
    for (const auto& draw : chain.draws) mu_draws.push_back(draw.mu_beta);
  const Eigen::VectorXd grid = diag::default_age_grid();
  for (int facet = 1; facet <= config.n_facets(); ++facet) {
    const auto band = diag::trajectory_band(mu_draws, config.knots, grid, facet,
                                            config.n_facets());
    const std::string base = "trajectory_" + std::to_string(facet);
    report::write_trajectory_csv(band, out.path(base + ".csv"));
    out.note(base + ".csv");
    report::write_trajectory_svg(band, facet_title(facet, config.n_facets()),
                                 out.path(base + ".svg"));
    out.note(base + ".svg");
  }

  const auto table = diag::covariate_table(chains, config);
  report::write_covariates_csv(table, out.path("covariates.csv"));
  out.note("covariates.csv");

  const auto rho = diag::spearman_matrix(data);
  report::write_spearman_csv(rho, config.outcomes, out.path("spearman.csv"));
  out.note("spearman.csv");

  const auto subject_draws =
      report::read_subject_effects_csv(fit_dir + "/subject_effects.csv");
  report::write_subject_trajectories_csv(subject_draws, config, grid,
                                         out.path("subject_trajectories.csv"));
  out.note("subject_trajectories.csv");

  finalize_manifest("report", manifest.config_hash, manifest.seed, {fit_dir},
                    out);
  std::cout << "report written to " << out.dir.string() << "\n";
  return 0;
}

int cmd_summarize(const std::string& data_path, const CommonFlags& flags) {
  const ModelConfig config = flags.config_path.empty()
                                 ? ModelConfig{}
                                 : load_model_config(flags.config_path);
  const Dataset data = read_dataset_csv_file(data_path, &config.outcomes);
  const auto rows = summarize(data);
  if (flags.out_dir.empty()) {
    write_summary_csv(rows, std::cout);
  } else {
    std::ofstream out(flags.out_dir);
    if (!out) throw IoError("cannot write " + flags.out_dir);
    write_summary_csv(rows, out);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bayesian latent growth curves for longitudinal multi-outcome"
               " cognitive panels"};
  app.require_subcommand(1);

  CommonFlags sim_flags, fit_flags, rec_flags, rep_flags, sum_flags;
  std::string fit_data, report_dir, summarize_data;

  auto* c_sim = app.add_subcommand("simulate", "generate a synthetic cohort");
  add_common_flags(c_sim, sim_flags, false);

  auto* c_fit = app.add_subcommand("fit", "run MCMC on a dataset");
  c_fit->add_option("data", fit_data, "dataset CSV")->required();
  add_common_flags(c_fit, fit_flags, true);

  auto* c_rec = app.add_subcommand(
      "recover", "simulate, fit, and score parameter recovery");
  add_common_flags(c_rec, rec_flags, true);

  auto* c_rep = app.add_subcommand(
      "report", "re-emit report artifacts from a fit directory");
  c_rep->add_option("fit_dir", report_dir, "fit output directory")->required();
  add_common_flags(c_rep, rep_flags, false);

  auto* c_sum = app.add_subcommand(
      "summarize", "per-outcome observation and missingness summary");
  c_sum->add_option("data", summarize_data, "dataset CSV")->required();
  add_common_flags(c_sum, sum_flags, false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (c_sim->parsed()) return cmd_simulate(sim_flags);
    if (c_fit->parsed()) return cmd_fit(fit_data, fit_flags);
    if (c_rec->parsed()) return cmd_recover(rec_flags);
    if (c_rep->parsed()) return cmd_report(report_dir, rep_flags);
    if (c_sum->parsed()) return cmd_summarize(summarize_data, sum_flags);
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 3;
  } catch (const IoError& e) {
    std::cerr << "i/o error: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "unexpected error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
