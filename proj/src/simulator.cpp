#include "lgrowth/simulator.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "lgrowth/errors.hpp"
#include "lgrowth/gibbs.hpp"
#include "lgrowth/spline.hpp"

namespace lgrowth::sim {

using nlohmann::json;

void SimulationTruth::validate() const {
  model.validate();
  const int D = model.n_outcomes();
  const int q = model.state_dim();
  if (params.mu_beta.size() != q)
    throw ValidationError("truth: mu_beta must have " + std::to_string(q) +
                          " components (facet blocks of K+1)");
  if (params.sigma_beta.rows() != q || params.sigma_beta.cols() != q)
    throw ValidationError("truth: sigma_beta must be " + std::to_string(q) +
                          " x " + std::to_string(q));
  if (params.alpha.size() != D || params.loading.size() != D)
    throw ValidationError("truth: alpha and loading must have one entry per"
                          " outcome");
  if (params.gamma.rows() != kCovariateCount || params.gamma.cols() != D)
    throw ValidationError("truth: gamma must be 4 x D");
  if (params.sigma_eps.rows() != D || params.sigma_eps.cols() != D)
    throw ValidationError("truth: sigma_eps must be D x D");
  if (missing_prob.size() != D)
    throw ValidationError("truth: one missingness probability per outcome");
  for (int d = 0; d < D; ++d)
    if (!(missing_prob[d] >= 0.0 && missing_prob[d] <= 1.0))
      throw ValidationError("truth: missingness probabilities must lie in"
                            " [0, 1]");
  for (int d = 0; d < D; ++d)
    if (model.outcomes[d].loading_fixed && params.loading[d] != 1.0)
      throw ValidationError("truth: constrained loadings must equal one");
  if (design.n_subjects < 1)
    throw ValidationError("truth: need at least one subject");
  if (design.max_sessions < 1)
    throw ValidationError("truth: need at least one session per subject");
  if (std::abs(design.position_probs.sum() - 1.0) > 1e-9)
    throw ValidationError("truth: position probabilities must sum to one");
}

SimulationTruth default_truth() {
  SimulationTruth t;
  t.model = ModelConfig{};
  const int D = t.model.n_outcomes();
  const int q = t.model.state_dim();

  t.params.mu_beta.resize(q);
  t.params.mu_beta << 28.59, 24.86, 6.51, 8.52,  // domain-generic
      0.48, 0.95, 0.11, 0.07;                    // domain-specific
  // Scale-proportional diagonal slope dispersion, floored.
  t.params.sigma_beta = Eigen::MatrixXd::Zero(q, q);
  for (int j = 0; j < q; ++j) {
    const double sd = std::max(0.25 * std::abs(t.params.mu_beta[j]), 0.05);
    t.params.sigma_beta(j, j) = sd * sd;
  }

  t.params.alpha.resize(D);
  t.params.alpha << 141.08, 0.01, -1.26, -0.64, 81.85, -0.49, -0.44, 28.44,
      22.93, 1.03;

  t.params.gamma.resize(kCovariateCount, D);
  // Columns y1..y10; rows post_season, forward, midfielder, defender.
  t.params.gamma << 1.43, -0.03, -0.09, -0.02, -0.22, -0.04, -0.04, 0.01, 0.15, -0.01,
      0.00, 0.00, 0.00, 0.00, 0.06, 0.00, 0.00, -0.02, -0.60, -0.05,
      0.00, 0.00, -0.04, 0.00, 0.02, 0.00, 0.00, 0.02, 0.23, -0.06,
      -0.01, 0.00, 0.00, 0.00, -0.34, 0.00, 0.00, 0.00, 0.27, -0.04;

  t.params.loading.resize(D);
  t.params.loading << 1.0, -0.0015, -0.0008, -0.0006, 0.02, -0.0008, -0.0008,
      1.0, 0.4, -0.03;

  // Residual scales chosen to sit plausibly against the intercept scales.
  Eigen::VectorXd resid_sd(D);
  resid_sd << 8.0, 0.08, 0.12, 0.08, 3.0, 0.1, 0.1, 2.0, 1.8, 0.06;
  t.params.sigma_eps = resid_sd.array().square().matrix().asDiagonal();

  t.missing_prob.resize(D);
  t.missing_prob << 0.03, 0.03, 0.03, 0.07, 0.03, 0.48, 0.48, 0.44, 0.22, 0.22;

  t.design = CohortDesign{};
  t.seed = 1;
  return t;
}

PanelDesign gen_design(const SimulationTruth& truth, Rng& rng) {
  truth.validate();
  const int D = truth.model.n_outcomes();
  PanelDesign design;
  const CohortDesign& c = truth.design;
  std::vector<std::vector<DesignOccasion>> per_subject(c.n_subjects);

  for (int i = 0; i < c.n_subjects; ++i) {
    design.subject_ids.push_back("S" + std::to_string(i + 1));
    const double u = rng.uniform();
    Position pos = Position::goalkeeper;
    double acc = 0;
    for (int k = 0; k < 4; ++k) {
      acc += truth.design.position_probs[k];
      if (u < acc) {
        pos = static_cast<Position>(k);
        break;
      }
    }
    design.positions.push_back(pos);

    const double base =
        c.base_age_min + rng.uniform() * (c.base_age_max - c.base_age_min);
    for (int s = 0; s < c.max_sessions; ++s) {
      const double age = base + s * c.session_gap;
      if (age > c.max_age) break;
      DesignOccasion occ;
      occ.subject = i;
      occ.session = "s" + std::to_string(s + 1);
      occ.age = age;
      occ.post_season = (s % 2) == 1;  // pre-season first, then alternating
      per_subject[i].push_back(occ);
      if (s + 1 < c.max_sessions && rng.uniform() < c.dropout) break;
    }
  }

  int total = 0;
  for (const auto& v : per_subject) total += static_cast<int>(v.size());
  design.missing.setConstant(D, total, false);
  int occ = 0;
  for (const auto& v : per_subject)
    for (const auto& o : v) {
      design.occasions.push_back(o);
      for (int d = 0; d < D; ++d)
        design.missing(d, occ) = rng.uniform() < truth.missing_prob[d];
      ++occ;
    }
  return design;
}

std::pair<Dataset, LatentRecord> simulate_responses_given_beta(
    const PanelDesign& design, const GenerativeParams& params,
    const Eigen::MatrixXd& beta, const ModelConfig& model, Rng& rng) {
  const int D = model.n_outcomes();
  const int n_occ = static_cast<int>(design.occasions.size());
  const int seg = model.segment_count();

  LatentRecord record;
  record.beta = beta;
  record.ystar.resize(D, n_occ);

  Eigen::VectorXd zero = Eigen::VectorXd::Zero(D);
  std::vector<std::vector<std::pair<int, Observation>>> rows(
      design.subject_ids.size());

  std::vector<bool> keep(n_occ, false);
  for (int occ = 0; occ < n_occ; ++occ) {
    const DesignOccasion& o = design.occasions[occ];
    const Eigen::VectorXd b = spline::basis_vector(o.age, model.knots);
    Observation obs;
    obs.session = o.session;
    obs.age = o.age;
    obs.position = design.positions[o.subject];
    obs.post_season = o.post_season;
    obs.y.resize(D);
    const Eigen::Vector4d x = encode_covariates(obs);
    const Eigen::VectorXd eps = sample_mvn_psd(rng, zero, params.sigma_eps);
    int observed = 0;
    for (int d = 0; d < D; ++d) {
      const int facet = model.outcomes[d].facet - 1;
      const double zeta = b.dot(beta.col(o.subject).segment(facet * seg, seg));
      const double ystar = params.alpha[d] + params.gamma.col(d).dot(x) +
                           params.loading[d] * zeta + eps[d];
      record.ystar(d, occ) = ystar;
      if (design.missing(d, occ)) continue;
      ++observed;
      if (model.outcomes[d].kind == OutcomeKind::count)
        obs.y[d] = static_cast<double>(gibbs::round_count(ystar));
      else
        obs.y[d] = ystar;
    }
    if (observed == 0) continue;  // occasion carries no observed outcome
    keep[occ] = true;
    rows[o.subject].push_back({occ, std::move(obs)});
  }

  // Compact the latent record to retained occasions, subject-major order.
  int n_keep = 0;
  for (int occ = 0; occ < n_occ; ++occ)
    if (keep[occ]) ++n_keep;
  Eigen::MatrixXd ystar_keep(D, n_keep);
  int at = 0;
  std::vector<Subject> subjects;
  for (size_t i = 0; i < design.subject_ids.size(); ++i) {
    Subject subj;
    subj.id = design.subject_ids[i];
    for (auto& [occ, obs] : rows[i]) {
      ystar_keep.col(at++) = record.ystar.col(occ);
      subj.occasions.push_back(std::move(obs));
    }
    subjects.push_back(std::move(subj));
  }
  record.ystar = std::move(ystar_keep);

  return {Dataset(std::move(subjects), model.outcomes), std::move(record)};
}

std::pair<Dataset, LatentRecord> simulate_responses(
    const PanelDesign& design, const GenerativeParams& params,
    const ModelConfig& model, Rng& rng) {
  const int q = model.state_dim();
  Eigen::MatrixXd beta(q, design.subject_ids.size());
  for (size_t i = 0; i < design.subject_ids.size(); ++i)
    beta.col(i) = sample_mvn_psd(rng, params.mu_beta, params.sigma_beta);
  return simulate_responses_given_beta(design, params, beta, model, rng);
}

std::pair<Dataset, LatentRecord> gen_cohort(const SimulationTruth& truth,
                                            Rng& rng) {
  const PanelDesign design = gen_design(truth, rng);
  return simulate_responses(design, truth.params, truth.model, rng);
}

namespace {

json matrix_to_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(row);
  }
  return rows;
}

Eigen::MatrixXd matrix_from_json(const json& j) {
  const auto rows = j.get<std::vector<std::vector<double>>>();
  if (rows.empty()) return Eigen::MatrixXd(0, 0);
  Eigen::MatrixXd m(rows.size(), rows[0].size());
  for (size_t r = 0; r < rows.size(); ++r) {
    if (rows[r].size() != rows[0].size())
      throw ValidationError("truth: ragged matrix in JSON");
    for (size_t c = 0; c < rows[r].size(); ++c) m(r, c) = rows[r][c];
  }
  return m;
}

json vector_to_json(const Eigen::VectorXd& v) {
  return std::vector<double>(v.data(), v.data() + v.size());
}

Eigen::VectorXd vector_from_json(const json& j) {
  const auto xs = j.get<std::vector<double>>();
  Eigen::VectorXd v(xs.size());
  for (size_t i = 0; i < xs.size(); ++i) v[i] = xs[i];
  return v;
}

}  // namespace

std::string to_json(const SimulationTruth& t) {
  json j;
  j["model"] = json::parse(lgrowth::to_json(t.model));
  j["params"] = {{"mu_beta", vector_to_json(t.params.mu_beta)},
                 {"sigma_beta", matrix_to_json(t.params.sigma_beta)},
                 {"alpha", vector_to_json(t.params.alpha)},
                 {"gamma", matrix_to_json(t.params.gamma)},
                 {"loading", vector_to_json(t.params.loading)},
                 {"sigma_eps", matrix_to_json(t.params.sigma_eps)}};
  j["missing_prob"] = vector_to_json(t.missing_prob);
  j["design"] = {{"n_subjects", t.design.n_subjects},
                 {"base_age_min", t.design.base_age_min},
                 {"base_age_max", t.design.base_age_max},
                 {"max_sessions", t.design.max_sessions},
                 {"session_gap", t.design.session_gap},
                 {"dropout", t.design.dropout},
                 {"max_age", t.design.max_age},
                 {"position_probs",
                  std::vector<double>{t.design.position_probs[0],
                                      t.design.position_probs[1],
                                      t.design.position_probs[2],
                                      t.design.position_probs[3]}}};
  j["seed"] = t.seed;
  return j.dump(2) + "\n";
}

SimulationTruth truth_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ValidationError(std::string("truth: invalid JSON: ") + e.what());
  }
  SimulationTruth t = default_truth();
  try {
    if (j.contains("model"))
      t.model = model_config_from_json(j.at("model").dump());
    if (j.contains("params")) {
      const auto& p = j.at("params");
      t.params.mu_beta = vector_from_json(p.at("mu_beta"));
      t.params.sigma_beta = matrix_from_json(p.at("sigma_beta"));
      t.params.alpha = vector_from_json(p.at("alpha"));
      t.params.gamma = matrix_from_json(p.at("gamma"));
      t.params.loading = vector_from_json(p.at("loading"));
      t.params.sigma_eps = matrix_from_json(p.at("sigma_eps"));
    }
    if (j.contains("missing_prob"))
      t.missing_prob = vector_from_json(j.at("missing_prob"));
    if (j.contains("design")) {
      const auto& d = j.at("design");
      if (d.contains("n_subjects")) t.design.n_subjects = d.at("n_subjects").get<int>();
      if (d.contains("base_age_min"))
        t.design.base_age_min = d.at("base_age_min").get<double>();
      if (d.contains("base_age_max"))
        t.design.base_age_max = d.at("base_age_max").get<double>();
      if (d.contains("max_sessions"))
        t.design.max_sessions = d.at("max_sessions").get<int>();
      if (d.contains("session_gap"))
        t.design.session_gap = d.at("session_gap").get<double>();
      if (d.contains("dropout")) t.design.dropout = d.at("dropout").get<double>();
      if (d.contains("max_age")) t.design.max_age = d.at("max_age").get<double>();
      if (d.contains("position_probs")) {
        const auto ps = d.at("position_probs").get<std::vector<double>>();
        if (ps.size() != 4)
          throw ValidationError("truth: position_probs must have 4 entries");
        for (int k = 0; k < 4; ++k) t.design.position_probs[k] = ps[k];
      }
    }
    if (j.contains("seed")) t.seed = j.at("seed").get<std::uint64_t>();
  } catch (const json::exception& e) {
    throw ValidationError(std::string("truth: ") + e.what());
  }
  t.validate();
  return t;
}

SimulationTruth load_truth(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open truth file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return truth_from_json(ss.str());
  } catch (const ValidationError& e) {
    throw ValidationError(path + ": " + e.what());
  }
}

void save_truth(const SimulationTruth& truth, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write truth file: " + path);
  out << to_json(truth);
}

}  // namespace lgrowth::sim
