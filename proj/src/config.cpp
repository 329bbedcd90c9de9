#include "lgrowth/config.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "lgrowth/errors.hpp"
#include "lgrowth/manifest.hpp"

namespace lgrowth {

using nlohmann::json;

void MCMCSettings::validate() const {
  if (iterations < 0 || burnin < 0)
    throw ValidationError("mcmc: iterations and burnin must be non-negative");
  if (burnin > iterations)
    throw ValidationError("mcmc: burnin exceeds iterations");
  if (thin < 1) throw ValidationError("mcmc: thinning must be >= 1");
  if (chains < 1) throw ValidationError("mcmc: need at least one chain");
  if (threads < 0) throw ValidationError("mcmc: negative thread count");
}

void ModelConfig::validate() const {
  validate_outcomes(outcomes);
  mcmc.validate();
  if (prior.covariance.df <= 0 || prior.covariance.scale <= 0)
    throw ValidationError("prior: covariance df and scale must be positive");
  if (prior.alpha_var <= 0 || prior.loading_var <= 0)
    throw ValidationError("prior: variances must be positive");
  if (!prior.horseshoe && prior.fixed_coef_sd <= 0)
    throw ValidationError("prior: fixed coefficient sd must be positive");
}

namespace {

json outcome_to_json(const OutcomeSpec& s) {
  return json{{"name", s.name},
              {"kind", s.kind == OutcomeKind::count ? "count" : "continuous"},
              {"channel", s.channel == Channel::accuracy ? "accuracy" : "speed"},
              {"facet", s.facet},
              {"loading", s.loading_fixed ? "fixed_to_one" : "free"}};
}

OutcomeSpec outcome_from_json(const json& j) {
  OutcomeSpec s;
  s.name = j.at("name").get<std::string>();
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "count")
    s.kind = OutcomeKind::count;
  else if (kind == "continuous")
    s.kind = OutcomeKind::continuous;
  else
    throw ValidationError("outcome kind must be count or continuous: " + kind);
  const std::string channel = j.at("channel").get<std::string>();
  if (channel == "accuracy")
    s.channel = Channel::accuracy;
  else if (channel == "speed")
    s.channel = Channel::speed;
  else
    throw ValidationError("outcome channel must be accuracy or speed: " + channel);
  s.facet = j.at("facet").get<int>();
  const std::string loading = j.at("loading").get<std::string>();
  if (loading == "fixed_to_one")
    s.loading_fixed = true;
  else if (loading == "free")
    s.loading_fixed = false;
  else
    throw ValidationError("outcome loading must be fixed_to_one or free: " +
                          loading);
  return s;
}

json config_to_json_obj(const ModelConfig& c) {
  json j;
  j["knots"] = std::vector<double>(c.knots.values().data(),
                                   c.knots.values().data() + c.knots.count());
  j["outcomes"] = json::array();
  for (const auto& s : c.outcomes) j["outcomes"].push_back(outcome_to_json(s));
  j["prior"] = {{"covariance_df", c.prior.covariance.df},
                {"covariance_scale", c.prior.covariance.scale},
                {"alpha_var", c.prior.alpha_var},
                {"loading_var", c.prior.loading_var},
                {"loading_mean_accuracy", c.prior.loading_mean_accuracy},
                {"loading_mean_speed", c.prior.loading_mean_speed},
                {"horseshoe", c.prior.horseshoe},
                {"fixed_coef_sd", c.prior.fixed_coef_sd}};
  j["mcmc"] = {{"iterations", c.mcmc.iterations}, {"burnin", c.mcmc.burnin},
               {"thin", c.mcmc.thin},             {"chains", c.mcmc.chains},
               {"seed", c.mcmc.seed},             {"threads", c.mcmc.threads}};
  j["report_subjects"] = c.report_subjects;
  return j;
}

}  // namespace

std::string to_json(const ModelConfig& config) {
  return config_to_json_obj(config).dump(2) + "\n";
}

ModelConfig model_config_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ValidationError(std::string("config: invalid JSON: ") + e.what());
  }
  ModelConfig c;
  try {
    if (j.contains("knots")) {
      const auto xs = j.at("knots").get<std::vector<double>>();
      Eigen::VectorXd xi(xs.size());
      for (size_t i = 0; i < xs.size(); ++i) xi[i] = xs[i];
      c.knots = spline::KnotVector(xi);
    }
    if (j.contains("outcomes")) {
      c.outcomes.clear();
      for (const auto& o : j.at("outcomes"))
        c.outcomes.push_back(outcome_from_json(o));
    }
    if (j.contains("prior")) {
      const auto& p = j.at("prior");
      if (p.contains("covariance_df"))
        c.prior.covariance.df = p.at("covariance_df").get<double>();
      if (p.contains("covariance_scale"))
        c.prior.covariance.scale = p.at("covariance_scale").get<double>();
      if (p.contains("alpha_var")) c.prior.alpha_var = p.at("alpha_var").get<double>();
      if (p.contains("loading_var"))
        c.prior.loading_var = p.at("loading_var").get<double>();
      if (p.contains("loading_mean_accuracy"))
        c.prior.loading_mean_accuracy = p.at("loading_mean_accuracy").get<double>();
      if (p.contains("loading_mean_speed"))
        c.prior.loading_mean_speed = p.at("loading_mean_speed").get<double>();
      if (p.contains("horseshoe")) c.prior.horseshoe = p.at("horseshoe").get<bool>();
      if (p.contains("fixed_coef_sd"))
        c.prior.fixed_coef_sd = p.at("fixed_coef_sd").get<double>();
    }
    if (j.contains("mcmc")) {
      const auto& m = j.at("mcmc");
      if (m.contains("iterations")) c.mcmc.iterations = m.at("iterations").get<long>();
      if (m.contains("burnin")) c.mcmc.burnin = m.at("burnin").get<long>();
      if (m.contains("thin")) c.mcmc.thin = m.at("thin").get<long>();
      if (m.contains("chains")) c.mcmc.chains = m.at("chains").get<int>();
      if (m.contains("seed")) c.mcmc.seed = m.at("seed").get<std::uint64_t>();
      if (m.contains("threads")) c.mcmc.threads = m.at("threads").get<int>();
    }
    if (j.contains("report_subjects"))
      c.report_subjects = j.at("report_subjects").get<std::vector<std::string>>();
  } catch (const json::exception& e) {
    throw ValidationError(std::string("config: ") + e.what());
  }
  c.validate();
  return c;
}

ModelConfig load_model_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return model_config_from_json(ss.str());
  } catch (const ValidationError& e) {
    throw ValidationError(path + ": " + e.what());
  }
}

void save_model_config(const ModelConfig& config, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write config file: " + path);
  out << to_json(config);
}

std::string config_hash(const ModelConfig& config) {
  return fnv1a_hex(to_json(config));
}

}  // namespace lgrowth
