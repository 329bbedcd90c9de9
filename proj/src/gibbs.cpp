#include "lgrowth/gibbs.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <thread>

#include <Eigen/Cholesky>

#include "lgrowth/errors.hpp"
#include "lgrowth/spline.hpp"

namespace lgrowth::gibbs {

namespace {

constexpr double kTiny = 1e-300;

double inv_floored(double x) { return 1.0 / std::max(x, kTiny); }

}  // namespace

Panel build_panel(const Dataset& data, const ModelConfig& config) {
  if (data.n_outcomes() != config.n_outcomes())
    throw ValidationError(
        "dataset has " + std::to_string(data.n_outcomes()) +
        " outcomes but the model configuration declares " +
        std::to_string(config.n_outcomes()));
  for (int d = 0; d < data.n_outcomes(); ++d)
    if (data.outcomes()[d].name != config.outcomes[d].name)
      throw ValidationError("outcome name mismatch at position " +
                            std::to_string(d + 1) + ": dataset '" +
                            data.outcomes()[d].name + "' vs config '" +
                            config.outcomes[d].name + "'");

  Panel p;
  p.n_subjects = data.n_subjects();
  p.n_outcomes = data.n_outcomes();
  p.n_facets = config.n_facets();
  p.seg = config.segment_count();

  const int N = data.total_occasions();
  const int D = p.n_outcomes;
  p.age.resize(N);
  p.X.resize(kCovariateCount, N);
  p.B.resize(p.seg, N);
  p.yobs = Eigen::MatrixXd::Zero(D, N);
  p.observed.setConstant(D, N, false);
  p.subj_of.resize(N);
  p.occ_range.resize(p.n_subjects);
  p.missing_per_occ.assign(N, 0);

  int occ = 0;
  for (int i = 0; i < p.n_subjects; ++i) {
    const Subject& subj = data.subject(i);
    p.subject_ids.push_back(subj.id);
    const int begin = occ;
    for (const Observation& obs : subj.occasions) {
      p.age[occ] = obs.age;
      p.X.col(occ) = encode_covariates(obs);
      Eigen::VectorXd b = spline::basis_vector(obs.age, config.knots);
      p.B.col(occ) = b;
      p.subj_of[occ] = i;
      for (int d = 0; d < D; ++d) {
        if (obs.y[d].has_value()) {
          p.yobs(d, occ) = *obs.y[d];
          p.observed(d, occ) = true;
        } else {
          p.missing_cells.push_back({d, occ});
          ++p.missing_per_occ[occ];
        }
      }
      ++occ;
    }
    p.occ_range[i] = {begin, occ};
  }

  for (int d = 0; d < D; ++d) {
    p.facet_of.push_back(config.outcomes[d].facet - 1);
    p.is_count.push_back(config.outcomes[d].kind == OutcomeKind::count);
    p.loading_fixed.push_back(config.outcomes[d].loading_fixed);
  }
  for (int c = 0; c < N; ++c)
    for (int d = 0; d < D; ++d)
      if (p.is_count[d] && p.observed(d, c)) p.count_cells.push_back({d, c});

  p.ZZt = Eigen::MatrixXd::Zero(1 + kCovariateCount, 1 + kCovariateCount);
  Eigen::VectorXd z(1 + kCovariateCount);
  for (int c = 0; c < N; ++c) {
    z[0] = 1.0;
    z.tail(kCovariateCount) = p.X.col(c);
    p.ZZt.noalias() += z * z.transpose();
  }
  return p;
}

int round_count(double ystar) {
  if (!std::isfinite(ystar))
    throw NumericalError("round_count: non-finite latent value");
  if (ystar <= 0.0) return 0;
  return static_cast<int>(std::ceil(ystar));
}

std::pair<double, double> count_bucket(int count) {
  if (count < 0) throw ValidationError("count_bucket: negative count");
  if (count == 0)
    return {-std::numeric_limits<double>::infinity(), 0.0};
  return {static_cast<double>(count - 1), static_cast<double>(count)};
}

namespace {

// Latent facet values per occasion: lat(f, occ) = b(age)'beta_{subject,f}.
Eigen::MatrixXd latent_matrix(const ParameterState& s, const Panel& p) {
  const int N = p.total_occasions();
  Eigen::MatrixXd lat(p.n_facets, N);
  for (int occ = 0; occ < N; ++occ) {
    const int i = p.subj_of[occ];
    for (int f = 0; f < p.n_facets; ++f)
      lat(f, occ) = p.B.col(occ).dot(s.beta.col(i).segment(f * p.seg, p.seg));
  }
  return lat;
}

Eigen::MatrixXd mean_matrix(const ParameterState& s, const Panel& p,
                            const Eigen::MatrixXd& lat) {
  const int N = p.total_occasions();
  const int D = p.n_outcomes;
  Eigen::MatrixXd m(D, N);
  for (int occ = 0; occ < N; ++occ)
    for (int d = 0; d < D; ++d)
      m(d, occ) = s.alpha[d] + s.gamma.col(d).dot(p.X.col(occ)) +
                  s.loading[d] * lat(p.facet_of[d], occ);
  return m;
}

void refresh_mean_row(Eigen::MatrixXd& m, const ParameterState& s,
                      const Panel& p, const Eigen::MatrixXd& lat, int d) {
  const int N = p.total_occasions();
  for (int occ = 0; occ < N; ++occ)
    m(d, occ) = s.alpha[d] + s.gamma.col(d).dot(p.X.col(occ)) +
                s.loading[d] * lat(p.facet_of[d], occ);
}

Eigen::MatrixXd inverse_spd(const Eigen::MatrixXd& a, const char* what) {
  Eigen::LLT<Eigen::MatrixXd> llt(a);
  if (llt.info() != Eigen::Success)
    throw NumericalError(std::string(what) + ": matrix not SPD");
  return llt.solve(Eigen::MatrixXd::Identity(a.rows(), a.cols()));
}

// Draw from the Gaussian with density ~ exp(-x'Px/2 + h'x).
Eigen::VectorXd draw_from_precision(const Eigen::MatrixXd& prec,
                                    const Eigen::VectorXd& h, Rng& rng,
                                    const char* what) {
  Eigen::LLT<Eigen::MatrixXd> llt(prec);
  if (llt.info() != Eigen::Success)
    throw NumericalError(std::string(what) + ": precision not SPD");
  Eigen::VectorXd mean = llt.solve(h);
  Eigen::VectorXd z(h.size());
  for (Eigen::Index i = 0; i < z.size(); ++i) z[i] = rng.normal();
  return mean + llt.matrixU().solve(z);
}

// Same, but only mask-true coordinates move; pinned coordinates enter the
// conditional through the linear term.
void draw_masked(Eigen::VectorXd& x, const Eigen::MatrixXd& prec,
                 const Eigen::VectorXd& h, const std::vector<bool>& mask,
                 Rng& rng, const char* what) {
  if (mask.empty()) {
    x = draw_from_precision(prec, h, rng, what);
    return;
  }
  if (static_cast<Eigen::Index>(mask.size()) != x.size())
    throw ValidationError(std::string(what) + ": mask size mismatch");
  std::vector<int> free;
  for (size_t j = 0; j < mask.size(); ++j)
    if (mask[j]) free.push_back(static_cast<int>(j));
  if (free.empty()) return;
  if (static_cast<Eigen::Index>(free.size()) == x.size()) {
    x = draw_from_precision(prec, h, rng, what);
    return;
  }
  const int nf = static_cast<int>(free.size());
  Eigen::MatrixXd pff(nf, nf);
  Eigen::VectorXd hf(nf);
  for (int a = 0; a < nf; ++a) {
    double adj = h[free[a]];
    for (Eigen::Index c = 0; c < x.size(); ++c)
      if (!mask[c]) adj -= prec(free[a], c) * x[c];
    hf[a] = adj;
    for (int b = 0; b < nf; ++b) pff(a, b) = prec(free[a], free[b]);
  }
  const Eigen::VectorXd xf = draw_from_precision(pff, hf, rng, what);
  for (int a = 0; a < nf; ++a) x[free[a]] = xf[a];
}

Eigen::VectorXd mu_prior_scales(const ParameterState& s, const ModelConfig& c) {
  if (c.prior.horseshoe) return s.hs_mu.scales();
  return Eigen::VectorXd::Constant(s.mu_beta.size(),
                                   c.prior.fixed_coef_sd * c.prior.fixed_coef_sd);
}

Eigen::VectorXd gamma_prior_scales(const ParameterState& s, const ModelConfig& c,
                                   int d) {
  if (c.prior.horseshoe) return s.hs_gamma[d].scales();
  return Eigen::VectorXd::Constant(kCovariateCount,
                                   c.prior.fixed_coef_sd * c.prior.fixed_coef_sd);
}

double loading_prior_mean(const ModelConfig& c, int d) {
  return c.outcomes[d].channel == Channel::accuracy
             ? c.prior.loading_mean_accuracy
             : c.prior.loading_mean_speed;
}

}  // namespace

Eigen::VectorXd residual_mean(const ParameterState& state, const Panel& panel,
                              int subject, int t) {
  if (subject < 0 || subject >= panel.n_subjects)
    throw ValidationError("residual_mean: subject index out of range");
  const auto [begin, end] = panel.occ_range[subject];
  if (t < 0 || begin + t >= end)
    throw ValidationError("residual_mean: occasion index out of range");
  const int occ = begin + t;
  const int D = panel.n_outcomes;
  Eigen::VectorXd m(D);
  for (int d = 0; d < D; ++d) {
    const double lat = panel.B.col(occ).dot(
        state.beta.col(subject).segment(panel.facet_of[d] * panel.seg, panel.seg));
    m[d] = state.alpha[d] + state.gamma.col(d).dot(panel.X.col(occ)) +
           state.loading[d] * lat;
  }
  return m;
}

ParameterState initial_state(const Panel& panel, const ModelConfig& config) {
  const int D = panel.n_outcomes;
  const int N = panel.total_occasions();
  const int q = panel.state_dim();

  ParameterState s;
  s.beta = Eigen::MatrixXd::Zero(q, panel.n_subjects);
  s.mu_beta = Eigen::VectorXd::Zero(q);
  s.sigma_beta = Eigen::MatrixXd::Identity(q, q);
  s.alpha.resize(D);
  s.gamma = Eigen::MatrixXd::Zero(kCovariateCount, D);
  s.loading.resize(D);
  s.sigma_eps = Eigen::MatrixXd::Zero(D, D);
  s.complete = Eigen::MatrixXd::Zero(D, N);

  for (int d = 0; d < D; ++d) {
    double sum = 0, sumsq = 0;
    long n = 0;
    for (int occ = 0; occ < N; ++occ) {
      if (!panel.observed(d, occ)) continue;
      sum += panel.yobs(d, occ);
      sumsq += panel.yobs(d, occ) * panel.yobs(d, occ);
      ++n;
    }
    const double mean = n > 0 ? sum / n : 0.0;
    const double var = n > 1 ? (sumsq - n * mean * mean) / (n - 1) : 1.0;
    s.alpha[d] = mean;
    s.sigma_eps(d, d) = std::max(var, 1e-4);
    s.loading[d] = panel.loading_fixed[d] ? 1.0 : loading_prior_mean(config, d);
    for (int occ = 0; occ < N; ++occ) {
      if (!panel.observed(d, occ)) {
        s.complete(d, occ) = mean;
      } else if (panel.is_count[d]) {
        s.complete(d, occ) = panel.yobs(d, occ) - 0.5;  // bucket midpoint
      } else {
        s.complete(d, occ) = panel.yobs(d, occ);
      }
    }
  }

  s.hs_mu = priors::HorseshoeState::identity(q);
  for (int d = 0; d < D; ++d)
    s.hs_gamma.push_back(priors::HorseshoeState::identity(kCovariateCount));
  s.iw_beta = priors::HierIWState::identity(q);
  s.iw_eps = priors::HierIWState::identity(D);
  return s;
}

ParameterState prior_state(const Panel& panel, const ModelConfig& config,
                           Rng& rng) {
  const int D = panel.n_outcomes;
  const int q = panel.state_dim();
  ParameterState s;

  s.hs_mu = config.prior.horseshoe ? priors::sample_horseshoe_prior(q, rng)
                                   : priors::HorseshoeState::identity(q);
  for (int d = 0; d < D; ++d)
    s.hs_gamma.push_back(config.prior.horseshoe
                             ? priors::sample_horseshoe_prior(kCovariateCount, rng)
                             : priors::HorseshoeState::identity(kCovariateCount));
  s.iw_beta = priors::HierIWState::identity(q);
  s.iw_eps = priors::HierIWState::identity(D);
  s.sigma_beta =
      priors::sample_hier_iw_prior(s.iw_beta, q, config.prior.covariance, rng);
  s.sigma_eps =
      priors::sample_hier_iw_prior(s.iw_eps, D, config.prior.covariance, rng);

  const Eigen::VectorXd mu_scales = config.prior.horseshoe
                                        ? s.hs_mu.scales()
                                        : Eigen::VectorXd::Constant(
                                              q, config.prior.fixed_coef_sd *
                                                     config.prior.fixed_coef_sd);
  s.mu_beta.resize(q);
  for (int j = 0; j < q; ++j)
    s.mu_beta[j] = rng.normal(0.0, std::sqrt(mu_scales[j]));

  s.alpha.resize(D);
  s.gamma.resize(kCovariateCount, D);
  s.loading.resize(D);
  for (int d = 0; d < D; ++d) {
    s.alpha[d] = rng.normal(0.0, std::sqrt(config.prior.alpha_var));
    const Eigen::VectorXd scales =
        config.prior.horseshoe
            ? s.hs_gamma[d].scales()
            : Eigen::VectorXd::Constant(kCovariateCount,
                                        config.prior.fixed_coef_sd *
                                            config.prior.fixed_coef_sd);
    for (int k = 0; k < kCovariateCount; ++k)
      s.gamma(k, d) = rng.normal(0.0, std::sqrt(scales[k]));
    s.loading[d] =
        panel.loading_fixed[d]
            ? 1.0
            : rng.normal(loading_prior_mean(config, d),
                         std::sqrt(config.prior.loading_var));
  }

  s.beta.resize(q, panel.n_subjects);
  for (int i = 0; i < panel.n_subjects; ++i)
    s.beta.col(i) = sample_mvn(rng, s.mu_beta, s.sigma_beta);

  s.complete = Eigen::MatrixXd::Zero(D, panel.total_occasions());
  return s;
}

void augment_counts(ParameterState& state, const Panel& panel,
                    const Eigen::MatrixXd& omega, Rng& rng) {
  if (panel.count_cells.empty()) return;
  const Eigen::MatrixXd lat = latent_matrix(state, panel);
  const Eigen::MatrixXd m = mean_matrix(state, panel, lat);
  for (const auto& cell : panel.count_cells) {
    const int d = cell.d;
    const int occ = cell.occ;
    const double v = 1.0 / omega(d, d);
    if (!(v > 0.0) || !std::isfinite(v))
      throw NumericalError("augment_counts: degenerate conditional variance");
    const Eigen::VectorXd resid = state.complete.col(occ) - m.col(occ);
    const double coupled = omega.row(d).dot(resid) - omega(d, d) * resid[d];
    const double cond_mean = m(d, occ) - v * coupled;
    const auto [lo, hi] = count_bucket(static_cast<int>(panel.yobs(d, occ)));
    state.complete(d, occ) =
        sample_truncated_normal(rng, cond_mean, std::sqrt(v), lo, hi);
  }
}

void impute_missing(ParameterState& state, const Panel& panel, Rng& rng) {
  if (panel.missing_cells.empty()) return;
  const int D = panel.n_outcomes;
  const Eigen::MatrixXd lat = latent_matrix(state, panel);
  const Eigen::MatrixXd m = mean_matrix(state, panel, lat);
  for (int occ = 0; occ < panel.total_occasions(); ++occ) {
    const int n_miss = panel.missing_per_occ[occ];
    if (n_miss == 0) continue;
    if (n_miss == D) {
      const Eigen::VectorXd draw = sample_mvn(rng, m.col(occ), state.sigma_eps);
      state.complete.col(occ) = draw;
      continue;
    }
    std::vector<int> miss;
    std::vector<int> obs;
    for (int d = 0; d < D; ++d)
      (panel.observed(d, occ) ? obs : miss).push_back(d);
    const int nm = static_cast<int>(miss.size());
    const int no = static_cast<int>(obs.size());
    Eigen::MatrixXd sig_oo(no, no), sig_mo(nm, no), sig_mm(nm, nm);
    Eigen::VectorXd dev(no), mean_m(nm);
    for (int a = 0; a < no; ++a) {
      dev[a] = state.complete(obs[a], occ) - m(obs[a], occ);
      for (int b = 0; b < no; ++b)
        sig_oo(a, b) = state.sigma_eps(obs[a], obs[b]);
    }
    for (int a = 0; a < nm; ++a) {
      mean_m[a] = m(miss[a], occ);
      for (int b = 0; b < no; ++b)
        sig_mo(a, b) = state.sigma_eps(miss[a], obs[b]);
      for (int b = 0; b < nm; ++b)
        sig_mm(a, b) = state.sigma_eps(miss[a], miss[b]);
    }
    Eigen::LLT<Eigen::MatrixXd> llt(sig_oo);
    if (llt.info() != Eigen::Success)
      throw NumericalError("impute_missing: singular observed block");
    const Eigen::VectorXd cond_mean = mean_m + sig_mo * llt.solve(dev);
    Eigen::MatrixXd cond_cov =
        sig_mm - sig_mo * llt.solve(sig_mo.transpose());
    cond_cov = (0.5 * (cond_cov + cond_cov.transpose())).eval();
    const Eigen::VectorXd draw = sample_mvn(rng, cond_mean, cond_cov);
    for (int a = 0; a < nm; ++a) state.complete(miss[a], occ) = draw[a];
  }
}

void update_beta(ParameterState& state, const Panel& panel,
                 const Eigen::MatrixXd& omega, Rng& rng) {
  const int D = panel.n_outcomes;
  const int nf = panel.n_facets;
  const int seg = panel.seg;
  const int q = panel.state_dim();

  // Row d of the occasion design is loading_d * b(age) placed in facet block
  // facet(d); with F(d, facet(d)) = loading_d the per-occasion Gram matrix
  // factorizes as kron(F' omega F, b b').
  Eigen::MatrixXd f = Eigen::MatrixXd::Zero(D, nf);
  for (int d = 0; d < D; ++d) f(d, panel.facet_of[d]) = state.loading[d];
  const Eigen::MatrixXd omega_f = omega * f;       // D x nf
  const Eigen::MatrixXd w2 = f.transpose() * omega_f;  // nf x nf

  const Eigen::MatrixXd sig_beta_inv = inverse_spd(state.sigma_beta, "update_beta");
  const Eigen::VectorXd h_prior = sig_beta_inv * state.mu_beta;

  Eigen::MatrixXd prec(q, q);
  Eigen::VectorXd h(q);
  Eigen::MatrixXd uut(seg, seg);
  for (int i = 0; i < panel.n_subjects; ++i) {
    prec = sig_beta_inv;
    h = h_prior;
    const auto [begin, end] = panel.occ_range[i];
    for (int occ = begin; occ < end; ++occ) {
      const auto u = panel.B.col(occ);
      uut.noalias() = u * u.transpose();
      Eigen::VectorXd resid = state.complete.col(occ);
      for (int d = 0; d < D; ++d)
        resid[d] -= state.alpha[d] + state.gamma.col(d).dot(panel.X.col(occ));
      const Eigen::VectorXd t = omega_f.transpose() * resid;  // nf
      for (int f1 = 0; f1 < nf; ++f1) {
        h.segment(f1 * seg, seg) += t[f1] * u;
        for (int f2 = 0; f2 < nf; ++f2)
          prec.block(f1 * seg, f2 * seg, seg, seg) += w2(f1, f2) * uut;
      }
    }
    state.beta.col(i) = draw_from_precision(prec, h, rng, "update_beta");
  }
}

void update_population(ParameterState& state, const Panel& panel,
                       const ModelConfig& config, const UpdatePolicy& policy,
                       Rng& rng) {
  const int q = panel.state_dim();
  const double n = panel.n_subjects;

  if (policy.mu_beta) {
    const Eigen::MatrixXd sig_beta_inv =
        inverse_spd(state.sigma_beta, "update_population");
    const Eigen::VectorXd scales = mu_prior_scales(state, config);
    Eigen::MatrixXd prec = n * sig_beta_inv;
    for (int j = 0; j < q; ++j) prec(j, j) += inv_floored(scales[j]);
    const Eigen::VectorXd h = sig_beta_inv * state.beta.rowwise().sum();
    draw_masked(state.mu_beta, prec, h, policy.mu_beta_mask, rng,
                "update_population");
  }

  if (policy.sigma_beta) {
    Eigen::MatrixXd dev = state.beta.colwise() - state.mu_beta;
    Eigen::MatrixXd scatter = dev * dev.transpose();
    scatter = (0.5 * (scatter + scatter.transpose())).eval();
    priors::refresh_hier_iw(state.sigma_beta, state.iw_beta, scatter, n,
                            config.prior.covariance, rng);
  }

  if (policy.horseshoe && config.prior.horseshoe)
    priors::refresh_horseshoe(state.hs_mu, state.mu_beta, rng);
}

void update_regression(ParameterState& state, const Panel& panel,
                       const ModelConfig& config, const UpdatePolicy& policy,
                       const Eigen::MatrixXd& omega, Rng& rng) {
  const int D = panel.n_outcomes;
  const int N = panel.total_occasions();
  const int dim = 1 + kCovariateCount;
  const Eigen::MatrixXd lat = latent_matrix(state, panel);
  Eigen::MatrixXd m = mean_matrix(state, panel, lat);

  Eigen::VectorXd z(dim);
  for (int d = 0; d < D; ++d) {
    const std::vector<bool>* mask = nullptr;
    if (!policy.regression_mask.empty()) {
      mask = &policy.regression_mask[d];
      if (std::none_of(mask->begin(), mask->end(), [](bool b) { return b; }))
        continue;
    }
    const double s2 = 1.0 / omega(d, d);
    const Eigen::VectorXd scales = gamma_prior_scales(state, config, d);
    Eigen::MatrixXd prec = panel.ZZt / s2;
    prec(0, 0) += inv_floored(config.prior.alpha_var);
    for (int k = 0; k < kCovariateCount; ++k)
      prec(1 + k, 1 + k) += inv_floored(scales[k]);

    Eigen::VectorXd h = Eigen::VectorXd::Zero(dim);
    for (int occ = 0; occ < N; ++occ) {
      const Eigen::VectorXd resid = state.complete.col(occ) - m.col(occ);
      const double coupled = omega.row(d).dot(resid) - omega(d, d) * resid[d];
      const double offset = -s2 * coupled;
      const double w = state.complete(d, occ) -
                       state.loading[d] * lat(panel.facet_of[d], occ) - offset;
      z[0] = 1.0;
      z.tail(kCovariateCount) = panel.X.col(occ);
      h += z * (w / s2);
    }
    Eigen::VectorXd theta(dim);
    theta[0] = state.alpha[d];
    theta.tail(kCovariateCount) = state.gamma.col(d);
    draw_masked(theta, prec, h, mask ? *mask : std::vector<bool>{}, rng,
                "update_regression");
    state.alpha[d] = theta[0];
    state.gamma.col(d) = theta.tail(kCovariateCount);
    refresh_mean_row(m, state, panel, lat, d);
  }
}

void update_loadings(ParameterState& state, const Panel& panel,
                     const ModelConfig& config, const Eigen::MatrixXd& omega,
                     Rng& rng) {
  const int D = panel.n_outcomes;
  const int N = panel.total_occasions();
  const Eigen::MatrixXd lat = latent_matrix(state, panel);
  Eigen::MatrixXd m = mean_matrix(state, panel, lat);

  for (int d = 0; d < D; ++d) {
    if (panel.loading_fixed[d]) continue;  // pinned to one for identifiability
    const double s2 = 1.0 / omega(d, d);
    const double v0 = config.prior.loading_var;
    const double m0 = loading_prior_mean(config, d);
    double sum_zz = 0, sum_zw = 0;
    for (int occ = 0; occ < N; ++occ) {
      const Eigen::VectorXd resid = state.complete.col(occ) - m.col(occ);
      const double coupled = omega.row(d).dot(resid) - omega(d, d) * resid[d];
      const double offset = -s2 * coupled;
      const double zeta = lat(panel.facet_of[d], occ);
      const double w = state.complete(d, occ) - state.alpha[d] -
                       state.gamma.col(d).dot(panel.X.col(occ)) - offset;
      sum_zz += zeta * zeta;
      sum_zw += zeta * w;
    }
    const double prec = 1.0 / v0 + sum_zz / s2;
    const double mean = (m0 / v0 + sum_zw / s2) / prec;
    state.loading[d] = rng.normal(mean, std::sqrt(1.0 / prec));
    refresh_mean_row(m, state, panel, lat, d);
  }
}

void update_sigma_eps(ParameterState& state, const Panel& panel,
                      const ModelConfig& config, Rng& rng) {
  const Eigen::MatrixXd lat = latent_matrix(state, panel);
  const Eigen::MatrixXd m = mean_matrix(state, panel, lat);
  const Eigen::MatrixXd resid = state.complete - m;
  Eigen::MatrixXd scatter = resid * resid.transpose();
  scatter = (0.5 * (scatter + scatter.transpose())).eval();
  priors::refresh_hier_iw(state.sigma_eps, state.iw_eps, scatter,
                          panel.total_occasions(), config.prior.covariance, rng);
}

namespace {

template <typename Fn>
void run_step(const char* name, Fn&& fn) {
  try {
    fn();
  } catch (const NumericalError& e) {
    throw NumericalError(std::string(name) + ": " + e.what());
  }
}

}  // namespace

void sweep(ParameterState& state, const Panel& panel, const ModelConfig& config,
           const UpdatePolicy& policy, Rng& rng) {
  Eigen::MatrixXd omega;
  run_step("sigma_eps_inverse",
           [&] { omega = inverse_spd(state.sigma_eps, "sigma_eps"); });

  if (policy.augment)
    run_step("augment_counts", [&] { augment_counts(state, panel, omega, rng); });
  if (policy.impute)
    run_step("impute_missing", [&] { impute_missing(state, panel, rng); });
  if (policy.beta)
    run_step("update_beta_i", [&] { update_beta(state, panel, omega, rng); });
  if (policy.mu_beta || policy.sigma_beta || policy.horseshoe)
    run_step("update_population",
             [&] { update_population(state, panel, config, policy, rng); });
  if (policy.regression)
    run_step("update_outcome_regression", [&] {
      update_regression(state, panel, config, policy, omega, rng);
    });
  if (policy.loadings)
    run_step("update_loadings",
             [&] { update_loadings(state, panel, config, omega, rng); });
  if (policy.sigma_eps)
    run_step("update_sigma_eps",
             [&] { update_sigma_eps(state, panel, config, rng); });
  if (policy.horseshoe && config.prior.horseshoe)
    run_step("horseshoe_refresh", [&] {
      for (int d = 0; d < panel.n_outcomes; ++d)
        priors::refresh_horseshoe(state.hs_gamma[d], state.gamma.col(d), rng);
    });
}

namespace {

double log_normal_density(double x, double mean, double var) {
  const double d = x - mean;
  return -0.5 * (std::log(2.0 * M_PI * var) + d * d / var);
}

double log_inv_gamma_density(double x, double shape, double scale) {
  return shape * std::log(scale) - std::lgamma(shape) -
         (shape + 1.0) * std::log(x) - scale / x;
}

double log_multigamma(double a, int p) {
  double out = 0.25 * p * (p - 1) * std::log(M_PI);
  for (int j = 0; j < p; ++j) out += std::lgamma(a - 0.5 * j);
  return out;
}

double log_inv_wishart_density(const Eigen::MatrixXd& sigma, double df,
                               const Eigen::MatrixXd& scale) {
  const int p = static_cast<int>(sigma.rows());
  Eigen::LLT<Eigen::MatrixXd> llt_sigma(sigma);
  Eigen::LLT<Eigen::MatrixXd> llt_scale(scale);
  if (llt_sigma.info() != Eigen::Success || llt_scale.info() != Eigen::Success)
    throw NumericalError("log_inv_wishart_density: matrix not SPD");
  double logdet_sigma = 0, logdet_scale = 0;
  for (int j = 0; j < p; ++j) {
    logdet_sigma += 2.0 * std::log(llt_sigma.matrixL()(j, j));
    logdet_scale += 2.0 * std::log(llt_scale.matrixL()(j, j));
  }
  const double tr = llt_sigma.solve(scale).trace();
  return 0.5 * df * logdet_scale - 0.5 * df * p * std::log(2.0) -
         log_multigamma(0.5 * df, p) -
         0.5 * (df + p + 1.0) * logdet_sigma - 0.5 * tr;
}

double log_hier_iw_density(const Eigen::MatrixXd& sigma,
                           const priors::HierIWState& aux,
                           const priors::HierIWConfig& cfg) {
  const int p = static_cast<int>(sigma.rows());
  Eigen::MatrixXd scale = Eigen::MatrixXd::Zero(p, p);
  for (int j = 0; j < p; ++j) scale(j, j) = 2.0 * cfg.df / aux.a[j];
  double out = log_inv_wishart_density(sigma, cfg.df + p - 1, scale);
  for (int j = 0; j < p; ++j)
    out += log_inv_gamma_density(aux.a[j], 0.5, 1.0 / (cfg.scale * cfg.scale));
  return out;
}

double log_horseshoe_density(const priors::HorseshoeState& hs,
                             const Eigen::VectorXd& coeffs) {
  double out = 0;
  for (int j = 0; j < hs.dim(); ++j) {
    out += log_normal_density(coeffs[j], 0.0, hs.tau2 * hs.lambda2[j]);
    out += log_inv_gamma_density(hs.lambda2[j], 0.5, 1.0 / hs.nu[j]);
    out += log_inv_gamma_density(hs.nu[j], 0.5, 1.0);
  }
  out += log_inv_gamma_density(hs.tau2, 0.5, 1.0 / hs.xi);
  out += log_inv_gamma_density(hs.xi, 0.5, 1.0);
  return out;
}

}  // namespace

double log_joint(const ParameterState& state, const Panel& panel,
                 const ModelConfig& config) {
  const int D = panel.n_outcomes;
  const int N = panel.total_occasions();
  const Eigen::MatrixXd lat = latent_matrix(state, panel);
  const Eigen::MatrixXd m = mean_matrix(state, panel, lat);

  Eigen::LLT<Eigen::MatrixXd> llt_eps(state.sigma_eps);
  Eigen::LLT<Eigen::MatrixXd> llt_beta(state.sigma_beta);
  if (llt_eps.info() != Eigen::Success || llt_beta.info() != Eigen::Success)
    throw NumericalError("log_joint: covariance not SPD");
  double logdet_eps = 0, logdet_beta = 0;
  for (int j = 0; j < D; ++j)
    logdet_eps += 2.0 * std::log(llt_eps.matrixL()(j, j));
  for (int j = 0; j < panel.state_dim(); ++j)
    logdet_beta += 2.0 * std::log(llt_beta.matrixL()(j, j));

  double out = 0;
  for (int occ = 0; occ < N; ++occ) {
    const Eigen::VectorXd r = state.complete.col(occ) - m.col(occ);
    out += -0.5 * (D * std::log(2.0 * M_PI) + logdet_eps +
                   r.dot(llt_eps.solve(r)));
  }
  for (int i = 0; i < panel.n_subjects; ++i) {
    const Eigen::VectorXd r = state.beta.col(i) - state.mu_beta;
    out += -0.5 * (panel.state_dim() * std::log(2.0 * M_PI) + logdet_beta +
                   r.dot(llt_beta.solve(r)));
  }

  if (config.prior.horseshoe) {
    out += log_horseshoe_density(state.hs_mu, state.mu_beta);
  } else {
    const double v = config.prior.fixed_coef_sd * config.prior.fixed_coef_sd;
    for (int j = 0; j < panel.state_dim(); ++j)
      out += log_normal_density(state.mu_beta[j], 0.0, v);
  }
  for (int d = 0; d < D; ++d) {
    out += log_normal_density(state.alpha[d], 0.0, config.prior.alpha_var);
    if (config.prior.horseshoe) {
      out += log_horseshoe_density(state.hs_gamma[d], state.gamma.col(d));
    } else {
      const double v = config.prior.fixed_coef_sd * config.prior.fixed_coef_sd;
      for (int k = 0; k < kCovariateCount; ++k)
        out += log_normal_density(state.gamma(k, d), 0.0, v);
    }
    if (!panel.loading_fixed[d])
      out += log_normal_density(state.loading[d], loading_prior_mean(config, d),
                                config.prior.loading_var);
  }
  out += log_hier_iw_density(state.sigma_beta, state.iw_beta,
                             config.prior.covariance);
  out += log_hier_iw_density(state.sigma_eps, state.iw_eps,
                             config.prior.covariance);
  return out;
}

namespace {

Draw snapshot(const ParameterState& state, const Panel& panel,
              const ModelConfig& config) {
  Draw d;
  d.mu_beta = state.mu_beta;
  d.sigma_beta = state.sigma_beta;
  d.alpha = state.alpha;
  d.gamma = state.gamma;
  d.loading = state.loading;
  d.sigma_eps = state.sigma_eps;
  d.beta = state.beta;
  d.count_latent.resize(panel.count_cells.size());
  for (size_t k = 0; k < panel.count_cells.size(); ++k)
    d.count_latent[k] =
        state.complete(panel.count_cells[k].d, panel.count_cells[k].occ);
  d.imputed.resize(panel.missing_cells.size());
  for (size_t k = 0; k < panel.missing_cells.size(); ++k)
    d.imputed[k] =
        state.complete(panel.missing_cells[k].d, panel.missing_cells[k].occ);
  if (config.prior.horseshoe) {
    d.hs_tau2.resize(1 + panel.n_outcomes);
    d.hs_tau2[0] = state.hs_mu.tau2;
    for (int j = 0; j < panel.n_outcomes; ++j)
      d.hs_tau2[1 + j] = state.hs_gamma[j].tau2;
  }
  d.log_joint = log_joint(state, panel, config);
  return d;
}

}  // namespace

ChainOutput run_chain(const Panel& panel, const ModelConfig& config,
                      const MCMCSettings& settings, int chain_id,
                      const UpdatePolicy& policy, const ParameterState* init) {
  Rng rng(settings.seed, static_cast<std::uint64_t>(chain_id));
  ParameterState state = init ? *init : initial_state(panel, config);

  ChainOutput out;
  out.chain_id = chain_id;
  out.iterations = settings.iterations;
  out.burnin = settings.burnin;
  out.thin = settings.thin;
  out.seed = settings.seed;
  if (settings.iterations > settings.burnin)
    out.draws.reserve(
        static_cast<size_t>((settings.iterations - settings.burnin) /
                            settings.thin));

  for (long iter = 1; iter <= settings.iterations; ++iter) {
    try {
      sweep(state, panel, config, policy, rng);
    } catch (const NumericalError& e) {
      throw NumericalError("chain " + std::to_string(chain_id) + " aborted at"
                           " iteration " + std::to_string(iter) + ", " +
                           e.what());
    }
    if (iter > settings.burnin &&
        (iter - settings.burnin) % settings.thin == 0)
      out.draws.push_back(snapshot(state, panel, config));
  }
  return out;
}

std::vector<ChainOutput> run_fit(const Dataset& data, const ModelConfig& config,
                                 const UpdatePolicy& policy) {
  config.validate();
  const Panel panel = build_panel(data, config);
  const MCMCSettings& settings = config.mcmc;
  const int n_chains = settings.chains;
  int threads = settings.threads;
  if (threads <= 0) {
    const unsigned hw = std::thread::hardware_concurrency();
    threads = static_cast<int>(std::max(1u, hw));
  }
  threads = std::min(threads, n_chains);

  std::vector<ChainOutput> results(n_chains);
  std::vector<std::exception_ptr> failures(n_chains);
  int next = 0;
  while (next < n_chains) {
    const int batch = std::min(threads, n_chains - next);
    std::vector<std::thread> pool;
    pool.reserve(batch);
    for (int k = 0; k < batch; ++k) {
      const int chain = next + k;
      pool.emplace_back([&, chain] {
        try {
          results[chain] = run_chain(panel, config, settings, chain, policy);
        } catch (...) {
          failures[chain] = std::current_exception();
        }
      });
    }
    for (auto& t : pool) t.join();
    next += batch;
  }
  for (const auto& f : failures)
    if (f) std::rethrow_exception(f);
  return results;
}

}  // namespace lgrowth::gibbs
