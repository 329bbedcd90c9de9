#include "lgrowth/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "lgrowth/errors.hpp"

namespace lgrowth::diag {

std::pair<double, double> hpd_interval(std::vector<double> draws, double level) {
  if (draws.size() < 20)
    throw ValidationError("hpd_interval: need at least 20 draws");
  if (!(level > 0.0 && level < 1.0))
    throw ValidationError("hpd_interval: level must be in (0, 1)");
  std::sort(draws.begin(), draws.end());
  const size_t n = draws.size();
  const size_t m = static_cast<size_t>(std::ceil(level * n));
  const size_t take = std::min(std::max<size_t>(m, 1), n);
  size_t best = 0;
  double best_width = draws[take - 1] - draws[0];
  for (size_t i = 1; i + take <= n; ++i) {
    const double width = draws[i + take - 1] - draws[i];
    if (width < best_width) {  // strict: earliest window wins ties
      best_width = width;
      best = i;
    }
  }
  return {draws[best], draws[best + take - 1]};
}

ConvergenceStat convergence(const std::vector<std::vector<double>>& chains) {
  if (chains.size() < 2)
    throw ValidationError("convergence: need at least two chains");
  const size_t len = chains[0].size();
  for (const auto& c : chains)
    if (c.size() != len)
      throw ValidationError("convergence: chains must have equal lengths");
  if (len < 4) throw ValidationError("convergence: chains too short");

  // Split each chain in half.
  std::vector<std::vector<double>> halves;
  const size_t half = len / 2;
  for (const auto& c : chains) {
    halves.emplace_back(c.begin(), c.begin() + half);
    halves.emplace_back(c.end() - half, c.end());
  }
  const size_t m = halves.size();
  const size_t n = half;

  std::vector<double> means(m), vars(m);
  for (size_t j = 0; j < m; ++j) {
    double s = std::accumulate(halves[j].begin(), halves[j].end(), 0.0);
    means[j] = s / n;
    double ss = 0;
    for (double x : halves[j]) ss += (x - means[j]) * (x - means[j]);
    vars[j] = ss / (n - 1);
  }
  const double grand = std::accumulate(means.begin(), means.end(), 0.0) / m;
  double b = 0;
  for (double mu : means) b += (mu - grand) * (mu - grand);
  b *= static_cast<double>(n) / (m - 1);
  const double w = std::accumulate(vars.begin(), vars.end(), 0.0) / m;
  const double var_plus = (n - 1.0) / n * w + b / n;

  ConvergenceStat out;
  const long total = static_cast<long>(chains.size()) * len;
  if (!(w > 0.0) || !(var_plus > 0.0)) {
    out.rhat_defined = false;  // constant chains
    out.rhat = std::numeric_limits<double>::quiet_NaN();
    out.ess = static_cast<double>(total);
    return out;
  }
  out.rhat = std::sqrt(var_plus / w);

  // Chain-averaged autocorrelations rho_t, combined in Geyer pairs
  // G_k = rho_{2k} + rho_{2k+1} with initial-positive monotone truncation;
  // tau = 2 sum G_k - 1.
  auto rho_at = [&](size_t t) {
    double acov = 0;
    for (size_t j = 0; j < m; ++j) {
      double a = 0;
      for (size_t i = t; i < n; ++i)
        a += (halves[j][i] - means[j]) * (halves[j][i - t] - means[j]);
      acov += a / n;
    }
    acov /= m;
    return 1.0 - (w - acov) / var_plus;
  };
  const size_t max_lag = std::min(n - 1, static_cast<size_t>(1000));
  double prev_pair = std::numeric_limits<double>::infinity();
  double sum_pairs = 0;
  for (size_t t = 0; t + 1 <= max_lag; t += 2) {
    double pair = rho_at(t) + rho_at(t + 1);
    if (pair <= 0.0) break;            // initial positive sequence
    pair = std::min(pair, prev_pair);  // enforce monotone decrease
    prev_pair = pair;
    sum_pairs += pair;
  }
  const double tau = std::max(2.0 * sum_pairs - 1.0, 1e-12);
  out.ess = std::min(static_cast<double>(total),
                     static_cast<double>(total) / tau);
  return out;
}

namespace {

std::string idx(const std::string& base, int i) {
  return base + "." + std::to_string(i + 1);
}

}  // namespace

std::vector<ScalarView> scalar_views(const ModelConfig& config) {
  std::vector<ScalarView> views;
  const int q = config.state_dim();
  const int D = config.n_outcomes();
  for (int j = 0; j < q; ++j)
    views.push_back({idx("mu_beta", j),
                     [j](const gibbs::Draw& d) { return d.mu_beta[j]; },
                     [j](gibbs::Draw& d, double v) { d.mu_beta[j] = v; }});
  for (int a = 0; a < q; ++a)
    for (int b = 0; b <= a; ++b)
      views.push_back(
          {"sigma_beta." + std::to_string(a + 1) + "." + std::to_string(b + 1),
           [a, b](const gibbs::Draw& d) { return d.sigma_beta(a, b); },
           [a, b](gibbs::Draw& d, double v) {
             d.sigma_beta(a, b) = d.sigma_beta(b, a) = v;
           }});
  for (int d = 0; d < D; ++d)
    views.push_back({"alpha." + config.outcomes[d].name,
                     [d](const gibbs::Draw& dr) { return dr.alpha[d]; },
                     [d](gibbs::Draw& dr, double v) { dr.alpha[d] = v; }});
  for (int d = 0; d < D; ++d)
    for (int k = 0; k < kCovariateCount; ++k)
      views.push_back(
          {"gamma." + config.outcomes[d].name + "." + kCovariateNames[k],
           [d, k](const gibbs::Draw& dr) { return dr.gamma(k, d); },
           [d, k](gibbs::Draw& dr, double v) { dr.gamma(k, d) = v; }});
  for (int d = 0; d < D; ++d) {
    if (config.outcomes[d].loading_fixed) continue;
    views.push_back({"loading." + config.outcomes[d].name,
                     [d](const gibbs::Draw& dr) { return dr.loading[d]; },
                     [d](gibbs::Draw& dr, double v) { dr.loading[d] = v; }});
  }
  for (int a = 0; a < D; ++a)
    for (int b = 0; b <= a; ++b)
      views.push_back(
          {"sigma_eps." + std::to_string(a + 1) + "." + std::to_string(b + 1),
           [a, b](const gibbs::Draw& d) { return d.sigma_eps(a, b); },
           [a, b](gibbs::Draw& d, double v) {
             d.sigma_eps(a, b) = d.sigma_eps(b, a) = v;
           }});
  if (config.prior.horseshoe) {
    views.push_back({"hs_tau2.mu_beta",
                     [](const gibbs::Draw& d) { return d.hs_tau2[0]; },
                     [](gibbs::Draw& d, double v) { d.hs_tau2[0] = v; }});
    for (int d = 0; d < D; ++d)
      views.push_back({"hs_tau2." + config.outcomes[d].name,
                       [d](const gibbs::Draw& dr) { return dr.hs_tau2[1 + d]; },
                       [d](gibbs::Draw& dr, double v) { dr.hs_tau2[1 + d] = v; }});
  }
  return views;
}

gibbs::Draw empty_draw(const ModelConfig& config) {
  const int q = config.state_dim();
  const int D = config.n_outcomes();
  gibbs::Draw d;
  d.mu_beta = Eigen::VectorXd::Zero(q);
  d.sigma_beta = Eigen::MatrixXd::Zero(q, q);
  d.alpha = Eigen::VectorXd::Zero(D);
  d.gamma = Eigen::MatrixXd::Zero(kCovariateCount, D);
  d.loading = Eigen::VectorXd::Zero(D);
  for (int j = 0; j < D; ++j)
    if (config.outcomes[j].loading_fixed) d.loading[j] = 1.0;
  d.sigma_eps = Eigen::MatrixXd::Zero(D, D);
  if (config.prior.horseshoe) d.hs_tau2 = Eigen::VectorXd::Zero(1 + D);
  return d;
}

std::vector<ParameterSummary> summarize_chains(
    const std::vector<gibbs::ChainOutput>& chains, const ModelConfig& config,
    double level) {
  if (chains.empty()) throw ValidationError("summarize_chains: no chains");
  const auto views = scalar_views(config);
  std::vector<ParameterSummary> out;
  out.reserve(views.size());
  for (const auto& view : views) {
    std::vector<double> pooled;
    std::vector<std::vector<double>> per_chain;
    for (const auto& chain : chains) {
      std::vector<double> xs;
      xs.reserve(chain.draws.size());
      for (const auto& draw : chain.draws) xs.push_back(view.get(draw));
      pooled.insert(pooled.end(), xs.begin(), xs.end());
      per_chain.push_back(std::move(xs));
    }
    ParameterSummary s;
    s.name = view.name;
    const double n = static_cast<double>(pooled.size());
    s.mean = std::accumulate(pooled.begin(), pooled.end(), 0.0) / n;
    double ss = 0;
    for (double x : pooled) ss += (x - s.mean) * (x - s.mean);
    s.sd = n > 1 ? std::sqrt(ss / (n - 1)) : 0.0;
    const auto [lo, hi] = hpd_interval(pooled, level);
    s.hpd_lo = lo;
    s.hpd_hi = hi;
    if (per_chain.size() >= 2 && per_chain[0].size() >= 4) {
      const ConvergenceStat c = convergence(per_chain);
      s.ess = c.ess;
      s.rhat = c.rhat;
      s.rhat_defined = c.rhat_defined;
    } else {
      s.ess = n;
      s.rhat = std::numeric_limits<double>::quiet_NaN();
      s.rhat_defined = false;
    }
    out.push_back(std::move(s));
  }
  return out;
}

Eigen::VectorXd default_age_grid() {
  const int n = 111;  // 10.0 to 21.0 in steps of 0.1
  Eigen::VectorXd grid(n);
  for (int i = 0; i < n; ++i) grid[i] = 10.0 + 0.1 * i;
  return grid;
}

TrajectoryBand trajectory_band(const std::vector<Eigen::VectorXd>& mu_draws,
                               const spline::KnotVector& knots,
                               const Eigen::VectorXd& age_grid, int facet,
                               int n_facets, double level) {
  if (mu_draws.empty()) throw ValidationError("trajectory_band: no draws");
  if (facet < 1 || facet > n_facets)
    throw ValidationError("trajectory_band: facet out of range");
  for (Eigen::Index i = 0; i < age_grid.size(); ++i)
    if (age_grid[i] < 10.0 || age_grid[i] > 21.0)
      throw ValidationError("trajectory_band: grid age " +
                            std::to_string(age_grid[i]) +
                            " outside the modeled range [10, 21]");
  const int seg = knots.count() + 1;
  TrajectoryBand band;
  band.ages = age_grid;
  band.mean.resize(age_grid.size());
  band.lo.resize(age_grid.size());
  band.hi.resize(age_grid.size());
  std::vector<double> values(mu_draws.size());
  for (Eigen::Index i = 0; i < age_grid.size(); ++i) {
    const Eigen::VectorXd b = spline::basis_vector(age_grid[i], knots);
    for (size_t s = 0; s < mu_draws.size(); ++s) {
      if (mu_draws[s].size() != static_cast<Eigen::Index>(seg) * n_facets)
        throw ValidationError("trajectory_band: draw dimension mismatch");
      values[s] = b.dot(mu_draws[s].segment((facet - 1) * seg, seg));
    }
    band.mean[i] =
        std::accumulate(values.begin(), values.end(), 0.0) / values.size();
    if (values.size() >= 20) {
      const auto [lo, hi] = hpd_interval(values, level);
      band.lo[i] = lo;
      band.hi[i] = hi;
    } else {  // single- or few-draw band collapses onto the curve
      const auto [mn, mx] = std::minmax_element(values.begin(), values.end());
      band.lo[i] = *mn;
      band.hi[i] = *mx;
    }
  }
  return band;
}

std::vector<CovariateRow> covariate_table(
    const std::vector<gibbs::ChainOutput>& chains, const ModelConfig& config,
    double level) {
  if (chains.empty() || chains[0].draws.empty())
    throw ValidationError("covariate_table: no draws");
  const int D = config.n_outcomes();
  std::vector<CovariateRow> rows(D);
  auto cell = [&](std::function<double(const gibbs::Draw&)> view) {
    std::vector<double> xs;
    for (const auto& chain : chains)
      for (const auto& draw : chain.draws) xs.push_back(view(draw));
    CovariateCell c;
    c.mean = std::accumulate(xs.begin(), xs.end(), 0.0) / xs.size();
    const auto [lo, hi] = hpd_interval(xs, level);
    c.hpd_lo = lo;
    c.hpd_hi = hi;
    c.excludes_zero = (lo > 0.0) || (hi < 0.0);
    return c;
  };
  for (int d = 0; d < D; ++d) {
    rows[d].outcome = config.outcomes[d].name;
    rows[d].intercept = cell([d](const gibbs::Draw& dr) { return dr.alpha[d]; });
    for (int k = 0; k < kCovariateCount; ++k)
      rows[d].cells[k] =
          cell([d, k](const gibbs::Draw& dr) { return dr.gamma(k, d); });
  }
  return rows;
}

namespace {

// Average ranks with tie handling.
std::vector<double> ranks_of(const std::vector<double>& xs) {
  const size_t n = xs.size();
  std::vector<size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](size_t a, size_t b) { return xs[a] < xs[b]; });
  std::vector<double> ranks(n);
  size_t i = 0;
  while (i < n) {
    size_t j = i;
    while (j + 1 < n && xs[order[j + 1]] == xs[order[i]]) ++j;
    const double avg = 0.5 * (i + j) + 1.0;
    for (size_t k = i; k <= j; ++k) ranks[order[k]] = avg;
    i = j + 1;
  }
  return ranks;
}

double pearson(const std::vector<double>& x, const std::vector<double>& y) {
  const size_t n = x.size();
  double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0, sxx = 0, syy = 0;
  for (size_t i = 0; i < n; ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx <= 0.0 || syy <= 0.0) return 0.0;
  return sxy / std::sqrt(sxx * syy);
}

}  // namespace

SpearmanResult spearman_matrix(const Dataset& data,
                               const std::string& session_filter) {
  const int D = data.n_outcomes();
  SpearmanResult out;
  out.rho = Eigen::MatrixXd::Zero(D, D);
  out.available.setConstant(D, D, false);
  for (int a = 0; a < D; ++a) {
    out.rho(a, a) = 1.0;
    out.available(a, a) = true;
  }
  for (int a = 0; a < D; ++a) {
    for (int b = a + 1; b < D; ++b) {
      std::vector<double> xs, ys;
      for (const auto& subj : data.subjects())
        for (const auto& obs : subj.occasions) {
          if (!session_filter.empty() && obs.session != session_filter) continue;
          if (obs.y[a].has_value() && obs.y[b].has_value()) {
            xs.push_back(*obs.y[a]);
            ys.push_back(*obs.y[b]);
          }
        }
      if (xs.size() < 3) continue;  // too few complete pairs
      const double rho = pearson(ranks_of(xs), ranks_of(ys));
      out.rho(a, b) = out.rho(b, a) = rho;
      out.available(a, b) = out.available(b, a) = true;
    }
  }
  return out;
}

}  // namespace lgrowth::diag
