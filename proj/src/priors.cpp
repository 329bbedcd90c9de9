#include "lgrowth/priors.hpp"

#include <cmath>
#include <string>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include "lgrowth/errors.hpp"

namespace lgrowth::priors {

namespace {
constexpr double kTiny = 1e-300;

double floored(double x) { return std::max(x, kTiny); }
}  // namespace

HorseshoeState HorseshoeState::identity(int dim) {
  HorseshoeState s;
  s.lambda2 = Eigen::VectorXd::Ones(dim);
  s.nu = Eigen::VectorXd::Ones(dim);
  s.tau2 = 1.0;
  s.xi = 1.0;
  return s;
}

void HorseshoeState::validate() const {
  auto positive = [](double x) { return std::isfinite(x) && x > 0.0; };
  if (!positive(tau2) || !positive(xi))
    throw NumericalError("horseshoe state: non-positive global component");
  for (int j = 0; j < dim(); ++j)
    if (!positive(lambda2[j]) || !positive(nu[j]))
      throw NumericalError("horseshoe state: non-positive local component");
}

HorseshoeConditionals horseshoe_conditional_params(
    const Eigen::Ref<const Eigen::VectorXd>& coeffs, const HorseshoeState& state) {
  if (coeffs.size() != state.lambda2.size())
    throw ValidationError("horseshoe: coefficient/state dimension mismatch");
  state.validate();
  const int p = state.dim();
  HorseshoeConditionals out;
  out.lambda2.resize(p);
  out.nu.resize(p);
  double sum_sq_over_lambda = 0.0;
  for (int j = 0; j < p; ++j) {
    const double theta2 = coeffs[j] * coeffs[j];
    out.lambda2[j] = {1.0, 1.0 / floored(state.nu[j]) +
                               theta2 / (2.0 * floored(state.tau2))};
    out.nu[j] = {1.0, 1.0 + 1.0 / floored(state.lambda2[j])};
    sum_sq_over_lambda += theta2 / (2.0 * floored(state.lambda2[j]));
  }
  out.tau2 = {0.5 * (p + 1), 1.0 / floored(state.xi) + sum_sq_over_lambda};
  out.xi = {1.0, 1.0 + 1.0 / floored(state.tau2)};
  return out;
}

void refresh_horseshoe(HorseshoeState& state,
                       const Eigen::Ref<const Eigen::VectorXd>& coeffs,
                       Rng& rng) {
  // lambda2 and nu first, then the globals given the new locals.
  const int p = state.dim();
  for (int j = 0; j < p; ++j) {
    const double theta2 = coeffs[j] * coeffs[j];
    state.lambda2[j] = rng.inv_gamma(
        1.0, 1.0 / floored(state.nu[j]) + theta2 / (2.0 * floored(state.tau2)));
    state.nu[j] = rng.inv_gamma(1.0, 1.0 + 1.0 / floored(state.lambda2[j]));
  }
  double sum_sq_over_lambda = 0.0;
  for (int j = 0; j < p; ++j)
    sum_sq_over_lambda += coeffs[j] * coeffs[j] / (2.0 * floored(state.lambda2[j]));
  state.tau2 = rng.inv_gamma(0.5 * (p + 1),
                             1.0 / floored(state.xi) + sum_sq_over_lambda);
  state.xi = rng.inv_gamma(1.0, 1.0 + 1.0 / floored(state.tau2));
}

HierIWState HierIWState::identity(int dim) {
  HierIWState s;
  s.a = Eigen::VectorXd::Ones(dim);
  return s;
}

void HierIWState::validate() const {
  for (int j = 0; j < dim(); ++j)
    if (!std::isfinite(a[j]) || a[j] <= 0.0)
      throw NumericalError("hierarchical IW state: non-positive auxiliary");
}

namespace {

void check_scatter(const Eigen::Ref<const Eigen::MatrixXd>& scatter) {
  const Eigen::Index p = scatter.rows();
  if (scatter.cols() != p)
    throw ValidationError("scatter matrix must be square");
  const double scale = std::max(1.0, scatter.cwiseAbs().maxCoeff());
  if ((scatter - scatter.transpose()).cwiseAbs().maxCoeff() > 1e-10 * scale)
    throw NumericalError("scatter matrix not symmetric");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(scatter,
                                                    Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success || es.eigenvalues().minCoeff() < -1e-10 * scale)
    throw NumericalError("scatter matrix not positive semidefinite");
}

}  // namespace

InvWishartParams hier_iw_conditional(const Eigen::Ref<const Eigen::MatrixXd>& scatter,
                                     double n, const HierIWState& state,
                                     const HierIWConfig& cfg) {
  if (n < 0) throw ValidationError("hier_iw_conditional: negative sample count");
  if (scatter.rows() != state.dim())
    throw ValidationError("hier_iw_conditional: scatter/state dimension mismatch");
  state.validate();
  check_scatter(scatter);
  const int p = state.dim();
  InvWishartParams out;
  out.df = cfg.df + p - 1 + n;
  out.scale = scatter;
  for (int j = 0; j < p; ++j)
    out.scale(j, j) += 2.0 * cfg.df / floored(state.a[j]);
  return out;
}

std::vector<InvGammaParams> hier_iw_aux_conditional(
    const Eigen::Ref<const Eigen::MatrixXd>& sigma, const HierIWConfig& cfg) {
  const Eigen::Index p = sigma.rows();
  Eigen::LLT<Eigen::MatrixXd> llt(sigma);
  if (llt.info() != Eigen::Success)
    throw NumericalError("hier_iw_aux_conditional: sigma not SPD");
  const Eigen::MatrixXd sigma_inv =
      llt.solve(Eigen::MatrixXd::Identity(p, p));
  std::vector<InvGammaParams> out(p);
  const double inv_A2 = 1.0 / (cfg.scale * cfg.scale);
  for (Eigen::Index j = 0; j < p; ++j)
    out[j] = {0.5 * (cfg.df + p), cfg.df * sigma_inv(j, j) + inv_A2};
  return out;
}

Eigen::MatrixXd sample_inverse_wishart(double df,
                                       const Eigen::Ref<const Eigen::MatrixXd>& scale,
                                       Rng& rng) {
  const Eigen::Index p = scale.rows();
  if (!(df > p - 1))
    throw NumericalError("sample_inverse_wishart: df must exceed p - 1");
  check_scatter(scale);
  Eigen::LLT<Eigen::MatrixXd> llt(scale);
  if (llt.info() != Eigen::Success)
    throw NumericalError("sample_inverse_wishart: scale not SPD");

  // Sigma^{-1} ~ Wishart(df, scale^{-1}). With scale = L L^T and Bartlett
  // factor A, W = (L^{-T} A)(L^{-T} A)^T ~ Wishart(df, scale^{-1}), hence
  // Sigma = W^{-1} = (A^{-1} L^T)^T (A^{-1} L^T).
  Eigen::MatrixXd bartlett = Eigen::MatrixXd::Zero(p, p);
  for (Eigen::Index i = 0; i < p; ++i) {
    bartlett(i, i) = std::sqrt(rng.chi_squared(df - static_cast<double>(i)));
    for (Eigen::Index j = 0; j < i; ++j) bartlett(i, j) = rng.normal();
  }
  // Solve A X = I for lower-triangular A, then Sigma = L X^T X L^T.
  Eigen::MatrixXd a_inv =
      bartlett.triangularView<Eigen::Lower>().solve(Eigen::MatrixXd::Identity(p, p));
  Eigen::MatrixXd l = llt.matrixL();
  Eigen::MatrixXd half = a_inv * l.transpose();  // Sigma = half^T half
  Eigen::MatrixXd sigma = half.transpose() * half;
  sigma = (0.5 * (sigma + sigma.transpose())).eval();
  return sigma;
}

void refresh_hier_iw(Eigen::MatrixXd& sigma, HierIWState& state,
                     const Eigen::Ref<const Eigen::MatrixXd>& scatter, double n,
                     const HierIWConfig& cfg, Rng& rng) {
  const InvWishartParams iw = hier_iw_conditional(scatter, n, state, cfg);
  sigma = sample_inverse_wishart(iw.df, iw.scale, rng);
  const auto aux = hier_iw_aux_conditional(sigma, cfg);
  for (int j = 0; j < state.dim(); ++j)
    state.a[j] = rng.inv_gamma(aux[j].shape, aux[j].scale);
}

Eigen::MatrixXd sample_hier_iw_prior(HierIWState& state, int p,
                                     const HierIWConfig& cfg, Rng& rng) {
  state.a.resize(p);
  const double inv_A2 = 1.0 / (cfg.scale * cfg.scale);
  for (int j = 0; j < p; ++j) state.a[j] = rng.inv_gamma(0.5, inv_A2);
  Eigen::MatrixXd scale = Eigen::MatrixXd::Zero(p, p);
  for (int j = 0; j < p; ++j) scale(j, j) = 2.0 * cfg.df / floored(state.a[j]);
  return sample_inverse_wishart(cfg.df + p - 1, scale, rng);
}

HorseshoeState sample_horseshoe_prior(int dim, Rng& rng) {
  HorseshoeState s;
  s.lambda2.resize(dim);
  s.nu.resize(dim);
  for (int j = 0; j < dim; ++j) {
    s.nu[j] = rng.inv_gamma(0.5, 1.0);
    s.lambda2[j] = rng.inv_gamma(0.5, 1.0 / floored(s.nu[j]));
  }
  s.xi = rng.inv_gamma(0.5, 1.0);
  s.tau2 = rng.inv_gamma(0.5, 1.0 / floored(s.xi));
  return s;
}

}  // namespace lgrowth::priors
