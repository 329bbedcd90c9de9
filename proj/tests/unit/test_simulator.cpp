#include <doctest.h>

#include <cmath>
#include <map>

#include "lgrowth/diagnostics.hpp"
#include "lgrowth/gibbs.hpp"
#include "lgrowth/rng.hpp"
#include "lgrowth/simulator.hpp"
#include "lgrowth/spline.hpp"

using namespace lgrowth;

TEST_CASE("default truth carries the reference calibration values") {
  const auto t = sim::default_truth();
  Eigen::VectorXd facet2 = t.params.mu_beta.tail(4);
  CHECK(facet2.isApprox((Eigen::VectorXd(4) << 0.48, 0.95, 0.11, 0.07).finished()));
  CHECK(t.params.mu_beta.head(4).isApprox(
      (Eigen::VectorXd(4) << 28.59, 24.86, 6.51, 8.52).finished()));
  CHECK(t.params.alpha[0] == doctest::Approx(141.08));
  CHECK(t.params.gamma(1, 9) == doctest::Approx(-0.05));  // y10, forward
  CHECK(t.missing_prob[7] == doctest::Approx(0.44));      // y8
  CHECK(t.design.n_subjects == 304);
  CHECK(t.model.knots.count() == 3);
  CHECK(t.params.loading[0] == 1.0);
  CHECK(t.params.loading[7] == 1.0);
}

TEST_CASE("truth JSON round trip") {
  const auto t = sim::default_truth();
  const auto back = sim::truth_from_json(sim::to_json(t));
  CHECK(back.params.mu_beta.isApprox(t.params.mu_beta));
  CHECK(back.params.sigma_eps.isApprox(t.params.sigma_eps));
  CHECK(back.missing_prob.isApprox(t.missing_prob));
  CHECK(back.design.n_subjects == 304);
  CHECK(back.seed == t.seed);
}

TEST_CASE("identical truth and seed give identical cohorts") {
  const auto t = sim::default_truth();
  Rng r1(9, 0), r2(9, 0);
  const auto [d1, l1] = sim::gen_cohort(t, r1);
  const auto [d2, l2] = sim::gen_cohort(t, r2);
  REQUIRE(d1.n_subjects() == d2.n_subjects());
  REQUIRE(d1.total_occasions() == d2.total_occasions());
  CHECK((l1.ystar.array() == l2.ystar.array()).all());
  for (int i = 0; i < d1.n_subjects(); ++i) {
    const auto& a = d1.subject(i);
    const auto& b = d2.subject(i);
    REQUIRE(a.occasions.size() == b.occasions.size());
    for (size_t s = 0; s < a.occasions.size(); ++s) {
      CHECK(a.occasions[s].age == b.occasions[s].age);
      for (int d = 0; d < 10; ++d) {
        CHECK(a.occasions[s].y[d].has_value() == b.occasions[s].y[d].has_value());
        if (a.occasions[s].y[d]) CHECK(*a.occasions[s].y[d] == *b.occasions[s].y[d]);
      }
    }
  }
}

TEST_CASE("degenerate noise collapses every subject onto the population curve") {
  sim::SimulationTruth t = sim::default_truth();
  t.design.n_subjects = 12;
  t.params.sigma_beta.setZero();
  t.params.sigma_eps.setZero();
  t.missing_prob.setZero();
  Rng rng(10);
  const auto [data, latent] = sim::gen_cohort(t, rng);
  (void)latent;
  for (const auto& subj : data.subjects())
    for (const auto& obs : subj.occasions) {
      const Eigen::VectorXd b = spline::basis_vector(obs.age, t.model.knots);
      const double zeta1 = b.dot(t.params.mu_beta.head(4));
      const Eigen::Vector4d x = encode_covariates(obs);
      const double want =
          t.params.alpha[1] + t.params.gamma.col(1).dot(x) +
          t.params.loading[1] * zeta1;
      CHECK(*obs.y[1] == doctest::Approx(want).epsilon(1e-12));
    }
}

TEST_CASE("unit masking probability removes an outcome everywhere") {
  sim::SimulationTruth t = sim::default_truth();
  t.design.n_subjects = 30;
  t.missing_prob[5] = 1.0;  // y6 never observed
  Rng rng(11);
  const auto [data, latent] = sim::gen_cohort(t, rng);
  (void)latent;
  for (const auto& subj : data.subjects())
    for (const auto& obs : subj.occasions) CHECK_FALSE(obs.y[5].has_value());
}

TEST_CASE("masking off reports zero missingness") {
  sim::SimulationTruth t = sim::default_truth();
  t.design.n_subjects = 25;
  t.missing_prob.setZero();
  Rng rng(12);
  const auto [data, latent] = sim::gen_cohort(t, rng);
  (void)latent;
  for (const auto& row : summarize(data)) CHECK(row.missing_proportion == 0.0);
}

TEST_CASE("count cells equal the rounded hidden record") {
  sim::SimulationTruth t = sim::default_truth();
  t.design.n_subjects = 20;
  Rng rng(13);
  const auto [data, latent] = sim::gen_cohort(t, rng);
  int occ = 0;
  for (const auto& subj : data.subjects())
    for (const auto& obs : subj.occasions) {
      for (int d : {0, 4, 7, 8})
        if (obs.y[d].has_value())
          CHECK(*obs.y[d] == gibbs::round_count(latent.ystar(d, occ)));
      ++occ;
    }
  CHECK(occ == latent.ystar.cols());
}

TEST_CASE("empirical missingness tracks the configured rates at cohort scale") {
  const auto t = sim::default_truth();
  Rng rng(14);
  const auto [data, latent] = sim::gen_cohort(t, rng);
  (void)latent;
  CHECK(data.n_subjects() == 304);
  const auto rows = summarize(data);
  const double targets[10] = {0.03, 0.03, 0.03, 0.07, 0.03,
                              0.48, 0.48, 0.44, 0.22, 0.22};
  for (int d = 0; d < 10; ++d)
    CHECK(std::fabs(rows[d].missing_proportion - targets[d]) < 0.05);
}

TEST_CASE("cohort composition matches the design qualitatively") {
  const auto t = sim::default_truth();
  Rng rng(15);
  const auto [data, latent] = sim::gen_cohort(t, rng);
  (void)latent;

  std::map<Position, int> by_pos;
  std::map<int, int> by_age_group;
  for (const auto& subj : data.subjects())
    for (const auto& obs : subj.occasions) {
      ++by_pos[obs.position];
      const int group = obs.age < 12 ? 0 : obs.age < 15 ? 1 : obs.age < 18 ? 2 : 3;
      ++by_age_group[group];
    }
  CHECK(by_pos[Position::midfielder] > by_pos[Position::forward]);
  CHECK(by_pos[Position::defender] > by_pos[Position::goalkeeper]);
  CHECK(by_age_group[0] < by_age_group[1]);
  CHECK(by_age_group[0] < by_age_group[2]);
  CHECK(by_age_group[0] < by_age_group[3]);
}

TEST_CASE("simulated correlations reproduce the qualitative sign structure") {
  sim::SimulationTruth t = sim::default_truth();
  t.design.n_subjects = 600;  // tighter empirical correlations
  t.missing_prob.setZero();
  Rng rng(16);
  const auto [data, latent] = sim::gen_cohort(t, rng);
  (void)latent;
  const auto res = diag::spearman_matrix(data, "s1");

  // Speed pairs correlate positively; determination-test speed vs accuracy
  // correlates negatively.
  const int speed[6] = {1, 2, 3, 5, 6, 9};
  for (int a : speed)
    for (int b : speed)
      if (a < b) CHECK(res.rho(a, b) > 0.0);
  CHECK(res.rho(0, 1) < 0.0);
}
