#include "test_support.hpp"
#include "wavebound/risk.hpp"
#include "wavebound/theorem.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

using namespace wavebound;
using wavebound::testing::random_matrix;

namespace {

LinearGaussianPopulation dense_population()
{
  LinearGaussianPopulation pop;
  pop.horizon = 2;
  pop.features = 1;
  pop.truth.resize(2, 3);
  pop.truth << 0.5, -1.0, 0.25, 0.0, 2.0, -0.5;
  pop.input_std = VectorXd(3);
  pop.input_std << 1.0, 0.5, 2.0;
  pop.noise_std = VectorXd(2);
  pop.noise_std << 0.3, 0.7;
  return pop;
}

OracleInstance acceptance_instance()
{
  auto inst = make_diagonal_instance(2, 2, {1.0, -0.5, 0.8, 0.3}, 1.0, 0.3, 0.25, 0.0);
  inst.epsilon = 0.01;
  inst.sample_size = 25;
  inst.trials = 20000;
  inst.margin_alpha = 0.01;
  inst.seed = 1;
  return inst;
}

} // namespace

TEST(TrueRisk, TruthGivesNoiseVariance)
{
  auto const pop = dense_population();
  MatrixXd const r = true_risk(pop, pop.truth);
  EXPECT_EQ(r.rows(), 2);
  EXPECT_EQ(r.cols(), 1);
  EXPECT_DOUBLE_EQ(r(0, 0), 0.09);
  EXPECT_DOUBLE_EQ(r(1, 0), 0.49);
}

TEST(TrueRisk, ZeroPredictorGivesTotalVariance)
{
  auto const pop = dense_population();
  MatrixXd const r = true_risk(pop, MatrixXd::Zero(2, 3));
  // 0.25 * 1 + 1 * 0.25 + 0.0625 * 4 + 0.09 and 0 + 4 * 0.25 + 0.25 * 4 + 0.49
  EXPECT_DOUBLE_EQ(r(0, 0), 0.84);
  EXPECT_DOUBLE_EQ(r(1, 0), 2.49);
}

TEST(TrueRisk, MatchesLargeSampleEstimate)
{
  auto const pop = dense_population();
  Rng rng(77);
  MatrixXd const w = pop.truth + random_matrix(2, 3, rng, 0.5);
  MatrixXd const r = true_risk(pop, w);

  Index const n = 1000000;
  VectorXd sum = VectorXd::Zero(2), sum_sq = VectorXd::Zero(2);
  VectorXd u(3), y(2);
  for (Index i = 0; i < n; ++i) {
    for (Index d = 0; d < 3; ++d) {
      u(d) = pop.input_std(d) * rng.normal();
    }
    for (Index e = 0; e < 2; ++e) {
      y(e) = pop.truth.row(e).dot(u) + pop.noise_std(e) * rng.normal();
    }
    VectorXd const sq = (w * u - y).array().square();
    sum += sq;
    sum_sq += sq.cwiseProduct(sq);
  }
  for (Index e = 0; e < 2; ++e) {
    double const mean = sum(e) / double(n);
    double const se = std::sqrt((sum_sq(e) / double(n) - mean * mean) / double(n));
    EXPECT_LE(std::abs(mean - r(e, 0)), 3.0 * se) << "element " << e << ": " << mean << " vs " << r(e, 0);
  }
}

TEST(TrueRisk, Errors)
{
  auto pop = dense_population();
  EXPECT_THROW(true_risk(pop, MatrixXd::Zero(3, 3)), ConfigError);
  pop.noise_std(1) = 0.0;
  EXPECT_THROW(true_risk(pop, pop.truth), ConfigError);
}

TEST(Oracle, EqualPredictorsAndZeroEpsilonCoincide)
{
  auto inst = make_diagonal_instance(2, 1, {1.0, 0.5}, 1.0, 0.5, 0.0, 0.0);
  inst.g = inst.g_star = inst.population.truth;
  inst.g(0, 0) += 0.1;
  inst.g_star = inst.g;
  inst.epsilon = 0.0;
  inst.trials = 2000;
  auto const r = run_estimator_experiment(inst);
  EXPECT_EQ(r.mse_plain, r.mse_wave);
  EXPECT_EQ(r.reduction, 0.0);
}

TEST(Oracle, HugeEpsilonIsInactive)
{
  auto inst = acceptance_instance();
  inst.epsilon = 1e6;
  inst.trials = 2000;
  auto const r = run_estimator_experiment(inst);
  EXPECT_EQ(r.mse_plain, r.mse_wave);
  EXPECT_EQ(r.active_rate, 0.0);
  EXPECT_EQ(r.theorem_bound, 0.0);
}

TEST(Oracle, AcceptanceInstanceMeetsBothChecks)
{
  auto const inst = acceptance_instance();
  auto const r = run_estimator_experiment(inst);
  EXPECT_EQ(r.trials, 20000);
  EXPECT_GE(r.condition_b_rate, 0.99);
  EXPECT_TRUE(r.direction_holds(3.0)) << report_table(r);
  EXPECT_TRUE(r.bound_holds(3.0)) << report_table(r);
  EXPECT_LE(r.mse_wave, r.mse_plain);
  EXPECT_EQ(r.jensen_violations, 0);
  EXPECT_GT(r.jensen_checks, 0);
  EXPECT_NEAR(r.mse_plain_mean_form * 16.0, r.mse_plain, 1e-12 * r.mse_plain);
}

TEST(Oracle, SingleTrialAndDeterminism)
{
  auto inst = acceptance_instance();
  inst.trials = 1;
  auto const r = run_estimator_experiment(inst);
  EXPECT_TRUE(std::isfinite(r.mse_plain) && std::isfinite(r.mse_wave) && std::isfinite(r.theorem_bound));
  inst.trials = 500;
  auto const a = run_estimator_experiment(inst);
  auto const b = run_estimator_experiment(inst);
  EXPECT_EQ(report_json(a, inst), report_json(b, inst));
  inst.seed = 2;
  EXPECT_NE(report_json(run_estimator_experiment(inst), inst), report_json(a, inst));
}

TEST(Oracle, InvalidInstances)
{
  auto inst = acceptance_instance();
  inst.margin_alpha = 0.0;
  EXPECT_THROW(run_estimator_experiment(inst), ConfigError);
  inst = acceptance_instance();
  inst.population.input_std(0) = 0.0;
  EXPECT_THROW(run_estimator_experiment(inst), ConfigError);
  inst = acceptance_instance();
  inst.g = MatrixXd::Zero(2, 2);
  EXPECT_THROW(run_estimator_experiment(inst), ConfigError);
}

TEST(JensenAudit, SingleBatchHasNoSlack)
{
  Rng rng(1);
  MatrixXd const a = random_matrix(6, 12, rng).array().square();
  MatrixXd const b = random_matrix(6, 12, rng).array().square();
  std::vector<std::size_t> all(12);
  std::iota(all.begin(), all.end(), std::size_t{0});
  auto const audit = jensen_audit_errors(a, b, {all}, 3, 2, 0.05, 0.3);
  EXPECT_EQ(audit.violations, 0);
  EXPECT_GT(audit.checks, 0);
}

TEST(JensenAudit, IdenticalBatchesAreTight)
{
  Rng rng(2);
  MatrixXd const a0 = random_matrix(4, 5, rng).array().square();
  MatrixXd const b0 = random_matrix(4, 5, rng).array().square();
  MatrixXd a(4, 15), b(4, 15);
  a << a0, a0, a0;
  b << b0, b0, b0;
  std::vector<std::vector<std::size_t>> partition{{0, 1, 2, 3, 4}, {5, 6, 7, 8, 9}, {10, 11, 12, 13, 14}};
  auto const audit = jensen_audit_errors(a, b, partition, 2, 2, 0.1, 0.5);
  EXPECT_EQ(audit.violations, 0);
  EXPECT_GE(audit.worst_slack, -1e-15);
  EXPECT_LE(audit.worst_slack, 1e-15);
}

TEST(JensenAudit, RandomPartitions)
{
  Rng rng(3);
  std::int64_t checks = 0;
  for (int trial = 0; trial < 100; ++trial) {
    Index const N = 10 + static_cast<Index>(rng.below(50));
    MatrixXd const a = random_matrix(6, N, rng).array().square();
    MatrixXd const b = random_matrix(6, N, rng).array().square();
    std::size_t const batch = 1 + rng.below(9);
    auto const partition = batches(static_cast<std::size_t>(N), batch, rng, true);
    auto const audit = jensen_audit_errors(a, b, partition, 3, 2, 0.2 * rng.uniform(), rng.uniform());
    ASSERT_EQ(audit.violations, 0) << "trial " << trial;
    checks += audit.checks;
  }
  EXPECT_GT(checks, 0);
}

TEST(JensenAudit, NetworksOnWindows)
{
  Rng rng(4);
  auto const g = make_forecaster<double>(6, 3, 1, 5, rng);
  auto const gs = make_forecaster<double>(6, 3, 1, 5, rng);
  auto const split = split_and_standardize(synth_series(400, 0.5, 3), SplitSpec{7, 1, 2});
  auto const w = flatten_windows(windowize(split.train, 6, 3));
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    auto const audit = jensen_audit(w, 16, seed, g, gs, 0.01, 0.5);
    ASSERT_EQ(audit.violations, 0) << seed;
  }
}

TEST(JensenAudit, RejectsBadPartitions)
{
  MatrixXd const a = MatrixXd::Ones(2, 4);
  EXPECT_THROW(jensen_audit_errors(a, a, {{0, 1}, {1, 2, 3}}, 2, 1, 0.0, 0.0), ConfigError);
  EXPECT_THROW(jensen_audit_errors(a, a, {{0, 1}}, 2, 1, 0.0, 0.0), ConfigError);
}
