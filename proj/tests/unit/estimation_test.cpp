#include <gtest/gtest.h>

#include <limits>

#include "rlrv/estimation.hpp"
#include "rlrv/harness.hpp"
#include "support/oracles.hpp"

using namespace rlrv;

namespace {

TransitionRecord rec(std::int64_t step, int s, int a, double r, int next) {
  return {step, s, a, r, next, std::nullopt};
}

}  // namespace

TEST(EstimatedModel, CountsAndMeans) {
  EstimatedModel m(2, 2);
  m.ingest(rec(0, 0, 1, 2.0, 1));
  m.ingest(rec(1, 1, 0, 1.0, 0));
  m.ingest(rec(2, 0, 1, 4.0, 1));
  m.ingest(rec(3, 0, 1, 1.0, 0));
  EXPECT_EQ(m.n_records(), 4u);
  EXPECT_EQ(m.count(0, 1), 3);
  EXPECT_EQ(m.count(0, 1, 1), 2);
  EXPECT_DOUBLE_EQ(m.t_hat(0, 1, 1), 2.0 / 3.0);
  EXPECT_DOUBLE_EQ(m.r_hat(0, 1, 1), 3.0);
  EXPECT_DOUBLE_EQ(m.expected_reward(0, 1), (2.0 * 3.0 + 1.0) / 3.0);
  EXPECT_EQ(m.min_visit(), 0);
  EXPECT_FALSE(m.reward_is_constant(0, 1, 1));
  EXPECT_TRUE(m.reward_is_constant(0, 1, 0));
  EXPECT_DOUBLE_EQ(m.min_reward(), 1.0);
}

TEST(EstimatedModel, MinVisitTracksAllPairs) {
  EstimatedModel m(1, 2);
  m.ingest(rec(0, 0, 0, 0.0, 0));
  EXPECT_EQ(m.min_visit(), 0);
  m.ingest(rec(1, 0, 1, 0.0, 0));
  EXPECT_EQ(m.min_visit(), 1);
  m.ingest(rec(2, 0, 1, 0.0, 0));
  EXPECT_EQ(m.min_visit(), 1);
  m.ingest(rec(3, 0, 0, 0.0, 0));
  EXPECT_EQ(m.min_visit(), 2);
}

TEST(EstimatedModel, BadRecordLeavesModelUntouched) {
  EstimatedModel m(2, 1);
  m.ingest(rec(0, 0, 0, 1.0, 1));
  EXPECT_THROW(m.ingest(rec(1, 2, 0, 1.0, 0)), InstrumentationFault);
  EXPECT_THROW(m.ingest(rec(1, 0, 1, 1.0, 0)), InstrumentationFault);
  EXPECT_THROW(m.ingest(rec(1, 0, 0, std::numeric_limits<double>::infinity(), 0)),
               InstrumentationFault);
  EXPECT_EQ(m.n_records(), 1u);
  EXPECT_EQ(m.count(0, 0), 1);
}

TEST(EstimatedModel, FrequenciesConvergeToTransitionRows) {
  const Mdp mdp = random_mdp(3, 2, 5, 0.9);
  const Trace trace = run_policy(mdp, PolicyTable::uniform(3, 2), 200000, 6);
  const EstimatedModel m = build_model(trace);
  for (int s = 0; s < 3; ++s) {
    for (int a = 0; a < 2; ++a) {
      double tv = 0.0;
      for (int t = 0; t < 3; ++t) tv += std::abs(m.t_hat(s, a, t) - mdp.transition(s, a, t));
      EXPECT_LT(0.5 * tv, 0.02);
    }
  }
}

TEST(UncoveredPairs, OnlyObservedStatesWithPositiveProbability) {
  EstimatedModel m(3, 2);
  m.ingest(rec(0, 0, 0, 1.0, 1));
  PolicyTable pi(3, 2);
  pi(0, 0) = 1.0;
  pi(1, 0) = 0.5;
  pi(1, 1) = 0.5;
  pi(2, 1) = 1.0;
  const auto missing = uncovered_pairs(m, pi);
  ASSERT_EQ(missing.size(), 2u);
  EXPECT_EQ(missing[0], (StateAction{1, 0}));
  EXPECT_EQ(missing[1], (StateAction{1, 1}));
}

TEST(EstimateValue, ExactCountsReproduceTrueValue) {
  // Two states, one action, uniform rows: a trace with equal transition counts
  // estimates T exactly.
  Mdp mdp(2, 1, 0.9);
  const double r[2][2] = {{1.0, 3.0}, {0.0, 2.0}};
  for (int s = 0; s < 2; ++s) {
    for (int t = 0; t < 2; ++t) {
      mdp.transition(s, 0, t) = 0.5;
      mdp.reward(s, 0, t) = r[s][t];
    }
  }
  EstimatedModel m(2, 1);
  int step = 0;
  for (int rep = 0; rep < 3; ++rep) {
    for (int s = 0; s < 2; ++s) {
      for (int t = 0; t < 2; ++t) m.ingest(rec(step++, s, 0, r[s][t], t));
    }
  }
  const PolicyTable pi = PolicyTable::uniform(2, 1);
  EXPECT_LT((estimate_value(m, pi, 0.9) - value_of_policy(mdp, pi)).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(EstimateValue, MissingDataNamesPairs) {
  EstimatedModel m(2, 2);
  m.ingest(rec(0, 0, 0, 1.0, 1));
  try {
    estimate_value(m, PolicyTable::uniform(2, 2), 0.5);
    FAIL() << "expected MissingDataError";
  } catch (const MissingDataError& e) {
    EXPECT_EQ(e.pairs().size(), 3u);
    EXPECT_NE(std::string(e.what()).find("min N(s,a)=0"), std::string::npos);
  }
}

TEST(EstimateValue, EmptyModelIsMissingData) {
  EXPECT_THROW(estimate_value(EstimatedModel(2, 1), PolicyTable::uniform(2, 1), 0.5),
               MissingDataError);
}

TEST(RelativeToValue, ZeroDenominatorConvention) {
  EXPECT_DOUBLE_EQ(relative_to_value(1.0, -4.0), 0.25);
  EXPECT_EQ(relative_to_value(0.0, 0.0), 0.0);
  EXPECT_TRUE(std::isinf(relative_to_value(1e-3, 0.0)));
  EXPECT_TRUE(std::isinf(relative_to_value(1e-3, 1e-13)));
}

TEST(BiasCov, RejectsTooFewResamples) {
  EstimatedModel m(1, 1);
  m.ingest(rec(0, 0, 0, 1.0, 0));
  EXPECT_THROW(estimate_bias_cov(m, PolicyTable::uniform(1, 1), 0.5, 99, 1), ParameterError);
}

TEST(BiasCov, DeterministicSelfLoopHasNoUncertainty) {
  EstimatedModel m(1, 1);
  for (int i = 0; i < 10; ++i) m.ingest(rec(i, 0, 0, 1.0, 0));
  const auto u = estimate_bias_cov(m, PolicyTable::uniform(1, 1), 0.5, 200, 3);
  EXPECT_NEAR(u.v_hat[0], 2.0, 1e-12);
  EXPECT_NEAR(u.bias[0], 0.0, 1e-12);
  EXPECT_NEAR(u.cov(0, 0), 0.0, 1e-20);
  EXPECT_EQ(u.sample_count, 200);
}

TEST(BiasCov, CovarianceIsSymmetricPsdAndSeeded) {
  const Mdp mdp = random_mdp(4, 2, 8, 0.8);
  const Trace trace = run_policy(mdp, PolicyTable::uniform(4, 2), 400, 9);
  const EstimatedModel m = build_model(trace);
  const auto u = estimate_bias_cov(m, PolicyTable::uniform(4, 2), 0.8, 300, 10);
  EXPECT_LT((u.cov - u.cov.transpose()).cwiseAbs().maxCoeff(), 1e-15);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(u.cov);
  EXPECT_GT(eig.eigenvalues().minCoeff(), -1e-12);
  const auto again = estimate_bias_cov(m, PolicyTable::uniform(4, 2), 0.8, 300, 10);
  EXPECT_EQ(u.bias, again.bias);
  EXPECT_EQ(u.cov, again.cov);
}

TEST(BiasCov, ShrinksWithMoreData) {
  const Mdp mdp = random_mdp(4, 2, 12, 0.8);
  const PolicyTable pi = PolicyTable::uniform(4, 2);
  const Trace trace = run_policy(mdp, pi, 40000, 13);
  const auto small = estimate_bias_cov(build_model(trace.prefix(400)), pi, 0.8, 300, 1);
  const auto large = estimate_bias_cov(build_model(trace), pi, 0.8, 300, 1);
  EXPECT_LT(large.sigma().maxCoeff(), small.sigma().maxCoeff() / 3.0);
}

TEST(BiasCov, UnobservedStatesCarryZeros) {
  // state 2 is never reached
  EstimatedModel m(3, 1);
  for (int i = 0; i < 20; ++i) m.ingest(rec(i, i % 2, 0, 1.0, (i + 1) % 2));
  const auto u = estimate_bias_cov(m, PolicyTable::uniform(3, 1), 0.5, 150, 2);
  EXPECT_FALSE(u.active[2]);
  EXPECT_EQ(u.v_hat[2], 0.0);
  EXPECT_EQ(u.bias_rel[2], 0.0);
  EXPECT_EQ(u.cov.row(2).cwiseAbs().sum(), 0.0);
}

TEST(BiasCov, NoisyRewardsAddVariance) {
  EstimatedModel fixed(1, 1);
  EstimatedModel noisy(1, 1);
  for (int i = 0; i < 40; ++i) {
    fixed.ingest(rec(i, 0, 0, 1.0, 0));
    noisy.ingest(rec(i, 0, 0, i % 2 == 0 ? 0.0 : 2.0, 0));
  }
  const auto a = estimate_bias_cov(fixed, PolicyTable::uniform(1, 1), 0.5, 400, 4);
  const auto b = estimate_bias_cov(noisy, PolicyTable::uniform(1, 1), 0.5, 400, 4);
  EXPECT_NEAR(a.v_hat[0], b.v_hat[0], 1e-12);
  EXPECT_EQ(a.sigma()[0], 0.0);
  // reward mean sd = 1/sqrt(40), value sd = that / (1 - gamma)
  EXPECT_NEAR(b.sigma()[0], 2.0 / std::sqrt(40.0), 0.05);
}

TEST(EstimatedMdp, UnobservedStatesBecomeSelfLoops) {
  EstimatedModel m(3, 1);
  m.ingest(rec(0, 0, 0, 2.0, 1));
  m.ingest(rec(1, 1, 0, 1.0, 0));
  const Mdp mdp = estimated_mdp(m, 0.5);
  EXPECT_NO_THROW(mdp.validate());
  EXPECT_EQ(mdp.transition(2, 0, 2), 1.0);
  EXPECT_EQ(mdp.reward(0, 0, 1), 2.0);
}

TEST(EstimatedMdp, ObservedStateNeedsEveryAction) {
  EstimatedModel m(2, 2);
  m.ingest(rec(0, 0, 0, 2.0, 1));
  EXPECT_THROW(estimated_mdp(m, 0.5), MissingDataError);
}

TEST(EstimatePolicyFromActions, FrequenciesAndUniformFallback) {
  Trace t{3, 2, {rec(0, 0, 0, 0, 1), rec(1, 1, 1, 0, 0), rec(2, 0, 0, 0, 1), rec(3, 1, 0, 0, 0),
                 rec(4, 0, 1, 0, 0)}};
  const PolicyTable pi = estimate_policy_from_actions(t);
  EXPECT_DOUBLE_EQ(pi(0, 0), 2.0 / 3.0);
  EXPECT_DOUBLE_EQ(pi(1, 1), 0.5);
  EXPECT_DOUBLE_EQ(pi(2, 0), 0.5);
  EXPECT_NO_THROW(pi.validate());
}
