#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "acgan/losses.hpp"
#include "oracles.hpp"

using namespace acgan;

namespace {

const double kLn2 = std::numbers::ln2;

std::vector<double> filled(std::size_t n, double v) { return std::vector<double>(n, v); }

DiscriminatorOutputs all_prob(double v, std::size_t n = 6) {
  return DiscriminatorOutputs::from_probabilities({filled(n, v), filled(n, v), filled(n, v), filled(n, v)});
}

}  // namespace

TEST(LossBaseline, Examples) {
  EXPECT_NEAR(loss_d_baseline(filled(5, 0.5), filled(5, 0.5)), 2 * kLn2, 1e-6);
  EXPECT_NEAR(loss_d_baseline(filled(5, 1.0), filled(5, 0.0)), 0.0, 1e-6);
  EXPECT_NEAR(loss_d_baseline(filled(3, 0.8), filled(3, 0.3)), -(std::log(0.8) + std::log(0.7)), 1e-6);
  EXPECT_NEAR(-(std::log(0.8) + std::log(0.7)), 0.57982, 1e-5);
  EXPECT_THROW(loss_d_baseline({}, filled(2, 0.5)), std::invalid_argument);
}

TEST(LossAContrario, Examples) {
  EXPECT_NEAR(loss_d_acontrario(filled(4, 0.5), filled(4, 0.5)), 2 * kLn2, 1e-6);
  EXPECT_NEAR(loss_d_acontrario(filled(4, 0.0), filled(4, 0.0)), 0.0, 1e-6);
  EXPECT_NEAR(loss_d_acontrario(filled(2, 0.3), filled(2, 0.2)), -(std::log(0.7) + std::log(0.8)), 1e-6);
  EXPECT_THROW(loss_d_acontrario(filled(2, 0.5), {}), std::invalid_argument);
}

TEST(LossCombined, Examples) {
  const auto outs = all_prob(0.5);
  EXPECT_EQ(loss_d_combined(outs, LossWeights::custom(1, 1, 0, 0)),
            loss_d_baseline(outs.prob_of(PairingKind::RealConditional),
                            outs.prob_of(PairingKind::GeneratedConditional)));
  EXPECT_NEAR(loss_d_combined(outs, LossWeights::equal()), 4 * kLn2, 1e-6);
  EXPECT_NEAR(loss_d_combined(outs, LossWeights::balanced_true_fake()), 1.99 * kLn2, 1e-6);
  EXPECT_NEAR(1.99 * kLn2, 1.37938, 2e-5);  // the quoted figure is rounded loosely
}

TEST(LossCombined, NegativeLambdaThrows) {
  EXPECT_THROW(loss_d_combined(all_prob(0.5), LossWeights::custom(1, -1, 0, 0)), std::invalid_argument);
}

TEST(LossCombined, ReductionToBaselineOnRandomInputs) {
  Rng rng(3);
  for (int t = 0; t < 200; ++t) {
    const auto outs = DiscriminatorOutputs::from_raw(oracle::random_raw(rng, 1 + t % 40, 6.0, 0.0));
    const double combined = loss_d_combined(outs, LossWeights::custom(1, 1, 0, 0));
    const double base = loss_d_baseline(outs.prob_of(PairingKind::RealConditional),
                                        outs.prob_of(PairingKind::GeneratedConditional));
    EXPECT_NEAR(combined, base, 1e-12);
  }
}

TEST(LossWeights, StrategyInvariants) {
  const auto e = LossWeights::equal();
  EXPECT_TRUE(e.lambda[0] == e.lambda[1] && e.lambda[1] == e.lambda[2] && e.lambda[2] == e.lambda[3]);
  const auto b = LossWeights::balanced_true_fake();
  EXPECT_EQ(b.lambda[0], 1.0);
  EXPECT_EQ(b.lambda[1], b.lambda[2]);
  EXPECT_EQ(b.lambda[2], b.lambda[3]);
  EXPECT_NEAR(b.lambda[1], 1.0 / 3.0, 0.004);
  const auto g = LossWeights::no_gen_ac();
  EXPECT_EQ(g.lambda[3], 0.0);
  for (int i = 0; i < 3; ++i) EXPECT_EQ(g.lambda[i], 0.5);
  for (auto s : {WeightStrategy::Equal, WeightStrategy::BalancedTrueFake, WeightStrategy::NoGenAC})
    EXPECT_EQ(parse_weight_strategy(to_string(s)), s);
}

TEST(LossGenerator, Examples) {
  EXPECT_NEAR(loss_g_adversarial(filled(3, 0.5), GeneratorMode::NonSaturating), kLn2, 1e-6);
  EXPECT_NEAR(loss_g_adversarial(filled(3, 1.0), GeneratorMode::NonSaturating), 0.0, 1e-6);
  EXPECT_NEAR(loss_g_adversarial(filled(3, 0.5), GeneratorMode::Saturating), -kLn2, 1e-6);
  EXPECT_THROW(loss_g_adversarial({}, GeneratorMode::Saturating), std::invalid_argument);
}

TEST(LossGenerator, BothModesPushTowardTrue) {
  Rng rng(4);
  const auto raw = oracle::random_raw(rng, 30)[0];
  for (auto mode : {GeneratorMode::NonSaturating, GeneratorMode::Saturating})
    for (double g : loss_g_adversarial_grad(raw, mode).d_raw) EXPECT_LT(g, 0.0);
}

TEST(LossHinge, Examples) {
  auto raw4 = [](double rc, double other) {
    return DiscriminatorOutputs::from_raw({filled(4, rc), filled(4, other), filled(4, other), filled(4, other)});
  };
  EXPECT_NEAR(loss_d_hinge(raw4(0, 0)), 4.0, 1e-6);
  EXPECT_NEAR(loss_d_hinge(raw4(2, -2)), 0.0, 1e-6);
  EXPECT_NEAR(loss_d_hinge(raw4(0.5, -0.5)), 2.0, 1e-6);
  EXPECT_NEAR(loss_g_hinge(std::vector<double>{1, 2}), -1.5, 1e-6);
  auto missing = raw4(0, 0);
  missing.raw[2].clear();
  missing.prob[2].clear();
  EXPECT_THROW(loss_d_hinge(missing), std::invalid_argument);
}

TEST(LossHinge, ZeroExactlyWhenMarginsHold) {
  Rng rng(8);
  for (int t = 0; t < 100; ++t) {
    auto raw = oracle::random_raw(rng, 10, 4.0, 0.0);
    const bool satisfied = [&] {
      for (double s : raw[0]) if (s < 1) return false;
      for (int k = 1; k < 4; ++k) for (double s : raw[k]) if (s > -1) return false;
      return true;
    }();
    const double l = loss_d_hinge(DiscriminatorOutputs::from_raw(raw));
    EXPECT_GE(l, 0.0);
    EXPECT_EQ(l == 0.0, satisfied);
  }
  auto sat = DiscriminatorOutputs::from_raw({filled(3, 1.5), filled(3, -1.2), filled(3, -3), filled(3, -1)});
  EXPECT_EQ(loss_d_hinge(sat), 0.0);
}

TEST(LossL1, Examples) {
  const std::vector<float> y{0.5f, -0.25f, 1.0f};
  EXPECT_EQ(loss_l1(y, y, 100), 0.0);
  const std::vector<float> y1{1.5f, 0.75f, 2.0f};
  EXPECT_NEAR(loss_l1(y1, y, 100), 100.0, 1e-6);
  EXPECT_NEAR(loss_l1(std::vector<float>{0, 2}, std::vector<float>{1, 0}, 1), 1.5, 1e-6);
  EXPECT_THROW(loss_l1(std::vector<float>{0, 2}, std::vector<float>{1}, 1), std::invalid_argument);
}

TEST(LossNonNegativity, AllDiscriminatorLosses) {
  Rng rng(5);
  for (int t = 0; t < 100; ++t) {
    const auto outs = DiscriminatorOutputs::from_raw(oracle::random_raw(rng, 8, 8.0, 0.0));
    EXPECT_GE(loss_d_baseline(outs.prob_of(PairingKind::RealConditional), outs.prob_of(PairingKind::GeneratedConditional)), 0.0);
    EXPECT_GE(loss_d_acontrario(outs.prob_of(PairingKind::RealAContrario), outs.prob_of(PairingKind::GeneratedAContrario)), 0.0);
    EXPECT_GE(loss_d_combined(outs, LossWeights::balanced_true_fake()), 0.0);
    EXPECT_GE(loss_d_hinge(outs), 0.0);
  }
}

TEST(LossGradients, MatchCentralDifferences) {
  const auto r = oracle::check_all_loss_gradients(1234, 100);
  EXPECT_LT(r.worst, 1e-4) << r.where;
}

TEST(LossGradients, BatchSizeInvariantMeanReduction) {
  const auto a = all_prob(0.3, 2), b = all_prob(0.3, 50);
  EXPECT_NEAR(loss_d_combined(a, LossWeights::equal()), loss_d_combined(b, LossWeights::equal()), 1e-12);
}

TEST(OptimalD, Examples) {
  EXPECT_EQ(optimal_d_value({{0.25, 0.75}, {0.25, 0.75}}), (std::vector<double>{0.5, 0.5}));
  const auto d = optimal_d_value({{0.8, 0.2}, {0.2, 0.8}});
  EXPECT_NEAR(d[0], 0.8, 1e-12);
  EXPECT_NEAR(d[1], 0.2, 1e-12);
  EXPECT_EQ(optimal_d_value({{1, 0}, {0, 1}}), (std::vector<double>{1, 0}));
  EXPECT_EQ(optimal_d_value({{1, 0, 0}, {0, 1, 0}})[2], 0.5);
}

TEST(JsGameValue, Examples) {
  EXPECT_NEAR(js_game_value({{0.3, 0.7}, {0.3, 0.7}}), -std::log(4.0), 1e-12);
  EXPECT_NEAR(js_game_value({{1, 0}, {0, 1}}), 0.0, 1e-12);
  const std::vector<double> p{0.5, 0.5}, q{1, 0};
  EXPECT_NEAR(js_game_value({p, q}), -std::log(4.0) + 2 * oracle::jsd_brute(q, p), 1e-12);
}

TEST(JsGameValue, OptimalDPlugInMatchesClosedForm) {
  Rng rng(6);
  for (int t = 0; t < 200; ++t) {
    const int m = 2 + t % 10;
    DensityPair dp{oracle::random_distribution(rng, m, 0.0), oracle::random_distribution(rng, m, 0.0)};
    if (t % 3 == 0) {  // sparse supports
      dp.p[0] = 0;
      dp.p_g[1 % m] = 0;
      auto norm = [](std::vector<double>& v) { double s = 0; for (double x : v) s += x; for (double& x : v) x /= s; };
      norm(dp.p);
      norm(dp.p_g);
    }
    EXPECT_NEAR(game_value(dp, optimal_d_value(dp)), js_game_value(dp), 1e-9);
    EXPECT_GE(js_game_value(dp), -std::log(4.0) - 1e-12);
    EXPECT_NEAR(jensen_shannon(dp), oracle::jsd_brute(dp.p_g, dp.p), 1e-12);
  }
}

TEST(JsGameValue, MinimumOnlyAtEquality) {
  const DensityPair same{{0.1, 0.2, 0.7}, {0.1, 0.2, 0.7}};
  const DensityPair near{{0.1, 0.2, 0.7}, {0.11, 0.2, 0.69}};
  EXPECT_NEAR(js_game_value(same), -std::log(4.0), 1e-15);
  EXPECT_GT(js_game_value(near), -std::log(4.0));
}

TEST(DensityPair, ValidateRejectsBadInput) {
  EXPECT_THROW((DensityPair{{0.5, 0.6}, {0.5, 0.5}}.validate()), std::invalid_argument);
  EXPECT_THROW((DensityPair{{1.0}, {0.5, 0.5}}.validate()), std::invalid_argument);
  EXPECT_THROW((DensityPair{{1.5, -0.5}, {0.5, 0.5}}.validate()), std::invalid_argument);
}
