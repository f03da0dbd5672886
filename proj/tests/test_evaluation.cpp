#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "labelnoise/distributions.hpp"
#include "labelnoise/evaluation.hpp"
#include "labelnoise/noise_channel.hpp"

using namespace labelnoise;

namespace {

DiscreteJointDistribution two_point() {
  return DiscreteJointDistribution(1, 2, {0.0, 1.0}, {0.5, 0.5}, {0.9, 0.1, 0.3, 0.7});
}

// sum_m w_m (1 - p_m[g(x_m)]) written out longhand
double brute_risk(const DiscreteJointDistribution& d, const Classifier& g) {
  double r = 0;
  for (std::size_t m = 0; m < d.support_size(); ++m) r += d.weight(m) * (1 - d.posterior_at(m)[g(d.point(m))]);
  return r;
}

}  // namespace

TEST(ConditionalRiskExact, Examples) {
  const auto d = two_point();
  EXPECT_NEAR(conditional_risk_exact(bayes_classifier(d), d), 0.2, 1e-15);
  EXPECT_NEAR(conditional_risk_exact([](std::span<const double>) { return std::size_t{0}; }, d), 0.4,
              1e-15);
  const DiscreteJointDistribution onehot(1, 3, {0.0, 1.0, 2.0}, {0.2, 0.3, 0.5},
                                         {0, 0, 1, 1, 0, 0, 0, 1, 0});
  EXPECT_EQ(conditional_risk_exact(bayes_classifier(onehot), onehot), 0.0);
}

TEST(ConditionalRiskExact, UndefinedClassifier) {
  const auto d = two_point();
  const Classifier partial = [](std::span<const double> x) -> std::size_t {
    if (x[0] > 0.5) throw DomainError("not defined here");
    return 0;
  };
  EXPECT_THROW(conditional_risk_exact(partial, d), DomainError);
  EXPECT_THROW(conditional_risk_exact([](std::span<const double>) { return std::size_t{5}; }, d),
               DomainError);
}

TEST(ConditionalRiskExact, BayesMatchesBayesRiskOn500Distributions) {
  for (std::uint64_t seed = 0; seed < 500; ++seed) {
    const auto d = random_discrete(2 + seed % 9, 25, seed);
    EXPECT_EQ(conditional_risk_exact(bayes_classifier(d), d), bayes_risk_exact(d)) << seed;
  }
}

TEST(ConditionalRiskExact, MatchesBruteForceForPlugIns) {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const auto d = random_discrete(4, 30, seed);
    const auto g = plug_in(oracle_noisy_posterior(d, build_shift(4, 0.6)));
    EXPECT_NEAR(conditional_risk_exact(g, d), brute_risk(d, g), 1e-15);
  }
}

TEST(ConditionalRiskMc, PerfectClassifier) {
  const GaussianMixtureDistribution g({{0.5, {0.0}, {1.0}}, {0.5, {1e6}, {1.0}}});
  const Classifier perfect = [](std::span<const double> x) -> std::size_t { return x[0] > 5e5; };
  Rng rng(1);
  const auto r = conditional_risk_mc(perfect, g, 1000, rng);
  EXPECT_EQ(r.value, 0.0);
  EXPECT_EQ(r.standard_error, 0.0);
}

TEST(ConditionalRiskMc, RandomClassifierBinomialOracle) {
  const auto g = circle_mixture(5);
  Rng pick(3);
  const Classifier coin = [&pick](std::span<const double>) { return pick.index(5); };
  Rng rng(2);
  const std::size_t m = 20000;
  const auto r = conditional_risk_mc(coin, g, m, rng);
  EXPECT_NEAR(r.value, 0.8, 5 * std::sqrt(0.8 * 0.2 / m));
}

TEST(ConditionalRiskMc, BayesAgreesWithBayesRiskMc) {
  const auto g = circle_mixture();
  Rng r1(5), r2(6);
  const auto risk = conditional_risk_mc(bayes_classifier(g), g, 20000, r1);
  const auto bayes = bayes_risk_mc(g, 20000, r2);
  const double se = std::hypot(risk.standard_error, bayes.standard_error);
  EXPECT_NEAR(risk.value, bayes.value, 3 * se);
  EXPECT_THROW(conditional_risk_mc(bayes_classifier(g), g, 50, r1), ValidationError);
}

TEST(PosteriorError, ZeroForIdentical) {
  const auto d = random_discrete(3, 20, 1);
  const auto e = posterior_l1_error(true_posterior(d), d, true_posterior(d));
  EXPECT_EQ(e.l1, 0.0);
  EXPECT_EQ(e.l2, 0.0);
  const auto g = circle_mixture();
  Rng rng(2);
  const auto mc = posterior_l1_error(true_posterior(g), g, true_posterior(g), 500, rng);
  EXPECT_EQ(mc.l1, 0.0);
}

TEST(PosteriorError, UniformVersusOneHot) {
  const DiscreteJointDistribution onehot(1, 2, {0.0, 1.0}, {0.4, 0.6}, {1, 0, 0, 1});
  const DiscreteJointDistribution flat(1, 2, {0.0, 1.0}, {0.4, 0.6}, {0.5, 0.5, 0.5, 0.5});
  const auto e = posterior_l1_error(true_posterior(flat), onehot, true_posterior(onehot));
  EXPECT_DOUBLE_EQ(e.l1, 1.0);
  EXPECT_DOUBLE_EQ(e.l2, 0.5);
}

TEST(PosteriorError, CauchySchwarzRelation) {
  // sum_k |d_k| <= sqrt(K sum_k d_k^2) pointwise, then Jensen: E l1 <= sqrt(K E l2)
  Rng rng(4);
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    const std::size_t k = 2 + seed % 6;
    const auto d = random_discrete(k, 40, seed);
    const auto est = oracle_noisy_posterior(d, build_shift(k, rng.uniform()));
    const auto e = posterior_l1_error(est, d, true_posterior(d));
    EXPECT_GE(e.l1, 0.0);
    EXPECT_GE(e.l2, 0.0);
    EXPECT_LE(e.l1, std::sqrt(static_cast<double>(k) * e.l2) + 1e-12);
    EXPECT_LE(e.l2, e.l1 * 2 + 1e-12);
  }
}

TEST(BinaryBoundFactor, Values) {
  EXPECT_NEAR(binary_bound_factor(0.1, 0.3), 2.0, 1e-12);
  EXPECT_NEAR(binary_bound_factor(0.0, 0.49), 50.0, 1e-9);
  for (double a : {0.0, 0.2, 0.4999}) EXPECT_EQ(binary_bound_factor(a, a), 1.0);
  EXPECT_THROW(binary_bound_factor(0.5, 0.1), DomainError);
  EXPECT_THROW(binary_bound_factor(0.1, 0.7), DomainError);
}

TEST(BinaryBound, PointMassHandExample) {
  const DiscreteJointDistribution d(1, 2, {0.0}, {1.0}, {0.4, 0.6});
  const double risk = noisy_plug_in_risk(d, build_binary(0.1, 0.3));
  EXPECT_NEAR(risk, 0.6, 1e-15);
  EXPECT_NEAR(bayes_risk_exact(d), 0.4, 1e-15);
  EXPECT_LE(risk, bayes_risk_exact(d) * binary_bound_factor(0.1, 0.3) + 1e-12);
}

TEST(BinaryBound, EqualNoiseReachesBayes) {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const auto d = random_discrete(2, 30, seed);
    const double a = 0.0049 * static_cast<double>(seed);
    EXPECT_NEAR(noisy_plug_in_risk(d, build_binary(a, a)), bayes_risk_exact(d), 1e-12);
  }
}

TEST(BinaryBound, ThousandTrialsNoViolations) {
  const auto r = verify_binary_bound(1000, 7);
  EXPECT_TRUE(r.violations.empty());
  EXPECT_TRUE(r.passed());
  EXPECT_LE(r.max_ratio, 1.0 + 1e-12);
  EXPECT_LE(r.max_equal_noise_deviation, 1e-12);
  EXPECT_GT(r.max_risk_over_bayes, 1.0);
}

TEST(SymmetricAgreement, ZeroDisagreementsAcrossK) {
  for (std::size_t k : {2u, 3u, 5u}) {
    const auto r = verify_symmetric_agreement(k, sub_threshold_grid(k), 50, 11);
    EXPECT_TRUE(r.passed()) << k;
    EXPECT_EQ(r.agreements, r.checked);
    EXPECT_EQ(r.checked + r.tied_excluded, 50 * 50 * r.alphas.size());
  }
}

TEST(SymmetricAgreement, TightMarginGrid) {
  const auto grid = sub_threshold_grid(3, 1e-6);
  EXPECT_NEAR(grid.back(), 2.0 / 3.0 - 1e-6, 1e-15);
  EXPECT_TRUE(verify_symmetric_agreement(3, grid, 50, 12).passed());
}

TEST(SymmetricAgreement, ZeroNoiseAndRejectsThreshold) {
  EXPECT_TRUE(verify_symmetric_agreement(4, {0.0}, 20, 1).passed());
  EXPECT_THROW(verify_symmetric_agreement(4, {0.75}, 1, 1), DomainError);
  EXPECT_THROW(verify_symmetric_agreement(2, {0.1, 0.6}, 1, 1), DomainError);
}

TEST(SymmetricAgreement, TiedPointsExcluded) {
  // rows with tied true maxima are counted apart from disagreements
  const auto r = verify_symmetric_agreement(2, {0.3}, 200, 3, 10);
  EXPECT_EQ(r.checked + r.tied_excluded, 2000u);
}

TEST(SubThresholdGrid, Shape) {
  const auto g2 = sub_threshold_grid(2);
  ASSERT_EQ(g2.size(), 11u);
  EXPECT_EQ(g2.front(), 0.0);
  EXPECT_NEAR(g2.back(), 0.49, 1e-15);
  const auto g10 = sub_threshold_grid(10);
  EXPECT_EQ(g10.size(), 19u);
  EXPECT_NEAR(g10.back(), 0.89, 1e-15);
  for (std::size_t i = 1; i < g10.size(); ++i) EXPECT_GT(g10[i], g10[i - 1]);
}

TEST(ThresholdDegeneracy, RiskEqualsConstantClassOne) {
  for (std::size_t k = 2; k <= 10; ++k) {
    const auto d = random_discrete(k, 40, k);
    const auto g = plug_in(oracle_noisy_posterior(d, build_symmetric(k, breakdown_threshold(k))));
    const Classifier always_first = [](std::span<const double>) { return std::size_t{0}; };
    EXPECT_EQ(conditional_risk_exact(g, d), conditional_risk_exact(always_first, d));
  }
}

TEST(ShiftCrossover, AgreeBelowHalfDisagreeAbove) {
  const std::vector<double> below{0.05, 0.15, 0.25, 0.35, 0.45, 0.49};
  const std::vector<double> above{0.51, 0.55, 0.65, 0.8};
  for (std::size_t k : {3u, 10u}) {
    const auto lo = verify_shift_crossover(k, below, 20, 1);
    for (const auto& row : lo.rows) EXPECT_EQ(row.disagreements, 0u) << k << " " << row.alpha;
    const auto hi = verify_shift_crossover(k, above, 20, 1);
    for (const auto& row : hi.rows) EXPECT_EQ(row.disagreements, row.checked) << k << " " << row.alpha;
  }
}

TEST(ShiftCrossover, PeakedRowsHaveEqualResiduals) {
  const auto d = peaked_discrete(4, 10, 0.9, 5);
  for (std::size_t m = 0; m < 10; ++m) {
    const auto p = d.posterior_at(m);
    EXPECT_NEAR(p[argmax(p)], 0.9, 1e-15);
    for (std::size_t c = 0; c < 4; ++c) {
      if (c != argmax(p)) {
        EXPECT_NEAR(p[c], 0.1 / 3, 1e-15);
      }
    }
  }
  EXPECT_THROW(peaked_discrete(4, 10, 0.2, 5), ValidationError);
}

TEST(ReportJson, Fields) {
  const auto t = to_json(verify_symmetric_agreement(3, {0.1}, 2, 1));
  EXPECT_EQ(t["k"], 3);
  EXPECT_TRUE(t.contains("disagreements"));
  EXPECT_TRUE(t["passed"].get<bool>());
  const auto l = to_json(verify_binary_bound(5, 1));
  EXPECT_TRUE(l.contains("max_bound_ratio"));
  const auto s = to_json(verify_shift_crossover(3, {0.2, 0.7}, 2, 1));
  EXPECT_EQ(s["rows"].size(), 2u);
}
