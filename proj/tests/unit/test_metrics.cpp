#include <gtest/gtest.h>

#include <cmath>
#include <ranges>
#include <vector>

#include "patchgauss/corrupt.hpp"
#include "patchgauss/error.hpp"
#include "patchgauss/metrics.hpp"
#include "patchgauss/rng.hpp"

using namespace patchgauss;

namespace {

EvalResult eval(double clean, std::array<double, 6> corrupted) {
  EvalResult r;
  r.clean_accuracy = clean;
  for (std::size_t k = 0; k < 6; ++k) r.per_sigma_accuracy[kEvalSigmas[k]] = corrupted[k];
  return r;
}

Candidate candidate(const char* label, double clean, double robustness) {
  // Every corrupted accuracy equals clean + robustness.
  const double c = clean + robustness;
  return Candidate{label, {}, eval(clean, {c, c, c, c, c, c})};
}

}  // namespace

TEST(Accuracy, Basics) {
  const std::vector<int> a = {1, 2, 3, 4};
  EXPECT_EQ(accuracy(a, a), 1.0);
  EXPECT_EQ(accuracy(a, std::vector<int>{0, 0, 0, 0}), 0.0);
  EXPECT_EQ(accuracy(a, std::vector<int>{1, 2, 3, 0}), 0.75);
  EXPECT_THROW(accuracy(a, std::vector<int>{1}), Error);
  EXPECT_THROW(accuracy(std::vector<int>{}, std::vector<int>{}), Error);
}

TEST(RelativeRobustness, HandArithmetic) {
  EXPECT_EQ(relative_gaussian_robustness(eval(0.8, {0.8, 0.8, 0.8, 0.8, 0.8, 0.8})), 0.0);
  EXPECT_NEAR(relative_gaussian_robustness(eval(0.96, {0.9, 0.9, 0.9, 0.9, 0.9, 0.9})), -0.06, 1e-12);
  EXPECT_NEAR(relative_gaussian_robustness(eval(0.90, {0.9, 0.9, 0.9, 0.9, 0.9, 0.96})), 0.01, 1e-12);
}

TEST(RelativeRobustness, MissingSigma) {
  auto r = eval(0.9, {0.9, 0.9, 0.9, 0.9, 0.9, 0.9});
  r.per_sigma_accuracy.erase(0.5);
  EXPECT_THROW(relative_gaussian_robustness(r), Error);
}

TEST(RelativeRobustness, AlwaysWithinUnitInterval) {
  RngStream rng(1, 0, "rob");
  for (int t = 0; t < 10000; ++t) {
    std::array<double, 6> acc{};
    for (double& a : acc) a = rng.next_unit();
    const double r = relative_gaussian_robustness(eval(rng.next_unit(), acc));
    ASSERT_GE(r, -1.0);
    ASSERT_LE(r, 1.0);
  }
}

TEST(CorruptionError, SelfNormalisesAndScales) {
  const ErrorMap base = {{{"brightness", 1}, 0.3}, {{"brightness", 2}, 0.5}, {{"gaussian_noise", 1}, 0.6}};
  for (const auto& [kind, v] : corruption_error(base, base)) EXPECT_EQ(v, 1.0);
  ErrorMap half = base;
  for (auto& [k, v] : half) v *= 0.5;
  for (const auto& [kind, v] : corruption_error(half, base)) EXPECT_EQ(v, 0.5);

  const ErrorMap model = {{{"a", 1}, 0.2}, {{"a", 2}, 0.4}};
  const ErrorMap baseline = {{{"a", 1}, 0.4}, {{"a", 2}, 0.4}};
  EXPECT_NEAR(corruption_error(model, baseline).at("a"), 0.75, 1e-15);
}

TEST(CorruptionError, ScaleInvariance) {
  RngStream rng(2, 0, "ce");
  ErrorMap model;
  ErrorMap base;
  for (auto kind : kAllCorruptions) {
    for (int s = 1; s <= 5; ++s) {
      model[{std::string(to_string(kind)), s}] = rng.next_unit();
      base[{std::string(to_string(kind)), s}] = 0.05 + rng.next_unit();
    }
  }
  const auto ce = corruption_error(model, base);
  for (double scale : {1e-3, 0.37, 7.5}) {
    ErrorMap m2 = model;
    ErrorMap b2 = base;
    for (auto& v : m2 | std::views::values) v *= scale;
    for (auto& v : b2 | std::views::values) v *= scale;
    const auto ce2 = corruption_error(m2, b2);
    for (const auto& [k, v] : ce) EXPECT_NEAR(ce2.at(k), v, 1e-12);
    EXPECT_NEAR(mce(ce2, false), mce(ce, false), 1e-12);
    EXPECT_NEAR(mce(ce2, true), mce(ce, true), 1e-12);
  }
}

TEST(CorruptionError, Errors) {
  const ErrorMap a = {{{"a", 1}, 0.2}};
  const ErrorMap b = {{{"b", 1}, 0.2}};
  EXPECT_THROW(corruption_error(a, b), Error);
  EXPECT_THROW(corruption_error(a, ErrorMap{}), Error);
  try {
    corruption_error(a, ErrorMap{{{"a", 1}, 0.0}});
    FAIL();
  } catch (const Error& e) {
    EXPECT_STREQ(e.what(), "degenerate baseline");
  }
}

TEST(Mce, Means) {
  EXPECT_EQ(mce(CeMap{{"a", 1.0}, {"b", 1.0}, {"c", 1.0}}, false), 1.0);
  EXPECT_EQ(mce(CeMap{{"gaussian_noise", 0.2}, {"brightness", 0.8}}, true), 0.8);
  EXPECT_NEAR(mce(CeMap{{"a", 0.6}, {"b", 0.9}}, false), 0.75, 1e-15);
  EXPECT_THROW(mce(CeMap{{"gaussian_noise", 0.2}, {"shot_noise", 0.1}, {"impulse_noise", 0.3}}, true), Error);
  EXPECT_THROW(mce(CeMap{}, false), Error);
}

TEST(Report, BaselineIsExactlyOne) {
  ErrorMap base;
  RngStream rng(3, 0, "report");
  for (auto kind : kAllCorruptions) {
    for (int s = 1; s <= 5; ++s) base[{std::string(to_string(kind)), s}] = 0.01 + rng.next_unit();
  }
  const auto report = build_report(base, base);
  EXPECT_EQ(report.mce, 1.0);
  ASSERT_TRUE(report.mce_minus_noise.has_value());
  EXPECT_EQ(*report.mce_minus_noise, 1.0);
  EXPECT_FALSE(report.relative_robustness.has_value());

  const ErrorMap noise_only = {{{"shot_noise", 1}, 0.2}};
  EXPECT_FALSE(build_report(noise_only, noise_only).mce_minus_noise.has_value());
}

TEST(Select, PublishedThresholdFixtures) {
  // Selection thresholds from the hyper-parameter table.
  constexpr double kWideResNetZ = 0.965;
  constexpr double kResNet50Z = 0.760;
  const std::vector<Candidate> wrn = {candidate("A", 0.97, -0.05), candidate("B", 0.96, -0.02)};
  EXPECT_EQ(select_hparams(wrn, kWideResNetZ).label, "A");

  const std::vector<Candidate> r50 = {candidate("cutout", 0.771, -0.30), candidate("pg", 0.764, -0.12),
                                      candidate("gauss", 0.752, -0.05)};
  EXPECT_EQ(select_hparams(r50, kResNet50Z).label, "pg");
}

TEST(Select, SingleCandidateAndFallback) {
  const std::vector<Candidate> one = {candidate("only", 0.1, -0.1)};
  EXPECT_EQ(select_hparams(one, 0.99).label, "only");
  const std::vector<Candidate> none = {candidate("a", 0.90, 0.0), candidate("b", 0.95, -0.5), candidate("c", 0.95, 0.0)};
  EXPECT_EQ(select_hparams(none, 0.965).label, "b");
  EXPECT_THROW(select_hparams(std::vector<Candidate>{}, 0.5), Error);
}

TEST(Select, TiesBreakByInputOrder) {
  const std::vector<Candidate> tied = {candidate("x", 0.97, -0.01), candidate("y", 0.98, -0.01)};
  EXPECT_EQ(select_hparams(tied, 0.9).label, "x");
}

TEST(Select, InvariantUnderMonotoneRobustnessTransform) {
  RngStream rng(4, 0, "select");
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<Candidate> cands;
    std::vector<Candidate> transformed;
    for (int k = 0; k < 6; ++k) {
      const double clean = 0.9 + 0.1 * rng.next_unit();
      std::array<double, 6> acc{};
      for (double& a : acc) a = rng.next_unit() * clean;
      cands.push_back(Candidate{"c" + std::to_string(k), {}, eval(clean, acc)});
      // Halves every candidate's robustness: a positive monotone map.
      std::array<double, 6> acc2{};
      for (std::size_t s = 0; s < 6; ++s) acc2[s] = clean + 0.5 * (acc[s] - clean);
      transformed.push_back(Candidate{"c" + std::to_string(k), {}, eval(clean, acc2)});
    }
    EXPECT_EQ(select_hparams_index(cands, 0.95), select_hparams_index(transformed, 0.95));
  }
}
