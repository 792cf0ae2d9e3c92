#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "utpcr/grpo.hpp"

using namespace utpcr;
using namespace utpcr::grpo;

namespace {

// Reference log-softmax written out directly, used only as an oracle.
double log_softmax(const std::vector<double>& z, std::size_t a) {
  double m = *std::max_element(z.begin(), z.end());
  double s = 0;
  for (double x : z) s += std::exp(x - m);
  return z[a] - m - std::log(s);
}

// sum_a pi(a) * ||e_a - pi||^2 * sd^2 / c^2
double fixed_affine_tau_oracle(const std::vector<double>& logits, double sd, double c) {
  std::vector<double> pi(logits.size());
  for (std::size_t a = 0; a < logits.size(); ++a) pi[a] = std::exp(log_softmax(logits, a));
  double out = 0;
  for (std::size_t a = 0; a < pi.size(); ++a) {
    double n2 = 0;
    for (std::size_t k = 0; k < pi.size(); ++k) {
      double g = (k == a ? 1.0 : 0.0) - pi[k];
      n2 += g * g;
    }
    out += pi[a] * n2 * sd * sd / (c * c);
  }
  return out;
}

EstimatorConfig small_config(std::uint64_t seed = 7) {
  EstimatorConfig c;
  c.samples_outer = 2000;
  c.samples_inner = 100;
  c.bootstrap_resamples = 50;
  c.seed = seed;
  return c;
}

}  // namespace

TEST(Advantages, Examples) {
  std::vector<double> two = {0.0, 1.0};
  auto a = group_advantages(two);
  EXPECT_NEAR(a[0], -1.0, 1e-12);
  EXPECT_NEAR(a[1], 1.0, 1e-12);

  std::vector<double> four = {0.2, 0.4, 0.6, 0.8};
  auto b = group_advantages(four);
  const double sd = std::sqrt(0.05);
  EXPECT_NEAR(b[0], -0.3 / sd, 1e-12);
  EXPECT_NEAR(b[1], -0.1 / sd, 1e-12);
  EXPECT_NEAR(b[3], 1.3416, 1e-4);
  EXPECT_NEAR(b[2], 0.4472, 1e-4);
}

TEST(Advantages, DegenerateAndTooSmall) {
  std::vector<double> same(5, 0.7);
  for (double x : group_advantages(same)) EXPECT_EQ(x, 0.0);
  std::vector<double> one = {1.0};
  try {
    group_advantages(one);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::GroupTooSmall);
  }
}

TEST(ScoreGradient, MatchesFiniteDifferences) {
  Rng rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> z(2 + rng.below(7));
    for (auto& x : z) x = 4 * rng.uniform() - 2;
    std::size_t a = rng.below(z.size());
    auto g = score_gradient(PolicyParams{z}, a);
    double sum = 0;
    for (std::size_t k = 0; k < z.size(); ++k) {
      const double h = 1e-5;
      auto up = z, down = z;
      up[k] += h;
      down[k] -= h;
      EXPECT_NEAR(g[k], (log_softmax(up, a) - log_softmax(down, a)) / (2 * h), 1e-6);
      sum += g[k];
    }
    EXPECT_NEAR(sum, 0.0, 1e-12);
  }
}

TEST(GradientEstimate, KlMultiplier) {
  PolicyParams pi{{0.0, 0.0}};
  PolicyParams ref{{std::log(3.0), 0.0}};  // pi_ref(0) = 0.75, ratio 1.5
  auto g = gradient_estimate(2.0, pi, ref, 0, 0.1);
  auto v = score_gradient(pi, 0);
  for (std::size_t k = 0; k < v.size(); ++k) EXPECT_NEAR(g[k], 2.05 * v[k], 1e-12);
}

TEST(GradientEstimate, DegeneratePolicy) {
  PolicyParams pi{{0.0, -1e6}};
  try {
    gradient_estimate(1.0, pi, pi, 1, 0.1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::DegeneratePolicy);
  }
}

TEST(RngStreams, Deterministic) {
  auto a = Rng::substream(1, 2, 3);
  auto b = Rng::substream(1, 2, 3);
  auto c = Rng::substream(1, 2, 4);
  EXPECT_EQ(a(), b());
  EXPECT_NE(a(), c());
  Rng n(9);
  double s = 0, s2 = 0;
  for (int i = 0; i < 20000; ++i) {
    double x = n.normal();
    s += x;
    s2 += x * x;
  }
  EXPECT_NEAR(s / 20000, 0.0, 0.03);
  EXPECT_NEAR(s2 / 20000, 1.0, 0.05);
}

TEST(Simulator, ConfigValidation) {
  RewardChannel ch{{0.0, 1.0}};
  PolicyParams pi{{0.0, 0.0}};
  auto cfg = small_config();
  cfg.samples_inner = 10;
  EXPECT_THROW(simulate_variance(ch, pi, cfg), Error);
  cfg = small_config();
  RewardChannel wrong{{0.0}};
  EXPECT_THROW(simulate_variance(wrong, pi, cfg), Error);
}

TEST(Simulator, DeterministicAcrossThreadCounts) {
  RewardChannel ch{{0.0, 0.5, 1.0}, NoiseKind::Gaussian, 0.3};
  PolicyParams pi{{0.1, 0.0, -0.2}};
  auto c1 = small_config(99);
  c1.threads = 1;
  auto c4 = c1;
  c4.threads = 4;
  EXPECT_EQ(simulate_variance(ch, pi, c1).to_json(), simulate_variance(ch, pi, c4).to_json());
  EXPECT_EQ(simulate_variance(ch, pi, c1).to_json(), simulate_variance(ch, pi, c1).to_json());
}

TEST(Simulator, DeterministicChannelHasNoTrajectoryVariance) {
  RewardChannel ch{{0.0, 0.3, 0.6, 1.0}};
  auto r = simulate_variance(ch, PolicyParams{{0.0, 0.0, 0.0, 0.0}}, small_config());
  EXPECT_EQ(r.sigma_tau, 0.0);
  EXPECT_GT(r.sigma_a, 0.0);
}

TEST(Simulator, DoublingSigmaQuadruplesTau) {
  PolicyParams pi{{0.0, 0.5}};
  auto cfg = small_config();
  cfg.advantage_mode = AdvantageMode::FixedAffine;
  cfg.affine_c = 2.0;
  RewardChannel a{{0.0, 1.0}, NoiseKind::Gaussian, 0.5};
  RewardChannel b = a;
  b.sigma = 1.0;
  auto ra = simulate_variance(a, pi, cfg);
  auto rb = simulate_variance(b, pi, cfg);
  EXPECT_NEAR(rb.sigma_tau / ra.sigma_tau, 4.0, 1e-9);
}

TEST(Simulator, FixedAffineMatchesClosedForm) {
  EXPECT_NEAR(fixed_affine_tau_oracle({0.0, 0.0}, 1.0, 2.0), 0.125, 1e-15);
  PolicyParams pi{{0.0, 0.0}};
  auto cfg = small_config(5);
  cfg.advantage_mode = AdvantageMode::FixedAffine;
  cfg.affine_c = 2.0;
  RewardChannel ch{{0.0, 1.0}, NoiseKind::Gaussian, 1.0};
  auto r = simulate_variance(ch, pi, cfg);
  EXPECT_NEAR(r.sigma_tau, 0.125, 3 * r.se.sigma_tau + 1e-12);
}

TEST(Simulator, HorizonScaling) {
  RewardChannel ch{{0.0}, NoiseKind::Gaussian, 0.5};
  ch.horizon = 4;
  EXPECT_DOUBLE_EQ(ch.effective_sd(), 1.0);
  ch.scaling = HorizonScaling::Linear;
  EXPECT_DOUBLE_EQ(ch.effective_sd(), 2.0);
  ch.scaling = HorizonScaling::Constant;
  EXPECT_DOUBLE_EQ(ch.effective_sd(), 0.5);
}

TEST(Simulator, ReportJsonRoundTrip) {
  RewardChannel ch{{0.0, 1.0}, NoiseKind::Bernoulli, 0.0, 0.3, 1.0};
  auto r = simulate_variance(ch, PolicyParams{{0.0, 0.0}}, small_config());
  EXPECT_EQ(VarianceReport::from_json(r.to_json()).to_json(), r.to_json());
}
