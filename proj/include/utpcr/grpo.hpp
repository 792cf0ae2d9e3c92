#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <json.hpp>

#include "utpcr/error.hpp"

namespace utpcr::grpo {

// ---------------------------------------------------------------------------
// Random numbers

/// xoshiro256** with SplitMix64 seeding. Every (seed, stream, index) triple
/// names an independent substream, so Monte-Carlo results do not depend on
/// how indices are spread over threads. Distributions are implemented here
/// rather than taken from <random> so streams are identical across standard
/// libraries.
class Rng {
 public:
  using result_type = std::uint64_t;

  explicit Rng(std::uint64_t seed) {
    std::uint64_t x = seed;
    for (auto& s : state_) s = splitmix64(x);
  }

  static Rng substream(std::uint64_t seed, std::uint64_t stream, std::uint64_t index) {
    std::uint64_t x = seed;
    std::uint64_t h = splitmix64(x);
    x = h ^ (stream * 0x9E3779B97F4A7C15ULL);
    h = splitmix64(x);
    x = h ^ index;
    return Rng(splitmix64(x));
  }

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() {
    const std::uint64_t result = rotl(state_[1] * 5, 7) * 9;
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
  }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

  /// Standard normal (Marsaglia polar method).
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u, v, s;
    do {
      u = 2.0 * uniform() - 1.0;
      v = 2.0 * uniform() - 1.0;
      s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double f = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * f;
    has_spare_ = true;
    return u * f;
  }

  bool bernoulli(double p) { return uniform() < p; }

  /// Index drawn from a cumulative distribution (last entry ~ 1).
  int categorical(std::span<const double> cdf) {
    const double u = uniform();
    for (std::size_t i = 0; i + 1 < cdf.size(); ++i) {
      if (u < cdf[i]) return static_cast<int>(i);
    }
    return static_cast<int>(cdf.size()) - 1;
  }

  std::size_t below(std::size_t n) { return static_cast<std::size_t>(uniform() * static_cast<double>(n)); }

 private:
  std::uint64_t state_[4];
  double spare_ = 0.0;
  bool has_spare_ = false;

  static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }
  static std::uint64_t splitmix64(std::uint64_t& x) {
    std::uint64_t z = (x += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }
};

// ---------------------------------------------------------------------------
// Advantages and the score-function estimator

inline constexpr double kDefaultEpsilon = 1e-8;

/// (r_i - mean) / population std. Groups whose std is below epsilon carry
/// no preference and map to all-zero advantages.
inline std::vector<double> group_advantages(std::span<const double> rewards, double epsilon = kDefaultEpsilon) {
  if (rewards.size() < 2) throw Error(ErrorCode::GroupTooSmall, "group needs at least 2 rewards");
  const double n = static_cast<double>(rewards.size());
  const double mean = std::accumulate(rewards.begin(), rewards.end(), 0.0) / n;
  double ss = 0.0;
  for (double r : rewards) ss += (r - mean) * (r - mean);
  const double sd = std::sqrt(ss / n);
  std::vector<double> out(rewards.size(), 0.0);
  if (sd < epsilon) return out;
  for (std::size_t i = 0; i < rewards.size(); ++i) out[i] = (rewards[i] - mean) / sd;
  return out;
}

/// Softmax policy over a finite action set.
struct PolicyParams {
  std::vector<double> logits;

  std::size_t size() const { return logits.size(); }

  std::vector<double> probabilities() const {
    if (logits.empty()) return {};
    const double mx = *std::max_element(logits.begin(), logits.end());
    std::vector<double> p(logits.size());
    double z = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) z += (p[i] = std::exp(logits[i] - mx));
    for (auto& x : p) x /= z;
    return p;
  }

  double log_prob(std::size_t action) const {
    const double mx = *std::max_element(logits.begin(), logits.end());
    double z = 0.0;
    for (double l : logits) z += std::exp(l - mx);
    return logits.at(action) - mx - std::log(z);
  }

  void validate() const {
    if (logits.size() < 2) throw Error(ErrorCode::ConfigInvalid, "policy needs at least 2 actions");
    for (double l : logits) {
      if (!std::isfinite(l)) throw Error(ErrorCode::ConfigInvalid, "non-finite logit");
    }
  }
};

/// d log softmax(logits)[action] / d logits = onehot(action) - softmax(logits).
inline std::vector<double> score_gradient(const PolicyParams& policy, std::size_t action) {
  if (action >= policy.size()) throw Error(ErrorCode::InvalidRequest, "action out of range");
  auto g = policy.probabilities();
  for (auto& x : g) x = -x;
  g[action] += 1.0;
  return g;
}

/// KL correction beta * (pi_ref(a) / pi(a) - 1).
inline double kl_term(const PolicyParams& policy, const PolicyParams& ref, std::size_t action, double beta) {
  if (beta == 0.0) return 0.0;
  const double p = policy.probabilities().at(action);
  if (!(p > std::numeric_limits<double>::min())) {
    throw Error(ErrorCode::DegeneratePolicy, "policy assigns zero probability to the sampled action");
  }
  if (ref.size() != policy.size()) throw Error(ErrorCode::InvalidRequest, "reference policy size mismatch");
  return beta * (ref.probabilities().at(action) / p - 1.0);
}

/// [advantage + beta (pi_ref(a)/pi(a) - 1)] * grad log pi(a).
inline std::vector<double> gradient_estimate(double advantage, const PolicyParams& policy, const PolicyParams& ref,
                                             std::size_t action, double beta) {
  auto g = score_gradient(policy, action);
  const double p = policy.probabilities()[action];
  if (!(p > std::numeric_limits<double>::min())) {
    throw Error(ErrorCode::DegeneratePolicy, "policy assigns zero probability to the sampled action");
  }
  const double scalar = advantage + kl_term(policy, ref, action, beta);
  for (auto& x : g) x *= scalar;
  return g;
}

// ---------------------------------------------------------------------------
// Synthetic reward channel

enum class NoiseKind { None, Gaussian, Bernoulli };
enum class HorizonScaling { Sqrt, Linear, Constant };
enum class AdvantageMode { GroupNormalized, FixedAffine };

/// Deterministic per-action base reward plus zero-mean trajectory noise whose
/// scale grows with the horizon (sigma * sqrt(H) by default).
struct RewardChannel {
  std::vector<double> base;
  NoiseKind noise = NoiseKind::None;
  double sigma = 0.0;      // Gaussian
  double p = 0.5;          // Bernoulli
  double amplitude = 0.0;  // Bernoulli
  int horizon = 1;
  HorizonScaling scaling = HorizonScaling::Sqrt;

  double horizon_factor() const {
    switch (scaling) {
      case HorizonScaling::Sqrt: return std::sqrt(static_cast<double>(horizon));
      case HorizonScaling::Linear: return static_cast<double>(horizon);
      case HorizonScaling::Constant: return 1.0;
    }
    return 1.0;
  }

  /// Standard deviation of the reward given the action.
  double effective_sd() const {
    switch (noise) {
      case NoiseKind::None: return 0.0;
      case NoiseKind::Gaussian: return sigma * horizon_factor();
      case NoiseKind::Bernoulli: return amplitude * horizon_factor() * std::sqrt(p * (1.0 - p));
    }
    return 0.0;
  }

  double sample(std::size_t action, Rng& rng) const {
    const double b = base[action];
    switch (noise) {
      case NoiseKind::None: return b;
      case NoiseKind::Gaussian: return b + sigma * horizon_factor() * rng.normal();
      case NoiseKind::Bernoulli: return b + amplitude * horizon_factor() * ((rng.bernoulli(p) ? 1.0 : 0.0) - p);
    }
    return b;
  }

  void validate(std::size_t n_actions) const {
    if (base.size() != n_actions) {
      throw Error(ErrorCode::ConfigInvalid, "channel has " + std::to_string(base.size()) + " base rewards for " +
                                                std::to_string(n_actions) + " actions");
    }
    if (sigma < 0 || !std::isfinite(sigma)) throw Error(ErrorCode::ConfigInvalid, "sigma must be >= 0");
    if (p < 0 || p > 1) throw Error(ErrorCode::ConfigInvalid, "Bernoulli p must lie in [0,1]");
    if (horizon < 1) throw Error(ErrorCode::ConfigInvalid, "horizon must be >= 1");
    for (double b : base) {
      if (!std::isfinite(b)) throw Error(ErrorCode::ConfigInvalid, "non-finite base reward");
    }
  }
};

struct StateSpec {
  double probability = 1.0;
  RewardChannel channel;
};

struct EstimatorConfig {
  double beta = 0.0;
  PolicyParams ref;  // empty -> same as the sampling policy
  int group_size = 8;
  AdvantageMode advantage_mode = AdvantageMode::GroupNormalized;
  double affine_b = 0.0;
  double affine_c = 1.0;
  double epsilon = kDefaultEpsilon;
  int samples_outer = 10'000;
  int samples_inner = 100;
  std::uint64_t seed = 0;
  int bootstrap_resamples = 200;
  int threads = 0;  // 0 -> hardware concurrency

  void validate() const {
    if (beta < 0 || !std::isfinite(beta)) throw Error(ErrorCode::ConfigInvalid, "beta must be >= 0");
    if (samples_outer < 100 || samples_inner < 100) {
      throw Error(ErrorCode::ConfigInvalid, "samples_outer and samples_inner must be >= 100");
    }
    if (advantage_mode == AdvantageMode::FixedAffine && affine_c == 0.0) {
      throw Error(ErrorCode::ConfigInvalid, "FixedAffine scale c must be non-zero");
    }
    if (advantage_mode == AdvantageMode::GroupNormalized && group_size < 2) {
      throw Error(ErrorCode::ConfigInvalid, "group_size must be >= 2");
    }
    if (bootstrap_resamples < 2) throw Error(ErrorCode::ConfigInvalid, "bootstrap_resamples must be >= 2");
    if (!(epsilon > 0)) throw Error(ErrorCode::ConfigInvalid, "epsilon must be positive");
  }
};

/// Monte-Carlo estimates of the gradient-variance decomposition. All
/// variances are traces of covariance matrices.
struct VarianceReport {
  double sigma_total = 0;
  double sigma_tau = 0;
  double sigma_a = 0;
  double sigma_s = 0;
  double residual = 0;
  double signal = 0;  // ||E[g]||^2
  double snr = 0;
  double ratio_tau_a = 0;
  struct {
    double sigma_total = 0, sigma_tau = 0, sigma_a = 0, sigma_s = 0, residual = 0, snr = 0, ratio_tau_a = 0;
  } se;
  int samples_outer = 0;
  int samples_inner = 0;
  std::uint64_t seed = 0;

  nlohmann::json to_json() const {
    return {{"sigma_total", sigma_total},
            {"sigma_tau", sigma_tau},
            {"sigma_a", sigma_a},
            {"sigma_s", sigma_s},
            {"residual", residual},
            {"signal", signal},
            {"snr", snr},
            {"ratio_tau_a", ratio_tau_a},
            {"standard_errors",
             {{"sigma_total", se.sigma_total},
              {"sigma_tau", se.sigma_tau},
              {"sigma_a", se.sigma_a},
              {"sigma_s", se.sigma_s},
              {"residual", se.residual},
              {"snr", se.snr},
              {"ratio_tau_a", se.ratio_tau_a}}},
            {"samples_outer", samples_outer},
            {"samples_inner", samples_inner},
            {"seed", seed}};
  }

  static VarianceReport from_json(const nlohmann::json& j) {
    VarianceReport r;
    r.sigma_total = j.at("sigma_total").get<double>();
    r.sigma_tau = j.at("sigma_tau").get<double>();
    r.sigma_a = j.at("sigma_a").get<double>();
    r.sigma_s = j.at("sigma_s").get<double>();
    r.residual = j.at("residual").get<double>();
    r.signal = j.at("signal").get<double>();
    r.snr = j.at("snr").get<double>();
    r.ratio_tau_a = j.at("ratio_tau_a").get<double>();
    const auto& se = j.at("standard_errors");
    r.se.sigma_total = se.at("sigma_total").get<double>();
    r.se.sigma_tau = se.at("sigma_tau").get<double>();
    r.se.sigma_a = se.at("sigma_a").get<double>();
    r.se.sigma_s = se.at("sigma_s").get<double>();
    r.se.residual = se.at("residual").get<double>();
    r.se.snr = se.at("snr").get<double>();
    r.se.ratio_tau_a = se.at("ratio_tau_a").get<double>();
    r.samples_outer = j.at("samples_outer").get<int>();
    r.samples_inner = j.at("samples_inner").get<int>();
    r.seed = j.at("seed").get<std::uint64_t>();
    return r;
  }
};

namespace detail {

template <typename Fn>
void parallel_for(std::size_t n, int threads, Fn fn) {
  std::size_t workers = threads > 0 ? static_cast<std::size_t>(threads)
                                    : std::max<std::size_t>(1, std::thread::hardware_concurrency());
  workers = std::min(workers, std::max<std::size_t>(1, n / 256));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::jthread> pool;
  const std::size_t chunk = (n + workers - 1) / workers;
  for (std::size_t w = 0; w < workers; ++w) {
    const std::size_t lo = w * chunk;
    const std::size_t hi = std::min(n, lo + chunk);
    if (lo >= hi) break;
    pool.emplace_back([lo, hi, &fn] {
      for (std::size_t i = lo; i < hi; ++i) fn(i);
    });
  }
}

/// g = scalar * v(action); every sample is kept in this factored form.
struct OuterSample {
  int state = 0;
  int action = 0;         // member-1 action of the nested block
  double mean_scalar = 0; // mean over inner draws
  double var_scalar = 0;  // unbiased variance over inner draws
  int flat_action = 0;    // independent flat (s, a, tau) draw
  double flat_scalar = 0;
};

struct Statistics {
  double sigma_total, sigma_tau, sigma_a, sigma_s, residual, signal, snr, ratio;
};

class Simulator {
 public:
  Simulator(const PolicyParams& policy, const EstimatorConfig& cfg, std::vector<StateSpec> states)
      : policy_(policy), cfg_(cfg), states_(std::move(states)) {
    policy_.validate();
    cfg_.validate();
    if (states_.empty()) throw Error(ErrorCode::ConfigInvalid, "no states");
    double total = 0;
    for (const auto& s : states_) {
      s.channel.validate(policy_.size());
      if (!(s.probability > 0)) throw Error(ErrorCode::ConfigInvalid, "state probabilities must be positive");
      total += s.probability;
    }
    double acc = 0;
    for (const auto& s : states_) state_cdf_.push_back(acc += s.probability / total);
    if (cfg_.ref.logits.empty()) cfg_.ref = policy_;
    if (cfg_.ref.size() != policy_.size()) throw Error(ErrorCode::ConfigInvalid, "reference policy size mismatch");

    probs_ = policy_.probabilities();
    double a = 0;
    for (double p : probs_) action_cdf_.push_back(a += p);
    for (std::size_t k = 0; k < policy_.size(); ++k) {
      grads_.push_back(score_gradient(policy_, k));
      kl_.push_back(probs_[k] > std::numeric_limits<double>::min() ? kl_term(policy_, cfg_.ref, k, cfg_.beta) : 0.0);
    }
  }

  VarianceReport run() {
    const auto M = static_cast<std::size_t>(cfg_.samples_outer);
    std::vector<OuterSample> samples(M);
    parallel_for(M, cfg_.threads, [&](std::size_t j) { samples[j] = draw(j); });

    std::vector<std::size_t> all(M);
    std::iota(all.begin(), all.end(), std::size_t{0});
    const Statistics point = compute(samples, all);

    const auto B = static_cast<std::size_t>(cfg_.bootstrap_resamples);
    std::vector<Statistics> boot(B);
    parallel_for(B, cfg_.threads, [&](std::size_t b) {
      Rng rng = Rng::substream(cfg_.seed, 3, b);
      std::vector<std::size_t> idx(M);
      for (auto& i : idx) i = rng.below(M);
      boot[b] = compute(samples, idx);
    });

    VarianceReport r;
    r.sigma_total = point.sigma_total;
    r.sigma_tau = point.sigma_tau;
    r.sigma_a = point.sigma_a;
    r.sigma_s = point.sigma_s;
    r.residual = point.residual;
    r.signal = point.signal;
    r.snr = point.snr;
    r.ratio_tau_a = point.ratio;
    r.se.sigma_total = stddev(boot, &Statistics::sigma_total);
    r.se.sigma_tau = stddev(boot, &Statistics::sigma_tau);
    r.se.sigma_a = stddev(boot, &Statistics::sigma_a);
    r.se.sigma_s = stddev(boot, &Statistics::sigma_s);
    r.se.residual = stddev(boot, &Statistics::residual);
    r.se.snr = stddev(boot, &Statistics::snr);
    r.se.ratio_tau_a = stddev(boot, &Statistics::ratio);
    r.samples_outer = cfg_.samples_outer;
    r.samples_inner = cfg_.samples_inner;
    r.seed = cfg_.seed;
    return r;
  }

 private:
  PolicyParams policy_;
  EstimatorConfig cfg_;
  std::vector<StateSpec> states_;
  std::vector<double> state_cdf_;
  std::vector<double> probs_;
  std::vector<double> action_cdf_;
  std::vector<std::vector<double>> grads_;
  std::vector<double> kl_;

  /// Advantage of group member 0 for one noise realisation.
  double advantage(const RewardChannel& ch, std::span<const int> actions, Rng& rng,
                   std::vector<double>& rewards) const {
    if (cfg_.advantage_mode == AdvantageMode::FixedAffine) {
      return (ch.sample(static_cast<std::size_t>(actions[0]), rng) - cfg_.affine_b) / cfg_.affine_c;
    }
    for (std::size_t i = 0; i < actions.size(); ++i) rewards[i] = ch.sample(static_cast<std::size_t>(actions[i]), rng);
    const double n = static_cast<double>(rewards.size());
    double mean = 0;
    for (double r : rewards) mean += r;
    mean /= n;
    double ss = 0;
    for (double r : rewards) ss += (r - mean) * (r - mean);
    const double sd = std::sqrt(ss / n);
    return sd < cfg_.epsilon ? 0.0 : (rewards[0] - mean) / sd;
  }

  OuterSample draw(std::size_t j) const {
    const std::size_t group = cfg_.advantage_mode == AdvantageMode::GroupNormalized
                                  ? static_cast<std::size_t>(cfg_.group_size)
                                  : std::size_t{1};
    std::vector<int> actions(group);
    std::vector<double> rewards(group);
    OuterSample out;

    Rng rng = Rng::substream(cfg_.seed, 1, j);
    out.state = rng.categorical(state_cdf_);
    for (auto& a : actions) a = rng.categorical(action_cdf_);
    out.action = actions[0];
    const RewardChannel& ch = states_[static_cast<std::size_t>(out.state)].channel;
    const double d = kl_[static_cast<std::size_t>(out.action)];
    // Welford over the inner draws of the scalar multiplier.
    double mean = 0, m2 = 0;
    for (int k = 0; k < cfg_.samples_inner; ++k) {
      const double x = advantage(ch, actions, rng, rewards) + d;
      const double delta = x - mean;
      mean += delta / (k + 1);
      m2 += delta * (x - mean);
    }
    out.mean_scalar = mean;
    out.var_scalar = m2 / (cfg_.samples_inner - 1);

    Rng flat = Rng::substream(cfg_.seed, 2, j);
    const int fs = flat.categorical(state_cdf_);
    for (auto& a : actions) a = flat.categorical(action_cdf_);
    out.flat_action = actions[0];
    out.flat_scalar = advantage(states_[static_cast<std::size_t>(fs)].channel, actions, flat, rewards) +
                      kl_[static_cast<std::size_t>(out.flat_action)];
    return out;
  }

  Statistics compute(const std::vector<OuterSample>& samples, std::span<const std::size_t> idx) const {
    const std::size_t dim = policy_.size();
    const std::size_t n_states = states_.size();
    const double M = static_cast<double>(idx.size());
    const double n_inner = cfg_.samples_inner;

    auto norm2 = [&](std::size_t a) {
      double s = 0;
      for (double x : grads_[a]) s += x * x;
      return s;
    };

    // Per-state accumulators of m_j = mean_scalar * v(a).
    std::vector<std::vector<double>> state_sum(n_states, std::vector<double>(dim, 0.0));
    std::vector<double> state_count(n_states, 0.0), state_tau(n_states, 0.0);
    std::vector<double> total_sum(dim, 0.0), flat_sum(dim, 0.0);
    double sigma_tau = 0;
    for (std::size_t j : idx) {
      const auto& s = samples[j];
      const auto a = static_cast<std::size_t>(s.action);
      const auto st = static_cast<std::size_t>(s.state);
      const double v = s.var_scalar * norm2(a);
      sigma_tau += v;
      state_tau[st] += v;
      state_count[st] += 1;
      for (std::size_t k = 0; k < dim; ++k) {
        const double m = s.mean_scalar * grads_[a][k];
        state_sum[st][k] += m;
        total_sum[k] += m;
        flat_sum[k] += s.flat_scalar * grads_[static_cast<std::size_t>(s.flat_action)][k];
      }
    }
    sigma_tau /= M;

    std::vector<std::vector<double>> state_mean(n_states, std::vector<double>(dim, 0.0));
    for (std::size_t st = 0; st < n_states; ++st) {
      if (state_count[st] > 0) {
        for (std::size_t k = 0; k < dim; ++k) state_mean[st][k] = state_sum[st][k] / state_count[st];
      }
    }
    std::vector<double> overall(dim), flat_mean(dim);
    for (std::size_t k = 0; k < dim; ++k) {
      overall[k] = total_sum[k] / M;
      flat_mean[k] = flat_sum[k] / M;
    }

    // Second pass: within-state spread of m_j, overall spread of m_j, flat spread.
    std::vector<double> within(n_states, 0.0);
    double spread_all = 0, flat_ss = 0;
    for (std::size_t j : idx) {
      const auto& s = samples[j];
      const auto a = static_cast<std::size_t>(s.action);
      const auto fa = static_cast<std::size_t>(s.flat_action);
      const auto st = static_cast<std::size_t>(s.state);
      for (std::size_t k = 0; k < dim; ++k) {
        const double m = s.mean_scalar * grads_[a][k];
        within[st] += (m - state_mean[st][k]) * (m - state_mean[st][k]);
        spread_all += (m - overall[k]) * (m - overall[k]);
        const double g = s.flat_scalar * grads_[fa][k];
        flat_ss += (g - flat_mean[k]) * (g - flat_mean[k]);
      }
    }

    // E_s[Var_a|s(E_tau g)]: within-state variance of m_j minus the inner-sampling
    // noise it carries (E[tr Var_tau] / n_inner). Var_s(E g|s): weighted spread of
    // state means minus their own sampling noise.
    double sigma_a = 0, between = 0, between_noise = 0;
    for (std::size_t st = 0; st < n_states; ++st) {
      const double c = state_count[st];
      if (c < 2) continue;
      const double p = c / M;
      const double w = within[st] / (c - 1);
      sigma_a += p * (w - (state_tau[st] / c) / n_inner);
      double d2 = 0;
      for (std::size_t k = 0; k < dim; ++k) d2 += (state_mean[st][k] - overall[k]) * (state_mean[st][k] - overall[k]);
      between += p * d2;
      between_noise += p * (1 - p) * w / c;
    }
    const double sigma_s = between - between_noise;
    const double sigma_total = flat_ss / (M - 1);

    double signal = 0;
    for (double x : overall) signal += x * x;
    signal -= spread_all / (M - 1) / M;

    Statistics out{};
    out.sigma_total = sigma_total;
    out.sigma_tau = sigma_tau;
    out.sigma_a = sigma_a;
    out.sigma_s = sigma_s;
    out.residual = sigma_total - (sigma_tau + sigma_a + sigma_s);
    out.signal = signal;
    out.snr = sigma_total > 0 ? signal / sigma_total : 0.0;
    out.ratio = sigma_a > 0 ? sigma_tau / sigma_a : 0.0;
    return out;
  }

  static double stddev(const std::vector<Statistics>& xs, double Statistics::*field) {
    double mean = 0;
    for (const auto& x : xs) mean += x.*field;
    mean /= static_cast<double>(xs.size());
    double ss = 0;
    for (const auto& x : xs) ss += (x.*field - mean) * (x.*field - mean);
    return std::sqrt(ss / static_cast<double>(xs.size() - 1));
  }
};

}  // namespace detail

/// Nested Monte Carlo over states, actions and trajectory noise.
///
/// Each outer index j draws a state and an action (the joint group action in
/// GroupNormalized mode) and resamples the noise samples_inner times, giving
/// E_tau[g] and Var_tau(g) for that (s, a). An independent flat draw per index
/// estimates Var(g) directly, so the residual of the decomposition is a real
/// Monte-Carlo check. Standard errors come from a seeded bootstrap over j.
inline VarianceReport simulate_variance(const RewardChannel& channel, const PolicyParams& policy,
                                        const EstimatorConfig& cfg,
                                        const std::optional<std::vector<StateSpec>>& states = std::nullopt) {
  std::vector<StateSpec> st = states.value_or(std::vector<StateSpec>{{1.0, channel}});
  return detail::Simulator(policy, cfg, std::move(st)).run();
}

struct SweepPoint {
  double sigma = 0;
  int horizon = 1;
};

struct SweepRow {
  double sigma = 0;
  int horizon = 1;
  double sigma_eff = 0;
  VarianceReport report;
};

/// One Gaussian-noise simulation per (sigma, H), sharing the seed so rows use
/// common random numbers.
inline std::vector<SweepRow> asymmetry_sweep(const RewardChannel& base_channel, const PolicyParams& policy,
                                             const EstimatorConfig& cfg, const std::vector<SweepPoint>& sweep) {
  if (sweep.empty()) throw Error(ErrorCode::ConfigInvalid, "empty sweep");
  std::vector<SweepRow> rows;
  for (const auto& pt : sweep) {
    RewardChannel ch = base_channel;
    ch.noise = NoiseKind::Gaussian;
    ch.sigma = pt.sigma;
    ch.horizon = pt.horizon;
    SweepRow row;
    row.sigma = pt.sigma;
    row.horizon = pt.horizon;
    row.sigma_eff = ch.effective_sd();
    row.report = simulate_variance(ch, policy, cfg);
    rows.push_back(row);
  }
  return rows;
}

}  // namespace utpcr::grpo
