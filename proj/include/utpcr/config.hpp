#pragma once

#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "utpcr/dataset.hpp"
#include "utpcr/error.hpp"
#include "utpcr/grpo.hpp"
#include "utpcr/judge.hpp"
#include "utpcr/reward.hpp"
#include "utpcr/schema.hpp"

namespace utpcr {

/// Simulator settings from the "simulate" section.
struct SimulationConfig {
  grpo::PolicyParams policy{std::vector<double>(8, 0.0)};
  grpo::RewardChannel channel;
  grpo::EstimatorConfig estimator;
  std::optional<std::vector<grpo::StateSpec>> states;
  std::vector<grpo::SweepPoint> sweep;
  bool has_seed = false;

  static grpo::RewardChannel channel_from_json(const nlohmann::json& j, grpo::RewardChannel ch) {
    if (j.contains("base_rewards")) ch.base = j.at("base_rewards").get<std::vector<double>>();
    if (j.contains("noise")) {
      const auto& n = j.at("noise");
      const std::string kind = n.value("kind", "none");
      if (kind == "none") ch.noise = grpo::NoiseKind::None;
      else if (kind == "gaussian") ch.noise = grpo::NoiseKind::Gaussian;
      else if (kind == "bernoulli") ch.noise = grpo::NoiseKind::Bernoulli;
      else throw Error(ErrorCode::ConfigInvalid, "unknown noise kind '" + kind + "'");
      ch.sigma = n.value("sigma", ch.sigma);
      ch.p = n.value("p", ch.p);
      ch.amplitude = n.value("amplitude", ch.amplitude);
    }
    ch.horizon = j.value("horizon", ch.horizon);
    if (j.contains("horizon_scaling")) {
      const std::string s = j.at("horizon_scaling").get<std::string>();
      if (s == "sqrt") ch.scaling = grpo::HorizonScaling::Sqrt;
      else if (s == "linear") ch.scaling = grpo::HorizonScaling::Linear;
      else if (s == "constant") ch.scaling = grpo::HorizonScaling::Constant;
      else throw Error(ErrorCode::ConfigInvalid, "unknown horizon scaling '" + s + "'");
    }
    return ch;
  }

  static SimulationConfig from_json(const nlohmann::json& j) {
    SimulationConfig c;
    c.channel.base = std::vector<double>(8, 0.0);
    if (j.is_null()) return c;
    try {
      if (j.contains("policy_logits")) c.policy.logits = j.at("policy_logits").get<std::vector<double>>();
      c.channel.base.assign(c.policy.size(), 0.0);
      c.channel = channel_from_json(j, c.channel);
      auto& e = c.estimator;
      if (j.contains("ref_logits")) e.ref.logits = j.at("ref_logits").get<std::vector<double>>();
      e.beta = j.value("beta", e.beta);
      e.group_size = j.value("group_size", e.group_size);
      e.epsilon = j.value("epsilon", e.epsilon);
      e.samples_outer = j.value("samples_outer", e.samples_outer);
      e.samples_inner = j.value("samples_inner", e.samples_inner);
      e.bootstrap_resamples = j.value("bootstrap_resamples", e.bootstrap_resamples);
      e.threads = j.value("threads", e.threads);
      if (j.contains("seed")) {
        e.seed = j.at("seed").get<std::uint64_t>();
        c.has_seed = true;
      }
      if (j.contains("advantage")) {
        const auto& a = j.at("advantage");
        const std::string mode = a.value("mode", "group_normalized");
        if (mode == "group_normalized") e.advantage_mode = grpo::AdvantageMode::GroupNormalized;
        else if (mode == "fixed_affine") e.advantage_mode = grpo::AdvantageMode::FixedAffine;
        else throw Error(ErrorCode::ConfigInvalid, "unknown advantage mode '" + mode + "'");
        e.affine_b = a.value("b", e.affine_b);
        e.affine_c = a.value("c", e.affine_c);
      }
      if (j.contains("states")) {
        std::vector<grpo::StateSpec> states;
        for (const auto& s : j.at("states")) {
          states.push_back({s.value("probability", 1.0), channel_from_json(s, c.channel)});
        }
        c.states = std::move(states);
      }
      if (j.contains("sweep")) {
        for (const auto& p : j.at("sweep")) c.sweep.push_back({p.at("sigma").get<double>(), p.value("horizon", 1)});
      }
    } catch (const nlohmann::json::exception& ex) {
      throw Error(ErrorCode::ConfigInvalid, std::string("simulate section: ") + ex.what());
    }
    return c;
  }
};

/// The whole config file. Every section is optional and overlays defaults.
struct Config {
  TagSchema schema = TagSchema::defaults();
  RewardConfig reward;
  JudgeBackendSpec judge;
  FilterSpec filter;
  SimulationConfig simulate = SimulationConfig::from_json(nullptr);

  static Config from_json(const nlohmann::json& j) {
    Config c;
    if (!j.is_object()) throw Error(ErrorCode::InvalidConfig, "config must be a JSON object");
    try {
      if (j.contains("schema")) c.schema = TagSchema::from_json(j.at("schema"));
      if (j.contains("reward")) c.reward = RewardConfig::from_json(j.at("reward"));
      if (j.contains("judge")) c.judge = JudgeBackendSpec::from_json(j.at("judge"));
      if (j.contains("filter")) c.filter = FilterSpec::from_json(j.at("filter"));
      if (j.contains("simulate")) c.simulate = SimulationConfig::from_json(j.at("simulate"));
    } catch (const nlohmann::json::exception& ex) {
      throw Error(ErrorCode::InvalidConfig, ex.what());
    }
    return c;
  }

  static Config load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::IoError, "cannot read config '" + path + "'");
    auto j = nlohmann::json::parse(in, nullptr, false);
    if (j.is_discarded()) throw Error(ErrorCode::InvalidConfig, "config '" + path + "' is not valid JSON");
    Config c = from_json(j);
    // Relative paths inside the file are relative to the file itself.
    if (c.judge.script_path && std::filesystem::path(*c.judge.script_path).is_relative()) {
      c.judge.script_path = (std::filesystem::path(path).parent_path() / *c.judge.script_path).lexically_normal().string();
    }
    return c;
  }
};

}  // namespace utpcr
