#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "webshop/agents.hpp"
#include "webshop/reward.hpp"
#include "webshop/scorer.hpp"
#include "webshop/trajectory_log.hpp"
#include "webshop/training.hpp"

namespace webshop {

enum class AgentKind { kRule, kOracle, kPolicy };

AgentKind agent_from_string(const std::string& name);
const char* to_string(AgentKind kind);

struct EvalConfig {
    AgentKind agent = AgentKind::kRule;
    std::optional<CrossAttentionScorer> policy;  // required for kPolicy
    PolicyMode policy_mode = PolicyMode::kSample;
    std::size_t episodes = 100;
    std::uint64_t seed = 0;
    std::size_t horizon = 100;
};

struct EvalResult {
    MetricsReport report;
    std::vector<TrajectoryRecord> records;
};

/// Runs episodes in-process over the first `episodes` goals of `goal_ids`
/// (cycling when there are fewer).
EvalResult run_eval(const Environment& env, const std::vector<std::string>& goal_ids, const EvalConfig& config);

/// Toy benchmark comparing rule, oracle, BC and BC+RL agents on one seeded
/// catalog. Policies train on their own goal set and are scored on the
/// evaluation goals, which they never see during training. BC imitates the
/// oracle on the first n_demo_goals training goals; RL then explores all of
/// them.
struct BenchmarkConfig {
    std::size_t n_products = 200;
    std::size_t n_eval_goals = 100;
    std::size_t n_train_goals = 500;
    std::size_t n_demo_goals = 100;
    std::size_t eval_episodes_per_goal = 1;
    std::size_t horizon = 100;
    std::size_t dim = 32;
    std::size_t vocab = 4096;
    double init_scale = 0.5;
    BcTrainConfig bc;
    RlTrainConfig rl;
};

struct BenchmarkResult {
    MetricsReport rule, oracle, bc, bc_rl;
    std::vector<double> rl_batch_reward;
};

BenchmarkResult run_benchmark(const BenchmarkConfig& config, std::uint64_t seed);

}  // namespace webshop
