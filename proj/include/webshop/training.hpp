#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "webshop/agents.hpp"
#include "webshop/scorer.hpp"

namespace webshop {

/// One choice sample: encoded observation, encoded candidates, chosen index.
struct ChoiceSample {
    TokenIds observation;
    std::vector<TokenIds> actions;
    std::size_t chosen = 0;
};

ChoiceSample encode_choice(const CrossAttentionScorer& scorer, const Observation& observation,
                           const Action& chosen);

/// Mean negative log-likelihood of the chosen actions.
double choice_loss(const CrossAttentionScorer& scorer, const std::vector<ChoiceSample>& batch);
/// Loss and analytic gradient; samples are processed in parallel and summed
/// in sample order, so the result does not depend on the thread count.
double choice_loss_and_gradient(const CrossAttentionScorer& scorer, const std::vector<ChoiceSample>& batch,
                                ScorerGradient& grad);
/// Serial reference for choice_loss_and_gradient.
double choice_loss_and_gradient_serial(const CrossAttentionScorer& scorer,
                                       const std::vector<ChoiceSample>& batch, ScorerGradient& grad);

/// One SGD step on the imitation loss. Returns the pre-update loss.
double behavior_clone_update(CrossAttentionScorer& scorer, const std::vector<ChoiceSample>& batch,
                             double learning_rate);

/// A policy-chosen step with its discounted return.
struct RlSample {
    ChoiceSample choice;
    double return_to_go = 0.0;
};

struct RlConfig {
    double entropy_weight = 0.01;
    /// +1 keeps the entropy term as sum(pi log pi); -1 flips it.
    double entropy_sign = 1.0;
};

struct RlLosses {
    double pg = 0.0;
    double value = 0.0;
    double entropy = 0.0;
    double total = 0.0;
};

/// Discounted return-to-go per step of one trajectory.
std::vector<double> returns_to_go(const std::vector<double>& rewards, double gamma);

/// Collects the policy-chosen steps of each trajectory with their returns.
std::vector<RlSample> rl_samples(const CrossAttentionScorer& scorer, const std::vector<Trajectory>& batch);

/// Losses at the current parameters. The advantage R_t - V(o_t) enters the
/// policy-gradient term as a constant.
RlLosses rl_losses(const CrossAttentionScorer& scorer, const std::vector<RlSample>& samples,
                   const RlConfig& config);
RlLosses rl_losses_and_gradient(const CrossAttentionScorer& scorer, const std::vector<RlSample>& samples,
                                const RlConfig& config, ScorerGradient& grad);
/// The surrogate whose gradient rl_losses_and_gradient returns: advantages
/// are frozen at `frozen_values`. Used by finite-difference checks.
double rl_surrogate(const CrossAttentionScorer& scorer, const std::vector<RlSample>& samples,
                    const RlConfig& config, const std::vector<double>& frozen_values);

/// One SGD step on L_PG + L_value + w * L_entropy. Throws on an empty batch.
RlLosses reinforce_update(CrossAttentionScorer& scorer, const std::vector<Trajectory>& batch,
                          double learning_rate, const RlConfig& config);

enum class OptimizerKind { kSgd, kAdam };

const char* to_string(OptimizerKind kind);
OptimizerKind optimizer_from_string(const std::string& name);

/// Adam with lazy embedding updates: only rows present in the gradient
/// move, as with plain SGD on sparse rows.
class AdamOptimizer {
public:
    explicit AdamOptimizer(const CrossAttentionScorer& shape, double beta1 = 0.9, double beta2 = 0.999,
                           double epsilon = 1e-8);
    void step(CrossAttentionScorer& scorer, const ScorerGradient& grad, double learning_rate);

private:
    CrossAttentionScorer m_, v_;
    double beta1_, beta2_, epsilon_;
    std::size_t t_ = 0;
};

/// Either optimizer behind one call.
class Optimizer {
public:
    Optimizer(OptimizerKind kind, const CrossAttentionScorer& shape);
    void step(CrossAttentionScorer& scorer, const ScorerGradient& grad, double learning_rate);

private:
    OptimizerKind kind_;
    std::optional<AdamOptimizer> adam_;
};

struct BcTrainConfig {
    std::size_t epochs = 30;
    std::size_t batch_size = 16;
    double learning_rate = 0.01;
    OptimizerKind optimizer = OptimizerKind::kAdam;
    std::uint64_t seed = 0;
};

/// Choice samples from oracle demonstrations on the given goals.
std::vector<ChoiceSample> oracle_demonstrations(const Environment& env, const CrossAttentionScorer& scorer,
                                                const std::vector<std::string>& goal_ids);

/// Mini-batch training over shuffled samples; returns the per-epoch mean loss.
std::vector<double> train_behavior_cloning(CrossAttentionScorer& scorer, const std::vector<ChoiceSample>& data,
                                           const BcTrainConfig& config);

struct RlTrainConfig {
    std::size_t episodes = 2000;
    std::size_t batch_episodes = 8;
    double learning_rate = 0.001;
    OptimizerKind optimizer = OptimizerKind::kAdam;
    std::size_t horizon = 15;
    RlConfig losses;
    std::uint64_t seed = 0;
};

struct RlTrainLog {
    std::vector<double> batch_mean_reward;
    std::vector<RlLosses> losses;
};

RlTrainLog train_reinforce(CrossAttentionScorer& scorer, const Environment& env,
                           const std::vector<std::string>& goal_ids, const RlTrainConfig& config);

}  // namespace webshop
