#include "webshop/training.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "webshop/error.hpp"
#include "webshop/rng.hpp"

namespace webshop {

ChoiceSample encode_choice(const CrossAttentionScorer& scorer, const Observation& observation, const Action& chosen) {
    auto it = std::find(observation.actions.begin(), observation.actions.end(), chosen);
    if (it == observation.actions.end())
        throw Error(ErrorCode::kIllegalAction, "chosen action " + chosen.str() + " is not among the legal actions");
    ChoiceSample s;
    s.observation = scorer.token_ids(observation_tokens(observation));
    for (const auto& tokens : candidate_tokens(observation)) s.actions.push_back(scorer.token_ids(tokens));
    s.chosen = static_cast<std::size_t>(it - observation.actions.begin());
    return s;
}

namespace {

struct LogPolicy {
    std::vector<double> probs;
    std::vector<double> log_probs;
};

LogPolicy log_policy(const CrossAttentionScorer& scorer, const TokenIds& obs, const std::vector<TokenIds>& actions) {
    auto dist = policy_distribution(scorer, obs, actions);
    const double m = *std::max_element(dist.scores.begin(), dist.scores.end());
    double z = 0.0;
    for (double s : dist.scores) z += std::exp(s - m);
    const double lse = m + std::log(z);
    LogPolicy lp;
    lp.probs = std::move(dist.probs);
    for (double s : dist.scores) lp.log_probs.push_back(s - lse);
    return lp;
}

double sample_choice_loss(const CrossAttentionScorer& scorer, const ChoiceSample& s, double weight,
                          ScorerGradient* grad) {
    const LogPolicy lp = log_policy(scorer, s.observation, s.actions);
    if (grad) {
        for (std::size_t k = 0; k < s.actions.size(); ++k) {
            const double upstream = weight * (lp.probs[k] - (k == s.chosen ? 1.0 : 0.0));
            if (upstream != 0.0) scorer.score_backward(s.observation, s.actions[k], upstream, *grad);
        }
    }
    return -lp.log_probs[s.chosen];
}

}  // namespace

double choice_loss(const CrossAttentionScorer& scorer, const std::vector<ChoiceSample>& batch) {
    if (batch.empty()) throw Error(ErrorCode::kInvalidArgument, "empty batch");
    double loss = 0.0;
    for (const auto& s : batch) loss += sample_choice_loss(scorer, s, 0.0, nullptr);
    return loss / static_cast<double>(batch.size());
}

double choice_loss_and_gradient_serial(const CrossAttentionScorer& scorer, const std::vector<ChoiceSample>& batch,
                                       ScorerGradient& grad) {
    if (batch.empty()) throw Error(ErrorCode::kInvalidArgument, "empty batch");
    const double w = 1.0 / static_cast<double>(batch.size());
    double loss = 0.0;
    for (const auto& s : batch) {
        ScorerGradient partial(scorer.dim());
        loss += sample_choice_loss(scorer, s, w, &partial);
        grad.add(partial);
    }
    return loss * w;
}

double choice_loss_and_gradient(const CrossAttentionScorer& scorer, const std::vector<ChoiceSample>& batch,
                                ScorerGradient& grad) {
    if (batch.empty()) throw Error(ErrorCode::kInvalidArgument, "empty batch");
    const double w = 1.0 / static_cast<double>(batch.size());
    const auto n = static_cast<std::int64_t>(batch.size());
    std::vector<ScorerGradient> partial(batch.size(), ScorerGradient(scorer.dim()));
    std::vector<double> losses(batch.size());
#pragma omp parallel for schedule(dynamic)
    for (std::int64_t b = 0; b < n; ++b) {
        const auto i = static_cast<std::size_t>(b);
        losses[i] = sample_choice_loss(scorer, batch[i], w, &partial[i]);
    }
    double loss = 0.0;
    for (std::size_t i = 0; i < batch.size(); ++i) {
        grad.add(partial[i]);
        loss += losses[i];
    }
    return loss * w;
}

double behavior_clone_update(CrossAttentionScorer& scorer, const std::vector<ChoiceSample>& batch,
                             double learning_rate) {
    ScorerGradient grad(scorer.dim());
    const double loss = choice_loss_and_gradient(scorer, batch, grad);
    if (learning_rate != 0.0) scorer.apply(grad, learning_rate);
    return loss;
}

// ---------------------------------------------------------------------------

std::vector<double> returns_to_go(const std::vector<double>& rewards, double gamma) {
    std::vector<double> out(rewards.size());
    double running = 0.0;
    for (std::size_t t = rewards.size(); t-- > 0;) out[t] = running = rewards[t] + gamma * running;
    return out;
}

std::vector<RlSample> rl_samples(const CrossAttentionScorer& scorer, const std::vector<Trajectory>& batch) {
    std::vector<RlSample> samples;
    for (const auto& traj : batch) {
        std::vector<double> rewards;
        for (const auto& s : traj.steps) rewards.push_back(s.reward);
        const auto returns = returns_to_go(rewards, scorer.gamma());
        for (std::size_t t = 0; t < traj.steps.size(); ++t) {
            const auto& step = traj.steps[t];
            if (!step.policy_choice) continue;
            samples.push_back({encode_choice(scorer, step.observation, step.action), returns[t]});
        }
    }
    return samples;
}

namespace {

struct SampleTerms {
    double pg = 0.0, value = 0.0, entropy = 0.0;
};

/// Loss terms of one sample. The policy-gradient advantage uses
/// `frozen_value` when given; otherwise the current V(o).
SampleTerms sample_rl(const CrossAttentionScorer& scorer, const RlSample& s, const RlConfig& config, double inv_n,
                      const double* frozen_value, ScorerGradient* grad) {
    const LogPolicy lp = log_policy(scorer, s.choice.observation, s.choice.actions);
    const double v = scorer.value(s.choice.observation);
    const double advantage = s.return_to_go - (frozen_value ? *frozen_value : v);
    double neg_entropy = 0.0;
    for (std::size_t k = 0; k < lp.probs.size(); ++k) neg_entropy += lp.probs[k] * lp.log_probs[k];

    SampleTerms t;
    t.pg = -advantage * lp.log_probs[s.choice.chosen];
    t.value = (s.return_to_go - v) * (s.return_to_go - v);
    t.entropy = neg_entropy;

    if (grad) {
        const double ent_w = config.entropy_weight * config.entropy_sign;
        for (std::size_t k = 0; k < lp.probs.size(); ++k) {
            const double indicator = k == s.choice.chosen ? 1.0 : 0.0;
            const double d_pg = -advantage * (indicator - lp.probs[k]);
            const double d_ent = lp.probs[k] * (lp.log_probs[k] - neg_entropy);
            const double upstream = inv_n * (d_pg + ent_w * d_ent);
            if (upstream != 0.0) scorer.score_backward(s.choice.observation, s.choice.actions[k], upstream, *grad);
        }
        scorer.value_backward(s.choice.observation, inv_n * -2.0 * (s.return_to_go - v), *grad);
    }
    return t;
}

RlLosses combine(const std::vector<SampleTerms>& terms, const RlConfig& config) {
    RlLosses l;
    for (const auto& t : terms) {
        l.pg += t.pg;
        l.value += t.value;
        l.entropy += t.entropy;
    }
    const double n = static_cast<double>(terms.size());
    l.pg /= n;
    l.value /= n;
    l.entropy /= n;
    l.total = l.pg + l.value + config.entropy_weight * config.entropy_sign * l.entropy;
    return l;
}

}  // namespace

RlLosses rl_losses(const CrossAttentionScorer& scorer, const std::vector<RlSample>& samples, const RlConfig& config) {
    if (samples.empty()) throw Error(ErrorCode::kInvalidArgument, "empty batch");
    std::vector<SampleTerms> terms;
    for (const auto& s : samples) terms.push_back(sample_rl(scorer, s, config, 0.0, nullptr, nullptr));
    return combine(terms, config);
}

RlLosses rl_losses_and_gradient(const CrossAttentionScorer& scorer, const std::vector<RlSample>& samples,
                                const RlConfig& config, ScorerGradient& grad) {
    if (samples.empty()) throw Error(ErrorCode::kInvalidArgument, "empty batch");
    const double inv_n = 1.0 / static_cast<double>(samples.size());
    const auto n = static_cast<std::int64_t>(samples.size());
    std::vector<SampleTerms> terms(samples.size());
    std::vector<ScorerGradient> partial(samples.size(), ScorerGradient(scorer.dim()));
#pragma omp parallel for schedule(dynamic)
    for (std::int64_t b = 0; b < n; ++b) {
        const auto i = static_cast<std::size_t>(b);
        terms[i] = sample_rl(scorer, samples[i], config, inv_n, nullptr, &partial[i]);
    }
    for (const auto& g : partial) grad.add(g);
    return combine(terms, config);
}

double rl_surrogate(const CrossAttentionScorer& scorer, const std::vector<RlSample>& samples, const RlConfig& config,
                    const std::vector<double>& frozen_values) {
    if (samples.empty() || frozen_values.size() != samples.size())
        throw Error(ErrorCode::kInvalidArgument, "one frozen value per sample required");
    std::vector<SampleTerms> terms;
    for (std::size_t i = 0; i < samples.size(); ++i)
        terms.push_back(sample_rl(scorer, samples[i], config, 0.0, &frozen_values[i], nullptr));
    return combine(terms, config).total;
}

RlLosses reinforce_update(CrossAttentionScorer& scorer, const std::vector<Trajectory>& batch, double learning_rate,
                          const RlConfig& config) {
    if (batch.empty()) throw Error(ErrorCode::kInvalidArgument, "empty trajectory batch");
    const auto samples = rl_samples(scorer, batch);
    if (samples.empty()) return {};
    ScorerGradient grad(scorer.dim());
    RlLosses losses = rl_losses_and_gradient(scorer, samples, config, grad);
    if (learning_rate != 0.0) scorer.apply(grad, learning_rate);
    return losses;
}

// ---------------------------------------------------------------------------

const char* to_string(OptimizerKind kind) { return kind == OptimizerKind::kAdam ? "adam" : "sgd"; }

OptimizerKind optimizer_from_string(const std::string& name) {
    if (name == "adam") return OptimizerKind::kAdam;
    if (name == "sgd") return OptimizerKind::kSgd;
    throw Error(ErrorCode::kInvalidArgument, "unknown optimizer '" + name + "'");
}

AdamOptimizer::AdamOptimizer(const CrossAttentionScorer& shape, double beta1, double beta2, double epsilon)
    : m_(shape.dim(), shape.vocab_size()),
      v_(shape.dim(), shape.vocab_size()),
      beta1_(beta1),
      beta2_(beta2),
      epsilon_(epsilon) {}

void AdamOptimizer::step(CrossAttentionScorer& scorer, const ScorerGradient& grad, double learning_rate) {
    ++t_;
    const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
    auto update = [&](std::span<double> p, std::span<const double> g, std::span<double> m, std::span<double> v) {
        for (std::size_t k = 0; k < p.size(); ++k) {
            m[k] = beta1_ * m[k] + (1.0 - beta1_) * g[k];
            v[k] = beta2_ * v[k] + (1.0 - beta2_) * g[k] * g[k];
            p[k] -= learning_rate * (m[k] / c1) / (std::sqrt(v[k] / c2) + epsilon_);
        }
    };
    update(scorer.w1, grad.w1, m_.w1, v_.w1);
    update(scorer.w2, grad.w2, m_.w2, v_.w2);
    update(scorer.w3, grad.w3, m_.w3, v_.w3);
    update(scorer.w6, grad.w6, m_.w6, v_.w6);
    update(scorer.wv, grad.wv, m_.wv, v_.wv);
    update(scorer.w4.data, grad.w4.data, m_.w4.data, v_.w4.data);
    update(scorer.w5.data, grad.w5.data, m_.w5.data, v_.w5.data);
    for (const auto& [id, row] : grad.embedding)
        update(scorer.embedding.row(id), row, m_.embedding.row(id), v_.embedding.row(id));
}

Optimizer::Optimizer(OptimizerKind kind, const CrossAttentionScorer& shape) : kind_(kind) {
    if (kind_ == OptimizerKind::kAdam) adam_.emplace(shape);
}

void Optimizer::step(CrossAttentionScorer& scorer, const ScorerGradient& grad, double learning_rate) {
    if (learning_rate == 0.0) return;
    if (adam_)
        adam_->step(scorer, grad, learning_rate);
    else
        scorer.apply(grad, learning_rate);
}

// ---------------------------------------------------------------------------

std::vector<ChoiceSample> oracle_demonstrations(const Environment& env, const CrossAttentionScorer& scorer,
                                                const std::vector<std::string>& goal_ids) {
    std::vector<ChoiceSample> data;
    for (const auto& id : goal_ids) {
        Trajectory t = oracle_agent(PrivilegedAccess{}, env, id);
        for (const auto& step : t.steps)
            if (step.action.kind == ActionKind::kClick) data.push_back(encode_choice(scorer, step.observation, step.action));
    }
    return data;
}

std::vector<double> train_behavior_cloning(CrossAttentionScorer& scorer, const std::vector<ChoiceSample>& data,
                                           const BcTrainConfig& config) {
    if (data.empty()) throw Error(ErrorCode::kInvalidArgument, "no demonstrations");
    if (config.batch_size == 0) throw Error(ErrorCode::kInvalidArgument, "batch_size must be >= 1");
    Optimizer optimizer(config.optimizer, scorer);
    std::vector<double> epoch_loss;
    std::vector<std::size_t> order(data.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
        Rng rng(mix_seed(config.seed, epoch));
        rng.shuffle(order);
        double total = 0.0;
        for (std::size_t begin = 0; begin < order.size(); begin += config.batch_size) {
            std::vector<ChoiceSample> batch;
            for (std::size_t k = begin; k < std::min(begin + config.batch_size, order.size()); ++k)
                batch.push_back(data[order[k]]);
            ScorerGradient grad(scorer.dim());
            total += choice_loss_and_gradient(scorer, batch, grad) * static_cast<double>(batch.size());
            optimizer.step(scorer, grad, config.learning_rate);
        }
        epoch_loss.push_back(total / static_cast<double>(data.size()));
    }
    return epoch_loss;
}

RlTrainLog train_reinforce(CrossAttentionScorer& scorer, const Environment& env,
                           const std::vector<std::string>& goal_ids, const RlTrainConfig& config) {
    if (goal_ids.empty()) throw Error(ErrorCode::kInvalidArgument, "no training goals");
    if (config.batch_episodes == 0) throw Error(ErrorCode::kInvalidArgument, "batch_episodes must be >= 1");
    RlTrainLog log;
    Optimizer optimizer(config.optimizer, scorer);
    Rng rng(config.seed);
    for (std::size_t done = 0; done < config.episodes; done += config.batch_episodes) {
        const std::size_t n = std::min(config.batch_episodes, config.episodes - done);
        std::vector<std::string> goals;
        std::vector<std::uint64_t> seeds;
        for (std::size_t k = 0; k < n; ++k) {
            goals.push_back(goal_ids[rng.uniform_index(goal_ids.size())]);
            seeds.push_back(rng.next_u64());
        }
        std::vector<Trajectory> batch(n);
        const auto count = static_cast<std::int64_t>(n);
#pragma omp parallel for schedule(dynamic)
        for (std::int64_t k = 0; k < count; ++k) {
            const auto i = static_cast<std::size_t>(k);
            batch[i] = run_policy_episode(scorer, env, goals[i], PolicyMode::kSample, config.horizon, seeds[i]);
        }
        double mean = 0.0;
        for (const auto& t : batch) mean += t.reward();
        log.batch_mean_reward.push_back(mean / static_cast<double>(n));
        const auto samples = rl_samples(scorer, batch);
        if (samples.empty()) {
            log.losses.push_back({});
            continue;
        }
        ScorerGradient grad(scorer.dim());
        log.losses.push_back(rl_losses_and_gradient(scorer, samples, config.losses, grad));
        optimizer.step(scorer, grad, config.learning_rate);
    }
    return log;
}

}  // namespace webshop
