#include "webshop/evaluation.hpp"

#include <memory>

#include "webshop/catalog.hpp"
#include "webshop/error.hpp"
#include "webshop/goals.hpp"
#include "webshop/search.hpp"
#include "webshop/rng.hpp"

namespace webshop {

AgentKind agent_from_string(const std::string& name) {
    if (name == "rule") return AgentKind::kRule;
    if (name == "oracle") return AgentKind::kOracle;
    if (name == "policy") return AgentKind::kPolicy;
    throw Error(ErrorCode::kInvalidArgument, "unknown agent '" + name + "' (rule|oracle|policy)");
}

const char* to_string(AgentKind kind) {
    switch (kind) {
        case AgentKind::kRule: return "rule";
        case AgentKind::kOracle: return "oracle";
        case AgentKind::kPolicy: return "policy";
    }
    return "unknown";
}

EvalResult run_eval(const Environment& env, const std::vector<std::string>& goal_ids, const EvalConfig& config) {
    if (goal_ids.empty()) throw Error(ErrorCode::kInvalidArgument, "no goals to evaluate");
    if (config.episodes == 0) throw Error(ErrorCode::kInvalidArgument, "episodes must be >= 1");
    if (config.agent == AgentKind::kPolicy && !config.policy)
        throw Error(ErrorCode::kNotFound, "policy agent needs a checkpoint");

    std::vector<Trajectory> trajectories(config.episodes);
    const auto n = static_cast<std::int64_t>(config.episodes);
#pragma omp parallel for schedule(dynamic)
    for (std::int64_t k = 0; k < n; ++k) {
        const auto i = static_cast<std::size_t>(k);
        const std::string& goal = goal_ids[i % goal_ids.size()];
        switch (config.agent) {
            case AgentKind::kRule: trajectories[i] = rule_agent(env, goal); break;
            case AgentKind::kOracle: trajectories[i] = oracle_agent(PrivilegedAccess{}, env, goal); break;
            case AgentKind::kPolicy:
                trajectories[i] = run_policy_episode(*config.policy, env, goal, config.policy_mode, config.horizon,
                                                     mix_seed(config.seed, i));
                break;
        }
    }

    EvalResult result;
    std::vector<EpisodeOutcome> outcomes;
    for (std::size_t i = 0; i < trajectories.size(); ++i) {
        const Trajectory& t = trajectories[i];
        outcomes.push_back({t.scored_reward(env.goal(t.goal_id)), t.stats});
        result.records.push_back(
            to_record(t, "eval-" + std::to_string(config.seed) + "-" + std::to_string(i), to_string(config.agent)));
    }
    result.report = aggregate_metrics(outcomes);
    return result;
}

BenchmarkResult run_benchmark(const BenchmarkConfig& config, std::uint64_t seed) {
    SyntheticCatalogConfig cc;
    cc.n_products = config.n_products;
    auto catalog = std::make_shared<const Catalog>(generate_synthetic_catalog(cc, mix_seed(seed, 1)));
    auto index = std::make_shared<const SearchIndex>(build_index(*catalog));

    std::vector<Goal> goals = generate_goals(*catalog, config.n_eval_goals, mix_seed(seed, 2));
    std::vector<std::string> eval_ids, train_ids;
    for (const auto& g : goals) eval_ids.push_back(g.goal_id);
    for (auto& g : generate_goals(*catalog, config.n_train_goals, mix_seed(seed, 3))) {
        g.goal_id = "train-" + g.goal_id;
        train_ids.push_back(g.goal_id);
        goals.push_back(std::move(g));
    }
    const Environment env(catalog, index, std::move(goals));

    EvalConfig ec;
    ec.episodes = config.n_eval_goals * config.eval_episodes_per_goal;
    ec.seed = mix_seed(seed, 4);
    ec.horizon = config.horizon;

    BenchmarkResult out;
    ec.agent = AgentKind::kRule;
    out.rule = run_eval(env, eval_ids, ec).report;
    ec.agent = AgentKind::kOracle;
    out.oracle = run_eval(env, eval_ids, ec).report;

    CrossAttentionScorer scorer =
        CrossAttentionScorer::fan_in_init(config.dim, config.vocab, mix_seed(seed, 5), config.init_scale);
    BcTrainConfig bc = config.bc;
    bc.seed = mix_seed(seed, 6);
    const std::vector<std::string> demo_ids(
        train_ids.begin(), train_ids.begin() + static_cast<std::ptrdiff_t>(std::min(config.n_demo_goals, train_ids.size())));
    train_behavior_cloning(scorer, oracle_demonstrations(env, scorer, demo_ids), bc);
    ec.agent = AgentKind::kPolicy;
    ec.policy = scorer;
    out.bc = run_eval(env, eval_ids, ec).report;

    RlTrainConfig rl = config.rl;
    rl.seed = mix_seed(seed, 7);
    out.rl_batch_reward = train_reinforce(scorer, env, train_ids, rl).batch_mean_reward;
    ec.policy = scorer;
    out.bc_rl = run_eval(env, eval_ids, ec).report;
    return out;
}

}  // namespace webshop
