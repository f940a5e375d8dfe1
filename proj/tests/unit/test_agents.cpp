#include <gtest/gtest.h>

#include <limits>
#include <set>

#include "fixtures.hpp"
#include "webshop/agents.hpp"
#include "webshop/error.hpp"
#include "webshop/evaluation.hpp"
#include "webshop/rng.hpp"
#include "webshop/text.hpp"
#include "webshop/training.hpp"

using namespace webshop;

namespace {

std::shared_ptr<const Environment> env_with_goal(Goal goal) {
    auto catalog = fixtures::tiny_catalog();
    auto index = std::make_shared<const SearchIndex>(build_index(*catalog));
    return std::make_shared<const Environment>(catalog, index, std::vector<Goal>{std::move(goal)});
}

Goal table_goal(std::string text) {
    Goal g;
    g.goal_id = "table";
    g.target_product_id = "P6";
    g.u_att = {"solid wood"};
    g.u_price = Price::from_cents(15000);
    g.instruction_text = std::move(text);
    return g;
}

struct Best {
    std::optional<std::string> product;
    SelectedOptions options;
    Rational r{0, 1};
};

// Second enumerator: recursion over option groups instead of an odometer.
void enumerate(const Environment& env, const Goal& goal, const Product& p, std::size_t group,
               SelectedOptions& current, std::size_t rank, std::size_t& best_rank, Best& best) {
    if (group == p.option_groups.size()) {
        Rational r = compute_reward(goal, p, current, env.catalog(), env.type_rule()).r;
        const bool better = !best.product || r > best.r ||
                            (r == best.r && rank == best_rank && current < best.options);
        if (better) {
            best = {p.id, current, r};
            best_rank = rank;
        }
        return;
    }
    const auto& [field, values] = p.option_groups[group];
    if (values.empty()) return enumerate(env, goal, p, group + 1, current, rank, best_rank, best);
    for (const auto& v : values) {
        current[field] = v;
        enumerate(env, goal, p, group + 1, current, rank, best_rank, best);
    }
    current.erase(field);
}

Best brute_force(const Environment& env, const Goal& goal, const std::string& query) {
    Best best;
    std::size_t best_rank = std::numeric_limits<std::size_t>::max();
    const auto results = env.retrieve(query);
    for (std::size_t k = 0; k < results.size(); ++k) {
        SelectedOptions current;
        enumerate(env, goal, *env.catalog().find(results[k]), 0, current, k, best_rank, best);
    }
    return best;
}

}  // namespace

TEST(RuleAgent, ThreeActionsNoOptions) {
    auto env = fixtures::tiny_env();
    auto t = rule_agent(*env, "sneaker");
    ASSERT_EQ(t.steps.size(), 3u);
    EXPECT_EQ(t.steps[0].action, Action::search(env->goal("sneaker").instruction_text));
    EXPECT_EQ(t.steps[2].action, Action::click("Buy"));
    ASSERT_TRUE(t.final_reward);
    EXPECT_EQ(t.final_reward->opt_matched, 0u);
    EXPECT_EQ(t.final_reward->opt_score(), 0.0);
    EXPECT_FALSE(t.truncated);
    EXPECT_EQ(t.stats.states, 3u);
}

TEST(RuleAgent, RankOneTargetScoresOne) {
    auto env = env_with_goal(table_goal("oak side table made of solid wood, and price lower than 150 dollars"));
    ASSERT_EQ(env->retrieve(env->goal("table").instruction_text).front(), "P6");
    auto t = rule_agent(*env, "table");
    EXPECT_EQ(t.reward(), 1.0);
}

TEST(RuleAgent, EmptyResultsTruncate) {
    auto env = env_with_goal(table_goal("zzqx vvbn"));
    auto t = rule_agent(*env, "table");
    EXPECT_TRUE(t.truncated);
    EXPECT_EQ(t.reward(), 0.0);
    EXPECT_EQ(t.steps.size(), 1u);
    EXPECT_EQ(t.final_page, Page::kResults);
    EXPECT_TRUE(t.scored_reward(env->goal("table")).r == Rational(0, 1));
}

TEST(QueryGenerate, Rules) {
    const std::string text =
        "I want a walnut standing desk that is 66 inches in width, and price lower than 400.00 dollars";
    EXPECT_EQ(query_generate(text, 0), text);
    bool measured = false;
    std::set<std::string> seen{text};
    for (std::size_t k = 1; k <= query_rule_count(); ++k) {
        const std::string q = query_generate(text, k);
        EXPECT_TRUE(seen.insert(q).second) << "attempt " << k << " repeats: " << q;
        auto toks = tokenize(q);
        EXPECT_EQ(std::count(toks.begin(), toks.end(), "400"), 0) << q;
        if (std::count(toks.begin(), toks.end(), "inches") == 0 && std::count(toks.begin(), toks.end(), "66")) measured = true;
    }
    EXPECT_TRUE(measured);
    EXPECT_EQ(query_generate(text, 3), "walnut standing desk 66 w");
    // cycling
    EXPECT_EQ(query_generate(text, query_rule_count() + 1), query_generate(text, 1));
}

TEST(Oracle, MatchesIndependentEnumerator) {
    auto env = fixtures::synthetic_env(150, 200, 21);
    for (const auto& g : env->goals()) {
        const std::string query = query_generate(g.instruction_text, 0);
        auto got = choice_oracle(PrivilegedAccess{}, *env, g.goal_id, query);
        auto want = brute_force(*env, g, query);
        ASSERT_EQ(got.product_id, want.product) << g.goal_id;
        EXPECT_EQ(got.options, want.options) << g.goal_id;
        EXPECT_EQ(got.reward.r, want.r) << g.goal_id;
        EXPECT_EQ(got.skipped_items, 0u);
        EXPECT_EQ(choice_oracle_parallel(PrivilegedAccess{}, *env, g.goal_id, query).reward, got.reward);
    }
}

TEST(Oracle, DominatesRuleAndRandomChoices) {
    auto env = fixtures::synthetic_env(150, 200, 22);
    Rng rng(5);
    for (const auto& g : env->goals()) {
        const std::string query = g.instruction_text;
        auto best = choice_oracle(PrivilegedAccess{}, *env, g.goal_id, query);
        auto rule = rule_agent(*env, g.goal_id);
        EXPECT_GE(best.reward.r.to_double(), rule.reward());
        const auto results = env->retrieve(query);
        for (int t = 0; t < 5 && !results.empty(); ++t) {
            const Product& p = *env->catalog().find(results[rng.uniform_index(results.size())]);
            SelectedOptions opts;
            for (const auto& [f, vs] : p.option_groups)
                if (!vs.empty() && rng.bernoulli(0.7)) opts[f] = vs[rng.uniform_index(vs.size())];
            EXPECT_GE(best.reward.r, compute_reward(g, p, opts, env->catalog(), env->type_rule()).r);
        }
        auto target_in = std::find(results.begin(), results.end(), g.target_product_id) != results.end();
        if (target_in) EXPECT_TRUE(best.reward.r.is_one()) << g.goal_id;
    }
}

TEST(Oracle, AgentReplaysTheChoice) {
    auto env = fixtures::tiny_env();
    auto t = oracle_agent(PrivilegedAccess{}, *env, "sneaker");
    EXPECT_EQ(t.reward(), 1.0);
    auto names = std::vector<std::string>{};
    for (const auto& s : t.steps) names.push_back(s.action.str());
    EXPECT_EQ(names.back(), "click[Buy]");
    EXPECT_NE(std::find(names.begin(), names.end(), "click[red]"), names.end());
    EXPECT_NE(std::find(names.begin(), names.end(), "click[9]"), names.end());
}

TEST(Oracle, CapSkipsItems) {
    auto env = fixtures::tiny_env();
    OracleConfig cfg;
    cfg.max_combos_per_item = 3;  // P1 has 4 combinations
    auto r = choice_oracle(PrivilegedAccess{}, *env, "sneaker", "stride canvas sneaker", cfg);
    EXPECT_GE(r.skipped_items, 1u);
    EXPECT_NE(r.product_id, std::optional<std::string>("P1"));
}

TEST(Stats, HandCountedScript) {
    auto env = fixtures::tiny_env();
    std::vector<Action> script;
    for (const char* a : {"search[sneaker]", "click[Stride Canvas Sneaker]", "click[Description]", "click[Previous]",
                          "click[Back to Search]", "search[sneaker]", "click[Stride Leather Sneaker]",
                          "click[Back to Search]", "search[sneaker]", "click[Stride Canvas Sneaker]", "click[Buy]"})
        script.push_back(parse_action(a));
    auto t = play_script(*env, "sneaker", script);
    EXPECT_FALSE(t.truncated);
    EXPECT_EQ(t.stats.states, 11u);
    EXPECT_EQ(t.stats.unique_items, 2u);
    EXPECT_EQ(t.stats.searches, 3u);
    for (std::size_t i = 0; i + 1 < t.steps.size(); ++i) EXPECT_EQ(t.steps[i].reward, 0.0);
}

TEST(Stats, ScriptStopsOnIllegalActionAndHorizon) {
    auto env = fixtures::tiny_env();
    auto t = play_script(*env, "sneaker", {Action::search("lamp"), Action::click("Nope"), Action::click("Buy")});
    EXPECT_TRUE(t.truncated);
    EXPECT_EQ(t.steps.size(), 1u);
    auto h = play_script(*env, "sneaker",
                         {Action::search("lamp"), Action::click("Back to Search"), Action::search("lamp")}, 2);
    EXPECT_EQ(h.steps.size(), 2u);
}

TEST(PolicyEpisode, GreedyZeroPicksFirstAction) {
    auto env = fixtures::tiny_env();
    CrossAttentionScorer zero(8, 64);
    auto t = run_policy_episode(zero, *env, "sneaker", PolicyMode::kGreedy, 4, 1);
    ASSERT_EQ(t.steps.size(), 4u);
    const std::string& instr = env->goal("sneaker").instruction_text;
    EXPECT_EQ(t.steps[0].action, Action::search(query_generate(instr, 0)));
    EXPECT_EQ(t.steps[1].action, Action::click("Back to Search"));
    EXPECT_TRUE(t.steps[1].policy_choice);
    EXPECT_FALSE(t.steps[0].policy_choice);
    EXPECT_EQ(t.steps[2].action, Action::search(query_generate(instr, 1)));
    EXPECT_TRUE(t.truncated);
    EXPECT_THROW(run_policy_episode(zero, *env, "sneaker", PolicyMode::kGreedy, 0, 1), Error);
}

TEST(PolicyEpisode, SeededSamplingIsReproducible) {
    auto env = fixtures::synthetic_env(80, 10, 8);
    auto s = CrossAttentionScorer::fan_in_init(16, 512, 2);
    for (const auto& g : env->goals()) {
        auto a = run_policy_episode(s, *env, g.goal_id, PolicyMode::kSample, 20, 77);
        auto b = run_policy_episode(s, *env, g.goal_id, PolicyMode::kSample, 20, 77);
        ASSERT_EQ(a.steps.size(), b.steps.size());
        for (std::size_t i = 0; i < a.steps.size(); ++i) EXPECT_EQ(a.steps[i].action, b.steps[i].action);
        EXPECT_EQ(a.final_reward, b.final_reward);
        EXPECT_LE(a.steps.size(), 20u);
    }
}

TEST(PolicyInputs, TokensCarryPageAndSelection) {
    auto env = fixtures::tiny_env();
    Session session(*env, "sneaker");
    session.step(Action::search("sneaker"));
    auto results = candidate_tokens(session.observation());
    ASSERT_EQ(results.size(), session.observation().actions.size());
    EXPECT_EQ(results[0], (std::vector<std::string>{"back", "to", "search"}));
    EXPECT_EQ(results[1].back(), "<result:0>");
    session.step(Action::click("Stride Canvas Sneaker"));
    session.step(Action::click("red"));
    auto obs_tokens = observation_tokens(session.observation());
    EXPECT_EQ(std::count(obs_tokens.begin(), obs_tokens.end(), "<page:item>"), 1);
    EXPECT_EQ(std::count(obs_tokens.begin(), obs_tokens.end(), "<selected>"), 1);
    auto item = candidate_tokens(session.observation());
    const auto& acts = session.observation().actions;
    for (std::size_t k = 0; k < acts.size(); ++k) {
        const bool chosen = std::count(item[k].begin(), item[k].end(), "<chosen>") > 0;
        EXPECT_EQ(chosen, acts[k].argument == "red") << acts[k].str();
    }
    EXPECT_EQ(action_tokens(Action::search("")), std::vector<std::string>{"<search>"});
}

// Toy catalog: 20 products, at most 2 values per option group. BC warm start
// on oracle demos, then 2000 RL episodes; held-out success must clear the
// rule baseline by 10 points.
TEST(Reinforce, ToyCatalogBeatsRuleBaseline) {
    SyntheticCatalogConfig cc;
    cc.n_products = 20;
    cc.max_options_per_group = 2;
    auto catalog = std::make_shared<const Catalog>(generate_synthetic_catalog(cc, 31));
    auto index = std::make_shared<const SearchIndex>(build_index(*catalog));
    auto goals = generate_goals(*catalog, 100, 32);
    std::vector<std::string> eval_ids, train_ids;
    for (const auto& g : goals) eval_ids.push_back(g.goal_id);
    for (auto& g : generate_goals(*catalog, 200, 33)) {
        g.goal_id = "train-" + g.goal_id;
        train_ids.push_back(g.goal_id);
        goals.push_back(std::move(g));
    }
    const Environment env(catalog, index, std::move(goals));

    auto scorer = CrossAttentionScorer::fan_in_init(32, 4096, 34);
    BcTrainConfig bc;
    bc.seed = 35;
    const std::vector<std::string> demo_ids(train_ids.begin(), train_ids.begin() + 50);
    train_behavior_cloning(scorer, oracle_demonstrations(env, scorer, demo_ids), bc);
    RlTrainConfig rl;
    rl.episodes = 2000;
    rl.seed = 36;
    train_reinforce(scorer, env, train_ids, rl);

    EvalConfig ec;
    ec.episodes = eval_ids.size();
    ec.seed = 37;
    ec.agent = AgentKind::kRule;
    const double rule_sr = run_eval(env, eval_ids, ec).report.success_rate;
    ec.agent = AgentKind::kPolicy;
    ec.policy = scorer;
    const double rl_sr = run_eval(env, eval_ids, ec).report.success_rate;
    std::printf("toy success: rule %.2f, bc+rl %.2f\n", rule_sr, rl_sr);
    EXPECT_GE(rl_sr, rule_sr + 0.10);
}
