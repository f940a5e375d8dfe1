#include <gtest/gtest.h>

#include "fixtures.hpp"
#include "webshop/config.hpp"
#include "webshop/error.hpp"
#include "webshop/evaluation.hpp"
#include "webshop/trajectory_log.hpp"

using namespace webshop;

TEST(TrajectoryLog, RecordRoundTrip) {
    auto env = fixtures::synthetic_env(80, 20, 2);
    fixtures::TempDir dir;
    std::vector<TrajectoryRecord> written;
    for (const auto& g : env->goals()) {
        auto rec = to_record(oracle_agent(PrivilegedAccess{}, *env, g.goal_id), "s-" + g.goal_id, "oracle");
        EXPECT_EQ(record_from_json_line(record_to_json_line(rec)), rec);
        append_record(rec, dir / "log.jsonl");
        written.push_back(rec);
    }
    auto truncated = to_record(run_policy_episode(CrossAttentionScorer(4, 16), *env, env->goals()[0].goal_id,
                                                  PolicyMode::kGreedy, 3, 1),
                               "t", "policy");
    EXPECT_TRUE(truncated.truncated);
    EXPECT_FALSE(truncated.reward);
    EXPECT_EQ(record_from_json_line(record_to_json_line(truncated)), truncated);
    EXPECT_EQ(load_records(dir / "log.jsonl"), written);
    EXPECT_THROW(record_from_json_line("{}"), Error);
    EXPECT_THROW(load_records(dir / "nope.jsonl"), Error);
}

TEST(Replay, ReproducesRewardsAndObservations) {
    auto env = fixtures::synthetic_env(100, 30, 3);
    for (const auto& g : env->goals()) {
        auto traj = oracle_agent(PrivilegedAccess{}, *env, g.goal_id);
        auto out = replay_record(*env, to_record(traj, "x", "oracle"));
        ASSERT_TRUE(out.ok) << out.message;
        EXPECT_EQ(out.reward, traj.final_reward);
        ASSERT_EQ(out.observations.size(), traj.steps.size() + 1);
        for (std::size_t t = 0; t < traj.steps.size(); ++t) EXPECT_EQ(out.observations[t], traj.steps[t].observation);
    }
}

TEST(Replay, DetectsTampering) {
    auto env = fixtures::tiny_env();
    auto rec = to_record(oracle_agent(PrivilegedAccess{}, *env, "sneaker"), "x", "oracle");
    auto wrong_page = rec;
    wrong_page.steps[0].page = Page::kItem;
    EXPECT_FALSE(replay_record(*env, wrong_page).ok);
    auto wrong_reward = rec;
    wrong_reward.reward->att_matched = 0;
    EXPECT_FALSE(replay_record(*env, wrong_reward).ok);
    auto illegal = rec;
    illegal.steps[1].action = "click[Nope]";
    auto out = replay_record(*env, illegal);
    EXPECT_FALSE(out.ok);
    EXPECT_FALSE(out.message.empty());
}

TEST(Config, DefaultsAndOverrides) {
    auto c = parse_config("{}");
    EXPECT_EQ(c.agent.dim, 32u);
    EXPECT_EQ(c.server.port, 3000);
    EXPECT_EQ(c.horizon, 100u);
    EXPECT_EQ(c.goals.type_rule, TypeRule::kCategoryMismatch);
    c = parse_config(R"({"search":{"k1":1.5},"goals":{"type_rule":"as_printed"},"rl":{"entropy_sign":-1,
                        "optimizer":"sgd"},"server":{"token":"t"}})");
    EXPECT_EQ(c.bm25.k1, 1.5);
    EXPECT_EQ(c.goals.type_rule, TypeRule::kAsPrinted);
    EXPECT_EQ(c.rl.losses.entropy_sign, -1.0);
    EXPECT_EQ(c.rl.optimizer, OptimizerKind::kSgd);
    EXPECT_EQ(c.server.token, "t");
    auto again = parse_config(config_to_json(c));
    EXPECT_EQ(config_to_json(again), config_to_json(c));
}

TEST(Config, RejectsBadInput) {
    for (const char* bad : {"not json", "[]", R"({"nope":{}})", R"({"agent":{"dimm":3}})", R"({"agent":{"dim":"x"}})",
                            R"({"agent":{"dim":0}})", R"({"rl":{"entropy_sign":0.5}})",
                            R"({"catalog":{"min_price":10,"max_price":5}})", R"({"goals":{"type_rule":"x"}})"}) {
        try {
            parse_config(bad);
            ADD_FAILURE() << bad;
        } catch (const Error& e) {
            EXPECT_EQ(e.code(), ErrorCode::kInvalidArgument) << bad;
        }
    }
    EXPECT_THROW(load_config("/nonexistent/config.json"), Error);
}

TEST(Evaluation, RuleAndOracleMetrics) {
    auto env = fixtures::synthetic_env(100, 40, 4);
    std::vector<std::string> ids;
    for (const auto& g : env->goals()) ids.push_back(g.goal_id);
    EvalConfig ec;
    ec.episodes = 40;
    auto rule = run_eval(*env, ids, ec);
    EXPECT_EQ(rule.report.episodes, 40u);
    EXPECT_EQ(rule.report.opt, 0.0);
    EXPECT_EQ(rule.records.size(), 40u);
    EXPECT_EQ(rule.records[0].actor, "rule");
    ec.agent = AgentKind::kOracle;
    auto oracle = run_eval(*env, ids, ec);
    EXPECT_GE(oracle.report.score, rule.report.score);
    EXPECT_GE(oracle.report.success_rate, 0.8);
    ec.agent = AgentKind::kPolicy;
    EXPECT_THROW(run_eval(*env, ids, ec), Error);
    EXPECT_THROW(run_eval(*env, {}, ec), Error);
    EXPECT_EQ(agent_from_string("oracle"), AgentKind::kOracle);
    EXPECT_THROW(agent_from_string("human"), Error);
}
