#include <gtest/gtest.h>

#include <algorithm>

#include "fixtures.hpp"
#include "webshop/error.hpp"
#include "webshop/goals.hpp"
#include "webshop/rng.hpp"
#include "webshop/text.hpp"

using namespace webshop;

namespace {

Goal sneaker_goal() {
    Goal g;
    g.goal_id = "g";
    g.target_product_id = "P1";
    g.u_att = {"waterproof"};
    g.u_opt = {{"color", "red"}};
    g.u_price = Price::from_dollars(90.0);
    return g;
}

}  // namespace

TEST(SampleGoal, SingleAttributeProductForcesIt) {
    Catalog catalog({fixtures::product("A", "Solo Mug", 1000, {}, {"dishwasher safe"})});
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        Goal g = sample_goal(catalog, seed);
        EXPECT_EQ(g.target_product_id, "A");
        EXPECT_EQ(g.u_att, std::set<std::string>{"dishwasher safe"});
        EXPECT_TRUE(g.u_opt.empty());
        EXPECT_GT(g.u_price, Price::from_cents(1000));
    }
}

TEST(SampleGoal, Deterministic) {
    auto catalog = fixtures::tiny_catalog();
    for (std::uint64_t seed = 0; seed < 20; ++seed) EXPECT_EQ(sample_goal(*catalog, seed), sample_goal(*catalog, seed));
}

TEST(SampleGoal, InvariantsOverManySamples) {
    auto env = fixtures::synthetic_env(300, 0, 17);
    GoalSamplerConfig cfg;
    std::size_t with_opts = 0;
    for (std::uint64_t seed = 0; seed < 1000; ++seed) {
        Goal g = sample_goal(env->catalog(), mix_seed(5, seed), cfg);
        const Product* p = env->catalog().find(g.target_product_id);
        ASSERT_NE(p, nullptr);
        ASSERT_FALSE(g.u_att.empty());
        EXPECT_LE(g.u_att.size(), cfg.max_att);
        for (const auto& a : g.u_att) EXPECT_TRUE(p->attributes.count(a)) << a;
        EXPECT_LE(g.u_opt.size(), cfg.max_opt);
        for (const auto& [f, v] : g.u_opt) EXPECT_TRUE(p->has_option(f, v)) << f << ":" << v;
        EXPECT_GT(g.u_price, p->price);
        EXPECT_LE(g.u_price.cents(), static_cast<std::int64_t>(p->price.cents() * cfg.markup_max) + 1);
        EXPECT_NO_THROW(validate_goal(g, env->catalog()));
        with_opts += !g.u_opt.empty();
    }
    EXPECT_GT(with_opts, 100u);
}

TEST(SampleGoal, RejectsBadInput) {
    Catalog empty;
    EXPECT_THROW(sample_goal(empty, 1), Error);
    Catalog no_attrs({fixtures::product("A", "Bare Mug", 1000, {}, {})});
    try {
        sample_goal(no_attrs, 1);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::kNotFound);
    }
    GoalSamplerConfig bad;
    bad.markup_min = 1.0;
    EXPECT_THROW(sample_goal(*fixtures::tiny_catalog(), 1, bad), Error);
}

TEST(ValidateGoal, CatchesEachViolation) {
    auto catalog = fixtures::tiny_catalog();
    EXPECT_NO_THROW(validate_goal(sneaker_goal(), *catalog));
    Goal g = sneaker_goal();
    g.u_att = {"dimmable"};
    EXPECT_THROW(validate_goal(g, *catalog), Error);
    g = sneaker_goal();
    g.u_opt = {{"color", "green"}};
    EXPECT_THROW(validate_goal(g, *catalog), Error);
    g = sneaker_goal();
    g.u_price = Price::from_dollars(45.0);
    EXPECT_THROW(validate_goal(g, *catalog), Error);
    g = sneaker_goal();
    g.u_att.clear();
    EXPECT_THROW(validate_goal(g, *catalog), Error);
    g = sneaker_goal();
    g.target_product_id = "nope";
    EXPECT_THROW(validate_goal(g, *catalog), Error);
}

TEST(Render, FillsSlots) {
    auto catalog = fixtures::tiny_catalog();
    auto templates = TemplateSet::parse("i am looking for {attributes} {noun} with {options}, and {price}\n"
                                        "find me {attributes} {noun}, {price}\n");
    EXPECT_EQ(render_instruction(sneaker_goal(), *catalog, templates, 3),
              "i am looking for waterproof sneaker with red color, and price lower than 90 dollars");
    Goal plain = sneaker_goal();
    plain.u_opt.clear();
    std::string text = render_instruction(plain, *catalog, templates, 3);
    EXPECT_EQ(text, "find me waterproof sneaker, price lower than 90 dollars");
    EXPECT_EQ(text.find("color"), std::string::npos);
}

TEST(Render, MultipleAttributesAndOptions) {
    auto catalog = fixtures::tiny_catalog();
    Goal g = sneaker_goal();
    g.u_att = {"lightweight", "waterproof"};
    g.u_opt = {{"color", "blue"}, {"size", "8"}};
    auto templates = TemplateSet::parse("{attributes} {noun} with {options}, {price}\n");
    EXPECT_EQ(render_instruction(g, *catalog, templates, 1),
              "lightweight and waterproof sneaker with blue color and 8 size, price lower than 90 dollars");
}

TEST(Render, UsesParaphrases) {
    auto catalog = fixtures::tiny_catalog();
    auto table = ParaphraseTable::parse("# paraphrases v1\nwaterproof\tgood in rain weather\n");
    Goal g = sneaker_goal();
    g.u_opt.clear();
    auto templates = TemplateSet::parse("find me {attributes} {noun}, {price}\n");
    EXPECT_EQ(render_instruction(g, *catalog, templates, 9, table),
              "find me good in rain weather sneaker, price lower than 90 dollars");
}

TEST(Render, NeedsAMatchingTemplate) {
    auto catalog = fixtures::tiny_catalog();
    auto only_plain = TemplateSet::parse("find me {attributes} {noun}, {price}\n");
    try {
        render_instruction(sneaker_goal(), *catalog, only_plain, 1);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::kInvalidArgument);
    }
}

TEST(Templates, ParseRules) {
    auto set = TemplateSet::parse("# comment\n\n{noun} {attributes} {price}\n{noun} {attributes} {options} {price}\n");
    EXPECT_EQ(set.without_options().size(), 1u);
    EXPECT_EQ(set.with_options().size(), 1u);
    EXPECT_THROW(TemplateSet::parse("{noun} {attributes}\n"), Error);
    EXPECT_THROW(TemplateSet::parse("{noun} {attributes} {price} {colour}\n"), Error);
    EXPECT_THROW(TemplateSet::parse("{noun} {attributes} {price\n"), Error);
    EXPECT_FALSE(TemplateSet::builtin().with_options().empty());
    EXPECT_FALSE(TemplateSet::builtin().without_options().empty());
}

TEST(Paraphrases, RoundTripAndErrors) {
    ParaphraseTable t;
    t.add("waterproof", "good in rain weather");
    t.add("waterproof", "keeps water out");
    auto back = ParaphraseTable::parse(t.serialize());
    ASSERT_NE(back.lookup("waterproof"), nullptr);
    EXPECT_EQ(back.lookup("waterproof")->size(), 2u);
    EXPECT_EQ(back.lookup("dimmable"), nullptr);
    EXPECT_THROW(ParaphraseTable::parse("waterproof\tx\n"), Error);
    EXPECT_THROW(ParaphraseTable::parse("# paraphrases v1\nno tab here\n"), Error);
    EXPECT_THROW(ParaphraseTable::parse("# paraphrases v7\na\tb\n"), Error);
}

TEST(GenerateGoals, InstructionsNeverLeakIds) {
    auto env = fixtures::synthetic_env(200, 0, 3);
    auto goals = generate_goals(env->catalog(), 300, 11);
    ASSERT_EQ(goals.size(), 300u);
    for (std::size_t i = 0; i < goals.size(); ++i) {
        const Goal& g = goals[i];
        EXPECT_EQ(g.goal_id, "g" + std::to_string(i));
        EXPECT_NO_THROW(validate_goal(g, env->catalog()));
        EXPECT_EQ(g.instruction_text.find(g.target_product_id), std::string::npos);
        EXPECT_NE(g.instruction_text.find("price lower than " + g.u_price.str() + " dollars"), std::string::npos);
        for (const auto& [f, v] : g.u_opt) EXPECT_NE(g.instruction_text.find(v + " " + f), std::string::npos);
    }
    EXPECT_EQ(goals, generate_goals(env->catalog(), 300, 11));
}

TEST(Splits, ProportionsAndPartition) {
    auto env = fixtures::synthetic_env(100, 0, 3);
    auto goals = generate_goals(env->catalog(), 200, 4);
    auto s = split_goals(goals, 8);
    EXPECT_EQ(s.train.size(), 170u);
    EXPECT_EQ(s.dev.size(), 20u);
    EXPECT_EQ(s.test.size(), 10u);
    std::vector<std::string> all;
    for (const auto* part : {&s.train, &s.dev, &s.test}) all.insert(all.end(), part->begin(), part->end());
    std::sort(all.begin(), all.end());
    EXPECT_EQ(std::adjacent_find(all.begin(), all.end()), all.end());
    EXPECT_EQ(all.size(), goals.size());
    EXPECT_EQ(split_goals(goals, 8).train, s.train);
    EXPECT_NE(split_goals(goals, 9).train, s.train);
    EXPECT_EQ(&s.get("dev"), &s.dev);
    EXPECT_THROW(s.get("valid"), Error);
}

TEST(GoalIo, RoundTrip) {
    auto env = fixtures::synthetic_env(100, 0, 3);
    auto goals = generate_goals(env->catalog(), 50, 4);
    fixtures::TempDir dir;
    save_goals(goals, dir / "goals.jsonl");
    EXPECT_EQ(load_goals(dir / "goals.jsonl"), goals);
    EXPECT_THROW(goal_from_json_line("{\"goal_id\": 1}"), Error);
    EXPECT_THROW(goal_from_json_line("not json"), Error);
    EXPECT_THROW(load_goals(dir / "missing.jsonl"), Error);
}

TEST(ProductNoun, LastContentToken) {
    EXPECT_EQ(product_noun(fixtures::product("x", "Stride Canvas Sneaker", 100)), "sneaker");
    EXPECT_EQ(product_noun(fixtures::product("x", "Glow Desk Lamp 2", 100)), "lamp");
}
