#include "webshop/agents.hpp"

#include <algorithm>
#include <limits>
#include <map>
#include <regex>
#include <set>

#include "webshop/error.hpp"
#include "webshop/rng.hpp"
#include "webshop/text.hpp"

namespace webshop {

RewardBreakdown Trajectory::scored_reward(const Goal& goal) const {
    if (final_reward) return *final_reward;
    RewardBreakdown zero;
    zero.att_total = goal.u_att.size();
    zero.opt_total = goal.u_opt.size();
    zero.r = Rational(0, 1);
    return zero;
}

TrajectoryStats compute_stats(const std::vector<SessionState>& states) {
    TrajectoryStats s;
    if (states.empty()) return s;
    std::set<std::string> items;
    for (std::size_t t = 1; t < states.size(); ++t) {
        const SessionState& prev = states[t - 1];
        const SessionState& cur = states[t];
        if (prev.page == Page::kSearch && cur.page == Page::kResults) ++s.searches;
        if (prev.page == Page::kResults && cur.page == Page::kItem) items.insert(*cur.focused_product_id);
    }
    s.states = states.size() - 1;
    s.unique_items = items.size();
    return s;
}

namespace {

/// Records states and steps for one episode.
class EpisodeRecorder {
public:
    EpisodeRecorder(const Environment& env, const std::string& goal_id) : env_(env) {
        auto [state, obs] = reset(env, goal_id);
        traj_.goal_id = goal_id;
        states_.push_back(std::move(state));
        obs_ = std::move(obs);
    }

    const SessionState& state() const { return states_.back(); }
    const Observation& observation() const { return obs_; }
    bool done() const { return state().page == Page::kDone; }

    void apply(const Action& action, bool policy_choice) {
        StepResult r = step(state(), action, env_);
        traj_.steps.push_back({obs_, action, r.reward, policy_choice});
        if (r.breakdown) traj_.final_reward = r.breakdown;
        obs_ = std::move(r.observation);
        states_.push_back(std::move(r.state));
    }

    Trajectory finish() {
        traj_.truncated = !done();
        traj_.final_page = state().page;
        traj_.stats = compute_stats(states_);
        return std::move(traj_);
    }

private:
    const Environment& env_;
    Trajectory traj_;
    std::vector<SessionState> states_;
    Observation obs_;
};

}  // namespace

Trajectory play_script(const Environment& env, const std::string& goal_id, const std::vector<Action>& actions,
                       std::size_t horizon) {
    EpisodeRecorder rec(env, goal_id);
    for (const auto& a : actions) {
        if (rec.done() || rec.state().step_count >= horizon) break;
        try {
            rec.apply(a, false);
        } catch (const Error& e) {
            if (e.code() != ErrorCode::kIllegalAction) throw;
            break;
        }
    }
    return rec.finish();
}

Trajectory rule_agent(const Environment& env, const std::string& goal_id) {
    EpisodeRecorder rec(env, goal_id);
    rec.apply(Action::search(env.goal(goal_id).instruction_text), false);
    const auto& results = *rec.state().results;
    if (!results.empty()) {
        rec.apply(Action::click(env.catalog().find(results.front())->title), false);
        rec.apply(Action::click(std::string(buttons::kBuy)), false);
    }
    return rec.finish();
}

// ---------------------------------------------------------------------------
// Query reformulation

namespace {

const std::set<std::string>& query_stopwords() {
    static const std::set<std::string> words = {
        "i",    "im",   "am",   "is",   "are",   "a",    "an",    "the",  "that", "this",  "it",    "its",
        "want", "need", "would", "like", "looking", "look", "find",  "me",   "my",   "get",   "buy",   "please",
        "can",  "could", "you",  "for",  "with",  "and",  "or",    "in",   "of",   "to",    "be",    "some",
        "have", "has",  "should", "must", "also", "which", "will",  "do",   "does", "any",   "on",    "at",
    };
    return words;
}

std::string drop_price_clause(const std::string& text) {
    static const std::regex price(R"(,?\s*(and\s+)?price\s+lower\s+than\s+[0-9]+(\.[0-9]+)?\s+dollars)",
                                  std::regex::icase);
    return std::regex_replace(text, price, "");
}

std::string drop_stopwords(const std::string& text) {
    std::vector<std::string> kept;
    for (auto& t : tokenize(text))
        if (!query_stopwords().count(t)) kept.push_back(t);
    return join(kept, " ");
}

std::string abbreviate_measurements(const std::string& text) {
    static const std::map<std::string, std::string> units = {
        {"inch", ""},   {"inches", ""}, {"width", "w"},   {"wide", "w"},   {"height", "h"},  {"high", "h"},
        {"ounce", "oz"}, {"ounces", "oz"}, {"feet", "ft"}, {"foot", "ft"}, {"pounds", "lb"}, {"pound", "lb"},
    };
    std::vector<std::string> kept;
    for (auto& t : tokenize(text)) {
        auto it = units.find(t);
        if (it == units.end())
            kept.push_back(t);
        else if (!it->second.empty())
            kept.push_back(it->second);
    }
    return join(kept, " ");
}

std::string keep_descriptive(const std::string& text) {
    std::vector<std::string> kept;
    for (auto& t : tokenize(text))
        if (!is_numeric_token(t) && t.size() > 1) kept.push_back(t);
    return join(kept, " ");
}

using Rule = std::string (*)(const std::string&);
constexpr Rule kRules[] = {drop_price_clause, drop_stopwords, abbreviate_measurements, keep_descriptive};

}  // namespace

std::size_t query_rule_count() { return std::size(kRules); }

std::string query_generate(std::string_view instruction, std::size_t attempt) {
    std::string query(instruction);
    if (attempt == 0) return query;
    const std::size_t n = query_rule_count();
    const std::size_t last = (attempt - 1) % n;
    for (std::size_t k = 0; k <= last; ++k) query = kRules[k](query);
    return query;
}

// ---------------------------------------------------------------------------
// Choice oracle

namespace {

struct ItemBest {
    bool evaluated = false;
    bool skipped = false;
    SelectedOptions options;
    RewardBreakdown reward;
    std::size_t evaluations = 0;
};

ItemBest best_for_item(const Environment& env, const Goal& goal, const Product& p, const OracleConfig& config) {
    ItemBest best;
    std::vector<const std::pair<std::string, std::vector<std::string>>*> groups;
    std::size_t combos = 1;
    for (const auto& g : p.option_groups) {
        if (g.second.empty()) continue;
        groups.push_back(&g);
        combos = std::min(combos * g.second.size(), config.max_combos_per_item + 1);
    }
    if (combos > config.max_combos_per_item) {
        best.skipped = true;
        return best;
    }
    std::vector<std::size_t> odometer(groups.size(), 0);
    for (std::size_t c = 0; c < combos; ++c) {
        SelectedOptions selected;
        for (std::size_t g = 0; g < groups.size(); ++g) selected[groups[g]->first] = groups[g]->second[odometer[g]];
        RewardBreakdown r = compute_reward(goal, p, selected, env.catalog(), env.type_rule());
        ++best.evaluations;
        if (!best.evaluated || r.r > best.reward.r || (r.r == best.reward.r && selected < best.options)) {
            best.evaluated = true;
            best.reward = r;
            best.options = std::move(selected);
        }
        for (std::size_t g = groups.size(); g-- > 0;) {
            if (++odometer[g] < groups[g]->second.size()) break;
            odometer[g] = 0;
        }
    }
    return best;
}

OracleResult reduce(const std::vector<std::string>& results, std::vector<ItemBest>& per_item, const Goal& goal) {
    OracleResult out;
    out.reward.att_total = goal.u_att.size();
    out.reward.opt_total = goal.u_opt.size();
    for (std::size_t k = 0; k < per_item.size(); ++k) {
        ItemBest& b = per_item[k];
        out.evaluated += b.evaluations;
        if (b.skipped) ++out.skipped_items;
        if (!b.evaluated) continue;
        if (!out.product_id || b.reward.r > out.reward.r) {
            out.product_id = results[k];
            out.rank = k;
            out.options = std::move(b.options);
            out.reward = b.reward;
        }
    }
    return out;
}

}  // namespace

OracleResult choice_oracle(PrivilegedAccess, const Environment& env, const std::string& goal_id,
                           std::string_view query, const OracleConfig& config) {
    const Goal& goal = env.goal(goal_id);
    const auto results = env.retrieve(query);
    std::vector<ItemBest> per_item;
    per_item.reserve(results.size());
    for (const auto& id : results) per_item.push_back(best_for_item(env, goal, *env.catalog().find(id), config));
    return reduce(results, per_item, goal);
}

OracleResult choice_oracle_parallel(PrivilegedAccess, const Environment& env, const std::string& goal_id,
                                    std::string_view query, const OracleConfig& config) {
    const Goal& goal = env.goal(goal_id);
    const auto results = env.retrieve(query);
    std::vector<ItemBest> per_item(results.size());
    const auto n = static_cast<std::int64_t>(results.size());
#pragma omp parallel for schedule(dynamic)
    for (std::int64_t k = 0; k < n; ++k) {
        const auto i = static_cast<std::size_t>(k);
        per_item[i] = best_for_item(env, goal, *env.catalog().find(results[i]), config);
    }
    return reduce(results, per_item, goal);
}

std::vector<Action> oracle_script(const Environment& env, std::string_view query, const OracleResult& choice) {
    std::vector<Action> script{Action::search(std::string(query))};
    if (!choice.product_id) return script;
    for (std::size_t p = 0; p < choice.rank / kResultsPerPage; ++p)
        script.push_back(Action::click(std::string(buttons::kNextPage)));
    const Product& product = *env.catalog().find(*choice.product_id);
    script.push_back(Action::click(product.title));
    // option clicks in page order
    for (const auto& [field, values] : product.option_groups) {
        auto it = choice.options.find(field);
        if (it != choice.options.end()) script.push_back(Action::click(it->second));
    }
    script.push_back(Action::click(std::string(buttons::kBuy)));
    return script;
}

Trajectory oracle_agent(PrivilegedAccess access, const Environment& env, const std::string& goal_id,
                        const OracleConfig& config) {
    const std::string query = query_generate(env.goal(goal_id).instruction_text, 0);
    OracleResult choice = choice_oracle_parallel(access, env, goal_id, query, config);
    return play_script(env, goal_id, oracle_script(env, query, choice), std::numeric_limits<std::size_t>::max());
}

// ---------------------------------------------------------------------------
// Learned policy

std::vector<std::string> observation_tokens(const Observation& observation) {
    std::vector<std::string> tokens = tokenize(observation.instruction_text);
    tokens.push_back(std::string("<page:") + to_string(observation.page) + ">");
    for (std::size_t k = 0; k < observation.selected_options.size(); ++k) tokens.emplace_back("<selected>");
    return tokens;
}

std::vector<std::string> action_tokens(const Action& action) {
    std::vector<std::string> tokens;
    if (action.kind == ActionKind::kSearch) tokens.emplace_back("<search>");
    for (auto& t : tokenize(action.argument)) tokens.push_back(std::move(t));
    if (tokens.empty()) tokens.emplace_back("<empty>");
    return tokens;
}

std::vector<std::vector<std::string>> candidate_tokens(const Observation& observation) {
    std::vector<std::vector<std::string>> out;
    std::size_t result_slot = 0;
    for (const auto& a : observation.actions) {
        auto tokens = action_tokens(a);
        const bool content = a.kind == ActionKind::kClick && !is_navigation_label(a.argument);
        if (content && observation.page == Page::kResults) {
            tokens.push_back("<result:" + std::to_string(result_slot++) + ">");
        } else if (content && observation.page == Page::kItem) {
            tokens.emplace_back("<option>");
            for (const auto& [field, value] : observation.selected_options)
                if (value == a.argument) tokens.emplace_back("<chosen>");
        }
        out.push_back(std::move(tokens));
    }
    return out;
}

Trajectory run_policy_episode(const CrossAttentionScorer& scorer, const Environment& env, const std::string& goal_id,
                              PolicyMode mode, std::size_t horizon, std::uint64_t seed) {
    if (horizon < 1) throw Error(ErrorCode::kInvalidArgument, "horizon must be >= 1");
    Rng rng(seed);
    EpisodeRecorder rec(env, goal_id);
    std::size_t searches = 0;
    while (!rec.done() && rec.state().step_count < horizon) {
        const Observation& obs = rec.observation();
        if (obs.page == Page::kSearch) {
            rec.apply(Action::search(query_generate(obs.instruction_text, searches++)), false);
            continue;
        }
        const TokenIds obs_ids = scorer.token_ids(observation_tokens(obs));
        std::vector<TokenIds> candidates;
        for (const auto& tokens : candidate_tokens(obs)) candidates.push_back(scorer.token_ids(tokens));
        const auto dist = policy_distribution(scorer, obs_ids, candidates);
        std::size_t pick = 0;
        if (mode == PolicyMode::kGreedy) {
            pick = static_cast<std::size_t>(std::max_element(dist.probs.begin(), dist.probs.end()) - dist.probs.begin());
        } else {
            const double u = rng.uniform01();
            double acc = 0.0;
            pick = dist.probs.size() - 1;
            for (std::size_t k = 0; k < dist.probs.size(); ++k) {
                acc += dist.probs[k];
                if (u < acc) {
                    pick = k;
                    break;
                }
            }
        }
        rec.apply(obs.actions[pick], true);
    }
    return rec.finish();
}

}  // namespace webshop
