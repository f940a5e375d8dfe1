#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "webshop/reward.hpp"
#include "webshop/scorer.hpp"
#include "webshop/session.hpp"

namespace webshop {

struct TrajectoryStep {
    Observation observation;  // observation the action was taken from
    Action action;
    double reward = 0.0;
    bool policy_choice = false;  // chosen by the learned policy (not scripted)
};

struct Trajectory {
    std::string goal_id;
    std::vector<TrajectoryStep> steps;
    std::optional<RewardBreakdown> final_reward;  // empty when truncated
    bool truncated = false;
    Page final_page = Page::kSearch;
    TrajectoryStats stats;

    double reward() const { return final_reward ? final_reward->r.to_double() : 0.0; }
    /// Breakdown used for scoring; a truncated episode scores all zeros.
    RewardBreakdown scored_reward(const Goal& goal) const;
};

/// states[0] is the reset state; every later entry follows one action.
TrajectoryStats compute_stats(const std::vector<SessionState>& states);

/// Applies scripted actions from reset until Buy, the horizon or the first
/// illegal action (which truncates).
Trajectory play_script(const Environment& env, const std::string& goal_id,
                       const std::vector<Action>& actions, std::size_t horizon = 100);

/// Search the instruction, click the first result, buy.
Trajectory rule_agent(const Environment& env, const std::string& goal_id);

/// Number of reformulation rules after the identity (attempt 0).
std::size_t query_rule_count();

/// attempt 0 returns the instruction; attempt k applies reformulation rules
/// 1..k cumulatively. Attempts past the list cycle back.
std::string query_generate(std::string_view instruction, std::size_t attempt);

/// Tag for operations that read hidden attributes and the reward function.
struct PrivilegedAccess {
    explicit PrivilegedAccess() = default;
};

struct OracleConfig {
    std::size_t max_combos_per_item = 10'000;
};

struct OracleResult {
    std::optional<std::string> product_id;
    std::size_t rank = 0;  // 0-based position in the result list
    SelectedOptions options;
    RewardBreakdown reward;
    std::size_t skipped_items = 0;  // items over the combination cap
    std::size_t evaluated = 0;      // reward evaluations performed
};

/// Exhaustive search over retrieved items x option combinations. Ties go to
/// the earlier rank, then the lexicographically smaller option assignment.
OracleResult choice_oracle(PrivilegedAccess, const Environment& env, const std::string& goal_id,
                           std::string_view query, const OracleConfig& config = {});
/// Same search with items scored in parallel (OpenMP); identical result.
OracleResult choice_oracle_parallel(PrivilegedAccess, const Environment& env, const std::string& goal_id,
                                    std::string_view query, const OracleConfig& config = {});

/// Action script that realizes an oracle choice: search, page forward,
/// open the item, select the options, buy.
std::vector<Action> oracle_script(const Environment& env, std::string_view query, const OracleResult& choice);

Trajectory oracle_agent(PrivilegedAccess, const Environment& env, const std::string& goal_id,
                        const OracleConfig& config = {});

/// Scorer input for an observation: instruction tokens, a page marker and a
/// marker per selected option. Button labels are scored on the action side.
std::vector<std::string> observation_tokens(const Observation& observation);
std::vector<std::string> action_tokens(const Action& action);
/// Tokens for every legal action of an observation: the label tokens plus
/// the result slot on Results pages, and an option marker (with a selection
/// marker when currently chosen) on Item pages.
std::vector<std::vector<std::string>> candidate_tokens(const Observation& observation);

enum class PolicyMode { kSample, kGreedy };

Trajectory run_policy_episode(const CrossAttentionScorer& scorer, const Environment& env,
                              const std::string& goal_id, PolicyMode mode, std::size_t horizon,
                              std::uint64_t seed);

}  // namespace webshop
