#pragma once

#include <cstddef>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "webshop/catalog.hpp"
#include "webshop/goals.hpp"
#include "webshop/reward.hpp"
#include "webshop/search.hpp"

namespace webshop {

enum class Page { kSearch, kResults, kItem, kItemDetail, kDone };
enum class DetailTab { kDescription, kOverview };

const char* to_string(Page page);
Page page_from_string(std::string_view name);

enum class ActionKind { kSearch, kClick };

struct Action {
    ActionKind kind = ActionKind::kClick;
    std::string argument;

    static Action search(std::string query) { return {ActionKind::kSearch, std::move(query)}; }
    static Action click(std::string label) { return {ActionKind::kClick, std::move(label)}; }

    /// "search[<query>]" or "click[<label>]".
    std::string str() const;

    friend bool operator==(const Action&, const Action&) = default;
};

/// Parses the action grammar; throws Error(kUnparsableAction).
Action parse_action(std::string_view text);

namespace buttons {
inline constexpr std::string_view kBackToSearch = "Back to Search";
inline constexpr std::string_view kPrevPage = "< Prev";
inline constexpr std::string_view kNextPage = "Next >";
inline constexpr std::string_view kDescription = "Description";
inline constexpr std::string_view kOverview = "Overview";
inline constexpr std::string_view kPrevious = "Previous";
inline constexpr std::string_view kBuy = "Buy";
}  // namespace buttons

bool is_navigation_label(std::string_view label);

struct HistoryEntry {
    Action action;
    Page page;  // page reached by the action
    friend bool operator==(const HistoryEntry&, const HistoryEntry&) = default;
};

struct SessionState {
    std::string goal_id;
    Page page = Page::kSearch;
    std::optional<std::string> last_query;
    std::optional<std::vector<std::string>> results;
    std::size_t result_page_index = 1;
    std::optional<std::string> focused_product_id;
    SelectedOptions selected_options;
    std::optional<DetailTab> detail_tab;
    std::vector<HistoryEntry> history;
    std::size_t step_count = 0;

    friend bool operator==(const SessionState&, const SessionState&) = default;
};

struct Observation {
    std::string instruction_text;
    Page page = Page::kSearch;
    std::string rendered_text;
    std::vector<Action> actions;
    /// Options chosen on the current item (empty elsewhere).
    SelectedOptions selected_options;

    friend bool operator==(const Observation&, const Observation&) = default;
};

/// Read-only world shared by every session: catalog, index and goal set.
class Environment {
public:
    Environment(std::shared_ptr<const Catalog> catalog, std::shared_ptr<const SearchIndex> index,
                std::vector<Goal> goals, TypeRule type_rule = TypeRule::kCategoryMismatch);

    const Catalog& catalog() const { return *catalog_; }
    const SearchIndex& index() const { return *index_; }
    const std::vector<Goal>& goals() const { return goals_; }
    const Goal& goal(const std::string& goal_id) const;
    const Goal* find_goal(const std::string& goal_id) const;
    TypeRule type_rule() const { return type_rule_; }

    /// Search results consumed by the Results page (top 50 product ids).
    std::vector<std::string> retrieve(std::string_view query) const;

private:
    std::shared_ptr<const Catalog> catalog_;
    std::shared_ptr<const SearchIndex> index_;
    std::vector<Goal> goals_;
    std::unordered_map<std::string, std::size_t> goal_by_id_;
    TypeRule type_rule_;
};

struct StepResult {
    SessionState state;
    Observation observation;
    double reward = 0.0;
    bool done = false;
    /// Present only on the Buy step.
    std::optional<RewardBreakdown> breakdown;
};

std::pair<SessionState, Observation> reset(const Environment& env, const std::string& goal_id);

/// Throws Error(kEpisodeDone) on the Done page.
std::vector<Action> available_actions(const SessionState& state, const Catalog& catalog);

/// Applies one action. Illegal actions throw Error(kIllegalAction) and the
/// caller's state is untouched.
StepResult step(const SessionState& state, const Action& action, const Environment& env);

std::string render_simple(const SessionState& state, const Catalog& catalog, const Goal& goal);

Observation observe(const SessionState& state, const Environment& env);

/// Mutable single-episode wrapper around the functional API.
class Session {
public:
    Session(const Environment& env, std::string goal_id);

    const SessionState& state() const { return state_; }
    const Observation& observation() const { return observation_; }
    const Goal& goal() const { return env_->goal(state_.goal_id); }
    bool done() const { return state_.page == Page::kDone; }
    const std::optional<RewardBreakdown>& final_reward() const { return final_reward_; }

    StepResult step(const Action& action);

private:
    const Environment* env_;
    SessionState state_;
    Observation observation_;
    std::optional<RewardBreakdown> final_reward_;
};

}  // namespace webshop
