#include "webshop/session.hpp"

#include <algorithm>

#include "webshop/error.hpp"
#include "webshop/text.hpp"

namespace webshop {

const char* to_string(Page page) {
    switch (page) {
        case Page::kSearch: return "search";
        case Page::kResults: return "results";
        case Page::kItem: return "item";
        case Page::kItemDetail: return "item_detail";
        case Page::kDone: return "done";
    }
    return "unknown";
}

Page page_from_string(std::string_view name) {
    for (Page p : {Page::kSearch, Page::kResults, Page::kItem, Page::kItemDetail, Page::kDone})
        if (name == to_string(p)) return p;
    throw Error(ErrorCode::kMalformedRecord, "unknown page '" + std::string(name) + "'");
}

std::string Action::str() const {
    return (kind == ActionKind::kSearch ? "search[" : "click[") + argument + "]";
}

Action parse_action(std::string_view text) {
    auto fail = [&] { return Error(ErrorCode::kUnparsableAction, "cannot parse action '" + std::string(text) + "'"); };
    auto open = text.find('[');
    if (open == std::string_view::npos || text.empty() || text.back() != ']') throw fail();
    std::string_view verb = text.substr(0, open);
    std::string argument(text.substr(open + 1, text.size() - open - 2));
    if (verb == "search") return Action::search(std::move(argument));
    if (verb == "click" || verb == "choose") return Action::click(std::move(argument));
    throw fail();
}

bool is_navigation_label(std::string_view label) {
    const std::string lower = to_lower(label);
    for (auto nav : {buttons::kBackToSearch, buttons::kPrevPage, buttons::kNextPage, buttons::kDescription,
                     buttons::kOverview, buttons::kPrevious, buttons::kBuy})
        if (lower == to_lower(nav)) return true;
    return false;
}

// ---------------------------------------------------------------------------

Environment::Environment(std::shared_ptr<const Catalog> catalog, std::shared_ptr<const SearchIndex> index,
                         std::vector<Goal> goals, TypeRule type_rule)
    : catalog_(std::move(catalog)), index_(std::move(index)), goals_(std::move(goals)), type_rule_(type_rule) {
    if (!catalog_ || !index_) throw Error(ErrorCode::kInvalidArgument, "environment needs a catalog and an index");
    if (index_->doc_count() != catalog_->size())
        throw Error(ErrorCode::kInvalidArgument, "index does not match the catalog");
    for (std::size_t i = 0; i < goals_.size(); ++i) {
        validate_goal(goals_[i], *catalog_);
        if (!goal_by_id_.emplace(goals_[i].goal_id, i).second)
            throw Error(ErrorCode::kDuplicateId, "duplicate goal id " + goals_[i].goal_id);
    }
}

const Goal* Environment::find_goal(const std::string& goal_id) const {
    auto it = goal_by_id_.find(goal_id);
    return it == goal_by_id_.end() ? nullptr : &goals_[it->second];
}

const Goal& Environment::goal(const std::string& goal_id) const {
    const Goal* g = find_goal(goal_id);
    if (!g) throw Error(ErrorCode::kNotFound, "unknown goal " + goal_id);
    return *g;
}

std::vector<std::string> Environment::retrieve(std::string_view query) const {
    return search(*index_, *catalog_, query);
}

// ---------------------------------------------------------------------------

namespace {

enum class Button { kSearch, kBackToSearch, kPrevPage, kNextPage, kTitle, kOption, kDescription, kOverview,
                    kPrevious, kBuy };

struct Resolved {
    Button button;
    std::string product_id;  // kTitle
    std::string field;       // kOption
    std::string value;       // kOption
};

std::vector<Resolved> page_buttons(const SessionState& state, const Catalog& catalog) {
    std::vector<Resolved> out;
    switch (state.page) {
        case Page::kSearch:
            out.push_back({Button::kSearch, {}, {}, {}});
            break;
        case Page::kResults: {
            out.push_back({Button::kBackToSearch, {}, {}, {}});
            const auto& results = *state.results;
            if (state.result_page_index > 1) out.push_back({Button::kPrevPage, {}, {}, {}});
            if (state.result_page_index < page_count(results.size())) out.push_back({Button::kNextPage, {}, {}, {}});
            const std::size_t begin = (state.result_page_index - 1) * kResultsPerPage;
            const std::size_t end = std::min(begin + kResultsPerPage, std::min(results.size(), kMaxRetrieved));
            for (std::size_t i = begin; i < end; ++i) out.push_back({Button::kTitle, results[i], {}, {}});
            break;
        }
        case Page::kItem: {
            out.push_back({Button::kBackToSearch, {}, {}, {}});
            out.push_back({Button::kDescription, {}, {}, {}});
            out.push_back({Button::kOverview, {}, {}, {}});
            out.push_back({Button::kBuy, {}, {}, {}});
            const Product* p = catalog.find(*state.focused_product_id);
            for (const auto& [field, values] : p->option_groups)
                for (const auto& v : values) out.push_back({Button::kOption, {}, field, v});
            break;
        }
        case Page::kItemDetail:
            out.push_back({Button::kBackToSearch, {}, {}, {}});
            out.push_back({Button::kPrevious, {}, {}, {}});
            break;
        case Page::kDone:
            break;
    }
    return out;
}

std::string label_of(const Resolved& b, const Catalog& catalog) {
    switch (b.button) {
        case Button::kSearch: return "";
        case Button::kBackToSearch: return std::string(buttons::kBackToSearch);
        case Button::kPrevPage: return std::string(buttons::kPrevPage);
        case Button::kNextPage: return std::string(buttons::kNextPage);
        case Button::kTitle: return catalog.find(b.product_id)->title;
        case Button::kOption: return b.value;
        case Button::kDescription: return std::string(buttons::kDescription);
        case Button::kOverview: return std::string(buttons::kOverview);
        case Button::kPrevious: return std::string(buttons::kPrevious);
        case Button::kBuy: return std::string(buttons::kBuy);
    }
    return "";
}

bool is_content(Button b) { return b == Button::kTitle || b == Button::kOption; }

/// First button matching the action: navigation labels compare
/// case-insensitively, titles and option values exactly.
const Resolved* resolve(const std::vector<Resolved>& available, const Action& action, const Catalog& catalog) {
    for (const auto& b : available) {
        if (b.button == Button::kSearch) {
            if (action.kind == ActionKind::kSearch) return &b;
            continue;
        }
        if (action.kind != ActionKind::kClick) continue;
        const std::string label = label_of(b, catalog);
        if (is_content(b.button) ? label == action.argument : to_lower(label) == to_lower(action.argument)) return &b;
    }
    return nullptr;
}

}  // namespace

std::vector<Action> available_actions(const SessionState& state, const Catalog& catalog) {
    if (state.page == Page::kDone) throw Error(ErrorCode::kEpisodeDone, "episode is over");
    std::vector<Action> actions;
    for (const auto& b : page_buttons(state, catalog)) {
        Action a = b.button == Button::kSearch ? Action::search("") : Action::click(label_of(b, catalog));
        // duplicate labels resolve to the first button, so list them once
        if (std::find(actions.begin(), actions.end(), a) == actions.end()) actions.push_back(std::move(a));
    }
    return actions;
}

std::pair<SessionState, Observation> reset(const Environment& env, const std::string& goal_id) {
    const Goal& goal = env.goal(goal_id);
    if (!env.catalog().find(goal.target_product_id))
        throw Error(ErrorCode::kNotFound, "goal targets unknown product " + goal.target_product_id);
    SessionState state;
    state.goal_id = goal_id;
    Observation obs = observe(state, env);
    return {std::move(state), std::move(obs)};
}

StepResult step(const SessionState& state, const Action& action, const Environment& env) {
    if (state.page == Page::kDone) throw Error(ErrorCode::kEpisodeDone, "episode is over");
    const Catalog& catalog = env.catalog();
    const auto available = page_buttons(state, catalog);
    const Resolved* hit = resolve(available, action, catalog);
    if (!hit)
        throw Error(ErrorCode::kIllegalAction,
                    "action " + action.str() + " is not available on the " + to_string(state.page) + " page");

    StepResult result;
    SessionState& next = result.state;
    next = state;
    auto clear_item = [&] {
        next.focused_product_id.reset();
        next.selected_options.clear();
        next.detail_tab.reset();
    };
    switch (hit->button) {
        case Button::kSearch:
            next.last_query = action.argument;
            next.results = env.retrieve(action.argument);
            next.result_page_index = 1;
            next.page = Page::kResults;
            clear_item();
            break;
        case Button::kBackToSearch:
            next.results.reset();
            next.result_page_index = 1;
            next.page = Page::kSearch;
            clear_item();
            break;
        case Button::kPrevPage:
            --next.result_page_index;
            break;
        case Button::kNextPage:
            ++next.result_page_index;
            break;
        case Button::kTitle:
            clear_item();
            next.focused_product_id = hit->product_id;
            next.page = Page::kItem;
            break;
        case Button::kOption:
            next.selected_options[hit->field] = hit->value;
            break;
        case Button::kDescription:
        case Button::kOverview:
            next.detail_tab = hit->button == Button::kDescription ? DetailTab::kDescription : DetailTab::kOverview;
            next.page = Page::kItemDetail;
            break;
        case Button::kPrevious:
            next.detail_tab.reset();
            next.page = Page::kItem;
            break;
        case Button::kBuy: {
            const Goal& goal = env.goal(state.goal_id);
            const Product& chosen = *catalog.find(*state.focused_product_id);
            result.breakdown = compute_reward(goal, chosen, state.selected_options, catalog, env.type_rule());
            result.reward = result.breakdown->r.to_double();
            result.done = true;
            next.page = Page::kDone;
            break;
        }
    }
    ++next.step_count;
    next.history.push_back({action, next.page});
    result.observation = observe(next, env);
    return result;
}

// ---------------------------------------------------------------------------

namespace {

std::string button(const std::string& label) { return "[button] " + label + " [/button]"; }

}  // namespace

std::string render_simple(const SessionState& state, const Catalog& catalog, const Goal& goal) {
    std::string out = goal.instruction_text + "\n";
    switch (state.page) {
        case Page::kSearch:
            out += button("search");
            break;
        case Page::kResults: {
            const auto& results = *state.results;
            out += button(std::string(buttons::kBackToSearch)) + "\n";
            out += "Page " + std::to_string(state.result_page_index) + " (Total results: " +
                   std::to_string(std::min(results.size(), kMaxRetrieved)) + ")\n";
            if (state.result_page_index > 1) out += button(std::string(buttons::kPrevPage)) + "\n";
            if (state.result_page_index < page_count(results.size()))
                out += button(std::string(buttons::kNextPage)) + "\n";
            ResultPage page = paginate(results, state.result_page_index, catalog);
            std::size_t rank = (state.result_page_index - 1) * kResultsPerPage;
            for (const auto& e : page.entries)
                out += "[" + std::to_string(++rank) + "] " + button(e.title) + " | $" + e.price.str() + "\n";
            break;
        }
        case Page::kItem: {
            const Product& p = *catalog.find(*state.focused_product_id);
            out += button(std::string(buttons::kBackToSearch)) + "\n";
            out += p.title + "\nPrice: $" + p.price.str() + "\n";
            for (const auto& [field, values] : p.option_groups) {
                out += field + ":";
                auto sel = state.selected_options.find(field);
                for (const auto& v : values) {
                    out += " " + button(v);
                    if (sel != state.selected_options.end() && sel->second == v) out += " (selected)";
                }
                out += "\n";
            }
            out += button(std::string(buttons::kDescription)) + " " + button(std::string(buttons::kOverview)) + " " +
                   button(std::string(buttons::kBuy)) + "\n";
            break;
        }
        case Page::kItemDetail: {
            const Product& p = *catalog.find(*state.focused_product_id);
            out += button(std::string(buttons::kBackToSearch)) + "\n" + button(std::string(buttons::kPrevious)) + "\n";
            out += p.title + "\n";
            if (*state.detail_tab == DetailTab::kDescription)
                out += "Description: " + p.description + "\n";
            else
                out += "Overview: " + p.overview + "\n";
            break;
        }
        case Page::kDone: {
            const Product* p = state.focused_product_id ? catalog.find(*state.focused_product_id) : nullptr;
            out += "Thank you for shopping with us!\n";
            if (p) out += "Purchased: " + p->title + "\n";
            for (const auto& [field, value] : state.selected_options) out += field + ": " + value + "\n";
            break;
        }
    }
    return out;
}

Observation observe(const SessionState& state, const Environment& env) {
    const Goal& goal = env.goal(state.goal_id);
    Observation obs;
    obs.instruction_text = goal.instruction_text;
    obs.page = state.page;
    obs.rendered_text = render_simple(state, env.catalog(), goal);
    if (state.page != Page::kDone) obs.actions = available_actions(state, env.catalog());
    if (state.page == Page::kItem || state.page == Page::kItemDetail) obs.selected_options = state.selected_options;
    return obs;
}

Session::Session(const Environment& env, std::string goal_id) : env_(&env) {
    auto [state, obs] = reset(env, goal_id);
    state_ = std::move(state);
    observation_ = std::move(obs);
}

StepResult Session::step(const Action& action) {
    StepResult r = webshop::step(state_, action, *env_);
    state_ = r.state;
    observation_ = r.observation;
    if (r.breakdown) final_reward_ = r.breakdown;
    return r;
}

}  // namespace webshop
