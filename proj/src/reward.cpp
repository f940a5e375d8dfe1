#include "webshop/reward.hpp"

#include <algorithm>
#include <cstdio>
#include <numeric>
#include <sstream>

#include <nlohmann/json.hpp>

#include "webshop/error.hpp"
#include "webshop/goals.hpp"
#include "webshop/text.hpp"

namespace webshop {

Rational::Rational(std::int64_t num, std::int64_t den) {
    if (den <= 0 || num < 0) throw Error(ErrorCode::kInvalidArgument, "rational must be non-negative with den > 0");
    const std::int64_t g = std::gcd(num, den);
    num_ = num / g;
    den_ = den / g;
}

Rational operator*(Rational a, Rational b) { return Rational(a.num_ * b.num_, a.den_ * b.den_); }

Rational operator+(Rational a, Rational b) {
    return Rational(a.num_ * b.den_ + b.num_ * a.den_, a.den_ * b.den_);
}

std::strong_ordering operator<=>(const Rational& a, const Rational& b) {
    const __int128 lhs = static_cast<__int128>(a.num_) * b.den_;
    const __int128 rhs = static_cast<__int128>(b.num_) * a.den_;
    if (lhs < rhs) return std::strong_ordering::less;
    if (lhs > rhs) return std::strong_ordering::greater;
    return std::strong_ordering::equal;
}

Rational tier_value(TypeTier tier) {
    switch (tier) {
        case TypeTier::kZero: return Rational(0, 1);
        case TypeTier::kTenth: return Rational(1, 10);
        case TypeTier::kHalf: return Rational(1, 2);
        case TypeTier::kOne: return Rational(1, 1);
    }
    return Rational(0, 1);
}

namespace {

const std::set<std::string>& function_words() {
    static const std::set<std::string> words = {
        "a",    "an",   "the",  "and",  "or",   "but",  "nor",   "for",   "with",  "without", "of",
        "in",   "on",   "at",   "to",   "by",   "from", "into",  "onto",  "over",  "under",   "up",
        "down", "as",   "is",   "are",  "was",  "be",   "this",  "that",  "these", "those",   "it",
        "its",  "his",  "her",  "their", "our", "your", "my",    "we",    "you",   "they",    "he",
        "she",  "i",    "me",   "us",   "per",  "via",  "than",  "then",  "so",    "if",      "not",
        "no",   "all",  "any",  "each", "every", "some", "more", "most",  "very",  "too",     "also",
        "s",    "t",    "x",
    };
    return words;
}

}  // namespace

std::vector<std::string> title_nouns(const std::string& title) {
    auto tokens = tokenize(title);
    std::vector<std::string> kept;
    for (auto& t : tokens)
        if (!function_words().count(t) && !is_numeric_token(t)) kept.push_back(t);
    return kept.empty() ? tokens : kept;
}

namespace {

struct Overlap {
    std::size_t shared = 0;
    std::size_t target = 0;  // max(1, |set(target)|)
};

Overlap overlap(const std::vector<std::string>& chosen, const std::vector<std::string>& target) {
    std::set<std::string> c(chosen.begin(), chosen.end());
    std::set<std::string> t(target.begin(), target.end());
    Overlap o;
    for (const auto& w : t) o.shared += c.count(w);
    o.target = std::max<std::size_t>(1, t.size());
    return o;
}

}  // namespace

double text_match(const std::vector<std::string>& chosen_tokens, const std::vector<std::string>& target_tokens) {
    Overlap o = overlap(chosen_tokens, target_tokens);
    return static_cast<double>(o.shared) / static_cast<double>(o.target);
}

TypeTier type_reward(const Product& chosen, const Product& target, TypeRule rule) {
    // Thresholds are compared on the integer ratio shared/target.
    Overlap o = overlap(title_nouns(chosen.title), title_nouns(target.title));
    if (o.shared == 0) return TypeTier::kZero;
    if (o.shared * 10 < o.target) return TypeTier::kTenth;
    const bool categories_agree =
        chosen.category == target.category && chosen.subcategory_chain == target.subcategory_chain;
    const bool above_fifth = o.shared * 5 > o.target;
    const bool half = rule == TypeRule::kAsPrinted ? (above_fifth && categories_agree)
                                                   : (above_fifth && !categories_agree);
    return half ? TypeTier::kHalf : TypeTier::kOne;
}

double RewardBreakdown::att_score() const {
    return att_total ? static_cast<double>(att_matched) / static_cast<double>(att_total) : 0.0;
}

std::optional<double> RewardBreakdown::opt_score() const {
    if (opt_total == 0) return std::nullopt;
    return static_cast<double>(opt_matched) / static_cast<double>(opt_total);
}

Rational RewardBreakdown::recombine() const {
    const auto num = static_cast<std::int64_t>(att_matched + opt_matched + (price_ok ? 1 : 0));
    const auto den = static_cast<std::int64_t>(att_total + opt_total + 1);
    return tier_value(type) * Rational(num, den);
}

RewardBreakdown compute_reward(const Goal& goal, const Product& chosen, const SelectedOptions& selected,
                               const Catalog& catalog, TypeRule rule) {
    const Product* target = catalog.find(goal.target_product_id);
    if (!target) throw Error(ErrorCode::kNotFound, "unknown target product " + goal.target_product_id);
    RewardBreakdown b;
    b.att_total = goal.u_att.size();
    for (const auto& a : goal.u_att) b.att_matched += chosen.attributes.count(a);
    b.opt_total = goal.u_opt.size();
    for (const auto& [field, value] : goal.u_opt) {
        auto it = selected.find(field);
        if (it != selected.end() && it->second == value) ++b.opt_matched;
    }
    b.price_ok = chosen.price <= goal.u_price;
    b.type = type_reward(chosen, *target, rule);
    b.r = b.recombine();
    return b;
}

// ---------------------------------------------------------------------------

namespace {

StatSummary summarize(const std::vector<std::size_t>& values) {
    StatSummary s;
    if (values.empty()) return s;
    s.min = *std::min_element(values.begin(), values.end());
    s.max = *std::max_element(values.begin(), values.end());
    double sum = 0.0;
    for (auto v : values) sum += static_cast<double>(v);
    s.mean = sum / static_cast<double>(values.size());
    return s;
}

}  // namespace

MetricsReport aggregate_metrics(const std::vector<EpisodeOutcome>& episodes) {
    if (episodes.empty()) throw Error(ErrorCode::kInvalidArgument, "no episodes to aggregate");
    MetricsReport m;
    m.episodes = episodes.size();
    double r_sum = 0.0, att = 0.0, opt = 0.0, price = 0.0, type = 0.0;
    std::size_t successes = 0;
    std::vector<std::size_t> states, items, searches;
    for (const auto& e : episodes) {
        r_sum += e.reward.r.to_double();
        successes += e.reward.r.is_one() ? 1 : 0;
        att += e.reward.att_score();
        if (auto o = e.reward.opt_score()) {
            opt += *o;
            ++m.opt_episodes;
        }
        price += e.reward.price_score();
        type += e.reward.type_score();
        states.push_back(e.stats.states);
        items.push_back(e.stats.unique_items);
        searches.push_back(e.stats.searches);
    }
    const double n = static_cast<double>(episodes.size());
    m.score = 100.0 * r_sum / n;
    m.success_rate = static_cast<double>(successes) / n;
    m.att = att / n;
    m.opt = m.opt_episodes ? opt / static_cast<double>(m.opt_episodes) : 0.0;
    m.price = price / n;
    m.type = type / n;
    m.states = summarize(states);
    m.items = summarize(items);
    m.searches = summarize(searches);
    return m;
}

std::string MetricsReport::to_text() const {
    char buf[512];
    std::ostringstream out;
    std::snprintf(buf, sizeof buf, "episodes      %zu\nscore         %.2f\nsuccess rate  %.2f%%\n", episodes, score,
                  100.0 * success_rate);
    out << buf;
    std::snprintf(buf, sizeof buf, "att %.4f  opt %.4f  price %.4f  type %.4f\n", att, opt, price, type);
    out << buf;
    auto line = [&](const char* name, const StatSummary& s) {
        std::snprintf(buf, sizeof buf, "%-8s mean %.2f  min %zu  max %zu\n", name, s.mean, s.min, s.max);
        out << buf;
    };
    line("states", states);
    line("items", items);
    line("searches", searches);
    return out.str();
}

std::string MetricsReport::to_json() const {
    using ojson = nlohmann::ordered_json;
    auto stat = [](const StatSummary& s) { return ojson{{"mean", s.mean}, {"min", s.min}, {"max", s.max}}; };
    ojson j;
    j["episodes"] = episodes;
    j["score"] = score;
    j["success_rate"] = success_rate;
    j["att"] = att;
    j["opt"] = opt;
    j["opt_episodes"] = opt_episodes;
    j["price"] = price;
    j["type"] = type;
    j["states"] = stat(states);
    j["items"] = stat(items);
    j["searches"] = stat(searches);
    return j.dump(2);
}

}  // namespace webshop
