#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "webshop/catalog.hpp"

namespace webshop {

struct Goal;

/// Non-negative exact fraction, always stored reduced.
class Rational {
public:
    constexpr Rational() = default;
    Rational(std::int64_t num, std::int64_t den);

    std::int64_t num() const { return num_; }
    std::int64_t den() const { return den_; }
    double to_double() const { return static_cast<double>(num_) / static_cast<double>(den_); }
    bool is_one() const { return num_ == den_; }
    bool is_zero() const { return num_ == 0; }

    friend Rational operator*(Rational a, Rational b);
    friend Rational operator+(Rational a, Rational b);
    friend bool operator==(const Rational&, const Rational&) = default;
    friend std::strong_ordering operator<=>(const Rational& a, const Rational& b);

private:
    std::int64_t num_ = 0;
    std::int64_t den_ = 1;
};

/// The four multipliers a type check can produce.
enum class TypeTier { kZero, kTenth, kHalf, kOne };

Rational tier_value(TypeTier tier);

/// How the 0.5 tier reads. kCategoryMismatch (default) awards 0.5 when the
/// titles overlap above 0.2 while the category chains differ; kAsPrinted
/// awards it when they overlap and the categories agree, which sends a
/// product matched against itself to 0.5.
enum class TypeRule { kCategoryMismatch, kAsPrinted };

/// Title tokens kept for the type check: lowercase, minus a function-word
/// stoplist and pure numbers. Falls back to all tokens when the filter
/// would leave nothing.
std::vector<std::string> title_nouns(const std::string& title);

double text_match(const std::vector<std::string>& chosen_tokens,
                  const std::vector<std::string>& target_tokens);

TypeTier type_reward(const Product& chosen, const Product& target,
                     TypeRule rule = TypeRule::kCategoryMismatch);

struct RewardBreakdown {
    Rational r;
    std::size_t att_matched = 0;
    std::size_t att_total = 0;
    std::size_t opt_matched = 0;
    std::size_t opt_total = 0;
    bool price_ok = false;
    TypeTier type = TypeTier::kZero;

    double att_score() const;
    /// Empty when the goal has no options.
    std::optional<double> opt_score() const;
    double price_score() const { return price_ok ? 1.0 : 0.0; }
    double type_score() const { return tier_value(type).to_double(); }

    /// Re-derives r from the stored counts.
    Rational recombine() const;

    friend bool operator==(const RewardBreakdown&, const RewardBreakdown&) = default;
};

using SelectedOptions = std::map<std::string, std::string>;

RewardBreakdown compute_reward(const Goal& goal, const Product& chosen,
                               const SelectedOptions& selected, const Catalog& catalog,
                               TypeRule rule = TypeRule::kCategoryMismatch);

/// What an episode did, counted the way the evaluation table counts it.
struct TrajectoryStats {
    std::size_t states = 0;        // actions taken
    std::size_t unique_items = 0;  // distinct products whose item page was opened
    std::size_t searches = 0;
    friend bool operator==(const TrajectoryStats&, const TrajectoryStats&) = default;
};

struct EpisodeOutcome {
    RewardBreakdown reward;
    TrajectoryStats stats;
};

struct StatSummary {
    double mean = 0.0;
    std::size_t min = 0;
    std::size_t max = 0;
};

struct MetricsReport {
    std::size_t episodes = 0;
    double score = 0.0;         // 100 x mean reward
    double success_rate = 0.0;  // fraction in [0, 1]
    double att = 0.0;
    double opt = 0.0;           // mean over episodes whose goal has options
    std::size_t opt_episodes = 0;
    double price = 0.0;
    double type = 0.0;
    StatSummary states;
    StatSummary items;
    StatSummary searches;

    std::string to_text() const;
    std::string to_json() const;
};

MetricsReport aggregate_metrics(const std::vector<EpisodeOutcome>& episodes);

}  // namespace webshop
