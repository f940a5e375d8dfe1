#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "webshop/catalog.hpp"

namespace webshop {

struct Goal {
    std::string goal_id;
    std::string target_product_id;
    std::set<std::string> u_att;
    std::map<std::string, std::string> u_opt;
    Price u_price;
    std::string instruction_text;

    friend bool operator==(const Goal&, const Goal&) = default;
};

/// Throws Error(kInvalidArgument / kNotFound) when the goal breaks any
/// invariant against its target product.
void validate_goal(const Goal& goal, const Catalog& catalog);

struct GoalSamplerConfig {
    std::size_t max_att = 3;
    std::size_t max_opt = 2;
    double markup_min = 1.05;
    double markup_max = 1.5;
};

/// Samples a goal without text; render_instruction fills instruction_text.
Goal sample_goal(const Catalog& catalog, std::uint64_t seed, const GoalSamplerConfig& config = {});

/// Canonical attribute phrase -> surface paraphrases.
class ParaphraseTable {
public:
    static constexpr int kFormatVersion = 1;

    ParaphraseTable() = default;
    /// Format: "# paraphrases v1" header, then "canonical<TAB>paraphrase" lines.
    static ParaphraseTable parse(const std::string& text);
    static ParaphraseTable load(const std::filesystem::path& path);
    std::string serialize() const;

    void add(const std::string& canonical, const std::string& paraphrase);
    const std::vector<std::string>* lookup(const std::string& canonical) const;
    bool empty() const { return table_.empty(); }

private:
    std::map<std::string, std::vector<std::string>> table_;
};

/// Instruction templates with named slots {noun}, {attributes}, {options}
/// and {price}. Templates carrying {options} are used only when the goal
/// has options; the others only when it has none.
class TemplateSet {
public:
    static TemplateSet parse(const std::string& text);
    static TemplateSet load(const std::filesystem::path& path);
    static const TemplateSet& builtin();

    const std::vector<std::string>& with_options() const { return with_options_; }
    const std::vector<std::string>& without_options() const { return without_options_; }

private:
    std::vector<std::string> with_options_;
    std::vector<std::string> without_options_;
};

/// Head noun used in instructions: the last title token that is neither a
/// stopword nor numeric.
std::string product_noun(const Product& product);

std::string render_instruction(const Goal& goal, const Catalog& catalog, const TemplateSet& templates,
                               std::uint64_t seed, const ParaphraseTable& paraphrases = {});

/// Sample + render `count` goals with ids "g<index>".
std::vector<Goal> generate_goals(const Catalog& catalog, std::size_t count, std::uint64_t seed,
                                 const GoalSamplerConfig& config = {},
                                 const TemplateSet& templates = TemplateSet::builtin(),
                                 const ParaphraseTable& paraphrases = {});

struct GoalSplits {
    std::vector<std::string> train;
    std::vector<std::string> dev;
    std::vector<std::string> test;
    const std::vector<std::string>& get(const std::string& name) const;
};

/// Seeded shuffle, then 85/10/5 proportions.
GoalSplits split_goals(const std::vector<Goal>& goals, std::uint64_t seed);

std::string goal_to_json_line(const Goal& goal);
Goal goal_from_json_line(const std::string& line);
std::vector<Goal> load_goals(const std::filesystem::path& path);
void save_goals(const std::vector<Goal>& goals, const std::filesystem::path& path);

}  // namespace webshop
