#include "webshop/goals.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "webshop/error.hpp"
#include "webshop/reward.hpp"
#include "webshop/rng.hpp"
#include "webshop/text.hpp"

namespace webshop {

using ojson = nlohmann::ordered_json;

void validate_goal(const Goal& goal, const Catalog& catalog) {
    const Product* target = catalog.find(goal.target_product_id);
    if (!target) throw Error(ErrorCode::kNotFound, "goal " + goal.goal_id + " targets unknown product");
    if (goal.u_att.empty()) throw Error(ErrorCode::kInvalidArgument, "goal " + goal.goal_id + " has no attributes");
    for (const auto& a : goal.u_att)
        if (!target->attributes.count(a))
            throw Error(ErrorCode::kInvalidArgument, "goal " + goal.goal_id + " attribute '" + a + "' not on target");
    for (const auto& [field, value] : goal.u_opt)
        if (!target->has_option(field, value))
            throw Error(ErrorCode::kInvalidArgument, "goal " + goal.goal_id + " option " + field + ":" + value +
                                                         " not on target");
    if (!(goal.u_price > target->price))
        throw Error(ErrorCode::kInvalidArgument, "goal " + goal.goal_id + " price cap not above target price");
}

Goal sample_goal(const Catalog& catalog, std::uint64_t seed, const GoalSamplerConfig& config) {
    if (catalog.empty()) throw Error(ErrorCode::kInvalidArgument, "empty catalog");
    if (config.max_att < 1) throw Error(ErrorCode::kInvalidArgument, "max_att must be >= 1");
    if (!(config.markup_min > 1.0) || config.markup_max < config.markup_min)
        throw Error(ErrorCode::kInvalidArgument, "price markup range must satisfy 1 < min <= max");
    std::vector<std::size_t> eligible;
    for (std::size_t i = 0; i < catalog.size(); ++i)
        if (!catalog.at(i).attributes.empty()) eligible.push_back(i);
    if (eligible.empty()) throw Error(ErrorCode::kNotFound, "no product in the catalog has attributes");

    Rng rng(seed);
    const Product& target = catalog.at(eligible[rng.uniform_index(eligible.size())]);
    Goal goal;
    goal.goal_id = "goal-" + std::to_string(seed);
    goal.target_product_id = target.id;

    std::vector<std::string> attrs(target.attributes.begin(), target.attributes.end());
    std::size_t n_att = 1 + rng.uniform_index(std::min(config.max_att, attrs.size()));
    for (auto k : rng.sample_without_replacement(attrs.size(), n_att)) goal.u_att.insert(attrs[k]);

    std::vector<std::size_t> groups;
    for (std::size_t g = 0; g < target.option_groups.size(); ++g)
        if (!target.option_groups[g].second.empty()) groups.push_back(g);
    std::size_t n_opt = rng.uniform_index(std::min(config.max_opt, groups.size()) + 1);
    for (auto k : rng.sample_without_replacement(groups.size(), n_opt)) {
        const auto& [field, values] = target.option_groups[groups[k]];
        goal.u_opt[field] = values[rng.uniform_index(values.size())];
    }

    const double markup = rng.uniform(config.markup_min, config.markup_max);
    auto cents = static_cast<std::int64_t>(std::ceil(static_cast<double>(target.price.cents()) * markup));
    goal.u_price = Price::from_cents(std::max(cents, target.price.cents() + 1));
    return goal;
}

// ---------------------------------------------------------------------------

ParaphraseTable ParaphraseTable::parse(const std::string& text) {
    ParaphraseTable table;
    std::istringstream in(text);
    std::string line;
    bool header = false;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (line[0] == '#') {
            if (!header && line.rfind("# paraphrases v", 0) == 0) {
                if (std::stoi(line.substr(15)) != kFormatVersion)
                    throw Error(ErrorCode::kMalformedRecord, "unsupported paraphrase table version");
                header = true;
            }
            continue;
        }
        auto tab = line.find('\t');
        if (tab == std::string::npos || tab == 0 || tab + 1 == line.size())
            throw Error(ErrorCode::kMalformedRecord, "paraphrase line " + std::to_string(line_no) + " needs a tab");
        table.add(line.substr(0, tab), line.substr(tab + 1));
    }
    if (!header && !table.empty())
        throw Error(ErrorCode::kMalformedRecord, "paraphrase table lacks the '# paraphrases v1' header");
    return table;
}

ParaphraseTable ParaphraseTable::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    return parse(buf.str());
}

std::string ParaphraseTable::serialize() const {
    std::string out = "# paraphrases v" + std::to_string(kFormatVersion) + "\n";
    for (const auto& [canonical, list] : table_)
        for (const auto& p : list) out += canonical + "\t" + p + "\n";
    return out;
}

void ParaphraseTable::add(const std::string& canonical, const std::string& paraphrase) {
    table_[canonical].push_back(paraphrase);
}

const std::vector<std::string>* ParaphraseTable::lookup(const std::string& canonical) const {
    auto it = table_.find(canonical);
    return it == table_.end() ? nullptr : &it->second;
}

// ---------------------------------------------------------------------------

namespace {

const std::set<std::string> kKnownSlots = {"noun", "attributes", "options", "price"};

std::set<std::string> slots_of(const std::string& tmpl) {
    std::set<std::string> slots;
    std::size_t pos = 0;
    while ((pos = tmpl.find('{', pos)) != std::string::npos) {
        auto end = tmpl.find('}', pos);
        if (end == std::string::npos) throw Error(ErrorCode::kMalformedRecord, "unclosed slot in template: " + tmpl);
        std::string name = tmpl.substr(pos + 1, end - pos - 1);
        if (!kKnownSlots.count(name)) throw Error(ErrorCode::kMalformedRecord, "unknown slot {" + name + "}");
        slots.insert(name);
        pos = end + 1;
    }
    return slots;
}

std::string fill(std::string tmpl, const std::map<std::string, std::string>& values) {
    for (const auto& [name, value] : values) {
        const std::string key = "{" + name + "}";
        std::size_t pos = 0;
        while ((pos = tmpl.find(key, pos)) != std::string::npos) {
            tmpl.replace(pos, key.size(), value);
            pos += value.size();
        }
    }
    return tmpl;
}

std::string and_list(const std::vector<std::string>& items) {
    if (items.size() <= 1) return items.empty() ? "" : items[0];
    std::string out;
    for (std::size_t i = 0; i < items.size(); ++i) {
        if (i) out += i + 1 == items.size() ? " and " : ", ";
        out += items[i];
    }
    return out;
}

}  // namespace

TemplateSet TemplateSet::parse(const std::string& text) {
    TemplateSet set;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.find_first_not_of(" \t") == std::string::npos || line[0] == '#') continue;
        auto slots = slots_of(line);
        for (const char* required : {"noun", "attributes", "price"})
            if (!slots.count(required))
                throw Error(ErrorCode::kMalformedRecord, std::string("template missing required slot {") + required +
                                                             "}: " + line);
        (slots.count("options") ? set.with_options_ : set.without_options_).push_back(line);
    }
    return set;
}

TemplateSet TemplateSet::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    return parse(buf.str());
}

const TemplateSet& TemplateSet::builtin() {
    static const TemplateSet set = parse(
        "i am looking for {attributes} {noun} with {options}, and {price}\n"
        "i need a {noun} that is {attributes}, in {options}, and {price}\n"
        "find me {attributes} {noun} with {options}, {price}\n"
        "i am looking for {attributes} {noun}, and {price}\n"
        "i need a {noun} that is {attributes}, and {price}\n"
        "find me {attributes} {noun}, {price}\n");
    return set;
}

std::string product_noun(const Product& product) { return title_nouns(product.title).back(); }

std::string render_instruction(const Goal& goal, const Catalog& catalog, const TemplateSet& templates,
                               std::uint64_t seed, const ParaphraseTable& paraphrases) {
    validate_goal(goal, catalog);
    const Product& target = *catalog.find(goal.target_product_id);
    const auto& pool = goal.u_opt.empty() ? templates.without_options() : templates.with_options();
    if (pool.empty())
        throw Error(ErrorCode::kInvalidArgument, goal.u_opt.empty() ? "no template without an {options} slot"
                                                                    : "no template with an {options} slot");
    Rng rng(seed);
    const std::string& tmpl = pool[rng.uniform_index(pool.size())];

    std::vector<std::string> attrs;
    for (const auto& a : goal.u_att) {
        const auto* alts = paraphrases.lookup(a);
        attrs.push_back(alts && !alts->empty() ? (*alts)[rng.uniform_index(alts->size())] : a);
    }
    std::vector<std::string> opts;
    for (const auto& [field, value] : goal.u_opt) opts.push_back(value + " " + field);

    return fill(tmpl, {{"noun", product_noun(target)},
                       {"attributes", and_list(attrs)},
                       {"options", and_list(opts)},
                       {"price", "price lower than " + goal.u_price.str() + " dollars"}});
}

std::vector<Goal> generate_goals(const Catalog& catalog, std::size_t count, std::uint64_t seed,
                                 const GoalSamplerConfig& config, const TemplateSet& templates,
                                 const ParaphraseTable& paraphrases) {
    std::vector<Goal> goals;
    goals.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        Goal g = sample_goal(catalog, mix_seed(seed, 2 * i), config);
        g.goal_id = "g" + std::to_string(i);
        g.instruction_text = render_instruction(g, catalog, templates, mix_seed(seed, 2 * i + 1), paraphrases);
        goals.push_back(std::move(g));
    }
    return goals;
}

const std::vector<std::string>& GoalSplits::get(const std::string& name) const {
    if (name == "train") return train;
    if (name == "dev") return dev;
    if (name == "test") return test;
    throw Error(ErrorCode::kNotFound, "unknown split '" + name + "'");
}

GoalSplits split_goals(const std::vector<Goal>& goals, std::uint64_t seed) {
    std::vector<std::string> ids;
    for (const auto& g : goals) ids.push_back(g.goal_id);
    Rng rng(seed);
    rng.shuffle(ids);
    const std::size_t n = ids.size();
    const std::size_t n_train = n * 85 / 100;
    const std::size_t n_dev = n * 10 / 100;
    GoalSplits s;
    s.train.assign(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(n_train));
    s.dev.assign(ids.begin() + static_cast<std::ptrdiff_t>(n_train),
                 ids.begin() + static_cast<std::ptrdiff_t>(n_train + n_dev));
    s.test.assign(ids.begin() + static_cast<std::ptrdiff_t>(n_train + n_dev), ids.end());
    return s;
}

std::string goal_to_json_line(const Goal& goal) {
    ojson j;
    j["goal_id"] = goal.goal_id;
    j["target_product_id"] = goal.target_product_id;
    j["u_att"] = std::vector<std::string>(goal.u_att.begin(), goal.u_att.end());
    ojson opt = ojson::object();
    for (const auto& [f, v] : goal.u_opt) opt[f] = v;
    j["u_opt"] = opt;
    j["u_price"] = goal.u_price.dollars();
    j["instruction_text"] = goal.instruction_text;
    return j.dump();
}

Goal goal_from_json_line(const std::string& line) {
    try {
        auto j = ojson::parse(line);
        Goal g;
        g.goal_id = j.at("goal_id").get<std::string>();
        g.target_product_id = j.at("target_product_id").get<std::string>();
        for (const auto& a : j.at("u_att")) g.u_att.insert(a.get<std::string>());
        for (auto it = j.at("u_opt").begin(); it != j.at("u_opt").end(); ++it)
            g.u_opt[it.key()] = it.value().get<std::string>();
        g.u_price = Price::from_dollars(j.at("u_price").get<double>());
        g.instruction_text = j.at("instruction_text").get<std::string>();
        return g;
    } catch (const ojson::exception& e) {
        throw Error(ErrorCode::kMalformedRecord, std::string("bad goal record: ") + e.what());
    }
}

std::vector<Goal> load_goals(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
    std::vector<Goal> goals;
    std::string line;
    while (std::getline(in, line))
        if (line.find_first_not_of(" \t\r") != std::string::npos) goals.push_back(goal_from_json_line(line));
    return goals;
}

void save_goals(const std::vector<Goal>& goals, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
    for (const auto& g : goals) out << goal_to_json_line(g) << '\n';
}

}  // namespace webshop
