#include "webshop/config.hpp"

#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "webshop/error.hpp"

namespace webshop {

using ojson = nlohmann::ordered_json;

const char* to_string(TypeRule rule) {
    return rule == TypeRule::kAsPrinted ? "as_printed" : "category_mismatch";
}

TypeRule type_rule_from_string(const std::string& name) {
    if (name == "category_mismatch") return TypeRule::kCategoryMismatch;
    if (name == "as_printed") return TypeRule::kAsPrinted;
    throw Error(ErrorCode::kInvalidArgument, "unknown type rule '" + name + "'");
}

namespace {

// Reads keys from one JSON object and rejects anything it did not read.
class Section {
public:
    Section(const ojson& root, std::string name) : name_(std::move(name)) {
        if (root.contains(name_)) {
            node_ = &root.at(name_);
            if (!node_->is_object()) fail("must be an object");
        }
    }

    template <typename T>
    void read(const char* key, T& out) {
        seen_.insert(key);
        if (!node_ || !node_->contains(key)) return;
        try {
            out = node_->at(key).get<T>();
        } catch (const ojson::exception&) {
            fail(std::string("bad value for '") + key + "'");
        }
    }

    void read_path(const char* key, std::filesystem::path& out) {
        std::string s = out.string();
        read(key, s);
        out = s;
    }

    void finish() const {
        if (!node_) return;
        for (const auto& [key, value] : node_->items())
            if (!seen_.count(key)) fail("unknown key '" + key + "'");
    }

private:
    [[noreturn]] void fail(const std::string& what) const {
        throw Error(ErrorCode::kInvalidArgument, "config section '" + name_ + "': " + what);
    }

    std::string name_;
    const ojson* node_ = nullptr;
    std::set<std::string> seen_;
};

const std::set<std::string> kSections = {"paths", "catalog", "search", "goals", "session",
                                         "agent", "bc",      "rl",     "server"};

}  // namespace

AppConfig parse_config(const std::string& json_text) {
    ojson root;
    try {
        root = ojson::parse(json_text);
    } catch (const ojson::exception& e) {
        throw Error(ErrorCode::kInvalidArgument, std::string("config is not valid JSON: ") + e.what());
    }
    if (!root.is_object()) throw Error(ErrorCode::kInvalidArgument, "config must be a JSON object");
    for (const auto& [key, value] : root.items())
        if (!kSections.count(key)) throw Error(ErrorCode::kInvalidArgument, "unknown config section '" + key + "'");

    AppConfig c;
    {
        Section s(root, "paths");
        s.read_path("catalog", c.paths.catalog);
        s.read_path("index", c.paths.index);
        s.read_path("goals", c.paths.goals);
        s.read_path("templates", c.paths.templates);
        s.read_path("paraphrases", c.paths.paraphrases);
        s.read_path("checkpoint", c.paths.checkpoint);
        s.read_path("trajectory_log", c.paths.trajectory_log);
        s.finish();
    }
    {
        Section s(root, "catalog");
        auto& syn = c.catalog.synthetic;
        s.read("n_products", syn.n_products);
        s.read("n_categories", syn.n_categories);
        s.read("max_options_per_group", syn.max_options_per_group);
        s.read("max_attributes", syn.max_attributes);
        s.read("min_price", syn.min_price);
        s.read("max_price", syn.max_price);
        s.read("attribute_in_description_prob", syn.attribute_in_description_prob);
        s.read("seed", c.catalog.seed);
        s.read("mine_top_k", c.catalog.mine_top_k);
        s.read("mine_stoplist", c.catalog.mine_stoplist);
        s.finish();
    }
    {
        Section s(root, "search");
        s.read("k1", c.bm25.k1);
        s.read("b", c.bm25.b);
        s.finish();
    }
    {
        Section s(root, "goals");
        std::string rule = to_string(c.goals.type_rule);
        s.read("count", c.goals.count);
        s.read("max_att", c.goals.sampler.max_att);
        s.read("max_opt", c.goals.sampler.max_opt);
        s.read("markup_min", c.goals.sampler.markup_min);
        s.read("markup_max", c.goals.sampler.markup_max);
        s.read("seed", c.goals.seed);
        s.read("split_seed", c.goals.split_seed);
        s.read("type_rule", rule);
        s.finish();
        c.goals.type_rule = type_rule_from_string(rule);
    }
    {
        Section s(root, "session");
        s.read("horizon", c.horizon);
        s.finish();
    }
    {
        Section s(root, "agent");
        s.read("dim", c.agent.dim);
        s.read("vocab", c.agent.vocab);
        s.read("gamma", c.agent.gamma);
        s.read("init_scale", c.agent.init_scale);
        s.read("init_seed", c.agent.init_seed);
        s.finish();
    }
    {
        Section s(root, "bc");
        s.read("epochs", c.bc.epochs);
        s.read("batch_size", c.bc.batch_size);
        std::string opt = to_string(c.bc.optimizer);
        s.read("learning_rate", c.bc.learning_rate);
        s.read("optimizer", opt);
        s.read("seed", c.bc.seed);
        s.finish();
        c.bc.optimizer = optimizer_from_string(opt);
    }
    {
        Section s(root, "rl");
        s.read("episodes", c.rl.episodes);
        s.read("batch_episodes", c.rl.batch_episodes);
        std::string opt = to_string(c.rl.optimizer);
        s.read("learning_rate", c.rl.learning_rate);
        s.read("optimizer", opt);
        s.read("horizon", c.rl.horizon);
        s.read("entropy_weight", c.rl.losses.entropy_weight);
        s.read("entropy_sign", c.rl.losses.entropy_sign);
        s.read("seed", c.rl.seed);
        s.finish();
        c.rl.optimizer = optimizer_from_string(opt);
    }
    {
        Section s(root, "server");
        s.read("port", c.server.port);
        s.read("host", c.server.host);
        s.read("max_sessions", c.server.max_sessions);
        s.read("ttl_seconds", c.server.ttl_seconds);
        s.read("token", c.server.token);
        s.finish();
    }
    if (c.catalog.synthetic.min_price <= 0 || c.catalog.synthetic.max_price < c.catalog.synthetic.min_price)
        throw Error(ErrorCode::kInvalidArgument, "catalog price range is invalid");
    if (c.agent.dim == 0 || c.agent.vocab == 0) throw Error(ErrorCode::kInvalidArgument, "agent dim and vocab must be positive");
    if (c.rl.losses.entropy_sign != 1.0 && c.rl.losses.entropy_sign != -1.0)
        throw Error(ErrorCode::kInvalidArgument, "rl.entropy_sign must be 1 or -1");
    if (c.server.ttl_seconds <= 0) throw Error(ErrorCode::kInvalidArgument, "server.ttl_seconds must be positive");
    return c;
}

AppConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::kIo, "cannot open config " + path.string());
    std::ostringstream text;
    text << in.rdbuf();
    return parse_config(text.str());
}

std::string config_to_json(const AppConfig& c) {
    const auto& syn = c.catalog.synthetic;
    ojson j;
    j["paths"] = {{"catalog", c.paths.catalog.string()},
                  {"index", c.paths.index.string()},
                  {"goals", c.paths.goals.string()},
                  {"templates", c.paths.templates.string()},
                  {"paraphrases", c.paths.paraphrases.string()},
                  {"checkpoint", c.paths.checkpoint.string()},
                  {"trajectory_log", c.paths.trajectory_log.string()}};
    j["catalog"] = {{"n_products", syn.n_products},
                    {"n_categories", syn.n_categories},
                    {"max_options_per_group", syn.max_options_per_group},
                    {"max_attributes", syn.max_attributes},
                    {"min_price", syn.min_price},
                    {"max_price", syn.max_price},
                    {"attribute_in_description_prob", syn.attribute_in_description_prob},
                    {"seed", c.catalog.seed},
                    {"mine_top_k", c.catalog.mine_top_k},
                    {"mine_stoplist", c.catalog.mine_stoplist}};
    j["search"] = {{"k1", c.bm25.k1}, {"b", c.bm25.b}};
    j["goals"] = {{"count", c.goals.count},
                  {"max_att", c.goals.sampler.max_att},
                  {"max_opt", c.goals.sampler.max_opt},
                  {"markup_min", c.goals.sampler.markup_min},
                  {"markup_max", c.goals.sampler.markup_max},
                  {"seed", c.goals.seed},
                  {"split_seed", c.goals.split_seed},
                  {"type_rule", to_string(c.goals.type_rule)}};
    j["session"] = {{"horizon", c.horizon}};
    j["agent"] = {{"dim", c.agent.dim},
                  {"vocab", c.agent.vocab},
                  {"gamma", c.agent.gamma},
                  {"init_scale", c.agent.init_scale},
                  {"init_seed", c.agent.init_seed}};
    j["bc"] = {{"epochs", c.bc.epochs},
               {"batch_size", c.bc.batch_size},
               {"learning_rate", c.bc.learning_rate},
               {"optimizer", to_string(c.bc.optimizer)},
               {"seed", c.bc.seed}};
    j["rl"] = {{"episodes", c.rl.episodes},
               {"batch_episodes", c.rl.batch_episodes},
               {"learning_rate", c.rl.learning_rate},
               {"optimizer", to_string(c.rl.optimizer)},
               {"horizon", c.rl.horizon},
               {"entropy_weight", c.rl.losses.entropy_weight},
               {"entropy_sign", c.rl.losses.entropy_sign},
               {"seed", c.rl.seed}};
    j["server"] = {{"port", c.server.port},
                   {"host", c.server.host},
                   {"max_sessions", c.server.max_sessions},
                   {"ttl_seconds", c.server.ttl_seconds},
                   {"token", c.server.token}};
    return j.dump(2) + "\n";
}

}  // namespace webshop
