#pragma once

#include <cstdint>
#include <filesystem>
#include <set>
#include <string>

#include "webshop/catalog.hpp"
#include "webshop/goals.hpp"
#include "webshop/reward.hpp"
#include "webshop/search.hpp"
#include "webshop/training.hpp"

namespace webshop {

struct PathsConfig {
    std::filesystem::path catalog = "data/catalog.jsonl";
    std::filesystem::path index = "data/index.txt";
    std::filesystem::path goals = "data/goals.jsonl";
    std::filesystem::path templates;    // empty: built-in templates
    std::filesystem::path paraphrases;  // empty: no paraphrasing
    std::filesystem::path checkpoint = "data/policy.json";
    std::filesystem::path trajectory_log = "data/trajectories.jsonl";
};

struct CatalogSection {
    SyntheticCatalogConfig synthetic;
    std::uint64_t seed = 0;
    std::size_t mine_top_k = 20;
    std::set<std::string> mine_stoplist;
};

struct GoalsSection {
    std::size_t count = 100;
    GoalSamplerConfig sampler;
    std::uint64_t seed = 0;
    std::uint64_t split_seed = 0;
    TypeRule type_rule = TypeRule::kCategoryMismatch;
};

struct AgentSection {
    std::size_t dim = 32;
    std::size_t vocab = 4096;
    double gamma = 0.99;
    double init_scale = 0.5;  // embedding init range
    std::uint64_t init_seed = 0;
};

struct ServerSection {
    int port = 3000;
    std::string host = "127.0.0.1";
    std::size_t max_sessions = 1024;
    std::int64_t ttl_seconds = 3600;
    std::string token;
};

struct AppConfig {
    PathsConfig paths;
    CatalogSection catalog;
    Bm25Params bm25;
    GoalsSection goals;
    std::size_t horizon = 100;
    AgentSection agent;
    BcTrainConfig bc;
    RlTrainConfig rl;
    ServerSection server;
};

/// Missing keys keep their defaults; unknown keys are rejected.
AppConfig parse_config(const std::string& json_text);
AppConfig load_config(const std::filesystem::path& path);
std::string config_to_json(const AppConfig& config);

const char* to_string(TypeRule rule);
TypeRule type_rule_from_string(const std::string& name);

}  // namespace webshop
