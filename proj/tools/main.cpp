#include <atomic>
#include <csignal>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>

#include <CLI11.hpp>
#include <httplib.h>

#include "webshop/agents.hpp"
#include "webshop/catalog.hpp"
#include "webshop/config.hpp"
#include "webshop/error.hpp"
#include "webshop/evaluation.hpp"
#include "webshop/goals.hpp"
#include "webshop/scorer.hpp"
#include "webshop/search.hpp"
#include "webshop/server.hpp"
#include "webshop/session.hpp"
#include "webshop/trajectory_log.hpp"
#include "webshop/training.hpp"

namespace fs = std::filesystem;
using namespace webshop;

namespace {

httplib::Server* g_server = nullptr;

void on_signal(int) {
    if (g_server) g_server->stop();
}

void ensure_parent(const fs::path& path) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
}

std::shared_ptr<const Catalog> read_catalog(const fs::path& path) {
    LoadResult r = load_catalog(path, false);
    if (r.skipped) std::cerr << "skipped " << r.skipped << " malformed catalog records\n";
    return std::make_shared<const Catalog>(std::move(r.catalog));
}

std::shared_ptr<const SearchIndex> index_for(const Catalog& catalog, const AppConfig& cfg) {
    if (fs::exists(cfg.paths.index)) {
        SearchIndex idx = load_index(cfg.paths.index);
        if (idx.doc_count() == catalog.size()) return std::make_shared<const SearchIndex>(std::move(idx));
        std::cerr << "index at " << cfg.paths.index << " does not match the catalog; rebuilding in memory\n";
    }
    return std::make_shared<const SearchIndex>(build_index(catalog, cfg.bm25));
}

std::shared_ptr<const Environment> make_env(const AppConfig& cfg) {
    auto catalog = read_catalog(cfg.paths.catalog);
    auto index = index_for(*catalog, cfg);
    return std::make_shared<const Environment>(catalog, index, load_goals(cfg.paths.goals), cfg.goals.type_rule);
}

std::vector<std::string> split_ids(const Environment& env, const AppConfig& cfg, const std::string& split) {
    if (split == "all") {
        std::vector<std::string> ids;
        for (const auto& g : env.goals()) ids.push_back(g.goal_id);
        return ids;
    }
    return split_goals(env.goals(), cfg.goals.split_seed).get(split);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Simulated web shopping environment, agents and server"};
    app.require_subcommand(1);

    std::string config_path;
    app.add_option("--config", config_path, "JSON config file (defaults apply for missing keys)")->check(CLI::ExistingFile);

    AppConfig cfg;
    auto load = [&] {
        if (!config_path.empty()) cfg = load_config(config_path);
    };

    // config
    auto* c_config = app.add_subcommand("config", "Print the effective config");

    // gen-catalog
    auto* c_gen = app.add_subcommand("gen-catalog", "Generate a synthetic catalog");
    std::optional<std::size_t> gen_n;
    std::optional<std::uint64_t> gen_seed;
    std::string gen_out;
    c_gen->add_option("--products", gen_n, "Number of products");
    c_gen->add_option("--seed", gen_seed, "Generator seed");
    c_gen->add_option("--out", gen_out, "Output JSONL (default: paths.catalog)");

    // mine-attrs
    auto* c_mine = app.add_subcommand("mine-attrs", "Replace attributes with TF-IDF mined bigrams");
    std::string mine_in, mine_out;
    std::optional<std::size_t> mine_k;
    bool mine_show = false;
    c_mine->add_option("--catalog", mine_in, "Input catalog (default: paths.catalog)");
    c_mine->add_option("--out", mine_out, "Output catalog (default: overwrite input)");
    c_mine->add_option("--top-k", mine_k, "Bigrams kept per category");
    c_mine->add_flag("--show", mine_show, "Print the ranked bigrams per category");

    // index
    auto* c_index = app.add_subcommand("index", "Build the search index cache");
    std::string index_catalog, index_out;
    c_index->add_option("--catalog", index_catalog);
    c_index->add_option("--out", index_out);

    // gen-goals
    auto* c_goals = app.add_subcommand("gen-goals", "Sample goals with rendered instructions");
    std::string goals_catalog, goals_out;
    std::optional<std::size_t> goals_count;
    std::optional<std::uint64_t> goals_seed;
    c_goals->add_option("--catalog", goals_catalog);
    c_goals->add_option("--out", goals_out);
    c_goals->add_option("--count", goals_count);
    c_goals->add_option("--seed", goals_seed);

    // serve
    auto* c_serve = app.add_subcommand("serve", "Run the HTTP server");
    std::optional<int> serve_port;
    std::string serve_catalog, serve_goals, serve_log, serve_host;
    c_serve->add_option("--port", serve_port);
    c_serve->add_option("--host", serve_host);
    c_serve->add_option("--catalog", serve_catalog);
    c_serve->add_option("--goals", serve_goals);
    c_serve->add_option("--log", serve_log, "Trajectory log (default: paths.trajectory_log)");

    // eval
    auto* c_eval = app.add_subcommand("eval", "Evaluate an agent in process");
    std::string eval_agent = "rule", eval_split = "test", eval_checkpoint, eval_log;
    std::size_t eval_episodes = 100;
    std::uint64_t eval_seed = 0;
    std::optional<std::size_t> eval_horizon;
    bool eval_greedy = false, eval_json = false;
    c_eval->add_option("--agent", eval_agent, "rule | oracle | policy")
        ->check(CLI::IsMember({"rule", "oracle", "policy"}));
    c_eval->add_option("--split", eval_split, "train | dev | test | all")
        ->check(CLI::IsMember({"train", "dev", "test", "all"}));
    c_eval->add_option("--episodes", eval_episodes);
    c_eval->add_option("--seed", eval_seed);
    c_eval->add_option("--horizon", eval_horizon);
    c_eval->add_option("--checkpoint", eval_checkpoint, "Policy checkpoint (default: paths.checkpoint)");
    c_eval->add_flag("--greedy", eval_greedy, "Argmax instead of sampling");
    c_eval->add_flag("--json", eval_json, "Print the report as JSON");
    c_eval->add_option("--log", eval_log, "Write episode records to this JSONL file");

    // train
    auto* c_train = app.add_subcommand("train", "Train the choice policy");
    std::string train_mode, train_init, train_out;
    c_train->add_option("--mode", train_mode)->required()->check(CLI::IsMember({"bc", "rl"}));
    c_train->add_option("--init", train_init, "Starting checkpoint (rl)");
    c_train->add_option("--out", train_out, "Output checkpoint (default: paths.checkpoint)");

    // replay
    auto* c_replay = app.add_subcommand("replay", "Replay logged trajectories and check rewards");
    std::string replay_log;
    c_replay->add_option("log", replay_log)->required()->check(CLI::ExistingFile);
    c_replay->add_option("--catalog", serve_catalog);
    c_replay->add_option("--goals", serve_goals);

    // benchmark
    auto* c_bench = app.add_subcommand("benchmark", "Rule / oracle / BC / BC+RL comparison on toy catalogs");
    std::vector<std::uint64_t> bench_seeds{1, 2, 3};
    std::size_t bench_train_goals = 500, bench_demo_goals = 100, bench_rl_episodes = 2000;
    bool bench_curve = false;
    c_bench->add_option("--seeds", bench_seeds);
    c_bench->add_option("--train-goals", bench_train_goals);
    c_bench->add_option("--demo-goals", bench_demo_goals);
    c_bench->add_option("--rl-episodes", bench_rl_episodes);
    c_bench->add_flag("--curve", bench_curve, "Print the RL training reward curve");

    CLI11_PARSE(app, argc, argv);

    try {
        load();

        if (*c_config) {
            std::cout << config_to_json(cfg);
            return 0;
        }

        if (*c_gen) {
            SyntheticCatalogConfig sc = cfg.catalog.synthetic;
            if (gen_n) sc.n_products = *gen_n;
            const fs::path out = gen_out.empty() ? cfg.paths.catalog : fs::path(gen_out);
            Catalog catalog = generate_synthetic_catalog(sc, gen_seed.value_or(cfg.catalog.seed));
            ensure_parent(out);
            save_catalog(catalog, out);
            std::cout << "wrote " << catalog.size() << " products to " << out << "\n";
            return 0;
        }

        if (*c_mine) {
            const fs::path in = mine_in.empty() ? cfg.paths.catalog : fs::path(mine_in);
            const fs::path out = mine_out.empty() ? in : fs::path(mine_out);
            auto catalog = read_catalog(in);
            const std::size_t k = mine_k.value_or(cfg.catalog.mine_top_k);
            if (mine_show) {
                for (const auto& category : catalog->categories()) {
                    std::cout << category << ":\n";
                    auto ranked = rank_category_bigrams(*catalog, category, cfg.catalog.mine_stoplist);
                    for (std::size_t i = 0; i < ranked.size() && i < k; ++i)
                        std::printf("  %-32s %.4f\n", ranked[i].first.c_str(), ranked[i].second);
                }
            }
            auto mined = mine_attributes(*catalog, k, cfg.catalog.mine_stoplist);
            Catalog updated = catalog->with_attributes(mined);
            std::size_t bare = 0;
            for (const auto& p : updated.products()) bare += p.attributes.empty();
            ensure_parent(out);
            save_catalog(updated, out);
            std::cout << "wrote " << updated.size() << " products to " << out << " (" << bare
                      << " without a mined attribute)\n";
            return 0;
        }

        if (*c_index) {
            const fs::path in = index_catalog.empty() ? cfg.paths.catalog : fs::path(index_catalog);
            const fs::path out = index_out.empty() ? cfg.paths.index : fs::path(index_out);
            auto catalog = read_catalog(in);
            SearchIndex idx = build_index(*catalog, cfg.bm25);
            ensure_parent(out);
            save_index(idx, out);
            std::cout << "indexed " << idx.doc_count() << " documents, " << idx.postings().size() << " terms\n";
            return 0;
        }

        if (*c_goals) {
            const fs::path in = goals_catalog.empty() ? cfg.paths.catalog : fs::path(goals_catalog);
            const fs::path out = goals_out.empty() ? cfg.paths.goals : fs::path(goals_out);
            auto catalog = read_catalog(in);
            const TemplateSet templates =
                cfg.paths.templates.empty() ? TemplateSet::builtin() : TemplateSet::load(cfg.paths.templates);
            const ParaphraseTable paraphrases =
                cfg.paths.paraphrases.empty() ? ParaphraseTable{} : ParaphraseTable::load(cfg.paths.paraphrases);
            auto goals = generate_goals(*catalog, goals_count.value_or(cfg.goals.count),
                                        goals_seed.value_or(cfg.goals.seed), cfg.goals.sampler, templates, paraphrases);
            ensure_parent(out);
            save_goals(goals, out);
            auto splits = split_goals(goals, cfg.goals.split_seed);
            std::cout << "wrote " << goals.size() << " goals to " << out << " (train " << splits.train.size()
                      << ", dev " << splits.dev.size() << ", test " << splits.test.size() << ")\n";
            return 0;
        }

        if (*c_serve) {
            if (!serve_catalog.empty()) cfg.paths.catalog = serve_catalog;
            if (!serve_goals.empty()) cfg.paths.goals = serve_goals;
            if (!serve_log.empty()) cfg.paths.trajectory_log = serve_log;
            auto env = make_env(cfg);
            SessionManagerConfig mc;
            mc.max_sessions = cfg.server.max_sessions;
            mc.ttl = std::chrono::seconds(cfg.server.ttl_seconds);
            mc.log_path = cfg.paths.trajectory_log;
            ensure_parent(mc.log_path);
            SessionManager manager(env, mc);
            httplib::Server server;
            install_routes(server, manager, cfg.server.token);
            g_server = &server;
            std::signal(SIGINT, on_signal);
            std::signal(SIGTERM, on_signal);
            const std::string host = serve_host.empty() ? cfg.server.host : serve_host;
            const int port = serve_port.value_or(cfg.server.port);
            std::cout << "serving " << env->catalog().size() << " products, " << env->goals().size()
                      << " goals on http://" << host << ":" << port << std::endl;
            if (!server.listen(host, port)) {
                std::cerr << "cannot listen on " << host << ":" << port << "\n";
                return 1;
            }
            return 0;
        }

        if (*c_eval) {
            auto env = make_env(cfg);
            EvalConfig ec;
            ec.agent = agent_from_string(eval_agent);
            ec.episodes = eval_episodes;
            ec.seed = eval_seed;
            ec.horizon = eval_horizon.value_or(cfg.horizon);
            ec.policy_mode = eval_greedy ? PolicyMode::kGreedy : PolicyMode::kSample;
            if (ec.agent == AgentKind::kPolicy)
                ec.policy = load_checkpoint(eval_checkpoint.empty() ? cfg.paths.checkpoint : fs::path(eval_checkpoint));
            auto ids = split_ids(*env, cfg, eval_split);
            if (ids.empty()) throw Error(ErrorCode::kInvalidArgument, "split '" + eval_split + "' has no goals");
            EvalResult result = run_eval(*env, ids, ec);
            std::cout << (eval_json ? result.report.to_json() : result.report.to_text()) << "\n";
            if (!eval_log.empty()) {
                ensure_parent(eval_log);
                std::ofstream(eval_log, std::ios::trunc);
                for (const auto& r : result.records) append_record(r, eval_log);
            }
            return 0;
        }

        if (*c_train) {
            auto env = make_env(cfg);
            const auto splits = split_goals(env->goals(), cfg.goals.split_seed);
            const fs::path out = train_out.empty() ? cfg.paths.checkpoint : fs::path(train_out);
            CrossAttentionScorer scorer =
                train_init.empty()
                    ? CrossAttentionScorer::fan_in_init(cfg.agent.dim, cfg.agent.vocab, cfg.agent.init_seed,
                                                   cfg.agent.init_scale, cfg.agent.gamma)
                    : load_checkpoint(train_init);
            if (train_mode == "bc") {
                auto demos = oracle_demonstrations(*env, scorer, splits.train);
                std::cout << demos.size() << " demonstration choices from " << splits.train.size() << " goals\n";
                auto losses = train_behavior_cloning(scorer, demos, cfg.bc);
                for (std::size_t e = 0; e < losses.size(); ++e)
                    std::printf("epoch %zu  loss %.5f\n", e + 1, losses[e]);
            } else {
                auto log = train_reinforce(scorer, *env, splits.train, cfg.rl);
                const std::size_t n = log.batch_mean_reward.size();
                for (std::size_t b = 0; b < n; ++b)
                    if ((b + 1) % 25 == 0 || b + 1 == n)
                        std::printf("batch %zu  mean reward %.4f  loss %.5f\n", b + 1, log.batch_mean_reward[b],
                                    log.losses[b].total);
            }
            ensure_parent(out);
            save_checkpoint(scorer, out);
            std::cout << "saved " << out << "\n";
            return 0;
        }

        if (*c_bench) {
            BenchmarkConfig bc;
            bc.n_products = cfg.catalog.synthetic.n_products;
            bc.n_eval_goals = cfg.goals.count;
            bc.n_train_goals = bench_train_goals;
            bc.n_demo_goals = bench_demo_goals;
            bc.horizon = cfg.horizon;
            bc.dim = cfg.agent.dim;
            bc.vocab = cfg.agent.vocab;
            bc.init_scale = cfg.agent.init_scale;
            bc.bc = cfg.bc;
            bc.rl = cfg.rl;
            bc.rl.episodes = bench_rl_episodes;
            std::printf("%-6s %-8s %8s %8s %6s %6s %6s %6s\n", "seed", "agent", "score", "SR", "att", "opt", "price",
                        "type");
            for (auto seed : bench_seeds) {
                BenchmarkResult r = run_benchmark(bc, seed);
                for (const auto& [name, m] : {std::pair{"rule", &r.rule}, {"oracle", &r.oracle}, {"bc", &r.bc},
                                              {"bc+rl", &r.bc_rl}})
                    std::printf("%-6llu %-8s %8.2f %7.1f%% %6.3f %6.3f %6.3f %6.3f\n",
                                static_cast<unsigned long long>(seed), name, m->score, 100.0 * m->success_rate,
                                m->att, m->opt, m->price, m->type);
                if (bench_curve) {
                    const auto& curve = r.rl_batch_reward;
                    const std::size_t chunk = std::max<std::size_t>(1, curve.size() / 10);
                    std::printf("       rl batch reward:");
                    for (std::size_t b = 0; b < curve.size(); b += chunk) {
                        double sum = 0.0;
                        std::size_t n = 0;
                        for (; n < chunk && b + n < curve.size(); ++n) sum += curve[b + n];
                        std::printf(" %.3f", sum / static_cast<double>(n));
                    }
                    std::printf("\n");
                }
                std::fflush(stdout);
            }
            return 0;
        }

        if (*c_replay) {
            if (!serve_catalog.empty()) cfg.paths.catalog = serve_catalog;
            if (!serve_goals.empty()) cfg.paths.goals = serve_goals;
            auto env = make_env(cfg);
            auto records = load_records(replay_log);
            std::size_t failed = 0;
            for (const auto& r : records) {
                ReplayOutcome o = replay_record(*env, r);
                std::printf("%s %s goal=%s steps=%zu reward=%s%s%s\n", o.ok ? "ok  " : "FAIL", r.session_id.c_str(),
                            r.goal_id.c_str(), r.steps.size(),
                            o.reward ? std::to_string(o.reward->r.to_double()).c_str() : "-",
                            o.message.empty() ? "" : "  ", o.message.c_str());
                failed += !o.ok;
            }
            std::printf("%zu of %zu records replayed identically\n", records.size() - failed, records.size());
            return failed == 0 ? 0 : 2;
        }
    } catch (const Error& e) {
        std::cerr << "error (" << to_string(e.code()) << "): " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
