#include "webshop/server.hpp"

#include <algorithm>
#include <cstdio>
#include <random>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "webshop/error.hpp"
#include "webshop/rng.hpp"

namespace webshop {

using ojson = nlohmann::ordered_json;

SessionManager::SessionManager(std::shared_ptr<const Environment> env, SessionManagerConfig config, Clock clock)
    : env_(std::move(env)), config_(std::move(config)), clock_(std::move(clock)) {
    if (!clock_) clock_ = [] { return std::chrono::system_clock::now(); };
    if (env_->goals().empty()) throw Error(ErrorCode::kInvalidArgument, "session manager needs at least one goal");
}

std::string SessionManager::new_session_id() {
    static thread_local std::random_device device;
    char buf[33];
    std::snprintf(buf, sizeof buf, "%08x%08x%08x%08x", device(), device(), device(), device());
    return buf;
}

void SessionManager::purge_expired_locked() {
    const auto now = clock_();
    std::erase_if(sessions_, [&](const auto& kv) { return now - kv.second->handle.created_at > config_.ttl; });
}

std::pair<SessionHandle, Observation> SessionManager::create_session(const std::optional<std::string>& goal_id,
                                                                     std::optional<std::uint64_t> seed) {
    std::lock_guard lock(mutex_);
    purge_expired_locked();
    if (sessions_.size() >= config_.max_sessions)
        throw Error(ErrorCode::kCapacityExceeded, "session capacity reached");
    std::string chosen;
    if (goal_id) {
        if (!env_->find_goal(*goal_id)) throw Error(ErrorCode::kNotFound, "unknown goal " + *goal_id);
        chosen = *goal_id;
    } else {
        Rng rng(seed ? *seed : mix_seed(config_.random_goal_seed, random_goal_counter_++));
        chosen = env_->goals()[rng.uniform_index(env_->goals().size())].goal_id;
    }
    SessionHandle handle{new_session_id(), chosen, clock_()};
    while (sessions_.count(handle.session_id)) handle.session_id = new_session_id();
    auto live = std::make_shared<Live>(handle, Session(*env_, chosen));
    live->record.session_id = handle.session_id;
    live->record.goal_id = chosen;
    live->record.actor = config_.actor;
    Observation obs = live->session.observation();
    sessions_.emplace(handle.session_id, std::move(live));
    return {handle, obs};
}

std::shared_ptr<SessionManager::Live> SessionManager::lookup(const std::string& session_id) {
    std::lock_guard lock(mutex_);
    auto it = sessions_.find(session_id);
    if (it == sessions_.end()) throw Error(ErrorCode::kNotFound, "unknown session " + session_id);
    if (clock_() - it->second->handle.created_at > config_.ttl) {
        sessions_.erase(it);
        throw Error(ErrorCode::kExpired, "session " + session_id + " expired");
    }
    return it->second;
}

Observation SessionManager::observation(const std::string& session_id) {
    auto live = lookup(session_id);
    std::lock_guard lock(live->mutex);
    return live->session.observation();
}

std::vector<Action> SessionManager::legal_actions(const std::string& session_id) {
    auto live = lookup(session_id);
    std::lock_guard lock(live->mutex);
    return live->session.observation().actions;
}

StepReply SessionManager::post_step(const std::string& session_id, const std::string& action_text) {
    auto live = lookup(session_id);
    const Action action = parse_action(action_text);
    std::lock_guard lock(live->mutex);
    StepResult r = live->session.step(action);
    const auto ms =
        std::chrono::duration_cast<std::chrono::milliseconds>(clock_().time_since_epoch()).count();
    live->record.steps.push_back({action.str(), r.state.page, static_cast<std::int64_t>(ms)});
    if (r.done) {
        live->record.reward = r.breakdown;
        live->record.truncated = false;
        std::lock_guard global(mutex_);
        finished_.push_back(live->record);
        if (!config_.log_path.empty()) append_record(live->record, config_.log_path);
    }
    return {std::move(r.observation), r.reward, r.done, r.breakdown};
}

std::vector<TrajectoryRecord> SessionManager::records() const {
    std::lock_guard lock(mutex_);
    return finished_;
}

std::optional<TrajectoryRecord> SessionManager::record(const std::string& session_id) const {
    std::lock_guard lock(mutex_);
    for (const auto& r : finished_)
        if (r.session_id == session_id) return r;
    return std::nullopt;
}

std::size_t SessionManager::live_sessions() const {
    std::lock_guard lock(mutex_);
    return sessions_.size();
}

// ---------------------------------------------------------------------------
// HTTP

namespace {

ojson observation_object(const Observation& obs) {
    ojson actions = ojson::array();
    for (const auto& a : obs.actions) actions.push_back(a.str());
    ojson selected = ojson::object();
    for (const auto& [f, v] : obs.selected_options) selected[f] = v;
    return {{"instruction_text", obs.instruction_text},
            {"page", to_string(obs.page)},
            {"rendered_text", obs.rendered_text},
            {"actions", actions},
            {"selected_options", selected}};
}

int status_for(ErrorCode code) {
    switch (code) {
        case ErrorCode::kNotFound: return 404;
        case ErrorCode::kExpired: return 410;
        case ErrorCode::kIllegalAction:
        case ErrorCode::kEpisodeDone: return 409;
        case ErrorCode::kCapacityExceeded: return 503;
        case ErrorCode::kIo: return 500;
        default: return 400;
    }
}

void send_json(httplib::Response& res, int status, const ojson& body) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, ErrorCode code, const std::string& message) {
    send_json(res, status_for(code), {{"error", to_string(code)}, {"message", message}});
}

/// Wraps a handler so every failure becomes a structured JSON error.
template <typename F>
httplib::Server::Handler guarded(const std::string& token, F handler) {
    return [token, handler](const httplib::Request& req, httplib::Response& res) {
        res.set_header("Access-Control-Allow-Origin", "*");
        if (!token.empty() && req.get_header_value("Authorization") != "Bearer " + token) {
            send_json(res, 401, {{"error", "unauthorized"}, {"message", "missing or wrong bearer token"}});
            return;
        }
        try {
            handler(req, res);
        } catch (const Error& e) {
            send_error(res, e.code(), e.what());
        } catch (const ojson::exception& e) {
            send_error(res, ErrorCode::kInvalidArgument, std::string("malformed JSON body: ") + e.what());
        } catch (const std::exception& e) {
            send_json(res, 500, {{"error", "internal"}, {"message", e.what()}});
        }
    };
}

ojson parse_body(const httplib::Request& req) {
    if (req.body.empty()) return ojson::object();
    ojson body = ojson::parse(req.body);
    if (!body.is_object()) throw Error(ErrorCode::kInvalidArgument, "request body must be a JSON object");
    return body;
}

}  // namespace

std::string observation_json(const Observation& observation) { return observation_object(observation).dump(); }

void install_routes(httplib::Server& server, SessionManager& manager, const std::string& token) {
    server.Get("/health", guarded(token, [](const httplib::Request&, httplib::Response& res) {
                   send_json(res, 200, {{"status", "ok"}});
               }));

    server.Get("/goals", guarded(token, [&manager](const httplib::Request&, httplib::Response& res) {
                   ojson goals = ojson::array();
                   for (const auto& g : manager.env().goals())
                       goals.push_back({{"goal_id", g.goal_id}, {"instruction_text", g.instruction_text}});
                   send_json(res, 200, {{"goals", goals}});
               }));

    server.Post("/sessions", guarded(token, [&manager](const httplib::Request& req, httplib::Response& res) {
                    ojson body = parse_body(req);
                    std::optional<std::string> goal_id;
                    std::optional<std::uint64_t> seed;
                    if (body.contains("goal_id")) {
                        if (!body["goal_id"].is_string())
                            throw Error(ErrorCode::kInvalidArgument, "goal_id must be a string");
                        goal_id = body["goal_id"].get<std::string>();
                    }
                    if (body.contains("seed")) {
                        if (!body["seed"].is_number_unsigned())
                            throw Error(ErrorCode::kInvalidArgument, "seed must be a non-negative integer");
                        seed = body["seed"].get<std::uint64_t>();
                    }
                    auto [handle, obs] = manager.create_session(goal_id, seed);
                    send_json(res, 201,
                              {{"session_id", handle.session_id},
                               {"goal_id", handle.goal_id},
                               {"observation", observation_object(obs)}});
                }));

    server.Get(R"(/sessions/([0-9a-f]+)/observation)",
               guarded(token, [&manager](const httplib::Request& req, httplib::Response& res) {
                   send_json(res, 200, observation_object(manager.observation(req.matches[1])));
               }));

    server.Get(R"(/sessions/([0-9a-f]+)/actions)",
               guarded(token, [&manager](const httplib::Request& req, httplib::Response& res) {
                   ojson actions = ojson::array();
                   for (const auto& a : manager.legal_actions(req.matches[1])) actions.push_back(a.str());
                   send_json(res, 200, {{"actions", actions}});
               }));

    server.Post(R"(/sessions/([0-9a-f]+)/step)",
                guarded(token, [&manager](const httplib::Request& req, httplib::Response& res) {
                    ojson body = parse_body(req);
                    if (!body.contains("action") || !body["action"].is_string())
                        throw Error(ErrorCode::kUnparsableAction, "body needs a string 'action'");
                    StepReply r = manager.post_step(req.matches[1], body["action"].get<std::string>());
                    ojson out{{"observation", observation_object(r.observation)},
                              {"reward", r.reward},
                              {"done", r.done}};
                    if (r.breakdown) out["breakdown"] = breakdown_json(*r.breakdown);
                    send_json(res, 200, out);
                }));

    server.Get("/trajectories", guarded(token, [&manager](const httplib::Request& req, httplib::Response& res) {
                   const auto records = manager.records();
                   if (req.get_param_value("format") == "jsonl") {
                       std::string lines;
                       for (const auto& r : records) lines += record_to_json_line(r) + "\n";
                       res.status = 200;
                       res.set_header("Content-Disposition", "attachment; filename=\"trajectories.jsonl\"");
                       res.set_content(lines, "application/x-ndjson");
                       return;
                   }
                   ojson arr = ojson::array();
                   for (const auto& r : records) arr.push_back(ojson::parse(record_to_json_line(r)));
                   send_json(res, 200, {{"trajectories", arr}});
               }));

    server.Get(R"(/trajectories/([0-9a-f]+))",
               guarded(token, [&manager](const httplib::Request& req, httplib::Response& res) {
                   auto r = manager.record(req.matches[1]);
                   if (!r) throw Error(ErrorCode::kNotFound, "no finished trajectory for that session");
                   send_json(res, 200, ojson::parse(record_to_json_line(*r)));
               }));

    server.set_error_handler([](const httplib::Request&, httplib::Response& res) {
        if (res.body.empty())
            send_json(res, res.status, {{"error", "not_found"}, {"message", "no such endpoint"}});
    });
}

}  // namespace webshop
