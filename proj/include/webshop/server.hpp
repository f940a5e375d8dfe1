#pragma once

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "webshop/session.hpp"
#include "webshop/trajectory_log.hpp"

namespace httplib {
class Server;
}

namespace webshop {

struct SessionHandle {
    std::string session_id;
    std::string goal_id;
    std::chrono::system_clock::time_point created_at;
};

struct StepReply {
    Observation observation;
    double reward = 0.0;
    bool done = false;
    std::optional<RewardBreakdown> breakdown;
};

struct SessionManagerConfig {
    std::size_t max_sessions = 1024;
    std::chrono::seconds ttl{3600};
    std::string actor = "human";
    std::uint64_t random_goal_seed = 0;
    /// Where finished episodes are appended; empty keeps them in memory only.
    std::filesystem::path log_path;
};

/// Owns live sessions. Calls on different sessions run concurrently; calls
/// on one session are serialized by its own mutex.
class SessionManager {
public:
    using Clock = std::function<std::chrono::system_clock::time_point()>;

    SessionManager(std::shared_ptr<const Environment> env, SessionManagerConfig config, Clock clock = {});

    /// goal_id given: that goal. Otherwise a goal drawn with `seed`.
    std::pair<SessionHandle, Observation> create_session(const std::optional<std::string>& goal_id,
                                                         std::optional<std::uint64_t> seed = std::nullopt);
    Observation observation(const std::string& session_id);
    std::vector<Action> legal_actions(const std::string& session_id);
    StepReply post_step(const std::string& session_id, const std::string& action_text);

    std::vector<TrajectoryRecord> records() const;
    std::optional<TrajectoryRecord> record(const std::string& session_id) const;
    const Environment& env() const { return *env_; }
    std::size_t live_sessions() const;

private:
    struct Live {
        SessionHandle handle;
        Session session;
        TrajectoryRecord record;
        std::mutex mutex;
        Live(SessionHandle h, Session s) : handle(std::move(h)), session(std::move(s)) {}
    };

    std::shared_ptr<Live> lookup(const std::string& session_id);
    std::string new_session_id();
    void purge_expired_locked();

    std::shared_ptr<const Environment> env_;
    SessionManagerConfig config_;
    Clock clock_;
    mutable std::mutex mutex_;
    std::unordered_map<std::string, std::shared_ptr<Live>> sessions_;
    std::vector<TrajectoryRecord> finished_;
    std::uint64_t random_goal_counter_ = 0;
};

/// JSON views shared by the HTTP layer and tests.
std::string observation_json(const Observation& observation);

/// Registers every endpoint on `server`. With a non-empty token, requests
/// must carry "Authorization: Bearer <token>".
void install_routes(httplib::Server& server, SessionManager& manager, const std::string& token = {});

}  // namespace webshop
