#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "webshop/agents.hpp"
#include "webshop/reward.hpp"
#include "webshop/session.hpp"

namespace webshop {

struct LoggedStep {
    std::string action;  // action grammar text
    Page page;           // page reached
    std::int64_t timestamp = 0;
    friend bool operator==(const LoggedStep&, const LoggedStep&) = default;
};

/// One persisted episode; one JSON object per line in a log file.
struct TrajectoryRecord {
    std::string session_id;
    std::string goal_id;
    std::string actor;  // human | rule | oracle | policy
    std::vector<LoggedStep> steps;
    std::optional<RewardBreakdown> reward;
    bool truncated = false;

    friend bool operator==(const TrajectoryRecord&, const TrajectoryRecord&) = default;
};

nlohmann::ordered_json breakdown_json(const RewardBreakdown& breakdown);
RewardBreakdown breakdown_from_json(const nlohmann::ordered_json& j);

std::string record_to_json_line(const TrajectoryRecord& record);
TrajectoryRecord record_from_json_line(const std::string& line);
std::vector<TrajectoryRecord> load_records(const std::filesystem::path& path);
void append_record(const TrajectoryRecord& record, const std::filesystem::path& path);

/// Logical timestamps (step index) keep in-process logs reproducible.
TrajectoryRecord to_record(const Trajectory& trajectory, std::string session_id, std::string actor);

struct ReplayOutcome {
    bool ok = false;
    std::optional<RewardBreakdown> reward;
    std::vector<Observation> observations;  // initial observation first
    std::string message;
};

/// Replays the action texts through a fresh session and compares the
/// reward (exactly) and the reached pages with the record.
ReplayOutcome replay_record(const Environment& env, const TrajectoryRecord& record);

}  // namespace webshop
