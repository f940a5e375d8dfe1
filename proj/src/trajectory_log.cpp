#include "webshop/trajectory_log.hpp"

#include <fstream>

#include <nlohmann/json.hpp>

#include "webshop/error.hpp"

namespace webshop {

using ojson = nlohmann::ordered_json;

namespace {

const char* tier_name(TypeTier t) {
    switch (t) {
        case TypeTier::kZero: return "0";
        case TypeTier::kTenth: return "0.1";
        case TypeTier::kHalf: return "0.5";
        case TypeTier::kOne: return "1";
    }
    return "0";
}

TypeTier tier_from_name(const std::string& s) {
    if (s == "0") return TypeTier::kZero;
    if (s == "0.1") return TypeTier::kTenth;
    if (s == "0.5") return TypeTier::kHalf;
    if (s == "1") return TypeTier::kOne;
    throw Error(ErrorCode::kMalformedRecord, "unknown type tier '" + s + "'");
}

}  // namespace

ojson breakdown_json(const RewardBreakdown& b) {
    ojson j;
    j["r"] = b.r.to_double();
    j["r_exact"] = {b.r.num(), b.r.den()};
    j["att_matched"] = b.att_matched;
    j["att_total"] = b.att_total;
    j["opt_matched"] = b.opt_matched;
    j["opt_total"] = b.opt_total;
    j["price_ok"] = b.price_ok;
    j["type"] = tier_name(b.type);
    return j;
}

RewardBreakdown breakdown_from_json(const ojson& j) {
    RewardBreakdown b;
    b.r = Rational(j.at("r_exact").at(0).get<std::int64_t>(), j.at("r_exact").at(1).get<std::int64_t>());
    b.att_matched = j.at("att_matched").get<std::size_t>();
    b.att_total = j.at("att_total").get<std::size_t>();
    b.opt_matched = j.at("opt_matched").get<std::size_t>();
    b.opt_total = j.at("opt_total").get<std::size_t>();
    b.price_ok = j.at("price_ok").get<bool>();
    b.type = tier_from_name(j.at("type").get<std::string>());
    return b;
}

std::string record_to_json_line(const TrajectoryRecord& record) {
    ojson j;
    j["session_id"] = record.session_id;
    j["goal_id"] = record.goal_id;
    j["actor"] = record.actor;
    ojson steps = ojson::array();
    for (const auto& s : record.steps)
        steps.push_back({{"action", s.action}, {"page", to_string(s.page)}, {"timestamp", s.timestamp}});
    j["steps"] = steps;
    j["reward"] = record.reward ? breakdown_json(*record.reward) : ojson(nullptr);
    j["truncated"] = record.truncated;
    return j.dump();
}

TrajectoryRecord record_from_json_line(const std::string& line) {
    try {
        auto j = ojson::parse(line);
        TrajectoryRecord r;
        r.session_id = j.at("session_id").get<std::string>();
        r.goal_id = j.at("goal_id").get<std::string>();
        r.actor = j.at("actor").get<std::string>();
        for (const auto& s : j.at("steps"))
            r.steps.push_back({s.at("action").get<std::string>(), page_from_string(s.at("page").get<std::string>()),
                               s.at("timestamp").get<std::int64_t>()});
        if (!j.at("reward").is_null()) r.reward = breakdown_from_json(j.at("reward"));
        r.truncated = j.at("truncated").get<bool>();
        return r;
    } catch (const ojson::exception& e) {
        throw Error(ErrorCode::kMalformedRecord, std::string("bad trajectory record: ") + e.what());
    }
}

std::vector<TrajectoryRecord> load_records(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
    std::vector<TrajectoryRecord> out;
    std::string line;
    while (std::getline(in, line))
        if (line.find_first_not_of(" \t\r") != std::string::npos) out.push_back(record_from_json_line(line));
    return out;
}

void append_record(const TrajectoryRecord& record, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::app | std::ios::binary);
    if (!out) throw Error(ErrorCode::kIo, "cannot append to " + path.string());
    out << record_to_json_line(record) << '\n';
}

TrajectoryRecord to_record(const Trajectory& trajectory, std::string session_id, std::string actor) {
    TrajectoryRecord r;
    r.session_id = std::move(session_id);
    r.goal_id = trajectory.goal_id;
    r.actor = std::move(actor);
    for (std::size_t t = 0; t < trajectory.steps.size(); ++t) {
        const Page reached =
            t + 1 < trajectory.steps.size() ? trajectory.steps[t + 1].observation.page : trajectory.final_page;
        r.steps.push_back({trajectory.steps[t].action.str(), reached, static_cast<std::int64_t>(t)});
    }
    r.reward = trajectory.final_reward;
    r.truncated = trajectory.truncated;
    return r;
}

ReplayOutcome replay_record(const Environment& env, const TrajectoryRecord& record) {
    ReplayOutcome out;
    try {
        Session session(env, record.goal_id);
        out.observations.push_back(session.observation());
        for (std::size_t t = 0; t < record.steps.size(); ++t) {
            StepResult r = session.step(parse_action(record.steps[t].action));
            out.observations.push_back(r.observation);
            if (r.state.page != record.steps[t].page) {
                out.message = "step " + std::to_string(t) + " reached " + to_string(r.state.page) + ", record says " +
                              to_string(record.steps[t].page);
                return out;
            }
        }
        out.reward = session.final_reward();
    } catch (const Error& e) {
        out.message = e.what();
        return out;
    }
    if (out.reward != record.reward) {
        out.message = "replayed reward differs from the record";
        return out;
    }
    out.ok = true;
    return out;
}

}  // namespace webshop
