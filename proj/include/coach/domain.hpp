#pragma once

#include <algorithm>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "coach/errors.hpp"

namespace coach {

using json = nlohmann::json;

enum class Player { Top, Bottom };

enum class StrokeType {
    ServeShort,
    ServeLong,
    Clear,
    Drop,
    Smash,
    Drive,
    NetShot,
    Lob,
    Push,
    Block,
    Other
};

enum class ZoneDepth { Front, Mid, Rear };
enum class ZoneLane { Left, Center, Right };

struct CourtZone {
    ZoneDepth depth = ZoneDepth::Mid;
    ZoneLane lane = ZoneLane::Center;
    friend bool operator==(const CourtZone&, const CourtZone&) = default;
};

inline std::string to_string(Player p) { return p == Player::Top ? "Top" : "Bottom"; }

inline Player player_from_string(const std::string& s) {
    if (s == "Top") return Player::Top;
    if (s == "Bottom") return Player::Bottom;
    throw CoachError("unknown player: " + s);
}

/// Canonical snake_case token, used in files and as the normalized answer vocabulary.
inline std::string to_string(StrokeType t) {
    switch (t) {
        case StrokeType::ServeShort: return "serve_short";
        case StrokeType::ServeLong: return "serve_long";
        case StrokeType::Clear: return "clear";
        case StrokeType::Drop: return "drop";
        case StrokeType::Smash: return "smash";
        case StrokeType::Drive: return "drive";
        case StrokeType::NetShot: return "net_shot";
        case StrokeType::Lob: return "lob";
        case StrokeType::Push: return "push";
        case StrokeType::Block: return "block";
        case StrokeType::Other: return "other";
    }
    return "other";
}

inline const std::vector<StrokeType>& all_stroke_types() {
    static const std::vector<StrokeType> kAll = {
        StrokeType::ServeShort, StrokeType::ServeLong, StrokeType::Clear,
        StrokeType::Drop,       StrokeType::Smash,     StrokeType::Drive,
        StrokeType::NetShot,    StrokeType::Lob,       StrokeType::Push,
        StrokeType::Block,      StrokeType::Other};
    return kAll;
}

inline StrokeType stroke_type_from_string(const std::string& s) {
    for (StrokeType t : all_stroke_types())
        if (to_string(t) == s) return t;
    throw CoachError("unknown stroke_type: " + s);
}

/// Human-readable stroke name used in captions and answers ("short serve", "net shot").
inline std::string stroke_type_phrase(StrokeType t) {
    switch (t) {
        case StrokeType::ServeShort: return "short serve";
        case StrokeType::ServeLong: return "long serve";
        case StrokeType::NetShot: return "net shot";
        default: return to_string(t);
    }
}

inline std::string to_string(ZoneDepth d) {
    switch (d) {
        case ZoneDepth::Front: return "front";
        case ZoneDepth::Mid: return "mid";
        case ZoneDepth::Rear: return "rear";
    }
    return "mid";
}

inline std::string to_string(ZoneLane l) {
    switch (l) {
        case ZoneLane::Left: return "left";
        case ZoneLane::Center: return "center";
        case ZoneLane::Right: return "right";
    }
    return "center";
}

/// "front-center" form used by the CSV schema.
inline std::string to_string(const CourtZone& z) {
    return to_string(z.depth) + "-" + to_string(z.lane);
}

inline CourtZone court_zone_from_string(const std::string& s) {
    auto dash = s.find('-');
    if (dash == std::string::npos) throw CoachError("unknown court_zone: " + s);
    std::string d = s.substr(0, dash), l = s.substr(dash + 1);
    CourtZone z;
    if (d == "front") z.depth = ZoneDepth::Front;
    else if (d == "mid") z.depth = ZoneDepth::Mid;
    else if (d == "rear") z.depth = ZoneDepth::Rear;
    else throw CoachError("unknown court_zone: " + s);
    if (l == "left") z.lane = ZoneLane::Left;
    else if (l == "center") z.lane = ZoneLane::Center;
    else if (l == "right") z.lane = ZoneLane::Right;
    else throw CoachError("unknown court_zone: " + s);
    return z;
}

struct StrokeAnnotation {
    std::string match_id;
    std::string rally_id;
    int stroke_index = 1;  // 1-based within rally
    double time_s = 0.0;
    Player player = Player::Top;
    StrokeType stroke_type = StrokeType::Other;
    CourtZone court_zone;

    friend bool operator==(const StrokeAnnotation&, const StrokeAnnotation&) = default;
};

struct Rally {
    std::string match_id;
    std::string rally_id;
    std::vector<StrokeAnnotation> strokes;
    std::optional<Player> winner;

    friend bool operator==(const Rally&, const Rally&) = default;
};

struct MatchRecord {
    std::string match_id;
    std::vector<Rally> rallies;
    double video_duration_s = 0.0;

    const Rally* find_rally(const std::string& rally_id) const {
        for (const auto& r : rallies)
            if (r.rally_id == rally_id) return &r;
        return nullptr;
    }

    friend bool operator==(const MatchRecord&, const MatchRecord&) = default;
};

enum class QueryCategory {
    ActionClassification,
    ActionCount,
    TemporalLocalization,
    Summarisation,
    KnowledgeQA,
    HighlightRequest
};

inline std::string to_string(QueryCategory c) {
    switch (c) {
        case QueryCategory::ActionClassification: return "ActionClassification";
        case QueryCategory::ActionCount: return "ActionCount";
        case QueryCategory::TemporalLocalization: return "TemporalLocalization";
        case QueryCategory::Summarisation: return "Summarisation";
        case QueryCategory::KnowledgeQA: return "KnowledgeQA";
        case QueryCategory::HighlightRequest: return "HighlightRequest";
    }
    return "KnowledgeQA";
}

inline QueryCategory query_category_from_string(const std::string& s) {
    for (auto c : {QueryCategory::ActionClassification, QueryCategory::ActionCount,
                   QueryCategory::TemporalLocalization, QueryCategory::Summarisation,
                   QueryCategory::KnowledgeQA, QueryCategory::HighlightRequest})
        if (to_string(c) == s) return c;
    throw CoachError("unknown query category: " + s);
}

struct Query {
    std::string query_id;
    std::string text;
    QueryCategory category = QueryCategory::KnowledgeQA;
    std::optional<std::string> gold_answer;
    std::optional<std::set<int>> gold_strokes;  // empty set = negative query
    std::optional<std::pair<std::string, std::string>> rally_ref;  // (match_id, rally_id)

    friend bool operator==(const Query&, const Query&) = default;
};

enum class Intent { TextKnowledgeQA, VideoRallyQA, VideoSummarization };

inline std::string to_string(Intent i) {
    switch (i) {
        case Intent::TextKnowledgeQA: return "TextKnowledgeQA";
        case Intent::VideoRallyQA: return "VideoRallyQA";
        case Intent::VideoSummarization: return "VideoSummarization";
    }
    return "TextKnowledgeQA";
}

inline Intent intent_from_string(const std::string& s) {
    for (auto i : {Intent::TextKnowledgeQA, Intent::VideoRallyQA, Intent::VideoSummarization})
        if (to_string(i) == s) return i;
    throw CoachError("unknown intent: " + s);
}

enum class PolicyStep {
    Route,
    Retrieve,
    OrchestratorReason,
    GroundBatch,
    CriticVerify,
    SynthesizeAnswer,
    ComposeScript,
    ComposeMedia
};

inline std::string to_string(PolicyStep s) {
    switch (s) {
        case PolicyStep::Route: return "Route";
        case PolicyStep::Retrieve: return "Retrieve";
        case PolicyStep::OrchestratorReason: return "OrchestratorReason";
        case PolicyStep::GroundBatch: return "GroundBatch";
        case PolicyStep::CriticVerify: return "CriticVerify";
        case PolicyStep::SynthesizeAnswer: return "SynthesizeAnswer";
        case PolicyStep::ComposeScript: return "ComposeScript";
        case PolicyStep::ComposeMedia: return "ComposeMedia";
    }
    return "Route";
}

struct PolicyPlan {
    Intent intent = Intent::TextKnowledgeQA;
    std::vector<PolicyStep> steps;

    friend bool operator==(const PolicyPlan&, const PolicyPlan&) = default;
};

enum class VerdictKind { Supported, Refuted, Insufficient };

inline std::string to_string(VerdictKind v) {
    switch (v) {
        case VerdictKind::Supported: return "Supported";
        case VerdictKind::Refuted: return "Refuted";
        case VerdictKind::Insufficient: return "Insufficient";
    }
    return "Supported";
}

inline VerdictKind verdict_kind_from_string(const std::string& s) {
    for (auto v : {VerdictKind::Supported, VerdictKind::Refuted, VerdictKind::Insufficient})
        if (to_string(v) == s) return v;
    throw CoachError("unknown verdict: " + s);
}

struct Verdict {
    VerdictKind kind = VerdictKind::Supported;
    std::string evidence;  // must be non-empty for Refuted / Insufficient

    bool valid() const { return kind == VerdictKind::Supported || !evidence.empty(); }
    friend bool operator==(const Verdict&, const Verdict&) = default;
};

struct TimeSegment {
    double start_s = 0.0;
    double end_s = 0.0;
    std::string label;

    friend bool operator==(const TimeSegment&, const TimeSegment&) = default;
};

struct StrokeRef {
    std::string rally_id;
    int stroke_index = 0;

    friend bool operator==(const StrokeRef&, const StrokeRef&) = default;
    friend auto operator<=>(const StrokeRef&, const StrokeRef&) = default;
};

struct GroundingResult {
    std::string sub_query_id;
    std::string chunk_id;
    std::vector<StrokeRef> stroke_refs;  // sorted, no duplicates; empty is valid

    friend bool operator==(const GroundingResult&, const GroundingResult&) = default;
};

// ---------------------------------------------------------------------------
// validate_rally

inline std::vector<std::string> validate_rally(const Rally& rally) {
    std::vector<std::string> out;
    if (rally.strokes.empty()) {
        out.push_back("rally is empty");
        return out;
    }
    const auto& first = rally.strokes.front();
    if (first.stroke_type != StrokeType::ServeShort && first.stroke_type != StrokeType::ServeLong)
        out.push_back("stroke_type of stroke 1 is not a serve");
    for (size_t i = 0; i < rally.strokes.size(); ++i) {
        const auto& s = rally.strokes[i];
        int expected = static_cast<int>(i) + 1;
        if (s.match_id != rally.match_id)
            out.push_back("match_id mismatch at stroke " + std::to_string(expected));
        if (s.rally_id != rally.rally_id)
            out.push_back("rally_id mismatch at stroke " + std::to_string(expected));
        if (s.stroke_index < 1)
            out.push_back("stroke_index must be >= 1 at stroke " + std::to_string(expected));
        if (s.stroke_index != expected)
            out.push_back("stroke_index not contiguous at stroke " + std::to_string(expected));
        if (s.time_s < 0.0)
            out.push_back("time_s negative at stroke " + std::to_string(expected));
        if (i > 0) {
            if (s.time_s <= rally.strokes[i - 1].time_s)
                out.push_back("time_s not increasing at stroke " + std::to_string(s.stroke_index));
            if (s.player == rally.strokes[i - 1].player)
                out.push_back("player alternation violated at stroke " +
                              std::to_string(s.stroke_index));
        }
    }
    return out;
}

inline std::vector<std::string> validate_match(const MatchRecord& match) {
    std::vector<std::string> out;
    double prev_end = -1.0;
    for (const auto& rally : match.rallies) {
        auto v = validate_rally(rally);
        for (auto& msg : v) out.push_back("rally " + rally.rally_id + ": " + msg);
        if (rally.strokes.empty()) continue;
        if (rally.strokes.front().time_s <= prev_end)
            out.push_back("rally " + rally.rally_id + " overlaps the previous rally");
        prev_end = rally.strokes.back().time_s;
        if (prev_end > match.video_duration_s)
            out.push_back("rally " + rally.rally_id + " extends past video_duration_s");
    }
    return out;
}

// ---------------------------------------------------------------------------
// JSON encoding (snake_case, canonical on-disk form)

inline void to_json(json& j, const StrokeAnnotation& s) {
    j = json{{"match_id", s.match_id},
             {"rally_id", s.rally_id},
             {"stroke_index", s.stroke_index},
             {"time_s", s.time_s},
             {"player", to_string(s.player)},
             {"stroke_type", to_string(s.stroke_type)},
             {"court_zone", to_string(s.court_zone)}};
}

inline void from_json(const json& j, StrokeAnnotation& s) {
    j.at("match_id").get_to(s.match_id);
    j.at("rally_id").get_to(s.rally_id);
    j.at("stroke_index").get_to(s.stroke_index);
    j.at("time_s").get_to(s.time_s);
    s.player = player_from_string(j.at("player").get<std::string>());
    s.stroke_type = stroke_type_from_string(j.at("stroke_type").get<std::string>());
    s.court_zone = court_zone_from_string(j.at("court_zone").get<std::string>());
}

inline void to_json(json& j, const Rally& r) {
    j = json{{"match_id", r.match_id}, {"rally_id", r.rally_id}, {"strokes", r.strokes}};
    if (r.winner) j["winner"] = to_string(*r.winner);
}

inline void from_json(const json& j, Rally& r) {
    j.at("match_id").get_to(r.match_id);
    j.at("rally_id").get_to(r.rally_id);
    j.at("strokes").get_to(r.strokes);
    if (j.contains("winner")) r.winner = player_from_string(j.at("winner").get<std::string>());
    else r.winner.reset();
}

inline void to_json(json& j, const MatchRecord& m) {
    j = json{{"match_id", m.match_id},
             {"rallies", m.rallies},
             {"video_duration_s", m.video_duration_s}};
}

inline void from_json(const json& j, MatchRecord& m) {
    j.at("match_id").get_to(m.match_id);
    j.at("rallies").get_to(m.rallies);
    j.at("video_duration_s").get_to(m.video_duration_s);
}

inline void to_json(json& j, const Query& q) {
    j = json{{"query_id", q.query_id},
             {"text", q.text},
             {"category", to_string(q.category)}};
    if (q.gold_answer) j["gold_answer"] = *q.gold_answer;
    if (q.gold_strokes) j["gold_strokes"] = *q.gold_strokes;
    if (q.rally_ref) j["rally_ref"] = json{{"match_id", q.rally_ref->first},
                                           {"rally_id", q.rally_ref->second}};
}

inline void from_json(const json& j, Query& q) {
    j.at("query_id").get_to(q.query_id);
    j.at("text").get_to(q.text);
    q.category = query_category_from_string(j.at("category").get<std::string>());
    q.gold_answer.reset();
    q.gold_strokes.reset();
    q.rally_ref.reset();
    if (j.contains("gold_answer")) q.gold_answer = j.at("gold_answer").get<std::string>();
    if (j.contains("gold_strokes")) q.gold_strokes = j.at("gold_strokes").get<std::set<int>>();
    if (j.contains("rally_ref"))
        q.rally_ref = std::make_pair(j.at("rally_ref").at("match_id").get<std::string>(),
                                     j.at("rally_ref").at("rally_id").get<std::string>());
}

inline void to_json(json& j, const TimeSegment& s) {
    j = json{{"start_s", s.start_s}, {"end_s", s.end_s}, {"label", s.label}};
}

inline void from_json(const json& j, TimeSegment& s) {
    j.at("start_s").get_to(s.start_s);
    j.at("end_s").get_to(s.end_s);
    j.at("label").get_to(s.label);
}

inline void to_json(json& j, const StrokeRef& r) {
    j = json{{"rally_id", r.rally_id}, {"stroke_index", r.stroke_index}};
}

inline void from_json(const json& j, StrokeRef& r) {
    j.at("rally_id").get_to(r.rally_id);
    j.at("stroke_index").get_to(r.stroke_index);
}

inline void to_json(json& j, const GroundingResult& g) {
    j = json{{"sub_query_id", g.sub_query_id},
             {"chunk_id", g.chunk_id},
             {"stroke_refs", g.stroke_refs}};
}

inline void from_json(const json& j, GroundingResult& g) {
    j.at("sub_query_id").get_to(g.sub_query_id);
    j.at("chunk_id").get_to(g.chunk_id);
    j.at("stroke_refs").get_to(g.stroke_refs);
}

}  // namespace coach
