#pragma once

#include <deque>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <regex>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include "coach/domain.hpp"
#include "coach/errors.hpp"
#include "coach/ingest.hpp"

namespace coach {

enum class AgentRole { Orchestrator, Grounder, Critic };

inline std::string to_string(AgentRole r) {
    switch (r) {
        case AgentRole::Orchestrator: return "Orchestrator";
        case AgentRole::Grounder: return "Grounder";
        case AgentRole::Critic: return "Critic";
    }
    return "Orchestrator";
}

inline AgentRole agent_role_from_string(const std::string& s) {
    for (auto r : {AgentRole::Orchestrator, AgentRole::Grounder, AgentRole::Critic})
        if (to_string(r) == s) return r;
    throw CoachError("unknown agent role: " + s);
}

inline std::string role_prefix(AgentRole role) {
    switch (role) {
        case AgentRole::Orchestrator:
            return "You are an Orchestrator Agent responsible for planning and synthesis.";
        case AgentRole::Grounder:
            return "You are a Grounder Agent responsible for temporal localization.";
        case AgentRole::Critic:
            return "You are a Critic Agent responsible for fact verification.";
    }
    return "";
}

struct AgentRequest {
    AgentRole role = AgentRole::Orchestrator;
    std::string instruction;  // begins with role_prefix(role)
    std::string context;
    std::string request_id;

    bool valid() const { return instruction.rfind(role_prefix(role), 0) == 0; }
};

enum class OrchestratorBranch { TextAnswer, VideoReasoning, SummarizationPlan };

inline std::string to_string(OrchestratorBranch b) {
    switch (b) {
        case OrchestratorBranch::TextAnswer: return "TextAnswer";
        case OrchestratorBranch::VideoReasoning: return "VideoReasoning";
        case OrchestratorBranch::SummarizationPlan: return "SummarizationPlan";
    }
    return "TextAnswer";
}

inline OrchestratorBranch orchestrator_branch_from_string(const std::string& s) {
    for (auto b : {OrchestratorBranch::TextAnswer, OrchestratorBranch::VideoReasoning,
                   OrchestratorBranch::SummarizationPlan})
        if (to_string(b) == s) return b;
    throw CoachError("unknown orchestrator branch: " + s);
}

struct OrchestratorResponse {
    OrchestratorBranch branch = OrchestratorBranch::TextAnswer;
    std::optional<std::string> answer;                   // iff branch != SummarizationPlan
    std::optional<std::vector<std::string>> sub_queries; // iff branch == SummarizationPlan
    std::string reasoning_trace;
};

struct GrounderResponse {
    std::vector<StrokeRef> stroke_refs;  // sorted, deduplicated; no free-form text
};

enum class ClaimPredicate { HasStrokeType, CountEquals, OccursAt };

inline std::string to_string(ClaimPredicate p) {
    switch (p) {
        case ClaimPredicate::HasStrokeType: return "HasStrokeType";
        case ClaimPredicate::CountEquals: return "CountEquals";
        case ClaimPredicate::OccursAt: return "OccursAt";
    }
    return "HasStrokeType";
}

inline ClaimPredicate claim_predicate_from_string(const std::string& s) {
    for (auto p : {ClaimPredicate::HasStrokeType, ClaimPredicate::CountEquals,
                   ClaimPredicate::OccursAt})
        if (to_string(p) == s) return p;
    throw CoachError("unknown claim predicate: " + s);
}

struct Claim {
    std::string match_id;
    std::string rally_id;
    ClaimPredicate predicate = ClaimPredicate::HasStrokeType;
    int stroke_index = 0;               // HasStrokeType / OccursAt subject
    std::optional<StrokeType> stroke_type;  // HasStrokeType value, CountEquals target
    std::optional<int> count;           // CountEquals value

    friend bool operator==(const Claim&, const Claim&) = default;
};

inline void to_json(json& j, const Claim& c) {
    j = json{{"match_id", c.match_id},
             {"rally_id", c.rally_id},
             {"predicate", to_string(c.predicate)},
             {"stroke_index", c.stroke_index}};
    if (c.stroke_type) j["stroke_type"] = to_string(*c.stroke_type);
    if (c.count) j["count"] = *c.count;
}

inline void from_json(const json& j, Claim& c) {
    j.at("match_id").get_to(c.match_id);
    j.at("rally_id").get_to(c.rally_id);
    c.predicate = claim_predicate_from_string(j.at("predicate").get<std::string>());
    j.at("stroke_index").get_to(c.stroke_index);
    c.stroke_type.reset();
    c.count.reset();
    if (j.contains("stroke_type"))
        c.stroke_type = stroke_type_from_string(j.at("stroke_type").get<std::string>());
    if (j.contains("count")) c.count = j.at("count").get<int>();
}

/// Renders a claim as the sentence form the Critic adjudicates.
inline std::string claim_text(const Claim& c) {
    switch (c.predicate) {
        case ClaimPredicate::HasStrokeType:
            return "Stroke " + std::to_string(c.stroke_index) + " in rally " + c.rally_id +
                   " is a " + (c.stroke_type ? stroke_type_phrase(*c.stroke_type) : "?") + ".";
        case ClaimPredicate::CountEquals:
            return "Rally " + c.rally_id + " contains " +
                   std::to_string(c.count.value_or(0)) + " " +
                   detail::pluralize(c.stroke_type ? stroke_type_phrase(*c.stroke_type) : "?") +
                   ".";
        case ClaimPredicate::OccursAt:
            return "Stroke " + std::to_string(c.stroke_index) + " occurs in rally " + c.rally_id +
                   ".";
    }
    return "";
}

struct CriticResponse {
    std::string assertion;
    std::vector<StrokeRef> evidence_cited;
    Verdict verdict;
};

using RoleResponse = std::variant<OrchestratorResponse, GrounderResponse, CriticResponse>;

inline AgentRole response_role(const RoleResponse& r) {
    switch (r.index()) {
        case 0: return AgentRole::Orchestrator;
        case 1: return AgentRole::Grounder;
        default: return AgentRole::Critic;
    }
}

// ---------------------------------------------------------------------------
// Grounder report parsing

/// Ordered, deduplicated stroke indices from a bracketed "[stroke 3, stroke 7]" report.
inline std::vector<int> parse_grounder_order(const std::string& text) {
    auto open = text.find('[');
    auto close = text.find(']', open == std::string::npos ? 0 : open);
    if (open == std::string::npos || close == std::string::npos) {
        static const std::regex no_evidence("no (visual )?evidence", std::regex::icase);
        if (std::regex_search(text, no_evidence)) return {};
        throw UnparseableReport(text);
    }
    std::string inside = text.substr(open + 1, close - open - 1);
    static const std::regex token("stroke\\s*(\\d+)", std::regex::icase);
    std::vector<int> out;
    for (auto it = std::sregex_iterator(inside.begin(), inside.end(), token);
         it != std::sregex_iterator(); ++it) {
        int idx = std::stoi((*it)[1].str());
        if (std::find(out.begin(), out.end(), idx) == out.end()) out.push_back(idx);
    }
    return out;
}

/// Sorted-set form of the grounder report; "[]" and "no evidence" yield the empty set.
inline std::set<int> parse_grounder_text(const std::string& text) {
    auto ordered = parse_grounder_order(text);
    return {ordered.begin(), ordered.end()};
}

// ---------------------------------------------------------------------------
// Event specs ("find all smashes", "find all smashes by the upper player")

struct EventSpec {
    StrokeType stroke_type = StrokeType::Smash;
    std::optional<Player> player;

    friend bool operator==(const EventSpec&, const EventSpec&) = default;
};

inline std::string event_spec_text(const EventSpec& spec) {
    std::string out = "find all " + detail::pluralize(stroke_type_phrase(spec.stroke_type));
    if (spec.player)
        out += std::string(" by the ") + (*spec.player == Player::Top ? "upper" : "lower") +
               " player";
    return out;
}

inline std::optional<StrokeType> find_stroke_type_in_text(const std::string& lower_text) {
    // Longest phrase first so "short serve" wins over a bare "serve".
    static const std::vector<std::pair<std::string, StrokeType>> kPhrases = [] {
        std::vector<std::pair<std::string, StrokeType>> v;
        for (StrokeType t : all_stroke_types()) {
            v.emplace_back(stroke_type_phrase(t), t);
            v.emplace_back(to_string(t), t);
        }
        std::sort(v.begin(), v.end(),
                  [](const auto& a, const auto& b) { return a.first.size() > b.first.size(); });
        return v;
    }();
    size_t best_pos = std::string::npos;
    std::optional<StrokeType> best;
    for (const auto& [phrase, type] : kPhrases) {
        std::regex re("\\b" + phrase + "(e?s)?\\b");
        std::smatch m;
        if (std::regex_search(lower_text, m, re)) {
            size_t pos = static_cast<size_t>(m.position(0));
            if (pos < best_pos) {
                best_pos = pos;
                best = type;
            }
        }
    }
    return best;
}

inline std::string to_lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
}

inline std::optional<EventSpec> parse_event_spec(const std::string& text) {
    std::string lower = to_lower(text);
    auto type = find_stroke_type_in_text(lower);
    if (!type) return std::nullopt;
    EventSpec spec;
    spec.stroke_type = *type;
    if (lower.find("upper player") != std::string::npos ||
        lower.find("top player") != std::string::npos)
        spec.player = Player::Top;
    else if (lower.find("lower player") != std::string::npos ||
             lower.find("bottom player") != std::string::npos)
        spec.player = Player::Bottom;
    return spec;
}

// ---------------------------------------------------------------------------
// Deterministic oracles over annotations

inline std::set<int> oracle_ground(const Rally& rally, const EventSpec& spec) {
    std::set<int> out;
    for (const auto& s : rally.strokes) {
        if (s.stroke_type != spec.stroke_type) continue;
        if (spec.player && s.player != *spec.player) continue;
        out.insert(s.stroke_index);
    }
    return out;
}

inline CriticResponse oracle_critic(const Claim& claim, const Rally& rally) {
    CriticResponse out;
    out.assertion = claim_text(claim);
    const int n = static_cast<int>(rally.strokes.size());
    switch (claim.predicate) {
        case ClaimPredicate::HasStrokeType: {
            if (claim.stroke_index < 1 || claim.stroke_index > n) {
                out.verdict = {VerdictKind::Insufficient,
                               "stroke " + std::to_string(claim.stroke_index) +
                                   " is out of range; rally has " + std::to_string(n) +
                                   " strokes"};
                return out;
            }
            const auto& stroke = rally.strokes[claim.stroke_index - 1];
            out.evidence_cited.push_back({rally.rally_id, claim.stroke_index});
            if (claim.stroke_type && stroke.stroke_type == *claim.stroke_type) {
                out.verdict = {VerdictKind::Supported,
                               "stroke " + std::to_string(claim.stroke_index) +
                                   " is annotated as a " +
                                   stroke_type_phrase(stroke.stroke_type)};
            } else {
                out.verdict = {VerdictKind::Refuted,
                               "stroke " + std::to_string(claim.stroke_index) +
                                   " is annotated as a " +
                                   stroke_type_phrase(stroke.stroke_type) + ", not a " +
                                   (claim.stroke_type ? stroke_type_phrase(*claim.stroke_type)
                                                      : "?")};
            }
            return out;
        }
        case ClaimPredicate::CountEquals: {
            if (!claim.stroke_type || !claim.count) {
                out.verdict = {VerdictKind::Insufficient, "malformed count claim"};
                return out;
            }
            std::vector<int> where;
            for (const auto& s : rally.strokes)
                if (s.stroke_type == *claim.stroke_type) where.push_back(s.stroke_index);
            std::string listed = "[";
            for (size_t i = 0; i < where.size(); ++i) {
                if (i) listed += ", ";
                listed += "stroke " + std::to_string(where[i]);
                out.evidence_cited.push_back({rally.rally_id, where[i]});
            }
            listed += "]";
            int actual = static_cast<int>(where.size());
            if (actual == *claim.count) {
                out.verdict = {VerdictKind::Supported,
                               "count confirmed at " + listed};
            } else {
                out.verdict = {VerdictKind::Refuted,
                               "actual count of " +
                                   detail::pluralize(stroke_type_phrase(*claim.stroke_type)) +
                                   " is " + std::to_string(actual) + " at " + listed};
            }
            return out;
        }
        case ClaimPredicate::OccursAt: {
            if (claim.stroke_index >= 1 && claim.stroke_index <= n) {
                out.evidence_cited.push_back({rally.rally_id, claim.stroke_index});
                out.verdict = {VerdictKind::Supported,
                               "stroke " + std::to_string(claim.stroke_index) + " exists"};
            } else {
                out.verdict = {VerdictKind::Insufficient,
                               "stroke " + std::to_string(claim.stroke_index) +
                                   " is out of range; rally has " + std::to_string(n) +
                                   " strokes"};
            }
            return out;
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Claim extraction from free-text answers

namespace detail {

inline std::optional<int> number_token_value(const std::string& token) {
    static const std::vector<std::string> kWords = {
        "zero", "one", "two", "three", "four", "five", "six", "seven", "eight", "nine", "ten",
        "eleven", "twelve", "thirteen", "fourteen", "fifteen", "sixteen", "seventeen",
        "eighteen", "nineteen", "twenty"};
    for (size_t i = 0; i < kWords.size(); ++i)
        if (token == kWords[i]) return static_cast<int>(i);
    if (!token.empty() && std::all_of(token.begin(), token.end(),
                                      [](unsigned char c) { return std::isdigit(c); }))
        return std::stoi(token);
    return std::nullopt;
}

}  // namespace detail

/// Pattern-extracts HasStrokeType ("stroke N is/was a X"), CountEquals ("N Xs")
/// and OccursAt ("stroke N") claims; unmatched text yields no claims.
inline std::vector<Claim> extract_claims(const std::string& answer_text, const Rally& rally) {
    std::vector<Claim> out;
    std::string lower = to_lower(answer_text);
    std::set<int> typed_strokes;

    static const std::regex has_type(
        "stroke\\s+(\\d+)\\s+(?:is|was)\\s+(?:a|an)\\s+([a-z_ ]+?)[.,;!?]");
    for (auto it = std::sregex_iterator(lower.begin(), lower.end(), has_type);
         it != std::sregex_iterator(); ++it) {
        auto type = find_stroke_type_in_text((*it)[2].str() + ".");
        if (!type) continue;
        Claim c;
        c.match_id = rally.match_id;
        c.rally_id = rally.rally_id;
        c.predicate = ClaimPredicate::HasStrokeType;
        c.stroke_index = std::stoi((*it)[1].str());
        c.stroke_type = *type;
        typed_strokes.insert(c.stroke_index);
        if (std::find(out.begin(), out.end(), c) == out.end()) out.push_back(c);
    }

    static const std::regex count_form("\\b(\\d+|zero|one|two|three|four|five|six|seven|eight|"
                                       "nine|ten|eleven|twelve|thirteen|fourteen|fifteen|sixteen|"
                                       "seventeen|eighteen|nineteen|twenty)\\s+([a-z_ ]+?s)\\b");
    for (auto it = std::sregex_iterator(lower.begin(), lower.end(), count_form);
         it != std::sregex_iterator(); ++it) {
        auto value = detail::number_token_value((*it)[1].str());
        auto type = find_stroke_type_in_text((*it)[2].str());
        if (!value || !type) continue;
        Claim c;
        c.match_id = rally.match_id;
        c.rally_id = rally.rally_id;
        c.predicate = ClaimPredicate::CountEquals;
        c.stroke_type = *type;
        c.count = *value;
        if (std::find(out.begin(), out.end(), c) == out.end()) out.push_back(c);
    }

    static const std::regex bare_stroke("stroke\\s+(\\d+)");
    for (auto it = std::sregex_iterator(lower.begin(), lower.end(), bare_stroke);
         it != std::sregex_iterator(); ++it) {
        int idx = std::stoi((*it)[1].str());
        if (typed_strokes.count(idx)) continue;  // already covered by a HasStrokeType claim
        Claim c;
        c.match_id = rally.match_id;
        c.rally_id = rally.rally_id;
        c.predicate = ClaimPredicate::OccursAt;
        c.stroke_index = idx;
        if (std::find(out.begin(), out.end(), c) == out.end()) out.push_back(c);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Request construction (shared grammar between callers and backends)

inline AgentRequest make_orchestrator_qa_request(const std::string& question,
                                                 const std::string& caption_context,
                                                 const std::string& request_id) {
    return {AgentRole::Orchestrator,
            role_prefix(AgentRole::Orchestrator) + " Answer the question: " + question,
            caption_context, request_id};
}

inline AgentRequest make_orchestrator_text_request(const std::string& question,
                                                   const std::string& request_id) {
    return {AgentRole::Orchestrator,
            role_prefix(AgentRole::Orchestrator) + " Answer from internal knowledge: " + question,
            "", request_id};
}

inline AgentRequest make_orchestrator_plan_request(const std::string& request_text,
                                                   const std::string& request_id) {
    return {AgentRole::Orchestrator,
            role_prefix(AgentRole::Orchestrator) +
                " Decompose the request into grounding sub-queries: " + request_text,
            "", request_id};
}

/// Chunk context: {"match_id": ..., "rallies": [{"rally_id": ..., "caption": ...}, ...]}
inline AgentRequest make_grounder_request(const std::string& sub_query,
                                          const json& chunk_context,
                                          const std::string& request_id) {
    return {AgentRole::Grounder,
            role_prefix(AgentRole::Grounder) + " " + sub_query +
                ". Report the matching strokes as a bracketed list.",
            chunk_context.dump(), request_id};
}

inline AgentRequest make_critic_request(const Claim& claim, const std::string& evidence_context,
                                        const std::string& request_id) {
    return {AgentRole::Critic,
            role_prefix(AgentRole::Critic) + " Verify the claim: " + json(claim).dump(),
            evidence_context, request_id};
}

// ---------------------------------------------------------------------------
// Role-schema validation for wire payloads

inline RoleResponse response_from_payload(AgentRole role, const json& payload) {
    auto fail = [&](const std::string& why) -> SchemaViolation {
        return SchemaViolation(payload.dump(), why);
    };
    try {
        switch (role) {
            case AgentRole::Orchestrator: {
                OrchestratorResponse r;
                r.branch =
                    orchestrator_branch_from_string(payload.at("branch").get<std::string>());
                if (payload.contains("answer")) r.answer = payload.at("answer").get<std::string>();
                if (payload.contains("sub_queries"))
                    r.sub_queries = payload.at("sub_queries").get<std::vector<std::string>>();
                r.reasoning_trace = payload.value("reasoning_trace", "");
                bool plan = r.branch == OrchestratorBranch::SummarizationPlan;
                if (plan && (r.answer || !r.sub_queries))
                    throw fail("SummarizationPlan requires sub_queries and no answer");
                if (!plan && (!r.answer || r.sub_queries))
                    throw fail("non-plan branch requires answer and no sub_queries");
                return r;
            }
            case AgentRole::Grounder: {
                // Rigid Observe -> Report contract: the only allowed key is stroke_refs.
                for (auto it = payload.begin(); it != payload.end(); ++it)
                    if (it.key() != "stroke_refs")
                        throw fail("grounder payload may not carry free-form field '" + it.key() +
                                   "'");
                GrounderResponse r;
                r.stroke_refs = payload.at("stroke_refs").get<std::vector<StrokeRef>>();
                std::sort(r.stroke_refs.begin(), r.stroke_refs.end());
                r.stroke_refs.erase(std::unique(r.stroke_refs.begin(), r.stroke_refs.end()),
                                    r.stroke_refs.end());
                return r;
            }
            case AgentRole::Critic: {
                CriticResponse r;
                r.assertion = payload.at("assertion").get<std::string>();
                if (payload.contains("evidence_cited"))
                    r.evidence_cited =
                        payload.at("evidence_cited").get<std::vector<StrokeRef>>();
                const auto& v = payload.at("verdict");
                r.verdict.kind = verdict_kind_from_string(v.at("kind").get<std::string>());
                r.verdict.evidence = v.value("evidence", "");
                if (!r.verdict.valid())
                    throw fail("Refuted/Insufficient verdict requires non-empty evidence");
                return r;
            }
        }
    } catch (const SchemaViolation&) {
        throw;
    } catch (const std::exception& e) {
        throw fail(e.what());
    }
    throw fail("unknown role");
}

inline json payload_from_response(const RoleResponse& response) {
    json j;
    if (const auto* o = std::get_if<OrchestratorResponse>(&response)) {
        j["branch"] = to_string(o->branch);
        if (o->answer) j["answer"] = *o->answer;
        if (o->sub_queries) j["sub_queries"] = *o->sub_queries;
        j["reasoning_trace"] = o->reasoning_trace;
    } else if (const auto* g = std::get_if<GrounderResponse>(&response)) {
        j["stroke_refs"] = g->stroke_refs;
    } else if (const auto* c = std::get_if<CriticResponse>(&response)) {
        j["assertion"] = c->assertion;
        j["evidence_cited"] = c->evidence_cited;
        j["verdict"] = json{{"kind", to_string(c->verdict.kind)},
                            {"evidence", c->verdict.evidence}};
    }
    return j;
}

// ---------------------------------------------------------------------------
// Backends

class AgentBackend {
public:
    virtual ~AgentBackend() = default;
    virtual RoleResponse handle(const AgentRequest& request) = 0;
};

/// Role-schema closure: whatever the backend returns, the caller only ever sees
/// a variant matching the requested role or a SchemaViolation.
inline RoleResponse invoke(AgentBackend& backend, const AgentRequest& request) {
    if (!request.valid())
        throw SchemaViolation(request.instruction, "instruction does not start with role prefix");
    RoleResponse response = backend.handle(request);
    if (response_role(response) != request.role)
        throw SchemaViolation("", "backend returned " + to_string(response_role(response)) +
                                      " variant for a " + to_string(request.role) + " request");
    return response;
}

/// Deterministic backend computed from ground-truth annotations. One shared
/// handle serves all three roles, switching behavior on the instruction prefix.
class OracleBackend : public AgentBackend {
public:
    explicit OracleBackend(std::vector<MatchRecord> matches) {
        for (auto& m : matches) matches_[m.match_id] = std::move(m);
    }

    RoleResponse handle(const AgentRequest& request) override {
        switch (request.role) {
            case AgentRole::Orchestrator: return handle_orchestrator(request);
            case AgentRole::Grounder: return handle_grounder(request);
            case AgentRole::Critic: return handle_critic(request);
        }
        throw BackendUnavailable("unknown role");
    }

    const MatchRecord* find_match(const std::string& match_id) const {
        auto it = matches_.find(match_id);
        return it == matches_.end() ? nullptr : &it->second;
    }

private:
    std::map<std::string, MatchRecord> matches_;

    struct CaptionFact {
        int stroke_index;
        Player player;
        std::string phrase;
    };

    // Recovers stroke facts from the caption sentences in the request context.
    static std::vector<CaptionFact> parse_caption_facts(const std::string& context) {
        static const std::regex sentence(
            "Stroke (\\d+): the (upper|lower) player plays an? ([a-z ]+?) from the");
        std::vector<CaptionFact> out;
        for (auto it = std::sregex_iterator(context.begin(), context.end(), sentence);
             it != std::sregex_iterator(); ++it) {
            CaptionFact f;
            f.stroke_index = std::stoi((*it)[1].str());
            f.player = (*it)[2].str() == "upper" ? Player::Top : Player::Bottom;
            f.phrase = (*it)[3].str();
            out.push_back(f);
        }
        return out;
    }

    RoleResponse handle_orchestrator(const AgentRequest& request) {
        const std::string& instr = request.instruction;
        OrchestratorResponse r;
        if (instr.find("Answer from internal knowledge:") != std::string::npos) {
            r.branch = OrchestratorBranch::TextAnswer;
            r.answer = "I have no grounded knowledge for this question.";
            r.reasoning_trace = "text branch: single-step answer";
            return r;
        }
        if (instr.find("Decompose the request") != std::string::npos) {
            r.branch = OrchestratorBranch::SummarizationPlan;
            std::vector<std::string> subs;
            std::string lower = to_lower(instr.substr(instr.find("sub-queries:")));
            for (StrokeType t : all_stroke_types()) {
                std::regex re("\\b" + stroke_type_phrase(t) + "(e?s)?\\b");
                if (std::regex_search(lower, re))
                    subs.push_back(event_spec_text({t, std::nullopt}));
            }
            if (subs.empty()) subs.push_back(event_spec_text({StrokeType::Smash, std::nullopt}));
            r.sub_queries = subs;
            r.reasoning_trace = "plan branch: one sub-query per requested stroke type";
            return r;
        }
        // Video reasoning over the caption context.
        r.branch = OrchestratorBranch::VideoReasoning;
        auto facts = parse_caption_facts(request.context);
        std::string question = instr.substr(instr.find("Answer the question:") + 20);
        std::string lower_q = to_lower(question);

        std::smatch m;
        static const std::regex what_shot("what shot is stroke (\\d+)", std::regex::icase);
        static const std::regex how_many("how many ", std::regex::icase);
        static const std::regex which("which strokes|when does", std::regex::icase);
        if (std::regex_search(question, m, what_shot)) {
            int idx = std::stoi(m[1].str());
            for (const auto& f : facts)
                if (f.stroke_index == idx) {
                    r.answer = "Stroke " + std::to_string(idx) + " is " +
                               detail::article_for(f.phrase) + " " + f.phrase + ".";
                    break;
                }
            if (!r.answer) r.answer = "Stroke " + std::to_string(idx) + " is not in the evidence.";
            r.reasoning_trace = "looked up stroke " + std::to_string(idx) + " in the caption";
        } else if (std::regex_search(question, how_many)) {
            auto type = find_stroke_type_in_text(lower_q);
            int count = 0;
            if (type)
                for (const auto& f : facts)
                    if (f.phrase == stroke_type_phrase(*type)) ++count;
            std::string phrase = type ? stroke_type_phrase(*type) : "matching stroke";
            r.answer = "There are " + std::to_string(count) + " " + detail::pluralize(phrase) +
                       " in this rally.";
            r.reasoning_trace = "counted caption sentences matching the stroke type";
        } else if (std::regex_search(question, which)) {
            auto type = find_stroke_type_in_text(lower_q);
            std::vector<int> hits;
            if (type)
                for (const auto& f : facts)
                    if (f.phrase == stroke_type_phrase(*type)) hits.push_back(f.stroke_index);
            if (hits.empty()) {
                r.answer = "No visual evidence found: []";
            } else {
                std::string listed = "[";
                for (size_t i = 0; i < hits.size(); ++i) {
                    if (i) listed += ", ";
                    listed += "stroke " + std::to_string(hits[i]);
                }
                r.answer = "The matching strokes are " + listed + "].";
            }
            r.reasoning_trace = "scanned caption sentences for the stroke type";
        } else if (lower_q.find("summarize") != std::string::npos ||
                   lower_q.find("summarise") != std::string::npos) {
            r.answer = request.context;
            r.reasoning_trace = "summarized by replaying the dense caption";
        } else {
            r.answer = "I cannot answer this question from the evidence.";
            r.reasoning_trace = "no template matched";
        }
        return r;
    }

    RoleResponse handle_grounder(const AgentRequest& request) {
        auto spec = parse_event_spec(request.instruction.substr(role_prefix(request.role).size()));
        if (!spec) return GrounderResponse{};
        json ctx = json::parse(request.context);
        const MatchRecord* match = find_match(ctx.at("match_id").get<std::string>());
        if (!match) throw BackendUnavailable("unknown match in grounder context");
        GrounderResponse r;
        for (const auto& entry : ctx.at("rallies")) {
            std::string rally_id = entry.at("rally_id").get<std::string>();
            const Rally* rally = match->find_rally(rally_id);
            if (!rally) continue;
            for (int idx : oracle_ground(*rally, *spec)) r.stroke_refs.push_back({rally_id, idx});
        }
        return r;
    }

    RoleResponse handle_critic(const AgentRequest& request) {
        auto open = request.instruction.find('{');
        if (open == std::string::npos) throw BackendUnavailable("critic request carries no claim");
        Claim claim = json::parse(request.instruction.substr(open)).get<Claim>();
        const MatchRecord* match = find_match(claim.match_id);
        if (!match) throw BackendUnavailable("unknown match in critic claim");
        const Rally* rally = match->find_rally(claim.rally_id);
        if (!rally) {
            CriticResponse r;
            r.assertion = claim_text(claim);
            r.verdict = {VerdictKind::Insufficient, "rally " + claim.rally_id + " not found"};
            return r;
        }
        return oracle_critic(claim, *rally);
    }
};

/// Backend driven by a std::function; the workhorse for scripted test fixtures.
class FunctionBackend : public AgentBackend {
public:
    using Handler = std::function<RoleResponse(const AgentRequest&)>;
    explicit FunctionBackend(Handler handler) : handler_(std::move(handler)) {}
    RoleResponse handle(const AgentRequest& request) override { return handler_(request); }

private:
    Handler handler_;
};

/// Replays canned responses from a JSONL fixture ({"role": ..., "payload": ...}),
/// one FIFO queue per role.
class ScriptedFileBackend : public AgentBackend {
public:
    explicit ScriptedFileBackend(std::istream& in) {
        std::string line;
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            json j = json::parse(line);
            AgentRole role = agent_role_from_string(j.at("role").get<std::string>());
            queues_[role].push_back(j.at("payload"));
        }
    }

    RoleResponse handle(const AgentRequest& request) override {
        std::lock_guard lock(mutex_);
        auto& queue = queues_[request.role];
        if (queue.empty())
            throw BackendUnavailable("scripted fixture exhausted for role " +
                                     to_string(request.role));
        json payload = queue.front();
        queue.pop_front();
        return response_from_payload(request.role, payload);
    }

private:
    std::mutex mutex_;
    std::map<AgentRole, std::deque<json>> queues_;
};

}  // namespace coach
