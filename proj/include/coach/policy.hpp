#pragma once

#include <mutex>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "coach/agents.hpp"
#include "coach/compose.hpp"
#include "coach/dispatch.hpp"
#include "coach/domain.hpp"
#include "coach/router.hpp"

namespace coach {

struct TraceEvent {
    std::string execution_id;
    std::string step;
    std::string role;
    std::string request_id;
    std::string summary;
};

inline void to_json(json& j, const TraceEvent& e) {
    j = json{{"execution_id", e.execution_id},
             {"step", e.step},
             {"role", e.role},
             {"request_id", e.request_id},
             {"summary", e.summary}};
}

/// Structured execution trace; appends are serialized per sink.
class TraceSink {
public:
    explicit TraceSink(std::ostream* out = nullptr) : out_(out) {}

    void emit(TraceEvent event) {
        std::lock_guard lock(mutex_);
        if (out_) *out_ << json(event).dump() << "\n";
        events_.push_back(std::move(event));
    }

    std::vector<TraceEvent> events() const {
        std::lock_guard lock(mutex_);
        return events_;
    }

    /// Steps recorded for one execution, for SOP-fidelity checks.
    std::vector<std::string> steps_for(const std::string& execution_id) const {
        std::lock_guard lock(mutex_);
        std::vector<std::string> out;
        for (const auto& e : events_)
            if (e.execution_id == execution_id &&
                (out.empty() || out.back() != e.step))
                out.push_back(e.step);
        return out;
    }

private:
    mutable std::mutex mutex_;
    std::ostream* out_;
    std::vector<TraceEvent> events_;
};

/// One backend handle per role; typically all three alias the same shared
/// backend, mirroring the single-backbone design.
struct AgentBackends {
    AgentBackend* orchestrator = nullptr;
    AgentBackend* grounder = nullptr;
    AgentBackend* critic = nullptr;

    static AgentBackends shared(AgentBackend& backend) {
        return {&backend, &backend, &backend};
    }
};

enum class AnswerStatus { Verified, UnresolvedAfterMaxRounds };

inline std::string to_string(AnswerStatus s) {
    return s == AnswerStatus::Verified ? "Verified" : "UnresolvedAfterMaxRounds";
}

struct VerifiedAnswer {
    std::string answer_text;
    std::vector<std::pair<Claim, Verdict>> claims;
    int revision_rounds_used = 0;
    AnswerStatus status = AnswerStatus::Verified;
};

struct RallyQaOptions {
    int max_rounds = 2;
    bool critic_enabled = true;
};

namespace detail {

inline void trace_step(TraceSink* trace, const std::string& execution_id, PolicyStep step,
                       const std::string& role, const std::string& request_id,
                       const std::string& summary) {
    if (trace) trace->emit({execution_id, coach::to_string(step), role, request_id, summary});
}

}  // namespace detail

/// Analytical Rally QA SOP: Route, Retrieve, OrchestratorReason, CriticVerify,
/// SynthesizeAnswer, with a bounded Orchestrator-Critic revision loop.
inline VerifiedAnswer run_rally_qa(const Query& query, const Rally& rally,
                                   const AgentBackends& backends, const RallyQaOptions& options,
                                   TraceSink* trace = nullptr) {
    const std::string& exec_id = query.query_id;
    detail::trace_step(trace, exec_id, PolicyStep::Route, "engine", "",
                       "intent VideoRallyQA");

    std::string context = caption_rally(rally);
    detail::trace_step(trace, exec_id, PolicyStep::Retrieve, "engine", "",
                       "rally " + rally.rally_id + " caption retrieved");

    VerifiedAnswer out;
    int round = 0;
    while (true) {
        std::string request_id = exec_id + "/orch" + std::to_string(round);
        auto request = make_orchestrator_qa_request(query.text, context, request_id);
        auto response = invoke(*backends.orchestrator, request);
        const auto& orch = std::get<OrchestratorResponse>(response);
        out.answer_text = orch.answer.value_or("");
        detail::trace_step(trace, exec_id, PolicyStep::OrchestratorReason, "Orchestrator",
                           request_id, out.answer_text);

        if (!options.critic_enabled) {
            out.claims.clear();
            out.status = AnswerStatus::Verified;
            break;
        }

        auto claims = extract_claims(out.answer_text, rally);
        out.claims.clear();
        std::vector<std::string> objections;
        for (size_t i = 0; i < claims.size(); ++i) {
            std::string critic_id =
                exec_id + "/critic" + std::to_string(round) + "." + std::to_string(i);
            auto critic_request = make_critic_request(claims[i], context, critic_id);
            auto critic_raw = invoke(*backends.critic, critic_request);
            const auto& critic = std::get<CriticResponse>(critic_raw);
            out.claims.emplace_back(claims[i], critic.verdict);
            detail::trace_step(trace, exec_id, PolicyStep::CriticVerify, "Critic", critic_id,
                               to_string(critic.verdict.kind) + ": " + critic.assertion);
            if (critic.verdict.kind != VerdictKind::Supported)
                objections.push_back(critic.verdict.evidence);
        }

        if (objections.empty()) {
            out.status = AnswerStatus::Verified;
            break;
        }
        if (round >= options.max_rounds) {
            out.status = AnswerStatus::UnresolvedAfterMaxRounds;
            break;
        }
        // Insufficient is treated like Refuted: the objection is fed back and
        // the Orchestrator must revise.
        for (const auto& objection : objections) context += " Evidence: " + objection + ".";
        ++round;
        out.revision_rounds_used = round;
    }

    detail::trace_step(trace, exec_id, PolicyStep::SynthesizeAnswer, "engine", "",
                       to_string(out.status));
    return out;
}

/// Text knowledge QA SOP: Route then a single Orchestrator call. No Critic or
/// Grounder is ever invoked on this path.
inline std::string run_text_qa(const Query& query, const AgentBackends& backends,
                               TraceSink* trace = nullptr) {
    const std::string& exec_id = query.query_id;
    detail::trace_step(trace, exec_id, PolicyStep::Route, "engine", "",
                       "intent TextKnowledgeQA");
    std::string request_id = exec_id + "/orch0";
    auto response =
        invoke(*backends.orchestrator, make_orchestrator_text_request(query.text, request_id));
    const auto& orch = std::get<OrchestratorResponse>(response);
    detail::trace_step(trace, exec_id, PolicyStep::OrchestratorReason, "Orchestrator", request_id,
                       orch.answer.value_or(""));
    return orch.answer.value_or("");
}

struct SummarizationOptions {
    bool critic_enabled = true;
    PadConfig pads;
};

/// Generative Video Summarization SOP: decomposition, batched grounding,
/// per-stroke Critic verification, script synthesis, EDL composition.
/// Refuted or Insufficient strokes are dropped, never passed downstream.
inline std::pair<SummaryScript, EditDecisionList> run_summarization(
    const Query& request, const MatchRecord& match, const AgentBackends& backends,
    const DispatchConfig& dispatch_cfg, const SummarizationOptions& options,
    TraceSink* trace = nullptr) {
    const std::string& exec_id = request.query_id;
    detail::trace_step(trace, exec_id, PolicyStep::Route, "engine", "",
                       "intent VideoSummarization");

    std::string plan_id = exec_id + "/plan";
    auto plan_response =
        invoke(*backends.orchestrator, make_orchestrator_plan_request(request.text, plan_id));
    const auto& orch = std::get<OrchestratorResponse>(plan_response);
    std::vector<std::string> sub_queries = orch.sub_queries.value_or(std::vector<std::string>{});
    if (sub_queries.empty()) throw NoSubQueries();
    detail::trace_step(trace, exec_id, PolicyStep::OrchestratorReason, "Orchestrator", plan_id,
                       std::to_string(sub_queries.size()) + " sub-queries");

    auto chunks = chunk_match(match, dispatch_cfg.max_chunk_strokes);
    auto batch = dispatch_batch(match, chunks, sub_queries, *backends.grounder,
                                dispatch_cfg.parallelism);
    auto merged = merge_results(batch);
    detail::trace_step(trace, exec_id, PolicyStep::GroundBatch, "Grounder", "",
                       std::to_string(batch.cells.size()) + " cells over " +
                           std::to_string(chunks.size()) + " chunks");

    // Verified (sub-query, stroke) survivors, in sub-query order.
    std::vector<std::pair<std::string, StrokeRef>> surviving;
    for (size_t qi = 0; qi < sub_queries.size(); ++qi) {
        std::string sub_id = "sq" + std::to_string(qi);
        auto it = merged.find(sub_id);
        if (it == merged.end()) continue;
        auto spec = parse_event_spec(sub_queries[qi]);
        for (const auto& ref : it->second) {
            if (!options.critic_enabled) {
                surviving.emplace_back(sub_queries[qi], ref);
                continue;
            }
            Claim claim;
            claim.match_id = match.match_id;
            claim.rally_id = ref.rally_id;
            if (spec) {
                claim.predicate = ClaimPredicate::HasStrokeType;
                claim.stroke_index = ref.stroke_index;
                claim.stroke_type = spec->stroke_type;
            } else {
                claim.predicate = ClaimPredicate::OccursAt;
                claim.stroke_index = ref.stroke_index;
            }
            std::string critic_id = exec_id + "/critic/" + sub_id + "/" + ref.rally_id + "." +
                                    std::to_string(ref.stroke_index);
            auto critic_raw =
                invoke(*backends.critic, make_critic_request(claim, "", critic_id));
            const auto& critic = std::get<CriticResponse>(critic_raw);
            detail::trace_step(trace, exec_id, PolicyStep::CriticVerify, "Critic", critic_id,
                               to_string(critic.verdict.kind) + ": " + critic.assertion);
            if (critic.verdict.kind == VerdictKind::Supported)
                surviving.emplace_back(sub_queries[qi], ref);
        }
    }
    if (options.critic_enabled && surviving.empty())
        detail::trace_step(trace, exec_id, PolicyStep::CriticVerify, "Critic", "",
                           "no strokes survived verification");

    SummaryScript script;
    script.title = request.text;
    for (const auto& [sub_query, ref] : surviving) {
        ScriptLine line;
        const Rally* rally = match.find_rally(ref.rally_id);
        if (rally && ref.stroke_index >= 1 &&
            ref.stroke_index <= static_cast<int>(rally->strokes.size())) {
            line.narration = "Rally " + ref.rally_id + ", " +
                             caption_stroke(rally->strokes[ref.stroke_index - 1]);
        } else {
            line.narration =
                "Rally " + ref.rally_id + ", stroke " + std::to_string(ref.stroke_index) + ".";
        }
        line.stroke_refs = {ref};
        script.lines.push_back(std::move(line));
    }
    detail::trace_step(trace, exec_id, PolicyStep::ComposeScript, "engine", "",
                       std::to_string(script.lines.size()) + " narration lines");

    auto edl = build_edl(match, script, options.pads);
    detail::trace_step(trace, exec_id, PolicyStep::ComposeMedia, "engine", "",
                       std::to_string(edl.entries.size()) + " EDL entries");
    return {std::move(script), std::move(edl)};
}

}  // namespace coach
