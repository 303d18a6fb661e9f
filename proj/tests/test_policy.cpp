#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "coach/policy.hpp"
#include "test_support.hpp"

using namespace coach;

namespace {

MatchRecord smash_match() {
    // 3 rallies, 4 smashes total, spaced so padded clips never touch
    MatchRecord match;
    match.match_id = "m1";
    match.rallies = {
        test::make_rally("m1", "r1", 10.0,
                         {StrokeType::ServeShort, StrokeType::Clear, StrokeType::Smash,
                          StrokeType::Block, StrokeType::Clear, StrokeType::Drop,
                          StrokeType::Smash}),
        test::make_rally("m1", "r2", 40.0,
                         {StrokeType::ServeLong, StrokeType::Drive, StrokeType::NetShot}),
        test::make_rally("m1", "r3", 70.0,
                         {StrokeType::ServeShort, StrokeType::Lob, StrokeType::Smash,
                          StrokeType::Push, StrokeType::Clear, StrokeType::Clear,
                          StrokeType::Smash}),
    };
    match.video_duration_s = 120.0;
    return match;
}

Query qa_query(const std::string& text) {
    Query q;
    q.query_id = "q1";
    q.text = text;
    q.category = QueryCategory::ActionClassification;
    q.rally_ref = {"m1", "r1"};
    return q;
}

}  // namespace

TEST_CASE("run_rally_qa with oracle backends verifies on the first round") {
    auto match = smash_match();
    OracleBackend oracle({match});
    auto backends = AgentBackends::shared(oracle);
    TraceSink trace;

    auto result = run_rally_qa(qa_query("What shot is stroke 3?"), match.rallies[0], backends,
                               {}, &trace);
    CHECK(result.answer_text.find("smash") != std::string::npos);
    CHECK(result.status == AnswerStatus::Verified);
    CHECK(result.revision_rounds_used == 0);
    REQUIRE(!result.claims.empty());
    for (const auto& [claim, verdict] : result.claims)
        CHECK(verdict.kind == VerdictKind::Supported);
}

TEST_CASE("a refuted first answer is revised and then verified") {
    auto match = smash_match();
    OracleBackend oracle({match});
    int orch_calls = 0;
    FunctionBackend faulty([&](const AgentRequest& request) -> RoleResponse {
        ++orch_calls;
        OrchestratorResponse r;
        r.branch = OrchestratorBranch::VideoReasoning;
        r.answer = orch_calls == 1 ? "Stroke 3 was a clear." : "Stroke 3 was a smash.";
        return r;
    });
    AgentBackends backends{&faulty, &oracle, &oracle};
    TraceSink trace;

    auto result = run_rally_qa(qa_query("What shot is stroke 3?"), match.rallies[0], backends,
                               {}, &trace);
    CHECK(result.status == AnswerStatus::Verified);
    CHECK(result.revision_rounds_used == 1);
    CHECK(result.answer_text == "Stroke 3 was a smash.");
    CHECK(orch_calls == 2);

    bool saw_refuted = false;
    for (const auto& e : trace.events())
        if (e.summary.rfind("Refuted", 0) == 0) saw_refuted = true;
    CHECK(saw_refuted);
}

TEST_CASE("a never-correcting orchestrator terminates unresolved at max_rounds") {
    auto match = smash_match();
    OracleBackend oracle({match});
    int orch_calls = 0;
    FunctionBackend stubborn([&](const AgentRequest&) -> RoleResponse {
        ++orch_calls;
        OrchestratorResponse r;
        r.branch = OrchestratorBranch::VideoReasoning;
        r.answer = "Stroke 3 was a clear.";
        return r;
    });
    AgentBackends backends{&stubborn, &oracle, &oracle};

    RallyQaOptions options;
    options.max_rounds = 2;
    auto result =
        run_rally_qa(qa_query("What shot is stroke 3?"), match.rallies[0], backends, options);
    CHECK(result.status == AnswerStatus::UnresolvedAfterMaxRounds);
    CHECK(result.revision_rounds_used == 2);
    CHECK(orch_calls == 3);  // initial + max_rounds revisions
    REQUIRE(!result.claims.empty());
    CHECK(result.claims[0].second.kind == VerdictKind::Refuted);
}

TEST_CASE("a refuted claim never silently disappears from the trace") {
    auto match = smash_match();
    OracleBackend oracle({match});
    FunctionBackend stubborn([&](const AgentRequest&) -> RoleResponse {
        OrchestratorResponse r;
        r.branch = OrchestratorBranch::VideoReasoning;
        r.answer = "Stroke 3 was a clear.";
        return r;
    });
    AgentBackends backends{&stubborn, &oracle, &oracle};
    auto result =
        run_rally_qa(qa_query("What shot is stroke 3?"), match.rallies[0], backends, {});
    bool refuted_present = false;
    for (const auto& [claim, verdict] : result.claims)
        refuted_present |= verdict.kind == VerdictKind::Refuted;
    CHECK(refuted_present);
}

TEST_CASE("run_text_qa makes exactly one backend call, no Critic or Grounder") {
    int calls = 0;
    FunctionBackend scripted([&](const AgentRequest& request) -> RoleResponse {
        ++calls;
        CHECK(request.role == AgentRole::Orchestrator);
        OrchestratorResponse r;
        r.branch = OrchestratorBranch::TextAnswer;
        r.answer = "X";
        return r;
    });
    auto backends = AgentBackends::shared(scripted);
    TraceSink trace;
    Query q;
    q.query_id = "t1";
    q.text = "What is the service-court rule in doubles?";

    CHECK(run_text_qa(q, backends, &trace) == "X");
    CHECK(calls == 1);
    CHECK(run_text_qa(q, backends) == "X");  // deterministic backend, identical answer
    for (const auto& e : trace.events()) {
        CHECK(e.role != "Critic");
        CHECK(e.role != "Grounder");
    }
    CHECK(trace.steps_for("t1") ==
          std::vector<std::string>{"Route", "OrchestratorReason"});
}

TEST_CASE("backend timeout surfaces without a partial answer") {
    FunctionBackend dead([](const AgentRequest&) -> RoleResponse { throw Timeout(30.0); });
    auto backends = AgentBackends::shared(dead);
    Query q;
    q.query_id = "t2";
    q.text = "anything";
    CHECK_THROWS_AS(run_text_qa(q, backends), Timeout);
}

TEST_CASE("SOP fidelity: rally QA trace steps match the fixed plan") {
    auto match = smash_match();
    OracleBackend oracle({match});
    auto backends = AgentBackends::shared(oracle);
    TraceSink trace;
    run_rally_qa(qa_query("What shot is stroke 3?"), match.rallies[0], backends, {}, &trace);
    CHECK(trace.steps_for("q1") ==
          std::vector<std::string>{"Route", "Retrieve", "OrchestratorReason", "CriticVerify",
                                   "SynthesizeAnswer"});
}

TEST_CASE("termination: single-claim answers stay within the call budget") {
    auto match = smash_match();
    OracleBackend oracle({match});
    test::InstrumentedBackend counted(oracle);
    auto backends = AgentBackends::shared(counted);
    RallyQaOptions options;
    options.max_rounds = 2;
    run_rally_qa(qa_query("What shot is stroke 3?"), match.rallies[0], backends, options);
    int plan_len = static_cast<int>(select_policy(Intent::VideoRallyQA).steps.size());
    CHECK(counted.total_calls() <= plan_len + options.max_rounds * 2);
}

TEST_CASE("oracle end-to-end: synthesized QA answers reproduce gold") {
    std::mt19937_64 rng(71);
    auto match = test::random_match(rng, "m1", 5);
    OracleBackend oracle({match});
    auto backends = AgentBackends::shared(oracle);
    for (const auto& rally : match.rallies) {
        for (auto category : {QueryCategory::ActionClassification, QueryCategory::ActionCount}) {
            auto item = synthesize_qa(rally, category, rng());
            auto result = run_rally_qa(item.query, rally, backends, {});
            CHECK(result.status == AnswerStatus::Verified);
            // lightweight gold comparison; full EM sweep lives in the acceptance suite
            auto contains_gold = to_lower(result.answer_text).find(
                                     to_lower(*item.query.gold_answer)) != std::string::npos;
            CHECK(contains_gold);
        }
    }
}

TEST_CASE("run_summarization with oracle backends grounds every smash") {
    auto match = smash_match();
    OracleBackend oracle({match});
    auto backends = AgentBackends::shared(oracle);
    TraceSink trace;
    Query request;
    request.query_id = "s1";
    request.text = "highlight all smashes";
    request.category = QueryCategory::HighlightRequest;

    auto [script, edl] = run_summarization(request, match, backends, {}, {}, &trace);
    std::vector<StrokeRef> cited;
    for (const auto& line : script.lines)
        cited.insert(cited.end(), line.stroke_refs.begin(), line.stroke_refs.end());
    CHECK(cited == std::vector<StrokeRef>{{"r1", 3}, {"r1", 7}, {"r3", 3}, {"r3", 7}});
    CHECK(edl.entries.size() == 4);
    CHECK(trace.steps_for("s1") ==
          std::vector<std::string>{"Route", "OrchestratorReason", "GroundBatch", "CriticVerify",
                                   "ComposeScript", "ComposeMedia"});
}

TEST_CASE("sub-queries that all ground to nothing yield empty script and EDL") {
    auto match = smash_match();
    OracleBackend oracle({match});
    auto backends = AgentBackends::shared(oracle);
    Query request;
    request.query_id = "s2";
    request.text = "highlight all blocks by nobody";  // grounds via oracle: blocks exist...
    request.text = "highlight every moment";          // no stroke type -> default smash
    // force a truly empty grounding with a scripted plan over a smash-free match
    MatchRecord calm;
    calm.match_id = "m2";
    calm.rallies = {test::make_rally("m2", "r1", 5.0,
                                     {StrokeType::ServeShort, StrokeType::Clear})};
    calm.video_duration_s = 30.0;
    OracleBackend calm_oracle({calm});
    auto calm_backends = AgentBackends::shared(calm_oracle);
    request.text = "highlight all smashes";
    auto [script, edl] = run_summarization(request, calm, calm_backends, {}, {});
    CHECK(script.lines.empty());
    CHECK(edl.entries.empty());
}

TEST_CASE("NoSubQueries when the plan is empty") {
    auto match = smash_match();
    OracleBackend oracle({match});
    FunctionBackend empty_planner([](const AgentRequest&) -> RoleResponse {
        OrchestratorResponse r;
        r.branch = OrchestratorBranch::SummarizationPlan;
        r.sub_queries = std::vector<std::string>{};
        return r;
    });
    AgentBackends backends{&empty_planner, &oracle, &oracle};
    Query request;
    request.query_id = "s3";
    request.text = "highlight all smashes";
    CHECK_THROWS_AS(run_summarization(request, match, backends, {}, {}), NoSubQueries);
}

TEST_CASE("a hallucinated stroke is filtered by the Critic but passes without it") {
    auto match = smash_match();
    OracleBackend oracle({match});
    // Grounder that adds r2/stroke 2 (a drive, not a smash) to every chunk report
    FunctionBackend hallucinating([&](const AgentRequest& request) -> RoleResponse {
        auto response = oracle.handle(request);
        if (auto* g = std::get_if<GrounderResponse>(&response)) {
            json ctx = json::parse(request.context);
            for (const auto& entry : ctx.at("rallies"))
                if (entry.at("rally_id") == "r2") g->stroke_refs.push_back({"r2", 2});
        }
        return response;
    });
    AgentBackends backends{&oracle, &hallucinating, &oracle};
    Query request;
    request.query_id = "s4";
    request.text = "highlight all smashes";

    auto [script, edl] = run_summarization(request, match, backends, {}, {});
    for (const auto& line : script.lines)
        for (const auto& ref : line.stroke_refs) CHECK(!(ref == StrokeRef{"r2", 2}));
    CHECK(edl.entries.size() == 4);

    SummarizationOptions no_critic;
    no_critic.critic_enabled = false;
    auto [script2, edl2] = run_summarization(request, match, backends, {}, no_critic);
    bool leaked = false;
    for (const auto& line : script2.lines)
        for (const auto& ref : line.stroke_refs) leaked |= ref == StrokeRef{"r2", 2};
    CHECK(leaked);
}

TEST_CASE("verification soundness: no contradicted stroke reaches the EDL") {
    std::mt19937_64 rng(81);
    for (int trial = 0; trial < 10; ++trial) {
        auto match = test::random_match(rng, "m1", 4);
        OracleBackend oracle({match});
        FunctionBackend noisy([&](const AgentRequest& request) -> RoleResponse {
            auto response = oracle.handle(request);
            if (auto* g = std::get_if<GrounderResponse>(&response)) {
                json ctx = json::parse(request.context);
                std::string first = ctx.at("rallies")[0].at("rally_id");
                g->stroke_refs.push_back({first, 1});  // serve, never a smash
            }
            return response;
        });
        AgentBackends backends{&oracle, &noisy, &oracle};
        Query request;
        request.query_id = "s5";
        request.text = "highlight all smashes";
        auto [script, edl] = run_summarization(request, match, backends, {}, {});
        for (const auto& line : script.lines) {
            for (const auto& ref : line.stroke_refs) {
                const Rally* rally = match.find_rally(ref.rally_id);
                REQUIRE(rally);
                CHECK(rally->strokes[ref.stroke_index - 1].stroke_type == StrokeType::Smash);
            }
        }
    }
}
