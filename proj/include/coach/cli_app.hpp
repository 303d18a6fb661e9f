#pragma once

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "coach/agents.hpp"
#include "coach/compose.hpp"
#include "coach/dispatch.hpp"
#include "coach/domain.hpp"
#include "coach/errors.hpp"
#include "coach/ingest.hpp"
#include "coach/metrics.hpp"
#include "coach/policy.hpp"
#include "coach/remote.hpp"
#include "coach/router.hpp"

namespace coach {

namespace exit_code {
inline constexpr int kOk = 0;
inline constexpr int kConfigError = 2;
inline constexpr int kDataViolation = 3;
inline constexpr int kBackendFailure = 4;
}  // namespace exit_code

struct RunConfig {
    std::string annotations_path;
    std::string qa_path;
    std::string rules_path;
    std::string match_store_path;
    std::string out_dir = "out";
    std::string backend = "oracle";  // oracle | scripted:<path> | remote:<endpoint>
    DispatchConfig dispatch;
    PadConfig pads;
    int max_rounds = 2;
    std::uint64_t rng_seed = 0;
    bool dry_run = false;
};

namespace detail {

inline void require_readable(const std::string& path, const std::string& what) {
    if (path.empty()) throw ConfigError(what + " path not set");
    std::ifstream in(path);
    if (!in) throw ConfigError(what + " not readable: " + path);
}

inline std::vector<MatchRecord> load_match_store(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("match store not readable: " + path);
    std::vector<MatchRecord> out;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        out.push_back(json::parse(line).get<MatchRecord>());
    }
    if (out.empty()) throw ConfigError("match store is empty: " + path);
    return out;
}

inline RoutingRules load_rules(const RunConfig& config) {
    if (config.rules_path.empty()) return default_routing_rules();
    std::ifstream in(config.rules_path);
    if (!in) throw ConfigError("rules file not readable: " + config.rules_path);
    return routing_rules_from_json(json::parse(in));
}

/// Prints every would-be request and answers with a minimal schema-valid
/// placeholder so the SOP can be walked end to end without a live model.
class DryRunBackend : public AgentBackend {
public:
    explicit DryRunBackend(std::ostream& out) : out_(out) {}

    RoleResponse handle(const AgentRequest& request) override {
        out_ << json{{"request_id", request.request_id},
                     {"role", to_string(request.role)},
                     {"instruction", request.instruction},
                     {"context", request.context}}
                    .dump()
             << "\n";
        switch (request.role) {
            case AgentRole::Orchestrator: {
                OrchestratorResponse r;
                if (request.instruction.find("Decompose the request") != std::string::npos) {
                    r.branch = OrchestratorBranch::SummarizationPlan;
                    r.sub_queries = {"find all smashes"};
                } else {
                    r.branch = OrchestratorBranch::TextAnswer;
                    r.answer = "(dry run)";
                }
                return r;
            }
            case AgentRole::Grounder:
                return GrounderResponse{};
            case AgentRole::Critic: {
                CriticResponse r;
                r.assertion = "(dry run)";
                r.verdict = {VerdictKind::Supported, ""};
                return r;
            }
        }
        throw BackendUnavailable("unknown role");
    }

private:
    std::ostream& out_;
};

struct BackendHandle {
    std::unique_ptr<AgentBackend> owned;
    std::unique_ptr<std::ifstream> scripted_stream;
};

inline BackendHandle make_backend(const RunConfig& config,
                                  const std::vector<MatchRecord>& matches, std::ostream& out) {
    BackendHandle handle;
    if (config.dry_run) {
        handle.owned = std::make_unique<DryRunBackend>(out);
        return handle;
    }
    if (config.backend == "oracle") {
        handle.owned = std::make_unique<OracleBackend>(matches);
        return handle;
    }
    if (config.backend.rfind("scripted:", 0) == 0) {
        std::string path = config.backend.substr(9);
        handle.scripted_stream = std::make_unique<std::ifstream>(path);
        if (!*handle.scripted_stream)
            throw ConfigError("scripted fixture not readable: " + path);
        handle.owned = std::make_unique<ScriptedFileBackend>(*handle.scripted_stream);
        return handle;
    }
    if (config.backend.rfind("remote:", 0) == 0) {
        RemoteConfig remote;
        remote.endpoint = config.backend.substr(7);
        if (const char* env = std::getenv("COACH_REMOTE_ENDPOINT")) remote.endpoint = env;
        remote.timeout_s = config.dispatch.per_call_timeout_s;
        handle.owned = std::make_unique<RemoteBackend>(remote);
        return handle;
    }
    throw ConfigError("unknown backend: " + config.backend);
}

inline void ensure_out_dir(const RunConfig& config) {
    std::filesystem::create_directories(config.out_dir);
}

inline std::string out_path(const RunConfig& config, const std::string& name) {
    return (std::filesystem::path(config.out_dir) / name).string();
}

}  // namespace detail

inline int cmd_ingest(const RunConfig& config, std::ostream& out = std::cout,
                      std::ostream& err = std::cerr) {
    try {
        detail::require_readable(config.annotations_path, "annotations");
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << "\n";
        return exit_code::kConfigError;
    }
    try {
        std::ifstream in(config.annotations_path);
        auto annotations = parse_annotations(in);
        auto match = build_match(annotations);
        detail::ensure_out_dir(config);
        std::ofstream store(detail::out_path(config, "matches.jsonl"));
        store << json(match).dump() << "\n";
        out << "ingested " << annotations.size() << " strokes into " << match.rallies.size()
            << " rallies (match " << match.match_id << ")\n";
        return exit_code::kOk;
    } catch (const MalformedRow& e) {
        err << "malformed annotations: " << e.what() << "\n";
        return exit_code::kDataViolation;
    } catch (const MissingHeader& e) {
        err << "malformed annotations: " << e.what() << "\n";
        return exit_code::kDataViolation;
    } catch (const InvariantViolation& e) {
        err << "invariant violation: " << e.what() << "\n";
        return exit_code::kDataViolation;
    }
}

inline int cmd_gen_data(const RunConfig& config, std::ostream& out = std::cout,
                        std::ostream& err = std::cerr) {
    std::vector<MatchRecord> matches;
    try {
        matches = detail::load_match_store(config.match_store_path);
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << "\n";
        return exit_code::kConfigError;
    }
    detail::ensure_out_dir(config);
    std::ofstream qa_file(detail::out_path(config, "qa.jsonl"));
    std::ofstream caption_file(detail::out_path(config, "captions.jsonl"));
    std::map<QueryCategory, int> counts;
    std::uint64_t seed = config.rng_seed;
    for (const auto& match : matches) {
        for (const auto& rally : match.rallies) {
            caption_file << json{{"rally_id", rally.rally_id},
                                 {"caption", caption_rally(rally)}}
                                .dump()
                         << "\n";
            for (auto category :
                 {QueryCategory::ActionClassification, QueryCategory::ActionCount,
                  QueryCategory::TemporalLocalization, QueryCategory::Summarisation}) {
                auto item = synthesize_qa(rally, category, seed++);
                qa_file << json(item).dump() << "\n";
                ++counts[category];
            }
        }
    }
    for (const auto& [category, n] : counts) out << to_string(category) << ": " << n << "\n";
    return exit_code::kOk;
}

namespace detail {

inline std::vector<Query> load_queries(const std::string& qa_path) {
    std::ifstream in(qa_path);
    if (!in) throw ConfigError("qa file not readable: " + qa_path);
    std::vector<Query> out;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        out.push_back(json::parse(line).get<Query>());
    }
    return out;
}

}  // namespace detail

inline int cmd_qa(const RunConfig& config, const std::string& query_text,
                  std::ostream& out = std::cout, std::ostream& err = std::cerr) {
    std::vector<MatchRecord> matches;
    RoutingRules rules;
    try {
        matches = detail::load_match_store(config.match_store_path);
        rules = detail::load_rules(config);
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << "\n";
        return exit_code::kConfigError;
    }

    std::vector<Query> queries;
    if (!query_text.empty()) {
        Query q;
        q.query_id = "q0";
        q.text = query_text;
        queries.push_back(q);
    } else {
        try {
            queries = detail::load_queries(config.qa_path);
        } catch (const ConfigError& e) {
            err << "config error: " << e.what() << "\n";
            return exit_code::kConfigError;
        }
    }

    detail::ensure_out_dir(config);
    std::ofstream trace_file(detail::out_path(config, "trace.jsonl"));
    std::ofstream predictions(detail::out_path(config, "predictions.jsonl"));
    TraceSink trace(&trace_file);

    try {
        auto backend = detail::make_backend(config, matches, out);
        auto backends = AgentBackends::shared(*backend.owned);
        RallyQaOptions options;
        options.max_rounds = config.max_rounds;

        for (const auto& query : queries) {
            Intent intent = classify_intent(query.text, rules);
            std::string answer;
            // rally-scoped summarisation requests are answered over the rally
            // caption; whole-match reels belong to cmd_summarize
            bool rally_scope = intent == Intent::VideoRallyQA ||
                               (intent == Intent::VideoSummarization && query.rally_ref);
            if (rally_scope) {
                const Rally* rally = nullptr;
                const MatchRecord* match = &matches.front();
                if (query.rally_ref) {
                    for (const auto& m : matches)
                        if (m.match_id == query.rally_ref->first) match = &m;
                    rally = match->find_rally(query.rally_ref->second);
                } else if (!match->rallies.empty()) {
                    rally = &match->rallies.front();
                }
                if (!rally) {
                    err << "query " << query.query_id << ": rally not found\n";
                    continue;
                }
                auto verified = run_rally_qa(query, *rally, backends, options, &trace);
                answer = verified.answer_text;
                out << query.query_id << " [" << to_string(verified.status) << ", "
                    << verified.revision_rounds_used << " revisions] " << answer << "\n";
            } else {
                answer = run_text_qa(query, backends, &trace);
                out << query.query_id << " " << answer << "\n";
            }
            predictions << json{{"query_id", query.query_id}, {"prediction_text", answer}}.dump()
                        << "\n";
        }
        return exit_code::kOk;
    } catch (const Timeout& e) {
        err << "backend failure: " << e.what() << "\n";
        return exit_code::kBackendFailure;
    } catch (const BackendUnavailable& e) {
        err << "backend failure: " << e.what() << "\n";
        return exit_code::kBackendFailure;
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << "\n";
        return exit_code::kConfigError;
    }
}

inline int cmd_summarize(const RunConfig& config, const std::string& request_text,
                         std::ostream& out = std::cout, std::ostream& err = std::cerr) {
    std::vector<MatchRecord> matches;
    try {
        matches = detail::load_match_store(config.match_store_path);
        if (request_text.empty()) throw ConfigError("summarization request text is empty");
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << "\n";
        return exit_code::kConfigError;
    }

    detail::ensure_out_dir(config);
    std::ofstream trace_file(detail::out_path(config, "trace.jsonl"));
    TraceSink trace(&trace_file);

    try {
        auto backend = detail::make_backend(config, matches, out);
        auto backends = AgentBackends::shared(*backend.owned);

        Query request;
        request.query_id = "summarize0";
        request.text = request_text;
        request.category = QueryCategory::HighlightRequest;

        SummarizationOptions options;
        options.pads = config.pads;
        auto [script, edl] =
            run_summarization(request, matches.front(), backends, config.dispatch, options,
                              &trace);

        std::ofstream script_file(detail::out_path(config, "script.json"));
        script_file << json(script).dump(2) << "\n";
        std::ofstream edl_file(detail::out_path(config, "edl.json"));
        edl_file << json(edl).dump(2) << "\n";
        if (!edl.entries.empty()) {
            std::ofstream cmd_file(detail::out_path(config, "encoder_command.txt"));
            for (const auto& token : render_command(edl, detail::out_path(config, "summary.mp4")))
                cmd_file << token << "\n";
        }
        out << "script lines: " << script.lines.size() << ", EDL entries: " << edl.entries.size()
            << "\n";
        return exit_code::kOk;
    } catch (const Timeout& e) {
        err << "backend failure: " << e.what() << "\n";
        return exit_code::kBackendFailure;
    } catch (const BackendUnavailable& e) {
        err << "backend failure: " << e.what() << "\n";
        return exit_code::kBackendFailure;
    } catch (const InvariantViolation& e) {
        err << "invariant violation: " << e.what() << "\n";
        return exit_code::kDataViolation;
    }
}

inline int cmd_eval(const RunConfig& config, const std::string& predictions_path,
                    std::ostream& out = std::cout, std::ostream& err = std::cerr) {
    std::vector<Query> gold;
    try {
        gold = detail::load_queries(config.qa_path);
        detail::require_readable(predictions_path, "predictions");
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << "\n";
        return exit_code::kConfigError;
    }

    std::map<std::string, Query> by_id;
    for (const auto& q : gold) by_id[q.query_id] = q;

    std::vector<EvalRecord> records;
    std::ifstream in(predictions_path);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        json j = json::parse(line);
        std::string query_id = j.at("query_id").get<std::string>();
        auto it = by_id.find(query_id);
        if (it == by_id.end()) {
            err << "line " << line_no << ": prediction for unknown query " << query_id << "\n";
            continue;
        }
        EvalRecord record;
        record.query = it->second;
        record.prediction_text = j.value("prediction_text", "");
        if (j.contains("predicted_strokes"))
            record.predicted_strokes = j.at("predicted_strokes").get<std::vector<int>>();
        records.push_back(std::move(record));
    }

    auto report = aggregate(records);
    detail::ensure_out_dir(config);
    std::ofstream report_file(detail::out_path(config, "report.json"));
    report_file << json(report).dump(2) << "\n";
    out << render_table(report);
    return exit_code::kOk;  // evaluation is reporting, not a test
}

}  // namespace coach
