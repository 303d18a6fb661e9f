#pragma once

#include <regex>
#include <string>
#include <vector>

#include "coach/domain.hpp"
#include "coach/errors.hpp"

namespace coach {

struct RoutingRule {
    std::string pattern;  // case-insensitive ECMAScript regex
    Intent intent = Intent::TextKnowledgeQA;
};

struct RoutingRules {
    std::vector<RoutingRule> rules;  // first match wins
    Intent default_intent = Intent::TextKnowledgeQA;
};

inline void to_json(json& j, const RoutingRule& r) {
    j = json{{"pattern", r.pattern}, {"intent", to_string(r.intent)}};
}

inline void from_json(const json& j, RoutingRule& r) {
    j.at("pattern").get_to(r.pattern);
    r.intent = intent_from_string(j.at("intent").get<std::string>());
}

inline RoutingRules default_routing_rules() {
    RoutingRules out;
    out.rules = {
        {"highlight|summar(y|ize|ise|isation|ization)|reel|compile|montage",
         Intent::VideoSummarization},
        {"rally|stroke|what happened|how many|what shot|which shot|smash|\\bserve\\b",
         Intent::VideoRallyQA},
    };
    out.default_intent = Intent::TextKnowledgeQA;
    return out;
}

inline RoutingRules routing_rules_from_json(const json& j) {
    RoutingRules out;
    out.rules = j.get<std::vector<RoutingRule>>();
    if (out.rules.empty()) throw ConfigError("routing rules file contains no rules");
    return out;
}

inline Intent classify_intent(const std::string& query_text, const RoutingRules& rules) {
    if (query_text.empty()) throw EmptyQuery();
    for (const auto& rule : rules.rules) {
        std::regex re(rule.pattern, std::regex::ECMAScript | std::regex::icase);
        if (std::regex_search(query_text, re)) return rule.intent;
    }
    return rules.default_intent;
}

/// The fixed SOP for each intent; plans never vary at runtime.
inline PolicyPlan select_policy(Intent intent) {
    PolicyPlan plan;
    plan.intent = intent;
    switch (intent) {
        case Intent::VideoRallyQA:
            plan.steps = {PolicyStep::Route, PolicyStep::Retrieve, PolicyStep::OrchestratorReason,
                          PolicyStep::CriticVerify, PolicyStep::SynthesizeAnswer};
            break;
        case Intent::VideoSummarization:
            plan.steps = {PolicyStep::Route,        PolicyStep::OrchestratorReason,
                          PolicyStep::GroundBatch,  PolicyStep::CriticVerify,
                          PolicyStep::ComposeScript, PolicyStep::ComposeMedia};
            break;
        case Intent::TextKnowledgeQA:
            plan.steps = {PolicyStep::Route, PolicyStep::OrchestratorReason};
            break;
    }
    return plan;
}

}  // namespace coach
