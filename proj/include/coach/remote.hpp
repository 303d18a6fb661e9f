#pragma once

#include <string>

#include <httplib.h>

#include "coach/agents.hpp"

namespace coach {

struct RemoteConfig {
    std::string endpoint;        // e.g. "http://localhost:8080"
    double timeout_s = 30.0;
    int retries = 1;
};

/// Speaks the wire protocol: POST /invoke with
/// {request_id, role, instruction, context} and expects
/// {request_id, role, payload}; the payload is schema-validated per role
/// before anything is returned to the caller.
class RemoteBackend : public AgentBackend {
public:
    explicit RemoteBackend(RemoteConfig config) : config_(std::move(config)) {}

    RoleResponse handle(const AgentRequest& request) override {
        json body{{"request_id", request.request_id},
                  {"role", to_string(request.role)},
                  {"instruction", request.instruction},
                  {"context", request.context}};
        std::string payload = body.dump();

        for (int attempt = 0; attempt <= config_.retries; ++attempt) {
            httplib::Client client(config_.endpoint);
            auto secs = static_cast<time_t>(config_.timeout_s);
            auto usecs = static_cast<time_t>((config_.timeout_s - secs) * 1e6);
            client.set_connection_timeout(secs, usecs);
            client.set_read_timeout(secs, usecs);

            auto res = client.Post("/invoke", payload, "application/json");
            if (!res) {
                bool timed_out = res.error() == httplib::Error::ConnectionTimeout ||
                                 res.error() == httplib::Error::Read;
                if (attempt < config_.retries) continue;
                if (timed_out) throw Timeout(config_.timeout_s);
                throw BackendUnavailable("remote backend unreachable: " +
                                         httplib::to_string(res.error()));
            }
            if (res->status != 200) {
                if (attempt < config_.retries) continue;
                throw BackendUnavailable("remote backend returned HTTP " +
                                         std::to_string(res->status));
            }
            json reply;
            try {
                reply = json::parse(res->body);
            } catch (const std::exception&) {
                throw SchemaViolation(res->body, "response is not valid JSON");
            }
            if (!reply.contains("payload"))
                throw SchemaViolation(res->body, "response carries no payload");
            return response_from_payload(request.role, reply.at("payload"));
        }
        throw BackendUnavailable("remote backend unreachable");
    }

private:
    RemoteConfig config_;
};

}  // namespace coach
