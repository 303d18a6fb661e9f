#pragma once

#include <chrono>
#include <random>
#include <thread>
#include <vector>

#include "coach/agents.hpp"
#include "coach/domain.hpp"

namespace coach::test {

inline StrokeType serve_for(std::mt19937_64& rng) {
    return std::uniform_int_distribution<int>(0, 1)(rng) == 0 ? StrokeType::ServeShort
                                                              : StrokeType::ServeLong;
}

inline CourtZone random_zone(std::mt19937_64& rng) {
    CourtZone z;
    z.depth = static_cast<ZoneDepth>(std::uniform_int_distribution<int>(0, 2)(rng));
    z.lane = static_cast<ZoneLane>(std::uniform_int_distribution<int>(0, 2)(rng));
    return z;
}

/// Well-formed rally with the given stroke types, alternating players and
/// strictly increasing times starting at start_time.
inline Rally make_rally(const std::string& match_id, const std::string& rally_id,
                        double start_time, const std::vector<StrokeType>& types,
                        Player first_player = Player::Top) {
    Rally rally;
    rally.match_id = match_id;
    rally.rally_id = rally_id;
    for (size_t i = 0; i < types.size(); ++i) {
        StrokeAnnotation s;
        s.match_id = match_id;
        s.rally_id = rally_id;
        s.stroke_index = static_cast<int>(i) + 1;
        s.time_s = start_time + static_cast<double>(i) * 1.5;
        s.player = (i % 2 == 0) == (first_player == Player::Top) ? Player::Top : Player::Bottom;
        s.stroke_type = types[i];
        rally.strokes.push_back(s);
    }
    return rally;
}

inline Rally random_rally(std::mt19937_64& rng, const std::string& match_id,
                          const std::string& rally_id, double start_time, int max_len = 12) {
    int len = std::uniform_int_distribution<int>(1, max_len)(rng);
    std::vector<StrokeType> types;
    types.push_back(serve_for(rng));
    for (int i = 1; i < len; ++i) {
        // skip the serve types for non-opening strokes
        int t = std::uniform_int_distribution<int>(2, 10)(rng);
        types.push_back(static_cast<StrokeType>(t));
    }
    Player first =
        std::uniform_int_distribution<int>(0, 1)(rng) == 0 ? Player::Top : Player::Bottom;
    Rally rally = make_rally(match_id, rally_id, start_time, types, first);
    for (auto& s : rally.strokes) s.court_zone = random_zone(rng);
    return rally;
}

inline MatchRecord random_match(std::mt19937_64& rng, const std::string& match_id,
                                int n_rallies, int max_rally_len = 8) {
    MatchRecord match;
    match.match_id = match_id;
    double t = 1.0;
    for (int i = 0; i < n_rallies; ++i) {
        auto rally = random_rally(rng, match_id, "r" + std::to_string(i + 1), t, max_rally_len);
        t = rally.strokes.back().time_s + 4.0;
        match.rallies.push_back(std::move(rally));
    }
    match.video_duration_s = t + 10.0;
    return match;
}

/// Wraps a backend and sleeps a random few milliseconds per call, shuffling
/// completion order across workers.
class LatencyShuffleBackend : public AgentBackend {
public:
    LatencyShuffleBackend(AgentBackend& inner, std::uint64_t seed)
        : inner_(inner), rng_(seed) {}

    RoleResponse handle(const AgentRequest& request) override {
        int delay_us;
        {
            std::lock_guard lock(mutex_);
            delay_us = std::uniform_int_distribution<int>(0, 2000)(rng_);
        }
        std::this_thread::sleep_for(std::chrono::microseconds(delay_us));
        return inner_.handle(request);
    }

private:
    AgentBackend& inner_;
    std::mutex mutex_;
    std::mt19937_64 rng_;
};

/// Counts concurrent in-flight calls and remembers the maximum observed.
class InstrumentedBackend : public AgentBackend {
public:
    explicit InstrumentedBackend(AgentBackend& inner) : inner_(inner) {}

    RoleResponse handle(const AgentRequest& request) override {
        int now = ++in_flight_;
        int seen = max_in_flight_.load();
        while (now > seen && !max_in_flight_.compare_exchange_weak(seen, now)) {
        }
        ++total_calls_;
        std::this_thread::sleep_for(std::chrono::microseconds(200));
        auto out = inner_.handle(request);
        --in_flight_;
        return out;
    }

    int max_in_flight() const { return max_in_flight_.load(); }
    int total_calls() const { return total_calls_.load(); }

private:
    AgentBackend& inner_;
    std::atomic<int> in_flight_{0};
    std::atomic<int> max_in_flight_{0};
    std::atomic<int> total_calls_{0};
};

}  // namespace coach::test
