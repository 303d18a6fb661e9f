#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "coach/dispatch.hpp"
#include "test_support.hpp"

using namespace coach;

namespace {

MatchRecord fixed_match(std::uint64_t seed, int rallies = 6) {
    std::mt19937_64 rng(seed);
    return test::random_match(rng, "m1", rallies);
}

std::set<int> whole_match_oracle(const MatchRecord& match, const std::string& sub_query,
                                 std::vector<StrokeRef>* refs_out = nullptr) {
    auto spec = parse_event_spec(sub_query);
    REQUIRE(spec);
    std::set<int> dummy;
    for (const auto& rally : match.rallies) {
        for (int idx : oracle_ground(rally, *spec)) {
            if (refs_out) refs_out->push_back({rally.rally_id, idx});
            dummy.insert(idx);
        }
    }
    return dummy;
}

}  // namespace

TEST_CASE("chunk_match packs whole rallies greedily") {
    MatchRecord match;
    match.match_id = "m1";
    double t = 0.0;
    for (int i = 0; i < 3; ++i) {
        std::vector<StrokeType> types(5, StrokeType::Clear);
        types[0] = StrokeType::ServeShort;
        match.rallies.push_back(
            test::make_rally("m1", "r" + std::to_string(i + 1), t + 1.0, types));
        t += 20.0;
    }
    match.video_duration_s = 100.0;

    auto chunks = chunk_match(match, 10);
    REQUIRE(chunks.size() == 2);
    CHECK(chunks[0].rally_refs == std::vector<std::string>{"r1", "r2"});
    CHECK(chunks[1].rally_refs == std::vector<std::string>{"r3"});
    CHECK(chunks[0].stroke_count == 10);

    CHECK(chunk_match(match, 1000).size() == 1);
    CHECK(chunk_match(MatchRecord{}, 10).empty());
    CHECK_THROWS_AS(chunk_match(match, 4), RallyTooLarge);
}

TEST_CASE("chunks partition the match for random inputs") {
    std::mt19937_64 rng(13);
    for (int i = 0; i < 30; ++i) {
        auto match = test::random_match(rng, "m1", 8);
        for (int max_strokes : {8, 16, 64}) {
            auto chunks = chunk_match(match, max_strokes);
            std::vector<std::string> concat;
            for (const auto& c : chunks) {
                CHECK(c.stroke_count <= max_strokes);
                concat.insert(concat.end(), c.rally_refs.begin(), c.rally_refs.end());
            }
            std::vector<std::string> expected;
            for (const auto& r : match.rallies) expected.push_back(r.rally_id);
            CHECK(concat == expected);
        }
    }
}

TEST_CASE("dispatch_batch: merged output equals the whole-match oracle") {
    auto match = fixed_match(42);
    OracleBackend oracle({match});
    std::vector<std::string> sub_queries = {"find all smashes", "find all clears"};

    auto chunks = chunk_match(match, 8);
    auto batch = dispatch_batch(match, chunks, sub_queries, oracle, 4);
    CHECK(batch.cells.size() == sub_queries.size() * chunks.size());
    auto merged = merge_results(batch);

    for (size_t qi = 0; qi < sub_queries.size(); ++qi) {
        std::vector<StrokeRef> expected;
        whole_match_oracle(match, sub_queries[qi], &expected);
        CHECK(merged["sq" + std::to_string(qi)] == expected);
    }
}

TEST_CASE("dispatch output is identical across parallelism levels and latency shuffles") {
    auto match = fixed_match(99, 10);
    OracleBackend oracle({match});
    std::vector<std::string> sub_queries = {"find all smashes", "find all drops",
                                            "find all net shots"};
    auto chunks = chunk_match(match, 16);

    test::LatencyShuffleBackend shuffled_a(oracle, 1);
    auto base = dispatch_batch(match, chunks, sub_queries, shuffled_a, 1);
    for (int parallelism : {2, 8}) {
        test::LatencyShuffleBackend shuffled(oracle, parallelism * 1000);
        auto other = dispatch_batch(match, chunks, sub_queries, shuffled, parallelism);
        REQUIRE(other.cells.size() == base.cells.size());
        for (size_t i = 0; i < base.cells.size(); ++i) {
            CHECK(other.cells[i].sub_query_id == base.cells[i].sub_query_id);
            CHECK(other.cells[i].chunk_id == base.cells[i].chunk_id);
            CHECK(other.cells[i].result == base.cells[i].result);
        }
    }
}

TEST_CASE("a failing cell is recorded without aborting the batch") {
    auto match = fixed_match(7, 4);
    OracleBackend oracle({match});
    std::atomic<int> calls{0};
    FunctionBackend flaky([&](const AgentRequest& request) -> RoleResponse {
        if (request.request_id.find("chunk1") != std::string::npos)
            throw Timeout(0.5);
        return oracle.handle(request);
    });

    auto chunks = chunk_match(match, 8);
    REQUIRE(chunks.size() >= 2);
    auto batch = dispatch_batch(match, chunks, {"find all smashes"}, flaky, 4);
    int failed = 0;
    for (const auto& cell : batch.cells) {
        if (!cell.ok) {
            ++failed;
            CHECK(!cell.error.empty());
            CHECK(cell.chunk_id == "chunk1");
        }
    }
    CHECK(failed == 1);
}

TEST_CASE("FullBatchFailure only when every cell fails") {
    auto match = fixed_match(8, 3);
    FunctionBackend dead([](const AgentRequest&) -> RoleResponse {
        throw BackendUnavailable("down");
    });
    auto chunks = chunk_match(match, 16);
    CHECK_THROWS_AS(dispatch_batch(match, chunks, {"find all smashes"}, dead, 2),
                    FullBatchFailure);
}

TEST_CASE("in-flight bound: never more than `parallelism` concurrent calls") {
    auto match = fixed_match(3, 12);
    OracleBackend oracle({match});
    test::InstrumentedBackend instrumented(oracle);
    auto chunks = chunk_match(match, 8);
    for (int parallelism : {1, 3}) {
        test::InstrumentedBackend probe(oracle);
        dispatch_batch(match, chunks, {"find all smashes", "find all clears"}, probe,
                       parallelism);
        CHECK(probe.max_in_flight() <= parallelism);
        CHECK(probe.total_calls() == static_cast<int>(2 * chunks.size()));
    }
}

TEST_CASE("chunking invariance: merged refs independent of chunk size") {
    std::mt19937_64 rng(123);
    for (int i = 0; i < 10; ++i) {
        auto match = test::random_match(rng, "m1", 6);
        OracleBackend oracle({match});
        std::string sub_query = "find all smashes";
        std::vector<StrokeRef> expected;
        whole_match_oracle(match, sub_query, &expected);
        for (int max_strokes : {8, 16, 1 << 20}) {
            auto batch =
                dispatch_batch(match, chunk_match(match, max_strokes), {sub_query}, oracle, 4);
            CHECK(merge_results(batch)["sq0"] == expected);
        }
    }
}
