#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "coach/cli_app.hpp"
#include "test_support.hpp"

using namespace coach;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const std::string& name) {
    auto dir = fs::temp_directory_path() / ("coach_cli_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

fs::path write_file(const fs::path& dir, const std::string& name, const std::string& content) {
    auto path = dir / name;
    std::ofstream out(path);
    out << content;
    return path;
}

const char* kGoodCsv =
    "match_id,rally_id,stroke_index,time_s,player,stroke_type,court_zone\n"
    "m1,r1,1,10.0,Top,serve_short,front-center\n"
    "m1,r1,2,11.5,Bottom,clear,rear-left\n"
    "m1,r1,3,13.0,Top,smash,mid-center\n";

fs::path write_match_store(const fs::path& dir) {
    std::mt19937_64 rng(4);
    auto match = coach::test::random_match(rng, "m1", 4);
    return write_file(dir, "matches.jsonl", json(match).dump() + "\n");
}

}  // namespace

TEST_CASE("cmd_ingest writes a match store and reports counts") {
    auto dir = temp_dir("ingest");
    RunConfig config;
    config.annotations_path = write_file(dir, "ann.csv", kGoodCsv).string();
    config.out_dir = (dir / "out").string();
    std::ostringstream out, err;
    CHECK(cmd_ingest(config, out, err) == exit_code::kOk);
    CHECK(out.str().find("3 strokes") != std::string::npos);

    auto matches = detail::load_match_store((fs::path(config.out_dir) / "matches.jsonl").string());
    REQUIRE(matches.size() == 1);
    CHECK(matches[0].rallies.size() == 1);
    CHECK(matches[0].rallies[0].strokes.size() == 3);
}

TEST_CASE("cmd_ingest exit codes: missing file vs malformed data") {
    auto dir = temp_dir("ingest_err");
    RunConfig config;
    config.annotations_path = (dir / "nope.csv").string();
    config.out_dir = (dir / "out").string();
    std::ostringstream out, err;
    CHECK(cmd_ingest(config, out, err) == exit_code::kConfigError);

    config.annotations_path =
        write_file(dir, "bad.csv",
                   "match_id,rally_id,stroke_index,time_s,player,stroke_type,court_zone\n"
                   "m1,r1,0,10.0,Top,serve_short,front-center\n")
            .string();
    std::ostringstream out2, err2;
    CHECK(cmd_ingest(config, out2, err2) == exit_code::kDataViolation);
    CHECK(err2.str().find("stroke_index must be >= 1") != std::string::npos);
}

TEST_CASE("cmd_gen_data emits QA and captions for every rally") {
    auto dir = temp_dir("gen");
    RunConfig config;
    config.match_store_path = write_match_store(dir).string();
    config.out_dir = (dir / "out").string();
    std::ostringstream out, err;
    CHECK(cmd_gen_data(config, out, err) == exit_code::kOk);
    auto queries = detail::load_queries((fs::path(config.out_dir) / "qa.jsonl").string());
    CHECK(queries.size() == 16);  // 4 rallies x 4 categories
}

TEST_CASE("cmd_qa answers a single oracle-backed question") {
    auto dir = temp_dir("qa");
    RunConfig config;
    config.match_store_path = write_match_store(dir).string();
    config.out_dir = (dir / "out").string();
    std::ostringstream out, err;
    CHECK(cmd_qa(config, "What shot is stroke 1?", out, err) == exit_code::kOk);
    CHECK(out.str().find("Verified") != std::string::npos);
    CHECK(fs::exists(fs::path(config.out_dir) / "trace.jsonl"));
    CHECK(fs::exists(fs::path(config.out_dir) / "predictions.jsonl"));
}

TEST_CASE("cmd_qa routes non-video questions through the text path") {
    auto dir = temp_dir("qa_text");
    RunConfig config;
    config.match_store_path = write_match_store(dir).string();
    config.out_dir = (dir / "out").string();
    std::ostringstream out, err;
    CHECK(cmd_qa(config, "Who invented badminton?", out, err) == exit_code::kOk);
    CHECK(out.str().find("Verified") == std::string::npos);
}

TEST_CASE("unknown backend is a config error, dead remote a backend failure") {
    auto dir = temp_dir("backend");
    RunConfig config;
    config.match_store_path = write_match_store(dir).string();
    config.out_dir = (dir / "out").string();
    config.backend = "telepathy";
    std::ostringstream out, err;
    CHECK(cmd_qa(config, "What shot is stroke 1?", out, err) == exit_code::kConfigError);

    config.backend = "remote:http://127.0.0.1:1";
    config.dispatch.per_call_timeout_s = 1.0;
    std::ostringstream out2, err2;
    CHECK(cmd_qa(config, "What shot is stroke 1?", out2, err2) == exit_code::kBackendFailure);
}

TEST_CASE("cmd_summarize writes script, EDL and encoder command") {
    auto dir = temp_dir("summ");
    RunConfig config;
    config.match_store_path = write_match_store(dir).string();
    config.out_dir = (dir / "out").string();
    std::ostringstream out, err;
    CHECK(cmd_summarize(config, "highlight all smashes", out, err) == exit_code::kOk);
    CHECK(fs::exists(fs::path(config.out_dir) / "script.json"));
    CHECK(fs::exists(fs::path(config.out_dir) / "edl.json"));

    std::ifstream edl_file(fs::path(config.out_dir) / "edl.json");
    auto edl = json::parse(edl_file).get<EditDecisionList>();
    if (!edl.entries.empty())
        CHECK(fs::exists(fs::path(config.out_dir) / "encoder_command.txt"));

    std::ostringstream out2, err2;
    CHECK(cmd_summarize(config, "", out2, err2) == exit_code::kConfigError);
}

TEST_CASE("dry run prints requests and placeholder responses without a backend") {
    auto dir = temp_dir("dry");
    RunConfig config;
    config.match_store_path = write_match_store(dir).string();
    config.out_dir = (dir / "out").string();
    config.dry_run = true;
    std::ostringstream out, err;
    CHECK(cmd_summarize(config, "highlight all smashes", out, err) == exit_code::kOk);
    CHECK(out.str().find("\"role\":\"Orchestrator\"") != std::string::npos);
    CHECK(out.str().find("\"role\":\"Grounder\"") != std::string::npos);
}

TEST_CASE("scripted backend replays a fixture through cmd_qa") {
    auto dir = temp_dir("scripted");
    RunConfig config;
    config.match_store_path = write_match_store(dir).string();
    config.out_dir = (dir / "out").string();
    json payload = {{"branch", "TextAnswer"}, {"answer", "A shuttlecock has 16 feathers."}};
    auto fixture = write_file(dir, "script.jsonl",
                              json{{"role", "Orchestrator"}, {"payload", payload}}.dump() + "\n");
    config.backend = "scripted:" + fixture.string();
    std::ostringstream out, err;
    CHECK(cmd_qa(config, "Who invented badminton?", out, err) == exit_code::kOk);
    CHECK(out.str().find("16 feathers") != std::string::npos);
}

TEST_CASE("cmd_eval joins predictions to gold and writes a report") {
    auto dir = temp_dir("eval");
    RunConfig config;
    config.out_dir = (dir / "out").string();
    config.qa_path =
        write_file(dir, "qa.jsonl",
                   json{{"query_id", "q1"},
                        {"text", "Which strokes are smashes?"},
                        {"category", "TemporalLocalization"},
                        {"gold_strokes", {3}}}
                           .dump() +
                       "\n")
            .string();
    auto preds = write_file(dir, "pred.jsonl",
                            json{{"query_id", "q1"}, {"prediction_text", "[stroke 3]"}}.dump() +
                                "\n");
    std::ostringstream out, err;
    CHECK(cmd_eval(config, preds.string(), out, err) == exit_code::kOk);
    CHECK(out.str().find("TemporalLocalization") != std::string::npos);
    std::ifstream report(fs::path(config.out_dir) / "report.json");
    json j = json::parse(report);
    CHECK(j.at("per_category").at("TemporalLocalization").at("em_pct") == 100.0);
}
