#include <gtest/gtest.h>

#include <filesystem>
#include <sstream>

#include "cli.hpp"
#include "test_support.hpp"

namespace sm = storymovie;
namespace fs = std::filesystem;
using sm::testing::fixture;
using sm::testing::read_file;

namespace {

struct RunResult {
  int code;
  std::string out;
  std::string err;
};

RunResult run_cli(std::vector<std::string> args) {
  args.insert(args.begin(), "storymovie");
  std::ostringstream out;
  std::ostringstream err;
  const int code = sm::cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("storymovie_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string path(const std::string& name) const { return (dir_ / name).string(); }
  void write(const std::string& name, const std::string& content) const {
    std::ofstream(dir_ / name, std::ios::binary) << content;
  }

  fs::path dir_;
};

std::string script_path() { return fixture("two_speaker.txt").string(); }
std::string srt_path() { return fixture("two_speaker.srt").string(); }

}  // namespace

TEST_F(CliTest, NoArgumentsPrintsUsage) {
  auto r = run_cli({});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("Usage:"), std::string::npos);
  EXPECT_TRUE(r.out.empty());
}

TEST_F(CliTest, UsageErrorShowsSubcommandHelp) {
  auto r = run_cli({"parse-srt"});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("Usage: parse-srt"), std::string::npos);
  r = run_cli({"align", "--script", script_path()});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("--srt"), std::string::npos);
  EXPECT_EQ(run_cli({"frobnicate"}).code, 1);
}

TEST_F(CliTest, HelpExitsZero) {
  auto r = run_cli({"align", "--help"});
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("--jobs"), std::string::npos);
}

TEST_F(CliTest, ParseScriptMatchesLibrary) {
  auto r = run_cli({"parse-script", script_path(), "-o", path("script.json")});
  ASSERT_EQ(r.code, 0) << r.err;
  auto doc = nlohmann::json::parse(read_file(path("script.json")));
  const auto sp = sm::parse_screenplay(read_file(script_path()));
  const auto blocks = sm::extract_dialogue_blocks(sp);
  EXPECT_EQ(doc, sm::parse_script_document(sp, blocks, "two_speaker.txt", sm::config_echo({})));
  EXPECT_EQ(doc["schema_version"], sm::kSchemaVersion);
  EXPECT_TRUE(doc.contains("config_echo"));
  EXPECT_FALSE(fs::exists(path("script.json.tmp")));
}

TEST_F(CliTest, ParseSrtToStdout) {
  auto r = run_cli({"parse-srt", fixture("canonical_50.srt").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  auto doc = nlohmann::json::parse(r.out);
  EXPECT_EQ(doc["cues"].size(), 50u);
  EXPECT_EQ(doc["cues"][0].value("start_ms", -1), 61000);
}

TEST_F(CliTest, EmptySubtitleFileFails) {
  write("empty.srt", "");
  auto r = run_cli({"parse-srt", path("empty.srt")});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("EmptyTrack"), std::string::npos);
}

TEST_F(CliTest, MalformedSubtitleWarnsOnStderr) {
  auto r = run_cli({"parse-srt", fixture("malformed_10.srt").string(), "-o", path("m.json")});
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.err.find("line 14"), std::string::npos);
  EXPECT_TRUE(r.out.empty());
}

TEST_F(CliTest, AlignIsDeterministic) {
  ASSERT_EQ(run_cli({"align", "--script", script_path(), "--srt", srt_path(), "-o", path("a.json")}).code, 0);
  ASSERT_EQ(run_cli({"align", "--script", script_path(), "--srt", srt_path(), "-o", path("b.json")}).code, 0);
  EXPECT_EQ(read_file(path("a.json")), read_file(path("b.json")));
  auto doc = nlohmann::json::parse(read_file(path("a.json")));
  EXPECT_EQ(doc["movie_id"], "two_speaker");
  EXPECT_EQ(doc["segments"].size(), 10u);
  EXPECT_TRUE(doc["warnings"].is_array());
}

TEST_F(CliTest, AlignAcceptsParsedScript) {
  ASSERT_EQ(run_cli({"parse-script", script_path(), "-o", path("s.json")}).code, 0);
  ASSERT_EQ(run_cli({"align", "--script", script_path(), "--srt", srt_path(), "-o", path("a.json")}).code, 0);
  ASSERT_EQ(run_cli({"align", "--script", path("s.json"), "--srt", srt_path(), "--movie-id", "two_speaker", "-o",
                     path("b.json")})
                .code,
            0);
  EXPECT_EQ(read_file(path("a.json")), read_file(path("b.json")));
}

TEST_F(CliTest, FlagsOverrideConfigFile) {
  write("cfg.json", R"({"align": {"min_score": 0.5}})");
  ASSERT_EQ(run_cli({"--config", path("cfg.json"), "align", "--script", script_path(), "--srt", srt_path(),
                     "--min-score", "0.75", "-o", path("a.json")})
                .code,
            0);
  auto doc = nlohmann::json::parse(read_file(path("a.json")));
  EXPECT_EQ(doc["config_echo"]["align"]["min_score"], 0.75);
  write("bad.json", R"({"align": {"min_scor": 0.5}})");
  auto r = run_cli({"--config", path("bad.json"), "parse-srt", srt_path()});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("min_scor"), std::string::npos);
  EXPECT_EQ(run_cli({"--min-score", "1.5", "parse-srt", srt_path()}).code, 1);
}

TEST_F(CliTest, BatchAlignWithJobs) {
  write("manifest.jsonl",
        "{\"movie_id\":\"one\",\"script\":\"" + script_path() + "\",\"srt\":\"" + srt_path() +
            "\",\"output\":\"out/one.json\"}\n"
            "{\"movie_id\":\"two\",\"script\":\"" + script_path() + "\",\"srt\":\"" + srt_path() +
            "\",\"output\":\"out/two.json\"}\n");
  auto r = run_cli({"align", "--batch", path("manifest.jsonl"), "--jobs", "2"});
  ASSERT_EQ(r.code, 0) << r.err;
  auto one = nlohmann::json::parse(read_file(path("out/one.json")));
  auto two = nlohmann::json::parse(read_file(path("out/two.json")));
  EXPECT_EQ(one["movie_id"], "one");
  one["movie_id"] = "two";
  EXPECT_EQ(one, two);

  write("broken.jsonl", "{\"movie_id\":\"x\",\"script\":\"missing.txt\",\"srt\":\"" + srt_path() +
                            "\",\"output\":\"out/x.json\"}\n");
  EXPECT_EQ(run_cli({"align", "--batch", path("broken.jsonl")}).code, 1);
}

TEST_F(CliTest, ExtractWritesContextPerStory) {
  ASSERT_EQ(run_cli({"align", "--script", script_path(), "--srt", srt_path(), "-o", path("a.json")}).code, 0);
  write("stories.jsonl",
        R"({"story_id":"s1","movie_id":"two_speaker","frame_files":["a.jpg"],"start_ms":4000,"end_ms":12000})"
        "\n"
        R"({"story_id":"s2","movie_id":"two_speaker","frame_files":[],"start_ms":900000,"end_ms":910000})"
        "\n");
  auto r = run_cli({"extract", "--alignment", path("a.json"), "--stories", path("stories.jsonl"), "--output-dir",
                    path("ctx")});
  ASSERT_EQ(r.code, 0) << r.err;
  // Every block is timed here, so the render is the golden one minus its UNTIMED section.
  const std::string golden = read_file(fixture("golden/context_kitchen_partial.txt"));
  EXPECT_EQ(read_file(path("ctx/s1.txt")), golden.substr(0, golden.find("UNTIMED:")));
  EXPECT_EQ(read_file(path("ctx/s2.txt")), std::string(sm::kNoContextSentinel) + "\n");
  auto doc = nlohmann::json::parse(read_file(path("ctx/s1.json")));
  EXPECT_TRUE(doc.contains("config_echo"));
  EXPECT_NE(r.err.find("1 of 2 stories"), std::string::npos);

  write("other.jsonl",
        R"({"story_id":"s1","movie_id":"elsewhere","frame_files":[],"start_ms":0,"end_ms":1000})"
        "\n");
  r = run_cli({"extract", "--alignment", path("a.json"), "--stories", path("other.jsonl"), "--output-dir",
               path("ctx2")});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("MovieMismatch"), std::string::npos);

  write("dup.jsonl",
        R"({"story_id":"s1","movie_id":"two_speaker","frame_files":[],"start_ms":0,"end_ms":1000})"
        "\n"
        R"({"story_id":"s1","movie_id":"two_speaker","frame_files":[],"start_ms":0,"end_ms":1000})"
        "\n");
  EXPECT_EQ(run_cli({"extract", "--alignment", path("a.json"), "--stories", path("dup.jsonl"), "--output-dir",
                     path("ctx3")})
                .code,
            1);
  write("evil.jsonl",
        R"({"story_id":"../x","movie_id":"two_speaker","frame_files":[],"start_ms":0,"end_ms":1000})"
        "\n");
  EXPECT_EQ(run_cli({"extract", "--alignment", path("a.json"), "--stories", path("evil.jsonl"), "--output-dir",
                     path("ctx4")})
                .code,
            1);
}

TEST_F(CliTest, StatsOnCorpus) {
  auto r = run_cli({"stats", fixture("grounded_corpus.jsonl").string(), "--csv", path("per.csv")});
  ASSERT_EQ(r.code, 0) << r.err;
  auto doc = nlohmann::json::parse(r.out);
  auto expected = nlohmann::json::parse(read_file(fixture("grounded_expected.json")));
  EXPECT_EQ(doc["n_stories"], 4);
  EXPECT_DOUBLE_EQ(doc["mean_words"].get<double>(), expected["corpus"]["mean_words"].get<double>());
  EXPECT_DOUBLE_EQ(doc["mean_refs_total"].get<double>(), expected["corpus"]["mean_refs_total"].get<double>());
  EXPECT_EQ(read_file(path("per.csv")).substr(0, 9), "story_id,");
  EXPECT_NE(r.err.find("warning"), std::string::npos);
}

TEST_F(CliTest, StatsOnDirectory) {
  write("b.txt", "<gdo char1>Ann</gdo> runs home.");
  write("a.txt", "A <gdl park>park</gdl> at dusk.");
  auto r = run_cli({"stats", dir_.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  auto doc = nlohmann::json::parse(r.out);
  ASSERT_EQ(doc["per_story"].size(), 2u);
  EXPECT_EQ(doc["per_story"][0]["story_id"], "a");
  EXPECT_EQ(doc["per_story"][1]["story_id"], "b");
}

TEST_F(CliTest, EvalAggregate) {
  auto r = run_cli({"eval", "aggregate", fixture("verdicts_3run.jsonl").string(), "--label-a", "Ours", "--label-b",
                    "Base", "-o", path("agg.json")});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(r.out,
            "Reference Type | Ours | Base | Ties\n"
            "Subtitles | 50.0% ± 20.4 | 25.0% ± 0.0 | 25.0% ± 20.4\n"
            "Synopsis | 66.7% ± 23.6 | 16.7% ± 23.6 | 16.7% ± 23.6\n");
  auto doc = nlohmann::json::parse(read_file(path("agg.json")));
  EXPECT_EQ(doc["table"], r.out);
  EXPECT_EQ(doc["rows"].size(), 2u);
}

TEST_F(CliTest, EvalQaScore) {
  std::string items;
  std::string answers;
  for (int s = 0; s < 2; ++s) {
    for (std::string cat : {"emotional", "action", "relationship"}) {
      sm::QAItem item{"s" + std::to_string(s), *sm::qa_category_from_string(cat), "Why?", {"a", "b", "c"}, 1, {}};
      items += sm::qa_item_to_json(item).dump() + "\n";
      answers += nlohmann::json{{"story_id", item.story_id}, {"category", cat}, {"chosen_index", s == 0 ? 1 : 2}}
                     .dump() +
                 "\n";
    }
  }
  write("items.jsonl", items);
  write("ours.jsonl", answers);
  auto r = run_cli({"eval", "qa-score", "--items", path("items.jsonl"), "--answers", "Ours=" + path("ours.jsonl"),
                    "-o", path("qa.json")});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("Ours | 50.0 | 50.0 | 50.0 | 50.0"), std::string::npos) << r.out;
  auto doc = nlohmann::json::parse(read_file(path("qa.json")));
  EXPECT_EQ(doc["results"][0]["label"], "Ours");
}

TEST_F(CliTest, EvalJudgeRecordAndReplay) {
  write("pairs.jsonl", R"({"sample_id":"m1","reference_type":"synopsis","reference":"r","story_a":"x","story_b":"y"})"
                       "\n");
  // Record: build a replay log by hand from the prompts the harness will send.
  const std::vector<sm::PairwiseJob> jobs = sm::load_pairwise_jobs(read_file(path("pairs.jsonl")));
  auto exchanges = sm::run_pairwise(jobs, 3, [](const std::string&) { return std::string("A"); }, 1);
  std::string log;
  for (const auto& ex : exchanges) log += sm::exchange_to_json(ex).dump() + "\n";
  write("recorded.jsonl", log);

  auto r = run_cli({"eval", "judge", "--pairs", path("pairs.jsonl"), "--replay", path("recorded.jsonl"), "-o",
                    path("verdicts.jsonl"), "--record", path("again.jsonl")});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(read_file(path("verdicts.jsonl")),
            "{\"reference_type\":\"synopsis\",\"run_id\":1,\"sample_id\":\"m1\",\"winner\":\"A\"}\n"
            "{\"reference_type\":\"synopsis\",\"run_id\":2,\"sample_id\":\"m1\",\"winner\":\"B\"}\n"
            "{\"reference_type\":\"synopsis\",\"run_id\":3,\"sample_id\":\"m1\",\"winner\":\"A\"}\n");
  EXPECT_EQ(read_file(path("again.jsonl")), log);

  // A prompt the log never saw is a failed call, not a silent skip.
  write("unseen.jsonl", R"({"sample_id":"m2","reference_type":"synopsis","reference":"r","story_a":"p","story_b":"q"})"
                        "\n");
  EXPECT_EQ(run_cli({"eval", "judge", "--pairs", path("unseen.jsonl"), "--replay", path("recorded.jsonl"), "-o",
                     path("v2.jsonl")})
                .code,
            1);
  EXPECT_EQ(run_cli({"eval", "judge", "--pairs", path("pairs.jsonl"), "-o", path("v.jsonl")}).code, 1);
}

TEST_F(CliTest, EvalJudgeUnparseableIsExcluded) {
  write("pairs.jsonl", R"({"sample_id":"m1","reference_type":"subtitles","reference":"r","story_a":"x","story_b":"y"})"
                       "\n");
  const auto jobs = sm::load_pairwise_jobs(read_file(path("pairs.jsonl")));
  auto exchanges = sm::run_pairwise(jobs, 1, [](const std::string&) { return std::string("Both are great"); }, 1);
  write("recorded.jsonl", sm::exchange_to_json(exchanges[0]).dump() + "\n");
  auto r = run_cli({"eval", "judge", "--pairs", path("pairs.jsonl"), "--replay", path("recorded.jsonl"), "--runs",
                    "1", "-o", path("v.jsonl")});
  EXPECT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(read_file(path("v.jsonl")), "");
  EXPECT_NE(r.err.find("1 unparseable"), std::string::npos);
}
