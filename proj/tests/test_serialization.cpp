#include <gtest/gtest.h>

#include "storymovie/config.hpp"
#include "storymovie/serialization.hpp"
#include "test_support.hpp"

namespace sm = storymovie;

TEST(Serialization, ScreenplayRoundTrip) {
  const auto labeled = sm::testing::load_labeled(sm::testing::read_fixture("screenplay_labeled.txt"));
  auto sp = sm::parse_screenplay(labeled.text);
  const auto back = sm::screenplay_from_json(sm::screenplay_to_json(sp));
  sp.warnings.clear();
  EXPECT_EQ(back, sp);
}

TEST(Serialization, BlockRoundTrip) {
  const auto sp = sm::parse_screenplay(sm::testing::read_fixture("two_speaker.txt"));
  for (const auto& b : sm::extract_dialogue_blocks(sp).blocks) {
    EXPECT_EQ(sm::block_from_json(sm::block_to_json(b)), b);
  }
}

TEST(Serialization, AlignmentDocumentIsSelfContained) {
  const auto sp = sm::parse_screenplay(sm::testing::read_fixture("two_speaker.txt"));
  auto track = sm::parse_srt(sm::testing::read_fixture("two_speaker.srt"));
  track.cues.resize(8);
  const auto result = sm::align(sp, track, {}, "kitchen");
  const auto doc = sm::alignment_document(result, sp, track, sm::config_echo(sm::PipelineConfig{}));
  EXPECT_EQ(doc["schema_version"], 1);
  EXPECT_TRUE(doc.contains("config_echo"));
  ASSERT_FALSE(doc["unaligned_blocks"].empty());
  EXPECT_TRUE(doc["unaligned_blocks"][0]["start_ms"].is_null());

  const auto loaded = sm::alignment_from_json(nlohmann::json::parse(doc.dump()));
  EXPECT_EQ(loaded.result.segments, result.segments);
  EXPECT_EQ(loaded.result.blocks, result.blocks);
  EXPECT_EQ(loaded.result.unaligned_blocks, result.unaligned_blocks);
  EXPECT_EQ(loaded.screenplay.elements, sp.elements);

  const sm::FrameRange range{"st", "kitchen", 4000, 12000};
  EXPECT_EQ(sm::render_context(sm::extract_context(range, loaded.result, loaded.screenplay)),
            sm::render_context(sm::extract_context(range, result, sp)));
}

TEST(Serialization, StoryRecordsValidateRequiredFields) {
  const auto ok = sm::load_story_records(
      R"({"story_id": "a", "movie_id": "m", "frame_files": ["f1.jpg"], "start_ms": 0, "end_ms": 10, "story_text": "x"})"
      "\n\n"
      R"({"story_id": "b", "movie_id": "m", "frame_files": [], "start_ms": 5, "end_ms": 5})");
  ASSERT_EQ(ok.size(), 2u);
  EXPECT_EQ(ok[0].story_text, std::optional<std::string>("x"));
  EXPECT_FALSE(ok[1].cot_text);

  auto message = [](const std::string& text) {
    try {
      sm::load_story_records(text);
    } catch (const sm::Error& e) {
      EXPECT_EQ(e.code(), sm::ErrorCode::InvalidRecord);
      return std::string(e.what());
    }
    return std::string();
  };
  EXPECT_NE(message(R"({"movie_id": "m", "frame_files": [], "start_ms": 0, "end_ms": 1})").find("story_id"),
            std::string::npos);
  EXPECT_NE(message("\n" R"({"story_id": "a", "movie_id": "m", "frame_files": [], "start_ms": 0})").find("line 2"),
            std::string::npos);
  EXPECT_FALSE(message(R"({"story_id": "a", "movie_id": "m", "frame_files": [], "start_ms": 9, "end_ms": 1})").empty());
  EXPECT_FALSE(message(R"({"story_id": "a", "movie_id": "m", "frame_files": [1], "start_ms": 0, "end_ms": 1})").empty());
  EXPECT_FALSE(message("{not json").empty());
}

TEST(Serialization, QaAnswersRejectDuplicates) {
  const std::string line = R"({"story_id": "s", "category": "action", "chosen_index": 1})";
  EXPECT_EQ(sm::load_qa_answers(line).size(), 1u);
  EXPECT_THROW(sm::load_qa_answers(line + "\n" + line), sm::Error);
  EXPECT_THROW(sm::load_qa_answers(R"({"story_id": "s", "category": "action", "chosen_index": 3})"), sm::Error);
}

TEST(Serialization, QaGenerationParsing) {
  const std::string raw = "```json\n[" 
      R"({"category": "emotional", "question": "How does the woman feel?", "options": ["calm", "angry", "sad"], "correct_index": 1},)"
      R"({"category": "action", "question": "What does the man do?", "options": ["runs", "sits", "sings"], "correct_index": 0},)"
      R"({"category": "relationship", "question": "How are they related?", "options": ["siblings", "strangers", "rivals"], "correct_index": 0})"
      "]\n```";
  const auto items = sm::parse_qa_generation(raw, "s9");
  ASSERT_EQ(items.size(), 3u);
  EXPECT_EQ(items[2].story_id, "s9");
  EXPECT_EQ(items[2].category, sm::QaCategory::relationship);
  EXPECT_THROW(sm::parse_qa_generation("[]", "s9"), sm::Error);
  EXPECT_THROW(sm::parse_qa_generation("no", "s9"), sm::Error);
}

TEST(Serialization, VerdictRoundTrip) {
  const sm::PairwiseVerdict v{"x", sm::ReferenceType::description, 2, sm::Winner::tie};
  const auto back = sm::load_verdicts(sm::verdict_to_json(v).dump());
  ASSERT_EQ(back.size(), 1u);
  EXPECT_EQ(back[0].sample_id, "x");
  EXPECT_EQ(back[0].reference_type, sm::ReferenceType::description);
  EXPECT_EQ(back[0].run_id, 2);
  EXPECT_EQ(back[0].winner, sm::Winner::tie);
}
