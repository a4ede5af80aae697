#include <gtest/gtest.h>

#include <cmath>
#include <json.hpp>

#include "storymovie/grounding.hpp"
#include "storymovie/serialization.hpp"
#include "test_support.hpp"

namespace sm = storymovie;

TEST(Grounding, ParsesSimpleTags) {
  const auto s = sm::parse_grounded_story("<gdo char1>Rosa</gdo> waits at the <gdl pier>pier</gdl>.");
  EXPECT_EQ(s.plain_text, "Rosa waits at the pier.");
  ASSERT_EQ(s.tags.size(), 2u);
  EXPECT_EQ(s.tags[0].kind, sm::TagKind::gdo);
  EXPECT_EQ(s.tags[0].entity_id, "char1");
  EXPECT_EQ(s.tags[0].inner_text, "Rosa");
  EXPECT_EQ(s.plain_text.substr(s.tags[1].begin, s.tags[1].end - s.tags[1].begin), "pier");
  EXPECT_TRUE(s.warnings.empty());
  EXPECT_EQ(s.word_count, 5u);
}

TEST(Grounding, NestedTagsAndQuotedIds) {
  const auto s = sm::parse_grounded_story("<gda a1>lifts <gdo id=\"cup\">the cup</gdo></gda>");
  EXPECT_EQ(s.plain_text, "lifts the cup");
  ASSERT_EQ(s.tags.size(), 2u);
  EXPECT_EQ(s.tags[0].kind, sm::TagKind::gda);
  EXPECT_EQ(s.tags[0].inner_text, "lifts the cup");
  EXPECT_EQ(s.tags[1].entity_id, "cup");
  EXPECT_EQ(s.tags[1].inner_text, "the cup");
}

TEST(Grounding, MalformedTagsStayLiteral) {
  const auto s = sm::parse_grounded_story("a <gdo char1>b and <gdz x>c</gdz> d </gdl>");
  EXPECT_EQ(s.plain_text, "a <gdo char1>b and <gdz x>c</gdz> d </gdl>");
  EXPECT_TRUE(s.tags.empty());
  EXPECT_EQ(s.warnings.size(), 4u);
}

TEST(Grounding, NonTagAngleBracketsAreText) {
  const auto s = sm::parse_grounded_story("x < y and <b>bold</b>");
  EXPECT_EQ(s.plain_text, "x < y and <b>bold</b>");
  EXPECT_TRUE(s.warnings.empty());
}

TEST(Grounding, InnerTextMatchesSpan) {
  const auto s = sm::parse_grounded_story(
      "<gdl l1>In <gdo o1>the <gdo char9>old</gdo> house</gdo></gdl> <gdi i>light</gdi>");
  for (const auto& t : s.tags) {
    EXPECT_EQ(s.plain_text.substr(t.begin, t.end - t.begin), t.inner_text);
  }
  for (std::size_t k = 1; k < s.tags.size(); ++k) EXPECT_LE(s.tags[k - 1].begin, s.tags[k].begin);
}

TEST(GroundingStats, HandCountedCorpus) {
  const auto stories = sm::load_grounded_stories(sm::testing::read_fixture("grounded_corpus.jsonl"));
  const auto expected = nlohmann::json::parse(sm::testing::read_fixture("grounded_expected.json"));
  ASSERT_EQ(stories.size(), 4u);
  for (const auto& story : stories) {
    const auto& want = expected["per_story"][story.story_id];
    const auto st = sm::story_stats(story);
    EXPECT_EQ(st.words, want["words"].get<std::size_t>()) << story.story_id;
    EXPECT_EQ(st.char_mentions, want["char_mentions"].get<std::size_t>()) << story.story_id;
    EXPECT_EQ(st.object_refs, want["object_refs"].get<std::size_t>()) << story.story_id;
    EXPECT_EQ(st.setting_refs, want["setting_refs"].get<std::size_t>()) << story.story_id;
    EXPECT_EQ(st.action_refs, want["action_refs"].get<std::size_t>()) << story.story_id;
    EXPECT_EQ(st.image_refs, want["image_refs"].get<std::size_t>()) << story.story_id;
    EXPECT_EQ(st.distinct_characters, want["distinct_characters"].get<std::size_t>()) << story.story_id;
    EXPECT_EQ(story.warnings.size(), want["warnings"].get<std::size_t>()) << story.story_id;
    EXPECT_EQ(st.refs_total(), st.char_mentions + st.object_refs + st.setting_refs + st.action_refs);
  }
  const auto c = sm::compute_stats(stories);
  const auto& want = expected["corpus"];
  EXPECT_EQ(c.n_stories, 4u);
  EXPECT_DOUBLE_EQ(c.mean_words, want["mean_words"].get<double>());
  EXPECT_DOUBLE_EQ(c.std_words, std::sqrt(want["std_words_squared"].get<double>()));
  EXPECT_DOUBLE_EQ(c.mean_refs_total, want["mean_refs_total"].get<double>());
  EXPECT_DOUBLE_EQ(c.mean_char_mentions, want["mean_char_mentions"].get<double>());
  EXPECT_DOUBLE_EQ(c.mean_object_refs, want["mean_object_refs"].get<double>());
  EXPECT_DOUBLE_EQ(c.mean_setting_refs, want["mean_setting_refs"].get<double>());
  EXPECT_DOUBLE_EQ(c.mean_action_refs, want["mean_action_refs"].get<double>());
  EXPECT_DOUBLE_EQ(c.mean_image_refs, want["mean_image_refs"].get<double>());
  EXPECT_DOUBLE_EQ(c.mean_distinct_chars, want["mean_distinct_chars"].get<double>());
  EXPECT_DOUBLE_EQ(c.mean_refs_total, c.mean_char_mentions + c.mean_object_refs + c.mean_setting_refs +
                                          c.mean_action_refs);
}

TEST(GroundingStats, OrderIndependent) {
  auto stories = sm::load_grounded_stories(sm::testing::read_fixture("grounded_corpus.jsonl"));
  const auto a = sm::compute_stats(stories);
  std::reverse(stories.begin(), stories.end());
  const auto b = sm::compute_stats(stories);
  EXPECT_EQ(a.mean_words, b.mean_words);
  EXPECT_EQ(a.std_words, b.std_words);
  EXPECT_EQ(a.mean_refs_total, b.mean_refs_total);
}

TEST(GroundingStats, EmptyCorpusIsAnError) {
  try {
    sm::compute_stats({});
    FAIL();
  } catch (const sm::Error& e) {
    EXPECT_EQ(e.code(), sm::ErrorCode::EmptyCorpus);
  }
}

TEST(GroundingStats, CsvHasOneRowPerStory) {
  const auto stories = sm::load_grounded_stories(sm::testing::read_fixture("grounded_corpus.jsonl"));
  const std::string csv = sm::per_story_csv(sm::compute_stats(stories));
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 5);
  EXPECT_NE(csv.find("\ns1,19,6,3,1,1,1,1,2\n"), std::string::npos);
}
