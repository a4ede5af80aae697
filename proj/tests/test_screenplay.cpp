#include <gtest/gtest.h>

#include <string>

#include "storymovie/screenplay.hpp"
#include "test_support.hpp"

namespace sm = storymovie;
using sm::ElementKind;

namespace {

std::string pad(std::size_t n, const std::string& s) { return std::string(n, ' ') + s; }

}  // namespace

TEST(Classifier, RuleTable) {
  using K = ElementKind;
  EXPECT_EQ(sm::classify_line("INT. DINER - NIGHT", 0, std::nullopt), K::SceneHeading);
  EXPECT_EQ(sm::classify_line("ext. pier - day", 0, K::Action), K::SceneHeading);
  EXPECT_EQ(sm::classify_line("INT./EXT. CAR - MOVING", 0, std::nullopt), K::SceneHeading);
  EXPECT_EQ(sm::classify_line("I/E. VAN", 0, std::nullopt), K::SceneHeading);
  EXPECT_EQ(sm::classify_line("CUT TO:", 50, K::Dialogue), K::Transition);
  EXPECT_EQ(sm::classify_line("FADE OUT.", 0, K::Action), K::Transition);
  EXPECT_EQ(sm::classify_line("Cut to:", 0, K::Action), K::Action);
  EXPECT_EQ(sm::classify_line("ROSA", 25, K::Action, 10), K::Character);
  EXPECT_EQ(sm::classify_line("ROSA (CONT'D)", 25, K::Dialogue, 10), K::Character);
  EXPECT_EQ(sm::classify_line("ROSA", 25, K::Action, 0), K::Action);
  EXPECT_EQ(sm::classify_line("ROSA", 25, K::Action, std::nullopt), K::Action);
  EXPECT_EQ(sm::classify_line("ROSA", 24, K::Action, 10), K::Action);
  EXPECT_EQ(sm::classify_line("(beat)", 18, K::Character, 10), K::Parenthetical);
  EXPECT_EQ(sm::classify_line("(beat)", 18, K::Action, 10), K::Action);
  EXPECT_EQ(sm::classify_line("Hello there.", 10, K::Character), K::Dialogue);
  EXPECT_EQ(sm::classify_line("Hello there.", 10, K::Parenthetical), K::Dialogue);
  EXPECT_EQ(sm::classify_line("Hello there.", 9, K::Character), K::Action);
  EXPECT_EQ(sm::classify_line("Hello there.", 10, K::Action), K::Action);
}

TEST(Classifier, ConfigThresholds) {
  sm::ScreenplayConfig cfg;
  cfg.character_indent_min = 20;
  cfg.dialogue_indent_min = 5;
  EXPECT_EQ(sm::classify_line("ROSA", 20, ElementKind::Action, 5, cfg), ElementKind::Character);
  EXPECT_EQ(sm::classify_line("Hi.", 5, ElementKind::Character, std::nullopt, cfg), ElementKind::Dialogue);
  cfg.character_max_length = 3;
  EXPECT_EQ(sm::classify_line("ROSA", 20, ElementKind::Action, 5, cfg), ElementKind::Action);
}

TEST(Speaker, Normalization) {
  EXPECT_EQ(sm::normalize_speaker("Rosa (CONT'D)"), "ROSA");
  EXPECT_EQ(sm::normalize_speaker("  HALE  (V.O.) (cont'd) "), "HALE");
  EXPECT_EQ(sm::normalize_speaker("UNIFORM  #1"), "UNIFORM #1");
  EXPECT_EQ(sm::normalize_speaker("(O.S.)"), "UNKNOWN");
}

TEST(Screenplay, LabeledFixtureMatchesExactly) {
  const auto labeled = sm::testing::load_labeled(sm::testing::read_fixture("screenplay_labeled.txt"));
  const auto sp = sm::parse_screenplay(labeled.text);
  ASSERT_EQ(sp.elements.size(), labeled.elements.size());
  std::size_t disagreements = 0;
  for (std::size_t i = 0; i < sp.elements.size(); ++i) {
    const auto& got = sp.elements[i];
    const auto& want = labeled.elements[i];
    if (got.kind != want.kind || !(got.lines == want.lines) || got.text != want.text) {
      ++disagreements;
      ADD_FAILURE() << "element " << i << ": got " << sm::to_string(got.kind) << " lines "
                    << got.lines.first << "-" << got.lines.last << " '" << got.text << "', want "
                    << sm::to_string(want.kind) << " lines " << want.lines.first << "-"
                    << want.lines.last << " '" << want.text << "'";
    }
  }
  EXPECT_EQ(disagreements, 0u);
  EXPECT_EQ(sp.total_lines, 200u);
  EXPECT_EQ(sp.blank_lines, labeled.blank_lines);
  EXPECT_EQ(sp.discarded_lines, labeled.discarded_lines);
}

TEST(Screenplay, LineCoverageInvariant) {
  const auto labeled = sm::testing::load_labeled(sm::testing::read_fixture("screenplay_labeled.txt"));
  const auto sp = sm::parse_screenplay(labeled.text);
  std::size_t covered = 0;
  for (const auto& e : sp.elements) covered += e.lines.last - e.lines.first + 1;
  EXPECT_EQ(covered + sp.blank_lines + sp.discarded_lines, sp.total_lines);
}

TEST(Screenplay, ScenesPartitionElements) {
  const auto labeled = sm::testing::load_labeled(sm::testing::read_fixture("screenplay_labeled.txt"));
  const auto sp = sm::parse_screenplay(labeled.text);
  ASSERT_FALSE(sp.scenes.empty());
  // The fixture opens with FADE IN:, which lands in a heading-less preamble.
  EXPECT_FALSE(sp.scenes[0].heading.has_value());
  EXPECT_EQ(sp.scenes.size(), 7u);
  std::size_t expect_begin = 0;
  for (std::size_t s = 0; s < sp.scenes.size(); ++s) {
    EXPECT_EQ(sp.scenes[s].index, s);
    EXPECT_EQ(sp.scenes[s].begin, expect_begin);
    EXPECT_LT(sp.scenes[s].begin, sp.scenes[s].end);
    if (sp.scenes[s].heading) {
      EXPECT_EQ(*sp.scenes[s].heading, sp.scenes[s].begin);
    }
    expect_begin = sp.scenes[s].end;
  }
  EXPECT_EQ(expect_begin, sp.elements.size());
  EXPECT_EQ(sp.scene_of(0), 0u);
}

TEST(Screenplay, IndentedActionWarns) {
  const auto labeled = sm::testing::load_labeled(sm::testing::read_fixture("screenplay_labeled.txt"));
  const auto sp = sm::parse_screenplay(labeled.text);
  ASSERT_EQ(sp.warnings.size(), 1u);
  EXPECT_NE(sp.warnings[0].message.find("indented"), std::string::npos);
}

TEST(Screenplay, NoHeadingMeansSingleScene) {
  const std::string s = "A quiet room.\n\n" + pad(25, "ROSA") + "\n" + pad(10, "Hello.") + "\n";
  const auto sp = sm::parse_screenplay(s);
  ASSERT_EQ(sp.scenes.size(), 1u);
  EXPECT_FALSE(sp.scenes[0].heading);
  EXPECT_EQ(sp.elements.size(), 3u);
}

TEST(Screenplay, EmptyInputIsAnError) {
  for (const char* s : {"", "\n\n   \n", "\t\n"}) {
    try {
      sm::parse_screenplay(s);
      FAIL() << "expected EmptyInput";
    } catch (const sm::Error& e) {
      EXPECT_EQ(e.code(), sm::ErrorCode::EmptyInput);
    }
  }
}

TEST(Screenplay, InvalidUtf8IsAnError) {
  try {
    sm::parse_screenplay("INT. ROOM\n\xC3\x28 bad\n");
    FAIL();
  } catch (const sm::Error& e) {
    EXPECT_EQ(e.code(), sm::ErrorCode::EncodingError);
  }
}

TEST(Screenplay, TabsExpandBeforeClassification) {
  const std::string s = "INT. ROOM - DAY\n\n\t\t\t\tROSA\n\t\tHello there.\n";
  const auto sp = sm::parse_screenplay(s);
  ASSERT_EQ(sp.elements.size(), 3u);
  EXPECT_EQ(sp.elements[1].kind, ElementKind::Character);
  EXPECT_EQ(sp.elements[2].kind, ElementKind::Dialogue);
}

TEST(Screenplay, DualDialogueBecomesTwoColumns) {
  std::string s = "INT. ROOM - DAY\n\n";
  s += pad(20, "ROSA") + pad(26, "MILES") + "\n";
  s += pad(10, "Get out.") + pad(25, "I just got here.") + "\n";
  s += pad(10, "Now.") + "\n";
  const auto sp = sm::parse_screenplay(s);
  ASSERT_EQ(sp.elements.size(), 5u);
  EXPECT_EQ(sp.elements[1].text, "ROSA");
  EXPECT_EQ(sp.elements[1].column, 0);
  EXPECT_EQ(sp.elements[2].text, "Get out. Now.");
  EXPECT_EQ(sp.elements[3].text, "MILES");
  EXPECT_EQ(sp.elements[3].column, 1);
  EXPECT_EQ(sp.elements[4].text, "I just got here.");
  ASSERT_EQ(sp.warnings.size(), 1u);

  const auto blocks = sm::extract_dialogue_blocks(sp);
  ASSERT_EQ(blocks.blocks.size(), 2u);
  EXPECT_EQ(blocks.blocks[0].speaker, "ROSA");
  EXPECT_EQ(blocks.blocks[1].speaker, "MILES");
}

TEST(Dialogue, BlocksFromLabeledFixture) {
  const auto labeled = sm::testing::load_labeled(sm::testing::read_fixture("screenplay_labeled.txt"));
  const auto sp = sm::parse_screenplay(labeled.text);
  const auto ex = sm::extract_dialogue_blocks(sp);
  std::size_t characters = 0;
  for (const auto& e : sp.elements) characters += e.kind == ElementKind::Character;
  EXPECT_EQ(ex.blocks.size(), characters);
  for (const auto& b : ex.blocks) {
    EXPECT_FALSE(b.lines.empty());
    EXPECT_EQ(b.lines.size(), b.line_cues.size());
    EXPECT_EQ(sp.scene_of(b.element_begin), b.scene_index);
    EXPECT_EQ(sp.scene_of(b.element_end - 1), b.scene_index);
  }
  // "HALE (smiling) ... (tossing it on the table) ..." keeps each cue with its line.
  const auto it = std::find_if(ex.blocks.begin(), ex.blocks.end(), [](const sm::DialogueBlock& b) {
    return b.lines.size() == 2 && b.lines[1] == "Recognize the boat?";
  });
  ASSERT_NE(it, ex.blocks.end());
  EXPECT_EQ(it->speaker, "HALE");
  EXPECT_EQ(it->cue, std::optional<std::string>("(smiling)"));
  EXPECT_EQ(it->line_cues[1], std::optional<std::string>("(tossing it on the table)"));
  // Page break: DANNY (CONT'D) is a separate block with a normalized name.
  EXPECT_TRUE(std::any_of(ex.blocks.begin(), ex.blocks.end(), [](const sm::DialogueBlock& b) {
    return b.speaker == "DANNY" && b.lines == std::vector<std::string>{"whatever the gulls leave me."};
  }));
}

TEST(Dialogue, MultiLineParenthetical) {
  const auto labeled = sm::testing::load_labeled(sm::testing::read_fixture("screenplay_labeled.txt"));
  const auto ex = sm::extract_dialogue_blocks(sm::parse_screenplay(labeled.text));
  EXPECT_TRUE(std::any_of(ex.blocks.begin(), ex.blocks.end(), [](const sm::DialogueBlock& b) {
    return b.cue == std::optional<std::string>("(quiet, almost to herself)");
  }));
}

TEST(Dialogue, OrphanDialogueGetsUnknownSpeaker) {
  sm::Screenplay sp;
  sp.elements.push_back({ElementKind::Dialogue, "Who said that?", {1, 1}, 10, 0});
  sp.scenes.push_back({0, std::nullopt, 0, 1});
  sp.total_lines = 1;
  const auto ex = sm::extract_dialogue_blocks(sp);
  ASSERT_EQ(ex.blocks.size(), 1u);
  EXPECT_EQ(ex.blocks[0].speaker, "UNKNOWN");
  EXPECT_EQ(ex.warnings.size(), 1u);
}

TEST(Dialogue, ParseIsIdempotentOnRender) {
  // Parsing the same text twice yields identical structures.
  const auto labeled = sm::testing::load_labeled(sm::testing::read_fixture("screenplay_labeled.txt"));
  EXPECT_EQ(sm::parse_screenplay(labeled.text), sm::parse_screenplay(labeled.text));
}
