#pragma once

// JSON and JSONL mappings for every document the CLI reads or writes.

#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <algorithm>
#include <vector>

#include <json.hpp>

#include "storymovie/align.hpp"
#include "storymovie/error.hpp"
#include "storymovie/eval.hpp"
#include "storymovie/grounding.hpp"
#include "storymovie/screenplay.hpp"
#include "storymovie/segment.hpp"
#include "storymovie/subtitle.hpp"
#include "storymovie/text.hpp"

namespace storymovie {

using json = nlohmann::json;

inline constexpr int kSchemaVersion = 1;

namespace detail {

inline json optional_string(const std::optional<std::string>& s) {
  return s ? json(*s) : json(nullptr);
}

inline std::optional<std::string> read_optional_string(const json& obj, const char* key) {
  if (!obj.contains(key) || obj[key].is_null()) return std::nullopt;
  return obj[key].get<std::string>();
}

}  // namespace detail

inline json diagnostics_to_json(const std::vector<Diagnostic>& ds) {
  json arr = json::array();
  for (const auto& d : ds) arr.push_back({{"line", d.line}, {"message", d.message}});
  return arr;
}

// ---------------------------------------------------------------------------
// Screenplay
// ---------------------------------------------------------------------------

inline json block_to_json(const DialogueBlock& b) {
  json cues = json::array();
  for (const auto& c : b.line_cues) cues.push_back(detail::optional_string(c));
  return {
      {"speaker", b.speaker},
      {"cue", detail::optional_string(b.cue)},
      {"lines", b.lines},
      {"line_cues", cues},
      {"scene_index", b.scene_index},
      {"element_range", {b.element_begin, b.element_end}},
      {"character_element",
       b.character_element ? json(*b.character_element) : json(nullptr)},
  };
}

inline DialogueBlock block_from_json(const json& j) {
  DialogueBlock b;
  b.speaker = j.at("speaker").get<std::string>();
  b.cue = detail::read_optional_string(j, "cue");
  b.lines = j.at("lines").get<std::vector<std::string>>();
  for (const auto& c : j.at("line_cues")) {
    b.line_cues.push_back(c.is_null() ? std::nullopt : std::optional<std::string>(c.get<std::string>()));
  }
  b.scene_index = j.at("scene_index").get<std::size_t>();
  b.element_begin = j.at("element_range").at(0).get<std::size_t>();
  b.element_end = j.at("element_range").at(1).get<std::size_t>();
  if (j.contains("character_element") && !j["character_element"].is_null()) {
    b.character_element = j["character_element"].get<std::size_t>();
  }
  return b;
}

inline json screenplay_to_json(const Screenplay& sp) {
  json elements = json::array();
  for (const auto& e : sp.elements) {
    elements.push_back({{"kind", std::string(to_string(e.kind))},
                        {"text", e.text},
                        {"line_span", {e.lines.first, e.lines.last}},
                        {"indent", e.indent},
                        {"column", e.column}});
  }
  json scenes = json::array();
  for (const auto& s : sp.scenes) {
    scenes.push_back({{"scene_index", s.index},
                      {"heading", s.heading ? json(*s.heading) : json(nullptr)},
                      {"element_range", {s.begin, s.end}}});
  }
  return {{"elements", elements},
          {"scenes", scenes},
          {"line_counts",
           {{"total", sp.total_lines}, {"blank", sp.blank_lines}, {"discarded", sp.discarded_lines}}}};
}

inline Screenplay screenplay_from_json(const json& j) {
  Screenplay sp;
  for (const auto& e : j.at("elements")) {
    ScreenplayElement el;
    auto kind = element_kind_from_string(e.at("kind").get<std::string>());
    if (!kind) throw Error(ErrorCode::InvalidRecord, "unknown element kind " + e.at("kind").dump());
    el.kind = *kind;
    el.text = e.at("text").get<std::string>();
    el.lines = {e.at("line_span").at(0).get<std::size_t>(), e.at("line_span").at(1).get<std::size_t>()};
    el.indent = e.value("indent", std::size_t{0});
    el.column = e.value("column", 0);
    sp.elements.push_back(std::move(el));
  }
  for (const auto& s : j.at("scenes")) {
    Scene scene;
    scene.index = s.at("scene_index").get<std::size_t>();
    if (!s.at("heading").is_null()) scene.heading = s.at("heading").get<std::size_t>();
    scene.begin = s.at("element_range").at(0).get<std::size_t>();
    scene.end = s.at("element_range").at(1).get<std::size_t>();
    sp.scenes.push_back(scene);
  }
  if (j.contains("line_counts")) {
    const auto& c = j["line_counts"];
    sp.total_lines = c.value("total", std::size_t{0});
    sp.blank_lines = c.value("blank", std::size_t{0});
    sp.discarded_lines = c.value("discarded", std::size_t{0});
  }
  return sp;
}

/// Document written by `parse-script`.
inline json parse_script_document(const Screenplay& sp, const DialogueExtraction& blocks,
                                  const std::string& source, const json& config) {
  json doc = screenplay_to_json(sp);
  json arr = json::array();
  for (const auto& b : blocks.blocks) arr.push_back(block_to_json(b));
  std::vector<Diagnostic> warnings = sp.warnings;
  warnings.insert(warnings.end(), blocks.warnings.begin(), blocks.warnings.end());
  doc["schema_version"] = kSchemaVersion;
  doc["source"] = source;
  doc["dialogue_blocks"] = arr;
  doc["warnings"] = diagnostics_to_json(warnings);
  doc["config_echo"] = config;
  return doc;
}

// ---------------------------------------------------------------------------
// Subtitles
// ---------------------------------------------------------------------------

inline json cue_to_json(const SubtitleCue& c) {
  return {{"index", c.index},
          {"start_ms", c.start_ms},
          {"end_ms", c.end_ms},
          {"raw_lines", c.raw_lines},
          {"clean_text", c.clean_text}};
}

inline SubtitleCue cue_from_json(const json& j) {
  SubtitleCue c;
  c.index = j.at("index").get<std::size_t>();
  c.start_ms = j.at("start_ms").get<Millis>();
  c.end_ms = j.at("end_ms").get<Millis>();
  if (j.contains("raw_lines")) c.raw_lines = j["raw_lines"].get<std::vector<std::string>>();
  c.clean_text = j.value("clean_text", std::string());
  return c;
}

inline json parse_srt_document(const SubtitleTrack& track, const json& config) {
  json cues = json::array();
  for (const auto& c : track.cues) cues.push_back(cue_to_json(c));
  return {{"schema_version", kSchemaVersion},
          {"source", track.source_name},
          {"cues", cues},
          {"warnings", diagnostics_to_json(track.warnings)},
          {"config_echo", config}};
}

// ---------------------------------------------------------------------------
// Alignment
// ---------------------------------------------------------------------------

inline json segment_to_json(const AlignedSegment& s) {
  return {{"block_range", {s.block_first, s.block_last}},
          {"cue_range", {s.cue_first, s.cue_last}},
          {"start_ms", s.start_ms},
          {"end_ms", s.end_ms},
          {"score", s.score},
          {"matched_tokens", s.matched_tokens},
          {"script_tokens", s.script_tokens},
          {"subtitle_tokens", s.subtitle_tokens}};
}

inline AlignedSegment segment_from_json(const json& j) {
  AlignedSegment s;
  s.block_first = j.at("block_range").at(0).get<std::size_t>();
  s.block_last = j.at("block_range").at(1).get<std::size_t>();
  s.cue_first = j.at("cue_range").at(0).get<std::size_t>();
  s.cue_last = j.at("cue_range").at(1).get<std::size_t>();
  s.start_ms = j.at("start_ms").get<Millis>();
  s.end_ms = j.at("end_ms").get<Millis>();
  s.score = j.at("score").get<double>();
  s.matched_tokens = j.value("matched_tokens", std::size_t{0});
  s.script_tokens = j.value("script_tokens", std::size_t{0});
  s.subtitle_tokens = j.value("subtitle_tokens", std::size_t{0});
  return s;
}

inline json attributed_line_to_json(const AttributedLine& l) {
  return {{"speaker", l.speaker},   {"text", l.text},         {"cue", detail::optional_string(l.cue)},
          {"start_ms", l.start_ms}, {"end_ms", l.end_ms},     {"scene_index", l.scene_index},
          {"block", l.block},       {"line", l.line},         {"segment", l.segment}};
}

/// Document written by `align`. It embeds the screenplay, the dialogue blocks
/// and the cue timings so `extract` needs nothing else.
inline json alignment_document(const AlignmentResult& result, const Screenplay& sp,
                               const SubtitleTrack& track, const json& config) {
  json segments = json::array();
  for (const auto& s : result.segments) segments.push_back(segment_to_json(s));
  json dropped = json::array();
  for (const auto& s : result.dropped) dropped.push_back(segment_to_json(s));
  json lines = json::array();
  for (const auto& l : attribute_dialogue(result, track)) lines.push_back(attributed_line_to_json(l));
  json unaligned = json::array();
  for (std::size_t b : result.unaligned_blocks) {
    const auto& block = result.blocks[b];
    unaligned.push_back({{"block", b},
                         {"speaker", block.speaker},
                         {"lines", block.lines},
                         {"scene_index", block.scene_index},
                         {"start_ms", nullptr},
                         {"end_ms", nullptr}});
  }
  json blocks = json::array();
  for (const auto& b : result.blocks) blocks.push_back(block_to_json(b));
  json cues = json::array();
  for (const auto& c : track.cues) {
    cues.push_back({{"index", c.index}, {"start_ms", c.start_ms}, {"end_ms", c.end_ms}, {"clean_text", c.clean_text}});
  }
  return {{"schema_version", kSchemaVersion},
          {"movie_id", result.movie_id},
          {"segments", segments},
          {"dropped_segments", dropped},
          {"attributed_lines", lines},
          {"unaligned_blocks", unaligned},
          {"coverage", result.coverage},
          {"total_script_tokens", result.total_script_tokens},
          {"aligned_script_tokens", result.aligned_script_tokens},
          {"screenplay", screenplay_to_json(sp)},
          {"dialogue_blocks", blocks},
          {"cues", cues},
          {"config_echo", config}};
}

struct LoadedAlignment {
  AlignmentResult result;
  Screenplay screenplay;
};

inline LoadedAlignment alignment_from_json(const json& j) {
  LoadedAlignment out;
  out.result.movie_id = j.at("movie_id").get<std::string>();
  for (const auto& s : j.at("segments")) out.result.segments.push_back(segment_from_json(s));
  for (const auto& s : j.value("dropped_segments", json::array())) out.result.dropped.push_back(segment_from_json(s));
  for (const auto& b : j.at("dialogue_blocks")) out.result.blocks.push_back(block_from_json(b));
  for (const auto& u : j.at("unaligned_blocks")) out.result.unaligned_blocks.push_back(u.at("block").get<std::size_t>());
  out.result.coverage = j.at("coverage").get<double>();
  out.result.total_script_tokens = j.value("total_script_tokens", std::size_t{0});
  out.result.aligned_script_tokens = j.value("aligned_script_tokens", std::size_t{0});
  out.screenplay = screenplay_from_json(j.at("screenplay"));
  for (const auto& s : out.result.segments) {
    if (s.block_last >= out.result.blocks.size() || s.block_first > s.block_last) {
      throw Error(ErrorCode::InvalidRecord, "alignment segment references a missing dialogue block");
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Story context
// ---------------------------------------------------------------------------

inline json context_to_json(const StoryScriptContext& ctx) {
  json lines = json::array();
  for (const auto& l : ctx.lines) lines.push_back(attributed_line_to_json(l));
  json cues = json::array();
  for (const auto& c : ctx.delivery_cues) cues.push_back({{"speaker", c.speaker}, {"cue", c.cue}});
  json scenes = json::array();
  for (const auto& sc : ctx.scenes) {
    json untimed = json::array();
    for (const auto& u : sc.untimed) {
      untimed.push_back({{"speaker", u.speaker}, {"cue", detail::optional_string(u.cue)}, {"text", u.text},
                         {"block", u.block}, {"start_ms", nullptr}, {"end_ms", nullptr}});
    }
    scenes.push_back({{"scene_index", sc.scene_index},
                      {"heading", detail::optional_string(sc.heading)},
                      {"action_lines", sc.action_lines},
                      {"untimed_lines", untimed}});
  }
  return {{"schema_version", kSchemaVersion},
          {"story_id", ctx.story_id},
          {"movie_id", ctx.movie_id},
          {"range", {{"start_ms", ctx.range.start_ms}, {"end_ms", ctx.range.end_ms}}},
          {"pad_ms", ctx.pad_ms},
          {"segments", ctx.segments},
          {"attributed_lines", lines},
          {"action_lines", ctx.action_lines},
          {"delivery_cues", cues},
          {"scenes", scenes},
          {"empty", ctx.empty}};
}

// ---------------------------------------------------------------------------
// JSONL inputs
// ---------------------------------------------------------------------------

/// Calls `fn(doc, line_number)` for every non-blank line; malformed JSON is
/// reported with its line number.
template <typename Fn>
void for_each_jsonl(std::string_view content, std::string_view what, Fn&& fn) {
  const auto lines = text::split_lines(content);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (text::trim(lines[i]).empty()) continue;
    json doc = json::parse(lines[i], nullptr, false);
    if (doc.is_discarded() || !doc.is_object()) {
      throw Error(ErrorCode::InvalidRecord,
                  std::string(what) + " line " + std::to_string(i + 1) + " is not a JSON object");
    }
    try {
      fn(doc, i + 1);
    } catch (const json::exception& e) {
      throw Error(ErrorCode::InvalidRecord,
                  std::string(what) + " line " + std::to_string(i + 1) + ": " + e.what());
    }
  }
}

namespace detail {

inline const json& require_field(const json& doc, const char* key, std::string_view what,
                                 std::size_t line) {
  if (!doc.contains(key) || doc[key].is_null()) {
    throw Error(ErrorCode::InvalidRecord, std::string(what) + " line " + std::to_string(line) +
                                              ": missing required field '" + key + "'");
  }
  return doc[key];
}

inline Error field_error(std::string_view what, std::size_t line, const std::string& msg) {
  return Error(ErrorCode::InvalidRecord, std::string(what) + " line " + std::to_string(line) + ": " + msg);
}

}  // namespace detail

/// Story ingestion records: story_id, movie_id, frame_files, start_ms, end_ms
/// are required; cot_text and story_text are optional.
inline std::vector<StoryRecord> load_story_records(std::string_view content) {
  constexpr std::string_view what = "stories";
  std::vector<StoryRecord> out;
  for_each_jsonl(content, what, [&](const json& doc, std::size_t line) {
    StoryRecord r;
    const auto& sid = detail::require_field(doc, "story_id", what, line);
    const auto& mid = detail::require_field(doc, "movie_id", what, line);
    const auto& frames = detail::require_field(doc, "frame_files", what, line);
    const auto& start = detail::require_field(doc, "start_ms", what, line);
    const auto& end = detail::require_field(doc, "end_ms", what, line);
    if (!sid.is_string() || sid.get<std::string>().empty()) throw detail::field_error(what, line, "'story_id' must be a non-empty string");
    if (!mid.is_string()) throw detail::field_error(what, line, "'movie_id' must be a string");
    if (!frames.is_array()) throw detail::field_error(what, line, "'frame_files' must be an array of strings");
    for (const auto& f : frames) {
      if (!f.is_string()) throw detail::field_error(what, line, "'frame_files' must be an array of strings");
      r.frame_files.push_back(f.get<std::string>());
    }
    if (!start.is_number_integer() || !end.is_number_integer()) {
      throw detail::field_error(what, line, "'start_ms' and 'end_ms' must be integers");
    }
    r.story_id = sid.get<std::string>();
    r.movie_id = mid.get<std::string>();
    r.start_ms = start.get<Millis>();
    r.end_ms = end.get<Millis>();
    if (r.start_ms < 0 || r.end_ms < r.start_ms) {
      throw detail::field_error(what, line, "need 0 <= start_ms <= end_ms");
    }
    r.cot_text = detail::read_optional_string(doc, "cot_text");
    r.story_text = detail::read_optional_string(doc, "story_text");
    out.push_back(std::move(r));
  });
  return out;
}

/// Stories for corpus statistics: needs story_text; story_id falls back to
/// the line number.
inline std::vector<GroundedStory> load_grounded_stories(std::string_view content) {
  std::vector<GroundedStory> out;
  for_each_jsonl(content, "stories", [&](const json& doc, std::size_t line) {
    const auto& t = detail::require_field(doc, "story_text", "stories", line);
    if (!t.is_string()) throw detail::field_error("stories", line, "'story_text' must be a string");
    std::string id = doc.contains("story_id") && doc["story_id"].is_string()
                         ? doc["story_id"].get<std::string>()
                         : "line" + std::to_string(line);
    out.push_back(parse_grounded_story(t.get<std::string>(), std::move(id)));
  });
  return out;
}

inline std::string read_file_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// A file is story JSONL. A directory holds *.txt files (one story each, id
/// from the file name) and/or *.jsonl files, read in file-name order.
inline std::vector<GroundedStory> load_story_corpus(const std::filesystem::path& input) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(input)) return load_grounded_stories(read_file_text(input));
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(input)) {
    const auto ext = entry.path().extension();
    if (entry.is_regular_file() && (ext == ".txt" || ext == ".jsonl")) files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  std::vector<GroundedStory> stories;
  for (const auto& f : files) {
    if (f.extension() == ".txt") {
      stories.push_back(parse_grounded_story(read_file_text(f), f.stem().string()));
    } else {
      auto more = load_grounded_stories(read_file_text(f));
      stories.insert(stories.end(), std::make_move_iterator(more.begin()), std::make_move_iterator(more.end()));
    }
  }
  return stories;
}

inline json corpus_stats_to_json(const CorpusStats& c, const json& config) {
  json per_story = json::array();
  for (const auto& s : c.per_story) {
    per_story.push_back({{"story_id", s.story_id},
                         {"words", s.words},
                         {"refs_total", s.refs_total()},
                         {"char_mentions", s.char_mentions},
                         {"object_refs", s.object_refs},
                         {"setting_refs", s.setting_refs},
                         {"action_refs", s.action_refs},
                         {"image_refs", s.image_refs},
                         {"distinct_characters", s.distinct_characters}});
  }
  return {{"schema_version", kSchemaVersion},
          {"n_stories", c.n_stories},
          {"mean_words", c.mean_words},
          {"std_words", c.std_words},
          {"mean_refs_total", c.mean_refs_total},
          {"mean_char_mentions", c.mean_char_mentions},
          {"mean_object_refs", c.mean_object_refs},
          {"mean_setting_refs", c.mean_setting_refs},
          {"mean_action_refs", c.mean_action_refs},
          {"mean_image_refs", c.mean_image_refs},
          {"mean_distinct_chars", c.mean_distinct_chars},
          {"per_story", per_story},
          {"config_echo", config}};
}

inline std::string per_story_csv(const CorpusStats& c) {
  auto quote = [](const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string q = "\"";
    for (char ch : s) {
      if (ch == '"') q += '"';
      q += ch;
    }
    return q + "\"";
  };
  std::string out =
      "story_id,words,refs_total,char_mentions,object_refs,setting_refs,action_refs,image_refs,distinct_characters\n";
  for (const auto& s : c.per_story) {
    out += quote(s.story_id) + "," + std::to_string(s.words) + "," + std::to_string(s.refs_total()) + "," +
           std::to_string(s.char_mentions) + "," + std::to_string(s.object_refs) + "," +
           std::to_string(s.setting_refs) + "," + std::to_string(s.action_refs) + "," +
           std::to_string(s.image_refs) + "," + std::to_string(s.distinct_characters) + "\n";
  }
  return out;
}

// ---------------------------------------------------------------------------
// Evaluation records
// ---------------------------------------------------------------------------

inline json verdict_to_json(const PairwiseVerdict& v) {
  return {{"sample_id", v.sample_id},
          {"reference_type", std::string(to_string(v.reference_type))},
          {"run_id", v.run_id},
          {"winner", std::string(to_string(v.winner))}};
}

inline std::vector<PairwiseVerdict> load_verdicts(std::string_view content) {
  constexpr std::string_view what = "verdicts";
  std::vector<PairwiseVerdict> out;
  for_each_jsonl(content, what, [&](const json& doc, std::size_t line) {
    PairwiseVerdict v;
    v.sample_id = detail::require_field(doc, "sample_id", what, line).get<std::string>();
    auto ref = reference_type_from_string(detail::require_field(doc, "reference_type", what, line).get<std::string>());
    if (!ref) throw detail::field_error(what, line, "unknown reference_type");
    v.reference_type = *ref;
    v.run_id = detail::require_field(doc, "run_id", what, line).get<int>();
    auto w = winner_from_string(detail::require_field(doc, "winner", what, line).get<std::string>());
    if (!w) throw detail::field_error(what, line, "winner must be A, B or tie");
    v.winner = *w;
    out.push_back(std::move(v));
  });
  return out;
}

inline json qa_item_to_json(const QAItem& item) {
  json j = {{"story_id", item.story_id},
            {"category", std::string(to_string(item.category))},
            {"question", item.question},
            {"options", item.options},
            {"correct_index", item.correct_index}};
  if (!item.character_names.empty()) j["character_names"] = item.character_names;
  return j;
}

inline QAItem qa_item_from_json(const json& doc, std::string_view what, std::size_t line) {
  QAItem item;
  item.story_id = detail::require_field(doc, "story_id", what, line).get<std::string>();
  auto cat = qa_category_from_string(detail::require_field(doc, "category", what, line).get<std::string>());
  if (!cat) throw detail::field_error(what, line, "category must be emotional, action or relationship");
  item.category = *cat;
  item.question = detail::require_field(doc, "question", what, line).get<std::string>();
  item.options = detail::require_field(doc, "options", what, line).get<std::vector<std::string>>();
  item.correct_index = detail::require_field(doc, "correct_index", what, line).get<int>();
  if (doc.contains("character_names")) {
    item.character_names = doc["character_names"].get<std::vector<std::string>>();
  }
  return item;
}

inline std::vector<QAItem> load_qa_items(std::string_view content) {
  std::vector<QAItem> out;
  for_each_jsonl(content, "qa items", [&](const json& doc, std::size_t line) {
    out.push_back(qa_item_from_json(doc, "qa items", line));
  });
  return out;
}

inline QaAnswers load_qa_answers(std::string_view content) {
  constexpr std::string_view what = "qa answers";
  QaAnswers out;
  for_each_jsonl(content, what, [&](const json& doc, std::size_t line) {
    std::string story = detail::require_field(doc, "story_id", what, line).get<std::string>();
    auto cat = qa_category_from_string(detail::require_field(doc, "category", what, line).get<std::string>());
    if (!cat) throw detail::field_error(what, line, "category must be emotional, action or relationship");
    const int chosen = detail::require_field(doc, "chosen_index", what, line).get<int>();
    if (chosen < 0 || chosen > 2) throw detail::field_error(what, line, "chosen_index must be 0, 1 or 2");
    if (!out.emplace(QaKey{story, *cat}, chosen).second) {
      throw Error(ErrorCode::DuplicateRecord, std::string(what) + " line " + std::to_string(line) +
                                                  ": duplicate answer for " + story);
    }
  });
  return out;
}

/// Parses a QA-generation completion (a JSON array of three questions).
inline std::vector<QAItem> parse_qa_generation(std::string_view raw, const std::string& story_id) {
  std::string_view body = text::trim(raw);
  // Tolerate a fenced code block around the array.
  if (body.substr(0, 3) == "```") {
    auto first_nl = body.find('\n');
    auto last_fence = body.rfind("```");
    if (first_nl != std::string_view::npos && last_fence > first_nl) {
      body = text::trim(body.substr(first_nl + 1, last_fence - first_nl - 1));
    }
  }
  json doc = json::parse(body, nullptr, false);
  if (doc.is_discarded() || !doc.is_array()) {
    throw Error(ErrorCode::MalformedResponse, "QA generation response is not a JSON array");
  }
  std::vector<QAItem> items;
  std::size_t k = 0;
  for (auto q : doc) {
    ++k;
    if (!q.is_object()) throw Error(ErrorCode::MalformedResponse, "QA question is not an object");
    q["story_id"] = story_id;
    try {
      items.push_back(qa_item_from_json(q, "qa generation", k));
    } catch (const json::exception& e) {
      throw Error(ErrorCode::MalformedResponse, std::string("QA generation: ") + e.what());
    }
    validate_qa_item(items.back());
  }
  if (items.size() != 3) throw Error(ErrorCode::MalformedResponse, "QA generation must yield three questions");
  return items;
}

inline std::vector<PairwiseJob> load_pairwise_jobs(std::string_view content) {
  constexpr std::string_view what = "judge jobs";
  std::vector<PairwiseJob> out;
  for_each_jsonl(content, what, [&](const json& doc, std::size_t line) {
    PairwiseJob job;
    job.sample_id = detail::require_field(doc, "sample_id", what, line).get<std::string>();
    auto ref = reference_type_from_string(detail::require_field(doc, "reference_type", what, line).get<std::string>());
    if (!ref) throw detail::field_error(what, line, "unknown reference_type");
    job.reference_type = *ref;
    job.reference = detail::require_field(doc, "reference", what, line).get<std::string>();
    job.story_a = detail::require_field(doc, "story_a", what, line).get<std::string>();
    job.story_b = detail::require_field(doc, "story_b", what, line).get<std::string>();
    out.push_back(std::move(job));
  });
  return out;
}

/// 64-bit FNV-1a of a prompt as 16 hex digits; keys recorded judge responses.
inline std::string prompt_fingerprint(std::string_view prompt) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : prompt) h = (h ^ c) * 1099511628211ull;
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

inline json exchange_to_json(const JudgeExchange& ex) {
  return {{"sample_id", ex.sample_id},
          {"reference_type", std::string(to_string(ex.reference_type))},
          {"run_id", ex.run_id},
          {"swapped", ex.swapped},
          {"prompt_fnv1a", prompt_fingerprint(ex.prompt)},
          {"response", ex.response},
          {"winner", ex.winner ? json(std::string(to_string(*ex.winner))) : json(nullptr)},
          {"error", detail::optional_string(ex.error)}};
}

/// Recorded exchanges keyed by prompt fingerprint, for offline replay.
inline std::map<std::string, std::string> load_recorded_responses(std::string_view content) {
  constexpr std::string_view what = "recorded exchanges";
  std::map<std::string, std::string> out;
  for_each_jsonl(content, what, [&](const json& doc, std::size_t line) {
    const auto key = detail::require_field(doc, "prompt_fnv1a", what, line).get<std::string>();
    if (!doc.contains("response") || !doc["response"].is_string()) return;
    const auto response = doc["response"].get<std::string>();
    if (response.empty()) return;
    out.emplace(key, response);
  });
  return out;
}

inline json win_rate_table_to_json(const WinRateTable& table) {
  json rows = json::array();
  for (const auto& row : table.rows) {
    auto stat = [](const RateStat& r) { return json{{"mean", r.mean}, {"std", r.std}}; };
    json runs = json::array();
    for (const auto& r : row.per_run) runs.push_back({{"a", r[0]}, {"b", r[1]}, {"tie", r[2]}});
    rows.push_back({{"reference_type", std::string(to_string(row.reference_type))},
                    {"runs", row.runs},
                    {"samples", row.samples},
                    {"win_a", stat(row.win_a)},
                    {"win_b", stat(row.win_b)},
                    {"tie", stat(row.tie)},
                    {"per_run", runs}});
  }
  return rows;
}

inline json qa_result_to_json(const std::string& label, const QAResult& r) {
  json per = json::object();
  json correct = json::object();
  for (auto c : kQaCategories) {
    per[std::string(to_string(c))] = r.per_category.at(c);
    correct[std::string(to_string(c))] = r.correct_per_category.at(c);
  }
  return {{"label", label},
          {"overall_accuracy", r.overall_accuracy},
          {"per_category", per},
          {"correct_per_category", correct},
          {"n_stories", r.n_stories},
          {"n_questions", r.n_questions},
          {"n_correct", r.n_correct}};
}

}  // namespace storymovie
