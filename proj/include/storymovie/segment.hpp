#pragma once

#include <algorithm>
#include <cstddef>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "storymovie/align.hpp"
#include "storymovie/error.hpp"
#include "storymovie/screenplay.hpp"
#include "storymovie/timecode.hpp"

namespace storymovie {

/// Time span covered by a story's frames, taken from the ingestion record.
struct FrameRange {
  std::string story_id;
  std::string movie_id;
  Millis start_ms = 0;
  Millis end_ms = 0;
};

/// One line of the story ingestion JSONL.
struct StoryRecord {
  std::string story_id;
  std::string movie_id;
  std::vector<std::string> frame_files;
  Millis start_ms = 0;
  Millis end_ms = 0;
  std::optional<std::string> cot_text;
  std::optional<std::string> story_text;

  FrameRange range() const { return {story_id, movie_id, start_ms, end_ms}; }
};

struct UntimedLine {
  std::string speaker;
  std::optional<std::string> cue;
  std::string text;
  std::size_t block = 0;
};

struct DeliveryCue {
  std::string speaker;
  std::string cue;

  bool operator==(const DeliveryCue&) const = default;
};

struct SceneContext {
  std::size_t scene_index = 0;
  std::optional<std::string> heading;
  std::vector<std::string> action_lines;
  std::vector<AttributedLine> lines;
  std::vector<UntimedLine> untimed;
};

struct StoryScriptContext {
  std::string story_id;
  std::string movie_id;
  FrameRange range;
  Millis pad_ms = 0;
  // Indices into AlignmentResult::segments, ascending.
  std::vector<std::size_t> segments;
  std::vector<AttributedLine> lines;
  std::vector<std::string> action_lines;
  std::vector<DeliveryCue> delivery_cues;
  std::vector<SceneContext> scenes;
  bool empty = true;
};

/// Closed-interval test between a segment widened by `pad_ms` on both sides
/// and the frame range.
inline bool overlaps(const AlignedSegment& seg, const FrameRange& range, Millis pad_ms) {
  return seg.start_ms - pad_ms <= range.end_ms && range.start_ms <= seg.end_ms + pad_ms;
}

inline StoryScriptContext extract_context(const FrameRange& range, const AlignmentResult& result,
                                          const Screenplay& sp, Millis pad_ms = 0) {
  if (range.movie_id != result.movie_id) {
    throw Error(ErrorCode::MovieMismatch, "story " + range.story_id + " belongs to movie '" +
                                              range.movie_id + "' but the alignment is for '" +
                                              result.movie_id + "'");
  }
  if (range.start_ms < 0 || range.end_ms < range.start_ms) {
    throw Error(ErrorCode::InvalidRecord, "story " + range.story_id + " has an invalid time range");
  }
  if (pad_ms < 0) throw Error(ErrorCode::InvalidConfig, "pad_ms must be non-negative");

  StoryScriptContext ctx;
  ctx.story_id = range.story_id;
  ctx.movie_id = range.movie_id;
  ctx.range = range;
  ctx.pad_ms = pad_ms;

  AlignmentResult included;
  included.movie_id = result.movie_id;
  std::vector<std::size_t> scene_ids;
  for (std::size_t s = 0; s < result.segments.size(); ++s) {
    const AlignedSegment& seg = result.segments[s];
    if (!overlaps(seg, range, pad_ms)) continue;
    ctx.segments.push_back(s);
    included.segments.push_back(seg);
    for (std::size_t b = seg.block_first; b <= seg.block_last; ++b) {
      scene_ids.push_back(result.blocks.at(b).scene_index);
    }
  }
  ctx.empty = ctx.segments.empty();
  if (ctx.empty) return ctx;

  std::sort(scene_ids.begin(), scene_ids.end());
  scene_ids.erase(std::unique(scene_ids.begin(), scene_ids.end()), scene_ids.end());

  // attribute_dialogue numbers segments locally; map back to result indices.
  SubtitleTrack bounds;
  std::size_t max_cue = 0;
  for (const auto& seg : included.segments) max_cue = std::max(max_cue, seg.cue_last);
  bounds.cues.resize(max_cue + 1);
  ctx.lines = attribute_dialogue(included, result.blocks, bounds);
  for (auto& line : ctx.lines) line.segment = ctx.segments[line.segment];

  std::vector<bool> timed(result.blocks.size(), false);
  for (const auto& seg : result.segments) {
    for (std::size_t b = seg.block_first; b <= seg.block_last; ++b) timed[b] = true;
  }

  for (std::size_t scene_index : scene_ids) {
    const Scene& scene = sp.scenes.at(scene_index);
    SceneContext sc;
    sc.scene_index = scene_index;
    if (scene.heading) sc.heading = sp.elements[*scene.heading].text;
    std::string speaker = "UNKNOWN";
    for (std::size_t e = scene.begin; e < scene.end; ++e) {
      const ScreenplayElement& el = sp.elements[e];
      if (el.kind == ElementKind::Action) {
        sc.action_lines.push_back(el.text);
        ctx.action_lines.push_back(el.text);
      } else if (el.kind == ElementKind::Character) {
        speaker = normalize_speaker(el.text);
      } else if (el.kind == ElementKind::Parenthetical) {
        ctx.delivery_cues.push_back({speaker, el.text});
      }
    }
    for (const auto& line : ctx.lines) {
      if (line.scene_index == scene_index) sc.lines.push_back(line);
    }
    for (std::size_t b = 0; b < result.blocks.size(); ++b) {
      const DialogueBlock& block = result.blocks[b];
      if (block.scene_index != scene_index || timed[b]) continue;
      for (std::size_t l = 0; l < block.lines.size(); ++l) {
        std::optional<std::string> cue;
        if (l < block.line_cues.size()) cue = block.line_cues[l];
        sc.untimed.push_back({block.speaker, cue, block.lines[l], b});
      }
    }
    ctx.scenes.push_back(std::move(sc));
  }
  return ctx;
}

inline constexpr std::string_view kNoContextSentinel = "NO ALIGNED SCRIPT CONTEXT";

/// Plain-text rendering fed to story generation. Per scene: a header, the
/// action lines, timed dialogue as "SPEAKER (cue): text [start–end]", then any
/// untimed dialogue of that scene under an "UNTIMED:" marker.
inline std::string render_context(const StoryScriptContext& ctx) {
  if (ctx.empty) return std::string(kNoContextSentinel) + "\n";
  auto speaker_prefix = [](const std::string& speaker, const std::optional<std::string>& cue) {
    std::string s = speaker;
    if (cue) s += " " + *cue;
    return s + ": ";
  };
  std::string out;
  for (std::size_t i = 0; i < ctx.scenes.size(); ++i) {
    const SceneContext& sc = ctx.scenes[i];
    if (i > 0) out += "\n";
    out += "SCENE " + std::to_string(sc.scene_index) + ": " + sc.heading.value_or("(no heading)") +
           "\n";
    for (const auto& action : sc.action_lines) out += action + "\n";
    for (const auto& line : sc.lines) {
      out += speaker_prefix(line.speaker, line.cue) + line.text + " [" +
             format_timestamp(line.start_ms) + "\xE2\x80\x93" + format_timestamp(line.end_ms) +
             "]\n";
    }
    if (!sc.untimed.empty()) {
      out += "UNTIMED:\n";
      for (const auto& line : sc.untimed) out += speaker_prefix(line.speaker, line.cue) + line.text + "\n";
    }
  }
  return out;
}

}  // namespace storymovie
