#pragma once

#include <algorithm>
#include <charconv>
#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "storymovie/error.hpp"
#include "storymovie/text.hpp"
#include "storymovie/timecode.hpp"

namespace storymovie {

struct SubtitleCue {
  std::size_t index = 0;
  Millis start_ms = 0;
  Millis end_ms = 0;
  std::vector<std::string> raw_lines;
  std::string clean_text;

  bool operator==(const SubtitleCue&) const = default;
};

struct SubtitleTrack {
  std::vector<SubtitleCue> cues;
  std::string source_name;
  std::vector<Diagnostic> warnings;

  bool operator==(const SubtitleTrack&) const = default;
};

namespace detail {

inline std::string strip_markup(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '<') {
      auto close = s.find('>', i + 1);
      if (close != std::string_view::npos) {
        i = close;
        continue;
      }
    }
    // ASS-style override blocks such as {\an8}
    if (s[i] == '{' && i + 1 < s.size() && s[i + 1] == '\\') {
      auto close = s.find('}', i + 1);
      if (close != std::string_view::npos) {
        i = close;
        continue;
      }
    }
    out.push_back(s[i]);
  }
  return out;
}

/// Removes [..] and (..) spans, e.g. "[door slams]" or "(SIGHS)".
inline std::string strip_annotations(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '[' || s[i] == '(') {
      const char closer = s[i] == '[' ? ']' : ')';
      auto close = s.find(closer, i + 1);
      if (close != std::string_view::npos) {
        i = close;
        out.push_back(' ');
        continue;
      }
    }
    out.push_back(s[i]);
  }
  return out;
}

inline std::string_view strip_leading_dashes(std::string_view s) {
  for (;;) {
    s = text::trim(s);
    if (!s.empty() && s.front() == '-') {
      s.remove_prefix(1);
    } else if (s.substr(0, 3) == "\xE2\x80\x93" || s.substr(0, 3) == "\xE2\x80\x94") {
      s.remove_prefix(3);  // en dash, em dash
    } else {
      return s;
    }
  }
}

inline std::string clean_line(std::string_view line) {
  std::string current(line);
  // Each pass can expose new material for another (a tag hiding a bracket),
  // so iterate to a fixed point.
  for (int pass = 0; pass < 8; ++pass) {
    std::string next = strip_markup(current);
    next = strip_annotations(next);
    next = text::collapse_whitespace(strip_leading_dashes(next));
    if (next == current) break;
    current = std::move(next);
  }
  return current;
}

inline bool parse_counter(std::string_view s, std::size_t& out) {
  s = text::trim(s);
  if (s.empty()) return false;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size() && out > 0;
}

inline bool parse_timing(std::string_view s, Millis& start, Millis& end) {
  s = text::trim(s);
  auto arrow = s.find("-->");
  if (arrow == std::string_view::npos) return false;
  std::string_view left = text::trim(s.substr(0, arrow));
  std::string_view right = text::trim(s.substr(arrow + 3));
  // Some encoders append positioning (X1:.. Y1:..) after the end time.
  if (auto sp = right.find(' '); sp != std::string_view::npos) right = right.substr(0, sp);
  auto a = parse_timestamp(left);
  auto b = parse_timestamp(right);
  if (!a || !b) return false;
  start = *a;
  end = *b;
  return true;
}

}  // namespace detail

/// Normalizes cue text for matching: drops markup tags, bracketed and
/// parenthesized annotations and leading dialogue dashes, then joins lines
/// with single spaces. Idempotent.
inline std::string clean_subtitle_text(const std::vector<std::string>& lines) {
  std::string joined;
  for (const auto& line : lines) {
    std::string cleaned = detail::clean_line(line);
    if (cleaned.empty()) continue;
    if (!joined.empty()) joined.push_back(' ');
    joined += cleaned;
  }
  return detail::clean_line(joined);
}

inline std::string clean_subtitle_text(std::string_view line) {
  return clean_subtitle_text(std::vector<std::string>{std::string(line)});
}

/// Parses SRT text. Malformed blocks and cues whose start is not before their
/// end are skipped with a warning; cues are stably sorted by start time.
inline SubtitleTrack parse_srt(std::string_view input, std::string source_name = {}) {
  const std::string_view body = text::require_utf8(input, "subtitle track");
  const auto lines = text::split_lines(body);

  SubtitleTrack track;
  track.source_name = std::move(source_name);

  std::size_t i = 0;
  while (i < lines.size()) {
    while (i < lines.size() && text::trim(lines[i]).empty()) ++i;
    if (i >= lines.size()) break;
    const std::size_t block_start = i;
    while (i < lines.size() && !text::trim(lines[i]).empty()) ++i;
    const std::size_t block_end = i;
    const std::size_t line_no = block_start + 1;

    SubtitleCue cue;
    if (block_end - block_start < 3 || !detail::parse_counter(lines[block_start], cue.index) ||
        !detail::parse_timing(lines[block_start + 1], cue.start_ms, cue.end_ms)) {
      track.warnings.push_back({line_no, "malformed subtitle block skipped"});
      continue;
    }
    if (cue.start_ms >= cue.end_ms) {
      track.warnings.push_back(
          {line_no, "TimestampOrder: cue " + std::to_string(cue.index) + " dropped (start >= end)"});
      continue;
    }
    for (std::size_t k = block_start + 2; k < block_end; ++k) {
      cue.raw_lines.emplace_back(text::rtrim(lines[k]));
    }
    cue.clean_text = clean_subtitle_text(cue.raw_lines);
    track.cues.push_back(std::move(cue));
  }

  if (track.cues.empty()) {
    throw Error(ErrorCode::EmptyTrack, "no well-formed subtitle blocks");
  }
  const bool ordered = std::is_sorted(
      track.cues.begin(), track.cues.end(),
      [](const SubtitleCue& a, const SubtitleCue& b) { return a.start_ms < b.start_ms; });
  if (!ordered) {
    std::stable_sort(
        track.cues.begin(), track.cues.end(),
        [](const SubtitleCue& a, const SubtitleCue& b) { return a.start_ms < b.start_ms; });
    track.warnings.push_back({0, "cues were out of order and have been re-sorted by start time"});
  }
  return track;
}

/// Canonical SRT with LF line endings and comma decimal separators.
inline std::string serialize_srt(const SubtitleTrack& track) {
  std::string out;
  for (std::size_t i = 0; i < track.cues.size(); ++i) {
    const SubtitleCue& cue = track.cues[i];
    if (i > 0) out += "\n";
    out += std::to_string(cue.index);
    out += "\n";
    out += format_timestamp(cue.start_ms);
    out += " --> ";
    out += format_timestamp(cue.end_ms);
    out += "\n";
    for (const auto& line : cue.raw_lines) {
      out += line;
      out += "\n";
    }
  }
  return out;
}

}  // namespace storymovie
