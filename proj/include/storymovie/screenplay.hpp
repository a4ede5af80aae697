#pragma once

#include <algorithm>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "storymovie/error.hpp"
#include "storymovie/text.hpp"

namespace storymovie {

enum class ElementKind { SceneHeading, Character, Parenthetical, Dialogue, Action, Transition };

inline std::string_view to_string(ElementKind kind) {
  switch (kind) {
    case ElementKind::SceneHeading: return "SceneHeading";
    case ElementKind::Character: return "Character";
    case ElementKind::Parenthetical: return "Parenthetical";
    case ElementKind::Dialogue: return "Dialogue";
    case ElementKind::Action: return "Action";
    case ElementKind::Transition: return "Transition";
  }
  return "Action";
}

inline std::optional<ElementKind> element_kind_from_string(std::string_view s) {
  for (auto k : {ElementKind::SceneHeading, ElementKind::Character, ElementKind::Parenthetical,
                 ElementKind::Dialogue, ElementKind::Action, ElementKind::Transition}) {
    if (to_string(k) == s) return k;
  }
  return std::nullopt;
}

/// Inclusive range of 1-based source line numbers.
struct LineSpan {
  std::size_t first = 0;
  std::size_t last = 0;

  std::size_t size() const { return last - first + 1; }
  bool operator==(const LineSpan&) const = default;
};

struct ScreenplayElement {
  ElementKind kind = ElementKind::Action;
  std::string text;
  LineSpan lines;
  std::size_t indent = 0;
  // 1 for the right-hand column of dual dialogue, whose elements share source
  // lines with the left-hand column. Ordinary elements are column 0.
  int column = 0;

  bool operator==(const ScreenplayElement&) const = default;
};

/// Half-open range [begin, end) of element indices.
struct Scene {
  std::size_t index = 0;
  std::optional<std::size_t> heading;
  std::size_t begin = 0;
  std::size_t end = 0;

  bool operator==(const Scene&) const = default;
};

struct Screenplay {
  std::vector<ScreenplayElement> elements;
  std::vector<Scene> scenes;
  std::size_t total_lines = 0;
  std::size_t blank_lines = 0;
  std::size_t discarded_lines = 0;
  std::vector<Diagnostic> warnings;

  /// Scene containing element `element_index`.
  std::size_t scene_of(std::size_t element_index) const {
    auto it = std::upper_bound(scenes.begin(), scenes.end(), element_index,
                               [](std::size_t idx, const Scene& s) { return idx < s.begin; });
    return it == scenes.begin() ? 0 : std::prev(it)->index;
  }

  bool operator==(const Screenplay&) const = default;
};

/// Layout thresholds. Transcriptions vary widely, so none of these are fixed.
struct ScreenplayConfig {
  std::size_t character_indent_min = 25;
  std::size_t dialogue_indent_min = 10;
  std::size_t character_max_length = 40;
  double character_upper_ratio = 0.8;
  std::size_t tab_width = 8;
};

struct DialogueBlock {
  std::string speaker;
  std::optional<std::string> cue;
  std::vector<std::string> lines;
  // Parenthetical immediately preceding each line, parallel to `lines`.
  std::vector<std::optional<std::string>> line_cues;
  std::size_t scene_index = 0;
  std::size_t element_begin = 0;
  std::size_t element_end = 0;
  std::optional<std::size_t> character_element;

  bool operator==(const DialogueBlock&) const = default;
};

struct DialogueExtraction {
  std::vector<DialogueBlock> blocks;
  std::vector<Diagnostic> warnings;
};

namespace detail {

inline bool is_wrapped_in_parens(std::string_view s) {
  return s.size() >= 2 && s.front() == '(' && s.back() == ')';
}

inline bool is_scene_heading(std::string_view trimmed) {
  for (std::string_view prefix : {"INT./EXT.", "INT.", "EXT.", "I/E."}) {
    if (text::istarts_with(trimmed, prefix)) return true;
  }
  return false;
}

/// Has letters and none of them lowercase.
inline bool is_all_caps(std::string_view s) {
  bool any_alpha = false;
  for (char c : s) {
    if (text::is_ascii_lower(c)) return false;
    if (text::is_ascii_upper(c)) any_alpha = true;
  }
  return any_alpha;
}

inline bool is_transition(std::string_view trimmed) {
  if (!is_all_caps(trimmed)) return false;
  if (trimmed == "FADE OUT." || trimmed == "FADE IN:") return true;
  return trimmed.size() >= 3 && trimmed.substr(trimmed.size() - 3) == "TO:";
}

/// Share of uppercase among alphabetic characters, ignoring parenthesized
/// parts so "JOE (cont'd)" still reads as a name.
inline std::optional<double> uppercase_ratio(std::string_view s) {
  std::size_t alpha = 0;
  std::size_t upper = 0;
  int depth = 0;
  for (char c : s) {
    if (c == '(') {
      ++depth;
    } else if (c == ')') {
      depth = std::max(0, depth - 1);
    } else if (depth == 0 && text::is_ascii_alpha(c)) {
      ++alpha;
      if (text::is_ascii_upper(c)) ++upper;
    }
  }
  if (alpha == 0) return std::nullopt;
  return static_cast<double>(upper) / static_cast<double>(alpha);
}

inline bool looks_like_name(std::string_view trimmed, const ScreenplayConfig& cfg) {
  if (trimmed.empty() || trimmed.size() > cfg.character_max_length) return false;
  if (trimmed.front() == '(') return false;
  auto ratio = uppercase_ratio(trimmed);
  return ratio && *ratio >= cfg.character_upper_ratio;
}

inline bool is_page_artifact(std::string_view trimmed) {
  if (trimmed == "CONTINUED" || trimmed == "(CONTINUED)" || trimmed == "CONTINUED:" ||
      trimmed == "(MORE)") {
    return true;
  }
  std::string_view digits = trimmed;
  if (!digits.empty() && digits.back() == '.') digits.remove_suffix(1);
  if (digits.empty()) return false;
  return std::all_of(digits.begin(), digits.end(), [](char c) { return c >= '0' && c <= '9'; });
}

}  // namespace detail

/// Classifies one non-blank line. `next_indent` is the indentation of the
/// next non-blank line, if there is one; a character cue needs it to be at
/// dialogue depth or deeper.
///
/// Rules, first match wins:
///   1. starts with INT. / EXT. / INT./EXT. / I/E. (any case) -> SceneHeading
///   2. all caps and ends with "TO:", or is "FADE OUT." / "FADE IN:" -> Transition
///   3. indent >= character_indent_min, mostly uppercase, short, and followed
///      by an indented line -> Character
///   4. wrapped in parentheses after Character/Dialogue/Parenthetical -> Parenthetical
///   5. indent in [dialogue_indent_min, character_indent_min) after
///      Character/Dialogue/Parenthetical -> Dialogue
///   6. anything else -> Action
inline ElementKind classify_line(std::string_view line, std::size_t indent,
                                 std::optional<ElementKind> prev_kind,
                                 std::optional<std::size_t> next_indent = std::nullopt,
                                 const ScreenplayConfig& cfg = {}) {
  const std::string_view trimmed = text::trim(line);
  if (detail::is_scene_heading(trimmed)) return ElementKind::SceneHeading;
  if (detail::is_transition(trimmed)) return ElementKind::Transition;
  if (indent >= cfg.character_indent_min && detail::looks_like_name(trimmed, cfg) && next_indent &&
      *next_indent >= cfg.dialogue_indent_min) {
    return ElementKind::Character;
  }
  const bool in_speech = prev_kind && (*prev_kind == ElementKind::Character ||
                                       *prev_kind == ElementKind::Dialogue ||
                                       *prev_kind == ElementKind::Parenthetical);
  if (in_speech && detail::is_wrapped_in_parens(trimmed)) return ElementKind::Parenthetical;
  if (in_speech && indent >= cfg.dialogue_indent_min && indent < cfg.character_indent_min) {
    return ElementKind::Dialogue;
  }
  return ElementKind::Action;
}

/// Uppercases, collapses whitespace and strips trailing parentheticals such as
/// "(CONT'D)", "(V.O.)" or "(O.S.)".
inline std::string normalize_speaker(std::string_view name) {
  std::string s = text::collapse_whitespace(name);
  for (;;) {
    std::string_view view = text::rtrim(s);
    if (view.empty() || view.back() != ')') break;
    auto open = view.rfind('(');
    if (open == std::string_view::npos) break;
    s = std::string(text::rtrim(view.substr(0, open)));
  }
  s = text::to_upper(text::trim(s));
  return s.empty() ? std::string("UNKNOWN") : s;
}

namespace detail {

struct ContentLine {
  std::size_t number = 0;  // 1-based
  std::size_t indent = 0;
  std::string expanded;    // tab-expanded, right-trimmed
  std::string_view trimmed() const { return text::trim(expanded); }
};

/// Splits a row of a dual-dialogue region into left and right column text.
inline std::pair<std::string, std::string> split_dual_row(const ContentLine& row,
                                                          std::size_t boundary) {
  const std::string& s = row.expanded;
  // Find gaps of three or more spaces after the first character.
  std::size_t best = std::string::npos;
  std::size_t i = row.indent;
  while (i < s.size()) {
    if (s[i] == ' ') {
      std::size_t j = i;
      while (j < s.size() && s[j] == ' ') ++j;
      if (j - i >= 3 && j < s.size()) {
        if (best == std::string::npos ||
            (j > boundary ? j - boundary : boundary - j) <
                (best > boundary ? best - boundary : boundary - best)) {
          best = j;
        }
      }
      i = j;
    } else {
      ++i;
    }
  }
  if (best != std::string::npos) {
    return {text::collapse_whitespace(s.substr(0, best)), text::collapse_whitespace(s.substr(best))};
  }
  if (row.indent >= boundary) return {std::string(), text::collapse_whitespace(s)};
  return {text::collapse_whitespace(s), std::string()};
}

/// Detects "LEFT NAME      RIGHT NAME" character rows. Returns the column at
/// which the right name starts.
inline std::optional<std::size_t> dual_header(const ContentLine& line, const ScreenplayConfig& cfg) {
  if (line.indent < cfg.dialogue_indent_min) return std::nullopt;
  const std::string& s = line.expanded;
  std::size_t i = line.indent;
  while (i < s.size()) {
    if (s[i] == ' ') {
      std::size_t j = i;
      while (j < s.size() && s[j] == ' ') ++j;
      if (j - i >= 4 && j < s.size()) {
        std::string_view left = text::trim(std::string_view(s).substr(line.indent, i - line.indent));
        std::string_view right = text::trim(std::string_view(s).substr(j));
        if (right.find("    ") != std::string_view::npos) return std::nullopt;
        if (looks_like_name(left, cfg) && looks_like_name(right, cfg) &&
            !is_scene_heading(left) && !is_transition(text::trim(s))) {
          return j;
        }
        return std::nullopt;
      }
      i = j;
    } else {
      ++i;
    }
  }
  return std::nullopt;
}

}  // namespace detail

/// Parses screenplay text into classified elements and scenes.
///
/// Blank lines and page artifacts (bare page numbers, CONTINUED markers,
/// "(MORE)") are dropped and counted. Adjacent Action lines merge into one
/// paragraph element, adjacent Dialogue lines into one speech element.
inline Screenplay parse_screenplay(std::string_view input, const ScreenplayConfig& cfg = {}) {
  const std::string_view body = text::require_utf8(input, "screenplay");
  const auto raw_lines = text::split_lines(body);

  Screenplay sp;
  sp.total_lines = raw_lines.size();

  std::vector<detail::ContentLine> content;
  bool any_non_blank = false;
  for (std::size_t i = 0; i < raw_lines.size(); ++i) {
    std::string expanded(text::rtrim(text::expand_tabs(raw_lines[i], cfg.tab_width)));
    std::string_view trimmed = text::trim(expanded);
    if (trimmed.empty()) {
      ++sp.blank_lines;
      continue;
    }
    any_non_blank = true;
    if (detail::is_page_artifact(trimmed)) {
      ++sp.discarded_lines;
      continue;
    }
    const std::size_t indent = text::leading_spaces(expanded);
    content.push_back({i + 1, indent, std::move(expanded)});
  }
  if (!any_non_blank) throw Error(ErrorCode::EmptyInput, "screenplay has no non-blank lines");

  auto adjacent = [&](std::size_t a, std::size_t b) {
    return b < content.size() && content[b].number == content[a].number + 1;
  };
  auto push = [&](ElementKind kind, std::string_view txt, std::size_t first, std::size_t last,
                  std::size_t indent, int column, bool mergeable) {
    auto& els = sp.elements;
    if (mergeable && !els.empty()) {
      auto& back = els.back();
      if (back.kind == kind && back.column == column && back.lines.last + 1 == first &&
          (kind == ElementKind::Action || kind == ElementKind::Dialogue)) {
        back.text = text::collapse_whitespace(back.text + " " + std::string(txt));
        back.lines.last = last;
        return;
      }
    }
    els.push_back({kind, text::collapse_whitespace(txt), {first, last}, indent, column});
  };

  std::optional<ElementKind> prev;
  std::size_t i = 0;
  while (i < content.size()) {
    const auto& line = content[i];
    const std::string_view trimmed = line.trimmed();
    std::optional<std::size_t> next_indent;
    if (i + 1 < content.size()) next_indent = content[i + 1].indent;

    if (auto right_col = detail::dual_header(line, cfg); right_col && adjacent(i, i + 1)) {
      std::size_t rows_end = i + 1;
      while (rows_end < content.size() && adjacent(rows_end - 1, rows_end) &&
             content[rows_end].indent >= cfg.dialogue_indent_min &&
             !detail::is_scene_heading(content[rows_end].trimmed())) {
        ++rows_end;
      }
      const std::size_t boundary = *right_col > 4 ? *right_col - 4 : *right_col;
      const std::string_view header = line.expanded;
      const std::string left_name = text::collapse_whitespace(header.substr(0, *right_col));
      const std::string right_name = text::collapse_whitespace(header.substr(*right_col));
      for (int column = 0; column < 2; ++column) {
        push(ElementKind::Character, column == 0 ? left_name : right_name, line.number,
             line.number, column == 0 ? line.indent : *right_col, column, false);
        std::optional<ElementKind> col_prev = ElementKind::Character;
        for (std::size_t r = i + 1; r < rows_end; ++r) {
          auto parts = detail::split_dual_row(content[r], boundary);
          const std::string& part = column == 0 ? parts.first : parts.second;
          if (part.empty()) continue;
          ElementKind kind = detail::is_wrapped_in_parens(part) ? ElementKind::Parenthetical
                                                                 : ElementKind::Dialogue;
          // Rows skipped by this column break adjacency, so merge by hand.
          auto& els = sp.elements;
          if (kind == ElementKind::Dialogue && col_prev == ElementKind::Dialogue &&
              els.back().column == column) {
            els.back().text = text::collapse_whitespace(els.back().text + " " + part);
            els.back().lines.last = content[r].number;
          } else {
            push(kind, part, content[r].number, content[r].number, content[r].indent, column,
                 false);
          }
          col_prev = kind;
        }
      }
      sp.warnings.push_back(
          {line.number, "dual dialogue treated as sequential blocks (left column first)"});
      prev = ElementKind::Dialogue;
      i = rows_end;
      continue;
    }

    ElementKind kind = classify_line(trimmed, line.indent, prev, next_indent, cfg);

    // Parenthetical wrapped over up to three adjacent lines.
    const bool in_speech = prev && (*prev == ElementKind::Character ||
                                    *prev == ElementKind::Dialogue ||
                                    *prev == ElementKind::Parenthetical);
    if (in_speech && trimmed.front() == '(' && trimmed.back() != ')' &&
        line.indent >= cfg.dialogue_indent_min) {
      std::size_t j = i;
      std::string joined(trimmed);
      bool closed = false;
      while (j + 1 < content.size() && j - i < 2 && adjacent(j, j + 1)) {
        ++j;
        std::string_view cont = content[j].trimmed();
        if (cont.front() == '(') break;
        joined += " ";
        joined += cont;
        if (cont.back() == ')') {
          closed = true;
          break;
        }
      }
      if (closed) {
        push(ElementKind::Parenthetical, joined, line.number, content[j].number, line.indent, 0,
             false);
        prev = ElementKind::Parenthetical;
        i = j + 1;
        continue;
      }
    }

    if (kind == ElementKind::Action && line.indent >= cfg.dialogue_indent_min) {
      sp.warnings.push_back({line.number, "indented line not classifiable; kept as action"});
    }
    const bool mergeable = i > 0 && adjacent(i - 1, i);
    push(kind, trimmed, line.number, line.number, line.indent, 0, mergeable);
    prev = kind;
    ++i;
  }

  // Scenes: an optional heading-less preamble, then one scene per heading.
  for (std::size_t e = 0; e < sp.elements.size(); ++e) {
    const bool heading = sp.elements[e].kind == ElementKind::SceneHeading;
    if (heading || sp.scenes.empty()) {
      if (!sp.scenes.empty()) sp.scenes.back().end = e;
      Scene scene;
      scene.index = sp.scenes.size();
      if (heading) scene.heading = e;
      scene.begin = e;
      sp.scenes.push_back(scene);
    }
  }
  if (!sp.scenes.empty()) sp.scenes.back().end = sp.elements.size();
  return sp;
}

/// Groups Character cues with the Dialogue and Parenthetical elements that
/// follow them. A block closes at any other element kind or at a scene
/// boundary. Speech with no preceding cue is attributed to "UNKNOWN".
inline DialogueExtraction extract_dialogue_blocks(const Screenplay& sp) {
  DialogueExtraction out;
  for (const Scene& scene : sp.scenes) {
    std::optional<DialogueBlock> current;
    std::optional<std::string> pending_cue;
    bool have_range = false;

    auto flush = [&] {
      if (!current) return;
      if (!current->lines.empty()) {
        out.blocks.push_back(std::move(*current));
      } else if (current->character_element) {
        out.warnings.push_back({sp.elements[*current->character_element].lines.first,
                                "character cue without dialogue"});
      }
      current.reset();
      pending_cue.reset();
      have_range = false;
    };
    auto open_unknown = [&](std::size_t idx) {
      DialogueBlock b;
      b.speaker = "UNKNOWN";
      b.scene_index = scene.index;
      current = std::move(b);
      out.warnings.push_back({sp.elements[idx].lines.first, "speech without a character cue"});
    };
    auto touch = [&](std::size_t idx) {
      if (!have_range) current->element_begin = idx;
      current->element_end = idx + 1;
      have_range = true;
    };

    for (std::size_t idx = scene.begin; idx < scene.end; ++idx) {
      const ScreenplayElement& e = sp.elements[idx];
      switch (e.kind) {
        case ElementKind::Character: {
          flush();
          DialogueBlock b;
          b.speaker = normalize_speaker(e.text);
          b.scene_index = scene.index;
          b.character_element = idx;
          current = std::move(b);
          break;
        }
        case ElementKind::Parenthetical:
          if (!current) open_unknown(idx);
          if (!current->cue) current->cue = e.text;
          pending_cue = e.text;
          touch(idx);
          break;
        case ElementKind::Dialogue:
          if (!current) open_unknown(idx);
          current->lines.push_back(e.text);
          current->line_cues.push_back(pending_cue);
          pending_cue.reset();
          touch(idx);
          break;
        default:
          flush();
          break;
      }
    }
    flush();
  }
  return out;
}

}  // namespace storymovie
