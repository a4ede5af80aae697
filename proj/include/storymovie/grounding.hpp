#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "storymovie/error.hpp"
#include "storymovie/text.hpp"

namespace storymovie {

enum class TagKind { gdo, gda, gdl, gdi };

inline std::string_view to_string(TagKind kind) {
  switch (kind) {
    case TagKind::gdo: return "gdo";
    case TagKind::gda: return "gda";
    case TagKind::gdl: return "gdl";
    case TagKind::gdi: return "gdi";
  }
  return "gdo";
}

inline std::optional<TagKind> tag_kind_from_string(std::string_view s) {
  if (s == "gdo") return TagKind::gdo;
  if (s == "gda") return TagKind::gda;
  if (s == "gdl") return TagKind::gdl;
  if (s == "gdi") return TagKind::gdi;
  return std::nullopt;
}

struct GroundingTag {
  TagKind kind = TagKind::gdo;
  std::string entity_id;
  std::string inner_text;
  // Half-open byte range of inner_text within the plain text.
  std::size_t begin = 0;
  std::size_t end = 0;

  bool operator==(const GroundingTag&) const = default;
};

struct GroundedStory {
  std::string story_id;
  std::string plain_text;
  std::vector<GroundingTag> tags;
  std::size_t word_count = 0;
  std::size_t distinct_characters = 0;
  std::vector<Diagnostic> warnings;
};

/// Character mentions are gdo tags whose entity id starts with "char".
inline bool is_character_id(std::string_view entity_id) {
  return entity_id.substr(0, 4) == "char";
}

namespace detail {

struct TagEvent {
  enum class Type { Text, Open, Close, Malformed } type = Type::Text;
  std::string_view raw;
  TagKind kind = TagKind::gdo;
  std::string entity_id;
};

inline TagEvent text_event(std::string_view raw) {
  TagEvent ev;
  ev.raw = raw;
  return ev;
}

inline std::string_view read_name(std::string_view s, std::size_t& pos) {
  const std::size_t start = pos;
  while (pos < s.size() && text::is_ascii_alnum(s[pos])) ++pos;
  return s.substr(start, pos - start);
}

/// Recognizes a tag starting at s[pos] == '<'. Returns nullopt when the text
/// is not tag-like at all (a stray '<' stays ordinary text).
inline std::optional<TagEvent> lex_tag(std::string_view s, std::size_t pos) {
  const std::size_t close = s.find('>', pos);
  std::size_t p = pos + 1;
  const bool closing = p < s.size() && s[p] == '/';
  if (closing) ++p;
  const std::string_view name = read_name(s, p);
  if (name.substr(0, 2) != "gd") return std::nullopt;
  TagEvent ev;
  if (close == std::string_view::npos) {
    // "<gdo char1 Loretta ..." with no '>' at all: flag the "<gd..." prefix.
    ev.type = TagEvent::Type::Malformed;
    ev.raw = s.substr(pos, p - pos);
    return ev;
  }
  ev.raw = s.substr(pos, close - pos + 1);
  const auto kind = tag_kind_from_string(name);
  if (!kind) {
    ev.type = TagEvent::Type::Malformed;
    return ev;
  }
  ev.kind = *kind;
  std::string_view rest = text::trim(s.substr(p, close - p));
  if (closing) {
    ev.type = rest.empty() ? TagEvent::Type::Close : TagEvent::Type::Malformed;
    return ev;
  }
  if (p < close && !text::is_space(s[p])) {
    ev.type = TagEvent::Type::Malformed;  // e.g. "<gdox char1>"
    return ev;
  }
  // Accept both <gdo char1> and <gdo id="char1">.
  if (rest.substr(0, 3) == "id=") rest.remove_prefix(3);
  if (rest.size() >= 2 && (rest.front() == '"' || rest.front() == '\'') &&
      rest.back() == rest.front()) {
    rest = rest.substr(1, rest.size() - 2);
  }
  if (rest.empty() || rest.find_first_of(" \t\n\r") != std::string_view::npos) {
    ev.type = TagEvent::Type::Malformed;
    return ev;
  }
  ev.type = TagEvent::Type::Open;
  ev.entity_id = std::string(rest);
  return ev;
}

}  // namespace detail

/// Extracts gdo/gda/gdl/gdi tags and the tag-free text. Unknown, unclosed or
/// unmatched tags stay verbatim in the plain text and are reported as
/// warnings. Nested tags are supported; an outer tag's inner text is the
/// plain text of everything it encloses.
inline GroundedStory parse_grounded_story(std::string_view input, std::string story_id = {}) {
  using Type = detail::TagEvent::Type;
  std::vector<detail::TagEvent> events;
  std::size_t text_start = 0;
  std::size_t pos = 0;
  while (pos < input.size()) {
    if (input[pos] == '<') {
      if (auto ev = detail::lex_tag(input, pos)) {
        if (pos > text_start) {
          events.push_back(detail::text_event(input.substr(text_start, pos - text_start)));
        }
        pos += ev->raw.size();
        text_start = pos;
        events.push_back(std::move(*ev));
        continue;
      }
    }
    ++pos;
  }
  if (text_start < input.size()) events.push_back(detail::text_event(input.substr(text_start)));

  GroundedStory story;
  story.story_id = std::move(story_id);

  // Pair closes with opens; anything left over becomes literal text.
  std::vector<std::optional<std::size_t>> partner(events.size());
  std::vector<std::size_t> stack;
  for (std::size_t e = 0; e < events.size(); ++e) {
    if (events[e].type == Type::Open) {
      stack.push_back(e);
    } else if (events[e].type == Type::Close) {
      auto it = std::find_if(stack.rbegin(), stack.rend(),
                             [&](std::size_t o) { return events[o].kind == events[e].kind; });
      if (it == stack.rend()) continue;
      const std::size_t open = *it;
      stack.erase(std::next(it).base(), stack.end());
      partner[open] = e;
      partner[e] = open;
    }
  }

  struct OpenTag {
    std::size_t event;
    std::size_t begin;
  };
  std::vector<OpenTag> open_tags;
  std::vector<std::pair<std::size_t, GroundingTag>> found;  // (open event, tag)
  for (std::size_t e = 0; e < events.size(); ++e) {
    const auto& ev = events[e];
    const bool literal = ev.type == Type::Text || !partner[e];
    if (literal) {
      if (ev.type != Type::Text) {
        story.warnings.push_back({0, "malformed or unmatched tag kept as text: " +
                                         std::string(ev.raw)});
      }
      story.plain_text += ev.raw;
      continue;
    }
    if (ev.type == Type::Open) {
      open_tags.push_back({e, story.plain_text.size()});
    } else {
      const OpenTag ot = open_tags.back();
      open_tags.pop_back();
      GroundingTag tag;
      tag.kind = events[ot.event].kind;
      tag.entity_id = events[ot.event].entity_id;
      tag.begin = ot.begin;
      tag.end = story.plain_text.size();
      tag.inner_text = story.plain_text.substr(tag.begin, tag.end - tag.begin);
      found.emplace_back(ot.event, std::move(tag));
    }
  }
  std::sort(found.begin(), found.end(), [](const auto& x, const auto& y) {
    if (x.second.begin != y.second.begin) return x.second.begin < y.second.begin;
    return x.first < y.first;
  });
  std::set<std::string> characters;
  for (auto& [event, tag] : found) {
    if (tag.kind == TagKind::gdo && is_character_id(tag.entity_id)) characters.insert(tag.entity_id);
    story.tags.push_back(std::move(tag));
  }
  story.word_count = text::split_whitespace(story.plain_text).size();
  story.distinct_characters = characters.size();
  return story;
}

struct StoryStats {
  std::string story_id;
  std::size_t words = 0;
  std::size_t char_mentions = 0;
  std::size_t object_refs = 0;
  std::size_t setting_refs = 0;
  std::size_t action_refs = 0;
  std::size_t image_refs = 0;
  std::size_t distinct_characters = 0;

  std::size_t refs_total() const { return char_mentions + object_refs + setting_refs + action_refs; }
};

struct CorpusStats {
  std::size_t n_stories = 0;
  double mean_words = 0;
  double std_words = 0;
  double mean_refs_total = 0;
  double mean_char_mentions = 0;
  double mean_object_refs = 0;
  double mean_setting_refs = 0;
  double mean_action_refs = 0;
  double mean_image_refs = 0;
  double mean_distinct_chars = 0;
  std::vector<StoryStats> per_story;
};

inline StoryStats story_stats(const GroundedStory& story) {
  StoryStats s;
  s.story_id = story.story_id;
  s.words = story.word_count;
  s.distinct_characters = story.distinct_characters;
  for (const auto& tag : story.tags) {
    switch (tag.kind) {
      case TagKind::gdo:
        (is_character_id(tag.entity_id) ? s.char_mentions : s.object_refs) += 1;
        break;
      case TagKind::gda: ++s.action_refs; break;
      case TagKind::gdl: ++s.setting_refs; break;
      case TagKind::gdi: ++s.image_refs; break;
    }
  }
  return s;
}

/// Per-story means over the corpus; word-count spread is the population
/// standard deviation. gdi tags are reported separately and are not part of
/// the reference total.
inline CorpusStats compute_stats(std::span<const GroundedStory> stories) {
  if (stories.empty()) throw Error(ErrorCode::EmptyCorpus, "no stories to summarize");
  CorpusStats c;
  c.n_stories = stories.size();
  const double n = static_cast<double>(stories.size());
  for (const auto& story : stories) {
    StoryStats s = story_stats(story);
    c.mean_words += static_cast<double>(s.words);
    c.mean_refs_total += static_cast<double>(s.refs_total());
    c.mean_char_mentions += static_cast<double>(s.char_mentions);
    c.mean_object_refs += static_cast<double>(s.object_refs);
    c.mean_setting_refs += static_cast<double>(s.setting_refs);
    c.mean_action_refs += static_cast<double>(s.action_refs);
    c.mean_image_refs += static_cast<double>(s.image_refs);
    c.mean_distinct_chars += static_cast<double>(s.distinct_characters);
    c.per_story.push_back(std::move(s));
  }
  for (double* m : {&c.mean_words, &c.mean_refs_total, &c.mean_char_mentions, &c.mean_object_refs,
                    &c.mean_setting_refs, &c.mean_action_refs, &c.mean_image_refs,
                    &c.mean_distinct_chars}) {
    *m /= n;
  }
  // Integer moments keep the result independent of story order.
  unsigned long long sum = 0;
  unsigned long long sum_sq = 0;
  for (const auto& s : c.per_story) {
    sum += s.words;
    sum_sq += static_cast<unsigned long long>(s.words) * s.words;
  }
  const unsigned long long count = stories.size();
  const unsigned long long numer = count * sum_sq - sum * sum;
  c.std_words = std::sqrt(static_cast<double>(numer)) / n;
  return c;
}

}  // namespace storymovie
