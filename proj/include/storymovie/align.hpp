#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "storymovie/error.hpp"
#include "storymovie/screenplay.hpp"
#include "storymovie/subtitle.hpp"
#include "storymovie/text.hpp"
#include "storymovie/timecode.hpp"

namespace storymovie {

inline constexpr std::string_view kDefaultStripChars = R"(!"#$%&()*+,-./:;<=>?@[\]^_`{|}~)";

struct AlignConfig {
  std::size_t min_anchor_len = 4;
  double min_score = 0.3;
  std::size_t window_script_tokens = 2000;
  std::size_t window_subtitle_tokens = 4000;
  // Characters removed from tokens. The apostrophe is handled separately: it
  // survives only between two alphanumeric characters.
  std::string strip_chars{kDefaultStripChars};

  bool operator==(const AlignConfig&) const = default;
};

/// A normalized word with its source position. For screenplay tokens `unit` is
/// the dialogue block and `line` the line within it; for subtitle tokens `unit`
/// is the cue and `line` is 0. `scene` is only meaningful on the script side.
struct Token {
  std::string norm;
  std::size_t unit = 0;
  std::size_t line = 0;
  std::size_t word = 0;
  std::size_t scene = 0;

  bool operator==(const Token&) const = default;
};

namespace detail {

inline std::string fold_unicode_punctuation(std::string_view s) {
  struct Sub {
    std::string_view from;
    std::string_view to;
  };
  static constexpr Sub kSubs[] = {
      {"\xE2\x80\x99", "'"},  // right single quote
      {"\xE2\x80\x98", "'"},  // left single quote
      {"\xE2\x80\x9C", ""},   // left double quote
      {"\xE2\x80\x9D", ""},   // right double quote
      {"\xE2\x80\xA6", " "},  // ellipsis
      {"\xE2\x80\x94", " "},  // em dash
      {"\xE2\x80\x93", " "},  // en dash
      {"--", " "},
  };
  std::string out;
  out.reserve(s.size());
  std::size_t i = 0;
  while (i < s.size()) {
    bool replaced = false;
    for (const auto& sub : kSubs) {
      if (s.substr(i, sub.from.size()) == sub.from) {
        out += sub.to;
        i += sub.from.size();
        replaced = true;
        break;
      }
    }
    if (!replaced) out.push_back(s[i++]);
  }
  return out;
}

inline bool is_word_char(char c) {
  return text::is_ascii_alnum(c) || static_cast<unsigned char>(c) >= 0x80;
}

}  // namespace detail

/// Splits on whitespace, lowercases, and strips punctuation except
/// apostrophes inside a word ("Don't" -> "don't").
inline std::vector<Token> tokenize(std::string_view input,
                                   std::string_view strip_chars = kDefaultStripChars,
                                   std::size_t unit = 0, std::size_t line = 0,
                                   std::size_t scene = 0) {
  std::vector<Token> tokens;
  const std::string folded = detail::fold_unicode_punctuation(input);
  const auto words = text::split_whitespace(folded);
  for (std::size_t w = 0; w < words.size(); ++w) {
    const std::string_view word = words[w];
    std::string norm;
    for (std::size_t k = 0; k < word.size(); ++k) {
      const char c = word[k];
      if (c == '\'') {
        if (k > 0 && k + 1 < word.size() && detail::is_word_char(word[k - 1]) &&
            detail::is_word_char(word[k + 1])) {
          norm.push_back(c);
        }
        continue;
      }
      if (strip_chars.find(c) != std::string_view::npos) continue;
      norm.push_back(text::is_ascii_upper(c) ? static_cast<char>(c - 'A' + 'a') : c);
    }
    if (!norm.empty()) tokens.push_back({std::move(norm), unit, line, w, scene});
  }
  return tokens;
}

using MatchPair = std::pair<std::size_t, std::size_t>;

struct LcsLimits {
  std::size_t max_a = 2000;
  std::size_t max_b = 4000;
};

namespace detail {

template <typename Cell, typename T, typename Eq>
std::vector<MatchPair> lcs_impl(std::span<const T> a, std::span<const T> b, Eq eq) {
  const std::size_t n = a.size();
  const std::size_t m = b.size();
  const std::size_t stride = m + 1;
  // suffix[i * stride + j] = LCS length of a[i..] and b[j..]
  std::vector<Cell> suffix((n + 1) * stride, 0);
  auto at = [&](std::size_t i, std::size_t j) -> Cell& { return suffix[i * stride + j]; };
  for (std::size_t i = n; i-- > 0;) {
    for (std::size_t j = m; j-- > 0;) {
      if (eq(a[i], b[j])) {
        at(i, j) = static_cast<Cell>(at(i + 1, j + 1) + 1);
      } else {
        at(i, j) = std::max(at(i + 1, j), at(i, j + 1));
      }
    }
  }

  // Walk forward picking, at every step, the feasible pair with the smallest
  // b index and then the smallest a index. Every column is scanned at most
  // once, so the walk stays within the table size.
  std::vector<MatchPair> pairs;
  pairs.reserve(at(0, 0));
  std::size_t i = 0;
  std::size_t j = 0;
  std::size_t remaining = at(0, 0);
  while (remaining > 0) {
    bool found = false;
    for (std::size_t jj = j; jj < m && !found; ++jj) {
      for (std::size_t ii = i; ii < n; ++ii) {
        if (at(ii, jj) < remaining) break;
        if (eq(a[ii], b[jj]) && at(ii + 1, jj + 1) + 1u == remaining) {
          pairs.emplace_back(ii, jj);
          i = ii + 1;
          j = jj + 1;
          found = true;
          break;
        }
      }
    }
    --remaining;
  }
  return pairs;
}

}  // namespace detail

/// Longest common subsequence as strictly increasing (index in a, index in b)
/// pairs. Among optimal solutions the one returned is lexicographically
/// smallest when each pair is compared by b index first, then a index.
template <typename T, typename Eq = std::equal_to<>>
std::vector<MatchPair> lcs(std::span<const T> a, std::span<const T> b, LcsLimits limits = {},
                           Eq eq = {}) {
  if (a.size() > limits.max_a || b.size() > limits.max_b) {
    throw Error(ErrorCode::WindowExceeded,
                "lcs inputs " + std::to_string(a.size()) + "x" + std::to_string(b.size()) +
                    " exceed window " + std::to_string(limits.max_a) + "x" +
                    std::to_string(limits.max_b));
  }
  if (a.empty() || b.empty()) return {};
  if (std::min(a.size(), b.size()) < 0xFFFF) return detail::lcs_impl<std::uint16_t>(a, b, eq);
  return detail::lcs_impl<std::uint32_t>(a, b, eq);
}

inline std::vector<MatchPair> lcs(const std::vector<Token>& a, const std::vector<Token>& b,
                                  LcsLimits limits = {}) {
  return lcs(std::span<const Token>(a), std::span<const Token>(b), limits,
             [](const Token& x, const Token& y) { return x.norm == y.norm; });
}

/// A run of consecutively matched tokens: script_begin + k matches
/// subtitle_begin + k for every k below `matched`. Ranges are half-open.
struct Anchor {
  std::size_t script_begin = 0;
  std::size_t script_end = 0;
  std::size_t subtitle_begin = 0;
  std::size_t subtitle_end = 0;
  std::size_t matched = 0;

  bool operator==(const Anchor&) const = default;
};

struct AnchorSet {
  std::vector<Anchor> anchors;
  // Every LCS pair found across all windows, in global token indices.
  std::vector<MatchPair> matches;
};

namespace detail {

inline bool monotone(const Anchor& x, const Anchor& y) {
  return (x.script_end <= y.script_begin && x.subtitle_end <= y.subtitle_begin) ||
         (y.script_end <= x.script_begin && y.subtitle_end <= x.subtitle_begin);
}

}  // namespace detail

/// Runs windowed LCS and keeps runs of at least `min_anchor_len` consecutive
/// matches. Script windows follow scene boundaries (and are chunked to the
/// window size); the subtitle window slides forward past the last cue matched
/// by an anchor. Anchors that break monotonicity against a larger anchor are
/// dropped.
inline AnchorSet find_anchors(const std::vector<Token>& script_tokens,
                              const std::vector<Token>& subtitle_tokens,
                              const AlignConfig& cfg = {}) {
  AnchorSet out;
  if (script_tokens.empty() || subtitle_tokens.empty()) return out;

  std::unordered_map<std::string_view, std::uint32_t> ids;
  auto intern = [&](const std::vector<Token>& tokens) {
    std::vector<std::uint32_t> v;
    v.reserve(tokens.size());
    for (const auto& t : tokens) {
      auto [it, inserted] = ids.try_emplace(t.norm, static_cast<std::uint32_t>(ids.size()));
      v.push_back(it->second);
    }
    return v;
  };
  const auto script_ids = intern(script_tokens);
  const auto subtitle_ids = intern(subtitle_tokens);
  const std::size_t script_window = std::max<std::size_t>(1, cfg.window_script_tokens);
  const std::size_t subtitle_window = std::max<std::size_t>(1, cfg.window_subtitle_tokens);
  const LcsLimits limits{script_window, subtitle_window};

  std::vector<Anchor> candidates;
  std::size_t cursor = 0;
  std::size_t begin = 0;
  while (begin < script_tokens.size() && cursor < subtitle_tokens.size()) {
    std::size_t end = begin + 1;
    while (end < script_tokens.size() && end - begin < script_window &&
           script_tokens[end].scene == script_tokens[begin].scene) {
      ++end;
    }
    const std::size_t sub_end = std::min(subtitle_tokens.size(), cursor + subtitle_window);
    std::span<const std::uint32_t> a(script_ids.data() + begin, end - begin);
    std::span<const std::uint32_t> b(subtitle_ids.data() + cursor, sub_end - cursor);
    auto pairs = lcs(a, b, limits);

    std::optional<std::size_t> last_anchor_token;
    std::size_t run_start = 0;
    for (std::size_t k = 0; k <= pairs.size(); ++k) {
      const bool continues = k > 0 && k < pairs.size() &&
                             pairs[k].first == pairs[k - 1].first + 1 &&
                             pairs[k].second == pairs[k - 1].second + 1;
      if (k > 0 && !continues) {
        const std::size_t len = k - run_start;
        if (len >= cfg.min_anchor_len) {
          Anchor anchor;
          anchor.script_begin = begin + pairs[run_start].first;
          anchor.script_end = begin + pairs[k - 1].first + 1;
          anchor.subtitle_begin = cursor + pairs[run_start].second;
          anchor.subtitle_end = cursor + pairs[k - 1].second + 1;
          anchor.matched = len;
          candidates.push_back(anchor);
          last_anchor_token = anchor.subtitle_end - 1;
        }
      }
      if (k < pairs.size() && !continues) run_start = k;
    }
    for (const auto& [i, j] : pairs) out.matches.emplace_back(begin + i, cursor + j);

    if (last_anchor_token) {
      const std::size_t cue = subtitle_tokens[*last_anchor_token].unit;
      std::size_t next = *last_anchor_token + 1;
      while (next < subtitle_tokens.size() && subtitle_tokens[next].unit == cue) ++next;
      cursor = next;
    }
    begin = end;
  }

  // Dominance filter: larger anchors win, earlier script position breaks ties.
  std::vector<std::size_t> order(candidates.size());
  for (std::size_t k = 0; k < order.size(); ++k) order[k] = k;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
    return candidates[x].matched > candidates[y].matched;
  });
  std::vector<Anchor> accepted;
  for (std::size_t k : order) {
    const Anchor& cand = candidates[k];
    if (std::all_of(accepted.begin(), accepted.end(),
                    [&](const Anchor& acc) { return detail::monotone(acc, cand); })) {
      accepted.push_back(cand);
    }
  }
  std::sort(accepted.begin(), accepted.end(),
            [](const Anchor& x, const Anchor& y) { return x.script_begin < y.script_begin; });
  out.anchors = std::move(accepted);
  return out;
}

/// Inclusive range of dialogue block indices.
struct BlockRange {
  std::size_t first = 0;
  std::size_t last = 0;

  bool operator==(const BlockRange&) const = default;
};

/// Grows `seed` one block at a time in each direction, stopping before a block
/// whose speaker differs from the edge block or that lies in another scene.
inline BlockRange extend_bidirectionally(BlockRange seed, std::span<const DialogueBlock> blocks) {
  BlockRange r = seed;
  while (r.first > 0 && blocks[r.first - 1].speaker == blocks[seed.first].speaker &&
         blocks[r.first - 1].scene_index == blocks[seed.first].scene_index) {
    --r.first;
  }
  while (r.last + 1 < blocks.size() && blocks[r.last + 1].speaker == blocks[seed.last].speaker &&
         blocks[r.last + 1].scene_index == blocks[seed.last].scene_index) {
    ++r.last;
  }
  return r;
}

/// Extension seeded by the blocks an anchor touches.
inline BlockRange extend_bidirectionally(const Anchor& anchor,
                                         const std::vector<Token>& script_tokens,
                                         std::span<const DialogueBlock> blocks) {
  BlockRange seed{script_tokens[anchor.script_begin].unit,
                  script_tokens[anchor.script_end - 1].unit};
  return extend_bidirectionally(seed, blocks);
}

struct AlignedSegment {
  std::size_t block_first = 0;
  std::size_t block_last = 0;
  std::size_t cue_first = 0;
  std::size_t cue_last = 0;
  Millis start_ms = 0;
  Millis end_ms = 0;
  double score = 0.0;
  std::size_t matched_tokens = 0;
  std::size_t script_tokens = 0;
  std::size_t subtitle_tokens = 0;

  bool operator==(const AlignedSegment&) const = default;
};

struct AlignmentResult {
  std::string movie_id;
  std::vector<DialogueBlock> blocks;
  std::vector<AlignedSegment> segments;
  // Below min_score; their blocks are listed as unaligned.
  std::vector<AlignedSegment> dropped;
  std::vector<std::size_t> unaligned_blocks;
  std::size_t total_script_tokens = 0;
  std::size_t aligned_script_tokens = 0;
  double coverage = 0.0;
  AlignConfig config;
};

struct ScriptStream {
  std::vector<Token> tokens;
  std::vector<std::size_t> block_token_count;
};

inline ScriptStream tokenize_blocks(std::span<const DialogueBlock> blocks,
                                    std::string_view strip_chars = kDefaultStripChars) {
  ScriptStream s;
  s.block_token_count.assign(blocks.size(), 0);
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    for (std::size_t l = 0; l < blocks[b].lines.size(); ++l) {
      auto toks = tokenize(blocks[b].lines[l], strip_chars, b, l, blocks[b].scene_index);
      s.block_token_count[b] += toks.size();
      for (auto& t : toks) s.tokens.push_back(std::move(t));
    }
  }
  return s;
}

inline std::vector<Token> tokenize_cues(const SubtitleTrack& track,
                                        std::string_view strip_chars = kDefaultStripChars) {
  std::vector<Token> out;
  for (std::size_t c = 0; c < track.cues.size(); ++c) {
    for (auto& t : tokenize(track.cues[c].clean_text, strip_chars, c)) out.push_back(std::move(t));
  }
  return out;
}

/// Aligns screenplay dialogue with a subtitle track.
///
/// Each anchor is split into per-block pieces; every piece seeds a segment
/// that is extended over neighbouring same-speaker blocks of the same scene.
/// Segments whose block ranges overlap, or that share a cue, are merged, so
/// the result is monotone in both blocks and cues. A segment's timing spans
/// the cues its matched tokens fall in; its score is matched tokens over the
/// larger of its script and subtitle token counts.
inline AlignmentResult align(const Screenplay& sp, const SubtitleTrack& track,
                             const AlignConfig& cfg = {}, std::string movie_id = {}) {
  if (sp.elements.empty()) throw Error(ErrorCode::EmptyInput, "screenplay has no elements");
  if (track.cues.empty()) throw Error(ErrorCode::EmptyTrack, "subtitle track has no cues");

  AlignmentResult result;
  result.movie_id = std::move(movie_id);
  result.config = cfg;
  result.blocks = extract_dialogue_blocks(sp).blocks;
  const auto& blocks = result.blocks;

  const ScriptStream script = tokenize_blocks(blocks, cfg.strip_chars);
  const std::vector<Token> subtitle = tokenize_cues(track, cfg.strip_chars);
  result.total_script_tokens = script.tokens.size();

  std::vector<std::size_t> cue_token_count(track.cues.size(), 0);
  for (const auto& t : subtitle) ++cue_token_count[t.unit];

  const AnchorSet anchors = find_anchors(script.tokens, subtitle, cfg);

  struct Candidate {
    BlockRange blocks;
    std::size_t cue_first;
    std::size_t cue_last;
  };
  std::vector<Candidate> candidates;
  for (const Anchor& anchor : anchors.anchors) {
    for (std::size_t s = anchor.script_begin; s < anchor.script_end;) {
      const std::size_t block = script.tokens[s].unit;
      std::size_t cue_lo = subtitle[anchor.subtitle_begin + (s - anchor.script_begin)].unit;
      std::size_t cue_hi = cue_lo;
      while (s < anchor.script_end && script.tokens[s].unit == block) {
        cue_hi = subtitle[anchor.subtitle_begin + (s - anchor.script_begin)].unit;
        ++s;
      }
      candidates.push_back(
          {extend_bidirectionally(BlockRange{block, block}, blocks), cue_lo, cue_hi});
    }
  }
  std::stable_sort(candidates.begin(), candidates.end(), [](const Candidate& x, const Candidate& y) {
    return x.blocks.first < y.blocks.first;
  });

  std::vector<Candidate> merged;
  for (Candidate c : candidates) {
    if (!merged.empty()) {
      Candidate& cur = merged.back();
      const bool block_overlap = c.blocks.first <= cur.blocks.last;
      const bool cue_overlap = c.cue_first <= cur.cue_last;
      const bool same_scene =
          blocks[c.blocks.first].scene_index == blocks[cur.blocks.last].scene_index;
      if (block_overlap || (cue_overlap && same_scene)) {
        cur.blocks.last = std::max(cur.blocks.last, c.blocks.last);
        cur.cue_first = std::min(cur.cue_first, c.cue_first);
        cur.cue_last = std::max(cur.cue_last, c.cue_last);
        continue;
      }
      if (cue_overlap) {
        // A cue straddling a scene break stays with the earlier scene.
        c.cue_first = cur.cue_last + 1;
        if (c.cue_first > c.cue_last) continue;
      }
    }
    merged.push_back(c);
  }

  // Matched pairs, bucketed by block for scoring.
  std::vector<std::vector<std::size_t>> cue_hits_by_block(blocks.size());
  for (const auto& [si, ti] : anchors.matches) {
    cue_hits_by_block[script.tokens[si].unit].push_back(ti);
  }

  std::vector<bool> aligned(blocks.size(), false);
  for (const Candidate& c : merged) {
    AlignedSegment seg;
    seg.block_first = c.blocks.first;
    seg.block_last = c.blocks.last;
    seg.cue_first = c.cue_first;
    seg.cue_last = c.cue_last;
    seg.start_ms = track.cues[c.cue_first].start_ms;
    seg.end_ms = track.cues[c.cue_last].end_ms;
    std::vector<std::size_t> hits;
    for (std::size_t b = c.blocks.first; b <= c.blocks.last; ++b) {
      seg.script_tokens += script.block_token_count[b];
      for (std::size_t ti : cue_hits_by_block[b]) {
        const std::size_t cue = subtitle[ti].unit;
        if (cue >= c.cue_first && cue <= c.cue_last) hits.push_back(ti);
      }
    }
    std::sort(hits.begin(), hits.end());
    seg.matched_tokens =
        static_cast<std::size_t>(std::unique(hits.begin(), hits.end()) - hits.begin());
    for (std::size_t cue = c.cue_first; cue <= c.cue_last; ++cue) {
      seg.subtitle_tokens += cue_token_count[cue];
    }
    const std::size_t denom = std::max(seg.script_tokens, seg.subtitle_tokens);
    seg.score = denom == 0 ? 0.0
                           : static_cast<double>(seg.matched_tokens) / static_cast<double>(denom);
    if (seg.score < cfg.min_score || seg.matched_tokens == 0) {
      result.dropped.push_back(seg);
      continue;
    }
    for (std::size_t b = seg.block_first; b <= seg.block_last; ++b) aligned[b] = true;
    result.aligned_script_tokens += seg.matched_tokens;
    result.segments.push_back(seg);
  }

  for (std::size_t b = 0; b < blocks.size(); ++b) {
    if (!aligned[b]) result.unaligned_blocks.push_back(b);
  }
  result.coverage = result.total_script_tokens == 0
                        ? 0.0
                        : static_cast<double>(result.aligned_script_tokens) /
                              static_cast<double>(result.total_script_tokens);
  return result;
}

struct AttributedLine {
  std::string speaker;
  std::string text;
  std::optional<std::string> cue;
  Millis start_ms = 0;
  Millis end_ms = 0;
  std::size_t scene_index = 0;
  std::size_t block = 0;
  std::size_t line = 0;
  std::size_t segment = 0;

  bool operator==(const AttributedLine&) const = default;
};

/// One line per dialogue line of every aligned segment, carrying the owning
/// block's speaker and the segment's timing. Ordered by start time, then by
/// screenplay order.
inline std::vector<AttributedLine> attribute_dialogue(const AlignmentResult& result,
                                                      std::span<const DialogueBlock> blocks,
                                                      const SubtitleTrack& track) {
  std::vector<AttributedLine> out;
  for (std::size_t s = 0; s < result.segments.size(); ++s) {
    const AlignedSegment& seg = result.segments[s];
    if (seg.block_last >= blocks.size() || seg.cue_last >= track.cues.size()) {
      throw Error(ErrorCode::InvalidRecord,
                  "alignment result does not match the given blocks and track");
    }
    for (std::size_t b = seg.block_first; b <= seg.block_last; ++b) {
      const DialogueBlock& block = blocks[b];
      for (std::size_t l = 0; l < block.lines.size(); ++l) {
        AttributedLine line;
        line.speaker = block.speaker;
        line.text = block.lines[l];
        if (l < block.line_cues.size()) line.cue = block.line_cues[l];
        line.start_ms = seg.start_ms;
        line.end_ms = seg.end_ms;
        line.scene_index = block.scene_index;
        line.block = b;
        line.line = l;
        line.segment = s;
        out.push_back(std::move(line));
      }
    }
  }
  std::stable_sort(out.begin(), out.end(), [](const AttributedLine& x, const AttributedLine& y) {
    return x.start_ms < y.start_ms;
  });
  return out;
}

inline std::vector<AttributedLine> attribute_dialogue(const AlignmentResult& result,
                                                      const SubtitleTrack& track) {
  return attribute_dialogue(result, result.blocks, track);
}

}  // namespace storymovie
