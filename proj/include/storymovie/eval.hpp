#pragma once

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <cstdio>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <thread>
#include <utility>
#include <vector>

#include "storymovie/error.hpp"
#include "storymovie/text.hpp"

namespace storymovie {

enum class ReferenceType { subtitles, description, synopsis };
enum class Winner { A, B, tie };
enum class QaCategory { emotional, action, relationship };

inline constexpr std::array<ReferenceType, 3> kReferenceTypes = {
    ReferenceType::subtitles, ReferenceType::description, ReferenceType::synopsis};
inline constexpr std::array<QaCategory, 3> kQaCategories = {
    QaCategory::emotional, QaCategory::action, QaCategory::relationship};

inline std::string_view to_string(ReferenceType r) {
  switch (r) {
    case ReferenceType::subtitles: return "subtitles";
    case ReferenceType::description: return "description";
    case ReferenceType::synopsis: return "synopsis";
  }
  return "subtitles";
}

inline std::string_view to_string(Winner w) {
  switch (w) {
    case Winner::A: return "A";
    case Winner::B: return "B";
    case Winner::tie: return "tie";
  }
  return "tie";
}

inline std::string_view to_string(QaCategory c) {
  switch (c) {
    case QaCategory::emotional: return "emotional";
    case QaCategory::action: return "action";
    case QaCategory::relationship: return "relationship";
  }
  return "emotional";
}

inline std::optional<ReferenceType> reference_type_from_string(std::string_view s) {
  for (auto r : kReferenceTypes) {
    if (to_string(r) == s) return r;
  }
  return std::nullopt;
}

inline std::optional<Winner> winner_from_string(std::string_view s) {
  const std::string lower = text::to_lower(s);
  if (lower == "a") return Winner::A;
  if (lower == "b") return Winner::B;
  if (lower == "tie") return Winner::tie;
  return std::nullopt;
}

inline std::optional<QaCategory> qa_category_from_string(std::string_view s) {
  for (auto c : kQaCategories) {
    if (to_string(c) == s) return c;
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Pairwise preference aggregation
// ---------------------------------------------------------------------------

struct PairwiseVerdict {
  std::string sample_id;
  ReferenceType reference_type = ReferenceType::subtitles;
  int run_id = 1;
  Winner winner = Winner::tie;

  bool operator==(const PairwiseVerdict&) const = default;
};

struct RateStat {
  double mean = 0;
  double std = 0;
};

/// Percentages for one reference type. `per_run` holds (A, B, tie) rates in
/// ascending run order.
struct WinRateRow {
  ReferenceType reference_type = ReferenceType::subtitles;
  std::size_t runs = 0;
  std::size_t samples = 0;
  RateStat win_a;
  RateStat win_b;
  RateStat tie;
  std::vector<std::array<double, 3>> per_run;
};

struct WinRateTable {
  std::vector<WinRateRow> rows;

  const WinRateRow* find(ReferenceType r) const {
    for (const auto& row : rows) {
      if (row.reference_type == r) return &row;
    }
    return nullptr;
  }
};

/// Arithmetic mean and population standard deviation.
inline RateStat mean_and_population_std(std::span<const double> values) {
  RateStat s;
  if (values.empty()) return s;
  const double n = static_cast<double>(values.size());
  for (double v : values) s.mean += v;
  s.mean /= n;
  double ss = 0;
  for (double v : values) ss += (v - s.mean) * (v - s.mean);
  s.std = std::sqrt(ss / n);
  return s;
}

/// Win/tie rates per run and reference type, then mean and population std
/// across runs. All runs of a reference type must cover the same samples.
inline WinRateTable aggregate_pairwise(std::span<const PairwiseVerdict> verdicts) {
  if (verdicts.empty()) throw Error(ErrorCode::EmptyGroup, "no verdicts to aggregate");
  // reference type -> run -> sample -> winner
  std::map<ReferenceType, std::map<int, std::map<std::string, Winner>>> groups;
  for (const auto& v : verdicts) {
    if (v.run_id < 1) {
      throw Error(ErrorCode::InvalidRecord, "run_id must be >= 1 (sample " + v.sample_id + ")");
    }
    auto [it, inserted] = groups[v.reference_type][v.run_id].emplace(v.sample_id, v.winner);
    if (!inserted) {
      throw Error(ErrorCode::DuplicateRecord,
                  "more than one verdict for sample " + v.sample_id + ", reference " +
                      std::string(to_string(v.reference_type)) + ", run " +
                      std::to_string(v.run_id));
    }
  }

  WinRateTable table;
  for (const auto& [ref, runs] : groups) {
    const auto& first_run = runs.begin()->second;
    WinRateRow row;
    row.reference_type = ref;
    row.runs = runs.size();
    row.samples = first_run.size();
    std::vector<double> a_rates;
    std::vector<double> b_rates;
    std::vector<double> tie_rates;
    for (const auto& [run_id, samples] : runs) {
      if (samples.empty()) {
        throw Error(ErrorCode::EmptyGroup, "run " + std::to_string(run_id) + " has no verdicts");
      }
      const bool same = samples.size() == first_run.size() &&
                        std::equal(samples.begin(), samples.end(), first_run.begin(),
                                   [](const auto& x, const auto& y) { return x.first == y.first; });
      if (!same) {
        throw Error(ErrorCode::RunMismatch,
                    "run " + std::to_string(run_id) + " of reference " +
                        std::string(to_string(ref)) + " covers a different sample set than run " +
                        std::to_string(runs.begin()->first));
      }
      std::array<std::size_t, 3> counts{};
      for (const auto& [id, w] : samples) ++counts[static_cast<std::size_t>(w)];
      const double n = static_cast<double>(samples.size());
      std::array<double, 3> rates{counts[0] / n * 100.0, counts[1] / n * 100.0,
                                  counts[2] / n * 100.0};
      row.per_run.push_back(rates);
      a_rates.push_back(rates[0]);
      b_rates.push_back(rates[1]);
      tie_rates.push_back(rates[2]);
    }
    row.win_a = mean_and_population_std(a_rates);
    row.win_b = mean_and_population_std(b_rates);
    row.tie = mean_and_population_std(tie_rates);
    table.rows.push_back(std::move(row));
  }
  return table;
}

/// One decimal place, the presentation rounding used in every table.
inline std::string format_one_decimal(double value) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.1f", value);
  std::string s = buf;
  if (s == "-0.0") s = "0.0";
  return s;
}

inline std::string format_rate(const RateStat& r) {
  return format_one_decimal(r.mean) + "% \xC2\xB1 " + format_one_decimal(r.std);
}

inline std::string reference_label(ReferenceType r) {
  switch (r) {
    case ReferenceType::subtitles: return "Subtitles";
    case ReferenceType::description: return "Description";
    case ReferenceType::synopsis: return "Synopsis";
  }
  return "";
}

/// Pipe-separated table: one row per reference type with "mean% ± std" cells.
inline std::string format_win_rate_table(const WinRateTable& table, std::string_view label_a = "A",
                                         std::string_view label_b = "B") {
  std::string out = "Reference Type | " + std::string(label_a) + " | " + std::string(label_b) +
                    " | Ties\n";
  for (ReferenceType ref : kReferenceTypes) {
    const WinRateRow* row = table.find(ref);
    if (!row) continue;
    out += reference_label(ref) + " | " + format_rate(row->win_a) + " | " +
           format_rate(row->win_b) + " | " + format_rate(row->tie) + "\n";
  }
  return out;
}

// ---------------------------------------------------------------------------
// Question answering
// ---------------------------------------------------------------------------

struct QAItem {
  std::string story_id;
  QaCategory category = QaCategory::emotional;
  std::string question;
  std::vector<std::string> options;
  int correct_index = 0;
  // Names the question must not mention; empty when not supplied.
  std::vector<std::string> character_names;
};

using QaKey = std::pair<std::string, QaCategory>;
using QaAnswers = std::map<QaKey, int>;

struct QAResult {
  double overall_accuracy = 0;
  std::map<QaCategory, double> per_category;
  std::map<QaCategory, std::size_t> correct_per_category;
  std::size_t n_stories = 0;
  std::size_t n_questions = 0;
  std::size_t n_correct = 0;
};

namespace detail {

inline bool contains_word_ci(std::string_view haystack, std::string_view needle) {
  const std::string h = text::to_lower(haystack);
  const std::string n = text::to_lower(text::trim(needle));
  if (n.empty()) return false;
  for (std::size_t pos = h.find(n); pos != std::string::npos; pos = h.find(n, pos + 1)) {
    const bool left_ok = pos == 0 || !text::is_ascii_alnum(h[pos - 1]);
    const std::size_t after = pos + n.size();
    const bool right_ok = after >= h.size() || !text::is_ascii_alnum(h[after]);
    if (left_ok && right_ok) return true;
  }
  return false;
}

}  // namespace detail

/// Three options, one valid correct index, and no character name in the
/// question text.
inline void validate_qa_item(const QAItem& item, std::span<const std::string> character_names = {}) {
  const std::string where = "QA item " + item.story_id + "/" + std::string(to_string(item.category));
  if (item.options.size() != 3) {
    throw Error(ErrorCode::InvalidRecord, where + " must have exactly three options");
  }
  if (item.correct_index < 0 || item.correct_index > 2) {
    throw Error(ErrorCode::InvalidRecord, where + " has correct_index outside 0..2");
  }
  if (text::trim(item.question).empty()) {
    throw Error(ErrorCode::InvalidRecord, where + " has an empty question");
  }
  auto check = [&](std::span<const std::string> names) {
    for (const auto& name : names) {
      if (detail::contains_word_ci(item.question, name)) {
        throw Error(ErrorCode::InvalidRecord, where + " names a character: " + name);
      }
    }
  };
  check(character_names);
  check(item.character_names);
}

/// Accuracy per category and overall. Each story needs exactly one question
/// per category and every question an answer.
inline QAResult score_qa(std::span<const QAItem> items, const QaAnswers& answers) {
  if (items.empty()) throw Error(ErrorCode::EmptyGroup, "no QA items to score");
  std::map<std::string, std::set<QaCategory>> seen;
  std::vector<std::string> missing;
  for (const auto& item : items) {
    validate_qa_item(item);
    if (!seen[item.story_id].insert(item.category).second) {
      throw Error(ErrorCode::DuplicateRecord, "duplicate QA item for " + item.story_id + "/" +
                                                  std::string(to_string(item.category)));
    }
    if (!answers.count({item.story_id, item.category})) {
      missing.push_back(item.story_id + "/" + std::string(to_string(item.category)));
    }
  }
  for (const auto& [story, cats] : seen) {
    if (cats.size() != kQaCategories.size()) {
      throw Error(ErrorCode::InvalidRecord,
                  "story " + story + " does not have one question per category");
    }
  }
  if (!missing.empty()) {
    std::string list;
    for (const auto& m : missing) list += (list.empty() ? "" : ", ") + m;
    throw Error(ErrorCode::MissingAnswer, "no answer for " + list);
  }

  QAResult r;
  r.n_stories = seen.size();
  r.n_questions = items.size();
  for (auto c : kQaCategories) r.correct_per_category[c] = 0;
  for (const auto& item : items) {
    if (answers.at({item.story_id, item.category}) == item.correct_index) {
      ++r.correct_per_category[item.category];
      ++r.n_correct;
    }
  }
  for (auto c : kQaCategories) {
    r.per_category[c] = 100.0 * static_cast<double>(r.correct_per_category[c]) /
                        static_cast<double>(r.n_stories);
  }
  r.overall_accuracy =
      100.0 * static_cast<double>(r.n_correct) / static_cast<double>(r.n_questions);
  return r;
}

/// Table with columns Overall, Emot., Action, Relat.; one row per labelled
/// result.
inline std::string format_qa_table(
    const std::vector<std::pair<std::string, QAResult>>& labelled) {
  std::string out = "Model | Overall | Emot. | Action | Relat.\n";
  for (const auto& [label, r] : labelled) {
    out += label + " | " + format_one_decimal(r.overall_accuracy) + " | " +
           format_one_decimal(r.per_category.at(QaCategory::emotional)) + " | " +
           format_one_decimal(r.per_category.at(QaCategory::action)) + " | " +
           format_one_decimal(r.per_category.at(QaCategory::relationship)) + "\n";
  }
  return out;
}

// ---------------------------------------------------------------------------
// Prompts and response grammar
// ---------------------------------------------------------------------------

inline std::string_view reference_guidance(ReferenceType r) {
  switch (r) {
    case ReferenceType::subtitles:
      return "The reference is the subtitle text for these frames. Prefer the story that "
             "attributes the spoken lines to the right characters and reflects what is said.";
    case ReferenceType::description:
      return "The reference is a description of the visual content of these frames. Prefer "
             "the story that better matches what is visible in the scene.";
    case ReferenceType::synopsis:
      return "The reference is the aligned screenplay content for these frames. Prefer the "
             "story that better follows the narrative, actions and relationships it describes.";
  }
  return "";
}

/// Judge request comparing two stories against one reference. The caller
/// decides which story sits in position A.
inline std::string build_pairwise_prompt(std::string_view story_a, std::string_view story_b,
                                         std::string_view reference, ReferenceType reference_type) {
  if (text::trim(story_a).empty() || text::trim(story_b).empty() ||
      text::trim(reference).empty()) {
    throw Error(ErrorCode::InvalidRecord, "pairwise prompt inputs must be non-empty");
  }
  std::string p;
  p += "You are judging two stories written for the same sequence of movie frames.\n";
  p += reference_guidance(reference_type);
  p += "\n\n=== REFERENCE (";
  p += to_string(reference_type);
  p += ") ===\n";
  p += text::trim(reference);
  p += "\n\n=== STORY A ===\n";
  p += text::trim(story_a);
  p += "\n\n=== STORY B ===\n";
  p += text::trim(story_b);
  p += "\n\n=== INSTRUCTION ===\n";
  p += "Which story agrees better with the reference? Reply with exactly one token: A, B, or "
       "TIE. Do not write anything else.\n";
  return p;
}

/// Asks for three multiple-choice questions (emotional state, action,
/// relationship) about an aligned script excerpt, as a JSON array.
inline std::string build_qa_generation_prompt(std::string_view script_context) {
  std::string p;
  p += "Below is an excerpt of a movie screenplay aligned to a short sequence of frames.\n";
  p += "Write three multiple-choice comprehension questions about it, one per category:\n";
  p += "emotional (a character's emotional state), action (what a character does), and\n";
  p += "relationship (how characters relate to each other).\n";
  p += "Refer to characters only by description (e.g. \"the older man\", \"the woman in red\"),\n";
  p += "never by name. Each question has exactly three options and exactly one correct answer.\n";
  p += "Reply with only a JSON array of three objects with the keys \"category\", \"question\",\n";
  p += "\"options\" (array of three strings) and \"correct_index\" (0, 1 or 2).\n\n";
  p += "=== SCRIPT ===\n";
  p += text::trim(script_context);
  p += "\n";
  return p;
}

/// Asks the model to answer one question using only the story text.
inline std::string build_qa_answer_prompt(std::string_view story_text, const QAItem& item) {
  if (item.options.size() != 3) {
    throw Error(ErrorCode::InvalidRecord, "QA item must have exactly three options");
  }
  std::string p;
  p += "Answer the question using only the story below.\n\n=== STORY ===\n";
  p += text::trim(story_text);
  p += "\n\n=== QUESTION ===\n";
  p += text::trim(item.question);
  p += "\nA) " + item.options[0];
  p += "\nB) " + item.options[1];
  p += "\nC) " + item.options[2];
  p += "\n\nReply with exactly one letter: A, B, or C.\n";
  return p;
}

namespace detail {

inline std::string_view strip_decoration(std::string_view s) {
  for (;;) {
    s = text::trim(s);
    if (s.empty()) return s;
    const char f = s.front();
    const char b = s.back();
    if (f == '*' || f == '_' || f == '`' || f == '"' || f == '\'') {
      s.remove_prefix(1);
    } else if (b == '*' || b == '_' || b == '`' || b == '"' || b == '\'' || b == '.' || b == '!') {
      s.remove_suffix(1);
    } else {
      return s;
    }
  }
}

/// Reduces a response to its single answer token, or returns empty when the
/// response does not follow the grammar:
///   response := decoration* [label ":"] decoration* ["STORY" | "OPTION"] TOKEN decoration*
/// where the label is any text and decoration is whitespace, quotes, '*', '_',
/// '`' or a trailing '.'/'!'.
inline std::string answer_token(std::string_view raw) {
  std::string_view s = strip_decoration(raw);
  if (auto colon = s.rfind(':'); colon != std::string_view::npos) {
    s = strip_decoration(s.substr(colon + 1));
  }
  std::string up = text::to_upper(s);
  for (std::string_view prefix : {"STORY ", "OPTION "}) {
    if (up.rfind(prefix, 0) == 0) up = std::string(text::trim(up.substr(prefix.size())));
  }
  if (up.size() == 2 && up[1] == ')') up.pop_back();  // "B)"
  return up;
}

}  // namespace detail

/// Parses a judge response into A, B or tie. Anything outside the
/// single-token grammar is rejected rather than guessed.
inline Winner parse_verdict(std::string_view raw) {
  const std::string token = detail::answer_token(raw);
  if (token == "A") return Winner::A;
  if (token == "B") return Winner::B;
  if (token == "TIE") return Winner::tie;
  throw UnparseableVerdictError(std::string(raw));
}

/// Parses an A/B/C answer into an option index.
inline int parse_qa_choice(std::string_view raw) {
  const std::string token = detail::answer_token(raw);
  if (token == "A") return 0;
  if (token == "B") return 1;
  if (token == "C") return 2;
  throw UnparseableVerdictError(std::string(raw));
}

// ---------------------------------------------------------------------------
// Judging harness
// ---------------------------------------------------------------------------

/// One comparison to judge. `story_a` always belongs to system A; the harness
/// decides the presented order.
struct PairwiseJob {
  std::string sample_id;
  ReferenceType reference_type = ReferenceType::subtitles;
  std::string reference;
  std::string story_a;
  std::string story_b;
};

/// Even-numbered runs present system B's story first.
inline bool is_swapped_run(int run_id) { return run_id % 2 == 0; }

/// Maps a verdict on the presented order back to system identity.
inline Winner unswap(Winner presented, bool swapped) {
  if (!swapped || presented == Winner::tie) return presented;
  return presented == Winner::A ? Winner::B : Winner::A;
}

inline std::string prompt_for_run(const PairwiseJob& job, int run_id) {
  return is_swapped_run(run_id)
             ? build_pairwise_prompt(job.story_b, job.story_a, job.reference, job.reference_type)
             : build_pairwise_prompt(job.story_a, job.story_b, job.reference, job.reference_type);
}

using JudgeFn = std::function<std::string(const std::string& prompt)>;

struct JudgeExchange {
  std::string sample_id;
  ReferenceType reference_type = ReferenceType::subtitles;
  int run_id = 1;
  bool swapped = false;
  std::string prompt;
  std::string response;
  std::optional<Winner> winner;  // in system terms; empty when unparseable
  std::optional<std::string> error;
};

/// Judges every job once per run with at most `in_flight` concurrent calls.
/// Results come back in (job, run) order regardless of completion order.
inline std::vector<JudgeExchange> run_pairwise(std::span<const PairwiseJob> jobs, int runs,
                                               const JudgeFn& judge, std::size_t in_flight = 4) {
  std::vector<JudgeExchange> results(jobs.size() * static_cast<std::size_t>(std::max(runs, 0)));
  for (std::size_t j = 0; j < jobs.size(); ++j) {
    for (int r = 1; r <= runs; ++r) {
      JudgeExchange& ex = results[j * static_cast<std::size_t>(runs) + static_cast<std::size_t>(r - 1)];
      ex.sample_id = jobs[j].sample_id;
      ex.reference_type = jobs[j].reference_type;
      ex.run_id = r;
      ex.swapped = is_swapped_run(r);
      ex.prompt = prompt_for_run(jobs[j], r);
    }
  }
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t k = next++; k < results.size(); k = next++) {
      JudgeExchange& ex = results[k];
      try {
        ex.response = judge(ex.prompt);
        ex.winner = unswap(parse_verdict(ex.response), ex.swapped);
      } catch (const std::exception& e) {
        ex.error = e.what();
      }
    }
  };
  const std::size_t n_threads = std::max<std::size_t>(1, std::min(in_flight, results.size()));
  std::vector<std::thread> pool;
  for (std::size_t t = 1; t < n_threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  return results;
}

inline std::vector<PairwiseVerdict> verdicts_from(std::span<const JudgeExchange> exchanges) {
  std::vector<PairwiseVerdict> out;
  for (const auto& ex : exchanges) {
    if (ex.winner) out.push_back({ex.sample_id, ex.reference_type, ex.run_id, *ex.winner});
  }
  return out;
}

}  // namespace storymovie
