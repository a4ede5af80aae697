#pragma once

// Command-line front end: one subcommand per pipeline stage.

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <spdlog/sinks/ostream_sink.h>
#include <spdlog/spdlog.h>

#include "storymovie/judge.hpp"
#include "storymovie/storymovie.hpp"

namespace storymovie::cli {

namespace fs = std::filesystem;

struct Context {
  std::ostream& out;
  std::shared_ptr<spdlog::logger> log;
};

/// Writes through a sibling temp file and renames it into place.
inline void write_atomic(const fs::path& path, std::string_view data) {
  std::error_code ec;
  if (path.has_parent_path()) fs::create_directories(path.parent_path(), ec);
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::Io, "cannot write " + tmp.string());
    out.write(data.data(), static_cast<std::streamsize>(data.size()));
    out.flush();
    if (!out) {
      fs::remove(tmp, ec);
      throw Error(ErrorCode::Io, "failed writing " + tmp.string());
    }
  }
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw Error(ErrorCode::Io, "cannot move output into place at " + path.string());
  }
}

inline std::string dump(const json& doc) {
  return doc.dump(2, ' ', false, json::error_handler_t::replace) + "\n";
}

inline void emit(Context& ctx, const std::string& path, std::string_view data) {
  if (path.empty() || path == "-") {
    ctx.out << data;
    ctx.out.flush();
  } else {
    write_atomic(path, data);
    ctx.log->info("wrote {}", path);
  }
}

inline void report_warnings(Context& ctx, std::string_view what,
                            const std::vector<Diagnostic>& warnings) {
  if (warnings.empty()) return;
  constexpr std::size_t kShown = 10;
  ctx.log->warn("{}: {} warning(s)", what, warnings.size());
  for (std::size_t k = 0; k < warnings.size() && k < kShown; ++k) {
    if (warnings[k].line > 0) {
      ctx.log->warn("  line {}: {}", warnings[k].line, warnings[k].message);
    } else {
      ctx.log->warn("  {}", warnings[k].message);
    }
  }
  if (warnings.size() > kShown) ctx.log->warn("  ... {} more", warnings.size() - kShown);
}

struct GlobalOptions {
  std::string config_path;
  std::string log_level;
  std::optional<double> min_score;
  std::optional<std::size_t> min_anchor_len;
  std::optional<Millis> pad_ms;
};

inline PipelineConfig resolve_config(const GlobalOptions& g) {
  PipelineConfig cfg = g.config_path.empty() ? PipelineConfig{} : load_config(g.config_path);
  if (g.min_score) cfg.align.min_score = *g.min_score;
  if (g.min_anchor_len) cfg.align.min_anchor_len = *g.min_anchor_len;
  if (g.pad_ms) cfg.pad_ms = *g.pad_ms;
  if (!g.log_level.empty()) {
    bool ok = false;
    for (auto l : {LogLevel::debug, LogLevel::info, LogLevel::warn, LogLevel::error}) {
      if (to_string(l) == g.log_level) {
        cfg.log_level = l;
        ok = true;
      }
    }
    if (!ok) throw Error(ErrorCode::InvalidConfig, "'--log-level' must be one of debug, info, warn, error");
  }
  validate(cfg);
  return cfg;
}

inline spdlog::level::level_enum spdlog_level(LogLevel l) {
  switch (l) {
    case LogLevel::debug: return spdlog::level::debug;
    case LogLevel::info: return spdlog::level::info;
    case LogLevel::warn: return spdlog::level::warn;
    case LogLevel::error: return spdlog::level::err;
  }
  return spdlog::level::info;
}

/// Accepts raw screenplay text or a `parse-script` JSON document.
inline Screenplay load_screenplay(const fs::path& path, const PipelineConfig& cfg) {
  const std::string content = read_file_text(path);
  if (path.extension() == ".json") {
    json doc = json::parse(content, nullptr, false);
    if (doc.is_discarded() || !doc.is_object() || !doc.contains("elements")) {
      throw Error(ErrorCode::InvalidRecord, path.string() + " is not a parsed screenplay document");
    }
    try {
      return screenplay_from_json(doc);
    } catch (const json::exception& e) {
      throw Error(ErrorCode::InvalidRecord, path.string() + ": " + e.what());
    }
  }
  return parse_screenplay(content, cfg.screenplay);
}

inline std::string movie_id_from(const fs::path& script) {
  fs::path p = script.filename();
  while (p.has_extension()) p = p.stem();
  return p.string();
}

// ---------------------------------------------------------------------------
// parse-script / parse-srt
// ---------------------------------------------------------------------------

inline void cmd_parse_script(Context& ctx, const PipelineConfig& cfg, const std::string& input,
                             const std::string& output) {
  const Screenplay sp = parse_screenplay(read_file_text(input), cfg.screenplay);
  const DialogueExtraction blocks = extract_dialogue_blocks(sp);
  report_warnings(ctx, input, sp.warnings);
  report_warnings(ctx, input, blocks.warnings);
  ctx.log->info("{}: {} elements, {} scenes, {} dialogue blocks", input, sp.elements.size(),
                sp.scenes.size(), blocks.blocks.size());
  emit(ctx, output,
       dump(parse_script_document(sp, blocks, fs::path(input).filename().string(), config_echo(cfg))));
}

inline void cmd_parse_srt(Context& ctx, const PipelineConfig& cfg, const std::string& input,
                          const std::string& output) {
  const SubtitleTrack track = parse_srt(read_file_text(input), fs::path(input).filename().string());
  report_warnings(ctx, input, track.warnings);
  ctx.log->info("{}: {} cues", input, track.cues.size());
  emit(ctx, output, dump(parse_srt_document(track, config_echo(cfg))));
}

// ---------------------------------------------------------------------------
// align
// ---------------------------------------------------------------------------

struct AlignJob {
  std::string movie_id;
  fs::path script;
  fs::path srt;
  std::string output;
};

inline std::string run_align_job(Context& ctx, const PipelineConfig& cfg, const AlignJob& job) {
  const Screenplay sp = load_screenplay(job.script, cfg);
  const SubtitleTrack track = parse_srt(read_file_text(job.srt), job.srt.filename().string());
  const AlignmentResult result = align(sp, track, cfg.align, job.movie_id);
  std::vector<Diagnostic> warnings = sp.warnings;
  warnings.insert(warnings.end(), track.warnings.begin(), track.warnings.end());
  report_warnings(ctx, job.movie_id, warnings);
  if (!result.unaligned_blocks.empty()) {
    ctx.log->warn("{}: {} of {} dialogue blocks left unaligned", job.movie_id,
                  result.unaligned_blocks.size(), result.blocks.size());
  }
  ctx.log->info("{}: {} segments, coverage {:.3f}", job.movie_id, result.segments.size(), result.coverage);
  json doc = alignment_document(result, sp, track, config_echo(cfg));
  doc["warnings"] = diagnostics_to_json(warnings);
  return dump(doc);
}

inline std::vector<AlignJob> load_manifest(const fs::path& manifest) {
  std::vector<AlignJob> jobs;
  const fs::path base = manifest.parent_path();
  auto resolve = [&](const std::string& p) { return fs::path(p).is_absolute() ? fs::path(p) : base / p; };
  for_each_jsonl(read_file_text(manifest), "manifest", [&](const json& doc, std::size_t line) {
    AlignJob job;
    job.script = resolve(detail::require_field(doc, "script", "manifest", line).get<std::string>());
    job.srt = resolve(detail::require_field(doc, "srt", "manifest", line).get<std::string>());
    job.movie_id = doc.contains("movie_id") ? doc["movie_id"].get<std::string>() : movie_id_from(job.script);
    job.output = resolve(detail::require_field(doc, "output", "manifest", line).get<std::string>()).string();
    jobs.push_back(std::move(job));
  });
  if (jobs.empty()) throw Error(ErrorCode::InvalidRecord, "manifest lists no movies");
  return jobs;
}

/// Runs every manifest entry with at most `n_jobs` movies in flight. Each
/// movie succeeds or fails on its own; returns the number of failures.
inline std::size_t run_align_batch(Context& ctx, const PipelineConfig& cfg, const std::vector<AlignJob>& jobs,
                                   std::size_t n_jobs) {
  std::atomic<std::size_t> next{0};
  std::atomic<std::size_t> failures{0};
  auto worker = [&] {
    for (std::size_t k = next++; k < jobs.size(); k = next++) {
      try {
        write_atomic(jobs[k].output, run_align_job(ctx, cfg, jobs[k]));
        ctx.log->info("wrote {}", jobs[k].output);
      } catch (const Error& e) {
        ++failures;
        ctx.log->error("{}: {}", jobs[k].movie_id, e.what());
      } catch (const std::exception& e) {
        ++failures;
        ctx.log->error("{}: {}", jobs[k].movie_id, e.what());
      }
    }
  };
  const std::size_t threads = std::max<std::size_t>(1, std::min(n_jobs, jobs.size()));
  std::vector<std::thread> pool;
  for (std::size_t t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  return failures;
}

// ---------------------------------------------------------------------------
// extract
// ---------------------------------------------------------------------------

inline void check_story_id(const std::string& id) {
  const bool bad = id.empty() || id == "." || id == ".." ||
                   id.find_first_of("/\\") != std::string::npos;
  if (bad) throw Error(ErrorCode::InvalidRecord, "story_id '" + id + "' cannot be used as a file name");
}

inline void cmd_extract(Context& ctx, const PipelineConfig& cfg, const std::vector<std::string>& alignments,
                        const std::string& stories_path, const std::string& output_dir) {
  std::map<std::string, LoadedAlignment> by_movie;
  for (const auto& path : alignments) {
    json doc = json::parse(read_file_text(path), nullptr, false);
    if (doc.is_discarded()) throw Error(ErrorCode::InvalidRecord, path + " is not JSON");
    LoadedAlignment loaded;
    try {
      loaded = alignment_from_json(doc);
    } catch (const json::exception& e) {
      throw Error(ErrorCode::InvalidRecord, path + ": " + e.what());
    }
    const std::string id = loaded.result.movie_id;
    if (!by_movie.emplace(id, std::move(loaded)).second) {
      throw Error(ErrorCode::DuplicateRecord, "more than one alignment for movie '" + id + "'");
    }
  }
  const auto stories = load_story_records(read_file_text(stories_path));
  std::set<std::string> seen;
  for (const auto& s : stories) {
    check_story_id(s.story_id);
    if (!seen.insert(s.story_id).second) {
      throw Error(ErrorCode::DuplicateRecord, "story_id '" + s.story_id + "' appears twice");
    }
    if (!by_movie.count(s.movie_id)) {
      throw Error(ErrorCode::MovieMismatch,
                  "story " + s.story_id + " refers to movie '" + s.movie_id + "' but no alignment for it was given");
    }
  }
  std::size_t empty = 0;
  for (const auto& s : stories) {
    const auto& loaded = by_movie.at(s.movie_id);
    const StoryScriptContext context = extract_context(s.range(), loaded.result, loaded.screenplay, cfg.pad_ms);
    if (context.empty) ++empty;
    json doc = context_to_json(context);
    doc["config_echo"] = config_echo(cfg);
    const fs::path dir(output_dir);
    write_atomic(dir / (s.story_id + ".json"), dump(doc));
    write_atomic(dir / (s.story_id + ".txt"), render_context(context));
  }
  if (empty > 0) ctx.log->warn("{} of {} stories have no aligned script context", empty, stories.size());
  ctx.log->info("extracted {} stories into {}", stories.size(), output_dir);
}

// ---------------------------------------------------------------------------
// stats
// ---------------------------------------------------------------------------

inline void cmd_stats(Context& ctx, const PipelineConfig& cfg, const std::string& input, const std::string& output,
                      const std::string& csv) {
  const auto stories = load_story_corpus(input);
  std::vector<Diagnostic> warnings;
  for (const auto& s : stories) {
    for (const auto& w : s.warnings) warnings.push_back({0, s.story_id + ": " + w.message});
  }
  report_warnings(ctx, input, warnings);
  const CorpusStats stats = compute_stats(stories);
  ctx.log->info("{} stories, mean {:.2f} words, mean {:.2f} references", stats.n_stories, stats.mean_words,
                stats.mean_refs_total);
  if (!csv.empty()) emit(ctx, csv, per_story_csv(stats));
  emit(ctx, output, dump(corpus_stats_to_json(stats, config_echo(cfg))));
}

// ---------------------------------------------------------------------------
// eval
// ---------------------------------------------------------------------------

inline void cmd_eval_aggregate(Context& ctx, const PipelineConfig& cfg, const std::vector<std::string>& inputs,
                               const std::string& label_a, const std::string& label_b, const std::string& output) {
  std::vector<PairwiseVerdict> verdicts;
  for (const auto& path : inputs) {
    auto more = load_verdicts(read_file_text(path));
    verdicts.insert(verdicts.end(), more.begin(), more.end());
  }
  const WinRateTable table = aggregate_pairwise(verdicts);
  const std::string text = format_win_rate_table(table, label_a, label_b);
  ctx.out << text;
  if (!output.empty()) {
    json doc = {{"schema_version", kSchemaVersion},
                {"label_a", label_a},
                {"label_b", label_b},
                {"rows", win_rate_table_to_json(table)},
                {"table", text},
                {"config_echo", config_echo(cfg)}};
    emit(ctx, output, dump(doc));
  }
}

inline void cmd_eval_qa_score(Context& ctx, const PipelineConfig& cfg, const std::string& items_path,
                              const std::vector<std::string>& answer_specs, const std::string& output) {
  const auto items = load_qa_items(read_file_text(items_path));
  std::vector<std::pair<std::string, QAResult>> results;
  for (const auto& arg : answer_specs) {
    const auto eq = arg.find('=');
    const std::string label = eq == std::string::npos ? movie_id_from(arg) : arg.substr(0, eq);
    const std::string path = eq == std::string::npos ? arg : arg.substr(eq + 1);
    results.emplace_back(label, score_qa(items, load_qa_answers(read_file_text(path))));
  }
  const std::string text = format_qa_table(results);
  ctx.out << text;
  if (!output.empty()) {
    json arr = json::array();
    for (const auto& [label, r] : results) arr.push_back(qa_result_to_json(label, r));
    json doc = {{"schema_version", kSchemaVersion}, {"results", arr}, {"table", text}, {"config_echo", config_echo(cfg)}};
    emit(ctx, output, dump(doc));
  }
}

struct JudgeOptions {
  std::string pairs;
  std::string endpoint;
  std::string record;
  std::string replay;
  std::string output;
  int runs = 3;
  std::optional<std::size_t> in_flight;
};

/// Returns false when any call failed outright (as opposed to an
/// unparseable verdict, which is only excluded).
inline bool cmd_eval_judge(Context& ctx, const PipelineConfig& cfg, const JudgeOptions& o) {
  if (o.runs < 1) throw Error(ErrorCode::InvalidConfig, "'--runs' must be at least 1");
  if (o.endpoint.empty() == o.replay.empty()) {
    throw Error(ErrorCode::InvalidConfig, "give exactly one of --endpoint or --replay");
  }
  const auto jobs = load_pairwise_jobs(read_file_text(o.pairs));
  if (jobs.empty()) throw Error(ErrorCode::EmptyGroup, "no pairs to judge");

  JudgeFn judge;
  if (!o.replay.empty()) {
    auto recorded = std::make_shared<const std::map<std::string, std::string>>(
        load_recorded_responses(read_file_text(o.replay)));
    judge = [recorded](const std::string& prompt) {
      auto it = recorded->find(prompt_fingerprint(prompt));
      if (it == recorded->end()) throw Error(ErrorCode::MissingAnswer, "no recorded response for this prompt");
      return it->second;
    };
  } else {
    json doc = json::parse(read_file_text(o.endpoint), nullptr, false);
    if (doc.is_discarded()) throw Error(ErrorCode::InvalidConfig, o.endpoint + " is not JSON");
    const JudgeEndpoint endpoint = judge_endpoint_from_json(doc);
    if (!endpoint.api_key_env.empty() && !std::getenv(endpoint.api_key_env.c_str())) {
      ctx.log->warn("environment variable {} is not set; sending requests without a token", endpoint.api_key_env);
    }
    auto transport = http_transport(endpoint);
    judge = [endpoint, transport](const std::string& prompt) { return call_judge(prompt, endpoint, transport); };
  }

  const std::size_t in_flight = o.in_flight.value_or(cfg.judge_in_flight);
  const auto exchanges = run_pairwise(jobs, o.runs, judge, in_flight);
  std::size_t unparseable = 0;
  std::size_t failed = 0;
  for (const auto& ex : exchanges) {
    if (!ex.error) continue;
    if (ex.response.empty()) {
      if (failed < 5) ctx.log->error("{} run {}: {}", ex.sample_id, ex.run_id, *ex.error);
      ++failed;
    } else {
      ++unparseable;
    }
  }
  if (!o.record.empty()) {
    std::string lines;
    for (const auto& ex : exchanges) lines += exchange_to_json(ex).dump() + "\n";
    emit(ctx, o.record, lines);
  }
  if (unparseable > 0) ctx.log->warn("{} unparseable verdict(s) excluded", unparseable);
  if (failed > 0) ctx.log->error("{} judge call(s) failed", failed);

  const auto verdicts = verdicts_from(exchanges);
  std::string lines;
  for (const auto& v : verdicts) lines += verdict_to_json(v).dump() + "\n";
  emit(ctx, o.output, lines);
  if (!verdicts.empty() && failed == 0) {
    try {
      ctx.log->info("win rates:\n{}", format_win_rate_table(aggregate_pairwise(verdicts)));
    } catch (const Error& e) {
      ctx.log->warn("cannot aggregate these verdicts: {}", e.what());
    }
  }
  return failed == 0;
}

// ---------------------------------------------------------------------------
// Entry point
// ---------------------------------------------------------------------------

inline const CLI::App* selected_leaf(const CLI::App& app) {
  for (const CLI::App* sub : app.get_subcommands()) return selected_leaf(*sub);
  return &app;
}

/// Exit codes: 0 success, 1 input/validation/usage error, 2 internal error.
inline int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Screenplay/subtitle alignment and story evaluation pipeline", "storymovie"};
  app.fallthrough();
  app.require_subcommand(1);
  app.set_version_flag("--version", "storymovie 1.0.0");

  GlobalOptions g;
  app.add_option("--config", g.config_path, "JSON config file")->check(CLI::ExistingFile);
  app.add_option("--log-level", g.log_level, "debug, info, warn or error");
  app.add_option("--min-score", g.min_score, "Minimum segment score in [0, 1]");
  app.add_option("--min-anchor-len", g.min_anchor_len, "Minimum consecutive matches for an anchor");
  app.add_option("--pad-ms", g.pad_ms, "Padding added to segments when matching story ranges");

  std::string input;
  std::string output;

  auto* parse_script = app.add_subcommand("parse-script", "Parse a screenplay into elements and dialogue blocks");
  parse_script->add_option("input", input, "Screenplay text file")->required()->check(CLI::ExistingFile);
  parse_script->add_option("-o,--output", output, "Output JSON (default: stdout)");

  auto* parse_srt_cmd = app.add_subcommand("parse-srt", "Parse and clean an SRT subtitle file");
  parse_srt_cmd->add_option("input", input, "SRT file")->required()->check(CLI::ExistingFile);
  parse_srt_cmd->add_option("-o,--output", output, "Output JSON (default: stdout)");

  std::string script;
  std::string srt;
  std::string movie_id;
  std::string batch;
  std::size_t n_jobs = 1;
  auto* align_cmd = app.add_subcommand("align", "Align screenplay dialogue with subtitles");
  align_cmd->add_option("--script", script, "Screenplay text or parse-script JSON")->check(CLI::ExistingFile);
  align_cmd->add_option("--srt", srt, "Subtitle file")->check(CLI::ExistingFile);
  align_cmd->add_option("--movie-id", movie_id, "Movie id (default: script file name)");
  align_cmd->add_option("-o,--output", output, "Output JSON (default: stdout)");
  align_cmd->add_option("--batch", batch, "JSONL manifest of {movie_id, script, srt, output}")
      ->check(CLI::ExistingFile);
  align_cmd->add_option("--jobs", n_jobs, "Movies aligned in parallel with --batch")->check(CLI::PositiveNumber);

  std::vector<std::string> alignments;
  std::string stories;
  std::string output_dir;
  auto* extract_cmd = app.add_subcommand("extract", "Cut per-story script context out of alignments");
  extract_cmd->add_option("--alignment", alignments, "Alignment JSON (repeatable)")
      ->required()
      ->check(CLI::ExistingFile);
  extract_cmd->add_option("--stories", stories, "Story records JSONL")->required()->check(CLI::ExistingFile);
  extract_cmd->add_option("--output-dir", output_dir, "Directory for <story_id>.json/.txt")->required();

  std::string csv;
  auto* stats_cmd = app.add_subcommand("stats", "Grounding-tag statistics over generated stories");
  stats_cmd->add_option("input", input, "Story JSONL file or directory")->required()->check(CLI::ExistingPath);
  stats_cmd->add_option("-o,--output", output, "Output JSON (default: stdout)");
  stats_cmd->add_option("--csv", csv, "Per-story CSV");

  auto* eval_cmd = app.add_subcommand("eval", "Evaluation utilities");
  eval_cmd->require_subcommand(1);

  std::vector<std::string> verdict_files;
  std::string label_a = "A";
  std::string label_b = "B";
  auto* aggregate_cmd = eval_cmd->add_subcommand("aggregate", "Win rates from pairwise verdict logs");
  aggregate_cmd->add_option("verdicts", verdict_files, "Verdict JSONL files")->required()->check(CLI::ExistingFile);
  aggregate_cmd->add_option("--label-a", label_a, "Column label for system A");
  aggregate_cmd->add_option("--label-b", label_b, "Column label for system B");
  aggregate_cmd->add_option("-o,--output", output, "Also write the table as JSON");

  std::string items;
  std::vector<std::string> answer_specs;
  auto* qa_cmd = eval_cmd->add_subcommand("qa-score", "Accuracy of QA answers per category");
  qa_cmd->add_option("--items", items, "QA items JSONL")->required()->check(CLI::ExistingFile);
  qa_cmd->add_option("--answers", answer_specs, "[LABEL=]answers JSONL (repeatable)")->required();
  qa_cmd->add_option("-o,--output", output, "Also write the results as JSON");

  JudgeOptions jo;
  auto* judge_cmd = eval_cmd->add_subcommand("judge", "Pairwise judging through an external endpoint");
  judge_cmd->add_option("--pairs", jo.pairs, "JSONL of {sample_id, reference_type, reference, story_a, story_b}")
      ->required()
      ->check(CLI::ExistingFile);
  judge_cmd->add_option("--runs", jo.runs, "Independent runs; even runs swap positions");
  judge_cmd->add_option("--endpoint", jo.endpoint, "Endpoint descriptor JSON")->check(CLI::ExistingFile);
  judge_cmd->add_option("--replay", jo.replay, "Recorded exchanges to replay instead of calling out")
      ->check(CLI::ExistingFile);
  judge_cmd->add_option("--record", jo.record, "Write every exchange to this JSONL file");
  judge_cmd->add_option("--in-flight", jo.in_flight, "Concurrent requests")->check(CLI::PositiveNumber);
  judge_cmd->add_option("-o,--output", jo.output, "Verdict JSONL (default: stdout)");

  if (args.size() <= 1) {
    err << app.help();
    return 1;
  }
  try {
    std::vector<std::string> reversed(args.rbegin(), std::prev(args.rend()));
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << selected_leaf(app)->help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::CallForVersion&) {
    out << app.version() << "\n";
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << selected_leaf(app)->help();
    return 1;
  }

  auto sink = std::make_shared<spdlog::sinks::ostream_sink_mt>(err, true);
  sink->set_pattern("[%l] %v");
  auto log = std::make_shared<spdlog::logger>("storymovie", sink);
  Context ctx{out, log};
  try {
    const PipelineConfig cfg = resolve_config(g);
    log->set_level(spdlog_level(cfg.log_level));

    if (parse_script->parsed()) {
      cmd_parse_script(ctx, cfg, input, output);
    } else if (parse_srt_cmd->parsed()) {
      cmd_parse_srt(ctx, cfg, input, output);
    } else if (align_cmd->parsed()) {
      if (!batch.empty()) {
        if (!script.empty() || !srt.empty()) {
          throw Error(ErrorCode::InvalidConfig, "--batch cannot be combined with --script/--srt");
        }
        const auto jobs = load_manifest(batch);
        if (run_align_batch(ctx, cfg, jobs, n_jobs) > 0) return 1;
      } else {
        if (script.empty() || srt.empty()) {
          err << "error: align needs --script and --srt (or --batch)\n\n" << align_cmd->help();
          return 1;
        }
        const AlignJob job{movie_id.empty() ? movie_id_from(script) : movie_id, script, srt, output};
        emit(ctx, output, run_align_job(ctx, cfg, job));
      }
    } else if (extract_cmd->parsed()) {
      cmd_extract(ctx, cfg, alignments, stories, output_dir);
    } else if (stats_cmd->parsed()) {
      cmd_stats(ctx, cfg, input, output, csv);
    } else if (aggregate_cmd->parsed()) {
      cmd_eval_aggregate(ctx, cfg, verdict_files, label_a, label_b, output);
    } else if (qa_cmd->parsed()) {
      cmd_eval_qa_score(ctx, cfg, items, answer_specs, output);
    } else if (judge_cmd->parsed()) {
      if (!cmd_eval_judge(ctx, cfg, jo)) return 1;
    }
  } catch (const Error& e) {
    log->error("{}", e.what());
    return 1;
  } catch (const json::exception& e) {
    log->error("InvalidRecord: {}", e.what());
    return 1;
  } catch (const std::exception& e) {
    log->critical("internal error: {}", e.what());
    return 2;
  }
  return 0;
}

inline int run(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  return run(args, std::cout, std::cerr);
}

}  // namespace storymovie::cli
