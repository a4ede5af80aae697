#pragma once

#include <cstddef>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <type_traits>

#include <json.hpp>

#include "storymovie/align.hpp"
#include "storymovie/error.hpp"
#include "storymovie/screenplay.hpp"
#include "storymovie/timecode.hpp"

namespace storymovie {

enum class LogLevel { debug, info, warn, error };

inline std::string_view to_string(LogLevel l) {
  switch (l) {
    case LogLevel::debug: return "debug";
    case LogLevel::info: return "info";
    case LogLevel::warn: return "warn";
    case LogLevel::error: return "error";
  }
  return "info";
}

struct PipelineConfig {
  AlignConfig align;
  ScreenplayConfig screenplay;
  Millis pad_ms = 0;
  std::string input_dir;
  std::string output_dir;
  LogLevel log_level = LogLevel::info;
  std::size_t judge_in_flight = 4;
};

namespace detail {

inline void reject_unknown_keys(const nlohmann::json& obj, std::string_view section,
                                std::initializer_list<std::string_view> allowed) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    bool known = false;
    for (auto k : allowed) known = known || k == it.key();
    if (!known) {
      throw Error(ErrorCode::InvalidConfig,
                  "unknown key '" + (section.empty() ? "" : std::string(section) + ".") + it.key() + "'");
    }
  }
}

template <typename T>
T get_number(const nlohmann::json& obj, const std::string& key, const std::string& path, T fallback) {
  if (!obj.contains(key)) return fallback;
  const auto& v = obj.at(key);
  if (!v.is_number()) throw Error(ErrorCode::InvalidConfig, "'" + path + "' must be a number");
  if constexpr (std::is_integral_v<T>) {
    if (!v.is_number_integer()) throw Error(ErrorCode::InvalidConfig, "'" + path + "' must be an integer");
    if (std::is_unsigned_v<T> && v.get<long long>() < 0) {
      throw Error(ErrorCode::InvalidConfig, "'" + path + "' must be non-negative");
    }
  }
  return v.get<T>();
}

}  // namespace detail

/// Range checks; the message names the offending key.
inline void validate(const PipelineConfig& cfg) {
  auto fail = [](const std::string& key, const std::string& why) {
    throw Error(ErrorCode::InvalidConfig, "'" + key + "' " + why);
  };
  if (!(cfg.align.min_score >= 0.0 && cfg.align.min_score <= 1.0)) fail("align.min_score", "must be in [0, 1]");
  if (cfg.align.min_anchor_len < 1) fail("align.min_anchor_len", "must be >= 1");
  if (cfg.align.window_script_tokens < 1) fail("align.window_script_tokens", "must be >= 1");
  if (cfg.align.window_subtitle_tokens < 1) fail("align.window_subtitle_tokens", "must be >= 1");
  if (cfg.pad_ms < 0) fail("segment.pad_ms", "must be >= 0");
  if (cfg.screenplay.dialogue_indent_min >= cfg.screenplay.character_indent_min) {
    fail("screenplay.dialogue_indent_min", "must be below screenplay.character_indent_min");
  }
  if (!(cfg.screenplay.character_upper_ratio > 0.0 && cfg.screenplay.character_upper_ratio <= 1.0)) {
    fail("screenplay.character_upper_ratio", "must be in (0, 1]");
  }
  if (cfg.screenplay.tab_width < 1) fail("screenplay.tab_width", "must be >= 1");
  if (cfg.judge_in_flight < 1) fail("judge.in_flight", "must be >= 1");
}

/// Parses a JSON config document. Missing keys keep their defaults; unknown
/// keys are rejected.
inline PipelineConfig parse_config(std::string_view json_text) {
  nlohmann::json doc = nlohmann::json::parse(json_text, nullptr, false);
  if (doc.is_discarded() || !doc.is_object()) {
    throw Error(ErrorCode::InvalidConfig, "config is not a JSON object");
  }
  detail::reject_unknown_keys(doc, "", {"align", "screenplay", "segment", "paths", "log_level", "judge", "schema_version"});
  PipelineConfig cfg;
  if (doc.contains("align")) {
    const auto& a = doc["align"];
    detail::reject_unknown_keys(a, "align", {"min_anchor_len", "min_score", "window_script_tokens", "window_subtitle_tokens", "strip_chars"});
    cfg.align.min_anchor_len = detail::get_number(a, "min_anchor_len", "align.min_anchor_len", cfg.align.min_anchor_len);
    cfg.align.min_score = detail::get_number(a, "min_score", "align.min_score", cfg.align.min_score);
    cfg.align.window_script_tokens = detail::get_number(a, "window_script_tokens", "align.window_script_tokens", cfg.align.window_script_tokens);
    cfg.align.window_subtitle_tokens = detail::get_number(a, "window_subtitle_tokens", "align.window_subtitle_tokens", cfg.align.window_subtitle_tokens);
    if (a.contains("strip_chars")) {
      if (!a["strip_chars"].is_string()) throw Error(ErrorCode::InvalidConfig, "'align.strip_chars' must be a string");
      cfg.align.strip_chars = a["strip_chars"].get<std::string>();
    }
  }
  if (doc.contains("screenplay")) {
    const auto& s = doc["screenplay"];
    detail::reject_unknown_keys(s, "screenplay", {"character_indent_min", "dialogue_indent_min", "character_max_length", "character_upper_ratio", "tab_width"});
    auto& sc = cfg.screenplay;
    sc.character_indent_min = detail::get_number(s, "character_indent_min", "screenplay.character_indent_min", sc.character_indent_min);
    sc.dialogue_indent_min = detail::get_number(s, "dialogue_indent_min", "screenplay.dialogue_indent_min", sc.dialogue_indent_min);
    sc.character_max_length = detail::get_number(s, "character_max_length", "screenplay.character_max_length", sc.character_max_length);
    sc.character_upper_ratio = detail::get_number(s, "character_upper_ratio", "screenplay.character_upper_ratio", sc.character_upper_ratio);
    sc.tab_width = detail::get_number(s, "tab_width", "screenplay.tab_width", sc.tab_width);
  }
  if (doc.contains("segment")) {
    const auto& s = doc["segment"];
    detail::reject_unknown_keys(s, "segment", {"pad_ms"});
    cfg.pad_ms = detail::get_number<Millis>(s, "pad_ms", "segment.pad_ms", cfg.pad_ms);
  }
  if (doc.contains("paths")) {
    const auto& p = doc["paths"];
    detail::reject_unknown_keys(p, "paths", {"input_dir", "output_dir"});
    if (p.contains("input_dir")) cfg.input_dir = p["input_dir"].get<std::string>();
    if (p.contains("output_dir")) cfg.output_dir = p["output_dir"].get<std::string>();
  }
  if (doc.contains("judge")) {
    const auto& j = doc["judge"];
    detail::reject_unknown_keys(j, "judge", {"in_flight"});
    cfg.judge_in_flight = detail::get_number(j, "in_flight", "judge.in_flight", cfg.judge_in_flight);
  }
  if (doc.contains("log_level")) {
    const std::string level = doc["log_level"].is_string() ? doc["log_level"].get<std::string>() : "";
    bool ok = false;
    for (auto l : {LogLevel::debug, LogLevel::info, LogLevel::warn, LogLevel::error}) {
      if (to_string(l) == level) {
        cfg.log_level = l;
        ok = true;
      }
    }
    if (!ok) throw Error(ErrorCode::InvalidConfig, "'log_level' must be one of debug, info, warn, error");
  }
  validate(cfg);
  return cfg;
}

inline PipelineConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot read config file " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

/// Echo written into every output document.
inline nlohmann::json config_echo(const PipelineConfig& cfg) {
  return {
      {"align",
       {{"min_anchor_len", cfg.align.min_anchor_len},
        {"min_score", cfg.align.min_score},
        {"window_script_tokens", cfg.align.window_script_tokens},
        {"window_subtitle_tokens", cfg.align.window_subtitle_tokens},
        {"strip_chars", cfg.align.strip_chars}}},
      {"screenplay",
       {{"character_indent_min", cfg.screenplay.character_indent_min},
        {"dialogue_indent_min", cfg.screenplay.dialogue_indent_min},
        {"character_max_length", cfg.screenplay.character_max_length},
        {"character_upper_ratio", cfg.screenplay.character_upper_ratio},
        {"tab_width", cfg.screenplay.tab_width}}},
      {"segment", {{"pad_ms", cfg.pad_ms}}},
      {"paths", {{"input_dir", cfg.input_dir}, {"output_dir", cfg.output_dir}}},
      {"judge", {{"in_flight", cfg.judge_in_flight}}},
      {"log_level", std::string(to_string(cfg.log_level))},
  };
}

}  // namespace storymovie
