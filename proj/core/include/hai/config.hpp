#pragma once

// Flat TOML-style run configuration: `[section]` headers, `key = value` lines, `#` comments.
// Values are numbers, booleans, double-quoted strings, or `[1, 2, 3]` integer arrays.
// Unknown sections or keys are errors.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "hai/orchestrator.hpp"

namespace hai {

struct ConfigFile {
  RunConfig run;
  std::vector<std::uint64_t> seeds{0};
  std::optional<std::string> stream_path;  // resolved against the config's directory
  std::optional<std::string> trace_path;
  std::size_t n_classes = 0;  // 0 infers from the stream
  std::string mode = "simulate";
  std::int64_t live_step_ms = 1000;
  std::optional<std::string> static_dir;
  bool human_available = true;
};

/// Throws ParseError with the line number on syntax errors, unknown keys, wrong value types or
/// invalid values. Relative paths are resolved against `base_dir`. The trace file is not read.
ConfigFile parse_config(std::istream& in, const std::string& source, const std::string& base_dir);

/// parse_config on a file, then loads `trace.path` into run.trace when set.
ConfigFile load_config(const std::string& path);

}  // namespace hai
