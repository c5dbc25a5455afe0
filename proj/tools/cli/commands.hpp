#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace hai::cli {

// Stable exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitData = 3;

struct RunOptions {
  std::string config;
  std::string out;
  std::vector<std::uint64_t> seeds;  // overrides the config's seeds when non-empty
};

struct ServeOptions {
  std::string config;
  int port = 8080;
  std::string host = "127.0.0.1";
  std::optional<std::string> out;
};

struct ReportOptions {
  std::string run;
  std::string out;
};

struct SynthOptions {
  std::string kind = "two-gaussian";
  std::string out;
  std::size_t tasks = 1;
  std::size_t pool = 500;
  std::size_t eval = 200;
  std::size_t seeds_per_class = 2;
  double separation = 3.0;
  double stddev = 1.0;
  double noise = 0.0;
  std::size_t trace_slots = 0;
  std::uint64_t seed = 0;
};

int cmd_run(const RunOptions& options);
int cmd_serve(const ServeOptions& options);
int cmd_report(const ReportOptions& options);
int cmd_synth(const SynthOptions& options);

}  // namespace hai::cli
