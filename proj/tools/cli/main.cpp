#include <cstdlib>
#include <string>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "commands.hpp"

namespace {

void configure_logging() {
  auto logger = spdlog::stderr_color_mt("hai");
  spdlog::set_default_logger(logger);
  spdlog::set_pattern("[%l] %v");
  spdlog::set_level(spdlog::level::info);
  if (const char* env = std::getenv("HAI_LOG_LEVEL")) {
    const std::string level(env);
    if (level == "error" || level == "warn" || level == "info" || level == "debug") {
      spdlog::set_level(spdlog::level::from_str(level));
    } else {
      spdlog::warn("ignoring HAI_LOG_LEVEL={} (expected error, warn, info or debug)", level);
    }
  }
}

}  // namespace

int main(int argc, char** argv) {
  configure_logging();
  using namespace hai::cli;

  CLI::App app{"hai: carbon- and label-budgeted lifelong learning runs"};
  app.require_subcommand(1);

  RunOptions run;
  auto* run_cmd = app.add_subcommand("run", "Simulate a task stream once per seed and write artifacts");
  run_cmd->add_option("--config", run.config, "Run configuration file")->required();
  run_cmd->add_option("--out", run.out, "Output directory")->required();
  run_cmd->add_option("--seed", run.seeds, "Seed (repeatable); overrides the config's seeds");

  ServeOptions serve;
  auto* serve_cmd = app.add_subcommand("serve", "Run a live loop behind the /v1 HTTP API");
  serve_cmd->add_option("--config", serve.config, "Run configuration file (mode = \"live\")")->required();
  serve_cmd->add_option("--port", serve.port, "TCP port")->required()->check(CLI::Range(0, 65535));
  serve_cmd->add_option("--host", serve.host, "Bind address");
  serve_cmd->add_option("--out", serve.out, "Write run artifacts here on shutdown");

  ReportOptions report;
  auto* report_cmd = app.add_subcommand("report", "Pareto frontier and summary of a run directory");
  report_cmd->add_option("--run", report.run, "Run directory containing events.jsonl")->required();
  report_cmd->add_option("--out", report.out, "Frontier CSV path")->required();

  SynthOptions synth;
  auto* synth_cmd = app.add_subcommand("synth", "Generate a synthetic stream directory");
  synth_cmd->add_option("--kind", synth.kind, "two-gaussian, class-pair or drifting");
  synth_cmd->add_option("--out", synth.out, "Output directory")->required();
  synth_cmd->add_option("--tasks", synth.tasks, "Number of tasks");
  synth_cmd->add_option("--pool", synth.pool, "Pool size per task");
  synth_cmd->add_option("--eval", synth.eval, "Eval split size per task");
  synth_cmd->add_option("--seeds-per-class", synth.seeds_per_class, "Seed labels per class");
  synth_cmd->add_option("--separation", synth.separation, "Distance between cluster centres (radius for class-pair)");
  synth_cmd->add_option("--stddev", synth.stddev, "Cluster standard deviation");
  synth_cmd->add_option("--noise", synth.noise, "Annotator noise rate");
  synth_cmd->add_option("--trace-slots", synth.trace_slots, "Also write a diurnal trace.csv with this many slots");
  synth_cmd->add_option("--seed", synth.seed, "Generator seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  int code = kExitOk;
  if (*run_cmd) code = cmd_run(run);
  if (*serve_cmd) code = cmd_serve(serve);
  if (*report_cmd) code = cmd_report(report);
  if (*synth_cmd) code = cmd_synth(synth);
  spdlog::default_logger()->flush();
  return code;
}
