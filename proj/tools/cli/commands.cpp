#include "commands.hpp"

#include <atomic>
#include <chrono>
#include <csignal>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>

#include <httplib.h>
#include <spdlog/spdlog.h>

#include "hai/checkpoint.hpp"
#include "hai/config.hpp"
#include "hai/error.hpp"
#include "hai/event_log.hpp"
#include "hai/hitl_service.hpp"
#include "hai/http_api.hpp"
#include "hai/orchestrator.hpp"
#include "hai/report.hpp"
#include "hai/stream.hpp"
#include "hai/synthetic.hpp"

namespace hai::cli {

namespace fs = std::filesystem;

namespace {

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

ConfigFile read_config(const std::string& path) {
  if (!fs::exists(path)) throw UsageError("config file not found: " + path);
  try {
    return load_config(path);
  } catch (const ParseError& e) {
    if (e.line() == 0 && std::string(e.what()).find(path) == std::string::npos) {
      throw UsageError(path + ": " + e.what());
    }
    throw UsageError(e.what());
  }
}

TaskStream read_stream(const ConfigFile& config, const std::string& config_path) {
  if (!config.stream_path) throw UsageError(config_path + ": stream.path is not set");
  return load_stream(*config.stream_path, config.n_classes);
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

void write_artifacts(const fs::path& dir, const EventLog& log, const CarbonLedger& ledger,
                     const std::vector<TradeoffPoint>& curve, const ModelState& model, const ReplayBuffer& buffer) {
  fs::create_directories(dir);
  std::ostringstream events;
  log.write_jsonl(events);
  write_text(dir / "events.jsonl", events.str());
  std::ostringstream ledger_csv;
  write_ledger_csv(ledger_csv, ledger);
  write_text(dir / "ledger.csv", ledger_csv.str());
  std::ostringstream tradeoff;
  write_tradeoff_csv(tradeoff, curve);
  write_text(dir / "tradeoff.csv", tradeoff.str());
  write_file((dir / "checkpoint.bin").string(), encode_run_checkpoint(model, buffer));
}

template <typename Fn>
int guarded(Fn&& fn) {
  try {
    return fn();
  } catch (const UsageError& e) {
    spdlog::error("{}", e.what());
    return kExitUsage;
  } catch (const ParseError& e) {
    spdlog::error("{}", e.what());
    return kExitData;
  } catch (const InvalidInput& e) {
    spdlog::error("{}", e.what());
    return kExitData;
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return kExitData;
  }
}

}  // namespace

int cmd_run(const RunOptions& options) {
  return guarded([&] {
    const auto config = read_config(options.config);
    const auto stream = read_stream(config, options.config);
    const auto seeds = options.seeds.empty() ? config.seeds : options.seeds;
    try {
      fs::create_directories(options.out);
    } catch (const fs::filesystem_error& e) {
      throw UsageError("cannot create output directory " + options.out + ": " + e.what());
    }
    for (const auto seed : seeds) {
      RunConfig rc = config.run;
      rc.seed = seed;
      const auto result = run(stream, rc);
      const fs::path dir = fs::path(options.out) / ("seed-" + std::to_string(seed));
      write_artifacts(dir, result.log, result.ledger, result.curve, result.model, result.buffer);
      std::uint64_t labels = 0;
      for (const auto& [task, n] : result.labels_spent) labels += n;
      spdlog::info("seed {}: {} ({} tasks, {:.6g} kg, {} labels, mean accuracy {:.4f}) -> {}", seed,
                   result.halt_reason.empty() ? "empty stream" : result.halt_reason, stream.tasks.size(),
                   result.ledger.cumulative_kg(), labels, result.mean_accuracy, dir.string());
    }
    return kExitOk;
  });
}

int cmd_report(const ReportOptions& options) {
  return guarded([&] {
    const fs::path events = fs::path(options.run) / "events.jsonl";
    std::ifstream in(events);
    if (!in) throw UsageError("cannot open " + events.string());
    const auto log = EventLog::read_jsonl(in, events.string());
    const auto state = replay(log.events());
    const auto frontier = pareto_frontier(state.curve);

    const fs::path out(options.out);
    if (out.has_parent_path()) fs::create_directories(out.parent_path());
    std::ostringstream csv;
    write_tradeoff_csv(csv, frontier);
    write_text(out, csv.str());

    std::ostringstream summary;
    summary << "events: " << log.size() << '\n';
    summary << "final_accuracy: "
            << (state.curve.empty() ? std::string("n/a") : std::to_string(state.curve.back().mean_accuracy)) << '\n';
    summary << "total_kg: " << state.cumulative_kg << '\n';
    summary << "labels_spent: " << state.labels_spent << '\n';
    summary << "weak_labels: " << state.weak_labels << '\n';
    summary << "model_version: " << state.model_version << '\n';
    summary << "tradeoff_points: " << state.curve.size() << '\n';
    summary << "frontier_points: " << frontier.size() << '\n';
    summary << "halt: " << state.halt_reason.value_or("none") << '\n';
    fs::path summary_path = out;
    summary_path.replace_extension(".summary.txt");
    write_text(summary_path, summary.str());
    std::fputs(summary.str().c_str(), stdout);
    return kExitOk;
  });
}

int cmd_serve(const ServeOptions& options) {
  return guarded([&] {
    const auto config = read_config(options.config);
    if (config.mode != "live") throw UsageError(options.config + ": serve requires mode = \"live\"");
    const auto stream = read_stream(config, options.config);
    RunConfig rc = config.run;
    rc.seed = config.seeds.front();

    // Block termination signals before any thread starts so only the waiter below sees them.
    sigset_t signals;
    sigemptyset(&signals);
    sigaddset(&signals, SIGTERM);
    sigaddset(&signals, SIGINT);
    pthread_sigmask(SIG_BLOCK, &signals, nullptr);

    HitlService service(std::max<std::size_t>(stream.n_classes, 2), rc.query_ttl, config.human_available);
    Orchestrator orchestrator(stream, rc, &service);
    std::mutex loop_mutex;

    httplib::Server server;
    http::register_routes(server, service);
    if (config.static_dir && !server.set_mount_point("/", *config.static_dir)) {
      throw UsageError("static directory not found: " + *config.static_dir);
    }
    if (!server.bind_to_port(options.host, options.port)) {
      spdlog::error("cannot bind {}:{}", options.host, options.port);
      return kExitData;
    }

    std::atomic<bool> stop{false};
    std::thread loop([&] {
      const auto period = std::chrono::milliseconds(config.live_step_ms);
      auto next = std::chrono::steady_clock::now();
      while (!stop.load()) {
        {
          std::lock_guard lock(loop_mutex);
          if (!orchestrator.finished()) orchestrator.step();
        }
        next += period;
        while (!stop.load() && std::chrono::steady_clock::now() < next) {
          std::this_thread::sleep_for(std::min<std::chrono::steady_clock::duration>(
              std::chrono::milliseconds(20), next - std::chrono::steady_clock::now()));
        }
      }
    });
    std::thread waiter([&] {
      int sig = 0;
      sigwait(&signals, &sig);
      spdlog::info("received signal {}, shutting down", sig);
      stop.store(true);
      server.stop();
    });

    spdlog::info("serving /v1 on {}:{}", options.host, options.port);
    server.listen_after_bind();
    // listen returns only after stop(); make sure the waiter is released if it was not the cause.
    if (!stop.load()) {
      stop.store(true);
      pthread_kill(waiter.native_handle(), SIGTERM);
    }
    waiter.join();
    loop.join();

    if (options.out) {
      std::lock_guard lock(loop_mutex);
      write_artifacts(*options.out, orchestrator.log(), orchestrator.ledger(), orchestrator.snapshot().tradeoff,
                      orchestrator.model(), orchestrator.buffer());
      spdlog::info("artifacts written to {}", *options.out);
    }
    spdlog::default_logger()->flush();
    return kExitOk;
  });
}

int cmd_synth(const SynthOptions& options) {
  return guarded([&] {
    std::vector<TaskSpec> specs;
    std::size_t n_classes = 2;
    if (options.kind == "two-gaussian") {
      for (std::size_t k = 0; k < options.tasks; ++k) {
        auto spec = two_gaussian_spec(static_cast<TaskId>(k), options.separation, options.stddev, options.pool,
                                      options.eval);
        spec.arrival = static_cast<Slot>(k);
        specs.push_back(spec);
      }
    } else if (options.kind == "class-pair") {
      specs = class_pair_specs(options.tasks, options.separation, options.stddev, options.pool, options.eval);
      n_classes = 2 * options.tasks;
    } else if (options.kind == "drifting") {
      specs = drifting_specs(options.tasks, options.separation, options.stddev, 1.0, options.pool, options.eval);
    } else {
      throw UsageError("unknown stream kind '" + options.kind + "' (two-gaussian, class-pair, drifting)");
    }
    for (auto& s : specs) {
      s.seeds_per_class = options.seeds_per_class;
      s.noise_rate = options.noise;
    }
    const auto stream = make_stream(specs, n_classes, options.seed);
    write_stream(options.out, stream);
    if (options.trace_slots > 0) {
      std::ofstream trace(fs::path(options.out) / "trace.csv");
      write_trace_csv(trace, diurnal_trace(options.trace_slots, 0.4, 0.15, 0.1, options.seed));
    }
    spdlog::info("wrote {} task(s) to {}", stream.tasks.size(), options.out);
    return kExitOk;
  });
}

}  // namespace hai::cli
