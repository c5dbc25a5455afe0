#include "hai/config.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>

#include "csv.hpp"
#include "hai/error.hpp"

namespace hai {

namespace {

struct Value {
  enum class Kind : std::uint8_t { Number, Bool, String, IntArray } kind = Kind::Number;
  double number = 0.0;
  std::optional<std::int64_t> integer;
  bool boolean = false;
  std::string text;
  std::vector<std::int64_t> array;
};

struct Failure {
  std::string message;
};

Value parse_value(std::string_view raw) {
  Value v;
  if (raw.empty()) throw Failure{"missing value"};
  if (raw.front() == '"') {
    if (raw.size() < 2 || raw.back() != '"') throw Failure{"unterminated string"};
    v.kind = Value::Kind::String;
    v.text = std::string(raw.substr(1, raw.size() - 2));
    if (v.text.find('"') != std::string::npos) throw Failure{"embedded quotes are not supported"};
    return v;
  }
  if (raw == "true" || raw == "false") {
    v.kind = Value::Kind::Bool;
    v.boolean = raw == "true";
    return v;
  }
  if (raw.front() == '[') {
    if (raw.back() != ']') throw Failure{"unterminated array"};
    v.kind = Value::Kind::IntArray;
    const auto body = detail::trim(raw.substr(1, raw.size() - 2));
    if (body.empty()) return v;
    for (auto item : detail::split(body)) {
      const auto n = detail::parse_int<std::int64_t>(item);
      if (!n) throw Failure{"array items must be integers"};
      v.array.push_back(*n);
    }
    return v;
  }
  v.integer = detail::parse_int<std::int64_t>(raw);
  const auto d = detail::parse_double(raw);
  if (!d) throw Failure{"cannot parse value '" + std::string(raw) + "'"};
  v.number = *d;
  return v;
}

double as_number(const Value& v) {
  if (v.kind != Value::Kind::Number) throw Failure{"expected a number"};
  return v.number;
}

std::int64_t as_int(const Value& v) {
  if (v.kind != Value::Kind::Number || !v.integer) throw Failure{"expected an integer"};
  return *v.integer;
}

std::uint64_t as_count(const Value& v) {
  const auto n = as_int(v);
  if (n < 0) throw Failure{"expected a non-negative integer"};
  return static_cast<std::uint64_t>(n);
}

bool as_bool(const Value& v) {
  if (v.kind != Value::Kind::Bool) throw Failure{"expected true or false"};
  return v.boolean;
}

const std::string& as_string(const Value& v) {
  if (v.kind != Value::Kind::String) throw Failure{"expected a quoted string"};
  return v.text;
}

std::string strip_comment(const std::string& line) {
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    if (line[i] == '"') quoted = !quoted;
    if (line[i] == '#' && !quoted) return line.substr(0, i);
  }
  return line;
}

using Setter = std::function<void(ConfigFile&, const Value&)>;

std::map<std::string, Setter> setters(const std::string& base_dir) {
  auto path = [base_dir](const std::string& p) {
    const std::filesystem::path fp(p);
    return fp.is_absolute() ? fp.string() : (std::filesystem::path(base_dir) / fp).lexically_normal().string();
  };
  std::map<std::string, Setter> s;
  s["seeds"] = [](ConfigFile& c, const Value& v) {
    if (v.kind != Value::Kind::IntArray || v.array.empty()) throw Failure{"seeds must be a non-empty integer array"};
    c.seeds.clear();
    for (auto n : v.array) {
      if (n < 0) throw Failure{"seeds must be >= 0"};
      c.seeds.push_back(static_cast<std::uint64_t>(n));
    }
  };
  s["mode"] = [](ConfigFile& c, const Value& v) {
    c.mode = as_string(v);
    if (c.mode != "simulate" && c.mode != "live") throw Failure{"mode must be simulate or live"};
  };
  s["budgets.epsilon_kg"] = [](ConfigFile& c, const Value& v) { c.run.budgets.epsilon_kg = as_number(v); };
  s["budgets.labels_per_task"] = [](ConfigFile& c, const Value& v) {
    c.run.budgets.labels_per_task = static_cast<std::uint32_t>(as_count(v));
  };
  s["budgets.delta"] = [](ConfigFile& c, const Value& v) { c.run.budgets.delta = as_number(v); };
  s["budgets.task_epsilon_kg"] = [](ConfigFile& c, const Value& v) { c.run.budgets.task_epsilon_kg = as_number(v); };
  s["objective.lambda"] = [](ConfigFile& c, const Value& v) { c.run.budgets.lambda = as_number(v); };
  s["acquisition.beta"] = [](ConfigFile& c, const Value& v) { c.run.budgets.beta = as_number(v); };
  s["acquisition.ensemble_k"] = [](ConfigFile& c, const Value& v) { c.run.ensemble_k = as_count(v); };
  s["acquisition.strategy"] = [](ConfigFile& c, const Value& v) {
    const auto& t = as_string(v);
    if (t == "utility") {
      c.run.strategy = SelectionStrategy::Utility;
    } else if (t == "info_gain") {
      c.run.strategy = SelectionStrategy::InfoGain;
    } else if (t == "random") {
      c.run.strategy = SelectionStrategy::Random;
    } else {
      throw Failure{"strategy must be utility, info_gain or random"};
    }
  };
  s["acquisition.bootstrap"] = [](ConfigFile& c, const Value& v) { c.run.bootstrap = as_bool(v); };
  s["acquisition.ensemble_epochs"] = [](ConfigFile& c, const Value& v) {
    c.run.ensemble_epochs = static_cast<int>(as_int(v));
  };
  s["acquisition.ensemble_jitter"] = [](ConfigFile& c, const Value& v) { c.run.ensemble_jitter = as_number(v); };
  s["acquisition.queries_per_round"] = [](ConfigFile& c, const Value& v) { c.run.queries_per_round = as_count(v); };
  s["acquisition.query_ttl"] = [](ConfigFile& c, const Value& v) { c.run.query_ttl = as_int(v); };
  s["throttle.base"] = [](ConfigFile& c, const Value& v) { c.run.throttle.base = as_number(v); };
  s["throttle.unavailable_factor"] = [](ConfigFile& c, const Value& v) {
    c.run.throttle.unavailable_factor = as_number(v);
  };
  s["throttle.urgency_floor"] = [](ConfigFile& c, const Value& v) { c.run.throttle.urgency_floor = as_number(v); };
  s["throttle.carbon_weight"] = [](ConfigFile& c, const Value& v) { c.run.throttle.carbon_weight = as_number(v); };
  s["throttle.min_factor"] = [](ConfigFile& c, const Value& v) { c.run.throttle.min_factor = as_number(v); };
  s["throttle.max_factor"] = [](ConfigFile& c, const Value& v) { c.run.throttle.max_factor = as_number(v); };
  s["scheduler.lookahead"] = [](ConfigFile& c, const Value& v) { c.run.lookahead = as_int(v); };
  s["scheduler.deadline_slack"] = [](ConfigFile& c, const Value& v) { c.run.deadline_slack = as_int(v); };
  s["scheduler.pathway"] = [](ConfigFile& c, const Value& v) {
    const auto& t = as_string(v);
    if (t == "full") {
      c.run.pathway_policy = PathwayPolicy::Full;
    } else if (t == "shallow") {
      c.run.pathway_policy = PathwayPolicy::Shallow;
    } else if (t == "adaptive") {
      c.run.pathway_policy = PathwayPolicy::Adaptive;
    } else {
      throw Failure{"pathway must be full, shallow or adaptive"};
    }
  };
  s["scheduler.shallow_pressure"] = [](ConfigFile& c, const Value& v) { c.run.shallow_pressure = as_number(v); };
  s["scheduler.pressure_window"] = [](ConfigFile& c, const Value& v) { c.run.pressure_window = as_int(v); };
  s["device.power_draw_kw"] = [](ConfigFile& c, const Value& v) { c.run.device.power_draw_kw = as_number(v); };
  s["device.flops_per_second"] = [](ConfigFile& c, const Value& v) { c.run.device.flops_per_second = as_number(v); };
  s["device.idle_overhead_factor"] = [](ConfigFile& c, const Value& v) {
    c.run.device.idle_overhead_factor = as_number(v);
  };
  s["trace.path"] = [path](ConfigFile& c, const Value& v) { c.trace_path = path(as_string(v)); };
  s["trace.constant_ci"] = [](ConfigFile& c, const Value& v) {
    const double ci = as_number(v);
    if (!(ci >= 0.0)) throw Failure{"constant_ci must be >= 0"};
    c.run.trace = CarbonIntensityTrace::constant(1, ci);
  };
  s["memory.capacity"] = [](ConfigFile& c, const Value& v) { c.run.memory_capacity = as_count(v); };
  s["memory.mix"] = [](ConfigFile& c, const Value& v) { c.run.rehearsal_mix = as_number(v); };
  s["memory.retention"] = [](ConfigFile& c, const Value& v) {
    const auto& t = as_string(v);
    if (t == "uniform") {
      c.run.retention = RetentionPolicy::Uniform;
    } else if (t == "uncertainty") {
      c.run.retention = RetentionPolicy::UncertaintyWeighted;
    } else {
      throw Failure{"retention must be uniform or uncertainty"};
    }
  };
  s["memory.corrective_batch"] = [](ConfigFile& c, const Value& v) { c.run.corrective_batch = as_count(v); };
  s["memory.max_corrections"] = [](ConfigFile& c, const Value& v) { c.run.max_corrections = as_count(v); };
  s["learner.architecture"] = [](ConfigFile& c, const Value& v) {
    const auto& t = as_string(v);
    if (t == "logistic") {
      c.run.architecture = Architecture::Logistic;
    } else if (t == "mlp") {
      c.run.architecture = Architecture::Mlp;
    } else {
      throw Failure{"architecture must be logistic or mlp"};
    }
  };
  s["learner.hidden"] = [](ConfigFile& c, const Value& v) { c.run.hidden = as_count(v); };
  s["learner.init"] = [](ConfigFile& c, const Value& v) {
    const auto& t = as_string(v);
    if (t == "zeros") {
      c.run.init = InitMode::Zeros;
    } else if (t == "seeded") {
      c.run.init = InitMode::Seeded;
    } else {
      throw Failure{"init must be zeros or seeded"};
    }
  };
  s["learner.learning_rate"] = [](ConfigFile& c, const Value& v) { c.run.learning_rate = as_number(v); };
  s["learner.epochs"] = [](ConfigFile& c, const Value& v) { c.run.epochs = static_cast<int>(as_int(v)); };
  s["learner.batch_size"] = [](ConfigFile& c, const Value& v) { c.run.batch_size = as_count(v); };
  s["learner.n_classes"] = [](ConfigFile& c, const Value& v) { c.n_classes = as_count(v); };
  s["run.eval_cadence"] = [](ConfigFile& c, const Value& v) { c.run.eval_cadence = as_int(v); };
  s["run.max_task_slots"] = [](ConfigFile& c, const Value& v) { c.run.max_task_slots = as_int(v); };
  s["run.rule_weight"] = [](ConfigFile& c, const Value& v) { c.run.rule_weight = as_number(v); };
  s["stream.path"] = [path](ConfigFile& c, const Value& v) { c.stream_path = path(as_string(v)); };
  s["live.step_ms"] = [](ConfigFile& c, const Value& v) {
    c.live_step_ms = as_int(v);
    if (c.live_step_ms < 1) throw Failure{"step_ms must be >= 1"};
  };
  s["live.static_dir"] = [path](ConfigFile& c, const Value& v) { c.static_dir = path(as_string(v)); };
  s["live.human_available"] = [](ConfigFile& c, const Value& v) { c.human_available = as_bool(v); };
  return s;
}

}  // namespace

ConfigFile parse_config(std::istream& in, const std::string& source, const std::string& base_dir) {
  const auto table = setters(base_dir);
  ConfigFile config;
  std::string section;
  std::string line;
  std::size_t line_no = 0;
  std::map<std::string, std::size_t> seen;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string stripped = strip_comment(line);
    const auto text = detail::trim(stripped);
    if (text.empty()) continue;
    if (text.front() == '[') {
      if (text.back() != ']' || text.size() < 3) throw ParseError(source, line_no, "malformed section header");
      section = std::string(detail::trim(text.substr(1, text.size() - 2)));
      const std::string prefix = section + ".";
      const bool known = std::any_of(table.begin(), table.end(),
                                     [&](const auto& kv) { return kv.first.rfind(prefix, 0) == 0; });
      if (!known) throw ParseError(source, line_no, "unknown section [" + section + "]");
      continue;
    }
    const auto eq = text.find('=');
    if (eq == std::string_view::npos) throw ParseError(source, line_no, "expected key = value");
    const std::string key(detail::trim(text.substr(0, eq)));
    const std::string full = section.empty() ? key : section + "." + key;
    const auto setter = table.find(full);
    if (setter == table.end()) throw ParseError(source, line_no, "unknown key '" + full + "'");
    if (const auto prev = seen.find(full); prev != seen.end()) {
      throw ParseError(source, line_no, "duplicate key '" + full + "' (first on line " + std::to_string(prev->second) + ")");
    }
    seen[full] = line_no;
    try {
      setter->second(config, parse_value(detail::trim(text.substr(eq + 1))));
    } catch (const Failure& f) {
      throw ParseError(source, line_no, full + ": " + f.message);
    }
  }
  try {
    config.run.validate();
  } catch (const InvalidInput& e) {
    throw ParseError(source, 0, e.what());
  }
  return config;
}

ConfigFile load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(path, 0, "cannot open config file");
  const auto base = std::filesystem::path(path).parent_path().string();
  auto config = parse_config(in, path, base.empty() ? "." : base);
  if (config.trace_path) config.run.trace = load_trace_csv(*config.trace_path);
  return config;
}

}  // namespace hai
