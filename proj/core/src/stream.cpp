#include "hai/stream.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>

#include "csv.hpp"
#include "hai/error.hpp"

namespace hai {

namespace fs = std::filesystem;

void TaskStream::validate() const {
  if (tasks.empty()) return;
  if (d_in == 0) throw InvalidInput("stream dimension must be > 0");
  if (n_classes < 2) throw InvalidInput("stream needs at least two classes");
  std::set<TaskId> task_ids;
  std::set<SampleId> sample_ids;
  auto claim = [&](SampleId id, TaskId task) {
    if (!sample_ids.insert(id).second) {
      throw InvalidInput("sample id " + std::to_string(id) + " appears twice (task " + std::to_string(task) + ")");
    }
  };
  auto check_features = [&](const FeatureVector& x, TaskId task) {
    if (x.size() != d_in) throw InvalidInput("task " + std::to_string(task) + " has a sample of the wrong dimension");
    for (double v : x) {
      if (!std::isfinite(v)) throw InvalidInput("task " + std::to_string(task) + " has a non-finite feature");
    }
  };
  auto check_label = [&](ClassLabel y, TaskId task) {
    if (y >= n_classes) throw InvalidInput("task " + std::to_string(task) + " has a label out of range");
  };

  Slot prev_arrival = tasks.front().arrival;
  for (const auto& t : tasks) {
    if (!task_ids.insert(t.id).second) throw InvalidInput("duplicate task id " + std::to_string(t.id));
    if (t.arrival < prev_arrival) throw InvalidInput("task arrivals must be nondecreasing");
    if (t.arrival < 0) throw InvalidInput("task arrivals must be >= 0");
    prev_arrival = t.arrival;
    if (t.eval.empty()) throw InvalidInput("task " + std::to_string(t.id) + " has an empty eval split");
    if (!(t.noise_rate >= 0.0 && t.noise_rate <= 1.0)) throw InvalidInput("noise rate must lie in [0, 1]");
    if (!(t.urgency >= 0.0 && t.urgency <= 1.0)) throw InvalidInput("urgency must lie in [0, 1]");
    for (const auto& s : t.eval.samples) {
      claim(s.id, t.id);
      check_features(s.features, t.id);
      check_label(s.label, t.id);
    }
    for (const auto& s : t.pool) {
      claim(s.id, t.id);
      check_features(s.features, t.id);
      const auto it = t.pool_truth.find(s.id);
      if (it == t.pool_truth.end()) {
        throw InvalidInput("pool sample " + std::to_string(s.id) + " has no ground-truth label");
      }
      check_label(it->second, t.id);
    }
    if (t.pool_truth.size() != t.pool.size()) throw InvalidInput("pool truth lists samples outside the pool");
    for (const auto& s : t.seed_labels) {
      claim(s.id, t.id);
      check_features(s.features, t.id);
      check_label(s.label, t.id);
    }
  }
}

namespace {

std::ifstream open_or_throw(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(path.string(), 0, "cannot open file");
  return in;
}

void read_task_file(const fs::path& path, Task& task, std::size_t& d_in) {
  auto in = open_or_throw(path);
  const std::string source = path.string();
  std::string line;
  if (!std::getline(in, line)) throw ParseError(source, 1, "missing header");
  const auto header = detail::split(detail::trim(line));
  if (header.size() < 4 || detail::trim(header[0]) != "sample_id" || detail::trim(header[1]) != "split" ||
      detail::trim(header[2]) != "label") {
    throw ParseError(source, 1, "expected header 'sample_id,split,label,x0,...'");
  }
  const std::size_t dim = header.size() - 3;
  for (std::size_t j = 0; j < dim; ++j) {
    if (detail::trim(header[3 + j]) != "x" + std::to_string(j)) {
      throw ParseError(source, 1, "feature column " + std::to_string(j) + " must be named x" + std::to_string(j));
    }
  }
  if (d_in == 0) d_in = dim;
  if (dim != d_in) throw ParseError(source, 1, "feature dimension differs from earlier tasks");

  std::size_t line_no = 1;
  task.eval.task_id = task.id;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::trim(line).empty()) continue;
    const auto cols = detail::split(detail::trim(line));
    if (cols.size() != header.size()) {
      throw ParseError(source, line_no, "expected " + std::to_string(header.size()) + " columns");
    }
    const auto id = detail::parse_int<SampleId>(cols[0]);
    if (!id) throw ParseError(source, line_no, "invalid sample_id");
    const auto label = detail::parse_int<ClassLabel>(cols[2]);
    if (!label) throw ParseError(source, line_no, "invalid label");
    FeatureVector x(dim);
    for (std::size_t j = 0; j < dim; ++j) {
      const auto v = detail::parse_double(cols[3 + j]);
      if (!v || !std::isfinite(*v)) throw ParseError(source, line_no, "invalid feature x" + std::to_string(j));
      x[j] = *v;
    }
    const auto split = detail::trim(cols[1]);
    if (split == "pool") {
      task.pool.push_back({*id, std::move(x)});
      task.pool_truth[*id] = *label;
    } else if (split == "eval") {
      task.eval.samples.push_back({*id, std::move(x), *label, Provenance::Oracle, 1.0});
    } else if (split == "seed") {
      task.seed_labels.push_back({*id, std::move(x), *label, Provenance::Seed, 1.0});
    } else {
      throw ParseError(source, line_no, "split must be pool, eval or seed");
    }
  }
}

}  // namespace

TaskStream load_stream(const std::string& dir, std::size_t n_classes) {
  const fs::path root(dir);
  const fs::path manifest = root / "manifest.csv";
  auto in = open_or_throw(manifest);
  const std::string source = manifest.string();
  std::string line;
  if (!std::getline(in, line)) throw ParseError(source, 1, "missing header");
  if (detail::trim(line) != "task_id,arrival_slot,file,noise_rate,urgency") {
    throw ParseError(source, 1, "expected header 'task_id,arrival_slot,file,noise_rate,urgency'");
  }
  TaskStream stream;
  std::size_t line_no = 1;
  ClassLabel max_label = 0;
  bool any_label = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::trim(line).empty()) continue;
    const auto cols = detail::split(detail::trim(line));
    if (cols.size() != 5) throw ParseError(source, line_no, "expected 5 columns");
    Task task;
    const auto id = detail::parse_int<TaskId>(cols[0]);
    const auto arrival = detail::parse_int<Slot>(cols[1]);
    const auto noise = detail::parse_double(cols[3]);
    const auto urgency = detail::parse_double(cols[4]);
    if (!id) throw ParseError(source, line_no, "invalid task_id");
    if (!arrival) throw ParseError(source, line_no, "invalid arrival_slot");
    if (!noise) throw ParseError(source, line_no, "invalid noise_rate");
    if (!urgency) throw ParseError(source, line_no, "invalid urgency");
    task.id = *id;
    task.arrival = *arrival;
    task.noise_rate = *noise;
    task.urgency = *urgency;
    const std::string file(detail::trim(cols[2]));
    if (file.empty()) throw ParseError(source, line_no, "empty file name");
    read_task_file(root / file, task, stream.d_in);
    auto see = [&](ClassLabel y) {
      max_label = std::max(max_label, y);
      any_label = true;
    };
    for (const auto& [sid, y] : task.pool_truth) see(y);
    for (const auto& s : task.eval.samples) see(s.label);
    for (const auto& s : task.seed_labels) see(s.label);
    stream.tasks.push_back(std::move(task));
  }
  stream.n_classes = n_classes > 0 ? n_classes : (any_label ? std::max<std::size_t>(max_label + 1, 2) : 0);
  try {
    stream.validate();
  } catch (const InvalidInput& e) {
    throw ParseError(source, 0, e.what());
  }
  return stream;
}

void write_stream(const std::string& dir, const TaskStream& stream) {
  const fs::path root(dir);
  fs::create_directories(root);
  std::ofstream manifest(root / "manifest.csv");
  if (!manifest) throw InvalidInput("cannot write " + (root / "manifest.csv").string());
  manifest << "task_id,arrival_slot,file,noise_rate,urgency\n";
  for (const auto& t : stream.tasks) {
    const std::string file = "task_" + std::to_string(t.id) + ".csv";
    manifest << t.id << ',' << t.arrival << ',' << file << ',' << detail::format_double(t.noise_rate) << ','
             << detail::format_double(t.urgency) << '\n';
    std::ofstream out(root / file);
    if (!out) throw InvalidInput("cannot write " + (root / file).string());
    out << "sample_id,split,label";
    for (std::size_t j = 0; j < stream.d_in; ++j) out << ",x" << j;
    out << '\n';
    auto row = [&](SampleId id, std::string_view split, ClassLabel y, const FeatureVector& x) {
      out << id << ',' << split << ',' << y;
      for (double v : x) out << ',' << detail::format_double(v);
      out << '\n';
    };
    for (const auto& s : t.seed_labels) row(s.id, "seed", s.label, s.features);
    for (const auto& s : t.pool) row(s.id, "pool", t.pool_truth.at(s.id), s.features);
    for (const auto& s : t.eval.samples) row(s.id, "eval", s.label, s.features);
  }
}

}  // namespace hai
