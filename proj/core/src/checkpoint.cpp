#include "hai/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <limits>

#include "hai/error.hpp"

namespace hai {

namespace {

class ByteWriter {
 public:
  void raw(std::string_view s) { out_.append(s); }
  void u8(std::uint8_t v) { out_.push_back(static_cast<char>(v)); }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) u8(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) u8(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void size32(std::size_t v, const char* what) {
    if (v > std::numeric_limits<std::uint32_t>::max()) throw InvalidInput(std::string(what) + " does not fit in u32");
    u32(static_cast<std::uint32_t>(v));
  }
  std::string take() { return std::move(out_); }

 private:
  std::string out_;
};

class ByteReader {
 public:
  explicit ByteReader(std::string_view in) : in_(in) {}

  std::string_view raw(std::size_t n) {
    need(n);
    auto s = in_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  std::uint8_t u8() { return static_cast<std::uint8_t>(raw(1)[0]); }
  std::uint32_t u32() {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(u8()) << (8 * i);
    return v;
  }
  std::uint64_t u64() {
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(u8()) << (8 * i);
    return v;
  }
  double f64() { return std::bit_cast<double>(u64()); }
  [[nodiscard]] bool done() const { return pos_ == in_.size(); }
  [[nodiscard]] std::size_t position() const { return pos_; }

 private:
  void need(std::size_t n) const {
    if (in_.size() - pos_ < n) throw ParseError("checkpoint", 0, "truncated at byte " + std::to_string(pos_));
  }

  std::string_view in_;
  std::size_t pos_ = 0;
};

void write_model(ByteWriter& w, const ModelState& model) {
  if (model.version() > std::numeric_limits<std::uint32_t>::max()) {
    throw InvalidInput("model version does not fit the checkpoint's u32 field");
  }
  w.raw("HAI1");
  w.u32(static_cast<std::uint32_t>(model.version()));
  w.u32(static_cast<std::uint32_t>(model.architecture()));
  w.size32(model.d_in(), "d_in");
  w.size32(model.n_classes(), "n_classes");
  w.size32(model.shape().hidden, "hidden_width");
  for (double v : model.weights()) w.f64(v);
  const auto& mask = model.pathway_mask();
  for (std::size_t byte = 0; byte < (mask.size() + 7) / 8; ++byte) {
    std::uint8_t bits = 0;
    for (std::size_t b = 0; b < 8 && byte * 8 + b < mask.size(); ++b) {
      if (mask[byte * 8 + b]) bits |= static_cast<std::uint8_t>(1u << b);
    }
    w.u8(bits);
  }
}

ModelState read_model(ByteReader& r) {
  if (r.raw(4) != "HAI1") throw ParseError("checkpoint", 0, "bad magic, expected HAI1");
  const std::uint32_t version = r.u32();
  const std::uint32_t arch = r.u32();
  if (arch > 1) throw ParseError("checkpoint", 0, "unknown architecture tag " + std::to_string(arch));
  ModelShape shape;
  shape.architecture = static_cast<Architecture>(arch);
  shape.d_in = r.u32();
  shape.n_classes = r.u32();
  shape.hidden = r.u32();
  try {
    shape.validate();
  } catch (const InvalidInput& e) {
    throw ParseError("checkpoint", 0, e.what());
  }
  const std::size_t n = shape.parameter_count();
  std::vector<double> weights(n);
  for (auto& v : weights) v = r.f64();
  PathwayMask mask(n);
  for (std::size_t byte = 0; byte < (n + 7) / 8; ++byte) {
    const std::uint8_t bits = r.u8();
    for (std::size_t b = 0; b < 8 && byte * 8 + b < n; ++b) mask[byte * 8 + b] = (bits >> b) & 1u;
  }
  try {
    return ModelState::from_parts(shape, std::move(weights), std::move(mask), version);
  } catch (const InvalidInput& e) {
    throw ParseError("checkpoint", 0, e.what());
  }
}

}  // namespace

std::string encode_model(const ModelState& model) {
  ByteWriter w;
  write_model(w, model);
  return w.take();
}

ModelState decode_model(std::string_view bytes) {
  ByteReader r(bytes);
  ModelState model = read_model(r);
  if (!r.done()) throw ParseError("checkpoint", 0, "trailing bytes after model block");
  return model;
}

std::string encode_run_checkpoint(const ModelState& model, const ReplayBuffer& buffer) {
  ByteWriter w;
  write_model(w, model);
  w.raw("BUF1");
  w.size32(buffer.capacity(), "capacity");
  w.u32(static_cast<std::uint32_t>(buffer.policy()));
  w.size32(buffer.task_order().size(), "task count");
  for (TaskId t : buffer.task_order()) {
    const auto& slots = buffer.task_slots(t);
    w.u32(t);
    w.u64(buffer.seen_count(t));
    w.size32(slots.size(), "slot count");
    for (const auto& s : slots) {
      if (s.sample.features.size() != model.d_in()) throw InvalidInput("buffered sample dimension differs from model");
      w.u64(s.sample.id);
      w.u32(s.sample.label);
      w.u8(static_cast<std::uint8_t>(s.sample.provenance));
      w.f64(s.sample.weight);
      w.f64(s.weight);
      w.f64(s.priority);
      for (double v : s.sample.features) w.f64(v);
    }
  }
  w.size32(buffer.references().size(), "reference count");
  for (const auto& [task, ref] : buffer.references()) {
    w.u32(task);
    w.f64(ref.reference_loss);
    w.size32(ref.eval_set_id.size(), "eval set id");
    w.raw(ref.eval_set_id);
  }
  return w.take();
}

RunCheckpoint decode_run_checkpoint(std::string_view bytes) {
  ByteReader r(bytes);
  ModelState model = read_model(r);
  if (r.raw(4) != "BUF1") throw ParseError("checkpoint", 0, "bad buffer magic, expected BUF1");
  const std::uint32_t capacity = r.u32();
  const std::uint32_t policy = r.u32();
  if (policy > 1) throw ParseError("checkpoint", 0, "unknown retention policy");
  const std::uint32_t n_tasks = r.u32();
  std::vector<TaskId> order;
  std::map<TaskId, std::vector<BufferSlot>> slots;
  std::map<TaskId, std::uint64_t> seen;
  for (std::uint32_t i = 0; i < n_tasks; ++i) {
    const TaskId t = r.u32();
    order.push_back(t);
    seen[t] = r.u64();
    const std::uint32_t n_slots = r.u32();
    auto& task_slots = slots[t];
    for (std::uint32_t k = 0; k < n_slots; ++k) {
      BufferSlot s;
      s.task_id = t;
      s.sample.id = r.u64();
      s.sample.label = r.u32();
      const std::uint8_t prov = r.u8();
      if (prov > static_cast<std::uint8_t>(Provenance::Replay)) throw ParseError("checkpoint", 0, "bad provenance");
      s.sample.provenance = static_cast<Provenance>(prov);
      s.sample.weight = r.f64();
      s.weight = r.f64();
      s.priority = r.f64();
      s.sample.features.resize(model.d_in());
      for (auto& v : s.sample.features) v = r.f64();
      task_slots.push_back(std::move(s));
    }
  }
  std::map<TaskId, TaskReference> refs;
  const std::uint32_t n_refs = r.u32();
  for (std::uint32_t i = 0; i < n_refs; ++i) {
    const TaskId t = r.u32();
    TaskReference ref;
    ref.reference_loss = r.f64();
    ref.eval_set_id = std::string(r.raw(r.u32()));
    refs[t] = std::move(ref);
  }
  if (!r.done()) throw ParseError("checkpoint", 0, "trailing bytes after buffer block");
  try {
    ReplayBuffer buffer = ReplayBuffer::restore(capacity, static_cast<RetentionPolicy>(policy), std::move(order),
                                                std::move(slots), std::move(seen), std::move(refs));
    return RunCheckpoint{std::move(model), std::move(buffer)};
  } catch (const InvalidInput& e) {
    throw ParseError("checkpoint", 0, e.what());
  }
}

void write_file(const std::string& path, std::string_view bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw std::runtime_error("write to " + path + " failed");
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError(path, 0, "cannot open file");
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

}  // namespace hai
