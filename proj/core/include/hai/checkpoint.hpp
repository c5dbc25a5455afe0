#pragma once

// Binary checkpoints. All integers are little-endian u32 unless noted, reals little-endian f64.
//
// Model block:
//   "HAI1" | version | architecture | d_in | n_classes | hidden_width (0 for logistic)
//   | weights (f64, augmented row-major, see learner.hpp) | pathway mask (packed bits, LSB first,
//   ceil(P/8) bytes)
//
// Run checkpoint = model block followed by a buffer block:
//   "BUF1" | capacity | policy | n_tasks
//   | per task in arrival order: task_id | seen (u64) | n_slots
//       | per slot: sample_id (u64) | label | provenance (u8) | sample weight | retention weight
//                   | priority | features (d_in x f64)
//   | n_refs | per reference: task_id | reference_loss | id length | id bytes

#include <string>
#include <string_view>

#include "hai/learner.hpp"
#include "hai/memory.hpp"

namespace hai {

std::string encode_model(const ModelState& model);
/// Throws ParseError on bad magic, truncation, unknown architecture, or trailing bytes.
ModelState decode_model(std::string_view bytes);

struct RunCheckpoint {
  ModelState model;
  ReplayBuffer buffer;
};

std::string encode_run_checkpoint(const ModelState& model, const ReplayBuffer& buffer);
RunCheckpoint decode_run_checkpoint(std::string_view bytes);

void write_file(const std::string& path, std::string_view bytes);
std::string read_file(const std::string& path);

}  // namespace hai
