#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

namespace hai {

using FeatureVector = std::vector<double>;
using SampleId = std::uint64_t;
using TaskId = std::uint32_t;
using ClassLabel = std::uint32_t;
/// Logical time. In simulation one slot is one carbon-intensity trace slot.
using Slot = std::int64_t;

enum class Provenance : std::uint8_t { Seed, Oracle, Human, Rule, Replay };

std::string_view to_string(Provenance p);

struct LabeledSample {
  SampleId id = 0;
  FeatureVector features;
  ClassLabel label = 0;
  Provenance provenance = Provenance::Oracle;
  /// Scales this sample's loss and gradient. Weak (rule) labels use a weight below 1.
  double weight = 1.0;
};

struct UnlabeledSample {
  SampleId id = 0;
  FeatureVector features;
};

struct Batch {
  std::vector<LabeledSample> samples;
  TaskId task_id = 0;

  [[nodiscard]] std::size_t size() const { return samples.size(); }
  [[nodiscard]] bool empty() const { return samples.empty(); }
};

/// Throws InvalidInput unless the batch is non-empty and every feature vector has `d_in` entries.
void validate_batch(const Batch& batch, std::size_t d_in);

}  // namespace hai
