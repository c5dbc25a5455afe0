#include "hai/checkpoint.hpp"

#include <gtest/gtest.h>

#include <bit>
#include <cstring>
#include <filesystem>
#include <random>

#include "hai/error.hpp"
#include "oracles.hpp"

namespace hai {
namespace {

void expect_bit_identical(const ModelState& a, const ModelState& b) {
  ASSERT_EQ(a.shape(), b.shape());
  EXPECT_EQ(a.version(), b.version());
  EXPECT_EQ(a.pathway_mask(), b.pathway_mask());
  ASSERT_EQ(a.weights().size(), b.weights().size());
  for (std::size_t i = 0; i < a.weights().size(); ++i) {
    EXPECT_EQ(std::bit_cast<std::uint64_t>(a.weights()[i]), std::bit_cast<std::uint64_t>(b.weights()[i]));
  }
}

ModelState versioned(const ModelState& m, std::uint64_t version) {
  return ModelState::from_parts(m.shape(), {m.weights().begin(), m.weights().end()}, m.pathway_mask(), version);
}

TEST(Checkpoint, HeaderLayout) {
  const ModelShape shape{Architecture::Mlp, 3, 2, 5};
  const auto bytes = encode_model(versioned(ModelState::seeded(shape, 1), 7));
  ASSERT_GE(bytes.size(), 24u);
  EXPECT_EQ(bytes.substr(0, 4), "HAI1");
  auto u32 = [&](std::size_t off) {
    std::uint32_t v = 0;
    for (int i = 3; i >= 0; --i) v = (v << 8) | static_cast<unsigned char>(bytes[off + i]);
    return v;
  };
  EXPECT_EQ(u32(4), 7u);
  EXPECT_EQ(u32(8), 1u);  // Mlp
  EXPECT_EQ(u32(12), 3u);
  EXPECT_EQ(u32(16), 2u);
  EXPECT_EQ(u32(20), 5u);
  const std::size_t p = shape.parameter_count();
  EXPECT_EQ(bytes.size(), 24u + 8u * p + (p + 7) / 8);
  double first = 0.0;
  std::memcpy(&first, bytes.data() + 24, 8);
  EXPECT_EQ(first, ModelState::seeded(shape, 1).weights()[0]);
}

TEST(Checkpoint, ModelRoundTripIsBitExact) {
  std::mt19937_64 rng(1);
  for (int i = 0; i < 50; ++i) {
    const ModelShape shape = i % 2 ? ModelShape{Architecture::Mlp, 1 + static_cast<std::size_t>(i % 4), 3, 2}
                                   : ModelShape{Architecture::Logistic, 2, 2 + static_cast<std::size_t>(i % 3), 0};
    auto m = versioned(testing::random_model(shape, rng, 1e3), static_cast<std::uint64_t>(i));
    if (shape.has_shallow_pathway() && i % 3 == 0) m = m.with_pathway(Pathway::Shallow);
    expect_bit_identical(m, decode_model(encode_model(m)));
  }
}

TEST(Checkpoint, RejectsCorruptInput) {
  const auto good = encode_model(ModelState::seeded({Architecture::Logistic, 2, 2, 0}, 1));
  EXPECT_THROW(decode_model("HAI2" + good.substr(4)), ParseError);
  EXPECT_THROW(decode_model(good.substr(0, good.size() - 1)), ParseError);
  EXPECT_THROW(decode_model(good + "x"), ParseError);
  std::string bad_arch = good;
  bad_arch[8] = 9;
  EXPECT_THROW(decode_model(bad_arch), ParseError);
  EXPECT_THROW(decode_model(""), ParseError);
}

TEST(Checkpoint, RunCheckpointCarriesBuffer) {
  const ModelShape shape{Architecture::Logistic, 2, 3, 0};
  ReplayBuffer buf(5, RetentionPolicy::UncertaintyWeighted);
  for (SampleId i = 0; i < 12; ++i) {
    buf.insert({i, {0.1 * static_cast<double>(i), -1.0 / static_cast<double>(i + 1)}, static_cast<ClassLabel>(i % 3),
                i % 2 ? Provenance::Human : Provenance::Rule, i % 2 ? 1.0 : 0.5},
               i % 2, 9, 1.0 + static_cast<double>(i));
  }
  buf.set_reference(0, 0.25, "task-0");
  buf.set_reference(1, 1.0 / 3.0, "task-1");
  const auto model = versioned(ModelState::seeded(shape, 3), 11);
  const auto back = decode_run_checkpoint(encode_run_checkpoint(model, buf));
  expect_bit_identical(model, back.model);
  EXPECT_EQ(back.buffer.capacity(), 5u);
  EXPECT_EQ(back.buffer.policy(), RetentionPolicy::UncertaintyWeighted);
  EXPECT_EQ(back.buffer.task_order(), buf.task_order());
  EXPECT_EQ(back.buffer.seen_counts(), buf.seen_counts());
  const auto a = buf.slots(), b = back.buffer.slots();
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].sample.id, b[i].sample.id);
    EXPECT_EQ(a[i].sample.features, b[i].sample.features);
    EXPECT_EQ(a[i].sample.label, b[i].sample.label);
    EXPECT_EQ(a[i].sample.provenance, b[i].sample.provenance);
    EXPECT_EQ(a[i].sample.weight, b[i].sample.weight);
    EXPECT_EQ(a[i].weight, b[i].weight);
    EXPECT_EQ(a[i].priority, b[i].priority);
  }
  EXPECT_EQ(back.buffer.references().at(1).reference_loss, 1.0 / 3.0);
  EXPECT_EQ(back.buffer.references().at(1).eval_set_id, "task-1");
  // Re-encoding the decoded state reproduces the bytes.
  EXPECT_EQ(encode_run_checkpoint(back.model, back.buffer), encode_run_checkpoint(model, buf));
}

TEST(Checkpoint, FileRoundTrip) {
  const auto path = (std::filesystem::temp_directory_path() / "hai_checkpoint_test.bin").string();
  const auto bytes = encode_model(ModelState::seeded({Architecture::Mlp, 2, 2, 3}, 5));
  write_file(path, bytes);
  EXPECT_EQ(read_file(path), bytes);
  std::filesystem::remove(path);
  EXPECT_THROW(read_file(path), ParseError);
}

}  // namespace
}  // namespace hai
