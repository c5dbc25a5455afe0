#pragma once

// Small incremental classifiers: multinomial logistic regression and a one-hidden-layer
// tanh MLP, trained with plain mini-batch SGD and exact FLOP accounting.
//
// Parameter layout is "augmented row-major": every dense layer stores `out` rows of
// `in + 1` values, the `in` input weights followed by the bias. Layers are stored in
// forward order. For the logistic head this gives n_classes * (d_in + 1) values; the MLP
// adds a hidden layer of hidden * (d_in + 1) values in front of the output layer.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <span>
#include <string_view>
#include <vector>

#include "hai/types.hpp"

namespace hai {

enum class Architecture : std::uint32_t { Logistic = 0, Mlp = 1 };

/// Which coordinates an update may touch. Shallow unlocks only the output layer.
enum class Pathway : std::uint8_t { Full, Shallow };

std::string_view to_string(Architecture a);
std::string_view to_string(Pathway p);

struct ModelShape {
  Architecture architecture = Architecture::Logistic;
  std::size_t d_in = 0;
  std::size_t n_classes = 2;
  std::size_t hidden = 0;  // 0 for Logistic

  [[nodiscard]] std::size_t parameter_count() const;
  [[nodiscard]] bool has_shallow_pathway() const { return architecture == Architecture::Mlp; }
  void validate() const;

  friend bool operator==(const ModelShape&, const ModelShape&) = default;
};

struct DenseLayer {
  std::size_t in = 0;
  std::size_t out = 0;
  std::size_t offset = 0;  // first parameter index

  [[nodiscard]] std::size_t size() const { return (in + 1) * out; }
  [[nodiscard]] std::size_t multiply_adds() const { return in * out; }
};

std::vector<DenseLayer> dense_layers(const ModelShape& shape);

/// Per-sample FLOPs. Forward counts 2 FLOPs per multiply-add of every dense layer that has at
/// least one trainable coordinate; backward is twice forward.
struct FlopProfile {
  std::uint64_t forward = 0;
  std::uint64_t backward = 0;

  [[nodiscard]] std::uint64_t per_sample() const { return forward + backward; }
  friend bool operator==(const FlopProfile&, const FlopProfile&) = default;
};

using PathwayMask = std::vector<bool>;

PathwayMask pathway_mask(const ModelShape& shape, Pathway pathway);
FlopProfile flop_profile(const ModelShape& shape, const PathwayMask& mask);

/// Immutable versioned model value. Updates produce new values.
class ModelState {
 public:
  static ModelState zeros(const ModelShape& shape);
  /// Weights drawn uniformly from [-0.1, 0.1] with a seeded mt19937_64.
  static ModelState seeded(const ModelShape& shape, std::uint64_t seed);
  /// Throws InvalidInput on size mismatch or non-finite weights.
  static ModelState from_parts(const ModelShape& shape, std::vector<double> weights, PathwayMask mask,
                               std::uint64_t version);

  [[nodiscard]] ModelState with_pathway(Pathway pathway) const;
  [[nodiscard]] ModelState with_mask(PathwayMask mask) const;

  [[nodiscard]] const ModelShape& shape() const { return shape_; }
  [[nodiscard]] Architecture architecture() const { return shape_.architecture; }
  [[nodiscard]] std::size_t d_in() const { return shape_.d_in; }
  [[nodiscard]] std::size_t n_classes() const { return shape_.n_classes; }
  [[nodiscard]] std::uint64_t version() const { return version_; }
  [[nodiscard]] std::span<const double> weights() const { return weights_; }
  [[nodiscard]] const PathwayMask& pathway_mask() const { return mask_; }
  [[nodiscard]] const FlopProfile& flops() const { return flops_; }

 private:
  ModelState(ModelShape shape, std::vector<double> weights, PathwayMask mask, std::uint64_t version);

  ModelShape shape_;
  std::vector<double> weights_;
  PathwayMask mask_;
  FlopProfile flops_;
  std::uint64_t version_ = 0;
};

std::vector<double> logits(const ModelState& model, std::span<const double> x);
std::vector<double> predict_proba(const ModelState& model, std::span<const double> x);
/// Argmax of the logits, lowest index on ties.
ClassLabel predict(const ModelState& model, std::span<const double> x);

/// Per-feature contribution to the predicted class logit: exactly w_c * x for the logistic
/// head, gradient-times-input for the MLP.
std::vector<double> explain(const ModelState& model, std::span<const double> x, ClassLabel cls);

struct LossReport {
  double mean_loss = 0.0;  // cross-entropy, nats
  double accuracy = 0.0;
  std::size_t n = 0;
};

LossReport evaluate(const ModelState& model, const Batch& batch);

struct LossGradient {
  double loss = 0.0;  // sum(weight_i * nll_i) / n, so weak labels pull less than direct ones
  std::vector<double> gradient;
};

/// Analytic gradient of the weighted cross-entropy over all parameters (mask ignored).
LossGradient loss_and_gradient(const ModelState& model, const Batch& batch);

struct UpdateConfig {
  double learning_rate = 0.1;
  int epochs = 1;
  std::size_t batch_size = 0;  // 0 = full batch
  /// Replaces the model's mask for this update when set.
  std::optional<Pathway> pathway;
  /// An epoch's mean loss may exceed the previous epoch's by this much before it is flagged.
  double loss_increase_tolerance = 1e-6;
};

enum class UpdateStatus : std::uint8_t { Ok, NonFiniteGradient };

struct UpdateResult {
  ModelState model;
  std::uint64_t flops = 0;
  UpdateStatus status = UpdateStatus::Ok;
  std::size_t loss_increase_epochs = 0;
};

/// One incremental step M_{t+1} = f(M_t, D_t) with f = masked mini-batch SGD.
/// On a non-finite gradient the input model is returned unchanged with NonFiniteGradient.
UpdateResult update(const ModelState& model, const Batch& batch, const UpdateConfig& config);

/// FLOPs `update` will report for a successful run; usable before execution.
std::uint64_t update_flops(const FlopProfile& profile, std::size_t batch_size, int epochs);

/// Default scale applied to the squared L2 norm in `regularizer`.
inline constexpr double kRegularizerScale = 1.0;

/// scale * sum of squared trainable weights.
double regularizer(const ModelState& model, double scale = kRegularizerScale);

struct MetaInitConfig {
  std::size_t steps = 1;
  std::size_t tasks_per_step = 1;
  double inner_lr = 0.1;
  int inner_epochs = 1;
  double outer_lr = 0.1;
};

using TaskSampler = std::function<Batch(std::mt19937_64&)>;

/// Reptile-style initialization: each step adapts copies of the current weights to sampled
/// tasks and interpolates toward the mean adapted weights by `outer_lr`.
ModelState meta_init(const ModelState& init, const TaskSampler& sampler, const MetaInitConfig& config,
                     std::uint64_t seed);

}  // namespace hai
