#include "hai/learner.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include <spdlog/spdlog.h>

#include "hai/error.hpp"

namespace hai {

std::string_view to_string(Provenance p) {
  switch (p) {
    case Provenance::Seed: return "seed";
    case Provenance::Oracle: return "oracle";
    case Provenance::Human: return "human";
    case Provenance::Rule: return "rule";
    case Provenance::Replay: return "replay";
  }
  return "unknown";
}

void validate_batch(const Batch& batch, std::size_t d_in) {
  if (batch.empty()) throw InvalidInput("batch is empty");
  for (const auto& s : batch.samples) {
    if (s.features.size() != d_in) {
      throw InvalidInput("sample " + std::to_string(s.id) + " has " + std::to_string(s.features.size()) +
                         " features, expected " + std::to_string(d_in));
    }
  }
}

std::string_view to_string(Architecture a) {
  return a == Architecture::Logistic ? "logistic" : "mlp";
}

std::string_view to_string(Pathway p) { return p == Pathway::Full ? "full" : "shallow"; }

std::size_t ModelShape::parameter_count() const {
  std::size_t n = 0;
  for (const auto& layer : dense_layers(*this)) n += layer.size();
  return n;
}

void ModelShape::validate() const {
  if (d_in == 0) throw InvalidInput("d_in must be positive");
  if (n_classes < 2) throw InvalidInput("n_classes must be at least 2");
  if (architecture == Architecture::Mlp && hidden == 0) throw InvalidInput("mlp needs hidden > 0");
  if (architecture == Architecture::Logistic && hidden != 0) {
    throw InvalidInput("logistic model must have hidden = 0");
  }
}

std::vector<DenseLayer> dense_layers(const ModelShape& shape) {
  if (shape.architecture == Architecture::Logistic) return {{shape.d_in, shape.n_classes, 0}};
  DenseLayer hidden{shape.d_in, shape.hidden, 0};
  DenseLayer output{shape.hidden, shape.n_classes, hidden.size()};
  return {hidden, output};
}

PathwayMask pathway_mask(const ModelShape& shape, Pathway pathway) {
  PathwayMask mask(shape.parameter_count(), true);
  if (pathway == Pathway::Full) return mask;
  if (!shape.has_shallow_pathway()) throw InvalidInput("logistic model has no shallow pathway");
  const auto layers = dense_layers(shape);
  const auto& out = layers.back();
  std::fill(mask.begin(), mask.begin() + static_cast<std::ptrdiff_t>(out.offset), false);
  return mask;
}

FlopProfile flop_profile(const ModelShape& shape, const PathwayMask& mask) {
  std::uint64_t mac = 0;
  for (const auto& layer : dense_layers(shape)) {
    auto first = mask.begin() + static_cast<std::ptrdiff_t>(layer.offset);
    if (std::any_of(first, first + static_cast<std::ptrdiff_t>(layer.size()), [](bool b) { return b; })) {
      mac += layer.multiply_adds();
    }
  }
  return {2 * mac, 4 * mac};
}

ModelState::ModelState(ModelShape shape, std::vector<double> weights, PathwayMask mask,
                       std::uint64_t version)
    : shape_(shape),
      weights_(std::move(weights)),
      mask_(std::move(mask)),
      flops_(flop_profile(shape_, mask_)),
      version_(version) {}

ModelState ModelState::zeros(const ModelShape& shape) {
  shape.validate();
  const std::size_t n = shape.parameter_count();
  return ModelState(shape, std::vector<double>(n, 0.0), PathwayMask(n, true), 0);
}

ModelState ModelState::seeded(const ModelShape& shape, std::uint64_t seed) {
  shape.validate();
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(-0.1, 0.1);
  std::vector<double> w(shape.parameter_count());
  for (auto& v : w) v = dist(rng);
  return ModelState(shape, std::move(w), PathwayMask(shape.parameter_count(), true), 0);
}

ModelState ModelState::from_parts(const ModelShape& shape, std::vector<double> weights, PathwayMask mask,
                                  std::uint64_t version) {
  shape.validate();
  const std::size_t n = shape.parameter_count();
  if (weights.size() != n || mask.size() != n) {
    throw InvalidInput("expected " + std::to_string(n) + " parameters, got " +
                       std::to_string(weights.size()) + " weights and " + std::to_string(mask.size()) +
                       " mask bits");
  }
  if (!std::all_of(weights.begin(), weights.end(), [](double v) { return std::isfinite(v); })) {
    throw InvalidInput("weights must be finite");
  }
  return ModelState(shape, std::move(weights), std::move(mask), version);
}

ModelState ModelState::with_pathway(Pathway pathway) const {
  return ModelState(shape_, weights_, hai::pathway_mask(shape_, pathway), version_);
}

ModelState ModelState::with_mask(PathwayMask mask) const {
  if (mask.size() != weights_.size()) throw InvalidInput("mask size mismatch");
  return ModelState(shape_, weights_, std::move(mask), version_);
}

namespace {

void check_input(const ModelState& model, std::span<const double> x) {
  if (x.size() != model.d_in()) {
    throw InvalidInput("feature vector has " + std::to_string(x.size()) + " entries, model expects " +
                       std::to_string(model.d_in()));
  }
}

// out[r] = bias_r + sum_j W[r][j] * in[j]
void dense_forward(std::span<const double> w, const DenseLayer& layer, std::span<const double> in,
                   std::span<double> out) {
  for (std::size_t r = 0; r < layer.out; ++r) {
    const double* row = w.data() + layer.offset + r * (layer.in + 1);
    double acc = row[layer.in];
    for (std::size_t j = 0; j < layer.in; ++j) acc += row[j] * in[j];
    out[r] = acc;
  }
}

struct Activations {
  std::vector<double> hidden;  // tanh outputs, MLP only
  std::vector<double> logits;
};

void forward(const ModelShape& shape, std::span<const double> w, std::span<const double> x, Activations& act) {
  const auto layers = dense_layers(shape);
  act.logits.resize(shape.n_classes);
  if (shape.architecture == Architecture::Logistic) {
    dense_forward(w, layers[0], x, act.logits);
    return;
  }
  act.hidden.resize(shape.hidden);
  dense_forward(w, layers[0], x, act.hidden);
  for (auto& h : act.hidden) h = std::tanh(h);
  dense_forward(w, layers[1], act.hidden, act.logits);
}

double log_sum_exp(std::span<const double> z) {
  const double m = *std::max_element(z.begin(), z.end());
  double s = 0.0;
  for (double v : z) s += std::exp(v - m);
  return m + std::log(s);
}

void softmax_into(std::span<const double> z, std::span<double> p) {
  const double m = *std::max_element(z.begin(), z.end());
  double s = 0.0;
  for (std::size_t c = 0; c < z.size(); ++c) {
    p[c] = std::exp(z[c] - m);
    s += p[c];
  }
  for (auto& v : p) v /= s;
}

ClassLabel argmax(std::span<const double> z) {
  return static_cast<ClassLabel>(std::max_element(z.begin(), z.end()) - z.begin());
}

void check_label(const ModelShape& shape, const LabeledSample& s) {
  if (s.label >= shape.n_classes) {
    throw InvalidInput("label " + std::to_string(s.label) + " out of range for " +
                       std::to_string(shape.n_classes) + " classes");
  }
  if (!std::isfinite(s.weight) || s.weight < 0.0) throw InvalidInput("sample weight must be finite and >= 0");
}

// Accumulates weight * d(loss)/d(params) for one sample into grad; returns the unweighted loss.
double accumulate_gradient(const ModelShape& shape, std::span<const double> w, const LabeledSample& s,
                           Activations& act, std::vector<double>& probs, std::vector<double>& grad) {
  forward(shape, w, s.features, act);
  const double loss = log_sum_exp(act.logits) - act.logits[s.label];
  probs.resize(shape.n_classes);
  softmax_into(act.logits, probs);

  const auto layers = dense_layers(shape);
  const DenseLayer& out = layers.back();
  std::span<const double> out_in =
      shape.architecture == Architecture::Logistic ? std::span<const double>(s.features) : act.hidden;

  // dL/dz_c = p_c - [c == y]
  for (std::size_t c = 0; c < out.out; ++c) {
    const double dz = s.weight * (probs[c] - (c == s.label ? 1.0 : 0.0));
    double* row = grad.data() + out.offset + c * (out.in + 1);
    for (std::size_t j = 0; j < out.in; ++j) row[j] += dz * out_in[j];
    row[out.in] += dz;
  }
  if (shape.architecture == Architecture::Logistic) return loss;

  const DenseLayer& hid = layers.front();
  for (std::size_t h = 0; h < hid.out; ++h) {
    double da = 0.0;
    for (std::size_t c = 0; c < out.out; ++c) {
      const double dz = s.weight * (probs[c] - (c == s.label ? 1.0 : 0.0));
      da += dz * w[out.offset + c * (out.in + 1) + h];
    }
    const double dpre = da * (1.0 - act.hidden[h] * act.hidden[h]);
    double* row = grad.data() + hid.offset + h * (hid.in + 1);
    for (std::size_t j = 0; j < hid.in; ++j) row[j] += dpre * s.features[j];
    row[hid.in] += dpre;
  }
  return loss;
}

}  // namespace

std::vector<double> logits(const ModelState& model, std::span<const double> x) {
  check_input(model, x);
  Activations act;
  forward(model.shape(), model.weights(), x, act);
  return act.logits;
}

std::vector<double> predict_proba(const ModelState& model, std::span<const double> x) {
  auto z = logits(model, x);
  std::vector<double> p(z.size());
  softmax_into(z, p);
  return p;
}

ClassLabel predict(const ModelState& model, std::span<const double> x) { return argmax(logits(model, x)); }

std::vector<double> explain(const ModelState& model, std::span<const double> x, ClassLabel cls) {
  check_input(model, x);
  if (cls >= model.n_classes()) throw InvalidInput("class out of range");
  const auto w = model.weights();
  const auto layers = dense_layers(model.shape());
  std::vector<double> contrib(model.d_in(), 0.0);
  if (model.architecture() == Architecture::Logistic) {
    const double* row = w.data() + cls * (model.d_in() + 1);
    for (std::size_t j = 0; j < model.d_in(); ++j) contrib[j] = row[j] * x[j];
    return contrib;
  }
  Activations act;
  forward(model.shape(), model.weights(), x, act);
  const DenseLayer& hid = layers.front();
  const DenseLayer& out = layers.back();
  for (std::size_t h = 0; h < hid.out; ++h) {
    const double back = w[out.offset + cls * (out.in + 1) + h] * (1.0 - act.hidden[h] * act.hidden[h]);
    const double* row = w.data() + hid.offset + h * (hid.in + 1);
    for (std::size_t j = 0; j < hid.in; ++j) contrib[j] += back * row[j];
  }
  for (std::size_t j = 0; j < contrib.size(); ++j) contrib[j] *= x[j];
  return contrib;
}

LossReport evaluate(const ModelState& model, const Batch& batch) {
  validate_batch(batch, model.d_in());
  Activations act;
  double total = 0.0;
  std::size_t correct = 0;
  for (const auto& s : batch.samples) {
    check_label(model.shape(), s);
    forward(model.shape(), model.weights(), s.features, act);
    total += log_sum_exp(act.logits) - act.logits[s.label];
    if (argmax(act.logits) == s.label) ++correct;
  }
  const double n = static_cast<double>(batch.size());
  return {std::max(0.0, total / n), static_cast<double>(correct) / n, batch.size()};
}

LossGradient loss_and_gradient(const ModelState& model, const Batch& batch) {
  validate_batch(batch, model.d_in());
  LossGradient out;
  out.gradient.assign(model.shape().parameter_count(), 0.0);
  Activations act;
  std::vector<double> probs;
  double total = 0.0;
  for (const auto& s : batch.samples) {
    check_label(model.shape(), s);
    total += s.weight * accumulate_gradient(model.shape(), model.weights(), s, act, probs, out.gradient);
  }
  const double n = static_cast<double>(batch.size());
  out.loss = total / n;
  for (auto& g : out.gradient) g /= n;
  return out;
}

std::uint64_t update_flops(const FlopProfile& profile, std::size_t batch_size, int epochs) {
  return static_cast<std::uint64_t>(epochs) * batch_size * profile.per_sample();
}

UpdateResult update(const ModelState& model, const Batch& batch, const UpdateConfig& config) {
  validate_batch(batch, model.d_in());
  if (config.epochs < 1) throw InvalidInput("epochs must be >= 1");
  if (!(config.learning_rate >= 0.0) || !std::isfinite(config.learning_rate)) {
    throw InvalidInput("learning rate must be finite and non-negative");
  }
  for (const auto& s : batch.samples) check_label(model.shape(), s);

  const ModelState start = config.pathway ? model.with_pathway(*config.pathway) : model;
  const PathwayMask& mask = start.pathway_mask();
  const std::uint64_t per_sample = start.flops().per_sample();
  std::vector<double> w(start.weights().begin(), start.weights().end());
  const std::size_t n = batch.size();
  const std::size_t mb = config.batch_size == 0 ? n : std::min(config.batch_size, n);

  UpdateResult result{start, 0, UpdateStatus::Ok, 0};
  double previous_epoch_loss = std::numeric_limits<double>::infinity();
  std::vector<double> grad(w.size());
  std::vector<double> probs;
  Activations act;

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    double epoch_loss = 0.0;
    for (std::size_t begin = 0; begin < n; begin += mb) {
      const std::size_t end = std::min(n, begin + mb);
      std::fill(grad.begin(), grad.end(), 0.0);
      for (std::size_t i = begin; i < end; ++i) {
        epoch_loss +=
            batch.samples[i].weight * accumulate_gradient(start.shape(), w, batch.samples[i], act, probs, grad);
      }
      result.flops += (end - begin) * per_sample;
      const double scale = 1.0 / static_cast<double>(end - begin);
      for (std::size_t k = 0; k < w.size(); ++k) {
        if (!std::isfinite(grad[k])) {
          spdlog::warn("update aborted: non-finite gradient at parameter {}", k);
          result.model = model;
          result.status = UpdateStatus::NonFiniteGradient;
          return result;
        }
      }
      for (std::size_t k = 0; k < w.size(); ++k) {
        if (mask[k]) w[k] -= config.learning_rate * grad[k] * scale;
      }
      if (!std::all_of(w.begin(), w.end(), [](double v) { return std::isfinite(v); })) {
        spdlog::warn("update aborted: weights diverged");
        result.model = model;
        result.status = UpdateStatus::NonFiniteGradient;
        return result;
      }
    }
    epoch_loss /= static_cast<double>(n);
    if (epoch_loss > previous_epoch_loss + config.loss_increase_tolerance) {
      ++result.loss_increase_epochs;
      spdlog::debug("training loss rose from {} to {} in epoch {}", previous_epoch_loss, epoch_loss, epoch);
    }
    previous_epoch_loss = epoch_loss;
  }

  result.model = ModelState::from_parts(start.shape(), std::move(w), mask, start.version() + 1);
  return result;
}

double regularizer(const ModelState& model, double scale) {
  const auto w = model.weights();
  const auto& mask = model.pathway_mask();
  double sum = 0.0;
  for (std::size_t k = 0; k < w.size(); ++k) {
    if (mask[k]) sum += w[k] * w[k];
  }
  return scale * sum;
}

ModelState meta_init(const ModelState& init, const TaskSampler& sampler, const MetaInitConfig& config,
                     std::uint64_t seed) {
  if (config.steps < 1) throw InvalidInput("meta_init needs steps >= 1");
  if (config.tasks_per_step < 1) throw InvalidInput("meta_init needs tasks_per_step >= 1");
  std::mt19937_64 rng(seed);
  const UpdateConfig inner{config.inner_lr, config.inner_epochs, 0, Pathway::Full, 1e-6};
  ModelState theta = init.with_pathway(Pathway::Full);
  std::vector<double> mean(theta.weights().size());

  for (std::size_t step = 0; step < config.steps; ++step) {
    std::fill(mean.begin(), mean.end(), 0.0);
    for (std::size_t t = 0; t < config.tasks_per_step; ++t) {
      const Batch task = sampler(rng);
      validate_batch(task, theta.d_in());
      const UpdateResult adapted = update(theta, task, inner);
      const auto phi = adapted.model.weights();
      for (std::size_t k = 0; k < mean.size(); ++k) mean[k] += phi[k];
    }
    for (auto& v : mean) v /= static_cast<double>(config.tasks_per_step);
    std::vector<double> next(mean.size());
    const auto w = theta.weights();
    for (std::size_t k = 0; k < next.size(); ++k) next[k] = std::lerp(w[k], mean[k], config.outer_lr);
    theta = ModelState::from_parts(theta.shape(), std::move(next), theta.pathway_mask(), theta.version() + 1);
  }
  return theta.with_mask(init.pathway_mask());
}

}  // namespace hai
