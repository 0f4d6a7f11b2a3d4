#include "drasp/training.hpp"

#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "drasp/random.hpp"

namespace drasp {

std::string_view to_string(OptimizerKind kind) { return kind == OptimizerKind::SGD ? "sgd" : "adamw"; }

std::optional<OptimizerKind> parse_optimizer_kind(std::string_view name) {
  if (name == "sgd") return OptimizerKind::SGD;
  if (name == "adamw") return OptimizerKind::AdamW;
  return std::nullopt;
}

TrainConfig TrainConfig::clap_preset() {
  TrainConfig c;
  c.optimizer = OptimizerKind::SGD;
  c.learning_rate = 5e-4;
  c.loss = {LossKind::MAE, 1.0, 1.0};
  c.batch_size = 64;
  c.patience = 20;
  return c;
}

TrainConfig TrainConfig::audiobox_preset() {
  TrainConfig c;
  c.optimizer = OptimizerKind::AdamW;
  c.learning_rate = 1e-4;
  c.loss = {LossKind::MAEPlusMSE, 1.0, 1.0};
  c.batch_size = 32;
  c.patience = 20;
  return c;
}

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0)) throw std::invalid_argument("learning rate must be positive");
  if (patience < 1) throw std::invalid_argument("patience must be at least 1");
  if (batch_size < 1) throw std::invalid_argument("batch size must be at least 1");
  if (!(beta1 >= 0.0 && beta1 < 1.0 && beta2 >= 0.0 && beta2 < 1.0)) {
    throw std::invalid_argument("AdamW betas must lie in [0, 1)");
  }
  if (!(epsilon > 0.0) || weight_decay < 0.0) throw std::invalid_argument("invalid AdamW epsilon or weight decay");
}

Sgd::Sgd(double learning_rate) : lr_(learning_rate) {
  if (!(lr_ > 0.0)) throw std::invalid_argument("learning rate must be positive");
}

void Sgd::step(const ParameterSet& params) {
  for (auto p : params.items()) {
    Tensor& value = p.var.mutable_value();
    const Tensor& grad = p.var.grad();
    for (std::size_t i = 0; i < value.size(); ++i) value[i] -= lr_ * grad[i];
  }
}

AdamW::AdamW(double learning_rate, double beta1, double beta2, double epsilon, double weight_decay)
    : lr_(learning_rate), beta1_(beta1), beta2_(beta2), eps_(epsilon), wd_(weight_decay) {
  if (!(lr_ > 0.0)) throw std::invalid_argument("learning rate must be positive");
}

void AdamW::step(const ParameterSet& params) {
  ++t_;
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (auto p : params.items()) {
    Tensor& value = p.var.mutable_value();
    const Tensor& grad = p.var.grad();
    auto [it, inserted] = moments_.try_emplace(p.name, Tensor::zeros(value.shape()), Tensor::zeros(value.shape()));
    auto& [m, v] = it->second;
    for (std::size_t i = 0; i < value.size(); ++i) {
      value[i] -= lr_ * wd_ * value[i];
      m[i] = beta1_ * m[i] + (1.0 - beta1_) * grad[i];
      v[i] = beta2_ * v[i] + (1.0 - beta2_) * grad[i] * grad[i];
      value[i] -= lr_ * (m[i] / c1) / (std::sqrt(v[i] / c2) + eps_);
    }
  }
}

std::unique_ptr<Optimizer> make_optimizer(const TrainConfig& config) {
  if (config.optimizer == OptimizerKind::SGD) return std::make_unique<Sgd>(config.learning_rate);
  return std::make_unique<AdamW>(config.learning_rate, config.beta1, config.beta2, config.epsilon,
                                 config.weight_decay);
}

namespace {

Var example_loss(const MosModel& model, const Example& ex, const LossSpec& spec) {
  const Tensor* cond = ex.conditioning ? &*ex.conditioning : nullptr;
  return loss(model.forward(ex.frames, cond), ex.targets, spec);
}

}  // namespace

double evaluate_loss(const MosModel& model, std::span<const Example> examples, const LossSpec& spec) {
  if (examples.empty()) throw std::invalid_argument("empty split");
  double total = 0.0;
  for (const auto& ex : examples) {
    const Tensor* cond = ex.conditioning ? &*ex.conditioning : nullptr;
    total += loss_value(model.predict(ex.frames, cond), ex.targets, spec);
  }
  return total / static_cast<double>(examples.size());
}

TrainResult train(MosModel& model, std::span<const Example> train_set, std::span<const Example> validation_set,
                  const TrainConfig& config, const TrainHooks& hooks) {
  config.validate();
  if (train_set.empty()) throw std::invalid_argument("empty split: train");
  if (validation_set.empty()) throw std::invalid_argument("empty split: validation");

  const ParameterSet& params = model.parameters();
  auto optimizer = make_optimizer(config);
  auto rng = make_rng(config.seed, {tag("train-order")});

  TrainResult result;
  result.best_validation_loss = std::numeric_limits<double>::infinity();
  auto best = params.snapshot();
  std::size_t since_best = 0;

  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  for (std::size_t epoch = 1; epoch <= config.max_epochs; ++epoch) {
    for (std::size_t i = order.size(); i > 1; --i) {
      const auto j = static_cast<std::size_t>(uniform_int(rng, 0, static_cast<std::int64_t>(i - 1)));
      std::swap(order[i - 1], order[j]);
    }

    double train_total = 0.0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t stop = std::min(start + config.batch_size, order.size());
      const double inv = 1.0 / static_cast<double>(stop - start);
      params.zero_grad();
      for (std::size_t k = start; k < stop; ++k) {
        Var l = example_loss(model, train_set[order[k]], config.loss);
        train_total += l.value().item();
        backward(scale(l, inv));
      }
      optimizer->step(params);
    }

    EpochRecord record{epoch, train_total / static_cast<double>(order.size()),
                       evaluate_loss(model, validation_set, config.loss)};
    if (hooks.validation_override) record.validation_loss = hooks.validation_override(epoch, record.validation_loss);
    result.history.push_back(record);
    if (hooks.on_epoch) hooks.on_epoch(record);

    if (record.validation_loss < result.best_validation_loss) {
      result.best_validation_loss = record.validation_loss;
      result.best_epoch = epoch;
      best = params.snapshot();
      since_best = 0;
    } else if (++since_best >= config.patience) {
      result.stopped_early = epoch < config.max_epochs;
      break;
    }
  }

  params.restore(best);
  if (result.best_epoch == 0) result.best_validation_loss = 0.0;
  return result;
}

}  // namespace drasp
