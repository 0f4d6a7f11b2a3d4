#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "drasp/model.hpp"

namespace drasp {

enum class OptimizerKind : std::uint8_t { SGD, AdamW };

std::string_view to_string(OptimizerKind kind);
std::optional<OptimizerKind> parse_optimizer_kind(std::string_view name);

struct TrainConfig {
  OptimizerKind optimizer = OptimizerKind::AdamW;
  double learning_rate = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double weight_decay = 0.01;
  LossSpec loss{LossKind::MAEPlusMSE, 1.0, 1.0};
  std::size_t batch_size = 32;
  std::size_t max_epochs = 200;
  std::size_t patience = 20;
  std::uint64_t seed = 0;

  /// SGD, lr 5e-4, MAE, batch 64, patience 20.
  static TrainConfig clap_preset();
  /// AdamW, lr 1e-4, MAE + MSE, batch 32, patience 20.
  static TrainConfig audiobox_preset();

  void validate() const;
};

class Optimizer {
 public:
  virtual ~Optimizer() = default;
  /// Applies one update using the gradients currently held by the parameters.
  virtual void step(const ParameterSet& params) = 0;
};

class Sgd final : public Optimizer {
 public:
  explicit Sgd(double learning_rate);
  void step(const ParameterSet& params) override;

 private:
  double lr_;
};

/// Adam with decoupled weight decay:
///   p <- p - lr * wd * p
///   m <- b1 m + (1 - b1) g,  v <- b2 v + (1 - b2) g^2
///   p <- p - lr * (m / (1 - b1^t)) / (sqrt(v / (1 - b2^t)) + eps)
class AdamW final : public Optimizer {
 public:
  AdamW(double learning_rate, double beta1, double beta2, double epsilon, double weight_decay);
  void step(const ParameterSet& params) override;
  std::size_t steps() const { return t_; }

 private:
  double lr_, beta1_, beta2_, eps_, wd_;
  std::size_t t_ = 0;
  std::map<std::string, std::pair<Tensor, Tensor>> moments_;
};

std::unique_ptr<Optimizer> make_optimizer(const TrainConfig& config);

/// One training or validation clip. `targets` has one entry per head.
struct Example {
  Tensor frames;
  std::optional<Tensor> conditioning;
  std::vector<double> targets;
};

struct EpochRecord {
  std::size_t epoch = 0;  // 1-based
  double train_loss = 0.0;
  double validation_loss = 0.0;
};

struct TrainResult {
  std::vector<EpochRecord> history;
  std::size_t best_epoch = 0;  // 0: no epoch ran, initial parameters kept
  double best_validation_loss = 0.0;
  bool stopped_early = false;
};

struct TrainHooks {
  /// Replaces the measured validation loss of an epoch.
  std::function<double(std::size_t epoch, double measured)> validation_override;
  std::function<void(const EpochRecord&)> on_epoch;
};

/// Mean per-clip loss of the model over a set of examples.
double evaluate_loss(const MosModel& model, std::span<const Example> examples, const LossSpec& spec);

/// Mini-batch training with early stopping on validation loss. Within a batch
/// clips are processed one at a time and their gradients averaged. On return
/// the model holds the parameters of the best validation epoch.
TrainResult train(MosModel& model, std::span<const Example> train_set, std::span<const Example> validation_set,
                  const TrainConfig& config, const TrainHooks& hooks = {});

}  // namespace drasp
