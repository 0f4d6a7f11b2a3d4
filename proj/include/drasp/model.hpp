#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "drasp/autograd.hpp"
#include "drasp/pooling.hpp"

namespace drasp {

/// Affine map y = W x + b applied to vectors or to every row of a matrix.
struct Dense {
  Var weight;  // out x in
  Var bias;    // out

  static Dense create(ParameterSet& params, const std::string& prefix, std::size_t in, std::size_t out,
                      std::mt19937_64& rng, bool zero = false);
  Var rows(const Var& x) const;
  Var vec(const Var& x) const;
};

/// Two-layer tanh perceptron applied frame by frame; a stand-in for a
/// pre-trained audio encoder.
class FrameEncoder {
 public:
  FrameEncoder(ParameterSet& params, std::size_t input_width, std::size_t hidden_width, std::size_t output_width,
               std::mt19937_64& rng);
  Var forward(const Var& frames) const;
  std::size_t output_width() const { return output_.weight.value().rows(); }

 private:
  Dense hidden_;
  Dense output_;
};

struct HeadSpec {
  std::string name;
  bool use_conditioning = false;
};

/// MLP from the pooled embedding (optionally concatenated with the clip's
/// conditioning vector) to one score.
class PredictionHead {
 public:
  PredictionHead(ParameterSet& params, const HeadSpec& spec, std::size_t input_width, std::size_t hidden_width,
                 double output_bias, bool zero_output, std::mt19937_64& rng);
  Var forward(const Var& embedding) const;
  const HeadSpec& spec() const { return spec_; }

 private:
  HeadSpec spec_;
  Dense hidden_;
  Dense output_;
};

struct ModelConfig {
  std::size_t input_width = 16;
  std::size_t encoder_hidden = 64;
  std::size_t embed_width = 16;
  PoolingConfig pooling;
  std::vector<HeadSpec> heads{{"mos", false}};
  std::size_t conditioning_width = 0;
  std::size_t head_hidden = 32;
  double output_bias = 3.0;
  /// Zero weights and bias in every head's last layer.
  bool zero_init_output = false;
  std::uint64_t init_seed = 0;

  void validate() const;
};

/// Frame encoder, one pooling layer and K prediction heads.
class MosModel {
 public:
  explicit MosModel(ModelConfig config);
  MosModel(const MosModel&) = delete;
  MosModel& operator=(const MosModel&) = delete;
  MosModel(MosModel&&) = default;
  MosModel& operator=(MosModel&&) = default;

  /// Scores in head order. `conditioning` is required iff some head uses it.
  std::vector<Var> forward(const Tensor& frames, const Tensor* conditioning = nullptr) const;
  std::map<std::string, Var> forward_named(const Tensor& frames, const Tensor* conditioning = nullptr) const;
  std::vector<double> predict(const Tensor& frames, const Tensor* conditioning = nullptr) const;

  /// Pooled embedding before the heads.
  Var embed(const Tensor& frames) const;

  const ModelConfig& config() const { return config_; }
  const ParameterSet& parameters() const { return params_; }
  const PoolingLayer& pooling() const { return *pooling_; }
  std::vector<std::string> head_names() const;

 private:
  ModelConfig config_;
  ParameterSet params_;
  std::optional<FrameEncoder> encoder_;
  std::optional<PoolingLayer> pooling_;
  std::vector<PredictionHead> heads_;
};

enum class LossKind : std::uint8_t { MAE, MSE, MAEPlusMSE };

std::string_view to_string(LossKind kind);
std::optional<LossKind> parse_loss_kind(std::string_view name);

struct LossSpec {
  LossKind kind = LossKind::MAE;
  double mae_weight = 1.0;
  double mse_weight = 1.0;
};

/// Mean loss over paired scalar predictions and targets.
Var loss(const std::vector<Var>& predictions, std::span<const double> targets, const LossSpec& spec);
double loss_value(std::span<const double> predictions, std::span<const double> targets, const LossSpec& spec);

}  // namespace drasp
