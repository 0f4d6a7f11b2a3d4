#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "drasp/autograd.hpp"

namespace drasp {

/// A T x d sequence of frame embeddings, T >= 1.
class FrameMatrix {
 public:
  explicit FrameMatrix(Var frames);
  explicit FrameMatrix(Tensor frames) : FrameMatrix(Var::constant(std::move(frames))) {}

  const Var& frames() const { return frames_; }
  std::size_t length() const { return frames_.value().rows(); }
  std::size_t width() const { return frames_.value().cols(); }

 private:
  Var frames_;
};

/// Scoring function z = v^T tanh(W a + b) for one attention head.
struct AttentionParams {
  Var weight;  // d_attn x d
  Var bias;    // d_attn
  Var vector;  // d_attn

  std::size_t input_width() const { return weight.value().cols(); }
  std::size_t hidden_width() const { return weight.value().rows(); }

  /// Constant (non-trainable) parameters from explicit tensors.
  static AttentionParams fixed(Tensor weight, Tensor bias, Tensor vector);
  /// Leaves for gradient checks, not registered anywhere.
  static AttentionParams leaves(Tensor weight, Tensor bias, Tensor vector);
  /// Registers W, b, v under `prefix` with W, v ~ U(-1/sqrt(fan_in), 1/sqrt(fan_in)) and b = 0.
  static AttentionParams create(ParameterSet& params, const std::string& prefix, std::size_t input_width,
                                std::size_t hidden_width, std::mt19937_64& rng);
};

struct FusionParams {
  Var alpha;
  Var beta;

  /// Registers alpha = 1, beta = 0.
  static FusionParams create(ParameterSet& params, const std::string& prefix);
  static FusionParams fixed(double alpha, double beta);
  static FusionParams leaves(double alpha, double beta);
};

enum class PartialSegment { Include, Drop };

struct SegmentationSpec {
  std::size_t segment_length = 1;
  PartialSegment partial = PartialSegment::Include;

  std::size_t segment_count(std::size_t frames) const;
};

struct PooledStats {
  Var mean;
  Var std;

  /// [mean; std]
  Var concat() const;
};

Var average_pool(const FrameMatrix& x);

/// Unweighted mean and population standard deviation over frames.
PooledStats statistics_pool(const FrameMatrix& x);

/// Softmax over the per-row scores v^T tanh(W a_s + b) of an S x d matrix.
Var attention_weights(const Var& items, const AttentionParams& p, double temperature = 1.0);

/// Attention-weighted mean of the frames (d outputs).
Var attentive_pool(const FrameMatrix& x, const AttentionParams& p, double temperature = 1.0);

/// Weighted mean and weighted standard deviation of the rows of `items`.
/// Weights must be non-negative and sum to one within 1e-9.
PooledStats attentive_statistics_over(const Var& items, const Var& weights);

PooledStats attentive_statistics_pool(const FrameMatrix& x, const AttentionParams& p);

/// Means of non-overlapping runs of `segment_length` frames, S x d.
Var segment_average(const FrameMatrix& x, const SegmentationSpec& spec);

PooledStats segmental_attentive_statistics_pool(const FrameMatrix& x, const SegmentationSpec& spec,
                                                const AttentionParams& p);

/// alpha [mu; sigma] + beta [mu~; sigma~], where (mu, sigma) are global
/// frame statistics and (mu~, sigma~) come from attention over segment means.
Var drasp_pool(const FrameMatrix& x, const SegmentationSpec& spec, const AttentionParams& p, const FusionParams& f);

/// Frame-level attentive means of each head, concatenated in head order.
Var multihead_attentive_pool(const FrameMatrix& x, const std::vector<AttentionParams>& heads);

/// As multihead_attentive_pool with a per-head softmax temperature.
Var multires_multihead_attentive_pool(const FrameMatrix& x, const std::vector<AttentionParams>& heads,
                                      const std::vector<double>& temperatures);

enum class PoolingMethod : std::uint8_t {
  Average,
  Statistics,
  Attentive,
  AttentiveStatistics,
  SegmentalAttentiveStatistics,
  Drasp,
  MultiHead,
  MultiResMultiHead,
};

const std::vector<PoolingMethod>& all_pooling_methods();
std::string_view to_string(PoolingMethod method);
std::optional<PoolingMethod> parse_pooling_method(std::string_view name);

struct PoolingConfig {
  PoolingMethod method = PoolingMethod::Drasp;
  SegmentationSpec segmentation{5, PartialSegment::Include};
  std::size_t attention_width = 128;
  std::size_t heads = 4;
  std::vector<double> temperatures{1.0, 2.0, 5.0, 10.0};
};

/// Owns the trainable parameters of one pooling method and applies it.
class PoolingLayer {
 public:
  PoolingLayer(const PoolingConfig& config, std::size_t input_width, ParameterSet& params, std::mt19937_64& rng);

  Var forward(const FrameMatrix& x) const;
  std::size_t output_width() const { return output_width_; }
  const PoolingConfig& config() const { return config_; }

  const std::vector<AttentionParams>& attention() const { return attention_; }
  const std::optional<FusionParams>& fusion() const { return fusion_; }

 private:
  PoolingConfig config_;
  std::size_t input_width_;
  std::size_t output_width_;
  std::vector<AttentionParams> attention_;
  std::optional<FusionParams> fusion_;
};

std::size_t pooled_width(const PoolingConfig& config, std::size_t input_width);

}  // namespace drasp
