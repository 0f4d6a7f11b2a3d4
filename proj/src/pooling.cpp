#include "drasp/pooling.hpp"

#include <array>
#include <cmath>
#include <stdexcept>

#include "drasp/random.hpp"

namespace drasp {

namespace {

Tensor uniform_tensor(Shape shape, double bound, std::mt19937_64& rng) {
  Tensor t = Tensor::zeros(std::move(shape));
  for (auto& v : t.data()) v = uniform(rng, -bound, bound);
  return t;
}

void check_attention(const AttentionParams& p) {
  if (!p.weight.defined() || !p.bias.defined() || !p.vector.defined()) {
    throw std::invalid_argument("attention parameters are not initialised");
  }
  const auto& w = p.weight.value();
  if (w.rank() != 2 || p.bias.value().rank() != 1 || p.vector.value().rank() != 1 ||
      p.bias.value().size() != w.rows() || p.vector.value().size() != w.rows()) {
    throw std::invalid_argument("inconsistent attention parameter shapes: W " + shape_string(w.shape()) + ", b " +
                                shape_string(p.bias.shape()) + ", v " + shape_string(p.vector.shape()));
  }
}

}  // namespace

FrameMatrix::FrameMatrix(Var frames) : frames_(std::move(frames)) {
  if (!frames_.defined() || frames_.value().rank() != 2) {
    throw std::invalid_argument("frame matrix must be a T x d matrix");
  }
}

AttentionParams AttentionParams::fixed(Tensor weight, Tensor bias, Tensor vector) {
  AttentionParams p{Var::constant(std::move(weight)), Var::constant(std::move(bias)), Var::constant(std::move(vector))};
  check_attention(p);
  return p;
}

AttentionParams AttentionParams::leaves(Tensor weight, Tensor bias, Tensor vector) {
  AttentionParams p{Var::leaf(std::move(weight)), Var::leaf(std::move(bias)), Var::leaf(std::move(vector))};
  check_attention(p);
  return p;
}

AttentionParams AttentionParams::create(ParameterSet& params, const std::string& prefix, std::size_t input_width,
                                        std::size_t hidden_width, std::mt19937_64& rng) {
  if (input_width == 0 || hidden_width == 0) throw std::invalid_argument("attention widths must be positive");
  const double w_bound = 1.0 / std::sqrt(static_cast<double>(input_width));
  const double v_bound = 1.0 / std::sqrt(static_cast<double>(hidden_width));
  AttentionParams p;
  p.weight = params.add(prefix + ".W", uniform_tensor({hidden_width, input_width}, w_bound, rng));
  p.bias = params.add(prefix + ".b", Tensor::zeros({hidden_width}));
  p.vector = params.add(prefix + ".v", uniform_tensor({hidden_width}, v_bound, rng));
  return p;
}

FusionParams FusionParams::create(ParameterSet& params, const std::string& prefix) {
  return {params.add(prefix + ".alpha", Tensor::scalar(1.0)), params.add(prefix + ".beta", Tensor::scalar(0.0))};
}

FusionParams FusionParams::fixed(double alpha, double beta) {
  return {Var::constant(Tensor::scalar(alpha)), Var::constant(Tensor::scalar(beta))};
}

FusionParams FusionParams::leaves(double alpha, double beta) {
  return {Var::leaf(Tensor::scalar(alpha)), Var::leaf(Tensor::scalar(beta))};
}

std::size_t SegmentationSpec::segment_count(std::size_t frames) const {
  if (segment_length == 0) throw std::invalid_argument("segment length must be at least 1");
  if (partial == PartialSegment::Drop) {
    if (frames < segment_length) throw std::invalid_argument("no complete segment");
    return frames / segment_length;
  }
  return (frames + segment_length - 1) / segment_length;
}

Var PooledStats::concat() const { return drasp::concat({mean, std}); }

Var average_pool(const FrameMatrix& x) { return mean_rows(x.frames()); }

PooledStats statistics_pool(const FrameMatrix& x) {
  Var mu = mean_rows(x.frames());
  Var second = mean_rows(square(x.frames()));
  return {mu, clamped_sqrt(sub(second, square(mu)))};
}

Var attention_weights(const Var& items, const AttentionParams& p, double temperature) {
  check_attention(p);
  if (items.value().rank() != 2) throw std::invalid_argument("attention_weights: items must be an S x d matrix");
  if (items.value().cols() != p.input_width()) {
    throw std::invalid_argument("attention_weights: items of width " + std::to_string(items.value().cols()) +
                                " for W " + shape_string(p.weight.shape()));
  }
  Var hidden = tanh(add_row(matmul(items, transpose(p.weight)), p.bias));
  return softmax(matvec(hidden, p.vector), temperature);
}

Var attentive_pool(const FrameMatrix& x, const AttentionParams& p, double temperature) {
  return weighted_rows(attention_weights(x.frames(), p, temperature), x.frames());
}

PooledStats attentive_statistics_over(const Var& items, const Var& weights) {
  if (items.value().rank() != 2 || weights.value().rank() != 1 || weights.value().size() != items.value().rows()) {
    throw std::invalid_argument("attentive_statistics_over: " + shape_string(weights.shape()) + " weights for " +
                                shape_string(items.shape()) + " items");
  }
  double total = 0.0;
  for (double w : weights.value().data()) {
    if (!(w >= 0.0)) throw std::invalid_argument("unnormalized weights");
    total += w;
  }
  if (std::abs(total - 1.0) > 1e-9) throw std::invalid_argument("unnormalized weights");

  Var mu = weighted_rows(weights, items);
  Var second = weighted_rows(weights, square(items));
  return {mu, clamped_sqrt(sub(second, square(mu)))};
}

PooledStats attentive_statistics_pool(const FrameMatrix& x, const AttentionParams& p) {
  return attentive_statistics_over(x.frames(), attention_weights(x.frames(), p));
}

Var segment_average(const FrameMatrix& x, const SegmentationSpec& spec) {
  const std::size_t frames = x.length();
  const std::size_t segments = spec.segment_count(frames);
  const std::size_t n = spec.segment_length;
  // Constant S x T averaging matrix; rows of a partial final segment average
  // over the frames actually present.
  Tensor averaging = Tensor::zeros({segments, frames});
  for (std::size_t s = 0; s < segments; ++s) {
    const std::size_t begin = s * n;
    const std::size_t end = std::min(begin + n, frames);
    const double inv = 1.0 / static_cast<double>(end - begin);
    for (std::size_t t = begin; t < end; ++t) averaging.at(s, t) = inv;
  }
  return matmul(Var::constant(std::move(averaging)), x.frames());
}

PooledStats segmental_attentive_statistics_pool(const FrameMatrix& x, const SegmentationSpec& spec,
                                                const AttentionParams& p) {
  Var segments = segment_average(x, spec);
  return attentive_statistics_over(segments, attention_weights(segments, p));
}

Var drasp_pool(const FrameMatrix& x, const SegmentationSpec& spec, const AttentionParams& p, const FusionParams& f) {
  Var global = statistics_pool(x).concat();
  Var local = segmental_attentive_statistics_pool(x, spec, p).concat();
  return add(scale(global, f.alpha), scale(local, f.beta));
}

Var multihead_attentive_pool(const FrameMatrix& x, const std::vector<AttentionParams>& heads) {
  return multires_multihead_attentive_pool(x, heads, std::vector<double>(heads.size(), 1.0));
}

Var multires_multihead_attentive_pool(const FrameMatrix& x, const std::vector<AttentionParams>& heads,
                                      const std::vector<double>& temperatures) {
  if (heads.empty()) throw std::invalid_argument("at least one attention head is required");
  if (heads.size() != temperatures.size()) {
    throw std::invalid_argument("got " + std::to_string(heads.size()) + " heads but " +
                                std::to_string(temperatures.size()) + " temperatures");
  }
  std::vector<Var> parts;
  parts.reserve(heads.size());
  for (std::size_t h = 0; h < heads.size(); ++h) parts.push_back(attentive_pool(x, heads[h], temperatures[h]));
  return concat(parts);
}

namespace {

constexpr std::array<std::pair<PoolingMethod, std::string_view>, 8> kMethodNames{{
    {PoolingMethod::Average, "average"},
    {PoolingMethod::Statistics, "statistics"},
    {PoolingMethod::Attentive, "attentive"},
    {PoolingMethod::AttentiveStatistics, "attentive_statistics"},
    {PoolingMethod::SegmentalAttentiveStatistics, "segmental_attentive_statistics"},
    {PoolingMethod::Drasp, "drasp"},
    {PoolingMethod::MultiHead, "multihead"},
    {PoolingMethod::MultiResMultiHead, "multires_multihead"},
}};

}  // namespace

const std::vector<PoolingMethod>& all_pooling_methods() {
  static const std::vector<PoolingMethod> methods = [] {
    std::vector<PoolingMethod> out;
    for (const auto& [m, _] : kMethodNames) out.push_back(m);
    return out;
  }();
  return methods;
}

std::string_view to_string(PoolingMethod method) {
  for (const auto& [m, name] : kMethodNames)
    if (m == method) return name;
  return "unknown";
}

std::optional<PoolingMethod> parse_pooling_method(std::string_view name) {
  for (const auto& [m, n] : kMethodNames)
    if (n == name) return m;
  return std::nullopt;
}

std::size_t pooled_width(const PoolingConfig& config, std::size_t input_width) {
  switch (config.method) {
    case PoolingMethod::Average:
    case PoolingMethod::Attentive:
      return input_width;
    case PoolingMethod::Statistics:
    case PoolingMethod::AttentiveStatistics:
    case PoolingMethod::SegmentalAttentiveStatistics:
    case PoolingMethod::Drasp:
      return 2 * input_width;
    case PoolingMethod::MultiHead:
      return config.heads * input_width;
    case PoolingMethod::MultiResMultiHead:
      return config.temperatures.size() * input_width;
  }
  throw std::logic_error("unhandled pooling method");
}

PoolingLayer::PoolingLayer(const PoolingConfig& config, std::size_t input_width, ParameterSet& params,
                           std::mt19937_64& rng)
    : config_(config), input_width_(input_width), output_width_(pooled_width(config, input_width)) {
  if (config_.segmentation.segment_length == 0) throw std::invalid_argument("segment length must be at least 1");
  switch (config_.method) {
    case PoolingMethod::Average:
    case PoolingMethod::Statistics:
      break;
    case PoolingMethod::Attentive:
    case PoolingMethod::AttentiveStatistics:
    case PoolingMethod::SegmentalAttentiveStatistics:
      attention_.push_back(AttentionParams::create(params, "pool.attn", input_width, config_.attention_width, rng));
      break;
    case PoolingMethod::Drasp:
      attention_.push_back(AttentionParams::create(params, "pool.attn", input_width, config_.attention_width, rng));
      fusion_ = FusionParams::create(params, "pool");
      break;
    case PoolingMethod::MultiHead:
    case PoolingMethod::MultiResMultiHead: {
      const std::size_t heads =
          config_.method == PoolingMethod::MultiHead ? config_.heads : config_.temperatures.size();
      if (heads == 0) throw std::invalid_argument("multi-head pooling needs at least one head");
      for (double t : config_.temperatures) {
        if (config_.method == PoolingMethod::MultiResMultiHead && !(t > 0.0)) {
          throw std::invalid_argument("invalid temperature");
        }
      }
      for (std::size_t h = 0; h < heads; ++h) {
        attention_.push_back(AttentionParams::create(params, "pool.head" + std::to_string(h), input_width,
                                                     config_.attention_width, rng));
      }
      break;
    }
  }
}

Var PoolingLayer::forward(const FrameMatrix& x) const {
  if (x.width() != input_width_) {
    throw std::invalid_argument("pooling input width " + std::to_string(x.width()) + ", expected " +
                                std::to_string(input_width_));
  }
  switch (config_.method) {
    case PoolingMethod::Average:
      return average_pool(x);
    case PoolingMethod::Statistics:
      return statistics_pool(x).concat();
    case PoolingMethod::Attentive:
      return attentive_pool(x, attention_[0]);
    case PoolingMethod::AttentiveStatistics:
      return attentive_statistics_pool(x, attention_[0]).concat();
    case PoolingMethod::SegmentalAttentiveStatistics:
      return segmental_attentive_statistics_pool(x, config_.segmentation, attention_[0]).concat();
    case PoolingMethod::Drasp:
      return drasp_pool(x, config_.segmentation, attention_[0], *fusion_);
    case PoolingMethod::MultiHead:
      return multihead_attentive_pool(x, attention_);
    case PoolingMethod::MultiResMultiHead:
      return multires_multihead_attentive_pool(x, attention_, config_.temperatures);
  }
  throw std::logic_error("unhandled pooling method");
}

}  // namespace drasp
