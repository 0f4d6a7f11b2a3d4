#include "drasp/model.hpp"

#include <cmath>
#include <stdexcept>

#include "drasp/random.hpp"

namespace drasp {

Dense Dense::create(ParameterSet& params, const std::string& prefix, std::size_t in, std::size_t out,
                    std::mt19937_64& rng, bool zero) {
  Tensor w = Tensor::zeros({out, in});
  if (!zero) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(in));
    for (auto& v : w.data()) v = uniform(rng, -bound, bound);
  }
  return {params.add(prefix + ".W", std::move(w)), params.add(prefix + ".b", Tensor::zeros({out}))};
}

Var Dense::rows(const Var& x) const { return add_row(matmul(x, transpose(weight)), bias); }

Var Dense::vec(const Var& x) const { return add(matvec(weight, x), bias); }

FrameEncoder::FrameEncoder(ParameterSet& params, std::size_t input_width, std::size_t hidden_width,
                           std::size_t output_width, std::mt19937_64& rng)
    : hidden_(Dense::create(params, "encoder.hidden", input_width, hidden_width, rng)),
      output_(Dense::create(params, "encoder.out", hidden_width, output_width, rng)) {}

Var FrameEncoder::forward(const Var& frames) const { return output_.rows(tanh(hidden_.rows(frames))); }

PredictionHead::PredictionHead(ParameterSet& params, const HeadSpec& spec, std::size_t input_width,
                               std::size_t hidden_width, double output_bias, bool zero_output, std::mt19937_64& rng)
    : spec_(spec),
      hidden_(Dense::create(params, "head." + spec.name + ".hidden", input_width, hidden_width, rng)),
      output_(Dense::create(params, "head." + spec.name + ".out", hidden_width, 1, rng, zero_output)) {
  if (!zero_output) output_.bias.mutable_value()[0] = output_bias;
}

Var PredictionHead::forward(const Var& embedding) const {
  return reshape(output_.vec(tanh(hidden_.vec(embedding))), {});
}

void ModelConfig::validate() const {
  if (input_width == 0 || encoder_hidden == 0 || embed_width == 0 || head_hidden == 0) {
    throw std::invalid_argument("model widths must be positive");
  }
  if (heads.empty()) throw std::invalid_argument("model needs at least one prediction head");
  for (std::size_t i = 0; i < heads.size(); ++i) {
    if (heads[i].name.empty()) throw std::invalid_argument("head names must be non-empty");
    for (std::size_t j = 0; j < i; ++j)
      if (heads[j].name == heads[i].name) throw std::invalid_argument("duplicate head name: " + heads[i].name);
    if (heads[i].use_conditioning && conditioning_width == 0) {
      throw std::invalid_argument("head " + heads[i].name + " uses conditioning but conditioning_width is 0");
    }
  }
}

MosModel::MosModel(ModelConfig config) : config_(std::move(config)) {
  config_.validate();
  // Independent streams per component, so components whose shapes agree
  // start identical across pooling methods and a head's initialization does
  // not depend on which other heads exist.
  auto encoder_rng = make_rng(config_.init_seed, {tag("encoder")});
  encoder_.emplace(params_, config_.input_width, config_.encoder_hidden, config_.embed_width, encoder_rng);
  auto pooling_rng = make_rng(config_.init_seed, {tag("pooling")});
  pooling_.emplace(config_.pooling, config_.embed_width, params_, pooling_rng);
  for (std::size_t k = 0; k < config_.heads.size(); ++k) {
    const auto& spec = config_.heads[k];
    auto head_rng = make_rng(config_.init_seed, {tag("head"), tag(spec.name)});
    const std::size_t width = pooling_->output_width() + (spec.use_conditioning ? config_.conditioning_width : 0);
    heads_.emplace_back(params_, spec, width, config_.head_hidden, config_.output_bias, config_.zero_init_output,
                        head_rng);
  }
}

Var MosModel::embed(const Tensor& frames) const {
  if (frames.rank() != 2 || frames.cols() != config_.input_width) {
    throw std::invalid_argument("clip of shape " + shape_string(frames.shape()) + " for model input width " +
                                std::to_string(config_.input_width));
  }
  return pooling_->forward(FrameMatrix(encoder_->forward(Var::constant(frames))));
}

std::vector<Var> MosModel::forward(const Tensor& frames, const Tensor* conditioning) const {
  Var pooled = embed(frames);
  Var joint;
  std::vector<Var> scores;
  scores.reserve(heads_.size());
  for (const auto& head : heads_) {
    if (!head.spec().use_conditioning) {
      scores.push_back(head.forward(pooled));
      continue;
    }
    if (!conditioning || conditioning->rank() != 1 || conditioning->size() != config_.conditioning_width) {
      throw std::invalid_argument("head " + head.spec().name + " requires a conditioning vector of width " +
                                  std::to_string(config_.conditioning_width));
    }
    if (!joint.defined()) joint = concat({pooled, Var::constant(*conditioning)});
    scores.push_back(head.forward(joint));
  }
  return scores;
}

std::map<std::string, Var> MosModel::forward_named(const Tensor& frames, const Tensor* conditioning) const {
  auto scores = forward(frames, conditioning);
  std::map<std::string, Var> out;
  for (std::size_t k = 0; k < heads_.size(); ++k) out.emplace(heads_[k].spec().name, scores[k]);
  return out;
}

std::vector<double> MosModel::predict(const Tensor& frames, const Tensor* conditioning) const {
  std::vector<double> out;
  for (const auto& s : forward(frames, conditioning)) out.push_back(s.value().item());
  return out;
}

std::vector<std::string> MosModel::head_names() const {
  std::vector<std::string> names;
  for (const auto& h : config_.heads) names.push_back(h.name);
  return names;
}

std::string_view to_string(LossKind kind) {
  switch (kind) {
    case LossKind::MAE:
      return "mae";
    case LossKind::MSE:
      return "mse";
    case LossKind::MAEPlusMSE:
      return "mae+mse";
  }
  return "unknown";
}

std::optional<LossKind> parse_loss_kind(std::string_view name) {
  if (name == "mae") return LossKind::MAE;
  if (name == "mse") return LossKind::MSE;
  if (name == "mae+mse" || name == "mae_plus_mse") return LossKind::MAEPlusMSE;
  return std::nullopt;
}

Var loss(const std::vector<Var>& predictions, std::span<const double> targets, const LossSpec& spec) {
  if (predictions.empty()) throw std::invalid_argument("empty batch");
  if (predictions.size() != targets.size()) {
    throw std::invalid_argument("got " + std::to_string(predictions.size()) + " predictions for " +
                                std::to_string(targets.size()) + " targets");
  }
  std::vector<Var> flat;
  flat.reserve(predictions.size());
  for (const auto& p : predictions) flat.push_back(reshape(p, {1}));
  Var error = sub(concat(flat), Var::constant(Tensor::vector({targets.begin(), targets.end()})));
  switch (spec.kind) {
    case LossKind::MAE:
      return mean(abs(error));
    case LossKind::MSE:
      return mean(square(error));
    case LossKind::MAEPlusMSE:
      return add(scale(mean(abs(error)), spec.mae_weight), scale(mean(square(error)), spec.mse_weight));
  }
  throw std::logic_error("unhandled loss kind");
}

double loss_value(std::span<const double> predictions, std::span<const double> targets, const LossSpec& spec) {
  if (predictions.empty()) throw std::invalid_argument("empty batch");
  if (predictions.size() != targets.size()) throw std::invalid_argument("prediction/target length mismatch");
  double mae = 0.0;
  double mse = 0.0;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    const double e = predictions[i] - targets[i];
    mae += std::abs(e);
    mse += e * e;
  }
  const auto n = static_cast<double>(predictions.size());
  mae /= n;
  mse /= n;
  switch (spec.kind) {
    case LossKind::MAE:
      return mae;
    case LossKind::MSE:
      return mse;
    case LossKind::MAEPlusMSE:
      return spec.mae_weight * mae + spec.mse_weight * mse;
  }
  throw std::logic_error("unhandled loss kind");
}

}  // namespace drasp
