#include "drasp/evaluation.hpp"

#include <stdexcept>

namespace drasp {

SystemPredictions predict_systems(const MosModel& model, const Dataset& dataset, Split split) {
  const auto names = model.head_names();
  std::vector<std::vector<std::pair<std::string, double>>> per_head(names.size());
  for (const auto* clip : dataset.split_clips(split)) {
    const Tensor* cond = clip->conditioning ? &*clip->conditioning : nullptr;
    const auto scores = model.predict(clip->frames, cond);
    for (std::size_t k = 0; k < names.size(); ++k) per_head[k].emplace_back(clip->system_id, scores[k]);
  }
  SystemPredictions out;
  for (std::size_t k = 0; k < names.size(); ++k) out.emplace(names[k], system_aggregate(per_head[k]));
  return out;
}

MetricReport report_from_predictions(const SystemPredictions& predicted, const std::map<std::string, double>& truth) {
  MetricReport report;
  report.system_count = truth.size();
  for (const auto& [head, systems] : predicted) report.heads.emplace(head, system_metrics(systems, truth));
  return report;
}

MetricReport evaluate_systems(const MosModel& model, const Dataset& dataset, Split split) {
  return report_from_predictions(predict_systems(model, dataset, split), system_truth(dataset, split));
}

RunOutcome train_and_evaluate(const Dataset& dataset, const ModelConfig& model_config, const TrainConfig& train_config,
                              MosModel* trained) {
  ModelConfig config = model_config;
  config.input_width = dataset.config.input_width;
  config.conditioning_width = dataset.config.conditioning_width;
  MosModel model(config);
  const auto heads = config.heads.size();
  const auto train_set = make_examples(dataset, Split::Train, heads);
  const auto validation_set = make_examples(dataset, Split::Validation, heads);

  RunOutcome outcome;
  outcome.training = train(model, train_set, validation_set, train_config);
  outcome.test = evaluate_systems(model, dataset, Split::Test);
  if (trained) *trained = std::move(model);
  return outcome;
}

}  // namespace drasp
