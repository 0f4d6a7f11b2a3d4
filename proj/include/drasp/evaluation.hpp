#pragma once

#include <map>
#include <string>

#include "drasp/metrics.hpp"
#include "drasp/model.hpp"
#include "drasp/synthbench.hpp"
#include "drasp/training.hpp"

namespace drasp {

/// Per head: system id -> mean predicted score over the split's clips.
using SystemPredictions = std::map<std::string, std::map<std::string, double>>;

SystemPredictions predict_systems(const MosModel& model, const Dataset& dataset, Split split);

/// System-level MSE / LCC / SRCC / KTAU of every head against mean true MOS.
MetricReport evaluate_systems(const MosModel& model, const Dataset& dataset, Split split);
MetricReport report_from_predictions(const SystemPredictions& predicted, const std::map<std::string, double>& truth);

struct RunOutcome {
  TrainResult training;
  MetricReport test;
};

/// Builds a model from `model_config`, trains it on the dataset's train and
/// validation splits and evaluates it on the test split. The trained model is
/// moved into `trained` when given.
RunOutcome train_and_evaluate(const Dataset& dataset, const ModelConfig& model_config, const TrainConfig& train_config,
                              MosModel* trained = nullptr);

}  // namespace drasp
