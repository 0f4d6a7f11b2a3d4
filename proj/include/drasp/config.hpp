#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "drasp/model.hpp"
#include "drasp/pooling.hpp"
#include "drasp/synthbench.hpp"
#include "drasp/training.hpp"

namespace drasp {

/// Ordered `key -> value` pairs of a flat config file.
using KeyValues = std::map<std::string, std::string>;

/// Parses lines of `key = value`. `#` starts a comment, blank lines are
/// ignored, and a `[section]` line prefixes later keys with `section.`.
/// Throws std::invalid_argument naming `source` and the line on bad syntax or
/// a repeated key.
KeyValues parse_key_values(std::string_view text, std::string_view source = "<config>");
std::string format_key_values(const KeyValues& values);

/// Shortest decimal text that reads back to the same double.
std::string format_double(double value);
double parse_double(std::string_view text);
std::uint64_t parse_unsigned(std::string_view text);

struct ExperimentSettings {
  std::vector<std::uint64_t> seeds{0, 1, 2, 3, 4};
  std::vector<PoolingMethod> methods = all_pooling_methods();
  std::vector<std::size_t> segment_lengths{1, 2, 5, 10, 25, 50};
  std::size_t workers = 1;
  /// Existing dataset directory; empty means generate from `bench` per seed.
  std::string dataset;
  Split scatter_split = Split::Test;
};

/// Everything a run needs. In compare and sweep runs a seed s sets
/// bench.seed (when generating), model.init_seed and train.seed.
struct ExperimentConfig {
  BenchConfig bench;
  ModelConfig model;
  TrainConfig train;
  ExperimentSettings experiment;

  ExperimentConfig for_seed(std::uint64_t seed) const;
};

/// Desk-scale defaults: a narrower model and a faster learning rate than the
/// library defaults so that a full comparison fits in minutes on one core.
ExperimentConfig default_experiment_config();

KeyValues to_key_values(const ExperimentConfig& config);
/// Overlays `values` on `base`. Unknown keys and malformed values throw.
ExperimentConfig from_key_values(const KeyValues& values, ExperimentConfig base = default_experiment_config());

/// Section-level views used by file formats that echo part of the config.
KeyValues bench_key_values(const BenchConfig& config);
KeyValues model_key_values(const ModelConfig& config);
KeyValues train_key_values(const TrainConfig& config);

ExperimentConfig load_experiment_config(const std::filesystem::path& path);

}  // namespace drasp
