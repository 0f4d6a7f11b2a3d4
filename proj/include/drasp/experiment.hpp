#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "drasp/config.hpp"
#include "drasp/metrics.hpp"

namespace drasp {

/// Version written in the first line of every table this module emits.
inline constexpr int kTableFormatVersion = 1;

/// One (configuration, seed, head) outcome. Failed runs keep their identity
/// and carry the error text instead of metrics.
struct RunRow {
  std::string method;
  std::size_t segment_length = 0;
  std::string head;
  std::uint64_t seed = 0;
  bool ok = false;
  SystemMetrics metrics;
  std::string error;
};

struct TableResult {
  std::vector<RunRow> rows;
  std::filesystem::path table;
  std::filesystem::path summary;
};

/// Runs `count` independent tasks on up to `workers` threads. Each task's
/// exception is caught and reported through its own slot, in task order.
std::vector<std::string> run_tasks(std::size_t count, std::size_t workers,
                                   const std::function<void(std::size_t)>& task);

/// Writes `<out>/dataset` for `config.bench` and returns the manifest checksum.
std::uint64_t cmd_generate(const ExperimentConfig& config, const std::filesystem::path& out);

/// Trains every configured method for every seed and writes `compare.tsv`
/// (one row per method x seed x head) and `compare_summary.tsv`.
TableResult cmd_compare(const ExperimentConfig& config, const std::filesystem::path& out);

/// Trains the configured segmental method for every segment length and seed
/// and writes `sweep_segment.tsv` and `sweep_segment_summary.tsv`.
TableResult cmd_sweep_segment(const ExperimentConfig& config, const std::filesystem::path& out);

/// Trains the configured model on the first seed and writes `model.ckpt`.
/// Returns the checkpoint path.
std::filesystem::path cmd_train(const ExperimentConfig& config, const std::filesystem::path& out);

/// Writes `scatter.tsv`: per system and head, the mean predicted score of the
/// checkpointed model and the mean true MOS over `experiment.scatter_split`.
/// The dataset is `experiment.dataset` or is generated from `config.bench`.
std::filesystem::path cmd_export_scatter(const ExperimentConfig& config, const std::filesystem::path& checkpoint,
                                         const std::filesystem::path& out);

/// Parses a table written by this module back into rows (for checks and
/// downstream tooling). Comment lines are skipped.
std::vector<RunRow> read_run_table(const std::filesystem::path& path);

}  // namespace drasp
