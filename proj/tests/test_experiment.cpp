#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <map>
#include <sstream>
#include <stdexcept>

#include <gtest/gtest.h>

#include "drasp/evaluation.hpp"
#include "drasp/experiment.hpp"
#include "drasp/io.hpp"
#include "drasp/synthbench.hpp"
#include "metric_oracles.hpp"

namespace drasp {
namespace {

namespace fs = std::filesystem;

fs::path scratch_dir(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("drasp_test_experiment_" + name);
  fs::remove_all(dir);
  return dir;
}

/// Small enough that a full compare finishes in about a second.
ExperimentConfig tiny_config() {
  auto c = default_experiment_config();
  c.bench.num_systems = 5;
  c.bench.clips_per_system = 8;
  c.bench.min_frames = 12;
  c.bench.max_frames = 20;
  c.bench.input_width = 4;
  c.model.encoder_hidden = 6;
  c.model.embed_width = 3;
  c.model.head_hidden = 4;
  c.model.pooling.attention_width = 4;
  c.model.pooling.heads = 2;
  c.model.pooling.temperatures = {1.0, 3.0};
  c.model.pooling.segmentation.segment_length = 3;
  c.train.max_epochs = 3;
  c.train.batch_size = 8;
  c.experiment.seeds = {0, 1};
  return c;
}

std::vector<std::string> data_lines(const fs::path& path) {
  std::istringstream in(read_file(path));
  std::vector<std::string> lines;
  for (std::string line; std::getline(in, line);)
    if (!line.empty() && line.front() != '#') lines.push_back(line);
  return lines;
}

TEST(RunTasks, EveryTaskRunsOnceAndErrorsStayInTheirSlot) {
  for (std::size_t workers : {1u, 3u, 16u}) {
    std::vector<std::atomic<int>> hits(10);
    const auto errors = run_tasks(10, workers, [&](std::size_t i) {
      ++hits[i];
      if (i % 4 == 1) throw std::runtime_error("task " + std::to_string(i) + "\tfailed\n");
    });
    for (std::size_t i = 0; i < 10; ++i) {
      EXPECT_EQ(hits[i], 1);
      if (i % 4 == 1) {
        EXPECT_EQ(errors[i], "task " + std::to_string(i) + " failed ");
      } else {
        EXPECT_TRUE(errors[i].empty());
      }
    }
  }
  EXPECT_TRUE(run_tasks(0, 4, [](std::size_t) {}).empty());
}

TEST(Generate, WritesDatasetAndChecksumIsStable) {
  auto config = tiny_config();
  const auto a = scratch_dir("gen_a");
  const auto b = scratch_dir("gen_b");
  const auto sum = cmd_generate(config, a);
  EXPECT_EQ(sum, cmd_generate(config, b));
  EXPECT_EQ(read_file(a / "dataset" / "manifest.txt"), read_file(b / "dataset" / "manifest.txt"));
  config.bench.seed = 9;
  EXPECT_NE(sum, cmd_generate(config, scratch_dir("gen_c")));
  config.bench.num_systems = 0;
  EXPECT_THROW(cmd_generate(config, scratch_dir("gen_d")), std::invalid_argument);
}

TEST(Generate, DefaultSplitSizes) {
  const auto out = scratch_dir("gen_default");
  cmd_generate(default_experiment_config(), out);
  const auto ds = load_dataset(out / "dataset");
  EXPECT_EQ(ds.split_clips(Split::Train).size(), 560u);
  EXPECT_EQ(ds.split_clips(Split::Validation).size(), 120u);
  EXPECT_EQ(ds.split_clips(Split::Test).size(), 120u);
}

TEST(Compare, OneRowPerMethodSeedAndHead) {
  auto config = tiny_config();
  config.model.heads = {{"mos", false}, {"aux", false}};
  const auto out = scratch_dir("compare_rows");
  const auto result = cmd_compare(config, out);
  ASSERT_EQ(result.rows.size(), 8u * 2u * 2u);
  EXPECT_EQ(data_lines(result.table).size(), 1 + result.rows.size());
  EXPECT_EQ(data_lines(result.summary).size(), 1 + 8u * 2u);
  for (auto method : all_pooling_methods()) {
    for (const char* head : {"mos", "aux"}) {
      const auto n = std::count_if(result.rows.begin(), result.rows.end(), [&](const RunRow& r) {
        return r.method == to_string(method) && r.head == head;
      });
      EXPECT_EQ(n, 2) << to_string(method) << " " << head;
    }
  }
  const auto text = read_file(result.table);
  EXPECT_EQ(text.rfind("# drasp-compare 1\n", 0), 0u);
  EXPECT_NE(text.find("# train.seed = "), std::string::npos);
  EXPECT_EQ(text.find("experiment.workers"), std::string::npos);
}

TEST(Compare, TableRoundTripsThroughReader) {
  const auto result = cmd_compare(tiny_config(), scratch_dir("compare_read"));
  const auto rows = read_run_table(result.table);
  ASSERT_EQ(rows.size(), result.rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    EXPECT_EQ(rows[i].method, result.rows[i].method);
    EXPECT_EQ(rows[i].segment_length, result.rows[i].segment_length);
    EXPECT_EQ(rows[i].seed, result.rows[i].seed);
    EXPECT_EQ(rows[i].ok, result.rows[i].ok);
    if (!rows[i].ok) continue;
    EXPECT_EQ(rows[i].metrics.srcc, result.rows[i].metrics.srcc);
    EXPECT_EQ(rows[i].metrics.mse, result.rows[i].metrics.mse);
  }
}

TEST(Compare, ByteIdenticalAcrossRunsAndWorkerCounts) {
  auto config = tiny_config();
  config.experiment.methods = {PoolingMethod::Average, PoolingMethod::Drasp, PoolingMethod::MultiHead};
  const auto a = cmd_compare(config, scratch_dir("det_a"));
  config.experiment.workers = 3;
  const auto b = cmd_compare(config, scratch_dir("det_b"));
  EXPECT_EQ(read_file(a.table), read_file(b.table));
  EXPECT_EQ(read_file(a.summary), read_file(b.summary));
}

TEST(Compare, FailedRunsAreExplicitRows) {
  auto config = tiny_config();
  config.experiment.methods = {PoolingMethod::Average, PoolingMethod::MultiResMultiHead};
  // Only the multi-resolution method reads the temperatures.
  config.model.pooling.temperatures = {1.0, -1.0};
  const auto result = cmd_compare(config, scratch_dir("compare_fail"));
  ASSERT_EQ(result.rows.size(), 4u);
  for (const auto& r : result.rows) {
    if (r.method == "average") {
      EXPECT_TRUE(r.ok) << r.error;
    } else {
      EXPECT_FALSE(r.ok);
      EXPECT_FALSE(r.error.empty());
    }
  }
  const auto rows = read_run_table(result.table);
  EXPECT_EQ(std::count_if(rows.begin(), rows.end(), [](const RunRow& r) { return !r.ok; }), 2);
  const auto summary = data_lines(result.summary);
  ASSERT_EQ(summary.size(), 3u);
  EXPECT_NE(summary[2].find("\t2\t2\t-\t-"), std::string::npos) << summary[2];
}

TEST(Compare, SummaryIsMeanAndSampleStd) {
  const auto result = cmd_compare(tiny_config(), scratch_dir("compare_summary"));
  std::map<std::string, std::vector<double>> srcc;
  for (const auto& r : result.rows)
    if (r.ok) srcc[r.method].push_back(r.metrics.srcc);
  for (const auto& line : data_lines(result.summary)) {
    std::istringstream in(line);
    std::vector<std::string> cells;
    for (std::string c; std::getline(in, c, '\t');) cells.push_back(c);
    if (cells[0] == "method" || cells[9] == "-") continue;
    const auto& v = srcc.at(cells[0]);
    ASSERT_EQ(v.size(), 2u);
    const double mean = (v[0] + v[1]) / 2;
    const double sd = std::abs(v[0] - v[1]) / std::sqrt(2.0);
    EXPECT_NEAR(parse_double(cells[9]), mean, 1e-15);
    EXPECT_NEAR(parse_double(cells[10]), sd, 1e-15);
  }
}

TEST(Compare, Errors) {
  auto config = tiny_config();
  config.experiment.seeds.clear();
  EXPECT_THROW(cmd_compare(config, scratch_dir("err_a")), std::invalid_argument);
  config = tiny_config();
  config.experiment.methods.clear();
  EXPECT_THROW(cmd_compare(config, scratch_dir("err_b")), std::invalid_argument);
  config = tiny_config();
  config.experiment.dataset = (scratch_dir("err_c") / "nowhere").string();
  EXPECT_ANY_THROW(cmd_compare(config, scratch_dir("err_c_out")));
}

TEST(Compare, SavedDatasetIsUsedForEverySeed) {
  auto config = tiny_config();
  const auto data = scratch_dir("saved_data");
  cmd_generate(config, data);
  config.experiment.dataset = (data / "dataset").string();
  config.experiment.methods = {PoolingMethod::Statistics};
  const auto from_disk = cmd_compare(config, scratch_dir("saved_out"));
  // Seed 0 with a generated dataset uses the same bench seed as the saved one.
  auto generated = tiny_config();
  generated.experiment.methods = {PoolingMethod::Statistics};
  generated.experiment.seeds = {0};
  const auto fresh = cmd_compare(generated, scratch_dir("saved_fresh"));
  ASSERT_TRUE(from_disk.rows[0].ok && fresh.rows[0].ok);
  EXPECT_EQ(from_disk.rows[0].metrics.srcc, fresh.rows[0].metrics.srcc);
  EXPECT_EQ(from_disk.rows[0].metrics.mse, fresh.rows[0].metrics.mse);
}

TEST(SweepSegment, RowsPerLengthAndSeed) {
  auto config = tiny_config();
  config.experiment.segment_lengths = {1, 5, 10, 25, 50};
  const auto result = cmd_sweep_segment(config, scratch_dir("sweep_rows"));
  ASSERT_EQ(result.rows.size(), 5u * 2u);
  for (std::size_t n : {1u, 5u, 10u, 25u, 50u}) {
    EXPECT_EQ(std::count_if(result.rows.begin(), result.rows.end(),
                            [&](const RunRow& r) { return r.segment_length == n && r.method == "drasp"; }),
              2);
  }
  EXPECT_EQ(result.table.filename(), "sweep_segment.tsv");
}

TEST(SweepSegment, LengthOneMatchesFrameLevelAttentiveStatistics) {
  // The segmental method at n = 1 starts from the same parameters as the
  // frame-level method and computes the same function, so training follows
  // the same trajectory up to rounding.
  auto config = tiny_config();
  config.model.pooling.method = PoolingMethod::SegmentalAttentiveStatistics;
  config.experiment.segment_lengths = {1};
  config.experiment.methods = {PoolingMethod::AttentiveStatistics};
  const auto sweep = cmd_sweep_segment(config, scratch_dir("sweep_n1"));
  const auto compare = cmd_compare(config, scratch_dir("sweep_n1_compare"));
  ASSERT_EQ(sweep.rows.size(), compare.rows.size());
  for (std::size_t i = 0; i < sweep.rows.size(); ++i) {
    ASSERT_TRUE(sweep.rows[i].ok && compare.rows[i].ok);
    EXPECT_NEAR(sweep.rows[i].metrics.mse, compare.rows[i].metrics.mse, 1e-9);
    EXPECT_NEAR(sweep.rows[i].metrics.lcc, compare.rows[i].metrics.lcc, 1e-9);
  }
}

TEST(SweepSegment, Errors) {
  auto config = tiny_config();
  config.model.pooling.method = PoolingMethod::Statistics;
  EXPECT_THROW(cmd_sweep_segment(config, scratch_dir("sweep_err_a")), std::invalid_argument);
  config = tiny_config();
  config.experiment.segment_lengths = {0};
  EXPECT_THROW(cmd_sweep_segment(config, scratch_dir("sweep_err_b")), std::invalid_argument);
}

TEST(ExportScatter, RowsMatchSystemsTimesHeadsAndMetricsAgree) {
  auto config = tiny_config();
  config.model.heads = {{"mos", false}, {"aux", false}};
  config.experiment.seeds = {4};
  config.bench.seed = 4;
  const auto out = scratch_dir("scatter");
  const auto ckpt = cmd_train(config, out);
  const auto path = cmd_export_scatter(config, ckpt, out);
  const auto lines = data_lines(path);
  ASSERT_EQ(lines.size(), 1 + config.bench.num_systems * 2);
  EXPECT_EQ(lines[0], "system_id\thead\tpredicted\ttruth");

  std::map<std::string, std::pair<std::vector<double>, std::vector<double>>> by_head;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    std::istringstream in(lines[i]);
    std::vector<std::string> cells;
    for (std::string c; std::getline(in, c, '\t');) cells.push_back(c);
    ASSERT_EQ(cells.size(), 4u);
    by_head[cells[1]].first.push_back(parse_double(cells[2]));
    by_head[cells[1]].second.push_back(parse_double(cells[3]));
  }
  const auto model = restore_model(load_checkpoint(ckpt));
  const auto report = evaluate_systems(model, generate(config.bench), Split::Test);
  for (const auto& [head, xy] : by_head) {
    EXPECT_NEAR(oracle::spearman(xy.first, xy.second), report.heads.at(head).srcc, 1e-12);
    EXPECT_NEAR(oracle::pearson(xy.first, xy.second), report.heads.at(head).lcc, 1e-12);
  }
}

TEST(ExportScatter, MissingCheckpointIsAnError) {
  const auto out = scratch_dir("scatter_missing");
  try {
    cmd_export_scatter(tiny_config(), out / "model.ckpt", out);
    FAIL();
  } catch (const std::runtime_error& e) {
    EXPECT_NE(std::string(e.what()).find("missing checkpoint"), std::string::npos);
  }
}

}  // namespace
}  // namespace drasp
