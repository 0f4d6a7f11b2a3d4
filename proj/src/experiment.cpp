#include "drasp/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <memory>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "drasp/evaluation.hpp"
#include "drasp/io.hpp"

namespace drasp {
namespace {

namespace fs = std::filesystem;

constexpr std::string_view kColumns = "method\tsegment_length\thead\tseed\tstatus\tmse\tlcc\tsrcc\tktau\terror";
constexpr std::string_view kSummaryColumns =
    "method\tsegment_length\thead\truns\tfailed\tmse_mean\tmse_std\tlcc_mean\tlcc_std\tsrcc_mean\tsrcc_std\t"
    "ktau_mean\tktau_std";

bool uses_segments(PoolingMethod m) {
  return m == PoolingMethod::SegmentalAttentiveStatistics || m == PoolingMethod::Drasp;
}

std::string one_line(std::string text) {
  std::replace_if(text.begin(), text.end(), [](char c) { return c == '\t' || c == '\n' || c == '\r'; }, ' ');
  return text.empty() ? "unknown error" : text;
}

/// Header shared by every table: format line plus the config echo. The worker
/// count is left out so that output does not depend on parallelism.
std::string table_header(std::string_view kind, const ExperimentConfig& config) {
  std::string out = "# drasp-" + std::string(kind) + " " + std::to_string(kTableFormatVersion) + "\n";
  for (const auto& [key, value] : to_key_values(config)) {
    if (key == "experiment.workers") continue;
    out += "# " + key + " = " + value + "\n";
  }
  return out;
}

std::string format_row(const RunRow& r) {
  std::string out = r.method + "\t" + (r.segment_length ? std::to_string(r.segment_length) : "-") + "\t" + r.head +
                    "\t" + std::to_string(r.seed) + "\t" + (r.ok ? "ok" : "failed");
  if (r.ok) {
    for (double v : {r.metrics.mse, r.metrics.lcc, r.metrics.srcc, r.metrics.ktau}) out += "\t" + format_double(v);
    out += "\t-";
  } else {
    out += "\t-\t-\t-\t-\t" + one_line(r.error);
  }
  return out + "\n";
}

/// Sample mean and standard deviation (n - 1 denominator; 0 for one value).
std::pair<double, double> mean_std(const std::vector<double>& v) {
  if (v.empty()) return {std::nan(""), std::nan("")};
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= static_cast<double>(v.size());
  if (v.size() < 2) return {mean, 0.0};
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return {mean, std::sqrt(ss / static_cast<double>(v.size() - 1))};
}

std::string summarize(const std::vector<RunRow>& rows) {
  // Groups in first-appearance order, which follows the configured order.
  std::vector<std::tuple<std::string, std::size_t, std::string>> keys;
  for (const auto& r : rows) {
    const auto key = std::make_tuple(r.method, r.segment_length, r.head);
    if (std::find(keys.begin(), keys.end(), key) == keys.end()) keys.push_back(key);
  }
  std::string out;
  for (const auto& key : keys) {
    std::vector<double> mse, lcc, srcc, ktau;
    std::size_t runs = 0, failed = 0;
    for (const auto& r : rows) {
      if (std::make_tuple(r.method, r.segment_length, r.head) != key) continue;
      ++runs;
      if (!r.ok) {
        ++failed;
        continue;
      }
      mse.push_back(r.metrics.mse);
      lcc.push_back(r.metrics.lcc);
      srcc.push_back(r.metrics.srcc);
      ktau.push_back(r.metrics.ktau);
    }
    const auto& [method, n, head] = key;
    out += method + "\t" + (n ? std::to_string(n) : "-") + "\t" + head + "\t" + std::to_string(runs) + "\t" +
           std::to_string(failed);
    for (const auto* series : {&mse, &lcc, &srcc, &ktau}) {
      const auto [m, s] = mean_std(*series);
      out += series->empty() ? "\t-\t-" : "\t" + format_double(m) + "\t" + format_double(s);
    }
    out += "\n";
  }
  return out;
}

Dataset dataset_for(const ExperimentConfig& config) {
  if (!config.experiment.dataset.empty()) return load_dataset(config.experiment.dataset);
  return generate(config.bench);
}

void require_seeds(const ExperimentConfig& config) {
  if (config.experiment.seeds.empty()) throw std::invalid_argument("experiment.seeds is empty");
}

/// One dataset per seed, or a single shared one when a directory is given.
std::vector<std::shared_ptr<const Dataset>> datasets_for_seeds(const ExperimentConfig& config) {
  std::vector<std::shared_ptr<const Dataset>> out;
  if (!config.experiment.dataset.empty()) {
    auto shared = std::make_shared<const Dataset>(load_dataset(config.experiment.dataset));
    out.assign(config.experiment.seeds.size(), shared);
    return out;
  }
  for (auto seed : config.experiment.seeds)
    out.push_back(std::make_shared<const Dataset>(generate(config.for_seed(seed).bench)));
  return out;
}

struct Job {
  PoolingMethod method;
  std::size_t segment_length;
  std::size_t seed_index;
};

TableResult run_jobs(const ExperimentConfig& config, const std::vector<Job>& jobs, std::string_view kind,
                     const fs::path& out) {
  const auto datasets = datasets_for_seeds(config);
  std::vector<MetricReport> reports(jobs.size());
  const auto errors = run_tasks(jobs.size(), config.experiment.workers, [&](std::size_t i) {
    const auto& job = jobs[i];
    const auto seeded = config.for_seed(config.experiment.seeds[job.seed_index]);
    ModelConfig model = seeded.model;
    model.pooling.method = job.method;
    if (job.segment_length) model.pooling.segmentation.segment_length = job.segment_length;
    reports[i] = train_and_evaluate(*datasets[job.seed_index], model, seeded.train).test;
  });

  TableResult result;
  for (std::size_t i = 0; i < jobs.size(); ++i) {
    for (const auto& head : config.model.heads) {
      RunRow row;
      row.method = std::string(to_string(jobs[i].method));
      row.segment_length = jobs[i].segment_length;
      row.head = head.name;
      row.seed = config.experiment.seeds[jobs[i].seed_index];
      row.ok = errors[i].empty();
      if (row.ok) {
        row.metrics = reports[i].heads.at(head.name);
      } else {
        row.error = errors[i];
      }
      result.rows.push_back(std::move(row));
    }
  }

  std::string table = table_header(kind, config);
  table += kColumns;
  table += "\n";
  for (const auto& r : result.rows) table += format_row(r);
  std::string summary = table_header(std::string(kind) + "-summary", config);
  summary += kSummaryColumns;
  summary += "\n";
  summary += summarize(result.rows);

  fs::create_directories(out);
  std::string stem(kind);
  std::replace(stem.begin(), stem.end(), '-', '_');
  result.table = out / (stem + ".tsv");
  result.summary = out / (stem + "_summary.tsv");
  write_file(result.table, table);
  write_file(result.summary, summary);
  return result;
}

}  // namespace

std::vector<std::string> run_tasks(std::size_t count, std::size_t workers,
                                   const std::function<void(std::size_t)>& task) {
  std::vector<std::string> errors(count);
  std::atomic<std::size_t> next{0};
  auto drain = [&] {
    for (std::size_t i = next++; i < count; i = next++) {
      try {
        task(i);
      } catch (const std::exception& e) {
        errors[i] = one_line(e.what());
      } catch (...) {
        errors[i] = "unknown error";
      }
    }
  };
  const std::size_t threads = std::min(std::max<std::size_t>(workers, 1), std::max<std::size_t>(count, 1));
  if (threads == 1) {
    drain();
    return errors;
  }
  std::vector<std::jthread> pool;
  for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(drain);
  pool.clear();
  return errors;
}

std::uint64_t cmd_generate(const ExperimentConfig& config, const fs::path& out) {
  return save_dataset(generate(config.bench), out / "dataset");
}

TableResult cmd_compare(const ExperimentConfig& config, const fs::path& out) {
  require_seeds(config);
  if (config.experiment.methods.empty()) throw std::invalid_argument("experiment.methods is empty");
  std::vector<Job> jobs;
  for (auto method : config.experiment.methods)
    for (std::size_t s = 0; s < config.experiment.seeds.size(); ++s)
      jobs.push_back({method, uses_segments(method) ? config.model.pooling.segmentation.segment_length : 0, s});
  return run_jobs(config, jobs, "compare", out);
}

TableResult cmd_sweep_segment(const ExperimentConfig& config, const fs::path& out) {
  require_seeds(config);
  const auto method = config.model.pooling.method;
  if (!uses_segments(method)) {
    throw std::invalid_argument("sweep-segment needs a segmental pooling method, got " +
                                std::string(to_string(method)));
  }
  if (config.experiment.segment_lengths.empty()) throw std::invalid_argument("experiment.segment_lengths is empty");
  std::vector<Job> jobs;
  for (auto n : config.experiment.segment_lengths) {
    if (n == 0) throw std::invalid_argument("segment length must be positive");
    for (std::size_t s = 0; s < config.experiment.seeds.size(); ++s) jobs.push_back({method, n, s});
  }
  return run_jobs(config, jobs, "sweep-segment", out);
}

fs::path cmd_train(const ExperimentConfig& config, const fs::path& out) {
  require_seeds(config);
  const auto seeded = config.for_seed(config.experiment.seeds.front());
  const auto dataset = dataset_for(seeded);
  ModelConfig model_config = seeded.model;
  model_config.input_width = dataset.config.input_width;
  model_config.conditioning_width = dataset.config.conditioning_width;
  MosModel model(model_config);
  const auto heads = model_config.heads.size();
  const auto train_set = make_examples(dataset, Split::Train, heads);
  const auto validation_set = make_examples(dataset, Split::Validation, heads);
  train(model, train_set, validation_set, seeded.train);
  fs::create_directories(out);
  const auto path = out / "model.ckpt";
  save_checkpoint(path, model, seeded.train);
  return path;
}

fs::path cmd_export_scatter(const ExperimentConfig& config, const fs::path& checkpoint, const fs::path& out) {
  const auto model = restore_model(load_checkpoint(checkpoint));
  const auto dataset = dataset_for(config);
  const auto split = config.experiment.scatter_split;
  const auto predicted = predict_systems(model, dataset, split);
  const auto truth = system_truth(dataset, split);

  std::string text = table_header("scatter", config);
  text += "# checkpoint = " + hex64(fnv1a64(read_file(checkpoint))) + "\n";
  text += "system_id\thead\tpredicted\ttruth\n";
  for (const auto& head : model.head_names()) {
    for (const auto& [system, mos] : truth) {
      text += system + "\t" + head + "\t" + format_double(predicted.at(head).at(system)) + "\t" + format_double(mos) +
              "\n";
    }
  }
  fs::create_directories(out);
  const auto path = out / "scatter.tsv";
  write_file(path, text);
  return path;
}

std::vector<RunRow> read_run_table(const fs::path& path) {
  std::istringstream in(read_file(path));
  std::string line;
  std::vector<RunRow> rows;
  bool header = false;
  auto number = [](const std::string& s) { return s == "-" ? std::nan("") : parse_double(s); };
  while (std::getline(in, line)) {
    if (line.empty() || line.front() == '#') continue;
    if (!header) {
      if (line != kColumns) throw std::runtime_error(path.string() + ": unexpected table columns");
      header = true;
      continue;
    }
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream fields(line);
    while (std::getline(fields, cell, '\t')) cells.push_back(cell);
    if (cells.size() != 10) throw std::runtime_error(path.string() + ": malformed row: " + line);
    RunRow r;
    r.method = cells[0];
    r.segment_length = cells[1] == "-" ? 0 : parse_unsigned(cells[1]);
    r.head = cells[2];
    r.seed = parse_unsigned(cells[3]);
    r.ok = cells[4] == "ok";
    r.metrics = {number(cells[5]), number(cells[6]), number(cells[7]), number(cells[8])};
    if (!r.ok) r.error = cells[9];
    rows.push_back(std::move(r));
  }
  if (!header) throw std::runtime_error(path.string() + ": no table header");
  return rows;
}

}  // namespace drasp
