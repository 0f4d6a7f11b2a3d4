// drasp: experiment runner over the synthetic MOS benchmark.
//
//   drasp generate       write <out>/dataset and print its checksum
//   drasp compare        every configured pooling method x seed -> compare.tsv
//   drasp sweep-segment  segmental method x segment length x seed -> sweep_segment.tsv
//   drasp train          train the configured model -> model.ckpt
//   drasp export-scatter per-system predicted vs true MOS of a checkpoint -> scatter.tsv
//
// Failures print one JSON object on stderr and exit nonzero.

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "drasp/experiment.hpp"
#include "drasp/io.hpp"

namespace {

namespace fs = std::filesystem;

constexpr const char* kOutEnv = "DRASP_OUT_DIR";

enum ExitCode { kOk = 0, kFailure = 1, kUsage = 2 };

int report_error(const std::string& command, const std::string& kind, const std::string& message, int code) {
  nlohmann::json line{{"status", "error"}, {"command", command}, {"kind", kind}, {"message", message}};
  std::cerr << line.dump() << std::endl;
  return code;
}

struct Options {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> workers;
  std::string out;
  std::vector<std::size_t> segments;
  std::string checkpoint;
};

drasp::ExperimentConfig resolve_config(const Options& opts) {
  auto config = opts.config.empty() ? drasp::default_experiment_config() : drasp::load_experiment_config(opts.config);
  if (opts.seed) {
    config.experiment.seeds = {*opts.seed};
    config.bench.seed = *opts.seed;
  }
  if (opts.workers) config.experiment.workers = *opts.workers;
  if (!opts.segments.empty()) config.experiment.segment_lengths = opts.segments;
  return config;
}

fs::path resolve_out(const Options& opts) {
  if (!opts.out.empty()) return opts.out;
  if (const char* env = std::getenv(kOutEnv); env && *env) return env;
  return "drasp_out";
}

void print_table_result(const drasp::TableResult& r) {
  std::size_t failed = 0;
  for (const auto& row : r.rows) failed += !row.ok;
  std::cout << "table " << r.table.string() << "\nsummary " << r.summary.string() << "\nrows " << r.rows.size()
            << "\nfailed " << failed << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"DRASP pooling experiments on a synthetic MOS benchmark"};
  app.require_subcommand(1);
  Options opts;

  auto common = [&](CLI::App* sub) {
    sub->add_option("--config", opts.config, "Key-value config file")->check(CLI::ExistingFile);
    sub->add_option("--seed", opts.seed, "Run this single seed (also the generation seed)");
    sub->add_option("--workers", opts.workers, "Parallel runs")->check(CLI::Range(std::size_t{1}, std::size_t{4096}));
    sub->add_option("--out", opts.out, std::string("Output directory (default $") + kOutEnv + " or ./drasp_out)");
  };
  auto* generate = app.add_subcommand("generate", "Generate and save a synthetic dataset");
  auto* compare = app.add_subcommand("compare", "Compare pooling methods over seeds");
  auto* sweep = app.add_subcommand("sweep-segment", "Sweep the segment length of a segmental method");
  auto* train = app.add_subcommand("train", "Train one model and save a checkpoint");
  auto* scatter = app.add_subcommand("export-scatter", "Export per-system predictions of a checkpoint");
  for (auto* sub : {generate, compare, sweep, train, scatter}) common(sub);
  sweep->add_option("--segments", opts.segments, "Segment lengths (overrides experiment.segment_lengths)")
      ->delimiter(',');
  scatter->add_option("--checkpoint", opts.checkpoint, "Checkpoint file (default <out>/model.ckpt)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return report_error(argc > 1 ? argv[1] : "", "usage", e.what(), kUsage);
  }

  const auto* active = app.get_subcommands().front();
  const std::string command = active->get_name();
  try {
    const auto config = resolve_config(opts);
    const auto out = resolve_out(opts);
    if (active == generate) {
      const auto checksum = drasp::cmd_generate(config, out);
      std::cout << "checksum " << drasp::hex64(checksum) << "\ndataset " << (out / "dataset").string() << "\n";
    } else if (active == compare) {
      print_table_result(drasp::cmd_compare(config, out));
    } else if (active == sweep) {
      print_table_result(drasp::cmd_sweep_segment(config, out));
    } else if (active == train) {
      const auto path = drasp::cmd_train(config, out);
      std::cout << "checkpoint " << path.string() << "\n";
    } else {
      const fs::path checkpoint = opts.checkpoint.empty() ? out / "model.ckpt" : fs::path(opts.checkpoint);
      const auto path = drasp::cmd_export_scatter(config, checkpoint, out);
      std::cout << "scatter " << path.string() << "\n";
    }
  } catch (const std::invalid_argument& e) {
    return report_error(command, "invalid_argument", e.what(), kFailure);
  } catch (const std::exception& e) {
    return report_error(command, "runtime", e.what(), kFailure);
  }
  return kOk;
}
