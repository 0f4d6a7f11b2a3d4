// Acceptance suite: one PASS/FAIL line per criterion. Pass criterion numbers
// as arguments to run a subset, e.g. `acceptance 1 4`.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <map>
#include <numeric>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "drasp/evaluation.hpp"
#include "drasp/experiment.hpp"
#include "drasp/gradcheck.hpp"
#include "drasp/io.hpp"
#include "drasp/metrics.hpp"
#include "drasp/pooling.hpp"
#include "drasp/training.hpp"
#include "metric_oracles.hpp"
#include "optimizer_oracles.hpp"
#include "test_support.hpp"

namespace drasp {
namespace {

namespace fs = std::filesystem;
using testing::random_tensor;
using testing::seeded;
using Clock = std::chrono::steady_clock;

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string fmt(const char* format, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, format, args...);
  return buf;
}

fs::path scratch_dir(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("drasp_acceptance_" + name);
  fs::remove_all(dir);
  return dir;
}

// ---------------------------------------------------------------- 1: gradients

struct Leaves {
  Var x;
  std::vector<AttentionParams> heads;
  FusionParams fusion;
  std::vector<double> temperatures;  // one per head
  double temperature = 1.0;           // single-head attentive pooling
  SegmentationSpec segments;
};

Outcome gradient_suite() {
  const auto start = Clock::now();
  constexpr int kInstances = 24;
  enum class Uses { Input, FirstHead, AllHeads };
  struct OpCase {
    std::string name;
    Uses uses;
    bool fusion;
    std::function<Var(const Leaves&)> op;
  };
  const std::vector<OpCase> ops{
      {"average", Uses::Input, false, [](const Leaves& l) { return average_pool(FrameMatrix(l.x)); }},
      {"statistics", Uses::Input, false,
       [](const Leaves& l) { return statistics_pool(FrameMatrix(l.x)).concat(); }},
      {"attentive", Uses::FirstHead, false,
       [](const Leaves& l) { return attentive_pool(FrameMatrix(l.x), l.heads[0], l.temperature); }},
      {"attentive_statistics", Uses::FirstHead, false,
       [](const Leaves& l) { return attentive_statistics_pool(FrameMatrix(l.x), l.heads[0]).concat(); }},
      {"segmental_attentive_statistics", Uses::FirstHead, false,
       [](const Leaves& l) {
         return segmental_attentive_statistics_pool(FrameMatrix(l.x), l.segments, l.heads[0]).concat();
       }},
      {"drasp", Uses::FirstHead, true,
       [](const Leaves& l) { return drasp_pool(FrameMatrix(l.x), l.segments, l.heads[0], l.fusion); }},
      {"multi_head", Uses::AllHeads, false,
       [](const Leaves& l) { return multihead_attentive_pool(FrameMatrix(l.x), l.heads); }},
      {"multi_resolution_multi_head", Uses::AllHeads, false,
       [](const Leaves& l) { return multires_multihead_attentive_pool(FrameMatrix(l.x), l.heads, l.temperatures); }},
  };

  std::map<std::string, double> worst;
  std::size_t checks = 0;
  for (int i = 0; i < kInstances; ++i) {
    auto rng = seeded(1000 + i);
    const auto t = static_cast<std::size_t>(uniform_int(rng, 2, 24));
    const auto d = static_cast<std::size_t>(uniform_int(rng, 1, 8));
    const auto da = static_cast<std::size_t>(uniform_int(rng, 1, 6));
    const auto k = static_cast<std::size_t>(uniform_int(rng, 1, 3));
    Leaves l;
    l.x = Var::leaf(random_tensor({t, d}, rng, -2.0, 2.0));
    for (std::size_t h = 0; h < k; ++h) {
      l.heads.push_back(AttentionParams::leaves(random_tensor({da, d}, rng), random_tensor({da}, rng),
                                                random_tensor({da}, rng, -2.0, 2.0)));
      l.temperatures.push_back(uniform(rng, 0.5, 4.0));
    }
    l.temperature = uniform(rng, 0.5, 4.0);
    l.fusion = FusionParams::leaves(uniform(rng, 0.5, 1.5), uniform(rng, -1.0, 1.0));
    l.segments = {static_cast<std::size_t>(uniform_int(rng, 1, static_cast<std::int64_t>(std::max<std::size_t>(t / 2, 1)))),
                  i % 2 ? PartialSegment::Include : PartialSegment::Drop};

    for (const auto& c : ops) {
      // A fixed random direction turns the pooled vector into a scalar.
      const Tensor projection = random_tensor(c.op(l).shape(), rng);
      auto f = [&] { return sum(mul(c.op(l), Var::constant(projection))); };
      std::vector<Var> leaves{l.x};
      const std::size_t used_heads = c.uses == Uses::Input ? 0 : c.uses == Uses::FirstHead ? 1 : l.heads.size();
      for (std::size_t h = 0; h < used_heads; ++h)
        leaves.insert(leaves.end(), {l.heads[h].weight, l.heads[h].bias, l.heads[h].vector});
      if (c.fusion) leaves.insert(leaves.end(), {l.fusion.alpha, l.fusion.beta});
      for (const auto& leaf : leaves) {
        const auto r = grad_check_leaf(f, leaf);
        worst[c.name] = std::max(worst[c.name], r.max_relative_error);
        ++checks;
      }
    }
  }
  const double elapsed = seconds_since(start);
  double max_err = 0.0;
  std::string worst_op;
  for (const auto& [name, e] : worst) {
    if (e >= max_err) {
      max_err = e;
      worst_op = name;
    }
  }
  const bool pass = worst.size() == 8 && max_err < 1e-4 && elapsed < 30.0;
  return {pass, fmt("8 operators x %d instances, %zu leaf checks, max rel err %.2e (%s), %.1fs", kInstances, checks,
                    max_err, worst_op.c_str(), elapsed)};
}

// ---------------------------------------------------------- 2: reductions

AttentionParams random_head(std::size_t d, std::size_t da, std::mt19937_64& rng) {
  return AttentionParams::fixed(random_tensor({da, d}, rng), random_tensor({da}, rng), random_tensor({da}, rng, -2, 2));
}

AttentionParams with_zero_vector(const AttentionParams& p) {
  return AttentionParams::fixed(p.weight.value(), p.bias.value(), Tensor::zeros({p.hidden_width()}));
}

Outcome reduction_identities() {
  std::map<std::string, double> err;
  auto track = [&](const std::string& name, double e) { err[name] = std::max(err[name], e); };
  for (int i = 0; i < 50; ++i) {
    auto rng = seeded(2000 + i);
    const auto t = static_cast<std::size_t>(uniform_int(rng, 2, 30));
    const auto d = static_cast<std::size_t>(uniform_int(rng, 1, 8));
    const FrameMatrix x(random_tensor({t, d}, rng, -3, 3));
    const auto p = random_head(d, 5, rng);
    const auto p0 = with_zero_vector(p);
    const SegmentationSpec seg{static_cast<std::size_t>(uniform_int(rng, 1, static_cast<std::int64_t>(t))),
                               PartialSegment::Include};
    const auto stats = statistics_pool(x);

    track("v=0 attentive -> average", max_abs_diff(attentive_pool(x, p0).value(), average_pool(x).value()));
    const auto as0 = attentive_statistics_pool(x, p0);
    track("v=0 attentive statistics -> statistics",
          std::max(max_abs_diff(as0.mean.value(), stats.mean.value()), max_abs_diff(as0.std.value(), stats.std.value())));
    const FrameMatrix means(segment_average(x, seg));
    const auto seg0 = segmental_attentive_statistics_pool(x, seg, p0);
    const auto mean_stats = statistics_pool(means);
    track("v=0 segmental -> statistics of segment means",
          std::max(max_abs_diff(seg0.mean.value(), mean_stats.mean.value()),
                   max_abs_diff(seg0.std.value(), mean_stats.std.value())));
    const std::vector<AttentionParams> zero_heads{p0, p0, p0};
    const auto avg = average_pool(x).value();
    Tensor tiled = Tensor::zeros({3 * d});
    for (std::size_t h = 0; h < 3; ++h)
      for (std::size_t j = 0; j < d; ++j) tiled[h * d + j] = avg[j];
    track("v=0 multi-head -> tiled average", max_abs_diff(multihead_attentive_pool(x, zero_heads).value(), tiled));

    const auto seg1 = segmental_attentive_statistics_pool(x, {1, PartialSegment::Include}, p);
    const auto frame = attentive_statistics_pool(x, p);
    track("n=1 segmental -> attentive statistics", std::max(max_abs_diff(seg1.mean.value(), frame.mean.value()),
                                                            max_abs_diff(seg1.std.value(), frame.std.value())));
    track("alpha=1 beta=0 DRASP -> statistics",
          max_abs_diff(drasp_pool(x, seg, p, FusionParams::fixed(1.0, 0.0)).value(), stats.concat().value()));
    const auto whole = segmental_attentive_statistics_pool(x, {t, PartialSegment::Include}, p);
    track("n=T segmental sigma -> clamp floor",
          max_abs_diff(whole.std.value(), Tensor::filled({d}, std::sqrt(kSqrtClampFloor))));
    const std::vector<AttentionParams> heads{p, random_head(d, 5, rng), random_head(d, 3, rng)};
    track("tau=1 multi-resolution -> multi-head",
          max_abs_diff(multires_multihead_attentive_pool(x, heads, {1.0, 1.0, 1.0}).value(),
                       multihead_attentive_pool(x, heads).value()));
  }
  double worst = 0.0;
  std::string worst_name;
  for (const auto& [name, e] : err) {
    if (e >= worst) {
      worst = e;
      worst_name = name;
    }
  }
  return {worst < 1e-12 && err.size() == 8,
          fmt("%zu identities x 50 instances, max abs err %.2e (%s)", err.size(), worst, worst_name.c_str())};
}

// -------------------------------------------------------- 3: permutations

Tensor permute_rows(const Tensor& x, const std::vector<std::size_t>& order) {
  Tensor out = Tensor::zeros(x.shape());
  for (std::size_t r = 0; r < order.size(); ++r)
    for (std::size_t c = 0; c < x.cols(); ++c) out.at(r, c) = x.at(order[r], c);
  return out;
}

Outcome permutation_invariances() {
  double segmental_err = 0.0, frame_err = 0.0;
  std::size_t cases = 0;
  for (int i = 0; i < 50; ++i) {
    auto rng = seeded(3000 + i);
    const auto t = static_cast<std::size_t>(uniform_int(rng, 3, 40));
    const auto d = static_cast<std::size_t>(uniform_int(rng, 1, 6));
    const auto n = static_cast<std::size_t>(uniform_int(rng, 1, static_cast<std::int64_t>(t)));
    const Tensor x = random_tensor({t, d}, rng, -3, 3);
    const auto p = random_head(d, 4, rng);
    const std::vector<AttentionParams> heads{p, random_head(d, 4, rng)};
    const SegmentationSpec seg{n, i % 2 ? PartialSegment::Include : PartialSegment::Drop};
    const auto fusion = FusionParams::fixed(0.8, 0.6);
    auto segmental = [&](const Tensor& v) {
      const FrameMatrix m(v);
      return std::vector<Tensor>{segmental_attentive_statistics_pool(m, seg, p).concat().value(),
                                 drasp_pool(m, seg, p, fusion).value()};
    };
    auto frame_level = [&](const Tensor& v) {
      const FrameMatrix m(v);
      return std::vector<Tensor>{average_pool(m).value(), statistics_pool(m).concat().value(),
                                 attentive_pool(m, p, 1.7).value(), attentive_statistics_pool(m, p).concat().value(),
                                 multihead_attentive_pool(m, heads).value(),
                                 multires_multihead_attentive_pool(m, heads, {1.0, 3.0}).value()};
    };
    auto compare = [](const std::vector<Tensor>& a, const std::vector<Tensor>& b) {
      double e = 0.0;
      for (std::size_t k = 0; k < a.size(); ++k) e = std::max(e, max_abs_diff(a[k], b[k]));
      return e;
    };

    // Within-segment shuffles, including inside a trailing partial segment.
    std::vector<std::size_t> within(t);
    std::iota(within.begin(), within.end(), 0);
    for (std::size_t s = 0; s < t; s += n)
      std::shuffle(within.begin() + s, within.begin() + std::min(t, s + n), rng);
    // Whole full segments reordered; a partial tail stays last.
    const std::size_t full = t / n;
    std::vector<std::size_t> seg_order(full);
    std::iota(seg_order.begin(), seg_order.end(), 0);
    std::shuffle(seg_order.begin(), seg_order.end(), rng);
    std::vector<std::size_t> whole;
    for (auto s : seg_order)
      for (std::size_t j = 0; j < n; ++j) whole.push_back(s * n + j);
    for (std::size_t r = full * n; r < t; ++r) whole.push_back(r);

    const auto base = segmental(x);
    segmental_err = std::max(segmental_err, compare(base, segmental(permute_rows(x, within))));
    segmental_err = std::max(segmental_err, compare(base, segmental(permute_rows(x, whole))));

    std::vector<std::size_t> any(t);
    std::iota(any.begin(), any.end(), 0);
    std::shuffle(any.begin(), any.end(), rng);
    frame_err = std::max(frame_err, compare(frame_level(x), frame_level(permute_rows(x, any))));
    ++cases;
  }
  return {segmental_err < 1e-12 && frame_err < 1e-12,
          fmt("%zu cases, segmental max err %.2e, frame-level max err %.2e", cases, segmental_err, frame_err)};
}

// ------------------------------------------------------------- 4: metrics

Outcome metric_oracles() {
  std::size_t vectors = 0, tied = 0;
  std::size_t ktau_mismatch = 0;
  double srcc_err = 0.0, monotone_err = 0.0;
  for (int i = 0; i < 300; ++i) {
    auto rng = seeded(4000 + i);
    const auto n = static_cast<std::size_t>(uniform_int(rng, 3, 60));
    const auto levels = static_cast<std::int64_t>(uniform_int(rng, 2, 12));
    std::vector<double> x(n), y(n);
    for (std::size_t j = 0; j < n; ++j) {
      // Half the trials draw from a few levels so ties are common.
      x[j] = i % 2 ? static_cast<double>(uniform_int(rng, 0, levels)) : uniform(rng, -5, 5);
      y[j] = i % 3 ? static_cast<double>(uniform_int(rng, 0, levels)) + 0.3 * x[j] : uniform(rng, -5, 5);
    }
    double expected_k, expected_s;
    try {
      expected_k = oracle::kendall_b(x, y);
      expected_s = oracle::spearman(x, y);
    } catch (const std::invalid_argument&) {
      continue;  // constant vector drawn; both sides reject it (checked in unit tests)
    }
    ++vectors;
    if (std::set<double>(x.begin(), x.end()).size() < n || std::set<double>(y.begin(), y.end()).size() < n) ++tied;
    if (ktau(x, y) != expected_k) ++ktau_mismatch;
    srcc_err = std::max(srcc_err, std::abs(srcc(x, y) - expected_s));

    std::vector<double> fx(n), gy(n);
    std::transform(x.begin(), x.end(), fx.begin(), [](double v) { return std::exp(0.3 * v) + v; });
    std::transform(y.begin(), y.end(), gy.begin(), [](double v) { return -1.0 / (20.0 + v); });
    monotone_err = std::max({monotone_err, std::abs(srcc(fx, gy) - srcc(x, y)), std::abs(ktau(fx, gy) - ktau(x, y))});
  }
  const bool pass = vectors >= 200 && tied >= 100 && ktau_mismatch == 0 && srcc_err < 1e-12 && monotone_err < 1e-12;
  return {pass, fmt("%zu vectors (%zu with ties), ktau mismatches %zu, srcc max err %.2e, monotone max err %.2e",
                    vectors, tied, ktau_mismatch, srcc_err, monotone_err)};
}

// -------------------------------------------------- 5: planted separation

Outcome planted_separation() {
  const auto start = Clock::now();
  auto config = default_experiment_config();
  config.experiment.methods = {PoolingMethod::Average, PoolingMethod::Statistics, PoolingMethod::AttentiveStatistics,
                               PoolingMethod::Drasp};
  config.experiment.seeds = {0, 1, 2, 3, 4};
  config.experiment.workers = std::max(1u, std::thread::hardware_concurrency());
  const auto result = cmd_compare(config, scratch_dir("planted"));
  const double elapsed = seconds_since(start);

  std::map<std::string, std::vector<double>> srcc_by_method;
  std::size_t failed = 0;
  for (const auto& r : result.rows) {
    if (r.ok) {
      srcc_by_method[r.method].push_back(r.metrics.srcc);
    } else {
      ++failed;
    }
  }
  auto mean_of = [&](PoolingMethod m) {
    const auto& v = srcc_by_method[std::string(to_string(m))];
    return v.empty() ? NAN : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  };
  const double avg = mean_of(PoolingMethod::Average);
  const double stat = mean_of(PoolingMethod::Statistics);
  const double att = mean_of(PoolingMethod::AttentiveStatistics);
  const double drasp = mean_of(PoolingMethod::Drasp);
  const bool pass = failed == 0 && drasp >= avg + 0.05 && drasp >= std::max(stat, att) && elapsed < 900.0;
  return {pass, fmt("mean test SRCC over 5 seeds: drasp %.4f, average %.4f, statistics %.4f, attentive_statistics "
                    "%.4f; %zu failed runs; %.0fs",
                    drasp, avg, stat, att, failed, elapsed)};
}

// ------------------------------------------------------- 6: fusion learning

ExperimentConfig artifact_heavy_config() {
  auto config = default_experiment_config();
  config.bench.global_signal = 0.25;
  config.bench.max_artifact_drop = 3.0;
  config.model.pooling.method = PoolingMethod::Drasp;
  config.train.max_epochs = 30;
  config.train.patience = 10;
  config.experiment.seeds = {0};
  return config;
}

Outcome fusion_learning() {
  const auto start = Clock::now();
  const auto config = artifact_heavy_config();
  const auto ckpt = cmd_train(config, scratch_dir("fusion"));
  const auto model = restore_model(load_checkpoint(ckpt));
  const double beta = model.parameters().at("pool.beta").var.value().item();
  const double alpha = model.parameters().at("pool.alpha").var.value().item();
  return {std::abs(beta) > 1e-3,
          fmt("best checkpoint beta %.4f (alpha %.4f), |beta - 0| %s 1e-3; %.0fs", beta, alpha,
              std::abs(beta) > 1e-3 ? ">" : "<=", seconds_since(start))};
}

// ----------------------------------------------------------- 7: determinism

Outcome determinism() {
  auto config = default_experiment_config();
  config.bench.num_systems = 6;
  config.bench.clips_per_system = 10;
  config.bench.min_frames = 20;
  config.bench.max_frames = 40;
  config.train.max_epochs = 3;
  config.experiment.seeds = {0, 1};
  const auto a = cmd_compare(config, scratch_dir("det_a"));
  const auto b = cmd_compare(config, scratch_dir("det_b"));
  const bool tables = read_file(a.table) == read_file(b.table) && read_file(a.summary) == read_file(b.summary);

  config.model.pooling.method = PoolingMethod::Drasp;
  const auto dir = scratch_dir("det_ckpt");
  const auto ckpt = cmd_train(config, dir);
  const auto text = read_file(ckpt);
  const auto restored = restore_model(load_checkpoint(ckpt));
  const auto original = parse_checkpoint(text);
  bool params = original.parameters.size() == restored.parameters().size();
  for (const auto& [name, value] : restored.parameters().snapshot())
    params = params && original.parameters.count(name) && value.identical(original.parameters.at(name));
  const bool text_same = checkpoint_text(restored, original.train) == text;
  return {tables && params && text_same,
          fmt("compare tables byte-identical: %s (%zu rows); checkpoint parameters bit-exact: %s; re-serialized "
              "checkpoint identical: %s",
              tables ? "yes" : "no", a.rows.size(), params ? "yes" : "no", text_same ? "yes" : "no")};
}

// ----------------------------------------------------- 8: training contracts

Outcome training_contracts() {
  std::vector<std::string> failures;

  // SGD on 0.5 (w - 3)^2 from w = 1 with lr 0.1: w - 0.1 * (1 - 3) = 1.2.
  {
    ParameterSet params;
    Var w = params.add("w", Tensor::scalar(1.0));
    backward(scale(square(sub(w, Var::constant(Tensor::scalar(3.0)))), 0.5));
    Sgd(0.1).step(params);
    if (std::abs(w.value().item() - 1.2) > 1e-15 || w.value().item() != oracle::sgd_step(1.0, 3.0, 0.1))
      failures.push_back(fmt("sgd %.17g", w.value().item()));
  }
  // AdamW (lr 0.1, betas 0.9/0.999, eps 1e-8, decay 0.01) on the same loss.
  // Step 1: g = -2, w <- 0.999, m_hat = -2, v_hat = 4, w <- 0.999 + 0.1 * 2 / (2 + 1e-8).
  {
    ParameterSet params;
    Var w = params.add("w", Tensor::scalar(1.0));
    AdamW opt(0.1, 0.9, 0.999, 1e-8, 0.01);
    const double hand[2] = {0.999 + 0.2 / (2.0 + 1e-8), 1.1977365527636898};
    const auto reference = oracle::adamw_trajectory(1.0, 3.0, {0.1, 0.9, 0.999, 1e-8, 0.01}, 2);
    for (int step = 0; step < 2; ++step) {
      params.zero_grad();
      backward(scale(square(sub(w, Var::constant(Tensor::scalar(3.0)))), 0.5));
      opt.step(params);
      const double got = w.value().item();
      if (std::abs(got - hand[step]) > 1e-12 || std::abs(got - reference[step]) > 1e-15)
        failures.push_back(fmt("adamw step %d %.17g", step + 1, got));
    }
  }
  // Patience 1, validation losses 1.0, 0.5, 0.6, ...: stops after epoch 3
  // and restores the epoch-2 parameters.
  {
    ModelConfig mc;
    mc.input_width = 3;
    mc.encoder_hidden = 4;
    mc.embed_width = 2;
    mc.head_hidden = 3;
    mc.pooling.attention_width = 3;
    mc.pooling.segmentation.segment_length = 2;
    MosModel model(mc);
    auto rng = seeded(8);
    std::vector<Example> train_set, validation_set;
    for (int i = 0; i < 6; ++i) train_set.push_back({random_tensor({7, 3}, rng), std::nullopt, {uniform(rng, 1, 5)}});
    for (int i = 0; i < 3; ++i)
      validation_set.push_back({random_tensor({7, 3}, rng), std::nullopt, {uniform(rng, 1, 5)}});
    TrainConfig tc;
    tc.learning_rate = 1e-2;
    tc.batch_size = 2;
    tc.max_epochs = 10;
    tc.patience = 1;
    const std::vector<double> scripted{1.0, 0.5, 0.6, 0.4, 0.3};
    std::map<std::string, Tensor> epoch2;
    TrainHooks hooks;
    hooks.validation_override = [&](std::size_t epoch, double) { return scripted.at(epoch - 1); };
    hooks.on_epoch = [&](const EpochRecord& r) {
      if (r.epoch == 2) epoch2 = model.parameters().snapshot();
    };
    const auto result = train(model, train_set, validation_set, tc, hooks);
    bool restored = !epoch2.empty();
    for (const auto& [name, value] : model.parameters().snapshot())
      restored = restored && value.identical(epoch2.at(name));
    if (result.history.size() != 3 || result.best_epoch != 2 || !result.stopped_early || !restored)
      failures.push_back(fmt("patience: %zu epochs, best %zu, restored %d", result.history.size(), result.best_epoch,
                             static_cast<int>(restored)));
  }
  std::string detail = "sgd single step, adamw two steps, scripted patience";
  for (const auto& f : failures) detail += "; FAILED " + f;
  return {failures.empty(), detail};
}

}  // namespace
}  // namespace drasp

int main(int argc, char** argv) {
  using namespace drasp;
  const std::vector<std::pair<int, std::pair<const char*, Outcome (*)()>>> criteria{
      {1, {"gradient suite", gradient_suite}},
      {2, {"reduction identities", reduction_identities}},
      {3, {"permutation invariances", permutation_invariances}},
      {4, {"metric oracles", metric_oracles}},
      {5, {"planted-signal separation", planted_separation}},
      {6, {"fusion learning", fusion_learning}},
      {7, {"determinism", determinism}},
      {8, {"training contracts", training_contracts}},
  };
  std::set<int> selected;
  for (int i = 1; i < argc; ++i) selected.insert(std::atoi(argv[i]));
  int failures = 0;
  for (const auto& [id, entry] : criteria) {
    if (!selected.empty() && !selected.count(id)) continue;
    Outcome outcome;
    try {
      outcome = entry.second();
    } catch (const std::exception& e) {
      outcome = {false, std::string("exception: ") + e.what()};
    }
    failures += !outcome.pass;
    std::printf("%s criterion %d (%s): %s\n", outcome.pass ? "PASS" : "FAIL", id, entry.first, outcome.detail.c_str());
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
