#include "drasp/synthbench.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <stdexcept>

#include "drasp/random.hpp"

namespace drasp {

void BenchConfig::validate() const {
  if (num_systems == 0) throw std::invalid_argument("num_systems must be positive");
  if (clips_per_system == 0) throw std::invalid_argument("clips_per_system must be positive");
  if (min_frames == 0 || min_frames > max_frames) throw std::invalid_argument("invalid frame range");
  if (min_frames < kMaxBurstLength) throw std::invalid_argument("min_frames must be at least 8");
  if (input_width == 0) throw std::invalid_argument("input_width must be positive");
  if (noise < 0.0) throw std::invalid_argument("noise must be non-negative");
  const double fractions[3] = {train_fraction, validation_fraction, test_fraction};
  for (double f : fractions)
    if (!(f >= 0.0 && f <= 1.0)) throw std::invalid_argument("invalid fractions");
  if (std::abs(train_fraction + validation_fraction + test_fraction - 1.0) > 1e-9) {
    throw std::invalid_argument("invalid fractions");
  }
  if (!(mos_low >= 1.0 && mos_high <= 5.0 && mos_low <= mos_high)) throw std::invalid_argument("invalid MOS range");
  if (max_artifact_drop < 0.0 || min_artifact_rate < 0.0 || min_artifact_rate > max_artifact_rate) {
    throw std::invalid_argument("invalid artifact settings");
  }
  if (max_artifact_drop > 0.0 && !(min_artifact_rate > 0.0)) {
    throw std::invalid_argument("artifact drops need a positive minimum artifact rate");
  }
  if (artifact_amplitude < 0.0 || severity_coupling < 0.0) throw std::invalid_argument("invalid artifact settings");
  if (!(min_spike_fraction >= 0.0 && min_spike_fraction <= max_spike_fraction && max_spike_fraction < 1.0) ||
      max_spike_severity < 0.0) {
    throw std::invalid_argument("invalid spike settings");
  }
  if (min_system_noise < 0.0 || min_system_noise > max_system_noise) throw std::invalid_argument("invalid noise range");
}

std::string_view to_string(Split split) {
  switch (split) {
    case Split::Train:
      return "train";
    case Split::Validation:
      return "validation";
    case Split::Test:
      return "test";
  }
  return "unknown";
}

std::optional<Split> parse_split(std::string_view name) {
  if (name == "train") return Split::Train;
  if (name == "validation") return Split::Validation;
  if (name == "test") return Split::Test;
  return std::nullopt;
}

double SyntheticClip::artifact_fraction() const {
  if (artifact_mask.empty()) return 0.0;
  const auto hits = std::count(artifact_mask.begin(), artifact_mask.end(), std::uint8_t{1});
  return static_cast<double>(hits) / static_cast<double>(artifact_mask.size());
}

std::vector<const SyntheticClip*> Dataset::split_clips(Split split) const {
  std::vector<const SyntheticClip*> out;
  for (const auto& c : clips)
    if (c.split == split) out.push_back(&c);
  return out;
}

double clip_mos(double quality, double artifact_fraction, double severity, double coupling) {
  return std::clamp(quality - coupling * artifact_fraction * severity, 1.0, 5.0);
}

double expected_system_mos(const SystemProfile& profile, const BenchConfig& config) {
  return profile.quality - config.severity_coupling * profile.artifact_severity * profile.artifact_rate *
                               kMeanBurstLength / config.mean_frames();
}

std::vector<SystemProfile> sample_profiles(const BenchConfig& config) {
  config.validate();
  auto rng = make_rng(config.seed, {tag("profiles")});
  const std::size_t n = config.num_systems;

  std::vector<double> targets(n);
  for (std::size_t i = 0; i < n; ++i) {
    targets[i] = n == 1 ? 0.5 * (config.mos_low + config.mos_high)
                        : config.mos_low + (config.mos_high - config.mos_low) * static_cast<double>(i) /
                                               static_cast<double>(n - 1);
  }
  for (std::size_t i = n; i > 1; --i) {
    std::swap(targets[i - 1], targets[static_cast<std::size_t>(uniform_int(rng, 0, static_cast<std::int64_t>(i - 1)))]);
  }

  const double burst_share = kMeanBurstLength / config.mean_frames();
  std::vector<SystemProfile> profiles(n);
  for (std::size_t i = 0; i < n; ++i) {
    auto& p = profiles[i];
    char id[32];
    std::snprintf(id, sizeof id, "sys%02zu", i);
    p.system_id = id;
    p.noise_scale = uniform(rng, config.min_system_noise, config.max_system_noise);
    const double drop = uniform(rng, 0.0, std::min(config.max_artifact_drop, 5.0 - targets[i]));
    const double rate = uniform(rng, config.min_artifact_rate, config.max_artifact_rate);
    if (drop > 0.0 && config.severity_coupling > 0.0) {
      p.artifact_rate = rate;
      p.artifact_severity = drop / (config.severity_coupling * rate * burst_share);
    }
    p.quality = targets[i] + drop;
    p.spike_fraction = uniform(rng, config.min_spike_fraction, config.max_spike_fraction);
    p.spike_severity = uniform(rng, 0.0, config.max_spike_severity);
  }
  return profiles;
}

namespace {

struct ClipPlan {
  std::size_t frames = 0;
  std::vector<std::size_t> bursts;  // lengths
};

// Burst counts follow the running total of rate * T / mean_T so that each
// system's artifact budget tracks its expectation; lengths cycle through
// shuffled rounds of 3..8.
std::vector<ClipPlan> plan_system(const BenchConfig& config, const SystemProfile& profile, std::size_t system) {
  auto rng = make_rng(config.seed, {tag("plan"), system});
  std::vector<ClipPlan> plans(config.clips_per_system);
  std::vector<std::size_t> cycle;
  std::size_t cursor = 0;
  auto next_length = [&] {
    if (cursor == cycle.size()) {
      cycle.clear();
      for (std::size_t l = kMinBurstLength; l <= kMaxBurstLength; ++l) cycle.push_back(l);
      for (std::size_t i = cycle.size(); i > 1; --i)
        std::swap(cycle[i - 1], cycle[static_cast<std::size_t>(uniform_int(rng, 0, static_cast<std::int64_t>(i - 1)))]);
      cursor = 0;
    }
    return cycle[cursor++];
  };

  double running = uniform01(rng);
  for (auto& plan : plans) {
    plan.frames = static_cast<std::size_t>(uniform_int(rng, static_cast<std::int64_t>(config.min_frames),
                                                       static_cast<std::int64_t>(config.max_frames)));
    if (profile.artifact_rate <= 0.0) continue;
    const double next = running + profile.artifact_rate * static_cast<double>(plan.frames) / config.mean_frames();
    const auto count = static_cast<std::size_t>(std::floor(next) - std::floor(running));
    running = next;
    std::size_t used = 0;
    for (std::size_t b = 0; b < count; ++b) {
      const std::size_t len = next_length();
      if (used + len > plan.frames) break;
      plan.bursts.push_back(len);
      used += len;
    }
  }
  return plans;
}

SyntheticClip render_clip(const BenchConfig& config, const SystemProfile& profile, const std::vector<double>& pattern,
                          std::size_t system, std::size_t clip, const ClipPlan& plan) {
  auto rng = make_rng(config.seed, {tag("clip"), system, clip});
  const std::size_t t_len = plan.frames;
  const std::size_t d = config.input_width;

  SyntheticClip out;
  out.system_index = system;
  out.clip_index = clip;
  out.system_id = profile.system_id;
  out.artifact_mask.assign(t_len, 0);

  // Non-overlapping placement: random gaps that sum to the free frames.
  const std::size_t used = std::accumulate(plan.bursts.begin(), plan.bursts.end(), std::size_t{0});
  const std::size_t free = t_len - used;
  std::vector<std::size_t> cuts(plan.bursts.size());
  for (auto& c : cuts) c = static_cast<std::size_t>(uniform_int(rng, 0, static_cast<std::int64_t>(free)));
  std::sort(cuts.begin(), cuts.end());
  std::vector<std::size_t> starts(plan.bursts.size());
  std::size_t offset = 0;
  for (std::size_t b = 0; b < plan.bursts.size(); ++b) {
    starts[b] = cuts[b] + offset;
    offset += plan.bursts[b];
  }

  const double level = config.global_signal * (profile.quality - 3.0);
  const double sigma = config.noise * profile.noise_scale;
  Tensor frames = Tensor::zeros({t_len, d});
  for (std::size_t t = 0; t < t_len; ++t)
    for (std::size_t j = 0; j < d; ++j) frames.at(t, j) = level * pattern[j] + sigma * normal(rng);

  const double amplitude = config.artifact_amplitude * std::sqrt(profile.artifact_severity);
  for (std::size_t b = 0; b < plan.bursts.size(); ++b) {
    std::vector<double> burst(d);
    for (auto& v : burst) v = amplitude * normal(rng);
    for (std::size_t t = starts[b]; t < starts[b] + plan.bursts[b]; ++t) {
      out.artifact_mask[t] = 1;
      for (std::size_t j = 0; j < d; ++j) frames.at(t, j) += burst[j];
    }
  }
  const double spike = config.artifact_amplitude * std::sqrt(profile.spike_severity);
  for (std::size_t t = 0; t < t_len; ++t) {
    if (out.artifact_mask[t] || !(uniform01(rng) < profile.spike_fraction)) continue;
    for (std::size_t j = 0; j < d; ++j) frames.at(t, j) += spike * normal(rng);
  }
  out.frames = std::move(frames);

  if (config.conditioning_width > 0) {
    Tensor cond = Tensor::zeros({config.conditioning_width});
    for (auto& v : cond.data()) v = normal(rng);
    out.conditioning = std::move(cond);
  }
  out.true_mos = clip_mos(profile.quality, out.artifact_fraction(), profile.artifact_severity,
                          config.severity_coupling);
  return out;
}

std::vector<Split> assign_splits(const BenchConfig& config, std::size_t system) {
  const std::size_t n = config.clips_per_system;
  // Floor of each fraction (with a 1e-9 guard against representation error),
  // remainder to test.
  const auto n_train = static_cast<std::size_t>(std::floor(config.train_fraction * static_cast<double>(n) + 1e-9));
  const auto n_val = static_cast<std::size_t>(std::floor(config.validation_fraction * static_cast<double>(n) + 1e-9));
  if (n_train == 0 || n_val == 0 || n_train + n_val >= n) {
    throw std::invalid_argument("invalid fractions: every system needs clips in every split");
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  auto rng = make_rng(config.seed, {tag("split"), system});
  for (std::size_t i = n; i > 1; --i)
    std::swap(order[i - 1], order[static_cast<std::size_t>(uniform_int(rng, 0, static_cast<std::int64_t>(i - 1)))]);
  std::vector<Split> splits(n, Split::Test);
  for (std::size_t k = 0; k < n_train; ++k) splits[order[k]] = Split::Train;
  for (std::size_t k = n_train; k < n_train + n_val; ++k) splits[order[k]] = Split::Validation;
  return splits;
}

}  // namespace

Dataset generate(const BenchConfig& config) { return generate(config, sample_profiles(config)); }

Dataset generate(const BenchConfig& config, std::vector<SystemProfile> profiles) {
  config.validate();
  if (profiles.size() != config.num_systems) throw std::invalid_argument("profile count does not match num_systems");
  for (const auto& p : profiles) {
    if (!(p.quality >= 1.0 && p.quality <= 5.0)) throw std::invalid_argument("system quality must lie in [1, 5]");
    if (p.artifact_rate < 0.0 || p.artifact_severity < 0.0 || p.noise_scale < 0.0 || p.spike_fraction < 0.0 ||
        p.spike_fraction >= 1.0 || p.spike_severity < 0.0) {
      throw std::invalid_argument("invalid system profile " + p.system_id);
    }
  }

  std::vector<double> pattern(config.input_width);
  {
    auto rng = make_rng(config.seed, {tag("pattern")});
    double norm = 0.0;
    for (auto& v : pattern) {
      v = normal(rng);
      norm += v * v;
    }
    norm = std::sqrt(norm);
    for (auto& v : pattern) v /= norm;
  }

  Dataset ds;
  ds.config = config;
  ds.systems = std::move(profiles);
  ds.clips.reserve(config.num_systems * config.clips_per_system);
  for (std::size_t s = 0; s < config.num_systems; ++s) {
    const auto plans = plan_system(config, ds.systems[s], s);
    const auto splits = assign_splits(config, s);
    for (std::size_t c = 0; c < config.clips_per_system; ++c) {
      ds.clips.push_back(render_clip(config, ds.systems[s], pattern, s, c, plans[c]));
      ds.clips.back().split = splits[c];
    }
  }
  return ds;
}

std::map<std::string, double> system_truth(const Dataset& dataset, std::optional<Split> split) {
  std::map<std::string, std::pair<double, std::size_t>> acc;
  for (const auto& c : dataset.clips) {
    if (split && c.split != *split) continue;
    auto& [total, count] = acc[c.system_id];
    total += c.true_mos;
    ++count;
  }
  if (acc.empty()) throw std::invalid_argument("empty dataset");
  std::map<std::string, double> out;
  for (const auto& [id, tc] : acc) out.emplace(id, tc.first / static_cast<double>(tc.second));
  return out;
}

std::vector<Example> make_examples(const Dataset& dataset, Split split, std::size_t heads) {
  std::vector<Example> out;
  for (const auto* c : dataset.split_clips(split)) {
    out.push_back({c->frames, c->conditioning, std::vector<double>(heads, c->true_mos)});
  }
  return out;
}

}  // namespace drasp
