#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "drasp/tensor.hpp"
#include "drasp/training.hpp"

namespace drasp {

/// Generator settings for the synthetic MOS benchmark.
///
/// Each system has a base quality q, an artifact process and a distractor
/// process. Frames are g(q) * p + noise, with g(q) = global_signal * (q - 3)
/// and p a fixed unit pattern. Artifact bursts of 3-8 frames add a
/// burst-constant random offset of scale artifact_amplitude * sqrt(severity)
/// to the noise of a contiguous span. Spikes are isolated frames with an
/// independent offset of scale artifact_amplitude * sqrt(spike_severity);
/// they leave the MOS untouched. A single burst frame and a spike frame look
/// alike, but a segment mean keeps a burst's offset and divides a spike's by
/// the segment length. Clip truth is
///   clamp(q - severity_coupling * artifact_fraction * severity, 1, 5).
struct BenchConfig {
  std::size_t num_systems = 20;
  std::size_t clips_per_system = 40;
  std::size_t min_frames = 80;
  std::size_t max_frames = 200;
  std::size_t input_width = 16;
  double noise = 1.0;
  double train_fraction = 0.7;
  double validation_fraction = 0.15;
  double test_fraction = 0.15;
  std::uint64_t seed = 0;

  double global_signal = 1.0;
  /// Expected-MOS range the systems are spread over (evenly spaced).
  double mos_low = 1.5;
  double mos_high = 4.3;
  /// Upper bound of the planted expected MOS drop due to artifacts.
  double max_artifact_drop = 2.5;
  double min_artifact_rate = 3.0;
  double max_artifact_rate = 7.0;
  double artifact_amplitude = 1.5;
  /// Per-system probability that a frame outside bursts is a spike.
  double min_spike_fraction = 0.05;
  double max_spike_fraction = 0.25;
  double max_spike_severity = 5.0;
  double severity_coupling = 2.0;  // c1
  double min_system_noise = 1.0;
  double max_system_noise = 1.0;
  std::size_t conditioning_width = 0;

  void validate() const;
  double mean_frames() const { return 0.5 * static_cast<double>(min_frames + max_frames); }
};

inline constexpr std::size_t kMinBurstLength = 3;
inline constexpr std::size_t kMaxBurstLength = 8;
inline constexpr double kMeanBurstLength = 0.5 * (kMinBurstLength + kMaxBurstLength);

struct SystemProfile {
  std::string system_id;
  double quality = 3.0;
  double artifact_rate = 0.0;      // expected bursts per clip
  double artifact_severity = 0.0;
  double noise_scale = 1.0;
  double spike_fraction = 0.0;
  double spike_severity = 0.0;
};

enum class Split : std::uint8_t { Train, Validation, Test };

std::string_view to_string(Split split);
std::optional<Split> parse_split(std::string_view name);

struct SyntheticClip {
  std::size_t system_index = 0;
  std::size_t clip_index = 0;  // within its system
  std::string system_id;
  Tensor frames;
  std::vector<std::uint8_t> artifact_mask;
  std::optional<Tensor> conditioning;
  double true_mos = 3.0;
  Split split = Split::Train;

  double artifact_fraction() const;
};

struct Dataset {
  BenchConfig config;
  std::vector<SystemProfile> systems;
  std::vector<SyntheticClip> clips;

  std::vector<const SyntheticClip*> split_clips(Split split) const;
};

/// Clip-level truth from base quality, artifact fraction and severity.
double clip_mos(double quality, double artifact_fraction, double severity, double coupling);

/// Closed-form expected system MOS: q - c1 * severity * rate * mean_burst / mean_T.
double expected_system_mos(const SystemProfile& profile, const BenchConfig& config);

std::vector<SystemProfile> sample_profiles(const BenchConfig& config);

/// Deterministic in config.seed. Each clip's frames come from a random stream
/// derived from (seed, system, clip).
Dataset generate(const BenchConfig& config);
Dataset generate(const BenchConfig& config, std::vector<SystemProfile> profiles);

/// Mean true MOS per system, over all clips or one split.
std::map<std::string, double> system_truth(const Dataset& dataset, std::optional<Split> split = std::nullopt);

/// Training examples of one split, each clip's truth repeated for every head.
std::vector<Example> make_examples(const Dataset& dataset, Split split, std::size_t heads);

}  // namespace drasp
