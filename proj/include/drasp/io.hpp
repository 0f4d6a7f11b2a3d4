#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>

#include "drasp/model.hpp"
#include "drasp/synthbench.hpp"
#include "drasp/training.hpp"

namespace drasp {

/// FNV-1a, 64 bit.
std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t seed = 0xcbf29ce484222325ULL);
std::string hex64(std::uint64_t value);

// Checkpoint text format, version 1:
//
//   drasp-checkpoint 1
//   <key> = <value>            model.*, pool.* and train.* echo
//   ...
//   tensors <count>
//   tensor <name> <rank> <extent>...
//   <hex float> ...            row-major values, one line per tensor
//
// Values are written as C hex floats, so a round trip is bit-exact.

inline constexpr int kCheckpointVersion = 1;

struct Checkpoint {
  ModelConfig model;
  TrainConfig train;
  std::map<std::string, Tensor> parameters;
};

std::string checkpoint_text(const MosModel& model, const TrainConfig& train);
Checkpoint parse_checkpoint(std::string_view text);
void save_checkpoint(const std::filesystem::path& path, const MosModel& model, const TrainConfig& train);
Checkpoint load_checkpoint(const std::filesystem::path& path);
/// Builds the model described by the checkpoint and loads its parameters.
MosModel restore_model(const Checkpoint& checkpoint);

// Dataset directory format, version 1:
//
//   manifest.txt     text: header line `drasp-dataset 1`, the bench.* config
//                    echo, one `system` line per system, one `clip` line per
//                    clip (system, index, split, true MOS, file, checksum)
//   clips/*.bin      per clip: magic "DRASPCLP", u32 version, u64 T, u64 d,
//                    u64 conditioning width, T*d frame doubles (row-major),
//                    conditioning doubles, T artifact-mask bytes; all
//                    integers and doubles little-endian
//
// Reals in the manifest are hex floats. Checksums are FNV-1a 64 of the clip
// file bytes; the dataset checksum is FNV-1a 64 of the manifest.

inline constexpr int kDatasetVersion = 1;

std::string clip_bytes(const SyntheticClip& clip);
SyntheticClip parse_clip_bytes(std::string_view bytes);

/// Writes the dataset and returns its checksum.
std::uint64_t save_dataset(const Dataset& dataset, const std::filesystem::path& directory);
/// Reads a dataset written by save_dataset, verifying every clip checksum.
Dataset load_dataset(const std::filesystem::path& directory);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view contents);

}  // namespace drasp
