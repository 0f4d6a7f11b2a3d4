#include "drasp/io.hpp"

#include <bit>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <vector>

#include "drasp/config.hpp"

namespace drasp {

namespace {

constexpr std::string_view kClipMagic = "DRASPCLP";

std::string hex_double(double v) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::hex);
  return std::string(buf, r.ptr);
}

double parse_hex_double(std::string_view s) {
  double v = 0.0;
  const auto r = std::from_chars(s.data(), s.data() + s.size(), v, std::chars_format::hex);
  if (r.ec != std::errc{} || r.ptr != s.data() + s.size()) {
    throw std::runtime_error("malformed hex float '" + std::string(s) + "'");
  }
  return v;
}

void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

struct Reader {
  std::string_view bytes;
  std::size_t pos = 0;

  void need(std::size_t n) const {
    if (bytes.size() - pos < n) throw std::runtime_error("truncated clip file");
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= std::uint64_t{static_cast<unsigned char>(bytes[pos + i])} << (8 * i);
    pos += 8;
    return v;
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= std::uint32_t{static_cast<unsigned char>(bytes[pos + i])} << (8 * i);
    pos += 4;
    return v;
  }
  double f64() { return std::bit_cast<double>(u64()); }
};

// Whitespace-separated tokens of one line.
std::vector<std::string_view> tokens(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
    const std::size_t start = i;
    while (i < line.size() && line[i] != ' ' && line[i] != '\t' && line[i] != '\r') ++i;
    if (i > start) out.push_back(line.substr(start, i - start));
  }
  return out;
}

class LineCursor {
 public:
  explicit LineCursor(std::string_view text) : text_(text) {}
  bool done() const { return pos_ >= text_.size(); }
  std::string_view next() {
    if (done()) throw std::runtime_error("unexpected end of file");
    const auto end = text_.find('\n', pos_);
    const auto line = text_.substr(pos_, end == std::string_view::npos ? std::string_view::npos : end - pos_);
    pos_ = end == std::string_view::npos ? text_.size() : end + 1;
    return line;
  }

 private:
  std::string_view text_;
  std::size_t pos_ = 0;
};

std::uint64_t parse_hex64(std::string_view s) {
  std::uint64_t v = 0;
  const auto r = std::from_chars(s.data(), s.data() + s.size(), v, 16);
  if (r.ec != std::errc{} || r.ptr != s.data() + s.size()) throw std::runtime_error("malformed checksum");
  return v;
}

void expect_header(std::string_view line, std::string_view name, int version) {
  const auto t = tokens(line);
  if (t.size() != 2 || t[0] != name) throw std::runtime_error("not a " + std::string(name) + " file");
  if (parse_unsigned(t[1]) != static_cast<std::uint64_t>(version)) {
    throw std::runtime_error("unsupported " + std::string(name) + " version " + std::string(t[1]));
  }
}

// Reads `key = value` lines until a line starting with `stop`.
KeyValues read_echo(LineCursor& lines, std::string_view stop, std::string_view& stop_line) {
  std::string echo;
  while (true) {
    const auto line = lines.next();
    if (line.starts_with(stop)) {
      stop_line = line;
      break;
    }
    echo += line;
    echo += '\n';
  }
  return parse_key_values(echo);
}

}  // namespace

std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t seed) {
  std::uint64_t h = seed;
  for (char c : bytes) h = (h ^ static_cast<unsigned char>(c)) * 0x100000001b3ULL;
  return h;
}

std::string hex64(std::uint64_t value) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(value));
  return buf;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void write_file(const std::filesystem::path& path, std::string_view contents) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

std::string checkpoint_text(const MosModel& model, const TrainConfig& train) {
  std::string out = "drasp-checkpoint " + std::to_string(kCheckpointVersion) + "\n";
  out += format_key_values(model_key_values(model.config()));
  out += format_key_values(train_key_values(train));
  const auto& params = model.parameters().items();
  out += "tensors " + std::to_string(params.size()) + "\n";
  for (const auto& p : params) {
    const Tensor& t = p.var.value();
    out += "tensor " + p.name + " " + std::to_string(t.rank());
    for (auto e : t.shape()) out += " " + std::to_string(e);
    out += "\n";
    for (std::size_t i = 0; i < t.size(); ++i) {
      if (i) out += ' ';
      out += hex_double(t[i]);
    }
    out += "\n";
  }
  return out;
}

Checkpoint parse_checkpoint(std::string_view text) {
  LineCursor lines(text);
  expect_header(lines.next(), "drasp-checkpoint", kCheckpointVersion);
  std::string_view stop;
  const KeyValues echo = read_echo(lines, "tensors ", stop);

  ExperimentConfig base;
  base.model = ModelConfig{};
  base.train = TrainConfig{};
  for (const auto& [key, value] : echo) {
    if (!key.starts_with("model.") && !key.starts_with("pool.") && !key.starts_with("train.")) {
      throw std::runtime_error("unexpected checkpoint key '" + key + "'");
    }
  }
  const auto parsed = from_key_values(echo, base);

  Checkpoint cp{parsed.model, parsed.train, {}};
  const auto count = parse_unsigned(tokens(stop).at(1));
  for (std::uint64_t k = 0; k < count; ++k) {
    const auto head = tokens(lines.next());
    if (head.size() < 3 || head[0] != "tensor") throw std::runtime_error("malformed tensor header");
    const auto rank = parse_unsigned(head[2]);
    if (head.size() != 3 + rank) throw std::runtime_error("malformed tensor header");
    Shape shape;
    for (std::uint64_t r = 0; r < rank; ++r) shape.push_back(static_cast<std::size_t>(parse_unsigned(head[3 + r])));
    Tensor t = Tensor::zeros(shape);
    const auto values = tokens(lines.next());
    if (values.size() != t.size()) throw std::runtime_error("tensor " + std::string(head[1]) + " has wrong size");
    for (std::size_t i = 0; i < t.size(); ++i) t[i] = parse_hex_double(values[i]);
    if (!cp.parameters.emplace(std::string(head[1]), std::move(t)).second) {
      throw std::runtime_error("duplicate tensor " + std::string(head[1]));
    }
  }
  return cp;
}

void save_checkpoint(const std::filesystem::path& path, const MosModel& model, const TrainConfig& train) {
  write_file(path, checkpoint_text(model, train));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw std::runtime_error("missing checkpoint " + path.string());
  return parse_checkpoint(read_file(path));
}

MosModel restore_model(const Checkpoint& checkpoint) {
  MosModel model(checkpoint.model);
  if (checkpoint.parameters.size() != model.parameters().size()) {
    throw std::runtime_error("checkpoint parameters do not match the model configuration");
  }
  model.parameters().restore(checkpoint.parameters);
  return model;
}

std::string clip_bytes(const SyntheticClip& clip) {
  const Tensor& x = clip.frames;
  const std::size_t cond = clip.conditioning ? clip.conditioning->size() : 0;
  std::string out(kClipMagic);
  put_u32(out, kDatasetVersion);
  put_u64(out, x.rows());
  put_u64(out, x.cols());
  put_u64(out, cond);
  for (double v : x.data()) put_u64(out, std::bit_cast<std::uint64_t>(v));
  if (clip.conditioning)
    for (double v : clip.conditioning->data()) put_u64(out, std::bit_cast<std::uint64_t>(v));
  for (auto m : clip.artifact_mask) out.push_back(static_cast<char>(m));
  return out;
}

SyntheticClip parse_clip_bytes(std::string_view bytes) {
  Reader r{bytes};
  r.need(kClipMagic.size());
  if (bytes.substr(0, kClipMagic.size()) != kClipMagic) throw std::runtime_error("not a clip file");
  r.pos = kClipMagic.size();
  if (r.u32() != kDatasetVersion) throw std::runtime_error("unsupported clip file version");
  const auto rows = static_cast<std::size_t>(r.u64());
  const auto cols = static_cast<std::size_t>(r.u64());
  const auto cond = static_cast<std::size_t>(r.u64());
  if (rows == 0 || cols == 0) throw std::runtime_error("empty clip");
  r.need(rows * cols * 8);
  SyntheticClip clip;
  clip.frames = Tensor::zeros({rows, cols});
  for (auto& v : clip.frames.data()) v = r.f64();
  if (cond > 0) {
    clip.conditioning = Tensor::zeros({cond});
    for (auto& v : clip.conditioning->data()) v = r.f64();
  }
  r.need(rows);
  clip.artifact_mask.resize(rows);
  for (auto& m : clip.artifact_mask) {
    m = static_cast<std::uint8_t>(bytes[r.pos++]);
    if (m > 1) throw std::runtime_error("invalid artifact mask");
  }
  if (r.pos != bytes.size()) throw std::runtime_error("trailing bytes in clip file");
  return clip;
}

std::uint64_t save_dataset(const Dataset& dataset, const std::filesystem::path& directory) {
  std::filesystem::create_directories(directory / "clips");
  std::string manifest = "drasp-dataset " + std::to_string(kDatasetVersion) + "\n";
  manifest += format_key_values(bench_key_values(dataset.config));
  manifest += "systems " + std::to_string(dataset.systems.size()) + "\n";
  for (const auto& s : dataset.systems) {
    if (s.system_id.empty() || tokens(s.system_id).size() != 1 || tokens(s.system_id)[0] != s.system_id) {
      throw std::invalid_argument("system id '" + s.system_id + "' must be a single non-empty word");
    }
    manifest += "system " + s.system_id + " " + hex_double(s.quality) + " " + hex_double(s.artifact_rate) + " " +
                hex_double(s.artifact_severity) + " " + hex_double(s.noise_scale) + " " + hex_double(s.spike_fraction) + " " +
                hex_double(s.spike_severity) + "\n";
  }
  manifest += "clips " + std::to_string(dataset.clips.size()) + "\n";
  for (const auto& c : dataset.clips) {
    char name[64];
    std::snprintf(name, sizeof name, "clips/s%03zu_c%04zu.bin", c.system_index, c.clip_index);
    const std::string bytes = clip_bytes(c);
    write_file(directory / name, bytes);
    manifest += "clip " + std::to_string(c.system_index) + " " + std::to_string(c.clip_index) + " " +
                std::string(to_string(c.split)) + " " + hex_double(c.true_mos) + " " + name + " " +
                hex64(fnv1a64(bytes)) + "\n";
  }
  write_file(directory / "manifest.txt", manifest);
  return fnv1a64(manifest);
}

Dataset load_dataset(const std::filesystem::path& directory) {
  const auto manifest_path = directory / "manifest.txt";
  if (!std::filesystem::exists(manifest_path)) throw std::runtime_error("no dataset at " + directory.string());
  const std::string text = read_file(manifest_path);
  LineCursor lines(text);
  expect_header(lines.next(), "drasp-dataset", kDatasetVersion);
  std::string_view stop;
  const KeyValues echo = read_echo(lines, "systems ", stop);
  for (const auto& [key, value] : echo)
    if (!key.starts_with("bench.")) throw std::runtime_error("unexpected manifest key '" + key + "'");
  ExperimentConfig base;
  base.bench = BenchConfig{};

  Dataset ds;
  ds.config = from_key_values(echo, base).bench;
  const auto n_systems = parse_unsigned(tokens(stop).at(1));
  for (std::uint64_t i = 0; i < n_systems; ++i) {
    const auto t = tokens(lines.next());
    if (t.size() != 8 || t[0] != "system") throw std::runtime_error("malformed system line");
    ds.systems.push_back({std::string(t[1]), parse_hex_double(t[2]), parse_hex_double(t[3]), parse_hex_double(t[4]),
                          parse_hex_double(t[5]), parse_hex_double(t[6]), parse_hex_double(t[7])});
  }
  const auto clip_header = tokens(lines.next());
  if (clip_header.size() != 2 || clip_header[0] != "clips") throw std::runtime_error("malformed clips line");
  const auto n_clips = parse_unsigned(clip_header[1]);
  for (std::uint64_t i = 0; i < n_clips; ++i) {
    const auto t = tokens(lines.next());
    if (t.size() != 7 || t[0] != "clip") throw std::runtime_error("malformed clip line");
    const std::string bytes = read_file(directory / std::string(t[5]));
    if (fnv1a64(bytes) != parse_hex64(t[6])) throw std::runtime_error("checksum mismatch for " + std::string(t[5]));
    SyntheticClip clip = parse_clip_bytes(bytes);
    clip.system_index = static_cast<std::size_t>(parse_unsigned(t[1]));
    clip.clip_index = static_cast<std::size_t>(parse_unsigned(t[2]));
    if (clip.system_index >= ds.systems.size()) throw std::runtime_error("clip refers to unknown system");
    clip.system_id = ds.systems[clip.system_index].system_id;
    const auto split = parse_split(t[3]);
    if (!split) throw std::runtime_error("unknown split '" + std::string(t[3]) + "'");
    clip.split = *split;
    clip.true_mos = parse_hex_double(t[4]);
    ds.clips.push_back(std::move(clip));
  }
  return ds;
}

}  // namespace drasp
