#include "drasp/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <sstream>
#include <stdexcept>

namespace drasp {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::vector<std::string_view> split_list(std::string_view s) {
  std::vector<std::string_view> out;
  s = trim(s);
  if (s.empty()) return out;
  std::size_t start = 0;
  while (true) {
    const auto comma = s.find(',', start);
    out.push_back(trim(s.substr(start, comma == std::string_view::npos ? comma : comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

template <typename T, typename F>
std::string join(const std::vector<T>& items, F format) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i) out += ",";
    out += format(items[i]);
  }
  return out;
}

bool parse_bool(std::string_view s) {
  if (s == "true" || s == "1") return true;
  if (s == "false" || s == "0") return false;
  throw std::invalid_argument("expected true or false, got '" + std::string(s) + "'");
}

std::size_t parse_size(std::string_view s) { return static_cast<std::size_t>(parse_unsigned(s)); }

std::string str(std::size_t v) { return std::to_string(v); }

struct Field {
  const char* key;
  std::function<std::string(const ExperimentConfig&)> get;
  std::function<void(ExperimentConfig&, std::string_view)> set;
};

#define DRASP_SIZE(KEY, MEMBER) \
  Field{KEY, [](const ExperimentConfig& c) { return str(c.MEMBER); }, \
        [](ExperimentConfig& c, std::string_view v) { c.MEMBER = parse_size(v); }}
#define DRASP_U64(KEY, MEMBER) \
  Field{KEY, [](const ExperimentConfig& c) { return std::to_string(c.MEMBER); }, \
        [](ExperimentConfig& c, std::string_view v) { c.MEMBER = parse_unsigned(v); }}
#define DRASP_REAL(KEY, MEMBER) \
  Field{KEY, [](const ExperimentConfig& c) { return format_double(c.MEMBER); }, \
        [](ExperimentConfig& c, std::string_view v) { c.MEMBER = parse_double(v); }}
#define DRASP_BOOL(KEY, MEMBER) \
  Field{KEY, [](const ExperimentConfig& c) { return std::string(c.MEMBER ? "true" : "false"); }, \
        [](ExperimentConfig& c, std::string_view v) { c.MEMBER = parse_bool(v); }}

const std::vector<Field>& fields() {
  static const std::vector<Field> all = {
      DRASP_SIZE("bench.num_systems", bench.num_systems),
      DRASP_SIZE("bench.clips_per_system", bench.clips_per_system),
      DRASP_SIZE("bench.min_frames", bench.min_frames),
      DRASP_SIZE("bench.max_frames", bench.max_frames),
      DRASP_SIZE("bench.input_width", bench.input_width),
      DRASP_REAL("bench.noise", bench.noise),
      DRASP_REAL("bench.train_fraction", bench.train_fraction),
      DRASP_REAL("bench.validation_fraction", bench.validation_fraction),
      DRASP_REAL("bench.test_fraction", bench.test_fraction),
      DRASP_U64("bench.seed", bench.seed),
      DRASP_REAL("bench.global_signal", bench.global_signal),
      DRASP_REAL("bench.mos_low", bench.mos_low),
      DRASP_REAL("bench.mos_high", bench.mos_high),
      DRASP_REAL("bench.max_artifact_drop", bench.max_artifact_drop),
      DRASP_REAL("bench.min_artifact_rate", bench.min_artifact_rate),
      DRASP_REAL("bench.max_artifact_rate", bench.max_artifact_rate),
      DRASP_REAL("bench.artifact_amplitude", bench.artifact_amplitude),
      DRASP_REAL("bench.min_spike_fraction", bench.min_spike_fraction),
      DRASP_REAL("bench.max_spike_fraction", bench.max_spike_fraction),
      DRASP_REAL("bench.max_spike_severity", bench.max_spike_severity),
      DRASP_REAL("bench.severity_coupling", bench.severity_coupling),
      DRASP_REAL("bench.min_system_noise", bench.min_system_noise),
      DRASP_REAL("bench.max_system_noise", bench.max_system_noise),
      DRASP_SIZE("bench.conditioning_width", bench.conditioning_width),

      DRASP_SIZE("model.input_width", model.input_width),
      DRASP_SIZE("model.encoder_hidden", model.encoder_hidden),
      DRASP_SIZE("model.embed_width", model.embed_width),
      Field{"model.heads",
            [](const ExperimentConfig& c) { return join(c.model.heads, [](const HeadSpec& h) { return h.name; }); },
            [](ExperimentConfig& c, std::string_view v) {
              std::vector<HeadSpec> heads;
              for (auto name : split_list(v)) heads.push_back({std::string(name), false});
              c.model.heads = std::move(heads);
            }},
      Field{"model.conditioned_heads",
            [](const ExperimentConfig& c) {
              std::vector<std::string> names;
              for (const auto& h : c.model.heads)
                if (h.use_conditioning) names.push_back(h.name);
              return join(names, [](const std::string& n) { return n; });
            },
            [](ExperimentConfig& c, std::string_view v) {
              for (auto& h : c.model.heads) h.use_conditioning = false;
              for (auto name : split_list(v)) {
                bool found = false;
                for (auto& h : c.model.heads) {
                  if (h.name == name) {
                    h.use_conditioning = true;
                    found = true;
                  }
                }
                if (!found) throw std::invalid_argument("unknown head '" + std::string(name) + "'");
              }
            }},
      DRASP_SIZE("model.conditioning_width", model.conditioning_width),
      DRASP_SIZE("model.head_hidden", model.head_hidden),
      DRASP_REAL("model.output_bias", model.output_bias),
      DRASP_BOOL("model.zero_init_output", model.zero_init_output),
      DRASP_U64("model.init_seed", model.init_seed),

      Field{"pool.method", [](const ExperimentConfig& c) { return std::string(to_string(c.model.pooling.method)); },
            [](ExperimentConfig& c, std::string_view v) {
              const auto m = parse_pooling_method(v);
              if (!m) throw std::invalid_argument("unknown pooling method '" + std::string(v) + "'");
              c.model.pooling.method = *m;
            }},
      DRASP_SIZE("pool.segment_length", model.pooling.segmentation.segment_length),
      Field{"pool.partial_segment",
            [](const ExperimentConfig& c) {
              return std::string(c.model.pooling.segmentation.partial == PartialSegment::Include ? "include" : "drop");
            },
            [](ExperimentConfig& c, std::string_view v) {
              if (v == "include") {
                c.model.pooling.segmentation.partial = PartialSegment::Include;
              } else if (v == "drop") {
                c.model.pooling.segmentation.partial = PartialSegment::Drop;
              } else {
                throw std::invalid_argument("expected include or drop, got '" + std::string(v) + "'");
              }
            }},
      DRASP_SIZE("pool.attention_width", model.pooling.attention_width),
      DRASP_SIZE("pool.heads", model.pooling.heads),
      Field{"pool.temperatures",
            [](const ExperimentConfig& c) { return join(c.model.pooling.temperatures, format_double); },
            [](ExperimentConfig& c, std::string_view v) {
              std::vector<double> t;
              for (auto item : split_list(v)) t.push_back(parse_double(item));
              c.model.pooling.temperatures = std::move(t);
            }},

      Field{"train.optimizer", [](const ExperimentConfig& c) { return std::string(to_string(c.train.optimizer)); },
            [](ExperimentConfig& c, std::string_view v) {
              const auto k = parse_optimizer_kind(v);
              if (!k) throw std::invalid_argument("unknown optimizer '" + std::string(v) + "'");
              c.train.optimizer = *k;
            }},
      DRASP_REAL("train.learning_rate", train.learning_rate),
      DRASP_REAL("train.beta1", train.beta1),
      DRASP_REAL("train.beta2", train.beta2),
      DRASP_REAL("train.epsilon", train.epsilon),
      DRASP_REAL("train.weight_decay", train.weight_decay),
      Field{"train.loss", [](const ExperimentConfig& c) { return std::string(to_string(c.train.loss.kind)); },
            [](ExperimentConfig& c, std::string_view v) {
              const auto k = parse_loss_kind(v);
              if (!k) throw std::invalid_argument("unknown loss '" + std::string(v) + "'");
              c.train.loss.kind = *k;
            }},
      DRASP_REAL("train.mae_weight", train.loss.mae_weight),
      DRASP_REAL("train.mse_weight", train.loss.mse_weight),
      DRASP_SIZE("train.batch_size", train.batch_size),
      DRASP_SIZE("train.max_epochs", train.max_epochs),
      DRASP_SIZE("train.patience", train.patience),
      DRASP_U64("train.seed", train.seed),

      Field{"experiment.seeds",
            [](const ExperimentConfig& c) {
              return join(c.experiment.seeds, [](std::uint64_t s) { return std::to_string(s); });
            },
            [](ExperimentConfig& c, std::string_view v) {
              std::vector<std::uint64_t> seeds;
              for (auto item : split_list(v)) seeds.push_back(parse_unsigned(item));
              c.experiment.seeds = std::move(seeds);
            }},
      Field{"experiment.methods",
            [](const ExperimentConfig& c) {
              return join(c.experiment.methods, [](PoolingMethod m) { return std::string(to_string(m)); });
            },
            [](ExperimentConfig& c, std::string_view v) {
              std::vector<PoolingMethod> methods;
              for (auto item : split_list(v)) {
                const auto m = parse_pooling_method(item);
                if (!m) throw std::invalid_argument("unknown pooling method '" + std::string(item) + "'");
                methods.push_back(*m);
              }
              c.experiment.methods = std::move(methods);
            }},
      Field{"experiment.segment_lengths",
            [](const ExperimentConfig& c) { return join(c.experiment.segment_lengths, str); },
            [](ExperimentConfig& c, std::string_view v) {
              std::vector<std::size_t> n;
              for (auto item : split_list(v)) n.push_back(parse_size(item));
              c.experiment.segment_lengths = std::move(n);
            }},
      DRASP_SIZE("experiment.workers", experiment.workers),
      Field{"experiment.dataset", [](const ExperimentConfig& c) { return c.experiment.dataset; },
            [](ExperimentConfig& c, std::string_view v) { c.experiment.dataset = std::string(v); }},
      Field{"experiment.scatter_split",
            [](const ExperimentConfig& c) { return std::string(to_string(c.experiment.scatter_split)); },
            [](ExperimentConfig& c, std::string_view v) {
              const auto s = parse_split(v);
              if (!s) throw std::invalid_argument("unknown split '" + std::string(v) + "'");
              c.experiment.scatter_split = *s;
            }},
  };
  return all;
}

#undef DRASP_SIZE
#undef DRASP_U64
#undef DRASP_REAL
#undef DRASP_BOOL

KeyValues section(const ExperimentConfig& config, std::initializer_list<std::string_view> prefixes) {
  KeyValues out;
  for (const auto& f : fields()) {
    const std::string_view key = f.key;
    for (auto p : prefixes)
      if (key.starts_with(p)) out.emplace(f.key, f.get(config));
  }
  return out;
}

}  // namespace

std::string format_double(double value) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, r.ptr);
}

double parse_double(std::string_view text) {
  text = trim(text);
  double v = 0.0;
  const auto r = std::from_chars(text.data(), text.data() + text.size(), v);
  if (r.ec != std::errc{} || r.ptr != text.data() + text.size()) {
    throw std::invalid_argument("expected a number, got '" + std::string(text) + "'");
  }
  return v;
}

std::uint64_t parse_unsigned(std::string_view text) {
  text = trim(text);
  std::uint64_t v = 0;
  const auto r = std::from_chars(text.data(), text.data() + text.size(), v);
  if (r.ec != std::errc{} || r.ptr != text.data() + text.size()) {
    throw std::invalid_argument("expected a non-negative integer, got '" + std::string(text) + "'");
  }
  return v;
}

KeyValues parse_key_values(std::string_view text, std::string_view source) {
  KeyValues out;
  std::string prefix;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto end = text.find('\n', pos);
    std::string_view line = text.substr(pos, end == std::string_view::npos ? std::string_view::npos : end - pos);
    pos = end == std::string_view::npos ? text.size() + 1 : end + 1;
    ++line_no;
    const auto where = [&] { return std::string(source) + ":" + std::to_string(line_no) + ": "; };

    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw std::invalid_argument(where() + "unterminated section header");
      const auto name = trim(line.substr(1, line.size() - 2));
      prefix = name.empty() ? "" : std::string(name) + ".";
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw std::invalid_argument(where() + "expected 'key = value'");
    const auto key = trim(line.substr(0, eq));
    if (key.empty()) throw std::invalid_argument(where() + "empty key");
    const std::string full = prefix + std::string(key);
    if (!out.emplace(full, std::string(trim(line.substr(eq + 1)))).second) {
      throw std::invalid_argument(where() + "duplicate key '" + full + "'");
    }
  }
  return out;
}

std::string format_key_values(const KeyValues& values) {
  std::string out;
  for (const auto& [k, v] : values) out += k + " = " + v + "\n";
  return out;
}

ExperimentConfig ExperimentConfig::for_seed(std::uint64_t seed) const {
  ExperimentConfig c = *this;
  c.bench.seed = seed;
  c.model.init_seed = seed;
  c.train.seed = seed;
  return c;
}

ExperimentConfig default_experiment_config() {
  ExperimentConfig c;
  c.model.encoder_hidden = 32;
  c.model.embed_width = 8;
  c.model.pooling.attention_width = 32;
  c.train.learning_rate = 3e-3;
  c.train.max_epochs = 100;
  c.train.patience = 20;
  return c;
}

KeyValues to_key_values(const ExperimentConfig& config) {
  KeyValues out;
  for (const auto& f : fields()) out.emplace(f.key, f.get(config));
  return out;
}

ExperimentConfig from_key_values(const KeyValues& values, ExperimentConfig base) {
  std::map<std::string_view, const Field*> index;
  for (const auto& f : fields()) index.emplace(f.key, &f);
  // Heads first, so that conditioned_heads refers to the final head list.
  std::vector<std::pair<const Field*, const std::string*>> ordered;
  for (const auto& [key, value] : values) {
    const auto it = index.find(key);
    if (it == index.end()) throw std::invalid_argument("unknown config key '" + key + "'");
    ordered.emplace_back(it->second, &value);
  }
  std::stable_partition(ordered.begin(), ordered.end(),
                        [](const auto& p) { return std::string_view(p.first->key) == "model.heads"; });
  for (const auto& [field, value] : ordered) {
    try {
      field->set(base, *value);
    } catch (const std::invalid_argument& e) {
      throw std::invalid_argument(std::string(field->key) + ": " + e.what());
    }
  }
  return base;
}

KeyValues bench_key_values(const BenchConfig& config) {
  ExperimentConfig c;
  c.bench = config;
  return section(c, {"bench."});
}

KeyValues model_key_values(const ModelConfig& config) {
  ExperimentConfig c;
  c.model = config;
  return section(c, {"model.", "pool."});
}

KeyValues train_key_values(const TrainConfig& config) {
  ExperimentConfig c;
  c.train = config;
  return section(c, {"train."});
}

ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read config file " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return from_key_values(parse_key_values(buffer.str(), path.string()));
}

}  // namespace drasp
