/* Copyright 2026 The RWP Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/
#include "rwp/config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "rwp/error.hpp"

namespace rwp {
namespace {

const std::map<std::string, std::set<std::string>>& schema() {
  static const std::map<std::string, std::set<std::string>> kSchema = {
      {"model", {"type", "hidden", "channels", "kernel"}},
      {"data",
       {"source", "classes", "dims", "n_per_class", "test_n_per_class", "spread", "noise",
        "image_size", "seed", "train_images", "train_labels", "test_images", "test_labels",
        "train_file", "test_file"}},
      {"rule", {"variant", "rho", "gamma", "alpha", "policy"}},
      {"train",
       {"epochs", "batch_size", "lr", "momentum", "weight_decay", "seed_batches", "seed_noise",
        "seed_init"}},
      {"exec", {"mode", "workers"}},
      {"probe",
       {"slice_t_min", "slice_t_max", "slice_points", "direction_seed", "radius_gammas",
        "radius_samples", "radius_seed", "after_train"}},
      {"bench", {"batch_size", "seed"}},
      {"corrupt", {"seed", "repeats"}},
      {"output", {"dir"}},
  };
  return kSchema;
}

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::vector<std::string> split_list(std::string_view s) {
  std::vector<std::string> out;
  if (trim(s).empty()) return out;
  std::size_t start = 0;
  while (true) {
    const auto comma = s.find(',', start);
    out.emplace_back(trim(s.substr(start, comma == std::string_view::npos ? s.npos : comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

class Sections {
 public:
  explicit Sections(std::string_view text) {
    std::string current;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
      const auto nl = text.find('\n', pos);
      const std::string_view raw = text.substr(pos, nl == text.npos ? text.npos : nl - pos);
      pos = nl == text.npos ? text.size() + 1 : nl + 1;
      ++line_no;
      const std::string_view line = trim(raw);
      if (line.empty() || line.front() == '#' || line.front() == ';') continue;
      if (line.front() == '[') {
        if (line.back() != ']') throw error(line_no, "unterminated section header");
        current = std::string(trim(line.substr(1, line.size() - 2)));
        if (!schema().contains(current)) throw ConfigError("unknown section [" + current + "]");
        continue;
      }
      const auto eq = line.find('=');
      if (eq == line.npos) throw error(line_no, "expected key = value");
      if (current.empty()) throw error(line_no, "key outside of any section");
      const std::string key(trim(line.substr(0, eq)));
      const std::string value(trim(line.substr(eq + 1)));
      if (!schema().at(current).contains(key)) {
        throw ConfigError("[" + current + "] " + key + ": unknown key");
      }
      if (!values_[current].emplace(key, value).second) {
        throw ConfigError("[" + current + "] " + key + ": duplicate key");
      }
    }
  }

  bool has(const std::string& sec, const std::string& key) const {
    auto it = values_.find(sec);
    return it != values_.end() && it->second.contains(key);
  }

  const std::string& raw(const std::string& sec, const std::string& key) const {
    if (!has(sec, key)) throw ConfigError("[" + sec + "] " + key + ": required field missing");
    used_.insert(sec + "." + key);
    return values_.at(sec).at(key);
  }

  std::string str(const std::string& sec, const std::string& key, std::string def) const {
    return has(sec, key) ? raw(sec, key) : def;
  }

  double real(const std::string& sec, const std::string& key) const {
    return parse_real(sec, key, raw(sec, key));
  }
  double real(const std::string& sec, const std::string& key, double def) const {
    return has(sec, key) ? real(sec, key) : def;
  }

  std::uint64_t uint(const std::string& sec, const std::string& key) const {
    return parse_uint(sec, key, raw(sec, key));
  }
  std::uint64_t uint(const std::string& sec, const std::string& key, std::uint64_t def) const {
    return has(sec, key) ? uint(sec, key) : def;
  }

  std::vector<std::size_t> uint_list(const std::string& sec, const std::string& key) const {
    std::vector<std::size_t> out;
    for (const auto& item : split_list(raw(sec, key))) out.push_back(parse_uint(sec, key, item));
    return out;
  }

  std::vector<double> real_list(const std::string& sec, const std::string& key) const {
    std::vector<double> out;
    for (const auto& item : split_list(raw(sec, key))) out.push_back(parse_real(sec, key, item));
    return out;
  }

  // Keys present in the file that the selected variant does not read.
  void reject_unused(const std::string& sec) const {
    auto it = values_.find(sec);
    if (it == values_.end()) return;
    for (const auto& [key, value] : it->second) {
      if (!used_.contains(sec + "." + key)) {
        throw ConfigError("[" + sec + "] " + key + ": not used by this configuration");
      }
    }
  }

 private:
  static ConfigError error(std::size_t line, const std::string& what) {
    return ConfigError("config line " + std::to_string(line) + ": " + what);
  }

  static double parse_real(const std::string& sec, const std::string& key, std::string_view s) {
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) {
      throw ConfigError("[" + sec + "] " + key + ": expected a number, got '" + std::string(s) + "'");
    }
    return v;
  }

  static std::uint64_t parse_uint(const std::string& sec, const std::string& key, std::string_view s) {
    std::uint64_t v = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) {
      throw ConfigError("[" + sec + "] " + key + ": expected a nonnegative integer, got '" +
                        std::string(s) + "'");
    }
    return v;
  }

  std::map<std::string, std::map<std::string, std::string>> values_;
  mutable std::set<std::string> used_;
};

BatchPolicy parse_policy(const Sections& s, BatchPolicy def) {
  if (!s.has("rule", "policy")) return def;
  const std::string& p = s.raw("rule", "policy");
  if (p == "same") return BatchPolicy::kSameBatch;
  if (p == "different") return BatchPolicy::kDifferentBatch;
  throw ConfigError("[rule] policy: expected 'same' or 'different', got '" + p + "'");
}

UpdateRule parse_rule(const Sections& s) {
  const std::string variant = s.raw("rule", "variant");
  UpdateRule rule;
  if (variant == "sgd") {
    rule = SgdRule{};
  } else if (variant == "sam") {
    rule = SamRule{s.real("rule", "rho"), parse_policy(s, BatchPolicy::kSameBatch)};
  } else if (variant == "rwp") {
    rule = RwpRule{s.real("rule", "gamma"), s.real("rule", "alpha", 0.5),
                   parse_policy(s, BatchPolicy::kDifferentBatch)};
  } else if (variant == "sam_mix") {
    rule = SamMixRule{s.real("rule", "rho"), s.real("rule", "alpha", 0.5)};
  } else if (variant == "rwp_pure") {
    rule = RwpPureRule{s.real("rule", "gamma"), parse_policy(s, BatchPolicy::kDifferentBatch)};
  } else {
    throw ConfigError("[rule] variant: unknown variant '" + variant + "'");
  }
  s.reject_unused("rule");
  try {
    validate(rule);
  } catch (const ConfigError& e) {
    throw ConfigError(std::string("[rule] ") + e.what());
  }
  return rule;
}

const char* policy_name(BatchPolicy p) {
  return p == BatchPolicy::kSameBatch ? "same" : "different";
}

template <class T>
std::string join(const std::vector<T>& items) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i > 0) out += ",";
    if constexpr (std::is_same_v<T, double>) {
      out += format_real(items[i]);
    } else if constexpr (std::is_same_v<T, std::string>) {
      out += items[i];
    } else {
      out += std::to_string(items[i]);
    }
  }
  return out;
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  const std::filesystem::path path(p);
  return path.is_absolute() ? path : base / path;
}

}  // namespace

std::string format_real(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

ExperimentConfig parse_config(std::string_view text) {
  const Sections s(text);
  ExperimentConfig cfg;

  cfg.model.type = s.raw("model", "type");
  if (cfg.model.type == "mlp") {
    cfg.model.hidden = s.uint_list("model", "hidden");
    if (cfg.model.hidden.empty()) throw ConfigError("[model] hidden: at least one layer required");
  } else if (cfg.model.type == "cnn") {
    cfg.model.channels = s.uint_list("model", "channels");
    if (cfg.model.channels.empty()) throw ConfigError("[model] channels: at least one block required");
    cfg.model.kernel = s.uint("model", "kernel", 3);
  } else {
    throw ConfigError("[model] type: expected 'mlp' or 'cnn', got '" + cfg.model.type + "'");
  }
  s.reject_unused("model");

  DataConfig& d = cfg.data;
  d.source = s.raw("data", "source");
  if (d.source == "blobs") {
    d.classes = s.uint("data", "classes", 2);
    d.dims = s.uint("data", "dims", 2);
    d.spread = s.real("data", "spread", 0.5);
  } else if (d.source == "spirals") {
    d.noise = s.real("data", "noise", 0.2);
  } else if (d.source == "shapes") {
    d.image_size = s.uint("data", "image_size", 12);
    d.noise = s.real("data", "noise", 0.2);
  } else if (d.source == "idx") {
    d.train_images = s.raw("data", "train_images");
    d.train_labels = s.raw("data", "train_labels");
    d.test_images = s.raw("data", "test_images");
    d.test_labels = s.raw("data", "test_labels");
  } else if (d.source == "rwpd") {
    d.train_file = s.raw("data", "train_file");
    d.test_file = s.raw("data", "test_file");
  } else {
    throw ConfigError("[data] source: unknown source '" + d.source + "'");
  }
  if (d.source == "blobs" || d.source == "spirals" || d.source == "shapes") {
    d.n_per_class = s.uint("data", "n_per_class");
    d.test_n_per_class = s.uint("data", "test_n_per_class", d.n_per_class);
    d.seed = s.uint("data", "seed", 0);
    if (d.n_per_class == 0) throw ConfigError("[data] n_per_class: must be positive");
    if (d.test_n_per_class == 0) throw ConfigError("[data] test_n_per_class: must be positive");
  }
  s.reject_unused("data");

  cfg.rule = parse_rule(s);

  TrainConfig& t = cfg.train;
  t.epochs = s.uint("train", "epochs");
  t.batch_size = s.uint("train", "batch_size");
  t.lr0 = s.real("train", "lr", 0.1);
  t.momentum = s.real("train", "momentum", 0.9);
  t.weight_decay = s.real("train", "weight_decay", 1e-3);
  t.seed_batches = s.uint("train", "seed_batches", 0);
  t.seed_noise = s.uint("train", "seed_noise", 0);
  t.seed_init = s.uint("train", "seed_init", 0);
  try {
    validate(t);
  } catch (const ConfigError& e) {
    throw ConfigError(std::string("[train] ") + e.what());
  }

  const std::string mode = s.str("exec", "mode", "sequential");
  if (mode == "sequential") {
    cfg.exec = ExecPlan::sequential();
    s.reject_unused("exec");
  } else if (mode == "parallel") {
    cfg.exec = ExecPlan::parallel(s.uint("exec", "workers", 2));
    if (cfg.exec.worker_count < 2) throw ConfigError("[exec] workers: parallel mode needs >= 2");
  } else {
    throw ConfigError("[exec] mode: expected 'sequential' or 'parallel', got '" + mode + "'");
  }

  ProbeConfig& p = cfg.probe;
  p.slice_t_min = s.real("probe", "slice_t_min", -1.0);
  p.slice_t_max = s.real("probe", "slice_t_max", 1.0);
  p.slice_points = s.uint("probe", "slice_points", 51);
  p.direction_seed = s.uint("probe", "direction_seed", 0);
  if (s.has("probe", "radius_gammas")) p.radius_gammas = s.real_list("probe", "radius_gammas");
  p.radius_samples = s.uint("probe", "radius_samples", 1000);
  p.radius_seed = s.uint("probe", "radius_seed", 0);
  if (s.has("probe", "after_train")) {
    p.after_train = split_list(s.raw("probe", "after_train"));
    for (const auto& name : p.after_train) {
      if (name != "slice" && name != "filter-norms" && name != "radius") {
        throw ConfigError("[probe] after_train: unknown probe '" + name + "'");
      }
    }
  }
  if (!(p.slice_t_min < p.slice_t_max)) throw ConfigError("[probe] slice_t_min: must be < slice_t_max");
  if (p.slice_points < 2) throw ConfigError("[probe] slice_points: must be >= 2");
  if (p.radius_samples < 100) throw ConfigError("[probe] radius_samples: must be >= 100");

  cfg.bench.batch_size = s.uint("bench", "batch_size", 128);
  cfg.bench.seed = s.uint("bench", "seed", 0);
  if (cfg.bench.batch_size == 0) throw ConfigError("[bench] batch_size: must be positive");
  cfg.corrupt_seed = s.uint("corrupt", "seed", 0);
  cfg.corrupt_repeats = s.uint("corrupt", "repeats", 5);
  if (cfg.corrupt_repeats == 0) throw ConfigError("[corrupt] repeats: must be positive");
  cfg.output_dir = s.str("output", "dir", "out");
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

std::string resolved_config(const ExperimentConfig& cfg) {
  std::ostringstream out;
  out << "[model]\n" << "type = " << cfg.model.type << "\n";
  if (cfg.model.type == "mlp") {
    out << "hidden = " << join(cfg.model.hidden) << "\n";
  } else {
    out << "channels = " << join(cfg.model.channels) << "\n";
    out << "kernel = " << cfg.model.kernel << "\n";
  }

  const DataConfig& d = cfg.data;
  out << "\n[data]\n" << "source = " << d.source << "\n";
  if (d.source == "blobs") {
    out << "classes = " << d.classes << "\n" << "dims = " << d.dims << "\n"
        << "spread = " << format_real(d.spread) << "\n";
  } else if (d.source == "spirals") {
    out << "noise = " << format_real(d.noise) << "\n";
  } else if (d.source == "shapes") {
    out << "image_size = " << d.image_size << "\n" << "noise = " << format_real(d.noise) << "\n";
  } else if (d.source == "idx") {
    out << "train_images = " << d.train_images << "\n" << "train_labels = " << d.train_labels
        << "\n" << "test_images = " << d.test_images << "\n" << "test_labels = " << d.test_labels
        << "\n";
  } else if (d.source == "rwpd") {
    out << "train_file = " << d.train_file << "\n" << "test_file = " << d.test_file << "\n";
  }
  if (d.source == "blobs" || d.source == "spirals" || d.source == "shapes") {
    out << "n_per_class = " << d.n_per_class << "\n"
        << "test_n_per_class = " << d.test_n_per_class << "\n" << "seed = " << d.seed << "\n";
  }

  out << "\n[rule]\n" << "variant = " << rule_name(cfg.rule) << "\n";
  if (const auto* r = std::get_if<SamRule>(&cfg.rule)) {
    out << "rho = " << format_real(r->rho) << "\npolicy = " << policy_name(r->policy) << "\n";
  } else if (const auto* r = std::get_if<RwpRule>(&cfg.rule)) {
    out << "gamma = " << format_real(r->gamma) << "\nalpha = " << format_real(r->alpha)
        << "\npolicy = " << policy_name(r->policy) << "\n";
  } else if (const auto* r = std::get_if<SamMixRule>(&cfg.rule)) {
    out << "rho = " << format_real(r->rho) << "\nalpha = " << format_real(r->alpha) << "\n";
  } else if (const auto* r = std::get_if<RwpPureRule>(&cfg.rule)) {
    out << "gamma = " << format_real(r->gamma) << "\npolicy = " << policy_name(r->policy) << "\n";
  }

  const TrainConfig& t = cfg.train;
  out << "\n[train]\n" << "epochs = " << t.epochs << "\n" << "batch_size = " << t.batch_size
      << "\n" << "lr = " << format_real(t.lr0) << "\n" << "momentum = " << format_real(t.momentum)
      << "\n" << "weight_decay = " << format_real(t.weight_decay) << "\n"
      << "seed_batches = " << t.seed_batches << "\n" << "seed_noise = " << t.seed_noise << "\n"
      << "seed_init = " << t.seed_init << "\n";

  out << "\n[exec]\n";
  if (cfg.exec.mode == ExecMode::kParallel) {
    out << "mode = parallel\nworkers = " << cfg.exec.worker_count << "\n";
  } else {
    out << "mode = sequential\n";
  }

  const ProbeConfig& p = cfg.probe;
  out << "\n[probe]\n" << "slice_t_min = " << format_real(p.slice_t_min) << "\n"
      << "slice_t_max = " << format_real(p.slice_t_max) << "\n"
      << "slice_points = " << p.slice_points << "\n" << "direction_seed = " << p.direction_seed
      << "\n" << "radius_gammas = " << join(p.radius_gammas) << "\n"
      << "radius_samples = " << p.radius_samples << "\n" << "radius_seed = " << p.radius_seed
      << "\n" << "after_train = " << join(p.after_train) << "\n";

  out << "\n[bench]\n" << "batch_size = " << cfg.bench.batch_size << "\n"
      << "seed = " << cfg.bench.seed << "\n";
  out << "\n[corrupt]\n" << "seed = " << cfg.corrupt_seed << "\n"
      << "repeats = " << cfg.corrupt_repeats << "\n";
  out << "\n[output]\n" << "dir = " << cfg.output_dir << "\n";
  return out.str();
}

LoadedData load_data(const DataConfig& cfg, const std::filesystem::path& base_dir) {
  LoadedData out;
  const std::uint64_t test_seed = Rng::derive(cfg.seed, 1);
  if (cfg.source == "blobs") {
    out.train = make_blobs(cfg.classes, cfg.dims, cfg.n_per_class, cfg.spread, cfg.seed);
    out.test = make_blobs(cfg.classes, cfg.dims, cfg.test_n_per_class, cfg.spread, test_seed,
                          Split::kTest);
  } else if (cfg.source == "spirals") {
    out.train = make_spirals(cfg.n_per_class, cfg.noise, cfg.seed);
    out.test = make_spirals(cfg.test_n_per_class, cfg.noise, test_seed, Split::kTest);
  } else if (cfg.source == "shapes") {
    out.train = make_shapes(cfg.n_per_class, cfg.image_size, cfg.noise, cfg.seed);
    out.test = make_shapes(cfg.test_n_per_class, cfg.image_size, cfg.noise, test_seed, Split::kTest);
  } else if (cfg.source == "idx") {
    out.train = load_idx(resolve(base_dir, cfg.train_images), resolve(base_dir, cfg.train_labels),
                         Split::kTrain);
    out.test = load_idx(resolve(base_dir, cfg.test_images), resolve(base_dir, cfg.test_labels),
                        Split::kTest);
  } else if (cfg.source == "rwpd") {
    out.train = read_dataset(resolve(base_dir, cfg.train_file));
    out.test = read_dataset(resolve(base_dir, cfg.test_file));
    out.train.split = Split::kTrain;
    out.test.split = Split::kTest;
  } else {
    throw ConfigError("[data] source: unknown source '" + cfg.source + "'");
  }
  if (!(out.train.shape == out.test.shape)) throw ConfigError("train and test shapes differ");
  const std::size_t classes = std::max(out.train.class_count, out.test.class_count);
  out.train.class_count = classes;
  out.test.class_count = classes;
  validate(out.train);
  validate(out.test);
  return out;
}

Model build_model(const ModelConfig& cfg, const Dataset& sample) {
  if (cfg.type == "mlp") return build_mlp(cfg.hidden, sample.shape.size(), sample.class_count);
  if (cfg.type == "cnn") return build_cnn(cfg.channels, cfg.kernel, sample.shape, sample.class_count);
  throw ConfigError("[model] type: expected 'mlp' or 'cnn'");
}

}  // namespace rwp
