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
#include "rwp/commands.hpp"

#include <algorithm>
#include <fstream>
#include <variant>

#include "rwp/checkpoint.hpp"
#include "rwp/error.hpp"

namespace rwp {
namespace {

std::ofstream open_csv(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IngestionError("cannot write " + path.string());
  return out;
}

void finish(std::ofstream& out, const std::filesystem::path& path) {
  out.flush();
  if (!out) throw IngestionError("failed writing " + path.string());
}

const char* kMetricsHeader = "epoch,train_loss,test_accuracy,learning_rate,degenerate_gradient_count\n";

std::string metrics_line(const MetricsRecord& r) {
  return std::to_string(r.epoch) + "," + format_real(r.train_loss) + "," +
         format_real(r.test_accuracy) + "," + format_real(r.learning_rate) + "," +
         std::to_string(r.degenerate_gradient_count) + "\n";
}

// Config plus the overrides given on the command line.
struct Experiment {
  ExperimentConfig cfg;
  std::filesystem::path out_dir;
  LoadedData data;
  std::optional<Model> model;
};

Experiment load_experiment(const CommandOptions& opts) {
  Experiment e;
  e.cfg = load_config(opts.config);
  if (opts.seed_override) {
    e.cfg.train.seed_init = *opts.seed_override;
    e.cfg.train.seed_batches = *opts.seed_override;
    e.cfg.train.seed_noise = *opts.seed_override;
  }
  if (opts.out_dir) e.cfg.output_dir = opts.out_dir->string();
  e.out_dir = e.cfg.output_dir;
  e.data = load_data(e.cfg.data, opts.config.parent_path());
  e.model.emplace(build_model(e.cfg.model, e.data.train));
  std::filesystem::create_directories(e.out_dir);
  return e;
}

ParamVector load_params(const CommandOptions& opts, const Model& model) {
  if (!opts.checkpoint) throw ConfigError("--checkpoint is required");
  ParamVector params = read_checkpoint(*opts.checkpoint);
  if (params.size() != model.param_count()) {
    throw ConfigError("checkpoint holds " + std::to_string(params.size()) +
                      " parameters but the model has " + std::to_string(model.param_count()));
  }
  return params;
}

void run_probe(const std::string& name, const Experiment& e, const ParamVector& params,
               std::ostream& log) {
  const Model& model = *e.model;
  const ProbeConfig& p = e.cfg.probe;
  if (name == "slice") {
    const SlicePlan plan{p.slice_t_min, p.slice_t_max, p.slice_points, p.direction_seed};
    const SliceResult slice = landscape_slice(model, params, e.data.train, plan);
    write_slice_csv(e.out_dir / "slice.csv", slice);
    log << "slice: flat width " << format_real(flat_width(slice)) << "\n";
  } else if (name == "filter-norms") {
    const std::vector<double> norms = filter_norms(params, model.partition());
    const FilterNormStats stats = filter_norm_stats(norms);
    write_filternorms_csv(e.out_dir / "filternorms.csv", norms, stats);
    log << "filter-norms: mean " << format_real(stats.mean) << " cv " << format_real(stats.cv)
        << " mean-square " << format_real(stats.mean_square) << "\n";
  } else if (name == "radius") {
    const RadiusSweep sweep =
        radius_sweep(params, model.partition(), p.radius_gammas, p.radius_samples, p.radius_seed);
    write_radius_csv(e.out_dir / "radius.csv", sweep);
    log << "radius: weight norm " << format_real(sweep.weight_norm) << "\n";
  } else {
    throw ConfigError("unknown probe '" + name + "' (expected slice, filter-norms or radius)");
  }
}

template <class Fn>
int guarded(std::ostream& log, Fn&& fn) {
  try {
    fn();
    return 0;
  } catch (const std::exception& ex) {
    log << "error: " << ex.what() << "\n";
    return 1;
  }
}

}  // namespace

int cmd_train(const CommandOptions& opts, std::ostream& log) {
  return guarded(log, [&] {
    Experiment e = load_experiment(opts);
    {
      std::ofstream resolved(e.out_dir / "resolved.cfg", std::ios::trunc);
      resolved << resolved_config(e.cfg);
      finish(resolved, e.out_dir / "resolved.cfg");
    }
    const auto metrics_path = e.out_dir / "metrics.csv";
    const auto timing_path = e.out_dir / "timing.csv";
    std::ofstream metrics = open_csv(metrics_path);
    std::ofstream timing = open_csv(timing_path);
    metrics << kMetricsHeader;
    timing << "epoch,epoch_wall_ns\n";

    TrainOptions options;
    options.abort_checkpoint = e.out_dir / "last_good.ckpt";
    options.on_epoch = [&](const MetricsRecord& r) {
      metrics << metrics_line(r) << std::flush;
      timing << r.epoch << "," << r.epoch_wall_ns << "\n" << std::flush;
      log << "epoch " << r.epoch << " loss " << format_real(r.train_loss) << " test_acc "
          << format_real(r.test_accuracy) << "\n";
    };
    Executor executor(e.cfg.exec);
    const TrainResult result =
        train(*e.model, e.cfg.rule, e.cfg.train, e.data.train, e.data.test, executor, options);
    finish(metrics, metrics_path);
    finish(timing, timing_path);
    write_checkpoint(e.out_dir / "final.ckpt", result.params);
    for (const auto& probe : e.cfg.probe.after_train) run_probe(probe, e, result.params, log);
  });
}

int cmd_probe(const CommandOptions& opts, std::ostream& log) {
  return guarded(log, [&] {
    Experiment e = load_experiment(opts);
    const ParamVector params = load_params(opts, *e.model);
    run_probe(opts.probe, e, params, log);
  });
}

int cmd_bench(const CommandOptions& opts, std::ostream& log) {
  return guarded(log, [&] {
    Experiment e = load_experiment(opts);
    SamRule sam;
    RwpRule rwp;
    if (const auto* r = std::get_if<SamRule>(&e.cfg.rule)) sam.rho = r->rho;
    if (const auto* r = std::get_if<SamMixRule>(&e.cfg.rule)) sam.rho = r->rho;
    if (const auto* r = std::get_if<RwpRule>(&e.cfg.rule)) rwp = *r;
    const std::vector<UpdateRule> rules = {SgdRule{}, sam, rwp};
    const ExecPlan plan = ExecPlan::parallel(std::max<std::size_t>(2, e.cfg.exec.worker_count));
    BenchOptions bench;
    bench.batch_size = e.cfg.bench.batch_size;
    bench.seed = e.cfg.bench.seed;
    const auto rows =
        benchmark_step_time(*e.model, e.data.train, rules, opts.iterations, plan, bench);
    write_bench_csv(e.out_dir / "bench.csv", rows);
    for (const auto& row : rows) {
      log << row.rule << ": sequential " << row.report.sequential_ns << " ns";
      if (row.parallelizable) log << ", parallel " << row.report.parallel_ns << " ns";
      log << "\n";
    }
  });
}

int cmd_corrupt_eval(const CommandOptions& opts, std::ostream& log) {
  return guarded(log, [&] {
    Experiment e = load_experiment(opts);
    const ParamVector params = load_params(opts, *e.model);
    const auto rows =
        corruption_eval(*e.model, params, e.data.test, e.cfg.corrupt_seed, e.cfg.corrupt_repeats);
    for (const auto& row : rows) {
      if (row.skipped && row.severity == 1) {
        log << "warning: " << row.kind << " needs image data, skipped\n";
      }
    }
    write_corrupt_csv(e.out_dir / "corrupt.csv", rows);
  });
}

std::vector<CorruptionRow> corruption_eval(const Model& model, const ParamVector& params,
                                           const Dataset& test_set, std::uint64_t seed,
                                           std::size_t repeats) {
  if (repeats == 0) throw ConfigError("corruption repeats must be positive");
  Dataset test = test_set;
  test.split = Split::kTest;
  const double clean = evaluate(model, params, test.as_batch()).accuracy;
  std::vector<CorruptionRow> rows;
  double sev5_sum = 0.0;
  std::size_t sev5_count = 0;
  for (std::size_t k = 0; k < std::size(kAllCorruptions); ++k) {
    const CorruptionKind kind = kAllCorruptions[k];
    const bool image_only = kind == CorruptionKind::kBlur3x3 || kind == CorruptionKind::kContrast;
    for (int severity = 1; severity <= 5; ++severity) {
      CorruptionRow row{std::string(corruption_name(kind)), severity, 0.0, clean, false};
      if (image_only && !test.shape.is_image()) {
        row.skipped = true;
        rows.push_back(row);
        continue;
      }
      double acc = 0.0;
      for (std::size_t r = 0; r < repeats; ++r) {
        const std::uint64_t s = Rng::derive(seed, (k * 8 + static_cast<std::size_t>(severity)) * 1024 + r);
        const Dataset corrupted = corrupt(test, {kind, severity}, s);
        acc += evaluate(model, params, corrupted.as_batch(), NonFinite::kSaturate).accuracy;
      }
      row.accuracy = acc / static_cast<double>(repeats);
      if (severity == 5) {
        sev5_sum += row.accuracy;
        ++sev5_count;
      }
      rows.push_back(row);
    }
  }
  rows.push_back({"mean", 5, sev5_count > 0 ? sev5_sum / static_cast<double>(sev5_count) : 0.0,
                  clean, false});
  return rows;
}

void write_metrics_csv(const std::filesystem::path& path, const std::vector<MetricsRecord>& rows) {
  std::ofstream out = open_csv(path);
  out << kMetricsHeader;
  for (const auto& r : rows) out << metrics_line(r);
  finish(out, path);
}

void write_slice_csv(const std::filesystem::path& path, const SliceResult& slice) {
  std::ofstream out = open_csv(path);
  out << "t,loss,accuracy\n";
  for (std::size_t i = 0; i < slice.ts.size(); ++i) {
    out << format_real(slice.ts[i]) << "," << format_real(slice.losses[i]) << ","
        << format_real(slice.accuracies[i]) << "\n";
  }
  finish(out, path);
}

void write_filternorms_csv(const std::filesystem::path& path, const std::vector<double>& norms,
                           const FilterNormStats& stats) {
  std::ofstream out = open_csv(path);
  out << "record,key,value\n";
  out << "stat,count," << norms.size() << "\n";
  out << "stat,mean," << format_real(stats.mean) << "\n";
  out << "stat,std," << format_real(stats.stddev) << "\n";
  out << "stat,cv," << format_real(stats.cv) << "\n";
  out << "stat,mean_square," << format_real(stats.mean_square) << "\n";
  out << "stat,bin_hi," << format_real(stats.bin_hi) << "\n";
  for (std::size_t b = 0; b < stats.histogram.size(); ++b) {
    out << "bin," << b << "," << stats.histogram[b] << "\n";
  }
  for (std::size_t k = 0; k < norms.size(); ++k) {
    out << "filter," << k << "," << format_real(norms[k]) << "\n";
  }
  finish(out, path);
}

void write_radius_csv(const std::filesystem::path& path, const RadiusSweep& sweep) {
  std::ofstream out = open_csv(path);
  out << "gamma,radius,weight_norm\n";
  for (const auto& [gamma, radius] : sweep.points) {
    out << format_real(gamma) << "," << format_real(radius) << ","
        << format_real(sweep.weight_norm) << "\n";
  }
  finish(out, path);
}

void write_bench_csv(const std::filesystem::path& path, const std::vector<RuleTiming>& rows) {
  double sgd_ns = 0.0;
  double sam_ns = 0.0;
  for (const auto& r : rows) {
    if (r.rule == "sgd") sgd_ns = static_cast<double>(r.report.sequential_ns);
    if (r.rule == "sam") sam_ns = static_cast<double>(r.report.sequential_ns);
  }
  auto ratio = [](double a, double b) { return b > 0.0 ? format_real(a / b) : std::string(); };
  std::ofstream out = open_csv(path);
  out << "rule,mode,median_ns,iterations,ratio_to_sgd,ratio_to_sam\n";
  auto line = [&](const RuleTiming& r, const char* mode, std::int64_t ns) {
    const double v = static_cast<double>(ns);
    out << r.rule << "," << mode << "," << ns << "," << r.report.iterations << ","
        << ratio(v, sgd_ns) << "," << ratio(v, sam_ns) << "\n";
  };
  for (const auto& r : rows) {
    line(r, "sequential", r.report.sequential_ns);
    if (r.parallelizable) line(r, "parallel", r.report.parallel_ns);
  }
  finish(out, path);
}

void write_corrupt_csv(const std::filesystem::path& path, const std::vector<CorruptionRow>& rows) {
  std::ofstream out = open_csv(path);
  out << "kind,severity,accuracy,clean_accuracy,status\n";
  for (const auto& r : rows) {
    out << r.kind << "," << r.severity << ",";
    if (!r.skipped) out << format_real(r.accuracy);
    out << "," << format_real(r.clean_accuracy) << ","
        << (r.skipped ? "skipped-flat-dataset" : (r.kind == "mean" ? "summary" : "ok")) << "\n";
  }
  finish(out, path);
}

}  // namespace rwp
