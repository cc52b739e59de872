#pragma once

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "neurotopo/cli/feature_store.hpp"
#include "neurotopo/data/dataset.hpp"
#include "neurotopo/data/synthetic.hpp"
#include "neurotopo/eval/experiments.hpp"
#include "neurotopo/signal/bands.hpp"
#include "neurotopo/topo/topomap.hpp"
#include "neurotopo/util/io.hpp"
#include "neurotopo/version.hpp"
#include "neurotopo/viz/svg.hpp"

namespace neurotopo::cli {

namespace detail {

inline std::string pad_id(const char* prefix, int a, int b, int c = -1,
                          const char* ext = "") {
  char buf[96];
  if (c < 0)
    std::snprintf(buf, sizeof(buf), "%s_u%03d_s%03d%s", prefix, a, b, ext);
  else
    std::snprintf(buf, sizeof(buf), "%s_u%03d_s%03d_c%03d%s", prefix, a, b, c, ext);
  return buf;
}

// Refuses to scribble over an existing non-empty directory unless forced.
inline void prepare_out_dir(const std::filesystem::path& out, bool force) {
  namespace fs = std::filesystem;
  if (out.empty()) throw std::invalid_argument("--out is required");
  if (fs::exists(out) && !fs::is_empty(out) && !force)
    throw std::invalid_argument("output directory " + out.string() +
                                " is not empty (pass --force to overwrite)");
  fs::create_directories(out);
}

struct StageClock {
  using clock = std::chrono::steady_clock;
  clock::time_point start = clock::now();
  std::vector<std::pair<std::string, double>> stages;

  void lap(const std::string& name) {
    const clock::time_point now = clock::now();
    stages.emplace_back(name, std::chrono::duration<double>(now - start).count());
    start = now;
  }
};

inline void write_run_manifest(const std::filesystem::path& out,
                               const std::string& command_line,
                               const nlohmann::json& config, std::uint64_t seed,
                               std::vector<std::string> artifacts,
                               const StageClock& timer) {
  nlohmann::json j;
  j["command"] = command_line;
  j["config"] = config;
  j["seed"] = seed;
  j["library_version"] = kVersion;
  artifacts.push_back("run_manifest.json");
  j["artifacts"] = artifacts;
  nlohmann::json timings;
  for (const auto& [name, seconds] : timer.stages) timings[name] = seconds;
  j["timings_s"] = timings;
  io::write_file_atomic(out / "run_manifest.json", j.dump(2) + "\n");
}

inline int resolve_jobs(int flag_value) {
  if (flag_value > 0) return flag_value;
  if (const char* env = std::getenv("NEUROTOPO_JOBS")) {
    const int n = std::atoi(env);
    if (n > 0) return n;
  }
  return 1;
}

}  // namespace detail

struct SynthOptions {
  int users = 20, songs = 10;
  double duration_s = 60.0;
  int channels = 125;
  double sample_rate_hz = 125.0;
  double confound = 0.0;
  bool enjoy_gate = false;
  std::uint64_t seed = 0;
  std::string out;
  bool force = false;
  std::string command_line;
};

inline void cmd_synth(const SynthOptions& opts) {
  detail::StageClock timer;
  data::SyntheticConfig cfg;
  cfg.users = opts.users;
  cfg.songs = opts.songs;
  cfg.duration_s = opts.duration_s;
  cfg.channels = opts.channels;
  cfg.sample_rate_hz = opts.sample_rate_hz;
  cfg.confound_lambda = opts.confound;
  cfg.enjoyment_gate = opts.enjoy_gate;
  cfg.seed = opts.seed;

  data::SyntheticTruth truth;
  const data::Dataset ds = data::synthesize(cfg, &truth);
  timer.lap("synthesize");

  detail::prepare_out_dir(opts.out, opts.force);
  data::save_dataset(ds, opts.out);
  timer.lap("write");

  std::printf("dataset \"%s\": %zu recordings (%d users x %d songs), %zu channels @ %g Hz, %g s each\n",
              ds.name.c_str(), ds.recordings.size(), opts.users, opts.songs,
              ds.channels, ds.sample_rate_hz, opts.duration_s);
  int hist[10] = {0};
  for (int r : truth.ratings) hist[r] += 1;
  int peak = 1;
  for (int r = 1; r <= 9; ++r) peak = std::max(peak, hist[r]);
  std::printf("enjoyment ratings with binary class labels (>5 = high):\n");
  for (int r = 1; r <= 9; ++r) {
    const int bar = (hist[r] * 40 + peak - 1) / peak;
    std::printf("  %d %-4s | %-40.*s %d\n", r, r > 5 ? "high" : "low", bar,
                "########################################", hist[r]);
  }
  std::printf("high: %d  low: %d\n", truth.high_count, truth.low_count);

  std::vector<std::string> artifacts = {"manifest.json", "layout.txt"};
  for (const data::Recording& rec : ds.recordings)
    artifacts.push_back(detail::pad_id("rec", rec.user_id, rec.song_id, -1, ".eegr"));
  nlohmann::json config;
  config["users"] = opts.users;
  config["songs"] = opts.songs;
  config["duration_s"] = opts.duration_s;
  config["channels"] = opts.channels;
  config["sample_rate_hz"] = opts.sample_rate_hz;
  config["confound"] = opts.confound;
  config["enjoy_gate"] = opts.enjoy_gate;
  detail::write_run_manifest(opts.out, opts.command_line, config, opts.seed,
                             std::move(artifacts), timer);
}

struct FeaturizeOptions {
  std::string in, out;
  int resolution = 32;
  double chunk_s = 5.0;
  bool force = false;
  std::string command_line;
};

inline void cmd_featurize(const FeaturizeOptions& opts) {
  detail::StageClock timer;
  if (opts.in.empty()) throw std::invalid_argument("--in is required");
  if (opts.resolution < 4)
    throw std::invalid_argument("resolution must be at least 4");
  if (!(opts.chunk_s > 0.0))
    throw std::invalid_argument("chunk duration must be positive");

  const data::Dataset ds = data::load_dataset(opts.in);
  timer.lap("load");
  detail::prepare_out_dir(opts.out, opts.force);

  const auto& bands = signal::canonical_bands();
  topo::TopomapPipeline pipeline(ds.layout, std::span<const signal::FrequencyBand>(bands),
                                 ds.sample_rate_hz, opts.resolution);
  std::vector<std::string> band_names;
  for (const auto& band : bands) band_names.push_back(band.name);

  FeatureIndex index;
  index.chunk_s = opts.chunk_s;
  index.sample_rate_hz = ds.sample_rate_hz;
  index.band_names = band_names;
  std::vector<std::string> artifacts;
  data::ChunkSpec spec;
  spec.duration_s = opts.chunk_s;
  spec.hop_s = opts.chunk_s;
  for (const data::Recording& rec : ds.recordings) {
    const std::vector<data::Chunk> chunks = data::chunk_recording(rec, spec);
    for (const data::Chunk& chunk : chunks) {
      const topo::TopographicImage img = pipeline.process(chunk.eeg);
      if (index.entries.empty()) {
        index.width = img.width;
        index.height = img.height;
        index.bands = img.bands;
      }
      FeatureEntry entry;
      entry.user = chunk.user_id;
      entry.song = chunk.song_id;
      entry.chunk = chunk.index;
      entry.enjoyment = rec.enjoyment_rating;
      entry.familiarity = rec.familiarity_rating;
      entry.path = detail::pad_id("img", chunk.user_id, chunk.song_id, chunk.index,
                                  ".ntim");
      write_image_file(std::filesystem::path(opts.out) / entry.path, img);
      artifacts.push_back(entry.path);
      if (chunk.index == 0) {
        const std::string preview =
            detail::pad_id("preview", chunk.user_id, chunk.song_id, -1, ".svg");
        io::write_file_atomic(
            std::filesystem::path(opts.out) / preview,
            viz::render_topomap_svg(img, band_names,
                                    "user " + std::to_string(chunk.user_id) +
                                        ", song " + std::to_string(chunk.song_id) +
                                        ", chunk 0"));
        artifacts.push_back(preview);
      }
      index.entries.push_back(std::move(entry));
    }
  }
  save_feature_index(opts.out, index);
  artifacts.push_back("index.json");
  timer.lap("featurize");

  std::printf("featurized %zu recordings -> %zu chunks, image %d x %d x %d (bands x height x width)\n",
              ds.recordings.size(), index.entries.size(), index.bands, index.height,
              index.width);

  nlohmann::json config;
  config["in"] = opts.in;
  config["resolution"] = opts.resolution;
  config["chunk_s"] = opts.chunk_s;
  detail::write_run_manifest(opts.out, opts.command_line, config, 0,
                             std::move(artifacts), timer);
}

struct RunOptions {
  std::string experiment, features, out;
  int epochs = 30;
  int batch_size = 32;
  std::string optimizer = "adam";
  double learning_rate = 1e-3;
  std::uint64_t seed = 0;
  int kfolds = 5;
  int repetitions = 1;
  int jobs = 0;  // 0: use NEUROTOPO_JOBS, else 1
  bool force = false;
  std::string command_line;
};

inline void cmd_run(const RunOptions& opts) {
  detail::StageClock timer;
  if (opts.features.empty()) throw std::invalid_argument("--features is required");
  const eval::ExperimentKind kind = eval::experiment_from_name(opts.experiment);
  const eval::LabeledDataset data = load_feature_dataset(opts.features);
  timer.lap("load");
  detail::prepare_out_dir(opts.out, opts.force);

  nn::TrainConfig tc;
  tc.epochs = opts.epochs;
  tc.batch_size = opts.batch_size;
  tc.optimizer = nn::optimizer_from_name(opts.optimizer);
  tc.learning_rate = opts.learning_rate;
  tc.seed = opts.seed;
  eval::ExperimentOptions eopts;
  eopts.kfolds = opts.kfolds;
  eopts.repetitions = opts.repetitions;
  eopts.jobs = detail::resolve_jobs(opts.jobs);

  const eval::MetricsReport report = eval::run_experiment(kind, data, tc, eopts);
  timer.lap("train");

  io::write_file_atomic(std::filesystem::path(opts.out) / "metrics.json",
                        eval::report_to_json(report).dump(2) + "\n");
  io::write_file_atomic(std::filesystem::path(opts.out) / "figure.svg",
                        viz::render_metrics_svg(report));
  timer.lap("write");

  std::printf("%s (%s): %zu folds over %zu samples, %d classes (chance %.4f)\n",
              report.experiment.c_str(), report.protocol.c_str(),
              report.per_fold.size(), data.size(), report.class_count,
              1.0 / report.class_count);
  std::printf("  accuracy           %.4f +- %.4f\n", report.accuracy.mean,
              report.accuracy.stddev);
  std::printf("  weighted precision %.4f +- %.4f\n", report.precision.mean,
              report.precision.stddev);
  std::printf("  weighted recall    %.4f +- %.4f\n", report.recall.mean,
              report.recall.stddev);
  std::printf("  weighted f1        %.4f +- %.4f\n", report.f1.mean,
              report.f1.stddev);

  nlohmann::json config;
  config["experiment"] = opts.experiment;
  config["features"] = opts.features;
  config["epochs"] = opts.epochs;
  config["batch_size"] = opts.batch_size;
  config["optimizer"] = opts.optimizer;
  config["learning_rate"] = opts.learning_rate;
  config["kfolds"] = opts.kfolds;
  config["repetitions"] = opts.repetitions;
  detail::write_run_manifest(opts.out, opts.command_line, config, opts.seed,
                             {"metrics.json", "figure.svg"}, timer);
}

struct ReportOptions {
  std::vector<std::string> runs;
  std::string out;  // optional; when set, a consolidated JSON lands there
  std::string command_line;
};

inline void cmd_report(const ReportOptions& opts) {
  detail::StageClock timer;
  if (opts.runs.empty()) throw std::invalid_argument("--runs is required");

  nlohmann::json rows = nlohmann::json::array();
  for (const std::string& run : opts.runs) {
    const std::filesystem::path dir(run);
    if (!std::filesystem::exists(dir / "run_manifest.json"))
      throw std::invalid_argument("run directory " + run +
                                  " has no run_manifest.json");
    if (!std::filesystem::exists(dir / "metrics.json"))
      throw std::invalid_argument("run directory " + run + " has no metrics.json");
    nlohmann::json metrics;
    try {
      metrics = nlohmann::json::parse(io::read_text_file(dir / "metrics.json"));
    } catch (const nlohmann::json::exception& e) {
      throw std::runtime_error((dir / "metrics.json").string() + ": " + e.what());
    }
    nlohmann::json row;
    row["run"] = run;
    row["experiment"] = metrics.at("experiment");
    row["protocol"] = metrics.at("protocol");
    row["repetitions"] = metrics.at("repetitions");
    row["folds"] = metrics.at("per_fold").size();
    row["aggregate"] = metrics.at("aggregate");
    rows.push_back(std::move(row));
  }
  timer.lap("collect");

  std::printf("%-24s %-18s %-20s %5s  %-16s %-16s %-16s %-16s\n", "run", "experiment",
              "protocol", "folds", "accuracy", "precision", "recall", "f1");
  for (const auto& row : rows) {
    const auto cell = [&](const char* metric) {
      const auto& agg = row.at("aggregate").at(metric);
      char buf[32];
      std::snprintf(buf, sizeof(buf), "%.4f +- %.4f", agg.at("mean").get<double>(),
                    agg.at("std").get<double>());
      return std::string(buf);
    };
    std::printf("%-24s %-18s %-20s %5zu  %-16s %-16s %-16s %-16s\n",
                row.at("run").get<std::string>().c_str(),
                row.at("experiment").get<std::string>().c_str(),
                row.at("protocol").get<std::string>().c_str(),
                row.at("folds").get<std::size_t>(), cell("accuracy").c_str(),
                cell("weighted_precision").c_str(), cell("weighted_recall").c_str(),
                cell("weighted_f1").c_str());
  }

  if (!opts.out.empty()) {
    std::filesystem::create_directories(opts.out);
    nlohmann::json j;
    j["runs"] = rows;
    io::write_file_atomic(std::filesystem::path(opts.out) / "report.json",
                          j.dump(2) + "\n");
    nlohmann::json config;
    config["runs"] = opts.runs;
    detail::write_run_manifest(opts.out, opts.command_line, config, 0,
                               {"report.json"}, timer);
  }
}

}  // namespace neurotopo::cli
