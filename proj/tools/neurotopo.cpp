#include <cstdio>
#include <exception>
#include <string>

#include "CLI11.hpp"
#include "neurotopo/cli/commands.hpp"
#include "neurotopo/nn/train.hpp"
#include "neurotopo/version.hpp"

namespace {

std::string join_argv(int argc, char** argv) {
  std::string s;
  for (int i = 0; i < argc; ++i) {
    if (i) s += ' ';
    s += argv[i];
  }
  return s;
}

}  // namespace

int main(int argc, char** argv) {
  using namespace neurotopo;

  CLI::App app{"EEG band-power topography classification toolkit"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);
  const std::string command_line = join_argv(argc, argv);

  cli::SynthOptions synth;
  synth.command_line = command_line;
  CLI::App* cmd_synth = app.add_subcommand("synth", "generate a synthetic EEG dataset");
  cmd_synth->add_option("--users", synth.users, "number of users")->capture_default_str();
  cmd_synth->add_option("--songs", synth.songs, "number of songs")->capture_default_str();
  cmd_synth->add_option("--duration-s", synth.duration_s, "recording length in seconds")
      ->capture_default_str();
  cmd_synth->add_option("--channels", synth.channels, "electrode count")
      ->capture_default_str();
  cmd_synth->add_option("--rate", synth.sample_rate_hz, "sample rate in Hz")
      ->capture_default_str();
  cmd_synth->add_option("--confound", synth.confound,
                        "user-confound mix for song patterns, 0..1")
      ->capture_default_str();
  cmd_synth->add_flag("--enjoy-gate", synth.enjoy_gate,
                      "gate song patterns by enjoyment rating");
  cmd_synth->add_option("--seed", synth.seed, "generator seed")->capture_default_str();
  cmd_synth->add_option("--out", synth.out, "output dataset directory")->required();
  cmd_synth->add_flag("--force", synth.force, "overwrite a non-empty output directory");

  cli::FeaturizeOptions feat;
  feat.command_line = command_line;
  CLI::App* cmd_feat = app.add_subcommand(
      "featurize", "convert a dataset to per-chunk topographic image tensors");
  cmd_feat->add_option("--in", feat.in, "dataset directory")->required();
  cmd_feat->add_option("--out", feat.out, "output feature directory")->required();
  cmd_feat->add_option("--resolution", feat.resolution, "image grid resolution")
      ->capture_default_str();
  cmd_feat->add_option("--chunk-s", feat.chunk_s, "chunk length in seconds")
      ->capture_default_str();
  cmd_feat->add_flag("--force", feat.force, "overwrite a non-empty output directory");

  cli::RunOptions run;
  run.command_line = command_line;
  CLI::App* cmd_run = app.add_subcommand("run", "train and evaluate an experiment");
  cmd_run
      ->add_option("--experiment", run.experiment,
                   "one of: user-id-kfold, user-id-loso, song-id-kfold, song-id-louo, "
                   "enjoy-kfold, song-id-louo-high, song-id-louo-low")
      ->required();
  cmd_run->add_option("--features", run.features, "featurized dataset directory")
      ->required();
  cmd_run->add_option("--out", run.out, "output run directory")->required();
  cmd_run->add_option("--epochs", run.epochs, "training epochs per fold")
      ->capture_default_str();
  cmd_run->add_option("--batch-size", run.batch_size, "minibatch size")
      ->capture_default_str();
  cmd_run->add_option("--optimizer", run.optimizer, "adam or sgd")
      ->capture_default_str();
  cmd_run->add_option("--lr", run.learning_rate, "learning rate")->capture_default_str();
  cmd_run->add_option("--seed", run.seed, "experiment seed")->capture_default_str();
  cmd_run->add_option("--kfolds", run.kfolds, "folds for stratified k-fold")
      ->capture_default_str();
  cmd_run->add_option("--reps", run.repetitions, "repetitions for stratified k-fold")
      ->capture_default_str();
  cmd_run->add_option("--jobs", run.jobs,
                      "concurrent fold workers (default: NEUROTOPO_JOBS or 1)");
  cmd_run->add_flag("--force", run.force, "overwrite a non-empty output directory");

  cli::ReportOptions report;
  report.command_line = command_line;
  CLI::App* cmd_report =
      app.add_subcommand("report", "consolidate metrics from finished runs");
  cmd_report->add_option("--runs", report.runs, "run directories to compare")
      ->required()
      ->expected(-1);
  cmd_report->add_option("--out", report.out,
                         "optional directory for the consolidated JSON report");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (app.got_subcommand(cmd_synth)) cli::cmd_synth(synth);
    if (app.got_subcommand(cmd_feat)) cli::cmd_featurize(feat);
    if (app.got_subcommand(cmd_run)) cli::cmd_run(run);
    if (app.got_subcommand(cmd_report)) cli::cmd_report(report);
  } catch (const nn::TrainingDivergence& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 0;
}
