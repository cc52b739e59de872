#pragma once

#include <algorithm>
#include <atomic>
#include <exception>
#include <map>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "neurotopo/eval/folds.hpp"
#include "neurotopo/eval/metrics.hpp"
#include "neurotopo/nn/model.hpp"
#include "neurotopo/nn/train.hpp"
#include "neurotopo/util/rng.hpp"

namespace neurotopo::eval {

// Featurized chunks ready for the experiment runner: one image per chunk,
// provenance per sample, one rating per (user, song) pair.
struct LabeledDataset {
  int width = 0, height = 0, bands = 0;
  std::vector<double> images;  // sample-major, [n][bands][height][width]
  std::vector<int> user_ids, song_ids;
  std::map<std::pair<int, int>, int> ratings;

  std::size_t image_size() const {
    return static_cast<std::size_t>(width) * height * bands;
  }
  std::size_t size() const { return user_ids.size(); }

  void validate() const {
    if (width < 1 || height < 1 || bands < 1)
      throw std::invalid_argument("dataset image dimensions must be positive");
    if (user_ids.size() != song_ids.size())
      throw std::invalid_argument("dataset user/song id lengths differ");
    if (images.size() != size() * image_size())
      throw std::invalid_argument("dataset holds " + std::to_string(images.size()) +
                                  " pixel values, expected " +
                                  std::to_string(size() * image_size()));
    for (std::size_t i = 0; i < size(); ++i) {
      const auto it = ratings.find({user_ids[i], song_ids[i]});
      if (it == ratings.end())
        throw std::invalid_argument("no enjoyment rating for (user " +
                                    std::to_string(user_ids[i]) + ", song " +
                                    std::to_string(song_ids[i]) + ")");
      if (it->second < 1 || it->second > 9)
        throw std::invalid_argument("enjoyment rating " + std::to_string(it->second) +
                                    " for (user " + std::to_string(user_ids[i]) +
                                    ", song " + std::to_string(song_ids[i]) +
                                    ") outside 1-9");
    }
  }
};

enum class ExperimentKind {
  kUserIdKfold,
  kUserIdLoso,
  kSongIdKfold,
  kSongIdLouo,
  kEnjoymentKfold,
  kSongIdLouoHigh,
  kSongIdLouoLow,
};

inline const char* experiment_name(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::kUserIdKfold: return "user-id-kfold";
    case ExperimentKind::kUserIdLoso: return "user-id-loso";
    case ExperimentKind::kSongIdKfold: return "song-id-kfold";
    case ExperimentKind::kSongIdLouo: return "song-id-louo";
    case ExperimentKind::kEnjoymentKfold: return "enjoy-kfold";
    case ExperimentKind::kSongIdLouoHigh: return "song-id-louo-high";
    case ExperimentKind::kSongIdLouoLow: return "song-id-louo-low";
  }
  return "?";
}

inline ExperimentKind experiment_from_name(const std::string& name) {
  for (ExperimentKind k :
       {ExperimentKind::kUserIdKfold, ExperimentKind::kUserIdLoso,
        ExperimentKind::kSongIdKfold, ExperimentKind::kSongIdLouo,
        ExperimentKind::kEnjoymentKfold, ExperimentKind::kSongIdLouoHigh,
        ExperimentKind::kSongIdLouoLow})
    if (name == experiment_name(k)) return k;
  throw std::invalid_argument("unknown experiment \"" + name + "\"");
}

struct ExperimentOptions {
  int kfolds = 5;
  int repetitions = 1;  // stratified k-fold only; group protocols run once
  int jobs = 1;         // folds trained concurrently
};

namespace detail {

enum class LabelSource { kUser, kSong, kEnjoyment };
enum class PartitionFilter { kAll, kHigh, kLow };

struct KindTraits {
  Protocol protocol;
  LabelSource label;
  PartitionFilter partition;
};

inline KindTraits kind_traits(ExperimentKind kind) {
  using P = Protocol;
  using L = LabelSource;
  using F = PartitionFilter;
  switch (kind) {
    case ExperimentKind::kUserIdKfold: return {P::kStratifiedKfold, L::kUser, F::kAll};
    case ExperimentKind::kUserIdLoso: return {P::kLeaveOneSongOut, L::kUser, F::kAll};
    case ExperimentKind::kSongIdKfold: return {P::kStratifiedKfold, L::kSong, F::kAll};
    case ExperimentKind::kSongIdLouo: return {P::kLeaveOneUserOut, L::kSong, F::kAll};
    case ExperimentKind::kEnjoymentKfold:
      return {P::kStratifiedKfold, L::kEnjoyment, F::kAll};
    case ExperimentKind::kSongIdLouoHigh:
      return {P::kLeaveOneUserOut, L::kSong, F::kHigh};
    case ExperimentKind::kSongIdLouoLow:
      return {P::kLeaveOneUserOut, L::kSong, F::kLow};
  }
  throw std::logic_error("unreachable experiment kind");
}

struct FoldTask {
  int repetition = 0;
  int fold = 0;
  int group = -1;
  std::vector<std::size_t> train, test;  // sample indices
};

// Trains a fresh model on the task's train samples and scores the test set.
inline FoldResult run_fold(const LabeledDataset& data, const std::vector<int>& y,
                           int class_count, const FoldTask& task,
                           const nn::TrainConfig& train_cfg,
                           std::uint64_t fold_seed) {
  const std::size_t isz = data.image_size();
  const auto gather = [&](const std::vector<std::size_t>& idx, nn::Tensor& x,
                          std::vector<int>& labels) {
    x.resize({idx.size(), static_cast<std::size_t>(data.bands),
              static_cast<std::size_t>(data.height),
              static_cast<std::size_t>(data.width)});
    labels.resize(idx.size());
    for (std::size_t i = 0; i < idx.size(); ++i) {
      std::copy(data.images.begin() + static_cast<std::ptrdiff_t>(idx[i] * isz),
                data.images.begin() + static_cast<std::ptrdiff_t>((idx[i] + 1) * isz),
                x.ptr() + i * isz);
      labels[i] = y[idx[i]];
    }
  };

  nn::Tensor xtr;
  std::vector<int> ytr;
  gather(task.train, xtr, ytr);

  nn::Model model(nn::default_classifier_config(data.bands, data.height, data.width,
                                                class_count));
  Rng init_rng(derive_seed(fold_seed, 0x696e6974ull));
  model.init_params(init_rng);
  nn::TrainConfig tc = train_cfg;
  tc.seed = fold_seed;
  nn::train_model(model, xtr, ytr, tc);

  // score in slices to bound the im2col working set
  std::vector<int> y_true, y_pred;
  y_true.reserve(task.test.size());
  y_pred.reserve(task.test.size());
  nn::ForwardPass fp;
  nn::Tensor xte;
  std::vector<int> yte;
  constexpr std::size_t kEvalBatch = 128;
  for (std::size_t at = 0; at < task.test.size(); at += kEvalBatch) {
    const std::size_t end = std::min(task.test.size(), at + kEvalBatch);
    const std::vector<std::size_t> slice(task.test.begin() + at,
                                         task.test.begin() + end);
    gather(slice, xte, yte);
    const std::vector<int> pred = model.predict(xte, fp);
    y_true.insert(y_true.end(), yte.begin(), yte.end());
    y_pred.insert(y_pred.end(), pred.begin(), pred.end());
  }

  FoldResult result;
  result.repetition = task.repetition;
  result.fold = task.fold;
  result.group = task.group;
  result.test_size = task.test.size();
  result.metrics = weighted_metrics(y_true, y_pred, class_count);
  return result;
}

}  // namespace detail

// Plans folds at (user, song)-pair granularity — chunks of one pair never
// straddle train and test — then trains a fresh model per fold and reports
// support-weighted metrics with mean/std aggregates. Deterministic for a
// fixed seed regardless of the jobs count.
inline MetricsReport run_experiment(ExperimentKind kind, const LabeledDataset& data,
                                    const nn::TrainConfig& train_cfg,
                                    const ExperimentOptions& opts = {}) {
  data.validate();
  if (data.size() == 0) throw std::invalid_argument("experiment dataset is empty");
  if (opts.jobs < 1) throw std::invalid_argument("jobs must be positive");
  const detail::KindTraits traits = detail::kind_traits(kind);

  // pair table, deterministically ordered
  std::map<std::pair<int, int>, std::size_t> pair_index;
  std::vector<std::pair<int, int>> pairs;
  std::vector<std::size_t> sample_pair(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    const std::pair<int, int> key{data.user_ids[i], data.song_ids[i]};
    auto [it, inserted] = pair_index.try_emplace(key, pairs.size());
    if (inserted) pairs.push_back(key);
    sample_pair[i] = it->second;
  }

  // partition filter at pair level
  std::vector<std::size_t> selected;
  for (std::size_t p = 0; p < pairs.size(); ++p) {
    const int rating = data.ratings.at(pairs[p]);
    const bool high = rating > 5;
    if (traits.partition == detail::PartitionFilter::kHigh && !high) continue;
    if (traits.partition == detail::PartitionFilter::kLow && high) continue;
    selected.push_back(p);
  }
  if (selected.empty())
    throw std::invalid_argument(std::string(experiment_name(kind)) + ": the " +
                                (traits.partition == detail::PartitionFilter::kHigh
                                     ? "high"
                                     : "low") +
                                "-enjoyment partition is empty");

  // raw pair labels and groups under this experiment
  std::vector<int> raw_label(selected.size()), group(selected.size());
  for (std::size_t i = 0; i < selected.size(); ++i) {
    const auto& [user, song] = pairs[selected[i]];
    switch (traits.label) {
      case detail::LabelSource::kUser: raw_label[i] = user; break;
      case detail::LabelSource::kSong: raw_label[i] = song; break;
      case detail::LabelSource::kEnjoyment:
        raw_label[i] = data.ratings.at(pairs[selected[i]]) > 5 ? 1 : 0;
        break;
    }
    group[i] = traits.protocol == Protocol::kLeaveOneUserOut ? user : song;
  }

  // compact class ids in sorted raw-label order
  std::vector<int> classes = raw_label;
  std::sort(classes.begin(), classes.end());
  classes.erase(std::unique(classes.begin(), classes.end()), classes.end());
  if (classes.size() < 2)
    throw std::invalid_argument(std::string(experiment_name(kind)) +
                                ": needs at least 2 classes, found " +
                                std::to_string(classes.size()));
  const int class_count = static_cast<int>(classes.size());
  auto class_of = [&](int raw) {
    return static_cast<int>(std::lower_bound(classes.begin(), classes.end(), raw) -
                            classes.begin());
  };

  // fold plans over pairs
  std::vector<FoldPlan> plans;
  if (traits.protocol == Protocol::kStratifiedKfold) {
    plans = plan_stratified_kfold(raw_label, opts.kfolds, opts.repetitions,
                                  train_cfg.seed);
  } else {
    plans.push_back(plan_leave_one_group_out(group, traits.protocol));
  }

  // expand pair folds to sample folds
  std::vector<std::vector<std::size_t>> pair_samples(selected.size());
  {
    std::vector<std::size_t> pair_slot(pairs.size(), static_cast<std::size_t>(-1));
    for (std::size_t i = 0; i < selected.size(); ++i) pair_slot[selected[i]] = i;
    for (std::size_t s = 0; s < data.size(); ++s) {
      const std::size_t slot = pair_slot[sample_pair[s]];
      if (slot != static_cast<std::size_t>(-1)) pair_samples[slot].push_back(s);
    }
  }

  std::vector<int> y(data.size(), -1);
  for (std::size_t i = 0; i < selected.size(); ++i)
    for (std::size_t s : pair_samples[i]) y[s] = class_of(raw_label[i]);

  std::vector<detail::FoldTask> tasks;
  for (std::size_t rep = 0; rep < plans.size(); ++rep) {
    for (std::size_t f = 0; f < plans[rep].folds.size(); ++f) {
      const Fold& fold = plans[rep].folds[f];
      detail::FoldTask task;
      task.repetition = static_cast<int>(rep);
      task.fold = static_cast<int>(f);
      task.group = fold.group;
      for (std::size_t p : fold.train)
        for (std::size_t s : pair_samples[p]) task.train.push_back(s);
      for (std::size_t p : fold.test)
        for (std::size_t s : pair_samples[p]) task.test.push_back(s);
      if (task.train.empty() || task.test.empty())
        throw std::invalid_argument(std::string(experiment_name(kind)) +
                                    ": fold " + std::to_string(f) +
                                    " has an empty train or test side");
      if (traits.protocol != Protocol::kStratifiedKfold) {
        // leakage assertion: the held-out group must be absent from training
        for (std::size_t s : task.train) {
          const int g = traits.protocol == Protocol::kLeaveOneUserOut
                            ? data.user_ids[s]
                            : data.song_ids[s];
          if (g == fold.group)
            throw std::logic_error(std::string(experiment_name(kind)) +
                                   ": group " + std::to_string(fold.group) +
                                   " leaked into its own training fold");
        }
      }
      tasks.push_back(std::move(task));
    }
  }

  // train folds, optionally across threads; results land in fixed slots so
  // the report is identical for any jobs value
  std::vector<FoldResult> results(tasks.size());
  std::vector<std::exception_ptr> failures(tasks.size());
  std::atomic<std::size_t> cursor{0};
  auto worker = [&] {
    for (;;) {
      const std::size_t t = cursor.fetch_add(1);
      if (t >= tasks.size()) break;
      try {
        const std::uint64_t fold_seed =
            derive_seed(train_cfg.seed, 0x666f6c64ull + tasks[t].repetition,
                        static_cast<std::uint64_t>(tasks[t].fold));
        results[t] = detail::run_fold(data, y, class_count, tasks[t], train_cfg,
                                      fold_seed);
      } catch (...) {
        failures[t] = std::current_exception();
      }
    }
  };
  const int jobs = std::min<int>(opts.jobs, static_cast<int>(tasks.size()));
  if (jobs <= 1) {
    worker();
  } else {
    std::vector<std::thread> threads;
    threads.reserve(static_cast<std::size_t>(jobs));
    for (int j = 0; j < jobs; ++j) threads.emplace_back(worker);
    for (std::thread& th : threads) th.join();
  }
  for (const std::exception_ptr& err : failures)
    if (err) std::rethrow_exception(err);

  MetricsReport report;
  report.experiment = experiment_name(kind);
  report.protocol = protocol_name(traits.protocol);
  report.repetitions = static_cast<int>(plans.size());
  report.class_count = class_count;
  report.per_fold = std::move(results);
  report.aggregate();
  return report;
}

}  // namespace neurotopo::eval
