#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "neurotopo/util/rng.hpp"

namespace neurotopo::eval {

enum class Protocol { kStratifiedKfold, kLeaveOneUserOut, kLeaveOneSongOut };

inline const char* protocol_name(Protocol p) {
  switch (p) {
    case Protocol::kStratifiedKfold: return "stratified_kfold";
    case Protocol::kLeaveOneUserOut: return "leave_one_user_out";
    case Protocol::kLeaveOneSongOut: return "leave_one_song_out";
  }
  return "?";
}

struct Fold {
  std::vector<std::size_t> train, test;
  int group = -1;  // held-out group id for leave-one-group-out plans
};

struct FoldPlan {
  Protocol protocol = Protocol::kStratifiedKfold;
  std::vector<Fold> folds;
  std::uint64_t repetition_seed = 0;
};

// One plan per repetition; within a repetition, every class's samples are
// shuffled and dealt into k test folds whose per-class sizes differ by at
// most one, so fold class proportions track the global proportions. Leftover
// samples rotate across folds class by class, keeping total fold sizes
// within one of each other as well.
inline std::vector<FoldPlan> plan_stratified_kfold(const std::vector<int>& labels,
                                                   int k = 5, int repetitions = 10,
                                                   std::uint64_t seed = 0) {
  if (labels.empty()) throw std::invalid_argument("stratified k-fold: no samples");
  if (k < 2) throw std::invalid_argument("stratified k-fold: k must be at least 2");
  if (repetitions < 1)
    throw std::invalid_argument("stratified k-fold: repetitions must be positive");

  std::map<int, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < labels.size(); ++i) by_class[labels[i]].push_back(i);
  for (const auto& [cls, idx] : by_class)
    if (idx.size() < static_cast<std::size_t>(k))
      throw std::invalid_argument("stratified k-fold: class " + std::to_string(cls) +
                                  " has " + std::to_string(idx.size()) +
                                  " samples, fewer than k=" + std::to_string(k));

  std::vector<FoldPlan> plans;
  plans.reserve(static_cast<std::size_t>(repetitions));
  for (int rep = 0; rep < repetitions; ++rep) {
    FoldPlan plan;
    plan.protocol = Protocol::kStratifiedKfold;
    plan.repetition_seed = derive_seed(seed, static_cast<std::uint64_t>(rep));
    plan.folds.resize(static_cast<std::size_t>(k));
    Rng rng(plan.repetition_seed);

    std::size_t spill = 0;  // next fold to receive a leftover sample
    for (const auto& [cls, idx] : by_class) {
      std::vector<std::size_t> shuffled = idx;
      rng.shuffle(shuffled);
      const std::size_t kk = static_cast<std::size_t>(k);
      const std::size_t base = shuffled.size() / kk;
      const std::size_t extra = shuffled.size() % kk;
      std::vector<std::size_t> take(kk, base);
      for (std::size_t j = 0; j < extra; ++j) take[(spill + j) % kk] += 1;
      spill = (spill + extra) % kk;
      std::size_t at = 0;
      for (std::size_t f = 0; f < kk; ++f)
        for (std::size_t j = 0; j < take[f]; ++j)
          plan.folds[f].test.push_back(shuffled[at++]);
    }
    for (Fold& fold : plan.folds) {
      std::sort(fold.test.begin(), fold.test.end());
      std::vector<char> in_test(labels.size(), 0);
      for (std::size_t i : fold.test) in_test[i] = 1;
      for (std::size_t i = 0; i < labels.size(); ++i)
        if (!in_test[i]) fold.train.push_back(i);
    }
    plans.push_back(std::move(plan));
  }
  return plans;
}

// One fold per distinct group value (ascending); the fold's test set is
// exactly that group's samples.
inline FoldPlan plan_leave_one_group_out(const std::vector<int>& group_ids,
                                         Protocol protocol) {
  if (group_ids.empty())
    throw std::invalid_argument("leave-one-group-out: no samples");
  std::map<int, std::vector<std::size_t>> by_group;
  for (std::size_t i = 0; i < group_ids.size(); ++i)
    by_group[group_ids[i]].push_back(i);
  if (by_group.size() < 2)
    throw std::invalid_argument("leave-one-group-out: need at least 2 groups, have " +
                                std::to_string(by_group.size()));

  FoldPlan plan;
  plan.protocol = protocol;
  for (const auto& [group, idx] : by_group) {
    Fold fold;
    fold.group = group;
    fold.test = idx;
    for (std::size_t i = 0; i < group_ids.size(); ++i)
      if (group_ids[i] != group) fold.train.push_back(i);
    plan.folds.push_back(std::move(fold));
  }
  return plan;
}

// rating > threshold goes high, the rest low.
struct EnjoymentPartition {
  std::vector<std::size_t> high, low;
  int threshold = 5;
};

inline EnjoymentPartition dichotomize_enjoyment(const std::vector<int>& ratings,
                                                int threshold = 5) {
  EnjoymentPartition part;
  part.threshold = threshold;
  for (std::size_t i = 0; i < ratings.size(); ++i) {
    if (ratings[i] < 1 || ratings[i] > 9)
      throw std::invalid_argument("enjoyment rating " + std::to_string(ratings[i]) +
                                  " at index " + std::to_string(i) + " outside 1-9");
    (ratings[i] > threshold ? part.high : part.low).push_back(i);
  }
  return part;
}

}  // namespace neurotopo::eval
