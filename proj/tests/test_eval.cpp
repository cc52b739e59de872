#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <map>
#include <set>
#include <vector>

#include "neurotopo/eval/experiments.hpp"
#include "neurotopo/eval/folds.hpp"
#include "neurotopo/eval/metrics.hpp"

using namespace neurotopo;

namespace {

std::vector<int> make_labels(const std::vector<int>& counts) {
  std::vector<int> labels;
  for (std::size_t c = 0; c < counts.size(); ++c)
    labels.insert(labels.end(), counts[c], static_cast<int>(c));
  return labels;
}

}  // namespace

TEST_CASE("stratified k-fold partitions satisfy the fold invariants") {
  for (const auto& counts : {std::vector<int>{5, 5, 5}, std::vector<int>{7, 11, 5, 9},
                             std::vector<int>{23, 6}}) {
    std::vector<int> labels = make_labels(counts);
    const int k = 5;
    const auto plans = eval::plan_stratified_kfold(labels, k, 3, 42);
    REQUIRE(plans.size() == 3);
    for (const auto& plan : plans) {
      REQUIRE(plan.folds.size() == static_cast<std::size_t>(k));
      std::vector<int> seen(labels.size(), 0);
      for (const auto& fold : plan.folds) {
        for (std::size_t i : fold.test) seen[i] += 1;
        // train is exactly the complement of test
        std::set<std::size_t> test_set(fold.test.begin(), fold.test.end());
        REQUIRE(fold.train.size() + fold.test.size() == labels.size());
        for (std::size_t i : fold.train) REQUIRE(test_set.count(i) == 0);
      }
      // every sample appears in exactly one test fold
      REQUIRE(std::all_of(seen.begin(), seen.end(), [](int n) { return n == 1; }));
      // fold sizes and per-class allocations are balanced within one
      std::vector<std::size_t> sizes;
      for (const auto& fold : plan.folds) sizes.push_back(fold.test.size());
      REQUIRE(*std::max_element(sizes.begin(), sizes.end()) -
                  *std::min_element(sizes.begin(), sizes.end()) <=
              1);
      for (std::size_t c = 0; c < counts.size(); ++c) {
        std::vector<std::size_t> per_class;
        for (const auto& fold : plan.folds) {
          std::size_t n = 0;
          for (std::size_t i : fold.test)
            if (labels[i] == static_cast<int>(c)) ++n;
          per_class.push_back(n);
        }
        REQUIRE(*std::max_element(per_class.begin(), per_class.end()) -
                    *std::min_element(per_class.begin(), per_class.end()) <=
                1);
      }
    }
  }
}

TEST_CASE("stratified k-fold is seeded and varies across repetitions") {
  std::vector<int> labels = make_labels({12, 12, 12});
  const auto a = eval::plan_stratified_kfold(labels, 4, 2, 7);
  const auto b = eval::plan_stratified_kfold(labels, 4, 2, 7);
  REQUIRE(a.size() == b.size());
  for (std::size_t r = 0; r < a.size(); ++r)
    for (std::size_t f = 0; f < a[r].folds.size(); ++f) {
      REQUIRE(a[r].folds[f].test == b[r].folds[f].test);
      REQUIRE(a[r].folds[f].train == b[r].folds[f].train);
    }
  CHECK(a[0].folds[0].test != a[1].folds[0].test);
  const auto c = eval::plan_stratified_kfold(labels, 4, 1, 8);
  CHECK(c[0].folds[0].test != a[0].folds[0].test);
}

TEST_CASE("stratified k-fold rejects classes smaller than k") {
  std::vector<int> labels = make_labels({6, 3, 6});
  REQUIRE_THROWS_WITH(eval::plan_stratified_kfold(labels, 5, 1, 0),
                      Catch::Matchers::ContainsSubstring("class 1") &&
                          Catch::Matchers::ContainsSubstring("5"));
}

TEST_CASE("leave-one-group-out holds out each group exactly once") {
  std::vector<int> groups = {4, 2, 2, 9, 4, 4, 2};
  const auto plan =
      eval::plan_leave_one_group_out(groups, eval::Protocol::kLeaveOneUserOut);
  REQUIRE(plan.protocol == eval::Protocol::kLeaveOneUserOut);
  REQUIRE(plan.folds.size() == 3);
  REQUIRE(plan.folds[0].group == 2);
  REQUIRE(plan.folds[1].group == 4);
  REQUIRE(plan.folds[2].group == 9);
  for (const auto& fold : plan.folds) {
    for (std::size_t i : fold.test) REQUIRE(groups[i] == fold.group);
    for (std::size_t i : fold.train) REQUIRE(groups[i] != fold.group);
    REQUIRE(fold.train.size() + fold.test.size() == groups.size());
  }
  REQUIRE(plan.folds[2].test.size() == 1);

  REQUIRE_THROWS_WITH(eval::plan_leave_one_group_out({3, 3, 3},
                                                     eval::Protocol::kLeaveOneSongOut),
                      Catch::Matchers::ContainsSubstring("at least 2 groups"));
}

TEST_CASE("enjoyment dichotomization splits strictly above 5") {
  const auto part = eval::dichotomize_enjoyment({7, 5, 3, 9, 6, 1});
  REQUIRE(part.high == std::vector<std::size_t>{0, 3, 4});
  REQUIRE(part.low == std::vector<std::size_t>{1, 2, 5});
  REQUIRE(part.threshold == 5);

  const auto all_high = eval::dichotomize_enjoyment({9, 9, 9});
  CHECK(all_high.low.empty());
  REQUIRE(all_high.high.size() == 3);

  REQUIRE_THROWS_WITH(eval::dichotomize_enjoyment({4, 0}),
                      Catch::Matchers::ContainsSubstring("1-9"));
  REQUIRE_THROWS_WITH(eval::dichotomize_enjoyment({4, 10}),
                      Catch::Matchers::ContainsSubstring("1-9"));
}

TEST_CASE("weighted metrics match the hand-computed oracle") {
  const std::vector<int> y_true = {0, 0, 1, 1};
  const std::vector<int> y_pred = {0, 1, 1, 1};
  const auto m = eval::weighted_metrics(y_true, y_pred, 2);
  CHECK_THAT(m.accuracy, Catch::Matchers::WithinAbs(0.75, 1e-12));
  CHECK_THAT(m.precision, Catch::Matchers::WithinAbs(0.833333333, 1e-4));
  CHECK_THAT(m.recall, Catch::Matchers::WithinAbs(0.75, 1e-4));
  CHECK_THAT(m.f1, Catch::Matchers::WithinAbs(0.733333333, 1e-4));
  REQUIRE(m.confusion == std::vector<std::vector<std::size_t>>{{1, 1}, {0, 2}});
}

TEST_CASE("weighted metrics handle perfect and degenerate predictions") {
  SECTION("perfect prediction scores 1 everywhere") {
    const std::vector<int> y = {2, 0, 1, 2, 1, 0};
    const auto m = eval::weighted_metrics(y, y, 3);
    CHECK(m.accuracy == 1.0);
    CHECK(m.precision == 1.0);
    CHECK(m.recall == 1.0);
    CHECK(m.f1 == 1.0);
  }
  SECTION("constant prediction on balanced 10-class data") {
    std::vector<int> y_true(10), y_pred(10, 0);
    for (int i = 0; i < 10; ++i) y_true[i] = i;
    const auto m = eval::weighted_metrics(y_true, y_pred, 10);
    CHECK_THAT(m.accuracy, Catch::Matchers::WithinAbs(0.1, 1e-12));
    // classes never predicted contribute precision 0
    CHECK_THAT(m.precision, Catch::Matchers::WithinAbs(0.01, 1e-12));
    CHECK_THAT(m.recall, Catch::Matchers::WithinAbs(0.1, 1e-12));
    CHECK_THAT(m.f1, Catch::Matchers::WithinAbs(0.1 * (2.0 * 0.1 / 1.1), 1e-12));
  }
  SECTION("validation") {
    REQUIRE_THROWS_WITH(eval::weighted_metrics({}, {}, 2),
                        Catch::Matchers::ContainsSubstring("empty"));
    REQUIRE_THROWS_WITH(eval::weighted_metrics({0, 1}, {0}, 2),
                        Catch::Matchers::ContainsSubstring("true vs 1 predicted"));
    REQUIRE_THROWS_WITH(eval::weighted_metrics({0, 2}, {0, 1}, 2),
                        Catch::Matchers::ContainsSubstring("label"));
  }
}

TEST_CASE("weighted recall equals accuracy and metrics ignore label naming") {
  Rng rng(99);
  std::vector<int> y_true(200), y_pred(200);
  for (int i = 0; i < 200; ++i) {
    y_true[i] = static_cast<int>(rng.below(6));
    y_pred[i] = static_cast<int>(rng.below(6));
  }
  const auto m = eval::weighted_metrics(y_true, y_pred, 6);
  CHECK_THAT(m.recall, Catch::Matchers::WithinAbs(m.accuracy, 1e-12));

  // permute class ids consistently: support-weighted scores are unchanged
  const int perm[6] = {3, 5, 0, 1, 4, 2};
  std::vector<int> t2(200), p2(200);
  for (int i = 0; i < 200; ++i) {
    t2[i] = perm[y_true[i]];
    p2[i] = perm[y_pred[i]];
  }
  const auto m2 = eval::weighted_metrics(t2, p2, 6);
  CHECK_THAT(m2.accuracy, Catch::Matchers::WithinAbs(m.accuracy, 1e-12));
  CHECK_THAT(m2.precision, Catch::Matchers::WithinAbs(m.precision, 1e-12));
  CHECK_THAT(m2.recall, Catch::Matchers::WithinAbs(m.recall, 1e-12));
  CHECK_THAT(m2.f1, Catch::Matchers::WithinAbs(m.f1, 1e-12));
}

TEST_CASE("metrics summary uses the sample standard deviation") {
  const auto s = eval::summarize({0.5, 0.7, 0.9});
  CHECK_THAT(s.mean, Catch::Matchers::WithinAbs(0.7, 1e-12));
  CHECK_THAT(s.stddev, Catch::Matchers::WithinAbs(0.2, 1e-12));
  const auto one = eval::summarize({0.42});
  CHECK(one.mean == 0.42);
  CHECK(one.stddev == 0.0);
}

namespace {

enum class ToyFocus { kUser, kSong, kEnjoyment };

// Tiny dataset whose images encode exactly one quantity, chosen by `focus`,
// in plane 0; the other planes hold noise. With a single informative feature
// the classifier has nothing to overfit, so a few epochs must generalize.
eval::LabeledDataset make_toy_dataset(int users, int songs, int chunks,
                                      const std::map<std::pair<int, int>, int>& ratings,
                                      ToyFocus focus) {
  eval::LabeledDataset data;
  data.width = 4;
  data.height = 4;
  data.bands = 2;
  Rng rng(5);
  for (int u = 0; u < users; ++u)
    for (int s = 0; s < songs; ++s)
      for (int c = 0; c < chunks; ++c) {
        data.user_ids.push_back(u);
        data.song_ids.push_back(s);
        double value = 0.0;
        switch (focus) {
          case ToyFocus::kUser: value = u; break;
          case ToyFocus::kSong: value = s; break;
          case ToyFocus::kEnjoyment:
            value = ratings.at({u, s}) > 5 ? 1.0 : -1.0;
            break;
        }
        for (int b = 0; b < 2; ++b)
          for (int px = 0; px < 16; ++px)
            data.images.push_back((b == 0 ? value : 0.0) + 0.02 * rng.normal());
      }
  data.ratings = ratings;
  return data;
}

}  // namespace

TEST_CASE("experiment names round-trip") {
  for (const char* name : {"user-id-kfold", "user-id-loso", "song-id-kfold",
                           "song-id-louo", "enjoy-kfold", "song-id-louo-high",
                           "song-id-louo-low"})
    CHECK(eval::experiment_name(eval::experiment_from_name(name)) ==
          std::string(name));
  REQUIRE_THROWS_WITH(eval::experiment_from_name("user-id"),
                      Catch::Matchers::ContainsSubstring("unknown experiment"));
}

TEST_CASE("experiment runner trains, scores, and aggregates") {
  std::map<std::pair<int, int>, int> ratings;
  for (int u = 0; u < 3; ++u)
    for (int s = 0; s < 3; ++s) ratings[{u, s}] = (u + s) % 2 ? 8 : 3;

  nn::TrainConfig tc;
  tc.epochs = 25;
  tc.batch_size = 8;
  tc.learning_rate = 5e-3;
  tc.seed = 11;

  SECTION("stratified k-fold over users") {
    const auto data = make_toy_dataset(3, 3, 4, ratings, ToyFocus::kUser);
    eval::ExperimentOptions opts;
    opts.kfolds = 3;
    opts.repetitions = 2;
    const auto report =
        eval::run_experiment(eval::ExperimentKind::kUserIdKfold, data, tc, opts);
    CHECK(report.experiment == "user-id-kfold");
    CHECK(report.protocol == "stratified_kfold");
    CHECK(report.repetitions == 2);
    CHECK(report.class_count == 3);
    REQUIRE(report.per_fold.size() == 6);
    std::size_t tested = 0;
    for (const auto& fr : report.per_fold) {
      CHECK(fr.group == -1);
      tested += fr.test_size;
    }
    CHECK(tested == 2 * data.size());
    CHECK(report.accuracy.mean > 0.9);
  }

  SECTION("leave-one-user-out song identification carries group ids") {
    const auto data = make_toy_dataset(3, 3, 4, ratings, ToyFocus::kSong);
    const auto report =
        eval::run_experiment(eval::ExperimentKind::kSongIdLouo, data, tc);
    CHECK(report.protocol == "leave_one_user_out");
    REQUIRE(report.per_fold.size() == 3);
    for (int f = 0; f < 3; ++f) {
      CHECK(report.per_fold[f].group == f);
      CHECK(report.per_fold[f].test_size == 12);
    }
    CHECK(report.accuracy.mean > 0.9);
    CHECK(report.repetitions == 1);
  }

  SECTION("results do not depend on the worker count") {
    const auto data = make_toy_dataset(3, 3, 4, ratings, ToyFocus::kSong);
    eval::ExperimentOptions serial, parallel;
    serial.kfolds = parallel.kfolds = 3;
    serial.jobs = 1;
    parallel.jobs = 3;
    const auto a =
        eval::run_experiment(eval::ExperimentKind::kSongIdKfold, data, tc, serial);
    const auto b =
        eval::run_experiment(eval::ExperimentKind::kSongIdKfold, data, tc, parallel);
    REQUIRE(eval::report_to_json(a).dump() == eval::report_to_json(b).dump());
  }

  SECTION("enjoyment classification is binary with chance 0.5") {
    const auto data = make_toy_dataset(3, 3, 4, ratings, ToyFocus::kEnjoyment);
    eval::ExperimentOptions opts;
    opts.kfolds = 2;
    const auto report =
        eval::run_experiment(eval::ExperimentKind::kEnjoymentKfold, data, tc, opts);
    CHECK(report.class_count == 2);
    const auto json = eval::report_to_json(report);
    CHECK(json.at("chance_level").get<double>() == 0.5);
    CHECK(report.accuracy.mean > 0.9);
  }

  SECTION("partition filters restrict the pair set") {
    const auto data = make_toy_dataset(3, 3, 4, ratings, ToyFocus::kSong);
    const auto report =
        eval::run_experiment(eval::ExperimentKind::kSongIdLouoHigh, data, tc);
    // high pairs: (u+s) odd -> songs {0,1,2} all present, 4 high pairs
    std::size_t tested = 0;
    for (const auto& fr : report.per_fold) tested += fr.test_size;
    CHECK(tested == 4 * 4);  // 4 high pairs x 4 chunks
  }
}

TEST_CASE("experiment runner rejects impossible requests up front") {
  std::map<std::pair<int, int>, int> ratings;
  for (int u = 0; u < 2; ++u)
    for (int s = 0; s < 2; ++s) ratings[{u, s}] = 2;  // nothing enjoyed
  const auto data = make_toy_dataset(2, 2, 2, ratings, ToyFocus::kUser);
  nn::TrainConfig tc;

  REQUIRE_THROWS_WITH(
      eval::run_experiment(eval::ExperimentKind::kSongIdLouoHigh, data, tc),
      Catch::Matchers::ContainsSubstring("high-enjoyment partition is empty"));
  REQUIRE_THROWS_WITH(
      eval::run_experiment(eval::ExperimentKind::kEnjoymentKfold, data, tc),
      Catch::Matchers::ContainsSubstring("at least 2 classes"));

  eval::LabeledDataset broken = data;
  broken.ratings.erase({1, 1});
  REQUIRE_THROWS_WITH(
      eval::run_experiment(eval::ExperimentKind::kUserIdKfold, broken, tc),
      Catch::Matchers::ContainsSubstring("no enjoyment rating"));
}

TEST_CASE("metrics report serializes the full fold table") {
  eval::MetricsReport report;
  report.experiment = "song-id-louo";
  report.protocol = "leave_one_user_out";
  report.repetitions = 1;
  report.class_count = 4;
  for (int f = 0; f < 2; ++f) {
    eval::FoldResult fr;
    fr.repetition = 0;
    fr.fold = f;
    fr.group = 10 + f;
    fr.test_size = 8;
    fr.metrics = eval::weighted_metrics({0, 1, 2, 3}, {0, 1, 2, f == 0 ? 3 : 0}, 4);
    report.per_fold.push_back(fr);
  }
  report.aggregate();
  const auto json = eval::report_to_json(report);
  CHECK(json.at("experiment") == "song-id-louo");
  CHECK(json.at("protocol") == "leave_one_user_out");
  CHECK(json.at("class_count") == 4);
  CHECK_THAT(json.at("chance_level").get<double>(),
             Catch::Matchers::WithinAbs(0.25, 1e-12));
  REQUIRE(json.at("per_fold").size() == 2);
  const auto& row = json.at("per_fold")[0];
  CHECK(row.at("group") == 10);
  CHECK(row.at("test_size") == 8);
  CHECK(row.at("accuracy") == 1.0);
  REQUIRE(row.contains("confusion"));
  CHECK(row.at("confusion")[3][3] == 1);
  const auto& agg = json.at("aggregate");
  CHECK_THAT(agg.at("accuracy").at("mean").get<double>(),
             Catch::Matchers::WithinAbs(0.875, 1e-12));
  CHECK(agg.at("accuracy").contains("std"));
  CHECK(agg.contains("weighted_precision"));
  CHECK(agg.contains("weighted_recall"));
  CHECK(agg.contains("weighted_f1"));
}
