#include <doctest.h>

#include <algorithm>
#include <set>

#include "egoscene/checkpoint.hpp"
#include "egoscene/experiment.hpp"
#include "helpers.hpp"

using namespace egoscene;
using namespace egoscene::experiment;
using testutil::TempDir;

namespace {

std::vector<std::string> participant_ids(int n, const std::string& prefix = "P") {
  std::vector<std::string> ids;
  for (int i = 0; i < n; ++i) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "%s%03d", prefix.c_str(), i);
    ids.push_back(buf);
  }
  return ids;
}

// Two linearly separable classes: class 0 fills dims with +1, class 1
// with -1, plus mild noise.
Segment toy_segment(const std::string& pid, std::int64_t ts, int cls,
                    Rng& rng, int frames = 40) {
  Segment s = testutil::make_segment(pid, "S01", ts,
                                     cls == 0 ? SceneLabel::ns : SceneLabel::pat,
                                     0.0f, frames);
  const float base = cls == 0 ? 1.0f : -1.0f;
  for (auto& v : s.matrix) {
    v = base + static_cast<float>(rng.normal(0.0, 0.25));
  }
  return s;
}

struct ToySet {
  std::vector<Segment> storage;
  std::vector<const Segment*> train, val, test;
};

ToySet make_toy(std::uint64_t seed, int per_class = 24) {
  ToySet t;
  Rng rng(seed);
  for (int i = 0; i < per_class * 2; ++i) {
    const int cls = i % 2;
    t.storage.push_back(toy_segment("P" + std::to_string(i), i * 60000, cls, rng));
  }
  for (std::size_t i = 0; i < t.storage.size(); ++i) {
    switch (i % 6) {
      case 2:
      case 3:
        t.val.push_back(&t.storage[i]);
        break;
      case 4:
      case 5:
        t.test.push_back(&t.storage[i]);
        break;
      default:
        t.train.push_back(&t.storage[i]);
    }
  }
  return t;
}

}  // namespace

TEST_CASE("make_folds partitions participants with near-equal sizes") {
  SUBCASE("86 participants, 10 folds") {
    const FoldPlan plan = make_folds(participant_ids(86), 10, 42);
    REQUIRE(plan.test_folds.size() == 10);
    std::set<std::string> seen;
    for (const auto& fold : plan.test_folds) {
      CHECK(fold.size() >= 8);
      CHECK(fold.size() <= 9);
      for (const auto& id : fold) CHECK(seen.insert(id).second);  // disjoint
    }
    CHECK(seen.size() == 86);  // covering
    for (int f = 0; f < 10; ++f) {
      CHECK(plan.validation[f].size() == 4);
      for (const auto& v : plan.validation[f]) {
        CHECK(std::find(plan.test_folds[f].begin(), plan.test_folds[f].end(), v) ==
              plan.test_folds[f].end());
      }
    }
  }
  SUBCASE("10 participants, 10 folds: singletons") {
    const FoldPlan plan = make_folds(participant_ids(10), 10, 1);
    for (const auto& fold : plan.test_folds) CHECK(fold.size() == 1);
  }
  SUBCASE("deterministic in the seed") {
    const FoldPlan a = make_folds(participant_ids(30), 5, 7);
    const FoldPlan b = make_folds(participant_ids(30), 5, 7);
    CHECK(a.test_folds == b.test_folds);
    CHECK(a.validation == b.validation);
    const FoldPlan c = make_folds(participant_ids(30), 5, 8);
    CHECK(a.test_folds != c.test_folds);
  }
  SUBCASE("input order does not matter") {
    auto ids = participant_ids(20);
    const FoldPlan a = make_folds(ids, 4, 3);
    std::reverse(ids.begin(), ids.end());
    const FoldPlan b = make_folds(ids, 4, 3);
    CHECK(a.test_folds == b.test_folds);
  }
  SUBCASE("fewer participants than folds is an error") {
    CHECK_THROWS_AS(make_folds(participant_ids(5), 10, 1), Error);
  }
}

TEST_CASE("select_validation") {
  SUBCASE("77 train participants yield 4 validation, 73 effective") {
    const auto ids = participant_ids(77);
    const auto val = select_validation(ids, 4, 9);
    CHECK(val.size() == 4);
    std::set<std::string> vs(val.begin(), val.end());
    int remaining = 0;
    for (const auto& id : ids) {
      if (!vs.count(id)) ++remaining;
    }
    CHECK(remaining == 73);
  }
  SUBCASE("n = 0 yields an empty validation set") {
    CHECK(select_validation(participant_ids(5), 0, 1).empty());
  }
  SUBCASE("too few participants is an error") {
    CHECK_THROWS_AS(select_validation(participant_ids(4), 4, 1), Error);
  }
}

TEST_CASE("fold hygiene holds across 100 seeds") {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const FoldPlan plan = make_folds(participant_ids(23), 5, seed, 3);
    std::set<std::string> all;
    for (int f = 0; f < 5; ++f) {
      std::set<std::string> test(plan.test_folds[f].begin(), plan.test_folds[f].end());
      for (const auto& id : test) {
        CHECK(all.insert(id).second);  // no participant in two folds
      }
      for (const auto& v : plan.validation[f]) {
        CHECK(!test.count(v));  // validation never intersects the test fold
      }
    }
    CHECK(all.size() == 23);
  }
}

TEST_CASE("select_best_epoch picks the first minimum") {
  CHECK(select_best_epoch({0.9, 0.7, 0.8}) == 2);
  CHECK(select_best_epoch({0.5}) == 1);
  CHECK(select_best_epoch({0.5, 0.5, 0.5}) == 1);
  CHECK(select_best_epoch({3.0, 2.0, 1.0}) == 3);
  CHECK(select_best_epoch({}) == 0);
}

TEST_CASE("training on a separable toy set converges") {
  ToySet toy = make_toy(101);
  Rng init(derive_seed(101, "init"));
  Model<float> model(ModelSpec::of(ModelKind::mlp_baseline), init, 0.3);
  TrainConfig cfg;
  cfg.seed = 101;
  cfg.max_epochs = 8;
  cfg.patience = 8;
  cfg.batch_size = 16;
  const TrainResult res = train(model, toy.train, toy.val, cfg);

  REQUIRE(res.curve.size() >= 5);
  for (int e = 1; e < 5; ++e) {
    CHECK(res.curve[e].train_loss < res.curve[e - 1].train_loss + 1e-3);
  }
  CHECK(res.curve[4].train_loss < res.curve[0].train_loss);

  const EvalResult eval = evaluate(model, toy.test);
  CHECK(eval.accuracy == 1.0);

  // a perfect predictor has an identity confusion matrix on its classes
  for (int r = 0; r < 2; ++r) {
    for (int c = 0; c < 4; ++c) {
      CHECK(eval.confusion[r][c] == (r == c ? 1.0 : 0.0));
    }
  }
}

TEST_CASE("training twice with the same seed gives byte-identical checkpoints") {
  TempDir dir("det");
  auto run = [&](const std::filesystem::path& out) {
    ToySet toy = make_toy(77);
    Rng init(derive_seed(77, "init"));
    Model<float> model(ModelSpec::of(ModelKind::mlp_baseline), init, 0.3);
    TrainConfig cfg;
    cfg.seed = 77;
    cfg.max_epochs = 3;
    cfg.batch_size = 16;
    const TrainResult res = train(model, toy.train, toy.val, cfg);
    CheckpointMeta meta{77, static_cast<std::uint32_t>(res.best_epoch),
                        static_cast<float>(res.best_val_loss)};
    save_checkpoint(model, meta, out);
  };
  run(dir.path() / "a.ckpt");
  run(dir.path() / "b.ckpt");
  CHECK(testutil::read_file(dir.path() / "a.ckpt") ==
        testutil::read_file(dir.path() / "b.ckpt"));
}

TEST_CASE("train validates inputs") {
  ToySet toy = make_toy(5);
  Rng init(1);
  Model<float> model(ModelSpec::of(ModelKind::mlp_baseline), init);
  TrainConfig cfg;
  SUBCASE("empty training set") {
    std::vector<const Segment*> none;
    CHECK_THROWS_AS(train(model, none, toy.val, cfg), Error);
  }
  SUBCASE("unlabeled training segment") {
    Segment s = *toy.train[0];
    s.label.reset();
    std::vector<const Segment*> bad{&s};
    CHECK_THROWS_AS(train(model, bad, toy.val, cfg), Error);
  }
}

TEST_CASE("evaluate") {
  SUBCASE("constant-ns predictor scores the ns fraction") {
    std::vector<Segment> storage;
    for (int i = 0; i < 100; ++i) {
      storage.push_back(testutil::make_segment(
          "P", "S", i * 60000, i < 46 ? SceneLabel::ns : SceneLabel::pat, 0.0f, 1));
    }
    std::vector<const Segment*> segs;
    for (const auto& s : storage) segs.push_back(&s);
    CHECK(constant_accuracy(SceneLabel::ns, segs) == doctest::Approx(0.46));
  }
  SUBCASE("empty test set is an error") {
    ToySet toy = make_toy(5);
    Rng init(1);
    Model<float> model(ModelSpec::of(ModelKind::mlp_baseline), init);
    std::vector<const Segment*> none;
    CHECK_THROWS_AS(evaluate(model, none), Error);
  }
  SUBCASE("tally matches a brute-force hand count on 100 random pairs") {
    Rng rng(303);
    std::vector<SceneLabel> truth, pred;
    for (int i = 0; i < 100; ++i) {
      truth.push_back(scene_from_index(static_cast<int>(rng.uniform_int(4))));
      pred.push_back(scene_from_index(static_cast<int>(rng.uniform_int(4))));
    }
    const EvalResult r = tally(truth, pred);

    // oracle: direct tally
    std::int64_t counts[4][4] = {};
    std::int64_t correct = 0, row_totals[4] = {};
    for (int i = 0; i < 100; ++i) {
      ++counts[scene_index(truth[i])][scene_index(pred[i])];
      ++row_totals[scene_index(truth[i])];
      if (truth[i] == pred[i]) ++correct;
    }
    CHECK(r.accuracy == doctest::Approx(correct / 100.0).epsilon(1e-12));
    for (int t = 0; t < 4; ++t) {
      double row_sum = 0.0;
      for (int p = 0; p < 4; ++p) {
        const double want =
            row_totals[t] ? static_cast<double>(counts[t][p]) / row_totals[t] : 0.0;
        CHECK(r.confusion[t][p] == doctest::Approx(want).epsilon(1e-12));
        row_sum += r.confusion[t][p];
      }
      if (row_totals[t] > 0) {
        CHECK(row_sum == doctest::Approx(1.0).epsilon(1e-6));
      }
    }

    // accuracy equals the prior-weighted trace of the confusion matrix
    double trace_weighted = 0.0;
    for (int t = 0; t < 4; ++t) {
      trace_weighted += (row_totals[t] / 100.0) * r.confusion[t][t];
    }
    CHECK(trace_weighted == doctest::Approx(r.accuracy).epsilon(1e-9));
  }
}

namespace {

Corpus toy_corpus(std::uint64_t seed, int participants, int segs_each) {
  Corpus corpus;
  Rng rng(seed);
  for (int p = 0; p < participants; ++p) {
    ParticipantData data;
    char buf[16];
    std::snprintf(buf, sizeof buf, "P%03d", p);
    data.meta.participant_id = buf;
    data.meta.shift = p % 2 ? Shift::night : Shift::day;
    data.meta.role = p % 2 ? Role::non_nursing : Role::nursing;
    for (int i = 0; i < segs_each; ++i) {
      data.segments.push_back(toy_segment(buf, i * 60000, (p + i) % 2, rng));
    }
    corpus.participants.push_back(std::move(data));
  }
  return corpus;
}

}  // namespace

TEST_CASE("cross_validate wires folds, reports and confusion averaging") {
  const Corpus corpus = toy_corpus(11, 8, 6);
  TrainConfig cfg;
  cfg.seed = 11;
  cfg.max_epochs = 3;
  cfg.batch_size = 16;
  cfg.val_participants = 2;

  int hook_calls = 0;
  const ModelReport report = cross_validate(
      corpus, ModelKind::mlp_baseline, 2, cfg,
      [&](int fold, Model<float>&, const FoldRecord& rec) {
        CHECK(fold == hook_calls);
        CHECK(rec.fold == fold);
        ++hook_calls;
      });

  CHECK(hook_calls == 2);
  CHECK(report.param_count == 1116676);
  REQUIRE(report.folds.size() == 2);

  // mean accuracy is the arithmetic mean of the fold accuracies
  const double mean = (report.folds[0].accuracy + report.folds[1].accuracy) / 2.0;
  CHECK(report.mean_accuracy == doctest::Approx(mean).epsilon(1e-9));

  // a fold rerun in isolation reproduces the fold's result exactly
  const FoldPlan plan = make_folds(
      [&] {
        std::vector<std::string> ids;
        for (const auto& p : corpus.participants) ids.push_back(p.meta.participant_id);
        return ids;
      }(),
      2, cfg.seed, cfg.val_participants);
  std::set<std::string> test_ids(plan.test_folds[1].begin(), plan.test_folds[1].end());
  std::set<std::string> val_ids(plan.validation[1].begin(), plan.validation[1].end());
  std::vector<const Segment*> train_segs, val_segs, test_segs;
  for (const auto& p : corpus.participants) {
    for (const auto& s : p.segments) {
      if (test_ids.count(p.meta.participant_id)) {
        test_segs.push_back(&s);
      } else if (val_ids.count(p.meta.participant_id)) {
        val_segs.push_back(&s);
      } else {
        train_segs.push_back(&s);
      }
    }
  }
  TrainConfig fold_cfg = cfg;
  fold_cfg.seed = derive_seed(cfg.seed, "fold", 1);
  Rng init(derive_seed(fold_cfg.seed, "init"));
  Model<float> model(ModelSpec::of(ModelKind::mlp_baseline), init, cfg.dropout);
  train(model, train_segs, val_segs, fold_cfg);
  const EvalResult eval = evaluate(model, test_segs);
  CHECK(eval.accuracy == report.folds[1].accuracy);
}
