#include <doctest.h>

#include <algorithm>
#include <map>

#include "egoscene/dynamics.hpp"
#include "helpers.hpp"

using namespace egoscene;
using namespace egoscene::dynamics;

namespace {

SceneSequence seq_of(const std::vector<SceneLabel>& labels,
                     const std::string& pid = "P", const std::string& sid = "S") {
  SceneSequence s;
  s.participant_id = pid;
  s.shift_id = sid;
  std::int64_t ts = 0;
  for (SceneLabel l : labels) {
    s.entries.emplace_back(ts, l);
    ts += 60000;
  }
  return s;
}

}  // namespace

TEST_CASE("diff_signal") {
  using S = SceneLabel;
  CHECK(diff_signal(seq_of({S::ns, S::ns, S::ns})) == std::vector<int>{0, 0});
  CHECK(diff_signal(seq_of({S::ns, S::pat, S::ns})) == std::vector<int>{1, -1});
  CHECK(diff_signal(seq_of({S::ns})).empty());
}

TEST_CASE("normalized_changes") {
  using S = SceneLabel;
  SUBCASE("constant sequences of any length have zero changes") {
    for (int len : {1, 2, 5, 40}) {
      CHECK(normalized_changes(seq_of(std::vector<SceneLabel>(len, S::med))) == 0.0);
    }
  }
  SUBCASE("worked example: T=5 with 2 changes gives 0.4") {
    CHECK(normalized_changes(seq_of({S::ns, S::ns, S::pat, S::pat, S::med})) ==
          doctest::Approx(0.4));
  }
  SUBCASE("strictly alternating length 10 gives the maximum 0.9") {
    std::vector<SceneLabel> labels;
    for (int i = 0; i < 10; ++i) labels.push_back(i % 2 ? S::pat : S::ns);
    CHECK(normalized_changes(seq_of(labels)) == doctest::Approx(0.9));
  }
  SUBCASE("empty sequence is an error") {
    CHECK_THROWS_AS(normalized_changes(SceneSequence{}), Error);
  }
  SUBCASE("matches brute force on 1000 random sequences, exactly") {
    Rng rng(13);
    for (int trial = 0; trial < 1000; ++trial) {
      const int len = 1 + static_cast<int>(rng.uniform_int(30));
      std::vector<SceneLabel> labels;
      for (int i = 0; i < len; ++i) {
        labels.push_back(scene_from_index(static_cast<int>(rng.uniform_int(4))));
      }
      const SceneSequence s = seq_of(labels);
      // oracle: count adjacent unequal pairs directly
      int changes = 0;
      for (int i = 1; i < len; ++i) {
        if (labels[i] != labels[i - 1]) ++changes;
      }
      CHECK(normalized_changes(s) == static_cast<double>(changes) / len);
    }
  }
  SUBCASE("invariant under class relabeling bijections") {
    Rng rng(17);
    const std::vector<std::array<int, 4>> bijections{
        {1, 2, 3, 0}, {3, 2, 1, 0}, {2, 0, 3, 1}, {0, 1, 2, 3}};
    for (int trial = 0; trial < 200; ++trial) {
      const int len = 1 + static_cast<int>(rng.uniform_int(20));
      std::vector<SceneLabel> labels;
      for (int i = 0; i < len; ++i) {
        labels.push_back(scene_from_index(static_cast<int>(rng.uniform_int(4))));
      }
      const double base = normalized_changes(seq_of(labels));
      for (const auto& map : bijections) {
        std::vector<SceneLabel> relabeled;
        for (SceneLabel l : labels) {
          relabeled.push_back(scene_from_index(map[scene_index(l)]));
        }
        CHECK(normalized_changes(seq_of(relabeled)) == base);
      }
    }
  }
  SUBCASE("bounds: 0 <= delta <= (T-1)/T, zero iff constant") {
    Rng rng(19);
    for (int trial = 0; trial < 300; ++trial) {
      const int len = 1 + static_cast<int>(rng.uniform_int(12));
      std::vector<SceneLabel> labels;
      for (int i = 0; i < len; ++i) {
        labels.push_back(scene_from_index(static_cast<int>(rng.uniform_int(4))));
      }
      const double d = normalized_changes(seq_of(labels));
      CHECK(d >= 0.0);
      CHECK(d <= static_cast<double>(len - 1) / len);
      const bool constant =
          std::all_of(labels.begin(), labels.end(),
                      [&](SceneLabel l) { return l == labels[0]; });
      CHECK((d == 0.0) == constant);
    }
  }
}

namespace {

std::map<std::string, ParticipantMeta> meta_two_groups() {
  std::map<std::string, ParticipantMeta> m;
  m["P1"] = {"P1", Shift::day, Role::nursing};
  m["P2"] = {"P2", Shift::day, Role::nursing};
  m["P3"] = {"P3", Shift::night, Role::non_nursing};
  return m;
}

}  // namespace

TEST_CASE("group_means") {
  SUBCASE("two participants in one group average their deltas") {
    std::vector<ChangeStats> stats{
        {"P1", "S01", 0.2, 10, Source::true_labels},
        {"P2", "S01", 0.4, 10, Source::true_labels},
    };
    const auto out = group_means(stats, meta_two_groups(), Grouping::role);
    bool found = false;
    for (const auto& g : out) {
      if (g.group == "nursing" && g.source == Source::true_labels) {
        CHECK(g.mean_delta == doctest::Approx(0.3));
        CHECK(g.participants == 2);
        found = true;
      }
    }
    CHECK(found);
  }
  SUBCASE("a participant's shifts are averaged before the group mean") {
    std::vector<ChangeStats> stats{
        {"P1", "S01", 0.2, 10, Source::true_labels},
        {"P1", "S02", 0.6, 10, Source::true_labels},  // P1 mean: 0.4
        {"P2", "S01", 0.2, 10, Source::true_labels},
    };
    const auto out = group_means(stats, meta_two_groups(), Grouping::role);
    for (const auto& g : out) {
      if (g.group == "nursing") {
        CHECK(g.mean_delta == doctest::Approx(0.3));  // (0.4 + 0.2) / 2
        CHECK(g.participants == 2);
      }
    }
  }
  SUBCASE("single-participant group mean equals that participant's delta") {
    std::vector<ChangeStats> stats{{"P3", "S01", 0.15, 8, Source::predicted}};
    const auto out = group_means(stats, meta_two_groups(), Grouping::shift);
    REQUIRE(out.size() == 1);
    CHECK(out[0].group == "night");
    CHECK(out[0].mean_delta == doctest::Approx(0.15));
  }
  SUBCASE("missing metadata names the participant") {
    std::vector<ChangeStats> stats{{"P9", "S01", 0.5, 4, Source::true_labels}};
    try {
      group_means(stats, meta_two_groups(), Grouping::shift);
      FAIL("expected Error");
    } catch (const Error& e) {
      CHECK(std::string(e.what()).find("P9") != std::string::npos);
    }
  }
  SUBCASE("union of disjoint groups has the count-weighted mean") {
    Rng rng(23);
    std::vector<ChangeStats> stats;
    std::map<std::string, ParticipantMeta> meta;
    for (int i = 0; i < 12; ++i) {
      const std::string pid = "Q" + std::to_string(i);
      meta[pid] = {pid, Shift::day, i < 7 ? Role::nursing : Role::non_nursing};
      stats.push_back({pid, "S01", rng.uniform(), 10, Source::true_labels});
    }
    const auto by_role = group_means(stats, meta, Grouping::role);
    double weighted = 0.0;
    int total = 0;
    for (const auto& g : by_role) {
      if (g.source != Source::true_labels) continue;
      weighted += g.mean_delta * g.participants;
      total += g.participants;
    }
    const auto by_shift = group_means(stats, meta, Grouping::shift);
    for (const auto& g : by_shift) {
      if (g.source == Source::true_labels && g.group == "day") {
        CHECK(g.mean_delta == doctest::Approx(weighted / total).epsilon(1e-12));
        CHECK(g.participants == total);
      }
    }
  }
}

TEST_CASE("histogram_deltas") {
  SUBCASE("worked example with two bins") {
    // oracle: bin arithmetic by hand; 0.0 -> [0,0.5), 0.5 and 0.9 -> [0.5,1]
    const Histogram h = histogram_deltas({0.0, 0.5, 0.9}, 2);
    REQUIRE(h.counts.size() == 2);
    CHECK(h.counts[0] == 1);
    CHECK(h.counts[1] == 2);
    CHECK(h.mean == doctest::Approx((0.0 + 0.5 + 0.9) / 3));
  }
  SUBCASE("all zeros land in bin 0") {
    const Histogram h = histogram_deltas({0.0, 0.0, 0.0}, 5);
    CHECK(h.counts[0] == 3);
    for (std::size_t b = 1; b < 5; ++b) CHECK(h.counts[b] == 0);
  }
  SUBCASE("one bin holds everything") {
    const Histogram h = histogram_deltas({0.1, 0.4, 0.9}, 1);
    CHECK(h.counts[0] == 3);
  }
  SUBCASE("final bin is right-closed") {
    const Histogram h = histogram_deltas({1.0}, 10);
    CHECK(h.counts[9] == 1);
  }
  SUBCASE("invalid inputs are errors") {
    CHECK_THROWS_AS(histogram_deltas({0.5}, 0), Error);
    CHECK_THROWS_AS(histogram_deltas({1.5}, 2), Error);
  }
}

TEST_CASE("predict_sequence contract checks") {
  using S = SceneLabel;
  Rng rng(29);
  Model<float> model(ModelSpec::of(ModelKind::mlp_baseline), rng);

  std::vector<Segment> storage;
  storage.push_back(testutil::make_segment("P1", "S01", 0, S::ns, 0.5f, 20));
  storage.push_back(testutil::make_segment("P1", "S01", 60000, S::pat, -0.5f, 20));

  SUBCASE("a single segment yields a length-1 sequence") {
    std::vector<const Segment*> one{&storage[0]};
    const SceneSequence seq = predict_sequence(model, one);
    CHECK(seq.entries.size() == 1);
    CHECK(seq.entries[0].first == 0);
    CHECK(seq.participant_id == "P1");
  }
  SUBCASE("permuted input is an error, not a silent reorder") {
    std::vector<const Segment*> wrong{&storage[1], &storage[0]};
    CHECK_THROWS_AS(predict_sequence(model, wrong), Error);
  }
  SUBCASE("order is preserved, one prediction per segment") {
    std::vector<const Segment*> both{&storage[0], &storage[1]};
    const SceneSequence seq = predict_sequence(model, both);
    REQUIRE(seq.entries.size() == 2);
    CHECK(seq.entries[0].first == 0);
    CHECK(seq.entries[1].first == 60000);
  }
}
