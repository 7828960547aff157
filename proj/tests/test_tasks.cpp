#include <algorithm>
#include <cmath>
#include <set>
#include <vector>

#include <gtest/gtest.h>

#include "metagrad/tasks.hpp"

using namespace metagrad;

TEST(Landscape, task_one_minimum_and_curvature) {
  for (Scenario s : {Scenario::kA, Scenario::kB}) {
    EXPECT_EQ(landscape_loss(s, 1, 5.0), 0.0);
    EXPECT_DOUBLE_EQ(landscape_loss(s, 1, 0.0), 32.5);  // 1.3 * 25
    EXPECT_DOUBLE_EQ(landscape_grad(s, 1, 7.0), 2.6 * 2.0);
  }
}

TEST(Landscape, task_two_branches_meet_at_fifty) {
  // Quadratic branch value and plateau branch value agree exactly at x = 50.
  EXPECT_EQ(landscape_loss(Scenario::kA, 2, 50.0), 2500.0);
  EXPECT_EQ(landscape_loss(Scenario::kB, 2, 50.0), -5.0 * 50.0 + 2750.0);
  EXPECT_EQ(landscape_loss(Scenario::kB, 2, 50.0), 2500.0);
  // Just past the joint the scenarios coincide.
  EXPECT_EQ(landscape_loss(Scenario::kB, 2, 51.0), landscape_loss(Scenario::kA, 2, 51.0));
}

TEST(Landscape, task_two_gradients) {
  EXPECT_DOUBLE_EQ(landscape_grad(Scenario::kA, 2, 10.0), 2.0 * (10.0 - 100.0));
  EXPECT_EQ(landscape_grad(Scenario::kB, 2, 10.0), -5.0);
  EXPECT_EQ(landscape_grad(Scenario::kB, 2, 50.0), -5.0);
  EXPECT_DOUBLE_EQ(landscape_grad(Scenario::kB, 2, 60.0), -80.0);
}

TEST(Landscape, gradient_matches_central_differences_away_from_joint) {
  const double h = 1e-6;
  for (Scenario s : {Scenario::kA, Scenario::kB}) {
    for (int task : {1, 2}) {
      for (double x : {-3.7, 20.1, 49.0, 51.2, 120.0}) {
        const double fd =
            (landscape_loss(s, task, x + h) - landscape_loss(s, task, x - h)) / (2 * h);
        const double g = landscape_grad(s, task, x);
        EXPECT_NEAR(fd, g, 1e-5 * std::max(1.0, std::abs(g)))
            << scenario_name(s) << " task " << task << " x=" << x;
      }
    }
  }
}

TEST(Landscape, invalid_task_rejected) {
  EXPECT_THROW(landscape_loss(Scenario::kA, 3, 0.0), ValueError);
  EXPECT_THROW(landscape_loss(Scenario::kA, 0, 0.0), ValueError);
  EXPECT_THROW(landscape_grad(Scenario::kB, -1, 0.0), ValueError);
}

TEST(Landscape, scenario_names_round_trip) {
  EXPECT_EQ(scenario_from_string("a"), Scenario::kA);
  EXPECT_EQ(scenario_from_string("b"), Scenario::kB);
  EXPECT_THROW(scenario_from_string("c"), ValueError);
}

TEST(Sine, sampled_tasks_respect_ranges) {
  SineConfig cfg;
  Rng rng(4);
  for (int i = 0; i < 200; ++i) {
    const SineTask t = sample_sine_task(cfg, rng);
    EXPECT_GE(t.amplitude, cfg.amplitude_lo);
    EXPECT_LT(t.amplitude, cfg.amplitude_hi);
    EXPECT_GE(t.phase, cfg.phase_lo);
    EXPECT_LT(t.phase, cfg.phase_hi);
  }
}

TEST(Sine, target_definition) {
  SineTask t;
  t.amplitude = 2.5;
  t.phase = 3.14159265358979323846 / 2.0;
  EXPECT_NEAR(sine_target(t, 0.0), 2.5, 1e-12);  // amp * sin(pi/2)
  EXPECT_DOUBLE_EQ(sine_target(t, 1.0), 2.5 * std::sin(1.0 + t.phase));
}

TEST(Sine, batch_matches_targets_and_is_reproducible) {
  SineConfig cfg;
  SineTask t{3.0, 0.4};
  Rng r1(9), r2(9);
  const RegressionBatch a = sine_batch(t, cfg, 16, r1);
  const RegressionBatch b = sine_batch(t, cfg, 16, r2);
  ASSERT_EQ(a.size(), 16u);
  EXPECT_EQ(a.inputs, b.inputs);
  EXPECT_EQ(a.targets, b.targets);
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_GE(a.inputs[i], cfg.input_lo);
    EXPECT_LT(a.inputs[i], cfg.input_hi);
    EXPECT_EQ(a.targets[i], sine_target(t, a.inputs[i]));
  }
  EXPECT_THROW(sine_batch(t, cfg, 0, r1), ValueError);
}

namespace {

UniverseConfig default_universe(std::uint64_t seed) {
  UniverseConfig cfg;
  cfg.seed = seed;
  return cfg;
}

}  // namespace

TEST(Universe, default_split_sizes_are_disjoint_and_cover) {
  const ClassUniverse u = make_class_splits(default_universe(42));
  const auto train = u.classes_in(Split::kMetaTrain);
  const auto val = u.classes_in(Split::kMetaVal);
  const auto test = u.classes_in(Split::kMetaTest);
  EXPECT_EQ(train.size(), 10u);
  EXPECT_EQ(val.size(), 5u);
  EXPECT_EQ(test.size(), 5u);

  std::set<int> all;
  for (const auto& ids : {train, val, test}) {
    for (int c : ids) all.insert(c);
    EXPECT_TRUE(std::is_sorted(ids.begin(), ids.end()));
  }
  EXPECT_EQ(all.size(), 20u);  // disjoint and covering 0..19
  EXPECT_EQ(*all.begin(), 0);
  EXPECT_EQ(*all.rbegin(), 19);
}

TEST(Universe, deterministic_in_seed) {
  const ClassUniverse a = make_class_splits(default_universe(7));
  const ClassUniverse b = make_class_splits(default_universe(7));
  const ClassUniverse c = make_class_splits(default_universe(8));
  EXPECT_EQ(a.split_of, b.split_of);
  EXPECT_EQ(a.prototypes[0].mean, b.prototypes[0].mean);
  EXPECT_NE(a.prototypes[0].mean, c.prototypes[0].mean);
}

TEST(Universe, config_validation) {
  UniverseConfig cfg = default_universe(1);
  cfg.classes = 2;
  EXPECT_THROW(make_class_splits(cfg), ValueError);

  cfg = default_universe(1);
  cfg.train_fraction = 0.6;  // fractions now sum to 1.1
  EXPECT_THROW(make_class_splits(cfg), ValueError);

  cfg = default_universe(1);
  cfg.classes = 3;  // rounds to 2/1/0: test split would be empty
  EXPECT_THROW(make_class_splits(cfg), ValueError);

  cfg = default_universe(1);
  cfg.classes = 4;  // 2/1/1 works
  EXPECT_NO_THROW(make_class_splits(cfg));
}

TEST(Universe, shifted_view_is_an_isometry_with_same_splits) {
  const UniverseConfig cfg = default_universe(5);
  const ClassUniverse base = make_class_splits(cfg);
  const ClassUniverse shifted = shifted_universe(base, cfg);

  EXPECT_EQ(shifted.tag, DistributionTag::kShifted);
  EXPECT_EQ(shifted.split_of, base.split_of);
  ASSERT_EQ(shifted.prototypes.size(), base.prototypes.size());

  auto dist = [](const std::vector<double>& a, const std::vector<double>& b) {
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) acc += (a[i] - b[i]) * (a[i] - b[i]);
    return std::sqrt(acc);
  };
  double moved = 0.0;
  for (std::size_t i = 0; i < base.prototypes.size(); ++i) {
    moved = std::max(moved, dist(base.prototypes[i].mean, shifted.prototypes[i].mean));
    for (std::size_t j = i + 1; j < base.prototypes.size(); ++j) {
      EXPECT_NEAR(dist(shifted.prototypes[i].mean, shifted.prototypes[j].mean),
                  dist(base.prototypes[i].mean, base.prototypes[j].mean), 1e-9);
    }
  }
  EXPECT_GT(moved, 0.1);  // the transform is not the identity

  EXPECT_THROW(shifted_universe(shifted, cfg), ValueError);
}

TEST(Universe, sample_example_respects_class_and_scale) {
  UniverseConfig cfg = default_universe(11);
  cfg.noise_scale = 0.0;  // degenerate: samples sit exactly on the prototype
  const ClassUniverse u = make_class_splits(cfg);
  Rng rng(3);
  EXPECT_EQ(sample_example(u, 7, rng), u.prototypes[7].mean);
  EXPECT_THROW(sample_example(u, -1, rng), ValueError);
  EXPECT_THROW(sample_example(u, 20, rng), ValueError);
}

TEST(Episodes, way_shot_query_invariants) {
  const ClassUniverse u = make_class_splits(default_universe(5));
  Rng rng(77);
  const Episode ep = sample_episode(u, Split::kMetaTrain, 5, 2, 3, rng);

  ASSERT_EQ(ep.support.size(), 10u);
  ASSERT_EQ(ep.query.size(), 15u);
  EXPECT_EQ(ep.dim, 16u);

  // Class-major label layout.
  for (std::size_t i = 0; i < ep.support.size(); ++i)
    EXPECT_EQ(ep.support[i].label, static_cast<int>(i / 2));
  for (std::size_t i = 0; i < ep.query.size(); ++i)
    EXPECT_EQ(ep.query[i].label, static_cast<int>(i / 3));

  // Instance ids are unique across support and query.
  std::set<std::size_t> ids;
  for (const Example& e : ep.support) ids.insert(e.instance_id);
  for (const Example& e : ep.query) ids.insert(e.instance_id);
  EXPECT_EQ(ids.size(), 25u);

  // The remap is a bijection onto distinct meta-train classes.
  std::set<int> classes(ep.class_remap.begin(), ep.class_remap.end());
  EXPECT_EQ(classes.size(), 5u);
  for (int cid : classes) EXPECT_EQ(u.split_of[static_cast<std::size_t>(cid)], Split::kMetaTrain);
}

TEST(Episodes, reproducible_under_same_rng_seed) {
  const ClassUniverse u = make_class_splits(default_universe(5));
  Rng r1(123), r2(123);
  const Episode a = sample_episode(u, Split::kMetaVal, 3, 1, 4, r1);
  const Episode b = sample_episode(u, Split::kMetaVal, 3, 1, 4, r2);
  EXPECT_EQ(a.class_remap, b.class_remap);
  ASSERT_EQ(a.support.size(), b.support.size());
  for (std::size_t i = 0; i < a.support.size(); ++i)
    EXPECT_EQ(a.support[i].x, b.support[i].x);
  for (std::size_t i = 0; i < a.query.size(); ++i)
    EXPECT_EQ(a.query[i].x, b.query[i].x);
}

TEST(Episodes, insufficient_classes_error_names_the_split) {
  const ClassUniverse u = make_class_splits(default_universe(5));
  Rng rng(1);
  try {
    sample_episode(u, Split::kMetaVal, 6, 1, 1, rng);  // meta-val only has 5
    FAIL() << "expected ValueError";
  } catch (const ValueError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("meta_val"), std::string::npos) << msg;
    EXPECT_NE(msg.find("5 classes"), std::string::npos) << msg;
    EXPECT_NE(msg.find("6-way"), std::string::npos) << msg;
  }
}

TEST(Episodes, argument_validation) {
  const ClassUniverse u = make_class_splits(default_universe(5));
  Rng rng(1);
  EXPECT_THROW(sample_episode(u, Split::kMetaTrain, 1, 1, 1, rng), ValueError);
  EXPECT_THROW(sample_episode(u, Split::kMetaTrain, 2, 0, 1, rng), ValueError);
  EXPECT_THROW(sample_episode(u, Split::kMetaTrain, 2, 1, 0, rng), ValueError);
}

TEST(Episodes, bank_is_seeded_and_sized) {
  const ClassUniverse u = make_class_splits(default_universe(5));
  const auto a = sample_episode_bank(u, Split::kMetaTest, 4, 3, 1, 2, 999);
  const auto b = sample_episode_bank(u, Split::kMetaTest, 4, 3, 1, 2, 999);
  ASSERT_EQ(a.size(), 4u);
  for (std::size_t i = 0; i < 4; ++i) {
    EXPECT_EQ(a[i].class_remap, b[i].class_remap);
    EXPECT_EQ(a[i].support[0].x, b[i].support[0].x);
  }
  // Episodes within the bank differ from one another.
  EXPECT_TRUE(a[0].class_remap != a[1].class_remap || a[0].support[0].x != a[1].support[0].x);
}

TEST(Episodes, batch_conversion_round_trip) {
  const ClassUniverse u = make_class_splits(default_universe(5));
  Rng rng(8);
  const Episode ep = sample_episode(u, Split::kMetaTrain, 2, 1, 1, rng);
  const LabeledBatch sb = ep.support_batch();
  ASSERT_EQ(sb.size(), 2u);
  EXPECT_EQ(sb.dim, 16u);
  for (std::size_t i = 0; i < 16; ++i) EXPECT_EQ(sb.inputs[i], ep.support[0].x[i]);
  EXPECT_EQ(sb.labels, (std::vector<int>{0, 1}));
}

TEST(SourceBatches, labels_index_ascending_split_classes) {
  const ClassUniverse u = make_class_splits(default_universe(5));
  Rng rng(21);
  const LabeledBatch b = sample_source_batch(u, Split::kMetaTrain, 64, rng);
  ASSERT_EQ(b.size(), 64u);
  EXPECT_EQ(b.dim, 16u);
  EXPECT_EQ(b.inputs.size(), 64u * 16u);
  for (int y : b.labels) {
    EXPECT_GE(y, 0);
    EXPECT_LT(y, 10);  // meta-train has 10 classes
  }
  EXPECT_THROW(sample_source_batch(u, Split::kMetaTrain, 0, rng), ValueError);
}

TEST(JointDataset, class_major_and_balanced) {
  const ClassUniverse u = make_class_splits(default_universe(5));
  Rng rng(33);
  const LabeledBatch b = make_joint_dataset(u, Split::kMetaTest, 3, rng);
  ASSERT_EQ(b.size(), 15u);  // 5 test classes x 3
  for (std::size_t i = 0; i < b.labels.size(); ++i)
    EXPECT_EQ(b.labels[i], static_cast<int>(i / 3));
  EXPECT_THROW(make_joint_dataset(u, Split::kMetaTest, 0, rng), ValueError);
}
