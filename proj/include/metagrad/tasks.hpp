#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "metagrad/defaults.hpp"
#include "metagrad/model.hpp"
#include "metagrad/rng.hpp"

namespace metagrad {

// ---- two-task 1-d loss landscapes ----
//
// Scenario a:  l1(x) = 1.3 (x - 5)^2,   l2(x) = (x - 100)^2
// Scenario b:  l1 as above;  l2(x) = (x - 100)^2 for x > 50,
//              -5 x + 2750 for x <= 50 (continuous at x = 50, both 2500).

enum class Scenario : std::uint8_t { kA, kB };

inline const char* scenario_name(Scenario s) { return s == Scenario::kA ? "a" : "b"; }

inline Scenario scenario_from_string(const std::string& s) {
  if (s == "a") return Scenario::kA;
  if (s == "b") return Scenario::kB;
  throw ValueError("unknown scenario '" + s + "' (expected a|b)");
}

inline double landscape_loss(Scenario s, int task, double x) {
  if (task == 1) return 1.3 * (x - 5.0) * (x - 5.0);
  if (task != 2) throw ValueError("landscape task must be 1 or 2");
  if (s == Scenario::kA || x > 50.0) return (x - 100.0) * (x - 100.0);
  return -5.0 * x + 2750.0;
}

inline double landscape_grad(Scenario s, int task, double x) {
  if (task == 1) return 2.6 * (x - 5.0);
  if (task != 2) throw ValueError("landscape task must be 1 or 2");
  if (s == Scenario::kA || x > 50.0) return 2.0 * (x - 100.0);
  return -5.0;
}

// ---- sine regression tasks: target(x) = amplitude * sin(x + phase) ----

struct SineTask {
  double amplitude = 1.0;
  double phase = 0.0;
};

struct SineConfig {
  double amplitude_lo = 0.1, amplitude_hi = 5.0;
  double phase_lo = 0.0, phase_hi = 3.14159265358979323846;
  double input_lo = -5.0, input_hi = 5.0;
};

inline SineTask sample_sine_task(const SineConfig& cfg, Rng& rng) {
  SineTask t;
  t.amplitude = rng.uniform(cfg.amplitude_lo, cfg.amplitude_hi);
  t.phase = rng.uniform(cfg.phase_lo, cfg.phase_hi);
  return t;
}

inline double sine_target(const SineTask& t, double x) {
  return t.amplitude * std::sin(x + t.phase);
}

inline RegressionBatch sine_batch(const SineTask& t, const SineConfig& cfg,
                                  std::size_t count, Rng& rng) {
  if (count == 0) throw ValueError("sine_batch: count must be positive");
  RegressionBatch b;
  b.in_dim = 1;
  b.out_dim = 1;
  b.inputs.resize(count);
  b.targets.resize(count);
  for (std::size_t i = 0; i < count; ++i) {
    b.inputs[i] = rng.uniform(cfg.input_lo, cfg.input_hi);
    b.targets[i] = sine_target(t, b.inputs[i]);
  }
  return b;
}

// ---- synthetic class universes (Gaussian clusters) ----

enum class Split : std::uint8_t { kMetaTrain, kMetaVal, kMetaTest };

inline const char* split_name(Split s) {
  switch (s) {
    case Split::kMetaTrain: return "meta_train";
    case Split::kMetaVal: return "meta_val";
    case Split::kMetaTest: return "meta_test";
  }
  return "?";
}

enum class DistributionTag : std::uint8_t { kInDistribution, kShifted };

inline const char* distribution_name(DistributionTag t) {
  return t == DistributionTag::kInDistribution ? "in_distribution" : "shifted";
}

struct ClassPrototype {
  std::vector<double> mean;
  double scale = 1.0;  // isotropic noise scale around the mean
};

struct UniverseConfig {
  std::size_t classes = defaults::kUniverseClasses;
  std::size_t dim = defaults::kUniverseDim;
  double train_fraction = defaults::kTrainFraction;
  double val_fraction = defaults::kValFraction;
  double test_fraction = defaults::kTestFraction;
  double noise_scale = defaults::kNoiseScale;
  std::uint64_t seed = defaults::kUniverseSeed;
  // The "shifted" view applies one fixed rotation + translation to every
  // prototype; both knobs below identify that transform.
  std::uint64_t shift_seed = defaults::kShiftSeed;
  double shift_translation = defaults::kShiftTranslation;
};

struct ClassUniverse {
  std::size_t dim = 0;
  DistributionTag tag = DistributionTag::kInDistribution;
  std::vector<ClassPrototype> prototypes;  // index = class id
  std::vector<Split> split_of;             // per class id

  std::vector<int> classes_in(Split s) const {
    std::vector<int> ids;
    for (std::size_t c = 0; c < split_of.size(); ++c)
      if (split_of[c] == s) ids.push_back(static_cast<int>(c));
    return ids;
  }
};

// Draws unit-scale prototypes and partitions the class ids into disjoint
// meta-train / meta-val / meta-test splits.
inline ClassUniverse make_class_splits(const UniverseConfig& cfg) {
  if (cfg.classes < 3) throw ValueError("make_class_splits: need at least 3 classes");
  if (cfg.dim == 0) throw ValueError("make_class_splits: dim must be positive");
  const double fsum = cfg.train_fraction + cfg.val_fraction + cfg.test_fraction;
  if (std::abs(fsum - 1.0) > 1e-9)
    throw ValueError("make_class_splits: split fractions sum to " + std::to_string(fsum));
  if (cfg.train_fraction <= 0 || cfg.val_fraction <= 0 || cfg.test_fraction <= 0)
    throw ValueError("make_class_splits: split fractions must be positive");

  const auto n = cfg.classes;
  const auto n_train = static_cast<std::size_t>(
      std::llround(cfg.train_fraction * static_cast<double>(n)));
  const auto n_val = static_cast<std::size_t>(
      std::llround(cfg.val_fraction * static_cast<double>(n)));
  if (n_train == 0 || n_val == 0 || n_train + n_val >= n)
    throw ValueError("make_class_splits: a split received no classes");
  const std::size_t n_test = n - n_train - n_val;
  (void)n_test;

  ClassUniverse u;
  u.dim = cfg.dim;
  u.prototypes.resize(n);
  Rng proto_rng(mix_seed(cfg.seed, 0xC1A55E5));
  for (auto& proto : u.prototypes) {
    proto.mean.resize(cfg.dim);
    for (double& v : proto.mean) v = proto_rng.normal();
    proto.scale = cfg.noise_scale;
  }

  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  Rng split_rng(mix_seed(cfg.seed, 0x5F117));
  split_rng.shuffle(order);
  u.split_of.assign(n, Split::kMetaTest);
  for (std::size_t i = 0; i < n_train; ++i) u.split_of[order[i]] = Split::kMetaTrain;
  for (std::size_t i = n_train; i < n_train + n_val; ++i)
    u.split_of[order[i]] = Split::kMetaVal;
  return u;
}

namespace detail {

// Random rotation via modified Gram-Schmidt on a seeded Gaussian matrix.
inline std::vector<double> random_rotation(std::size_t d, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> q(d * d);
  for (std::size_t col = 0; col < d; ++col) {
    for (;;) {
      for (std::size_t r = 0; r < d; ++r) q[r * d + col] = rng.normal();
      for (std::size_t prev = 0; prev < col; ++prev) {
        double dot = 0.0;
        for (std::size_t r = 0; r < d; ++r) dot += q[r * d + col] * q[r * d + prev];
        for (std::size_t r = 0; r < d; ++r) q[r * d + col] -= dot * q[r * d + prev];
      }
      double norm = 0.0;
      for (std::size_t r = 0; r < d; ++r) norm += q[r * d + col] * q[r * d + col];
      norm = std::sqrt(norm);
      if (norm > 1e-8) {
        for (std::size_t r = 0; r < d; ++r) q[r * d + col] /= norm;
        break;
      }
    }
  }
  return q;
}

}  // namespace detail

// Same classes and splits viewed through one fixed affine transform
// (rotation + translation) of the prototypes.
inline ClassUniverse shifted_universe(const ClassUniverse& base, const UniverseConfig& cfg) {
  if (base.tag == DistributionTag::kShifted)
    throw ValueError("shifted_universe: input is already shifted");
  ClassUniverse out = base;
  out.tag = DistributionTag::kShifted;
  const std::size_t d = base.dim;
  const std::vector<double> rot = detail::random_rotation(d, mix_seed(cfg.shift_seed, 0xA0));
  Rng dir_rng(mix_seed(cfg.shift_seed, 0x7A));
  std::vector<double> t(d);
  double norm = 0.0;
  for (double& v : t) {
    v = dir_rng.normal();
    norm += v * v;
  }
  norm = std::sqrt(norm);
  for (double& v : t) v = cfg.shift_translation * v / (norm > 0 ? norm : 1.0);

  for (auto& proto : out.prototypes) {
    std::vector<double> rotated(d, 0.0);
    for (std::size_t r = 0; r < d; ++r) {
      double acc = 0.0;
      for (std::size_t c2 = 0; c2 < d; ++c2) acc += rot[r * d + c2] * proto.mean[c2];
      rotated[r] = acc + t[r];
    }
    proto.mean = std::move(rotated);
  }
  return out;
}

inline std::vector<double> sample_example(const ClassUniverse& u, int class_id, Rng& rng) {
  if (class_id < 0 || static_cast<std::size_t>(class_id) >= u.prototypes.size())
    throw ValueError("sample_example: class id out of range");
  const ClassPrototype& proto = u.prototypes[static_cast<std::size_t>(class_id)];
  std::vector<double> x(u.dim);
  for (std::size_t i = 0; i < u.dim; ++i)
    x[i] = proto.mean[i] + proto.scale * rng.normal();
  return x;
}

// ---- episodes ----

struct Example {
  std::vector<double> x;
  int label = 0;                 // remapped to 0..way-1
  std::size_t instance_id = 0;   // unique within the episode
};

struct Episode {
  int way = 0;
  int shot = 0;
  int query_per_class = 0;
  std::vector<Example> support;  // class-major, way * shot entries
  std::vector<Example> query;    // class-major, way * query_per_class entries
  std::vector<int> class_remap;  // class_remap[new_label] = universe class id
  std::size_t dim = 0;

  LabeledBatch support_batch() const { return to_batch(support); }
  LabeledBatch query_batch() const { return to_batch(query); }

 private:
  LabeledBatch to_batch(const std::vector<Example>& ex) const {
    LabeledBatch b;
    b.dim = dim;
    b.inputs.reserve(ex.size() * dim);
    b.labels.reserve(ex.size());
    for (const Example& e : ex) {
      b.inputs.insert(b.inputs.end(), e.x.begin(), e.x.end());
      b.labels.push_back(e.label);
    }
    return b;
  }
};

// N-way k-shot episode with q query examples per class. Classes come from a
// single split; labels are remapped to 0..N-1 in sampling order; support and
// query instances are disjoint fresh draws.
inline Episode sample_episode(const ClassUniverse& u, Split split, int way, int shot,
                              int query, Rng& rng) {
  if (way < 2) throw ValueError("sample_episode: way must be >= 2");
  if (shot < 1 || query < 1)
    throw ValueError("sample_episode: shot and query must be >= 1");
  const std::vector<int> pool = u.classes_in(split);
  if (pool.size() < static_cast<std::size_t>(way))
    throw ValueError("split " + std::string(split_name(split)) + " has " +
                     std::to_string(pool.size()) + " classes but " +
                     std::to_string(way) + "-way episodes were requested");

  Episode ep;
  ep.way = way;
  ep.shot = shot;
  ep.query_per_class = query;
  ep.dim = u.dim;
  const std::vector<std::size_t> picks =
      rng.sample_indices(pool.size(), static_cast<std::size_t>(way));
  std::size_t next_id = 0;
  for (int label = 0; label < way; ++label) {
    const int cid = pool[picks[static_cast<std::size_t>(label)]];
    ep.class_remap.push_back(cid);
    for (int j = 0; j < shot + query; ++j) {
      Example e;
      e.x = sample_example(u, cid, rng);
      e.label = label;
      e.instance_id = next_id++;
      (j < shot ? ep.support : ep.query).push_back(std::move(e));
    }
  }
  // Re-group class-major (support first shot of each class, then queries).
  std::stable_sort(ep.support.begin(), ep.support.end(),
                   [](const Example& a, const Example& b) { return a.label < b.label; });
  std::stable_sort(ep.query.begin(), ep.query.end(),
                   [](const Example& a, const Example& b) { return a.label < b.label; });
  return ep;
}

inline std::vector<Episode> sample_episode_bank(const ClassUniverse& u, Split split,
                                                std::size_t count, int way, int shot,
                                                int query, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<Episode> bank;
  bank.reserve(count);
  for (std::size_t i = 0; i < count; ++i)
    bank.push_back(sample_episode(u, split, way, shot, query, rng));
  return bank;
}

// Batch from the joint distribution over a split's classes; labels index the
// ascending class-id list of that split (stable across calls).
inline LabeledBatch sample_source_batch(const ClassUniverse& u, Split split,
                                        std::size_t batch_size, Rng& rng) {
  if (batch_size == 0) throw ValueError("sample_source_batch: empty batch");
  const std::vector<int> pool = u.classes_in(split);
  if (pool.empty()) throw ValueError("sample_source_batch: split has no classes");
  LabeledBatch b;
  b.dim = u.dim;
  b.inputs.reserve(batch_size * u.dim);
  b.labels.reserve(batch_size);
  for (std::size_t i = 0; i < batch_size; ++i) {
    const std::size_t k = rng.uniform_index(pool.size());
    const std::vector<double> x = sample_example(u, pool[k], rng);
    b.inputs.insert(b.inputs.end(), x.begin(), x.end());
    b.labels.push_back(static_cast<int>(k));
  }
  return b;
}

// Class-balanced dataset over a split (class-major), labels as above.
inline LabeledBatch make_joint_dataset(const ClassUniverse& u, Split split,
                                       std::size_t per_class, Rng& rng) {
  if (per_class == 0) throw ValueError("make_joint_dataset: per_class must be positive");
  const std::vector<int> pool = u.classes_in(split);
  if (pool.empty()) throw ValueError("make_joint_dataset: split has no classes");
  LabeledBatch b;
  b.dim = u.dim;
  b.inputs.reserve(per_class * pool.size() * u.dim);
  b.labels.reserve(per_class * pool.size());
  for (std::size_t k = 0; k < pool.size(); ++k) {
    for (std::size_t j = 0; j < per_class; ++j) {
      const std::vector<double> x = sample_example(u, pool[k], rng);
      b.inputs.insert(b.inputs.end(), x.begin(), x.end());
      b.labels.push_back(static_cast<int>(k));
    }
  }
  return b;
}

}  // namespace metagrad
