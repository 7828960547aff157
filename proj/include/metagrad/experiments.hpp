#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "metagrad/defaults.hpp"
#include "metagrad/metaopt.hpp"
#include "metagrad/model.hpp"
#include "metagrad/rng.hpp"
#include "metagrad/stats.hpp"
#include "metagrad/tasks.hpp"

namespace metagrad {

// ---- density histograms (toy solution distributions) ----

struct Histogram {
  double lo = 0.0, hi = 0.0;
  std::size_t bins = 0;
  std::vector<double> mass;    // normalized over counted values
  std::size_t counted = 0;     // finite values inside [lo, hi]
  std::size_t discarded = 0;   // NaN / out-of-range values

  double bin_width() const { return (hi - lo) / static_cast<double>(bins); }
  double center(std::size_t i) const {
    return lo + (static_cast<double>(i) + 0.5) * bin_width();
  }
};

inline Histogram make_histogram(std::span<const double> values, double lo, double hi,
                                std::size_t bins) {
  if (bins == 0) throw ValueError("make_histogram: bins must be positive");
  if (!(hi > lo)) throw ValueError("make_histogram: hi must exceed lo");
  Histogram h;
  h.lo = lo;
  h.hi = hi;
  h.bins = bins;
  h.mass.assign(bins, 0.0);
  for (double v : values) {
    if (!std::isfinite(v) || v < lo || v > hi) {
      ++h.discarded;
      continue;
    }
    auto idx = static_cast<std::size_t>((v - lo) / h.bin_width());
    if (idx >= bins) idx = bins - 1;  // v == hi lands in the last bin
    h.mass[idx] += 1.0;
    ++h.counted;
  }
  if (h.counted > 0)
    for (double& m : h.mass) m /= static_cast<double>(h.counted);
  return h;
}

// Bin indices of local maxima carrying at least min_mass, kept greedily by
// decreasing mass with at least min_separation bins between any two.
inline std::vector<std::size_t> histogram_modes(const Histogram& h, double min_mass,
                                                std::size_t min_separation) {
  std::vector<std::size_t> candidates;
  for (std::size_t i = 0; i < h.bins; ++i) {
    const double m = h.mass[i];
    if (m < min_mass) continue;
    if (i > 0 && h.mass[i - 1] > m) continue;
    if (i + 1 < h.bins && h.mass[i + 1] > m) continue;
    candidates.push_back(i);
  }
  std::stable_sort(candidates.begin(), candidates.end(),
                   [&](std::size_t a, std::size_t b) { return h.mass[a] > h.mass[b]; });
  std::vector<std::size_t> kept;
  for (std::size_t c : candidates) {
    bool ok = true;
    for (std::size_t k : kept) {
      const std::size_t gap = c > k ? c - k : k - c;
      if (gap < min_separation) {
        ok = false;
        break;
      }
    }
    if (ok) kept.push_back(c);
  }
  std::sort(kept.begin(), kept.end());
  return kept;
}

// ---- protocol 1: toy landscape convergence ----

struct ToyRates {
  double finetune_lr = defaults::kToyFinetuneLr;
  double reptile_inner_lr = defaults::kToyReptileInnerLr;
  double reptile_outer_lr = defaults::kToyReptileOuterLr;
  double fomaml_inner_lr = defaults::kToyFomamlInnerLr;
  double fomaml_outer_lr = defaults::kToyFomamlOuterLr;
};

struct ToyConfig {
  Scenario scenario = Scenario::kA;
  std::size_t inner_steps = defaults::kToyInnerSteps;
  std::size_t meta_iterations = defaults::kToyMetaIterations;
  std::size_t init_count = defaults::kToyInitCount;
  double init_lo = defaults::kToyInitLo;
  double init_hi = defaults::kToyInitHi;
  double divergence_cutoff = defaults::kToyDivergenceCutoff;
  std::size_t bins = defaults::kToyBins;
  ToyRates rates;
};

struct ToyAlgorithmResult {
  Method method = Method::kFinetune;
  std::vector<double> finals;   // per initialization, in init order
  std::vector<bool> diverged;   // |x| crossed the cutoff during training
  std::size_t divergent_count = 0;
  double mean_final = 0.0;      // over non-divergent runs (NaN if none)
  double std_final = 0.0;
  Histogram density;            // over non-divergent finals
};

struct ToyResult {
  ToyConfig config;
  std::vector<ToyAlgorithmResult> per_method;
};

inline AlgorithmSpec toy_spec(Method m, const ToyConfig& cfg) {
  AlgorithmSpec spec;
  spec.method = m;
  spec.inner_steps = cfg.inner_steps;
  spec.meta_batch = 1;
  switch (m) {
    case Method::kFinetune:
      spec.inner_lr = cfg.rates.finetune_lr;
      break;
    case Method::kReptile:
      spec.inner_lr = cfg.rates.reptile_inner_lr;
      spec.outer_lr = cfg.rates.reptile_outer_lr;
      break;
    case Method::kFomaml:
      spec.inner_lr = cfg.rates.fomaml_inner_lr;
      spec.outer_lr = cfg.rates.fomaml_outer_lr;
      break;
  }
  return spec;
}

inline ToyResult run_toy(const ToyConfig& cfg) {
  if (cfg.init_count < 2) throw ValueError("run_toy: need at least 2 initializations");
  if (cfg.meta_iterations < 1) throw ValueError("run_toy: meta_iterations must be >= 1");
  ToyResult result;
  result.config = cfg;
  for (Method m : {Method::kFinetune, Method::kReptile, Method::kFomaml}) {
    const AlgorithmSpec spec = toy_spec(m, cfg);
    ToyAlgorithmResult r;
    r.method = m;
    r.finals.resize(cfg.init_count);
    r.diverged.assign(cfg.init_count, false);
    for (std::size_t i = 0; i < cfg.init_count; ++i) {
      const double x0 = cfg.init_lo + (cfg.init_hi - cfg.init_lo) * static_cast<double>(i) /
                                          static_cast<double>(cfg.init_count - 1);
      LandscapeProblem problem(cfg.scenario);
      MetaState<double> state{x0, 0, spec, 0};
      bool diverged = false;
      for (std::size_t it = 0; it < cfg.meta_iterations; ++it) {
        try {
          outer_update(state, problem);
        } catch (const NumericError&) {
          diverged = true;
          break;
        }
        if (std::abs(state.params) > cfg.divergence_cutoff) {
          diverged = true;
          break;
        }
      }
      r.finals[i] = state.params;
      r.diverged[i] = diverged;
      if (diverged) ++r.divergent_count;
    }
    std::vector<double> kept;
    for (std::size_t i = 0; i < cfg.init_count; ++i)
      if (!r.diverged[i]) kept.push_back(r.finals[i]);
    if (kept.empty()) {
      r.mean_final = std::nan("");
      r.std_final = std::nan("");
    } else {
      double mean = 0.0;
      for (double v : kept) mean += v;
      mean /= static_cast<double>(kept.size());
      double ss = 0.0;
      for (double v : kept) ss += (v - mean) * (v - mean);
      r.mean_final = mean;
      r.std_final = std::sqrt(ss / static_cast<double>(kept.size()));
    }
    r.density = make_histogram(kept, cfg.init_lo, cfg.init_hi, cfg.bins);
    result.per_method.push_back(std::move(r));
  }
  return result;
}

// ---- meta-training one model on a universe ----

struct TrainSetup {
  Method method = Method::kReptile;
  std::vector<std::size_t> hidden{defaults::kHiddenWidth};
  double inner_lr = defaults::kInnerLr;
  std::size_t inner_steps = defaults::kInnerSteps;
  double outer_lr = defaults::kReptileOuterLr;  // epsilon or beta; unused by finetune
  std::size_t meta_batch = defaults::kMetaBatch;
  std::size_t inner_batch = defaults::kInnerBatch;
  std::size_t iterations = defaults::kMetaIterations;
  std::size_t eval_every = defaults::kEvalEvery;
  int way = defaults::kWay;
  int shot = defaults::kShot;
  int query = defaults::kQueryPerClass;
  std::size_t finetune_batch = defaults::kFinetuneBatch;
  std::size_t val_episodes = defaults::kValEpisodes;
  std::size_t eval_steps = defaults::kEvalSteps;
  double eval_lr = defaults::kEvalLr;
  std::uint64_t seed = 1;
};

struct EvalPolicy {
  HeadPolicy head = HeadPolicy::kLearnedHead;
  FreezeMode freeze = FreezeMode::kAllTrainable;
};

// Finetuning carries a source-class head, so episode evaluation gives it a
// fresh head over the frozen body; Reptile/FoMAML adapt the learned net whole.
inline EvalPolicy eval_policy_for(Method m) {
  if (m == Method::kFinetune) return {HeadPolicy::kRandomHead, FreezeMode::kBodyFrozen};
  return {HeadPolicy::kLearnedHead, FreezeMode::kAllTrainable};
}

struct TrainedModel {
  Method method = Method::kReptile;
  ModelConfig model_config;
  MetaTrainResult<LayeredParams> train;
};

namespace detail {
inline constexpr std::uint64_t kSaltInit = 0x11;
inline constexpr std::uint64_t kSaltStream = 0x22;
inline constexpr std::uint64_t kSaltValBank = 0x33;
inline constexpr std::uint64_t kSaltValHead = 0x44;
inline constexpr std::uint64_t kSaltEvalBank = 0x55;
inline constexpr std::uint64_t kSaltEvalHead = 0x66;
inline constexpr std::uint64_t kSaltJoint = 0x77;
}  // namespace detail

inline TrainedModel train_method(const ClassUniverse& universe, const TrainSetup& ts) {
  if (universe.tag != DistributionTag::kInDistribution)
    throw ValueError("train_method: training runs on the in-distribution universe");

  AlgorithmSpec algo;
  algo.method = ts.method;
  algo.inner_lr = ts.inner_lr;
  algo.inner_steps = ts.method == Method::kFinetune ? std::max<std::size_t>(ts.inner_steps, 1)
                                                    : ts.inner_steps;
  algo.outer_lr = ts.outer_lr;
  algo.meta_batch = ts.meta_batch;
  algo.inner_batch = ts.inner_batch;

  ModelConfig mc;
  mc.input_dim = universe.dim;
  mc.hidden = ts.hidden;
  mc.output_dim = ts.method == Method::kFinetune
                      ? universe.classes_in(Split::kMetaTrain).size()
                      : static_cast<std::size_t>(ts.way);
  mc.seed = mix_seed(ts.seed, detail::kSaltInit);
  LayeredParams init = init_params(mc);

  const std::vector<Episode> val_bank =
      sample_episode_bank(universe, Split::kMetaVal, ts.val_episodes, ts.way, ts.shot,
                          ts.query, mix_seed(ts.seed, detail::kSaltValBank));
  const EvalPolicy policy = eval_policy_for(ts.method);
  EvalSpec es{ts.eval_steps, ts.eval_lr, policy.head, policy.freeze, 0};
  const std::uint64_t val_head_seed = mix_seed(ts.seed, detail::kSaltValHead);
  auto eval_fn = [&](const LayeredParams& p) {
    return evaluate_bank(p, val_bank, es, val_head_seed);
  };

  TrainedModel out;
  out.method = ts.method;
  out.model_config = mc;
  if (ts.method == Method::kFinetune) {
    SourceStreamProblem problem(&universe, Split::kMetaTrain, ts.finetune_batch,
                                mix_seed(ts.seed, detail::kSaltStream));
    out.train = meta_train(std::move(init), problem, algo, ts.iterations, ts.eval_every,
                           eval_fn);
  } else {
    EpisodeProblem problem(&universe, Split::kMetaTrain, ts.way, ts.shot, ts.query,
                           ts.inner_batch, mix_seed(ts.seed, detail::kSaltStream));
    out.train = meta_train(std::move(init), problem, algo, ts.iterations, ts.eval_every,
                           eval_fn);
  }
  return out;
}

// Mean post-adaptation accuracy of a trained model on a meta-test episode bank.
inline double fewshot_accuracy(const TrainedModel& tm, const ClassUniverse& u,
                               std::size_t episodes, int way, int shot, int query,
                               std::size_t steps, double lr, std::uint64_t seed) {
  const std::vector<Episode> bank = sample_episode_bank(
      u, Split::kMetaTest, episodes, way, shot, query, mix_seed(seed, detail::kSaltEvalBank));
  const EvalPolicy policy = eval_policy_for(tm.method);
  EvalSpec es{steps, lr, policy.head, policy.freeze, 0};
  return evaluate_bank(tm.train.best, bank, es, mix_seed(seed, detail::kSaltEvalHead));
}

// ---- protocol 2: learned vs random output layer ----

struct AblationStepStats {
  std::size_t step = 0;
  MeanCi grad_norm;  // full-parameter gradient norm at theta^(step)
  MeanCi accuracy;   // query accuracy at theta^(step)
  MeanCi loss;       // support loss at theta^(step)
};

struct AblationSeries {
  Method method = Method::kFomaml;
  HeadPolicy head = HeadPolicy::kLearnedHead;
  std::vector<AblationStepStats> steps;
};

// Adapts every episode in the bank under one evaluation policy and aggregates
// the traces per step (mean with 95% confidence half-width).
inline std::vector<AblationStepStats> adaptation_curve(const LayeredParams& params,
                                                       const std::vector<Episode>& bank,
                                                       const EvalSpec& es,
                                                       std::uint64_t head_seed_base) {
  if (bank.empty()) throw ValueError("adaptation_curve: empty episode bank");
  const std::size_t steps = es.steps;
  std::vector<std::vector<double>> norms(steps + 1), accs(steps + 1), losses(steps + 1);
  for (std::size_t i = 0; i < bank.size(); ++i) {
    EvalSpec per = es;
    per.head_seed = mix_seed(head_seed_base, i);
    const AdaptationTrace tr = adapt_and_evaluate(params, bank[i], per);
    for (std::size_t s = 0; s <= steps; ++s) {
      norms[s].push_back(tr.grad_norm[s]);
      accs[s].push_back(tr.query[s].accuracy);
      losses[s].push_back(tr.support_loss[s]);
    }
  }
  std::vector<AblationStepStats> out;
  out.reserve(steps + 1);
  for (std::size_t s = 0; s <= steps; ++s)
    out.push_back({s, mean_ci95(norms[s]), mean_ci95(accs[s]), mean_ci95(losses[s])});
  return out;
}

inline std::vector<AblationSeries> run_head_ablation(const LayeredParams& params,
                                                     Method method,
                                                     const std::vector<Episode>& bank,
                                                     std::size_t steps, double lr,
                                                     std::uint64_t seed) {
  std::vector<AblationSeries> out;
  const FreezeMode freeze = eval_policy_for(method).freeze;
  for (HeadPolicy head : {HeadPolicy::kLearnedHead, HeadPolicy::kRandomHead}) {
    AblationSeries series;
    series.method = method;
    series.head = head;
    series.steps = adaptation_curve(params, bank, EvalSpec{steps, lr, head, freeze, 0}, seed);
    out.push_back(std::move(series));
  }
  return out;
}

// ---- protocol 3: support-size sweep ----

struct SweepConfig {
  std::vector<Method> methods{Method::kReptile, Method::kFomaml};
  std::vector<int> k_train{1, 5, 25};
  std::size_t seeds = defaults::kSweepSeeds;
  TrainSetup base;         // shot is overridden per k_train
  int eval_shot = 1;
  std::size_t eval_episodes = defaults::kTestEpisodes;
  std::uint64_t seed = 1;  // base for per-run seeds and the shared eval bank
};

struct SweepRow {
  Method method = Method::kReptile;
  int k_train = 1;
  std::uint64_t seed = 0;  // base seed of the 5-run group
  double accuracy_mean = 0.0;
  double accuracy_min = 0.0;
  double accuracy_max = 0.0;
};

struct SweepResult {
  std::vector<SweepRow> rows;
};

inline SweepResult run_k_sweep(const ClassUniverse& universe, const SweepConfig& cfg) {
  if (cfg.methods.empty() || cfg.k_train.empty())
    throw ValueError("run_k_sweep: methods and k_train must be non-empty");
  if (cfg.seeds < 1) throw ValueError("run_k_sweep: seeds must be >= 1");
  SweepResult out;
  for (Method m : cfg.methods) {
    for (int k : cfg.k_train) {
      if (k < 1) throw ValueError("run_k_sweep: k_train values must be >= 1");
      std::vector<double> accs;
      for (std::size_t s = 0; s < cfg.seeds; ++s) {
        TrainSetup ts = cfg.base;
        ts.method = m;
        ts.shot = k;
        if (m == Method::kFomaml) ts.outer_lr = defaults::kFomamlOuterLr;
        if (m == Method::kReptile) ts.outer_lr = defaults::kReptileOuterLr;
        ts.seed = mix_seed(mix_seed(cfg.seed, static_cast<std::uint64_t>(m) * 131 +
                                                  static_cast<std::uint64_t>(k)),
                           s);
        const TrainedModel tm = train_method(universe, ts);
        accs.push_back(fewshot_accuracy(tm, universe, cfg.eval_episodes, cfg.base.way,
                                        cfg.eval_shot, cfg.base.query, cfg.base.eval_steps,
                                        cfg.base.eval_lr, cfg.seed));
      }
      SweepRow row;
      row.method = m;
      row.k_train = k;
      row.seed = cfg.seed;
      row.accuracy_mean = 0.0;
      row.accuracy_min = accs[0];
      row.accuracy_max = accs[0];
      for (double a : accs) {
        row.accuracy_mean += a;
        row.accuracy_min = std::min(row.accuracy_min, a);
        row.accuracy_max = std::max(row.accuracy_max, a);
      }
      row.accuracy_mean /= static_cast<double>(accs.size());
      out.rows.push_back(row);
    }
  }
  return out;
}

// ---- protocol 4: joint classification accuracy & correlations ----

struct JointConfig {
  std::size_t per_class = defaults::kJointPerClass;
  double train_fraction = defaults::kJointTrainFraction;
  std::size_t epochs = defaults::kJointEpochs;
  double lr = defaults::kJointLr;
  std::uint64_t seed = 1;
};

struct JointOutcome {
  double accuracy = 0.0;     // held-out accuracy on the 40% split
  LayeredParams model;       // frozen body + trained meta-test head
  std::size_t train_count = 0, test_count = 0;
  // Row indices into the class-major joint dataset (class = row / per_class):
  // which examples trained the head and which were held out.
  std::vector<std::size_t> train_rows, test_rows;
};

// Replaces the head with one output per meta-test class and trains it
// non-episodically (full-batch SGD) on a stratified 60/40 split of fresh
// meta-test data; the body is never updated.
inline JointOutcome run_joint_accuracy(const LayeredParams& trained,
                                       const ClassUniverse& universe,
                                       const JointConfig& cfg) {
  if (cfg.per_class < 2) throw ValueError("joint accuracy: per_class must be >= 2");
  if (cfg.train_fraction <= 0.0 || cfg.train_fraction >= 1.0)
    throw ValueError("joint accuracy: train_fraction must lie in (0, 1)");
  if (cfg.epochs < 1) throw ValueError("joint accuracy: epochs must be >= 1");

  const std::vector<int> test_classes = universe.classes_in(Split::kMetaTest);
  if (test_classes.empty()) throw ValueError("joint accuracy: no meta-test classes");

  Rng rng(mix_seed(cfg.seed, detail::kSaltJoint));
  const LabeledBatch all = make_joint_dataset(universe, Split::kMetaTest, cfg.per_class, rng);

  // Stratified split: within each class block, the first train_fraction
  // examples train the head, the rest are held out.
  const auto per_train =
      static_cast<std::size_t>(std::llround(cfg.train_fraction *
                                            static_cast<double>(cfg.per_class)));
  if (per_train == 0 || per_train >= cfg.per_class)
    throw ValueError("joint accuracy: split leaves an empty side");
  JointOutcome out;
  LabeledBatch train, test;
  train.dim = test.dim = all.dim;
  for (std::size_t c = 0; c < test_classes.size(); ++c) {
    for (std::size_t j = 0; j < cfg.per_class; ++j) {
      const std::size_t r = c * cfg.per_class + j;
      const bool to_train = j < per_train;
      LabeledBatch& dst = to_train ? train : test;
      dst.inputs.insert(dst.inputs.end(), all.inputs.begin() + r * all.dim,
                        all.inputs.begin() + (r + 1) * all.dim);
      dst.labels.push_back(all.labels[r]);
      (to_train ? out.train_rows : out.test_rows).push_back(r);
    }
  }

  out.train_count = train.labels.size();
  out.test_count = test.labels.size();
  out.model = replace_head(trained, test_classes.size(), mix_seed(cfg.seed, 0x6EAD));
  const LayerMask mask = freeze_mask(out.model, FreezeMode::kBodyFrozen);
  for (std::size_t e = 0; e < cfg.epochs; ++e) {
    BatchEval ev = eval_classification(out.model, train, true);
    if (!std::isfinite(ev.loss))
      throw NumericError("joint accuracy: non-finite loss at epoch " + std::to_string(e));
    out.model = sgd_step(out.model, ev.grads, cfg.lr, mask);
  }
  out.accuracy = eval_classification(out.model, test, false).accuracy;
  return out;
}

struct StudySetup {
  std::vector<Method> methods{Method::kFinetune, Method::kReptile, Method::kFomaml};
  std::vector<std::size_t> capacities{16, 32, 64};  // hidden width per setting
  std::size_t seeds = defaults::kStudySeeds;
  UniverseConfig universe;
  TrainSetup base;
  std::size_t eval_episodes = defaults::kTestEpisodes;
  JointConfig joint;
  std::uint64_t seed = 1;
};

struct StudyRun {
  Method method = Method::kFinetune;
  std::size_t capacity = 0;
  std::uint64_t seed = 0;  // run index within the setting
  DistributionTag universe = DistributionTag::kInDistribution;
  double joint_accuracy = 0.0;
  double fewshot_accuracy = 0.0;
};

struct CorrelationRow {
  std::string method;    // method name or "all"
  std::string capacity;  // width as text or "all"
  DistributionTag universe = DistributionTag::kInDistribution;
  double r = 0.0;
  double p = 1.0;
  std::size_t n = 0;
};

struct StudyResult {
  std::vector<StudyRun> runs;
  std::vector<CorrelationRow> correlations;
};

namespace detail {

inline CorrelationRow correlate_runs(const std::vector<const StudyRun*>& group,
                                     const std::string& method_label,
                                     const std::string& capacity_label,
                                     DistributionTag tag) {
  CorrelationRow row;
  row.method = method_label;
  row.capacity = capacity_label;
  row.universe = tag;
  row.n = group.size();
  std::vector<double> xs, ys;
  for (const StudyRun* r : group) {
    xs.push_back(r->joint_accuracy);
    ys.push_back(r->fewshot_accuracy);
  }
  try {
    const PearsonResult pr = pearson(xs, ys);
    row.r = pr.r;
    row.p = pr.p;
  } catch (const ValueError&) {
    row.r = std::nan("");  // degenerate group (too small or zero variance)
    row.p = std::nan("");
  }
  return row;
}

}  // namespace detail

// Trains every (method, capacity, seed) once on the in-distribution universe,
// measures joint + few-shot accuracy on both universes, and correlates the two
// measures per setting, per method, and pooled.
inline StudyResult run_correlation_study(const StudySetup& setup) {
  if (setup.methods.empty() || setup.capacities.empty() || setup.seeds == 0)
    throw ValueError("correlation study: methods, capacities, and seeds must be non-empty");
  const ClassUniverse in_dist = make_class_splits(setup.universe);
  const ClassUniverse shifted = shifted_universe(in_dist, setup.universe);

  StudyResult result;
  for (Method m : setup.methods) {
    for (std::size_t cap : setup.capacities) {
      for (std::size_t s = 0; s < setup.seeds; ++s) {
        TrainSetup ts = setup.base;
        ts.method = m;
        ts.hidden = {cap};
        ts.seed = mix_seed(mix_seed(mix_seed(setup.seed, static_cast<std::uint64_t>(m)),
                                    cap),
                           s);
        const TrainedModel tm = train_method(in_dist, ts);
        for (const ClassUniverse* u : {&in_dist, &shifted}) {
          StudyRun run;
          run.method = m;
          run.capacity = cap;
          run.seed = s;
          run.universe = u->tag;
          JointConfig jc = setup.joint;
          jc.seed = mix_seed(setup.seed, u->tag == DistributionTag::kShifted ? 0xBAD : 0xF00D);
          run.joint_accuracy = run_joint_accuracy(tm.train.best, *u, jc).accuracy;
          run.fewshot_accuracy = fewshot_accuracy(
              tm, *u, setup.eval_episodes, ts.way, ts.shot, ts.query, ts.eval_steps,
              ts.eval_lr,
              mix_seed(setup.seed, u->tag == DistributionTag::kShifted ? 0x51 : 0x1D));
          result.runs.push_back(run);
        }
      }
    }
  }

  for (DistributionTag tag : {DistributionTag::kInDistribution, DistributionTag::kShifted}) {
    for (Method m : setup.methods) {
      for (std::size_t cap : setup.capacities) {
        std::vector<const StudyRun*> group;
        for (const StudyRun& r : result.runs)
          if (r.method == m && r.capacity == cap && r.universe == tag) group.push_back(&r);
        result.correlations.push_back(
            detail::correlate_runs(group, method_name(m), std::to_string(cap), tag));
      }
      std::vector<const StudyRun*> group;
      for (const StudyRun& r : result.runs)
        if (r.method == m && r.universe == tag) group.push_back(&r);
      result.correlations.push_back(
          detail::correlate_runs(group, method_name(m), "all", tag));
    }
    std::vector<const StudyRun*> group;
    for (const StudyRun& r : result.runs)
      if (r.universe == tag) group.push_back(&r);
    result.correlations.push_back(detail::correlate_runs(group, "all", "all", tag));
  }
  return result;
}

// Pooled mean of one study measure for a method on one universe.
inline double study_mean(const StudyResult& sr, Method m, DistributionTag tag,
                         bool joint) {
  double sum = 0.0;
  std::size_t n = 0;
  for (const StudyRun& r : sr.runs) {
    if (r.method != m || r.universe != tag) continue;
    sum += joint ? r.joint_accuracy : r.fewshot_accuracy;
    ++n;
  }
  if (n == 0) throw ValueError("study_mean: no runs for that method/universe");
  return sum / static_cast<double>(n);
}

}  // namespace metagrad
