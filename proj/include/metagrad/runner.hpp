#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "metagrad/checkpoint.hpp"
#include "metagrad/config.hpp"
#include "metagrad/csv.hpp"
#include "metagrad/experiments.hpp"

namespace metagrad {

struct RunOutputs {
  std::vector<std::string> files;  // paths written, in write order
};

namespace detail {

inline std::string out_path(const ExperimentConfig& c, const std::string& name) {
  std::error_code ec;
  std::filesystem::create_directories(c.out_dir, ec);
  if (ec) throw IoError("cannot create output directory '" + c.out_dir + "': " + ec.message());
  return (std::filesystem::path(c.out_dir) / name).string();
}

inline TrainSetup to_train_setup(const ExperimentConfig& c) {
  TrainSetup ts;
  ts.method = c.method;
  ts.hidden = c.hidden;
  ts.inner_lr = c.inner_lr;
  ts.inner_steps = c.inner_steps;
  ts.outer_lr = c.outer_lr;
  ts.meta_batch = c.meta_batch;
  ts.inner_batch = c.inner_batch;
  ts.iterations = c.iterations;
  ts.eval_every = c.eval_every;
  ts.way = c.way;
  ts.shot = c.shot;
  ts.query = c.query;
  ts.finetune_batch = c.finetune_batch;
  ts.val_episodes = c.val_episodes;
  ts.eval_steps = c.eval_steps;
  ts.eval_lr = c.eval_lr;
  ts.seed = c.seed;
  return ts;
}

inline std::vector<std::string> curve_row(const std::string& prefix_method,
                                          const std::string& prefix_head,
                                          const AblationStepStats& st) {
  std::vector<std::string> row;
  if (!prefix_method.empty()) row.push_back(prefix_method);
  if (!prefix_head.empty()) row.push_back(prefix_head);
  row.push_back(std::to_string(st.step));
  row.push_back(csv_double(st.grad_norm.mean));
  row.push_back(csv_double(st.grad_norm.half_width));
  row.push_back(csv_double(st.accuracy.mean));
  row.push_back(csv_double(st.accuracy.half_width));
  row.push_back(csv_double(st.loss.mean));
  row.push_back(csv_double(st.loss.half_width));
  return row;
}

inline RunOutputs run_toy_kind(const ExperimentConfig& c) {
  const ToyResult res = run_toy(c.toy);
  RunOutputs out;

  std::vector<std::vector<std::string>> finals;
  std::vector<std::vector<std::string>> density;
  std::vector<std::vector<std::string>> summary;
  const std::string scen = scenario_name(c.toy.scenario);
  const std::string steps = std::to_string(c.toy.inner_steps);
  for (const ToyAlgorithmResult& r : res.per_method) {
    const std::string alg = method_name(r.method);
    for (std::size_t i = 0; i < r.finals.size(); ++i) {
      const double x0 = c.toy.init_lo + (c.toy.init_hi - c.toy.init_lo) *
                                            static_cast<double>(i) /
                                            static_cast<double>(c.toy.init_count - 1);
      finals.push_back({scen, alg, steps, std::to_string(i), csv_double(x0),
                        csv_double(r.finals[i]), r.diverged[i] ? "1" : "0"});
    }
    for (std::size_t b = 0; b < r.density.bins; ++b) {
      const double lo = r.density.lo + static_cast<double>(b) * r.density.bin_width();
      density.push_back({scen, alg, steps, std::to_string(b), csv_double(lo),
                         csv_double(lo + r.density.bin_width()),
                         csv_double(r.density.center(b)), csv_double(r.density.mass[b])});
    }
    summary.push_back({scen, alg, steps, csv_double(r.mean_final), csv_double(r.std_final),
                       std::to_string(r.divergent_count)});
  }

  const std::string f1 = out_path(c, "toy_finals.csv");
  write_results(f1,
                {"scenario", "algorithm", "inner_steps", "init_index", "init_x", "final_x",
                 "diverged"},
                std::move(finals), 4);
  const std::string f2 = out_path(c, "toy_density.csv");
  write_results(f2,
                {"scenario", "algorithm", "inner_steps", "bin_index", "bin_lo", "bin_hi",
                 "bin_center", "mass"},
                std::move(density), 4);
  const std::string f3 = out_path(c, "toy_summary.csv");
  write_results(f3,
                {"scenario", "algorithm", "inner_steps", "mean_final", "std_final",
                 "divergent_count"},
                std::move(summary), 3);
  out.files = {f1, f2, f3};
  return out;
}

inline RunOutputs run_train_kind(const ExperimentConfig& c) {
  const ClassUniverse universe = make_class_splits(c.universe);
  const TrainedModel tm = train_method(universe, to_train_setup(c));

  Checkpoint cp;
  cp.config = tm.model_config;
  cp.params = tm.train.best;
  cp.iteration = tm.train.best_iteration;
  cp.val_metric = tm.train.best_metric;
  const std::string ckpt = out_path(c, "checkpoint.bin");
  save_checkpoint(ckpt, cp);

  std::vector<std::vector<std::string>> rows;
  for (const HistoryRow& h : tm.train.history)
    rows.push_back({std::to_string(h.iteration), csv_double(h.train_loss),
                    csv_double(h.val_metric)});
  const std::string hist = out_path(c, "history.csv");
  write_results(hist, {"iteration", "train_loss", "val_metric"}, std::move(rows), 1);
  return {{ckpt, hist}};
}

inline RunOutputs run_eval_kind(const ExperimentConfig& c) {
  const Checkpoint cp = load_checkpoint(c.eval_checkpoint);
  const ClassUniverse universe = make_class_splits(c.universe);
  if (cp.config.input_dim != universe.dim)
    throw ConfigError("eval: checkpoint input dim " + std::to_string(cp.config.input_dim) +
                      " does not match universe dim " + std::to_string(universe.dim));

  EvalPolicy policy;
  if (c.has_algorithm) {
    policy = eval_policy_for(c.method);
  } else {
    // Without an algorithm section, infer: a head matching the episode width
    // can be adapted as-is; any other head must be replaced per episode.
    const bool head_matches =
        cp.config.output_dim == static_cast<std::size_t>(c.way);
    policy = head_matches ? EvalPolicy{HeadPolicy::kLearnedHead, FreezeMode::kAllTrainable}
                          : EvalPolicy{HeadPolicy::kRandomHead, FreezeMode::kBodyFrozen};
  }

  const std::vector<Episode> bank =
      sample_episode_bank(universe, Split::kMetaTest, c.eval_episodes, c.way, c.eval_shot,
                          c.query, mix_seed(c.seed, detail::kSaltEvalBank));
  const EvalSpec es{c.eval_steps, c.eval_lr, policy.head, policy.freeze, 0};
  const std::vector<AblationStepStats> curve =
      adaptation_curve(cp.params, bank, es, mix_seed(c.seed, detail::kSaltEvalHead));

  std::vector<std::vector<std::string>> rows;
  for (const AblationStepStats& st : curve) rows.push_back(curve_row("", "", st));
  const std::string path = out_path(c, "eval.csv");
  write_results(path,
                {"step", "grad_norm_mean", "grad_norm_ci", "accuracy_mean", "accuracy_ci",
                 "loss_mean", "loss_ci"},
                std::move(rows), 1);
  return {{path}};
}

inline LayeredParams trained_or_loaded(const ExperimentConfig& c,
                                       const std::string& checkpoint_path,
                                       const ClassUniverse& universe) {
  if (!checkpoint_path.empty()) {
    const Checkpoint cp = load_checkpoint(checkpoint_path);
    if (cp.config.input_dim != universe.dim)
      throw ConfigError("checkpoint input dim " + std::to_string(cp.config.input_dim) +
                        " does not match universe dim " + std::to_string(universe.dim));
    return cp.params;
  }
  return train_method(universe, to_train_setup(c)).train.best;
}

inline RunOutputs run_ablate_kind(const ExperimentConfig& c) {
  const ClassUniverse universe = make_class_splits(c.universe);
  const LayeredParams params = trained_or_loaded(c, c.ablation_checkpoint, universe);
  const std::vector<Episode> bank =
      sample_episode_bank(universe, Split::kMetaTest, c.ablation_episodes, c.way,
                          c.ablation_shot, c.query, mix_seed(c.seed, detail::kSaltEvalBank));
  const std::vector<AblationSeries> series =
      run_head_ablation(params, c.method, bank, c.ablation_steps, c.ablation_lr,
                        mix_seed(c.seed, detail::kSaltEvalHead));

  std::vector<std::vector<std::string>> rows;
  for (const AblationSeries& s : series)
    for (const AblationStepStats& st : s.steps)
      rows.push_back(curve_row(method_name(s.method), head_policy_name(s.head), st));
  const std::string path = out_path(c, "ablation.csv");
  write_results(path,
                {"method", "head", "step", "grad_norm_mean", "grad_norm_ci", "accuracy_mean",
                 "accuracy_ci", "loss_mean", "loss_ci"},
                std::move(rows), 3);
  return {{path}};
}

inline RunOutputs run_sweep_kind(const ExperimentConfig& c) {
  const ClassUniverse universe = make_class_splits(c.universe);
  SweepConfig sc;
  sc.methods = c.sweep_methods;
  sc.k_train = c.sweep_k;
  sc.seeds = c.sweep_seeds;
  sc.base = to_train_setup(c);
  sc.eval_shot = c.eval_shot;
  sc.eval_episodes = c.eval_episodes;
  sc.seed = c.seed;
  const SweepResult res = run_k_sweep(universe, sc);

  std::vector<std::vector<std::string>> rows;
  for (const SweepRow& r : res.rows)
    rows.push_back({method_name(r.method), std::to_string(r.k_train), std::to_string(r.seed),
                    csv_double(r.accuracy_mean), csv_double(r.accuracy_min),
                    csv_double(r.accuracy_max)});
  const std::string path = out_path(c, "sweep.csv");
  write_results(path,
                {"algorithm", "k_train", "seed", "accuracy_mean", "accuracy_min",
                 "accuracy_max"},
                std::move(rows), 2);
  return {{path}};
}

inline RunOutputs run_joint_kind(const ExperimentConfig& c) {
  const ClassUniverse universe = make_class_splits(c.universe);
  const LayeredParams params = trained_or_loaded(c, c.joint_checkpoint, universe);
  JointConfig jc = c.joint;
  jc.seed = c.seed;
  const JointOutcome res = run_joint_accuracy(params, universe, jc);

  std::vector<std::vector<std::string>> rows;
  rows.push_back({distribution_name(universe.tag),
                  std::to_string(universe.classes_in(Split::kMetaTest).size()),
                  std::to_string(c.joint.per_class), std::to_string(res.train_count),
                  std::to_string(res.test_count), std::to_string(c.joint.epochs),
                  csv_double(c.joint.lr), csv_double(res.accuracy)});
  const std::string path = out_path(c, "joint.csv");
  write_results(path,
                {"universe", "classes", "per_class", "train_count", "test_count", "epochs",
                 "lr", "accuracy"},
                std::move(rows), 1);
  return {{path}};
}

inline RunOutputs run_correlate_kind(const ExperimentConfig& c) {
  StudySetup setup;
  setup.methods = c.study_methods;
  setup.capacities = c.study_capacities;
  setup.seeds = c.study_seeds;
  setup.universe = c.universe;
  setup.base = to_train_setup(c);
  setup.eval_episodes = c.eval_episodes;
  setup.joint = c.joint;
  setup.seed = c.seed;
  const StudyResult res = run_correlation_study(setup);

  std::vector<std::vector<std::string>> runs;
  for (const StudyRun& r : res.runs)
    runs.push_back({method_name(r.method), std::to_string(r.capacity),
                    std::to_string(r.seed), distribution_name(r.universe),
                    csv_double(r.joint_accuracy), csv_double(r.fewshot_accuracy)});
  const std::string f1 = out_path(c, "study_runs.csv");
  write_results(f1,
                {"method", "capacity", "seed", "universe", "joint_accuracy",
                 "fewshot_accuracy"},
                std::move(runs), 4);

  std::vector<std::vector<std::string>> cors;
  for (const CorrelationRow& r : res.correlations)
    cors.push_back({r.method, r.capacity, distribution_name(r.universe), csv_double(r.r),
                    csv_double(r.p), std::to_string(r.n)});
  const std::string f2 = out_path(c, "correlations.csv");
  write_results(f2, {"method", "capacity", "universe", "r", "p", "n"}, std::move(cors), 3);
  return {{f1, f2}};
}

}  // namespace detail

inline RunOutputs run_experiment(const ExperimentConfig& c) {
  switch (c.kind) {
    case ExperimentKind::kToy: return detail::run_toy_kind(c);
    case ExperimentKind::kTrain: return detail::run_train_kind(c);
    case ExperimentKind::kEval: return detail::run_eval_kind(c);
    case ExperimentKind::kAblateHead: return detail::run_ablate_kind(c);
    case ExperimentKind::kSweepK: return detail::run_sweep_kind(c);
    case ExperimentKind::kJointAcc: return detail::run_joint_kind(c);
    case ExperimentKind::kCorrelate: return detail::run_correlate_kind(c);
  }
  throw ValueError("unhandled experiment kind");
}

}  // namespace metagrad
