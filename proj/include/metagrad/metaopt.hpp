#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "metagrad/model.hpp"
#include "metagrad/rng.hpp"
#include "metagrad/tasks.hpp"

namespace metagrad {

// ---- algorithm selection ----

enum class Method : std::uint8_t { kFinetune, kReptile, kFomaml };

inline const char* method_name(Method m) {
  switch (m) {
    case Method::kFinetune: return "finetune";
    case Method::kReptile: return "reptile";
    case Method::kFomaml: return "fomaml";
  }
  return "?";
}

inline Method method_from_string(const std::string& s) {
  if (s == "finetune") return Method::kFinetune;
  if (s == "reptile") return Method::kReptile;
  if (s == "fomaml") return Method::kFomaml;
  throw ValueError("unknown method '" + s + "' (expected finetune|reptile|fomaml)");
}

struct AlgorithmSpec {
  Method method = Method::kReptile;
  double inner_lr = 0.0;        // per-step SGD rate inside a task
  std::size_t inner_steps = 1;  // T
  double outer_lr = 0.0;        // epsilon (reptile) or beta (fomaml); unused by finetune
  std::size_t meta_batch = 1;   // tasks averaged per outer update
  std::size_t inner_batch = 0;  // 0 = full support set every step

  void validate() const {
    if (!std::isfinite(inner_lr) || inner_lr < 0.0)
      throw ValueError("algorithm: inner_lr must be finite and >= 0");
    if (inner_steps < 1) throw ValueError("algorithm: inner_steps must be >= 1");
    if (meta_batch < 1) throw ValueError("algorithm: meta_batch must be >= 1");
    if (method != Method::kFinetune && (!std::isfinite(outer_lr) || outer_lr <= 0.0))
      throw ValueError(std::string("algorithm: ") + method_name(method) +
                       " needs a positive outer_lr");
  }
};

struct QueryMetrics {
  double loss = 0.0;
  double accuracy = 0.0;  // NaN for regression problems
};

// Per-step adaptation record. inner_adapt fills entry t with the state *before*
// step t (lengths = T); adapt_and_evaluate fills entry s with the state after s
// updates, including s = steps (lengths = steps + 1).
struct AdaptationTrace {
  std::vector<double> support_loss;
  std::vector<double> grad_norm;  // Euclidean norm over every parameter
  std::vector<QueryMetrics> query;
};

// ---- scalar parameter space (1-d toy landscapes) ----
// Mirrors the LayeredParams helpers so the meta loop is generic over both.

inline double param_zero_like(const double&) { return 0.0; }
inline void param_accumulate(double& acc, const double& x, double scale) { acc += scale * x; }
inline double param_difference(double a, double b) { return a - b; }
inline double param_add_scaled(double a, double c, double b) { return a + c * b; }
inline double param_norm(double x) { return std::abs(x); }
inline bool params_finite(double x) { return std::isfinite(x); }

// ---- task-stream problems ----
//
// A Problem exposes one meta-training distribution through four calls:
//   start_task(iteration, slot)        pick/sample task `slot` of this meta-batch
//   inner_loss_grad(p, step, grad)     loss + gradient for inner step `step`
//   outer_loss_grad(p, grad)           loss + gradient on held-out task data
//   query_metrics(p)                   held-out loss/accuracy, no gradient
// Problems own their sampling RNG; identical seeds replay identical streams.

class LandscapeProblem {
 public:
  using Params = double;

  LandscapeProblem(Scenario s, int first_task = 1) : scenario_(s), task_(first_task) {}

  // Tasks alternate 1,2,1,2,... over meta-iterations; slot continues the
  // alternation inside a meta-batch.
  void start_task(std::size_t iteration, std::size_t slot) {
    task_ = 1 + static_cast<int>((iteration + slot) % 2);
  }

  double inner_loss_grad(const Params& x, std::size_t, Params& grad) const {
    grad = landscape_grad(scenario_, task_, x);
    return landscape_loss(scenario_, task_, x);
  }

  // The toy abstracts a task as its loss function, so the held-out loss is the
  // same analytic objective.
  double outer_loss_grad(const Params& x, Params& grad) const {
    return inner_loss_grad(x, 0, grad);
  }

  QueryMetrics query_metrics(const Params& x) const {
    return {landscape_loss(scenario_, task_, x), std::nan("")};
  }

  int current_task() const { return task_; }

 private:
  Scenario scenario_;
  int task_;
};

// Joint-training stream for finetuning: each task slot is one mini-batch drawn
// from the whole source split (labels indexed over the split's class list).
class SourceStreamProblem {
 public:
  using Params = LayeredParams;

  SourceStreamProblem(const ClassUniverse* universe, Split split, std::size_t batch_size,
                      std::uint64_t seed)
      : universe_(universe), split_(split), batch_size_(batch_size), rng_(seed) {
    if (universe_ == nullptr) throw ValueError("source stream: null universe");
  }

  void start_task(std::size_t, std::size_t) {
    batch_ = sample_source_batch(*universe_, split_, batch_size_, rng_);
  }

  double inner_loss_grad(const Params& p, std::size_t, Params& grad) {
    BatchEval ev = eval_classification(p, batch_, true);
    grad = std::move(ev.grads);
    return ev.loss;
  }

  double outer_loss_grad(const Params& p, Params& grad) {
    LabeledBatch fresh = sample_source_batch(*universe_, split_, batch_size_, rng_);
    BatchEval ev = eval_classification(p, fresh, true);
    grad = std::move(ev.grads);
    return ev.loss;
  }

  QueryMetrics query_metrics(const Params& p) {
    BatchEval ev = eval_classification(p, batch_, false);
    return {ev.loss, ev.accuracy};
  }

  std::size_t class_count() const { return universe_->classes_in(split_).size(); }

 private:
  const ClassUniverse* universe_;
  Split split_;
  std::size_t batch_size_;
  Rng rng_;
  LabeledBatch batch_;
};

// Episodic N-way k-shot stream for Reptile / first-order MAML. Inner steps see
// the support set (full-batch when inner_batch = 0 or >= support size,
// otherwise without-replacement mini-batches reshuffled per epoch); the
// held-out loss is the episode's query set.
class EpisodeProblem {
 public:
  using Params = LayeredParams;

  EpisodeProblem(const ClassUniverse* universe, Split split, int way, int shot, int query,
                 std::size_t inner_batch, std::uint64_t seed)
      : universe_(universe),
        split_(split),
        way_(way),
        shot_(shot),
        query_(query),
        inner_batch_(inner_batch),
        rng_(seed) {
    if (universe_ == nullptr) throw ValueError("episode stream: null universe");
  }

  void start_task(std::size_t, std::size_t) {
    episode_ = sample_episode(*universe_, split_, way_, shot_, query_, rng_);
    support_ = episode_.support_batch();
    query_batch_ = episode_.query_batch();
    order_.clear();
    cursor_ = 0;
  }

  double inner_loss_grad(const Params& p, std::size_t, Params& grad) {
    const std::size_t n = support_.labels.size();
    if (inner_batch_ == 0 || inner_batch_ >= n) {
      BatchEval ev = eval_classification(p, support_, true);
      grad = std::move(ev.grads);
      return ev.loss;
    }
    BatchEval ev = eval_classification(p, next_minibatch(), true);
    grad = std::move(ev.grads);
    return ev.loss;
  }

  double outer_loss_grad(const Params& p, Params& grad) {
    BatchEval ev = eval_classification(p, query_batch_, true);
    grad = std::move(ev.grads);
    return ev.loss;
  }

  QueryMetrics query_metrics(const Params& p) {
    BatchEval ev = eval_classification(p, query_batch_, false);
    return {ev.loss, ev.accuracy};
  }

  const Episode& current_episode() const { return episode_; }

 private:
  LabeledBatch next_minibatch() {
    const std::size_t n = support_.labels.size();
    if (cursor_ >= order_.size()) {
      order_.resize(n);
      for (std::size_t i = 0; i < n; ++i) order_[i] = i;
      rng_.shuffle(order_);
      cursor_ = 0;
    }
    const std::size_t take = std::min(inner_batch_, order_.size() - cursor_);
    LabeledBatch mb;
    mb.dim = support_.dim;
    mb.inputs.reserve(take * support_.dim);
    mb.labels.reserve(take);
    for (std::size_t i = 0; i < take; ++i) {
      const std::size_t r = order_[cursor_ + i];
      mb.inputs.insert(mb.inputs.end(), support_.inputs.begin() + r * support_.dim,
                       support_.inputs.begin() + (r + 1) * support_.dim);
      mb.labels.push_back(support_.labels[r]);
    }
    cursor_ += take;
    return mb;
  }

  const ClassUniverse* universe_;
  Split split_;
  int way_, shot_, query_;
  std::size_t inner_batch_;
  Rng rng_;
  Episode episode_;
  LabeledBatch support_, query_batch_;
  std::vector<std::size_t> order_;
  std::size_t cursor_ = 0;
};

// Sine-wave regression stream (amplitude/phase sampled per task).
class SineProblem {
 public:
  using Params = LayeredParams;

  SineProblem(SineConfig cfg, std::size_t support, std::size_t query, std::uint64_t seed)
      : cfg_(cfg), support_count_(support), query_count_(query), rng_(seed) {}

  void start_task(std::size_t, std::size_t) {
    task_ = sample_sine_task(cfg_, rng_);
    support_ = sine_batch(task_, cfg_, support_count_, rng_);
    query_ = sine_batch(task_, cfg_, query_count_, rng_);
  }

  double inner_loss_grad(const Params& p, std::size_t, Params& grad) {
    BatchEval ev = eval_regression(p, support_, true);
    grad = std::move(ev.grads);
    return ev.loss;
  }

  double outer_loss_grad(const Params& p, Params& grad) {
    BatchEval ev = eval_regression(p, query_, true);
    grad = std::move(ev.grads);
    return ev.loss;
  }

  QueryMetrics query_metrics(const Params& p) {
    BatchEval ev = eval_regression(p, query_, false);
    return {ev.loss, ev.accuracy};
  }

 private:
  SineConfig cfg_;
  std::size_t support_count_, query_count_;
  Rng rng_;
  SineTask task_;
  RegressionBatch support_, query_;
};

// ---- inner loop ----

template <class P>
struct InnerResult {
  P adapted;           // theta^(T)
  double first_loss = 0.0;  // loss at theta^(0), before any update
};

// T plain SGD steps from `start` on the problem's current task. `start` is
// never modified. When `trace` is given, entry t records the loss/gradient
// norm at the point where step t's gradient was taken.
template <class Problem>
InnerResult<typename Problem::Params> inner_adapt(const typename Problem::Params& start,
                                                  Problem& problem, const AlgorithmSpec& spec,
                                                  AdaptationTrace* trace = nullptr) {
  using P = typename Problem::Params;
  InnerResult<P> out{start, 0.0};
  P grad = param_zero_like(start);
  for (std::size_t t = 0; t < spec.inner_steps; ++t) {
    const double loss = problem.inner_loss_grad(out.adapted, t, grad);
    if (!std::isfinite(loss))
      throw NumericError("inner step " + std::to_string(t) + ": non-finite loss");
    if (t == 0) out.first_loss = loss;
    if (trace != nullptr) {
      trace->support_loss.push_back(loss);
      trace->grad_norm.push_back(param_norm(grad));
    }
    param_accumulate(out.adapted, grad, -spec.inner_lr);
  }
  return out;
}

// ---- outer loop ----

template <class P>
struct MetaState {
  P params;
  std::size_t iteration = 0;
  AlgorithmSpec spec;
  std::uint64_t seed = 0;  // provenance of the problem's sampling stream
};

struct OuterStats {
  double mean_initial_loss = 0.0;  // task loss at theta before adaptation, meta-batch mean
};

// One meta-iteration: sample meta_batch tasks, adapt to each, and fold the
// results back into the initialization according to the variant:
//   finetune  theta <- theta^(T), chained across the batch (joint training)
//   reptile   theta <- theta + eps * mean_j(theta_j^(T) - theta)
//   fomaml    theta <- theta - beta * mean_j(grad of held-out loss at theta_j^(T))
template <class Problem>
OuterStats outer_update(MetaState<typename Problem::Params>& state, Problem& problem) {
  using P = typename Problem::Params;
  const AlgorithmSpec& spec = state.spec;
  OuterStats stats;

  switch (spec.method) {
    case Method::kFinetune: {
      for (std::size_t j = 0; j < spec.meta_batch; ++j) {
        problem.start_task(state.iteration, j);
        InnerResult<P> r = inner_adapt(state.params, problem, spec);
        stats.mean_initial_loss += r.first_loss / static_cast<double>(spec.meta_batch);
        state.params = std::move(r.adapted);
      }
      break;
    }
    case Method::kReptile: {
      P mean_endpoint = param_zero_like(state.params);
      const double w = 1.0 / static_cast<double>(spec.meta_batch);
      for (std::size_t j = 0; j < spec.meta_batch; ++j) {
        problem.start_task(state.iteration, j);
        InnerResult<P> r = inner_adapt(state.params, problem, spec);
        stats.mean_initial_loss += r.first_loss * w;
        param_accumulate(mean_endpoint, r.adapted, w);
      }
      state.params = param_add_scaled(
          state.params, spec.outer_lr, param_difference(mean_endpoint, state.params));
      break;
    }
    case Method::kFomaml: {
      P mean_grad = param_zero_like(state.params);
      P grad = param_zero_like(state.params);
      const double w = 1.0 / static_cast<double>(spec.meta_batch);
      for (std::size_t j = 0; j < spec.meta_batch; ++j) {
        problem.start_task(state.iteration, j);
        InnerResult<P> r = inner_adapt(state.params, problem, spec);
        stats.mean_initial_loss += r.first_loss * w;
        const double outer_loss = problem.outer_loss_grad(r.adapted, grad);
        if (!std::isfinite(outer_loss))
          throw NumericError("outer update: non-finite held-out loss");
        param_accumulate(mean_grad, grad, w);
      }
      param_accumulate(state.params, mean_grad, -spec.outer_lr);
      break;
    }
  }
  if (!params_finite(state.params))
    throw NumericError("outer update produced non-finite parameters at iteration " +
                       std::to_string(state.iteration));
  ++state.iteration;
  return stats;
}

// ---- meta-training driver ----

struct HistoryRow {
  std::size_t iteration = 0;   // 1-based, after the update
  double train_loss = 0.0;     // mean pre-adaptation task loss this iteration
  double val_metric = 0.0;     // NaN when this row carried no validation
};

template <class P>
struct MetaTrainResult {
  P best;                     // checkpoint with the highest validation metric
  double best_metric = 0.0;   // NaN when no eval_fn was supplied
  std::size_t best_iteration = 0;
  P final;                    // parameters after the last iteration
  std::vector<HistoryRow> history;
};

// Runs `iterations` outer updates. Validation runs every `eval_every`
// iterations and always after the last one; with eval_every > iterations that
// means exactly one validation. Without an eval_fn the final parameters are
// returned as best.
template <class Problem>
MetaTrainResult<typename Problem::Params> meta_train(
    typename Problem::Params init, Problem& problem, const AlgorithmSpec& spec,
    std::size_t iterations, std::size_t eval_every,
    const std::function<double(const typename Problem::Params&)>& eval_fn = {}) {
  using P = typename Problem::Params;
  spec.validate();
  if (iterations < 1) throw ValueError("meta_train: iterations must be >= 1");
  if (eval_every < 1) throw ValueError("meta_train: eval_every must be >= 1");

  MetaState<P> state{std::move(init), 0, spec, 0};
  MetaTrainResult<P> result;
  result.best = state.params;
  result.best_metric = std::nan("");
  result.history.reserve(iterations);

  for (std::size_t i = 1; i <= iterations; ++i) {
    OuterStats stats;
    try {
      stats = outer_update(state, problem);
    } catch (const NumericError& e) {
      throw NumericError("meta iteration " + std::to_string(i) + ": " + e.what());
    }
    HistoryRow row{i, stats.mean_initial_loss, std::nan("")};
    const bool validate = eval_fn && (i % eval_every == 0 || i == iterations);
    if (validate) {
      row.val_metric = eval_fn(state.params);
      if (std::isnan(result.best_metric) || row.val_metric > result.best_metric) {
        result.best_metric = row.val_metric;
        result.best = state.params;
        result.best_iteration = i;
      }
    }
    result.history.push_back(row);
  }
  result.final = std::move(state.params);
  if (!eval_fn) {
    result.best = result.final;
    result.best_iteration = iterations;
  }
  return result;
}

// ---- episode-level evaluation ----

enum class HeadPolicy : std::uint8_t { kLearnedHead, kRandomHead };

inline const char* head_policy_name(HeadPolicy h) {
  return h == HeadPolicy::kLearnedHead ? "learned" : "random";
}

// Finetuning adapts only the head at test time; Reptile/FoMAML adapt everything.
inline FreezeMode eval_freeze_for(Method m) {
  return m == Method::kFinetune ? FreezeMode::kBodyFrozen : FreezeMode::kAllTrainable;
}

struct EvalSpec {
  std::size_t steps = 10;     // full-support SGD updates on the episode
  double lr = 0.0;
  HeadPolicy head = HeadPolicy::kLearnedHead;
  FreezeMode freeze = FreezeMode::kAllTrainable;
  std::uint64_t head_seed = 0;  // head re-init seed when head == kRandomHead
};

// Adapts a copy of `params` to one episode and records loss / gradient norm /
// query metrics after s = 0..steps updates (entry s is measured at theta^(s);
// gradients use the full support set).
inline AdaptationTrace adapt_and_evaluate(const LayeredParams& params, const Episode& ep,
                                          const EvalSpec& es) {
  LayeredParams p = params;
  if (es.head == HeadPolicy::kRandomHead) {
    p = replace_head(p, static_cast<std::size_t>(ep.way), es.head_seed);
  } else if (p.layers.back().out != static_cast<std::size_t>(ep.way)) {
    throw ValueError("adapt_and_evaluate: learned head has " +
                     std::to_string(p.layers.back().out) + " outputs but the episode is " +
                     std::to_string(ep.way) + "-way");
  }
  const LayerMask mask = freeze_mask(p, es.freeze);
  const LabeledBatch support = ep.support_batch();
  const LabeledBatch query = ep.query_batch();

  AdaptationTrace trace;
  trace.support_loss.reserve(es.steps + 1);
  trace.grad_norm.reserve(es.steps + 1);
  trace.query.reserve(es.steps + 1);
  for (std::size_t s = 0; s <= es.steps; ++s) {
    BatchEval sup = eval_classification(p, support, true);
    if (!std::isfinite(sup.loss))
      throw NumericError("episode adaptation step " + std::to_string(s) +
                         ": non-finite loss");
    BatchEval q = eval_classification(p, query, false);
    trace.support_loss.push_back(sup.loss);
    trace.grad_norm.push_back(param_norm(sup.grads));
    trace.query.push_back({q.loss, q.accuracy});
    if (s < es.steps) p = sgd_step(p, sup.grads, es.lr, mask);
  }
  return trace;
}

// Mean final-step query accuracy over a fixed bank of episodes.
inline double evaluate_bank(const LayeredParams& params, const std::vector<Episode>& bank,
                            const EvalSpec& es, std::uint64_t head_seed_base = 0) {
  if (bank.empty()) throw ValueError("evaluate_bank: empty episode bank");
  double acc = 0.0;
  for (std::size_t i = 0; i < bank.size(); ++i) {
    EvalSpec per = es;
    if (es.head == HeadPolicy::kRandomHead) per.head_seed = mix_seed(head_seed_base, i);
    const AdaptationTrace tr = adapt_and_evaluate(params, bank[i], per);
    acc += tr.query.back().accuracy;
  }
  return acc / static_cast<double>(bank.size());
}

}  // namespace metagrad
