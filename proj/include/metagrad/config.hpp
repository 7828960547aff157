#pragma once

#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "metagrad/defaults.hpp"
#include "metagrad/experiments.hpp"
#include "metagrad/metaopt.hpp"
#include "metagrad/tasks.hpp"

namespace metagrad {

// ---- structured key/value text (TOML-style subset) ----
//
// Supported: [section] headers, key = value lines, # comments, quoted
// strings, booleans, numbers, and one-line homogeneous arrays. That covers
// every experiment config; anything fancier is rejected with a line number.

struct ConfigValue {
  enum class Type { kString, kNumber, kBool, kNumbers, kStrings };
  Type type = Type::kString;
  std::string str;
  double num = 0.0;
  bool flag = false;
  std::vector<double> nums;
  std::vector<std::string> strs;
  long line = 0;
  mutable bool used = false;
};

using ConfigTree = std::map<std::string, std::map<std::string, ConfigValue>>;

namespace detail {

inline std::string config_trim(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

inline std::string strip_comment(const std::string& line) {
  bool in_string = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    if (line[i] == '"') in_string = !in_string;
    if (line[i] == '#' && !in_string) return line.substr(0, i);
  }
  return line;
}

inline bool valid_key(const std::string& k) {
  if (k.empty()) return false;
  for (char c : k)
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_')) return false;
  return true;
}

inline ConfigValue parse_scalar(const std::string& token, long line) {
  ConfigValue v;
  v.line = line;
  if (token.size() >= 2 && token.front() == '"' && token.back() == '"') {
    v.type = ConfigValue::Type::kString;
    v.str = token.substr(1, token.size() - 2);
    return v;
  }
  if (token == "true" || token == "false") {
    v.type = ConfigValue::Type::kBool;
    v.flag = token == "true";
    return v;
  }
  char* end = nullptr;
  const double num = std::strtod(token.c_str(), &end);
  if (!token.empty() && end == token.c_str() + token.size()) {
    v.type = ConfigValue::Type::kNumber;
    v.num = num;
    return v;
  }
  throw ConfigError("line " + std::to_string(line) + ": cannot parse value '" + token + "'");
}

inline std::vector<std::string> split_array_items(const std::string& body, long line) {
  std::vector<std::string> items;
  std::string cur;
  bool in_string = false;
  for (char c : body) {
    if (c == '"') in_string = !in_string;
    if (c == ',' && !in_string) {
      items.push_back(config_trim(cur));
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  const std::string last = config_trim(cur);
  if (!last.empty()) items.push_back(last);
  for (const std::string& it : items)
    if (it.empty())
      throw ConfigError("line " + std::to_string(line) + ": empty array element");
  return items;
}

}  // namespace detail

inline ConfigTree parse_config_tree(const std::string& text) {
  ConfigTree tree;
  std::string section;
  std::istringstream in(text);
  std::string raw;
  long line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::string line = detail::config_trim(detail::strip_comment(raw));
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        throw ConfigError("line " + std::to_string(line_no) + ": unterminated section header");
      section = detail::config_trim(line.substr(1, line.size() - 2));
      if (!detail::valid_key(section))
        throw ConfigError("line " + std::to_string(line_no) + ": bad section name '" +
                          section + "'");
      tree[section];
      continue;
    }
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("line " + std::to_string(line_no) + ": expected key = value");
    const std::string key = detail::config_trim(line.substr(0, eq));
    const std::string value = detail::config_trim(line.substr(eq + 1));
    if (!detail::valid_key(key))
      throw ConfigError("line " + std::to_string(line_no) + ": bad key '" + key + "'");
    if (value.empty())
      throw ConfigError("line " + std::to_string(line_no) + ": missing value for '" + key +
                        "'");
    if (tree[section].count(key))
      throw ConfigError("line " + std::to_string(line_no) + ": duplicate key '" + key + "'");

    ConfigValue v;
    if (value.front() == '[') {
      if (value.back() != ']')
        throw ConfigError("line " + std::to_string(line_no) +
                          ": arrays must close on the same line");
      const auto items =
          detail::split_array_items(value.substr(1, value.size() - 2), line_no);
      v.line = line_no;
      bool any_string = false, any_number = false;
      for (const std::string& it : items) {
        const ConfigValue el = detail::parse_scalar(it, line_no);
        if (el.type == ConfigValue::Type::kString) {
          any_string = true;
          v.strs.push_back(el.str);
        } else if (el.type == ConfigValue::Type::kNumber) {
          any_number = true;
          v.nums.push_back(el.num);
        } else {
          throw ConfigError("line " + std::to_string(line_no) +
                            ": arrays may hold numbers or strings only");
        }
      }
      if (any_string && any_number)
        throw ConfigError("line " + std::to_string(line_no) + ": mixed array element types");
      v.type = any_string ? ConfigValue::Type::kStrings : ConfigValue::Type::kNumbers;
    } else {
      v = detail::parse_scalar(value, line_no);
    }
    tree[section][key] = std::move(v);
  }
  return tree;
}

// ---- typed access with unknown-key detection ----

class ConfigReader {
 public:
  explicit ConfigReader(ConfigTree tree) : tree_(std::move(tree)) {}

  bool has_section(const std::string& section) const { return tree_.count(section) > 0; }

  bool has(const std::string& section, const std::string& key) const {
    const auto s = tree_.find(section);
    return s != tree_.end() && s->second.count(key) > 0;
  }

  std::string get_string(const std::string& section, const std::string& key,
                         const std::string& fallback) const {
    const ConfigValue* v = find(section, key);
    if (v == nullptr) return fallback;
    if (v->type != ConfigValue::Type::kString) throw type_error(section, key, *v, "a string");
    return v->str;
  }

  double get_double(const std::string& section, const std::string& key,
                    double fallback) const {
    const ConfigValue* v = find(section, key);
    if (v == nullptr) return fallback;
    if (v->type != ConfigValue::Type::kNumber) throw type_error(section, key, *v, "a number");
    return v->num;
  }

  long long get_int(const std::string& section, const std::string& key,
                    long long fallback) const {
    const ConfigValue* v = find(section, key);
    if (v == nullptr) return fallback;
    if (v->type != ConfigValue::Type::kNumber || std::floor(v->num) != v->num ||
        std::abs(v->num) > 9.0e15)
      throw type_error(section, key, *v, "an integer");
    return static_cast<long long>(v->num);
  }

  std::size_t get_size(const std::string& section, const std::string& key,
                       std::size_t fallback) const {
    const long long raw = get_int(section, key, static_cast<long long>(fallback));
    if (raw < 0)
      throw ConfigError(field_name(section, key) + " must be non-negative");
    return static_cast<std::size_t>(raw);
  }

  std::vector<long long> get_int_array(const std::string& section, const std::string& key,
                                       const std::vector<long long>& fallback) const {
    const ConfigValue* v = find(section, key);
    if (v == nullptr) return fallback;
    if (v->type != ConfigValue::Type::kNumbers)
      throw type_error(section, key, *v, "an integer array");
    std::vector<long long> out;
    for (double d : v->nums) {
      if (std::floor(d) != d || std::abs(d) > 9.0e15)
        throw type_error(section, key, *v, "an integer array");
      out.push_back(static_cast<long long>(d));
    }
    return out;
  }

  std::vector<std::string> get_string_array(const std::string& section,
                                            const std::string& key,
                                            const std::vector<std::string>& fallback) const {
    const ConfigValue* v = find(section, key);
    if (v == nullptr) return fallback;
    if (v->type != ConfigValue::Type::kStrings)
      throw type_error(section, key, *v, "a string array");
    return v->strs;
  }

  // Every key must have been read by now; leftovers are treated as typos.
  void reject_unknown() const {
    for (const auto& [section, keys] : tree_)
      for (const auto& [key, v] : keys)
        if (!v.used)
          throw ConfigError("line " + std::to_string(v.line) + ": unknown key '" +
                            field_name(section, key) + "'");
  }

  static std::string field_name(const std::string& section, const std::string& key) {
    return section.empty() ? key : section + "." + key;
  }

 private:
  const ConfigValue* find(const std::string& section, const std::string& key) const {
    const auto s = tree_.find(section);
    if (s == tree_.end()) return nullptr;
    const auto k = s->second.find(key);
    if (k == s->second.end()) return nullptr;
    k->second.used = true;
    return &k->second;
  }

  ConfigError type_error(const std::string& section, const std::string& key,
                         const ConfigValue& v, const std::string& want) const {
    return ConfigError("line " + std::to_string(v.line) + ": " + field_name(section, key) +
                       " must be " + want);
  }

  ConfigTree tree_;
};

// ---- experiment configuration ----

enum class ExperimentKind : std::uint8_t {
  kToy,
  kTrain,
  kEval,
  kAblateHead,
  kSweepK,
  kJointAcc,
  kCorrelate
};

inline const char* experiment_kind_name(ExperimentKind k) {
  switch (k) {
    case ExperimentKind::kToy: return "toy";
    case ExperimentKind::kTrain: return "train";
    case ExperimentKind::kEval: return "eval";
    case ExperimentKind::kAblateHead: return "ablate-head";
    case ExperimentKind::kSweepK: return "sweep-k";
    case ExperimentKind::kJointAcc: return "joint-acc";
    case ExperimentKind::kCorrelate: return "correlate";
  }
  return "?";
}

inline ExperimentKind experiment_kind_from_string(const std::string& s) {
  for (ExperimentKind k :
       {ExperimentKind::kToy, ExperimentKind::kTrain, ExperimentKind::kEval,
        ExperimentKind::kAblateHead, ExperimentKind::kSweepK, ExperimentKind::kJointAcc,
        ExperimentKind::kCorrelate})
    if (s == experiment_kind_name(k)) return k;
  throw ConfigError("unknown experiment kind '" + s + "'");
}

struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::kToy;
  std::uint64_t seed = 1;
  std::string out_dir = "results";

  ToyConfig toy;

  UniverseConfig universe;

  int way = defaults::kWay;
  int shot = defaults::kShot;
  int query = defaults::kQueryPerClass;

  std::vector<std::size_t> hidden{defaults::kHiddenWidth};

  bool has_algorithm = false;
  Method method = Method::kReptile;
  double inner_lr = defaults::kInnerLr;
  std::size_t inner_steps = defaults::kInnerSteps;
  double outer_lr = defaults::kReptileOuterLr;
  std::size_t meta_batch = defaults::kMetaBatch;
  std::size_t inner_batch = defaults::kInnerBatch;

  std::size_t iterations = defaults::kMetaIterations;
  std::size_t eval_every = defaults::kEvalEvery;
  std::size_t finetune_batch = defaults::kFinetuneBatch;
  std::size_t val_episodes = defaults::kValEpisodes;

  std::size_t eval_steps = defaults::kEvalSteps;
  double eval_lr = defaults::kEvalLr;
  std::size_t eval_episodes = defaults::kTestEpisodes;
  int eval_shot = defaults::kShot;
  std::string eval_checkpoint;

  std::size_t ablation_episodes = defaults::kAblationEpisodes;
  std::size_t ablation_steps = defaults::kAblationSteps;
  double ablation_lr = defaults::kAblationLr;
  int ablation_shot = defaults::kAblationShot;
  std::string ablation_checkpoint;

  std::vector<Method> sweep_methods{Method::kReptile, Method::kFomaml};
  std::vector<int> sweep_k{1, 5, 25};
  std::size_t sweep_seeds = defaults::kSweepSeeds;

  JointConfig joint;
  std::string joint_checkpoint;

  std::vector<Method> study_methods{Method::kFinetune, Method::kReptile, Method::kFomaml};
  std::vector<std::size_t> study_capacities{16, 32, 64};
  std::size_t study_seeds = defaults::kStudySeeds;
};

namespace detail {

inline std::vector<Method> methods_from_names(const std::vector<std::string>& names,
                                              const std::string& field) {
  std::vector<Method> out;
  for (const std::string& n : names) {
    try {
      out.push_back(method_from_string(n));
    } catch (const ValueError& e) {
      throw ConfigError(field + ": " + e.what());
    }
  }
  if (out.empty()) throw ConfigError(field + " must list at least one method");
  return out;
}

}  // namespace detail

inline void validate_config(const ExperimentConfig& c) {
  const auto need = [&](bool ok, const std::string& why) {
    if (!ok) throw ConfigError(why);
  };
  need(c.way >= 2, "episodes.way must be >= 2");
  need(c.shot >= 1 && c.query >= 1, "episodes.shot and episodes.query must be >= 1");
  need(!c.hidden.empty(), "model.hidden must list at least one width");
  need(c.iterations >= 1, "train.iterations must be >= 1");
  need(c.eval_every >= 1, "train.eval_every must be >= 1");
  need(c.toy.init_count >= 2, "toy.init_count must be >= 2");
  need(c.toy.init_hi > c.toy.init_lo, "toy.init_hi must exceed toy.init_lo");
  need(c.toy.bins >= 1, "toy.bins must be >= 1");
  need(c.toy.inner_steps >= 1, "toy.inner_steps must be >= 1");

  switch (c.kind) {
    case ExperimentKind::kTrain:
      need(c.has_algorithm, "kind 'train' requires the algorithm section");
      break;
    case ExperimentKind::kEval:
      need(!c.eval_checkpoint.empty(), "kind 'eval' requires eval.checkpoint");
      break;
    case ExperimentKind::kAblateHead:
      need(c.has_algorithm, "kind 'ablate-head' requires the algorithm section");
      break;
    case ExperimentKind::kJointAcc:
      need(!c.joint_checkpoint.empty() || c.has_algorithm,
           "kind 'joint-acc' requires joint.checkpoint or the algorithm section");
      break;
    default:
      break;
  }
}

inline ExperimentConfig config_from_tree(ConfigTree tree) {
  ConfigReader r(std::move(tree));
  ExperimentConfig c;

  const std::string kind = r.get_string("", "kind", "toy");
  c.kind = experiment_kind_from_string(kind);
  c.seed = static_cast<std::uint64_t>(r.get_int("", "seed", 1));
  c.out_dir = r.get_string("", "out_dir", "results");

  // [toy]
  {
    const std::string scen = r.get_string("toy", "scenario", "a");
    try {
      c.toy.scenario = scenario_from_string(scen);
    } catch (const ValueError& e) {
      throw ConfigError(std::string("toy.scenario: ") + e.what());
    }
    c.toy.inner_steps = r.get_size("toy", "inner_steps", defaults::kToyInnerSteps);
    c.toy.meta_iterations = r.get_size("toy", "meta_iterations", defaults::kToyMetaIterations);
    c.toy.init_count = r.get_size("toy", "init_count", defaults::kToyInitCount);
    c.toy.init_lo = r.get_double("toy", "init_lo", defaults::kToyInitLo);
    c.toy.init_hi = r.get_double("toy", "init_hi", defaults::kToyInitHi);
    c.toy.divergence_cutoff =
        r.get_double("toy", "divergence_cutoff", defaults::kToyDivergenceCutoff);
    c.toy.bins = r.get_size("toy", "bins", defaults::kToyBins);
    c.toy.rates.finetune_lr = r.get_double("toy", "finetune_lr", defaults::kToyFinetuneLr);
    c.toy.rates.reptile_inner_lr =
        r.get_double("toy", "reptile_inner_lr", defaults::kToyReptileInnerLr);
    c.toy.rates.reptile_outer_lr =
        r.get_double("toy", "reptile_outer_lr", defaults::kToyReptileOuterLr);
    c.toy.rates.fomaml_inner_lr =
        r.get_double("toy", "fomaml_inner_lr", defaults::kToyFomamlInnerLr);
    c.toy.rates.fomaml_outer_lr =
        r.get_double("toy", "fomaml_outer_lr", defaults::kToyFomamlOuterLr);
  }

  // [universe]
  {
    c.universe.classes = r.get_size("universe", "classes", defaults::kUniverseClasses);
    c.universe.dim = r.get_size("universe", "dim", defaults::kUniverseDim);
    c.universe.train_fraction =
        r.get_double("universe", "train_fraction", defaults::kTrainFraction);
    c.universe.val_fraction = r.get_double("universe", "val_fraction", defaults::kValFraction);
    c.universe.test_fraction =
        r.get_double("universe", "test_fraction", defaults::kTestFraction);
    c.universe.noise_scale = r.get_double("universe", "noise_scale", defaults::kNoiseScale);
    c.universe.seed = static_cast<std::uint64_t>(
        r.get_int("universe", "seed", static_cast<long long>(defaults::kUniverseSeed)));
    c.universe.shift_seed = static_cast<std::uint64_t>(
        r.get_int("universe", "shift_seed", static_cast<long long>(defaults::kShiftSeed)));
    c.universe.shift_translation =
        r.get_double("universe", "shift_translation", defaults::kShiftTranslation);
  }

  // [episodes]
  c.way = static_cast<int>(r.get_int("episodes", "way", defaults::kWay));
  c.shot = static_cast<int>(r.get_int("episodes", "shot", defaults::kShot));
  c.query = static_cast<int>(r.get_int("episodes", "query", defaults::kQueryPerClass));

  // [model]
  {
    std::vector<long long> hidden_default;
    for (std::size_t h : c.hidden) hidden_default.push_back(static_cast<long long>(h));
    const auto widths = r.get_int_array("model", "hidden", hidden_default);
    c.hidden.clear();
    for (long long w : widths) {
      if (w < 1) throw ConfigError("model.hidden widths must be >= 1");
      c.hidden.push_back(static_cast<std::size_t>(w));
    }
  }

  // [algorithm]
  c.has_algorithm = r.has_section("algorithm");
  if (c.has_algorithm) {
    const std::string m = r.get_string("algorithm", "method", "reptile");
    try {
      c.method = method_from_string(m);
    } catch (const ValueError& e) {
      throw ConfigError(std::string("algorithm.method: ") + e.what());
    }
    const double default_inner =
        c.method == Method::kFinetune ? defaults::kFinetuneLr : defaults::kInnerLr;
    const double default_outer = c.method == Method::kFomaml ? defaults::kFomamlOuterLr
                                                             : defaults::kReptileOuterLr;
    const std::size_t default_steps =
        c.method == Method::kFinetune ? 1 : defaults::kInnerSteps;
    c.inner_lr = r.get_double("algorithm", "inner_lr", default_inner);
    c.inner_steps = r.get_size("algorithm", "inner_steps", default_steps);
    c.outer_lr = r.get_double("algorithm", "outer_lr", default_outer);
    c.meta_batch = r.get_size("algorithm", "meta_batch", defaults::kMetaBatch);
    c.inner_batch = r.get_size("algorithm", "inner_batch", defaults::kInnerBatch);
  }

  // [train]
  c.iterations = r.get_size("train", "iterations", defaults::kMetaIterations);
  c.eval_every = r.get_size("train", "eval_every", defaults::kEvalEvery);
  c.finetune_batch = r.get_size("train", "finetune_batch", defaults::kFinetuneBatch);
  c.val_episodes = r.get_size("train", "val_episodes", defaults::kValEpisodes);

  // [eval]
  c.eval_steps = r.get_size("eval", "steps", defaults::kEvalSteps);
  c.eval_lr = r.get_double("eval", "lr", defaults::kEvalLr);
  c.eval_episodes = r.get_size("eval", "episodes", defaults::kTestEpisodes);
  c.eval_shot = static_cast<int>(r.get_int("eval", "shot", defaults::kShot));
  c.eval_checkpoint = r.get_string("eval", "checkpoint", "");

  // [ablation]
  c.ablation_episodes = r.get_size("ablation", "episodes", defaults::kAblationEpisodes);
  c.ablation_steps = r.get_size("ablation", "steps", defaults::kAblationSteps);
  c.ablation_lr = r.get_double("ablation", "lr", defaults::kAblationLr);
  c.ablation_shot = static_cast<int>(r.get_int("ablation", "shot", defaults::kAblationShot));
  c.ablation_checkpoint = r.get_string("ablation", "checkpoint", "");

  // [sweep]
  c.sweep_methods = detail::methods_from_names(
      r.get_string_array("sweep", "methods", {"reptile", "fomaml"}), "sweep.methods");
  {
    const auto ks = r.get_int_array("sweep", "k_train", {1, 5, 25});
    c.sweep_k.clear();
    for (long long k : ks) {
      if (k < 1) throw ConfigError("sweep.k_train values must be >= 1");
      c.sweep_k.push_back(static_cast<int>(k));
    }
    if (c.sweep_k.empty()) throw ConfigError("sweep.k_train must be non-empty");
  }
  c.sweep_seeds = r.get_size("sweep", "seeds", defaults::kSweepSeeds);

  // [joint]
  c.joint.per_class = r.get_size("joint", "per_class", defaults::kJointPerClass);
  c.joint.train_fraction =
      r.get_double("joint", "train_fraction", defaults::kJointTrainFraction);
  c.joint.epochs = r.get_size("joint", "epochs", defaults::kJointEpochs);
  c.joint.lr = r.get_double("joint", "lr", defaults::kJointLr);
  c.joint_checkpoint = r.get_string("joint", "checkpoint", "");

  // [study]
  c.study_methods = detail::methods_from_names(
      r.get_string_array("study", "methods", {"finetune", "reptile", "fomaml"}),
      "study.methods");
  {
    const auto caps = r.get_int_array("study", "capacities", {16, 32, 64});
    c.study_capacities.clear();
    for (long long cap : caps) {
      if (cap < 1) throw ConfigError("study.capacities must be >= 1");
      c.study_capacities.push_back(static_cast<std::size_t>(cap));
    }
    if (c.study_capacities.empty()) throw ConfigError("study.capacities must be non-empty");
  }
  c.study_seeds = r.get_size("study", "seeds", defaults::kStudySeeds);

  r.reject_unknown();
  validate_config(c);
  return c;
}

inline ExperimentConfig parse_config_text(const std::string& text) {
  return config_from_tree(parse_config_tree(text));
}

inline ExperimentConfig parse_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot open config '" + path + "'");
  std::ostringstream ss;
  ss << f.rdbuf();
  try {
    return parse_config_text(ss.str());
  } catch (const ConfigError& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

// Full round-trip serialization: every field is written out, so
// parse(serialize(c)) reproduces c exactly.
inline std::string serialize_config(const ExperimentConfig& c) {
  std::ostringstream out;
  const auto num = [](double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return std::string(buf);
  };
  out << "kind = \"" << experiment_kind_name(c.kind) << "\"\n";
  out << "seed = " << c.seed << "\n";
  out << "out_dir = \"" << c.out_dir << "\"\n";

  out << "\n[toy]\n";
  out << "scenario = \"" << scenario_name(c.toy.scenario) << "\"\n";
  out << "inner_steps = " << c.toy.inner_steps << "\n";
  out << "meta_iterations = " << c.toy.meta_iterations << "\n";
  out << "init_count = " << c.toy.init_count << "\n";
  out << "init_lo = " << num(c.toy.init_lo) << "\n";
  out << "init_hi = " << num(c.toy.init_hi) << "\n";
  out << "divergence_cutoff = " << num(c.toy.divergence_cutoff) << "\n";
  out << "bins = " << c.toy.bins << "\n";
  out << "finetune_lr = " << num(c.toy.rates.finetune_lr) << "\n";
  out << "reptile_inner_lr = " << num(c.toy.rates.reptile_inner_lr) << "\n";
  out << "reptile_outer_lr = " << num(c.toy.rates.reptile_outer_lr) << "\n";
  out << "fomaml_inner_lr = " << num(c.toy.rates.fomaml_inner_lr) << "\n";
  out << "fomaml_outer_lr = " << num(c.toy.rates.fomaml_outer_lr) << "\n";

  out << "\n[universe]\n";
  out << "classes = " << c.universe.classes << "\n";
  out << "dim = " << c.universe.dim << "\n";
  out << "train_fraction = " << num(c.universe.train_fraction) << "\n";
  out << "val_fraction = " << num(c.universe.val_fraction) << "\n";
  out << "test_fraction = " << num(c.universe.test_fraction) << "\n";
  out << "noise_scale = " << num(c.universe.noise_scale) << "\n";
  out << "seed = " << c.universe.seed << "\n";
  out << "shift_seed = " << c.universe.shift_seed << "\n";
  out << "shift_translation = " << num(c.universe.shift_translation) << "\n";

  out << "\n[episodes]\n";
  out << "way = " << c.way << "\n";
  out << "shot = " << c.shot << "\n";
  out << "query = " << c.query << "\n";

  out << "\n[model]\n";
  out << "hidden = [";
  for (std::size_t i = 0; i < c.hidden.size(); ++i) out << (i ? ", " : "") << c.hidden[i];
  out << "]\n";

  if (c.has_algorithm) {
    out << "\n[algorithm]\n";
    out << "method = \"" << method_name(c.method) << "\"\n";
    out << "inner_lr = " << num(c.inner_lr) << "\n";
    out << "inner_steps = " << c.inner_steps << "\n";
    out << "outer_lr = " << num(c.outer_lr) << "\n";
    out << "meta_batch = " << c.meta_batch << "\n";
    out << "inner_batch = " << c.inner_batch << "\n";
  }

  out << "\n[train]\n";
  out << "iterations = " << c.iterations << "\n";
  out << "eval_every = " << c.eval_every << "\n";
  out << "finetune_batch = " << c.finetune_batch << "\n";
  out << "val_episodes = " << c.val_episodes << "\n";

  out << "\n[eval]\n";
  out << "steps = " << c.eval_steps << "\n";
  out << "lr = " << num(c.eval_lr) << "\n";
  out << "episodes = " << c.eval_episodes << "\n";
  out << "shot = " << c.eval_shot << "\n";
  if (!c.eval_checkpoint.empty()) out << "checkpoint = \"" << c.eval_checkpoint << "\"\n";

  out << "\n[ablation]\n";
  out << "episodes = " << c.ablation_episodes << "\n";
  out << "steps = " << c.ablation_steps << "\n";
  out << "lr = " << num(c.ablation_lr) << "\n";
  out << "shot = " << c.ablation_shot << "\n";
  if (!c.ablation_checkpoint.empty())
    out << "checkpoint = \"" << c.ablation_checkpoint << "\"\n";

  out << "\n[sweep]\n";
  out << "methods = [";
  for (std::size_t i = 0; i < c.sweep_methods.size(); ++i)
    out << (i ? ", " : "") << "\"" << method_name(c.sweep_methods[i]) << "\"";
  out << "]\n";
  out << "k_train = [";
  for (std::size_t i = 0; i < c.sweep_k.size(); ++i) out << (i ? ", " : "") << c.sweep_k[i];
  out << "]\n";
  out << "seeds = " << c.sweep_seeds << "\n";

  out << "\n[joint]\n";
  out << "per_class = " << c.joint.per_class << "\n";
  out << "train_fraction = " << num(c.joint.train_fraction) << "\n";
  out << "epochs = " << c.joint.epochs << "\n";
  out << "lr = " << num(c.joint.lr) << "\n";
  if (!c.joint_checkpoint.empty()) out << "checkpoint = \"" << c.joint_checkpoint << "\"\n";

  out << "\n[study]\n";
  out << "methods = [";
  for (std::size_t i = 0; i < c.study_methods.size(); ++i)
    out << (i ? ", " : "") << "\"" << method_name(c.study_methods[i]) << "\"";
  out << "]\n";
  out << "capacities = [";
  for (std::size_t i = 0; i < c.study_capacities.size(); ++i)
    out << (i ? ", " : "") << c.study_capacities[i];
  out << "]\n";
  out << "seeds = " << c.study_seeds << "\n";
  return out.str();
}

}  // namespace metagrad
