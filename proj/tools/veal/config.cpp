#include "config.hpp"

#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

#include "json.hpp"
#include "veal/errors.hpp"

namespace veal::cli {

using nlohmann::json;

namespace {

// Reads the fields of one JSON object, rejecting anything not consumed.
class Section {
 public:
  Section(const json& j, std::string name) : j_(j), name_(std::move(name)) {
    if (!j_.is_object()) throw ConfigError("section '" + name_ + "': expected an object");
  }

  template <typename T>
  void get(const char* field, T& out) {
    seen_.insert(field);
    if (!j_.contains(field)) return;
    try {
      out = j_.at(field).get<T>();
    } catch (const json::exception&) {
      throw ConfigError("section '" + name_ + "': field '" + field + "' has the wrong type");
    }
  }

  bool has(const char* field) const { return j_.contains(field); }

  const json& child(const char* field) {
    seen_.insert(field);
    return j_.at(field);
  }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (!seen_.count(it.key())) {
        throw ConfigError("section '" + name_ + "': unknown field '" + it.key() + "'");
      }
    }
  }

 private:
  const json& j_;
  std::string name_;
  std::set<std::string> seen_;
};

template <typename F>
void in_section(const std::string& name, F&& f) {
  try {
    f();
  } catch (const ConfigError& e) {
    const std::string msg = e.what();
    if (msg.rfind("section '", 0) == 0) throw;
    throw ConfigError("section '" + name + "': " + msg);
  }
}

}  // namespace

void ExperimentConfig::validate() const {
  if (!(test_fraction >= 0.0 && test_fraction < 1.0)) {
    throw ConfigError("field 'test_fraction': must lie in [0, 1)");
  }
  in_section("synth", [&] { synth.validate(); });
  in_section("train", [&] {
    train.validate();
    warm_start.validate();
  });
  in_section("judge", [&] {
    if (judge.k_strong < 1 || judge.k_strong > eval.n) {
      throw ConfigError("field 'k_strong': must lie in [1, n]");
    }
    if (eval.n < 1) throw ConfigError("field 'n': must be at least 1");
    if (judge.mode == judgekit::JudgeMode::kExternal && judge.external.endpoint.empty()) {
      throw ConfigError("field 'endpoint': required when mode is external");
    }
  });
}

ExperimentConfig default_config() { return ExperimentConfig{}; }

ExperimentConfig parse_config(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  ExperimentConfig c;
  Section top(doc, "top level");
  top.get("seed", c.seed);
  top.get("out", c.out);
  top.get("test_fraction", c.test_fraction);
  c.synth.seed = c.model.seed = c.train.seed = c.seed;

  if (top.has("synth")) {
    Section s(top.child("synth"), "synth");
    auto& y = c.synth;
    s.get("num_landmarks", y.num_landmarks);
    s.get("num_categories", y.num_categories);
    s.get("entities_per_landmark", y.entities_per_landmark);
    s.get("embed_dim", y.embed_dim);
    s.get("lr_patches", y.lr_patches);
    s.get("hr_patches", y.hr_patches);
    std::vector<double> range = {y.alpha_min, y.alpha_max};
    s.get("alignment_range", range);
    if (range.size() != 2) throw ConfigError("section 'synth': field 'alignment_range' needs 2 values");
    y.alpha_min = range[0];
    y.alpha_max = range[1];
    s.get("noise_sigma", y.noise_sigma);
    s.get("category_weight", y.category_weight);
    s.get("name_tokens_per_landmark", y.name_tokens_per_landmark);
    s.get("vocab_size", y.vocab_size);
    s.get("seed", y.seed);
    s.finish();
  }
  if (top.has("model")) {
    Section s(top.child("model"), "model");
    auto& m = c.model;
    s.get("model_dim", m.model_dim);
    s.get("num_queries", m.num_queries);
    s.get("lm_layers", m.lm_layers);
    s.get("lm_heads", m.lm_heads);
    s.get("ffn_dim", m.ffn_dim);
    s.get("max_seq_len", m.max_seq_len);
    s.get("max_answer_len", m.max_answer_len);
    s.get("use_positional", m.use_positional);
    s.get("seed", m.seed);
    s.get("lexical_prior", c.lexical_prior);
    if (s.has("prior")) {
      Section p(s.child("prior"), "model.prior");
      p.get("gain", c.prior.gain);
      p.get("slot_weight", c.prior.slot_weight);
      p.get("entity_gain", c.prior.entity_gain);
      p.get("entity_weight", c.prior.entity_weight);
      p.finish();
    }
    s.finish();
  }
  if (top.has("train")) {
    Section s(top.child("train"), "train");
    auto& t = c.train;
    s.get("batch_size", t.batch_size);
    s.get("peak_lr", t.peak_lr);
    s.get("warmup_ratio", t.warmup_ratio);
    s.get("weight_decay", t.weight_decay);
    s.get("epochs", t.epochs);
    std::vector<double> betas = {t.beta1, t.beta2};
    s.get("betas", betas);
    if (betas.size() != 2) throw ConfigError("section 'train': field 'betas' needs 2 values");
    t.beta1 = betas[0];
    t.beta2 = betas[1];
    s.get("eps", t.eps);
    s.get("seed", t.seed);
    s.get("lambda_g", t.weights.lambda_g);
    s.get("mu_e", t.weights.mu_e);
    s.get("mu_h", t.weights.mu_h);
    s.get("theta", t.weights.theta);
    s.get("eval_every", t.eval_every);
    s.get("freeze_entity_table", t.freeze_entity_table);
    s.get("freeze_token_embedding", t.freeze_token_embedding);
    if (s.has("warm_start")) {
      Section w(s.child("warm_start"), "train.warm_start");
      w.get("epochs", c.warm_start.epochs);
      w.get("peak_lr", c.warm_start.peak_lr);
      w.get("batch_size", c.warm_start.batch_size);
      w.finish();
    }
    s.finish();
  }
  if (top.has("select")) {
    const json& list = top.child("select");
    if (!list.is_array()) throw ConfigError("section 'select': expected a list");
    for (const auto& item : list) {
      Section s(item, "select");
      std::string method = "BRS";
      veknow::SelectionSpec spec;
      spec.seed = c.seed;
      s.get("method", method);
      s.get("k", spec.k);
      s.get("seed", spec.seed);
      s.finish();
      try {
        spec.method = veknow::parse_method(method);
      } catch (const UsageError& e) {
        throw ConfigError(std::string("section 'select': field 'method': ") + e.what());
      }
      c.select.push_back(spec);
    }
  }
  if (top.has("judge")) {
    Section s(top.child("judge"), "judge");
    std::string mode = "rule";
    s.get("mode", mode);
    if (mode == "rule") {
      c.judge.mode = judgekit::JudgeMode::kRule;
    } else if (mode == "external") {
      c.judge.mode = judgekit::JudgeMode::kExternal;
    } else {
      throw ConfigError("section 'judge': field 'mode': expected rule or external");
    }
    s.get("endpoint", c.judge.external.endpoint);
    s.get("k_strong", c.judge.k_strong);
    s.get("timeout_seconds", c.judge.external.timeout_seconds);
    s.get("concurrency", c.judge.external.concurrency);
    s.get("n", c.eval.n);
    s.get("sample_temp", c.eval.sample_temp);
    s.finish();
  }
  top.finish();
  c.validate();
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

void override_seed(ExperimentConfig& config, std::uint64_t seed) {
  config.seed = seed;
  config.synth.seed = seed;
  config.model.seed = seed;
  config.train.seed = seed;
  for (auto& s : config.select) s.seed = seed;
}

}  // namespace veal::cli
