#include <cmath>

#include "veal/dualbranch/model.hpp"
#include "veal/errors.hpp"
#include "veal/numkit/random.hpp"

namespace veal::dualbranch {

namespace {

void require(bool ok, const std::string& field, const std::string& what) {
  if (!ok) throw ConfigError("field '" + field + "': " + what);
}

Tensor gaussian(numkit::Rng& rng, std::size_t rows, std::size_t cols, double stddev) {
  std::vector<double> data(rows * cols);
  for (double& x : data) x = stddev * rng.normal();
  return Tensor({rows, cols}, std::move(data), true);
}

Tensor zeros(std::size_t rows, std::size_t cols) { return Tensor::zeros({rows, cols}, true); }

Tensor copy_leaf(const Tensor& t) {
  return Tensor(t.shape(), std::vector<double>(t.data().begin(), t.data().end()),
                t.requires_grad());
}

}  // namespace

void DualBranchConfig::validate() const {
  require(input_dim > 0, "input_dim", "must be positive");
  require(model_dim >= 4, "model_dim", "must be at least 4");
  require(low_res_tokens > 0, "low_res_tokens", "must be positive");
  require(high_res_patches > 0 && high_res_patches % 4 == 0, "high_res_patches",
          "must be a positive multiple of 4");
  require(num_queries >= 1, "num_queries", "must be at least 1");
  require(lm_layers >= 1 && lm_layers <= 2, "lm_layers", "must be 1 or 2");
  require(lm_heads >= 1 && lm_heads <= 2, "lm_heads", "must be 1 or 2");
  require(model_dim % lm_heads == 0, "lm_heads", "must divide model_dim");
  require(ffn_dim > 0, "ffn_dim", "must be positive");
  require(vocab_size > synthland::kNumReserved, "vocab_size", "must exceed the reserved ids");
  require(max_seq_len > visual_prefix_len(), "max_seq_len", "leaves no room for text");
  require(max_answer_len > 0, "max_answer_len", "must be positive");
  require(num_categories >= 1, "num_categories", "must be at least 1");
}

void DualBranchConfig::fit_to(const synthland::Dataset& dataset) {
  input_dim = dataset.store.dim;
  low_res_tokens = dataset.store.lr_patches;
  high_res_patches = dataset.store.hr_patches;
  vocab_size = dataset.vocab.size();
  num_entities = dataset.store.num_entities;
  num_categories = dataset.store.num_categories;
}

std::size_t DualBranchConfig::visual_prefix_len() const {
  return low_res_tokens + (high_res_branch ? num_queries : 0) + 1;
}

std::vector<NamedParam> DualBranchParams::named() const {
  std::vector<NamedParam> out = {
      {"adapter.w1", "adapter", adapter_w1},   {"adapter.b1", "adapter", adapter_b1},
      {"adapter.w2", "adapter", adapter_w2},   {"adapter.b2", "adapter", adapter_b2},
      {"resampler.queries", "resampler", queries},
      {"resampler.wq", "resampler", res_wq},   {"resampler.wk", "resampler", res_wk},
      {"resampler.wv", "resampler", res_wv},   {"resampler.wo", "resampler", res_wo},
  };
  if (res_pos.size() > 0) out.push_back({"resampler.pos", "resampler", res_pos});
  out.push_back({"entity_table", "entity_table", entity_table});
  out.push_back({"classifier.w", "classifier", cls_w});
  out.push_back({"classifier.b", "classifier", cls_b});
  out.push_back({"lm.tok_emb", "lm", tok_emb});
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const std::string p = "lm.layer" + std::to_string(l) + ".";
    const LmLayer& L = layers[l];
    out.push_back({p + "wq", "lm", L.wq});
    out.push_back({p + "wk", "lm", L.wk});
    out.push_back({p + "wv", "lm", L.wv});
    out.push_back({p + "wo", "lm", L.wo});
    out.push_back({p + "ff_w1", "lm", L.ff_w1});
    out.push_back({p + "ff_b1", "lm", L.ff_b1});
    out.push_back({p + "ff_w2", "lm", L.ff_w2});
    out.push_back({p + "ff_b2", "lm", L.ff_b2});
  }
  out.push_back({"log_temp", "log_temp", log_temp});
  return out;
}

std::size_t DualBranchParams::parameter_count() const {
  std::size_t n = 0;
  for (const auto& p : named()) n += p.tensor.size();
  return n;
}

DualBranchParams init_params(const DualBranchConfig& config) {
  config.validate();
  numkit::Rng rng(config.seed);
  const std::size_t d = config.input_dim;
  const std::size_t C = config.model_dim;
  const double in_scale = 1.0 / std::sqrt(static_cast<double>(d));
  const double c_scale = 1.0 / std::sqrt(static_cast<double>(C));

  DualBranchParams p;
  p.adapter_w1 = gaussian(rng, d, C, in_scale);
  p.adapter_b1 = zeros(1, C);
  p.adapter_w2 = gaussian(rng, C, C, c_scale);
  p.adapter_b2 = zeros(1, C);

  p.queries = gaussian(rng, config.num_queries, C, 1.0);
  p.res_wq = gaussian(rng, C, C, c_scale);
  p.res_wk = gaussian(rng, d, C, in_scale);
  p.res_wv = gaussian(rng, d, C, in_scale);
  p.res_wo = gaussian(rng, C, C, c_scale);
  // Rows of norm ~4 so keys can tell patch positions apart from the start.
  p.res_pos = config.use_positional ? gaussian(rng, config.high_res_patches, C, 4.0 * c_scale)
                                    : Tensor::zeros({0, C}, false);

  p.entity_table = gaussian(rng, std::max<std::size_t>(config.num_entities, 1), C, c_scale);
  p.cls_w = gaussian(rng, C, config.num_categories, c_scale);
  p.cls_b = zeros(1, config.num_categories);

  p.tok_emb = gaussian(rng, config.vocab_size, C, c_scale);
  const double ff_scale = 1.0 / std::sqrt(static_cast<double>(config.ffn_dim));
  for (std::size_t l = 0; l < config.lm_layers; ++l) {
    LmLayer L;
    L.wq = gaussian(rng, C, C, c_scale);
    L.wk = gaussian(rng, C, C, c_scale);
    L.wv = gaussian(rng, C, C, c_scale);
    L.wo = zeros(C, C);
    L.ff_w1 = gaussian(rng, C, config.ffn_dim, c_scale);
    L.ff_b1 = zeros(1, config.ffn_dim);
    L.ff_w2 = zeros(config.ffn_dim, C);
    L.ff_b2 = zeros(1, C);
    p.layers.push_back(std::move(L));
  }
  p.log_temp = Tensor::scalar(0.0, true);
  return p;
}

DualBranchParams clone_params(const DualBranchParams& src) {
  DualBranchParams p;
  p.adapter_w1 = copy_leaf(src.adapter_w1);
  p.adapter_b1 = copy_leaf(src.adapter_b1);
  p.adapter_w2 = copy_leaf(src.adapter_w2);
  p.adapter_b2 = copy_leaf(src.adapter_b2);
  p.queries = copy_leaf(src.queries);
  p.res_wq = copy_leaf(src.res_wq);
  p.res_wk = copy_leaf(src.res_wk);
  p.res_wv = copy_leaf(src.res_wv);
  p.res_wo = copy_leaf(src.res_wo);
  p.res_pos = copy_leaf(src.res_pos);
  p.entity_table = copy_leaf(src.entity_table);
  p.cls_w = copy_leaf(src.cls_w);
  p.cls_b = copy_leaf(src.cls_b);
  p.tok_emb = copy_leaf(src.tok_emb);
  for (const auto& L : src.layers) {
    p.layers.push_back({copy_leaf(L.wq), copy_leaf(L.wk), copy_leaf(L.wv), copy_leaf(L.wo),
                        copy_leaf(L.ff_w1), copy_leaf(L.ff_b1), copy_leaf(L.ff_w2),
                        copy_leaf(L.ff_b2)});
  }
  p.log_temp = copy_leaf(src.log_temp);
  return p;
}

}  // namespace veal::dualbranch
