#include <cmath>
#include <sstream>

#include "json.hpp"
#include "veal/dualbranch/lexical_prior.hpp"
#include "veal/errors.hpp"
#include "veal/numkit/random.hpp"
#include "veal/trainkit/trainkit.hpp"

namespace veal::trainkit {

namespace {

std::string config_echo(const DualBranchConfig& m, const TrainConfig& t) {
  nlohmann::ordered_json j;
  j["model"] = {{"input_dim", m.input_dim},       {"model_dim", m.model_dim},
                {"low_res_tokens", m.low_res_tokens}, {"high_res_patches", m.high_res_patches},
                {"num_queries", m.num_queries},   {"lm_layers", m.lm_layers},
                {"lm_heads", m.lm_heads},         {"ffn_dim", m.ffn_dim},
                {"vocab_size", m.vocab_size},     {"max_seq_len", m.max_seq_len},
                {"max_answer_len", m.max_answer_len}, {"num_entities", m.num_entities},
                {"num_categories", m.num_categories}, {"use_positional", m.use_positional},
                {"high_res_branch", m.high_res_branch}, {"seed", m.seed}};
  j["train"] = {{"batch_size", t.batch_size},
                {"peak_lr", t.peak_lr},
                {"warmup_ratio", t.warmup_ratio},
                {"weight_decay", t.weight_decay},
                {"epochs", t.epochs},
                {"betas", {t.beta1, t.beta2}},
                {"eps", t.eps},
                {"seed", t.seed},
                {"lambda_g", t.weights.lambda_g},
                {"mu_e", t.weights.mu_e},
                {"mu_h", t.weights.mu_h},
                {"theta", t.weights.theta},
                {"eval_every", t.eval_every},
                {"freeze_entity_table", t.freeze_entity_table},
                {"freeze_token_embedding", t.freeze_token_embedding}};
  return j.dump();
}

std::string describe(const BatchLosses& l) {
  std::ostringstream os;
  os.precision(17);
  os << "L_g=" << l.lg.item();
  if (l.le) os << " L_e=" << l.le->item();
  if (l.lh) os << " L_h=" << l.lh->item();
  os << " total=" << l.total.item();
  return os.str();
}

}  // namespace

DualBranchParams initial_params(const DualBranchConfig& model_config,
                                const synthland::Dataset& dataset, bool lexical_prior,
                                const dualbranch::LexicalPriorOptions& prior) {
  DualBranchParams p = dualbranch::init_params(model_config);
  if (lexical_prior) dualbranch::apply_lexical_prior(p, model_config, dataset, prior);
  return p;
}

TrainResult train(const DualBranchParams& initial, const DualBranchConfig& model_config,
                  const synthland::Dataset& dataset, std::span<const std::size_t> train_indices,
                  const TrainConfig& config, const AblationFlags& flags, const TrainHooks& hooks) {
  config.validate();
  flags.validate();
  model_config.validate();
  if (model_config.high_res_branch != flags.hr_branch) {
    throw UsageError("model high_res_branch disagrees with the ablation flags");
  }
  if (train_indices.empty()) throw EmptyInputError("training split is empty");

  TrainResult result;
  result.params = dualbranch::clone_params(initial);
  DualBranchParams& params = result.params;
  if (config.freeze_entity_table) params.entity_table.set_requires_grad(false);
  if (config.freeze_token_embedding) params.tok_emb.set_requires_grad(false);

  std::vector<Tensor> tensors;
  for (const auto& np : params.named()) tensors.push_back(np.tensor);

  RunLog& log = result.log;
  log.seed = config.seed;
  log.ablation = ablation_name(flags);
  log.config_json = config_echo(model_config, config);

  const std::size_t per_epoch = steps_per_epoch(train_indices.size(), config.batch_size);
  const std::size_t total_steps = per_epoch * config.epochs;
  AdamWState state;
  std::vector<std::size_t> order(train_indices.begin(), train_indices.end());
  std::size_t step = 0;
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    numkit::Rng rng(numkit::mix_seed(config.seed, epoch));
    rng.shuffle(order);
    for (std::size_t b = 0; b < per_epoch; ++b, ++step) {
      const std::size_t begin = b * config.batch_size;
      const std::size_t end = std::min(order.size(), begin + config.batch_size);
      std::span<const std::size_t> batch(order.data() + begin, end - begin);

      for (auto& t : tensors) t.zero_grad();
      BatchLosses losses;
      try {
        losses = batch_loss(params, model_config, dataset, batch, flags, config.weights);
      } catch (const NumericError& e) {
        throw NumericError("non-finite loss at step " + std::to_string(step) + ": " + e.what());
      }
      if (!std::isfinite(losses.total.item())) {
        throw NumericError("non-finite loss at step " + std::to_string(step) + ": " +
                           describe(losses));
      }
      losses.total.backward();
      const double lr = cosine_lr(step, total_steps, config);
      adamw_step(tensors, state, lr, config, step);

      StepRecord rec;
      rec.step = step;
      rec.epoch = epoch;
      rec.batch = batch.size();
      rec.lr = lr;
      rec.lg = losses.lg.item();
      if (losses.le) rec.le = losses.le->item();
      if (losses.lh) rec.lh = losses.lh->item();
      rec.total = losses.total.item();
      log.steps.push_back(rec);
      if (hooks.on_step) hooks.on_step(rec);
      if (config.eval_every > 0 && hooks.evaluate && (step + 1) % config.eval_every == 0) {
        log.evals.push_back({step + 1, hooks.evaluate(params)});
      }
    }
    if (hooks.on_epoch_end) hooks.on_epoch_end(epoch, params);
  }
  for (auto& t : tensors) t.zero_grad();
  // Hand back parameters in their trainable state.
  params.entity_table.set_requires_grad(true);
  params.tok_emb.set_requires_grad(true);
  return result;
}

}  // namespace veal::trainkit
