#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "veal/dualbranch/lexical_prior.hpp"
#include "veal/dualbranch/model.hpp"
#include "veal/judgekit/judgekit.hpp"
#include "veal/objectives/objectives.hpp"

namespace veal::trainkit {

using dualbranch::DualBranchConfig;
using dualbranch::DualBranchParams;
using numkit::Tensor;

struct TrainConfig {
  std::size_t batch_size = 16;
  double peak_lr = 1e-3;
  double warmup_ratio = 0.03;
  double weight_decay = 0.0;
  std::size_t epochs = 2;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::uint64_t seed = 1;
  objectives::LossWeights weights;
  std::size_t eval_every = 0;  // steps; 0 disables periodic evaluation
  bool freeze_entity_table = true;
  bool freeze_token_embedding = true;

  void validate() const;
};

// Which parts of EECA are active. Le and Lh both read the high-res tokens.
struct AblationFlags {
  bool hr_branch = true;
  bool entity_loss = true;
  bool hierarchical_loss = true;

  // Throws UsageError for a loss enabled without the high-res branch.
  void validate() const;
  bool operator==(const AblationFlags&) const = default;
};

// "lm_only", "hr", "hr+le", "hr+lh", "hr+le+lh" / "full". Components may be
// given in any order; "le" without "hr" is rejected by validate().
AblationFlags parse_ablation(const std::string& text);
std::string ablation_name(const AblationFlags& flags);

// --- optimizer --------------------------------------------------------------

struct AdamWState {
  std::vector<std::vector<double>> m, v;
  std::size_t t = 0;
};

// One AdamW update of every tensor that requires grad and holds one:
//   p -= lr * wd * p + lr * m_hat / (sqrt(v_hat) + eps)
// The decay term is skipped when wd == 0. Throws NumericError naming `step`
// on a non-finite gradient, before touching any parameter.
void adamw_step(std::span<Tensor> params, AdamWState& state, double lr, const TrainConfig& config,
                std::size_t step = 0);

// Linear warmup from 0 over ceil(warmup_ratio * total) steps, then cosine
// decay to 0 at total_steps.
double cosine_lr(std::size_t step, std::size_t total_steps, const TrainConfig& config);

// --- losses for one batch ---------------------------------------------------

struct BatchLosses {
  Tensor total;
  Tensor lg;
  std::optional<Tensor> le;
  std::optional<Tensor> lh;
};

BatchLosses batch_loss(const DualBranchParams& params, const DualBranchConfig& model_config,
                       const synthland::Dataset& dataset, std::span<const std::size_t> indices,
                       const AblationFlags& flags, const objectives::LossWeights& weights,
                       std::vector<std::string>* warnings = nullptr);

// --- run log ----------------------------------------------------------------

struct StepRecord {
  std::size_t step = 0;
  std::size_t epoch = 0;
  std::size_t batch = 0;
  double lr = 0.0;
  double lg = 0.0;
  std::optional<double> le;
  std::optional<double> lh;
  double total = 0.0;
};

struct EvalSnapshot {
  std::size_t step = 0;
  judgekit::EvalReport report;
};

struct RunLog {
  std::uint64_t seed = 0;
  std::string ablation;
  std::string config_json;  // echo of the model and train configs
  std::string timestamp;    // metadata only, never hashed
  std::vector<StepRecord> steps;
  std::vector<EvalSnapshot> evals;
};

// One JSON object per line: a header, then step and eval events. Only the
// header's "meta" object carries the timestamp; with include_meta=false it is
// omitted, giving the bytes that determinism checks compare.
std::string runlog_jsonl(const RunLog& log, bool include_meta = true);
// Drops every "meta" field from each line of a runlog.jsonl text.
std::string strip_meta(const std::string& jsonl);

// --- training ---------------------------------------------------------------

struct TrainHooks {
  std::function<void(std::size_t epoch, const DualBranchParams&)> on_epoch_end;
  std::function<judgekit::EvalReport(const DualBranchParams&)> evaluate;
  std::function<void(const StepRecord&)> on_step;
};

struct TrainResult {
  DualBranchParams params;
  RunLog log;
};

// Fresh parameters for a dataset: init_params plus, when requested, the
// lexical prior on the token embedding and entity table.
DualBranchParams initial_params(const DualBranchConfig& model_config,
                                const synthland::Dataset& dataset, bool lexical_prior = true,
                                const dualbranch::LexicalPriorOptions& prior = {});

// Trains a copy of `initial` on dataset.records[train_indices]. Each epoch
// shuffles the indices with a seed derived from (config.seed, epoch); the
// last batch may be short. model_config.high_res_branch must agree with
// flags.hr_branch. Throws NumericError with the component losses when the
// total goes non-finite.
TrainResult train(const DualBranchParams& initial, const DualBranchConfig& model_config,
                  const synthland::Dataset& dataset, std::span<const std::size_t> train_indices,
                  const TrainConfig& config, const AblationFlags& flags,
                  const TrainHooks& hooks = {});

// Warm start, the stand-in for a pretrained LLM that already knows every
// landmark name and its entities. Trains with the HR branch and L_g only on
// two "text images" per landmark:
//   - every patch equals normalize(t_i + entity_weight * sum_j a_ij);
//   - low-res patches are random unit noise and the high-res carrier patches
//     hold the clean entity vectors a_ij (other patches are noise).
// Records [0, M) are the first kind, [M, 2M) the second.
struct WarmStartConfig {
  std::size_t epochs = 100;
  double peak_lr = 1e-2;
  std::size_t batch_size = 8;

  void validate() const;
};

synthland::Dataset text_image_dataset(const synthland::Dataset& dataset, double entity_weight,
                                      std::uint64_t seed);

// Returns warm-started parameters; 0 epochs returns a copy of `initial`.
DualBranchParams warm_start(const DualBranchParams& initial, const DualBranchConfig& model_config,
                            const synthland::Dataset& dataset, const WarmStartConfig& config,
                            double entity_weight, std::uint64_t seed);

std::size_t steps_per_epoch(std::size_t records, std::size_t batch_size);

}  // namespace veal::trainkit
