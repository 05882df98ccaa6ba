#include <algorithm>
#include <set>
#include <sstream>

#include "veal/errors.hpp"
#include "veal/numkit/ops.hpp"
#include "veal/trainkit/trainkit.hpp"

namespace veal::trainkit {

void AblationFlags::validate() const {
  if (entity_loss && !hr_branch) {
    throw UsageError("the entity contrastive loss needs the high-res branch (add hr)");
  }
  if (hierarchical_loss && !hr_branch) {
    throw UsageError("the hierarchical loss needs the high-res branch (add hr)");
  }
}

AblationFlags parse_ablation(const std::string& text) {
  if (text == "lm_only") return {false, false, false};
  if (text == "full") return {true, true, true};
  std::set<std::string> parts;
  std::stringstream ss(text);
  for (std::string part; std::getline(ss, part, '+');) {
    if (part != "hr" && part != "le" && part != "lh") {
      throw UsageError("unknown ablation component '" + part +
                       "' (expected lm_only, full, or a '+' list of hr, le, lh)");
    }
    parts.insert(part);
  }
  if (parts.empty()) throw UsageError("empty ablation");
  AblationFlags f{parts.count("hr") > 0, parts.count("le") > 0, parts.count("lh") > 0};
  f.validate();
  return f;
}

std::string ablation_name(const AblationFlags& f) {
  if (!f.hr_branch && !f.entity_loss && !f.hierarchical_loss) return "lm_only";
  if (f.hr_branch && f.entity_loss && f.hierarchical_loss) return "full";
  std::string out;
  if (f.hr_branch) out = "hr";
  if (f.entity_loss) out += out.empty() ? "le" : "+le";
  if (f.hierarchical_loss) out += out.empty() ? "lh" : "+lh";
  return out;
}

BatchLosses batch_loss(const DualBranchParams& params, const DualBranchConfig& model_config,
                       const synthland::Dataset& dataset, std::span<const std::size_t> indices,
                       const AblationFlags& flags, const objectives::LossWeights& weights,
                       std::vector<std::string>* warnings) {
  flags.validate();
  if (model_config.high_res_branch != flags.hr_branch) {
    throw UsageError("model high_res_branch disagrees with the ablation flags");
  }
  if (indices.empty()) throw EmptyInputError("batch_loss: empty batch");
  std::vector<objectives::LmItem> lm_items;
  std::vector<objectives::ContrastiveItem> contrastive;
  std::vector<objectives::HierarchicalItem> hierarchical;
  for (std::size_t idx : indices) {
    const auto& rec = dataset.records.at(idx);
    const auto visual = dualbranch::encode_image(dataset.store.lr_tensor(idx),
                                                 dataset.store.hr_tensor(idx), params, model_config);
    auto tf = dualbranch::teacher_forced_logits(visual, rec.question_tokens, rec.answer_tokens,
                                                params, model_config);
    lm_items.push_back({tf.logits, std::move(tf.targets), std::move(tf.loss_mask)});
    if (flags.entity_loss) {
      const Tensor entities = numkit::gather_rows(params.entity_table, rec.entity_ids);
      const auto grouping = objectives::entity_group(*visual.high, entities, weights.theta);
      contrastive.push_back({entities, grouping.grouped});
    }
    if (flags.hierarchical_loss) {
      hierarchical.push_back({visual.low, visual.high, rec.hierarchical_label});
    }
  }
  BatchLosses out;
  std::string done;
  auto guarded = [&](const char* name, auto&& compute) {
    try {
      return compute();
    } catch (const NumericError& e) {
      throw NumericError(std::string(name) + " failed (" + e.what() + ")" + done);
    }
  };
  out.lg = guarded("lg", [&] { return objectives::lm_loss(lm_items, warnings); });
  done += "; lg=" + std::to_string(out.lg.item());
  if (flags.entity_loss) {
    out.le = guarded("le", [&] { return objectives::entity_contrastive(contrastive, params.log_temp); });
    done += "; le=" + std::to_string(out.le->item());
  }
  if (flags.hierarchical_loss) {
    out.lh = guarded("lh", [&] {
      return objectives::hierarchical_loss(hierarchical, params.cls_w, params.cls_b);
    });
  }
  out.total = objectives::total_loss(out.lg, out.le, out.lh, weights);
  return out;
}

}  // namespace veal::trainkit
