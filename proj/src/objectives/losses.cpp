#include <cmath>

#include "veal/errors.hpp"
#include "veal/numkit/ops.hpp"
#include "veal/objectives/objectives.hpp"

namespace veal::objectives {

namespace ops = numkit;

void LossWeights::validate() const {
  auto nonneg = [](double v, const char* field) {
    if (!(v >= 0.0)) throw ConfigError(std::string("field '") + field + "': must be >= 0");
  };
  nonneg(lambda_g, "lambda_g");
  nonneg(mu_e, "mu_e");
  nonneg(mu_h, "mu_h");
  if (!(theta >= 0.0 && theta <= 1.0)) throw ConfigError("field 'theta': must lie in [0, 1]");
}

Tensor entity_contrastive(std::span<const ContrastiveItem> items, const Tensor& log_temp) {
  if (items.empty()) throw EmptyInputError("entity_contrastive: empty batch");
  const Tensor inv_tau = ops::exp(ops::scale(log_temp, -1.0));
  std::vector<Tensor> terms;
  for (const auto& item : items) {
    if (item.entity_embs.rows() != item.grouped.rows()) {
      throw DimensionError("entity_contrastive: " +
                           numkit::shape_string(item.entity_embs.shape()) + " entities vs " +
                           numkit::shape_string(item.grouped.shape()) + " grouped");
    }
    const std::size_t E = item.entity_embs.rows();
    const Tensor S = ops::matmul(ops::normalize_rows(item.entity_embs),
                                 ops::transpose(ops::normalize_rows(item.grouped)));
    const Tensor logits = ops::mul_scalar(S, inv_tau);
    std::vector<std::size_t> diag(E);
    for (std::size_t j = 0; j < E; ++j) diag[j] = j;
    terms.push_back(ops::sum(ops::pick(ops::row_log_softmax(logits), diag)));
    terms.push_back(ops::sum(ops::pick(ops::row_log_softmax(ops::transpose(logits)), diag)));
  }
  Tensor total = terms[0];
  for (std::size_t i = 1; i < terms.size(); ++i) total = ops::add(total, terms[i]);
  return ops::scale(total, -1.0 / (2.0 * static_cast<double>(items.size())));
}

Tensor hierarchical_loss(std::span<const HierarchicalItem> items, const Tensor& cls_w,
                         const Tensor& cls_b) {
  if (items.empty()) throw EmptyInputError("hierarchical_loss: empty batch");
  const std::size_t classes = cls_w.cols();
  std::vector<Tensor> pooled;
  std::vector<std::size_t> labels;
  for (const auto& item : items) {
    if (item.label >= classes) {
      throw LabelError("label " + std::to_string(item.label) + " outside [0, " +
                       std::to_string(classes) + ")");
    }
    const Tensor tokens = item.high_tokens ? ops::concat_rows({item.low_tokens, *item.high_tokens})
                                           : item.low_tokens;
    pooled.push_back(ops::mean_rows(tokens));
    labels.push_back(item.label);
  }
  const Tensor h = ops::concat_rows(pooled);
  const Tensor logits = ops::add_rowwise(ops::matmul(h, cls_w), cls_b);
  const Tensor nll = ops::pick(ops::row_log_softmax(logits), labels);
  return ops::scale(ops::sum(nll), -1.0 / static_cast<double>(items.size()));
}

Tensor lm_loss(std::span<const LmItem> items, std::vector<std::string>* warnings) {
  if (items.empty()) throw EmptyInputError("lm_loss: empty batch");
  std::vector<Tensor> terms;
  for (std::size_t i = 0; i < items.size(); ++i) {
    const auto& item = items[i];
    const std::size_t T = item.logits.rows();
    if (item.targets.size() != T || item.loss_mask.size() != T) {
      throw DimensionError("lm_loss: targets/mask length does not match " +
                           numkit::shape_string(item.logits.shape()));
    }
    std::vector<std::size_t> rows, targets;
    for (std::size_t t = 0; t < T; ++t) {
      if (!item.loss_mask[t]) continue;
      if (item.targets[t] >= item.logits.cols()) {
        throw LookupError("target token " + std::to_string(item.targets[t]) + " outside vocab");
      }
      rows.push_back(t);
      targets.push_back(item.targets[t]);
    }
    if (rows.empty()) {
      if (warnings) warnings->push_back("batch item " + std::to_string(i) + " has an empty loss mask");
      continue;
    }
    const Tensor picked = ops::gather_rows(item.logits, rows);
    terms.push_back(ops::sum(ops::pick(ops::row_log_softmax(picked), targets)));
  }
  if (terms.empty()) return Tensor::scalar(0.0);
  Tensor total = terms[0];
  for (std::size_t i = 1; i < terms.size(); ++i) total = ops::add(total, terms[i]);
  return ops::scale(total, -1.0 / static_cast<double>(items.size()));
}

Tensor total_loss(const Tensor& lg, const std::optional<Tensor>& le,
                  const std::optional<Tensor>& lh, const LossWeights& weights) {
  Tensor total = ops::scale(lg, weights.lambda_g);
  if (le) total = ops::add(total, ops::scale(*le, weights.mu_e));
  if (lh) total = ops::add(total, ops::scale(*lh, weights.mu_h));
  return total;
}

double total_loss(double lg, double le, double lh, const LossWeights& weights) {
  return weights.lambda_g * lg + weights.mu_e * le + weights.mu_h * lh;
}

}  // namespace veal::objectives
