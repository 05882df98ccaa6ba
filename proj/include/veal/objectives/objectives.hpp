#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "veal/numkit/tensor.hpp"

namespace veal::objectives {

using numkit::Tensor;

struct LossWeights {
  double lambda_g = 1.0;
  double mu_e = 7.32;
  double mu_h = 4.38;
  double theta = 0.5;

  // Throws ConfigError for negative weights or theta outside [0, 1].
  void validate() const;
};

// Per row of raw similarities: min-max normalize to [0, 1], zero entries
// below theta, renormalize the survivors to sum 1. A constant row maps to
// uniform weights (and passes no gradient). Differentiable in `sims`.
Tensor sparse_minmax_weights(const Tensor& sims, double theta);

struct EntityGrouping {
  Tensor weights;  // E x N_q, rows sum to 1
  Tensor grouped;  // E x C
};

// sims = entity_embs . high_tokens^T, grouped = W . high_tokens.
EntityGrouping entity_group(const Tensor& high_tokens, const Tensor& entity_embs, double theta);

struct ContrastiveItem {
  Tensor entity_embs;  // E_i x C
  Tensor grouped;      // E_i x C
};

// Symmetric cosine InfoNCE over each image's own entities, tau = exp(log_temp),
// scaled by -1/(2B).
Tensor entity_contrastive(std::span<const ContrastiveItem> items, const Tensor& log_temp);

struct HierarchicalItem {
  Tensor low_tokens;                // N_vL x C
  std::optional<Tensor> high_tokens;  // N_q x C
  std::size_t label = 0;
};

// Cross-entropy of an affine classifier on the mean of [low ; high], averaged
// over the batch.
Tensor hierarchical_loss(std::span<const HierarchicalItem> items, const Tensor& cls_w,
                         const Tensor& cls_b);

struct LmItem {
  Tensor logits;                     // T x V
  std::vector<std::size_t> targets;  // length T
  std::vector<bool> loss_mask;       // length T
};

// Per-image sums of masked next-token negative log-likelihoods, averaged over
// the batch. An image with an empty mask contributes 0 and a message is
// appended to `warnings` when given.
Tensor lm_loss(std::span<const LmItem> items, std::vector<std::string>* warnings = nullptr);

// lambda * L_g + mu_e * L_e + mu_h * L_h; an absent term contributes nothing.
Tensor total_loss(const Tensor& lg, const std::optional<Tensor>& le,
                  const std::optional<Tensor>& lh, const LossWeights& weights);
double total_loss(double lg, double le, double lh, const LossWeights& weights);

}  // namespace veal::objectives
