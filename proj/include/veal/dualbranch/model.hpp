#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "veal/numkit/tensor.hpp"
#include "veal/synthland/types.hpp"

namespace veal::dualbranch {

using numkit::Tensor;
using synthland::TokenId;
using synthland::TokenSeq;

struct DualBranchConfig {
  std::size_t input_dim = 16;         // d_v
  std::size_t model_dim = 32;         // C
  std::size_t low_res_tokens = 16;    // N_vL, one token per low-res patch
  std::size_t high_res_patches = 16;  // P_H
  std::size_t num_queries = 4;        // N_q, resampler output tokens
  std::size_t lm_layers = 1;
  std::size_t lm_heads = 1;
  std::size_t ffn_dim = 64;
  std::size_t vocab_size = 0;
  std::size_t max_seq_len = 48;
  std::size_t max_answer_len = 6;
  std::size_t num_entities = 0;
  std::size_t num_categories = 0;
  bool use_positional = true;
  // False for the LM-only baseline: no resampler tokens in the LM input.
  bool high_res_branch = true;
  std::uint64_t seed = 1;

  // Throws ConfigError naming the offending field.
  void validate() const;

  // Copies every data-dependent size (dims, patch counts, vocab, entity and
  // category counts) from a dataset.
  void fit_to(const synthland::Dataset& dataset);

  // Tokens in front of the question: N_vL (+ N_q) + SEP.
  std::size_t visual_prefix_len() const;

  bool operator==(const DualBranchConfig&) const = default;
};

struct LmLayer {
  Tensor wq, wk, wv, wo;
  Tensor ff_w1, ff_b1, ff_w2, ff_b2;
};

struct NamedParam {
  std::string name;
  std::string group;
  Tensor tensor;
};

// Every trainable tensor. Matrices act on row vectors (x * W).
struct DualBranchParams {
  // Low-res adapter: d_v -> C -> C with GELU in between.
  Tensor adapter_w1, adapter_b1, adapter_w2, adapter_b2;
  // Resampler: learned queries cross-attending over projected high-res patches.
  Tensor queries, res_wq, res_wk, res_wv, res_wo;
  Tensor res_pos;  // P_H x C, only with use_positional
  Tensor entity_table;
  Tensor cls_w, cls_b;
  // Decoder LM; output logits reuse tok_emb.
  Tensor tok_emb;
  std::vector<LmLayer> layers;
  // Contrastive temperature is exp(log_temp).
  Tensor log_temp;

  // Stable order used by checkpoints and optimizers.
  std::vector<NamedParam> named() const;
  std::size_t parameter_count() const;
};

inline constexpr const char* kParamGroups[] = {"adapter", "resampler", "entity_table",
                                               "classifier", "lm", "log_temp"};

DualBranchParams init_params(const DualBranchConfig& config);
DualBranchParams clone_params(const DualBranchParams& params);

// Per-token MLP: W2 * gelu(W1 * v + b1) + b2.
Tensor low_res_forward(const Tensor& low_res_patches, const DualBranchParams& params);

// Four contiguous row blocks; throws DimensionError when rows % 4 != 0.
std::array<Tensor, 4> split_high_res(const Tensor& high_res_patches);

struct ResampleOutput {
  Tensor tokens;     // N_q x C
  Tensor attention;  // N_q x P_H
};

// One resampler over the full patch sequence (all four blocks jointly):
// tokens = softmax(Q K^T / sqrt(C)) V Wo with Q = queries Wq, K = V_H Wk (+pos),
// V = V_H Wv (+pos).
ResampleOutput resample(const Tensor& high_res_patches, const DualBranchParams& params,
                        const DualBranchConfig& config);

struct AssembledSequence {
  Tensor embeddings;                // T x C
  std::vector<bool> is_text;        // false for visual tokens and SEP
  std::size_t prefix_len = 0;       // visual + SEP + question
};

// [X_L ; X_H ; SEP ; question] (X_H omitted when absent). Throws LengthError
// past max_seq_len.
AssembledSequence assemble_tokens(const Tensor& low_tokens, const std::optional<Tensor>& high_tokens,
                                  const TokenSeq& question, const DualBranchParams& params,
                                  const DualBranchConfig& config);

// Causal decoder over an embedded sequence; returns T x V logits.
Tensor lm_forward(const Tensor& sequence, const DualBranchParams& params,
                  const DualBranchConfig& config);

// Visual tokens for one image, following config.high_res_branch.
struct VisualTokens {
  Tensor low;
  std::optional<Tensor> high;
};
VisualTokens encode_image(const Tensor& low_res_patches, const Tensor& high_res_patches,
                          const DualBranchParams& params, const DualBranchConfig& config);

// Teacher-forced LM input for one record: the assembled prefix followed by
// answer[0..n-2]. targets/loss_mask cover every position; the mask selects
// positions whose next token is an answer token.
struct TeacherForced {
  Tensor logits;
  std::vector<std::size_t> targets;
  std::vector<bool> loss_mask;
};
TeacherForced teacher_forced_logits(const VisualTokens& visual, const TokenSeq& question,
                                    const TokenSeq& answer, const DualBranchParams& params,
                                    const DualBranchConfig& config);

struct GenerateOptions {
  std::size_t n = 5;
  // <= 0 selects greedy argmax decoding.
  double sample_temp = 1.0;
  std::uint64_t seed = 0;
};

// n sampled continuations of [image ; SEP ; question], each stopping at EOS
// (not included) or the length cap.
std::vector<TokenSeq> generate(const Tensor& low_res_patches, const Tensor& high_res_patches,
                               const TokenSeq& question, const DualBranchParams& params,
                               const DualBranchConfig& config, const GenerateOptions& options);

}  // namespace veal::dualbranch
