#include <algorithm>
#include <cmath>
#include <limits>

#include "veal/dualbranch/model.hpp"
#include "veal/errors.hpp"
#include "veal/numkit/ops.hpp"
#include "veal/numkit/random.hpp"

namespace veal::dualbranch {

namespace ops = numkit;

namespace {

Tensor causal_mask(std::size_t T) {
  std::vector<double> m(T * T, 0.0);
  for (std::size_t i = 0; i < T; ++i) {
    for (std::size_t j = i + 1; j < T; ++j) m[i * T + j] = -1e9;
  }
  return Tensor({T, T}, std::move(m));
}

Tensor self_attention(const Tensor& x, const LmLayer& L, std::size_t heads) {
  const std::size_t T = x.rows();
  const std::size_t C = x.cols();
  const std::size_t dh = C / heads;
  const Tensor q = ops::matmul(x, L.wq);
  const Tensor k = ops::matmul(x, L.wk);
  const Tensor v = ops::matmul(x, L.wv);
  const Tensor mask = causal_mask(T);
  const double inv = 1.0 / std::sqrt(static_cast<double>(dh));
  std::vector<Tensor> outs;
  for (std::size_t h = 0; h < heads; ++h) {
    const Tensor qh = ops::slice_cols(q, h * dh, (h + 1) * dh);
    const Tensor kh = ops::slice_cols(k, h * dh, (h + 1) * dh);
    const Tensor vh = ops::slice_cols(v, h * dh, (h + 1) * dh);
    Tensor scores = ops::scale(ops::matmul(qh, ops::transpose(kh)), inv);
    Tensor attn = ops::row_softmax(ops::add(scores, mask));
    outs.push_back(ops::matmul(attn, vh));
  }
  Tensor merged = heads == 1 ? outs[0] : ops::concat_cols(outs);
  return ops::matmul(merged, L.wo);
}

Tensor feed_forward(const Tensor& x, const LmLayer& L) {
  Tensor h = ops::gelu(ops::add_rowwise(ops::matmul(x, L.ff_w1), L.ff_b1));
  return ops::add_rowwise(ops::matmul(h, L.ff_w2), L.ff_b2);
}

Tensor embed(const TokenSeq& tokens, const DualBranchParams& params) {
  std::vector<std::size_t> ids(tokens.begin(), tokens.end());
  return ops::gather_rows(params.tok_emb, ids);
}

std::size_t argmax(std::span<const double> row) {
  std::size_t best = 0;
  for (std::size_t j = 1; j < row.size(); ++j) {
    if (row[j] > row[best]) best = j;
  }
  return best;
}

}  // namespace

Tensor low_res_forward(const Tensor& low_res_patches, const DualBranchParams& params) {
  if (low_res_patches.rank() != 2 || low_res_patches.cols() != params.adapter_w1.rows()) {
    throw DimensionError("low-res patches " + numkit::shape_string(low_res_patches.shape()) +
                         " do not match adapter input " +
                         numkit::shape_string(params.adapter_w1.shape()));
  }
  Tensor h = ops::gelu(ops::add_rowwise(ops::matmul(low_res_patches, params.adapter_w1),
                                        params.adapter_b1));
  return ops::add_rowwise(ops::matmul(h, params.adapter_w2), params.adapter_b2);
}

std::array<Tensor, 4> split_high_res(const Tensor& high_res_patches) {
  const std::size_t rows = high_res_patches.rows();
  if (high_res_patches.rank() != 2 || rows % 4 != 0) {
    throw DimensionError("high-res patches " + numkit::shape_string(high_res_patches.shape()) +
                         " cannot be split into 4 blocks");
  }
  const std::size_t b = rows / 4;
  return {ops::slice_rows(high_res_patches, 0, b), ops::slice_rows(high_res_patches, b, 2 * b),
          ops::slice_rows(high_res_patches, 2 * b, 3 * b),
          ops::slice_rows(high_res_patches, 3 * b, rows)};
}

ResampleOutput resample(const Tensor& high_res_patches, const DualBranchParams& params,
                        const DualBranchConfig& config) {
  if (high_res_patches.rank() != 2 || high_res_patches.cols() != params.res_wk.rows()) {
    throw DimensionError("high-res patches " + numkit::shape_string(high_res_patches.shape()) +
                         " do not match resampler input " +
                         numkit::shape_string(params.res_wk.shape()));
  }
  Tensor keys = ops::matmul(high_res_patches, params.res_wk);
  Tensor values = ops::matmul(high_res_patches, params.res_wv);
  if (config.use_positional) {
    if (params.res_pos.rows() != high_res_patches.rows()) {
      throw DimensionError("positional table " + numkit::shape_string(params.res_pos.shape()) +
                           " does not match " +
                           numkit::shape_string(high_res_patches.shape()));
    }
    keys = ops::add(keys, params.res_pos);
    values = ops::add(values, params.res_pos);
  }
  const Tensor q = ops::matmul(params.queries, params.res_wq);
  const double inv = 1.0 / std::sqrt(static_cast<double>(params.res_wq.cols()));
  Tensor attention = ops::row_softmax(ops::scale(ops::matmul(q, ops::transpose(keys)), inv));
  Tensor tokens = ops::matmul(ops::matmul(attention, values), params.res_wo);
  return {tokens, attention};
}

AssembledSequence assemble_tokens(const Tensor& low_tokens, const std::optional<Tensor>& high_tokens,
                                  const TokenSeq& question, const DualBranchParams& params,
                                  const DualBranchConfig& config) {
  const std::size_t visual = low_tokens.rows() + (high_tokens ? high_tokens->rows() : 0);
  const std::size_t total = visual + 1 + question.size();
  if (total > config.max_seq_len) {
    throw LengthError("sequence of " + std::to_string(total) + " tokens exceeds max_seq_len " +
                      std::to_string(config.max_seq_len));
  }
  TokenSeq text = {synthland::kSep};
  text.insert(text.end(), question.begin(), question.end());
  std::vector<Tensor> parts = {low_tokens};
  if (high_tokens) parts.push_back(*high_tokens);
  parts.push_back(embed(text, params));

  AssembledSequence out;
  out.embeddings = ops::concat_rows(parts);
  out.is_text.assign(total, true);
  std::fill(out.is_text.begin(), out.is_text.begin() + static_cast<std::ptrdiff_t>(visual + 1),
            false);
  out.prefix_len = total;
  return out;
}

Tensor lm_forward(const Tensor& sequence, const DualBranchParams& params,
                  const DualBranchConfig& config) {
  Tensor x = sequence;
  for (const LmLayer& L : params.layers) {
    x = ops::add(x, self_attention(x, L, config.lm_heads));
    x = ops::add(x, feed_forward(x, L));
  }
  return ops::matmul(x, ops::transpose(params.tok_emb));
}

VisualTokens encode_image(const Tensor& low_res_patches, const Tensor& high_res_patches,
                          const DualBranchParams& params, const DualBranchConfig& config) {
  VisualTokens out;
  out.low = low_res_forward(low_res_patches, params);
  if (config.high_res_branch) out.high = resample(high_res_patches, params, config).tokens;
  return out;
}

TeacherForced teacher_forced_logits(const VisualTokens& visual, const TokenSeq& question,
                                    const TokenSeq& answer, const DualBranchParams& params,
                                    const DualBranchConfig& config) {
  AssembledSequence seq = assemble_tokens(visual.low, visual.high, question, params, config);
  const std::size_t P = seq.prefix_len;
  const std::size_t fed = answer.empty() ? 0 : answer.size() - 1;
  if (P + fed > config.max_seq_len) {
    throw LengthError("answer of " + std::to_string(answer.size()) +
                      " tokens overflows max_seq_len " + std::to_string(config.max_seq_len));
  }
  Tensor input = seq.embeddings;
  if (fed > 0) {
    TokenSeq head(answer.begin(), answer.begin() + static_cast<std::ptrdiff_t>(fed));
    input = ops::concat_rows({input, embed(head, params)});
  }
  TeacherForced out;
  out.logits = lm_forward(input, params, config);
  const std::size_t T = P + fed;
  out.targets.assign(T, synthland::kPad);
  out.loss_mask.assign(T, false);
  for (std::size_t t = 0; t < answer.size(); ++t) {
    out.targets[P - 1 + t] = answer[t];
    out.loss_mask[P - 1 + t] = true;
  }
  return out;
}

std::vector<TokenSeq> generate(const Tensor& low_res_patches, const Tensor& high_res_patches,
                               const TokenSeq& question, const DualBranchParams& params,
                               const DualBranchConfig& config, const GenerateOptions& options) {
  numkit::NoGradGuard no_grad;
  const VisualTokens visual = encode_image(low_res_patches, high_res_patches, params, config);
  const AssembledSequence prefix =
      assemble_tokens(visual.low, visual.high, question, params, config);
  const std::size_t room = config.max_seq_len - prefix.prefix_len + 1;
  const std::size_t cap = std::min(config.max_answer_len, room);

  numkit::Rng rng(options.seed);
  std::vector<TokenSeq> outputs;
  for (std::size_t k = 0; k < options.n; ++k) {
    TokenSeq produced;
    Tensor seq = prefix.embeddings;
    for (std::size_t step = 0; step < cap; ++step) {
      Tensor logits = lm_forward(seq, params, config);
      auto last = logits.data().subspan((logits.rows() - 1) * logits.cols(), logits.cols());
      std::size_t next;
      if (options.sample_temp <= 0.0) {
        next = argmax(last);
      } else {
        const double top = *std::max_element(last.begin(), last.end());
        std::vector<double> w(last.size());
        for (std::size_t j = 0; j < w.size(); ++j) {
          w[j] = std::exp((last[j] - top) / options.sample_temp);
        }
        next = rng.weighted(w);
      }
      const auto token = static_cast<TokenId>(next);
      if (token == synthland::kEos) break;
      produced.push_back(token);
      if (step + 1 < cap) {
        seq = ops::concat_rows({seq, embed(TokenSeq{token}, params)});
      }
    }
    outputs.push_back(std::move(produced));
  }
  return outputs;
}

}  // namespace veal::dualbranch
