#include <algorithm>
#include <cmath>
#include <map>

#include "veal/dualbranch/lexical_prior.hpp"
#include "veal/errors.hpp"
#include "veal/numkit/random.hpp"

namespace veal::dualbranch {

namespace {

// Columns of a random orthogonal C x C matrix via Gram-Schmidt.
std::vector<std::vector<double>> orthonormal_columns(std::size_t C, std::uint64_t seed) {
  numkit::Rng rng(seed);
  std::vector<std::vector<double>> cols;
  while (cols.size() < C) {
    std::vector<double> v(C);
    for (double& x : v) x = rng.normal();
    for (int pass = 0; pass < 2; ++pass) {
      for (const auto& u : cols) {
        double dot = 0.0;
        for (std::size_t k = 0; k < C; ++k) dot += v[k] * u[k];
        for (std::size_t k = 0; k < C; ++k) v[k] -= dot * u[k];
      }
    }
    double norm = 0.0;
    for (double x : v) norm += x * x;
    norm = std::sqrt(norm);
    if (norm < 1e-6) continue;
    for (double& x : v) x /= norm;
    cols.push_back(std::move(v));
  }
  return cols;
}

}  // namespace

std::vector<std::vector<double>> landmark_knowledge(const synthland::Dataset& dataset,
                                                    double entity_weight) {
  const auto& store = dataset.store;
  std::vector<std::vector<double>> out(store.num_landmarks);
  for (std::size_t i = 0; i < store.num_landmarks; ++i) {
    auto t = store.text_vec(i);
    out[i].assign(t.begin(), t.end());
  }
  for (const auto& rec : dataset.records) {
    const auto i = static_cast<std::size_t>(rec.landmark_id);
    if (i >= store.num_landmarks) continue;
    for (auto e : rec.entity_ids) {
      auto a = store.entity_vec(e);
      for (std::size_t k = 0; k < store.dim; ++k) out[i][k] += entity_weight * a[k];
    }
  }
  return out;
}

void apply_lexical_prior(DualBranchParams& params, const DualBranchConfig& config,
                         const synthland::Dataset& dataset, const LexicalPriorOptions& options) {
  const auto& store = dataset.store;
  const auto& vocab = dataset.vocab;
  const std::size_t C = config.model_dim;
  const std::size_t d = store.dim;
  const std::size_t slots = synthland::kWordSlotsPerLandmark;
  if (C < d + slots + 1) {
    throw CapacityError("lexical prior needs model_dim >= " + std::to_string(d + slots + 1));
  }
  if (params.tok_emb.rows() != vocab.size() || params.tok_emb.cols() != C) {
    throw DimensionError("token embedding " + numkit::shape_string(params.tok_emb.shape()) +
                         " does not match the dataset vocabulary");
  }
  const auto Q = orthonormal_columns(C, numkit::mix_seed(config.seed, 0x1e71ca1));

  auto lift = [&](std::span<const double> v) {
    std::vector<double> out(C, 0.0);
    for (std::size_t j = 0; j < d; ++j) {
      for (std::size_t k = 0; k < C; ++k) out[k] += Q[j][k] * v[j];
    }
    return out;
  };
  auto write_row = [&](Tensor& table, std::size_t row, std::vector<double> v,
                       std::size_t slot, double gain) {
    const auto& u = Q[d + slot];
    for (std::size_t k = 0; k < C; ++k) v[k] += options.slot_weight * u[k];
    double norm = 0.0;
    for (double x : v) norm += x * x;
    norm = std::sqrt(norm);
    auto dst = table.mutable_data().subspan(row * C, C);
    for (std::size_t k = 0; k < C; ++k) dst[k] = gain * v[k] / norm;
  };

  // Which records use each word token.
  std::map<TokenId, std::vector<std::size_t>> users;
  for (std::size_t r = 0; r < dataset.records.size(); ++r) {
    for (TokenId t : dataset.records[r].name_tokens) users[t].push_back(r);
  }

  const std::size_t M = vocab.num_landmarks();
  const auto knowledge = landmark_knowledge(dataset, options.entity_weight);
  for (std::size_t i = 0; i < M; ++i) {
    for (std::size_t s = 0; s < slots; ++s) {
      const TokenId tok = vocab.word_token(i, s);
      auto it = users.find(tok);
      if (it != users.end() && it->second.size() > 1) {
        const auto c = dataset.records[it->second.front()].hierarchical_label;
        write_row(params.tok_emb, tok, lift(store.category_vec(c)), s, options.gain);
      } else if (i < store.num_landmarks) {
        write_row(params.tok_emb, tok, lift(knowledge[i]), s, options.gain);
      }
    }
  }
  for (std::size_t c = 0; c < vocab.num_categories(); ++c) {
    write_row(params.tok_emb, vocab.category_token(c), lift(store.category_vec(c)), slots,
              options.gain);
  }
  if (options.lift_adapter) {
    if (C < 2 * d) throw CapacityError("adapter lift needs model_dim >= 2 * input_dim");
    auto w1 = params.adapter_w1.mutable_data();  // d x C
    auto w2 = params.adapter_w2.mutable_data();  // C x C
    std::fill(w1.begin(), w1.end(), 0.0);
    std::fill(w2.begin(), w2.end(), 0.0);
    for (std::size_t j = 0; j < d; ++j) {
      w1[j * C + j] = 1.0;
      w1[j * C + d + j] = -1.0;
      for (std::size_t k = 0; k < C; ++k) {
        w2[j * C + k] = options.adapter_gain * Q[j][k];
        w2[(d + j) * C + k] = -options.adapter_gain * Q[j][k];
      }
    }
    for (auto* b : {&params.adapter_b1, &params.adapter_b2}) {
      auto x = b->mutable_data();
      std::fill(x.begin(), x.end(), 0.0);
    }
  }
  if (options.lift_resampler) {
    auto wv = params.res_wv.mutable_data();  // d x C
    auto wo = params.res_wo.mutable_data();  // C x C
    for (std::size_t j = 0; j < d; ++j) {
      for (std::size_t k = 0; k < C; ++k) wv[j * C + k] = Q[j][k];
    }
    std::fill(wo.begin(), wo.end(), 0.0);
    for (std::size_t k = 0; k < C; ++k) wo[k * C + k] = 1.0;
  }
  if (params.entity_table.rows() == store.num_entities) {
    auto dst = params.entity_table.mutable_data();
    for (std::size_t e = 0; e < store.num_entities; ++e) {
      auto v = lift(store.entity_vec(e));
      for (std::size_t k = 0; k < C; ++k) dst[e * C + k] = options.entity_gain * v[k];
    }
  }
}

}  // namespace veal::dualbranch
