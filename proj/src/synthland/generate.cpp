#include <algorithm>
#include <cmath>
#include <cstdio>

#include "veal/errors.hpp"
#include "veal/numkit/random.hpp"
#include "veal/synthland/types.hpp"

namespace veal::synthland {

namespace {

using numkit::Rng;

std::vector<double> random_unit(Rng& rng, std::size_t dim) {
  std::vector<double> v(dim);
  double norm = 0.0;
  while (!(norm > 0.0)) {
    norm = 0.0;
    for (double& x : v) {
      x = rng.normal();
      norm += x * x;
    }
    norm = std::sqrt(norm);
  }
  for (double& x : v) x /= norm;
  return v;
}

void normalize_into(std::span<double> v) {
  double norm = 0.0;
  for (double x : v) norm += x * x;
  norm = std::sqrt(norm);
  if (!(norm > 0.0)) throw DegenerateVectorError("generated patch has zero norm");
  for (double& x : v) x /= norm;
}

}  // namespace

std::span<const double> EmbeddingStore::text_vec(std::size_t landmark) const {
  if (landmark >= num_landmarks) {
    throw LookupError("no text embedding for landmark " + std::to_string(landmark));
  }
  return std::span<const double>(text).subspan(landmark * dim, dim);
}

std::span<const double> EmbeddingStore::entity_vec(std::size_t entity_id) const {
  if (entity_id >= num_entities) {
    throw LookupError("no attribute vector for entity " + std::to_string(entity_id));
  }
  return std::span<const double>(entity).subspan(entity_id * dim, dim);
}

std::span<const double> EmbeddingStore::category_vec(std::size_t c) const {
  if (c >= num_categories) throw LookupError("no prototype for category " + std::to_string(c));
  return std::span<const double>(category).subspan(c * dim, dim);
}

numkit::Tensor EmbeddingStore::lr_tensor(std::size_t image) const {
  if (image >= num_images) throw LookupError("no image " + std::to_string(image));
  const auto begin = lr.begin() + static_cast<std::ptrdiff_t>(image * lr_patches * dim);
  return numkit::Tensor({lr_patches, dim},
                        std::vector<double>(begin, begin + static_cast<std::ptrdiff_t>(lr_patches * dim)));
}

numkit::Tensor EmbeddingStore::hr_tensor(std::size_t image) const {
  if (image >= num_images) throw LookupError("no image " + std::to_string(image));
  const auto begin = hr.begin() + static_cast<std::ptrdiff_t>(image * hr_patches * dim);
  return numkit::Tensor({hr_patches, dim},
                        std::vector<double>(begin, begin + static_cast<std::ptrdiff_t>(hr_patches * dim)));
}

numkit::Tensor EmbeddingStore::text_tensor(std::size_t landmark) const {
  auto v = text_vec(landmark);
  return numkit::Tensor({dim}, std::vector<double>(v.begin(), v.end()));
}

EmbeddingStore EmbeddingStore::quantized() const {
  EmbeddingStore out = *this;
  for (auto* section : {&out.lr, &out.hr, &out.text, &out.entity, &out.category}) {
    for (double& x : *section) x = static_cast<double>(static_cast<float>(x));
  }
  return out;
}

std::vector<std::size_t> designated_patches(std::size_t hr_patches,
                                            std::size_t entities_per_landmark,
                                            std::size_t slot) {
  const std::size_t block = hr_patches / 4;
  const std::size_t count = (hr_patches + 4 * entities_per_landmark - 1) / (4 * entities_per_landmark);
  std::vector<std::size_t> rows;
  for (std::size_t r = 0; r < std::min(count, block); ++r) rows.push_back(slot * block + r);
  return rows;
}

Dataset generate(const SynthConfig& config) {
  config.validate();
  const std::size_t M = config.num_landmarks;
  const std::size_t C = config.num_categories;
  const std::size_t E = config.entities_per_landmark;
  const std::size_t d = config.embed_dim;
  const std::size_t L = config.name_tokens_per_landmark;

  Rng rng(config.seed);
  Dataset ds;
  ds.vocab = build_vocab(config);
  EmbeddingStore& st = ds.store;
  st.dim = d;
  st.lr_patches = config.lr_patches;
  st.hr_patches = config.hr_patches;
  st.num_images = M;
  st.num_landmarks = M;
  st.num_entities = M * E;
  st.num_categories = C;

  for (std::size_t i = 0; i < M; ++i) {
    auto v = random_unit(rng, d);
    st.text.insert(st.text.end(), v.begin(), v.end());
  }
  for (std::size_t c = 0; c < C; ++c) {
    auto v = random_unit(rng, d);
    st.category.insert(st.category.end(), v.begin(), v.end());
  }
  for (std::size_t e = 0; e < M * E; ++e) {
    auto v = random_unit(rng, d);
    st.entity.insert(st.entity.end(), v.begin(), v.end());
  }

  // Balanced category assignment over a seeded landmark order.
  std::vector<std::size_t> order(M);
  for (std::size_t i = 0; i < M; ++i) order[i] = i;
  rng.shuffle(order);
  std::vector<std::size_t> category_of(M);
  for (std::size_t r = 0; r < M; ++r) category_of[order[r]] = r % C;

  // The lowest landmark id in a category owns that category's shared last
  // word; every other member reuses it with probability 1/2.
  std::vector<std::size_t> owner(C, M);
  ds.records.resize(M);
  for (std::size_t i = 0; i < M; ++i) {
    LandmarkRecord& rec = ds.records[i];
    char id[32];
    std::snprintf(id, sizeof id, "img_%05zu", i);
    rec.image_id = id;
    rec.landmark_id = static_cast<std::int64_t>(i);
    rec.hierarchical_label = category_of[i];
    for (std::size_t s = 0; s < L; ++s) rec.name_tokens.push_back(ds.vocab.word_token(i, s));
    std::size_t& own = owner[category_of[i]];
    if (own == M) {
      own = i;
    } else if (rng.uniform() < 0.5) {
      rec.name_tokens.back() = ds.vocab.word_token(own, L - 1);
    }
    rec.question_tokens = {kQmark};
    rec.answer_tokens = rec.name_tokens;
    rec.answer_tokens.push_back(ds.vocab.category_token(category_of[i]));
    rec.answer_tokens.push_back(kEos);
    for (std::size_t j = 0; j < E; ++j) rec.entity_ids.push_back(i * E + j);
    rec.alignment_alpha = rng.uniform(config.alpha_min, config.alpha_max);
  }

  const double beta = config.category_weight;
  const double sigma = config.noise_sigma;
  auto emit_patch = [&](std::vector<double>& out, std::size_t i,
                        std::span<const double> extra) {
    const double alpha = ds.records[i].alignment_alpha;
    auto t = st.text_vec(i);
    auto p = st.category_vec(category_of[i]);
    std::vector<double> v(d);
    for (std::size_t k = 0; k < d; ++k) {
      v[k] = alpha * t[k] + beta * p[k] + sigma * rng.normal();
      if (!extra.empty()) v[k] += extra[k];
    }
    normalize_into(v);
    out.insert(out.end(), v.begin(), v.end());
  };

  st.lr.reserve(M * config.lr_patches * d);
  st.hr.reserve(M * config.hr_patches * d);
  for (std::size_t i = 0; i < M; ++i) {
    for (std::size_t p = 0; p < config.lr_patches; ++p) emit_patch(st.lr, i, {});
    std::vector<std::size_t> carrier(config.hr_patches, E);
    for (std::size_t j = 0; j < E; ++j) {
      for (std::size_t row : designated_patches(config.hr_patches, E, j)) carrier[row] = j;
    }
    for (std::size_t p = 0; p < config.hr_patches; ++p) {
      if (carrier[p] < E) {
        emit_patch(st.hr, i, st.entity_vec(ds.records[i].entity_ids[carrier[p]]));
      } else {
        emit_patch(st.hr, i, {});
      }
    }
  }
  return ds;
}

}  // namespace veal::synthland
