#include <cmath>

#include "veal/errors.hpp"
#include "veal/numkit/ops.hpp"
#include "veal/veknow/veknow.hpp"

namespace veal::veknow {

using numkit::Tensor;

double sim_clip(const Tensor& lr_patches, std::span<const double> text_emb) {
  if (lr_patches.rows() == 0) throw DimensionError("sim_clip: image has no patches");
  const Tensor pooled = numkit::mean_rows(lr_patches);
  const Tensor text({text_emb.size()}, std::vector<double>(text_emb.begin(), text_emb.end()));
  return numkit::cosine(pooled, text).item();
}

double rsr_from_rank(std::size_t gt_rank, std::size_t num_candidates) {
  if (num_candidates <= 1) return 1.0;
  return 1.0 - static_cast<double>(gt_rank - 1) / static_cast<double>(num_candidates - 1);
}

std::size_t rank_of(std::span<const double> sims, std::size_t gt) {
  std::size_t ahead = 0;
  for (std::size_t j = 0; j < sims.size(); ++j) {
    if (j == gt) continue;
    if (sims[j] > sims[gt] || (sims[j] == sims[gt] && j < gt)) ++ahead;
  }
  return ahead + 1;
}

std::vector<KnowledgeScore> score_dataset(const std::vector<synthland::LandmarkRecord>& records,
                                          const synthland::EmbeddingStore& store) {
  const std::size_t M = store.num_landmarks;
  std::vector<KnowledgeScore> scores;
  scores.reserve(records.size());
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& rec = records[i];
    if (rec.landmark_id < 0 || static_cast<std::size_t>(rec.landmark_id) >= M) {
      throw LookupError("no text embedding for landmark " + std::to_string(rec.landmark_id) +
                        " of " + rec.image_id);
    }
    const Tensor patches = store.lr_tensor(i);
    std::vector<double> sims(M);
    for (std::size_t j = 0; j < M; ++j) sims[j] = sim_clip(patches, store.text_vec(j));
    const auto gt = static_cast<std::size_t>(rec.landmark_id);
    KnowledgeScore s;
    s.image_id = rec.image_id;
    s.sim_score = sims[gt];
    s.gt_rank = rank_of(sims, gt);
    s.rsr = rsr_from_rank(s.gt_rank, M);
    scores.push_back(std::move(s));
  }
  return scores;
}

}  // namespace veal::veknow
