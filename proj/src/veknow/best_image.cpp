#include <algorithm>

#include "veal/errors.hpp"
#include "veal/numkit/random.hpp"
#include "veal/veknow/veknow.hpp"

namespace veal::veknow {

std::vector<std::pair<std::string, double>> best_image_weights(std::span<const Candidate> candidates,
                                                               std::span<const double> name_emb) {
  if (candidates.empty()) throw EmptyInputError("best_image_select: no candidate images");
  std::vector<std::pair<std::string, double>> ranked;
  ranked.reserve(candidates.size());
  for (const auto& c : candidates) ranked.emplace_back(c.image_id, sim_clip(c.lr_patches, name_emb));
  std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  ranked.resize(std::min<std::size_t>(3, ranked.size()));

  bool any_positive = false;
  for (auto& [id, w] : ranked) {
    w = std::max(w, 0.0);
    any_positive = any_positive || w > 0.0;
  }
  if (!any_positive) {
    for (auto& entry : ranked) entry.second = 1.0;
  }
  return ranked;
}

std::string best_image_select(std::span<const Candidate> candidates,
                              std::span<const double> name_emb, std::uint64_t seed) {
  const auto top = best_image_weights(candidates, name_emb);
  if (top.size() == 1) return top.front().first;
  std::vector<double> weights;
  for (const auto& entry : top) weights.push_back(entry.second);
  numkit::Rng rng(seed);
  return top[rng.weighted(weights)].first;
}

}  // namespace veal::veknow
