#include <cmath>
#include <map>
#include <unordered_map>

#include "veal/errors.hpp"
#include "veal/numkit/ops.hpp"
#include "veal/veknow/veknow.hpp"

namespace veal::veknow {

namespace {

double distance(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += (a[k] - b[k]) * (a[k] - b[k]);
  return std::sqrt(s);
}

double mean_pairwise(const std::vector<const std::vector<double>*>& points) {
  double total = 0.0;
  std::size_t pairs = 0;
  for (std::size_t i = 0; i < points.size(); ++i) {
    for (std::size_t j = i + 1; j < points.size(); ++j) {
      total += distance(*points[i], *points[j]);
      ++pairs;
    }
  }
  return pairs ? total / static_cast<double>(pairs) : 0.0;
}

}  // namespace

Dispersion dispersion_of(const std::vector<std::vector<double>>& features,
                         const std::vector<std::size_t>& labels) {
  std::map<std::size_t, std::vector<const std::vector<double>*>> classes;
  for (std::size_t i = 0; i < features.size(); ++i) classes[labels[i]].push_back(&features[i]);

  Dispersion out;
  double intra_total = 0.0;
  std::size_t intra_classes = 0;
  std::vector<std::vector<double>> centroids;
  for (const auto& [label, members] : classes) {
    if (members.size() >= 2) {
      intra_total += mean_pairwise(members);
      ++intra_classes;
    }
    std::vector<double> c(members.front()->size(), 0.0);
    for (const auto* m : members)
      for (std::size_t k = 0; k < c.size(); ++k) c[k] += (*m)[k];
    for (double& v : c) v /= static_cast<double>(members.size());
    centroids.push_back(std::move(c));
  }
  if (intra_classes) out.mean_intra_class_dist = intra_total / static_cast<double>(intra_classes);
  std::vector<const std::vector<double>*> cptr;
  for (const auto& c : centroids) cptr.push_back(&c);
  out.mean_inter_centroid_dist = mean_pairwise(cptr);
  out.ratio = out.mean_intra_class_dist > 0.0
                  ? out.mean_inter_centroid_dist / out.mean_intra_class_dist
                  : 0.0;
  return out;
}

Dispersion dispersion_stats(std::span<const std::string> subset_ids,
                            const std::vector<synthland::LandmarkRecord>& records,
                            const synthland::EmbeddingStore& store) {
  std::unordered_map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < records.size(); ++i) index.emplace(records[i].image_id, i);
  std::vector<std::vector<double>> features;
  std::vector<std::size_t> labels;
  for (const auto& id : subset_ids) {
    auto it = index.find(id);
    if (it == index.end()) throw LookupError("unknown image id '" + id + "'");
    const auto pooled = numkit::mean_rows(store.lr_tensor(it->second));
    features.emplace_back(pooled.data().begin(), pooled.data().end());
    labels.push_back(records[it->second].hierarchical_label);
  }
  return dispersion_of(features, labels);
}

}  // namespace veal::veknow
