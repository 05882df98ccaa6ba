#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "veal/numkit/tensor.hpp"
#include "veal/synthland/types.hpp"

namespace veal::veknow {

struct KnowledgeScore {
  std::string image_id;
  double sim_score = 0.0;  // cosine(pooled image feature, own name embedding)
  double rsr = 0.0;        // 1 - (gt_rank - 1) / (M - 1); 1 when M == 1
  std::size_t gt_rank = 1;

  bool operator==(const KnowledgeScore&) const = default;
};

// Cosine between the mean-pooled patch vector and the text embedding.
// Throws DegenerateVectorError when either side has zero norm.
double sim_clip(const numkit::Tensor& lr_patches, std::span<const double> text_emb);

double rsr_from_rank(std::size_t gt_rank, std::size_t num_candidates);

// 1-based rank of sims[gt] in descending order; equal similarities rank the
// lower candidate index first.
std::size_t rank_of(std::span<const double> sims, std::size_t gt);

// Scores every record against all landmark names in the store. Throws
// LookupError when a record's landmark has no text embedding.
std::vector<KnowledgeScore> score_dataset(const std::vector<synthland::LandmarkRecord>& records,
                                          const synthland::EmbeddingStore& store);

enum class Method { kHDS, kHSS, kLCS, kBRS };

std::string method_name(Method method);
// Throws UsageError listing the valid names.
Method parse_method(const std::string& name);

struct SelectionSpec {
  Method method = Method::kBRS;
  std::size_t k = 0;
  std::uint64_t seed = 0;
};

// Exactly k distinct image ids.
//   HDS: rsr desc, then sim desc, then image_id asc.
//   HSS: sim desc, then rsr desc, then image_id asc.
//   LCS: smallest (rsr rank + sim rank), ranks counted from the worst value
//        (1 = lowest, ties share the lower rank), then image_id asc.
//   BRS: uniform sample without replacement, in draw order.
// Throws CapacityError when k exceeds the number of scores.
std::vector<std::string> select(std::span<const KnowledgeScore> scores, const SelectionSpec& spec);

struct Candidate {
  std::string image_id;
  numkit::Tensor lr_patches;
};

// Top three candidates by sim_clip (ties by image_id) with their sampling
// weights max(sim, 0), or uniform weights when none is positive.
std::vector<std::pair<std::string, double>> best_image_weights(std::span<const Candidate> candidates,
                                                               std::span<const double> name_emb);

// Draws one of the top three candidates in proportion to its weight.
// Throws EmptyInputError on an empty candidate list.
std::string best_image_select(std::span<const Candidate> candidates,
                              std::span<const double> name_emb, std::uint64_t seed);

struct Dispersion {
  double mean_intra_class_dist = 0.0;
  double mean_inter_centroid_dist = 0.0;
  double ratio = 0.0;  // inter / intra; 0 when intra is 0 or undefined
};

// Spread of pooled image features grouped by class label. Intra distance is
// averaged over classes with at least two members; inter distance is the
// mean pairwise distance between class centroids.
Dispersion dispersion_of(const std::vector<std::vector<double>>& features,
                         const std::vector<std::size_t>& labels);

Dispersion dispersion_stats(std::span<const std::string> subset_ids,
                            const std::vector<synthland::LandmarkRecord>& records,
                            const synthland::EmbeddingStore& store);

// scores.csv: header image_id,sim,rsr,gt_rank with round-trip precision.
std::string scores_csv(std::span<const KnowledgeScore> scores);
std::vector<KnowledgeScore> parse_scores_csv(const std::string& text);
// subset_<method>_<k>.json: JSON array of image ids.
std::string subset_json(std::span<const std::string> ids);
std::vector<std::string> parse_subset_json(const std::string& text);
std::string subset_filename(Method method, std::size_t k);

}  // namespace veal::veknow
