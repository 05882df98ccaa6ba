#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <map>

#include "veal/errors.hpp"
#include "veal/numkit/random.hpp"
#include "veal/synthland/types.hpp"
#include "veal/veknow/veknow.hpp"

namespace vk = veal::veknow;
namespace sl = veal::synthland;
using veal::numkit::Tensor;

namespace {

vk::KnowledgeScore ks(const std::string& id, double sim, double rsr) {
  vk::KnowledgeScore s;
  s.image_id = id;
  s.sim_score = sim;
  s.rsr = rsr;
  return s;
}

Tensor rows_of(std::initializer_list<std::initializer_list<double>> rows) { return Tensor::matrix(rows); }

// Store with one landmark per text row and one image per lr patch row.
sl::EmbeddingStore store_of(const std::vector<std::vector<double>>& texts,
                            const std::vector<std::vector<double>>& images) {
  sl::EmbeddingStore st;
  st.dim = texts[0].size();
  st.lr_patches = 1;
  st.num_landmarks = texts.size();
  st.num_images = images.size();
  for (const auto& t : texts) st.text.insert(st.text.end(), t.begin(), t.end());
  for (const auto& im : images) st.lr.insert(st.lr.end(), im.begin(), im.end());
  return st;
}

}  // namespace

TEST(SimClip, Examples) {
  EXPECT_NEAR(vk::sim_clip(rows_of({{1, 2}, {1, 2}}), std::vector<double>{1, 2}), 1.0, 1e-15);
  EXPECT_NEAR(vk::sim_clip(rows_of({{0, 1}, {0, 3}}), std::vector<double>{2, 0}), 0.0, 1e-15);
  EXPECT_THROW(vk::sim_clip(rows_of({{1, 0}, {-1, 0}}), std::vector<double>{1, 0}),
               veal::DegenerateVectorError);
}

TEST(Rsr, Normalization) {
  EXPECT_DOUBLE_EQ(vk::rsr_from_rank(1, 5), 1.0);
  EXPECT_DOUBLE_EQ(vk::rsr_from_rank(5, 5), 0.0);
  EXPECT_DOUBLE_EQ(vk::rsr_from_rank(2, 5), 0.75);
  EXPECT_DOUBLE_EQ(vk::rsr_from_rank(1, 1), 1.0);
}

TEST(ScoreDataset, TopAndBottomRank) {
  // Image 0 belongs to landmark 0. Candidate text directions give sims
  // 0.9, 0.5, 0.1 (top) or 0.1, 0.5, 0.9 (bottom).
  auto unit = [](double c) { return std::vector<double>{c, std::sqrt(1 - c * c)}; };
  std::vector<sl::LandmarkRecord> recs(1);
  recs[0].image_id = "img0";
  recs[0].landmark_id = 0;
  auto top = vk::score_dataset(recs, store_of({unit(0.9), unit(0.5), unit(0.1)}, {{1, 0}}));
  EXPECT_EQ(top[0].gt_rank, 1u);
  EXPECT_DOUBLE_EQ(top[0].rsr, 1.0);
  EXPECT_NEAR(top[0].sim_score, 0.9, 1e-12);
  auto bottom = vk::score_dataset(recs, store_of({unit(0.1), unit(0.5), unit(0.9)}, {{1, 0}}));
  EXPECT_EQ(bottom[0].gt_rank, 3u);
  EXPECT_DOUBLE_EQ(bottom[0].rsr, 0.0);
}

TEST(ScoreDataset, RankMatchesSortOracle) {
  veal::numkit::Rng rng(12);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> sims(10);
    for (double& s : sims) s = std::round(rng.uniform(-1, 1) * 8) / 8;  // forces ties
    const std::size_t gt = rng.below(10);
    std::vector<std::size_t> order(10);
    for (std::size_t i = 0; i < 10; ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return sims[a] > sims[b]; });
    const auto pos = std::find(order.begin(), order.end(), gt) - order.begin();
    EXPECT_EQ(vk::rank_of(sims, gt), static_cast<std::size_t>(pos) + 1);
  }
}

TEST(ScoreDataset, MissingEmbedding) {
  std::vector<sl::LandmarkRecord> recs(1);
  recs[0].image_id = "x";
  recs[0].landmark_id = 5;
  EXPECT_THROW(vk::score_dataset(recs, store_of({{1, 0}}, {{1, 0}})), veal::LookupError);
}

TEST(Select, HdsExample) {
  std::vector<vk::KnowledgeScore> s = {ks("a", 0.1, 1.0), ks("b", 0.1, 0.5), ks("c", 0.9, 0.2)};
  auto ids = vk::select(s, {vk::Method::kHDS, 2, 0});
  std::sort(ids.begin(), ids.end());
  EXPECT_EQ(ids, (std::vector<std::string>{"a", "b"}));
}

TEST(Select, TieBreaks) {
  std::vector<vk::KnowledgeScore> s = {ks("d", 0.5, 0.5), ks("b", 0.6, 0.5), ks("a", 0.5, 0.5),
                                       ks("c", 0.5, 0.9)};
  EXPECT_EQ(vk::select(s, {vk::Method::kHDS, 3, 0}), (std::vector<std::string>{"c", "b", "a"}));
  EXPECT_EQ(vk::select(s, {vk::Method::kHSS, 2, 0}), (std::vector<std::string>{"b", "c"}));
}

TEST(Select, LcsPicksJointWorst) {
  veal::numkit::Rng rng(4);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<vk::KnowledgeScore> s;
    for (int i = 0; i < 12; ++i) {
      s.push_back(ks("i" + std::to_string(i), rng.uniform(0, 1), rng.uniform(0, 1)));
    }
    s.push_back(ks("worst", -0.5, -0.1));
    for (std::size_t k = 1; k <= 5; ++k) {
      auto ids = vk::select(s, {vk::Method::kLCS, k, 0});
      EXPECT_NE(std::find(ids.begin(), ids.end(), "worst"), ids.end());
    }
  }
}

TEST(Select, LcsRankSumOracle) {
  // rsr ranks from worst: a=1 b=2 c=3; sim ranks: a=3 b=1 c=2.
  std::vector<vk::KnowledgeScore> s = {ks("a", 0.9, 0.1), ks("b", 0.1, 0.2), ks("c", 0.5, 0.3)};
  EXPECT_EQ(vk::select(s, {vk::Method::kLCS, 1, 0}), (std::vector<std::string>{"b"}));
  // Sums: a=1+3, b=2+1, c=3+2.
  EXPECT_EQ(vk::select(s, {vk::Method::kLCS, 2, 0}), (std::vector<std::string>{"b", "a"}));
}

TEST(Select, BrsDeterministic) {
  std::vector<vk::KnowledgeScore> s;
  for (int i = 0; i < 30; ++i) s.push_back(ks("i" + std::to_string(i), 0, 0));
  auto a = vk::select(s, {vk::Method::kBRS, 10, 5});
  EXPECT_EQ(a, vk::select(s, {vk::Method::kBRS, 10, 5}));
  EXPECT_NE(a, vk::select(s, {vk::Method::kBRS, 10, 6}));
}

TEST(Select, ExactSizeDistinctAndCapacity) {
  std::vector<vk::KnowledgeScore> s;
  for (int i = 0; i < 9; ++i) s.push_back(ks("i" + std::to_string(i), 0.1 * i, 1.0 - 0.1 * (i % 3)));
  for (auto m : {vk::Method::kHDS, vk::Method::kHSS, vk::Method::kLCS, vk::Method::kBRS}) {
    for (std::size_t k = 0; k <= 9; ++k) {
      auto ids = vk::select(s, {m, k, 1});
      EXPECT_EQ(ids.size(), k);
      std::sort(ids.begin(), ids.end());
      EXPECT_EQ(std::unique(ids.begin(), ids.end()), ids.end());
    }
    EXPECT_THROW(vk::select(s, {m, 10, 1}), veal::CapacityError);
  }
}

TEST(Select, MethodNames) {
  EXPECT_EQ(vk::parse_method("LCS"), vk::Method::kLCS);
  EXPECT_EQ(vk::method_name(vk::Method::kHSS), "HSS");
  try {
    vk::parse_method("XDS");
    FAIL();
  } catch (const veal::UsageError& e) {
    EXPECT_NE(std::string(e.what()).find("HDS,HSS,LCS,BRS"), std::string::npos);
  }
}

TEST(Select, ScaleInvariantScoresAndSubsets) {
  sl::SynthConfig c;
  const auto ds = sl::generate(c);
  auto scaled = ds.store;
  for (double& x : scaled.lr) x *= 3.7;
  for (double& x : scaled.text) x *= 0.02;
  const auto a = vk::score_dataset(ds.records, ds.store);
  const auto b = vk::score_dataset(ds.records, scaled);
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].gt_rank, b[i].gt_rank);
    EXPECT_NEAR(a[i].sim_score, b[i].sim_score, 1e-12);
  }
  for (auto m : {vk::Method::kHDS, vk::Method::kHSS, vk::Method::kLCS, vk::Method::kBRS}) {
    EXPECT_EQ(vk::select(a, {m, 15, 3}), vk::select(b, {m, 15, 3}));
  }
}

TEST(BestImage, SingleCandidateAndEmpty) {
  std::vector<vk::Candidate> one = {{"only", rows_of({{1, 0}})}};
  EXPECT_EQ(vk::best_image_select(one, std::vector<double>{0, 1}, 3), "only");
  EXPECT_THROW(vk::best_image_select({}, std::vector<double>{0, 1}, 3), veal::EmptyInputError);
}

TEST(BestImage, NegativeSimilarityNeverPicked) {
  const std::vector<double> name = {1, 0};
  std::vector<vk::Candidate> c = {{"pos", rows_of({{0.5, std::sqrt(0.75)}})},
                                  {"neg", rows_of({{-0.2, std::sqrt(0.96)}})}};
  for (std::uint64_t s = 0; s < 10000; ++s) EXPECT_EQ(vk::best_image_select(c, name, s), "pos");
}

TEST(BestImage, TopThreeWeights) {
  const std::vector<double> name = {1, 0};
  auto cand = [](const std::string& id, double sim) {
    return vk::Candidate{id, rows_of({{sim, std::sqrt(1 - sim * sim)}})};
  };
  std::vector<vk::Candidate> c = {cand("d", 0.05), cand("a", 0.6), cand("c", 0.1), cand("b", 0.3)};
  const auto w = vk::best_image_weights(c, name);
  ASSERT_EQ(w.size(), 3u);
  EXPECT_EQ(w[0].first, "a");
  EXPECT_NEAR(w[0].second, 0.6, 1e-12);
  EXPECT_EQ(w[2].first, "c");
  std::vector<vk::Candidate> all_neg = {cand("x", -0.5), cand("y", -0.1)};
  for (const auto& [id, wt] : vk::best_image_weights(all_neg, name)) EXPECT_DOUBLE_EQ(wt, 1.0);
}

TEST(Dispersion, HandGeometry) {
  auto same = vk::dispersion_of({{1, 0}, {1, 0}, {1, 0}}, {0, 0, 1});
  EXPECT_EQ(same.mean_intra_class_dist, 0.0);
  EXPECT_EQ(same.mean_inter_centroid_dist, 0.0);
  EXPECT_EQ(same.ratio, 0.0);
  auto two = vk::dispersion_of({{1, 0}, {1, 0}, {0, 1}, {0, 1}}, {0, 0, 1, 1});
  EXPECT_EQ(two.mean_intra_class_dist, 0.0);
  EXPECT_NEAR(two.mean_inter_centroid_dist, std::sqrt(2.0), 1e-15);
  EXPECT_EQ(two.ratio, 0.0);
  auto spread = vk::dispersion_of({{0, 0}, {2, 0}, {10, 0}, {10, 2}}, {0, 0, 1, 1});
  EXPECT_DOUBLE_EQ(spread.mean_intra_class_dist, 2.0);
  EXPECT_DOUBLE_EQ(spread.mean_inter_centroid_dist, std::sqrt(81.0 + 1.0));
  EXPECT_DOUBLE_EQ(spread.ratio, std::sqrt(82.0) / 2.0);
}

// Low-alignment images are dominated by their category prototype, so LCS
// subsets cluster by category more tightly than HSS subsets.
TEST(Dispersion, LcsSubsetsClusterTighterByCategory) {
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    sl::SynthConfig c;
    c.seed = seed;
    const auto ds = sl::generate(c);
    const auto scores = vk::score_dataset(ds.records, ds.store);
    const auto hss = vk::dispersion_stats(vk::select(scores, {vk::Method::kHSS, 20, 0}), ds.records, ds.store);
    const auto lcs = vk::dispersion_stats(vk::select(scores, {vk::Method::kLCS, 20, 0}), ds.records, ds.store);
    EXPECT_LT(lcs.mean_intra_class_dist, hss.mean_intra_class_dist);
    EXPECT_GT(lcs.ratio, hss.ratio);
  }
}

TEST(Export, CsvAndSubsetRoundTrip) {
  const auto ds = sl::generate(sl::SynthConfig{});
  const auto scores = vk::score_dataset(ds.records, ds.store);
  const auto csv = vk::scores_csv(scores);
  EXPECT_EQ(csv.rfind("image_id,sim,rsr,gt_rank\n", 0), 0u);
  EXPECT_EQ(vk::parse_scores_csv(csv), scores);
  const std::vector<std::string> ids = {"b", "a", "c"};
  EXPECT_EQ(vk::parse_subset_json(vk::subset_json(ids)), ids);
  EXPECT_EQ(vk::subset_filename(vk::Method::kHDS, 10), "subset_HDS_10.json");
}
