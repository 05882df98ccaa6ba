#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "veal/numkit/tensor.hpp"

namespace veal::synthland {

using TokenId = std::uint32_t;
using TokenSeq = std::vector<TokenId>;

// Reserved token ids. Category tokens follow at kNumReserved, then three word
// slots per landmark.
inline constexpr TokenId kPad = 0;
inline constexpr TokenId kBos = 1;
inline constexpr TokenId kEos = 2;
inline constexpr TokenId kSep = 3;
inline constexpr TokenId kQmark = 4;
inline constexpr TokenId kUnk = 5;
inline constexpr TokenId kHint = 6;
inline constexpr TokenId kMask = 7;
inline constexpr std::size_t kNumReserved = 8;
inline constexpr std::size_t kWordSlotsPerLandmark = 3;

struct SynthConfig {
  std::size_t num_landmarks = 40;
  std::size_t num_categories = 4;
  std::size_t entities_per_landmark = 2;
  std::size_t embed_dim = 16;
  std::size_t lr_patches = 16;
  std::size_t hr_patches = 16;
  double alpha_min = 0.0;
  double alpha_max = 1.0;
  double noise_sigma = 0.25;
  // Category prototype mixing weight.
  double category_weight = 0.3;
  std::size_t name_tokens_per_landmark = 2;
  // Capacity bound; the built vocabulary has exactly the ids it needs.
  std::size_t vocab_size = 256;
  std::uint64_t seed = 1;

  // Throws ConfigError for malformed fields and CapacityError when the
  // vocabulary or sub-image blocks cannot hold what the config asks for.
  void validate() const;
};

struct LandmarkRecord {
  std::string image_id;
  std::int64_t landmark_id = 0;
  TokenSeq name_tokens;
  TokenSeq question_tokens;
  TokenSeq answer_tokens;
  std::size_t hierarchical_label = 0;
  std::vector<std::size_t> entity_ids;
  double alignment_alpha = 0.0;

  bool operator==(const LandmarkRecord&) const = default;
};

// Frozen-encoder outputs for every image plus the text-side vectors. Image i
// corresponds to records[i]. All arrays are row-major.
struct EmbeddingStore {
  std::size_t dim = 0;
  std::size_t lr_patches = 0;
  std::size_t hr_patches = 0;
  std::size_t num_images = 0;
  std::size_t num_landmarks = 0;
  std::size_t num_entities = 0;
  std::size_t num_categories = 0;
  std::vector<double> lr;        // images x lr_patches x dim
  std::vector<double> hr;        // images x hr_patches x dim
  std::vector<double> text;      // landmarks x dim
  std::vector<double> entity;    // entities x dim
  std::vector<double> category;  // categories x dim

  std::span<const double> text_vec(std::size_t landmark) const;
  std::span<const double> entity_vec(std::size_t entity_id) const;
  std::span<const double> category_vec(std::size_t c) const;

  numkit::Tensor lr_tensor(std::size_t image) const;
  numkit::Tensor hr_tensor(std::size_t image) const;
  numkit::Tensor text_tensor(std::size_t landmark) const;

  // Copy with every value rounded through float32, i.e. what the on-disk
  // format preserves.
  EmbeddingStore quantized() const;

  bool operator==(const EmbeddingStore&) const = default;
};

class Vocab {
 public:
  Vocab() = default;
  Vocab(std::size_t num_categories, std::size_t num_landmarks);

  std::size_t size() const { return tokens_.size(); }
  std::size_t num_categories() const { return num_categories_; }
  std::size_t num_landmarks() const { return num_landmarks_; }
  const std::string& token(TokenId id) const;
  const std::vector<std::string>& tokens() const { return tokens_; }

  TokenId category_token(std::size_t category) const;
  TokenId word_token(std::size_t landmark, std::size_t slot) const;
  TokenId first_word_id() const { return static_cast<TokenId>(kNumReserved + num_categories_); }
  bool is_word(TokenId id) const { return id >= first_word_id() && id < size(); }
  bool is_category(TokenId id) const {
    return id >= kNumReserved && id < first_word_id();
  }

  std::string detokenize(const TokenSeq& seq) const;

  // Rebuilds the layout from an id -> string table (as read from vocab.json).
  static Vocab from_tokens(std::vector<std::string> tokens);

  bool operator==(const Vocab&) const = default;

 private:
  std::size_t num_categories_ = 0;
  std::size_t num_landmarks_ = 0;
  std::vector<std::string> tokens_;
};

struct Dataset {
  std::vector<LandmarkRecord> records;
  EmbeddingStore store;
  Vocab vocab;
};

Vocab build_vocab(const SynthConfig& config);

// Patch rows of the high-res image that carry entity `slot` (0-based within
// its landmark): a prefix of sub-image block `slot`.
std::vector<std::size_t> designated_patches(std::size_t hr_patches,
                                            std::size_t entities_per_landmark,
                                            std::size_t slot);

Dataset generate(const SynthConfig& config);

}  // namespace veal::synthland
