#include <algorithm>
#include <string>

#include "veal/errors.hpp"
#include "veal/synthland/types.hpp"

namespace veal::synthland {

namespace {

const char* const kReservedNames[kNumReserved] = {"<pad>", "<bos>", "<eos>", "<sep>",
                                                  "<q>",   "<unk>", "<hint>", "<mask>"};

void require(bool ok, const std::string& field, const std::string& what) {
  if (!ok) throw ConfigError("field '" + field + "': " + what);
}

}  // namespace

void SynthConfig::validate() const {
  require(num_landmarks > 0, "num_landmarks", "must be positive");
  require(num_categories > 0, "num_categories", "must be positive");
  require(num_landmarks >= num_categories, "num_landmarks",
          "must be at least num_categories");
  require(entities_per_landmark > 0, "entities_per_landmark", "must be positive");
  require(embed_dim > 0, "embed_dim", "must be positive");
  require(lr_patches > 0, "lr_patches", "must be positive");
  require(hr_patches > 0 && hr_patches % 4 == 0, "hr_patches",
          "must be a positive multiple of 4");
  require(alpha_min >= 0.0 && alpha_max <= 1.0 && alpha_min <= alpha_max, "alignment_range",
          "must satisfy 0 <= alpha_min <= alpha_max <= 1");
  require(noise_sigma >= 0.0, "noise_sigma", "must be non-negative");
  require(category_weight >= 0.0, "category_weight", "must be non-negative");
  require(name_tokens_per_landmark >= 2 && name_tokens_per_landmark <= kWordSlotsPerLandmark,
          "name_tokens_per_landmark", "must be 2 or 3");
  if (entities_per_landmark > 4) {
    throw CapacityError("entities_per_landmark = " + std::to_string(entities_per_landmark) +
                        " exceeds the 4 sub-image blocks of the high-res image");
  }
  const std::size_t needed =
      kWordSlotsPerLandmark * num_landmarks + num_categories + kNumReserved;
  if (vocab_size < needed) {
    throw CapacityError("vocab_size = " + std::to_string(vocab_size) + " is below the " +
                        std::to_string(needed) + " ids this config needs");
  }
}

Vocab::Vocab(std::size_t num_categories, std::size_t num_landmarks)
    : num_categories_(num_categories), num_landmarks_(num_landmarks) {
  tokens_.reserve(kNumReserved + num_categories + kWordSlotsPerLandmark * num_landmarks);
  for (const char* name : kReservedNames) tokens_.emplace_back(name);
  for (std::size_t c = 0; c < num_categories; ++c) tokens_.push_back("cat_" + std::to_string(c));
  for (std::size_t i = 0; i < num_landmarks; ++i) {
    for (std::size_t s = 0; s < kWordSlotsPerLandmark; ++s) {
      tokens_.push_back("lm" + std::to_string(i) + "_w" + std::to_string(s));
    }
  }
}

const std::string& Vocab::token(TokenId id) const {
  if (id >= tokens_.size()) throw LookupError("token id " + std::to_string(id) + " not in vocab");
  return tokens_[id];
}

TokenId Vocab::category_token(std::size_t category) const {
  if (category >= num_categories_) {
    throw LookupError("category " + std::to_string(category) + " not in vocab");
  }
  return static_cast<TokenId>(kNumReserved + category);
}

TokenId Vocab::word_token(std::size_t landmark, std::size_t slot) const {
  if (landmark >= num_landmarks_ || slot >= kWordSlotsPerLandmark) {
    throw LookupError("word slot (" + std::to_string(landmark) + ", " + std::to_string(slot) +
                      ") not in vocab");
  }
  return static_cast<TokenId>(first_word_id() + kWordSlotsPerLandmark * landmark + slot);
}

std::string Vocab::detokenize(const TokenSeq& seq) const {
  std::string out;
  for (TokenId id : seq) {
    if (!out.empty()) out += ' ';
    out += id < tokens_.size() ? tokens_[id] : std::string("<unk>");
  }
  return out;
}

Vocab Vocab::from_tokens(std::vector<std::string> tokens) {
  if (tokens.size() < kNumReserved) throw FormatError("vocab has fewer than the reserved ids");
  for (std::size_t i = 0; i < kNumReserved; ++i) {
    if (tokens[i] != kReservedNames[i]) {
      throw FormatError("vocab id " + std::to_string(i) + " is '" + tokens[i] + "', expected '" +
                        kReservedNames[i] + "'");
    }
  }
  std::size_t c = 0;
  while (kNumReserved + c < tokens.size() && tokens[kNumReserved + c].rfind("cat_", 0) == 0) ++c;
  const std::size_t words = tokens.size() - kNumReserved - c;
  if (words % kWordSlotsPerLandmark != 0) throw FormatError("vocab word section is ragged");
  Vocab v(c, words / kWordSlotsPerLandmark);
  if (v.tokens_ != tokens) throw FormatError("vocab does not follow the generated layout");
  return v;
}

Vocab build_vocab(const SynthConfig& config) {
  config.validate();
  return Vocab(config.num_categories, config.num_landmarks);
}

}  // namespace veal::synthland
