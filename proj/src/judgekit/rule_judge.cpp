#include <algorithm>

#include "veal/errors.hpp"
#include "veal/judgekit/judgekit.hpp"

namespace veal::judgekit {

ResponseVerdict classify_response(const TokenSeq& response, const LandmarkRecord& truth,
                                  const Vocab& vocab) {
  TokenSeq words;
  for (auto t : response) {
    if (vocab.is_word(t)) words.push_back(t);
  }
  ResponseVerdict v;
  v.correct = words == truth.name_tokens;
  if (v.correct) return v;
  const auto category = vocab.category_token(truth.hierarchical_label);
  for (auto t : response) {
    if (t == category ||
        std::find(truth.name_tokens.begin(), truth.name_tokens.end(), t) != truth.name_tokens.end()) {
      v.hint = true;
      break;
    }
  }
  return v;
}

Level judge_rule_based(std::span<const TokenSeq> responses, const LandmarkRecord& truth,
                       const Vocab& vocab, const RuleJudgeOptions& options) {
  if (responses.size() != options.n) {
    throw ProtocolError("expected " + std::to_string(options.n) + " responses, got " +
                        std::to_string(responses.size()));
  }
  std::size_t correct = 0, hints = 0;
  for (const auto& r : responses) {
    const auto v = classify_response(r, truth, vocab);
    correct += v.correct;
    hints += v.hint;
  }
  if (correct >= options.k_strong) return Level::kStronglyKnown;
  if (correct >= 1) return Level::kKnown;
  if (hints >= 1) return Level::kWeaklyUnknown;
  return Level::kUnknown;
}

}  // namespace veal::judgekit
