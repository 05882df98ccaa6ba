#include "veal/errors.hpp"
#include "veal/judgekit/judgekit.hpp"
#include "veal/numkit/random.hpp"

namespace veal::judgekit {

namespace {

std::string answer_text(const LandmarkRecord& r, const Vocab& vocab) {
  TokenSeq shown;
  for (auto t : r.answer_tokens) {
    if (t != synthland::kEos) shown.push_back(t);
  }
  return vocab.detokenize(shown);
}

}  // namespace

EvalResult evaluate_model(const dualbranch::DualBranchParams& params,
                          const dualbranch::DualBranchConfig& config,
                          std::span<const std::size_t> test_indices,
                          const synthland::Dataset& dataset, const JudgeConfig& judge,
                          std::uint64_t seed, dualbranch::GenerateOptions options) {
  if (test_indices.empty()) throw EmptyInputError("evaluate_model: empty test split");
  EvalResult result;
  for (std::size_t idx : test_indices) {
    if (idx >= dataset.records.size()) throw LookupError("no record " + std::to_string(idx));
    const auto& rec = dataset.records[idx];
    options.seed = numkit::mix_seed(seed, static_cast<std::uint64_t>(rec.landmark_id));
    EvalItem item;
    item.image_id = rec.image_id;
    item.responses = dualbranch::generate(dataset.store.lr_tensor(idx), dataset.store.hr_tensor(idx),
                                          rec.question_tokens, params, config, options);
    result.items.push_back(std::move(item));
  }

  if (judge.mode == JudgeMode::kRule) {
    const RuleJudgeOptions rule{options.n, judge.k_strong};
    for (std::size_t i = 0; i < test_indices.size(); ++i) {
      result.items[i].level = judge_rule_based(result.items[i].responses,
                                               dataset.records[test_indices[i]], dataset.vocab, rule);
    }
  } else {
    std::vector<ExternalRequest> requests;
    for (std::size_t i = 0; i < test_indices.size(); ++i) {
      ExternalRequest req;
      for (const auto& r : result.items[i].responses) {
        req.responses.push_back(dataset.vocab.detokenize(r));
      }
      req.ground_truth = answer_text(dataset.records[test_indices[i]], dataset.vocab);
      requests.push_back(std::move(req));
    }
    const auto outcomes = judge_external_batch(requests, judge.external);
    for (std::size_t i = 0; i < outcomes.size(); ++i) {
      result.items[i].level = outcomes[i].level;
      result.items[i].error = outcomes[i].error;
    }
  }

  std::vector<Level> levels;
  std::size_t errored = 0;
  for (const auto& item : result.items) {
    if (item.level) {
      levels.push_back(*item.level);
    } else {
      ++errored;
    }
  }
  if (levels.empty()) {
    throw Error("every judged item failed; first error: " + result.items.front().error);
  }
  result.report = aggregate(levels, errored);
  return result;
}

}  // namespace veal::judgekit
