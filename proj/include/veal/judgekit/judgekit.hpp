#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "veal/dualbranch/model.hpp"
#include "veal/synthland/types.hpp"

namespace veal::judgekit {

using synthland::LandmarkRecord;
using synthland::TokenSeq;
using synthland::Vocab;

// Ordered best to worst.
enum class Level { kStronglyKnown = 0, kKnown = 1, kWeaklyUnknown = 2, kUnknown = 3 };

inline constexpr std::array<Level, 4> kLevels = {Level::kStronglyKnown, Level::kKnown,
                                                 Level::kWeaklyUnknown, Level::kUnknown};

// "Strongly Known", "Known", "Weakly Unknown", "Unknown".
const char* level_name(Level level);
// Exact display name; anything else throws ProtocolError.
Level parse_level(const std::string& name);
// True when a is a strictly better recognition level than b.
bool better(Level a, Level b);

// --- rule-based judge -------------------------------------------------------

struct RuleJudgeOptions {
  std::size_t n = 5;
  std::size_t k_strong = 3;
};

struct ResponseVerdict {
  bool correct = false;
  bool hint = false;
};

// correct: the response's word tokens, in order, equal the truth's name.
// hint: not correct, but mentions the truth's category token or one of its
// name words.
ResponseVerdict classify_response(const TokenSeq& response, const LandmarkRecord& truth,
                                  const Vocab& vocab);

// Throws ProtocolError unless exactly options.n responses are given.
Level judge_rule_based(std::span<const TokenSeq> responses, const LandmarkRecord& truth,
                       const Vocab& vocab, const RuleJudgeOptions& options = {});

// --- external judge ---------------------------------------------------------

struct ExternalJudgeOptions {
  std::string endpoint;  // http://host[:port]/path
  double timeout_seconds = 30.0;
  std::size_t attempts = 3;  // one try plus two retries on transport failure
  std::size_t concurrency = 4;
};

struct ExternalRequest {
  std::vector<std::string> responses;
  std::string ground_truth;
};

// POSTs {responses, ground_truth, levels} and expects {"level": name}.
// Throws ProtocolError on a malformed reply or non-200 status, and Error once
// every attempt has failed in transport.
Level judge_external(const ExternalRequest& request, const ExternalJudgeOptions& options);

struct JudgeOutcome {
  std::optional<Level> level;
  std::string error;  // set when level is empty
};

// Judges every request with at most options.concurrency in flight; results
// keep request order. Failures are captured per item.
std::vector<JudgeOutcome> judge_external_batch(std::span<const ExternalRequest> requests,
                                               const ExternalJudgeOptions& options);

// --- reports ----------------------------------------------------------------

struct EvalReport {
  std::array<std::size_t, 4> counts{};
  std::size_t total = 0;    // judged items, sum of counts
  std::size_t errored = 0;  // external-judge failures, not in counts
  std::array<double, 4> proportions{};  // percent, 2 decimals
  double accuracy = 0.0;                // percent, 2 decimals, from raw counts

  bool operator==(const EvalReport&) const = default;
};

// Throws EmptyInputError when the counts sum to zero.
EvalReport report_from_counts(const std::array<std::size_t, 4>& counts, std::size_t errored = 0);
EvalReport aggregate(std::span<const Level> levels, std::size_t errored = 0);

struct ReportDelta {
  std::array<double, 4> proportions{};
  double accuracy = 0.0;

  bool operator==(const ReportDelta&) const = default;
};

// Column-wise report - baseline on the 2-decimal values.
ReportDelta compare(const EvalReport& report, const EvalReport& baseline);

// "%.2f" with an explicit sign on non-zero values: +5.24, -0.04, 0.00.
std::string format_delta(double delta);
std::string format_percent(double value);

struct ReportRow {
  std::string name;
  EvalReport report;
  std::optional<ReportDelta> delta;
};

// Fills each row's delta against the row named `baseline`; with `incremental`
// each row is compared to the one before it instead. A single row gets no
// delta. Throws UsageError when a multi-row table has no usable baseline.
void attach_deltas(std::vector<ReportRow>& rows, const std::string& baseline, bool incremental);

std::string report_json(const std::vector<ReportRow>& rows);
std::string report_csv(const std::vector<ReportRow>& rows);
std::vector<ReportRow> parse_report_json(const std::string& text);

// --- model evaluation -------------------------------------------------------

enum class JudgeMode { kRule, kExternal };

struct JudgeConfig {
  JudgeMode mode = JudgeMode::kRule;
  std::size_t k_strong = 3;
  ExternalJudgeOptions external;
};

struct EvalItem {
  std::string image_id;
  std::vector<TokenSeq> responses;
  std::optional<Level> level;
  std::string error;
};

struct EvalResult {
  EvalReport report;
  std::vector<EvalItem> items;
};

// Generates options.n responses per test record (record index i uses image
// i of the store) and judges them. Response sampling for a record is seeded
// from (seed, landmark_id), so results do not depend on record order.
EvalResult evaluate_model(const dualbranch::DualBranchParams& params,
                          const dualbranch::DualBranchConfig& config,
                          std::span<const std::size_t> test_indices,
                          const synthland::Dataset& dataset, const JudgeConfig& judge,
                          std::uint64_t seed, dualbranch::GenerateOptions options = {});

}  // namespace veal::judgekit
