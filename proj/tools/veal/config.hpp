#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "veal/dualbranch/lexical_prior.hpp"
#include "veal/dualbranch/model.hpp"
#include "veal/judgekit/judgekit.hpp"
#include "veal/synthland/types.hpp"
#include "veal/trainkit/trainkit.hpp"
#include "veal/veknow/veknow.hpp"

namespace veal::cli {

struct EvalConfig {
  std::size_t n = 5;
  double sample_temp = 1.0;
};

// One JSON document:
//   { "seed": 1, "out": "...", "test_fraction": 0.2,
//     "synth": {...}, "model": {...}, "train": {...},
//     "select": [{"method": "HDS", "k": 16}], "judge": {...} }
// Every section and field is optional; unknown fields are rejected.
struct ExperimentConfig {
  std::uint64_t seed = 1;
  std::string out;
  double test_fraction = 0.2;
  synthland::SynthConfig synth;
  dualbranch::DualBranchConfig model;
  dualbranch::LexicalPriorOptions prior;
  bool lexical_prior = true;
  trainkit::WarmStartConfig warm_start;
  trainkit::TrainConfig train;
  std::vector<veknow::SelectionSpec> select;
  judgekit::JudgeConfig judge;
  EvalConfig eval;

  // Runs each module's validation; errors name the section.
  void validate() const;
};

// Sections without their own "seed" inherit the global one.
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::filesystem::path& path);
ExperimentConfig default_config();

// Applies a --seed override to the global seed and every section.
void override_seed(ExperimentConfig& config, std::uint64_t seed);

}  // namespace veal::cli
