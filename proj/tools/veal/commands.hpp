#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "config.hpp"

namespace veal::cli {

namespace fs = std::filesystem;

// Flags shared by every command. Unset flags fall back to the config file,
// then to built-in defaults.
struct CommonOptions {
  std::optional<fs::path> config;
  std::optional<std::uint64_t> seed;
  std::optional<fs::path> out;
};

// Loads --config (or defaults) and applies --seed.
ExperimentConfig resolve_config(const CommonOptions& common);

// Builds a directory next to `target` and renames it into place once `fill`
// returns, replacing any previous directory. A failed fill leaves `target`
// untouched.
void write_directory_atomically(const fs::path& target, const std::function<void(const fs::path&)>& fill);

void write_file_atomically(const fs::path& path, const std::string& bytes);
std::string read_file(const fs::path& path);

struct SynthOptions {
  CommonOptions common;
};
// Writes records.jsonl, embeddings.bin and vocab.json to --out (or the
// config's "out").
void cmd_synth(const SynthOptions& opts, std::ostream& log);

struct ScoreOptions {
  CommonOptions common;
  fs::path data;
};
// Writes scores.csv for every record into --out (default: the dataset dir).
void cmd_score(const ScoreOptions& opts, std::ostream& log);

struct SelectOptions {
  CommonOptions common;
  fs::path data;
  std::optional<std::string> method;
  std::optional<std::size_t> k;
  bool whole_dataset = false;  // select among all records, not the train split
};
// Writes subset_<method>_<k>.json per selection into --out (default: the
// dataset dir). Without --method/--k the config's "select" list is used.
std::vector<fs::path> cmd_select(const SelectOptions& opts, std::ostream& log);

struct TrainOptions {
  CommonOptions common;
  fs::path data;
  std::optional<fs::path> subset;
  std::string ablation = "full";
};
// Writes params.bin, epoch_<e>.bin (e from 1) and runlog.jsonl into --out.
void cmd_train(const TrainOptions& opts, std::ostream& log);

struct CheckpointArg {
  std::string name;
  fs::path path;
};
// "name=path" or a bare path, named after its parent directory (or stem when
// that is empty).
CheckpointArg parse_checkpoint_arg(const std::string& text);

struct EvalOptions {
  CommonOptions common;
  fs::path data;
  std::vector<std::string> checkpoints;
  std::optional<std::string> judge;
  std::optional<std::string> endpoint;
  std::optional<std::string> baseline;
  bool incremental = false;
};
// Evaluates each checkpoint on the held-out split; writes report.json and
// report.csv into --out and prints the table.
std::vector<judgekit::ReportRow> cmd_eval(const EvalOptions& opts, std::ostream& log);

struct ReportOptions {
  CommonOptions common;
  std::vector<fs::path> inputs;      // report.json files
  std::vector<std::string> counts;   // "name=sk/k/wu/u"
  std::optional<std::string> baseline;
  bool incremental = false;
};
// Merges rows from report.json files and raw counts, recomputes deltas,
// prints the table and, with --out, writes report.json and report.csv.
std::vector<judgekit::ReportRow> cmd_report(const ReportOptions& opts, std::ostream& log);

// Prints one line per parameter tensor and the overall maximum; returns it.
double cmd_gradcheck(std::uint64_t seed, std::ostream& log);

// Aligned text table of report rows.
std::string format_table(const std::vector<judgekit::ReportRow>& rows);

}  // namespace veal::cli
