#include "commands.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <map>
#include <ostream>
#include <random>
#include <regex>
#include <sstream>

#include "gradcheck_suite.hpp"
#include "veal/dualbranch/checkpoint.hpp"
#include "veal/errors.hpp"
#include "veal/synthland/dataset_io.hpp"
#include "veal/synthland/split.hpp"

namespace veal::cli {

namespace {

fs::path output_dir(const CommonOptions& common, const ExperimentConfig& config, const char* what) {
  if (common.out) return *common.out;
  if (!config.out.empty()) return config.out;
  throw UsageError(std::string(what) + ": no output directory; pass --out or set \"out\" in the config");
}

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::map<std::string, std::size_t> index_by_id(const synthland::Dataset& ds) {
  std::map<std::string, std::size_t> out;
  for (std::size_t i = 0; i < ds.records.size(); ++i) out.emplace(ds.records[i].image_id, i);
  return out;
}

synthland::Split split_of(const synthland::Dataset& ds, const ExperimentConfig& config) {
  return synthland::holdout_split(ds.records.size(), config.test_fraction, config.seed);
}

}  // namespace

ExperimentConfig resolve_config(const CommonOptions& common) {
  ExperimentConfig c = common.config ? load_config(*common.config) : default_config();
  if (common.seed) override_seed(c, *common.seed);
  return c;
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw LookupError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file_atomically(const fs::path& path, const std::string& bytes) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + tmp.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error("write failed for " + tmp.string());
  }
  fs::rename(tmp, path);
}

void write_directory_atomically(const fs::path& target, const std::function<void(const fs::path&)>& fill) {
  const fs::path abs = fs::absolute(target).lexically_normal();
  const fs::path parent = abs.parent_path();
  fs::create_directories(parent);
  std::random_device rd;
  fs::path staging;
  do {
    std::ostringstream name;
    name << "." << abs.filename().string() << ".staging-" << std::hex << rd();
    staging = parent / name.str();
  } while (fs::exists(staging));
  fs::create_directory(staging);
  try {
    fill(staging);
  } catch (...) {
    std::error_code ec;
    fs::remove_all(staging, ec);
    throw;
  }
  if (fs::exists(abs)) {
    fs::path old = staging;
    old += ".old";
    fs::rename(abs, old);
    fs::rename(staging, abs);
    fs::remove_all(old);
  } else {
    fs::rename(staging, abs);
  }
}

void cmd_synth(const SynthOptions& opts, std::ostream& log) {
  const ExperimentConfig config = resolve_config(opts.common);
  const fs::path out = output_dir(opts.common, config, "synth");
  const synthland::Dataset ds = synthland::generate(config.synth);
  write_directory_atomically(out, [&](const fs::path& dir) { synthland::write_dataset(ds, dir); });
  const auto& st = ds.store;
  log << "dataset " << out.string() << ": M=" << st.num_landmarks << " C=" << st.num_categories
      << " E=" << config.synth.entities_per_landmark << " dim=" << st.dim
      << " lr_patches=" << st.lr_patches << " hr_patches=" << st.hr_patches
      << " vocab=" << ds.vocab.size() << "\n";
}

void cmd_score(const ScoreOptions& opts, std::ostream& log) {
  const synthland::Dataset ds = synthland::read_dataset(opts.data);
  const auto scores = veknow::score_dataset(ds.records, ds.store);
  const fs::path out = opts.common.out.value_or(opts.data);
  write_file_atomically(out / "scores.csv", veknow::scores_csv(scores));
  log << "scored " << scores.size() << " images -> " << (out / "scores.csv").string() << "\n";
}

std::vector<fs::path> cmd_select(const SelectOptions& opts, std::ostream& log) {
  ExperimentConfig config = resolve_config(opts.common);
  std::vector<veknow::SelectionSpec> specs;
  if (opts.method || opts.k) {
    if (!opts.method || !opts.k) throw UsageError("select: --method and --k go together");
    veknow::SelectionSpec s;
    s.method = veknow::parse_method(*opts.method);
    s.k = *opts.k;
    s.seed = config.seed;
    specs.push_back(s);
  } else {
    specs = config.select;
  }
  if (specs.empty()) throw UsageError("select: pass --method and --k or list selections in the config");
  const synthland::Dataset ds = synthland::read_dataset(opts.data);

  std::vector<synthland::LandmarkRecord> pool;
  if (opts.whole_dataset) {
    pool = ds.records;
  } else {
    for (std::size_t i : split_of(ds, config).train) pool.push_back(ds.records[i]);
  }
  const auto scores = veknow::score_dataset(pool, ds.store);
  std::map<std::string, const veknow::KnowledgeScore*> by_id;
  for (const auto& s : scores) by_id[s.image_id] = &s;

  const fs::path out = opts.common.out.value_or(opts.data);
  std::vector<fs::path> written;
  for (const auto& spec : specs) {
    const auto ids = veknow::select(scores, spec);
    const fs::path path = out / veknow::subset_filename(spec.method, spec.k);
    write_file_atomically(path, veknow::subset_json(ids));
    written.push_back(path);
    double smin = 0, smax = 0, rmin = 0, rmax = 0;
    for (std::size_t i = 0; i < ids.size(); ++i) {
      const auto* s = by_id.at(ids[i]);
      if (i == 0) {
        smin = smax = s->sim_score;
        rmin = rmax = s->rsr;
      }
      smin = std::min(smin, s->sim_score);
      smax = std::max(smax, s->sim_score);
      rmin = std::min(rmin, s->rsr);
      rmax = std::max(rmax, s->rsr);
    }
    char line[256];
    std::snprintf(line, sizeof line, "%s k=%zu of %zu: sim [%.4f, %.4f] rsr [%.4f, %.4f] -> %s\n",
                  veknow::method_name(spec.method).c_str(), ids.size(), scores.size(), smin, smax,
                  rmin, rmax, path.string().c_str());
    log << line;
  }
  return written;
}

void cmd_train(const TrainOptions& opts, std::ostream& log) {
  const ExperimentConfig config = resolve_config(opts.common);
  const fs::path out = output_dir(opts.common, config, "train");
  const trainkit::AblationFlags flags = trainkit::parse_ablation(opts.ablation);
  flags.validate();
  const synthland::Dataset ds = synthland::read_dataset(opts.data);
  const synthland::Split split = split_of(ds, config);

  std::vector<std::size_t> indices;
  if (opts.subset) {
    const auto ids = veknow::parse_subset_json(read_file(*opts.subset));
    const auto by_id = index_by_id(ds);
    for (const auto& id : ids) {
      auto it = by_id.find(id);
      if (it == by_id.end()) throw LookupError("subset image '" + id + "' is not in the dataset");
      if (std::binary_search(split.test.begin(), split.test.end(), it->second)) {
        throw UsageError("subset image '" + id + "' belongs to the held-out split");
      }
      indices.push_back(it->second);
    }
    std::sort(indices.begin(), indices.end());
    indices.erase(std::unique(indices.begin(), indices.end()), indices.end());
  } else {
    indices = split.train;
  }
  if (indices.empty()) throw EmptyInputError("train: no training records");

  dualbranch::DualBranchConfig mc = config.model;
  mc.fit_to(ds);
  mc.high_res_branch = flags.hr_branch;
  mc.validate();

  const auto init = trainkit::initial_params(mc, ds, config.lexical_prior, config.prior);
  const auto warm = trainkit::warm_start(init, mc, ds, config.warm_start, config.prior.entity_weight,
                                         config.seed);
  log << "training " << trainkit::ablation_name(flags) << " on " << indices.size() << " records, "
      << config.train.epochs << " epochs\n";

  write_directory_atomically(out, [&](const fs::path& dir) {
    trainkit::TrainHooks hooks;
    hooks.on_epoch_end = [&](std::size_t epoch, const dualbranch::DualBranchParams& p) {
      dualbranch::save_checkpoint(dir / ("epoch_" + std::to_string(epoch + 1) + ".bin"), mc, p);
    };
    if (config.train.eval_every > 0) {
      hooks.evaluate = [&](const dualbranch::DualBranchParams& p) {
        judgekit::JudgeConfig rule;
        rule.k_strong = config.judge.k_strong;
        dualbranch::GenerateOptions g;
        g.n = config.eval.n;
        g.sample_temp = config.eval.sample_temp;
        return judgekit::evaluate_model(p, mc, split.test, ds, rule, config.seed, g).report;
      };
    }
    auto result = trainkit::train(warm, mc, ds, indices, config.train, flags, hooks);
    result.log.timestamp = utc_timestamp();
    dualbranch::save_checkpoint(dir / "params.bin", mc, result.params);
    write_file_atomically(dir / "runlog.jsonl", trainkit::runlog_jsonl(result.log));
    if (!result.log.steps.empty()) {
      const auto& last = result.log.steps.back();
      log << "steps=" << result.log.steps.size() << " final L_g=" << last.lg << " total=" << last.total
          << "\n";
    }
  });
  log << "wrote " << (out / "params.bin").string() << "\n";
}

CheckpointArg parse_checkpoint_arg(const std::string& text) {
  const auto eq = text.find('=');
  if (eq != std::string::npos) {
    if (eq == 0) throw UsageError("checkpoint '" + text + "': empty name");
    return {text.substr(0, eq), text.substr(eq + 1)};
  }
  fs::path p(text);
  std::string name = p.parent_path().filename().string();
  if (name.empty() || name == ".") name = p.stem().string();
  return {name, p};
}

std::vector<judgekit::ReportRow> cmd_eval(const EvalOptions& opts, std::ostream& log) {
  ExperimentConfig config = resolve_config(opts.common);
  if (opts.checkpoints.empty()) throw UsageError("eval: at least one --checkpoint is required");
  if (opts.judge) {
    if (*opts.judge == "rule") {
      config.judge.mode = judgekit::JudgeMode::kRule;
    } else if (*opts.judge == "external") {
      config.judge.mode = judgekit::JudgeMode::kExternal;
    } else {
      throw UsageError("--judge: expected rule or external, got '" + *opts.judge + "'");
    }
  }
  if (opts.endpoint) config.judge.external.endpoint = *opts.endpoint;
  if (config.judge.mode == judgekit::JudgeMode::kExternal && config.judge.external.endpoint.empty()) {
    throw UsageError("--judge external needs --endpoint");
  }
  const fs::path out = output_dir(opts.common, config, "eval");
  const synthland::Dataset ds = synthland::read_dataset(opts.data);
  const synthland::Split split = split_of(ds, config);
  if (split.test.empty()) throw EmptyInputError("eval: the held-out split is empty");

  std::vector<CheckpointArg> args;
  for (const auto& c : opts.checkpoints) args.push_back(parse_checkpoint_arg(c));
  if (opts.baseline && args.size() > 1 &&
      std::none_of(args.begin(), args.end(), [&](const auto& a) { return a.name == *opts.baseline; })) {
    throw UsageError("baseline '" + *opts.baseline + "' is not among the checkpoints");
  }
  if (!opts.baseline && args.size() > 1 && !opts.incremental) {
    throw UsageError("eval: several checkpoints need --baseline (or --incremental)");
  }

  dualbranch::GenerateOptions g;
  g.n = config.eval.n;
  g.sample_temp = config.eval.sample_temp;
  std::vector<judgekit::ReportRow> rows;
  for (const auto& a : args) {
    const auto ckpt = dualbranch::load_checkpoint(a.path);
    const auto result = judgekit::evaluate_model(ckpt.params, ckpt.config, split.test, ds, config.judge,
                                                 config.seed, g);
    for (const auto& item : result.items) {
      if (!item.error.empty()) log << "warning: " << a.name << " " << item.image_id << ": " << item.error << "\n";
    }
    rows.push_back({a.name, result.report, std::nullopt});
  }
  judgekit::attach_deltas(rows, opts.baseline.value_or(rows.front().name), opts.incremental);
  write_directory_atomically(out, [&](const fs::path& dir) {
    write_file_atomically(dir / "report.json", judgekit::report_json(rows));
    write_file_atomically(dir / "report.csv", judgekit::report_csv(rows));
  });
  log << format_table(rows);
  return rows;
}

std::vector<judgekit::ReportRow> cmd_report(const ReportOptions& opts, std::ostream& log) {
  std::vector<judgekit::ReportRow> rows;
  for (const auto& path : opts.inputs) {
    for (auto& r : judgekit::parse_report_json(read_file(path))) {
      r.delta.reset();
      rows.push_back(std::move(r));
    }
  }
  static const std::regex kCounts(R"(^([^=]+)=(\d+)/(\d+)/(\d+)/(\d+)$)");
  for (const auto& text : opts.counts) {
    std::smatch m;
    if (!std::regex_match(text, m, kCounts)) {
      throw UsageError("--counts '" + text + "': expected name=strong/known/weak/unknown");
    }
    std::array<std::size_t, 4> c{};
    for (std::size_t i = 0; i < 4; ++i) c[i] = std::stoull(m[i + 2].str());
    rows.push_back({m[1].str(), judgekit::report_from_counts(c), std::nullopt});
  }
  if (rows.empty()) throw UsageError("report: pass --input or --counts");
  if (!opts.baseline && rows.size() > 1 && !opts.incremental) {
    throw UsageError("report: several rows need --baseline (or --incremental)");
  }
  judgekit::attach_deltas(rows, opts.baseline.value_or(rows.front().name), opts.incremental);
  if (opts.common.out) {
    write_directory_atomically(*opts.common.out, [&](const fs::path& dir) {
      write_file_atomically(dir / "report.json", judgekit::report_json(rows));
      write_file_atomically(dir / "report.csv", judgekit::report_csv(rows));
    });
  }
  log << format_table(rows);
  return rows;
}

double cmd_gradcheck(std::uint64_t seed, std::ostream& log) {
  double worst = 0.0;
  for (const auto& e : run_gradcheck_suite(seed)) {
    char line[160];
    std::snprintf(line, sizeof line, "%-22s %-13s %5zu  %.3e\n", e.name.c_str(), e.group.c_str(), e.size,
                  e.max_rel_error);
    log << line;
    worst = std::max(worst, e.max_rel_error);
  }
  char line[80];
  std::snprintf(line, sizeof line, "max relative error %.3e\n", worst);
  log << line;
  return worst;
}

std::string format_table(const std::vector<judgekit::ReportRow>& rows) {
  std::vector<std::vector<std::string>> cells = {
      {"config", "n", "Strongly Known", "Known", "Weakly Unknown", "Unknown", "Accuracy"}};
  for (const auto& r : rows) {
    auto with_delta = [&](double v, std::optional<double> d) {
      std::string s = judgekit::format_percent(v);
      if (d) s += " (" + judgekit::format_delta(*d) + ")";
      return s;
    };
    const auto& d = r.delta;
    std::vector<std::string> line = {r.name, std::to_string(r.report.total)};
    line.push_back(with_delta(r.report.proportions[0], d ? std::optional(d->proportions[0]) : std::nullopt));
    line.push_back(with_delta(r.report.proportions[1], d ? std::optional(d->proportions[1]) : std::nullopt));
    line.push_back(with_delta(r.report.proportions[2], std::nullopt));
    line.push_back(with_delta(r.report.proportions[3], std::nullopt));
    line.push_back(with_delta(r.report.accuracy, d ? std::optional(d->accuracy) : std::nullopt));
    if (r.report.errored > 0) line.push_back("errored=" + std::to_string(r.report.errored));
    cells.push_back(std::move(line));
  }
  std::vector<std::size_t> width(8, 0);
  for (const auto& line : cells) {
    for (std::size_t c = 0; c < line.size(); ++c) width[c] = std::max(width[c], line[c].size());
  }
  std::ostringstream os;
  for (const auto& line : cells) {
    for (std::size_t c = 0; c < line.size(); ++c) {
      if (c > 0) os << "  ";
      if (c == 0) {
        os << std::left;
      } else {
        os << std::right;
      }
      os << std::setw(static_cast<int>(width[c])) << line[c];
    }
    os << "\n";
  }
  return os.str();
}

}  // namespace veal::cli
