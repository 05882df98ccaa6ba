// Acceptance checks, one per criterion. `acceptance --criterion N` runs one;
// without the flag all nine run. Each prints a single PASS/FAIL line.

#include <unistd.h>

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "commands.hpp"
#include "gradcheck_suite.hpp"
#include "veal/errors.hpp"
#include "veal/judgekit/judgekit.hpp"
#include "veal/numkit/ops.hpp"
#include "veal/numkit/random.hpp"
#include "veal/objectives/objectives.hpp"
#include "veal/synthland/types.hpp"
#include "veal/trainkit/trainkit.hpp"
#include "veal/veknow/veknow.hpp"

namespace fs = std::filesystem;
namespace jk = veal::judgekit;
namespace nk = veal::numkit;
namespace ob = veal::objectives;
namespace sl = veal::synthland;
namespace vk = veal::veknow;
namespace cli = veal::cli;
using nk::Tensor;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

// Collects failure messages; the first few end up in the summary line.
struct Checker {
  std::vector<std::string> failures;
  std::size_t checks = 0;

  void expect(bool ok, const std::string& what) {
    ++checks;
    if (!ok) failures.push_back(what);
  }
  Outcome outcome(const std::string& summary) const {
    if (failures.empty()) return {true, summary};
    std::string d = std::to_string(failures.size()) + "/" + std::to_string(checks) + " checks failed: ";
    for (std::size_t i = 0; i < failures.size() && i < 4; ++i) d += (i ? "; " : "") + failures[i];
    if (failures.size() > 4) d += "; ...";
    return {false, d};
  }
};

class ScratchDir {
 public:
  explicit ScratchDir(const std::string& tag)
      : path_(fs::temp_directory_path() / ("veal_acceptance_" + tag + "_" + std::to_string(::getpid()))) {
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~ScratchDir() { fs::remove_all(path_); }
  const fs::path& path() const { return path_; }

 private:
  fs::path path_;
};

std::string pct(double v) { return jk::format_percent(v); }

// --- 1 and 2: paper tables from raw counts -----------------------------------

using Counts = std::array<std::size_t, 4>;

struct TableRow {
  std::string name;
  Counts counts;
  // Printed cells, "" when the table does not show that column.
  std::string strongly_known, known, accuracy;
  std::string d_strongly_known, d_known, d_accuracy;
};

Outcome check_table(std::vector<TableRow> table, const std::string& baseline, bool incremental) {
  Checker c;
  std::vector<jk::ReportRow> rows;
  for (const auto& t : table) rows.push_back({t.name, jk::report_from_counts(t.counts), {}});
  jk::attach_deltas(rows, baseline, incremental);
  auto cell = [&](const std::string& row, const char* col, const std::string& want, const std::string& got) {
    if (want.empty()) return;
    c.expect(want == got, row + " " + col + " " + got + " vs printed " + want);
  };
  for (std::size_t i = 0; i < table.size(); ++i) {
    const auto& t = table[i];
    const auto& r = rows[i].report;
    cell(t.name, "SK", t.strongly_known, pct(r.proportions[0]));
    cell(t.name, "K", t.known, pct(r.proportions[1]));
    cell(t.name, "Acc", t.accuracy, pct(r.accuracy));
    const double raw = 100.0 * static_cast<double>(t.counts[0] + t.counts[1]) / static_cast<double>(r.total);
    c.expect(pct(raw) == pct(r.accuracy), t.name + " accuracy not from raw counts");
    if (rows[i].delta) {
      cell(t.name, "dSK", t.d_strongly_known, jk::format_delta(rows[i].delta->proportions[0]));
      cell(t.name, "dK", t.d_known, jk::format_delta(rows[i].delta->proportions[1]));
      cell(t.name, "dAcc", t.d_accuracy, jk::format_delta(rows[i].delta->accuracy));
    }
  }
  return c.outcome(std::to_string(c.checks) + " cells match");
}

Outcome criterion1() {
  // Ablation counts and the ablation table; deltas are row over row.
  return check_table(
      {
          {"Baseline", {103, 114, 145, 2138}, "4.12", "4.56", "8.68", "", "", ""},
          {"+HSS-50k", {187, 161, 145, 2007}, "7.48", "6.44", "13.92", "+3.36", "+1.88", "+5.24"},
          {"+HR Branch", {198, 149, 152, 2001}, "7.92", "5.96", "13.88", "+0.44", "-0.48", "-0.04"},
          {"+Le", {212, 148, 163, 1977}, "8.48", "5.92", "14.40", "+0.56", "-0.04", "+0.52"},
          {"+Lh", {213, 175, 159, 1953}, "8.52", "7.00", "15.52", "+0.04", "+1.08", "+1.12"},
      },
      "", true);
}

Outcome criterion2() {
  // Generalizability counts against the accuracy table; deltas vs baseline.
  const Counts base{103, 114, 145, 2138};
  struct Block {
    std::string subset;
    std::vector<TableRow> rows;
  };
  const std::vector<Block> blocks = {
      {"HDS-25k",
       {{"+Data", {182, 142, 151, 2025}, "", "", "13.00", "", "", "+4.32"},
        {"+HR Branch", {218, 122, 185, 1975}, "", "", "13.60", "", "", "+4.92"},
        {"+Le", {229, 121, 199, 1951}, "", "", "14.00", "", "", "+5.32"},
        {"+Lh", {233, 127, 175, 1965}, "", "", "14.40", "", "", "+5.72"}}},
      {"HSS-25k",
       {{"+Data", {169, 135, 201, 1995}, "", "", "13.00", "", "", "+4.32"},
        {"+HR Branch", {202, 144, 177, 1977}, "", "", "13.84", "", "", "+5.16"},
        {"+Le", {226, 134, 153, 1987}, "", "", "14.40", "", "", "+5.72"},
        {"+Lh", {205, 141, 193, 1961}, "", "", "13.84", "", "", "+5.16"}}},
      {"LCS-25k",
       {{"+Data", {179, 88, 253, 1980}, "", "", "10.68", "", "", "+2.00"},
        {"+HR Branch", {203, 99, 243, 1955}, "", "", "12.08", "", "", "+3.40"},
        {"+Le", {198, 110, 266, 1926}, "", "", "12.32", "", "", "+3.64"},
        {"+Lh", {192, 116, 254, 1938}, "", "", "12.32", "", "", "+3.64"}}},
  };
  Outcome all{true, ""};
  std::size_t failed_blocks = 0;
  std::string details;
  for (const auto& b : blocks) {
    std::vector<TableRow> rows{{"Baseline", base, "", "", "8.68", "", "", ""}};
    for (auto r : b.rows) {
      r.name = b.subset + " " + r.name;
      rows.push_back(r);
    }
    const auto o = check_table(rows, "Baseline", false);
    if (!o.pass) {
      ++failed_blocks;
      details += (details.empty() ? "" : " | ") + b.subset + ": " + o.detail;
    }
  }
  if (failed_blocks == 0) return {true, "all three subsets match"};
  return {false, details};
}

// --- 3: gradient suite ---------------------------------------------------------

Outcome criterion3() {
  const auto entries = cli::run_gradcheck_suite(7);
  double worst = 0.0;
  std::string worst_name;
  bool saw_temp = false, saw_entity = false;
  for (const auto& e : entries) {
    if (e.max_rel_error > worst) worst = e.max_rel_error, worst_name = e.name;
    saw_temp |= e.name.find("log_temp") != std::string::npos;
    saw_entity |= e.name.find("entity_table") != std::string::npos;
  }
  std::ostringstream d;
  d << entries.size() << " tensors, max rel error " << std::scientific << std::setprecision(2) << worst << " ("
    << worst_name << ")";
  if (!saw_temp || !saw_entity) return {false, d.str() + ", log_temp or entity_table not checked"};
  return {worst <= 1e-5, d.str()};
}

// --- 4: analytic loss values ---------------------------------------------------

Outcome criterion4() {
  Checker c;
  auto near = [&](double got, double want, double tol, const std::string& what) {
    std::ostringstream s;
    s << what << " = " << std::setprecision(12) << got << " (want " << want << ")";
    c.expect(std::abs(got - want) <= tol, s.str());
  };
  {
    std::vector<ob::ContrastiveItem> one{{Tensor::matrix({{0.3, -0.2, 0.9}}), Tensor::matrix({{1.0, 0.5, 0.1}})}};
    c.expect(ob::entity_contrastive(one, Tensor::scalar(0.0)).item() == 0.0, "L_e at E=1 is not 0");
  }
  {
    std::vector<ob::ContrastiveItem> two{
        {Tensor::matrix({{1, 0, 0}, {0, 1, 0}}), Tensor::matrix({{0, 0, 1}, {0, 0, 3}})}};
    near(ob::entity_contrastive(two, Tensor::scalar(0.0)).item(), 2 * std::numbers::ln2, 1e-9, "L_e uniform");
  }
  for (std::size_t classes : {2u, 4u, 7u}) {
    nk::Rng rng(classes);
    std::vector<double> v(12);
    for (double& x : v) x = rng.normal();
    std::vector<ob::HierarchicalItem> items{{Tensor({3, 4}, v), std::nullopt, classes - 1}};
    near(ob::hierarchical_loss(items, Tensor::zeros({4, classes}), Tensor::zeros({1, classes})).item(),
         std::log(static_cast<double>(classes)), 1e-9, "L_h zero classifier, " + std::to_string(classes) + " classes");
  }
  for (std::size_t vocab : {10u, 37u}) {
    for (std::size_t masked : {1u, 3u}) {
      std::vector<bool> mask(4, false);
      for (std::size_t t = 0; t < masked; ++t) mask[t] = true;
      std::vector<ob::LmItem> items{{Tensor::zeros({4, vocab}), {1, 2, 3, 4}, mask}};
      near(ob::lm_loss(items).item(), static_cast<double>(masked) * std::log(static_cast<double>(vocab)), 1e-9,
           "L_g uniform V=" + std::to_string(vocab) + " tokens=" + std::to_string(masked));
    }
  }
  return c.outcome(std::to_string(c.checks) + " values within 1e-9");
}

// --- 5: selection properties ----------------------------------------------------

sl::Dataset scaled_copy(const sl::Dataset& ds, nk::Rng& rng) {
  sl::Dataset out = ds;
  const std::size_t per_image = ds.store.lr_patches * ds.store.dim;
  for (std::size_t i = 0; i < ds.store.num_images; ++i) {
    const double f = std::exp(rng.uniform(-3.0, 3.0));
    for (std::size_t j = 0; j < per_image; ++j) out.store.lr[i * per_image + j] *= f;
  }
  for (std::size_t m = 0; m < ds.store.num_landmarks; ++m) {
    const double f = std::exp(rng.uniform(-3.0, 3.0));
    for (std::size_t j = 0; j < ds.store.dim; ++j) out.store.text[m * ds.store.dim + j] *= f;
  }
  return out;
}

Outcome criterion5() {
  Checker c;
  nk::Rng rng(2024);
  const vk::Method methods[] = {vk::Method::kHDS, vk::Method::kHSS, vk::Method::kLCS, vk::Method::kBRS};
  for (int set = 0; set < 1000; ++set) {
    sl::SynthConfig sc;
    sc.num_landmarks = 3 + rng.below(28);
    sc.num_categories = 1 + rng.below(std::min<std::uint64_t>(4, sc.num_landmarks));
    sc.embed_dim = 4 + rng.below(8);
    sc.lr_patches = 1 + rng.below(6);
    sc.hr_patches = 4;
    sc.entities_per_landmark = 1;
    sc.noise_sigma = rng.uniform(0.05, 1.0);
    sc.seed = rng.next();
    const auto ds = sl::generate(sc);
    const auto scores = vk::score_dataset(ds.records, ds.store);
    const auto scaled = scaled_copy(ds, rng);
    const auto scores2 = vk::score_dataset(scaled.records, scaled.store);
    const std::size_t n = scores.size();
    const std::size_t k = 1 + rng.below(n);
    const std::string tag = "set " + std::to_string(set) + " k=" + std::to_string(k);

    for (auto m : methods) {
      const vk::SelectionSpec spec{m, k, rng.next()};
      const auto ids = vk::select(scores, spec);
      std::vector<std::string> sorted = ids;
      std::sort(sorted.begin(), sorted.end());
      c.expect(ids.size() == k && std::adjacent_find(sorted.begin(), sorted.end()) == sorted.end(),
               vk::method_name(m) + " did not return k distinct ids (" + tag + ")");
      c.expect(vk::select(scores2, spec) == ids, vk::method_name(m) + " changed under rescaling (" + tag + ")");
    }

    const auto hds = vk::select(scores, {vk::Method::kHDS, k, 0});
    std::vector<bool> chosen(n, false);
    for (std::size_t i = 0; i < n; ++i)
      chosen[i] = std::find(hds.begin(), hds.end(), scores[i].image_id) != hds.end();
    for (std::size_t a = 0; a < n; ++a) {
      if (!chosen[a]) continue;
      for (std::size_t b = 0; b < n; ++b) {
        if (chosen[b]) continue;
        const auto& s = scores[a];
        const auto& u = scores[b];
        const bool ok = s.rsr > u.rsr ||
                        (s.rsr == u.rsr && (s.sim_score > u.sim_score ||
                                            (s.sim_score == u.sim_score && s.image_id < u.image_id)));
        c.expect(ok, "HDS kept " + s.image_id + " over " + u.image_id + " (" + tag + ")");
      }
    }
  }
  return c.outcome("1000 score sets, " + std::to_string(c.checks) + " checks");
}

// --- 6 and 7: CLI pipeline ---------------------------------------------------------

struct PipelineRun {
  std::map<std::string, double> accuracy;  // checkpoint name -> percent
  fs::path data, eval;
};

// synth -> select -> train (lm_only, full, HDS half, LCS half) -> eval, with the
// same entry points the `veal` binary uses.
PipelineRun run_pipeline(const fs::path& root, std::uint64_t seed, bool subsets_only) {
  std::ostringstream log;
  const fs::path config = VEAL_BENCHMARK_CONFIG;
  auto common = [&](const fs::path& out) { return cli::CommonOptions{config, seed, out}; };
  PipelineRun run;
  run.data = root / "data";
  run.eval = root / "eval";
  cli::cmd_synth({common(run.data)}, log);
  cli::cmd_score({common(run.data), run.data}, log);
  cli::SelectOptions sel;
  sel.common = common(run.data);
  sel.data = run.data;
  cli::cmd_select(sel, log);

  std::vector<std::pair<std::string, cli::TrainOptions>> runs;
  auto add = [&](const std::string& name, const std::string& ablation, std::optional<fs::path> subset) {
    cli::TrainOptions t;
    t.common = common(root / name);
    t.data = run.data;
    t.ablation = ablation;
    t.subset = subset;
    runs.emplace_back(name, t);
  };
  if (!subsets_only) {
    add("lm_only", "lm_only", std::nullopt);
    add("full", "full", std::nullopt);
  }
  add("hds", "full", run.data / vk::subset_filename(vk::Method::kHDS, 16));
  add("lcs", "full", run.data / vk::subset_filename(vk::Method::kLCS, 16));

  cli::EvalOptions ev;
  ev.common = common(run.eval);
  ev.data = run.data;
  for (const auto& [name, opts] : runs) {
    cli::cmd_train(opts, log);
    ev.checkpoints.push_back(name + "=" + (root / name / "params.bin").string());
  }
  ev.baseline = runs.front().first;
  for (const auto& row : cli::cmd_eval(ev, log)) run.accuracy[row.name] = row.report.accuracy;
  return run;
}

Outcome criterion6() {
  ScratchDir scratch("c6");
  std::size_t a_wins = 0, b_wins = 0;
  std::ostringstream d;
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const auto run = run_pipeline(scratch.path() / ("seed" + std::to_string(seed)), seed, false);
    const auto& acc = run.accuracy;
    a_wins += acc.at("full") > acc.at("lm_only");
    b_wins += acc.at("hds") >= acc.at("lcs");
    d << "seed " << seed << ": full " << pct(acc.at("full")) << " lm_only " << pct(acc.at("lm_only")) << " hds "
      << pct(acc.at("hds")) << " lcs " << pct(acc.at("lcs")) << "; ";
  }
  d << "full>lm_only " << a_wins << "/3, hds>=lcs " << b_wins << "/3";
  return {a_wins >= 2 && b_wins >= 2, d.str()};
}

Outcome criterion7() {
  ScratchDir scratch("c7");
  const auto a = run_pipeline(scratch.path() / "a", 1, true);
  const auto b = run_pipeline(scratch.path() / "b", 1, true);
  Checker c;
  auto same = [&](const fs::path& rel_data, const fs::path& x, const fs::path& y, bool strip = false) {
    std::string p = cli::read_file(x), q = cli::read_file(y);
    if (strip) p = veal::trainkit::strip_meta(p), q = veal::trainkit::strip_meta(q);
    c.expect(p == q, rel_data.string() + " differs");
  };
  for (const char* f : {"records.jsonl", "embeddings.bin", "vocab.json", "scores.csv"})
    same(f, a.data / f, b.data / f);
  for (auto m : {vk::Method::kHDS, vk::Method::kLCS}) {
    const auto f = vk::subset_filename(m, 16);
    same(f, a.data / f, b.data / f);
  }
  for (const char* r : {"hds", "lcs"}) {
    const fs::path ra = scratch.path() / "a" / r, rb = scratch.path() / "b" / r;
    same(std::string(r) + "/runlog.jsonl", ra / "runlog.jsonl", rb / "runlog.jsonl", true);
    same(std::string(r) + "/params.bin", ra / "params.bin", rb / "params.bin");
  }
  same("report.json", a.eval / "report.json", b.eval / "report.json");
  return c.outcome(std::to_string(c.checks) + " artifacts byte-identical");
}

// --- 8: judge fixtures and monotonicity ---------------------------------------------

Outcome criterion8() {
  Checker c;
  const sl::Vocab vocab(4, 12);
  sl::LandmarkRecord truth;
  truth.landmark_id = 5;
  truth.hierarchical_label = 1;
  truth.name_tokens = {vocab.word_token(5, 0), vocab.word_token(5, 1)};
  const sl::TokenSeq correct = truth.name_tokens;
  const sl::TokenSeq unrelated = {vocab.word_token(9, 0), vocab.word_token(9, 1), vocab.category_token(3)};
  const sl::TokenSeq hint = {vocab.word_token(9, 0), vocab.category_token(1)};

  std::vector<sl::TokenSeq> r(5, correct);
  c.expect(jk::judge_rule_based(r, truth, vocab) == jk::Level::kStronglyKnown, "5/5 correct");
  r.assign(5, unrelated);
  r[0] = correct;
  c.expect(jk::judge_rule_based(r, truth, vocab) == jk::Level::kKnown, "1/5 correct");
  r.assign(5, unrelated);
  r[2] = hint;
  c.expect(jk::judge_rule_based(r, truth, vocab) == jk::Level::kWeaklyUnknown, "0 correct + category hint");
  r.assign(5, unrelated);
  c.expect(jk::judge_rule_based(r, truth, vocab) == jk::Level::kUnknown, "0 correct, no hint");

  // Independent reading of the level rules.
  auto oracle = [&](const std::vector<sl::TokenSeq>& rs) {
    std::size_t n_correct = 0, n_hint = 0;
    for (const auto& s : rs) {
      sl::TokenSeq words;
      for (auto t : s)
        if (t >= vocab.first_word_id() && t < vocab.size()) words.push_back(t);
      if (words == truth.name_tokens) {
        ++n_correct;
        continue;
      }
      for (auto t : s) {
        if (t == vocab.category_token(truth.hierarchical_label) || t == truth.name_tokens[0] ||
            t == truth.name_tokens[1]) {
          ++n_hint;
          break;
        }
      }
    }
    if (n_correct >= 3) return jk::Level::kStronglyKnown;
    if (n_correct >= 1) return jk::Level::kKnown;
    if (n_hint >= 1) return jk::Level::kWeaklyUnknown;
    return jk::Level::kUnknown;
  };

  nk::Rng rng(88);
  auto random_response = [&]() -> sl::TokenSeq {
    switch (rng.below(4)) {
      case 0: return correct;
      case 1: return hint;
      case 2: return unrelated;
      default: {
        sl::TokenSeq s(rng.below(5));
        for (auto& t : s) t = static_cast<sl::TokenId>(rng.below(vocab.size()));
        return s;
      }
    }
  };
  std::size_t upgrades = 0;
  for (int m = 0; m < 10000; ++m) {
    std::vector<sl::TokenSeq> rs(5);
    for (auto& s : rs) s = random_response();
    const auto before = jk::judge_rule_based(rs, truth, vocab);
    c.expect(before == oracle(rs), "level disagrees with the rules at mutation " + std::to_string(m));
    const std::size_t i = rng.below(5);
    const bool was_correct = jk::classify_response(rs[i], truth, vocab).correct;
    rs[i] = rng.below(2) ? correct : random_response();
    const auto after = jk::judge_rule_based(rs, truth, vocab);
    if (!was_correct && jk::classify_response(rs[i], truth, vocab).correct) {
      ++upgrades;
      c.expect(!jk::better(before, after), "correcting a response lowered the level at mutation " + std::to_string(m));
    }
  }
  return c.outcome("4 fixtures, 10000 mutations (" + std::to_string(upgrades) + " corrections)");
}

// --- 9: best-image sampler ------------------------------------------------------------

Outcome criterion9() {
  nk::Rng rng(9);
  const std::size_t dim = 8;
  std::vector<double> name(dim);
  for (double& x : name) x = rng.normal();
  std::vector<vk::Candidate> cands;
  for (std::size_t i = 0; i < 6; ++i) {
    std::vector<double> v(3 * dim);
    for (std::size_t j = 0; j < v.size(); ++j) v[j] = 0.6 * name[j % dim] + rng.normal();
    cands.push_back({"img_" + std::to_string(i), Tensor({3, dim}, v)});
  }
  const auto weights = vk::best_image_weights(cands, name);
  double total = 0;
  for (const auto& [id, w] : weights) total += w;
  std::map<std::string, std::size_t> hits;
  const std::size_t draws = 100000;
  for (std::size_t s = 0; s < draws; ++s) ++hits[vk::best_image_select(cands, name, s)];
  Checker c;
  std::ostringstream d;
  d << std::fixed << std::setprecision(4);
  for (const auto& [id, w] : weights) {
    const double want = w / total;
    const double got = static_cast<double>(hits[id]) / draws;
    d << id << " " << got << " vs " << want << "; ";
    c.expect(std::abs(got - want) <= 0.01, id + " frequency off");
  }
  c.expect(hits.size() <= 3, "a candidate outside the top three was drawn");
  return c.outcome(d.str() + std::to_string(draws) + " draws");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"acceptance checks"};
  int only = 0;
  app.add_option("--criterion", only, "run a single criterion (1-9)")->check(CLI::Range(1, 9));
  CLI11_PARSE(app, argc, argv);

  const std::vector<std::function<Outcome()>> criteria = {criterion1, criterion2, criterion3,
                                                          criterion4, criterion5, criterion6,
                                                          criterion7, criterion8, criterion9};
  bool all_pass = true;
  for (int i = 1; i <= 9; ++i) {
    if (only != 0 && i != only) continue;
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i - 1]();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::cout << "criterion " << i << ": " << (o.pass ? "PASS" : "FAIL") << " (" << std::fixed
              << std::setprecision(1) << secs << "s) " << o.detail << std::endl;
    all_pass &= o.pass;
  }
  return all_pass ? 0 : 1;
}
