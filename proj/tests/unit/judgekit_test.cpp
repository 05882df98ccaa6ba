#include <gtest/gtest.h>

#include <atomic>
#include <chrono>
#include <thread>

#include "httplib.h"
#include "json.hpp"
#include "veal/errors.hpp"
#include "veal/judgekit/judgekit.hpp"
#include "veal/numkit/random.hpp"
#include "veal/synthland/types.hpp"
#include "veal/trainkit/trainkit.hpp"

namespace jk = veal::judgekit;
namespace sl = veal::synthland;
using jk::Level;

namespace {

struct Truth {
  sl::Vocab vocab{4, 10};
  sl::LandmarkRecord rec;
  Truth() {
    rec.landmark_id = 3;
    rec.hierarchical_label = 2;
    rec.name_tokens = {vocab.word_token(3, 0), vocab.word_token(3, 1)};
  }
  sl::TokenSeq correct() const { return rec.name_tokens; }
  sl::TokenSeq unrelated() const { return {vocab.word_token(7, 0), vocab.word_token(7, 1)}; }
  sl::TokenSeq category_hint() const {
    return {vocab.word_token(7, 0), vocab.category_token(rec.hierarchical_label)};
  }
};

}  // namespace

TEST(Levels, NamesAndOrder) {
  EXPECT_STREQ(jk::level_name(Level::kWeaklyUnknown), "Weakly Unknown");
  for (Level l : jk::kLevels) EXPECT_EQ(jk::parse_level(jk::level_name(l)), l);
  EXPECT_THROW(jk::parse_level("Partially Known"), veal::ProtocolError);
  EXPECT_TRUE(jk::better(Level::kStronglyKnown, Level::kKnown));
  EXPECT_FALSE(jk::better(Level::kUnknown, Level::kWeaklyUnknown));
}

TEST(RuleJudge, Fixtures) {
  Truth t;
  std::vector<sl::TokenSeq> r(5, t.correct());
  EXPECT_EQ(jk::judge_rule_based(r, t.rec, t.vocab), Level::kStronglyKnown);
  r.assign(5, t.unrelated());
  r[2] = t.correct();
  EXPECT_EQ(jk::judge_rule_based(r, t.rec, t.vocab), Level::kKnown);
  r.assign(5, t.unrelated());
  r[0] = r[3] = t.category_hint();
  EXPECT_EQ(jk::judge_rule_based(r, t.rec, t.vocab), Level::kWeaklyUnknown);
  r.assign(5, t.unrelated());
  EXPECT_EQ(jk::judge_rule_based(r, t.rec, t.vocab), Level::kUnknown);
}

TEST(RuleJudge, CorrectnessIgnoresNonWordsButNotOrder) {
  Truth t;
  auto with_extras = t.correct();
  with_extras.push_back(t.vocab.category_token(0));
  with_extras.push_back(sl::kEos);
  EXPECT_TRUE(jk::classify_response(with_extras, t.rec, t.vocab).correct);
  sl::TokenSeq swapped{t.rec.name_tokens[1], t.rec.name_tokens[0]};
  const auto v = jk::classify_response(swapped, t.rec, t.vocab);
  EXPECT_FALSE(v.correct);
  EXPECT_TRUE(v.hint);
  sl::TokenSeq partial{t.rec.name_tokens[0]};
  EXPECT_TRUE(jk::classify_response(partial, t.rec, t.vocab).hint);
  EXPECT_FALSE(jk::classify_response({}, t.rec, t.vocab).hint);
}

TEST(RuleJudge, KStrongAndCount) {
  Truth t;
  std::vector<sl::TokenSeq> r(5, t.unrelated());
  r[0] = r[1] = t.correct();
  EXPECT_EQ(jk::judge_rule_based(r, t.rec, t.vocab), Level::kKnown);
  EXPECT_EQ(jk::judge_rule_based(r, t.rec, t.vocab, {5, 2}), Level::kStronglyKnown);
  r.pop_back();
  EXPECT_THROW(jk::judge_rule_based(r, t.rec, t.vocab), veal::ProtocolError);
}

TEST(RuleJudge, MonotoneUnderCorrections) {
  Truth t;
  veal::numkit::Rng rng(11);
  auto random_response = [&] {
    sl::TokenSeq s(1 + rng.below(3));
    for (auto& x : s) x = static_cast<sl::TokenId>(rng.below(t.vocab.size()));
    return s;
  };
  for (int trial = 0; trial < 2000; ++trial) {
    std::vector<sl::TokenSeq> r(5);
    for (auto& s : r) s = rng.uniform() < 0.2 ? t.correct() : random_response();
    const Level before = jk::judge_rule_based(r, t.rec, t.vocab);
    const std::size_t i = rng.below(5);
    if (jk::classify_response(r[i], t.rec, t.vocab).correct) continue;
    r[i] = t.correct();
    EXPECT_FALSE(jk::better(before, jk::judge_rule_based(r, t.rec, t.vocab)));
  }
}

TEST(Report, AppendixCounts) {
  const auto base = jk::report_from_counts({103, 114, 145, 2138});
  EXPECT_EQ(base.total, 2500u);
  EXPECT_EQ(base.proportions, (std::array<double, 4>{4.12, 4.56, 5.80, 85.52}));
  EXPECT_EQ(base.accuracy, 8.68);
  const auto lh = jk::report_from_counts({213, 175, 159, 1953});
  EXPECT_EQ(lh.accuracy, 15.52);
  EXPECT_EQ(lh.proportions[0], 8.52);
  EXPECT_EQ(lh.proportions[1], 7.00);
  EXPECT_EQ(jk::report_from_counts({0, 0, 0, 7}).accuracy, 0.0);
  EXPECT_THROW(jk::report_from_counts({0, 0, 0, 0}), veal::EmptyInputError);
}

TEST(Report, AccuracyFromRawCounts) {
  // 1/3 + 1/3: rounded proportions sum to 66.66, raw accuracy is 66.67.
  const auto r = jk::report_from_counts({1, 1, 1, 0});
  EXPECT_EQ(r.proportions[0] + r.proportions[1], 33.33 + 33.33);
  EXPECT_EQ(r.accuracy, 66.67);
  veal::numkit::Rng rng(3);
  for (int i = 0; i < 500; ++i) {
    std::array<std::size_t, 4> c{};
    for (auto& x : c) x = rng.below(3000);
    if (c[0] + c[1] + c[2] + c[3] == 0) continue;
    const auto rep = jk::report_from_counts(c);
    double s = 0;
    for (double p : rep.proportions) s += p;
    EXPECT_NEAR(s, 100.0, 0.04 + 1e-9);
  }
}

TEST(Report, AggregateAndErrored) {
  std::vector<Level> levels{Level::kKnown, Level::kUnknown, Level::kKnown, Level::kStronglyKnown};
  const auto r = jk::aggregate(levels, 2);
  EXPECT_EQ(r.counts, (std::array<std::size_t, 4>{1, 2, 0, 1}));
  EXPECT_EQ(r.total, 4u);
  EXPECT_EQ(r.errored, 2u);
  EXPECT_EQ(r.accuracy, 75.0);
  EXPECT_THROW(jk::aggregate({}), veal::EmptyInputError);
}

TEST(Report, DeltasAndFormatting) {
  const auto base = jk::report_from_counts({103, 114, 145, 2138});
  const auto hss = jk::report_from_counts({187, 161, 145, 2007});
  const auto d = jk::compare(hss, base);
  EXPECT_EQ(jk::format_delta(d.accuracy), "+5.24");
  EXPECT_EQ(jk::format_delta(d.proportions[0]), "+3.36");
  EXPECT_EQ(jk::compare(base, base), jk::ReportDelta{});
  EXPECT_EQ(jk::format_delta(0.0), "0.00");
  EXPECT_EQ(jk::format_delta(-0.04), "-0.04");
  const auto hds = jk::report_from_counts({233, 127, 175, 1965});
  EXPECT_EQ(jk::format_delta(jk::compare(hds, base).accuracy), "+5.72");
  EXPECT_EQ(jk::format_percent(8.5), "8.50");
}

TEST(Report, BaselineAndIncrementalDeltas) {
  std::vector<jk::ReportRow> rows{{"base", jk::report_from_counts({1, 1, 0, 2}), {}},
                                  {"a", jk::report_from_counts({2, 1, 0, 1}), {}},
                                  {"b", jk::report_from_counts({3, 1, 0, 0}), {}}};
  auto by_base = rows;
  jk::attach_deltas(by_base, "base", false);
  EXPECT_FALSE(by_base[0].delta.has_value());
  EXPECT_EQ(by_base[2].delta->accuracy, 50.0);
  auto inc = rows;
  jk::attach_deltas(inc, "", true);
  EXPECT_EQ(inc[2].delta->accuracy, 25.0);
  auto bad = rows;
  EXPECT_THROW(jk::attach_deltas(bad, "missing", false), veal::UsageError);
  std::vector<jk::ReportRow> one{rows[0]};
  jk::attach_deltas(one, "", false);
  EXPECT_FALSE(one[0].delta.has_value());
}

TEST(Report, JsonRoundTripAndCsv) {
  std::vector<jk::ReportRow> rows{{"baseline", jk::report_from_counts({103, 114, 145, 2138}), {}},
                                  {"full", jk::report_from_counts({213, 175, 159, 1953}, 3), {}}};
  jk::attach_deltas(rows, "baseline", false);
  const auto text = jk::report_json(rows);
  const auto back = jk::parse_report_json(text);
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back[1].name, "full");
  EXPECT_EQ(back[1].report, rows[1].report);
  EXPECT_EQ(jk::report_json(back), text);
  EXPECT_THROW(jk::parse_report_json("{\"rows\": 3"), veal::FormatError);
  const auto csv = jk::report_csv(rows);
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 3);
  EXPECT_NE(csv.find("15.52"), std::string::npos);
  EXPECT_NE(csv.find("+6.84"), std::string::npos);
}

class MockJudge : public ::testing::Test {
 protected:
  httplib::Server server;
  std::thread thread;
  std::atomic<int> hits{0};
  int port = 0;

  void SetUp() override {
    server.Post("/judge", [this](const httplib::Request& req, httplib::Response& res) {
      ++hits;
      const auto body = nlohmann::json::parse(req.body);
      const auto truth = body["ground_truth"].get<std::string>();
      if (truth == "slow") std::this_thread::sleep_for(std::chrono::milliseconds(600));
      if (truth == "malformed") {
        res.set_content(R"({"lvl": "Known"})", "application/json");
      } else if (truth == "teapot") {
        res.status = 418;
      } else {
        ASSERT_EQ(body["responses"].size(), 5u);
        ASSERT_EQ(body["levels"].size(), 4u);
        res.set_content(nlohmann::json{{"level", truth}}.dump(), "application/json");
      }
    });
    port = server.bind_to_any_port("127.0.0.1");
    thread = std::thread([this] { server.listen_after_bind(); });
    server.wait_until_ready();
  }
  void TearDown() override {
    server.stop();
    thread.join();
  }
  jk::ExternalJudgeOptions options(double timeout = 5.0) const {
    jk::ExternalJudgeOptions o;
    o.endpoint = "http://127.0.0.1:" + std::to_string(port) + "/judge";
    o.timeout_seconds = timeout;
    return o;
  }
  static jk::ExternalRequest request(const std::string& truth) {
    return {std::vector<std::string>(5, "some answer"), truth};
  }
};

TEST_F(MockJudge, EchoedLevel) {
  EXPECT_EQ(jk::judge_external(request("Known"), options()), Level::kKnown);
  EXPECT_EQ(jk::judge_external(request("Weakly Unknown"), options()), Level::kWeaklyUnknown);
}

TEST_F(MockJudge, MalformedReplyIsProtocolError) {
  EXPECT_THROW(jk::judge_external(request("malformed"), options()), veal::ProtocolError);
  EXPECT_THROW(jk::judge_external(request("Sort Of Known"), options()), veal::ProtocolError);
  EXPECT_THROW(jk::judge_external(request("teapot"), options()), veal::ProtocolError);
}

TEST_F(MockJudge, TimeoutsRetriedThenErrored) {
  std::vector<jk::ExternalRequest> reqs{request("Known"), request("slow"), request("Unknown"),
                                        request("Strongly Known")};
  const auto out = jk::judge_external_batch(reqs, options(0.2));
  EXPECT_EQ(hits.load(), 3 + 3);
  ASSERT_EQ(out.size(), 4u);
  EXPECT_EQ(out[0].level, Level::kKnown);
  EXPECT_FALSE(out[1].level.has_value());
  EXPECT_NE(out[1].error.find("3 attempts"), std::string::npos);
  EXPECT_EQ(out[3].level, Level::kStronglyKnown);
  std::vector<Level> ok;
  for (const auto& o : out)
    if (o.level) ok.push_back(*o.level);
  const auto rep = jk::aggregate(ok, 1);
  EXPECT_EQ(rep.total + rep.errored, reqs.size());
}

TEST(ExternalJudge, UnreachableAndBadEndpoint) {
  jk::ExternalJudgeOptions o;
  o.endpoint = "https://example.invalid/judge";
  EXPECT_ANY_THROW(jk::judge_external({}, o));
  o.endpoint = "http://127.0.0.1:1/judge";
  o.timeout_seconds = 0.2;
  EXPECT_THROW(jk::judge_external({std::vector<std::string>(5), "x"}, o), veal::Error);
}

namespace {

struct SmallRun {
  sl::Dataset ds;
  veal::dualbranch::DualBranchConfig model;
  SmallRun(std::size_t landmarks, std::size_t categories) {
    sl::SynthConfig sc;
    sc.num_landmarks = landmarks;
    sc.num_categories = categories;
    ds = sl::generate(sc);
    model.fit_to(ds);
  }
  std::vector<std::size_t> all() const {
    std::vector<std::size_t> v(ds.records.size());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = i;
    return v;
  }
};

}  // namespace

TEST(Evaluate, MemorizedLandmarkIsStronglyKnown) {
  SmallRun run(2, 1);
  auto idx = run.all();
  veal::trainkit::TrainConfig tc;
  tc.epochs = 150;
  tc.batch_size = 2;
  tc.peak_lr = 1e-2;
  auto trained = veal::trainkit::train(veal::trainkit::initial_params(run.model, run.ds), run.model,
                                       run.ds, idx, tc, {});
  const auto res = jk::evaluate_model(trained.params, run.model, idx, run.ds, {}, 1, {5, 0.0, 1});
  EXPECT_EQ(res.report.counts[0], 2u);
}

TEST(Evaluate, UntrainedIsNearChanceAndDeterministic) {
  SmallRun run(40, 4);
  auto idx = run.all();
  const auto params = veal::dualbranch::init_params(run.model);
  const auto a = jk::evaluate_model(params, run.model, idx, run.ds, {}, 7);
  EXPECT_LE(a.report.accuracy, 10.0);
  EXPECT_EQ(a.items.size(), 40u);
  EXPECT_EQ(a.report, jk::evaluate_model(params, run.model, idx, run.ds, {}, 7).report);
  // Per-record seeding: a subset sees the same responses as the full run.
  std::vector<std::size_t> tail(idx.begin() + 30, idx.end());
  const auto b = jk::evaluate_model(params, run.model, tail, run.ds, {}, 7);
  EXPECT_EQ(b.items[0].responses, a.items[30].responses);
}
