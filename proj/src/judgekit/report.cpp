#include <cmath>
#include <cstdio>

#include "json.hpp"
#include "veal/errors.hpp"
#include "veal/judgekit/judgekit.hpp"

namespace veal::judgekit {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

// 100 * part / whole in hundredths of a percent, rounded half up, exactly.
long long hundredths(std::size_t part, std::size_t whole) {
  const auto p = static_cast<unsigned long long>(part);
  const auto w = static_cast<unsigned long long>(whole);
  return static_cast<long long>((20000ULL * p + w) / (2ULL * w));
}

long long to_hundredths(double v) { return std::llround(v * 100.0); }

const char* kColumnKeys[4] = {"strongly_known", "known", "weakly_unknown", "unknown"};

}  // namespace

EvalReport report_from_counts(const std::array<std::size_t, 4>& counts, std::size_t errored) {
  EvalReport r;
  r.counts = counts;
  for (auto c : counts) r.total += c;
  r.errored = errored;
  if (r.total == 0) throw EmptyInputError("no judged items to aggregate");
  for (std::size_t k = 0; k < 4; ++k) {
    r.proportions[k] = static_cast<double>(hundredths(counts[k], r.total)) / 100.0;
  }
  r.accuracy = static_cast<double>(hundredths(counts[0] + counts[1], r.total)) / 100.0;
  return r;
}

EvalReport aggregate(std::span<const Level> levels, std::size_t errored) {
  if (levels.empty()) throw EmptyInputError("aggregate: empty level list");
  std::array<std::size_t, 4> counts{};
  for (Level l : levels) ++counts[static_cast<std::size_t>(l)];
  return report_from_counts(counts, errored);
}

ReportDelta compare(const EvalReport& report, const EvalReport& baseline) {
  ReportDelta d;
  for (std::size_t k = 0; k < 4; ++k) {
    d.proportions[k] = static_cast<double>(to_hundredths(report.proportions[k]) -
                                           to_hundredths(baseline.proportions[k])) / 100.0;
  }
  d.accuracy =
      static_cast<double>(to_hundredths(report.accuracy) - to_hundredths(baseline.accuracy)) / 100.0;
  return d;
}

std::string format_delta(double delta) {
  const long long h = to_hundredths(delta);
  char buf[32];
  if (h == 0) return "0.00";
  std::snprintf(buf, sizeof buf, "%+.2f", static_cast<double>(h) / 100.0);
  return buf;
}

std::string format_percent(double value) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", static_cast<double>(to_hundredths(value)) / 100.0);
  return buf;
}

void attach_deltas(std::vector<ReportRow>& rows, const std::string& baseline, bool incremental) {
  for (auto& r : rows) r.delta.reset();
  if (rows.size() <= 1) return;
  if (incremental) {
    for (std::size_t i = 1; i < rows.size(); ++i) {
      rows[i].delta = compare(rows[i].report, rows[i - 1].report);
    }
    return;
  }
  if (baseline.empty()) throw UsageError("a multi-row report needs --baseline <name>");
  const ReportRow* base = nullptr;
  for (const auto& r : rows) {
    if (r.name == baseline) base = &r;
  }
  if (!base) throw UsageError("baseline '" + baseline + "' is not one of the report rows");
  const EvalReport base_report = base->report;
  for (auto& r : rows) {
    if (r.name != baseline) r.delta = compare(r.report, base_report);
  }
}

std::string report_json(const std::vector<ReportRow>& rows) {
  ordered_json out = ordered_json::array();
  for (const auto& row : rows) {
    ordered_json j;
    j["name"] = row.name;
    j["n"] = row.report.total;
    j["errored"] = row.report.errored;
    ordered_json counts, props;
    for (std::size_t k = 0; k < 4; ++k) {
      counts[kColumnKeys[k]] = row.report.counts[k];
      props[kColumnKeys[k]] = row.report.proportions[k];
    }
    j["counts"] = counts;
    j["proportions"] = props;
    j["accuracy"] = row.report.accuracy;
    if (row.delta) {
      ordered_json d;
      for (std::size_t k = 0; k < 4; ++k) d[kColumnKeys[k]] = row.delta->proportions[k];
      d["accuracy"] = row.delta->accuracy;
      j["delta"] = d;
    }
    out.push_back(j);
  }
  return ordered_json{{"rows", out}}.dump(2) + "\n";
}

std::vector<ReportRow> parse_report_json(const std::string& text) {
  std::vector<ReportRow> rows;
  try {
    const json doc = json::parse(text);
    for (const auto& j : doc.at("rows")) {
      std::array<std::size_t, 4> counts{};
      for (std::size_t k = 0; k < 4; ++k) counts[k] = j.at("counts").at(kColumnKeys[k]);
      ReportRow row;
      row.name = j.at("name");
      row.report = report_from_counts(counts, j.value("errored", std::size_t{0}));
      if (j.contains("delta")) {
        ReportDelta d;
        for (std::size_t k = 0; k < 4; ++k) d.proportions[k] = j["delta"].at(kColumnKeys[k]);
        d.accuracy = j["delta"].at("accuracy");
        row.delta = d;
      }
      rows.push_back(row);
    }
  } catch (const json::exception& e) {
    throw FormatError(std::string("malformed report json: ") + e.what());
  }
  return rows;
}

std::string report_csv(const std::vector<ReportRow>& rows) {
  bool any_delta = false;
  for (const auto& r : rows) any_delta = any_delta || r.delta.has_value();
  std::string out =
      "config,n,errored,strongly_known,known,weakly_unknown,unknown,accuracy";
  if (any_delta) out += ",delta_strongly_known,delta_known,delta_accuracy";
  out += "\n";
  for (const auto& r : rows) {
    out += r.name + "," + std::to_string(r.report.total) + "," + std::to_string(r.report.errored);
    for (double p : r.report.proportions) out += "," + format_percent(p);
    out += "," + format_percent(r.report.accuracy);
    if (any_delta) {
      if (r.delta) {
        out += "," + format_delta(r.delta->proportions[0]) + "," +
               format_delta(r.delta->proportions[1]) + "," + format_delta(r.delta->accuracy);
      } else {
        out += ",,,";
      }
    }
    out += "\n";
  }
  return out;
}

}  // namespace veal::judgekit
